//! Reading and writing triples in the line-based N-Triples format.
//!
//! The parser covers the common subset: IRIs in angle brackets, blank
//! nodes, and literals with optional language tag or datatype, with
//! `\uXXXX`/`\UXXXXXXXX` and the single-character escapes. Lines are
//! independent, so input can be processed in one streaming pass; gzip
//! input is detected by its two magic bytes.
//!
//! Terms are held unescaped (an IRI written `\u0041` and one written `A`
//! are the same term) and re-escaped deterministically on output. The
//! *canonical* string of a term — what the dictionary stores and sorts —
//! is its N-Triples form except that IRIs drop the angle brackets:
//!
//! * IRI `<http://a/b>` → `http://a/b`
//! * blank `_:x` → `_:x`
//! * literal → quoted escaped value plus any `@lang` / `^^<datatype>`
//!
//! The first byte therefore tells the kinds apart: `"` literal, `_`
//! blank, anything else IRI.
//!
//! Parsing runs strict (first malformed line fails with its line number)
//! or lenient (malformed lines are skipped and reported).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::k2tree::K2Config;
use crate::store::TripleStore;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RdfTerm {
    /// Unescaped IRI text, without angle brackets.
    Iri(String),
    /// Blank node label, without the `_:` prefix.
    Blank(String),
    Literal {
        /// Unescaped value.
        value: String,
        lang: Option<String>,
        /// Datatype IRI, unescaped, without brackets.
        datatype: Option<String>,
    },
}

impl RdfTerm {
    /// Dictionary string form; injective across distinct terms.
    pub fn canonical(&self) -> String {
        match self {
            RdfTerm::Iri(v) => v.clone(),
            RdfTerm::Blank(l) => format!("_:{l}"),
            RdfTerm::Literal {
                value,
                lang,
                datatype,
            } => {
                let mut out = format!("\"{}\"", escape_literal(value));
                if let Some(lang) = lang {
                    out.push('@');
                    out.push_str(lang);
                } else if let Some(dt) = datatype {
                    out.push_str("^^<");
                    out.push_str(dt);
                    out.push('>');
                }
                out
            }
        }
    }

    /// Full N-Triples form.
    pub fn to_ntriples(&self) -> String {
        match self {
            RdfTerm::Iri(v) => format!("<{v}>"),
            _ => self.canonical(),
        }
    }
}

/// Renders a canonical term string back in N-Triples form.
pub fn format_term(canonical: &str) -> String {
    match canonical.as_bytes().first() {
        Some(b'"') | Some(b'_') => canonical.to_string(),
        _ => format!("<{canonical}>"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTriple {
    pub subject: RdfTerm,
    pub predicate: RdfTerm,
    pub object: RdfTerm,
}

impl RawTriple {
    pub fn canonical(&self) -> (String, String, String) {
        (
            self.subject.canonical(),
            self.predicate.canonical(),
            self.object.canonical(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

/// What one parse pass saw. `parsed` counts accepted triples before any
/// deduplication; `skipped` counts malformed lines in lenient mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub parsed: usize,
    pub skipped: usize,
    /// First few problems, with 1-based line numbers.
    pub diagnostics: Vec<Diagnostic>,
}

const MAX_DIAGNOSTICS: usize = 20;

/// Parses N-Triples from a reader. In strict mode the first malformed
/// line aborts with a parse error carrying its line number.
pub fn parse_ntriples(input: impl Read, strict: bool) -> Result<(Vec<RawTriple>, IngestReport)> {
    let mut reader = BufReader::new(input);
    let mut triples = Vec::new();
    let mut report = IngestReport::default();
    let mut raw = Vec::new();
    let mut line_no = 0u64;
    loop {
        raw.clear();
        let n = reader.read_until(b'\n', &mut raw)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let fail = |message: String, report: &mut IngestReport| -> Result<()> {
            if strict {
                return Err(Error::Parse {
                    line: line_no,
                    message,
                });
            }
            report.skipped += 1;
            if report.diagnostics.len() < MAX_DIAGNOSTICS {
                report.diagnostics.push(Diagnostic {
                    line: line_no,
                    message,
                });
            }
            Ok(())
        };
        let Ok(line) = std::str::from_utf8(&raw) else {
            fail("line is not valid UTF-8".into(), &mut report)?;
            continue;
        };
        let line = line.trim_end_matches(['\n', '\r']);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Ok(t) => {
                triples.push(t);
                report.parsed += 1;
            }
            Err(message) => fail(message, &mut report)?,
        }
    }
    Ok((triples, report))
}

/// Opens a file for reading, transparently decompressing gzip (detected
/// by the `1f 8b` magic bytes).
pub fn open_input(path: impl AsRef<Path>) -> Result<Box<dyn Read>> {
    let mut reader = BufReader::new(File::open(path)?);
    let head = reader.fill_buf()?;
    if head.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

/// Parses a file (plain or gzip) and builds a store from it.
pub fn load_store(
    path: impl AsRef<Path>,
    strict: bool,
    config: K2Config,
) -> Result<(TripleStore, IngestReport)> {
    let (triples, report) = parse_ntriples(open_input(path)?, strict)?;
    let canonical: Vec<(String, String, String)> =
        triples.iter().map(RawTriple::canonical).collect();
    Ok((TripleStore::from_str_triples(&canonical, config)?, report))
}

/// Writes triples in N-Triples form, one per line.
pub fn write_ntriples(mut w: impl Write, triples: &[RawTriple]) -> Result<()> {
    for t in triples {
        writeln!(
            w,
            "{} {} {} .",
            t.subject.to_ntriples(),
            t.predicate.to_ntriples(),
            t.object.to_ntriples()
        )?;
    }
    Ok(())
}

/// Parses exactly one term — IRI, blank node, or literal — from text in
/// the same syntax triples use. Surrounding whitespace is allowed;
/// anything else after the term is an error.
pub fn parse_term(text: &str) -> Result<RdfTerm> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    let term = term_from(&mut cur, "term").map_err(Error::InvalidInput)?;
    cur.skip_ws();
    match cur.peek() {
        None => Ok(term),
        Some(b) => Err(Error::InvalidInput(format!(
            "unexpected '{}' after term",
            b as char
        ))),
    }
}

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str) -> Self {
        Cursor {
            bytes: line.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> std::result::Result<(), String> {
        match self.bump() {
            Some(got) if got == b => Ok(()),
            Some(got) => Err(format!(
                "expected '{}' at column {}, found '{}'",
                b as char, self.pos, got as char
            )),
            None => Err(format!("expected '{}', found end of line", b as char)),
        }
    }

    /// Text between the current position and the next occurrence of `end`
    /// at top level (backslash escapes are decoded, so an escaped `end`
    /// does not terminate).
    fn take_until(&mut self, end: u8, what: &str) -> std::result::Result<String, String> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(format!("unterminated {what}")),
                Some(b) if b == end => return Ok(out),
                Some(b'\\') => out.push(self.unescape()?),
                Some(b) if b < 0x80 => out.push(b as char),
                Some(_) => {
                    // Re-read the full UTF-8 sequence.
                    let start = self.pos - 1;
                    let s = std::str::from_utf8(&self.bytes[start..])
                        .map_err(|_| "invalid UTF-8 inside term".to_string())?;
                    let c = s.chars().next().unwrap();
                    self.pos = start + c.len_utf8();
                    out.push(c);
                }
            }
        }
    }

    fn unescape(&mut self) -> std::result::Result<char, String> {
        match self.bump() {
            None => Err("dangling backslash".into()),
            Some(b't') => Ok('\t'),
            Some(b'b') => Ok('\u{8}'),
            Some(b'n') => Ok('\n'),
            Some(b'r') => Ok('\r'),
            Some(b'f') => Ok('\u{c}'),
            Some(b'"') => Ok('"'),
            Some(b'\'') => Ok('\''),
            Some(b'\\') => Ok('\\'),
            Some(b'u') => self.hex_escape(4),
            Some(b'U') => self.hex_escape(8),
            Some(b) => Err(format!("unknown escape '\\{}'", b as char)),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> std::result::Result<char, String> {
        let mut v: u32 = 0;
        for _ in 0..digits {
            let b = self.bump().ok_or("truncated unicode escape")?;
            let d = (b as char)
                .to_digit(16)
                .ok_or_else(|| format!("bad hex digit '{}' in unicode escape", b as char))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| format!("U+{v:04X} is not a character"))
    }
}

fn validate_iri(iri: &str, what: &str) -> std::result::Result<(), String> {
    for c in iri.chars() {
        if c <= ' ' || matches!(c, '<' | '>' | '"') {
            return Err(format!("{what} contains forbidden character {c:?}"));
        }
    }
    Ok(())
}

fn term_from(cur: &mut Cursor, position: &str) -> std::result::Result<RdfTerm, String> {
    match cur.peek() {
        Some(b'<') => {
            cur.bump();
            let iri = cur.take_until(b'>', "IRI")?;
            validate_iri(&iri, position)?;
            Ok(RdfTerm::Iri(iri))
        }
        Some(b'_') => {
            cur.bump();
            cur.expect(b':')?;
            let mut label = String::new();
            while let Some(b) = cur.peek() {
                if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.') {
                    label.push(b as char);
                    cur.pos += 1;
                } else {
                    break;
                }
            }
            if label.is_empty() || label.ends_with('.') {
                return Err("malformed blank node label".into());
            }
            Ok(RdfTerm::Blank(label))
        }
        Some(b'"') => {
            cur.bump();
            let value = cur.take_until(b'"', "literal")?;
            match cur.peek() {
                Some(b'@') => {
                    cur.bump();
                    let mut lang = String::new();
                    while let Some(b) = cur.peek() {
                        if b.is_ascii_alphanumeric() || b == b'-' {
                            lang.push(b as char);
                            cur.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let well_formed = !lang.is_empty()
                        && !lang.starts_with('-')
                        && !lang.ends_with('-')
                        && lang
                            .split('-')
                            .next()
                            .unwrap()
                            .bytes()
                            .all(|b| b.is_ascii_alphabetic())
                        && !lang.contains("--");
                    if !well_formed {
                        return Err(format!("malformed language tag '@{lang}'"));
                    }
                    Ok(RdfTerm::Literal {
                        value,
                        lang: Some(lang),
                        datatype: None,
                    })
                }
                Some(b'^') => {
                    cur.bump();
                    cur.expect(b'^')?;
                    cur.expect(b'<')?;
                    let dt = cur.take_until(b'>', "datatype IRI")?;
                    validate_iri(&dt, "datatype")?;
                    Ok(RdfTerm::Literal {
                        value,
                        lang: None,
                        datatype: Some(dt),
                    })
                }
                _ => Ok(RdfTerm::Literal {
                    value,
                    lang: None,
                    datatype: None,
                }),
            }
        }
        Some(b) => Err(format!("{position} cannot start with '{}'", b as char)),
        None => Err(format!("missing {position}")),
    }
}

fn parse_line(line: &str) -> std::result::Result<RawTriple, String> {
    let mut cur = Cursor::new(line);
    cur.skip_ws();
    let subject = term_from(&mut cur, "subject")?;
    if matches!(subject, RdfTerm::Literal { .. }) {
        return Err("subject cannot be a literal".into());
    }
    cur.skip_ws();
    let predicate = term_from(&mut cur, "predicate")?;
    if !matches!(predicate, RdfTerm::Iri(_)) {
        return Err("predicate must be an IRI".into());
    }
    cur.skip_ws();
    let object = term_from(&mut cur, "object")?;
    cur.skip_ws();
    cur.expect(b'.')
        .map_err(|_| "missing terminating '.'".to_string())?;
    cur.skip_ws();
    match cur.peek() {
        None | Some(b'#') => Ok(RawTriple {
            subject,
            predicate,
            object,
        }),
        Some(b) => Err(format!("unexpected '{}' after terminating '.'", b as char)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;

    const FOOTBALL_NT: &str = r#"
# ten facts about a football team
<http://example.org/Spanish_Team> <http://example.org/represent> <http://example.org/Spain> .
<http://example.org/Madrid> <http://example.org/capital> <http://example.org/Spain> .
<http://example.org/Casillas> <http://example.org/born> <http://example.org/Madrid> .
<http://example.org/Casillas> <http://example.org/playFor> <http://example.org/Spanish_Team> .
<http://example.org/Casillas> <http://example.org/position> "goalkeeper" .
<http://example.org/Casillas> <http://example.org/captain> <http://example.org/Spanish_Team> .
<http://example.org/Iniesta> <http://example.org/playFor> <http://example.org/Spanish_Team> .
<http://example.org/Iniesta> <http://example.org/position> "midfielder" .
<http://example.org/Xavi> <http://example.org/playFor> <http://example.org/Spanish_Team> .
<http://example.org/Xavi> <http://example.org/position> "midfielder" .
"#;

    #[test]
    fn parses_the_football_file() {
        let (triples, report) = parse_ntriples(FOOTBALL_NT.as_bytes(), true).unwrap();
        assert_eq!(triples.len(), 10);
        assert_eq!(report.parsed, 10);
        assert_eq!(report.skipped, 0);
        assert_eq!(
            triples[0].subject,
            RdfTerm::Iri("http://example.org/Spanish_Team".into())
        );
        assert_eq!(
            triples[4].object,
            RdfTerm::Literal {
                value: "goalkeeper".into(),
                lang: None,
                datatype: None
            }
        );
        assert_eq!(
            triples[4].object.canonical(),
            "\"goalkeeper\"",
            "literal canonical form keeps the quotes"
        );
    }

    #[test]
    fn builds_a_store_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("football.nt");
        std::fs::write(&path, FOOTBALL_NT).unwrap();
        let (store, report) = load_store(&path, true, K2Config::default()).unwrap();
        assert_eq!(report.parsed, 10);
        assert_eq!(store.triple_count(), 10);
        assert_eq!(
            store.dict().subject_id("http://example.org/Madrid"),
            Some(0)
        );
    }

    #[test]
    fn term_forms_cover_the_grammar() {
        let line = concat!(
            "_:alice <http://a/knows> ",
            "\"caf\\u00e9 \\\"quote\\\" tab\\t\"@en-GB .  # trailing comment"
        );
        let t = parse_line(line).unwrap();
        assert_eq!(t.subject, RdfTerm::Blank("alice".into()));
        assert_eq!(
            t.object,
            RdfTerm::Literal {
                value: "café \"quote\" tab\t".into(),
                lang: Some("en-GB".into()),
                datatype: None
            }
        );

        let typed = parse_line(
            "<http://a/s> <http://a/p> \"42\"^^<http://www.w3.org/2001/XMLSchema#integer> .",
        )
        .unwrap();
        assert_eq!(
            typed.object,
            RdfTerm::Literal {
                value: "42".into(),
                lang: None,
                datatype: Some("http://www.w3.org/2001/XMLSchema#integer".into())
            }
        );

        let wide = parse_line("<http://a/s> <http://a/p> \"\\U0001F600\" .").unwrap();
        assert_eq!(
            wide.object,
            RdfTerm::Literal {
                value: "😀".into(),
                lang: None,
                datatype: None
            }
        );
    }

    #[test]
    fn escaped_and_plain_spellings_are_one_term() {
        let a = parse_line("<http://a/\\u0041> <http://a/p> \"x\" .").unwrap();
        let b = parse_line("<http://a/A> <http://a/p> \"x\" .").unwrap();
        assert_eq!(a.subject, b.subject);
        assert_eq!(a.subject.canonical(), "http://a/A");
    }

    #[test]
    fn writer_round_trips() {
        let lines = [
            "<http://a/s> <http://a/p> \"line\\nbreak \\\\ \\\"q\\\"\" .",
            "_:b1 <http://a/p> \"v\"@en .",
            "<http://a/s> <http://a/p> \"1\"^^<http://a/int> .",
            "<http://a/s> <http://a/p> _:b2 .",
            "<http://a/\\u00e9> <http://a/p> <http://a/o> .",
        ];
        let text = lines.join("\n");
        let (triples, _) = parse_ntriples(text.as_bytes(), true).unwrap();
        let mut out = Vec::new();
        write_ntriples(&mut out, &triples).unwrap();
        let (again, _) = parse_ntriples(out.as_slice(), true).unwrap();
        assert_eq!(triples, again);
        // And writing again is byte-identical.
        let mut out2 = Vec::new();
        write_ntriples(&mut out2, &again).unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn strict_mode_reports_the_line() {
        let text = "<http://a/s> <http://a/p> <http://a/o> .\n\ngarbage here\n";
        let err = parse_ntriples(text.as_bytes(), true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_and_reports() {
        let text = concat!(
            "<http://a/s> <http://a/p> <http://a/o> .\n",
            "\"literal\" <http://a/p> <http://a/o> .\n",
            "<http://a/s> _:blank <http://a/o> .\n",
            "<http://a/s> <http://a/p> \"unclosed .\n",
            "<http://a/s> <http://a/p> <http://a/o> junk .\n",
            "<http://a/s2> <http://a/p> <http://a/o> .\n",
        );
        let (triples, report) = parse_ntriples(text.as_bytes(), false).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(report.parsed, 2);
        assert_eq!(report.skipped, 4);
        let lines: Vec<u64> = report.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn malformed_pieces_are_rejected() {
        for bad in [
            "<http://a/s> <http://a/p> <http://a/o>",    // no dot
            "<http://a/s> <http://a/p> .",               // missing object
            "<http://a/s> <http://a/p> \"v\"@ .",        // empty lang
            "<http://a/s> <http://a/p> \"v\"@9x .",      // lang starts with digit
            "<http://a/s> <http://a/p> \"v\"^^x .",      // datatype without brackets
            "<http://a/s> <http://a/p> \"\\q\" .",       // unknown escape
            "<http://a/s> <http://a/p> \"\\uZZZZ\" .",   // bad hex
            "<http://a/ s> <http://a/p> <http://a/o> .", // space inside IRI
            "<http://a/s> <http://a/p> _:. .",           // bad blank label
        ] {
            assert!(parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn windows_line_endings_and_blank_lines() {
        let text = "<http://a/s> <http://a/p> <http://a/o> .\r\n\r\n   \r\n<http://a/s2> <http://a/p> <http://a/o> .\r\n";
        let (triples, report) = parse_ntriples(text.as_bytes(), true).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn gzip_input_is_sniffed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("football.nt.gz");
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(FOOTBALL_NT.as_bytes()).unwrap();
        std::fs::write(&path, enc.finish().unwrap()).unwrap();
        let (store, report) = load_store(&path, true, K2Config::default()).unwrap();
        assert_eq!(report.parsed, 10);
        assert_eq!(store.triple_count(), 10);
    }

    #[test]
    fn single_term_parser() {
        assert_eq!(
            parse_term(" <http://a/x> ").unwrap(),
            RdfTerm::Iri("http://a/x".into())
        );
        assert_eq!(parse_term("_:b7").unwrap(), RdfTerm::Blank("b7".into()));
        assert_eq!(
            parse_term("\"v\"@en").unwrap(),
            RdfTerm::Literal {
                value: "v".into(),
                lang: Some("en".into()),
                datatype: None
            }
        );
        assert!(parse_term("<http://a/x> extra").is_err());
        assert!(parse_term("plain").is_err());
        assert!(parse_term("").is_err());
    }

    #[test]
    fn format_term_restores_display_form() {
        assert_eq!(format_term("http://a/x"), "<http://a/x>");
        assert_eq!(format_term("_:b1"), "_:b1");
        assert_eq!(format_term("\"v\"@en"), "\"v\"@en");
    }

    #[test]
    fn non_utf8_line_is_skipped_leniently() {
        let mut bytes = b"<http://a/s> <http://a/p> <http://a/o> .\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xfe, b'\n']);
        bytes.extend_from_slice(b"<http://a/s2> <http://a/p> <http://a/o> .\n");
        let (triples, report) = parse_ntriples(bytes.as_slice(), false).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(report.skipped, 1);
        assert!(parse_ntriples(bytes.as_slice(), true).is_err());
    }
}
