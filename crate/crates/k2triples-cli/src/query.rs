//! Query text parsing, compilation against a store, and TSV output.
//!
//! Grammar: a query is one triple pattern `S P O` or two patterns
//! separated by `.` (a trailing `.` is allowed). Each slot is a
//! variable `?name` or a term — `<iri>`, `"literal"` (optionally with
//! `@lang` or `^^<datatype>`), or `_:label`. Two patterns must share
//! exactly one variable, and the shared variable must sit in a subject
//! or object slot on both sides.

use std::time::Instant;

use anyhow::{anyhow, bail, Context};

use k2triples::dict::Dictionary;
use k2triples::ingest::{self, RdfTerm};
use k2triples::joins::{Column, JoinQuery, JoinSide, JoinStrategy, JoinTerm, XSlot};
use k2triples::store::{TriplePattern, TripleStore};

use crate::CmdError;

/// Sentinel for a term absent from the dictionary: past every id range,
/// so lookups and joins treat it as matching nothing.
const UNKNOWN: u32 = u32::MAX;

pub fn run(
    store: &TripleStore,
    text: &str,
    ids: bool,
    stats: bool,
    limit: Option<usize>,
    strategy: Option<JoinStrategy>,
) -> Result<(), CmdError> {
    let patterns = parse(text).map_err(CmdError::Query)?;
    match compile(&patterns, store.dict()).map_err(CmdError::Query)? {
        Plan::Pattern { pattern, columns } => {
            let start = Instant::now();
            let (rows, work) = store
                .resolve_with_stats(pattern)
                .map_err(|e| CmdError::Query(e.into()))?;
            let elapsed = start.elapsed();
            let names: Vec<&str> = columns.iter().map(|(name, _)| name.as_str()).collect();
            print_header(&names);
            let shown = limit.unwrap_or(usize::MAX).min(rows.len());
            // A fully ground pattern has no columns: nothing to print,
            // the row count in --stats answers it.
            if !columns.is_empty() {
                for (s, p, o) in &rows[..shown] {
                    let line: Vec<String> = columns
                        .iter()
                        .map(|(_, slot)| match slot {
                            0 => decode(store.dict(), Axis::Subject, *s, ids),
                            1 => decode(store.dict(), Axis::Predicate, *p, ids),
                            _ => decode(store.dict(), Axis::Object, *o, ids),
                        })
                        .collect();
                    println!("{}", line.join("\t"));
                }
                report_truncation(shown, rows.len());
            }
            if stats {
                eprintln!(
                    "rows={} elapsed_us={} trees_visited={} nodes_visited={}",
                    rows.len(),
                    elapsed.as_micros(),
                    work.trees_visited,
                    work.nodes_visited
                );
            }
        }
        Plan::Join { query, names } => {
            let start = Instant::now();
            let (result, work) = store
                .join(&query, strategy)
                .map_err(|e| CmdError::Query(e.into()))?;
            let elapsed = start.elapsed();
            let header: Vec<&str> = result.columns.iter().map(|c| names.name_of(*c)).collect();
            print_header(&header);
            let shown = limit.unwrap_or(usize::MAX).min(result.rows.len());
            for row in &result.rows[..shown] {
                let line: Vec<String> = result
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(col, id)| {
                        decode(store.dict(), column_axis(*col, query.left.x), *id, ids)
                    })
                    .collect();
                println!("{}", line.join("\t"));
            }
            report_truncation(shown, result.rows.len());
            if stats {
                eprintln!(
                    "rows={} elapsed_us={} strategy={} probes={} bands_pruned={}",
                    result.rows.len(),
                    elapsed.as_micros(),
                    work.strategy,
                    work.probes,
                    work.bands_pruned
                );
            }
        }
    }
    Ok(())
}

fn print_header(names: &[&str]) {
    if !names.is_empty() {
        println!("{}", names.join("\t"));
    }
}

fn report_truncation(shown: usize, total: usize) {
    if shown < total {
        eprintln!("(limit: showing {shown} of {total} rows)");
    }
}

/// Which dictionary decodes a value.
#[derive(Clone, Copy)]
enum Axis {
    Subject,
    Predicate,
    Object,
}

fn column_axis(col: Column, left_x: XSlot) -> Axis {
    match col {
        // The shared value is on the left side's axis; for mixed-axis
        // joins it is a shared term, where both decoders agree.
        Column::X => match left_x {
            XSlot::Subject => Axis::Subject,
            XSlot::Object => Axis::Object,
        },
        Column::LeftS | Column::RightS => Axis::Subject,
        Column::LeftP | Column::RightP => Axis::Predicate,
        Column::LeftO | Column::RightO => Axis::Object,
    }
}

fn decode(dict: &Dictionary, axis: Axis, id: u32, ids: bool) -> String {
    if ids {
        // External numeric form is 1-based.
        return (id + 1).to_string();
    }
    let term = match axis {
        Axis::Subject => dict.subject_term(id),
        Axis::Predicate => dict.predicate_term(id),
        Axis::Object => dict.object_term(id),
    };
    ingest::format_term(term.expect("result id outside dictionary"))
}

/// One query slot as written.
enum Slot {
    Var(String),
    Term(RdfTerm),
}

impl Slot {
    fn var(&self) -> Option<&str> {
        match self {
            Slot::Var(name) => Some(name),
            Slot::Term(_) => None,
        }
    }
}

type Pattern = [Slot; 3];

enum Plan {
    Pattern {
        pattern: TriplePattern,
        /// Variable name and component index (0=s, 1=p, 2=o) per column.
        columns: Vec<(String, usize)>,
    },
    Join {
        query: JoinQuery,
        names: JoinNames,
    },
}

/// Maps result columns back to the variable names the query used.
struct JoinNames {
    shared: String,
    left: [Option<String>; 3],
    right: [Option<String>; 3],
}

impl JoinNames {
    fn name_of(&self, col: Column) -> &str {
        let slot = match col {
            Column::X => return &self.shared,
            Column::LeftS => &self.left[0],
            Column::LeftP => &self.left[1],
            Column::LeftO => &self.left[2],
            Column::RightS => &self.right[0],
            Column::RightP => &self.right[1],
            Column::RightO => &self.right[2],
        };
        slot.as_deref().expect("column without a variable")
    }
}

fn parse(text: &str) -> anyhow::Result<Vec<Pattern>> {
    let tokens = tokenize(text)?;
    let mut patterns = Vec::new();
    let mut current: Vec<Slot> = Vec::new();
    for token in tokens {
        match token {
            Token::Dot => {
                if current.is_empty() {
                    bail!("'.' without a pattern before it");
                }
                patterns.push(close(current)?);
                current = Vec::new();
            }
            Token::Var(name) => current.push(Slot::Var(name)),
            Token::Term(term) => current.push(Slot::Term(term)),
        }
    }
    if !current.is_empty() {
        patterns.push(close(current)?);
    }
    match patterns.len() {
        0 => bail!("empty query"),
        1 | 2 => Ok(patterns),
        n => bail!("a query is one pattern or a join of two, got {n}"),
    }
}

fn close(slots: Vec<Slot>) -> anyhow::Result<Pattern> {
    <[Slot; 3]>::try_from(slots).map_err(|s| {
        anyhow!(
            "each pattern needs subject, predicate, object (got {})",
            s.len()
        )
    })
}

enum Token {
    Var(String),
    Term(RdfTerm),
    Dot,
}

fn tokenize(text: &str) -> anyhow::Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        match c {
            b'.' => {
                out.push(Token::Dot);
                i += 1;
            }
            b'?' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                if j == start {
                    bail!("expected a variable name after '?'");
                }
                out.push(Token::Var(text[start..j].to_string()));
                i = j;
            }
            b'<' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j] != b'>' {
                    j += 1;
                }
                if j == bytes.len() {
                    bail!("unterminated IRI (missing '>')");
                }
                out.push(term_token(&text[i..=j])?);
                i = j + 1;
            }
            b'"' => {
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => bail!("unterminated literal (missing closing '\"')"),
                        Some(b'\\') => j += 2,
                        Some(b'"') => {
                            j += 1;
                            break;
                        }
                        Some(_) => j += 1,
                    }
                }
                if bytes.get(j) == Some(&b'@') {
                    j += 1;
                    while j < bytes.len()
                        && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'-')
                    {
                        j += 1;
                    }
                } else if bytes.get(j) == Some(&b'^') {
                    if bytes.get(j + 1) != Some(&b'^') || bytes.get(j + 2) != Some(&b'<') {
                        bail!("expected '^^<datatype>' after literal");
                    }
                    j += 2;
                    while j < bytes.len() && bytes[j] != b'>' {
                        j += 1;
                    }
                    if j == bytes.len() {
                        bail!("unterminated datatype IRI (missing '>')");
                    }
                    j += 1;
                }
                out.push(term_token(&text[i..j])?);
                i = j;
            }
            b'_' => {
                let mut j = i + 1;
                if bytes.get(j) == Some(&b':') {
                    j += 1;
                }
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric()
                        || bytes[j] == b'_'
                        || bytes[j] == b'-'
                        || bytes[j] == b'.')
                {
                    j += 1;
                }
                // A final '.' terminates the pattern, not the label.
                let mut end = j;
                if end > i && bytes[end - 1] == b'.' {
                    end -= 1;
                }
                out.push(term_token(&text[i..end])?);
                i = end;
            }
            other => bail!(
                "unexpected character '{}' in query (slots are ?var, <iri>, \"literal\", or _:label)",
                other as char
            ),
        }
    }
    Ok(out)
}

fn term_token(text: &str) -> anyhow::Result<Token> {
    let term = ingest::parse_term(text).with_context(|| format!("bad term {text}"))?;
    Ok(Token::Term(term))
}

fn compile(patterns: &[Pattern], dict: &Dictionary) -> anyhow::Result<Plan> {
    for pattern in patterns {
        check_no_repeats(pattern)?;
    }
    match patterns {
        [single] => compile_pattern(single, dict),
        [left, right] => compile_join(left, right, dict),
        _ => unreachable!("parse admits one or two patterns"),
    }
}

fn check_no_repeats(pattern: &Pattern) -> anyhow::Result<()> {
    let vars: Vec<&str> = pattern.iter().filter_map(Slot::var).collect();
    for (i, a) in vars.iter().enumerate() {
        if vars[i + 1..].contains(a) {
            bail!("variable ?{a} appears twice in one pattern");
        }
    }
    Ok(())
}

fn compile_pattern(pattern: &Pattern, dict: &Dictionary) -> anyhow::Result<Plan> {
    let mut fixed = [None; 3];
    let mut columns = Vec::new();
    for (idx, slot) in pattern.iter().enumerate() {
        match slot {
            Slot::Var(name) => columns.push((name.clone(), idx)),
            Slot::Term(term) => fixed[idx] = Some(slot_id(dict, idx, term)),
        }
    }
    Ok(Plan::Pattern {
        pattern: TriplePattern::new(fixed[0], fixed[1], fixed[2]),
        columns,
    })
}

fn compile_join(left: &Pattern, right: &Pattern, dict: &Dictionary) -> anyhow::Result<Plan> {
    let left_vars: Vec<&str> = left.iter().filter_map(Slot::var).collect();
    let right_vars: Vec<&str> = right.iter().filter_map(Slot::var).collect();
    let shared: Vec<&str> = left_vars
        .iter()
        .filter(|v| right_vars.contains(v))
        .copied()
        .collect();
    let shared = match shared.as_slice() {
        [one] => one.to_string(),
        [] => bail!("a join's two patterns must share exactly one variable (none shared)"),
        many => bail!(
            "a join's two patterns must share exactly one variable (shared: {})",
            many.iter()
                .map(|v| format!("?{v}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let (left_side, left_names) = compile_side(left, &shared, dict)?;
    let (right_side, right_names) = compile_side(right, &shared, dict)?;
    Ok(Plan::Join {
        query: JoinQuery::new(left_side, right_side),
        names: JoinNames {
            shared,
            left: left_names,
            right: right_names,
        },
    })
}

fn compile_side(
    pattern: &Pattern,
    shared: &str,
    dict: &Dictionary,
) -> anyhow::Result<(JoinSide, [Option<String>; 3])> {
    if pattern[1].var() == Some(shared) {
        bail!("the shared variable ?{shared} cannot sit in a predicate slot");
    }
    let x = if pattern[0].var() == Some(shared) {
        XSlot::Subject
    } else {
        XSlot::Object
    };
    let join_term = |idx: usize| match &pattern[idx] {
        Slot::Var(_) => JoinTerm::Free,
        Slot::Term(term) => JoinTerm::Fixed(slot_id(dict, idx, term)),
    };
    let side = match x {
        XSlot::Subject => JoinSide::x_subject(join_term(1), join_term(2)),
        XSlot::Object => JoinSide::x_object(join_term(0), join_term(1)),
    };
    let mut names = [None, None, None];
    for (idx, slot) in pattern.iter().enumerate() {
        if let Slot::Var(name) = slot {
            if name != shared {
                names[idx] = Some(name.clone());
            }
        }
    }
    Ok((side, names))
}

/// Dictionary id for a term in a given slot; unknown terms map to a
/// sentinel past every id range, which matches nothing.
fn slot_id(dict: &Dictionary, slot: usize, term: &RdfTerm) -> u32 {
    let canonical = term.canonical();
    let id = match slot {
        0 => dict.subject_id(&canonical),
        1 => dict.predicate_id(&canonical),
        _ => dict.object_id(&canonical),
    };
    id.unwrap_or(UNKNOWN)
}
