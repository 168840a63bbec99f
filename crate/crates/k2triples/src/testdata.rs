//! Shared fixtures for unit tests.

use crate::dict::Dictionary;

/// Ten-triple football dataset exercised throughout the crate's tests.
/// Entity IRIs share a prefix; player positions are plain literals, which
/// makes them sort ahead of the IRIs in the object category.
pub(crate) fn football() -> Vec<(String, String, String)> {
    let e = |n: &str| format!("http://example.org/{n}");
    let triples = [
        ("Spanish_Team", "represent", "Spain"),
        ("Madrid", "capital", "Spain"),
        ("Casillas", "born", "Madrid"),
        ("Casillas", "playFor", "Spanish_Team"),
        ("Casillas", "position", "\"goalkeeper\""),
        ("Casillas", "captain", "Spanish_Team"),
        ("Iniesta", "playFor", "Spanish_Team"),
        ("Iniesta", "position", "\"midfielder\""),
        ("Xavi", "playFor", "Spanish_Team"),
        ("Xavi", "position", "\"midfielder\""),
    ];
    triples
        .iter()
        .map(|&(s, p, o)| {
            let o = if o.starts_with('"') {
                o.to_string()
            } else {
                e(o)
            };
            (e(s), e(p), o)
        })
        .collect()
}

pub(crate) fn football_dict() -> Dictionary {
    let t = football();
    Dictionary::build(
        t.iter().map(|(s, _, _)| s.as_str()),
        t.iter().map(|(_, p, _)| p.as_str()),
        t.iter().map(|(_, _, o)| o.as_str()),
    )
    .unwrap()
}

/// The football triples as (subject, predicate, object) ID triples.
pub(crate) fn football_ids() -> Vec<(u32, u32, u32)> {
    let d = football_dict();
    football()
        .iter()
        .map(|(s, p, o)| {
            (
                d.subject_id(s).unwrap(),
                d.predicate_id(p).unwrap(),
                d.object_id(o).unwrap(),
            )
        })
        .collect()
}
