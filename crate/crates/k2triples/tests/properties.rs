//! Randomized property suites at realistic sizes. These complement the
//! per-module unit tests by sweeping larger matrices, denser vocabularies,
//! and full pipelines, always against brute-force expectations.

use std::collections::BTreeSet;

use k2triples::dict::Dictionary;
use k2triples::ingest::{parse_ntriples, write_ntriples, RawTriple, RdfTerm};
use k2triples::joins::{JoinQuery, JoinSide, JoinStrategy, JoinTerm, XSlot};
use k2triples::k2tree::{K2Config, K2Tree};
use k2triples::store::{TriplePattern, TripleStore};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn synth_dict(shared: usize, s_only: usize, o_only: usize, preds: usize) -> Dictionary {
    let n: Vec<String> = (0..shared).map(|i| format!("n{i:05}")).collect();
    let s: Vec<String> = (0..s_only).map(|i| format!("s{i:05}")).collect();
    let o: Vec<String> = (0..o_only).map(|i| format!("o{i:05}")).collect();
    let p: Vec<String> = (0..preds).map(|i| format!("p{i:03}")).collect();
    Dictionary::build(
        n.iter().chain(s.iter()).map(String::as_str),
        p.iter().map(String::as_str),
        n.iter().chain(o.iter()).map(String::as_str),
    )
    .unwrap()
}

fn random_triples(rng: &mut ChaCha8Rng, dict: &Dictionary, n: usize) -> Vec<(u32, u32, u32)> {
    let ns = dict.num_subjects() as u32;
    let np = dict.num_predicates() as u32;
    let no = dict.num_objects() as u32;
    let mut set = BTreeSet::new();
    let mut attempts = 0usize;
    while set.len() < n && attempts < n * 40 {
        set.insert((
            rng.gen_range(0..ns),
            rng.gen_range(0..np),
            rng.gen_range(0..no),
        ));
        attempts += 1;
    }
    set.into_iter().collect()
}

/// Full-matrix enumeration must reproduce the input cell set exactly,
/// neighbor queries must agree with per-cell checks, and the structural
/// auditor must accept every build. Sweeps 1000 matrices over three
/// densities and three sides.
#[test]
fn tree_enumeration_neighbors_and_audit() {
    let configs = [
        K2Config::default(),
        K2Config {
            k_upper: 2,
            upper_levels: 0,
            k_lower: 2,
            leaf_side: 4,
        },
        K2Config {
            k_upper: 4,
            upper_levels: 2,
            k_lower: 2,
            leaf_side: 8,
        },
    ];
    let mut built = 0usize;
    for (si, &side) in [64u32, 256, 1024].iter().enumerate() {
        for (di, &density) in [0.001f64, 0.01, 0.10].iter().enumerate() {
            // ~122 matrices per (side, density) cell ⇒ >1000 total; the
            // largest dense cell runs fewer rounds to bound the sweep.
            let rounds: u64 = if side == 1024 && density >= 0.10 {
                30
            } else {
                122
            };
            for round in 0..rounds {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    0xBEE5_0000 + (si as u64) * 1_000_000 + (di as u64) * 10_000 + round,
                );
                let target = ((side as u64 * side as u64) as f64 * density) as usize;
                let mut cells = BTreeSet::new();
                let mut attempts = 0usize;
                while cells.len() < target && attempts < target * 30 {
                    cells.insert((rng.gen_range(0..side), rng.gen_range(0..side)));
                    attempts += 1;
                }
                let cells: Vec<(u32, u32)> = cells.into_iter().collect();
                let config = configs[round as usize % configs.len()];
                let tree = K2Tree::build(&cells, side, side, config).unwrap();
                tree.validate().unwrap();

                let mut enumerated = tree.range(0, side - 1, 0, side - 1).unwrap();
                enumerated.sort_unstable();
                assert_eq!(enumerated, cells, "side {side} density {density}");

                // Neighbor queries vs per-cell membership on sampled lines.
                for _ in 0..6 {
                    let r = rng.gen_range(0..side);
                    let expect: Vec<u32> = cells
                        .iter()
                        .filter(|&&(cr, _)| cr == r)
                        .map(|&(_, cc)| cc)
                        .collect();
                    assert_eq!(tree.direct_neighbors(r), expect);
                    let c = rng.gen_range(0..side);
                    let expect: Vec<u32> = cells
                        .iter()
                        .filter(|&&(_, cc)| cc == c)
                        .map(|&(cr, _)| cr)
                        .collect();
                    assert_eq!(tree.reverse_neighbors(c), expect);
                }
                for &(r, c) in cells.iter().take(20) {
                    assert!(tree.contains(r, c));
                }
                built += 1;
            }
        }
    }
    assert!(built >= 1000, "built only {built} matrices");
}

/// Sub-rectangle queries agree with filtering the cell set.
#[test]
fn tree_range_windows_match_filter() {
    for round in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_1000 + round);
        let side = *[70u32, 130, 300].choose(&mut rng).unwrap();
        let mut cells = BTreeSet::new();
        for _ in 0..(side * 4) {
            cells.insert((rng.gen_range(0..side), rng.gen_range(0..side)));
        }
        let cells: Vec<(u32, u32)> = cells.into_iter().collect();
        let tree = K2Tree::build(&cells, side, side, K2Config::default()).unwrap();
        for _ in 0..30 {
            let r0 = rng.gen_range(0..side);
            let r1 = rng.gen_range(r0..side);
            let c0 = rng.gen_range(0..side);
            let c1 = rng.gen_range(c0..side);
            let mut got = tree.range(r0, r1, c0, c1).unwrap();
            got.sort_unstable();
            let expect: Vec<(u32, u32)> = cells
                .iter()
                .copied()
                .filter(|&(r, c)| (r0..=r1).contains(&r) && (c0..=c1).contains(&c))
                .collect();
            assert_eq!(got, expect);
        }
    }
}

/// Every stored triple appears in both per-entity predicate lists; every
/// listed predicate has matching triples; vocabulary list frequencies
/// never increase with the code number.
#[test]
fn predicate_index_invariants_at_scale() {
    for round in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_2000 + round);
        let dict = synth_dict(150, 150, 150, rng.gen_range(8..=64));
        let triples = random_triples(&mut rng, &dict, 8_000);
        let store =
            TripleStore::from_id_triples(dict.clone(), &triples, K2Config::default()).unwrap();

        for &(s, p, o) in &triples {
            assert!(store.sp_index().contains(s, p));
            assert!(store.op_index().contains(o, p));
        }
        for s in 0..dict.num_subjects() as u32 {
            for p in store.sp_index().predicates_of(s) {
                let row = store
                    .resolve(TriplePattern {
                        s: Some(s),
                        p: Some(p),
                        o: None,
                    })
                    .unwrap();
                assert!(!row.is_empty(), "subject {s} lists predicate {p}");
            }
        }

        // Recompute code frequencies; codes are 1-based, most frequent first.
        for index in [store.sp_index(), store.op_index()] {
            let mut freq = vec![0usize; index.vocab_len() + 1];
            for e in 0..index.len() as u32 {
                let code = index.list_code(e).unwrap() as usize;
                freq[code] += 1;
            }
            for v in 1..index.vocab_len() {
                assert!(
                    freq[v] >= freq[v + 1],
                    "vocab code {v} rarer than {}",
                    v + 1
                );
            }
        }
    }
}

/// Resolving with the predicate-list indexes returns exactly what probing
/// every predicate tree would, and per-predicate cardinalities match the
/// full enumeration.
#[test]
fn store_pruning_is_lossless() {
    for round in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_3000 + round);
        let dict = synth_dict(80, 80, 80, 48);
        let triples = random_triples(&mut rng, &dict, 5_000);
        let store =
            TripleStore::from_id_triples(dict.clone(), &triples, K2Config::default()).unwrap();
        let np = dict.num_predicates() as u32;

        for p in 0..np {
            let full = store
                .resolve(TriplePattern {
                    s: None,
                    p: Some(p),
                    o: None,
                })
                .unwrap();
            assert_eq!(store.predicate_cardinality(p), Some(full.len() as u64));
        }

        for _ in 0..40 {
            let (s0, _, o0) = triples[rng.gen_range(0..triples.len())];
            for pat in [
                TriplePattern {
                    s: Some(s0),
                    p: None,
                    o: None,
                },
                TriplePattern {
                    s: None,
                    p: None,
                    o: Some(o0),
                },
                TriplePattern {
                    s: Some(s0),
                    p: None,
                    o: Some(o0),
                },
            ] {
                let got = store.resolve(pat).unwrap();
                let mut union = Vec::new();
                for p in 0..np {
                    union.extend(store.resolve(TriplePattern { p: Some(p), ..pat }).unwrap());
                }
                union.sort_unstable_by_key(|&(s, p, o)| (p, s, o));
                assert_eq!(got, union, "pattern {pat:?}");
            }
        }
    }
}

/// Chain evaluation probes each distinct join value exactly once: the
/// probe counter equals the distinct-X count of whichever side was
/// resolved first.
#[test]
fn chain_probes_each_join_value_once() {
    for round in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_4000 + round);
        let dict = synth_dict(60, 60, 60, 10);
        let triples = random_triples(&mut rng, &dict, 1_500);
        let store =
            TripleStore::from_id_triples(dict.clone(), &triples, K2Config::default()).unwrap();

        for _ in 0..20 {
            let t = triples[rng.gen_range(0..triples.len())];
            let u = triples[rng.gen_range(0..triples.len())];
            let query = JoinQuery::new(
                JoinSide::x_subject(JoinTerm::Fixed(t.1), JoinTerm::Fixed(t.2)),
                JoinSide::x_subject(JoinTerm::Fixed(u.1), JoinTerm::Fixed(u.2)),
            );
            let (_, stats) = store.join(&query, Some(JoinStrategy::Chain)).unwrap();

            let distinct_x = |pred: u32, obj: u32| -> u64 {
                triples
                    .iter()
                    .filter(|&&(_, p, o)| p == pred && o == obj)
                    .map(|&(s, _, _)| s)
                    .collect::<BTreeSet<u32>>()
                    .len() as u64
            };
            let left = distinct_x(t.1, t.2);
            let right = distinct_x(u.1, u.2);
            assert!(
                stats.probes == left || stats.probes == right,
                "probes {} but distinct X counts are {left}/{right}",
                stats.probes
            );
        }
    }
}

/// Every X interval the interactive descent prunes must contain no join
/// results at all.
#[test]
fn interactive_pruning_never_drops_results() {
    for round in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_5000 + round);
        let dict = synth_dict(50, 50, 50, 8);
        let triples = random_triples(&mut rng, &dict, 1_200);
        let store =
            TripleStore::from_id_triples(dict.clone(), &triples, K2Config::default()).unwrap();
        let shared = dict.shared_count() as u32;

        for _ in 0..15 {
            let t = triples[rng.gen_range(0..triples.len())];
            let u = triples[rng.gen_range(0..triples.len())];
            let (lx, rx) = *[
                (XSlot::Subject, XSlot::Subject),
                (XSlot::Subject, XSlot::Object),
                (XSlot::Object, XSlot::Object),
            ]
            .choose(&mut rng)
            .unwrap();
            let mk = |x: XSlot, (s, p, o): (u32, u32, u32), open_pred: bool| -> JoinSide {
                let pred = if open_pred {
                    JoinTerm::Free
                } else {
                    JoinTerm::Fixed(p)
                };
                match x {
                    XSlot::Subject => JoinSide::x_subject(pred, JoinTerm::Fixed(o)),
                    XSlot::Object => JoinSide::x_object(JoinTerm::Fixed(s), pred),
                }
            };
            let query = JoinQuery::new(mk(lx, t, rng.gen_bool(0.3)), mk(rx, u, rng.gen_bool(0.3)));
            let (result, _, trace) = store
                .join_with_trace(&query, Some(JoinStrategy::Interactive))
                .unwrap();

            // Brute-force X values that do join.
            let mut joined = BTreeSet::new();
            for &(s1, p1, o1) in &triples {
                let lv = match lx {
                    XSlot::Subject => {
                        if !matches_side(&query.left, s1, p1, o1) {
                            continue;
                        }
                        s1
                    }
                    XSlot::Object => {
                        if !matches_side(&query.left, s1, p1, o1) {
                            continue;
                        }
                        o1
                    }
                };
                if lx != rx && lv >= shared {
                    continue;
                }
                for &(s2, p2, o2) in &triples {
                    if !matches_side(&query.right, s2, p2, o2) {
                        continue;
                    }
                    let rv = match rx {
                        XSlot::Subject => s2,
                        XSlot::Object => o2,
                    };
                    if lv == rv {
                        joined.insert(lv);
                    }
                }
            }
            let from_engine: BTreeSet<u32> = result.rows.iter().map(|r| r[0]).collect();
            assert_eq!(from_engine, joined);
            for &(lo, hi) in &trace.pruned_x_bands {
                for &x in &joined {
                    assert!(
                        (x as u64) < lo || (x as u64) >= hi,
                        "result X {x} inside pruned band [{lo}, {hi})"
                    );
                }
            }
        }
    }
}

fn matches_side(side: &JoinSide, s: u32, p: u32, o: u32) -> bool {
    let pred_ok = match side.pred {
        JoinTerm::Fixed(v) => v == p,
        JoinTerm::Free => true,
    };
    let other_ok = match (side.x, side.other) {
        (XSlot::Subject, JoinTerm::Fixed(v)) => v == o,
        (XSlot::Object, JoinTerm::Fixed(v)) => v == s,
        (_, JoinTerm::Free) => true,
    };
    pred_ok && other_ok
}

/// The same input text always produces byte-identical store files, and
/// feeding the input twice over changes nothing.
#[test]
fn pipeline_is_deterministic_and_dedups() {
    for round in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5_6000 + round);
        let mut lines = Vec::new();
        for _ in 0..400 {
            let subject = match rng.gen_range(0..3) {
                0 => RdfTerm::Iri(format!("http://d/{}", rng.gen_range(0..60))),
                1 => RdfTerm::Iri(format!("http://e/é{}", rng.gen_range(0..20))),
                _ => RdfTerm::Blank(format!("b{}", rng.gen_range(0..30))),
            };
            let predicate = RdfTerm::Iri(format!("http://p/{}", rng.gen_range(0..12)));
            let object = match rng.gen_range(0..4) {
                0 => RdfTerm::Iri(format!("http://d/{}", rng.gen_range(0..60))),
                1 => RdfTerm::Literal {
                    value: format!("v {} \"x\"\n", rng.gen_range(0..40)),
                    lang: None,
                    datatype: None,
                },
                2 => RdfTerm::Literal {
                    value: format!("{}", rng.gen_range(0..100)),
                    lang: None,
                    datatype: Some("http://www.w3.org/2001/XMLSchema#integer".into()),
                },
                _ => RdfTerm::Blank(format!("b{}", rng.gen_range(0..30))),
            };
            lines.push(RawTriple {
                subject,
                predicate,
                object,
            });
        }
        let mut text = Vec::new();
        write_ntriples(&mut text, &lines).unwrap();

        let build = |bytes: &[u8]| -> Vec<u8> {
            let (parsed, _) = parse_ntriples(bytes, true).unwrap();
            let canonical: Vec<_> = parsed.iter().map(RawTriple::canonical).collect();
            let store = TripleStore::from_str_triples(&canonical, K2Config::default()).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("store.k2t");
            store.save(&path).unwrap();
            std::fs::read(&path).unwrap()
        };

        let once = build(&text);
        let again = build(&text);
        assert_eq!(once, again, "same input must give identical bytes");

        let mut doubled = text.clone();
        doubled.extend_from_slice(&text);
        assert_eq!(once, build(&doubled), "duplicated input must collapse");
    }
}

/// Dictionary axes agree on shared terms and invert cleanly at scale.
#[test]
fn dictionary_round_trips_at_scale() {
    let dict = synth_dict(3_000, 2_000, 2_000, 200);
    for i in 0..dict.num_subjects() as u32 {
        let term = dict.subject_term(i).unwrap();
        assert_eq!(dict.subject_id(term), Some(i));
        if dict.is_shared(i) {
            assert_eq!(dict.object_id(term), Some(i));
        } else {
            assert_eq!(dict.object_id(term), None);
        }
    }
    for i in 0..dict.num_objects() as u32 {
        let term = dict.object_term(i).unwrap();
        assert_eq!(dict.object_id(term), Some(i));
    }
    for i in 0..dict.num_predicates() as u32 {
        let term = dict.predicate_term(i).unwrap();
        assert_eq!(dict.predicate_id(term), Some(i));
    }
}
