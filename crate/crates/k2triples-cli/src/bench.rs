//! Randomized benchmark workloads drawn from a store's own triples.
//!
//! Emits one CSV row per workload bucket: seven pattern shapes (the
//! all-variables shape is opt-in) and nine join classes, each joined
//! through subject-subject, subject-object, and object-object axes.
//! Joins are split into `small` and `big` buckets by the product of
//! their two sides' result counts. The generator is seeded, so the same
//! store, seed, and sizes always yield the same queries;
//! `--print-queries` prints them instead of timing.

use std::hint::black_box;
use std::time::Instant;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use k2triples::dict::Dictionary;
use k2triples::ingest;
use k2triples::joins::{JoinQuery, JoinSide, JoinTerm, XSlot};
use k2triples::store::{TriplePattern, TripleStore};

pub struct Options {
    pub patterns_n: usize,
    pub joins_n: usize,
    pub seed: u64,
    pub include_full_scan: bool,
    pub small_threshold: u64,
    pub print_queries: bool,
}

const CSV_HEADER: &str = "workload,shape,variant,bucket,n,min_us,mean_us,median_us,max_us";

/// Join side shapes: which of the side's two non-join slots are free.
#[derive(Clone, Copy)]
enum Shape {
    Closed,
    OpenNode,
    OpenPred,
    Open,
}

impl Shape {
    fn pred_free(self) -> bool {
        matches!(self, Shape::OpenPred | Shape::Open)
    }

    fn other_free(self) -> bool {
        matches!(self, Shape::OpenNode | Shape::Open)
    }
}

/// The nine supported class combinations (both-open is rejected by the
/// store and therefore not benchmarked).
const CLASS_GRID: [(Shape, Shape); 9] = [
    (Shape::Closed, Shape::Closed),
    (Shape::Closed, Shape::OpenNode),
    (Shape::OpenNode, Shape::OpenNode),
    (Shape::Closed, Shape::OpenPred),
    (Shape::OpenNode, Shape::OpenPred),
    (Shape::Closed, Shape::Open),
    (Shape::OpenNode, Shape::Open),
    (Shape::OpenPred, Shape::OpenPred),
    (Shape::OpenPred, Shape::Open),
];

/// Join axis per side: subject-subject, subject-object, object-object.
const VARIANTS: [(XSlot, XSlot, &str); 3] = [
    (XSlot::Subject, XSlot::Subject, "ss"),
    (XSlot::Subject, XSlot::Object, "so"),
    (XSlot::Object, XSlot::Object, "oo"),
];

pub fn run(store: &TripleStore, opts: &Options) {
    println!("{CSV_HEADER}");
    let all = store
        .resolve(TriplePattern::new(None, None, None))
        .expect("full scan");
    if all.is_empty() {
        eprintln!("bench: store is empty; no workload generated");
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    run_patterns(store, &all, opts, &mut rng);
    run_joins(store, &all, opts, &mut rng);
}

fn run_patterns(
    store: &TripleStore,
    all: &[(u32, u32, u32)],
    opts: &Options,
    rng: &mut ChaCha8Rng,
) {
    let mut shapes = vec![
        (true, true, true),
        (true, true, false),
        (true, false, true),
        (false, true, true),
        (true, false, false),
        (false, true, false),
        (false, false, true),
    ];
    if opts.include_full_scan {
        shapes.push((false, false, false));
    }
    for (fix_s, fix_p, fix_o) in shapes {
        let label = shape_label(fix_s, fix_p, fix_o);
        let queries: Vec<TriplePattern> = (0..opts.patterns_n)
            .map(|_| {
                let (s, p, o) = all[rng.gen_range(0..all.len())];
                TriplePattern::new(fix_s.then_some(s), fix_p.then_some(p), fix_o.then_some(o))
            })
            .collect();
        if opts.print_queries {
            for q in &queries {
                println!("pattern {label}: {}", pattern_text(store.dict(), *q));
            }
            continue;
        }
        if queries.is_empty() {
            continue;
        }
        let times: Vec<u64> = queries
            .iter()
            .map(|q| {
                let start = Instant::now();
                let rows = store.resolve(*q).expect("pattern resolution");
                black_box(rows.len());
                start.elapsed().as_micros() as u64
            })
            .collect();
        print_row("pattern", &label, "-", "-", &times);
    }
}

fn shape_label(fix_s: bool, fix_p: bool, fix_o: bool) -> String {
    let mark = |fixed, letter| if fixed { letter } else { '?' };
    [mark(fix_s, 's'), mark(fix_p, 'p'), mark(fix_o, 'o')]
        .iter()
        .collect()
}

fn run_joins(store: &TripleStore, all: &[(u32, u32, u32)], opts: &Options, rng: &mut ChaCha8Rng) {
    for (left_shape, right_shape) in CLASS_GRID {
        for (left_x, right_x, variant) in VARIANTS {
            let queries: Vec<JoinQuery> = (0..opts.joins_n)
                .map(|_| gen_join(rng, all, left_shape, right_shape, left_x, right_x))
                .collect();
            let Some(label) = queries.first().map(|q| q.classify().name()) else {
                continue; // joins_n == 0
            };
            if opts.print_queries {
                for q in &queries {
                    println!("join {label} {variant}: {}", join_text(store.dict(), q));
                }
                continue;
            }
            let (mut small, mut big) = (Vec::new(), Vec::new());
            for q in queries {
                let product =
                    side_count(store, &q.left).saturating_mul(side_count(store, &q.right));
                if product <= opts.small_threshold {
                    small.push(q);
                } else {
                    big.push(q);
                }
            }
            let mut emitted = false;
            for (bucket, batch) in [("small", small), ("big", big)] {
                if batch.is_empty() {
                    continue;
                }
                emitted = true;
                let times: Vec<u64> = batch
                    .iter()
                    .map(|q| {
                        let start = Instant::now();
                        let (result, stats) = store.join(q, None).expect("supported join class");
                        black_box(result.rows.len());
                        debug!(
                            "join {label} {variant} {bucket}: {} rows via {}",
                            result.rows.len(),
                            stats.strategy
                        );
                        start.elapsed().as_micros() as u64
                    })
                    .collect();
                print_row("join", label, variant, bucket, &times);
            }
            if !emitted {
                eprintln!("bench: no {label} {variant} queries generated; skipped");
            }
        }
    }
}

/// Build one join of the requested shape pair, anchored on stored
/// triples. The right side reuses the left anchor's join value when the
/// store has a matching triple (most of the time), so joins usually
/// produce rows; otherwise the sides anchor independently.
fn gen_join(
    rng: &mut ChaCha8Rng,
    all: &[(u32, u32, u32)],
    left_shape: Shape,
    right_shape: Shape,
    left_x: XSlot,
    right_x: XSlot,
) -> JoinQuery {
    let left_anchor = all[rng.gen_range(0..all.len())];
    let x = axis_value(left_anchor, left_x);
    let matching: Vec<(u32, u32, u32)> = all
        .iter()
        .filter(|t| axis_value(**t, right_x) == x)
        .copied()
        .collect();
    let right_anchor = if matching.is_empty() || rng.gen_bool(0.2) {
        all[rng.gen_range(0..all.len())]
    } else {
        matching[rng.gen_range(0..matching.len())]
    };
    JoinQuery::new(
        make_side(left_anchor, left_x, left_shape),
        make_side(right_anchor, right_x, right_shape),
    )
}

fn axis_value(t: (u32, u32, u32), x: XSlot) -> u32 {
    match x {
        XSlot::Subject => t.0,
        XSlot::Object => t.2,
    }
}

fn make_side(t: (u32, u32, u32), x: XSlot, shape: Shape) -> JoinSide {
    let pred = if shape.pred_free() {
        JoinTerm::Free
    } else {
        JoinTerm::Fixed(t.1)
    };
    match x {
        XSlot::Subject => {
            let object = if shape.other_free() {
                JoinTerm::Free
            } else {
                JoinTerm::Fixed(t.2)
            };
            JoinSide::x_subject(pred, object)
        }
        XSlot::Object => {
            let subject = if shape.other_free() {
                JoinTerm::Free
            } else {
                JoinTerm::Fixed(t.0)
            };
            JoinSide::x_object(subject, pred)
        }
    }
}

/// How many triples one side matches on its own (join slot free).
fn side_count(store: &TripleStore, side: &JoinSide) -> u64 {
    let p = fixed(side.pred);
    let pattern = match side.x {
        XSlot::Subject => TriplePattern::new(None, p, fixed(side.other)),
        XSlot::Object => TriplePattern::new(fixed(side.other), p, None),
    };
    store
        .resolve(pattern)
        .map(|rows| rows.len() as u64)
        .unwrap_or(0)
}

fn fixed(term: JoinTerm) -> Option<u32> {
    match term {
        JoinTerm::Fixed(v) => Some(v),
        JoinTerm::Free => None,
    }
}

fn pattern_text(dict: &Dictionary, pat: TriplePattern) -> String {
    let s = pat
        .s
        .map_or_else(|| "?s".to_string(), |v| decode_subject(dict, v));
    let p = pat
        .p
        .map_or_else(|| "?p".to_string(), |v| decode_predicate(dict, v));
    let o = pat
        .o
        .map_or_else(|| "?o".to_string(), |v| decode_object(dict, v));
    format!("{s} {p} {o} .")
}

/// Renders a join the way `query` accepts it: shared variable `?x`,
/// left free slots `?a`/`?b`, right free slots `?c`/`?d`.
fn join_text(dict: &Dictionary, q: &JoinQuery) -> String {
    format!(
        "{} . {}",
        side_text(dict, &q.left, "?a", "?b"),
        side_text(dict, &q.right, "?c", "?d")
    )
}

fn side_text(dict: &Dictionary, side: &JoinSide, pred_var: &str, other_var: &str) -> String {
    let pred = match side.pred {
        JoinTerm::Fixed(v) => decode_predicate(dict, v),
        JoinTerm::Free => pred_var.to_string(),
    };
    match side.x {
        XSlot::Subject => {
            let object = match side.other {
                JoinTerm::Fixed(v) => decode_object(dict, v),
                JoinTerm::Free => other_var.to_string(),
            };
            format!("?x {pred} {object}")
        }
        XSlot::Object => {
            let subject = match side.other {
                JoinTerm::Fixed(v) => decode_subject(dict, v),
                JoinTerm::Free => other_var.to_string(),
            };
            format!("{subject} {pred} ?x")
        }
    }
}

fn decode_subject(dict: &Dictionary, id: u32) -> String {
    ingest::format_term(dict.subject_term(id).expect("subject id"))
}

fn decode_object(dict: &Dictionary, id: u32) -> String {
    ingest::format_term(dict.object_term(id).expect("object id"))
}

fn decode_predicate(dict: &Dictionary, id: u32) -> String {
    ingest::format_term(dict.predicate_term(id).expect("predicate id"))
}

fn print_row(workload: &str, shape: &str, variant: &str, bucket: &str, times: &[u64]) {
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let min = sorted[0];
    let max = sorted[n - 1];
    let mean = sorted.iter().sum::<u64>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    println!("{workload},{shape},{variant},{bucket},{n},{min},{mean:.1},{median:.1},{max}");
}
