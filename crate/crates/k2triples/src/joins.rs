//! Pairwise joins of two triple patterns on one shared variable.
//!
//! A join query holds two patterns that share exactly one variable `X`,
//! sitting in the subject or object slot of each side (a variable in the
//! predicate slot cannot be the join variable). Each side is shaped by
//! what else it leaves free:
//!
//! * closed — predicate and the other node both fixed;
//! * open node — predicate fixed, other node free;
//! * open predicate — other node fixed, predicate free;
//! * open — both free.
//!
//! The shape pair classifies the join and decides which strategies apply.
//! Joining two fully open sides would mean crossing every matrix with
//! every matrix, and is rejected.
//!
//! Three strategies produce identical results:
//!
//! * **chain** — evaluate the more constrained side, then probe the other
//!   side once per distinct `X` value;
//! * **independent** — evaluate both sides separately and intersect on
//!   `X`; only allowed when neither side is fully open;
//! * **interactive** — descend the matrices of both sides in lockstep,
//!   splitting the `X` axis into bands and dropping a band as soon as
//!   either side has no survivors in it.
//!
//! When `X` is a subject on one side and an object on the other, only the
//! dictionary's shared range is comparable across the two axes; every
//! strategy restricts `X` accordingly.
//!
//! Results are bindings tables: column 0 is `X`, then the free slots of
//! the left pattern in subject, predicate, object order, then the right
//! ones. Rows are sorted and duplicate-free.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::k2tree::NodeCursor;
use crate::store::{TriplePattern, TripleStore};

/// A fixed term or a free (projected) variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinTerm {
    Fixed(u32),
    Free,
}

/// Which slot of the pattern the shared variable occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XSlot {
    Subject,
    Object,
}

/// One side of a join: the shared variable's slot, the predicate, and the
/// remaining node slot (object when `X` is the subject, subject when `X`
/// is the object).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinSide {
    pub x: XSlot,
    pub pred: JoinTerm,
    pub other: JoinTerm,
}

impl JoinSide {
    /// `(?x, pred, object)`.
    pub fn x_subject(pred: JoinTerm, object: JoinTerm) -> JoinSide {
        JoinSide {
            x: XSlot::Subject,
            pred,
            other: object,
        }
    }

    /// `(subject, pred, ?x)`.
    pub fn x_object(subject: JoinTerm, pred: JoinTerm) -> JoinSide {
        JoinSide {
            x: XSlot::Object,
            pred,
            other: subject,
        }
    }

    fn shape(&self) -> SideShape {
        match (self.pred, self.other) {
            (JoinTerm::Fixed(_), JoinTerm::Fixed(_)) => SideShape::Closed,
            (JoinTerm::Fixed(_), JoinTerm::Free) => SideShape::OpenNode,
            (JoinTerm::Free, JoinTerm::Fixed(_)) => SideShape::OpenPred,
            (JoinTerm::Free, JoinTerm::Free) => SideShape::Open,
        }
    }

    /// Triple pattern of this side with `X` bound to `x` (or left open).
    fn pattern(&self, x: Option<u32>) -> TriplePattern {
        let fix = |t: JoinTerm| match t {
            JoinTerm::Fixed(v) => Some(v),
            JoinTerm::Free => None,
        };
        match self.x {
            XSlot::Subject => TriplePattern::new(x, fix(self.pred), fix(self.other)),
            XSlot::Object => TriplePattern::new(fix(self.other), fix(self.pred), x),
        }
    }

    fn x_of(&self, t: (u32, u32, u32)) -> u32 {
        match self.x {
            XSlot::Subject => t.0,
            XSlot::Object => t.2,
        }
    }

    /// Values of the free slots, in subject, predicate, object order.
    fn bindings_of(&self, t: (u32, u32, u32)) -> Vec<u32> {
        let mut out = Vec::new();
        if self.x == XSlot::Object && self.other == JoinTerm::Free {
            out.push(t.0);
        }
        if self.pred == JoinTerm::Free {
            out.push(t.1);
        }
        if self.x == XSlot::Subject && self.other == JoinTerm::Free {
            out.push(t.2);
        }
        out
    }

    fn columns(&self, left: bool) -> Vec<Column> {
        let (s, p, o) = if left {
            (Column::LeftS, Column::LeftP, Column::LeftO)
        } else {
            (Column::RightS, Column::RightP, Column::RightO)
        };
        let mut out = Vec::new();
        if self.x == XSlot::Object && self.other == JoinTerm::Free {
            out.push(s);
        }
        if self.pred == JoinTerm::Free {
            out.push(p);
        }
        if self.x == XSlot::Subject && self.other == JoinTerm::Free {
            out.push(o);
        }
        out
    }

    fn free_slots(&self) -> usize {
        usize::from(self.pred == JoinTerm::Free) + usize::from(self.other == JoinTerm::Free)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideShape {
    Closed,
    OpenNode,
    OpenPred,
    Open,
}

/// Shape pair of a join, normalized over side order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinClass {
    BothClosed,
    ClosedOpenNode,
    BothOpenNode,
    ClosedOpenPred,
    OpenNodeOpenPred,
    ClosedOpen,
    OpenNodeOpen,
    BothOpenPred,
    OpenPredOpen,
    BothOpen,
}

impl JoinClass {
    pub fn name(&self) -> &'static str {
        match self {
            JoinClass::BothClosed => "both-closed",
            JoinClass::ClosedOpenNode => "closed/open-node",
            JoinClass::BothOpenNode => "both-open-node",
            JoinClass::ClosedOpenPred => "closed/open-predicate",
            JoinClass::OpenNodeOpenPred => "open-node/open-predicate",
            JoinClass::ClosedOpen => "closed/open",
            JoinClass::OpenNodeOpen => "open-node/open",
            JoinClass::BothOpenPred => "both-open-predicate",
            JoinClass::OpenPredOpen => "open-predicate/open",
            JoinClass::BothOpen => "both-open",
        }
    }

    /// Independent evaluation needs both sides separately enumerable,
    /// which a fully open side is not.
    pub fn independent_applies(&self) -> bool {
        !matches!(
            self,
            JoinClass::ClosedOpen
                | JoinClass::OpenNodeOpen
                | JoinClass::OpenPredOpen
                | JoinClass::BothOpen
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinStrategy {
    Chain,
    Independent,
    Interactive,
}

impl JoinStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            JoinStrategy::Chain => "chain",
            JoinStrategy::Independent => "independent",
            JoinStrategy::Interactive => "interactive",
        }
    }
}

impl std::fmt::Display for JoinStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinQuery {
    pub left: JoinSide,
    pub right: JoinSide,
}

impl JoinQuery {
    pub fn new(left: JoinSide, right: JoinSide) -> JoinQuery {
        JoinQuery { left, right }
    }

    pub fn classify(&self) -> JoinClass {
        use SideShape::*;
        let mut pair = [self.left.shape(), self.right.shape()];
        pair.sort_by_key(|s| match s {
            Closed => 0,
            OpenNode => 1,
            OpenPred => 2,
            Open => 3,
        });
        match (pair[0], pair[1]) {
            (Closed, Closed) => JoinClass::BothClosed,
            (Closed, OpenNode) => JoinClass::ClosedOpenNode,
            (OpenNode, OpenNode) => JoinClass::BothOpenNode,
            (Closed, OpenPred) => JoinClass::ClosedOpenPred,
            (OpenNode, OpenPred) => JoinClass::OpenNodeOpenPred,
            (Closed, Open) => JoinClass::ClosedOpen,
            (OpenNode, Open) => JoinClass::OpenNodeOpen,
            (OpenPred, OpenPred) => JoinClass::BothOpenPred,
            (OpenPred, Open) => JoinClass::OpenPredOpen,
            (Open, Open) => JoinClass::BothOpen,
            _ => unreachable!("pair is sorted"),
        }
    }
}

/// Column roles of a bindings table. `X` is always first; the rest name
/// the free slot they came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    X,
    LeftS,
    LeftP,
    LeftO,
    RightS,
    RightP,
    RightO,
}

impl Column {
    pub fn label(&self) -> &'static str {
        match self {
            Column::X => "x",
            Column::LeftS => "left-subject",
            Column::LeftP => "left-predicate",
            Column::LeftO => "left-object",
            Column::RightS => "right-subject",
            Column::RightP => "right-predicate",
            Column::RightO => "right-object",
        }
    }
}

/// Sorted, duplicate-free bindings table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinResult {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinStats {
    pub strategy: JoinStrategy,
    /// Chain: second-side lookups. Independent: sides evaluated.
    /// Interactive: bands processed.
    pub probes: u64,
    /// Interactive only: sub-bands dropped because one side died.
    pub bands_pruned: u64,
}

/// Interactive-strategy diagnostics: the `X` intervals (half-open) whose
/// sub-bands were dropped because exactly one side had no survivors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinTrace {
    pub pruned_x_bands: Vec<(u64, u64)>,
}

/// One `X` interval of the interactive descent: both sides' surviving
/// cursors at `level`, covering `x` values from `x_lo`.
struct Band {
    x_lo: u64,
    level: usize,
    left: Vec<(u32, NodeCursor)>,
    right: Vec<(u32, NodeCursor)>,
}

impl TripleStore {
    /// Runs a join with the given strategy, or picks one automatically.
    pub fn join(
        &self,
        query: &JoinQuery,
        strategy: Option<JoinStrategy>,
    ) -> Result<(JoinResult, JoinStats)> {
        let (result, stats, _) = self.join_with_trace(query, strategy)?;
        Ok((result, stats))
    }

    /// Like [`join`](Self::join), also returning pruning diagnostics.
    pub fn join_with_trace(
        &self,
        query: &JoinQuery,
        strategy: Option<JoinStrategy>,
    ) -> Result<(JoinResult, JoinStats, JoinTrace)> {
        let class = query.classify();
        if class == JoinClass::BothOpen {
            return Err(Error::UnsupportedJoin(
                "both sides leave predicate and node free",
            ));
        }
        let strategy = match strategy {
            Some(s) => {
                if s == JoinStrategy::Independent && !class.independent_applies() {
                    return Err(Error::StrategyNotApplicable {
                        class: class.name(),
                        strategy: s.name(),
                    });
                }
                s
            }
            None => self.pick_strategy(query, class),
        };
        let columns = result_columns(query);
        let (mut rows, stats, trace) = match strategy {
            JoinStrategy::Chain => {
                let (rows, probes) = self.chain_join(query)?;
                (
                    rows,
                    JoinStats {
                        strategy,
                        probes,
                        bands_pruned: 0,
                    },
                    JoinTrace::default(),
                )
            }
            JoinStrategy::Independent => {
                let rows = self.independent_join(query)?;
                (
                    rows,
                    JoinStats {
                        strategy,
                        probes: 2,
                        bands_pruned: 0,
                    },
                    JoinTrace::default(),
                )
            }
            JoinStrategy::Interactive => {
                let (rows, probes, trace) = self.interactive_join(query)?;
                (
                    rows,
                    JoinStats {
                        strategy,
                        probes,
                        bands_pruned: trace.pruned_x_bands.len() as u64,
                    },
                    trace,
                )
            }
        };
        rows.sort_unstable();
        rows.dedup();
        Ok((JoinResult { columns, rows }, stats, trace))
    }

    fn pick_strategy(&self, query: &JoinQuery, class: JoinClass) -> JoinStrategy {
        // Fully bounded sides and double predicate scans profit most from
        // the synchronized descent.
        if matches!(class, JoinClass::BothClosed | JoinClass::BothOpenPred) {
            return JoinStrategy::Interactive;
        }
        let le = self.estimate(query.left.pattern(None));
        let re = self.estimate(query.right.pattern(None));
        if le.min(re).saturating_mul(16) <= le.max(re) {
            JoinStrategy::Chain
        } else if class.independent_applies() {
            JoinStrategy::Independent
        } else {
            JoinStrategy::Interactive
        }
    }

    /// Valid `X` ids: both axes full when the slots agree, otherwise only
    /// the shared range is comparable.
    fn x_limit(&self, query: &JoinQuery) -> u32 {
        match (query.left.x, query.right.x) {
            (XSlot::Subject, XSlot::Subject) => self.dict().num_subjects() as u32,
            (XSlot::Object, XSlot::Object) => self.dict().num_objects() as u32,
            _ => self.dict().shared_count() as u32,
        }
    }

    fn chain_join(&self, query: &JoinQuery) -> Result<(Vec<Vec<u32>>, u64)> {
        let x_limit = self.x_limit(query);
        // The side with fewer free slots runs first; on a tie, the side
        // expected to produce less.
        let left_first = match query.left.free_slots().cmp(&query.right.free_slots()) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                self.estimate(query.left.pattern(None)) <= self.estimate(query.right.pattern(None))
            }
        };
        let (first, second) = if left_first {
            (query.left, query.right)
        } else {
            (query.right, query.left)
        };
        let mut first_by_x: HashMap<u32, Vec<Vec<u32>>> = HashMap::new();
        for t in self.resolve(first.pattern(None))? {
            let x = first.x_of(t);
            if x < x_limit {
                first_by_x.entry(x).or_default().push(first.bindings_of(t));
            }
        }
        let mut xs: Vec<u32> = first_by_x.keys().copied().collect();
        xs.sort_unstable();
        let mut rows = Vec::new();
        let mut probes = 0u64;
        for x in xs {
            probes += 1;
            for t in self.resolve(second.pattern(Some(x)))? {
                let sb = second.bindings_of(t);
                for fb in &first_by_x[&x] {
                    let mut row = Vec::with_capacity(1 + fb.len() + sb.len());
                    row.push(x);
                    if left_first {
                        row.extend_from_slice(fb);
                        row.extend_from_slice(&sb);
                    } else {
                        row.extend_from_slice(&sb);
                        row.extend_from_slice(fb);
                    }
                    rows.push(row);
                }
            }
        }
        Ok((rows, probes))
    }

    fn independent_join(&self, query: &JoinQuery) -> Result<Vec<Vec<u32>>> {
        let x_limit = self.x_limit(query);
        let mut left_by_x: HashMap<u32, Vec<Vec<u32>>> = HashMap::new();
        for t in self.resolve(query.left.pattern(None))? {
            let x = query.left.x_of(t);
            if x < x_limit {
                left_by_x
                    .entry(x)
                    .or_default()
                    .push(query.left.bindings_of(t));
            }
        }
        let mut rows = Vec::new();
        for t in self.resolve(query.right.pattern(None))? {
            let x = query.right.x_of(t);
            if x >= x_limit {
                continue;
            }
            let Some(lefts) = left_by_x.get(&x) else {
                continue;
            };
            let rb = query.right.bindings_of(t);
            for lb in lefts {
                let mut row = Vec::with_capacity(1 + lb.len() + rb.len());
                row.push(x);
                row.extend_from_slice(lb);
                row.extend_from_slice(&rb);
                rows.push(row);
            }
        }
        Ok(rows)
    }

    /// Candidate predicates of one side, pruned through the list indexes.
    fn side_predicates(&self, side: &JoinSide) -> Vec<u32> {
        let preds = self.num_predicates() as u32;
        match (side.pred, side.other) {
            (JoinTerm::Fixed(p), _) => {
                if p < preds {
                    vec![p]
                } else {
                    Vec::new()
                }
            }
            (JoinTerm::Free, JoinTerm::Fixed(node)) => match side.x {
                // X is the subject, so the fixed node is an object.
                XSlot::Subject => self.op_index().predicates_of(node),
                XSlot::Object => self.sp_index().predicates_of(node),
            },
            (JoinTerm::Free, JoinTerm::Free) => (0..preds).collect(),
        }
    }

    fn interactive_join(&self, query: &JoinQuery) -> Result<(Vec<Vec<u32>>, u64, JoinTrace)> {
        let x_limit = u64::from(self.x_limit(query));
        let mut trace = JoinTrace::default();
        let mut probes = 0u64;
        let mut rows = Vec::new();

        let roots = |side: &JoinSide| -> Vec<(u32, NodeCursor)> {
            self.side_predicates(side)
                .into_iter()
                .filter_map(|p| {
                    let tree = self.tree(p)?;
                    let root = tree.root();
                    root.bit.then_some((p, root))
                })
                .collect()
        };
        let left_roots = roots(&query.left);
        let right_roots = roots(&query.right);
        if left_roots.is_empty() || right_roots.is_empty() || self.n_prime() == 0 || x_limit == 0 {
            return Ok((rows, probes, trace));
        }

        // All matrices of one store share the branching schedule; derive
        // the per-level factor once.
        let ks: Vec<u64> = {
            let cfg = self.tree(left_roots[0].0).unwrap().config();
            let mut side = self.n_prime();
            let mut ks = Vec::new();
            while side > u64::from(cfg.leaf_side) {
                let k = if ks.len() < cfg.upper_levels as usize {
                    cfg.k_upper
                } else {
                    cfg.k_lower
                };
                ks.push(u64::from(k));
                side /= u64::from(k);
            }
            ks
        };
        let depth = ks.len();
        let leaf = u64::from(self.tree(left_roots[0].0).unwrap().config().leaf_side);

        let mut stack = vec![Band {
            x_lo: 0,
            level: 0,
            left: left_roots,
            right: right_roots,
        }];
        while let Some(band) = stack.pop() {
            probes += 1;
            if band.level == depth {
                self.emit_leaf_band(query, &band, leaf, x_limit, &mut rows)?;
                continue;
            }
            // Split the X interval into the k sub-bands of the next level.
            let k = ks[band.level] as usize;
            let child_side = band.left[0].1.side / k as u64;
            let expand = |cursors: &[(u32, NodeCursor)],
                          side: &JoinSide|
             -> Result<Vec<Vec<(u32, NodeCursor)>>> {
                let mut by_band: Vec<Vec<(u32, NodeCursor)>> = vec![Vec::new(); k];
                for &(p, cur) in cursors {
                    for child in self.tree(p).unwrap().descend(&cur)? {
                        if !child.bit {
                            continue;
                        }
                        let (x_band, other_lo) = match side.x {
                            XSlot::Subject => ((child.row - cur.row) / child.side, child.col),
                            XSlot::Object => ((child.col - cur.col) / child.side, child.row),
                        };
                        if let JoinTerm::Fixed(node) = side.other {
                            let node = u64::from(node);
                            if node < other_lo || node >= other_lo + child.side {
                                continue;
                            }
                        }
                        by_band[x_band as usize].push((p, child));
                    }
                }
                Ok(by_band)
            };
            let mut left_bands = expand(&band.left, &query.left)?;
            let mut right_bands = expand(&band.right, &query.right)?;
            for j in (0..k).rev() {
                let x_lo = band.x_lo + j as u64 * child_side;
                if x_lo >= x_limit {
                    continue;
                }
                let (l, r) = (left_bands[j].len(), right_bands[j].len());
                if l > 0 && r > 0 {
                    stack.push(Band {
                        x_lo,
                        level: band.level + 1,
                        left: std::mem::take(&mut left_bands[j]),
                        right: std::mem::take(&mut right_bands[j]),
                    });
                } else if l > 0 || r > 0 {
                    trace.pruned_x_bands.push((x_lo, x_lo + child_side));
                }
            }
        }
        Ok((rows, probes, trace))
    }

    /// Emits the cross product of both sides' matches for each x value in
    /// a leaf band.
    fn emit_leaf_band(
        &self,
        query: &JoinQuery,
        band: &Band,
        leaf: u64,
        x_limit: u64,
        rows: &mut Vec<Vec<u32>>,
    ) -> Result<()> {
        // (pred, other value) matches of one side at one x.
        let matches =
            |cursors: &[(u32, NodeCursor)], side: &JoinSide, lx: u64| -> Result<Vec<(u32, u32)>> {
                let mut out = Vec::new();
                for &(p, cur) in cursors {
                    let word = self.tree(p).unwrap().leaf_word(&cur)?;
                    for j in 0..leaf {
                        let (bit, other) = match side.x {
                            XSlot::Subject => (lx * leaf + j, cur.col + j),
                            XSlot::Object => (j * leaf + lx, cur.row + j),
                        };
                        if word >> bit & 1 == 0 {
                            continue;
                        }
                        if let JoinTerm::Fixed(node) = side.other {
                            if u64::from(node) != other {
                                continue;
                            }
                        }
                        out.push((p, other as u32));
                    }
                }
                Ok(out)
            };
        for lx in 0..leaf {
            let x = band.x_lo + lx;
            if x >= x_limit {
                break;
            }
            let lm = matches(&band.left, &query.left, lx)?;
            if lm.is_empty() {
                continue;
            }
            let rm = matches(&band.right, &query.right, lx)?;
            for &(lp, lo) in &lm {
                for &(rp, ro) in &rm {
                    let mut row = Vec::with_capacity(5);
                    row.push(x as u32);
                    push_bindings(&mut row, &query.left, lp, lo);
                    push_bindings(&mut row, &query.right, rp, ro);
                    rows.push(row);
                }
            }
        }
        Ok(())
    }
}

/// Appends one side's free-slot values in subject, predicate, object order.
fn push_bindings(row: &mut Vec<u32>, side: &JoinSide, pred: u32, other: u32) {
    if side.x == XSlot::Object && side.other == JoinTerm::Free {
        row.push(other);
    }
    if side.pred == JoinTerm::Free {
        row.push(pred);
    }
    if side.x == XSlot::Subject && side.other == JoinTerm::Free {
        row.push(other);
    }
}

fn result_columns(query: &JoinQuery) -> Vec<Column> {
    let mut out = vec![Column::X];
    out.extend(query.left.columns(true));
    out.extend(query.right.columns(false));
    out
}
