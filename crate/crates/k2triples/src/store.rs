//! The triple store: one sparse matrix per predicate plus two list indexes.
//!
//! Triples are partitioned by predicate. Predicate `p` becomes a boolean
//! matrix with subject rows and object columns, stored as a [`K2Tree`];
//! all matrices share one coordinate system given by the [`Dictionary`],
//! whose shared range makes a subject ID and an object ID comparable when
//! the underlying term is the same.
//!
//! Two [`PredIndex`] structures complete the layout: `sp` maps every
//! subject to the predicates it uses, `op` does the same for objects.
//! They answer the patterns that leave the predicate unbound without
//! touching every matrix, and they prune fixed-predicate lookups to the
//! matrices that can possibly match.
//!
//! [`TripleStore::resolve`] serves all eight triple patterns with a firm
//! ordering contract: fixed-predicate results order by (subject, object),
//! the rest by (predicate, subject, object). Fixed IDs outside the
//! dictionary simply match nothing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::k2tree::{K2Config, K2Tree};
use crate::predindex::{lists_from_pairs, PredIndex};
use crate::wire;

const MAGIC: [u8; 4] = *b"K2TR";
const VERSION: u32 = 1;

/// A fully bound (subject, predicate, object) id triple.
pub type Triple = (u32, u32, u32);

/// A triple pattern: `None` marks an unbound position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriplePattern {
    pub s: Option<u32>,
    pub p: Option<u32>,
    pub o: Option<u32>,
}

impl TriplePattern {
    pub fn new(s: Option<u32>, p: Option<u32>, o: Option<u32>) -> Self {
        TriplePattern { s, p, o }
    }
}

/// Work counters for one pattern resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolveStats {
    /// Matrices whose tree was actually traversed.
    pub trees_visited: u64,
    /// Tree nodes (including leaf words) inspected across those traversals.
    pub nodes_visited: u64,
}

/// Serialized size of each component, in bytes.
#[derive(Debug, Clone, Copy, Default)]
pub struct StorageBreakdown {
    pub dict_bytes: usize,
    /// Internal bitstrings of all matrices.
    pub tree_bytes: usize,
    /// Leaf code streams and word tables of all matrices.
    pub leaf_bytes: usize,
    pub sp_bytes: usize,
    pub op_bytes: usize,
    /// Whole store file, headers included.
    pub total_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleStore {
    dict: Dictionary,
    config: K2Config,
    trees: Vec<K2Tree>,
    sp: PredIndex,
    op: PredIndex,
}

impl TripleStore {
    /// Builds from string triples in canonical term form. The input is
    /// treated as a set: duplicates collapse.
    pub fn from_str_triples(
        triples: &[(String, String, String)],
        config: K2Config,
    ) -> Result<TripleStore> {
        let dict = Dictionary::build(
            triples.iter().map(|(s, _, _)| s.as_str()),
            triples.iter().map(|(_, p, _)| p.as_str()),
            triples.iter().map(|(_, _, o)| o.as_str()),
        )?;
        let ids: Vec<Triple> = triples
            .iter()
            .map(|(s, p, o)| {
                (
                    dict.subject_id(s).unwrap(),
                    dict.predicate_id(p).unwrap(),
                    dict.object_id(o).unwrap(),
                )
            })
            .collect();
        TripleStore::from_id_triples(dict, &ids, config)
    }

    /// Builds from already-encoded ID triples over `dict`.
    pub fn from_id_triples(
        dict: Dictionary,
        triples: &[Triple],
        config: K2Config,
    ) -> Result<TripleStore> {
        config.validate()?;
        let (rows, cols) = (dict.num_subjects(), dict.num_objects());
        let preds = dict.num_predicates();
        for &(s, p, o) in triples {
            if s as usize >= rows || p as usize >= preds || o as usize >= cols {
                return Err(Error::InvalidInput(format!(
                    "triple ({s}, {p}, {o}) outside dictionary ranges"
                )));
            }
        }
        let mut ids: Vec<Triple> = triples.to_vec();
        ids.sort_unstable();
        ids.dedup();

        let mut by_pred: Vec<Vec<(u32, u32)>> = vec![Vec::new(); preds];
        for &(s, p, o) in &ids {
            by_pred[p as usize].push((s, o));
        }
        let trees = by_pred
            .iter()
            .map(|cells| K2Tree::build(cells, rows as u32, cols as u32, config))
            .collect::<Result<Vec<_>>>()?;
        let sp = PredIndex::build(&lists_from_pairs(rows, ids.iter().map(|&(s, p, _)| (s, p))))?;
        let op = PredIndex::build(&lists_from_pairs(cols, ids.iter().map(|&(_, p, o)| (o, p))))?;
        Ok(TripleStore {
            dict,
            config,
            trees,
            sp,
            op,
        })
    }

    pub fn dict(&self) -> &Dictionary {
        &self.dict
    }

    pub fn config(&self) -> K2Config {
        self.config
    }

    pub fn triple_count(&self) -> u64 {
        self.trees.iter().map(|t| t.cell_count()).sum()
    }

    pub fn num_predicates(&self) -> usize {
        self.trees.len()
    }

    /// Triples under one predicate.
    pub fn predicate_cardinality(&self, p: u32) -> Option<u64> {
        self.trees.get(p as usize).map(|t| t.cell_count())
    }

    /// Shared padded matrix side (0 when the store holds no predicates).
    pub fn n_prime(&self) -> u64 {
        self.trees.first().map_or(0, |t| t.n_prime())
    }

    pub(crate) fn tree(&self, p: u32) -> Option<&K2Tree> {
        self.trees.get(p as usize)
    }

    pub fn sp_index(&self) -> &PredIndex {
        &self.sp
    }

    pub fn op_index(&self) -> &PredIndex {
        &self.op
    }

    /// All matches of a pattern, fully materialized. Fixed-predicate
    /// results order by (s, o); unbound-predicate results by (p, s, o).
    pub fn resolve(&self, pat: TriplePattern) -> Result<Vec<Triple>> {
        Ok(self.resolve_with_stats(pat)?.0)
    }

    /// Like [`resolve`](Self::resolve), also reporting traversal work.
    pub fn resolve_with_stats(&self, pat: TriplePattern) -> Result<(Vec<Triple>, ResolveStats)> {
        let mut st = ResolveStats::default();
        let mut out = Vec::new();
        let rows = self.dict.num_subjects() as u32;
        let cols = self.dict.num_objects() as u32;
        // A fixed id beyond its range matches nothing.
        if pat.s.is_some_and(|s| s >= rows)
            || pat.o.is_some_and(|o| o >= cols)
            || pat.p.is_some_and(|p| p as usize >= self.trees.len())
        {
            return Ok((out, st));
        }
        match (pat.s, pat.p, pat.o) {
            (Some(s), Some(p), Some(o)) => {
                if self.sp.contains(s, p) {
                    st.trees_visited += 1;
                    if self.trees[p as usize].contains_v(s, o, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (Some(s), Some(p), None) => {
                if self.sp.contains(s, p) {
                    st.trees_visited += 1;
                    for o in self.trees[p as usize].direct_neighbors_v(s, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (None, Some(p), Some(o)) => {
                if self.op.contains(o, p) {
                    st.trees_visited += 1;
                    for s in self.trees[p as usize].reverse_neighbors_v(o, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (None, Some(p), None) => {
                let tree = &self.trees[p as usize];
                if !tree.is_empty() {
                    st.trees_visited += 1;
                    for (s, o) in tree.range_v(0, rows - 1, 0, cols - 1, &mut st.nodes_visited)? {
                        out.push((s, p, o));
                    }
                }
            }
            (Some(s), None, Some(o)) => {
                for p in intersect(&self.sp.predicates_of(s), &self.op.predicates_of(o)) {
                    st.trees_visited += 1;
                    if self.trees[p as usize].contains_v(s, o, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (Some(s), None, None) => {
                for p in self.sp.predicates_of(s) {
                    st.trees_visited += 1;
                    for o in self.trees[p as usize].direct_neighbors_v(s, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (None, None, Some(o)) => {
                for p in self.op.predicates_of(o) {
                    st.trees_visited += 1;
                    for s in self.trees[p as usize].reverse_neighbors_v(o, &mut st.nodes_visited) {
                        out.push((s, p, o));
                    }
                }
            }
            (None, None, None) => {
                for (p, tree) in self.trees.iter().enumerate() {
                    if tree.is_empty() {
                        continue;
                    }
                    st.trees_visited += 1;
                    for (s, o) in tree.range_v(0, rows - 1, 0, cols - 1, &mut st.nodes_visited)? {
                        out.push((s, p as u32, o));
                    }
                }
            }
        }
        Ok((out, st))
    }

    /// Rough match-count estimate used to pick join directions; cheap
    /// (index lookups and cardinalities only), never zero unless the
    /// pattern provably matches nothing.
    pub(crate) fn estimate(&self, pat: TriplePattern) -> u64 {
        let rows = (self.dict.num_subjects() as u64).max(1);
        let cols = (self.dict.num_objects() as u64).max(1);
        let card = |p: u32| self.trees[p as usize].cell_count();
        let out_of_range = pat
            .s
            .is_some_and(|s| s as usize >= self.dict.num_subjects())
            || pat.o.is_some_and(|o| o as usize >= self.dict.num_objects())
            || pat.p.is_some_and(|p| p as usize >= self.trees.len());
        if out_of_range {
            return 0;
        }
        match (pat.s, pat.p, pat.o) {
            (Some(s), Some(p), Some(o)) => {
                u64::from(self.sp.contains(s, p) && self.op.contains(o, p))
            }
            (Some(s), Some(p), None) => {
                if self.sp.contains(s, p) {
                    (card(p) / rows).max(1)
                } else {
                    0
                }
            }
            (None, Some(p), Some(o)) => {
                if self.op.contains(o, p) {
                    (card(p) / cols).max(1)
                } else {
                    0
                }
            }
            (None, Some(p), None) => card(p),
            (Some(s), None, Some(o)) => {
                intersect(&self.sp.predicates_of(s), &self.op.predicates_of(o)).len() as u64
            }
            (Some(s), None, None) => self
                .sp
                .predicates_of(s)
                .iter()
                .map(|&p| (card(p) / rows).max(1))
                .sum(),
            (None, None, Some(o)) => self
                .op
                .predicates_of(o)
                .iter()
                .map(|&p| (card(p) / cols).max(1))
                .sum(),
            (None, None, None) => self.triple_count(),
        }
    }

    pub fn storage(&self) -> StorageBreakdown {
        let mut b = StorageBreakdown {
            dict_bytes: self.dict.encoded_bytes(),
            sp_bytes: self.sp.encoded_bytes(),
            op_bytes: self.op.encoded_bytes(),
            ..StorageBreakdown::default()
        };
        for t in &self.trees {
            let (tb, lb) = t.structure_bytes();
            b.tree_bytes += tb;
            b.leaf_bytes += lb;
        }
        let mut buf = Vec::new();
        self.write_to(&mut buf).unwrap();
        b.total_bytes = buf.len();
        b
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        wire::put_u32(w, VERSION)?;
        self.dict.write_to(w)?;
        wire::put_u64(w, self.dict.num_subjects() as u64)?;
        wire::put_u64(w, self.dict.num_objects() as u64)?;
        wire::put_u64(w, self.n_prime())?;
        wire::put_u64(w, self.trees.len() as u64)?;
        for t in &self.trees {
            t.write_to(w)?;
        }
        self.sp.write_to(w)?;
        self.op.write_to(w)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<TripleStore> {
        let mut magic = [0u8; 4];
        wire::get_exact(r, &mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("not a triple store file".into()));
        }
        let version = wire::get_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dict = Dictionary::read_from(r)?;
        let rows = wire::get_u64(r)?;
        let cols = wire::get_u64(r)?;
        let n_prime = wire::get_u64(r)?;
        if rows != dict.num_subjects() as u64 || cols != dict.num_objects() as u64 {
            return Err(Error::Format("geometry disagrees with dictionary".into()));
        }
        let preds = wire::get_len(r, 1 << 32, "predicate")?;
        if preds != dict.num_predicates() {
            return Err(Error::Format(
                "matrix count disagrees with dictionary".into(),
            ));
        }
        let mut trees = Vec::with_capacity(preds.min(1 << 20));
        for _ in 0..preds {
            trees.push(K2Tree::read_from(r)?);
        }
        let config = trees.first().map_or(K2Config::default(), |t| t.config());
        for t in &trees {
            if t.config() != config || t.n_prime() != n_prime {
                return Err(Error::Format("matrices disagree on shape".into()));
            }
        }
        if trees.is_empty() && n_prime != 0 {
            return Err(Error::Format(
                "padded side recorded without matrices".into(),
            ));
        }
        let sp = PredIndex::read_from(r)?;
        let op = PredIndex::read_from(r)?;
        if sp.len() != rows as usize || op.len() != cols as usize {
            return Err(Error::Format(
                "list index sizes disagree with geometry".into(),
            ));
        }
        Ok(TripleStore {
            dict,
            config,
            trees,
            sp,
            op,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TripleStore> {
        let mut r = BufReader::new(File::open(path)?);
        let store = TripleStore::read_from(&mut r)?;
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after store".into()));
        }
        Ok(store)
    }
}

/// Intersection of two ascending lists, ascending.
pub(crate) fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}
