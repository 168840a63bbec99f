//! Per-entity predicate lists with a deduplicated list vocabulary.
//!
//! For one axis (subjects or objects), entity `e` owns the ascending list
//! of distinct predicates it participates in. Real datasets repeat a small
//! number of list shapes constantly — every person node tends to carry the
//! same predicates — so the distinct lists form a vocabulary and each
//! entity stores only a reference:
//!
//! * `ids` — one vocabulary reference per entity, byte-chunked
//!   [`DacSequence`] (code 0 marks an empty list, so references are the
//!   1-based vocabulary position);
//! * `seq` — the vocabulary lists concatenated, fixed-width packed
//!   predicate IDs;
//! * `ends` — a bit per `seq` position, 1 on the last element of each list.
//!
//! The vocabulary is ordered by descending list frequency (ties keep the
//! order in which lists are first seen while scanning entities), so hot
//! references compress to single bytes. List `v` (1-based) spans
//! `seq[select1(ends, v-1)+1 ..= select1(ends, v)]`.
//!
//! The index answers two questions cheaply without touching any matrix:
//! which predicates does this entity use, and does this entity use
//! predicate p at all. The store consults it before descending a tree and
//! when a query leaves the predicate unbound.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::bitseq::{BitBuilder, BitSequence};
use crate::dac::DacSequence;
use crate::error::{Error, Result};
use crate::packed::PackedInts;

#[derive(Debug, Clone, PartialEq)]
pub struct PredIndex {
    ids: DacSequence,
    seq: PackedInts,
    ends: BitSequence,
}

impl PredIndex {
    /// Builds the index from one ascending, duplicate-free predicate list
    /// per entity (entity = slice position).
    pub fn build(lists: &[Vec<u32>]) -> Result<PredIndex> {
        for (e, list) in lists.iter().enumerate() {
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidInput(format!(
                    "predicate list of entity {e} is not strictly ascending"
                )));
            }
        }
        // Vocabulary: distinct nonempty lists by descending frequency,
        // first-seen order breaking ties.
        let mut stats: HashMap<&[u32], (u64, usize)> = HashMap::new();
        for (e, list) in lists.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let entry = stats.entry(list.as_slice()).or_insert((0, e));
            entry.0 += 1;
        }
        let mut vocab: Vec<(&[u32], u64, usize)> = stats
            .into_iter()
            .map(|(l, (n, first))| (l, n, first))
            .collect();
        vocab.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let mut code_of: HashMap<&[u32], u64> = HashMap::new();
        let max_pred = lists
            .iter()
            .flat_map(|l| l.iter().copied())
            .max()
            .unwrap_or(0);
        let mut seq = PackedInts::new(PackedInts::width_for(u64::from(max_pred)));
        let mut ends = BitBuilder::new();
        for (v, &(list, _, _)) in vocab.iter().enumerate() {
            code_of.insert(list, v as u64 + 1);
            for (i, &p) in list.iter().enumerate() {
                seq.push(u64::from(p));
                ends.push(i + 1 == list.len());
            }
        }
        let ids: Vec<u64> = lists
            .iter()
            .map(|l| {
                if l.is_empty() {
                    0
                } else {
                    code_of[l.as_slice()]
                }
            })
            .collect();
        Ok(PredIndex {
            ids: DacSequence::from_values(&ids, 4),
            seq,
            ends: ends.finish(),
        })
    }

    /// Number of entities covered.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of distinct nonempty lists.
    pub fn vocab_len(&self) -> usize {
        self.ends.count_ones()
    }

    /// Vocabulary reference of the entity: 0 for an empty list, otherwise
    /// the 1-based vocabulary position.
    pub fn list_code(&self, entity: u32) -> Option<u64> {
        self.ids.access(entity as usize)
    }

    /// The 1-based vocabulary list, decoded.
    pub fn vocab_list(&self, code: u64) -> Option<Vec<u32>> {
        if code == 0 || code as usize > self.vocab_len() {
            return None;
        }
        let lo = (self.ends.select1(code as usize - 1).unwrap() + 1) as usize;
        let hi = self.ends.select1(code as usize).unwrap() as usize;
        Some((lo..=hi).map(|i| self.seq.get(i).unwrap() as u32).collect())
    }

    /// Ascending distinct predicates of the entity; empty when the entity
    /// is unknown or has none.
    pub fn predicates_of(&self, entity: u32) -> Vec<u32> {
        match self.list_code(entity) {
            None | Some(0) => Vec::new(),
            Some(code) => self.vocab_list(code).unwrap(),
        }
    }

    /// Does the entity participate in predicate `pred`?
    pub fn contains(&self, entity: u32, pred: u32) -> bool {
        match self.list_code(entity) {
            None | Some(0) => false,
            Some(code) => {
                let lo = (self.ends.select1(code as usize - 1).unwrap() + 1) as usize;
                let hi = self.ends.select1(code as usize).unwrap() as usize;
                (lo..=hi).any(|i| self.seq.get(i) == Some(u64::from(pred)))
            }
        }
    }

    pub fn encoded_bytes(&self) -> usize {
        self.ids.encoded_bytes() + self.seq.encoded_bytes() + self.ends.encoded_bytes()
    }

    /// Checks reference bounds, list shape, and the frequency ordering of
    /// the vocabulary.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        if self.seq.len() != self.ends.len() {
            return fail("seq and ends lengths differ".into());
        }
        if !self.seq.is_empty() && self.ends.get(self.seq.len() - 1) != Some(true) {
            return fail("last seq position does not close a list".into());
        }
        let vocab = self.vocab_len();
        let mut freq = vec![0u64; vocab];
        let mut first = vec![usize::MAX; vocab];
        for (e, code) in self.ids.iter().enumerate() {
            if code == 0 {
                continue;
            }
            if code as usize > vocab {
                return fail(format!("entity {e} references missing list {code}"));
            }
            let v = code as usize - 1;
            freq[v] += 1;
            first[v] = first[v].min(e);
        }
        for (v, &count) in freq.iter().enumerate() {
            if count == 0 {
                return fail(format!("vocabulary list {} is unreferenced", v + 1));
            }
            let list = self.vocab_list(v as u64 + 1).unwrap();
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return fail(format!("vocabulary list {} is not ascending", v + 1));
            }
        }
        for v in 1..vocab {
            let ordered =
                freq[v - 1] > freq[v] || (freq[v - 1] == freq[v] && first[v - 1] < first[v]);
            if !ordered {
                return fail(format!("vocabulary lists {v} and {} out of order", v + 1));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        self.ids.write_to(w)?;
        self.seq.write_to(w)?;
        self.ends.write_to(w)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<PredIndex> {
        let out = PredIndex {
            ids: DacSequence::read_from(r)?,
            seq: PackedInts::read_from(r)?,
            ends: BitSequence::read_from(r)?,
        };
        out.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(out)
    }
}

/// Collects the ascending distinct predicate list per entity from (entity,
/// predicate) pairs; `entities` fixes the number of lists.
pub fn lists_from_pairs(
    entities: usize,
    pairs: impl IntoIterator<Item = (u32, u32)>,
) -> Vec<Vec<u32>> {
    let mut lists = vec![Vec::new(); entities];
    let mut sorted: Vec<(u32, u32)> = pairs.into_iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    for (e, p) in sorted {
        lists[e as usize].push(p);
    }
    lists
}
