//! Sparse binary matrices as k²-ary decomposition trees.
//!
//! A square matrix of side `n'` (the logical side padded up, padding all
//! zeros) is split into k×k submatrices, each getting one bit: 1 if it
//! contains any set cell, 0 otherwise. Nonempty submatrices are split
//! recursively. All internal bits live in one levelwise bitstring `T`;
//! recursion stops at `leaf_side`, where each nonempty submatrix becomes one
//! leaf word of `leaf_side²` bits (row-major, least significant bit first).
//!
//! Navigation needs no pointers. The node at `T` position `p` on level `i`
//! is the `rank1(T, p) - ones_before(i)`-th nonempty node of its level, and
//! its children occupy the block of k² bits at that offset inside level
//! `i+1`. With a single branching factor everywhere this collapses to the
//! classic `rank1(T, p) * k²` address into the concatenation of `T` and the
//! leaf bits; with mixed factors the per-level table below keeps the same
//! arithmetic valid.
//!
//! Branching is hybrid: `k_upper` for the first `upper_levels` levels below
//! the root, `k_lower` beneath. The padded side is therefore the smallest
//! `k_upper^u * k_lower^v * leaf_side` covering the logical side, growing
//! `u` to its cap before touching `v`, with at least one internal level.
//!
//! Leaf words are deduplicated through a frequency table: distinct words
//! sorted by descending occurrence count (ties by word value) get codes
//! 0, 1, 2, ..., and the code stream is stored as a byte-chunked
//! [`DacSequence`], so the most frequent submatrix patterns cost one byte.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::bitseq::{BitBuilder, BitSequence};
use crate::dac::DacSequence;
use crate::error::{Error, Result};
use crate::wire;

/// Shape parameters of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct K2Config {
    /// Branching factor of the topmost levels.
    pub k_upper: u8,
    /// How many levels use `k_upper` before switching to `k_lower`.
    pub upper_levels: u8,
    /// Branching factor of the remaining levels.
    pub k_lower: u8,
    /// Side of the submatrices stored as leaf words; a power of `k_lower`
    /// with at most 64 cells.
    pub leaf_side: u8,
}

impl Default for K2Config {
    fn default() -> Self {
        K2Config {
            k_upper: 4,
            upper_levels: 5,
            k_lower: 2,
            leaf_side: 8,
        }
    }
}

impl K2Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(2..=8).contains(&self.k_upper) || !(2..=8).contains(&self.k_lower) {
            return bad(format!(
                "branching factors must lie in 2..=8, got k_upper={} k_lower={}",
                self.k_upper, self.k_lower
            ));
        }
        if self.upper_levels > 16 {
            return bad(format!(
                "upper level cap {} is unreasonable",
                self.upper_levels
            ));
        }
        if self.leaf_side < 2 || u32::from(self.leaf_side).pow(2) > 64 {
            return bad(format!("leaf side {} must lie in 2..=8", self.leaf_side));
        }
        let mut s = self.leaf_side as u64;
        while s > 1 && s.is_multiple_of(self.k_lower as u64) {
            s /= self.k_lower as u64;
        }
        if s != 1 {
            return bad(format!(
                "leaf side {} is not a power of k_lower {}",
                self.leaf_side, self.k_lower
            ));
        }
        Ok(())
    }

    /// Padded side and top-down branching schedule for a logical side.
    fn schedule(&self, side: u64) -> (u64, Vec<u8>) {
        let mut n = self.leaf_side as u64;
        let mut upper = 0u8;
        let mut ks = Vec::new();
        while n < side || ks.is_empty() {
            let k = if upper < self.upper_levels {
                upper += 1;
                self.k_upper
            } else {
                self.k_lower
            };
            ks.push(k);
            n *= k as u64;
        }
        // Built by growing upward from the leaf; the upper factors sit on top.
        ks.sort_unstable_by(|a, b| b.cmp(a));
        (n, ks)
    }
}

/// Per-level navigation table.
#[derive(Debug, Clone, PartialEq, Eq)]
struct LevelInfo {
    /// Branching factor that produced this level's bits: blocks of k².
    k: u8,
    /// First position of the level inside `T`.
    start: usize,
    /// Bits in the level.
    len: usize,
    /// Ones in `T` strictly before `start`.
    ones_before: usize,
    /// Submatrix side of this level's nodes.
    node_side: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K2Tree {
    config: K2Config,
    n_prime: u64,
    levels: Vec<LevelInfo>,
    tree: BitSequence,
    /// Distinct leaf words, most frequent first.
    leaf_table: Vec<u64>,
    /// One table code per nonempty leaf, in level order.
    leaf_codes: DacSequence,
    cells: u64,
}

/// A node reached by [`K2Tree::descend`]. Level 0 is the virtual root
/// covering the whole padded matrix; the deepest level holds the leaf-word
/// nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCursor {
    pub level: usize,
    /// Position in `T`; meaningless at the root.
    pub pos: usize,
    pub row: u64,
    pub col: u64,
    pub side: u64,
    pub bit: bool,
}

impl K2Tree {
    /// Builds the tree over set cells inside a `rows` x `cols` logical
    /// region. Duplicate cells are tolerated; out-of-bounds cells are
    /// rejected.
    pub fn build(cells: &[(u32, u32)], rows: u32, cols: u32, config: K2Config) -> Result<K2Tree> {
        config.validate()?;
        for &(r, c) in cells {
            if u64::from(r) >= u64::from(rows) || u64::from(c) >= u64::from(cols) {
                return Err(Error::InvalidInput(format!(
                    "cell ({r}, {c}) outside {rows} x {cols} region"
                )));
            }
        }
        let mut cells: Vec<(u32, u32)> = cells.to_vec();
        cells.sort_unstable();
        cells.dedup();

        let side = u64::from(rows.max(cols));
        let (n_prime, ks) = config.schedule(side);
        let depth = ks.len();
        let leaf = config.leaf_side as u64;

        struct Pending {
            row0: u64,
            col0: u64,
            cells: Vec<(u32, u32)>,
        }

        let mut bits = BitBuilder::new();
        let mut levels: Vec<LevelInfo> = Vec::with_capacity(depth);
        let mut frontier = vec![Pending {
            row0: 0,
            col0: 0,
            cells,
        }];
        let mut node_side = n_prime;
        let mut ones_before = 0usize;
        for &k in &ks {
            let k = k as u64;
            let child_side = node_side / k;
            let start = bits.len();
            let mut ones_here = 0usize;
            let mut next = Vec::new();
            for node in frontier {
                let mut buckets: Vec<Vec<(u32, u32)>> = vec![Vec::new(); (k * k) as usize];
                for (r, c) in node.cells {
                    let br = (u64::from(r) - node.row0) / child_side;
                    let bc = (u64::from(c) - node.col0) / child_side;
                    buckets[(br * k + bc) as usize].push((r, c));
                }
                for (bi, bucket) in buckets.into_iter().enumerate() {
                    let occupied = !bucket.is_empty();
                    bits.push(occupied);
                    if occupied {
                        ones_here += 1;
                        next.push(Pending {
                            row0: node.row0 + bi as u64 / k * child_side,
                            col0: node.col0 + bi as u64 % k * child_side,
                            cells: bucket,
                        });
                    }
                }
            }
            levels.push(LevelInfo {
                k: k as u8,
                start,
                len: bits.len() - start,
                ones_before,
                node_side: child_side,
            });
            ones_before += ones_here;
            frontier = next;
            node_side = child_side;
        }
        debug_assert_eq!(node_side, leaf);

        let mut cell_total = 0u64;
        let words: Vec<u64> = frontier
            .iter()
            .map(|node| {
                let mut word = 0u64;
                for &(r, c) in &node.cells {
                    let bit = (u64::from(r) - node.row0) * leaf + (u64::from(c) - node.col0);
                    word |= 1u64 << bit;
                }
                cell_total += node.cells.len() as u64;
                word
            })
            .collect();
        let (leaf_table, leaf_codes) = encode_leaf_words(&words);

        Ok(K2Tree {
            config,
            n_prime,
            levels,
            tree: bits.finish(),
            leaf_table,
            leaf_codes,
            cells: cell_total,
        })
    }

    pub fn config(&self) -> K2Config {
        self.config
    }

    /// Padded matrix side.
    pub fn n_prime(&self) -> u64 {
        self.n_prime
    }

    /// Number of set cells.
    pub fn cell_count(&self) -> u64 {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    /// The levelwise internal bitstring.
    pub fn tree(&self) -> &BitSequence {
        &self.tree
    }

    /// Number of stored leaf words.
    pub fn leaf_count(&self) -> usize {
        self.leaf_codes.len()
    }

    /// The i-th leaf word in level order.
    pub fn leaf_word_by_index(&self, i: usize) -> Option<u64> {
        let code = self.leaf_codes.access(i)?;
        Some(self.leaf_table[code as usize])
    }

    fn depth(&self) -> usize {
        self.levels.len()
    }

    /// T position of the first child of the node at `pos` on `level`
    /// (0-based level index; must not be the deepest level).
    fn child_start(&self, level: usize, pos: usize) -> usize {
        let rank = self.tree.rank1(pos).unwrap();
        let block = rank - self.levels[level].ones_before - 1;
        let next = &self.levels[level + 1];
        next.start + block * (next.k as usize).pow(2)
    }

    /// Leaf word index for a set node at the deepest level.
    fn leaf_index(&self, pos: usize) -> usize {
        let last = self.levels.last().unwrap();
        self.tree.rank1(pos).unwrap() - last.ones_before - 1
    }

    fn leaf_word_at(&self, pos: usize) -> u64 {
        let code = self.leaf_codes.access(self.leaf_index(pos)).unwrap();
        self.leaf_table[code as usize]
    }

    /// Is cell (row, col) set? Coordinates at or beyond the padded side are
    /// simply unset.
    pub fn contains(&self, row: u32, col: u32) -> bool {
        let mut visits = 0u64;
        self.contains_v(row, col, &mut visits)
    }

    pub(crate) fn contains_v(&self, row: u32, col: u32, visits: &mut u64) -> bool {
        let (r, c) = (u64::from(row), u64::from(col));
        if r >= self.n_prime || c >= self.n_prime {
            return false;
        }
        let leaf = self.config.leaf_side as u64;
        let mut level = 0usize;
        let mut child_side = self.levels[0].node_side;
        let k = self.levels[0].k as u64;
        let mut pos = (r / child_side * k + c / child_side) as usize;
        let mut r_rem = r % child_side;
        let mut c_rem = c % child_side;
        loop {
            *visits += 1;
            if !self.tree.get(pos).unwrap() {
                return false;
            }
            if level + 1 == self.depth() {
                let word = self.leaf_word_at(pos);
                return word >> (r_rem * leaf + c_rem) & 1 == 1;
            }
            let next = &self.levels[level + 1];
            let k = next.k as u64;
            child_side = next.node_side;
            let ci = r_rem / child_side * k + c_rem / child_side;
            pos = self.child_start(level, pos) + ci as usize;
            r_rem %= child_side;
            c_rem %= child_side;
            level += 1;
        }
    }

    /// Columns set in `row`, ascending.
    pub fn direct_neighbors(&self, row: u32) -> Vec<u32> {
        let mut visits = 0u64;
        self.direct_neighbors_v(row, &mut visits)
    }

    pub(crate) fn direct_neighbors_v(&self, row: u32, visits: &mut u64) -> Vec<u32> {
        self.line_scan(u64::from(row), true, visits)
    }

    /// Rows set in `col`, ascending.
    pub fn reverse_neighbors(&self, col: u32) -> Vec<u32> {
        let mut visits = 0u64;
        self.reverse_neighbors_v(col, &mut visits)
    }

    pub(crate) fn reverse_neighbors_v(&self, col: u32, visits: &mut u64) -> Vec<u32> {
        self.line_scan(u64::from(col), false, visits)
    }

    /// Walks the subtrees intersecting one row (`by_row`) or one column.
    /// Breadth-first in block order, so output positions ascend.
    fn line_scan(&self, fixed: u64, by_row: bool, visits: &mut u64) -> Vec<u32> {
        let mut out = Vec::new();
        if fixed >= self.n_prime || self.cells == 0 {
            return out;
        }
        let leaf = self.config.leaf_side as u64;
        // (level, pos, origin along the scanned axis)
        let mut frontier: Vec<(usize, usize, u64)> = Vec::new();
        let mut next: Vec<(usize, usize, u64)> = Vec::new();
        {
            let info = &self.levels[0];
            let k = info.k as u64;
            let band = fixed / info.node_side;
            for j in 0..k {
                let pos = if by_row { band * k + j } else { j * k + band };
                *visits += 1;
                if self.tree.get(pos as usize).unwrap() {
                    frontier.push((0, pos as usize, j * info.node_side));
                }
            }
        }
        while let Some(&(level, _, _)) = frontier.first() {
            if level + 1 == self.depth() {
                break;
            }
            let fixed_rem = fixed % self.levels[level].node_side;
            let info = &self.levels[level + 1];
            let k = info.k as u64;
            let band = fixed_rem / info.node_side;
            for &(_, pos, origin) in &frontier {
                let start = self.child_start(level, pos);
                for j in 0..k {
                    let ci = if by_row { band * k + j } else { j * k + band };
                    *visits += 1;
                    if self.tree.get(start + ci as usize).unwrap() {
                        next.push((level + 1, start + ci as usize, origin + j * info.node_side));
                    }
                }
            }
            frontier.clear();
            std::mem::swap(&mut frontier, &mut next);
        }
        let local = fixed % leaf;
        for &(_, pos, origin) in &frontier {
            *visits += 1;
            let word = self.leaf_word_at(pos);
            for j in 0..leaf {
                let bit = if by_row {
                    local * leaf + j
                } else {
                    j * leaf + local
                };
                if word >> bit & 1 == 1 {
                    out.push((origin + j) as u32);
                }
            }
        }
        out
    }

    /// Set cells inside the closed rectangle, sorted by (row, col).
    pub fn range(&self, r0: u32, r1: u32, c0: u32, c1: u32) -> Result<Vec<(u32, u32)>> {
        let mut visits = 0u64;
        self.range_v(r0, r1, c0, c1, &mut visits)
    }

    pub(crate) fn range_v(
        &self,
        r0: u32,
        r1: u32,
        c0: u32,
        c1: u32,
        visits: &mut u64,
    ) -> Result<Vec<(u32, u32)>> {
        if r0 > r1 || c0 > c1 {
            return Err(Error::InvalidInput(format!(
                "malformed rectangle ({r0}..={r1}, {c0}..={c1})"
            )));
        }
        if u64::from(r1) >= self.n_prime || u64::from(c1) >= self.n_prime {
            return Err(Error::OutOfRange {
                what: "rectangle bound",
                index: u64::from(r1.max(c1)),
                limit: self.n_prime,
            });
        }
        let (r0, r1, c0, c1) = (u64::from(r0), u64::from(r1), u64::from(c0), u64::from(c1));
        let mut out = Vec::new();
        if self.cells == 0 {
            return Ok(out);
        }
        let leaf = self.config.leaf_side as u64;
        // (level, pos, row origin, col origin)
        let mut stack: Vec<(usize, usize, u64, u64)> = Vec::new();
        {
            let info = &self.levels[0];
            let k = info.k as u64;
            for bi in 0..k * k {
                let (row, col) = (bi / k * info.node_side, bi % k * info.node_side);
                if row <= r1 && row + info.node_side > r0 && col <= c1 && col + info.node_side > c0
                {
                    *visits += 1;
                    if self.tree.get(bi as usize).unwrap() {
                        stack.push((0, bi as usize, row, col));
                    }
                }
            }
        }
        while let Some((level, pos, row, col)) = stack.pop() {
            if level + 1 == self.depth() {
                *visits += 1;
                let word = self.leaf_word_at(pos);
                for i in 0..leaf {
                    let r = row + i;
                    if r < r0 || r > r1 {
                        continue;
                    }
                    for j in 0..leaf {
                        let c = col + j;
                        if c >= c0 && c <= c1 && word >> (i * leaf + j) & 1 == 1 {
                            out.push((r as u32, c as u32));
                        }
                    }
                }
                continue;
            }
            let info = &self.levels[level + 1];
            let k = info.k as u64;
            let start = self.child_start(level, pos);
            for bi in 0..k * k {
                let (cr, cc) = (row + bi / k * info.node_side, col + bi % k * info.node_side);
                if cr <= r1 && cr + info.node_side > r0 && cc <= c1 && cc + info.node_side > c0 {
                    *visits += 1;
                    if self.tree.get(start + bi as usize).unwrap() {
                        stack.push((level + 1, start + bi as usize, cr, cc));
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Virtual root cursor covering the whole padded matrix.
    pub fn root(&self) -> NodeCursor {
        NodeCursor {
            level: 0,
            pos: usize::MAX,
            row: 0,
            col: 0,
            side: self.n_prime,
            bit: self.cells != 0,
        }
    }

    /// The k² children of a set internal node, in row-major block order.
    pub fn descend(&self, cur: &NodeCursor) -> Result<Vec<NodeCursor>> {
        if !cur.bit {
            return Err(Error::BadCursor("descend from an empty node"));
        }
        if cur.level >= self.depth() {
            return Err(Error::BadCursor("descend from a leaf-level node"));
        }
        let info = &self.levels[cur.level];
        let k = info.k as u64;
        let start = if cur.level == 0 {
            0
        } else {
            self.child_start(cur.level - 1, cur.pos)
        };
        let mut out = Vec::with_capacity((k * k) as usize);
        for bi in 0..k * k {
            let pos = start + bi as usize;
            out.push(NodeCursor {
                level: cur.level + 1,
                pos,
                row: cur.row + bi / k * info.node_side,
                col: cur.col + bi % k * info.node_side,
                side: info.node_side,
                bit: self.tree.get(pos).unwrap(),
            });
        }
        Ok(out)
    }

    /// Leaf word of a set node at the deepest level.
    pub fn leaf_word(&self, cur: &NodeCursor) -> Result<u64> {
        if !cur.bit {
            return Err(Error::BadCursor("leaf word of an empty node"));
        }
        if cur.level != self.depth() {
            return Err(Error::BadCursor("leaf word of an internal node"));
        }
        Ok(self.leaf_word_at(cur.pos))
    }

    /// Length in bits of the internal navigation bitstring.
    pub fn internal_bits(&self) -> usize {
        self.tree.len()
    }

    /// Serialized byte sizes of the internal bitstring and of the leaf
    /// storage (code stream plus word table).
    pub fn structure_bytes(&self) -> (usize, usize) {
        let t = self.tree.encoded_bytes();
        let l = self.leaf_codes.encoded_bytes() + 8 + self.leaf_table.len() * 8;
        (t, l)
    }

    /// Checks the structural bookkeeping: level sizes chain by rank, every
    /// set deepest-level node owns a nonzero leaf word, codes stay inside
    /// the table, and the table is ordered by descending frequency.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        let k0 = self.levels[0].k as usize;
        if self.levels[0].len != k0 * k0 || self.levels[0].start != 0 {
            return fail("level 1 must hold exactly the root children".into());
        }
        let mut expect_total = 0usize;
        for i in 0..self.levels.len() {
            let info = &self.levels[i];
            if info.start != expect_total {
                return fail(format!("level {i} start {} out of place", info.start));
            }
            expect_total += info.len;
            let ones = if info.len == 0 {
                0
            } else {
                self.tree.rank1(info.start + info.len - 1).unwrap() - info.ones_before
            };
            if let Some(next) = self.levels.get(i + 1) {
                let kn = next.k as usize;
                if next.len != ones * kn * kn {
                    return fail(format!("level {} size breaks the rank chain", i + 1));
                }
                if next.ones_before != info.ones_before + ones {
                    return fail(format!("level {} ones_before is wrong", i + 1));
                }
            } else {
                if self.leaf_codes.len() != ones {
                    return fail("leaf count differs from deepest-level ones".into());
                }
            }
        }
        if expect_total != self.tree.len() {
            return fail("level sizes do not cover T".into());
        }
        let leaf_bits = u32::from(self.config.leaf_side).pow(2);
        let mask = if leaf_bits == 64 {
            !0u64
        } else {
            (1u64 << leaf_bits) - 1
        };
        let mut freq = vec![0u64; self.leaf_table.len()];
        let mut total = 0u64;
        for code in self.leaf_codes.iter() {
            let Some(f) = freq.get_mut(code as usize) else {
                return fail(format!("leaf code {code} outside the table"));
            };
            *f += 1;
            let word = self.leaf_table[code as usize];
            if word == 0 {
                return fail("a set leaf node holds an all-zero word".into());
            }
            if word & !mask != 0 {
                return fail("leaf word sets bits outside the leaf".into());
            }
            total += u64::from(word.count_ones());
        }
        if total != self.cells {
            return fail(format!("cell count {} but leaf bits {total}", self.cells));
        }
        for w in self.leaf_table.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (
                freq[self.leaf_table.iter().position(|&x| x == a).unwrap()],
                freq[self.leaf_table.iter().position(|&x| x == b).unwrap()],
            );
            if fa < fb || (fa == fb && a >= b) {
                return fail("leaf table not in descending frequency order".into());
            }
        }
        Ok(())
    }

    /// Format: four config bytes, u64 padded side, the `T` bit sequence,
    /// the leaf word table, and the leaf code stream. The level table is
    /// rebuilt on load.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        wire::put_u8(w, self.config.k_upper)?;
        wire::put_u8(w, self.config.upper_levels)?;
        wire::put_u8(w, self.config.k_lower)?;
        wire::put_u8(w, self.config.leaf_side)?;
        wire::put_u64(w, self.n_prime)?;
        self.tree.write_to(w)?;
        wire::put_u64(w, self.leaf_table.len() as u64)?;
        for &word in &self.leaf_table {
            wire::put_u64(w, word)?;
        }
        self.leaf_codes.write_to(w)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<K2Tree> {
        let config = K2Config {
            k_upper: wire::get_u8(r)?,
            upper_levels: wire::get_u8(r)?,
            k_lower: wire::get_u8(r)?,
            leaf_side: wire::get_u8(r)?,
        };
        config
            .validate()
            .map_err(|e| Error::Format(e.to_string()))?;
        let n_prime = wire::get_u64(r)?;
        let (expect, ks) = config.schedule(n_prime);
        if expect != n_prime {
            return Err(Error::Format(format!("padded side {n_prime} off schedule")));
        }
        let tree = BitSequence::read_from(r)?;
        let table_len = wire::get_len(r, 1 << 32, "leaf table")?;
        let mut leaf_table = Vec::with_capacity(table_len);
        for _ in 0..table_len {
            leaf_table.push(wire::get_u64(r)?);
        }
        let leaf_codes = DacSequence::read_from(r)?;

        // Re-derive the level table by chaining rank over level sizes.
        let mut levels = Vec::with_capacity(ks.len());
        let mut node_side = n_prime;
        let mut start = 0usize;
        let mut ones_before = 0usize;
        for (i, &k) in ks.iter().enumerate() {
            node_side /= k as u64;
            let len = if i == 0 {
                (k as usize).pow(2)
            } else {
                let prev: &LevelInfo = &levels[i - 1];
                let prev_ones = if prev.len == 0 {
                    0
                } else {
                    tree.rank1(prev.start + prev.len - 1)
                        .ok_or_else(|| Error::Format("T shorter than its levels".into()))?
                        - prev.ones_before
                };
                prev_ones * (k as usize).pow(2)
            };
            if start + len > tree.len() {
                return Err(Error::Format("T shorter than its levels".into()));
            }
            levels.push(LevelInfo {
                k,
                start,
                len,
                ones_before,
                node_side,
            });
            let ones = if len == 0 {
                0
            } else {
                tree.rank1(start + len - 1).unwrap() - ones_before
            };
            start += len;
            ones_before += ones;
        }
        if start != tree.len() {
            return Err(Error::Format("T longer than its levels".into()));
        }
        let last = levels.last().unwrap();
        let deep_ones = if last.len == 0 {
            0
        } else {
            tree.rank1(last.start + last.len - 1).unwrap() - last.ones_before
        };
        if leaf_codes.len() != deep_ones {
            return Err(Error::Format("leaf stream length mismatch".into()));
        }
        let mut cells = 0u64;
        for code in leaf_codes.iter() {
            let word = *leaf_table
                .get(code as usize)
                .ok_or_else(|| Error::Format(format!("leaf code {code} outside the table")))?;
            cells += u64::from(word.count_ones());
        }
        Ok(K2Tree {
            config,
            n_prime,
            levels,
            tree,
            leaf_table,
            leaf_codes,
            cells,
        })
    }
}

/// Maps leaf words to codes by descending frequency (ties broken by word
/// value) and DAC-codes the stream with byte chunks.
fn encode_leaf_words(words: &[u64]) -> (Vec<u64>, DacSequence) {
    let mut freq: HashMap<u64, u64> = HashMap::new();
    for &w in words {
        *freq.entry(w).or_insert(0) += 1;
    }
    let mut table: Vec<(u64, u64)> = freq.into_iter().collect();
    table.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let table: Vec<u64> = table.into_iter().map(|(w, _)| w).collect();
    let code_of: HashMap<u64, u64> = table
        .iter()
        .enumerate()
        .map(|(i, &w)| (w, i as u64))
        .collect();
    let codes: Vec<u64> = words.iter().map(|w| code_of[w]).collect();
    (table, DacSequence::from_values(&codes, 8))
}
