//! Bit sequences with rank and select support.
//!
//! Bits are packed into 64-bit words. A directory of absolute 1-counts, one
//! per 1024-bit superblock, answers `rank` after scanning at most sixteen
//! words, and `select` binary-searches the same directory before scanning
//! forward. The directory costs one word per sixteen payload words (6.25%)
//! and is rebuilt on load, never serialized.
//!
//! `rank1(i)` counts ones at positions `0..=i` (the prefix through `i`
//! inclusive), so `rank1(i) + rank0(i) = i + 1`. `select1(j)` locates the
//! j-th one counting from one; `select1(0)` answers -1, one position before
//! the start, so that half-open list extraction can uniformly compute
//! `select1(j - 1) + 1` without a branch.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::wire;

const SUPERBLOCK_WORDS: usize = 16;
const SUPERBLOCK_BITS: usize = SUPERBLOCK_WORDS * 64;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitSequence {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    /// Absolute count of ones before each superblock start.
    directory: Vec<u64>,
}

/// Incremental builder; bits arrive in position order.
#[derive(Debug, Clone, Default)]
pub struct BitBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitBuilder {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1u64 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> BitSequence {
        BitSequence::from_words(self.words, self.len)
    }
}

impl BitSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut b = BitBuilder::new();
        for bit in bits {
            b.push(bit);
        }
        b.finish()
    }

    /// Takes pre-packed words; bits beyond `len` in the last word must be 0.
    fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert_eq!(words.len(), len.div_ceil(64));
        let mut seq = BitSequence {
            words,
            len,
            ones: 0,
            directory: Vec::new(),
        };
        seq.rebuild_directory();
        seq
    }

    fn rebuild_directory(&mut self) {
        let blocks = self.words.len().div_ceil(SUPERBLOCK_WORDS);
        self.directory = Vec::with_capacity(blocks);
        let mut acc = 0u64;
        for (w, word) in self.words.iter().enumerate() {
            if w % SUPERBLOCK_WORDS == 0 {
                self.directory.push(acc);
            }
            acc += u64::from(word.count_ones());
        }
        self.ones = acc as usize;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.ones
    }

    /// In-memory size of the rank/select directory, for overhead accounting.
    pub fn directory_bytes(&self) -> usize {
        self.directory.len() * 8
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        if i >= self.len {
            return None;
        }
        Some(self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    /// Ones at positions `0..=i`. `None` when `i` is out of range.
    pub fn rank1(&self, i: usize) -> Option<usize> {
        if i >= self.len {
            return None;
        }
        let block = i / SUPERBLOCK_BITS;
        let mut count = self.directory[block];
        for w in block * SUPERBLOCK_WORDS..i / 64 {
            count += u64::from(self.words[w].count_ones());
        }
        let mask = !0u64 >> (63 - i % 64);
        count += u64::from((self.words[i / 64] & mask).count_ones());
        Some(count as usize)
    }

    /// Zeros at positions `0..=i`. `None` when `i` is out of range.
    pub fn rank0(&self, i: usize) -> Option<usize> {
        let ones = self.rank1(i)?;
        Some(i + 1 - ones)
    }

    /// Position of the j-th one, counting j from 1. `select1(0)` is the
    /// sentinel -1; `None` when fewer than j ones exist.
    pub fn select1(&self, j: usize) -> Option<i64> {
        if j == 0 {
            return Some(-1);
        }
        if j > self.ones {
            return None;
        }
        let j64 = j as u64;
        // Last block whose prefix count is still below j.
        let block = self.directory.partition_point(|&c| c < j64) - 1;
        let mut count = self.directory[block];
        for w in block * SUPERBLOCK_WORDS..self.words.len() {
            let pc = u64::from(self.words[w].count_ones());
            if count + pc >= j64 {
                let within = select_in_word(self.words[w], (j64 - count) as u32);
                return Some((w * 64 + within as usize) as i64);
            }
            count += pc;
        }
        unreachable!("select1 bounds checked against total ones");
    }

    /// Position of the j-th zero, counting j from 1; `select0(0)` is -1.
    pub fn select0(&self, j: usize) -> Option<i64> {
        if j == 0 {
            return Some(-1);
        }
        if j > self.count_zeros() {
            return None;
        }
        let j64 = j as u64;
        let zeros_before = |block: usize| (block * SUPERBLOCK_BITS) as u64 - self.directory[block];
        let mut lo = 0usize;
        let mut hi = self.directory.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if zeros_before(mid) < j64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut count = zeros_before(lo);
        for w in lo * SUPERBLOCK_WORDS..self.words.len() {
            let pc = u64::from((!self.words[w]).count_ones());
            if count + pc >= j64 {
                let within = select_in_word(!self.words[w], (j64 - count) as u32);
                return Some((w * 64 + within as usize) as i64);
            }
            count += pc;
        }
        unreachable!("select0 bounds checked against total zeros");
    }

    /// Format: u64 bit length, then the packed words.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        wire::put_u64(w, self.len as u64)?;
        for word in &self.words {
            wire::put_u64(w, *word)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let len = wire::get_len(r, u64::MAX / 64, "bit sequence")?;
        let n_words = len.div_ceil(64);
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(wire::get_u64(r)?);
        }
        if len % 64 != 0 {
            let tail = *words.last().unwrap();
            if tail >> (len % 64) != 0 {
                return Err(Error::Format("bit sequence has set padding bits".into()));
            }
        }
        Ok(Self::from_words(words, len))
    }

    /// Serialized size in bytes.
    pub fn encoded_bytes(&self) -> usize {
        8 + self.words.len() * 8
    }
}

/// Position of the j-th set bit of `word`; j is 1-based and must not exceed
/// the popcount.
fn select_in_word(word: u64, j: u32) -> u32 {
    let mut w = word;
    for _ in 1..j {
        w &= w - 1;
    }
    w.trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(bits: &[u8]) -> BitSequence {
        BitSequence::from_bits(bits.iter().map(|&b| b == 1))
    }

    #[test]
    fn hand_checked_small_sequence() {
        let b = seq(&[1, 0, 1, 1, 0]);
        assert_eq!(b.len(), 5);
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.rank1(3), Some(3));
        assert_eq!(b.rank0(4), Some(2));
        assert_eq!(b.select1(2), Some(2));
        assert_eq!(b.select1(0), Some(-1));
        assert_eq!(b.select0(1), Some(1));
        assert_eq!(b.get(1), Some(false));
        assert_eq!(b.get(3), Some(true));
    }

    #[test]
    fn select_past_population_is_none() {
        let b = seq(&[0, 1]);
        assert_eq!(b.select1(1), Some(1));
        assert_eq!(b.select1(2), None);
        assert_eq!(b.select0(2), None);
    }

    #[test]
    fn rank_out_of_range_is_none() {
        let b = seq(&[1, 0, 1]);
        assert_eq!(b.rank1(3), None);
        assert_eq!(b.rank0(usize::MAX), None);
        assert_eq!(b.get(3), None);
    }

    #[test]
    fn empty_sequence() {
        let b = BitSequence::new();
        assert_eq!(b.len(), 0);
        assert_eq!(b.rank1(0), None);
        assert_eq!(b.select1(1), None);
        assert_eq!(b.select1(0), Some(-1));
    }

    #[test]
    fn rank_and_select_inverse_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<bool> = (0..3000).map(|_| rng.gen_bool(0.3)).collect();
        let b = BitSequence::from_bits(bits.iter().copied());
        for (i, &bit) in bits.iter().enumerate() {
            let r = b.rank1(i).unwrap();
            assert!(b.select1(r).unwrap() <= i as i64);
            if bit {
                assert_eq!(b.select1(r), Some(i as i64));
            }
        }
        for j in 1..=b.count_ones() {
            let pos = b.select1(j).unwrap() as usize;
            assert_eq!(b.rank1(pos), Some(j));
            assert_eq!(b.get(pos), Some(true));
        }
    }

    #[test]
    fn agrees_with_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..300 {
            let len = match case % 3 {
                0 => rng.gen_range(0..80),
                1 => rng.gen_range(80..700),
                _ => rng.gen_range(700..2200),
            };
            let density = [0.02, 0.5, 0.93][case % 3];
            let bits: Vec<bool> = (0..len).map(|_| rng.gen_bool(density)).collect();
            let b = BitSequence::from_bits(bits.iter().copied());

            let mut ones = 0usize;
            for (i, &bit) in bits.iter().enumerate() {
                assert_eq!(b.get(i), Some(bit));
                if bit {
                    ones += 1;
                }
                assert_eq!(b.rank1(i), Some(ones), "rank1({i}) len {len}");
                assert_eq!(b.rank0(i), Some(i + 1 - ones));
            }
            assert_eq!(b.count_ones(), ones);

            let one_positions: Vec<usize> = (0..len).filter(|&i| bits[i]).collect();
            for (jm1, &pos) in one_positions.iter().enumerate() {
                assert_eq!(b.select1(jm1 + 1), Some(pos as i64));
            }
            assert_eq!(b.select1(one_positions.len() + 1), None);
            let zero_positions: Vec<usize> = (0..len).filter(|&i| !bits[i]).collect();
            for (jm1, &pos) in zero_positions.iter().enumerate() {
                assert_eq!(b.select0(jm1 + 1), Some(pos as i64));
            }
            assert_eq!(b.select0(zero_positions.len() + 1), None);
        }
    }

    #[test]
    fn crosses_superblock_boundaries() {
        // All ones over several superblocks keeps every directory entry hot.
        let n = SUPERBLOCK_BITS * 3 + 17;
        let b = BitSequence::from_bits((0..n).map(|_| true));
        assert_eq!(b.rank1(n - 1), Some(n));
        assert_eq!(b.select1(n), Some((n - 1) as i64));
        assert_eq!(b.select1(SUPERBLOCK_BITS + 1), Some(SUPERBLOCK_BITS as i64));
        assert_eq!(b.select0(1), None);
    }

    #[test]
    fn directory_overhead_within_bounds() {
        let n = 1 << 16;
        let b = BitSequence::from_bits((0..n).map(|i| i % 7 == 0));
        let payload = n / 8;
        assert!(
            b.directory_bytes() * 10 <= payload,
            "directory {} bytes exceeds 10% of {} payload bytes",
            b.directory_bytes(),
            payload
        );
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [0usize, 1, 63, 64, 65, 1024, 5000] {
            let bits: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.4)).collect();
            let b = BitSequence::from_bits(bits.iter().copied());
            let mut buf = Vec::new();
            b.write_to(&mut buf).unwrap();
            assert_eq!(buf.len(), b.encoded_bytes());
            let back = BitSequence::read_from(&mut buf.as_slice()).unwrap();
            assert_eq!(b, back);
            let mut again = Vec::new();
            back.write_to(&mut again).unwrap();
            assert_eq!(buf, again);
        }
    }

    #[test]
    fn truncated_input_is_a_format_error() {
        let b = BitSequence::from_bits((0..200).map(|i| i % 2 == 0));
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        match BitSequence::read_from(&mut buf.as_slice()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn set_padding_bits_rejected() {
        let b = BitSequence::from_bits([true, false, true]);
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        buf[8] |= 0b1000; // bit 3 of a length-3 sequence
        match BitSequence::read_from(&mut buf.as_slice()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
