//! Variable-length integer sequences with direct access.
//!
//! Each value is split into fixed-width chunks, least significant first.
//! Level l holds the l-th chunk of every value long enough to reach it,
//! plus a continuation bitmap: bit 1 means the value goes on in the next
//! level, bit 0 means its codeword ends here. Rank over the bitmap maps a
//! position at one level to the value's position at the next, so reading
//! value i costs one chunk and one rank per level it spans:
//!
//! ```text
//! value(i) = A1[i1] + A2[i2]·2^b + A3[i3]·2^2b + ...   with i1 = i,
//! i_{l+1} = rank1(B_l, i_l) - 1
//! ```
//!
//! Small values therefore occupy few chunks, and a frequency-skewed input
//! (most values small) beats fixed-width storage. Chunk width 4 suits the
//! predicate-list identifiers, width 8 the leaf codes of the matrix trees.

use std::io::{Read, Write};

use crate::bitseq::{BitBuilder, BitSequence};
use crate::error::{Error, Result};
use crate::packed::PackedInts;
use crate::wire;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DacSequence {
    chunk_width: u8,
    len: usize,
    levels: Vec<DacLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DacLevel {
    chunks: PackedInts,
    cont: BitSequence,
}

impl DacSequence {
    /// Encodes `values` with `chunk_width`-bit chunks (1 to 64 bits).
    pub fn from_values(values: &[u64], chunk_width: u8) -> Self {
        assert!(
            (1..=64).contains(&chunk_width),
            "chunk width {chunk_width} out of 1..=64"
        );
        let b = chunk_width as u32;
        let mask = if b == 64 { !0u64 } else { (1u64 << b) - 1 };
        let max_levels = 64usize.div_ceil(b as usize);

        let mut chunks: Vec<PackedInts> = Vec::new();
        let mut conts: Vec<BitBuilder> = Vec::new();
        for &v in values {
            let mut rest = v;
            for level in 0..max_levels {
                if level == chunks.len() {
                    chunks.push(PackedInts::new(chunk_width));
                    conts.push(BitBuilder::new());
                }
                chunks[level].push(rest & mask);
                rest = if b == 64 { 0 } else { rest >> b };
                let more = rest != 0;
                conts[level].push(more);
                if !more {
                    break;
                }
            }
        }
        let levels = chunks
            .into_iter()
            .zip(conts)
            .map(|(chunks, cont)| DacLevel {
                chunks,
                cont: cont.finish(),
            })
            .collect();
        DacSequence {
            chunk_width,
            len: values.len(),
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn chunk_width(&self) -> u8 {
        self.chunk_width
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Chunk count and continuation population of one level, for auditing
    /// the level-size recurrence.
    pub fn level_shape(&self, level: usize) -> Option<(usize, usize)> {
        let l = self.levels.get(level)?;
        Some((l.chunks.len(), l.cont.count_ones()))
    }

    /// Value at position `i`, or `None` past the end.
    pub fn access(&self, i: usize) -> Option<u64> {
        if i >= self.len {
            return None;
        }
        let b = self.chunk_width as u32;
        let mut idx = i;
        let mut value = 0u64;
        let mut shift = 0u32;
        for level in &self.levels {
            value |= level.chunks.get(idx).unwrap() << shift;
            if !level.cont.get(idx).unwrap() {
                return Some(value);
            }
            idx = level.cont.rank1(idx).unwrap() - 1;
            shift += b;
        }
        unreachable!("every codeword terminates within the level cap");
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.access(i).unwrap())
    }

    /// Payload bits across all levels (chunks plus continuation bitmaps),
    /// the number to compare against fixed-width storage.
    pub fn payload_bits(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.chunks.bits() + l.cont.len())
            .sum()
    }

    /// Format: u8 chunk width, u64 value count, u8 level count, then per
    /// level the packed chunk array and the continuation bit sequence.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        wire::put_u8(w, self.chunk_width)?;
        wire::put_u64(w, self.len as u64)?;
        wire::put_u8(w, self.levels.len() as u8)?;
        for level in &self.levels {
            level.chunks.write_to(w)?;
            level.cont.write_to(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let chunk_width = wire::get_u8(r)?;
        if !(1..=64).contains(&chunk_width) {
            return Err(Error::Format(format!("dac chunk width {chunk_width}")));
        }
        let len = wire::get_len(r, u64::MAX / 64, "dac sequence")?;
        let n_levels = wire::get_u8(r)? as usize;
        if n_levels > 64usize.div_ceil(chunk_width as usize) {
            return Err(Error::Format(format!("dac level count {n_levels}")));
        }
        let mut levels = Vec::with_capacity(n_levels);
        let mut expect = len;
        for _ in 0..n_levels {
            let chunks = PackedInts::read_from(r)?;
            let cont = BitSequence::read_from(r)?;
            if chunks.len() != expect || cont.len() != expect {
                return Err(Error::Format("dac level sizes disagree".into()));
            }
            expect = cont.count_ones();
            levels.push(DacLevel { chunks, cont });
        }
        if expect != 0 {
            return Err(Error::Format("dac codewords left unterminated".into()));
        }
        Ok(DacSequence {
            chunk_width,
            len,
            levels,
        })
    }

    pub fn encoded_bytes(&self) -> usize {
        1 + 8
            + 1
            + self
                .levels
                .iter()
                .map(|l| l.chunks.encoded_bytes() + l.cont.encoded_bytes())
                .sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_encoded_two_bit_chunks() {
        // 5 = 01|01, 9 = 10|01, 12 = 11|00, least-significant chunk first.
        let d = DacSequence::from_values(&[5, 1, 9, 12, 0], 2);
        assert_eq!(d.level_count(), 2);
        let first: Vec<u64> = (0..5).map(|i| d.levels[0].chunks.get(i).unwrap()).collect();
        assert_eq!(first, vec![1, 1, 1, 0, 0]);
        let cont: Vec<bool> = (0..5).map(|i| d.levels[0].cont.get(i).unwrap()).collect();
        assert_eq!(cont, vec![true, false, true, true, false]);
        let second: Vec<u64> = (0..3).map(|i| d.levels[1].chunks.get(i).unwrap()).collect();
        assert_eq!(second, vec![1, 2, 3]);
        assert_eq!(d.access(2), Some(9));
        let decoded: Vec<u64> = d.iter().collect();
        assert_eq!(decoded, vec![5, 1, 9, 12, 0]);
    }

    #[test]
    fn access_past_end_is_none() {
        let d = DacSequence::from_values(&[3, 4], 4);
        assert_eq!(d.access(2), None);
        let empty = DacSequence::from_values(&[], 4);
        assert_eq!(empty.access(0), None);
        assert_eq!(empty.level_count(), 0);
    }

    #[test]
    fn round_trips_across_chunk_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for width in [1u8, 2, 3, 4, 7, 8, 13, 32, 64] {
            let mut values: Vec<u64> = (0..500)
                .map(|_| {
                    let bits = rng.gen_range(0..64);
                    rng.gen::<u64>() >> bits
                })
                .collect();
            values.push(0);
            values.push(u64::MAX);
            let d = DacSequence::from_values(&values, width);
            let decoded: Vec<u64> = d.iter().collect();
            assert_eq!(decoded, values, "width {width}");
        }
    }

    #[test]
    fn level_sizes_follow_continuation_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let values: Vec<u64> = (0..800)
            .map(|_| rng.gen::<u64>() >> rng.gen_range(40..64))
            .collect();
        let d = DacSequence::from_values(&values, 3);
        assert_eq!(d.level_shape(0).unwrap().0, values.len());
        for l in 1..d.level_count() {
            let (len, _) = d.level_shape(l).unwrap();
            let (_, prev_ones) = d.level_shape(l - 1).unwrap();
            assert_eq!(len, prev_ones, "level {l}");
        }
        let (_, last_ones) = d.level_shape(d.level_count() - 1).unwrap();
        assert_eq!(last_ones, 0);
    }

    #[test]
    fn skewed_input_beats_fixed_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Heavy-tailed values: mostly tiny, occasionally large.
        let values: Vec<u64> = (0..20_000)
            .map(|_| {
                let u: f64 = rng.gen_range(0.0001..1.0);
                (1.0 / u) as u64
            })
            .collect();
        let max = *values.iter().max().unwrap();
        let fixed_bits = values.len() * PackedInts::width_for(max) as usize;
        let d = DacSequence::from_values(&values, 4);
        assert!(
            d.payload_bits() < fixed_bits,
            "dac {} bits vs fixed {} bits",
            d.payload_bits(),
            fixed_bits
        );
        let decoded: Vec<u64> = d.iter().collect();
        assert_eq!(decoded, values);
    }

    #[test]
    fn serialization_round_trip() {
        let values: Vec<u64> = (0..300).map(|i| (i * i * 31) % 100_000).collect();
        let d = DacSequence::from_values(&values, 4);
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), d.encoded_bytes());
        let back = DacSequence::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(d, back);

        buf.truncate(buf.len() / 2);
        assert!(matches!(
            DacSequence::read_from(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
