//! Fixed-width integer arrays packed into 64-bit words.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::wire;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackedInts {
    width: u8,
    len: usize,
    words: Vec<u64>,
}

impl PackedInts {
    /// `width` in bits, 1 to 64. Values pushed later must fit in it.
    pub fn new(width: u8) -> Self {
        assert!((1..=64).contains(&width), "width {width} out of 1..=64");
        PackedInts {
            width,
            len: 0,
            words: Vec::new(),
        }
    }

    pub fn with_capacity(width: u8, len: usize) -> Self {
        let mut p = Self::new(width);
        p.words.reserve((len * width as usize).div_ceil(64));
        p
    }

    /// Smallest width able to hold `max`; at least one bit.
    pub fn width_for(max: u64) -> u8 {
        (64 - max.leading_zeros()).max(1) as u8
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, v: u64) {
        debug_assert!(self.width == 64 || v < 1u64 << self.width, "value too wide");
        let width = self.width as usize;
        let pos = self.len * width;
        let word = pos / 64;
        let off = pos % 64;
        if word >= self.words.len() {
            self.words.push(0);
        }
        self.words[word] |= v << off;
        if off + width > 64 {
            self.words.push(v >> (64 - off));
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<u64> {
        if i >= self.len {
            return None;
        }
        let width = self.width as usize;
        let pos = i * width;
        let word = pos / 64;
        let off = pos % 64;
        let mask = if width == 64 {
            !0u64
        } else {
            (1u64 << width) - 1
        };
        let mut v = self.words[word] >> off;
        if off + width > 64 {
            v |= self.words[word + 1] << (64 - off);
        }
        Some(v & mask)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i).unwrap())
    }

    pub fn bits(&self) -> usize {
        self.len * self.width as usize
    }

    /// Format: u8 width, u64 element count, then the packed words.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        wire::put_u8(w, self.width)?;
        wire::put_u64(w, self.len as u64)?;
        for word in &self.words {
            wire::put_u64(w, *word)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let width = wire::get_u8(r)?;
        if !(1..=64).contains(&width) {
            return Err(Error::Format(format!("packed array width {width}")));
        }
        let len = wire::get_len(r, u64::MAX / 64, "packed array")?;
        let n_words = (len * width as usize).div_ceil(64);
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(wire::get_u64(r)?);
        }
        let tail_bits = len * width as usize % 64;
        if tail_bits != 0 && words.last().unwrap() >> tail_bits != 0 {
            return Err(Error::Format("packed array has set padding bits".into()));
        }
        Ok(PackedInts { width, len, words })
    }

    pub fn encoded_bytes(&self) -> usize {
        1 + 8 + self.words.len() * 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trips_every_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for width in 1..=64u8 {
            let mask = if width == 64 {
                !0u64
            } else {
                (1u64 << width) - 1
            };
            let values: Vec<u64> = (0..200).map(|_| rng.gen::<u64>() & mask).collect();
            let mut p = PackedInts::new(width);
            for &v in &values {
                p.push(v);
            }
            for (i, &v) in values.iter().enumerate() {
                assert_eq!(p.get(i), Some(v), "width {width} index {i}");
            }
            assert_eq!(p.get(values.len()), None);

            let mut buf = Vec::new();
            p.write_to(&mut buf).unwrap();
            let back = PackedInts::read_from(&mut buf.as_slice()).unwrap();
            assert_eq!(p, back);
        }
    }

    #[test]
    fn width_for_covers_boundaries() {
        assert_eq!(PackedInts::width_for(0), 1);
        assert_eq!(PackedInts::width_for(1), 1);
        assert_eq!(PackedInts::width_for(2), 2);
        assert_eq!(PackedInts::width_for(255), 8);
        assert_eq!(PackedInts::width_for(256), 9);
        assert_eq!(PackedInts::width_for(u64::MAX), 64);
    }

    #[test]
    fn rejects_bad_width_on_read() {
        let buf = [0u8, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(
            PackedInts::read_from(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
