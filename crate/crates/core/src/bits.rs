//! Packed bit streams, one bit per simulated cycle.

use std::fmt;

/// A growable sequence of bits stored 64 to a word, LSB first.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                s.set(i, true);
            }
        }
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    /// Builds a stream from whole words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut s = Self { words, len };
        s.mask_tail();
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn push(&mut self, v: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, v);
    }

    /// Appends a full or partial word; only the low `count` bits are used.
    pub(crate) fn push_word(&mut self, word: u64, count: usize) {
        debug_assert!(count <= 64);
        if self.len.is_multiple_of(64) {
            let mask = if count == 64 { !0 } else { (1u64 << count) - 1 };
            self.words.push(word & mask);
            self.len += count;
        } else {
            for b in 0..count {
                self.push((word >> b) & 1 == 1);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &BitStream) -> BitStream {
        assert_eq!(self.len, other.len, "xor of streams with different lengths");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        BitStream {
            words,
            len: self.len,
        }
    }

    pub fn not(&self) -> BitStream {
        let mut s = BitStream {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        s.mask_tail();
        s
    }

    /// Count of positions where `self` and `other` hold the same bit.
    pub fn agreements(&self, other: &BitStream) -> usize {
        assert_eq!(self.len, other.len, "comparing streams with different lengths");
        self.len - self.xor(other).count_ones()
    }

    /// Count of positions where both streams are 1.
    pub fn and_count(&self, other: &BitStream) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Number of 0->1 and 1->0 transitions between consecutive bits.
    pub fn toggles(&self) -> usize {
        let pairs = self.len.saturating_sub(1);
        let mut n = 0;
        for (k, &w) in self.words.iter().enumerate() {
            let start = k * 64;
            if start >= pairs {
                break;
            }
            let carry = self.words.get(k + 1).map_or(0, |n| n & 1);
            let diff = w ^ ((w >> 1) | (carry << 63));
            let valid = (pairs - start).min(64);
            let mask = if valid == 64 { !0 } else { (1u64 << valid) - 1 };
            n += (diff & mask).count_ones() as usize;
        }
        n
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitStream[{}](", self.len)?;
        for b in self.iter().take(128) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = BitStream::new();
        for b in iter {
            s.push(b);
        }
        s
    }
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Unpacks the low `width` bits of `value`, most significant first.
pub fn bits_msb_first(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Packs bits into an integer, first element most significant.
pub fn pack_msb_first(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}
