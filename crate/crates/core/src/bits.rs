//! Fixed-width bit vectors used for binarized rows and columns.

use std::fmt;

const WORD: usize = 64;

/// A fixed-length vector of bits packed into `u64` words.
///
/// Bits past `len` in the last word are always zero, so word-level
/// comparisons and hashing agree with bit-level equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Self {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        bits.clear_tail();
        bits
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut bits = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                bits.set(i, true);
            }
        }
        bits
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = Self::zeros(len);
        for i in indices {
            bits.set(i, true);
        }
        bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn none(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn any(&self) -> bool {
        !self.none()
    }

    /// `|self ∧ other|` without allocating.
    pub fn and_count(&self, other: &Bits) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `|self ∧ ¬other|` without allocating.
    pub fn and_not_count(&self, other: &Bits) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    pub fn and_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn and_not_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn and(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.and_assign(other);
        out
    }

    pub fn and_not(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.and_not_assign(other);
        out
    }

    pub fn not(&self) -> Bits {
        let mut out = Bits {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn is_subset(&self, other: &Bits) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Bits) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == 0)
    }

    /// True when `self ∧ ¬mask` and `other` share no bit.
    pub fn is_disjoint_masked(&self, mask: &Bits, other: &Bits) -> bool {
        self.words
            .iter()
            .zip(&mask.words)
            .zip(&other.words)
            .all(|((a, m), b)| a & !m & b == 0)
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Lowercase hex of the packed words, least significant word first.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.words.len() * 16);
        for w in &self.words {
            out.push_str(&format!("{w:016x}"));
        }
        out
    }

    /// Inverse of [`Bits::to_hex`]; `None` when the text does not encode
    /// exactly `len` bits.
    pub fn from_hex(len: usize, hex: &str) -> Option<Self> {
        let n_words = len.div_ceil(WORD);
        if hex.len() != n_words * 16 || !hex.is_ascii() {
            return None;
        }
        let words = (0..n_words)
            .map(|w| u64::from_str_radix(&hex[w * 16..w * 16 + 16], 16).ok())
            .collect::<Option<Vec<u64>>>()?;
        let bits = Self { words, len };
        let mut trimmed = bits.clone();
        trimmed.clear_tail();
        (trimmed == bits).then_some(bits)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "Bits({s})")
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.index * WORD + bit);
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let b = Bits::from_indices(70, [0, 5, 63, 64, 69]);
        assert_eq!(Bits::from_hex(70, &b.to_hex()), Some(b.clone()));
        assert_eq!(Bits::from_hex(64, &b.to_hex()), None);
        let mut bad = b.to_hex();
        bad.replace_range(16..32, "ffffffffffffffff");
        assert_eq!(Bits::from_hex(70, &bad), None);
    }

    #[test]
    fn ones_clears_tail() {
        let b = Bits::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert_eq!(b.not().count_ones(), 0);
    }

    #[test]
    fn iter_ones_crosses_words() {
        let b = Bits::from_indices(200, [0, 63, 64, 130, 199]);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 63, 64, 130, 199]);
    }

    #[test]
    fn subset_and_disjoint() {
        let a = Bits::from_indices(10, [1, 3]);
        let b = Bits::from_indices(10, [1, 3, 5]);
        let c = Bits::from_indices(10, [2]);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(a.is_disjoint(&c));
        assert_eq!(b.and_count(&a), 2);
        assert_eq!(b.and_not_count(&a), 1);
        assert!(b.is_disjoint_masked(&Bits::from_indices(10, [1, 3, 5]), &a));
    }

    #[test]
    fn empty_bits() {
        let b = Bits::zeros(0);
        assert!(b.is_empty());
        assert_eq!(b.iter_ones().count(), 0);
        assert!(b.none());
    }
}
