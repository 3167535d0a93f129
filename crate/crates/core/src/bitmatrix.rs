//! Row-major bit matrix backed by `u64` words.
//!
//! Each row starts on a word boundary so per-row popcounts and AND-NOT
//! scans stay word aligned. The packed export form drops that padding.

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD);
        Self {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        let w = self.words[row * self.words_per_row + col / WORD];
        (w >> (col % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.rows && col < self.cols);
        self.words[row * self.words_per_row + col / WORD] |= 1 << (col % WORD);
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.words[start..start + self.words_per_row]
    }

    pub fn row_words_mut(&mut self, row: usize) -> &mut [u64] {
        let start = row * self.words_per_row;
        &mut self.words[start..start + self.words_per_row]
    }

    pub fn count_row(&self, row: usize) -> usize {
        self.row_words(row)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Number of bits set in `row` but not in `mask`.
    #[inline]
    pub fn count_row_and_not(&self, row: usize, mask: &[u64]) -> usize {
        self.row_words(row)
            .iter()
            .zip(mask)
            .map(|(w, m)| (w & !m).count_ones() as usize)
            .sum()
    }

    /// ORs `row` into `acc`.
    pub fn or_row_into(&self, row: usize, acc: &mut [u64]) {
        for (a, w) in acc.iter_mut().zip(self.row_words(row)) {
            *a |= w;
        }
    }

    pub fn row_bits(&self, row: usize) -> impl Iterator<Item = bool> + '_ {
        (0..self.cols).map(move |c| self.get(row, c))
    }

    /// Copies `other` into rows starting at `first_row`.
    pub fn copy_rows_from(&mut self, first_row: usize, other: &BitMatrix) {
        assert_eq!(self.cols, other.cols, "column count mismatch");
        assert!(first_row + other.rows <= self.rows, "row range out of bounds");
        let start = first_row * self.words_per_row;
        self.words[start..start + other.words.len()].copy_from_slice(&other.words);
    }

    /// Appends the rows of `other`.
    pub fn extend_rows(&mut self, other: &BitMatrix) {
        assert_eq!(self.cols, other.cols, "column count mismatch");
        self.words.extend_from_slice(&other.words);
        self.rows += other.rows;
    }

    /// Size in bytes of the padding-free packed form.
    pub fn packed_len(&self) -> usize {
        (self.rows * self.cols).div_ceil(8)
    }

    /// All bits as one contiguous stream, row after row, least significant
    /// bit of each byte first.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.packed_len()];
        let mut bit = 0usize;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out[bit / 8] |= 1 << (bit % 8);
                }
                bit += 1;
            }
        }
        out
    }

    pub fn from_packed_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != (rows * cols).div_ceil(8) {
            return None;
        }
        let mut m = Self::zeros(rows, cols);
        let mut bit = 0usize;
        for r in 0..rows {
            for c in 0..cols {
                if bytes[bit / 8] >> (bit % 8) & 1 == 1 {
                    m.set(r, c);
                }
                bit += 1;
            }
        }
        Some(m)
    }
}
