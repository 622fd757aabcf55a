use std::fmt;

const WORD_BITS: usize = 64;

/// Dense row-major bit matrix over GF(2), one `u64` run per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(WORD_BITS);
        Self { rows, cols, stride, words: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from rows of 0/1 entries. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &bit) in row.iter().enumerate() {
                m.set(i, j, bit != 0);
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        (self.words[row * self.stride + col / WORD_BITS] >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.rows && col < self.cols);
        let word = &mut self.words[row * self.stride + col / WORD_BITS];
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn row_words_mut(&mut self, row: usize) -> &mut [u64] {
        &mut self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn is_row_zero(&self, row: usize) -> bool {
        self.row_words(row).iter().all(|&w| w == 0)
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row_words(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Column indices set in `row`, ascending.
    pub fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(row).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + bit)
            })
        })
    }

    pub fn rows_equal(&self, a: usize, b: usize) -> bool {
        self.row_words(a) == self.row_words(b)
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        if src < dst {
            let (lo, hi) = self.words.split_at_mut(dst * s);
            xor_words(&mut hi[..s], &lo[src * s..(src + 1) * s]);
        } else {
            let (lo, hi) = self.words.split_at_mut(src * s);
            xor_words(&mut lo[dst * s..(dst + 1) * s], &hi[..s]);
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Append a zero row and return its index.
    pub fn push_zero_row(&mut self) -> usize {
        self.words.extend(std::iter::repeat_n(0, self.stride));
        self.rows += 1;
        self.rows - 1
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut out = Self::zeros(keep.len(), self.cols);
        for (i, &r) in keep.iter().enumerate() {
            out.row_words_mut(i).copy_from_slice(self.row_words(r));
        }
        out
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, keep.len());
        for r in 0..self.rows {
            for (j, &c) in keep.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        out
    }

    /// GF(2) rank by forward elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot, rank);
            for r in rank + 1..m.rows {
                if m.get(r, col) {
                    m.xor_row(rank, r);
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// `None` when the matrix is not square.
    pub fn is_invertible(&self) -> Option<bool> {
        self.is_square().then(|| self.rank() == self.rows)
    }
}

#[inline]
fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// `dst ^= src`, byte-wise.
#[inline]
pub fn xor_bytes(dst: &mut [u8], src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Rank oracle: 2^rank distinct vectors in the row span.
    fn brute_rank(m: &BitMatrix) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << m.rows()) {
            let mut acc = vec![0u64; m.row_words(0).len()];
            for r in 0..m.rows() {
                if mask >> r & 1 == 1 {
                    xor_words(&mut acc, m.row_words(r));
                }
            }
            span.insert(acc);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn identity_rank() {
        assert_eq!(BitMatrix::identity(4).rank(), 4);
        assert_eq!(BitMatrix::identity(4).is_invertible(), Some(true));
        assert_eq!(BitMatrix::zeros(3, 3).is_invertible(), Some(false));
        assert_eq!(BitMatrix::zeros(3, 2).is_invertible(), None);
    }

    #[test]
    fn cyclic_three_by_three() {
        let m = BitMatrix::from_rows(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]);
        assert_eq!(brute_rank(&m), 2);
        assert_eq!(m.rank(), 2);
        assert_eq!(m.is_invertible(), Some(false));
    }

    #[test]
    fn duplicated_row_drops_rank() {
        let m = BitMatrix::from_rows(&[[1u8, 0, 1, 1], [0, 1, 1, 0], [1, 0, 1, 1], [0, 0, 0, 1]]);
        assert!(m.rank() < 4);
    }

    #[test]
    fn wide_rows_span_words() {
        let mut m = BitMatrix::zeros(3, 130);
        m.set(0, 0, true);
        m.set(0, 129, true);
        m.set(1, 64, true);
        m.set(2, 129, true);
        assert_eq!(m.rank(), 3);
        assert_eq!(m.row_ones(0).collect::<Vec<_>>(), vec![0, 129]);
        m.xor_row(2, 0);
        assert_eq!(m.row_ones(0).collect::<Vec<_>>(), vec![0]);
        m.xor_row(0, 2);
        assert_eq!(m.row_weight(2), 2);
    }

    proptest! {
        #[test]
        fn rank_matches_span_oracle(rows in 1usize..=12, cols in 1usize..=70, seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut m = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    m.set(r, c, state & 3 == 0);
                }
            }
            prop_assert_eq!(m.rank(), brute_rank(&m));
        }
    }
}
