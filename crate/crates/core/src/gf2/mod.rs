//! Linear algebra over GF(2) with whole-payload right-hand sides.
//!
//! A [`LinearSystem`] holds XOR equations `x_a ⊕ x_b ⊕ … = payload` over
//! labelled unknowns. Elimination is Gauss–Jordan, so every unknown that the
//! received equations pin down is extracted even when the system as a whole
//! is underdetermined; the rows that remain are the residue kept for later.

mod matrix;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use matrix::{xor_bytes, BitMatrix};

/// One packet-sized unknown: packet `position` of subsegment `subsegment`
/// of segment `segment`. Segments and subsegments count from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unknown {
    pub segment: u32,
    pub subsegment: u32,
    pub position: u32,
}

impl Unknown {
    pub fn new(segment: u32, subsegment: u32, position: u32) -> Self {
        Self { segment, subsegment, position }
    }
}

/// XOR equations over [`Unknown`]s, kept in normal form: no row references
/// an unknown whose value is already known to the system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    columns: Vec<Unknown>,
    coefficients: BitMatrix,
    rhs: Vec<Vec<u8>>,
    solved: BTreeMap<Unknown, Vec<u8>>,
    payload_len: usize,
}

impl LinearSystem {
    /// Empty system over the given unknowns. Columns are sorted by label.
    pub fn new(unknowns: impl IntoIterator<Item = Unknown>, payload_len: usize) -> Self {
        let mut columns: Vec<Unknown> = unknowns.into_iter().collect();
        columns.sort_unstable();
        columns.dedup();
        let coefficients = BitMatrix::zeros(0, columns.len());
        Self { columns, coefficients, rhs: Vec::new(), solved: BTreeMap::new(), payload_len }
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn columns(&self) -> &[Unknown] {
        &self.columns
    }

    pub fn coefficients(&self) -> &BitMatrix {
        &self.coefficients
    }

    pub fn rhs(&self) -> &[Vec<u8>] {
        &self.rhs
    }

    /// Number of stored equations.
    pub fn equations(&self) -> usize {
        self.coefficients.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.equations() == 0
    }

    /// Values known to the system, injected or derived.
    pub fn solved(&self) -> &BTreeMap<Unknown, Vec<u8>> {
        &self.solved
    }

    /// Whether some stored equation involves `label`.
    pub fn references(&self, label: &Unknown) -> bool {
        match self.columns.binary_search(label) {
            Ok(col) => (0..self.equations()).any(|r| self.coefficients.get(r, col)),
            Err(_) => false,
        }
    }

    /// Unknowns that appear in at least one stored equation.
    pub fn referenced(&self) -> Vec<Unknown> {
        let mut used = vec![false; self.columns.len()];
        for r in 0..self.equations() {
            for c in self.coefficients.row_ones(r) {
                used[c] = true;
            }
        }
        self.columns.iter().zip(used).filter_map(|(u, used)| used.then_some(*u)).collect()
    }

    /// Add `⊕ terms = payload`. Terms that are already known are folded into
    /// the right-hand side; repeated terms cancel.
    pub fn push_equation(&mut self, terms: &[Unknown], mut payload: Vec<u8>) -> Result<()> {
        if payload.len() != self.payload_len {
            return Err(Error::InvalidArgument(format!(
                "payload of {} bytes in a {}-byte system",
                payload.len(),
                self.payload_len
            )));
        }
        let row = self.coefficients.push_zero_row();
        for term in terms {
            if let Some(value) = self.solved.get(term) {
                xor_bytes(&mut payload, value);
                continue;
            }
            let Ok(col) = self.columns.binary_search(term) else {
                self.coefficients = self.coefficients.select_rows(&(0..row).collect::<Vec<_>>());
                return Err(Error::InvalidArgument(format!("{term:?} is not an unknown of this system")));
            };
            let bit = self.coefficients.get(row, col);
            self.coefficients.set(row, col, !bit);
        }
        self.rhs.push(payload);
        Ok(())
    }

    /// Gauss–Jordan reduction. Returns the unknowns newly determined, which
    /// are also recorded in [`solved`](Self::solved). Afterwards the stored
    /// equations are the reduced residue and reference only undetermined
    /// unknowns.
    pub fn eliminate(&mut self) -> Result<Vec<Unknown>> {
        let rows = self.equations();
        let cols = self.columns.len();
        let m = &mut self.coefficients;
        let mut pivots = 0;
        for col in 0..cols {
            if pivots == rows {
                break;
            }
            let Some(pivot) = (pivots..rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot, pivots);
            self.rhs.swap(pivot, pivots);
            for r in 0..rows {
                if r != pivots && m.get(r, col) {
                    m.xor_row(pivots, r);
                    let (src, dst) = two_mut(&mut self.rhs, pivots, r);
                    xor_bytes(dst, src);
                }
            }
            pivots += 1;
        }
        if self.rhs[pivots..].iter().any(|p| p.iter().any(|&b| b != 0)) {
            return Err(Error::InconsistentSystem);
        }

        let mut newly = Vec::new();
        let mut keep_rows = Vec::new();
        for r in 0..pivots {
            if self.coefficients.row_weight(r) == 1 {
                let col = self.coefficients.row_ones(r).next().expect("weight one");
                let label = self.columns[col];
                self.solved.insert(label, std::mem::take(&mut self.rhs[r]));
                newly.push(label);
            } else {
                keep_rows.push(r);
            }
        }
        self.retain(&keep_rows);
        Ok(newly)
    }

    /// Substitute a known value without re-eliminating. Returns whether any
    /// equation referenced `label`.
    pub fn substitute_known(&mut self, label: Unknown, payload: &[u8]) -> Result<bool> {
        if payload.len() != self.payload_len {
            return Err(Error::InvalidArgument("payload length mismatch".into()));
        }
        if let Some(existing) = self.solved.get(&label) {
            return if existing.as_slice() == payload { Ok(false) } else { Err(Error::ConflictingKnown(label)) };
        }
        let Ok(col) = self.columns.binary_search(&label) else {
            return Ok(false);
        };
        let mut hit = false;
        for r in 0..self.equations() {
            if self.coefficients.get(r, col) {
                self.coefficients.set(r, col, false);
                xor_bytes(&mut self.rhs[r], payload);
                hit = true;
            }
        }
        if hit {
            // The zeroed column is dropped at the next elimination.
            self.solved.insert(label, payload.to_vec());
        }
        Ok(hit)
    }

    /// Substitute a known value and re-eliminate. Returns the unknowns newly
    /// determined as a consequence. A label no equation references leaves
    /// the system untouched.
    pub fn inject_known(&mut self, label: Unknown, payload: &[u8]) -> Result<Vec<Unknown>> {
        if self.substitute_known(label, payload)? {
            self.eliminate()
        } else {
            Ok(Vec::new())
        }
    }

    // Keep the listed rows, drop zero rows and columns no row references.
    fn retain(&mut self, keep_rows: &[usize]) {
        let keep_rows: Vec<usize> = keep_rows.iter().copied().filter(|&r| !self.coefficients.is_row_zero(r)).collect();
        let reduced = self.coefficients.select_rows(&keep_rows);
        let mut rhs = Vec::with_capacity(keep_rows.len());
        for &r in &keep_rows {
            rhs.push(std::mem::take(&mut self.rhs[r]));
        }
        let keep_cols: Vec<usize> =
            (0..self.columns.len()).filter(|&c| !self.solved.contains_key(&self.columns[c])).collect();
        self.coefficients = reduced.select_columns(&keep_cols);
        self.columns = keep_cols.iter().map(|&c| self.columns[c]).collect();
        self.rhs = rhs;
    }
}

fn two_mut<T>(v: &mut [T], a: usize, b: usize) -> (&T, &mut T) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&hi[0], &mut lo[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x(i: u32) -> Unknown {
        Unknown::new(i, 1, 0)
    }

    fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter().zip(b).map(|(p, q)| p ^ q).collect()
    }

    #[test]
    fn back_substitution() {
        let (a, b) = (vec![0x0f, 0x10], vec![0xf0, 0x01]);
        let mut sys = LinearSystem::new([x(1), x(2)], 2);
        sys.push_equation(&[x(1), x(2)], a.clone()).unwrap();
        sys.push_equation(&[x(2)], b.clone()).unwrap();
        let mut newly = sys.eliminate().unwrap();
        newly.sort();
        assert_eq!(newly, vec![x(1), x(2)]);
        assert_eq!(sys.solved()[&x(2)], b);
        assert_eq!(sys.solved()[&x(1)], xor(&a, &b));
        assert!(sys.is_empty());
    }

    #[test]
    fn underdetermined_keeps_residue() {
        let mut sys = LinearSystem::new([x(1), x(2)], 1);
        sys.push_equation(&[x(1), x(2)], vec![7]).unwrap();
        assert!(sys.eliminate().unwrap().is_empty());
        assert_eq!(sys.equations(), 1);
        assert_eq!(sys.referenced(), vec![x(1), x(2)]);
    }

    #[test]
    fn inconsistent_rows_are_rejected() {
        let mut sys = LinearSystem::new([x(1)], 1);
        sys.push_equation(&[x(1)], vec![1]).unwrap();
        sys.push_equation(&[x(1)], vec![2]).unwrap();
        assert_eq!(sys.eliminate(), Err(Error::InconsistentSystem));
    }

    #[test]
    fn inject_resolves_residue() {
        let mut sys = LinearSystem::new([x(1), x(2)], 1);
        sys.push_equation(&[x(1), x(2)], vec![0b1100]).unwrap();
        sys.eliminate().unwrap();
        let newly = sys.inject_known(x(2), &[0b0101]).unwrap();
        assert_eq!(newly, vec![x(1)]);
        assert_eq!(sys.solved()[&x(1)], vec![0b1001]);
        assert!(sys.is_empty());
    }

    #[test]
    fn inject_absent_label_is_noop() {
        let mut sys = LinearSystem::new([x(1), x(2)], 1);
        sys.push_equation(&[x(1), x(2)], vec![3]).unwrap();
        sys.eliminate().unwrap();
        let before = sys.clone();
        assert!(sys.inject_known(x(9), &[1]).unwrap().is_empty());
        assert_eq!(sys, before);
    }

    #[test]
    fn conflicting_injection() {
        let mut sys = LinearSystem::new([x(1), x(2)], 1);
        sys.push_equation(&[x(1), x(2)], vec![3]).unwrap();
        sys.inject_known(x(2), &[1]).unwrap();
        assert!(sys.inject_known(x(2), &[1]).unwrap().is_empty());
        assert_eq!(sys.inject_known(x(2), &[5]), Err(Error::ConflictingKnown(x(2))));
    }

    #[test]
    fn push_equation_folds_known_terms_and_cancels_repeats() {
        let mut sys = LinearSystem::new([x(1), x(2), x(3)], 1);
        sys.push_equation(&[x(1), x(2)], vec![1]).unwrap();
        sys.inject_known(x(1), &[4]).unwrap();
        assert_eq!(sys.solved()[&x(2)], vec![5]);
        sys.push_equation(&[x(2), x(3), x(3)], vec![5]).unwrap();
        // x3 cancelled, x2 known -> zero row with zero rhs, consistent
        assert!(sys.eliminate().unwrap().is_empty());
        assert!(sys.push_equation(&[x(7)], vec![0]).is_err());
        assert!(sys.push_equation(&[x(3)], vec![0, 0]).is_err());
    }

    // Rank-3 system over four unknowns; one known value unlocks the rest.
    #[test]
    fn chain_of_three() {
        let values: Vec<Vec<u8>> = (0..4).map(|i| vec![i as u8 * 37 + 1, 0xa5 ^ i as u8]).collect();
        let eqs: [&[u32]; 3] = [&[1, 2], &[2, 3], &[3, 4]];
        let mut sys = LinearSystem::new((1..=4).map(x), 2);
        for e in eqs {
            let terms: Vec<Unknown> = e.iter().map(|&i| x(i)).collect();
            let mut rhs = vec![0u8; 2];
            for &i in e {
                xor_bytes(&mut rhs, &values[i as usize - 1]);
            }
            sys.push_equation(&terms, rhs).unwrap();
        }
        assert_eq!(sys.coefficients().rank(), 3);
        assert!(sys.eliminate().unwrap().is_empty());
        let mut newly = sys.inject_known(x(4), &values[3]).unwrap();
        newly.sort();
        assert_eq!(newly, vec![x(1), x(2), x(3)]);
        for i in 1..=3 {
            assert_eq!(sys.solved()[&x(i)], values[i as usize - 1]);
        }
    }

    fn random_system(rng: &mut ChaCha8Rng, unknowns: usize, eqs: usize, len: usize) -> (LinearSystem, Vec<Vec<u8>>) {
        let values: Vec<Vec<u8>> = (0..unknowns).map(|_| (0..len).map(|_| rng.gen()).collect()).collect();
        let mut sys = LinearSystem::new((1..=unknowns as u32).map(x), len);
        for _ in 0..eqs {
            let terms: Vec<Unknown> = (1..=unknowns as u32).filter(|_| rng.gen_bool(0.5)).map(x).collect();
            let mut rhs = vec![0u8; len];
            for t in &terms {
                xor_bytes(&mut rhs, &values[t.segment as usize - 1]);
            }
            sys.push_equation(&terms, rhs).unwrap();
        }
        (sys, values)
    }

    #[test]
    fn full_rank_random_recovers_payloads() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut found = 0;
        while found < 20 {
            let (mut sys, values) = random_system(&mut rng, 8, 8, 4);
            if sys.coefficients().rank() < 8 {
                continue;
            }
            found += 1;
            assert_eq!(sys.eliminate().unwrap().len(), 8);
            for i in 1..=8u32 {
                assert_eq!(sys.solved()[&x(i)], values[i as usize - 1]);
            }
        }
    }

    proptest! {
        #[test]
        fn inject_order_does_not_matter(seed in any::<u64>(), pick in proptest::collection::vec(0usize..10, 1..6)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut base, values) = random_system(&mut rng, 10, 6, 3);
            base.eliminate().unwrap();
            let mut forward = base.clone();
            let mut backward = base.clone();
            let mut last = 0;
            for &i in &pick {
                let label = x(i as u32 + 1);
                forward.inject_known(label, &values[i]).unwrap();
                prop_assert!(forward.solved().len() >= last);
                last = forward.solved().len();
            }
            for &i in pick.iter().rev() {
                backward.inject_known(x(i as u32 + 1), &values[i]).unwrap();
            }
            prop_assert_eq!(forward.solved(), backward.solved());
            for (label, value) in forward.solved() {
                prop_assert_eq!(value, &values[label.segment as usize - 1]);
            }
        }
    }
}
