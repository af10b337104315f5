//! The interpolated Hamiltonian `H(s) = (1 - s) H_B + s H_P`.
//!
//! `H_P` is diagonal with entry `h(z)`, the number of clauses `z` violates.
//! `H_B = Σ_i d_i (1 - σ_x^(i)) / 2` where `d_i` counts the clauses containing
//! bit `i`; its ground state is the uniform superposition with energy 0.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::StateVector;
use crate::instance::{check_capacity, ExactCoverInstance};

/// Largest `n` for which a dense matrix is ever built.
pub const DENSE_MAX_BITS: usize = 10;

const PAR_THRESHOLD_BITS: usize = 14;
const PAR_CHUNK: usize = 1 << 12;

/// Schedule parameter `s = t / T`, restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InterpolationPoint(f64);

impl InterpolationPoint {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "schedule parameter s = {s} outside [0, 1]"
            )));
        }
        Ok(InterpolationPoint(s))
    }

    pub fn at(t: f64, run_time: f64) -> Result<Self> {
        if run_time <= 0.0 {
            return Self::new(1.0);
        }
        Self::new(t / run_time)
    }

    pub fn s(self) -> f64 {
        self.0
    }
}

/// Precomputed cost table and transverse-field strengths for one instance.
#[derive(Debug, Clone)]
pub struct HamiltonianData {
    n: usize,
    cost: Vec<u32>,
    cost_f: Vec<f64>,
    field_strengths: Vec<u32>,
    /// `(bit mask, d_i / 2)` for every bit with `d_i > 0`.
    flips: Vec<(usize, f64)>,
    half_field_sum: f64,
}

impl HamiltonianData {
    pub fn build(inst: &ExactCoverInstance) -> Result<Self> {
        check_capacity(inst.n())?;
        let cost = inst.violation_table()?;
        let field_strengths: Vec<u32> = inst.bit_degrees().into_iter().map(|d| d as u32).collect();
        Ok(Self::from_parts(inst.n(), cost, field_strengths))
    }

    fn from_parts(n: usize, cost: Vec<u32>, field_strengths: Vec<u32>) -> Self {
        let cost_f = cost.iter().map(|&c| c as f64).collect();
        let flips: Vec<(usize, f64)> = field_strengths
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(i, &d)| (1usize << i, d as f64 / 2.0))
            .collect();
        let half_field_sum = flips.iter().map(|&(_, w)| w).sum();
        HamiltonianData {
            n,
            cost,
            cost_f,
            field_strengths,
            flips,
            half_field_sum,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `h(z)` for every basis index `z`.
    pub fn cost(&self) -> &[u32] {
        &self.cost
    }

    /// `d_i`, the number of clauses containing bit `i`.
    pub fn field_strengths(&self) -> &[u32] {
        &self.field_strengths
    }

    pub fn min_cost(&self) -> u32 {
        self.cost.iter().copied().min().unwrap_or(0)
    }

    pub fn max_cost(&self) -> u32 {
        self.cost.iter().copied().max().unwrap_or(0)
    }

    pub fn max_field(&self) -> u32 {
        self.field_strengths.iter().copied().max().unwrap_or(0)
    }

    /// `max_z h(z) + max_i d_i`, the scale that sets the default time step.
    pub fn energy_scale(&self) -> f64 {
        (self.max_cost() + self.max_field()) as f64
    }

    /// Writes `H(s) ψ` into `out` without forming a matrix.
    pub fn apply_into(&self, s: f64, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let a = 1.0 - s;
        let diag_b = a * self.half_field_sum;
        let kernel = |base: usize, chunk: &mut [Complex64]| {
            for (off, o) in chunk.iter_mut().enumerate() {
                let z = base + off;
                let mut acc = psi[z] * (s * self.cost_f[z] + diag_b);
                for &(mask, w) in &self.flips {
                    acc -= psi[z ^ mask] * (a * w);
                }
                *o = acc;
            }
        };
        if self.n >= PAR_THRESHOLD_BITS {
            out.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| kernel(c * PAR_CHUNK, chunk));
        } else {
            kernel(0, out);
        }
    }

    /// `H(s) ψ` as a new state (not normalized).
    pub fn apply_h_of_t(&self, s: InterpolationPoint, psi: &StateVector) -> Result<StateVector> {
        if psi.n() != self.n {
            return Err(Error::InvalidState(format!(
                "state has {} bits, Hamiltonian has {}",
                psi.n(),
                self.n
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(s.s(), psi.amplitudes(), &mut out);
        Ok(StateVector::from_raw(self.n, out))
    }

    /// Real symmetric matrix of `H(s)`; a verification oracle for small `n`.
    pub fn dense_matrix(&self, s: InterpolationPoint) -> Result<DMatrix<f64>> {
        if self.n > DENSE_MAX_BITS {
            return Err(Error::Capacity {
                what: "n (dense)",
                value: self.n,
                limit: DENSE_MAX_BITS,
            });
        }
        let s = s.s();
        let a = 1.0 - s;
        let dim = self.dim();
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for z in 0..dim {
            m[(z, z)] = s * self.cost_f[z] + a * self.half_field_sum;
            for &(mask, w) in &self.flips {
                m[(z, z ^ mask)] -= a * w;
            }
        }
        Ok(m)
    }

    /// The `k` lowest eigenpairs of `H(s)` by dense diagonalization.
    pub fn low_spectrum(&self, s: InterpolationPoint, k: usize) -> Result<LowSpectrum> {
        let m = self.dense_matrix(s)?;
        let dim = m.nrows();
        let k = k.min(dim);
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut energies = Vec::with_capacity(k);
        let mut states = Vec::with_capacity(k);
        for &col in order.iter().take(k) {
            energies.push(eig.eigenvalues[col]);
            let v = eig.eigenvectors.column(col);
            // fix the sign so the largest-magnitude component is positive
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |p, x| if x.abs() > p.abs() { x } else { p });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            let amps = v.iter().map(|&x| Complex64::new(sign * x, 0.0)).collect();
            states.push(StateVector::from_raw(self.n, amps));
        }
        Ok(LowSpectrum { energies, states })
    }
}

/// Ascending eigenvalues with their unit eigenvectors.
#[derive(Debug, Clone)]
pub struct LowSpectrum {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::initial_state;
    use crate::instance::Clause;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(n: usize, cs: &[[usize; 3]]) -> ExactCoverInstance {
        ExactCoverInstance::new(
            n,
            cs.iter()
                .map(|c| Clause::new(c[0], c[1], c[2]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn sp(s: f64) -> InterpolationPoint {
        InterpolationPoint::new(s).unwrap()
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::from_raw(n, amps)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn empty_instance_is_zero() {
        let hd = HamiltonianData::build(&ExactCoverInstance::empty(4).unwrap()).unwrap();
        assert!(hd.cost().iter().all(|&c| c == 0));
        assert!(hd.field_strengths().iter().all(|&d| d == 0));
    }

    #[test]
    fn single_clause_cost_and_fields() {
        let hd = HamiltonianData::build(&inst(3, &[[0, 1, 2]])).unwrap();
        let expected: Vec<u32> = (0..8)
            .map(|z| if [1, 2, 4].contains(&z) { 0 } else { 1 })
            .collect();
        assert_eq!(hd.cost(), &expected[..]);
        assert_eq!(hd.field_strengths(), &[1, 1, 1]);
    }

    #[test]
    fn two_clause_fields() {
        let i = inst(4, &[[0, 1, 2], [0, 1, 3]]);
        let hd = HamiltonianData::build(&i).unwrap();
        assert_eq!(hd.field_strengths(), &[2, 2, 1, 1]);
        for z in 0..16u32 {
            let by_hand = i
                .clauses()
                .iter()
                .filter(|c| c.indices().iter().map(|&b| (z >> b) & 1).sum::<u32>() != 1)
                .count() as u32;
            assert_eq!(hd.cost()[z as usize], by_hand);
        }
        assert_eq!(hd.field_strengths().iter().sum::<u32>(), 3 * 2);
    }

    #[test]
    fn s_one_is_diagonal_cost() {
        let hd = HamiltonianData::build(&inst(4, &[[0, 1, 2], [1, 2, 3]])).unwrap();
        let psi = random_state(4, &mut ChaCha8Rng::seed_from_u64(1));
        let out = hd.apply_h_of_t(sp(1.0), &psi).unwrap();
        for z in 0..16 {
            let want = psi.amplitudes()[z] * hd.cost()[z] as f64;
            assert!((out.amplitudes()[z] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn uniform_state_annihilated_at_s_zero() {
        let hd = HamiltonianData::build(&inst(5, &[[0, 1, 2], [1, 3, 4], [0, 2, 4]])).unwrap();
        let out = hd
            .apply_h_of_t(sp(0.0), &initial_state(5).unwrap())
            .unwrap();
        assert!(out.amplitudes().iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn one_qubit_dense_matrix() {
        // a 1-bit HamiltonianData cannot come from a clause list
        let hd = HamiltonianData::from_parts(1, vec![0, 0], vec![1]);
        let m = hd.dense_matrix(sp(0.0)).unwrap();
        assert_eq!(m[(0, 0)], 0.5);
        assert_eq!(m[(0, 1)], -0.5);
        assert_eq!(m[(1, 0)], -0.5);
        assert_eq!(m[(1, 1)], 0.5);
    }

    #[test]
    fn dense_s_one_diagonal() {
        let hd = HamiltonianData::build(&inst(4, &[[0, 1, 2], [0, 1, 3]])).unwrap();
        let m = hd.dense_matrix(sp(1.0)).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let want = if r == c { hd.cost()[r] as f64 } else { 0.0 };
                assert_eq!(m[(r, c)], want);
            }
        }
    }

    #[test]
    fn dense_agrees_with_matrix_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=6 {
            let i =
                crate::instance::generate_fixed_clauses(n, if n == 3 { 1 } else { n }, &mut rng)
                    .unwrap();
            let hd = HamiltonianData::build(&i).unwrap();
            for _ in 0..100 {
                let s = sp(rng.gen_range(0.0..=1.0));
                let psi = random_state(n, &mut rng);
                let m = hd.dense_matrix(s).unwrap();
                assert!((&m - m.transpose()).amax() < 1e-14);
                let dense: Vec<Complex64> = (0..hd.dim())
                    .map(|r| (0..hd.dim()).map(|c| psi.amplitudes()[c] * m[(r, c)]).sum())
                    .collect();
                let free = hd.apply_h_of_t(s, &psi).unwrap();
                assert!(max_diff(&dense, free.amplitudes()) < 1e-12);
            }
        }
    }

    #[test]
    fn dense_capacity_guard() {
        let hd = HamiltonianData::build(&ExactCoverInstance::empty(11).unwrap()).unwrap();
        assert!(matches!(
            hd.dense_matrix(sp(0.5)),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let hd = HamiltonianData::build(&ExactCoverInstance::empty(4).unwrap()).unwrap();
        let psi = initial_state(3).unwrap();
        assert!(matches!(
            hd.apply_h_of_t(sp(0.5), &psi),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn interpolation_point_range() {
        assert!(InterpolationPoint::new(-0.1).is_err());
        assert!(InterpolationPoint::new(1.0 + 1e-12).is_err());
        assert_eq!(InterpolationPoint::at(5.0, 10.0).unwrap().s(), 0.5);
    }

    #[test]
    fn spectrum_endpoints() {
        let i = inst(4, &[[0, 1, 2], [0, 1, 3], [1, 2, 3]]);
        assert_eq!(i.count_satisfying().unwrap(), 1);
        let hd = HamiltonianData::build(&i).unwrap();

        let lo = hd.low_spectrum(sp(0.0), 2).unwrap();
        assert!(lo.energies[0].abs() < 1e-10);
        assert!(lo.energies[1] > lo.energies[0]);
        let uniform = initial_state(4).unwrap();
        assert!((lo.states[0].inner(&uniform).norm() - 1.0).abs() < 1e-10);

        let hi = hd.low_spectrum(sp(1.0), 3).unwrap();
        assert!(hi.energies[0].abs() < 1e-10);
        let sat = i.enumerate_satisfying().unwrap()[0].index() as usize;
        assert!((hi.states[0].amplitudes()[sat].norm() - 1.0).abs() < 1e-10);
        for w in hi.energies.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for a in 0..3 {
            for b in 0..3 {
                let ip = hi.states[a].inner(&hi.states[b]).norm();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
    }
}
