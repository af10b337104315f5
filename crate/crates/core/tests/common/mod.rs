//! Test-only oracles that share no code path with the integrator.
#![allow(dead_code)]

use adiabatic_core::hamiltonian::{HamiltonianData, InterpolationPoint};
use adiabatic_core::{initial_state, ExactCoverInstance, StateVector};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

fn dense_h(hd: &HamiltonianData, s: f64) -> DMatrix<Complex64> {
    hd.dense_matrix(InterpolationPoint::new(s.clamp(0.0, 1.0)).unwrap())
        .unwrap()
        .map(|x| Complex64::new(x, 0.0))
}

/// `exp(-i K)` for Hermitian `K`, by eigendecomposition.
fn unitary_exp(k: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(k);
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        v.nrows(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::new(0.0, -l).exp()),
    ));
    v * phases * v.adjoint()
}

/// Piecewise propagator: on each of `steps` intervals the exact exponential of
/// the fourth-order Magnus generator built from `H` at the two Gauss points.
pub fn dense_propagate(
    hd: &HamiltonianData,
    run_time: f64,
    steps: usize,
    psi0: &StateVector,
) -> StateVector {
    let mut psi =
        DVector::from_iterator(psi0.amplitudes().len(), psi0.amplitudes().iter().copied());
    if run_time == 0.0 {
        return psi0.clone();
    }
    let h = run_time / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    for k in 0..steps {
        let t0 = k as f64 * h;
        let h1 = dense_h(hd, (t0 + (0.5 - c) * h) / run_time);
        let h2 = dense_h(hd, (t0 + (0.5 + c) * h) / run_time);
        let comm = &h1 * &h2 - &h2 * &h1;
        // Ω = -i K with K = h/2 (H1 + H2) + i √3 h² / 12 [H1, H2]
        let kmat = (&h1 + &h2) * Complex64::new(0.5 * h, 0.0)
            + comm * Complex64::new(0.0, 3f64.sqrt() * h * h / 12.0);
        psi = unitary_exp(kmat) * psi;
    }
    StateVector::new(psi0.n(), psi.iter().copied().collect()).unwrap()
}

pub fn dense_evolve(hd: &HamiltonianData, run_time: f64, steps: usize) -> StateVector {
    dense_propagate(hd, run_time, steps, &initial_state(hd.n()).unwrap())
}

/// Violation count by direct bit inspection.
pub fn brute_violations(inst: &ExactCoverInstance, z: u32) -> u32 {
    inst.clauses()
        .iter()
        .filter(|c| c.indices().iter().map(|&i| (z >> i) & 1).sum::<u32>() != 1)
        .count() as u32
}

pub fn brute_min_violations(inst: &ExactCoverInstance) -> (u32, Vec<u32>) {
    let table: Vec<u32> = (0..1u32 << inst.n())
        .map(|z| brute_violations(inst, z))
        .collect();
    let min = *table.iter().min().unwrap();
    let arg = (0..1u32 << inst.n())
        .filter(|&z| table[z as usize] == min)
        .collect();
    (min, arg)
}
