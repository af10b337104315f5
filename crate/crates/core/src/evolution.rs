//! State vectors, the Schrödinger integrator and success-probability readout.
//!
//! `evolve` integrates `i dψ/dt = H(t/T) ψ` from the uniform superposition
//! with an explicit Runge-Kutta scheme. The state is never renormalized; the
//! final norm drift is checked against the configured tolerance instead.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianData;
use crate::instance::{check_capacity, Assignment};

/// Largest `n` for which a state dump may be written.
pub const DUMP_MAX_BITS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `2^n` complex amplitudes; index `z` is the little-endian assignment `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_capacity(n)?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidState(format!(
                "{} amplitudes given for {n} bits (need {})",
                amps.len(),
                1usize << n
            )));
        }
        Ok(StateVector { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        StateVector { n, amps }
    }

    /// The computational basis state `|z⟩`.
    pub fn basis(n: usize, z: u32) -> Result<Self> {
        let a = Assignment::new(z, n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[a.index() as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> StateVector {
        StateVector {
            n: self.n,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    /// JSON array of `[re, im]` pairs in index order.
    pub fn to_json(&self) -> Result<String> {
        if self.n > DUMP_MAX_BITS {
            return Err(Error::Capacity {
                what: "n (state dump)",
                value: self.n,
                limit: DUMP_MAX_BITS,
            });
        }
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        Ok(serde_json::to_string(&pairs)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
        let len = pairs.len();
        if !len.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        Self::new(
            n,
            pairs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// The uniform superposition `2^{-n/2} Σ_z |z⟩`.
pub fn initial_state(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_capacity(n)?;
    let a = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
    Ok(StateVector::from_raw(n, vec![a; 1 << n]))
}

/// How the integrator chooses its time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepControl {
    /// RK4 with `dt = min(0.01, 1 / (4 E_max)) / 2^halvings`, where
    /// `E_max = max_z h(z) + max_i d_i`.
    Auto { halvings: u32 },
    /// RK4 with `ceil(T * steps_per_unit)` equal steps.
    Fixed { steps_per_unit: f64 },
    /// Dormand-Prince 5(4) with per-step error target on the state 2-norm.
    Adaptive { local_tolerance: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Auto { halvings: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub run_time: f64,
    pub step_control: StepControl,
    /// Largest accepted `|‖ψ(T)‖ - 1|`.
    pub norm_tolerance: f64,
    /// Largest accepted deviation from a reference propagation.
    pub oracle_tolerance: f64,
}

impl EvolutionConfig {
    pub fn new(run_time: f64) -> Self {
        EvolutionConfig {
            run_time,
            step_control: StepControl::default(),
            norm_tolerance: 1e-6,
            oracle_tolerance: 1e-6,
        }
    }

    pub fn with_run_time(mut self, run_time: f64) -> Self {
        self.run_time = run_time;
        self
    }

    pub fn with_step_control(mut self, step_control: StepControl) -> Self {
        self.step_control = step_control;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.run_time.is_finite() && self.run_time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "run time T = {} must be finite and >= 0",
                self.run_time
            )));
        }
        if !(self.norm_tolerance > 0.0 && self.oracle_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        match self.step_control {
            StepControl::Auto { halvings } if halvings > 30 => Err(Error::InvalidParameter(
                format!("{halvings} step halvings is too many"),
            )),
            StepControl::Fixed { steps_per_unit }
                if steps_per_unit.is_nan() || steps_per_unit <= 0.0 =>
            {
                Err(Error::InvalidParameter(format!(
                    "steps per unit time {steps_per_unit} must be > 0"
                )))
            }
            StepControl::Adaptive { local_tolerance }
                if local_tolerance.is_nan() || local_tolerance <= 0.0 =>
            {
                Err(Error::InvalidParameter(format!(
                    "local tolerance {local_tolerance} must be > 0"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Step statistics for one integration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EvolutionStats {
    pub steps: usize,
    pub rejected: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub norm_drift: f64,
}

/// Default fixed step for a Hamiltonian, before any halving.
pub fn default_step(hd: &HamiltonianData) -> f64 {
    let e = hd.energy_scale();
    if e > 0.0 {
        (1.0 / (4.0 * e)).min(0.01)
    } else {
        0.01
    }
}

/// `ψ(T)` from the uniform superposition.
pub fn evolve(hd: &HamiltonianData, cfg: &EvolutionConfig) -> Result<StateVector> {
    evolve_with_stats(hd, cfg).map(|(psi, _)| psi)
}

pub fn evolve_with_stats(
    hd: &HamiltonianData,
    cfg: &EvolutionConfig,
) -> Result<(StateVector, EvolutionStats)> {
    evolve_state(hd, cfg, initial_state(hd.n())?)
}

/// Integrates from an arbitrary state `psi0` at `t = 0`.
pub fn evolve_state(
    hd: &HamiltonianData,
    cfg: &EvolutionConfig,
    psi0: StateVector,
) -> Result<(StateVector, EvolutionStats)> {
    cfg.validate()?;
    if psi0.n() != hd.n() {
        return Err(Error::InvalidState(format!(
            "initial state has {} bits, Hamiltonian has {}",
            psi0.n(),
            hd.n()
        )));
    }
    let norm0 = psi0.norm();
    let mut psi = psi0;
    let mut stats = if cfg.run_time == 0.0 {
        EvolutionStats::default()
    } else {
        match cfg.step_control {
            StepControl::Auto { halvings } => {
                let dt = default_step(hd) / f64::from(1u32 << halvings);
                let steps = (cfg.run_time / dt).ceil().max(1.0) as usize;
                rk4_fixed(hd, cfg.run_time, steps, &mut psi.amps)
            }
            StepControl::Fixed { steps_per_unit } => {
                let steps = (cfg.run_time * steps_per_unit).ceil().max(1.0) as usize;
                rk4_fixed(hd, cfg.run_time, steps, &mut psi.amps)
            }
            StepControl::Adaptive { local_tolerance } => dopri5(
                hd,
                cfg.run_time,
                local_tolerance,
                default_step(hd),
                &mut psi.amps,
            ),
        }
    };
    stats.norm_drift = (psi.norm() - norm0).abs();
    if stats.norm_drift > cfg.norm_tolerance {
        return Err(Error::IntegrationAccuracy {
            drift: stats.norm_drift,
            tolerance: cfg.norm_tolerance,
            steps: stats.steps,
            dt: stats.dt_min,
            run_time: cfg.run_time,
        });
    }
    Ok((psi, stats))
}

/// `out = -i H(s) psi`.
#[inline]
fn deriv(hd: &HamiltonianData, s: f64, psi: &[Complex64], out: &mut [Complex64]) {
    hd.apply_into(s, psi, out);
    for v in out.iter_mut() {
        *v = Complex64::new(v.im, -v.re);
    }
}

fn rk4_fixed(
    hd: &HamiltonianData,
    run_time: f64,
    steps: usize,
    psi: &mut [Complex64],
) -> EvolutionStats {
    let dim = psi.len();
    let dt = run_time / steps as f64;
    let half = 0.5 * dt;
    let mut k = vec![ZERO; dim];
    let mut acc = vec![ZERO; dim];
    let mut tmp = vec![ZERO; dim];
    for step in 0..steps {
        let t = step as f64 * dt;
        let s0 = t / run_time;
        let sm = (t + half) / run_time;
        let s1 = ((step + 1) as f64 * dt / run_time).min(1.0);

        deriv(hd, s0, psi, &mut k);
        for z in 0..dim {
            acc[z] = k[z];
            tmp[z] = psi[z] + k[z] * half;
        }
        deriv(hd, sm, &tmp, &mut k);
        for z in 0..dim {
            acc[z] += k[z] * 2.0;
            tmp[z] = psi[z] + k[z] * half;
        }
        deriv(hd, sm, &tmp, &mut k);
        for z in 0..dim {
            acc[z] += k[z] * 2.0;
            tmp[z] = psi[z] + k[z] * dt;
        }
        deriv(hd, s1, &tmp, &mut k);
        for z in 0..dim {
            psi[z] += (acc[z] + k[z]) * (dt / 6.0);
        }
    }
    EvolutionStats {
        steps,
        rejected: 0,
        dt_min: dt,
        dt_max: dt,
        norm_drift: 0.0,
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights minus 4th-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dopri5(
    hd: &HamiltonianData,
    run_time: f64,
    tol: f64,
    dt0: f64,
    psi: &mut [Complex64],
) -> EvolutionStats {
    let dim = psi.len();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![ZERO; dim]).collect();
    let mut stage = vec![ZERO; dim];
    let mut next = vec![ZERO; dim];
    let mut stats = EvolutionStats {
        dt_min: f64::INFINITY,
        ..Default::default()
    };
    let mut t = 0.0;
    let mut dt = dt0.min(run_time);
    deriv(hd, 0.0, psi, &mut k[0]);
    while t < run_time {
        let last = t + dt >= run_time;
        let h = if last { run_time - t } else { dt };
        for i in 1..7 {
            for z in 0..dim {
                let mut incr = ZERO;
                for (j, kj) in k.iter().enumerate().take(i) {
                    let a = DP_A[i][j];
                    if a != 0.0 {
                        incr += kj[z] * a;
                    }
                }
                stage[z] = psi[z] + incr * h;
            }
            let s = ((t + DP_C[i] * h) / run_time).min(1.0);
            let (_, tail) = k.split_at_mut(i);
            deriv(hd, s, &stage, &mut tail[0]);
            if i == 6 {
                next.copy_from_slice(&stage);
            }
        }
        // stage 6 is evaluated at the 5th-order solution, so k[6] is FSAL
        let err = (0..dim)
            .map(|z| {
                let mut e = ZERO;
                for (j, kj) in k.iter().enumerate() {
                    if DP_E[j] != 0.0 {
                        e += kj[z] * DP_E[j];
                    }
                }
                (e * h).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        if err <= tol {
            psi.copy_from_slice(&next);
            t = if last { run_time } else { t + h };
            stats.steps += 1;
            stats.dt_min = stats.dt_min.min(h);
            stats.dt_max = stats.dt_max.max(h);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            dt = h * factor;
        } else {
            stats.rejected += 1;
            dt = h * factor.min(1.0);
        }
    }
    stats
}

/// `Σ_{z ∈ targets} |ψ_z|²`, clamped to `[0, 1]`.
pub fn success_probability(psi: &StateVector, targets: &[Assignment]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("target set is empty".into()));
    }
    let mut p = 0.0;
    for a in targets {
        if a.n() != psi.n() {
            return Err(Error::InvalidArgument(format!(
                "target {a} has {} bits, state has {}",
                a.n(),
                psi.n()
            )));
        }
        p += psi.amps[a.index() as usize].norm_sqr();
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Probability of at least one success in `k` independent runs.
pub fn amplified_success(p: f64, k: u32) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if p == 1.0 {
        return 1.0;
    }
    -(f64::from(k) * (-p).ln_1p()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_gusa, Clause, ExactCoverInstance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_state_examples() {
        let one = initial_state(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(one
            .amplitudes()
            .iter()
            .all(|a| (a.re - h).abs() < 1e-16 && a.im == 0.0));
        let two = initial_state(2).unwrap();
        assert!(two
            .amplitudes()
            .iter()
            .all(|a| *a == Complex64::new(0.5, 0.0)));
        for n in 1..=12 {
            assert!((initial_state(n).unwrap().norm() - 1.0).abs() < 1e-14);
        }
        assert!(initial_state(0).is_err());
        assert!(initial_state(25).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let i = ExactCoverInstance::new(3, vec![Clause::new(0, 1, 2).unwrap()]).unwrap();
        let hd = HamiltonianData::build(&i).unwrap();
        let psi = evolve(&hd, &EvolutionConfig::new(0.0)).unwrap();
        assert_eq!(psi, initial_state(3).unwrap());
        let targets = i.enumerate_satisfying().unwrap();
        assert!((success_probability(&psi, &targets).unwrap() - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn success_probability_examples() {
        let basis = StateVector::basis(4, 9).unwrap();
        let t = [Assignment::new(9, 4).unwrap()];
        assert_eq!(success_probability(&basis, &t).unwrap(), 1.0);
        let u = initial_state(4).unwrap();
        assert!((success_probability(&u, &t).unwrap() - 1.0 / 16.0).abs() < 1e-16);
        assert!(success_probability(&u, &[]).is_err());
        let wrong = [Assignment::new(1, 3).unwrap()];
        assert!(success_probability(&u, &wrong).is_err());
    }

    #[test]
    fn amplification_examples() {
        assert!(amplified_success(0.04, 200) > 0.9997);
        assert_eq!(amplified_success(1.0, 7), 1.0);
        assert!((amplified_success(0.125, 1) - 0.125).abs() < 1e-16);
        assert_eq!(amplified_success(0.0, 10), 0.0);
    }

    #[test]
    fn integrators_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let i = generate_gusa(6, &mut rng).unwrap();
        let hd = HamiltonianData::build(&i).unwrap();
        let base = EvolutionConfig::new(10.0);
        let rk = evolve(
            &hd,
            &base.with_step_control(StepControl::Auto { halvings: 2 }),
        )
        .unwrap();
        let fixed = evolve(
            &hd,
            &base.with_step_control(StepControl::Fixed {
                steps_per_unit: 400.0,
            }),
        )
        .unwrap();
        let (dp, stats) = evolve_with_stats(
            &hd,
            &base.with_step_control(StepControl::Adaptive {
                local_tolerance: 1e-10,
            }),
        )
        .unwrap();
        assert!(rk.distance(&fixed) < 1e-7);
        assert!(rk.distance(&dp) < 1e-7);
        assert!(stats.steps > 0);
    }

    #[test]
    fn norm_drift_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let i = generate_gusa(6, &mut rng).unwrap();
        let hd = HamiltonianData::build(&i).unwrap();
        // one RK4 step over T = 20 is far outside the stability region
        let cfg = EvolutionConfig::new(20.0).with_step_control(StepControl::Fixed {
            steps_per_unit: 0.05,
        });
        match evolve(&hd, &cfg) {
            Err(Error::IntegrationAccuracy { steps, .. }) => assert_eq!(steps, 1),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(-1.0).validate().is_err());
        assert!(EvolutionConfig::new(f64::NAN).validate().is_err());
        let mut c = EvolutionConfig::new(1.0);
        c.norm_tolerance = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn state_dump_round_trip() {
        let psi = initial_state(3).unwrap().scaled(Complex64::new(0.0, 1.0));
        let text = psi.to_json().unwrap();
        assert_eq!(StateVector::from_json(&text).unwrap(), psi);
        assert!(initial_state(11).unwrap().to_json().is_err());
        assert!(StateVector::from_json("[[1.0,0.0],[0.0,0.0],[0.0,0.0]]").is_err());
    }
}
