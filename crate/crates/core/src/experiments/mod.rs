//! Ensemble experiments: run-time search, medians, fits and sweeps.

mod fit;
mod search;
mod stats;
mod sweep;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Probe, Result};
use crate::evolution::{evolve, success_probability, EvolutionConfig};
use crate::hamiltonian::HamiltonianData;
use crate::instance::{Assignment, ExactCoverInstance};

pub use fit::{fit_quadratic, QuadraticFit};
pub use search::{search_band, BandSearch, TimeSearch};
pub use stats::{
    low_tail, median_sorted, median_with_ci, order_statistic_rank, probability_histogram, LowTail,
    MedianCi,
};
pub use sweep::{
    calibrate_step, clause_sweep, fixed_t_sweep, median_time_sweep, phase_transition_scan,
    CategoryStats, ClauseSweep, ClauseSweepRow, FixedTRow, FixedTSweep, MedianTimeRow,
    MedianTimeSweep, PhaseRow, PhaseScan, SweepConfig,
};

/// Distinguishes the instance streams of different sweep kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    MedianTime,
    FixedT,
    Clauses,
    Phase,
}

impl SweepKind {
    fn tag(self) -> u64 {
        match self {
            SweepKind::MedianTime => 1,
            SweepKind::FixedT => 2,
            SweepKind::Clauses => 3,
            SweepKind::Phase => 4,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-instance seed as a hash of the master seed and the instance's
/// coordinates, so results never depend on execution order.
pub fn instance_seed(master: u64, kind: SweepKind, n: usize, m: usize, index: usize) -> u64 {
    [kind.tag(), n as u64, m as u64, index as u64]
        .iter()
        .fold(splitmix64(master), |h, &v| splitmix64(h ^ v))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An instance with its Hamiltonian and success targets precomputed.
///
/// Targets are the satisfying assignments, or the minimal-violation
/// assignments when there are none.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub seed: u64,
    pub instance: ExactCoverInstance,
    pub hamiltonian: HamiltonianData,
    pub targets: Vec<Assignment>,
    pub min_violations: u32,
}

impl PreparedInstance {
    pub fn new(seed: u64, instance: ExactCoverInstance) -> Result<Self> {
        let hamiltonian = HamiltonianData::build(&instance)?;
        let (min_violations, targets) = instance.minimal_violation_set()?;
        Ok(PreparedInstance {
            seed,
            instance,
            hamiltonian,
            targets,
            min_violations,
        })
    }

    pub fn satisfiable(&self) -> bool {
        self.min_violations == 0
    }

    pub fn num_satisfying(&self) -> usize {
        if self.satisfiable() {
            self.targets.len()
        } else {
            0
        }
    }

    /// Success probability after evolving for `cfg.run_time`.
    pub fn success_at(&self, cfg: &EvolutionConfig) -> Result<f64> {
        let psi = evolve(&self.hamiltonian, cfg)?;
        success_probability(&psi, &self.targets)
    }

    /// Time search for the band, using `cfg` with its run time overridden.
    pub fn find_time_for_band(
        &self,
        cfg: &EvolutionConfig,
        search: &BandSearch,
    ) -> Result<TimeSearch> {
        search_band(search, |t| self.success_at(&cfg.with_run_time(t)))
    }

    fn record(&self, index: usize) -> EnsembleRecord {
        EnsembleRecord {
            index,
            seed: self.seed,
            n: self.instance.n(),
            clause_count: self.instance.num_clauses(),
            satisfiable: self.satisfiable(),
            num_satisfying: self.num_satisfying(),
            min_violations: self.min_violations,
            unconstrained_bits: self.instance.unconstrained_bits(),
            run_time: None,
            success_probability: None,
            probes: Vec::new(),
            flag: RecordFlag::Ok,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFlag {
    Ok,
    /// Bisection never entered the band; `T` is the overshooting probe.
    Stalled,
    /// Doubling passed `T_max`.
    SearchFailed,
    /// The integrator could not meet its tolerance.
    IntegrationFailed,
    Error,
}

impl RecordFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordFlag::Ok => "",
            RecordFlag::Stalled => "stalled",
            RecordFlag::SearchFailed => "search-failed",
            RecordFlag::IntegrationFailed => "integration-failed",
            RecordFlag::Error => "error",
        }
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::SearchFailure { .. } => RecordFlag::SearchFailed,
            Error::IntegrationAccuracy { .. } => RecordFlag::IntegrationFailed,
            _ => RecordFlag::Error,
        }
    }
}

/// One instance's outcome within a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub clause_count: usize,
    pub satisfiable: bool,
    pub num_satisfying: usize,
    pub min_violations: u32,
    pub unconstrained_bits: usize,
    pub run_time: Option<f64>,
    pub success_probability: Option<f64>,
    /// `(T, p)` probes of a time search, in probe order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Probe>,
    pub flag: RecordFlag,
}

impl EnsembleRecord {
    pub fn is_usa(&self) -> bool {
        self.num_satisfying == 1
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "seed",
    "n",
    "clauses",
    "satisfiable",
    "num_sat",
    "T",
    "prob",
    "flag",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row per record, in the order given.
pub fn write_records_csv<W: Write>(records: &[EnsembleRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.clause_count.to_string(),
            if r.satisfiable { "yes" } else { "no" }.to_string(),
            r.num_satisfying.to_string(),
            opt(r.run_time),
            opt(r.success_probability),
            r.flag.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_csv(records: &[EnsembleRecord]) -> String {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Runs `f` over `items` on `workers` threads (0 = all cores), keeping order.
pub(crate) fn run_parallel<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}
