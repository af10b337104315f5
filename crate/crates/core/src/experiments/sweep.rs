//! The ensemble sweeps. Every sweep is a pure function of its arguments:
//! instances come from per-index seeds and records are aggregated in index
//! order, so the worker count never changes the output.

use serde::{Deserialize, Serialize};

use super::{
    fit_quadratic, instance_seed, low_tail, median_with_ci, probability_histogram, run_parallel,
    seeded_rng, BandSearch, EnsembleRecord, LowTail, MedianCi, PreparedInstance, QuadraticFit,
    RecordFlag, SweepKind,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, StepControl};
use crate::instance::{generate_fixed_clauses, generate_gusa, ExactCoverInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    /// Integrator settings; the run time is set per probe.
    pub evolution: EvolutionConfig,
    pub search: BandSearch,
    /// Run the step-halving convergence check on each ensemble's first instance.
    pub self_check: bool,
    pub max_halvings: u32,
    /// Clause sweeps stop drawing after `quota * attempt_factor` instances.
    pub attempt_factor: usize,
}

impl SweepConfig {
    pub fn new(master_seed: u64) -> Self {
        SweepConfig {
            master_seed,
            workers: 0,
            evolution: EvolutionConfig::new(0.0),
            search: BandSearch::default(),
            self_check: true,
            max_halvings: 8,
            attempt_factor: 50,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Halves the default RK4 step until runs at `h` and `h + 1` halvings agree
/// within the oracle tolerance at `run_time`. Other step controls pass
/// through unchanged.
pub fn calibrate_step(
    prepared: &PreparedInstance,
    run_time: f64,
    base: &EvolutionConfig,
    max_halvings: u32,
) -> Result<EvolutionConfig> {
    let StepControl::Auto { halvings: start } = base.step_control else {
        return Ok(*base);
    };
    let at = |h: u32| {
        base.with_run_time(run_time)
            .with_step_control(StepControl::Auto { halvings: h })
    };
    let mut coarse = evolve(&prepared.hamiltonian, &at(start));
    let mut last = Error::SelfCheck {
        halvings: start,
        deviation: f64::INFINITY,
        tolerance: base.oracle_tolerance,
    };
    for h in start..max_halvings {
        let fine = evolve(&prepared.hamiltonian, &at(h + 1));
        if let (Ok(a), Ok(b)) = (&coarse, &fine) {
            let deviation = a.distance(b);
            if deviation <= base.oracle_tolerance {
                return Ok(base.with_step_control(StepControl::Auto { halvings: h }));
            }
            last = Error::SelfCheck {
                halvings: h,
                deviation,
                tolerance: base.oracle_tolerance,
            };
        }
        coarse = fine;
    }
    Err(last)
}

fn halvings_of(cfg: &EvolutionConfig) -> Option<u32> {
    match cfg.step_control {
        StepControl::Auto { halvings } => Some(halvings),
        _ => None,
    }
}

fn prepare_all(
    seeds: &[u64],
    workers: usize,
    gen: impl Fn(u64) -> Result<ExactCoverInstance> + Sync + Send,
) -> Result<Vec<PreparedInstance>> {
    run_parallel(workers, seeds, |&seed| {
        PreparedInstance::new(seed, gen(seed)?)
    })?
    .into_iter()
    .collect()
}

/// Evolves every instance at `run_time` and records its success probability.
fn evolve_records(
    items: &[(usize, &PreparedInstance)],
    cfg: &EvolutionConfig,
    workers: usize,
) -> Result<Vec<EnsembleRecord>> {
    run_parallel(workers, items, |&(index, p)| {
        let mut r = p.record(index);
        r.run_time = Some(cfg.run_time);
        match p.success_at(cfg) {
            Ok(prob) => r.success_probability = Some(prob),
            Err(e) => r.flag = RecordFlag::from_error(&e),
        }
        r
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianTimeRow {
    pub n: usize,
    pub instances: usize,
    /// `None` when fewer than two searches produced a time.
    pub median: Option<MedianCi>,
    pub flagged: usize,
    pub failed: usize,
    pub mean_clauses: f64,
    pub step_halvings: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianTimeSweep {
    pub rows: Vec<MedianTimeRow>,
    /// Quadratic fit through `(n, median T)`, when at least three `n` have one.
    pub fit: Option<QuadraticFit>,
    pub records: Vec<EnsembleRecord>,
}

/// Median band-search time over fresh GUSA instances at each `n`.
pub fn median_time_sweep(
    ns: &[usize],
    instances_per_n: usize,
    cfg: &SweepConfig,
) -> Result<MedianTimeSweep> {
    if instances_per_n == 0 {
        return Err(Error::InvalidParameter(
            "instances per n must be positive".into(),
        ));
    }
    cfg.evolution.validate()?;
    cfg.search.validate()?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in ns {
        let seeds: Vec<u64> = (0..instances_per_n)
            .map(|i| instance_seed(cfg.master_seed, SweepKind::MedianTime, n, 0, i))
            .collect();
        let prepared = prepare_all(&seeds, cfg.workers, |s| {
            generate_gusa(n, &mut seeded_rng(s))
        })?;

        let mut evo = cfg.evolution;
        if cfg.self_check {
            if let Ok(first) = prepared[0].find_time_for_band(&evo, &cfg.search) {
                evo = calibrate_step(&prepared[0], 2.0 * first.run_time, &evo, cfg.max_halvings)?;
            }
        }

        let items: Vec<(usize, &PreparedInstance)> = prepared.iter().enumerate().collect();
        let search = cfg.search;
        let row_records: Vec<EnsembleRecord> = run_parallel(cfg.workers, &items, |&(index, p)| {
            let mut r = p.record(index);
            match p.find_time_for_band(&evo, &search) {
                Ok(ts) => {
                    r.run_time = Some(ts.run_time);
                    r.success_probability = Some(ts.probability);
                    r.probes = ts.probes;
                    if ts.stalled {
                        r.flag = RecordFlag::Stalled;
                    }
                }
                Err(e) => {
                    if let Error::SearchFailure { probes, .. } = &e {
                        r.probes = probes.clone();
                    }
                    r.flag = RecordFlag::from_error(&e);
                }
            }
            r
        })?;

        let times: Vec<f64> = row_records.iter().filter_map(|r| r.run_time).collect();
        rows.push(MedianTimeRow {
            n,
            instances: instances_per_n,
            median: median_with_ci(&times, 0.95).ok(),
            flagged: row_records
                .iter()
                .filter(|r| r.flag == RecordFlag::Stalled)
                .count(),
            failed: row_records.iter().filter(|r| r.run_time.is_none()).count(),
            mean_clauses: row_records
                .iter()
                .map(|r| r.clause_count as f64)
                .sum::<f64>()
                / instances_per_n as f64,
            step_halvings: halvings_of(&evo),
        });
        records.extend(row_records);
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.median.map(|m| (r.n as f64, m.median)))
        .collect();
    let fit = fit_quadratic(&points).ok();
    Ok(MedianTimeSweep { rows, fit, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTRow {
    pub n: usize,
    pub run_time: f64,
    pub stats: Option<LowTail>,
    /// Instances with success probability at or below 0.04.
    pub at_or_below_004: usize,
    pub failed: usize,
    pub step_halvings: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTSweep {
    pub rows: Vec<FixedTRow>,
    pub records: Vec<EnsembleRecord>,
}

/// Success probability of fresh GUSA instances run at `T = fit(n)`.
pub fn fixed_t_sweep(
    ns: &[usize],
    fit: &QuadraticFit,
    instances_per_n: usize,
    histogram: bool,
    cfg: &SweepConfig,
) -> Result<FixedTSweep> {
    if instances_per_n == 0 {
        return Err(Error::InvalidParameter(
            "instances per n must be positive".into(),
        ));
    }
    cfg.evolution.validate()?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in ns {
        let run_time = fit.run_time(n)?;
        let seeds: Vec<u64> = (0..instances_per_n)
            .map(|i| instance_seed(cfg.master_seed, SweepKind::FixedT, n, 0, i))
            .collect();
        let prepared = prepare_all(&seeds, cfg.workers, |s| {
            generate_gusa(n, &mut seeded_rng(s))
        })?;
        let mut evo = cfg.evolution.with_run_time(run_time);
        if cfg.self_check {
            evo = calibrate_step(&prepared[0], run_time, &evo, cfg.max_halvings)?;
        }
        let items: Vec<(usize, &PreparedInstance)> = prepared.iter().enumerate().collect();
        let row_records = evolve_records(&items, &evo, cfg.workers)?;
        let probs: Vec<f64> = row_records
            .iter()
            .filter_map(|r| r.success_probability)
            .collect();
        rows.push(FixedTRow {
            n,
            run_time,
            stats: low_tail(&probs),
            at_or_below_004: probs.iter().filter(|&&p| p <= 0.04).count(),
            failed: row_records.len() - probs.len(),
            step_halvings: halvings_of(&evo),
            histogram: histogram.then(|| probability_histogram(&probs)),
        });
        records.extend(row_records);
    }
    Ok(FixedTSweep { rows, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub requested: usize,
    pub found: usize,
    pub stats: Option<LowTail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseSweepRow {
    pub m: usize,
    pub attempts: usize,
    pub satisfiable: CategoryStats,
    pub unsatisfiable: CategoryStats,
    /// Satisfiable instances with exactly one satisfying assignment.
    pub usa: Option<LowTail>,
    /// Satisfiable instances with more than one.
    pub multi: Option<LowTail>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseSweep {
    pub n: usize,
    pub run_time: f64,
    pub step_halvings: Option<u32>,
    pub rows: Vec<ClauseSweepRow>,
    pub records: Vec<EnsembleRecord>,
}

/// Fixed-clause-count instances, split by satisfiability, run at `T = fit(n)`.
///
/// At each `m`, instances are drawn in index order and assigned to the
/// satisfiable or unsatisfiable category until both hold `quota` instances
/// or `quota * attempt_factor` draws have been made.
pub fn clause_sweep(
    n: usize,
    ms: &[usize],
    quota: usize,
    fit: &QuadraticFit,
    cfg: &SweepConfig,
) -> Result<ClauseSweep> {
    if quota == 0 {
        return Err(Error::InvalidParameter(
            "instances per point must be positive".into(),
        ));
    }
    if ms.contains(&0) {
        return Err(Error::InvalidParameter(
            "clause count 0 has no constraints; start the clause range at 1".into(),
        ));
    }
    cfg.evolution.validate()?;
    let run_time = fit.run_time(n)?;
    let cap = quota.saturating_mul(cfg.attempt_factor.max(1));

    struct Point {
        m: usize,
        attempts: usize,
        sat: Vec<(usize, PreparedInstance)>,
        unsat: Vec<(usize, PreparedInstance)>,
    }
    let mut points = Vec::new();
    for &m in ms {
        let mut pt = Point {
            m,
            attempts: 0,
            sat: Vec::new(),
            unsat: Vec::new(),
        };
        while (pt.sat.len() < quota || pt.unsat.len() < quota) && pt.attempts < cap {
            let index = pt.attempts;
            pt.attempts += 1;
            let seed = instance_seed(cfg.master_seed, SweepKind::Clauses, n, m, index);
            let inst = generate_fixed_clauses(n, m, &mut seeded_rng(seed))?;
            let satisfiable = inst.count_satisfying()? > 0;
            let bucket = if satisfiable {
                &mut pt.sat
            } else {
                &mut pt.unsat
            };
            if bucket.len() < quota {
                bucket.push((index, PreparedInstance::new(seed, inst)?));
            }
        }
        points.push(pt);
    }

    let mut evo = cfg.evolution.with_run_time(run_time);
    if cfg.self_check {
        if let Some((_, first)) = points
            .iter()
            .flat_map(|p| p.sat.iter().chain(&p.unsat))
            .next()
        {
            evo = calibrate_step(first, run_time, &evo, cfg.max_halvings)?;
        }
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for pt in &points {
        let items: Vec<(usize, &PreparedInstance)> = pt
            .sat
            .iter()
            .chain(&pt.unsat)
            .map(|(i, p)| (*i, p))
            .collect();
        let mut recs = evolve_records(&items, &evo, cfg.workers)?;
        recs.sort_by_key(|r| r.index);

        let probs = |pred: &dyn Fn(&EnsembleRecord) -> bool| -> Vec<f64> {
            recs.iter()
                .filter(|r| pred(r))
                .filter_map(|r| r.success_probability)
                .collect()
        };
        let sat_p = probs(&|r| r.satisfiable);
        let unsat_p = probs(&|r| !r.satisfiable);
        let mut notices = Vec::new();
        for (name, found) in [
            ("satisfiable", pt.sat.len()),
            ("unsatisfiable", pt.unsat.len()),
        ] {
            if found == 0 {
                notices.push(format!(
                    "m = {}: no {name} instances in {} attempts; category skipped",
                    pt.m, pt.attempts
                ));
            } else if found < quota {
                notices.push(format!(
                    "m = {}: only {found} of {quota} {name} instances in {} attempts",
                    pt.m, pt.attempts
                ));
            }
        }
        rows.push(ClauseSweepRow {
            m: pt.m,
            attempts: pt.attempts,
            satisfiable: CategoryStats {
                requested: quota,
                found: pt.sat.len(),
                stats: low_tail(&sat_p),
            },
            unsatisfiable: CategoryStats {
                requested: quota,
                found: pt.unsat.len(),
                stats: low_tail(&unsat_p),
            },
            usa: low_tail(&probs(&|r| r.satisfiable && r.is_usa())),
            multi: low_tail(&probs(&|r| r.satisfiable && r.num_satisfying > 1)),
            notices,
        });
        records.extend(recs);
    }
    Ok(ClauseSweep {
        n,
        run_time,
        step_halvings: halvings_of(&evo),
        rows,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub m: usize,
    pub instances: usize,
    pub unsat: usize,
    pub usa: usize,
    pub multi: usize,
    pub fraction_unsat: f64,
    pub fraction_usa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub n: usize,
    pub rows: Vec<PhaseRow>,
    pub records: Vec<EnsembleRecord>,
}

/// Fractions of unsatisfiable and uniquely satisfiable fixed-clause instances.
pub fn phase_transition_scan(
    n: usize,
    ms: &[usize],
    instances_per_point: usize,
    cfg: &SweepConfig,
) -> Result<PhaseScan> {
    if instances_per_point == 0 {
        return Err(Error::InvalidParameter(
            "instances per point must be positive".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        let seeds: Vec<(usize, u64)> = (0..instances_per_point)
            .map(|i| (i, instance_seed(cfg.master_seed, SweepKind::Phase, n, m, i)))
            .collect();
        let recs: Vec<EnsembleRecord> = run_parallel(cfg.workers, &seeds, |&(index, seed)| {
            let inst = generate_fixed_clauses(n, m, &mut seeded_rng(seed))?;
            let count = inst.count_satisfying()?;
            Ok(EnsembleRecord {
                index,
                seed,
                n,
                clause_count: m,
                satisfiable: count > 0,
                num_satisfying: count,
                min_violations: if count > 0 {
                    0
                } else {
                    inst.minimal_violation_set()?.0
                },
                unconstrained_bits: inst.unconstrained_bits(),
                run_time: None,
                success_probability: None,
                probes: Vec::new(),
                flag: RecordFlag::Ok,
            })
        })?
        .into_iter()
        .collect::<Result<_>>()?;
        let unsat = recs.iter().filter(|r| !r.satisfiable).count();
        let usa = recs.iter().filter(|r| r.is_usa()).count();
        let total = recs.len() as f64;
        rows.push(PhaseRow {
            m,
            instances: recs.len(),
            unsat,
            usa,
            multi: recs.len() - unsat - usa,
            fraction_unsat: unsat as f64 / total,
            fraction_usa: usa as f64 / total,
        });
        records.extend(recs);
    }
    Ok(PhaseScan { n, rows, records })
}
