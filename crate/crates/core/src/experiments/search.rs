//! Search for a run time whose success probability lands in a target band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Probe, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSearch {
    pub p_lo: f64,
    pub p_hi: f64,
    pub t_start: f64,
    pub t_max: f64,
    pub max_bisections: usize,
}

impl Default for BandSearch {
    fn default() -> Self {
        BandSearch {
            p_lo: 0.12,
            p_hi: 0.13,
            t_start: 1.0,
            t_max: (1u64 << 20) as f64,
            max_bisections: 60,
        }
    }
}

impl BandSearch {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.p_lo && self.p_lo <= self.p_hi && self.p_hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "band [{}, {}] must satisfy 0 < lo <= hi < 1",
                self.p_lo, self.p_hi
            )));
        }
        if !(self.t_start > 0.0 && self.t_max >= self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < t_start <= t_max, got t_start = {}, t_max = {}",
                self.t_start, self.t_max
            )));
        }
        Ok(())
    }

    fn in_band(&self, p: f64) -> bool {
        self.p_lo <= p && p <= self.p_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSearch {
    pub run_time: f64,
    pub probability: f64,
    /// Every `(T, p)` evaluated, in probe order.
    pub probes: Vec<Probe>,
    /// Bisection used its full budget without entering the band.
    pub stalled: bool,
}

/// Doubles `T` from `t_start` until `p(T) >= p_lo`, then bisects between the
/// last two doubling probes. Any probe inside the band is returned at once.
pub fn search_band<F>(search: &BandSearch, mut prob: F) -> Result<TimeSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    search.validate()?;
    let mut probes = Vec::new();
    let mut lo = 0.0;
    let mut t = search.t_start;
    let overshoot = loop {
        let p = prob(t)?;
        probes.push((t, p));
        if search.in_band(p) {
            return Ok(TimeSearch {
                run_time: t,
                probability: p,
                probes,
                stalled: false,
            });
        }
        if p >= search.p_lo {
            break (t, p);
        }
        if t * 2.0 > search.t_max {
            return Err(Error::SearchFailure {
                t_max: search.t_max,
                probes,
            });
        }
        lo = t;
        t *= 2.0;
    };

    let mut hi = overshoot.0;
    for _ in 0..search.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = prob(mid)?;
        probes.push((mid, p));
        if search.in_band(p) {
            return Ok(TimeSearch {
                run_time: mid,
                probability: p,
                probes,
                stalled: false,
            });
        }
        if p < search.p_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // fall back to the doubling probe that overshot the band
    Ok(TimeSearch {
        run_time: overshoot.0,
        probability: overshoot.1,
        probes,
        stalled: true,
    })
}
