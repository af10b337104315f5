use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unweighted least-squares `T(n) = a0 + a1 n + a2 n²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// `[a0, a1, a2]`.
    pub coefficients: [f64; 3],
    pub points: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
}

impl QuadraticFit {
    pub fn eval(&self, n: f64) -> f64 {
        let [a0, a1, a2] = self.coefficients;
        a0 + n * (a1 + n * a2)
    }

    /// `T(n)`, rejecting non-positive predictions.
    pub fn run_time(&self, n: usize) -> Result<f64> {
        let t = self.eval(n as f64);
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fit predicts T({n}) = {t}, which is not a usable run time"
            )));
        }
        Ok(t)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn fit_quadratic(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::Underdetermined { distinct: xs.len() });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument("fit points must be finite".into()));
    }
    let rows = points.len();
    let design = DMatrix::from_fn(rows, 3, |r, c| points[r].0.powi(c as i32));
    let rhs = DVector::from_iterator(rows, points.iter().map(|p| p.1));
    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?;
    let coefficients = [coeffs[0], coeffs[1], coeffs[2]];
    let fitted = &design * &coeffs;
    let residuals = (0..rows).map(|r| rhs[r] - fitted[r]).collect();
    Ok(QuadraticFit {
        coefficients,
        points: points.to_vec(),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_exact_quadratic() {
        let pts: Vec<(f64, f64)> = (5..=20)
            .map(|n| (n as f64, 1.0 + 2.0 * n as f64 + 3.0 * (n * n) as f64))
            .collect();
        let f = fit_quadratic(&pts).unwrap();
        for (got, want) in f.coefficients.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{:?}", f.coefficients);
        }
    }

    #[test]
    fn three_points_interpolate() {
        let f = fit_quadratic(&[(1.0, 4.0), (2.0, -1.0), (4.0, 10.0)]).unwrap();
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn residuals_orthogonal_to_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<(f64, f64)> = (10..=20)
            .flat_map(|n| {
                let n = n as f64;
                [0, 1].map(|_| (n, 0.2 * n * n - n + 5.0 + rng.gen_range(-2.0..2.0)))
            })
            .collect();
        let f = fit_quadratic(&pts).unwrap();
        for k in 0..3 {
            let dot: f64 = pts
                .iter()
                .zip(&f.residuals)
                .map(|(p, r)| r * p.0.powi(k))
                .sum();
            assert!(dot.abs() < 1e-8, "k = {k}: {dot}");
        }
    }

    #[test]
    fn underdetermined() {
        let r = fit_quadratic(&[(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)]);
        assert!(matches!(r, Err(Error::Underdetermined { distinct: 2 })));
    }

    #[test]
    fn run_time_guard() {
        let f = QuadraticFit {
            coefficients: [-10.0, 0.0, 0.0],
            points: vec![],
            residuals: vec![],
        };
        assert!(f.run_time(5).is_err());
    }
}
