//! Normal-approximation error bounds for the region count.
//!
//! All bounds are reported as computed, including when they exceed 1 and
//! therefore say nothing at that `n`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::DistanceDistribution;
use crate::error::{Error, Result};
use crate::moments::{moment_set, region_moments};

/// Smooth-test-function bound `6 n^{5/2} / sigma^2 + 2 n^4 / sigma^3`,
/// with `||h|| = ||h'|| = 1`. Proven only for `n > 5`.
pub fn smooth_function_bound(n: u64, sigma: f64) -> Result<f64> {
    if n <= 5 {
        return Err(Error::BoundValidity(n));
    }
    check_sigma(sigma)?;
    let nf = n as f64;
    Ok(6.0 * nf.powf(2.5) / (sigma * sigma) + 2.0 * nf.powi(4) / sigma.powi(3))
}

/// Kolmogorov-distance bound `14 n^4 / sigma^3`.
pub fn kolmogorov_bound(n: u64, sigma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_sigma(sigma)?;
    Ok(14.0 * (n as f64).powi(4) / sigma.powi(3))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")))
    }
}

/// Inputs to the generic bound `7 n mu (D B)^2 / sigma^3` for a sum of
/// `n_vars` locally dependent variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RinottParams {
    pub n_vars: f64,
    /// Mean absolute deviation of the summands.
    pub mu: f64,
    /// Largest dependency neighbourhood.
    pub d: f64,
    /// Almost-sure bound on `|Y_i - E Y_i|`.
    pub b: f64,
    pub sigma: f64,
}

impl RinottParams {
    pub fn new(n_vars: f64, mu: f64, d: f64, b: f64, sigma: f64) -> Result<Self> {
        let p = RinottParams { n_vars, mu, d, b, sigma };
        p.validate()?;
        Ok(p)
    }

    /// The crossing indicators of `n` chords: `n(n-1)/2` Bernoulli summands
    /// with `mu <= 1`, `B <= 1` and `D = 2n - 3`.
    pub fn chord_model(n: u64, sigma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("chord model needs n >= 2".into()));
        }
        let nf = n as f64;
        RinottParams::new(nf * (nf - 1.0) / 2.0, 1.0, 2.0 * nf - 3.0, 1.0, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.n_vars, self.mu, self.d, self.b, self.sigma];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!("bound parameters must be positive: {self:?}")));
        }
        if self.mu > self.b {
            return Err(Error::InvalidArgument(format!(
                "mean absolute deviation {} exceeds a.s. bound {}",
                self.mu, self.b
            )));
        }
        Ok(())
    }
}

pub fn rinott_bound(p: &RinottParams) -> Result<f64> {
    p.validate()?;
    Ok(7.0 * p.n_vars * p.mu * (p.d * p.b).powi(2) / p.sigma.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinBounds {
    pub n: u64,
    pub sigma: f64,
    pub smooth_bound: f64,
    pub kolmogorov_bound: f64,
}

impl SteinBounds {
    pub fn compute(n: u64, sigma: f64) -> Result<Self> {
        Ok(SteinBounds {
            n,
            sigma,
            smooth_bound: smooth_function_bound(n, sigma)?,
            kolmogorov_bound: kolmogorov_bound(n, sigma)?,
        })
    }

    /// A bound above 1 carries no information.
    pub fn is_vacuous(&self) -> bool {
        self.kolmogorov_bound >= 1.0 && self.smooth_bound >= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: u64,
    pub sigma: f64,
    pub smooth_bound: f64,
    pub kolmogorov_bound: f64,
    pub kol_times_sqrt_n: f64,
    pub vacuous: bool,
}

/// Bounds at each `n` using the analytic `sigma_n`. The last column tends
/// to a constant when the bound decays like `n^{-1/2}`.
pub fn scaling_diagnostic(dist: &DistanceDistribution, ns: &[u64]) -> Result<Vec<DiagnosticRow>> {
    if let Some(&bad) = ns.iter().find(|&&n| n <= 5) {
        return Err(Error::BoundValidity(bad));
    }
    let m = moment_set(dist)?;
    ns.iter()
        .map(|&n| {
            let sigma = region_moments(n, &m)?.sigma;
            let b = SteinBounds::compute(n, sigma)?;
            Ok(DiagnosticRow {
                n,
                sigma,
                smooth_bound: b.smooth_bound,
                kolmogorov_bound: b.kolmogorov_bound,
                kol_times_sqrt_n: b.kolmogorov_bound * (n as f64).sqrt(),
                vacuous: b.is_vacuous(),
            })
        })
        .collect()
}

pub fn write_diagnostic_csv<W: Write>(rows: &[DiagnosticRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "sigma", "smooth_bound", "kolmogorov_bound", "kol_times_sqrt_n"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.sigma.to_string(),
            r.smooth_bound.to_string(),
            r.kolmogorov_bound.to_string(),
            r.kol_times_sqrt_n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sine_distance, uniform_distance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn smooth_examples() {
        let v = smooth_function_bound(100, 144.32).unwrap();
        assert_abs_diff_eq!(v, 6e5 / (144.32f64 * 144.32) + 2e8 / 144.32f64.powi(3), epsilon = 1e-9);
        assert!((v - 95.3).abs() < 0.5);
        let v = smooth_function_bound(6, 1.0).unwrap();
        assert_abs_diff_eq!(v, 6.0 * 6f64.powf(2.5) + 2.0 * 1296.0, epsilon = 1e-9);
        assert!(matches!(smooth_function_bound(5, 1.0), Err(Error::BoundValidity(5))));
    }

    #[test]
    fn kolmogorov_examples() {
        assert!((kolmogorov_bound(100, 144.32).unwrap() - 465.7).abs() < 1.0);
        assert_eq!(kolmogorov_bound(1, 1.0).unwrap(), 14.0);
        let a = kolmogorov_bound(50, 3.0).unwrap();
        let b = kolmogorov_bound(50, 6.0).unwrap();
        assert_abs_diff_eq!(a / b, 8.0, epsilon = 1e-12);
        assert!(kolmogorov_bound(10, 0.0).is_err());
    }

    #[test]
    fn rinott_examples() {
        assert_eq!(rinott_bound(&RinottParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()).unwrap(), 7.0);
        let n = 100u64;
        let sigma = 144.3;
        let p = RinottParams::chord_model(n, sigma).unwrap();
        let nf = n as f64;
        let expected = 7.0 * (nf * (nf - 1.0) / 2.0) * (2.0 * nf - 3.0).powi(2) / sigma.powi(3);
        assert_abs_diff_eq!(rinott_bound(&p).unwrap(), expected, epsilon = 1e-9);
        assert!(rinott_bound(&p).unwrap() <= kolmogorov_bound(n, sigma).unwrap());
        assert!(RinottParams::new(1.0, 2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rinott_independent_case_decays_like_one_over_n() {
        // constant D, sigma ~ n, n^2 summands
        let at = |n: f64| rinott_bound(&RinottParams::new(n * n / 2.0, 0.5, 3.0, 1.0, 0.4 * n).unwrap()).unwrap();
        let ratio = at(1e4) * 1e4 / (at(1e5) * 1e5);
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-9);
        assert!(at(1e5) < at(1e4));
    }

    #[test]
    fn diagnostic_examples() {
        let rows = scaling_diagnostic(&sine_distance(), &[1000, 10_000, 100_000]).unwrap();
        let (a, b) = (rows[1].kol_times_sqrt_n, rows[2].kol_times_sqrt_n);
        assert!((a - b).abs() / b < 0.03);
        let small = scaling_diagnostic(&sine_distance(), &[10, 20]).unwrap();
        assert!(small.iter().all(|r| r.smooth_bound > 0.0 && r.kolmogorov_bound.is_finite() && r.vacuous));
        let rows = scaling_diagnostic(&uniform_distance(), &[1000, 10_000]).unwrap();
        let (a, b) = (rows[0].kol_times_sqrt_n, rows[1].kol_times_sqrt_n);
        assert!((a - b).abs() / b < 0.03);
        assert!(matches!(scaling_diagnostic(&sine_distance(), &[100, 5]), Err(Error::BoundValidity(5))));
    }

    #[test]
    fn diagnostic_csv_header() {
        let rows = scaling_diagnostic(&sine_distance(), &[100]).unwrap();
        let mut buf = Vec::new();
        write_diagnostic_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,sigma,smooth_bound,kolmogorov_bound,kol_times_sqrt_n\n100,"));
    }

    proptest! {
        #[test]
        fn monotone_in_sigma_and_n(n in 6u64..5000, s in 1.0..1e6f64, k in 1.01..4.0f64) {
            prop_assert!(kolmogorov_bound(n, s * k).unwrap() < kolmogorov_bound(n, s).unwrap());
            prop_assert!(smooth_function_bound(n, s * k).unwrap() < smooth_function_bound(n, s).unwrap());
            prop_assert!(kolmogorov_bound(n + 1, s).unwrap() > kolmogorov_bound(n, s).unwrap());
            prop_assert!(smooth_function_bound(n + 1, s).unwrap() > smooth_function_bound(n, s).unwrap());
        }

        #[test]
        fn chord_rinott_below_kolmogorov(n in 2u64..100_000) {
            let sigma = region_moments(n, &moment_set(&sine_distance()).unwrap()).unwrap().sigma;
            let p = RinottParams::chord_model(n, sigma).unwrap();
            prop_assert!(rinott_bound(&p).unwrap() <= kolmogorov_bound(n, sigma).unwrap());
        }
    }
}
