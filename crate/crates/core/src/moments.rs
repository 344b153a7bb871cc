//! Crossing moments `E[A12]`, `E[A12 A13]` and the region-count moments
//! derived from them.
//!
//! With `g(theta) = theta - int_0^theta F(t) dt` (equivalently
//! `E[min(theta, Theta')]`), the crossing probability of two chords given
//! the first has half angle `theta` is `(2/pi) g(theta)`, so
//!
//! ```text
//! E[A12]     = (2/pi)   E[g(Theta)]
//! E[A12 A13] = (4/pi^2) E[g(Theta)^2]
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::distributions::{ChordSampler, DistanceDistribution};
use crate::error::{Error, Result};
use crate::geometry::crosses;
use crate::quadrature::{integrate_with_breaks, Estimate};
use crate::rng::RandomStream;

pub const G_TOL: f64 = 1e-10;
pub const CROSS_TOL: f64 = 1e-9;
pub const JOINT_TOL: f64 = 1e-8;
pub const CROSS_CHECK_TOL: f64 = 1e-8;
pub const MIN_MC_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSource {
    ClosedForm,
    Quadrature { tolerance: f64 },
    MonteCarlo { trials: u64, se_a12: f64, se_a12a13: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub e_a12: f64,
    pub e_a12a13: f64,
    pub source: MomentSource,
}

impl MomentSet {
    /// `E[A12 A13] - E[A12]^2`, the covariance of two crossings sharing a chord.
    pub fn covariance(&self) -> f64 {
        self.e_a12a13 - self.e_a12 * self.e_a12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMoments {
    pub n: u64,
    pub mean_f: f64,
    pub var_r: f64,
    pub sigma: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain(theta))
    }
}

fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, dist: &DistanceDistribution, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, a, b, dist.breakpoints(), tol).map(|e: Estimate| e.value)
}

/// Infallible evaluation used inside outer integrands, where an inner
/// failure is reported by the outer routine through a NaN.
fn g_or_nan(dist: &DistanceDistribution, theta: f64, tol: f64) -> f64 {
    quad(|t| dist.cdf(t), 0.0, theta, dist, tol).map_or(f64::NAN, |v| theta - v)
}

fn nan_guard(v: f64, tol: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature { achieved: f64::INFINITY, tolerance: tol })
    }
}

/// `g(theta) = theta - int_0^theta cdf(t) dt`.
pub fn g_function(dist: &DistanceDistribution, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta - quad(|t| dist.cdf(t), 0.0, theta, dist, G_TOL)?)
}

/// `E[A12]` as the double integral
/// `(4/pi) int_0^{pi/2} f(s) int_0^s t f(t) dt ds`.
pub fn cross_prob_double_integral(dist: &DistanceDistribution) -> Result<f64> {
    let inner_tol = CROSS_TOL / 10.0;
    let outer = |s: f64| {
        let inner = quad(|t| t * dist.pdf(t), 0.0, s, dist, inner_tol).unwrap_or(f64::NAN);
        dist.pdf(s) * inner
    };
    let v = quad(outer, 0.0, FRAC_PI_2, dist, CROSS_TOL * PI / 4.0)?;
    nan_guard(4.0 / PI * v, CROSS_TOL)
}

/// `E[g(Theta)]` and `E[g(Theta)^2]` by quadrature.
pub fn g_moments(dist: &DistanceDistribution) -> Result<(f64, f64)> {
    let inner_tol = G_TOL / 10.0;
    let m1 = quad(|t| g_or_nan(dist, t, inner_tol) * dist.pdf(t), 0.0, FRAC_PI_2, dist, G_TOL)?;
    let m2 = quad(|t| g_or_nan(dist, t, inner_tol).powi(2) * dist.pdf(t), 0.0, FRAC_PI_2, dist, G_TOL)?;
    Ok((nan_guard(m1, G_TOL)?, nan_guard(m2, G_TOL)?))
}

/// `E[A12]` through the double integral, cross-checked against
/// `(2/pi) E[g]`.
pub fn expected_cross_prob(dist: &DistanceDistribution) -> Result<f64> {
    let direct = cross_prob_double_integral(dist)?;
    let (mean_g, _) = g_moments(dist)?;
    let via_g = 2.0 / PI * mean_g;
    let diff = (direct - via_g).abs();
    if diff > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck { first: direct, second: via_g, diff });
    }
    Ok(direct)
}

/// `E[A12 A13] = (4/pi^2) int g(t)^2 f(t) dt`.
pub fn expected_joint_cross_prob(dist: &DistanceDistribution) -> Result<f64> {
    let inner_tol = JOINT_TOL / 100.0;
    let v =
        quad(|t| g_or_nan(dist, t, inner_tol).powi(2) * dist.pdf(t), 0.0, FRAC_PI_2, dist, JOINT_TOL * PI * PI / 4.0)?;
    nan_guard(4.0 / (PI * PI) * v, JOINT_TOL)
}

/// Moments by quadrature, cheap single-integral route via `g`.
pub fn quadrature_moments(dist: &DistanceDistribution) -> Result<MomentSet> {
    let (m1, m2) = g_moments(dist)?;
    Ok(MomentSet {
        e_a12: 2.0 / PI * m1,
        e_a12a13: 4.0 / (PI * PI) * m2,
        source: MomentSource::Quadrature { tolerance: G_TOL },
    })
}

/// Closed-form constants for the built-in densities, quadrature otherwise.
pub fn moment_set(dist: &DistanceDistribution) -> Result<MomentSet> {
    match dist {
        DistanceDistribution::Sine => {
            Ok(MomentSet { e_a12: 0.5, e_a12a13: 8.0 / (3.0 * PI * PI), source: MomentSource::ClosedForm })
        }
        DistanceDistribution::Uniform => {
            Ok(MomentSet { e_a12: 1.0 / 3.0, e_a12a13: 2.0 / 15.0, source: MomentSource::ClosedForm })
        }
        DistanceDistribution::Tabulated(_) => quadrature_moments(dist),
    }
}

/// Mean of `F_n`, variance of `R_n` and `sigma_n = sqrt(Var R_n)`.
pub fn region_moments(n: u64, m: &MomentSet) -> Result<RegionMoments> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let mean_f = pairs / 2.0 * m.e_a12 + nf + 1.0;
    let var_r = 0.25
        * (2.0 * pairs * m.e_a12 + 4.0 * pairs * (nf - 2.0) * m.e_a12a13
            - pairs * (4.0 * nf - 6.0) * m.e_a12 * m.e_a12);
    // rounding can leave tiny negatives when n = 1
    let var_r = if var_r < 0.0 && var_r > -1e-9 * pairs.max(1.0) { 0.0 } else { var_r };
    if var_r < 0.0 || !var_r.is_finite() {
        return Err(Error::InconsistentMoments(var_r));
    }
    Ok(RegionMoments { n, mean_f, var_r, sigma: var_r.sqrt() })
}

/// Monte Carlo estimate of the crossing moments for an arbitrary sampler:
/// each trial draws three chords and records `A12` and `A12 A13`.
pub fn estimate_moments_mc(sampler: &dyn ChordSampler, trials: u64, stream: &mut RandomStream) -> Result<MomentSet> {
    if trials < MIN_MC_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_MC_TRIALS} Monte Carlo trials, got {trials}")));
    }
    let (mut hits12, mut hits_both) = (0u64, 0u64);
    for _ in 0..trials {
        let c1 = sampler.sample(stream);
        let c2 = sampler.sample(stream);
        let c3 = sampler.sample(stream);
        if crosses(&c1, &c2) {
            hits12 += 1;
            if crosses(&c1, &c3) {
                hits_both += 1;
            }
        }
    }
    let t = trials as f64;
    let p1 = hits12 as f64 / t;
    let p2 = hits_both as f64 / t;
    Ok(MomentSet {
        e_a12: p1,
        e_a12a13: p2,
        source: MomentSource::MonteCarlo {
            trials,
            se_a12: (p1 * (1.0 - p1) / t).sqrt(),
            se_a12a13: (p2 * (1.0 - p2) / t).sqrt(),
        },
    })
}
