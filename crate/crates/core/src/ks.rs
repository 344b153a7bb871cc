//! One-sample Kolmogorov-Smirnov test against the standard normal,
//! plus the normalization and histogram helpers around it.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistSpec, DistanceDistribution};
use crate::error::{Error, Result};
use crate::moments::{moment_set, region_moments};
use crate::rng::mix_seed;
use crate::simulation::{run_batch_with, SimulationConfig};

const SERIES_EPS: f64 = 1e-12;
const MIN_HIST_WIDTH: f64 = 1e-9;

/// `P(Z < x)` for a standard normal `Z`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normalize(samples: &[f64], mean: f64, sigma: f64) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::ZeroVariance(sigma));
    }
    Ok(samples.iter().map(|x| (x - mean) / sigma).collect())
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
///
/// Below `lambda = 1.18` the alternating series converges slowly, so the
/// equivalent Jacobi-transformed form
/// `1 - sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))` is used.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let mut sum = 0.0;
        for k in 1.. {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * PI * PI / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < SERIES_EPS * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
                break;
            }
        }
        return (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1.. {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < SERIES_EPS {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
}

/// KS statistic of `samples` against an arbitrary continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            ((i + 1) as f64 / m - c).max(c - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value with the small-sample scaling
/// `lambda = (sqrt(M) + 0.12 + 0.11 / sqrt(M)) D`.
pub fn ks_p_value(statistic: f64, m: usize) -> f64 {
    let sm = (m as f64).sqrt();
    kolmogorov_sf((sm + 0.12 + 0.11 / sm) * statistic)
}

pub fn ks_one_sample_normal(samples: &[f64]) -> Result<KsReport> {
    if samples.len() < 5 {
        return Err(Error::SampleSize(samples.len()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("KS samples must be finite".into()));
    }
    let statistic = ks_statistic(samples, std_normal_cdf).clamp(0.0, 1.0);
    Ok(KsReport { statistic, p_value: ks_p_value(statistic, samples.len()), sample_size: samples.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width bins over `[min, max]`; the last bin includes `max`. A zero
/// range is widened to 1e-9.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty sample".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("histogram samples must be finite".into()));
    }
    let width = (hi - lo).max(MIN_HIST_WIDTH) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    bin_edges[bins] = bin_edges[bins].max(hi);
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { bin_edges, counts })
}

impl Histogram {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "count"])?;
        for (edge, count) in self.bin_edges.windows(2).zip(&self.counts) {
            w.write_record([edge[0].to_string(), edge[1].to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n: u64,
    pub reps: u64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Where the centering and scaling constants of a KS run come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Analytic `E[F_n]` and `sigma_n`.
    #[default]
    Analytic,
    /// Sample mean and standard deviation of the batch (exploration only).
    Sample,
}

/// Simulates `reps` arrangements of `n` chords, normalizes `F_n` by the
/// analytic mean and `sigma_n`, and runs the KS test.
pub fn ks_for_batch(dist: &DistanceDistribution, n: u64, reps: u64, seed: u64) -> Result<(KsReport, Vec<f64>)> {
    ks_for_batch_with(dist, n, reps, seed, Normalization::Analytic)
}

pub fn ks_for_batch_with(
    dist: &DistanceDistribution,
    n: u64,
    reps: u64,
    seed: u64,
    how: Normalization,
) -> Result<(KsReport, Vec<f64>)> {
    let config = SimulationConfig::new(n, reps, seed, DistSpec::of(dist));
    config.validate()?;
    let analytic = match how {
        Normalization::Analytic => Some(region_moments(n, &moment_set(dist)?)?),
        Normalization::Sample => None,
    };
    let result = run_batch_with(config, dist);
    let (mean, sigma) = match analytic {
        Some(m) => (m.mean_f, m.sigma),
        None => (result.summary.mean, result.summary.std_dev),
    };
    let z = normalize(&result.f_values().collect::<Vec<_>>(), mean, sigma)?;
    Ok((ks_one_sample_normal(&z)?, z))
}

/// Master seed used for row `n` of a table run, so rows do not share chords.
pub fn table_row_seed(seed: u64, n: u64) -> u64 {
    mix_seed(seed, n)
}

pub fn ks_table(ns: &[u64], reps: u64, dist: &DistanceDistribution, seed: u64) -> Result<Vec<KsRow>> {
    ns.iter()
        .map(|&n| {
            let (report, _) = ks_for_batch(dist, n, reps, table_row_seed(seed, n))?;
            Ok(KsRow { n, reps, statistic: report.statistic, p_value: report.p_value })
        })
        .collect()
}

pub fn write_ks_table_csv<W: Write>(rows: &[KsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "number_of_chords", "repetition", "statistic", "p_value"])?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.n.to_string(),
            r.reps.to_string(),
            r.statistic.to_string(),
            r.p_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sine_distance;
    use crate::rng::RandomStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(40.0) - 1.0).abs() < 1e-15);
        assert_abs_diff_eq!(std_normal_cdf(1.959963985), 0.975, epsilon = 1e-9);
        // high-precision references
        assert_abs_diff_eq!(std_normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-12);
        assert_abs_diff_eq!(std_normal_cdf(-3.0), 0.001_349_898_031_630_093_3, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_sf_reference_values() {
        // asymptotic Kolmogorov survival function, high-precision reference
        let refs = [
            (0.3, 0.999_990_694_198_665_5),
            (0.5, 0.963_945_243_664_875_1),
            (0.8, 0.544_142_411_574_198_1),
            (1.0, 0.269_999_671_677_354_56),
            (1.18, 0.123_453_809_429_765_7),
            (1.5, 0.022_217_962_616_525_127),
            (2.0, 0.000_670_925_255_779_695_3),
        ];
        for (lam, want) in refs {
            assert_abs_diff_eq!(kolmogorov_sf(lam), want, epsilon = 1e-12);
        }
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        // the two series agree across the switch-over
        assert_abs_diff_eq!(kolmogorov_sf(1.18 - 1e-12), kolmogorov_sf(1.18), epsilon = 1e-10);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2576.0], 2576.0, 144.3).unwrap(), vec![0.0]);
        assert_eq!(normalize(&[12.0], 10.0, 2.0).unwrap(), vec![1.0]);
        assert!(normalize(&[], 0.0, 1.0).unwrap().is_empty());
        assert!(matches!(normalize(&[1.0], 0.0, 0.0), Err(Error::ZeroVariance(_))));
    }

    fn normal_quantile(p: f64) -> f64 {
        // bisection on the cdf; test-only
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ideal_quantiles_fit() {
        let m = 100;
        let xs: Vec<f64> = (1..=m).map(|i| normal_quantile((i as f64 - 0.5) / m as f64)).collect();
        let r = ks_one_sample_normal(&xs).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.005, epsilon = 1e-12);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn degenerate_sample_rejected() {
        let r = ks_one_sample_normal(&[0.0; 100]).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.5, epsilon = 1e-15);
        assert!(r.p_value < 1e-10);
        assert!(matches!(ks_one_sample_normal(&[0.0; 4]), Err(Error::SampleSize(4))));
    }

    #[test]
    fn calibration_under_null() {
        let mut s = RandomStream::new(2718, 0);
        let rejections = (0..200)
            .filter(|_| {
                let xs: Vec<f64> = (0..200).map(|_| s.next_standard_normal()).collect();
                ks_one_sample_normal(&xs).unwrap().p_value < 0.05
            })
            .count();
        let frac = rejections as f64 / 200.0;
        assert!((0.01..=0.10).contains(&frac), "rejection rate {frac}");
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.bin_edges, vec![1.0, 2.5, 4.0]);
        assert_eq!(h.counts, vec![2, 2]);
        let h = histogram(&[3.0; 10], 4).unwrap();
        assert_eq!(h.counts, vec![10, 0, 0, 0]);
        assert!(h.bin_edges.windows(2).all(|w| w[1] > w[0]));
        assert!((h.bin_edges[4] - h.bin_edges[0] - 1e-9).abs() < 1e-15);
        assert!(histogram(&[], 3).is_err());
        assert!(histogram(&[1.0], 0).is_err());
    }

    #[test]
    fn histogram_of_simulation() {
        let (_, z) = ks_for_batch(&sine_distance(), 100, 1000, 4).unwrap();
        let h = histogram(&z, 30).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 31);
    }

    #[test]
    fn degenerate_table_row() {
        let err = ks_table(&[1], 100, &sine_distance(), 0).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)));
    }

    #[test]
    fn table_csv_header() {
        let rows = ks_table(&[10, 20], 30, &sine_distance(), 1).unwrap();
        let mut buf = Vec::new();
        write_ks_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,number_of_chords,repetition,statistic,p_value\n0,10,30,"));
    }

    proptest! {
        #[test]
        fn own_quantiles_fit(mut xs in proptest::collection::vec(-1e3..1e3f64, 5..200)) {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            prop_assume!(xs.len() >= 5);
            let m = xs.len();
            // continuous cdf passing through the ECDF midpoints
            let cdf = |x: f64| {
                let k = xs.partition_point(|&v| v < x);
                if k < m && xs[k] == x {
                    (k as f64 + 0.5) / m as f64
                } else {
                    k as f64 / m as f64
                }
            };
            prop_assert!(ks_statistic(&xs, cdf) <= 0.5 / m as f64 + 1e-12);
        }

        #[test]
        fn p_value_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64, m in 5usize..5000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(ks_p_value(lo, m) >= ks_p_value(hi, m));
        }

        #[test]
        fn histogram_conserves(xs in proptest::collection::vec(-50.0..50.0f64, 1..300), bins in 1usize..40) {
            let h = histogram(&xs, bins).unwrap();
            prop_assert_eq!(h.counts.len(), h.bin_edges.len() - 1);
            prop_assert_eq!(h.counts.iter().sum::<u64>(), xs.len() as u64);
            prop_assert!(h.bin_edges.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn sample_normalization_is_centred() {
        let (_, z) = ks_for_batch_with(&sine_distance(), 30, 200, 4, Normalization::Sample).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        let (a, _) = ks_for_batch_with(&sine_distance(), 30, 200, 4, Normalization::Analytic).unwrap();
        assert_eq!(a, ks_for_batch(&sine_distance(), 30, 200, 4).unwrap().0);
        assert!(matches!(
            ks_for_batch_with(&sine_distance(), 1, 20, 4, Normalization::Sample),
            Err(Error::ZeroVariance(_))
        ));
    }
}
