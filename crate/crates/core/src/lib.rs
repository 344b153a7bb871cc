//! Regions cut out of the unit disc by random chords.
//!
//! `n` i.i.d. chords with uniform left endpoint and half angle drawn from a
//! distance distribution split the disc into `F_n = R_n + n + 1` regions,
//! where `R_n` counts interior crossings. This crate simulates `F_n`,
//! computes its mean and standard deviation by quadrature, evaluates the
//! normal-approximation error bounds and runs Kolmogorov-Smirnov checks on
//! simulated batches. An independent sign-vector oracle verifies the region
//! formula.

pub mod distributions;
pub mod error;
pub mod geometry;
pub mod ks;
pub mod moments;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod stein;

/// Library version, recorded in JSON outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use distributions::{
    sample_chord, sine_distance, tabulated_distance, uniform_distance, ChordSampler, DistSpec, DistanceDistribution,
    EndpointSampler, TabulatedDensity,
};
pub use error::{Error, Result};
pub use geometry::{crosses, crosses_cartesian, intersection_point, Angle, Chord, Point2};
pub use ks::{histogram, ks_one_sample_normal, ks_table, normalize, std_normal_cdf, Histogram, KsReport, KsRow};
pub use moments::{
    estimate_moments_mc, expected_cross_prob, expected_joint_cross_prob, g_function, moment_set, region_moments,
    MomentSet, MomentSource, RegionMoments,
};
pub use oracle::{adaptive_oracle, count_regions_signvector, small_case_table, OracleReport};
pub use rng::RandomStream;
pub use simulation::{
    count_intersections, count_regions, euler_counts, run_batch, ArrangementCounts, SimulationConfig, SimulationResult,
};
pub use stein::{kolmogorov_bound, rinott_bound, scaling_diagnostic, smooth_function_bound, RinottParams, SteinBounds};
