//! Distance distributions for the half angle `theta` on `[0, pi/2]` and the
//! chord samplers built on them.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Chord;
use crate::rng::RandomStream;

const COVER_TOL: f64 = 1e-6;
const MIN_NODES: usize = 8;

/// Density of the half angle on `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceDistribution {
    /// `f(theta) = sin theta`; the distance `cos theta` is uniform on `[0, 1]`.
    Sine,
    /// `f(theta) = 2 / pi`.
    Uniform,
    Tabulated(TabulatedDensity),
}

pub fn sine_distance() -> DistanceDistribution {
    DistanceDistribution::Sine
}

pub fn uniform_distance() -> DistanceDistribution {
    DistanceDistribution::Uniform
}

pub fn tabulated_distance(grid: &[(f64, f64)]) -> Result<DistanceDistribution> {
    TabulatedDensity::new(grid).map(DistanceDistribution::Tabulated)
}

impl DistanceDistribution {
    pub fn name(&self) -> String {
        match self {
            DistanceDistribution::Sine => "sine".into(),
            DistanceDistribution::Uniform => "uniform".into(),
            DistanceDistribution::Tabulated(t) => match &t.source {
                Some(p) => format!("table:{}", p.display()),
                None => "tabulated".into(),
            },
        }
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return 0.0;
        }
        match self {
            DistanceDistribution::Sine => theta.sin(),
            DistanceDistribution::Uniform => 1.0 / FRAC_PI_2,
            DistanceDistribution::Tabulated(t) => t.pdf(theta),
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= FRAC_PI_2 {
            return 1.0;
        }
        match self {
            // 1 - cos written to keep relative precision near zero
            DistanceDistribution::Sine => 2.0 * (0.5 * theta).sin().powi(2),
            DistanceDistribution::Uniform => theta / FRAC_PI_2,
            DistanceDistribution::Tabulated(t) => t.cdf(theta),
        }
    }

    /// Smallest `theta` with `cdf(theta) >= u`; `u` is clamped to `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            // arccos(1 - u) in a form that stays positive for tiny u
            DistanceDistribution::Sine => (2.0 * (0.5 * u).sqrt().asin()).min(FRAC_PI_2),
            DistanceDistribution::Uniform => u * FRAC_PI_2,
            DistanceDistribution::Tabulated(t) => t.quantile(u),
        }
    }

    /// Points where the density has a kink; quadrature splits there.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            DistanceDistribution::Tabulated(t) => &t.theta,
            _ => &[],
        }
    }

    /// Resolves `sine`, `uniform` or `table:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        DistSpec::parse(spec)?.resolve()
    }
}

impl fmt::Display for DistanceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Piecewise-linear density through user-supplied nodes, renormalized to
/// unit mass. The cdf is the exact (piecewise quadratic) integral of the
/// interpolant and the quantile inverts it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    theta: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
    source: Option<PathBuf>,
}

impl TabulatedDensity {
    pub fn new(grid: &[(f64, f64)]) -> Result<Self> {
        if grid.len() < MIN_NODES {
            return Err(Error::InvalidTable {
                node: grid.len(),
                reason: format!("need at least {MIN_NODES} nodes, got {}", grid.len()),
            });
        }
        for (i, &(t, p)) in grid.iter().enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::InvalidTable { node: i, reason: "non-finite value".into() });
            }
            if p < 0.0 {
                return Err(Error::InvalidTable { node: i, reason: format!("negative density {p}") });
            }
            if i > 0 && t <= grid[i - 1].0 {
                return Err(Error::InvalidTable {
                    node: i,
                    reason: format!("theta {t} does not increase past {}", grid[i - 1].0),
                });
            }
        }
        let first = grid[0].0;
        let last = grid[grid.len() - 1].0;
        if first.abs() > COVER_TOL {
            return Err(Error::InvalidTable { node: 0, reason: format!("grid starts at {first}, not 0") });
        }
        if (last - FRAC_PI_2).abs() > COVER_TOL {
            return Err(Error::InvalidTable { node: grid.len() - 1, reason: format!("grid ends at {last}, not pi/2") });
        }

        let mut theta: Vec<f64> = grid.iter().map(|g| g.0).collect();
        let n = theta.len();
        theta[0] = 0.0;
        theta[n - 1] = FRAC_PI_2;
        if theta[1] <= 0.0 || theta[n - 2] >= FRAC_PI_2 {
            return Err(Error::InvalidTable { node: 1, reason: "nodes collapse after snapping to [0, pi/2]".into() });
        }
        let mut density: Vec<f64> = grid.iter().map(|g| g.1).collect();

        let mass: f64 =
            theta.windows(2).zip(density.windows(2)).map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1])).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidTable { node: 0, reason: "zero total mass".into() });
        }
        density.iter_mut().for_each(|p| *p /= mass);

        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..n {
            acc += 0.5 * (theta[i] - theta[i - 1]) * (density[i] + density[i - 1]);
            cumulative.push(acc);
        }
        // absorb rounding so cdf(pi/2) is exactly 1
        let total = cumulative[n - 1];
        cumulative.iter_mut().for_each(|c| *c /= total);
        cumulative[n - 1] = 1.0;

        Ok(TabulatedDensity { theta, density, cumulative, source: None })
    }

    /// Parses the two-column `theta pdf` text format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                cols.next()
                    .ok_or_else(|| format!("missing {what} column"))
                    .and_then(|s| s.parse::<f64>().map_err(|e| format!("bad {what} '{s}': {e}")))
                    .map_err(|reason| Error::InvalidTable {
                        node: grid.len(),
                        reason: format!("line {}: {reason}", lineno + 1),
                    })
            };
            let t = next("theta")?;
            let p = next("pdf")?;
            grid.push((t, p));
        }
        TabulatedDensity::new(&grid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::TableIo { path: path.to_path_buf(), source })?;
        let mut table = TabulatedDensity::parse(&text)?;
        table.source = Some(path.to_path_buf());
        Ok(table)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta.iter().copied().zip(self.density.iter().copied())
    }

    fn segment(&self, theta: f64) -> usize {
        // index k with theta[k] <= theta < theta[k+1]
        let k = self.theta.partition_point(|&t| t <= theta);
        k.saturating_sub(1).min(self.theta.len() - 2)
    }

    fn pdf(&self, theta: f64) -> f64 {
        let k = self.segment(theta);
        let h = self.theta[k + 1] - self.theta[k];
        let t = (theta - self.theta[k]) / h;
        self.density[k] + t * (self.density[k + 1] - self.density[k])
    }

    fn cdf(&self, theta: f64) -> f64 {
        let k = self.segment(theta);
        let h = self.theta[k + 1] - self.theta[k];
        let dt = theta - self.theta[k];
        let slope = (self.density[k + 1] - self.density[k]) / h;
        (self.cumulative[k] + dt * (self.density[k] + 0.5 * slope * dt)).clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let n = self.theta.len();
        // first segment whose right cumulative reaches u
        let k = (self.cumulative.partition_point(|&c| c < u)).clamp(1, n - 1) - 1;
        let h = self.theta[k + 1] - self.theta[k];
        let r = u - self.cumulative[k];
        let p0 = self.density[k];
        let half_slope = 0.5 * (self.density[k + 1] - p0) / h;
        // root of half_slope*t^2 + p0*t - r = 0 in [0, h], cancellation-free
        let disc = (p0 * p0 + 4.0 * half_slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let dt = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.theta[k] + dt.clamp(0.0, h)).min(FRAC_PI_2)
    }
}

/// A source of random chords. Each call must draw only from `stream`.
pub trait ChordSampler: Sync {
    fn sample(&self, stream: &mut RandomStream) -> Chord;

    /// True when the left endpoint is uniform on the circle and independent
    /// of the half angle.
    fn endpoints_independent_uniform(&self) -> bool {
        false
    }
}

/// Draws `alpha ~ U[0, 2pi)` and `theta = quantile(u)` from exactly two
/// uniform variates, in that order.
pub fn sample_chord(stream: &mut RandomStream, dist: &DistanceDistribution) -> Chord {
    let alpha = stream.next_f64() * TAU;
    let theta = dist.quantile(stream.next_open01()).clamp(f64::MIN_POSITIVE, FRAC_PI_2);
    Chord::new(alpha, theta).expect("quantile lies in (0, pi/2]")
}

impl ChordSampler for DistanceDistribution {
    fn sample(&self, stream: &mut RandomStream) -> Chord {
        sample_chord(stream, self)
    }

    fn endpoints_independent_uniform(&self) -> bool {
        true
    }
}

/// Generalized sampler: any generator of endpoint angle pairs, which may be
/// nonuniform or correlated with the chord length.
pub struct EndpointSampler<F> {
    generate: F,
}

impl<F> EndpointSampler<F>
where
    F: Fn(&mut RandomStream) -> (f64, f64) + Sync,
{
    pub fn new(generate: F) -> Self {
        EndpointSampler { generate }
    }
}

impl<F> ChordSampler for EndpointSampler<F>
where
    F: Fn(&mut RandomStream) -> (f64, f64) + Sync,
{
    fn sample(&self, stream: &mut RandomStream) -> Chord {
        loop {
            let (a, b) = (self.generate)(stream);
            // coincident endpoints have probability zero; redraw
            if let Ok(c) = Chord::from_endpoints(a, b) {
                return c;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DistSpec {
    Sine,
    Uniform,
    Table(PathBuf),
    /// A tabulated density built in memory; echoed in output, not resolvable.
    Inline,
}

impl DistSpec {
    pub fn of(dist: &DistanceDistribution) -> Self {
        match dist {
            DistanceDistribution::Sine => DistSpec::Sine,
            DistanceDistribution::Uniform => DistSpec::Uniform,
            DistanceDistribution::Tabulated(t) => match &t.source {
                Some(p) => DistSpec::Table(p.clone()),
                None => DistSpec::Inline,
            },
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "sine" => Ok(DistSpec::Sine),
            "uniform" => Ok(DistSpec::Uniform),
            s => match s.strip_prefix("table:") {
                Some(p) if !p.is_empty() => Ok(DistSpec::Table(PathBuf::from(p))),
                _ => Err(Error::UnknownDistribution(s.to_string())),
            },
        }
    }

    pub fn resolve(&self) -> Result<DistanceDistribution> {
        match self {
            DistSpec::Sine => Ok(DistanceDistribution::Sine),
            DistSpec::Uniform => Ok(DistanceDistribution::Uniform),
            DistSpec::Table(p) => TabulatedDensity::load(p).map(DistanceDistribution::Tabulated),
            DistSpec::Inline => Err(Error::UnknownDistribution("inline table cannot be re-resolved".into())),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Sine => f.write_str("sine"),
            DistSpec::Uniform => f.write_str("uniform"),
            DistSpec::Table(p) => write!(f, "table:{}", p.display()),
            DistSpec::Inline => f.write_str("tabulated"),
        }
    }
}
