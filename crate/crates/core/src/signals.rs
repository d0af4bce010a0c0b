//! Finite-horizon sampled signals and the input families used to probe operators.
//!
//! A [`SampledSignal`] is a uniformly sampled real signal standing in for an
//! element of L2. All integrals use the left rectangle rule, so
//! `<u, y> = sum_i u[i] * y[i] * dt`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};

/// Fraction of trailing samples inspected by the energy-tail criterion.
pub const TAIL_FRACTION: f64 = 0.05;
/// Maximum share of energy allowed in the trailing [`TAIL_FRACTION`] of samples.
pub const TAIL_ENERGY_LIMIT: f64 = 0.01;

const GRID_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    dt: f64,
    start: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        Self::with_start(samples, dt, 0.0)
    }

    /// A signal whose first sample sits at time `start` rather than 0.
    /// Hilbert transforms live on such two-sided grids.
    pub fn with_start(samples: Vec<f64>, dt: f64, start: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SsgError::InvalidSignal(format!("dt must be positive, got {dt}")));
        }
        if !start.is_finite() {
            return Err(SsgError::InvalidSignal("start time must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SsgError::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, dt, start })
    }

    pub fn zeros(len: usize, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; len], dt)
    }

    /// Samples `f(t)` at `t = i * dt` for `i in 0..len`.
    pub fn from_fn(len: usize, dt: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..len).map(|i| f(i as f64 * dt)).collect(), dt)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `T = len * dt`.
    pub fn horizon(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.dt
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() * self.dt
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            dt: self.dt,
            start: self.start,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::with_start(self.samples.iter().map(|&v| f(v)).collect(), self.dt, self.start)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_grid(self, other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            dt: self.dt,
            start: self.start,
        })
    }

    /// Appends zeros up to `len` samples. Shorter targets are rejected.
    pub fn zero_extended(&self, len: usize) -> Result<Self> {
        if len < self.len() {
            return Err(SsgError::Parameter(format!(
                "cannot zero-extend {} samples to {len}",
                self.len()
            )));
        }
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Ok(Self { samples, ..*self })
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            samples: self.samples[..len.min(self.len())].to_vec(),
            ..*self
        }
    }

    /// Share of the total energy carried by the last `fraction` of samples.
    /// Returns 0 for the zero signal.
    pub fn tail_energy_fraction(&self, fraction: f64) -> f64 {
        let n = self.len();
        let total: f64 = self.samples.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail_len = ((n as f64) * fraction).ceil() as usize;
        let tail: f64 = self.samples[n - tail_len.min(n)..].iter().map(|v| v * v).sum();
        tail / total
    }

    pub fn satisfies_energy_tail(&self) -> bool {
        self.tail_energy_fraction(TAIL_FRACTION) < TAIL_ENERGY_LIMIT
    }

    /// CSV with header `t,value`, 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48);
        out.push_str("t,value\n");
        for (i, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_sig(self.time(i)), fmt_sig(*v));
        }
        out
    }

    /// Parses the `t,value` CSV written by [`SampledSignal::to_csv`]. The grid
    /// must be uniform; blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        match lines.next() {
            Some((_, header)) if header.trim() == "t,value" => {}
            Some((i, header)) => {
                return Err(SsgError::Csv(format!(
                    "line {}: expected header `t,value`, found `{header}`",
                    i + 1
                )))
            }
            None => return Err(SsgError::Csv("empty file".into())),
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let mut fields = line.split(',');
            let parse = |f: Option<&str>| -> Result<f64> {
                f.ok_or_else(|| SsgError::Csv(format!("line {}: missing field", i + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| SsgError::Csv(format!("line {}: {e}", i + 1)))
            };
            times.push(parse(fields.next())?);
            values.push(parse(fields.next())?);
            if fields.next().is_some() {
                return Err(SsgError::Csv(format!("line {}: too many fields", i + 1)));
            }
        }
        if times.len() < 2 {
            return Err(SsgError::Csv("need at least two samples to infer dt".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
                return Err(SsgError::Csv(format!(
                    "row {}: non-uniform sampling (step {} vs {dt})",
                    i + 2,
                    w[1] - w[0]
                )));
            }
        }
        Self::with_start(values, dt, times[0])
    }
}

/// Round-trip formatting used by every CSV writer.
pub fn fmt_sig(v: f64) -> String {
    // negative zero prints as zero
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.14e}")
}

pub fn check_same_grid(u: &SampledSignal, y: &SampledSignal) -> Result<()> {
    let same_dt = (u.dt - y.dt).abs() <= GRID_RTOL * u.dt.max(y.dt);
    let same_start = (u.start - y.start).abs() <= GRID_RTOL * u.dt.max(y.dt);
    if !same_dt || u.len() != y.len() || !same_start {
        return Err(SsgError::GridMismatch(format!(
            "(len {}, dt {}, start {}) vs (len {}, dt {}, start {})",
            u.len(),
            u.dt,
            u.start,
            y.len(),
            y.dt,
            y.start
        )));
    }
    Ok(())
}

/// Rectangle-rule approximation of `int u(t) y(t) dt`.
pub fn inner_product(u: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    check_same_grid(u, y)?;
    Ok(dot(&u.samples, &y.samples) * u.dt)
}

pub fn norm(u: &SampledSignal) -> f64 {
    (dot(&u.samples, &u.samples) * u.dt).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampling grid shared by every signal of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub dt: f64,
    pub horizon: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { dt: 0.01, horizon: 60.0 }
    }
}

impl Grid {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        let g = Self { dt, horizon };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SsgError::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 2.0 * self.dt && self.horizon.is_finite()) {
            return Err(SsgError::Parameter(format!(
                "horizon {} too short for dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    /// Same grid with twice the horizon.
    pub fn doubled(&self) -> Self {
        Self { horizon: 2.0 * self.horizon, ..*self }
    }
}

fn default_taper() -> f64 {
    0.1
}

fn default_tones() -> usize {
    3
}

fn default_order() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Sums of sinusoids. With `frequencies` every signal carries exactly those
    /// tones; with `sweep` signal `i` is a single tone, log-spaced across
    /// `band`; otherwise each signal draws `tones` log-uniform frequencies.
    Multisine {
        #[serde(default)]
        frequencies: Option<Vec<f64>>,
        #[serde(default = "default_tones")]
        tones: usize,
        band: [f64; 2],
        #[serde(default)]
        sweep: bool,
    },
    /// Gaussian white noise through `order` cascaded first-order low-pass
    /// sections with corner `bandwidth` (rad/s).
    FilteredNoise {
        bandwidth: f64,
        #[serde(default = "default_order")]
        order: usize,
    },
    /// Linear frequency sweep across `band` (rad/s).
    Chirp { band: [f64; 2] },
    /// Raised-cosine (Hann) pulse with a width drawn from `width` (seconds),
    /// starting at a random time inside `onset` (default: anywhere it fits).
    WindowedPulse {
        width: [f64; 2],
        #[serde(default)]
        onset: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFamily {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default)]
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub grid: Grid,
    /// Raised-cosine onset/tail length as a fraction of the horizon.
    #[serde(default = "default_taper")]
    pub taper: f64,
}

const MAX_ATTEMPTS: u64 = 16;

impl InputFamily {
    pub fn new(kind: FamilyKind, seed: u64, count: usize, grid: Grid) -> Self {
        Self { kind, seed, count, grid, taper: default_taper() }
    }

    /// One windowed sinusoid per entry of `frequencies`.
    pub fn tones(frequencies: &[f64], seed: u64, grid: Grid) -> Vec<Self> {
        frequencies
            .iter()
            .map(|&w| {
                Self::new(
                    FamilyKind::Multisine {
                        frequencies: Some(vec![w]),
                        tones: 1,
                        band: [w, w],
                        sweep: false,
                    },
                    seed,
                    1,
                    grid,
                )
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let nyq = self.grid.nyquist();
        let check_band = |band: &[f64; 2]| -> Result<()> {
            if !(band[0] > 0.0 && band[0] <= band[1]) {
                return Err(SsgError::Parameter(format!("invalid band {band:?}")));
            }
            if band[1] >= nyq {
                return Err(SsgError::Parameter(format!(
                    "frequency {} rad/s at or above Nyquist {nyq:.3}",
                    band[1]
                )));
            }
            Ok(())
        };
        if !(0.0..0.5).contains(&self.taper) {
            return Err(SsgError::Parameter(format!("taper {} outside [0, 0.5)", self.taper)));
        }
        match &self.kind {
            FamilyKind::Multisine { frequencies, tones, band, sweep } => {
                if let Some(freqs) = frequencies {
                    if freqs.is_empty() {
                        return Err(SsgError::Parameter("empty frequency list".into()));
                    }
                    for &w in freqs {
                        check_band(&[w, w])?;
                    }
                } else {
                    check_band(band)?;
                    if !sweep && *tones == 0 {
                        return Err(SsgError::Parameter("multisine needs at least one tone".into()));
                    }
                }
            }
            FamilyKind::FilteredNoise { bandwidth, order } => {
                check_band(&[*bandwidth, *bandwidth])?;
                if *order == 0 {
                    return Err(SsgError::Parameter("filter order must be positive".into()));
                }
            }
            FamilyKind::Chirp { band } => check_band(band)?,
            FamilyKind::WindowedPulse { width, onset } => {
                if let Some(o) = onset {
                    if !(o[0] >= 0.0 && o[0] <= o[1] && o[1] + width[1] <= self.grid.horizon) {
                        return Err(SsgError::Parameter(format!("pulse onset {o:?} does not fit the horizon")));
                    }
                }
                if !(width[0] > 2.0 * self.grid.dt && width[0] <= width[1]) {
                    return Err(SsgError::Parameter(format!("invalid pulse width {width:?}")));
                }
                if width[1] > self.grid.horizon {
                    return Err(SsgError::Parameter(format!(
                        "pulse width {} exceeds horizon {}",
                        width[1], self.grid.horizon
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generates `family.count` unit-norm signals meeting the energy-tail
/// criterion. Signal `i` depends only on `(kind, seed, i)`.
pub fn generate_inputs(family: &InputFamily) -> Result<Vec<SampledSignal>> {
    family.validate()?;
    (0..family.count).map(|i| generate_one(family, i)).collect()
}

fn generate_one(family: &InputFamily, index: usize) -> Result<SampledSignal> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
        rng.set_stream(((index as u64) << 8) | attempt);
        let raw = synthesize(family, index, &mut rng);
        let sig = SampledSignal::new(raw, family.grid.dt)?;
        let n = norm(&sig);
        if n == 0.0 || !n.is_finite() {
            continue;
        }
        let sig = sig.scaled(1.0 / n);
        if sig.satisfies_energy_tail() {
            return Ok(sig);
        }
    }
    Err(SsgError::Parameter(format!(
        "input {index}: no draw met the energy-tail criterion in {MAX_ATTEMPTS} attempts"
    )))
}

/// Raised-cosine onset and tail, flat in between.
pub fn tukey_window(len: usize, taper: f64) -> Vec<f64> {
    let ramp = ((len as f64) * taper).round() as usize;
    (0..len)
        .map(|i| {
            let from_end = len - 1 - i;
            let k = i.min(from_end);
            if ramp == 0 || k >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * (k as f64 + 0.5) / ramp as f64).cos())
            }
        })
        .collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, band: [f64; 2]) -> f64 {
    if band[0] == band[1] {
        return band[0];
    }
    let (a, b) = (band[0].ln(), band[1].ln());
    (a + (b - a) * rng.gen::<f64>()).exp()
}

fn synthesize(family: &InputFamily, index: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let grid = family.grid;
    let n = grid.len();
    let dt = grid.dt;
    let window = tukey_window(n, family.taper);
    let mut x = vec![0.0; n];
    match &family.kind {
        FamilyKind::Multisine { frequencies, tones, band, sweep } => {
            let freqs: Vec<f64> = match (frequencies, sweep) {
                (Some(f), _) => f.clone(),
                (None, true) => {
                    let frac = if family.count > 1 {
                        index as f64 / (family.count - 1) as f64
                    } else {
                        0.0
                    };
                    vec![(band[0].ln() + frac * (band[1].ln() - band[0].ln())).exp()]
                }
                (None, false) => (0..*tones).map(|_| log_uniform(rng, *band)).collect(),
            };
            for w in freqs {
                let phase = 2.0 * PI * rng.gen::<f64>();
                let amp = if frequencies.is_some() || *sweep { 1.0 } else { 0.5 + rng.gen::<f64>() };
                for (i, v) in x.iter_mut().enumerate() {
                    *v += amp * (w * i as f64 * dt + phase).cos();
                }
            }
        }
        FamilyKind::FilteredNoise { bandwidth, order } => {
            // Warm up the filter so the retained segment is stationary.
            let warm = ((5.0 / bandwidth) / dt).ceil() as usize;
            let a = (-bandwidth * dt).exp();
            let mut states = vec![0.0; *order];
            let mut out = Vec::with_capacity(n);
            for k in 0..(warm + n) {
                let mut v: f64 = rng.sample(StandardNormal);
                for s in states.iter_mut() {
                    *s = a * *s + (1.0 - a) * v;
                    v = *s;
                }
                if k >= warm {
                    out.push(v);
                }
            }
            x = out;
        }
        FamilyKind::Chirp { band } => {
            let t_end = n as f64 * dt;
            let phase = 2.0 * PI * rng.gen::<f64>();
            let rate = (band[1] - band[0]) / t_end;
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 * dt;
                *v = (band[0] * t + 0.5 * rate * t * t + phase).cos();
            }
        }
        FamilyKind::WindowedPulse { width, onset } => {
            let w = width[0] + (width[1] - width[0]) * rng.gen::<f64>();
            let len = ((w / dt).round() as usize).clamp(3, n);
            let last = n.saturating_sub(len);
            let (lo, hi) = match onset {
                Some(o) => (((o[0] / dt).round() as usize).min(last), ((o[1] / dt).round() as usize).min(last)),
                None => (0, last),
            };
            let offset = rng.gen_range(lo..=hi);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for k in 0..len {
                let s = (k as f64 + 0.5) / len as f64;
                x[offset + k] = sign * 0.5 * (1.0 - (2.0 * PI * s).cos());
            }
            return x;
        }
    }
    for (v, w) in x.iter_mut().zip(&window) {
        *v *= w;
    }
    x
}
