//! Fourier machinery, the Hilbert transform of zero-embedded signals, and the
//! Hilbert pairing used to sign the phase.
//!
//! Convention: `X(w) = int x(t) e^{-jwt} dt`, Hilbert multiplier `-j sgn(w)`,
//! so `cos -> sin`. The pairing is
//!
//! ```text
//! Pi(u, y) = <u, H{y}> = -<H{u}, y> = (1/pi) int_0^inf Im H(jw) |U(jw)|^2 dw
//! ```
//!
//! for an LTI map `y = H u`. Its sign equals the sign of `arg H(jw)` for
//! narrowband inputs: phase lead is positive.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::signals::{check_same_grid, fmt_sig, SampledSignal};

pub const DEFAULT_PAD_FACTOR: usize = 4;

thread_local! {
    // Plans are cached per worker thread.
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Sampled continuous-time Fourier transform of a zero-padded signal,
/// in FFT bin order (non-negative frequencies first).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coefficients: Vec<Complex64>,
    d_omega: f64,
    dt: f64,
    start: f64,
}

impl Spectrum {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    pub fn padded_len(&self) -> usize {
        self.coefficients.len()
    }

    /// Signed angular frequency of bin `k`.
    pub fn omega(&self, k: usize) -> f64 {
        let n = self.padded_len();
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        signed * self.d_omega
    }

    /// `(1/2pi) sum |X|^2 dw`, the energy by Parseval.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.d_omega / (2.0 * PI)
    }

    /// Back to the padded time grid.
    pub fn inverse(&self) -> Result<SampledSignal> {
        let n = self.padded_len();
        let mut buf = self.coefficients.clone();
        plan(n, true).process(&mut buf);
        let scale = 1.0 / (n as f64 * self.dt);
        SampledSignal::with_start(buf.iter().map(|c| c.re * scale).collect(), self.dt, self.start)
    }

    /// CSV `omega,re,im`, rows sorted by increasing frequency.
    pub fn to_csv(&self) -> String {
        let n = self.padded_len();
        let mut out = String::from("omega,re,im\n");
        let half = n / 2;
        for k in (half + 1..n).chain(0..=half) {
            let c = self.coefficients[k];
            let _ = writeln!(out, "{},{},{}", fmt_sig(self.omega(k)), fmt_sig(c.re), fmt_sig(c.im));
        }
        out
    }
}

fn padded_len(len: usize, pad_factor: usize) -> usize {
    let n = len.max(1) * pad_factor.max(1);
    n + (n % 2)
}

fn forward(samples: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    plan(n, false).process(&mut buf);
    buf
}

/// Zero-padded DFT scaled by `dt`, approximating the continuous transform of
/// the embedded signal. `pad_factor` values below 1 are treated as 1.
pub fn fourier(u: &SampledSignal, pad_factor: usize) -> Spectrum {
    let n = padded_len(u.len(), pad_factor);
    let dt = u.dt();
    let phase_step = if u.start() != 0.0 { Some(u.start()) } else { None };
    let mut coefficients = forward(u.samples(), n);
    let d_omega = 2.0 * PI / (n as f64 * dt);
    for (k, c) in coefficients.iter_mut().enumerate() {
        *c *= dt;
        if let Some(t0) = phase_step {
            let w = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } * d_omega;
            *c *= Complex64::from_polar(1.0, -w * t0);
        }
    }
    Spectrum { coefficients, d_omega, dt, start: u.start() }
}

/// `-j sgn(k)` on the (even-length) padded bins; DC and Nyquist are zeroed.
fn hilbert_multiplier(k: usize, n: usize) -> Complex64 {
    if k == 0 || 2 * k == n {
        Complex64::new(0.0, 0.0)
    } else if 2 * k < n {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// Hilbert transform with the default padding.
pub fn hilbert(u: &SampledSignal) -> SampledSignal {
    hilbert_padded(u, DEFAULT_PAD_FACTOR)
}

/// Hilbert transform of the zero-embedded signal. The result lives on a
/// two-sided grid extending `(N - len) / 2` samples before and after the
/// original support, where `N = pad_factor * len`.
pub fn hilbert_padded(u: &SampledSignal, pad_factor: usize) -> SampledSignal {
    let len = u.len();
    let n = padded_len(len, pad_factor.max(2));
    let mut buf = forward(u.samples(), n);
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= hilbert_multiplier(k, n);
    }
    plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    let before = (n - len) / 2;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            // output index i sits at time start + (i - before) * dt
            let idx = (i + n - before) % n;
            buf[idx].re * scale
        })
        .collect();
    SampledSignal::with_start(samples, u.dt(), u.start() - before as f64 * u.dt())
        .expect("finite transform of finite samples")
}

/// `Pi(u, y)` with the default padding.
pub fn hilbert_pairing(u: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    hilbert_pairing_padded(u, y, DEFAULT_PAD_FACTOR)
}

/// `Pi(u, y) = <u, H{y}>`, evaluated on the padded spectrum. Exactly
/// antisymmetric in its arguments up to rounding.
pub fn hilbert_pairing_padded(u: &SampledSignal, y: &SampledSignal, pad_factor: usize) -> Result<f64> {
    check_same_grid(u, y)?;
    let n = padded_len(u.len(), pad_factor.max(2));
    let uf = forward(u.samples(), n);
    let yf = forward(y.samples(), n);
    Ok(pairing_from_bins(&uf, &yf, u.dt()))
}

/// Same as [`hilbert_pairing`] for a batch of outputs sharing one input,
/// transforming the input once.
pub fn hilbert_pairings(u: &SampledSignal, ys: &[&SampledSignal]) -> Result<Vec<f64>> {
    let n = padded_len(u.len(), DEFAULT_PAD_FACTOR);
    let uf = forward(u.samples(), n);
    ys.iter()
        .map(|y| {
            check_same_grid(u, y)?;
            Ok(pairing_from_bins(&uf, &forward(y.samples(), n), u.dt()))
        })
        .collect()
}

// Pi = (dt/N) sum_k j sgn(k) U[k] conj(Y[k]) = -(2 dt/N) sum_{k>0} Im(U[k] conj(Y[k]))
fn pairing_from_bins(uf: &[Complex64], yf: &[Complex64], dt: f64) -> f64 {
    let n = uf.len();
    let upper = (n - 1) / 2;
    let s: f64 = (1..=upper).map(|k| (uf[k] * yf[k].conj()).im).sum();
    -2.0 * dt / n as f64 * s
}

/// Frequency-domain evaluation of `<u, y>` by Plancherel on the padded grid.
pub fn plancherel_inner(u: &SampledSignal, y: &SampledSignal, pad_factor: usize) -> Result<f64> {
    check_same_grid(u, y)?;
    let n = padded_len(u.len(), pad_factor);
    let uf = forward(u.samples(), n);
    let yf = forward(y.samples(), n);
    let s: f64 = uf.iter().zip(&yf).map(|(a, b)| (a * b.conj()).re).sum();
    Ok(s * u.dt() / n as f64)
}
