//! Operator models `H: L2 -> L2`, their time-domain simulation and frequency
//! responses, and the analytic region catalog for the lead/lag examples.
//!
//! LTI blocks are discretized once per `dt` with an exact zero-order hold.
//! Output samples are the interval averages of the continuous output, so
//! `sum_k u_k y_k dt` equals the continuous inner product of the held input
//! with the true output.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::geometry::{HalfPlaneSide, Perimeter, Region};
use crate::signals::SampledSignal;

/// Relaxation of the per-step fixed-point solve for nonlinear algebraic loops.
pub const LOOP_RELAXATION: f64 = 0.5;
pub const LOOP_TOLERANCE: f64 = 1e-10;
pub const LOOP_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StaticNonlinearity {
    Saturation { limit: f64 },
    Deadzone { width: f64 },
    Relu,
    Cubic { coeff: f64 },
    Gain { k: f64 },
}

impl StaticNonlinearity {
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            Self::Saturation { limit } => u.clamp(-limit, limit),
            Self::Deadzone { width } => {
                if u.abs() <= width {
                    0.0
                } else {
                    u - width * u.signum()
                }
            }
            Self::Relu => u.max(0.0),
            Self::Cubic { coeff } => coeff * u * u * u,
            Self::Gain { k } => k * u,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Saturation { limit } => limit > 0.0 && limit.is_finite(),
            Self::Deadzone { width } => width >= 0.0 && width.is_finite(),
            Self::Relu => true,
            Self::Cubic { coeff } => coeff.is_finite(),
            Self::Gain { k } => k.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SsgError::InvalidModel(format!("bad static nonlinearity parameters {self:?}")))
        }
    }
}

/// Serialized form of an [`OperatorModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelKind {
    /// Coefficients in descending powers of `s`.
    #[serde(rename = "tf")]
    TransferFunction { num: Vec<f64>, den: Vec<f64> },
    #[serde(rename = "ss")]
    StateSpace {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        #[serde(rename = "D", default)]
        d: Vec<Vec<f64>>,
    },
    Static(StaticNonlinearity),
    Series { left: Box<OperatorModel>, right: Box<OperatorModel> },
    Parallel { left: Box<OperatorModel>, right: Box<OperatorModel> },
    /// `forward` input is `u + sign * backward(output)`.
    Feedback {
        forward: Box<OperatorModel>,
        backward: Box<OperatorModel>,
        #[serde(default = "negative")]
        sign: i8,
    },
    Scale { factor: f64, inner: Box<OperatorModel> },
}

fn negative() -> i8 {
    -1
}

/// A validated, immutable description of a SISO system. LTI parts are proper
/// and Hurwitz; static parts map 0 to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelKind", into = "ModelKind")]
pub struct OperatorModel(ModelKind);

impl TryFrom<ModelKind> for OperatorModel {
    type Error = SsgError;

    fn try_from(kind: ModelKind) -> Result<Self> {
        validate_kind(&kind)?;
        Ok(Self(kind))
    }
}

impl From<OperatorModel> for ModelKind {
    fn from(m: OperatorModel) -> Self {
        m.0
    }
}

impl OperatorModel {
    pub fn kind(&self) -> &ModelKind {
        &self.0
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SsgError::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("models serialize")
    }

    pub fn tf(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::try_from(ModelKind::TransferFunction { num: num.to_vec(), den: den.to_vec() })
    }

    pub fn ss(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> Result<Self> {
        Self::try_from(ModelKind::StateSpace { a, b, c, d })
    }

    pub fn nonlinearity(f: StaticNonlinearity) -> Result<Self> {
        Self::try_from(ModelKind::Static(f))
    }

    pub fn gain(k: f64) -> Result<Self> {
        Self::nonlinearity(StaticNonlinearity::Gain { k })
    }

    pub fn saturation(limit: f64) -> Result<Self> {
        Self::nonlinearity(StaticNonlinearity::Saturation { limit })
    }

    pub fn series(left: Self, right: Self) -> Self {
        Self(ModelKind::Series { left: Box::new(left), right: Box::new(right) })
    }

    pub fn parallel(left: Self, right: Self) -> Self {
        Self(ModelKind::Parallel { left: Box::new(left), right: Box::new(right) })
    }

    pub fn feedback(forward: Self, backward: Self, sign: i8) -> Result<Self> {
        Self::try_from(ModelKind::Feedback {
            forward: Box::new(forward),
            backward: Box::new(backward),
            sign,
        })
    }

    pub fn scale(inner: Self, factor: f64) -> Result<Self> {
        Self::try_from(ModelKind::Scale { factor, inner: Box::new(inner) })
    }

    /// True when every block is LTI (static gains count as LTI).
    pub fn is_lti(&self) -> bool {
        match &self.0 {
            ModelKind::TransferFunction { .. } | ModelKind::StateSpace { .. } => true,
            ModelKind::Static(StaticNonlinearity::Gain { .. }) => true,
            ModelKind::Static(_) => false,
            ModelKind::Series { left, right } | ModelKind::Parallel { left, right } => {
                left.is_lti() && right.is_lti()
            }
            ModelKind::Feedback { forward, backward, .. } => forward.is_lti() && backward.is_lti(),
            ModelKind::Scale { inner, .. } => inner.is_lti(),
        }
    }

    /// `H(jw)` under the `e^{-jwt}` convention.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        Ok(match &self.0 {
            ModelKind::TransferFunction { num, den } => polyval(num, s) / polyval(den, s),
            ModelKind::StateSpace { .. } => {
                let (a, b, c, d) = self.state_space()?;
                let n = a.nrows();
                let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
                    let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
                    diag - Complex64::new(a[(i, j)], 0.0)
                });
                let rhs = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(b[i], 0.0));
                let x = m
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| SsgError::InvalidModel("singular resolvent".into()))?;
                (0..n).map(|i| x[i] * c[i]).sum::<Complex64>() + d
            }
            ModelKind::Static(StaticNonlinearity::Gain { k }) => Complex64::new(*k, 0.0),
            ModelKind::Static(f) => {
                return Err(SsgError::UnsupportedModel(format!(
                    "frequency response of nonlinear block {f:?}"
                )))
            }
            ModelKind::Series { left, right } => left.freq_response(omega)? * right.freq_response(omega)?,
            ModelKind::Parallel { left, right } => left.freq_response(omega)? + right.freq_response(omega)?,
            ModelKind::Feedback { forward, backward, sign } => {
                let f = forward.freq_response(omega)?;
                let b = backward.freq_response(omega)?;
                f / (1.0 - f64::from(*sign) * f * b)
            }
            ModelKind::Scale { factor, inner } => inner.freq_response(omega)? * *factor,
        })
    }

    /// Realization of an LTI leaf as `(A, b, c, d)`; transfer functions use
    /// the controllable canonical form.
    pub fn state_space(&self) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>, f64)> {
        match &self.0 {
            ModelKind::TransferFunction { num, den } => Ok(controllable_canonical(num, den)),
            ModelKind::StateSpace { a, b, c, d } => {
                let n = a.len();
                let am = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                let bv = b.iter().map(|r| r[0]).collect();
                let cv = if n == 0 { vec![] } else { c[0].clone() };
                let dv = d.first().and_then(|r| r.first()).copied().unwrap_or(0.0);
                Ok((am, bv, cv, dv))
            }
            _ => Err(SsgError::UnsupportedModel("state-space realization of a composite".into())),
        }
    }
}

fn polyval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn strip_leading_zeros(p: &[f64]) -> &[f64] {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    &p[first..]
}

fn controllable_canonical(num: &[f64], den: &[f64]) -> (DMatrix<f64>, Vec<f64>, Vec<f64>, f64) {
    let den = strip_leading_zeros(den);
    let num = strip_leading_zeros(num);
    let lead = den[0];
    let a: Vec<f64> = den.iter().map(|c| c / lead).collect();
    let n = a.len() - 1;
    let mut b = vec![0.0; n + 1 - num.len()];
    b.extend(num.iter().map(|c| c / lead));
    let d = b[0];
    let mut am = DMatrix::zeros(n, n);
    for j in 0..n {
        am[(0, j)] = -a[j + 1];
    }
    for i in 1..n {
        am[(i, i - 1)] = 1.0;
    }
    let mut bv = vec![0.0; n];
    if n > 0 {
        bv[0] = 1.0;
    }
    let cv = (0..n).map(|i| b[i + 1] - d * a[i + 1]).collect();
    (am, bv, cv, d)
}

fn check_hurwitz(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() == 0 {
        return Ok(());
    }
    for ev in a.complex_eigenvalues().iter() {
        if !(ev.re < 0.0) {
            return Err(SsgError::InvalidModel(format!(
                "{what} is not Hurwitz stable (eigenvalue {ev})"
            )));
        }
    }
    Ok(())
}

fn validate_kind(kind: &ModelKind) -> Result<()> {
    match kind {
        ModelKind::TransferFunction { num, den } => {
            if num.iter().chain(den).any(|c| !c.is_finite()) {
                return Err(SsgError::InvalidModel("non-finite coefficient".into()));
            }
            let den_s = strip_leading_zeros(den);
            if den_s.is_empty() {
                return Err(SsgError::InvalidModel("zero denominator".into()));
            }
            if strip_leading_zeros(num).len() > den_s.len() {
                return Err(SsgError::InvalidModel("transfer function is improper".into()));
            }
            let (a, ..) = controllable_canonical(num, den);
            check_hurwitz(&a, "transfer function denominator")
        }
        ModelKind::StateSpace { a, b, c, d } => {
            let n = a.len();
            let square = a.iter().all(|r| r.len() == n);
            let b_ok = b.len() == n && b.iter().all(|r| r.len() == 1);
            let c_ok = (n == 0 && c.iter().all(|r| r.is_empty())) || (c.len() == 1 && c[0].len() == n);
            let d_ok = d.is_empty() || (d.len() == 1 && d[0].len() == 1);
            if !(square && b_ok && c_ok && d_ok) {
                return Err(SsgError::InvalidModel(format!(
                    "state-space shapes must be A {n}x{n}, B {n}x1, C 1x{n}, D 1x1"
                )));
            }
            if a.iter().chain(b).chain(c).chain(d).flatten().any(|v| !v.is_finite()) {
                return Err(SsgError::InvalidModel("non-finite matrix entry".into()));
            }
            check_hurwitz(&DMatrix::from_fn(n, n, |i, j| a[i][j]), "state matrix A")
        }
        ModelKind::Static(f) => f.validate(),
        ModelKind::Series { left, right } | ModelKind::Parallel { left, right } => {
            validate_kind(&left.0)?;
            validate_kind(&right.0)
        }
        ModelKind::Feedback { forward, backward, sign } => {
            if *sign != 1 && *sign != -1 {
                return Err(SsgError::InvalidModel(format!("feedback sign must be +1 or -1, got {sign}")));
            }
            validate_kind(&forward.0)?;
            validate_kind(&backward.0)
        }
        ModelKind::Scale { factor, inner } => {
            if !factor.is_finite() {
                return Err(SsgError::InvalidModel("non-finite scale factor".into()));
            }
            validate_kind(&inner.0)
        }
    }
}

/// Exact ZOH discretization with interval-averaged output:
/// `x+ = ad x + bd u`, `y = c_avg . x + d_avg u`.
#[derive(Debug, Clone)]
pub(crate) struct LtiBlock {
    n: usize,
    ad: Vec<f64>,
    bd: Vec<f64>,
    c_avg: Vec<f64>,
    d_avg: f64,
    x: Vec<f64>,
    scratch: Vec<f64>,
}

impl LtiBlock {
    fn new(a: &DMatrix<f64>, b: &[f64], c: &[f64], d: f64, dt: f64) -> Self {
        let n = a.nrows();
        // z = (x, q, u) with q' = x, u' = 0.
        let m = 2 * n + 1;
        let mut aug = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = a[(i, j)] * dt;
            }
            aug[(i, 2 * n)] = b[i] * dt;
            aug[(n + i, i)] = dt;
        }
        let e = aug.exp();
        let mut ad = vec![0.0; n * n];
        let mut bd = vec![0.0; n];
        let mut c_avg = vec![0.0; n];
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                ad[i * n + j] = e[(i, j)];
                c_avg[j] += c[i] * e[(n + i, j)] / dt;
            }
            bd[i] = e[(i, 2 * n)];
            q += c[i] * e[(n + i, 2 * n)] / dt;
        }
        Self { n, ad, bd, c_avg, d_avg: q + d, x: vec![0.0; n], scratch: vec![0.0; n] }
    }

    fn output(&self, u: f64) -> f64 {
        self.c_avg.iter().zip(&self.x).map(|(c, x)| c * x).sum::<f64>() + self.d_avg * u
    }

    fn commit(&mut self, u: f64) {
        let n = self.n;
        for i in 0..n {
            let row = &self.ad[i * n..(i + 1) * n];
            self.scratch[i] = row.iter().zip(&self.x).map(|(a, x)| a * x).sum::<f64>() + self.bd[i] * u;
        }
        std::mem::swap(&mut self.x, &mut self.scratch);
    }
}

/// A compiled, stateful stepper for one model on one grid.
#[derive(Debug, Clone)]
pub(crate) enum Block {
    Lti(LtiBlock),
    Static(StaticNonlinearity),
    Series(Box<Block>, Box<Block>),
    Parallel(Box<Block>, Box<Block>),
    Feedback { forward: Box<Block>, backward: Box<Block>, sign: f64 },
    Scale(f64, Box<Block>),
}

impl Block {
    pub(crate) fn compile(model: &OperatorModel, dt: f64) -> Result<Self> {
        Ok(match &model.0 {
            ModelKind::TransferFunction { .. } | ModelKind::StateSpace { .. } => {
                let (a, b, c, d) = model.state_space()?;
                if a.nrows() == 0 {
                    Block::Static(StaticNonlinearity::Gain { k: d })
                } else {
                    Block::Lti(LtiBlock::new(&a, &b, &c, d, dt))
                }
            }
            ModelKind::Static(f) => Block::Static(*f),
            ModelKind::Series { left, right } => {
                Block::Series(Box::new(Self::compile(left, dt)?), Box::new(Self::compile(right, dt)?))
            }
            ModelKind::Parallel { left, right } => {
                Block::Parallel(Box::new(Self::compile(left, dt)?), Box::new(Self::compile(right, dt)?))
            }
            ModelKind::Feedback { forward, backward, sign } => Block::Feedback {
                forward: Box::new(Self::compile(forward, dt)?),
                backward: Box::new(Self::compile(backward, dt)?),
                sign: f64::from(*sign),
            },
            ModelKind::Scale { factor, inner } => Block::Scale(*factor, Box::new(Self::compile(inner, dt)?)),
        })
    }

    /// `d y / d u` when the current output is affine in the current input.
    pub(crate) fn affine_slope(&self) -> Option<f64> {
        match self {
            Block::Lti(l) => Some(l.d_avg),
            Block::Static(StaticNonlinearity::Gain { k }) => Some(*k),
            Block::Static(_) => None,
            Block::Series(l, r) => Some(l.affine_slope()? * r.affine_slope()?),
            Block::Parallel(l, r) => Some(l.affine_slope()? + r.affine_slope()?),
            Block::Feedback { forward, backward, sign } => {
                let a = forward.affine_slope()?;
                let b = backward.affine_slope()?;
                Some(a / (1.0 - sign * a * b))
            }
            Block::Scale(k, inner) => Some(k * inner.affine_slope()?),
        }
    }

    /// Output at the current step for input `u`, without advancing state.
    pub(crate) fn output(&self, u: f64, step: usize) -> Result<f64> {
        Ok(match self {
            Block::Lti(l) => l.output(u),
            Block::Static(f) => f.apply(u),
            Block::Series(l, r) => r.output(l.output(u, step)?, step)?,
            Block::Parallel(l, r) => l.output(u, step)? + r.output(u, step)?,
            Block::Feedback { forward, backward, sign } => {
                let e = solve_loop(forward, backward, *sign, u, step)?;
                forward.output(e, step)?
            }
            Block::Scale(k, inner) => k * inner.output(u, step)?,
        })
    }

    /// Advances the state with input `u` held over the step.
    pub(crate) fn commit(&mut self, u: f64, step: usize) -> Result<()> {
        match self {
            Block::Lti(l) => l.commit(u),
            Block::Static(_) => {}
            Block::Series(l, r) => {
                let v = l.output(u, step)?;
                l.commit(u, step)?;
                r.commit(v, step)?;
            }
            Block::Parallel(l, r) => {
                l.commit(u, step)?;
                r.commit(u, step)?;
            }
            Block::Feedback { forward, backward, sign } => {
                let e = solve_loop(forward, backward, *sign, u, step)?;
                let yf = forward.output(e, step)?;
                forward.commit(e, step)?;
                backward.commit(yf, step)?;
            }
            Block::Scale(_, inner) => inner.commit(u, step)?,
        }
        Ok(())
    }

    pub(crate) fn step(&mut self, u: f64, step: usize) -> Result<f64> {
        let y = self.output(u, step)?;
        self.commit(u, step)?;
        Ok(y)
    }
}

/// Solves `e = w + sign * gain * backward(forward(e))` at the current step and
/// returns `e`. Affine loops are solved exactly; otherwise damped fixed-point
/// iteration.
pub(crate) fn solve_loop_scaled(
    forward: &Block,
    backward: &Block,
    sign: f64,
    gain: f64,
    w: f64,
    step: usize,
) -> Result<f64> {
    let g = |e: f64| -> Result<f64> { Ok(w + sign * gain * backward.output(forward.output(e, step)?, step)?) };
    if let (Some(a), Some(b)) = (forward.affine_slope(), backward.affine_slope()) {
        let denom = 1.0 - sign * gain * a * b;
        if denom.abs() < 1e-14 {
            return Err(SsgError::LoopDivergence { step, iterations: 0 });
        }
        // e = g(0) + sign*gain*a*b*e
        return Ok(g(0.0)? / denom);
    }
    let mut e = w;
    for it in 0..LOOP_MAX_ITERATIONS {
        let next = (1.0 - LOOP_RELAXATION) * e + LOOP_RELAXATION * g(e)?;
        if !next.is_finite() {
            return Err(SsgError::LoopDivergence { step, iterations: it + 1 });
        }
        if (next - e).abs() <= LOOP_TOLERANCE * (1.0 + next.abs()) {
            return Ok(next);
        }
        e = next;
    }
    Err(SsgError::LoopDivergence { step, iterations: LOOP_MAX_ITERATIONS })
}

fn solve_loop(forward: &Block, backward: &Block, sign: f64, u: f64, step: usize) -> Result<f64> {
    solve_loop_scaled(forward, backward, sign, 1.0, u, step)
}

/// `y = H(u)` on the grid of `u`.
pub fn simulate(model: &OperatorModel, u: &SampledSignal) -> Result<SampledSignal> {
    let mut block = Block::compile(model, u.dt())?;
    let mut y = Vec::with_capacity(u.len());
    for (k, &uk) in u.samples().iter().enumerate() {
        y.push(block.step(uk, k)?);
    }
    SampledSignal::with_start(y, u.dt(), u.start())
        .map_err(|_| SsgError::LoopDivergence { step: u.len(), iterations: 0 })
}

/// Named LTI systems used throughout the examples.
pub mod catalog {
    use super::OperatorModel;

    /// `s / (s + 1)`
    pub fn lead() -> OperatorModel {
        OperatorModel::tf(&[1.0, 0.0], &[1.0, 1.0]).expect("valid")
    }

    /// `1 / (s + 1)`
    pub fn lag() -> OperatorModel {
        OperatorModel::tf(&[1.0], &[1.0, 1.0]).expect("valid")
    }

    /// `k / (s + 1)^2`
    pub fn second_order(k: f64) -> OperatorModel {
        OperatorModel::tf(&[k], &[1.0, 2.0, 1.0]).expect("valid")
    }

    /// `k / (s + 1)`
    pub fn first_order(k: f64) -> OperatorModel {
        OperatorModel::tf(&[k], &[1.0, 1.0]).expect("valid")
    }
}

/// Analytic regions for the lead/lag catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "kebab-case")]
pub enum CatalogEntry {
    LeadCircle,
    LagCircle,
    LeadInverseHalfline,
    LagInverseHalfline,
    SecondOrderPerimeter { k: f64 },
}

impl std::str::FromStr for CatalogEntry {
    type Err = SsgError;

    /// Accepts `lead-circle`, ..., and `second-order-perimeter:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lead-circle" => Self::LeadCircle,
            "lag-circle" => Self::LagCircle,
            "lead-inverse-halfline" => Self::LeadInverseHalfline,
            "lag-inverse-halfline" => Self::LagInverseHalfline,
            other => match other.strip_prefix("second-order-perimeter:") {
                Some(k) => Self::SecondOrderPerimeter {
                    k: k.parse().map_err(|_| SsgError::Catalog(s.to_string()))?,
                },
                None => return Err(SsgError::Catalog(s.to_string())),
            },
        })
    }
}

/// Boundary of the scaled graph of `k / (s+1)^2`: `k cos^2(phi/2) e^{-j phi}`.
pub fn second_order_perimeter(k: f64, phi: f64) -> Complex64 {
    k * (phi / 2.0).cos().powi(2) * Complex64::from_polar(1.0, -phi)
}

/// Analytic region for a catalog entry. `signed = true` returns the SSG
/// version (half-plane restricted), `false` the unsigned SG.
pub fn analytic_region(entry: CatalogEntry, signed: bool) -> Result<Region> {
    Ok(match entry {
        CatalogEntry::LeadCircle | CatalogEntry::LagCircle => {
            if !signed {
                Region::circle(Complex64::new(0.5, 0.0), 0.5)
            } else {
                // lead: upper semicircle, lag: lower
                let sgn = if entry == CatalogEntry::LeadCircle { 1.0 } else { -1.0 };
                Region::Perimeter(Perimeter::new(
                    move |phi| Complex64::new(0.5, 0.0) + 0.5 * Complex64::from_polar(1.0, sgn * phi),
                    [0.0, PI],
                    0.5,
                    false,
                )?)
            }
        }
        CatalogEntry::LeadInverseHalfline | CatalogEntry::LagInverseHalfline => {
            let (lo, hi) = match (signed, entry) {
                (false, _) => (f64::NEG_INFINITY, f64::INFINITY),
                (true, CatalogEntry::LeadInverseHalfline) => (f64::NEG_INFINITY, 0.0),
                (true, _) => (0.0, f64::INFINITY),
            };
            Region::VerticalLine { re: 1.0, im_min: lo, im_max: hi }
        }
        CatalogEntry::SecondOrderPerimeter { k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SsgError::Parameter(format!("perimeter gain must be positive, got {k}")));
            }
            // |p'(phi)| = (k/2) sqrt(2 + 2 cos phi) <= k
            let range = if signed { [0.0, PI] } else { [-PI, PI] };
            Region::Perimeter(Perimeter::new(move |phi| second_order_perimeter(k, phi), range, k, true)?)
        }
    })
}

/// Region membership predicate attached to the signed catalog entries.
pub fn catalog_half_plane(entry: CatalogEntry) -> Option<HalfPlaneSide> {
    match entry {
        CatalogEntry::LeadCircle | CatalogEntry::LagInverseHalfline => Some(HalfPlaneSide::Upper),
        CatalogEntry::LagCircle | CatalogEntry::LeadInverseHalfline => Some(HalfPlaneSide::Lower),
        CatalogEntry::SecondOrderPerimeter { .. } => Some(HalfPlaneSide::Lower),
    }
}
