//! Sample-based certification of passivity and SSG-negative-imaginariness,
//! and the interconnection verdicts built on them.
//!
//! Every report states the outcome over the sampled inputs only: a pass
//! means no violation was found among them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_loop::LoopTrajectory;
use crate::error::{Result, SsgError};
use crate::signals::{generate_inputs, inner_product, norm, InputFamily, SampledSignal};
use crate::spectral::hilbert_pairing;
use crate::ssg::{estimate_ssg_on, DEFAULT_ZERO_PAIRING_TOL};
use crate::systems::{simulate, OperatorModel};

/// Relative slack applied to both sides of every inequality.
pub const DEFAULT_SLACK: f64 = 1e-6;
/// Real-axis band `|Im z| <= band |z|`.
pub const DEFAULT_REAL_AXIS_BAND: f64 = 0.02;
/// Real-axis products at or above `1 - band` count as reaching the bound.
pub const DEFAULT_PRODUCT_BAND: f64 = 0.02;

/// Tolerances shared by the certificates; the plain functions use the
/// defaults, the `_with` variants take them explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyTolerances {
    /// Relative slack on both sides of every inequality.
    pub slack: f64,
    /// Pairings below `zero_pairing |u||y|` count as zero.
    pub zero_pairing: f64,
    pub real_axis_band: f64,
    pub product_band: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self {
            slack: DEFAULT_SLACK,
            zero_pairing: DEFAULT_ZERO_PAIRING_TOL,
            real_axis_band: DEFAULT_REAL_AXIS_BAND,
            product_band: DEFAULT_PRODUCT_BAND,
        }
    }
}

impl CertifyTolerances {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("slack", self.slack),
            ("zero_pairing", self.zero_pairing),
            ("real_axis_band", self.real_axis_band),
            ("product_band", self.product_band),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SsgError::Parameter(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Passive,
    InputStrictlyPassive,
    SsgNegativeImaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Which side of the pairing inequality the negative-imaginary check reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NiReading {
    /// `-Pi(u,y) >= eps (|u||y| - |<u,y>|)`: confines the SSG to `Im z <= 0`.
    #[default]
    LagSide,
    /// `Pi(u,y) >= eps (|u||y| - |<u,y>|)` taken literally.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub property: Property,
    pub epsilon: f64,
    pub verdict: Verdict,
    /// Input with the smallest margin (lowest id on ties).
    pub worst_input: Option<usize>,
    /// `lhs - rhs` at the worst input.
    pub worst_margin: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reading: Option<NiReading>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<InputFamily>,
    pub summary: String,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct Check {
    margin: f64,
    ok: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(SsgError::Parameter(format!("epsilon must be finite and non-negative, got {epsilon}")))
    }
}

fn certify_on<F>(
    model: &OperatorModel,
    inputs: &[SampledSignal],
    property: Property,
    epsilon: f64,
    tol: &CertifyTolerances,
    check: F,
) -> Result<CertificateReport>
where
    F: Fn(&SampledSignal, &SampledSignal) -> Result<Check> + Sync + Send,
{
    check_epsilon(epsilon)?;
    tol.validate()?;
    let results = crate::exec::map_ordered(inputs, |i, u| -> Result<Check> {
        let y = simulate(model, u).map_err(|e| e.for_input(i))?;
        check(u, &y).map_err(|e| e.for_input(i))
    });
    let mut worst: Option<(usize, f64)> = None;
    let mut all_ok = true;
    for (i, r) in results.into_iter().enumerate() {
        let c = r?;
        all_ok &= c.ok;
        if worst.is_none_or(|(_, m)| c.margin < m) {
            worst = Some((i, c.margin));
        }
    }
    let verdict = Verdict::from_bool(all_ok);
    let summary = match verdict {
        Verdict::Pass => format!("no violation among {} sampled inputs", inputs.len()),
        Verdict::Fail => format!("violated by at least one of {} sampled inputs", inputs.len()),
    };
    Ok(CertificateReport {
        property,
        epsilon,
        verdict,
        worst_input: worst.map(|w| w.0),
        worst_margin: worst.map_or(0.0, |w| w.1),
        samples: inputs.len(),
        reading: None,
        family: None,
        summary,
    })
}

/// `<u, y> >= eps |u|^2` on explicit inputs.
pub fn check_passive_on(model: &OperatorModel, inputs: &[SampledSignal], epsilon: f64) -> Result<CertificateReport> {
    check_passive_on_with(model, inputs, epsilon, &CertifyTolerances::default())
}

pub fn check_passive_on_with(
    model: &OperatorModel,
    inputs: &[SampledSignal],
    epsilon: f64,
    tol: &CertifyTolerances,
) -> Result<CertificateReport> {
    let property = if epsilon > 0.0 { Property::InputStrictlyPassive } else { Property::Passive };
    certify_on(model, inputs, property, epsilon, tol, |u, y| {
        let lhs = inner_product(u, y)?;
        let rhs = epsilon * norm(u).powi(2);
        let slack = tol.slack * (norm(u) * norm(y) + rhs);
        Ok(Check { margin: lhs - rhs, ok: lhs - rhs >= -slack })
    })
}

/// `<u, y> >= eps |u|^2` over a generated family.
pub fn check_passive(model: &OperatorModel, family: &InputFamily, epsilon: f64) -> Result<CertificateReport> {
    check_passive_with(model, family, epsilon, &CertifyTolerances::default())
}

pub fn check_passive_with(
    model: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    tol: &CertifyTolerances,
) -> Result<CertificateReport> {
    let mut r = check_passive_on_with(model, &generate_inputs(family)?, epsilon, tol)?;
    r.family = Some(family.clone());
    Ok(r)
}

/// SSG-negative-imaginary check on explicit inputs. A pairing inside the
/// zero band passes only if `|u||y| - |<u,y>|` is inside the same band,
/// i.e. the point sits on the real axis.
pub fn check_ssg_ni_on(
    model: &OperatorModel,
    inputs: &[SampledSignal],
    epsilon: f64,
    reading: NiReading,
) -> Result<CertificateReport> {
    check_ssg_ni_on_with(model, inputs, epsilon, reading, &CertifyTolerances::default())
}

pub fn check_ssg_ni_on_with(
    model: &OperatorModel,
    inputs: &[SampledSignal],
    epsilon: f64,
    reading: NiReading,
    tol: &CertifyTolerances,
) -> Result<CertificateReport> {
    let mut report = certify_on(model, inputs, Property::SsgNegativeImaginary, epsilon, tol, |u, y| {
        let scale = norm(u) * norm(y);
        if scale == 0.0 {
            return Ok(Check { margin: 0.0, ok: true });
        }
        let pairing = hilbert_pairing(u, y)?;
        let lhs = match reading {
            NiReading::LagSide => -pairing,
            NiReading::Literal => pairing,
        };
        let gap = scale - inner_product(u, y)?.abs();
        let rhs = epsilon * gap;
        let margin = lhs - rhs;
        let ok = if pairing.abs() <= tol.zero_pairing * scale {
            gap <= tol.zero_pairing * scale
        } else {
            margin >= -tol.slack * (lhs.abs() + rhs.abs())
        };
        Ok(Check { margin, ok })
    })?;
    report.reading = Some(reading);
    Ok(report)
}

pub fn check_ssg_ni(
    model: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    reading: NiReading,
) -> Result<CertificateReport> {
    check_ssg_ni_with(model, family, epsilon, reading, &CertifyTolerances::default())
}

pub fn check_ssg_ni_with(
    model: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    reading: NiReading,
    tol: &CertifyTolerances,
) -> Result<CertificateReport> {
    let mut r = check_ssg_ni_on_with(model, &generate_inputs(family)?, epsilon, reading, tol)?;
    r.family = Some(family.clone());
    Ok(r)
}

/// Outcome of the strictly-passive-plus-passive interconnection test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassivityVerdict {
    pub verdict: Verdict,
    pub h1: CertificateReport,
    pub h2: CertificateReport,
    /// On a pass, `SSG(H1)` lies in `Re z >= epsilon` while `-tau SSG^dagger(H2)`
    /// lies in `Re z <= 0`, so the graphs are at least this far apart.
    pub implied_separation: Option<f64>,
}

/// Negative feedback of an input strictly passive `h1` (`epsilon > 0`) with
/// a passive `h2`.
pub fn passivity_theorem_verdict(
    h1: &OperatorModel,
    h2: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
) -> Result<PassivityVerdict> {
    passivity_theorem_verdict_with(h1, h2, family, epsilon, &CertifyTolerances::default())
}

pub fn passivity_theorem_verdict_with(
    h1: &OperatorModel,
    h2: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    tol: &CertifyTolerances,
) -> Result<PassivityVerdict> {
    if !(epsilon > 0.0) {
        return Err(SsgError::Parameter(format!("strict passivity needs epsilon > 0, got {epsilon}")));
    }
    let inputs = generate_inputs(family)?;
    let mut r1 = check_passive_on_with(h1, &inputs, epsilon, tol)?;
    let mut r2 = check_passive_on_with(h2, &inputs, 0.0, tol)?;
    r1.family = Some(family.clone());
    r2.family = Some(family.clone());
    let ok = r1.verdict.passed() && r2.verdict.passed();
    Ok(PassivityVerdict {
        verdict: Verdict::from_bool(ok),
        h1: r1,
        h2: r2,
        implied_separation: ok.then_some(epsilon),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiTheoremVerdict {
    pub verdict: Verdict,
    pub h1: CertificateReport,
    pub h2: CertificateReport,
    /// Largest `Re z1 Re z2` over real-axis points of the two graphs.
    pub worst_product: Option<f64>,
    pub worst_pair: Option<[[f64; 2]; 2]>,
    pub real_axis_points: [usize; 2],
    pub band: f64,
    pub product_band: f64,
}

/// Positive feedback of two SSG-negative-imaginary systems: requires
/// `z1 z2 < 1` for real-axis points `z1` of `SSG(H1)` and `z2` of `SSG(H2)`.
/// Products within `product_band` of 1 count as reaching the bound, since a
/// finite horizon only approaches the DC gain from below.
pub fn ni_theorem_verdict(
    h1: &OperatorModel,
    h2: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    band: f64,
    product_band: f64,
) -> Result<NiTheoremVerdict> {
    let tol = CertifyTolerances { real_axis_band: band, product_band, ..CertifyTolerances::default() };
    ni_theorem_verdict_with(h1, h2, family, epsilon, &tol)
}

pub fn ni_theorem_verdict_with(
    h1: &OperatorModel,
    h2: &OperatorModel,
    family: &InputFamily,
    epsilon: f64,
    tol: &CertifyTolerances,
) -> Result<NiTheoremVerdict> {
    tol.validate()?;
    let (band, product_band) = (tol.real_axis_band, tol.product_band);
    let inputs = generate_inputs(family)?;
    let mut reports = Vec::with_capacity(2);
    for (name, h) in [("H1", h1), ("H2", h2)] {
        let mut r = check_ssg_ni_on_with(h, &inputs, epsilon, NiReading::LagSide, tol)?;
        if !r.verdict.passed() {
            return Err(SsgError::NotNegativeImaginary(name.into()));
        }
        r.family = Some(family.clone());
        reports.push(r);
    }
    let on_axis = |h: &OperatorModel| -> Result<Vec<Complex64>> {
        let cloud = estimate_ssg_on(h, &inputs, tol.zero_pairing)?;
        Ok(cloud.expanded().into_iter().filter(|z| z.im.abs() <= band * z.norm()).collect())
    };
    let (x1, x2) = (on_axis(h1)?, on_axis(h2)?);
    let mut worst: Option<(f64, Complex64, Complex64)> = None;
    for &a in &x1 {
        for &b in &x2 {
            let p = a.re * b.re;
            if worst.is_none_or(|w| p > w.0) {
                worst = Some((p, a, b));
            }
        }
    }
    let ok = worst.is_none_or(|w| w.0 < 1.0 - product_band);
    let r2 = reports.pop().expect("two reports");
    let r1 = reports.pop().expect("two reports");
    Ok(NiTheoremVerdict {
        verdict: Verdict::from_bool(ok),
        h1: r1,
        h2: r2,
        worst_product: worst.map(|w| w.0),
        worst_pair: worst.map(|w| [[w.1.re, w.1.im], [w.2.re, w.2.im]]),
        real_axis_points: [x1.len(), x2.len()],
        band,
        product_band,
    })
}

/// Residuals of the three conditions defining the excluded input set `W`,
/// each normalized to be scale free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WSetDiagnostic {
    /// `(<u1,u2> + <u2, tau y2>) / (|u2| (|u1| + |tau y2|))`
    pub energy_balance: f64,
    /// `(|u1| - |tau y2|) / (|u1| + |tau y2|)`
    pub norm_balance: f64,
    /// `Pi(u1,u2) Pi(u2, tau y2) / (|u1| |u2|^2 |tau y2|)`; must be negative in `W`.
    pub pairing_product: f64,
    /// All three conditions hold within `tol`.
    pub near_member: bool,
    /// Every signal is zero.
    pub degenerate: bool,
}

/// Advisory check of whether a trajectory's input lies near `W`.
pub fn w_set_diagnostic(traj: &LoopTrajectory, tol: f64) -> Result<WSetDiagnostic> {
    let ty2 = traj.y2.scaled(traj.tau);
    let (n1, n2, ny) = (norm(&traj.u1), norm(&traj.u2), norm(&ty2));
    if n1 == 0.0 && n2 == 0.0 && ny == 0.0 {
        return Ok(WSetDiagnostic {
            energy_balance: 0.0,
            norm_balance: 0.0,
            pairing_product: 0.0,
            near_member: false,
            degenerate: true,
        });
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let energy_balance = ratio(
        inner_product(&traj.u1, &traj.u2)? + inner_product(&traj.u2, &ty2)?,
        n2 * (n1 + ny),
    );
    let norm_balance = ratio(n1 - ny, n1 + ny);
    let pairing_product = ratio(
        hilbert_pairing(&traj.u1, &traj.u2)? * hilbert_pairing(&traj.u2, &ty2)?,
        n1 * n2 * n2 * ny,
    );
    let near_member = energy_balance.abs() <= tol && norm_balance.abs() <= tol && pairing_product < -tol;
    Ok(WSetDiagnostic { energy_balance, norm_balance, pairing_product, near_member, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::{closed_loop_simulate, LoopSign};
    use crate::signals::{FamilyKind, Grid};
    use crate::systems::catalog;

    fn noise(seed: u64, count: usize) -> InputFamily {
        InputFamily::new(FamilyKind::FilteredNoise { bandwidth: 2.0, order: 2 }, seed, count, Grid::new(0.01, 30.0).unwrap())
    }

    #[test]
    fn passivity_examples() {
        let fam = noise(1, 12);
        assert!(check_passive(&OperatorModel::saturation(1.0).unwrap(), &fam, 0.0).unwrap().verdict.passed());
        assert!(check_passive(&catalog::lag(), &fam, 0.0).unwrap().verdict.passed());
        let neg = check_passive(&OperatorModel::gain(-1.0).unwrap(), &fam, 0.0).unwrap();
        assert_eq!(neg.verdict, Verdict::Fail);
        // unit-norm inputs: margin is -|u|^2 = -1
        assert!((neg.worst_margin + 1.0).abs() < 1e-12);
        assert!(check_passive(&catalog::lag(), &fam, -1.0).is_err());
    }

    #[test]
    fn lag_passivity_matches_frequency_oracle() {
        // <u, y> = (1/2pi) int Re H |U|^2 dw with Re H_lag = 1/(1+w^2); DC bin once, the rest twice
        let fam = noise(2, 1);
        let u = generate_inputs(&fam).unwrap().remove(0);
        let y = simulate(&catalog::lag(), &u).unwrap();
        let spec = crate::spectral::fourier(&u, 4);
        let n = spec.padded_len();
        let oracle: f64 = (0..n / 2)
            .map(|k| {
                let w = spec.omega(k);
                let weight = if k == 0 { 0.5 } else { 1.0 };
                weight * spec.coefficients()[k].norm_sqr() / (1.0 + w * w)
            })
            .sum::<f64>()
            * spec.d_omega()
            / std::f64::consts::PI;
        let direct = inner_product(&u, &y).unwrap();
        assert!((direct - oracle).abs() < 0.01 * oracle, "{direct} vs {oracle}");
    }

    #[test]
    fn ni_examples() {
        let fam = noise(3, 12);
        assert!(check_ssg_ni(&catalog::lag(), &fam, 0.0, NiReading::LagSide).unwrap().verdict.passed());
        assert_eq!(check_ssg_ni(&catalog::lead(), &fam, 0.0, NiReading::LagSide).unwrap().verdict, Verdict::Fail);
        let k = check_ssg_ni(&OperatorModel::gain(3.0).unwrap(), &fam, 0.5, NiReading::LagSide).unwrap();
        assert!(k.verdict.passed());
        assert!(k.worst_margin.abs() < 1e-6);
        // the literal reading swaps the roles of lead and lag
        assert!(check_ssg_ni(&catalog::lead(), &fam, 0.0, NiReading::Literal).unwrap().verdict.passed());
        assert_eq!(check_ssg_ni(&catalog::lag(), &fam, 0.0, NiReading::Literal).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn certification_is_monotone_in_epsilon() {
        let fam = noise(4, 8);
        let h = OperatorModel::tf(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let mut last = false;
        for eps in [1.5, 1.0, 0.9, 0.5, 0.0] {
            let ok = check_passive(&h, &fam, eps).unwrap().verdict.passed();
            assert!(ok || !last, "pass at larger epsilon but fail at {eps}");
            last = ok;
        }
        assert!(last);
    }

    #[test]
    fn passivity_theorem() {
        let fam = noise(5, 8);
        let h1 = OperatorModel::tf(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let v = passivity_theorem_verdict(&h1, &OperatorModel::saturation(1.0).unwrap(), &fam, 0.5).unwrap();
        assert!(v.verdict.passed());
        assert_eq!(v.implied_separation, Some(0.5));
        let v = passivity_theorem_verdict(&catalog::lag(), &OperatorModel::gain(-0.5).unwrap(), &fam, 1e-3).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        assert!(passivity_theorem_verdict(&OperatorModel::gain(0.0).unwrap(), &catalog::lag(), &fam, 0.0).is_err());
        let v = passivity_theorem_verdict(&OperatorModel::gain(0.0).unwrap(), &catalog::lag(), &fam, 0.1).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
    }

    fn dc_pulses() -> InputFamily {
        InputFamily::new(
            FamilyKind::WindowedPulse { width: [900.0, 1200.0], onset: None },
            7,
            6,
            Grid::new(0.1, 2000.0).unwrap(),
        )
    }

    #[test]
    fn ni_theorem() {
        let fam = dc_pulses();
        let band = DEFAULT_REAL_AXIS_BAND;
        let pb = DEFAULT_PRODUCT_BAND;
        let v = ni_theorem_verdict(&catalog::first_order(0.5), &catalog::lag(), &fam, 0.0, band, pb).unwrap();
        assert!(v.verdict.passed(), "{v:?}");
        let p = v.worst_product.unwrap();
        assert!((p - 0.5).abs() < 0.02, "{p}");
        let v = ni_theorem_verdict(&catalog::lag(), &catalog::lag(), &fam, 0.0, band, pb).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        let v = ni_theorem_verdict(&OperatorModel::gain(2.0).unwrap(), &OperatorModel::gain(1.0).unwrap(), &fam, 0.0, band, pb).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        assert!(matches!(
            ni_theorem_verdict(&catalog::lead(), &catalog::lag(), &fam, 0.0, band, pb),
            Err(SsgError::NotNegativeImaginary(name)) if name == "H1"
        ));
    }

    #[test]
    fn w_set_residuals() {
        let w = SampledSignal::zeros(100, 0.01).unwrap();
        let g = OperatorModel::gain(1.0).unwrap();
        let t = closed_loop_simulate(&g, &g, &w, 1.0, LoopSign::Negative).unwrap();
        let d = w_set_diagnostic(&t, 1e-6).unwrap();
        assert!(d.degenerate && !d.near_member);
        assert_eq!([d.energy_balance, d.norm_balance, d.pairing_product], [0.0; 3]);

        let u = generate_inputs(&noise(6, 1)).unwrap().remove(0).scaled(3.0);
        let h1 = OperatorModel::tf(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let t = closed_loop_simulate(&h1, &OperatorModel::saturation(1.0).unwrap(), &u, 1.0, LoopSign::Negative).unwrap();
        let d = w_set_diagnostic(&t, 1e-3).unwrap();
        assert!(!d.near_member);
        // both blocks passive: <u1,y1> + <u2,tau y2> > 0
        assert!(d.energy_balance > 1e-3);

        let mut t2 = t.clone();
        t2.y2 = t2.y2.scaled(0.1);
        let d = w_set_diagnostic(&t2, 1e-3).unwrap();
        assert!(!d.near_member && d.norm_balance.abs() > 1e-3);
    }
}
