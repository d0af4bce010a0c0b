//! Gain, phase and signed-phase estimation, and the cloud-level transforms
//! (inverse, conjugate, SG reconstruction, `-tau` scaling).

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::geometry::Region;
use crate::signals::{fmt_sig, generate_inputs, norm, InputFamily, SampledSignal};
use crate::spectral::hilbert_pairing;
use crate::systems::{simulate, OperatorModel};

/// Relative band below which the Hilbert pairing counts as zero.
pub const DEFAULT_ZERO_PAIRING_TOL: f64 = 1e-6;

/// One sample `gain * e^{j phase}`. An indeterminate point stands for both
/// `gain * e^{+j|phase|}` and `gain * e^{-j|phase|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsgPoint {
    pub gain: f64,
    pub phase: f64,
    pub indeterminate: bool,
    pub input_id: usize,
}

/// `rho e^{j sign theta}` with exact zeros on the real axis.
fn polar_point(rho: f64, theta: f64, sign: f64) -> Complex64 {
    let re = rho * theta.cos() + 0.0;
    let im = if theta == 0.0 || theta == PI { 0.0 } else { sign * rho * theta.sin() + 0.0 };
    Complex64::new(re, im)
}

impl SsgPoint {
    /// The distinct complex set-points this sample contributes (one or two).
    pub fn set_points(&self) -> Vec<Complex64> {
        let theta = self.phase.abs();
        if !self.indeterminate || theta == 0.0 || theta == PI || self.gain == 0.0 {
            let sign = if self.indeterminate { 1.0 } else { self.phase.signum() };
            vec![polar_point(self.gain, theta, sign)]
        } else {
            vec![polar_point(self.gain, theta, 1.0), polar_point(self.gain, theta, -1.0)]
        }
    }
}

/// Where a cloud came from; enough to regenerate every point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub model: Option<OperatorModel>,
    pub family: Option<InputFamily>,
    /// Transforms applied after estimation, in order.
    #[serde(default)]
    pub transforms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<SsgPoint>,
    pub provenance: Provenance,
    /// Inputs with zero norm (infinite gain); not stored as points.
    pub zero_inputs: usize,
    /// Inputs with zero output, stored as `(0, 0)`.
    pub zero_outputs: usize,
}

impl PointCloud {
    pub fn from_points(points: Vec<SsgPoint>) -> Self {
        Self { points, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All set-points, in point order.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.points.iter().flat_map(SsgPoint::set_points).collect()
    }

    /// Exact set of expanded points (compared bitwise).
    pub fn point_set(&self) -> BTreeSet<(u64, u64)> {
        self.expanded().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
    }

    pub fn region(&self) -> Region {
        Region::Cloud(self.expanded())
    }

    fn derived(&self, points: Vec<SsgPoint>, transform: String) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.transforms.push(transform);
        Self { points, provenance, zero_inputs: self.zero_inputs, zero_outputs: self.zero_outputs }
    }

    /// `input_id,gain,phase,re,im,indeterminate`, one row per set-point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input_id,gain,phase,re,im,indeterminate\n");
        for p in &self.points {
            for z in p.set_points() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    p.input_id,
                    fmt_sig(p.gain),
                    fmt_sig(p.phase),
                    fmt_sig(z.re),
                    fmt_sig(z.im),
                    p.indeterminate
                );
            }
        }
        out
    }
}

fn nonzero_norms(u: &SampledSignal, y: &SampledSignal) -> Result<(f64, f64)> {
    let (nu, ny) = (norm(u), norm(y));
    if nu == 0.0 || ny == 0.0 {
        return Err(SsgError::DegeneratePair(format!("zero norm (|u| = {nu}, |y| = {ny})")));
    }
    Ok((nu, ny))
}

/// `|y| / |u|`.
pub fn gain(u: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    crate::signals::check_same_grid(u, y)?;
    let nu = norm(u);
    if nu == 0.0 {
        return Err(SsgError::DegeneratePair("zero input".into()));
    }
    Ok(norm(y) / nu)
}

/// `arccos(<u,y> / (|u| |y|))` in `[0, pi]`, evaluated in the half-angle
/// form `2 atan2(|u/|u| - y/|y||, |u/|u| + y/|y||)`, which keeps full
/// precision near `0` and `pi` where `arccos` loses half the digits.
pub fn unsigned_phase(u: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    crate::signals::check_same_grid(u, y)?;
    let (nu, ny) = nonzero_norms(u, y)?;
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.samples().iter().zip(y.samples()) {
        let (a, b) = (a / nu, b / ny);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, PI))
}

/// Signed phase `sgn(Pi(u,y)) theta(u,y)`. When `|Pi| <= tol |u| |y|` the sign
/// is undecided: returns `(theta, true)`.
pub fn signed_phase(u: &SampledSignal, y: &SampledSignal, tol: f64) -> Result<(f64, bool)> {
    let (nu, ny) = nonzero_norms(u, y)?;
    let theta = unsigned_phase(u, y)?;
    let pairing = hilbert_pairing(u, y)?;
    if pairing.abs() <= tol * nu * ny {
        Ok((theta, true))
    } else {
        Ok((pairing.signum() * theta, false))
    }
}

/// One SSG sample. Zero outputs give `(0, 0)`; zero inputs are an error.
pub fn ssg_point(u: &SampledSignal, y: &SampledSignal, tol: f64, input_id: usize) -> Result<SsgPoint> {
    let rho = gain(u, y)?;
    if rho == 0.0 {
        return Ok(SsgPoint { gain: 0.0, phase: 0.0, indeterminate: false, input_id });
    }
    let (phase, indeterminate) = signed_phase(u, y, tol)?;
    Ok(SsgPoint { gain: rho, phase, indeterminate, input_id })
}

/// Unsigned SG samples `rho e^{+-j theta}` built directly from `(u, y)`.
pub fn sg_point(u: &SampledSignal, y: &SampledSignal, input_id: usize) -> Result<SsgPoint> {
    let rho = gain(u, y)?;
    if rho == 0.0 {
        return Ok(SsgPoint { gain: 0.0, phase: 0.0, indeterminate: false, input_id });
    }
    Ok(SsgPoint { gain: rho, phase: unsigned_phase(u, y)?, indeterminate: true, input_id })
}

fn cloud_from_pairs<F>(model: &OperatorModel, inputs: &[SampledSignal], point: F) -> Result<PointCloud>
where
    F: Fn(&SampledSignal, &SampledSignal, usize) -> Result<SsgPoint> + Sync + Send,
{
    let results = crate::exec::map_ordered(inputs, |i, u| -> Result<Option<SsgPoint>> {
        if u.is_zero() {
            return Ok(None);
        }
        let y = simulate(model, u).map_err(|e| e.for_input(i))?;
        point(u, &y, i).map(Some).map_err(|e| e.for_input(i))
    });
    let mut cloud = PointCloud { provenance: Provenance { model: Some(model.clone()), ..Default::default() }, ..Default::default() };
    for r in results {
        match r? {
            None => cloud.zero_inputs += 1,
            Some(p) => {
                if p.gain == 0.0 {
                    cloud.zero_outputs += 1;
                }
                cloud.points.push(p);
            }
        }
    }
    Ok(cloud)
}

/// SSG samples of `model` over explicit inputs; `input_id` is the index.
pub fn estimate_ssg_on(model: &OperatorModel, inputs: &[SampledSignal], tol: f64) -> Result<PointCloud> {
    cloud_from_pairs(model, inputs, |u, y, i| ssg_point(u, y, tol, i))
}

/// SSG samples of `model` over a generated input family.
pub fn estimate_ssg(model: &OperatorModel, family: &InputFamily, tol: f64) -> Result<PointCloud> {
    let inputs = generate_inputs(family)?;
    let mut cloud = estimate_ssg_on(model, &inputs, tol)?;
    cloud.provenance.family = Some(family.clone());
    Ok(cloud)
}

/// Unsigned SG samples of `model` over explicit inputs.
pub fn estimate_sg_on(model: &OperatorModel, inputs: &[SampledSignal]) -> Result<PointCloud> {
    cloud_from_pairs(model, inputs, sg_point)
}

/// `z -> z^dagger = 1 / conj(z)`: `(rho, phi) -> (1/rho, -phi)`.
pub fn invert_cloud(cloud: &PointCloud) -> Result<PointCloud> {
    let points = cloud
        .points
        .iter()
        .map(|p| {
            if p.gain == 0.0 {
                return Err(SsgError::NonInvertiblePoint { input_id: p.input_id });
            }
            Ok(SsgPoint { gain: 1.0 / p.gain, phase: -p.phase + 0.0, ..*p })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cloud.derived(points, "invert".into()))
}

/// Complex conjugate of every point.
pub fn conjugate_cloud(cloud: &PointCloud) -> PointCloud {
    let points = cloud.points.iter().map(|p| SsgPoint { phase: -p.phase + 0.0, ..*p }).collect();
    cloud.derived(points, "conjugate".into())
}

/// `SSG u SSG*`, which is the unsigned scaled graph.
pub fn sg_from_ssg(cloud: &PointCloud) -> PointCloud {
    let mut points = Vec::with_capacity(2 * cloud.len());
    for p in &cloud.points {
        points.push(*p);
        let on_axis = p.phase == 0.0 || p.phase.abs() == PI || p.gain == 0.0;
        if !p.indeterminate && !on_axis {
            points.push(SsgPoint { phase: -p.phase, ..*p });
        }
    }
    cloud.derived(points, "sg-from-ssg".into())
}

/// Image under `z -> -tau z`, as the SSG of `-tau H`.
pub fn scale_negate_cloud(cloud: &PointCloud, tau: f64) -> Result<PointCloud> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(SsgError::Parameter(format!("tau must lie in (0, 1], got {tau}")));
    }
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let gain = tau * p.gain;
            if p.gain == 0.0 {
                return *p;
            }
            let (phase, indeterminate) = if p.indeterminate {
                (PI - p.phase.abs(), true)
            } else if p.phase == 0.0 {
                (PI, true)
            } else {
                (p.phase - p.phase.signum() * PI + 0.0, false)
            };
            SsgPoint { gain, phase, indeterminate, input_id: p.input_id }
        })
        .collect();
    Ok(cloud.derived(points, format!("scale-negate({tau})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{tukey_window, FamilyKind, Grid};
    use crate::systems::catalog;
    use proptest::prelude::*;

    fn windowed(f: impl Fn(f64) -> f64) -> SampledSignal {
        let g = Grid::default();
        let w = tukey_window(g.len(), 0.1);
        let raw = SampledSignal::from_fn(g.len(), g.dt, f).unwrap();
        SampledSignal::new(raw.samples().iter().zip(&w).map(|(a, b)| a * b).collect(), g.dt).unwrap()
    }

    fn pt(gain: f64, phase: f64, indeterminate: bool) -> SsgPoint {
        SsgPoint { gain, phase, indeterminate, input_id: 0 }
    }

    #[test]
    fn unsigned_phase_extremes() {
        let u = windowed(|t| t.sin());
        assert!(unsigned_phase(&u, &u.scaled(3.0)).unwrap() < 1e-12);
        assert!((unsigned_phase(&u, &u.scaled(-1.0)).unwrap() - PI).abs() < 1e-12);
        let s = SampledSignal::from_fn(629, 0.01, |t| t.sin()).unwrap();
        let c = SampledSignal::from_fn(629, 0.01, |t| t.cos()).unwrap();
        assert!((unsigned_phase(&s, &c).unwrap() - PI / 2.0).abs() < 1e-3);
        let z = SampledSignal::zeros(629, 0.01).unwrap();
        assert!(matches!(unsigned_phase(&z, &c), Err(SsgError::DegeneratePair(_))));
    }

    #[test]
    fn proportional_output_is_indeterminate_at_zero() {
        let u = windowed(|t| (1.3 * t).sin());
        let (phi, ind) = signed_phase(&u, &u.scaled(2.0), DEFAULT_ZERO_PAIRING_TOL).unwrap();
        assert!(ind);
        assert!(phi < 1e-12);
        for z in pt(2.0, phi, ind).set_points() {
            assert!((z - 2.0).norm() < 1e-11);
        }
    }

    #[test]
    fn lead_and_lag_phase_at_unit_frequency() {
        let u = windowed(|t| t.sin());
        for (model, expected) in [(catalog::lead(), PI / 4.0), (catalog::lag(), -PI / 4.0)] {
            let y = simulate(&model, &u).unwrap();
            let (phi, ind) = signed_phase(&u, &y, DEFAULT_ZERO_PAIRING_TOL).unwrap();
            assert!(!ind);
            assert!((phi - expected).abs() < 0.02 * expected.abs(), "{phi} vs {expected}");
            assert!((gain(&u, &y).unwrap() - 0.5f64.sqrt()).abs() < 0.02 * 0.5f64.sqrt());
        }
    }

    #[test]
    fn static_gain_points() {
        let fam = InputFamily::new(FamilyKind::FilteredNoise { bandwidth: 2.0, order: 2 }, 5, 8, Grid::new(0.01, 20.0).unwrap());
        let cloud = estimate_ssg(&OperatorModel::gain(2.5).unwrap(), &fam, DEFAULT_ZERO_PAIRING_TOL).unwrap();
        assert_eq!(cloud.len(), 8);
        for p in &cloud.points {
            assert!((p.gain - 2.5).abs() < 1e-12);
            assert!(p.phase.abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_stays_in_right_half_plane() {
        let fam = InputFamily::new(FamilyKind::FilteredNoise { bandwidth: 3.0, order: 2 }, 9, 12, Grid::new(0.01, 20.0).unwrap());
        let mut inputs = generate_inputs(&fam).unwrap();
        for u in &mut inputs {
            *u = u.scaled(40.0);
        }
        let cloud = estimate_ssg_on(&OperatorModel::saturation(1.0).unwrap(), &inputs, DEFAULT_ZERO_PAIRING_TOL).unwrap();
        assert!(cloud.expanded().iter().all(|z| z.re >= -1e-6));
    }

    #[test]
    fn zero_output_is_recorded() {
        let u = windowed(|t| t.sin());
        let cloud = estimate_ssg_on(&OperatorModel::gain(0.0).unwrap(), &[u], DEFAULT_ZERO_PAIRING_TOL).unwrap();
        assert_eq!(cloud.zero_outputs, 1);
        assert_eq!(cloud.points[0].gain, 0.0);
        assert!(matches!(invert_cloud(&cloud), Err(SsgError::NonInvertiblePoint { input_id: 0 })));
    }

    #[test]
    fn transform_examples() {
        let inv = invert_cloud(&PointCloud::from_points(vec![pt(2.0, PI / 4.0, false), pt(1.0, 0.0, false), pt(0.5, -PI / 2.0, false)])).unwrap();
        assert_eq!((inv.points[0].gain, inv.points[0].phase), (0.5, -PI / 4.0));
        assert_eq!((inv.points[1].gain, inv.points[1].phase), (1.0, 0.0));
        assert_eq!((inv.points[2].gain, inv.points[2].phase), (2.0, PI / 2.0));

        let c = PointCloud::from_points(vec![pt(1.0, PI / 3.0, false)]);
        assert_eq!(conjugate_cloud(&c).points[0].phase, -PI / 3.0);
        let sg = sg_from_ssg(&c);
        assert_eq!(sg.points.iter().map(|p| p.phase).collect::<Vec<_>>(), vec![PI / 3.0, -PI / 3.0]);
        let real = sg_from_ssg(&PointCloud::from_points(vec![pt(2.0, 0.0, false)]));
        assert_eq!(real.expanded(), vec![Complex64::new(2.0, 0.0)]);

        let neg = |p, tau| scale_negate_cloud(&PointCloud::from_points(vec![p]), tau).unwrap().points[0];
        let a = neg(pt(1.0, PI / 4.0, false), 1.0);
        assert!((a.phase + 3.0 * PI / 4.0).abs() < 1e-15 && a.gain == 1.0 && !a.indeterminate);
        let b = neg(pt(2.0, -PI / 2.0, false), 0.5);
        assert!((b.phase - PI / 2.0).abs() < 1e-15 && b.gain == 1.0);
        let c = neg(pt(1.0, 0.0, false), 1.0);
        assert!(c.indeterminate && c.phase == PI);
        assert_eq!(c.set_points(), vec![Complex64::new(-1.0, 0.0)]);
        assert!(scale_negate_cloud(&PointCloud::default(), 0.0).is_err());
        assert!(scale_negate_cloud(&PointCloud::default(), 1.5).is_err());
    }

    #[test]
    fn scale_negate_matches_direct_estimate() {
        let fam = InputFamily::new(FamilyKind::Multisine { frequencies: None, tones: 3, band: [0.1, 10.0], sweep: false }, 3, 10, Grid::new(0.01, 30.0).unwrap());
        let inputs = generate_inputs(&fam).unwrap();
        for model in [catalog::lag(), catalog::lead(), catalog::second_order(3.0)] {
            let cloud = estimate_ssg_on(&model, &inputs, DEFAULT_ZERO_PAIRING_TOL).unwrap();
            for tau in [1.0, 0.3] {
                let mapped = scale_negate_cloud(&cloud, tau).unwrap();
                let direct = estimate_ssg_on(&OperatorModel::scale(model.clone(), -tau).unwrap(), &inputs, DEFAULT_ZERO_PAIRING_TOL).unwrap();
                for (a, b) in mapped.points.iter().zip(&direct.points) {
                    assert_eq!(a.indeterminate, b.indeterminate);
                    assert!((a.gain - b.gain).abs() <= 1e-9 * b.gain);
                    assert!((a.phase - b.phase).abs() <= 1e-9, "{a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn csv_duplicates_indeterminate_rows() {
        let c = PointCloud::from_points(vec![pt(1.0, 0.5, true), pt(2.0, -0.5, false)]);
        let csv = c.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("input_id,gain,phase,re,im,indeterminate\n"));
    }

    fn arb_point() -> impl Strategy<Value = SsgPoint> {
        (1e-3f64..1e3, -PI..=PI, any::<bool>(), 0usize..50)
            .prop_map(|(gain, phase, indeterminate, input_id)| SsgPoint { gain, phase, indeterminate, input_id })
    }

    proptest! {
        #[test]
        fn signed_graph_with_its_conjugate_is_the_unsigned_graph(points in prop::collection::vec(arb_point(), 1..40)) {
            let ssg = PointCloud::from_points(points.clone());
            let sg = sg_from_ssg(&ssg);
            let direct = PointCloud::from_points(
                points.iter().map(|p| SsgPoint { phase: p.phase.abs(), indeterminate: true, ..*p }).collect(),
            );
            let union: BTreeSet<_> = ssg.point_set().union(&conjugate_cloud(&ssg).point_set()).copied().collect();
            prop_assert!(ssg.point_set().is_subset(&sg.point_set()));
            prop_assert_eq!(&union, &sg.point_set());
            prop_assert_eq!(&union, &direct.point_set());
        }

        #[test]
        fn inversion_is_an_involution(points in prop::collection::vec(arb_point(), 1..40)) {
            let c = PointCloud::from_points(points);
            let back = invert_cloud(&invert_cloud(&c).unwrap()).unwrap();
            for (a, b) in c.points.iter().zip(&back.points) {
                prop_assert!((a.gain - b.gain).abs() <= 1e-12 * a.gain);
                prop_assert!((a.phase - b.phase).abs() <= 1e-12);
                prop_assert_eq!(a.indeterminate, b.indeterminate);
            }
        }

        #[test]
        fn inverse_points_are_dagger(p in arb_point()) {
            let inv = invert_cloud(&PointCloud::from_points(vec![p])).unwrap();
            let daggers: Vec<Complex64> = PointCloud::from_points(vec![p]).expanded().iter().map(|z| 1.0 / z).collect();
            for w in inv.expanded() {
                prop_assert!(daggers.iter().any(|d| (d - w).norm() <= 1e-12 * w.norm()));
            }
        }
    }
}
