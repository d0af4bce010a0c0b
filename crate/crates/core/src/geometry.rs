//! Complex-plane regions, set distances and the tau-homotopy separation test.
//!
//! Distances between analytic pairs (disk, line, half-plane) are closed-form.
//! Parametric perimeters are handled by Lipschitz branch-and-bound over the
//! curve parameter, so the reported value is a certified lower bound on the
//! true distance; `Distance::bound` is the remaining gap to the best sample.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::ssg::{invert_cloud, sg_from_ssg, PointCloud};
use crate::systems::{analytic_region, CatalogEntry};

/// Initial sampling density of parametric perimeters.
pub const PERIMETER_SAMPLES: usize = 2048;
/// Default clearance `r` required by the separation check.
pub const DEFAULT_SEPARATION: f64 = 1e-3;

const BNB_ABS_TOL: f64 = 1e-9;
const BNB_REL_TOL: f64 = 1e-8;
const BNB_MAX_SPLITS: usize = 200_000;

type CurveFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A curve `phi -> z` over `range`, with Lipschitz constant `lipschitz`
/// (`|z(a) - z(b)| <= L |a - b|`). A filled perimeter also contains the
/// interior of the closed curve (closed by the chord between its endpoints).
#[derive(Clone)]
pub struct Perimeter {
    curve: Arc<CurveFn>,
    range: [f64; 2],
    lipschitz: f64,
    filled: bool,
    polygon: Arc<Vec<Complex64>>,
}

impl fmt::Debug for Perimeter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Perimeter")
            .field("range", &self.range)
            .field("lipschitz", &self.lipschitz)
            .field("filled", &self.filled)
            .finish()
    }
}

impl Perimeter {
    pub fn new(
        curve: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        range: [f64; 2],
        lipschitz: f64,
        filled: bool,
    ) -> Result<Self> {
        if !(range[0] < range[1] && range.iter().all(|v| v.is_finite())) {
            return Err(SsgError::Parameter(format!("invalid parameter range {range:?}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(SsgError::Parameter(format!("invalid Lipschitz bound {lipschitz}")));
        }
        let curve: Arc<CurveFn> = Arc::new(curve);
        let polygon = Arc::new(sample_curve(&*curve, range, PERIMETER_SAMPLES));
        Ok(Self { curve, range, lipschitz, filled, polygon })
    }

    pub fn eval(&self, phi: f64) -> Complex64 {
        (self.curve)(phi)
    }

    pub fn range(&self) -> [f64; 2] {
        self.range
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn filled(&self) -> bool {
        self.filled
    }

    /// Cached samples at `PERIMETER_SAMPLES + 1` evenly spaced parameters.
    pub fn samples(&self) -> &[Complex64] {
        &self.polygon
    }

    fn step(&self) -> f64 {
        (self.range[1] - self.range[0]) / PERIMETER_SAMPLES as f64
    }

    /// `z -> factor * z` for real `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.curve.clone();
        let curve: Arc<CurveFn> = Arc::new(move |phi| factor * inner(phi));
        Self {
            polygon: Arc::new(self.polygon.iter().map(|z| factor * z).collect()),
            curve,
            range: self.range,
            lipschitz: self.lipschitz * factor.abs().max(f64::MIN_POSITIVE),
            filled: self.filled,
        }
    }

    /// Even-odd test against the sampled, chord-closed polygon.
    pub fn contains(&self, z: Complex64) -> bool {
        self.filled && polygon_contains(&self.polygon, z)
    }
}

fn sample_curve(curve: &CurveFn, range: [f64; 2], n: usize) -> Vec<Complex64> {
    let h = (range[1] - range[0]) / n as f64;
    (0..=n).map(|i| curve(range[0] + h * i as f64)).collect()
}

fn polygon_contains(poly: &[Complex64], z: Complex64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = (b.re - a.re) * (z.im - a.im) / (b.im - a.im) + a.re;
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfPlaneSide {
    /// `Im z >= 0`
    Upper,
    /// `Im z <= 0`
    Lower,
}

impl HalfPlaneSide {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        match self {
            Self::Upper => z.im >= -slack,
            Self::Lower => z.im <= slack,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Region {
    /// Filled disk, or only its boundary circle when `filled` is false.
    Disk { center: Complex64, radius: f64, filled: bool },
    /// `{z : Re((z - point) conj(normal)) >= 0}`
    HalfPlane { point: Complex64, normal: Complex64 },
    /// `{re + j y : im_min <= y <= im_max}`; infinite bounds give rays/lines.
    VerticalLine { re: f64, im_min: f64, im_max: f64 },
    Perimeter(Perimeter),
    Cloud(Vec<Complex64>),
}

/// Result of a distance query. `value` is exact for closed-form pairs and a
/// certified lower bound otherwise; `bound >= 0` is the gap between `value`
/// and the distance realized by `witness`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub witness: (Complex64, Complex64),
    pub bound: f64,
}

impl Distance {
    fn exact(value: f64, a: Complex64, b: Complex64) -> Self {
        Self { value, witness: (a, b), bound: 0.0 }
    }

    fn swapped(self) -> Self {
        Self { witness: (self.witness.1, self.witness.0), ..self }
    }
}

impl Region {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        Region::Disk { center, radius, filled: false }
    }

    pub fn disk(center: Complex64, radius: f64) -> Self {
        Region::Disk { center, radius, filled: true }
    }

    pub fn vertical_line(re: f64) -> Self {
        Region::VerticalLine { re, im_min: f64::NEG_INFINITY, im_max: f64::INFINITY }
    }

    pub fn half_plane(side: HalfPlaneSide) -> Self {
        let normal = match side {
            HalfPlaneSide::Upper => Complex64::new(0.0, 1.0),
            HalfPlaneSide::Lower => Complex64::new(0.0, -1.0),
        };
        Region::HalfPlane { point: Complex64::new(0.0, 0.0), normal }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Cloud(pts) => pts.is_empty(),
            Region::Disk { radius, .. } => !(*radius >= 0.0),
            Region::VerticalLine { im_min, im_max, .. } => !(im_min <= im_max),
            Region::HalfPlane { normal, .. } => normal.norm() == 0.0,
            Region::Perimeter(_) => false,
        }
    }

    /// Image under `z -> factor * z` for real `factor`.
    pub fn scaled(&self, factor: f64) -> Region {
        match self {
            Region::Disk { center, radius, filled } => Region::Disk {
                center: factor * center,
                radius: radius * factor.abs(),
                filled: *filled,
            },
            Region::HalfPlane { point, normal } => Region::HalfPlane {
                point: factor * point,
                normal: normal * factor.signum(),
            },
            Region::VerticalLine { re, im_min, im_max } => {
                let (a, b) = (im_min * factor, im_max * factor);
                Region::VerticalLine { re: re * factor, im_min: a.min(b), im_max: a.max(b) }
            }
            Region::Perimeter(p) => Region::Perimeter(p.scaled(factor)),
            Region::Cloud(pts) => Region::Cloud(pts.iter().map(|z| factor * z).collect()),
        }
    }

    /// Distance from a point, with the nearest point of the region.
    pub fn point_distance(&self, z: Complex64) -> Result<(f64, Complex64)> {
        if self.is_empty() {
            return Err(SsgError::EmptyRegion);
        }
        Ok(match self {
            Region::Disk { center, radius, filled } => {
                let v = z - center;
                let d = v.norm();
                let dir = if d > 0.0 { v / d } else { Complex64::new(1.0, 0.0) };
                let nearest = center + dir * *radius;
                if *filled && d <= *radius {
                    (0.0, z)
                } else {
                    ((d - radius).abs(), nearest)
                }
            }
            Region::HalfPlane { point, normal } => {
                let n = normal / normal.norm();
                let s = ((z - point) * n.conj()).re;
                if s >= 0.0 {
                    (0.0, z)
                } else {
                    (-s, z - n * s)
                }
            }
            Region::VerticalLine { re, im_min, im_max } => {
                let nearest = Complex64::new(*re, z.im.clamp(*im_min, *im_max));
                ((z - nearest).norm(), nearest)
            }
            Region::Cloud(pts) => {
                let mut best = (f64::INFINITY, pts[0]);
                for &p in pts {
                    let d = (z - p).norm();
                    if d < best.0 {
                        best = (d, p);
                    }
                }
                best
            }
            Region::Perimeter(p) => {
                if p.contains(z) {
                    (0.0, z)
                } else {
                    let d = minimize_on_curve(p, |w| ((w - z).norm(), z));
                    (d.value, d.witness.0)
                }
            }
        })
    }

    /// A point of the region used for interior tests.
    fn representative(&self) -> Option<Complex64> {
        match self {
            Region::Disk { center, radius, filled } => {
                Some(if *filled { *center } else { center + *radius })
            }
            Region::VerticalLine { re, im_min, im_max } => {
                Some(Complex64::new(*re, 0.0f64.clamp(*im_min, *im_max)))
            }
            Region::Perimeter(p) => p.samples().first().copied(),
            Region::Cloud(pts) => pts.first().copied(),
            Region::HalfPlane { .. } => None,
        }
    }
}

#[derive(Clone, Copy)]
struct Segment {
    lower: f64,
    a: f64,
    b: f64,
    ga: f64,
    gb: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // min-heap on the lower bound
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower)
    }
}

/// Certified minimum of `g(curve(phi))` where `g` is 1-Lipschitz and returns
/// `(value, partner point)`.
fn minimize_on_curve(p: &Perimeter, mut g: impl FnMut(Complex64) -> (f64, Complex64)) -> Distance {
    let lip = p.lipschitz();
    let h = p.step();
    let pts = p.samples();
    let vals: Vec<(f64, Complex64)> = pts.iter().map(|&z| g(z)).collect();
    let mut best = (f64::INFINITY, 0.0, pts[0], pts[0]);
    for (i, &(v, w)) in vals.iter().enumerate() {
        if v < best.0 {
            best = (v, p.range[0] + h * i as f64, pts[i], w);
        }
    }
    let seg_lower = |ga: f64, gb: f64, len: f64| 0.5 * (ga + gb - lip * len);
    // smallest lower bound among discarded segments
    let mut pruned = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    for i in 0..PERIMETER_SAMPLES {
        let (ga, gb) = (vals[i].0, vals[i + 1].0);
        let a = p.range[0] + h * i as f64;
        let lower = seg_lower(ga, gb, h);
        if lower < best.0 {
            heap.push(Segment { lower, a, b: a + h, ga, gb });
        } else {
            pruned = pruned.min(lower);
        }
    }
    let tol = |b: f64| BNB_ABS_TOL + BNB_REL_TOL * b.abs();
    let mut splits = 0;
    let certified = loop {
        let Some(seg) = heap.pop() else { break best.0.min(pruned) };
        if seg.lower >= best.0 - tol(best.0) || splits >= BNB_MAX_SPLITS {
            // the heap is ordered, so `seg.lower` bounds everything left in it
            break seg.lower.min(pruned).min(best.0);
        }
        splits += 1;
        let m = 0.5 * (seg.a + seg.b);
        let zm = p.eval(m);
        let (gm, wm) = g(zm);
        if gm < best.0 {
            best = (gm, m, zm, wm);
        }
        let half = 0.5 * (seg.b - seg.a);
        for (a, b, ga, gb) in [(seg.a, m, seg.ga, gm), (m, seg.b, gm, seg.gb)] {
            let lower = seg_lower(ga, gb, half);
            if lower < best.0 - tol(best.0) {
                heap.push(Segment { lower, a, b, ga, gb });
            } else {
                pruned = pruned.min(lower);
            }
        }
    };
    let value = certified.max(0.0);
    Distance { value, witness: (best.2, best.3), bound: (best.0 - value).max(0.0) }
}

fn disk_disk(c1: Complex64, r1: f64, f1: bool, c2: Complex64, r2: f64, f2: bool) -> Distance {
    let v = c2 - c1;
    let d = v.norm();
    let dir = if d > 0.0 { v / d } else { Complex64::new(1.0, 0.0) };
    let (value, a, b) = if d >= r1 + r2 {
        (d - r1 - r2, c1 + dir * r1, c2 - dir * r2)
    } else if d + r2 <= r1 {
        // disk 2 inside disk 1
        if f1 {
            (0.0, c2, c2)
        } else {
            (r1 - d - r2, c1 + dir * r1, c2 + dir * r2)
        }
    } else if d + r1 <= r2 {
        if f2 {
            (0.0, c1, c1)
        } else {
            (r2 - d - r1, c1 - dir * r1, c2 - dir * r2)
        }
    } else {
        (0.0, c1 + dir * r1, c1 + dir * r1)
    };
    Distance::exact(value.max(0.0), a, b)
}

fn disk_line(center: Complex64, radius: f64, filled: bool, re: f64, lo: f64, hi: f64) -> Distance {
    let near = Complex64::new(re, center.im.clamp(lo, hi));
    let dmin = (near - center).norm();
    let dmax = if lo.is_infinite() || hi.is_infinite() {
        f64::INFINITY
    } else {
        (Complex64::new(re, lo) - center).norm().max((Complex64::new(re, hi) - center).norm())
    };
    let toward = |p: Complex64| {
        let v = p - center;
        let n = v.norm();
        if n > 0.0 {
            center + v / n * radius
        } else {
            center + radius
        }
    };
    if dmin >= radius {
        Distance::exact(dmin - radius, toward(near), near)
    } else if filled || dmax >= radius {
        Distance::exact(0.0, near, near)
    } else {
        let far = if (Complex64::new(re, lo) - center).norm() >= (Complex64::new(re, hi) - center).norm() {
            Complex64::new(re, lo)
        } else {
            Complex64::new(re, hi)
        };
        Distance::exact(radius - dmax, toward(far), far)
    }
}

fn line_line(re1: f64, lo1: f64, hi1: f64, re2: f64, lo2: f64, hi2: f64) -> Distance {
    let gap = if hi1 < lo2 {
        lo2 - hi1
    } else if hi2 < lo1 {
        -(lo1 - hi2)
    } else {
        0.0
    };
    let (y1, y2) = if gap > 0.0 {
        (hi1, lo2)
    } else if gap < 0.0 {
        (lo1, hi2)
    } else {
        let y = lo1.max(lo2).max(-f64::MAX).min(hi1.min(hi2)).clamp(-1e300, 1e300);
        let y = if lo1.max(lo2) <= 0.0 && 0.0 <= hi1.min(hi2) { 0.0 } else { y };
        (y, y)
    };
    let a = Complex64::new(re1, y1);
    let b = Complex64::new(re2, y2);
    Distance::exact((a - b).norm(), a, b)
}

fn half_plane_line(point: Complex64, normal: Complex64, re: f64, lo: f64, hi: f64) -> Distance {
    let n = normal / normal.norm();
    // s(y) = s0 + y * n.im along the line
    let s0 = ((Complex64::new(re, 0.0) - point) * n.conj()).re;
    let (y, s) = if n.im > 0.0 {
        (hi, if hi.is_infinite() { f64::INFINITY } else { s0 + hi * n.im })
    } else if n.im < 0.0 {
        (lo, if lo.is_infinite() { f64::INFINITY } else { s0 + lo * n.im })
    } else {
        (0.0f64.clamp(lo, hi), s0)
    };
    let y = y.clamp(-1e300, 1e300);
    let z = Complex64::new(re, y);
    if s >= 0.0 {
        let z = if s.is_infinite() { Complex64::new(re, 0.0f64.clamp(lo, hi)) } else { z };
        Distance::exact(0.0, z, z)
    } else {
        Distance::exact(-s, z - n * s, z)
    }
}

/// `dist(A, B) = inf |a - b|`.
pub fn dist(a: &Region, b: &Region) -> Result<Distance> {
    if a.is_empty() || b.is_empty() {
        return Err(SsgError::EmptyRegion);
    }
    use Region::*;
    Ok(match (a, b) {
        (Cloud(pa), _) => {
            let mut best: Option<Distance> = None;
            for &z in pa {
                let (d, w) = b.point_distance(z)?;
                if best.is_none_or(|bd| d < bd.value) {
                    best = Some(Distance::exact(d, z, w));
                }
                if d == 0.0 {
                    break;
                }
            }
            best.expect("nonempty cloud")
        }
        (_, Cloud(_)) => dist(b, a)?.swapped(),
        (Disk { center: c1, radius: r1, filled: f1 }, Disk { center: c2, radius: r2, filled: f2 }) => {
            disk_disk(*c1, *r1, *f1, *c2, *r2, *f2)
        }
        (Disk { center, radius, filled }, VerticalLine { re, im_min, im_max }) => {
            disk_line(*center, *radius, *filled, *re, *im_min, *im_max)
        }
        (VerticalLine { .. }, Disk { .. }) => dist(b, a)?.swapped(),
        (VerticalLine { re: x1, im_min: l1, im_max: h1 }, VerticalLine { re: x2, im_min: l2, im_max: h2 }) => {
            line_line(*x1, *l1, *h1, *x2, *l2, *h2)
        }
        (HalfPlane { point, normal }, VerticalLine { re, im_min, im_max }) => {
            half_plane_line(*point, *normal, *re, *im_min, *im_max)
        }
        (VerticalLine { .. }, HalfPlane { .. }) => dist(b, a)?.swapped(),
        (HalfPlane { .. }, Disk { center, radius, .. }) => {
            let (d, w) = a.point_distance(*center)?;
            let v = w - center;
            let toward = if v.norm() > 0.0 { center + v / v.norm() * *radius } else { *center };
            if d <= *radius {
                Distance::exact(0.0, toward, toward)
            } else {
                Distance::exact(d - radius, w, toward)
            }
        }
        (Disk { .. }, HalfPlane { .. }) => dist(b, a)?.swapped(),
        (HalfPlane { point: p1, normal: n1 }, HalfPlane { point: p2, normal: n2 }) => {
            let (u1, u2) = (n1 / n1.norm(), n2 / n2.norm());
            if (u1 + u2).norm() > 1e-12 {
                Distance::exact(0.0, *p1, *p1)
            } else {
                let (d, w) = a.point_distance(*p2)?;
                if ((p1 - p2) * u2.conj()).re >= 0.0 {
                    Distance::exact(0.0, *p2, *p2)
                } else {
                    Distance::exact(d, w, *p2)
                }
            }
        }
        (Perimeter(p), other) => perimeter_vs(p, other)?,
        (other, Perimeter(p)) => perimeter_vs(p, other)?.swapped(),
    })
}

/// A lower bound on `dist(a, b)` that is cheap to evaluate: exact for the
/// closed-form pairs, the Lipschitz-inflated sample minimum for a perimeter
/// against another analytic region.
pub fn dist_lower_bound(a: &Region, b: &Region) -> Result<f64> {
    let (p, other) = match (a, b) {
        (Region::Perimeter(_), Region::Perimeter(_)) => return Ok(dist(a, b)?.value),
        (Region::Perimeter(p), o) | (o, Region::Perimeter(p)) if !matches!(o, Region::Cloud(_)) => (p, o),
        _ => return Ok(dist(a, b)?.value),
    };
    if a.is_empty() || b.is_empty() {
        return Err(SsgError::EmptyRegion);
    }
    if let Some(z) = other.representative() {
        if p.contains(z) {
            return Ok(0.0);
        }
    }
    let mut best = f64::INFINITY;
    for &z in p.samples() {
        best = best.min(other.point_distance(z)?.0);
    }
    Ok((best - 0.5 * p.lipschitz() * p.step()).max(0.0))
}

fn perimeter_vs(p: &Perimeter, other: &Region) -> Result<Distance> {
    if let Some(z) = other.representative() {
        if p.contains(z) {
            return Ok(Distance::exact(0.0, z, z));
        }
    }
    if let Region::Perimeter(q) = other {
        if let Some(&z) = p.samples().first() {
            if q.contains(z) {
                return Ok(Distance::exact(0.0, z, z));
            }
        }
        // sampled pairwise with Lipschitz inflation on both curves
        let mut best = (f64::INFINITY, p.samples()[0], q.samples()[0]);
        for &a in p.samples() {
            for &b in q.samples() {
                let d = (a - b).norm();
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let slack = 0.5 * (p.lipschitz() * p.step() + q.lipschitz() * q.step());
        let value = (best.0 - slack).max(0.0);
        return Ok(Distance { value, witness: (best.1, best.2), bound: best.0 - value });
    }
    let mut failure = None;
    let d = minimize_on_curve(p, |z| match other.point_distance(z) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            (f64::INFINITY, z)
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMode {
    /// Signed scaled graphs.
    Signed,
    /// Unsigned scaled graphs.
    Unsigned,
}

/// Finite grid of homotopy parameters in `(0, 1]`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TauGrid(Vec<f64>);

impl TryFrom<Vec<f64>> for TauGrid {
    type Error = SsgError;

    fn try_from(mut v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(SsgError::Parameter("empty tau grid".into()));
        }
        if let Some(t) = v.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(SsgError::Parameter(format!("tau {t} outside (0, 1]")));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(Self(v))
    }
}

impl From<TauGrid> for Vec<f64> {
    fn from(g: TauGrid) -> Self {
        g.0
    }
}

impl Default for TauGrid {
    /// 64 log-spaced points on `[1e-3, 1]`, which includes `tau = 1`.
    fn default() -> Self {
        Self::log_spaced(1e-3, 64).expect("valid default")
    }
}

impl TauGrid {
    pub fn log_spaced(min: f64, count: usize) -> Result<Self> {
        if count < 2 || !(min > 0.0 && min < 1.0) {
            return Err(SsgError::Parameter("log-spaced tau grid needs min in (0,1) and count >= 2".into()));
        }
        let (a, b) = (min.ln(), 0.0);
        let mut v: Vec<f64> = (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect();
        *v.last_mut().expect("nonempty") = 1.0;
        Self::try_from(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Union with another grid.
    pub fn refined(&self, other: &TauGrid) -> TauGrid {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        TauGrid::try_from(v).expect("union of valid grids")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub separated: bool,
    pub margin: f64,
    pub worst_tau: f64,
    pub worst_pair: [[f64; 2]; 2],
    pub mode: SeparationMode,
    pub r: f64,
    pub tau_grid: TauGrid,
    /// Gap between `margin` and the distance realized by `worst_pair`; the
    /// true smallest distance over the grid lies in `[margin, margin + bound]`.
    pub approximation_bound: f64,
}

impl StabilityVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}

/// Evaluates `dist(A, B(tau))` over the grid. Separated iff the smallest
/// distance is at least `r`; ties resolve toward the smaller `tau`.
pub fn separation_check<F>(
    a: &Region,
    b_of_tau: F,
    r: f64,
    grid: &TauGrid,
    mode: SeparationMode,
) -> Result<StabilityVerdict>
where
    F: Fn(f64) -> Result<Region> + Sync,
{
    if !(r > 0.0 && r.is_finite()) {
        return Err(SsgError::Parameter(format!("separation r must be positive, got {r}")));
    }
    // cheap bounds first; the full distance is needed only where the bound
    // does not already exceed the smallest distance found so far
    let taus = grid.values();
    let bounds = crate::exec::map_ordered(taus, |_, &tau| -> Result<(Region, f64)> {
        let b = b_of_tau(tau)?;
        let lower = dist_lower_bound(a, &b)?;
        Ok((b, lower))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&i, &j| bounds[i].1.total_cmp(&bounds[j].1).then(i.cmp(&j)));

    let mut worst: Option<(usize, Distance)> = None;
    for i in order {
        if worst.is_some_and(|(_, w)| bounds[i].1 > w.value) {
            break;
        }
        let d = dist(a, &bounds[i].0)?;
        // ties resolve toward the smaller tau
        if worst.is_none_or(|(j, w)| d.value < w.value || (d.value == w.value && i < j)) {
            worst = Some((i, d));
        }
    }
    let (worst_i, d) = worst.expect("nonempty grid");
    let worst_tau = taus[worst_i];
    Ok(StabilityVerdict {
        separated: d.value >= r,
        margin: d.value,
        worst_tau,
        worst_pair: [[d.witness.0.re, d.witness.0.im], [d.witness.1.re, d.witness.1.im]],
        mode,
        r,
        tau_grid: grid.clone(),
        approximation_bound: d.bound,
    })
}

/// The two sets compared by the stability check: `A = SSG(H1)` and
/// `D = SSG^dagger(H2)`, so that `B(tau) = SSG^dagger(-tau H2) = -(1/tau) D`.
#[derive(Debug, Clone)]
pub struct StabilitySets {
    pub h1_graph: Region,
    pub h2_inverse: Region,
}

impl StabilitySets {
    /// Catalog regions; `h2_inverse` names the inverse graph of `H2`.
    pub fn analytic(h1: CatalogEntry, h2_inverse: CatalogEntry, mode: SeparationMode) -> Result<Self> {
        let signed = mode == SeparationMode::Signed;
        Ok(Self { h1_graph: analytic_region(h1, signed)?, h2_inverse: analytic_region(h2_inverse, signed)? })
    }

    /// Estimated clouds. In unsigned mode both clouds are first closed under
    /// conjugation. Zero-gain points of `H2` have no finite inverse and are
    /// left out.
    pub fn clouds(h1: &PointCloud, h2: &PointCloud, mode: SeparationMode) -> Result<Self> {
        let (c1, mut c2) = match mode {
            SeparationMode::Signed => (h1.clone(), h2.clone()),
            SeparationMode::Unsigned => (sg_from_ssg(h1), sg_from_ssg(h2)),
        };
        c2.points.retain(|p| p.gain > 0.0);
        Ok(Self { h1_graph: c1.region(), h2_inverse: invert_cloud(&c2)?.region() })
    }

    /// `B(tau)`.
    pub fn negated_inverse(&self, tau: f64) -> Region {
        self.h2_inverse.scaled(-1.0 / tau)
    }

    pub fn check(&self, r: f64, grid: &TauGrid, mode: SeparationMode) -> Result<StabilityVerdict> {
        separation_check(&self.h1_graph, |tau| Ok(self.negated_inverse(tau)), r, grid, mode)
    }
}

/// Separation of analytic catalog regions, see [`StabilitySets::analytic`].
pub fn analytic_separation(
    h1: CatalogEntry,
    h2_inverse: CatalogEntry,
    r: f64,
    grid: &TauGrid,
    mode: SeparationMode,
) -> Result<StabilityVerdict> {
    StabilitySets::analytic(h1, h2_inverse, mode)?.check(r, grid, mode)
}

/// Separation of estimated clouds, see [`StabilitySets::clouds`].
pub fn cloud_separation(
    h1: &PointCloud,
    h2: &PointCloud,
    r: f64,
    grid: &TauGrid,
    mode: SeparationMode,
) -> Result<StabilityVerdict> {
    StabilitySets::clouds(h1, h2, mode)?.check(r, grid, mode)
}
