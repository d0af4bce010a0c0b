//! Browser demo: three interactive operations on top of `ssg-core`, each
//! returning a JSON document for the page to draw. The plain functions are
//! the testable core; the `#[wasm_bindgen]` wrappers only serialize.

use num_complex::Complex64;
use serde::Serialize;
use ssg_core::geometry::{Region, SeparationMode, StabilitySets, TauGrid, DEFAULT_SEPARATION};
use ssg_core::signals::{generate_inputs, tukey_window, FamilyKind, Grid, InputFamily, SampledSignal};
use ssg_core::spectral::hilbert;
use ssg_core::ssg::{estimate_ssg_on, sg_from_ssg, DEFAULT_ZERO_PAIRING_TOL};
use ssg_core::systems::{analytic_region, catalog, CatalogEntry, OperatorModel};
use wasm_bindgen::prelude::*;

/// Upper limits keep a single call interactive in the browser.
pub const MAX_INPUTS: usize = 400;
pub const MAX_GAIN: f64 = 1000.0;

#[derive(Debug, Clone, Serialize)]
pub struct CloudView {
    pub system: String,
    pub signed: bool,
    pub points: Vec<[f64; 2]>,
    /// Boundary of the matching analytic region.
    pub overlay: Vec<[f64; 2]>,
    pub indeterminate: usize,
}

fn xy(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn system(name: &str) -> Result<(OperatorModel, CatalogEntry), String> {
    match name {
        "lead" => Ok((catalog::lead(), CatalogEntry::LeadCircle)),
        "lag" => Ok((catalog::lag(), CatalogEntry::LagCircle)),
        other => Err(format!("unknown system `{other}`, expected lead or lag")),
    }
}

fn circle_boundary(region: &Region, n: usize) -> Vec<[f64; 2]> {
    match region {
        Region::Disk { center, radius, .. } => (0..=n)
            .map(|i| xy(center + Complex64::from_polar(*radius, std::f64::consts::TAU * i as f64 / n as f64)))
            .collect(),
        Region::Perimeter(p) => {
            let [a, b] = p.range();
            (0..=n).map(|i| xy(p.eval(a + (b - a) * i as f64 / n as f64))).collect()
        }
        _ => Vec::new(),
    }
}

/// Estimated graph of `lead` or `lag` from `count` random multisine inputs.
pub fn cloud_view(name: &str, count: usize, seed: u64, signed: bool) -> Result<CloudView, String> {
    if count == 0 || count > MAX_INPUTS {
        return Err(format!("count must lie in 1..={MAX_INPUTS}"));
    }
    let (model, entry) = system(name)?;
    let kind = FamilyKind::Multisine { frequencies: None, tones: 3, band: [0.05, 20.0], sweep: false };
    let grid = Grid::new(0.02, 60.0).map_err(|e| e.to_string())?;
    let inputs = generate_inputs(&InputFamily::new(kind, seed, count, grid)).map_err(|e| e.to_string())?;
    let mut cloud = estimate_ssg_on(&model, &inputs, DEFAULT_ZERO_PAIRING_TOL).map_err(|e| e.to_string())?;
    if !signed {
        cloud = sg_from_ssg(&cloud);
    }
    let region = analytic_region(entry, signed).map_err(|e| e.to_string())?;
    Ok(CloudView {
        system: name.to_string(),
        signed,
        points: cloud.expanded().into_iter().map(xy).collect(),
        overlay: circle_boundary(&region, 256),
        indeterminate: cloud.points.iter().filter(|p| p.indeterminate).count(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationView {
    pub k: f64,
    pub signed: bool,
    pub separated: bool,
    pub margin: f64,
    pub worst_tau: f64,
    pub witness: [[f64; 2]; 2],
    /// Boundary of `SSG(k/(s+1)^2)`.
    pub perimeter: Vec<[f64; 2]>,
    /// `B(worst_tau)` is the vertical line `Re z = line_re`, restricted to
    /// `Im z >= 0` in the signed case.
    pub line_re: f64,
}

/// Separation of the `k/(s+1)^2` graph from the negated inverse graph of
/// the lag `1/(s+1)`; separated exactly for `k < 8`.
pub fn separation_view(k: f64, signed: bool) -> Result<SeparationView, String> {
    if !(k > 0.0 && k <= MAX_GAIN) {
        return Err(format!("k must lie in (0, {MAX_GAIN}]"));
    }
    let mode = if signed { SeparationMode::Signed } else { SeparationMode::Unsigned };
    let sets = StabilitySets::analytic(CatalogEntry::SecondOrderPerimeter { k }, CatalogEntry::LagInverseHalfline, mode)
        .map_err(|e| e.to_string())?;
    let v = sets.check(DEFAULT_SEPARATION, &TauGrid::default(), mode).map_err(|e| e.to_string())?;
    let line_re = match sets.negated_inverse(v.worst_tau) {
        Region::VerticalLine { re, .. } => re,
        other => return Err(format!("unexpected region {other:?}")),
    };
    Ok(SeparationView {
        k,
        signed,
        separated: v.separated,
        margin: v.margin,
        worst_tau: v.worst_tau,
        witness: v.worst_pair,
        perimeter: circle_boundary(&sets.h1_graph, 512),
        line_re,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HilbertView {
    pub t: Vec<f64>,
    pub input: Vec<f64>,
    pub transform: Vec<f64>,
    /// Windowed `sin(omega t)`, the transform of a slowly windowed cosine.
    pub reference: Vec<f64>,
    /// Relative L2 error on the interior 80% of the support.
    pub interior_error: f64,
}

/// Hilbert transform of a tapered `cos(omega t)` on `[0, 60)`.
pub fn hilbert_view(omega: f64, taper: f64) -> Result<HilbertView, String> {
    let (dt, n) = (0.02, 3000);
    if !(omega > 0.0 && omega < std::f64::consts::PI / dt) {
        return Err("omega must lie between 0 and the Nyquist frequency".into());
    }
    if !(0.0..0.5).contains(&taper) {
        return Err("taper must lie in [0, 0.5)".into());
    }
    let window = tukey_window(n, taper);
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let input: Vec<f64> = t.iter().zip(&window).map(|(t, w)| w * (omega * t).cos()).collect();
    let reference: Vec<f64> = t.iter().zip(&window).map(|(t, w)| w * (omega * t).sin()).collect();
    let u = SampledSignal::new(input.clone(), dt).map_err(|e| e.to_string())?;
    let h = hilbert(&u);
    let offset = ((u.start() - h.start()) / dt).round() as usize;
    let transform = h.samples()[offset..offset + n].to_vec();
    let (mut err, mut norm) = (0.0, 0.0);
    for i in n / 10..n - n / 10 {
        err += (transform[i] - reference[i]).powi(2);
        norm += reference[i].powi(2);
    }
    Ok(HilbertView { t, input, transform, reference, interior_error: (err / norm).sqrt() })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = cloudView)]
pub fn cloud_view_js(system: &str, count: u32, seed: u32, signed: bool) -> Result<String, JsValue> {
    to_js(cloud_view(system, count as usize, u64::from(seed), signed))
}

#[wasm_bindgen(js_name = separationView)]
pub fn separation_view_js(k: f64, signed: bool) -> Result<String, JsValue> {
    to_js(separation_view(k, signed))
}

#[wasm_bindgen(js_name = hilbertView)]
pub fn hilbert_view_js(omega: f64, taper: f64) -> Result<String, JsValue> {
    to_js(hilbert_view(omega, taper))
}
