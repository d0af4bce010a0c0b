//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tolerances and runtime budgets are pinned
//! below; oracles are closed forms computed here, independent of the library.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use ssg_core::certify::{check_passive, check_ssg_ni, ni_theorem_verdict, NiReading, DEFAULT_PRODUCT_BAND, DEFAULT_REAL_AXIS_BAND};
use ssg_core::closed_loop::{empirical_gain, LoopSign};
use ssg_core::geometry::{analytic_separation, cloud_separation, SeparationMode, TauGrid, DEFAULT_SEPARATION};
use ssg_core::signals::{generate_inputs, norm, tukey_window, FamilyKind, Grid, InputFamily, SampledSignal};
use ssg_core::spectral::hilbert_pairing;
use ssg_core::ssg::{conjugate_cloud, estimate_sg_on, estimate_ssg_on, PointCloud, DEFAULT_ZERO_PAIRING_TOL};
use ssg_core::systems::{catalog, CatalogEntry, OperatorModel};

const HILBERT_REL_L2: f64 = 0.01;
const ANTISYMMETRY: f64 = 1e-6;
const CALIBRATION_REL: f64 = 0.02;
const DISK_RADIUS: f64 = 0.52;
const HALF_PLANE_BAND: f64 = 0.02;
const HORIZON_STABLE_CHANGE: f64 = 0.10;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ssgraph")
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin()).args(args).output().map_err(e2s)?;
    ensure(out.status.success(), || {
        format!("ssgraph {:?} exited with {:?}: {}", args, out.status.code(), String::from_utf8_lossy(&out.stderr))
    })
}

fn family(kind: FamilyKind, seed: u64, count: usize, dt: f64, horizon: f64) -> InputFamily {
    InputFamily::new(kind, seed, count, Grid::new(dt, horizon).unwrap())
}

fn inputs(kind: FamilyKind, seed: u64, count: usize, dt: f64, horizon: f64) -> Result<Vec<SampledSignal>, String> {
    generate_inputs(&family(kind, seed, count, dt, horizon)).map_err(e2s)
}

fn multisine(band: [f64; 2]) -> FamilyKind {
    FamilyKind::Multisine { frequencies: None, tones: 3, band, sweep: false }
}

fn noise(bandwidth: f64) -> FamilyKind {
    FamilyKind::FilteredNoise { bandwidth, order: 2 }
}

/// Reads a `t,value` CSV, skipping `#` lines.
fn read_signal(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let text = std::fs::read_to_string(path).map_err(e2s)?;
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').ok_or_else(|| format!("bad row `{l}`"))?;
            Ok((t.parse().map_err(e2s)?, v.parse().map_err(e2s)?))
        })
        .collect()
}

fn c1_hilbert_pair(dir: &Path) -> Check {
    let (dt, n) = (0.01, 6000);
    let window = tukey_window(n, 0.1);
    let mut csv = String::from("t,value\n");
    for (k, w) in window.iter().enumerate() {
        let t = k as f64 * dt;
        csv.push_str(&format!("{t:.17e},{:.17e}\n", w * t.cos()));
    }
    let input = dir.join("cosine.csv");
    std::fs::write(&input, csv).map_err(e2s)?;
    let out = dir.join("c1");
    run_cli(&["hilbert", input.to_str().unwrap(), "--out", out.to_str().unwrap()])?;
    let h = read_signal(&out.join("hilbert-cosine.csv"))?;
    ensure(h.len() == n, || format!("{} output samples, expected {n}", h.len()))?;
    let (mut err, mut reference) = (0.0, 0.0);
    for &(t, v) in &h[n / 10..n - n / 10] {
        err += (v - t.sin()).powi(2);
        reference += t.sin().powi(2);
    }
    let rel = (err / reference).sqrt();
    ensure(rel < HILBERT_REL_L2, || format!("relative L2 error {rel:.3e}"))?;
    Ok(format!("relative L2 error {rel:.2e} on the interior 80%"))
}

fn c2_antisymmetry() -> Check {
    let us = inputs(noise(3.0), 21, 200, 0.01, 20.0)?;
    let ys = inputs(multisine([0.1, 30.0]), 22, 200, 0.01, 20.0)?;
    let mut worst: f64 = 0.0;
    for (u, y) in us.iter().zip(&ys) {
        let a = hilbert_pairing(u, y).map_err(e2s)?;
        let b = hilbert_pairing(y, u).map_err(e2s)?;
        worst = worst.max((a + b).abs() / (norm(u) * norm(y)));
    }
    ensure(worst <= ANTISYMMETRY, || format!("normalized |Pi(u,y) + Pi(y,u)| reached {worst:.3e}"))?;
    Ok(format!("200 pairs, worst normalized asymmetry {worst:.2e}"))
}

fn c3_calibration() -> Check {
    let grid = Grid::new(0.01, 300.0).unwrap();
    let mut rows = Vec::new();
    let cases: [(&str, OperatorModel, fn(Complex64) -> Complex64); 2] = [
        ("lag", catalog::lag(), |s| 1.0 / (s + 1.0)),
        ("lead", catalog::lead(), |s| s / (s + 1.0)),
    ];
    for (name, model, oracle) in &cases {
        for w in [0.2, 1.0, 5.0] {
            let fam = InputFamily::tones(&[w], 3, grid).remove(0);
            let cloud = estimate_ssg_on(model, &generate_inputs(&fam).map_err(e2s)?, DEFAULT_ZERO_PAIRING_TOL).map_err(e2s)?;
            let p = cloud.points[0];
            let h = oracle(Complex64::new(0.0, w));
            let (eg, ep) = ((p.gain - h.norm()).abs() / h.norm(), (p.phase - h.arg()).abs() / h.arg().abs());
            ensure(eg < CALIBRATION_REL && ep < CALIBRATION_REL, || {
                format!("{name} at w = {w}: ({:.4}, {:.4}) vs ({:.4}, {:.4})", p.gain, p.phase, h.norm(), h.arg())
            })?;
            rows.push(format!("{name}@{w}: {:.2}%/{:.2}%", 100.0 * eg, 100.0 * ep));
        }
    }
    Ok(format!("gain/phase errors {}", rows.join(", ")))
}

fn c4_containment() -> Check {
    let mut ws = inputs(multisine([0.02, 50.0]), 41, 250, 0.01, 100.0)?;
    ws.extend(inputs(noise(2.0), 42, 250, 0.01, 100.0)?);
    let mut msg = Vec::new();
    for (name, model, upper) in [("lead", catalog::lead(), true), ("lag", catalog::lag(), false)] {
        let cloud = estimate_ssg_on(&model, &ws, DEFAULT_ZERO_PAIRING_TOL).map_err(e2s)?;
        ensure(cloud.len() == 500, || format!("{name}: {} points", cloud.len()))?;
        let mut worst_r: f64 = 0.0;
        let mut worst_im: f64 = f64::INFINITY;
        for z in cloud.expanded() {
            worst_r = worst_r.max((z - 0.5).norm());
            worst_im = worst_im.min(if upper { z.im } else { -z.im });
        }
        ensure(worst_r <= DISK_RADIUS && worst_im >= -HALF_PLANE_BAND, || {
            format!("{name}: max |z - 0.5| = {worst_r:.4}, worst half-plane excursion {worst_im:.4}")
        })?;
        msg.push(format!("{name}: max |z-0.5| {worst_r:.4}, min signed Im {worst_im:.2e}"));
    }
    Ok(msg.join("; "))
}

fn perimeter_margin(k: f64, mode: SeparationMode) -> Result<(bool, f64), String> {
    let v = analytic_separation(
        CatalogEntry::SecondOrderPerimeter { k },
        CatalogEntry::LagInverseHalfline,
        DEFAULT_SEPARATION,
        &TauGrid::default(),
        mode,
    )
    .map_err(e2s)?;
    Ok((v.separated, v.margin))
}

fn c5_k8_boundary() -> Check {
    let (sep79, m79) = perimeter_margin(7.9, SeparationMode::Signed)?;
    let (sep81, m81) = perimeter_margin(8.1, SeparationMode::Signed)?;
    ensure(sep79 && !sep81, || format!("k = 7.9 separated {sep79}, k = 8.1 separated {sep81}"))?;
    let ks: Vec<f64> = (0..=40).map(|i| 7.0 + 0.05 * i as f64).collect();
    let margins = ks.iter().map(|&k| perimeter_margin(k, SeparationMode::Signed).map(|m| m.1)).collect::<Result<Vec<_>, _>>()?;
    for (w, k) in margins.windows(2).zip(ks.windows(2)) {
        ensure(w[1] <= w[0], || format!("margin rises from {} at k = {} to {} at k = {}", w[0], k[0], w[1], k[1]))?;
    }
    for (&k, &m) in ks.iter().zip(&margins) {
        // exact margin is 1 - k/8 below the boundary, zero above it
        let exact = (1.0 - k / 8.0).max(0.0);
        ensure((m - exact).abs() < 1e-6, || format!("k = {k}: margin {m} vs {exact}"))?;
    }
    Ok(format!("margin {m79:.4} at k = 7.9, {m81:.1e} at k = 8.1, monotone over 41 values in [7, 9]"))
}

fn c6_conservatism() -> Check {
    let grid = TauGrid::default();
    let r = DEFAULT_SEPARATION;
    let check = |h1, h2, mode| analytic_separation(h1, h2, r, &grid, mode).map_err(e2s);
    let k100 = CatalogEntry::SecondOrderPerimeter { k: 100.0 };
    let (u, s) = (
        check(k100, CatalogEntry::LeadInverseHalfline, SeparationMode::Unsigned)?,
        check(k100, CatalogEntry::LeadInverseHalfline, SeparationMode::Signed)?,
    );
    ensure(!u.separated && s.separated, || format!("k = 100 with lead: unsigned {}, signed {}", u.separated, s.separated))?;
    let mut configs = 0;
    let mut dominate = |us: &ssg_core::geometry::StabilityVerdict, ss: &ssg_core::geometry::StabilityVerdict, what: &str| {
        configs += 1;
        ensure(!us.separated || (ss.separated && ss.margin >= us.margin), || {
            format!("{what}: unsigned margin {} beats signed {}", us.margin, ss.margin)
        })
    };
    for k in [0.5, 2.0, 4.0, 7.0, 7.9, 8.1, 9.0, 20.0, 100.0] {
        for h2 in [CatalogEntry::LagInverseHalfline, CatalogEntry::LeadInverseHalfline] {
            let h1 = CatalogEntry::SecondOrderPerimeter { k };
            let us = check(h1, h2, SeparationMode::Unsigned)?;
            let ss = check(h1, h2, SeparationMode::Signed)?;
            dominate(&us, &ss, &format!("perimeter k = {k} vs {h2:?}"))?;
        }
    }
    let ws = inputs(multisine([0.05, 20.0]), 61, 40, 0.01, 100.0)?;
    let systems: Vec<(&str, OperatorModel)> = vec![
        ("k=7", catalog::second_order(7.0)),
        ("k=100", catalog::second_order(100.0)),
        ("sat", OperatorModel::saturation(0.5).unwrap()),
        ("gain2", OperatorModel::gain(2.0).unwrap()),
        ("lag", catalog::lag()),
        ("lead", catalog::lead()),
    ];
    let clouds: Vec<PointCloud> = systems
        .iter()
        .map(|(_, m)| estimate_ssg_on(m, &ws, DEFAULT_ZERO_PAIRING_TOL).map_err(e2s))
        .collect::<Result<_, _>>()?;
    for i in 0..systems.len() {
        for j in 0..systems.len() {
            let us = cloud_separation(&clouds[i], &clouds[j], r, &grid, SeparationMode::Unsigned).map_err(e2s)?;
            let ss = cloud_separation(&clouds[i], &clouds[j], r, &grid, SeparationMode::Signed).map_err(e2s)?;
            dominate(&us, &ss, &format!("clouds {} vs {}", systems[i].0, systems[j].0))?;
        }
    }
    Ok(format!(
        "k = 100 with lead: unsigned margin {:.1e}, signed margin {:.4}; dominance over {configs} configurations",
        u.margin, s.margin
    ))
}

/// Routh-Hurwitz for `s^3 + a2 s^2 + a1 s + a0`.
fn cubic_hurwitz(a2: f64, a1: f64, a0: f64) -> bool {
    a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

fn c7_loop_gains() -> Check {
    // negative feedback of k/(s+1)^2 with lag: (s+1)^3 + k; with lead: (s+1)^3 + k s
    ensure(cubic_hurwitz(3.0, 3.0, 8.0) && cubic_hurwitz(3.0, 103.0, 1.0) && !cubic_hurwitz(3.0, 3.0, 10.0), || {
        "Routh oracle disagrees with the textbook boundary".into()
    })?;
    // (s+1)^3 = -9 gives s = -1 + 9^(1/3) e^(+-j pi/3)
    let root = Complex64::new(-1.0, 0.0) + Complex64::from_polar(9f64.cbrt(), std::f64::consts::FRAC_PI_3);
    let residual = ((root + 1.0).powi(3) + 9.0).norm();
    ensure(root.re > 0.0 && residual < 1e-12, || format!("k = 9 root {root} residual {residual}"))?;

    let ws = inputs(FamilyKind::WindowedPulse { width: [1.0, 5.0], onset: Some([0.0, 10.0]) }, 71, 6, 0.05, 200.0)?;
    let grid = TauGrid::default();
    let gain = |h1: OperatorModel, h2: OperatorModel| empirical_gain(&h1, &h2, &ws, &grid, LoopSign::Negative).map_err(e2s);
    let mut msg = Vec::new();
    for (name, h1, h2) in [("k=7 lag", 7.0, catalog::lag()), ("k=100 lead", 100.0, catalog::lead())] {
        let r = gain(catalog::second_order(h1), h2)?;
        ensure(r.gamma.is_finite() && !r.unstable && (r.growth - 1.0).abs() < HORIZON_STABLE_CHANGE, || {
            format!("{name}: gamma {} growth {} unstable {}", r.gamma, r.growth, r.unstable)
        })?;
        msg.push(format!("{name}: gamma {:.3}, growth {:.4}", r.gamma, r.growth));
    }
    let r = gain(catalog::second_order(9.0), catalog::lag())?;
    ensure(r.unstable, || format!("k=9 lag not flagged: growth {}", r.growth))?;
    msg.push(format!("k=9 lag flagged (growth {:.3e}, pole {:.3}{:+.3}j)", r.growth, root.re, root.im));
    Ok(msg.join("; "))
}

fn c8_certification(dir: &Path) -> Check {
    let mixed = family(multisine([0.05, 20.0]), 81, 24, 0.01, 60.0);
    let dc = family(FamilyKind::WindowedPulse { width: [900.0, 1200.0], onset: None }, 82, 6, 0.1, 2000.0);
    let sat = OperatorModel::saturation(1.0).unwrap();
    let neg = OperatorModel::gain(-1.0).unwrap();
    let passes = |r: ssg_core::Result<ssg_core::certify::CertificateReport>| r.map(|r| r.verdict.passed()).map_err(e2s);
    let results = [
        ("saturation passive", passes(check_passive(&sat, &mixed, 0.0))?, true),
        ("lag passive", passes(check_passive(&catalog::lag(), &mixed, 0.0))?, true),
        ("gain -1 passive", passes(check_passive(&neg, &mixed, 0.0))?, false),
        ("lag ssg-ni", passes(check_ssg_ni(&catalog::lag(), &dc, 0.0, NiReading::LagSide))?, true),
        ("lead ssg-ni", passes(check_ssg_ni(&catalog::lead(), &dc, 0.0, NiReading::LagSide))?, false),
    ];
    for (what, got, want) in results {
        ensure(got == want, || format!("{what}: passed = {got}, expected {want}"))?;
    }
    let ni = |a: f64| {
        ni_theorem_verdict(&catalog::first_order(a), &catalog::lag(), &dc, 0.0, DEFAULT_REAL_AXIS_BAND, DEFAULT_PRODUCT_BAND)
            .map_err(e2s)
    };
    let (inside, boundary) = (ni(0.5)?, ni(1.0)?);
    ensure(inside.verdict.passed() && !boundary.verdict.passed(), || {
        format!("ni theorem: 0.5 pair {:?}, unit pair {:?}", inside.verdict, boundary.verdict)
    })?;

    // the same verdict through the command line
    let cfg = dir.join("c8.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 82,
            "families": {"default": {"kind": "windowed-pulse", "width": [900, 1200], "count": 6, "grid": {"dt": 0.1, "horizon": 2000}}},
            "tasks": [{"command": "certify", "property": "ssg-ni", "system": "lag"},
                      {"command": "certify", "property": "ssg-ni", "system": "lead"}]}"#,
    )
    .map_err(e2s)?;
    let out = dir.join("c8");
    run_cli(&["certify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])?;
    for (name, want) in [("lag", "pass"), ("lead", "fail")] {
        let text = std::fs::read_to_string(out.join(format!("certify-ssg-ni-{name}.json"))).map_err(e2s)?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(e2s)?;
        ensure(v["verdict"] == want, || format!("cli ssg-ni {name}: {}", v["verdict"]))?;
    }
    Ok(format!(
        "passivity and ssg-ni verdicts as expected; ni theorem products {:.3} (pass) and {:.3} (fail)",
        inside.worst_product.unwrap_or(f64::NAN),
        boundary.worst_product.unwrap_or(f64::NAN)
    ))
}

fn c9_set_identities() -> Check {
    let mut ws = inputs(multisine([0.05, 20.0]), 91, 60, 0.01, 60.0)?;
    ws.extend(inputs(noise(1.0), 92, 60, 0.01, 60.0)?);
    let systems = [
        catalog::lead(),
        catalog::lag(),
        catalog::second_order(8.0),
        OperatorModel::saturation(0.3).unwrap(),
        OperatorModel::gain(-1.0).unwrap(),
        OperatorModel::series(catalog::lead(), OperatorModel::saturation(0.2).unwrap()),
    ];
    let mut points = 0;
    for (i, m) in systems.iter().enumerate() {
        let ssg = estimate_ssg_on(m, &ws, DEFAULT_ZERO_PAIRING_TOL).map_err(e2s)?;
        let sg = estimate_sg_on(m, &ws).map_err(e2s)?;
        let (a, b) = (ssg.point_set(), sg.point_set());
        ensure(a.is_subset(&b), || format!("system {i}: SSG not inside SG"))?;
        let union: std::collections::BTreeSet<_> = a.union(&conjugate_cloud(&ssg).point_set()).copied().collect();
        ensure(union == b, || format!("system {i}: SSG with its conjugate differs from SG"))?;
        points += b.len();
    }
    Ok(format!("{} systems, {points} SG points, exact set identities", systems.len()))
}

fn c10_determinism(dir: &Path) -> Check {
    let signal: String = std::iter::once("t,value\n".to_string())
        .chain((0..2000).map(|k| {
            let t = k as f64 * 0.01;
            format!("{t},{}\n", (-(t - 10.0).powi(2)).exp())
        }))
        .collect();
    let sig_path = dir.join("bump.csv");
    std::fs::write(&sig_path, signal).map_err(e2s)?;
    let cfg = format!(
        r#"{{"seed": 5,
            "systems": {{"plant": {{"type": "tf", "num": [7], "den": [1, 2, 1]}},
                         "sat": {{"type": "static", "kind": "saturation", "limit": 0.5}}}},
            "families": {{"default": {{"kind": "multisine", "band": [0.05, 10], "count": 12, "grid": {{"dt": 0.01, "horizon": 40}}}},
                          "pulses": {{"kind": "windowed-pulse", "width": [1, 4], "onset": [0, 5], "count": 3, "grid": {{"dt": 0.05, "horizon": 60}}}}}},
            "tau_grid": [0.25, 0.5, 1.0],
            "tasks": [
              {{"command": "ssg-estimate", "system": "plant", "overlays": ["second-order-perimeter:7"]}},
              {{"command": "ssg-estimate", "system": "sat", "signed": false}},
              {{"command": "ssg-analytic", "entry": "lead-circle", "signed": true}},
              {{"command": "stability-check", "h1": "plant", "h2": "lag", "mode": "both"}},
              {{"command": "certify", "property": "passive", "system": "sat"}},
              {{"command": "loop-simulate", "h1": "plant", "h2": "sat", "tau": 0.5, "family": "pulses"}},
              {{"command": "loop-gain", "h1": "plant", "h2": "lag", "family": "pulses"}},
              {{"command": "hilbert", "input": {:?}}}
            ]}}"#,
        sig_path.to_str().unwrap()
    );
    let cfg_path = dir.join("c10.json");
    std::fs::write(&cfg_path, cfg).map_err(e2s)?;
    let run = |name: &str, jobs: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let out = dir.join(name);
        run_cli(&["run", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs])?;
        let mut files = BTreeMap::new();
        for e in std::fs::read_dir(&out).map_err(e2s)? {
            let p = e.map_err(e2s)?.path();
            files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).map_err(e2s)?);
        }
        Ok(files)
    };
    let (a, b) = (run("c10a", "1")?, run("c10b", "4")?);
    ensure(a.keys().eq(b.keys()), || format!("file sets differ: {:?} vs {:?}", a.keys(), b.keys()))?;
    let data = a.keys().filter(|k| k.ends_with(".csv") || k.ends_with(".json")).count();
    ensure(data >= 8, || format!("only {data} CSV/JSON outputs"))?;
    for (name, bytes) in &a {
        ensure(b[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} files ({data} CSV/JSON) byte-identical across two runs with 1 and 4 workers", a.len()))
}

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: Box<dyn FnOnce() -> Check>,
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir: PathBuf = tmp.path().to_path_buf();
    let (d1, d8, d10) = (dir.clone(), dir.clone(), dir.clone());
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = vec![
        Criterion { id: 1, title: "hilbert pair via cli", budget: secs(1), run: Box::new(move || c1_hilbert_pair(&d1)) },
        Criterion { id: 2, title: "pairing antisymmetry", budget: secs(5), run: Box::new(c2_antisymmetry) },
        Criterion { id: 3, title: "lti calibration", budget: None, run: Box::new(c3_calibration) },
        Criterion { id: 4, title: "lead/lag region containment", budget: secs(60), run: Box::new(c4_containment) },
        Criterion { id: 5, title: "k = 8 boundary", budget: secs(5), run: Box::new(c5_k8_boundary) },
        Criterion { id: 6, title: "signed never more conservative", budget: secs(60), run: Box::new(c6_conservatism) },
        Criterion { id: 7, title: "loop gain cross-validation", budget: secs(120), run: Box::new(c7_loop_gains) },
        Criterion { id: 8, title: "certification suite", budget: secs(60), run: Box::new(move || c8_certification(&d8)) },
        Criterion { id: 9, title: "ssg/sg set identities", budget: None, run: Box::new(c9_set_identities) },
        Criterion { id: 10, title: "determinism", budget: None, run: Box::new(move || c10_determinism(&d10)) },
    ];
    // written straight to stderr so the lines show without --nocapture
    let mut err = std::io::stderr();
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(c.run))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.2} s, budget {} s", elapsed.as_secs_f64(), b.as_secs())),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        let _ = writeln!(err, "criterion {:>2} {tag} [{:>6.2} s] {}: {detail}", c.id, elapsed.as_secs_f64(), c.title);
    }
    let _ = writeln!(err, "acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
