//! Task execution. Every output file carries the configuration hash and the
//! seed: a `#` comment line for CSV, top-level fields for JSON and an XML
//! comment for SVG.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};
use ssg_core::certify::{
    check_passive_with, check_ssg_ni_with, ni_theorem_verdict_with, passivity_theorem_verdict_with, w_set_diagnostic,
};
use ssg_core::closed_loop::{closed_loop_simulate, empirical_gain, LoopSign};
use ssg_core::geometry::{Region, SeparationMode, StabilitySets, StabilityVerdict};
use ssg_core::signals::{fmt_sig, generate_inputs, SampledSignal};
use ssg_core::spectral::hilbert_padded;
use ssg_core::ssg::{estimate_ssg, sg_from_ssg, PointCloud};
use ssg_core::systems::{analytic_region, CatalogEntry};

use crate::config::{hash_hex, CertifyProperty, ExperimentConfig, GraphSource, ModeSelection, Task};
use crate::error::CliError;
use crate::svg::Plot;

type Result<T> = std::result::Result<T, CliError>;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One finished task: what was written and a one-line summary.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub struct Context {
    config: ExperimentConfig,
    out_dir: PathBuf,
    hash: String,
}

impl Context {
    pub fn new(config: ExperimentConfig, out_dir: PathBuf) -> Self {
        let hash = config.hash();
        Self { config, out_dir, hash }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn provenance(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.config.seed)
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.out_dir.display())))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, csv: &str, extra: &str) -> Result<PathBuf> {
        let mut header = self.provenance();
        if !extra.is_empty() {
            header.push(' ');
            header.push_str(extra);
        }
        self.write(name, &format!("# {header}\n{csv}"))
    }

    fn write_json(&self, name: &str, body: Value) -> Result<PathBuf> {
        let mut doc = serde_json::Map::new();
        doc.insert("config_hash".into(), json!(self.hash));
        doc.insert("seed".into(), json!(self.config.seed));
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("result".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
        self.write(name, &(text + "\n"))
    }

    fn write_svg(&self, name: &str, plot: &Plot) -> Result<PathBuf> {
        self.write(name, &plot.render(&self.provenance()))
    }

    pub fn run(&self, task: &Task) -> Result<TaskOutput> {
        match task {
            Task::SsgEstimate { system, family, overlays, signed } => {
                self.ssg_estimate(system, family.as_deref(), overlays, *signed)
            }
            Task::SsgAnalytic { entry, signed, samples } => self.ssg_analytic(entry, *signed, *samples),
            Task::StabilityCheck { h1, h2, mode, source, family } => {
                self.stability(h1, h2, *mode, *source, family.as_deref())
            }
            Task::Certify { property, system, h1, h2, epsilon, reading, family } => {
                self.certify(*property, system.as_deref(), h1.as_deref(), h2.as_deref(), *epsilon, *reading, family.as_deref())
            }
            Task::LoopSimulate { h1, h2, tau, sign, input, family } => {
                self.loop_simulate(h1, h2, *tau, *sign, *input, family.as_deref())
            }
            Task::LoopGain { h1, h2, sign, family } => self.loop_gain(h1, h2, *sign, family.as_deref()),
            Task::Hilbert { input, pad, full } => self.hilbert(input, *pad, *full),
        }
    }

    fn cloud(&self, system: &str, family: Option<&str>) -> Result<PointCloud> {
        let model = self.config.system(system)?;
        let fam = self.config.family(family)?;
        Ok(estimate_ssg(&model, &fam, self.config.tolerances.zero_pairing)?)
    }

    fn ssg_estimate(&self, system: &str, family: Option<&str>, overlays: &[String], signed: bool) -> Result<TaskOutput> {
        let mut cloud = self.cloud(system, family)?;
        if !signed {
            cloud = sg_from_ssg(&cloud);
        }
        let kind = if signed { "SSG" } else { "SG" };
        let stem = format!("ssg-estimate-{}", file_part(system));
        let mut plot = Plot::new(format!("{kind} of {system}")).points(system, cloud.expanded(), COLORS[0]);
        for (i, name) in overlays.iter().enumerate() {
            let region = analytic_region(parse_entry(name)?, signed)?;
            plot = plot.region(name, region, COLORS[1 + i % (COLORS.len() - 1)]);
        }
        let csv = self.write_csv(&format!("{stem}.csv"), &cloud.to_csv(), "")?;
        let svg = self.write_svg(&format!("{stem}.svg"), &plot)?;
        Ok(TaskOutput {
            summary: format!(
                "{kind} estimate of {system}: {} points, {} indeterminate, {} zero inputs, {} zero outputs",
                cloud.len(),
                cloud.points.iter().filter(|p| p.indeterminate).count(),
                cloud.zero_inputs,
                cloud.zero_outputs
            ),
            files: vec![csv, svg],
        })
    }

    fn ssg_analytic(&self, entry: &str, signed: bool, samples: usize) -> Result<TaskOutput> {
        if samples < 2 {
            return Err(CliError::Config(format!("samples must be at least 2, got {samples}")));
        }
        let region = analytic_region(parse_entry(entry)?, signed)?;
        let mut csv = String::from("re,im\n");
        for z in boundary(&region, samples) {
            csv.push_str(&format!("{},{}\n", fmt_sig(z.re), fmt_sig(z.im)));
        }
        let kind = if signed { "SSG" } else { "SG" };
        let stem = format!("ssg-analytic-{}-{}", file_part(entry), kind.to_lowercase());
        let plot = Plot::new(format!("{kind} region {entry}")).region(entry, region, COLORS[0]);
        let files = vec![
            self.write_csv(&format!("{stem}.csv"), &csv, "")?,
            self.write_svg(&format!("{stem}.svg"), &plot)?,
        ];
        Ok(TaskOutput { files, summary: format!("{kind} region {entry}: {samples} boundary samples") })
    }

    fn stability_sets(&self, h1: &str, h2: &str, source: GraphSource, family: Option<&str>, mode: SeparationMode) -> Result<StabilitySets> {
        Ok(match source {
            GraphSource::Analytic => StabilitySets::analytic(parse_entry(h1)?, parse_entry(h2)?, mode)?,
            GraphSource::Clouds => StabilitySets::clouds(&self.cloud(h1, family)?, &self.cloud(h2, family)?, mode)?,
        })
    }

    fn stability(&self, h1: &str, h2: &str, selection: ModeSelection, source: GraphSource, family: Option<&str>) -> Result<TaskOutput> {
        let modes: &[SeparationMode] = match selection {
            ModeSelection::Signed => &[SeparationMode::Signed],
            ModeSelection::Unsigned => &[SeparationMode::Unsigned],
            ModeSelection::Both => &[SeparationMode::Signed, SeparationMode::Unsigned],
        };
        let stem = format!("stability-{}-{}", file_part(h1), file_part(h2));
        let grid = self.config.tau_grid();
        let mut files = Vec::new();
        let mut verdicts: Vec<(SeparationMode, StabilityVerdict)> = Vec::new();
        for &mode in modes {
            let sets = self.stability_sets(h1, h2, source, family, mode)?;
            let v = sets.check(self.config.separation, &grid, mode)?;
            let label = mode_name(mode);
            let [a, b] = v.worst_pair;
            let (za, zb) = (Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1]));
            // the regions can be unbounded, so frame the closest pair
            let half = (3.0 * (za - zb).norm()).max(2.0);
            let plot = Plot::new(format!("{label} separation of {h1} and {h2}, tau = {:.4}", v.worst_tau))
                .region(h1, sets.h1_graph.clone(), COLORS[0])
                .region(&format!("B(tau) from {h2}"), sets.negated_inverse(v.worst_tau), COLORS[1])
                .segment(za, zb, COLORS[2])
                .focus(0.5 * (za + zb), half);
            files.push(self.write_svg(&format!("{stem}-{label}.svg"), &plot)?);
            verdicts.push((mode, v));
        }
        let summary = verdicts
            .iter()
            .map(|(m, v)| {
                format!(
                    "{}: {} (margin {:.6}, worst tau {:.4})",
                    mode_name(*m),
                    if v.separated { "separated" } else { "not separated" },
                    v.margin,
                    v.worst_tau
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        let body = if verdicts.len() == 1 {
            serde_json::to_value(&verdicts[0].1).expect("verdicts serialize")
        } else {
            let (s, u) = (&verdicts[0].1, &verdicts[1].1);
            json!({
                "signed": s,
                "unsigned": u,
                // unsigned test rejects a configuration the signed test accepts
                "unsigned_conservative": s.separated && !u.separated,
            })
        };
        files.insert(0, self.write_json(&format!("{stem}.json"), body)?);
        Ok(TaskOutput { files, summary: format!("stability {h1} vs {h2}: {summary}") })
    }

    #[allow(clippy::too_many_arguments)]
    fn certify(
        &self,
        property: CertifyProperty,
        system: Option<&str>,
        h1: Option<&str>,
        h2: Option<&str>,
        epsilon: f64,
        reading: ssg_core::certify::NiReading,
        family: Option<&str>,
    ) -> Result<TaskOutput> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(CliError::Config(format!("epsilon must be non-negative, got {epsilon}")));
        }
        let fam = self.config.family(family)?;
        let tol = self.config.tolerances.certify();
        let need = |v: Option<&str>, what: &str| {
            v.map(str::to_string).ok_or_else(|| CliError::Config(format!("certify {} needs `{what}`", property_name(property))))
        };
        let (subject, body, passed) = match property {
            CertifyProperty::Passive | CertifyProperty::StrictlyPassive | CertifyProperty::SsgNi => {
                let name = need(system, "system")?;
                let model = self.config.system(&name)?;
                let report = match property {
                    CertifyProperty::Passive => check_passive_with(&model, &fam, epsilon, &tol)?,
                    CertifyProperty::StrictlyPassive => {
                        if epsilon == 0.0 {
                            return Err(CliError::Config("strictly-passive needs epsilon > 0".into()));
                        }
                        check_passive_with(&model, &fam, epsilon, &tol)?
                    }
                    _ => check_ssg_ni_with(&model, &fam, epsilon, reading, &tol)?,
                };
                let passed = report.verdict.passed();
                (name, serde_json::to_value(&report).expect("reports serialize"), passed)
            }
            CertifyProperty::PassivityTheorem | CertifyProperty::NiTheorem => {
                let (a, b) = (need(h1, "h1")?, need(h2, "h2")?);
                let (m1, m2) = (self.config.system(&a)?, self.config.system(&b)?);
                let (body, passed) = if property == CertifyProperty::PassivityTheorem {
                    let v = passivity_theorem_verdict_with(&m1, &m2, &fam, epsilon, &tol)?;
                    (serde_json::to_value(&v).expect("verdicts serialize"), v.verdict.passed())
                } else {
                    let v = ni_theorem_verdict_with(&m1, &m2, &fam, epsilon, &tol)?;
                    (serde_json::to_value(&v).expect("verdicts serialize"), v.verdict.passed())
                };
                (format!("{a}-{b}"), body, passed)
            }
        };
        let name = property_name(property);
        let file = self.write_json(&format!("certify-{name}-{}.json", file_part(&subject)), body)?;
        Ok(TaskOutput {
            files: vec![file],
            summary: format!(
                "certify {name} {subject}: {}",
                if passed { "pass (no violation among the sampled inputs)" } else { "fail" }
            ),
        })
    }

    fn loop_simulate(&self, h1: &str, h2: &str, tau: f64, sign: LoopSign, input: usize, family: Option<&str>) -> Result<TaskOutput> {
        let (m1, m2) = (self.config.system(h1)?, self.config.system(h2)?);
        let inputs = generate_inputs(&self.config.family(family)?)?;
        let w = inputs
            .get(input)
            .ok_or_else(|| CliError::Config(format!("input {input} out of range, family has {}", inputs.len())))?;
        let traj = closed_loop_simulate(&m1, &m2, w, tau, sign)?;
        let diag = w_set_diagnostic(&traj, self.config.tolerances.zero_pairing)?;
        let stem = format!("loop-{}-{}", file_part(h1), file_part(h2));
        let extra = format!("tau={tau} sign={} input={input}", sign_name(sign));
        let csv = self.write_csv(&format!("{stem}.csv"), &traj.to_csv(), &extra)?;
        let json = self.write_json(
            &format!("{stem}.json"),
            json!({
                "tau": tau,
                "sign": sign,
                "input": input,
                "interconnection_residual": traj.interconnection_residual(),
                "w_set": diag,
            }),
        )?;
        Ok(TaskOutput {
            files: vec![csv, json],
            summary: format!(
                "loop {h1} / {h2} ({} feedback, tau {tau}): {} samples, residual {:.3e}",
                sign_name(sign),
                traj.w.len(),
                traj.interconnection_residual()
            ),
        })
    }

    fn loop_gain(&self, h1: &str, h2: &str, sign: LoopSign, family: Option<&str>) -> Result<TaskOutput> {
        let (m1, m2) = (self.config.system(h1)?, self.config.system(h2)?);
        let inputs = generate_inputs(&self.config.family(family)?)?;
        let report = empirical_gain(&m1, &m2, &inputs, &self.config.tau_grid(), sign)?;
        let file = self.write_json(
            &format!("loop-gain-{}-{}.json", file_part(h1), file_part(h2)),
            serde_json::to_value(&report).expect("reports serialize"),
        )?;
        let verdict = if report.unstable {
            format!("growth {:.3} under horizon doubling, flagged unstable", report.growth)
        } else {
            format!("growth {:.3} under horizon doubling, no instability found among the samples", report.growth)
        };
        Ok(TaskOutput {
            files: vec![file],
            summary: format!("loop gain {h1} / {h2}: gamma {:.6} at tau {:.4}, {verdict}", report.gamma, report.worst_tau),
        })
    }

    fn hilbert(&self, input: &Path, pad: usize, full: bool) -> Result<TaskOutput> {
        if pad < 2 {
            return Err(CliError::Config(format!("pad must be at least 2, got {pad}")));
        }
        let bytes = std::fs::read(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let u = SampledSignal::from_csv(text).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let mut h = hilbert_padded(&u, pad);
        if !full {
            let offset = ((u.start() - h.start()) / u.dt()).round() as usize;
            let support = h.samples()[offset..offset + u.len()].to_vec();
            h = SampledSignal::with_start(support, u.dt(), u.start())?;
        }
        let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "signal".into());
        let extra = format!("input_sha256={} pad={pad} full={full}", hash_hex(&bytes));
        let file = self.write_csv(&format!("hilbert-{}.csv", file_part(&stem)), &h.to_csv(), &extra)?;
        Ok(TaskOutput {
            files: vec![file],
            summary: format!("hilbert transform of {}: {} samples", input.display(), h.len()),
        })
    }
}

fn parse_entry(name: &str) -> Result<CatalogEntry> {
    name.parse::<CatalogEntry>().map_err(|e| CliError::Config(e.to_string()))
}

fn mode_name(mode: SeparationMode) -> &'static str {
    match mode {
        SeparationMode::Signed => "signed",
        SeparationMode::Unsigned => "unsigned",
    }
}

fn sign_name(sign: LoopSign) -> &'static str {
    match sign {
        LoopSign::Negative => "negative",
        LoopSign::Positive => "positive",
    }
}

fn property_name(p: CertifyProperty) -> &'static str {
    match p {
        CertifyProperty::Passive => "passive",
        CertifyProperty::StrictlyPassive => "strictly-passive",
        CertifyProperty::SsgNi => "ssg-ni",
        CertifyProperty::PassivityTheorem => "passivity-theorem",
        CertifyProperty::NiTheorem => "ni-theorem",
    }
}

/// Keeps names filesystem-safe: anything outside `[A-Za-z0-9._-]` becomes `_`.
fn file_part(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

/// Boundary samples of a region; unbounded ends are reported as infinities.
fn boundary(region: &Region, samples: usize) -> Vec<Complex64> {
    let n = samples;
    match region {
        Region::Disk { center, radius, .. } => (0..=n)
            .map(|i| center + Complex64::from_polar(*radius, 2.0 * std::f64::consts::PI * i as f64 / n as f64))
            .collect(),
        Region::Perimeter(p) => {
            let [a, b] = p.range();
            (0..=n).map(|i| p.eval(a + (b - a) * i as f64 / n as f64)).collect()
        }
        Region::VerticalLine { re, im_min, im_max } => {
            vec![Complex64::new(*re, *im_min), Complex64::new(*re, *im_max)]
        }
        Region::HalfPlane { point, normal } => {
            // boundary direction, pushed to infinity componentwise
            let far = |x: f64| if x == 0.0 { 0.0 } else { x.signum() * f64::INFINITY };
            let dir = Complex64::new(far(-normal.im), far(normal.re));
            vec![-dir, *point, dir]
        }
        Region::Cloud(points) => points.clone(),
    }
}
