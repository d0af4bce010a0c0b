//! Experiment configuration: one JSON document naming systems, input
//! families, tolerances and tasks. See `docs/config.md` for the schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ssg_core::certify::{CertifyTolerances, NiReading, DEFAULT_PRODUCT_BAND, DEFAULT_REAL_AXIS_BAND, DEFAULT_SLACK};
use ssg_core::closed_loop::LoopSign;
use ssg_core::geometry::{TauGrid, DEFAULT_SEPARATION};
use ssg_core::signals::{FamilyKind, Grid, InputFamily};
use ssg_core::ssg::DEFAULT_ZERO_PAIRING_TOL;
use ssg_core::systems::{catalog, OperatorModel};

use crate::error::CliError;

pub const DEFAULT_FAMILY: &str = "default";

fn default_zero_pairing() -> f64 {
    DEFAULT_ZERO_PAIRING_TOL
}
fn default_slack() -> f64 {
    DEFAULT_SLACK
}
fn default_band() -> f64 {
    DEFAULT_REAL_AXIS_BAND
}
fn default_product_band() -> f64 {
    DEFAULT_PRODUCT_BAND
}
fn default_separation() -> f64 {
    DEFAULT_SEPARATION
}
fn default_true() -> bool {
    true
}
fn default_tau() -> f64 {
    1.0
}
fn default_samples() -> usize {
    512
}
fn default_pad() -> usize {
    ssg_core::spectral::DEFAULT_PAD_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_zero_pairing")]
    pub zero_pairing: f64,
    #[serde(default = "default_band")]
    pub real_axis_band: f64,
    #[serde(default = "default_product_band")]
    pub product_band: f64,
    /// Relative slack of the certificate inequalities.
    #[serde(default = "default_slack")]
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero_pairing: default_zero_pairing(),
            real_axis_band: default_band(),
            product_band: default_product_band(),
            slack: default_slack(),
        }
    }
}

impl Tolerances {
    pub fn certify(&self) -> CertifyTolerances {
        CertifyTolerances {
            slack: self.slack,
            zero_pairing: self.zero_pairing,
            real_axis_band: self.real_axis_band,
            product_band: self.product_band,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Signed,
    Unsigned,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    /// Estimate clouds of the named systems.
    Clouds,
    /// Use catalog regions; `h1` names `SSG(H1)`, `h2` names `SSG^dagger(H2)`.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyProperty {
    Passive,
    StrictlyPassive,
    SsgNi,
    PassivityTheorem,
    NiTheorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    SsgEstimate {
        system: String,
        #[serde(default)]
        family: Option<String>,
        #[serde(default)]
        overlays: Vec<String>,
        #[serde(default = "default_true")]
        signed: bool,
    },
    SsgAnalytic {
        entry: String,
        #[serde(default)]
        signed: bool,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    StabilityCheck {
        h1: String,
        h2: String,
        #[serde(default = "default_mode")]
        mode: ModeSelection,
        #[serde(default = "default_source")]
        source: GraphSource,
        #[serde(default)]
        family: Option<String>,
    },
    Certify {
        property: CertifyProperty,
        #[serde(default)]
        system: Option<String>,
        #[serde(default)]
        h1: Option<String>,
        #[serde(default)]
        h2: Option<String>,
        #[serde(default)]
        epsilon: f64,
        #[serde(default)]
        reading: NiReading,
        #[serde(default)]
        family: Option<String>,
    },
    LoopSimulate {
        h1: String,
        h2: String,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_sign")]
        sign: LoopSign,
        #[serde(default)]
        input: usize,
        #[serde(default)]
        family: Option<String>,
    },
    LoopGain {
        h1: String,
        h2: String,
        #[serde(default = "default_sign")]
        sign: LoopSign,
        #[serde(default)]
        family: Option<String>,
    },
    Hilbert {
        input: PathBuf,
        #[serde(default = "default_pad")]
        pad: usize,
        #[serde(default)]
        full: bool,
    },
}

fn default_mode() -> ModeSelection {
    ModeSelection::Signed
}
fn default_source() -> GraphSource {
    GraphSource::Clouds
}
fn default_sign() -> LoopSign {
    LoopSign::Negative
}

impl Task {
    /// Subcommand this task belongs to.
    pub fn command(&self) -> &'static str {
        match self {
            Task::SsgEstimate { .. } => "ssg-estimate",
            Task::SsgAnalytic { .. } => "ssg-analytic",
            Task::StabilityCheck { .. } => "stability-check",
            Task::Certify { .. } => "certify",
            Task::LoopSimulate { .. } => "loop-simulate",
            Task::LoopGain { .. } => "loop-gain",
            Task::Hilbert { .. } => "hilbert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed applied to every input family.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub systems: BTreeMap<String, OperatorModel>,
    /// Named input families; tasks without a `family` use `"default"`.
    #[serde(default)]
    pub families: BTreeMap<String, InputFamily>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tau_grid: Option<TauGrid>,
    /// Clearance `r` required by stability checks.
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            systems: BTreeMap::new(),
            families: BTreeMap::new(),
            tolerances: Tolerances::default(),
            tau_grid: None,
            separation: default_separation(),
            tasks: Vec::new(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let cfg = Self::deserialize(&value).map_err(|e| {
            CliError::Config(match locate_error(&value) {
                Some(p) => format!("at `{p}`: {e}"),
                None => e.to_string(),
            })
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(CliError::Config(format!("separation must be positive, got {}", self.separation)));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("zero_pairing", t.zero_pairing),
            ("real_axis_band", t.real_axis_band),
            ("product_band", t.product_band),
            ("slack", t.slack),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("tolerances.{name} must be non-negative, got {v}")));
            }
        }
        for (name, fam) in &self.families {
            fam.validate().map_err(|e| CliError::Config(format!("families.{name}: {e}")))?;
        }
        Ok(())
    }

    /// A configured system, falling back to the built-in names `lead`, `lag`,
    /// `second-order:K`, `first-order:K`, `gain:K` and `saturation:L`.
    pub fn system(&self, name: &str) -> Result<OperatorModel, CliError> {
        if let Some(m) = self.systems.get(name) {
            return Ok(m.clone());
        }
        builtin_system(name).unwrap_or_else(|| {
            Err(CliError::Config(format!(
                "unknown system `{name}` (configured: {}; built-in: lead, lag, second-order:K, first-order:K, gain:K, saturation:L)",
                self.names(self.systems.keys())
            )))
        })
    }

    /// The named family with the experiment seed applied.
    pub fn family(&self, name: Option<&str>) -> Result<InputFamily, CliError> {
        let name = name.unwrap_or(DEFAULT_FAMILY);
        let mut fam = self
            .families
            .get(name)
            .cloned()
            .or_else(|| (name == DEFAULT_FAMILY).then(builtin_family))
            .ok_or_else(|| CliError::Config(format!("unknown family `{name}` (known: {})", self.names(self.families.keys()))))?;
        fam.seed = self.seed;
        Ok(fam)
    }

    pub fn tau_grid(&self) -> TauGrid {
        self.tau_grid.clone().unwrap_or_default()
    }

    fn names<'a>(&self, keys: impl Iterator<Item = &'a String>) -> String {
        let v: Vec<&str> = keys.map(String::as_str).collect();
        if v.is_empty() {
            "none".into()
        } else {
            v.join(", ")
        }
    }

    /// SHA-256 of the canonical JSON form (output directory excluded), hex.
    pub fn hash(&self) -> String {
        hash_hex(serde_json::to_string(self).expect("configs serialize").as_bytes())
    }
}

fn builtin_system(name: &str) -> Option<Result<OperatorModel, CliError>> {
    let model = match name {
        "lead" => return Some(Ok(catalog::lead())),
        "lag" => return Some(Ok(catalog::lag())),
        _ => {
            let (kind, arg) = name.split_once(':')?;
            let v: f64 = match arg.parse() {
                Ok(v) => v,
                Err(_) => return Some(Err(CliError::Config(format!("system `{name}`: `{arg}` is not a number")))),
            };
            match kind {
                "second-order" => Ok(catalog::second_order(v)),
                "first-order" => Ok(catalog::first_order(v)),
                "gain" => OperatorModel::gain(v),
                "saturation" => OperatorModel::saturation(v),
                _ => return None,
            }
        }
    };
    Some(model.map_err(|e| CliError::Config(format!("system `{name}`: {e}"))))
}

/// Used when a configuration defines no `default` family: 64 single tones
/// log-spaced over [0.05, 20] rad/s on a 200 s horizon.
pub fn builtin_family() -> InputFamily {
    InputFamily::new(
        FamilyKind::Multisine { frequencies: None, tones: 1, band: [0.05, 20.0], sweep: true },
        0,
        64,
        Grid::new(0.01, 200.0).expect("valid grid"),
    )
}

pub fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Finds the deepest section whose standalone parse reproduces the error.
fn locate_error(root: &serde_json::Value) -> Option<String> {
    use serde_json::Value;
    let obj = root.as_object()?;
    for (key, v) in obj {
        let fails = |candidate: Value| {
            let mut probe = serde_json::Map::new();
            probe.insert(key.clone(), candidate);
            serde_json::from_value::<ExperimentConfig>(Value::Object(probe)).is_err()
        };
        if !fails(v.clone()) {
            continue;
        }
        match v {
            Value::Object(m) => {
                for (k, inner) in m {
                    let mut single = serde_json::Map::new();
                    single.insert(k.clone(), inner.clone());
                    if fails(Value::Object(single)) {
                        return Some(format!("{key}.{k}"));
                    }
                }
            }
            Value::Array(items) => {
                for (i, inner) in items.iter().enumerate() {
                    if fails(Value::Array(vec![inner.clone()])) {
                        return Some(format!("{key}[{i}]"));
                    }
                }
            }
            _ => {}
        }
        return Some(key.clone());
    }
    None
}
