//! Experiment configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::generators::SpectrumRegion;
use crate::error::{Error, Result};
use crate::kernels::Precision;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    ToyIdentity,
    GeneralSquare,
    ConditionEvolution,
    ExpmCompare,
    BoundReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::ToyIdentity,
        ExperimentKind::GeneralSquare,
        ExperimentKind::ConditionEvolution,
        ExperimentKind::ExpmCompare,
        ExperimentKind::BoundReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ToyIdentity => "toy_identity",
            ExperimentKind::GeneralSquare => "general_square",
            ExperimentKind::ConditionEvolution => "condition_evolution",
            ExperimentKind::ExpmCompare => "expm_compare",
            ExperimentKind::BoundReport => "bound_report",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    Well,
    Ill,
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conditioning::Well => "well",
            Conditioning::Ill => "ill",
        })
    }
}

impl FromStr for Conditioning {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "well" => Ok(Conditioning::Well),
            "ill" => Ok(Conditioning::Ill),
            other => Err(format!("unknown conditioning '{other}' (expected well or ill)")),
        }
    }
}

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_P_MAX_WELL: u32 = 15;
pub const DEFAULT_P_MAX_ILL: u32 = 8;
/// `sigma_n` shrink factor of the ill-conditioned `A`.
pub const DEFAULT_ILL_DELTA: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 20240607;
pub const BOUND_REPORT_N: usize = 16;
pub const BOUND_REPORT_TRIALS: usize = 5;
pub const BOUND_REPORT_P_MAX: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub trials: usize,
    pub p_max: u32,
    pub conditioning: Conditioning,
    pub spectrum: SpectrumRegion,
    /// Ill-conditioning factor for `A` in the squaring experiments, the
    /// eigenvector factor of `V` in `expm_compare`.
    pub delta: f64,
    pub precision: Precision,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `experiment`; `p_max` and `delta` follow `conditioning`.
    pub fn new(experiment: ExperimentKind, conditioning: Conditioning) -> Self {
        let spectrum = match experiment {
            ExperimentKind::ExpmCompare => SpectrumRegion::Disk,
            _ => SpectrumRegion::Circle,
        };
        let (n, trials, p_max) = match experiment {
            ExperimentKind::BoundReport => (BOUND_REPORT_N, BOUND_REPORT_TRIALS, BOUND_REPORT_P_MAX),
            _ => (DEFAULT_N, DEFAULT_TRIALS, default_p_max(conditioning)),
        };
        Self {
            experiment,
            n,
            trials,
            p_max,
            conditioning,
            spectrum,
            delta: default_delta(experiment, conditioning),
            precision: Precision::Binary64,
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Config("n must be >= 2".into()));
        }
        if self.p_max < 1 {
            return Err(Error::Config("p_max must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        self.spectrum.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds a config from `key = value` pairs; unknown keys are errors.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        for key in pairs.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let experiment: ExperimentKind = parse_field(get("experiment").unwrap_or("general_square"), "experiment")?;
        let conditioning: Conditioning = match get("conditioning") {
            Some(v) => parse_field(v, "conditioning")?,
            None => Conditioning::Well,
        };
        let mut cfg = Self::new(experiment, conditioning);
        if let Some(v) = get("n") {
            cfg.n = parse_field(v, "n")?;
        }
        if let Some(v) = get("trials") {
            cfg.trials = parse_field(v, "trials")?;
        }
        if let Some(v) = get("p_max") {
            cfg.p_max = parse_field(v, "p_max")?;
        }
        if let Some(v) = get("spectrum") {
            cfg.spectrum = parse_field(v, "spectrum")?;
        }
        if let Some(v) = get("delta") {
            cfg.delta = parse_field(v, "delta")?;
        }
        if let Some(v) = get("precision") {
            cfg.precision = parse_field(v, "precision")?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse_field(v, "seed")?;
        }
        if let Some(v) = get("output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The config as `key = value` lines, in the order of [`KEYS`].
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", self.experiment.to_string()),
            ("n", self.n.to_string()),
            ("trials", self.trials.to_string()),
            ("p_max", self.p_max.to_string()),
            ("conditioning", self.conditioning.to_string()),
            ("spectrum", self.spectrum.to_string()),
            ("delta", format!("{:e}", self.delta)),
            ("precision", self.precision.to_string()),
            ("seed", self.seed.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ]
    }
}

pub const KEYS: [&str; 10] =
    ["experiment", "n", "trials", "p_max", "conditioning", "spectrum", "delta", "precision", "seed", "output_dir"];

pub fn default_p_max(conditioning: Conditioning) -> u32 {
    match conditioning {
        Conditioning::Well => DEFAULT_P_MAX_WELL,
        Conditioning::Ill => DEFAULT_P_MAX_ILL,
    }
}

pub fn default_delta(experiment: ExperimentKind, conditioning: Conditioning) -> f64 {
    match (experiment, conditioning) {
        (ExperimentKind::ExpmCompare, _) => 1.0,
        (_, Conditioning::Ill) => DEFAULT_ILL_DELTA,
        (_, Conditioning::Well) => 1.0,
    }
}

fn parse_field<V: FromStr>(value: &str, key: &str) -> Result<V>
where
    V::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| Error::Config(format!("{key}: {e}")))
}

/// Normalizes a key: lower case, `-` to `_`, `out` as `output_dir`.
pub fn canonical_key(key: &str) -> String {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    if k == "out" {
        "output_dir".to_string()
    } else {
        k
    }
}

/// Parses the flat config format: one `key = value` per line, `#` comments,
/// blank lines ignored. Later duplicates win.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = canonical_key(k);
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_text(&text)
}
