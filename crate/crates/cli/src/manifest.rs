//! Run manifests: one `key = value` pair per line, `#` starts a comment.
//!
//! Relative paths are resolved against the manifest's directory. Values may
//! be wrapped in double quotes.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fmap_core::operators::Orientation;
use fmap_core::pipeline::MatchConfig;
use fmap_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Wks,
    Csv,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    /// Input of `selfsym`; falls back to `source`.
    pub mesh: Option<PathBuf>,
    pub output: PathBuf,
    pub descriptors: DescriptorKind,
    pub source_descriptors: Option<PathBuf>,
    pub target_descriptors: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub ground_truth_symmetric: Option<PathBuf>,
    pub init_t12: Option<PathBuf>,
    pub init_t21: Option<PathBuf>,
    pub init_c12: Option<PathBuf>,
    pub init_c21: Option<PathBuf>,
    pub config: MatchConfig,
    /// Keys set explicitly by the manifest or by overrides.
    pub explicit: BTreeSet<String>,
    base: PathBuf,
}

/// Every key a manifest may set.
pub const KEYS: &[&str] = &[
    "source",
    "target",
    "mesh",
    "output",
    "descriptors",
    "source_descriptors",
    "target_descriptors",
    "ground_truth",
    "ground_truth_symmetric",
    "init_t12",
    "init_t21",
    "init_c12",
    "init_c21",
    "k",
    "wks_energies",
    "wks_eigs",
    "operator_stride",
    "orientation",
    "alpha1",
    "alpha2",
    "alpha3",
    "alpha4",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "max_iter",
    "bijective",
    "fix_outliers",
    "coverage",
    "continuity",
    "coupling",
    "coverage_gate",
    "continuity_gate",
    "outlier_threshold",
    "smooth_sweeps",
    "refine_orientation",
    "orientation_stride",
];

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_error(format!("{key}: cannot parse {value:?} as a number")))
}

fn weight(key: &str, value: &str) -> Result<f64> {
    let w: f64 = number(key, value)?;
    if !(w >= 0.0 && w.is_finite()) {
        return Err(config_error(format!("{key}: weights must be finite and nonnegative, got {value}")));
    }
    Ok(w)
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(config_error(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn orientation(key: &str, value: &str) -> Result<Option<Orientation>> {
    match value {
        "preserve" => Ok(Some(Orientation::Preserve)),
        "reverse" => Ok(Some(Orientation::Reverse)),
        "off" => Ok(None),
        _ => Err(config_error(format!("{key}: expected preserve, reverse or off, got {value:?}"))),
    }
}

/// Splits `key = value`, trimming whitespace and one pair of quotes.
pub fn split_assignment(line: &str) -> Result<(String, String)> {
    let (key, value) = line
        .split_once('=')
        .ok_or_else(|| config_error(format!("expected key = value, got {line:?}")))?;
    let value = value.trim();
    let value = value
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(value);
    Ok((key.trim().to_string(), value.to_string()))
}

impl Manifest {
    /// Defaults with relative paths resolved against `base`.
    pub fn empty(base: impl Into<PathBuf>) -> Self {
        let base = base.into();
        Self {
            source: None,
            target: None,
            mesh: None,
            output: base.clone(),
            descriptors: DescriptorKind::Wks,
            source_descriptors: None,
            target_descriptors: None,
            ground_truth: None,
            ground_truth_symmetric: None,
            init_t12: None,
            init_t21: None,
            init_c12: None,
            init_c21: None,
            config: MatchConfig::default(),
            explicit: BTreeSet::new(),
            base,
        }
    }

    pub fn parse(text: &str, base: impl Into<PathBuf>) -> Result<Self> {
        let mut m = Self::empty(base);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_assignment(line)?;
            m.set(&key, &value)?;
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::parse(path, format!("cannot read manifest: {e}")))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::parse(path, msg),
            other => other,
        })
    }

    fn path(&self, value: &str) -> PathBuf {
        self.base.join(value)
    }

    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let cfg = &mut self.config;
        match key {
            "source" => self.source = Some(self.path(value)),
            "target" => self.target = Some(self.path(value)),
            "mesh" => self.mesh = Some(self.path(value)),
            "output" => self.output = self.path(value),
            "descriptors" => {
                self.descriptors = match value {
                    "wks" => DescriptorKind::Wks,
                    "csv" => DescriptorKind::Csv,
                    _ => return Err(config_error(format!("descriptors: expected wks or csv, got {value:?}"))),
                }
            }
            "source_descriptors" => self.source_descriptors = Some(self.path(value)),
            "target_descriptors" => self.target_descriptors = Some(self.path(value)),
            "ground_truth" => self.ground_truth = Some(self.path(value)),
            "ground_truth_symmetric" => self.ground_truth_symmetric = Some(self.path(value)),
            "init_t12" => self.init_t12 = Some(self.path(value)),
            "init_t21" => self.init_t21 = Some(self.path(value)),
            "init_c12" => self.init_c12 = Some(self.path(value)),
            "init_c21" => self.init_c21 = Some(self.path(value)),
            "k" => {
                cfg.k = number(key, value)?;
                if cfg.k < 2 {
                    return Err(config_error(format!("k: basis size must be at least 2, got {}", cfg.k)));
                }
            }
            "wks_energies" | "wks_eigs" => {
                let v: usize = number(key, value)?;
                if v == 0 {
                    return Err(config_error(format!("{key}: must be positive")));
                }
                if let fmap_core::pipeline::DescriptorSource::Wks { energies, eigs } = &mut cfg.descriptors {
                    if key == "wks_energies" {
                        *energies = v;
                    } else {
                        *eigs = v;
                    }
                }
            }
            "operator_stride" | "orientation_stride" => {
                let v: usize = number(key, value)?;
                if v == 0 {
                    return Err(config_error(format!("{key}: must be positive")));
                }
                if key == "operator_stride" {
                    cfg.operator_stride = v;
                } else {
                    cfg.refine.orientation_stride = v;
                }
            }
            "orientation" => cfg.orientation = orientation(key, value)?,
            "alpha1" => cfg.weights.descriptors = weight(key, value)?,
            "alpha2" => cfg.weights.multiplicative = weight(key, value)?,
            "alpha3" => cfg.weights.laplacian = weight(key, value)?,
            "alpha4" => cfg.weights.orientation = weight(key, value)?,
            "lambda1" => cfg.refine.lambdas[0] = weight(key, value)?,
            "lambda2" => cfg.refine.lambdas[1] = weight(key, value)?,
            "lambda3" => cfg.refine.lambdas[2] = weight(key, value)?,
            "lambda4" => cfg.refine.lambdas[3] = weight(key, value)?,
            "max_iter" => cfg.refine.max_iter = number(key, value)?,
            "bijective" => cfg.refine.bijective = flag(key, value)?,
            "fix_outliers" => cfg.refine.fix_outliers = flag(key, value)?,
            "coverage" => cfg.refine.coverage = flag(key, value)?,
            "continuity" => cfg.refine.continuity = flag(key, value)?,
            "coupling" => cfg.refine.coupling = flag(key, value)?,
            "coverage_gate" => cfg.refine.coverage_gate = weight(key, value)?,
            "continuity_gate" => cfg.refine.continuity_gate = weight(key, value)?,
            "outlier_threshold" => {
                cfg.refine.outlier_threshold = match value {
                    "auto" => None,
                    v => {
                        let t = weight(key, v)?;
                        if t == 0.0 {
                            return Err(config_error("outlier_threshold: must be positive or auto"));
                        }
                        Some(t)
                    }
                }
            }
            "smooth_sweeps" => cfg.refine.smooth_sweeps = number(key, value)?,
            "refine_orientation" => cfg.refine.refine_orientation = orientation(key, value)?,
            _ => return Err(config_error(format!("unknown key {key:?}; known keys: {}", KEYS.join(", ")))),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Applies `key=value` overrides; paths in them are relative to the
    /// working directory.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        let base = std::mem::take(&mut self.base);
        let result = overrides.iter().try_for_each(|o| {
            let (key, value) = split_assignment(o)?;
            self.set(&key, &value)
        });
        self.base = base;
        result
    }

    pub fn require(&self, key: &'static str, value: &Option<PathBuf>) -> Result<PathBuf> {
        value
            .clone()
            .ok_or_else(|| config_error(format!("missing required key {key:?}")))
    }
}
