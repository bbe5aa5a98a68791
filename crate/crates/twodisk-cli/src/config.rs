//! Configuration files: `key = value` lines or a single JSON object.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::collections::BTreeMap;
use twodisk::potentials::{constant_disk1, lower_bound_source, radial_bump, PiecewiseSource};
use twodisk::TwoDiskConfig;

#[derive(Clone, Debug, PartialEq)]
enum Raw {
    Num(f64),
    List(Vec<f64>),
    Text(String),
}

const KEYS: &[&str] = &[
    "eps",
    "r1",
    "r2",
    "k1",
    "k2",
    "source",
    "source_value",
    "source_x1",
    "source_x2",
    "source_radius",
    "source_mass",
    "eps_list",
    "k1_list",
    "k2_list",
    "r1_list",
    "r2_list",
    "tau_list",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum SourcePreset {
    LowerBound,
    ConstantDisk1 {
        value: f64,
    },
    RadialBump {
        x1: f64,
        x2: f64,
        radius: f64,
        mass: f64,
    },
}

impl SourcePreset {
    pub fn build(&self, cfg: &TwoDiskConfig) -> Result<PiecewiseSource> {
        Ok(match *self {
            SourcePreset::LowerBound => lower_bound_source(cfg),
            SourcePreset::ConstantDisk1 { value } => constant_disk1(cfg, value),
            SourcePreset::RadialBump {
                x1,
                x2,
                radius,
                mass,
            } => radial_bump(cfg, C64::new(x1, x2), radius, mass)?,
        })
    }
}

/// Parsed configuration file; every entry is optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, Raw>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad number {t:?}"))
        })
        .collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let mut values = BTreeMap::new();
        if trimmed.starts_with('{') {
            let obj: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(trimmed).context("config is not a JSON object")?;
            for (k, v) in obj {
                let raw = match v {
                    serde_json::Value::Number(n) => Raw::Num(n.as_f64().unwrap_or(f64::NAN)),
                    serde_json::Value::String(s) => Raw::Text(s),
                    serde_json::Value::Array(a) => Raw::List(
                        a.iter()
                            .map(|x| {
                                x.as_f64()
                                    .ok_or_else(|| anyhow!("non-numeric entry in {k}"))
                            })
                            .collect::<Result<_>>()?,
                    ),
                    other => bail!("unsupported value for {k}: {other}"),
                };
                values.insert(k, raw);
            }
        } else {
            for (no, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
                let (k, v) = (k.trim().to_string(), v.trim());
                let raw = if k.ends_with("_list") {
                    Raw::List(parse_list(v)?)
                } else if let Ok(x) = v.parse::<f64>() {
                    Raw::Num(x)
                } else {
                    Raw::Text(v.trim_matches('"').to_string())
                };
                values.insert(k, raw);
            }
        }
        for k in values.keys() {
            if !KEYS.contains(&k.as_str()) {
                bail!("unknown config key {k:?}");
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Raw::Num(x)) => Ok(Some(*x)),
            Some(_) => bail!("{key} must be a number"),
        }
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Raw::List(v)) => Ok(Some(v.clone())),
            Some(Raw::Num(x)) => Ok(Some(vec![*x])),
            Some(Raw::Text(_)) => bail!("{key} must be a list of numbers"),
        }
    }

    fn text(&self, key: &str) -> Result<Option<&str>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Raw::Text(s)) => Ok(Some(s)),
            Some(_) => bail!("{key} must be a name"),
        }
    }

    /// Single configuration; radii default to 1.
    pub fn two_disk(&self) -> Result<TwoDiskConfig> {
        let need = |k: &str| self.num(k)?.ok_or_else(|| anyhow!("missing key {k}"));
        let cfg = TwoDiskConfig::new(
            need("eps")?,
            self.num("r1")?.unwrap_or(1.0),
            self.num("r2")?.unwrap_or(1.0),
            need("k1")?,
            need("k2")?,
        )?;
        Ok(cfg)
    }

    pub fn source(&self) -> Result<SourcePreset> {
        let name = self.text("source")?.unwrap_or("lower_bound");
        Ok(match name {
            "lower_bound" => SourcePreset::LowerBound,
            "constant_disk1" => SourcePreset::ConstantDisk1 {
                value: self.num("source_value")?.unwrap_or(1.0),
            },
            "radial_bump" => SourcePreset::RadialBump {
                x1: self.num("source_x1")?.unwrap_or(0.0),
                x2: self.num("source_x2")?.unwrap_or(1.6),
                radius: self.num("source_radius")?.unwrap_or(0.5),
                mass: self.num("source_mass")?.unwrap_or(1.0),
            },
            other => bail!("unknown source preset {other:?}"),
        })
    }
}

/// Parameter lists of a sweep. `k1_list`/`k2_list` and `r1_list`/`r2_list` are paired
/// entry by entry; `eps_list` is crossed with every pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub eps_list: Vec<f64>,
    pub k1_list: Vec<f64>,
    pub k2_list: Vec<f64>,
    pub r1_list: Vec<f64>,
    pub r2_list: Vec<f64>,
    pub source: SourcePreset,
}

pub const DEFAULT_EPS: [f64; 6] = [0.32, 0.16, 0.08, 0.04, 0.02, 0.01];

impl SweepSpec {
    pub fn new(eps_list: &[f64], k_list: &[f64]) -> Self {
        SweepSpec {
            eps_list: eps_list.to_vec(),
            k1_list: k_list.to_vec(),
            k2_list: k_list.to_vec(),
            r1_list: vec![1.0],
            r2_list: vec![1.0],
            source: SourcePreset::LowerBound,
        }
    }

    /// Defaults overridden by whatever the file provides.
    pub fn from_file(file: &ConfigFile, defaults: SweepSpec) -> Result<Self> {
        let mut s = defaults;
        if let Some(v) = file.list("eps_list")? {
            s.eps_list = v;
        }
        match (file.list("k1_list")?, file.list("k2_list")?) {
            (Some(a), Some(b)) => (s.k1_list, s.k2_list) = (a, b),
            (Some(a), None) | (None, Some(a)) => (s.k1_list, s.k2_list) = (a.clone(), a),
            (None, None) => {}
        }
        match (file.list("r1_list")?, file.list("r2_list")?) {
            (Some(a), Some(b)) => (s.r1_list, s.r2_list) = (a, b),
            (Some(a), None) | (None, Some(a)) => (s.r1_list, s.r2_list) = (a.clone(), a),
            (None, None) => {}
        }
        if file.values.contains_key("source") {
            s.source = file.source()?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn k_pairs(&self) -> Vec<(f64, f64)> {
        self.k1_list
            .iter()
            .copied()
            .zip(self.k2_list.iter().copied())
            .collect()
    }

    pub fn radii(&self) -> Vec<(f64, f64)> {
        self.r1_list
            .iter()
            .copied()
            .zip(self.r2_list.iter().copied())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() || self.k1_list.is_empty() || self.r1_list.is_empty() {
            bail!("sweep lists must be non-empty");
        }
        if self.k1_list.len() != self.k2_list.len() || self.r1_list.len() != self.r2_list.len() {
            bail!("k1_list/k2_list and r1_list/r2_list must have equal lengths");
        }
        for cfg in self.configs() {
            cfg?;
        }
        Ok(())
    }

    /// Every configuration of the sweep, in spec order.
    pub fn configs(&self) -> Vec<Result<TwoDiskConfig>> {
        let mut out = Vec::new();
        for (r1, r2) in self.radii() {
            for (k1, k2) in self.k_pairs() {
                for &e in &self.eps_list {
                    out.push(TwoDiskConfig::new(e, r1, r2, k1, k2).map_err(Into::into));
                }
            }
        }
        out
    }
}
