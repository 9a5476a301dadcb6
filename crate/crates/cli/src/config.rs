//! Run configuration: JSON file merged with command-line flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use confgauss::moebius::MoebiusMap;
use confgauss::surfaces::{SurfaceKind, SurfaceSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Verify,
    Energy,
    Duality,
    Invariance,
    NeckScan,
    Sweep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report path; standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    #[serde(default = "default_surface")]
    pub surface: SurfaceSpec,
    #[serde(default = "default_level")]
    pub level: usize,
    /// Highest jet order any check may request; checks needing more are skipped.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub moebius: Option<MoebiusMap>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    /// Sample size of the pointwise suites.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Side lengths for `neck-scan`.
    #[serde(default = "default_sides")]
    pub sides: Vec<f64>,
    /// Overrides keyed by suite name or by full residual name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_surface() -> SurfaceSpec {
    SurfaceSpec::torus(2.0, 1.0)
}

fn default_level() -> usize {
    2
}

fn default_order() -> usize {
    6
}

fn default_points() -> usize {
    100
}

fn default_sides() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(2..=confgauss::jet::MAX_ORDER).contains(&self.order) {
            return Err(CliError::Usage(format!("order must lie in 2..={}", confgauss::jet::MAX_ORDER)));
        }
        if self.level > 6 {
            return Err(CliError::Usage("level must be at most 6".into()));
        }
        if self.points == 0 {
            return Err(CliError::Usage("points must be positive".into()));
        }
        if self.command == CommandName::NeckScan && (self.sides.len() < 2 || self.sides.iter().any(|l| !(*l > 0.0))) {
            return Err(CliError::Usage("neck-scan needs at least two positive side lengths".into()));
        }
        for (k, v) in &self.tolerances {
            if !crate::report::is_tolerance_key(k) {
                return Err(CliError::Usage(format!("unknown tolerance key '{k}'")));
            }
            if !(*v >= 0.0) {
                return Err(CliError::Usage(format!("tolerance '{k}' must be a non-negative number")));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn num(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("'{s}' is not a number")))
}

fn nums(s: Option<&str>, n: usize, defaults: &[f64]) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = match s {
        None | Some("") => defaults.to_vec(),
        Some(s) => s.split(',').map(num).collect::<Result<_, _>>()?,
    };
    if v.len() != n {
        return Err(CliError::Usage(format!("expected {n} parameters, got {}", v.len())));
    }
    Ok(v)
}

/// Parse `--surface`: either SurfaceSpec JSON or `kind[:params][:flipped]`
/// with kinds `sphere`, `torus`, `perturbed-sphere`, `perturbed-torus`,
/// `r2xs2`, `rxs3`.
pub fn parse_surface(s: &str) -> Result<SurfaceSpec, CliError> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| CliError::Usage(format!("surface JSON: {e}")));
    }
    let mut parts: Vec<&str> = s.split(':').collect();
    let flipped = parts.last() == Some(&"flipped");
    if flipped {
        parts.pop();
    }
    if parts.is_empty() || parts.len() > 2 {
        return Err(CliError::Usage(format!("cannot parse surface '{s}'")));
    }
    let p = parts.get(1).copied();
    let kind = match parts[0] {
        "sphere" => SurfaceKind::RoundSphere { radius: nums(p, 1, &[1.0])?[0], center: [0.0; 5] },
        "torus" => {
            let v = nums(p, 2, &[2.0, 1.0])?;
            SurfaceKind::TorusOfRevolution { major: v[0], minor: v[1] }
        }
        "perturbed-sphere" => {
            let v = nums(p, 2, &[1.0, 0.2])?;
            SurfaceKind::PerturbedSphere { radius: v[0], amplitude: v[1] }
        }
        "perturbed-torus" => {
            let v = nums(p, 3, &[2.0, 1.0, 0.1])?;
            SurfaceKind::PerturbedTorus { major: v[0], minor: v[1], amplitude: v[2] }
        }
        "r2xs2" => SurfaceKind::PatchR2xS2 { side: nums(p, 1, &[1.0])?[0] },
        "rxs3" => SurfaceKind::PatchRxS3 { length: nums(p, 1, &[1.0])?[0] },
        other => return Err(CliError::Usage(format!("unknown surface kind '{other}'"))),
    };
    let spec = SurfaceSpec::new(kind);
    Ok(if flipped { spec.flipped() } else { spec })
}

/// Values given on the command line; each present one overrides the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<CommandName>,
    pub surface: Option<String>,
    pub level: Option<usize>,
    pub order: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub points: Option<usize>,
    pub moebius: Option<String>,
    pub tolerances: Vec<String>,
}

/// Merge a JSON config file (may be absent) with flag overrides, then
/// deserialize with unknown keys rejected.
pub fn resolve(file: Option<&str>, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut obj = match file {
        Some(text) => match serde_json::from_str::<Value>(text).map_err(|e| CliError::Usage(format!("config: {e}")))? {
            Value::Object(m) => m,
            _ => return Err(CliError::Usage("config must be a JSON object".into())),
        },
        None => Map::new(),
    };
    let mut set = |k: &str, v: Value| {
        obj.insert(k.to_string(), v);
    };
    if let Some(c) = o.command {
        set("command", serde_json::to_value(c).unwrap());
    }
    if let Some(s) = &o.surface {
        set("surface", serde_json::to_value(parse_surface(s)?).unwrap());
    }
    if let Some(l) = o.level {
        set("level", l.into());
    }
    if let Some(l) = o.order {
        set("order", l.into());
    }
    if let Some(s) = o.seed {
        set("seed", s.into());
    }
    if let Some(p) = o.points {
        set("points", p.into());
    }
    if let Some(m) = &o.moebius {
        let v: Value = serde_json::from_str(m).map_err(|e| CliError::Usage(format!("moebius JSON: {e}")))?;
        set("moebius", v);
    }
    if o.out.is_some() || o.format.is_some() {
        let mut out = match obj.remove("output") {
            Some(Value::Object(m)) => m,
            Some(_) => return Err(CliError::Usage("output must be an object".into())),
            None => Map::new(),
        };
        if let Some(p) = &o.out {
            out.insert("path".into(), Value::String(p.to_string_lossy().into_owned()));
        }
        if let Some(f) = o.format {
            out.insert("format".into(), serde_json::to_value(f).unwrap());
        }
        obj.insert("output".into(), Value::Object(out));
    }
    if !o.tolerances.is_empty() {
        let mut tol = match obj.remove("tolerances") {
            Some(Value::Object(m)) => m,
            Some(_) => return Err(CliError::Usage("tolerances must be an object".into())),
            None => Map::new(),
        };
        for t in &o.tolerances {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol expects <suite>=<value>, got '{t}'")))?;
            tol.insert(k.trim().to_string(), num(v)?.into());
        }
        obj.insert("tolerances".into(), Value::Object(tol));
    }
    if !obj.contains_key("command") {
        return Err(CliError::Usage("no command given (positional argument or 'command' in the config)".into()));
    }
    let cfg: RunConfig = serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}
