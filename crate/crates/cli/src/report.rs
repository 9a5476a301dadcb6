//! Residual registry and report emission.

use std::collections::BTreeMap;

use confgauss::suite::SUITE_TOLERANCES;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Residual name, its suite and default tolerance. Pointwise identities come
/// from the core suite table.
const RESIDUALS: &[(&str, &str, f64)] = &[
    ("integral.gauss_bonnet", "integral", 1e-5),
    ("integral.grad_h", "integral", 1e-5),
    ("integral.scal_bar", "integral", 1e-5),
    ("integral.ep_forms", "integral", 1e-5),
    ("duality_P", "duality", 1e-5),
    ("duality_S", "duality", 1e-5),
    ("el.tangent", "el", 1e-6),
    ("el.ey_nu", "el", 1e-5),
    ("variation.laplace_ratio", "variation", 0.5),
    ("variation.gradient_ratio", "variation", 0.5),
    ("energy.ep_lower_bound", "energy", 1e-8),
    ("energy.sphere_e_gr", "energy", 1e-6),
    ("energy.sphere_e_p", "energy", 1e-8),
    ("energy.sphere_paneitz", "energy", 1e-8),
    ("invariance.e_gr", "invariance", 1e-5),
    ("invariance.e_p", "invariance", 1e-5),
    ("invariance.paneitz", "invariance", 1e-5),
    ("invariance.scal_functional", "invariance", 1e-5),
    ("equivariance.lorentz", "equivariance", 1e-6),
    ("equivariance.fit", "equivariance", 1e-6),
    ("neck.density", "neck", 1e-12),
    ("neck.fit", "neck", 1e-6),
    ("sweep.e_gr", "sweep", 1e-3),
    ("sweep.e_p", "sweep", 1e-3),
    ("sweep.paneitz", "sweep", 1e-3),
    ("sweep.scal_functional", "sweep", 1e-3),
];

fn lookup(name: &str) -> Option<(&'static str, f64)> {
    if let Some(id) = name.strip_prefix("pointwise.") {
        return SUITE_TOLERANCES.iter().find(|(n, _)| *n == id).map(|(_, t)| ("pointwise", *t));
    }
    RESIDUALS.iter().find(|(n, _, _)| *n == name).map(|(_, s, t)| (*s, *t))
}

pub fn is_tolerance_key(k: &str) -> bool {
    k == "pointwise" || RESIDUALS.iter().any(|(n, s, _)| *n == k || *s == k) || lookup(k).is_some()
}

/// Tolerance for a residual: exact override, then suite override, then default.
pub fn tolerance(cfg: &RunConfig, name: &str) -> f64 {
    let (suite, default) = lookup(name).unwrap_or_else(|| panic!("unregistered residual {name}"));
    cfg.tolerances.get(name).or_else(|| cfg.tolerances.get(suite)).copied().unwrap_or(default)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub results: Map<String, Value>,
    pub residuals: BTreeMap<String, ResidualEntry>,
}

impl Report {
    pub fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(v).expect("result serializes"));
    }

    pub fn skip(&mut self, key: &str, reason: impl Into<String>) {
        let skipped = self.results.entry("skipped").or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = skipped {
            m.insert(key.to_string(), Value::String(reason.into()));
        }
    }

    pub fn residual(&mut self, cfg: &RunConfig, name: &str, value: f64) {
        let tolerance = tolerance(cfg, name);
        let pass = value.is_finite() && value <= tolerance;
        self.residuals.insert(name.to_string(), ResidualEntry { value, tolerance, pass });
    }

    pub fn all_pass(&self) -> bool {
        self.residuals.values().all(|r| r.pass)
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(&cfg.canonical_json()).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

pub fn to_json(cfg: &RunConfig, r: &Report) -> Value {
    json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "config-hash": config_hash(cfg),
            "seed": cfg.seed,
            "config": cfg.canonical_json(),
        },
        "results": Value::Object(r.results.clone()),
        "residuals": serde_json::to_value(&r.residuals).expect("residuals serialize"),
    })
}

pub fn emit_json(cfg: &RunConfig, r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(cfg, r)).expect("report serializes");
    s.push('\n');
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// One `(quantity, value)` row per leaf of the JSON report.
pub fn emit_csv(cfg: &RunConfig, r: &Report) -> String {
    let mut rows = Vec::new();
    flatten("", &to_json(cfg, r), &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"]).expect("in-memory write");
    for (k, v) in rows {
        w.write_record([k, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
