//! Flat run configuration: defaults, `--config` files and flag overrides.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use twfilm::matching::{BEstimator, MatchConfig};
use twfilm::shoot::FarField;
use twfilm::{bvp::BvpConfig, ShootConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Every knob of every command, keyed as in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<String>,
    pub n: f64,
    pub k: f64,
    pub lambda: f64,
    pub v: f64,
    pub h0: f64,
    pub hmax: f64,
    pub rtol: f64,
    pub atol: f64,
    pub conv_tol: f64,
    pub tol_b: f64,
    pub degree: usize,
    pub far_field: FarField,
    pub estimator: BEstimator,
    pub fit_tol: f64,
    pub remainder: bool,
    pub eps: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    pub check_residual: bool,
    pub only: Option<String>,
    pub fault: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ShootConfig::default();
        let m = MatchConfig::default();
        let b = BvpConfig::default();
        RunConfig {
            command: None,
            n: 2.0,
            k: 1.0,
            lambda: 1.0,
            v: 1.0 / 3.0,
            h0: s.h0,
            hmax: s.h_max,
            rtol: s.rtol,
            atol: s.atol,
            conv_tol: s.conv_tol,
            tol_b: s.tol_b,
            degree: s.degree,
            far_field: s.far_field,
            estimator: m.estimator,
            fit_tol: m.fit_tol,
            remainder: m.remainder,
            eps: b.eps,
            grid: b.grid_size,
            tol: b.tol,
            max_iter: b.max_iter,
            k_min: 0.5,
            k_max: 2.0,
            points: 16,
            check_residual: false,
            only: None,
            fault: false,
            format: Format::Csv,
            out: None,
            summary: None,
            plot_out: None,
        }
    }
}

/// A problem with the inputs; maps to exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl RunConfig {
    /// Parse a config file: JSON object or flat `key = value` lines.
    pub fn from_file(path: &Path) -> Result<Self, Invalid> {
        let text = std::fs::read_to_string(path).map_err(|e| Invalid(format!("--config {}: {e}", path.display())))?;
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(&text).map_err(|e| Invalid(format!("--config {}: {e}", path.display())))?
        } else {
            Value::Object(parse_flat(&text).map_err(|e| Invalid(format!("--config {}: {e}", path.display())))?)
        };
        serde_json::from_value(value).map_err(|e| Invalid(format!("--config {}: {e}", path.display())))
    }

    pub fn shoot(&self) -> ShootConfig {
        ShootConfig {
            h0: self.h0,
            h_max: self.hmax,
            rtol: self.rtol,
            atol: self.atol,
            conv_tol: self.conv_tol,
            tol_b: self.tol_b,
            degree: self.degree,
            far_field: self.far_field,
            ..Default::default()
        }
    }

    pub fn matching(&self) -> MatchConfig {
        MatchConfig { estimator: self.estimator, fit_tol: self.fit_tol, remainder: self.remainder }
    }

    pub fn bvp(&self) -> BvpConfig {
        BvpConfig { eps: self.eps, grid_size: self.grid, tol: self.tol, max_iter: self.max_iter }
    }

    /// Range checks on the numeric knobs; model parameters are checked by the library.
    pub fn check(&self) -> Result<(), Invalid> {
        let bad = |flag: &str, why: &str| Err(Invalid(format!("--{flag}: {why}")));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.h0) || self.h0 >= 1.0 {
            return bad("h0", "need 0 < h0 < 1");
        }
        if !pos(self.hmax) || self.hmax < 1e3 {
            return bad("hmax", "need hmax >= 1e3");
        }
        for (flag, x) in [("rtol", self.rtol), ("atol", self.atol), ("conv-tol", self.conv_tol), ("tol-b", self.tol_b), ("fit-tol", self.fit_tol), ("tol", self.tol)] {
            if !pos(x) {
                return bad(flag, "must be positive");
            }
        }
        if !(2..=40).contains(&self.degree) {
            return bad("degree", "need 2 <= degree <= 40");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps", "need 0 < eps < 1");
        }
        if self.grid < 16 {
            return bad("grid", "need at least 16 nodes");
        }
        if self.max_iter == 0 {
            return bad("max-iter", "must be positive");
        }
        if !(pos(self.k_min) && self.k_max > self.k_min && self.k_max.is_finite()) {
            return bad("k-max", "need 0 < k-min < k-max");
        }
        if self.points < 5 {
            return bad("points", "need at least 5 points");
        }
        let outs: Vec<&PathBuf> = [&self.out, &self.summary, &self.plot_out].into_iter().flatten().collect();
        for (i, a) in outs.iter().enumerate() {
            if outs[..i].contains(a) {
                return bad("out", &format!("{} is named twice", a.display()));
            }
        }
        Ok(())
    }
}

fn parse_flat(text: &str) -> Result<Map<String, Value>, String> {
    let mut map = Map::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = if let Ok(b) = raw.parse::<bool>() {
            Value::Bool(b)
        } else if let Ok(i) = raw.parse::<u64>() {
            Value::from(i)
        } else if let Ok(x) = raw.parse::<f64>() {
            Value::from(x)
        } else {
            Value::String(raw.trim_matches('"').to_string())
        };
        if map.insert(key.to_string(), value).is_some() {
            return Err(format!("line {}: duplicate key {key}", no + 1));
        }
    }
    Ok(map)
}
