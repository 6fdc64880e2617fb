//! Physical parameters, the normalising scalings and the mobility law.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default tolerance for snapping `n` onto a resonant value `3 - 1/m`.
pub const RES_TOL: f64 = 1e-12;
/// Distance from a resonant value below which series output carries a warning.
pub const NEAR_RES_WARN: f64 = 1e-3;

/// Mobility exponent, contact angle, slip length and wave speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: f64,
    pub k: f64,
    pub lambda: f64,
    pub v: f64,
    pub normalized: bool,
}

/// Factors that map normalised quantities back to physical ones:
/// `H_phys = h_scale * H`, `x_phys = x_scale * x`, `k_phys = angle_scale * k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub h_scale: f64,
    pub x_scale: f64,
    pub angle_scale: f64,
}

impl ScaleRecord {
    pub fn identity() -> Self {
        ScaleRecord { h_scale: 1.0, x_scale: 1.0, angle_scale: 1.0 }
    }

    /// Slope squared picks up the square of the angle scale.
    pub fn psi_scale(&self) -> f64 {
        self.angle_scale * self.angle_scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum ResonanceClass {
    NonResonant,
    Resonant { m: u32 },
}

impl ResonanceClass {
    pub fn m(&self) -> Option<u32> {
        match self {
            ResonanceClass::Resonant { m } => Some(*m),
            ResonanceClass::NonResonant => None,
        }
    }
}

fn is_normalized(lambda: f64, v: f64) -> bool {
    lambda == 1.0 && (3.0 * v - 1.0).abs() <= 4.0 * f64::EPSILON
}

pub fn validate_params(n: f64, k: f64, lambda: f64, v: f64) -> Result<Params> {
    let range = |param, value, bound| Err(Error::Range { param, value, bound });
    if !(n > 0.0 && n < 3.0) {
        return range("n", n, "0 < n < 3");
    }
    if !(k > 0.0 && k.is_finite()) {
        return range("k", k, "k > 0");
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return range("lambda", lambda, "lambda > 0");
    }
    if !(v > 0.0 && v.is_finite()) {
        return range("V", v, "V > 0");
    }
    Ok(Params { n, k, lambda, v, normalized: is_normalized(lambda, v) })
}

impl Params {
    /// Normalised parameters (`lambda = 1`, `V = 1/3`).
    pub fn new(n: f64, k: f64) -> Result<Self> {
        validate_params(n, k, 1.0, 1.0 / 3.0)
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        validate_params(self.n, k, self.lambda, self.v)
    }

    /// `lambda^(3-n)`, the slip prefactor of the mobility.
    pub fn slip(&self) -> f64 {
        self.lambda.powf(3.0 - self.n)
    }

    /// Right-hand side weight of the second-order slope equation,
    /// `psi'' = -forcing(H) psi^{-1/2}`.
    pub fn forcing(&self, h: f64) -> f64 {
        2.0 * self.v / (h * h + self.slip() * h.powf(self.n - 1.0))
    }
}

/// Map physical parameters with contact angle `k_phys` onto the normalised
/// problem. Physical slopes equal `(3V)^{1/3}` times normalised slopes, so the
/// normalised angle is `(3V)^{-1/3} k_phys`.
pub fn normalize(params: &Params, k_phys: f64) -> Result<(Params, ScaleRecord)> {
    let p = validate_params(params.n, k_phys, params.lambda, params.v)?;
    if p.normalized {
        return Ok((Params { lambda: 1.0, v: 1.0 / 3.0, ..p }, ScaleRecord::identity()));
    }
    let angle_scale = (3.0 * p.v).cbrt();
    let rec = ScaleRecord {
        h_scale: p.lambda,
        x_scale: p.lambda / angle_scale,
        angle_scale,
    };
    let np = validate_params(p.n, k_phys / angle_scale, 1.0, 1.0 / 3.0)?;
    Ok((np, rec))
}

pub fn mobility(h: f64, params: &Params) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("mobility needs h >= 0, got {h}")));
    }
    Ok(h.powi(3) + params.slip() * h.powf(params.n))
}

/// Classify `n` against the resonant values `3 - 1/m`.
pub fn resonance_class(n: f64) -> ResonanceClass {
    resonance_class_tol(n, RES_TOL)
}

pub fn resonance_class_tol(n: f64, res_tol: f64) -> ResonanceClass {
    match nearest_resonance(n) {
        Some((m, d)) if d <= res_tol => ResonanceClass::Resonant { m },
        _ => ResonanceClass::NonResonant,
    }
}

/// Closest `m` with its distance `|n - (3 - 1/m)|`; `None` for `n < 2`.
pub fn nearest_resonance(n: f64) -> Option<(u32, f64)> {
    if n < 2.0 - NEAR_RES_WARN || n >= 3.0 {
        return None;
    }
    // 3 - n = 1/m  =>  m = 1/(3 - n)
    let m = (1.0 / (3.0 - n)).round().max(1.0);
    if m > u32::MAX as f64 {
        return None;
    }
    let d = (n - (3.0 - 1.0 / m)).abs();
    Some((m as u32, d))
}

/// Warning text when `n` sits close to, but not on, a resonant value.
pub fn near_resonance_warning(n: f64) -> Option<String> {
    match nearest_resonance(n) {
        Some((m, d)) if d > RES_TOL && d <= NEAR_RES_WARN => Some(format!(
            "n = {n} lies {d:.2e} from the resonant value 3 - 1/{m}; small divisors amplify rounding"
        )),
        _ => None,
    }
}
