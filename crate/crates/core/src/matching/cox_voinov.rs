//! The Cox-Voinov separatrix of the far-field equation
//! `psi'' + (2/3) H^{-2} psi^{-1/2} = 0`.
//!
//! With `Phi = psi^{3/2}` and `Y = dPhi/d ln H` the equation is autonomous,
//! `dY/dPhi = (Y - 1 + Y^2/(3 Phi)) / Y`, and the solutions with
//! `psi' -> 0` form the single orbit `Y(Phi) = 1 - 1/(3 Phi) + ...`.
//! Integrating `d ln H = dPhi / Y` along it gives the clock
//! `T(Phi) = Phi + ln(Phi)/3 + o(1)`, normalised so that the selected
//! far-field solution satisfies `T(Phi(H)) = ln H`.

use crate::error::{Error, Result};
use crate::ode::{integrate, Options, Solution};
use std::sync::OnceLock;

/// Above this value the asymptotic expansion is used directly.
const PHI_TOP: f64 = 1.0e3;
const PHI_MIN: f64 = 1.0e-3;

fn y_asymptotic(phi: f64) -> f64 {
    let u = 1.0 / phi;
    1.0 + u * (-1.0 / 3.0 + u * (5.0 / 9.0 + u * (-44.0 / 27.0 + u * 539.0 / 81.0)))
}

/// `int_phi^inf (1/Y - 1 - 1/(3 s)) ds` from the expansion of `1/Y`.
fn tail_asymptotic(phi: f64) -> f64 {
    let u = 1.0 / phi;
    u * (-4.0 / 9.0 + u * (35.0 / 54.0 - u * 440.0 / 243.0))
}

#[derive(Debug)]
pub struct CoxVoinov {
    /// States `[Y, I]` against decreasing `Phi`, where
    /// `I(Phi) = int_Phi^PHI_TOP (1/Y - 1 - 1/(3 s)) ds`.
    sol: Solution<2>,
    phi_min: f64,
}

impl CoxVoinov {
    fn build() -> Result<Self> {
        let rhs = |phi: f64, s: &[f64; 2]| {
            let y = s[0];
            if !(y > 0.0) {
                return Err(Error::Domain(format!("separatrix slope {y} at Phi = {phi}")));
            }
            let dy = (y - 1.0 + y * y / (3.0 * phi)) / y;
            Ok([dy, -(1.0 / y - 1.0 - 1.0 / (3.0 * phi))])
        };
        let opts = Options::tol(1e-13, 1e-15);
        let sol = integrate(rhs, PHI_TOP, [y_asymptotic(PHI_TOP), 0.0], PHI_MIN, &opts, None)?;
        Ok(CoxVoinov { phi_min: *sol.t.last().unwrap(), sol })
    }

    /// Process-wide table, built on first use.
    pub fn shared() -> &'static CoxVoinov {
        static CELL: OnceLock<CoxVoinov> = OnceLock::new();
        CELL.get_or_init(|| CoxVoinov::build().expect("separatrix integration"))
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (self.phi_min, f64::INFINITY)
    }

    fn state(&self, phi: f64) -> Result<[f64; 2]> {
        if phi >= PHI_TOP {
            return Ok([y_asymptotic(phi), 0.0]);
        }
        self.sol
            .eval(phi)
            .ok_or_else(|| Error::Domain(format!("Phi = {phi} below separatrix table ({})", self.phi_min)))
    }

    /// `Y = dPhi/d ln H` on the separatrix.
    pub fn y(&self, phi: f64) -> Result<f64> {
        Ok(self.state(phi)?[0])
    }

    /// Logarithmic clock `T(Phi)`.
    pub fn time(&self, phi: f64) -> Result<f64> {
        let [_, i] = self.state(phi)?;
        let tail = if phi >= PHI_TOP { tail_asymptotic(phi) } else { tail_asymptotic(PHI_TOP) + i };
        Ok(phi + phi.ln() / 3.0 - tail)
    }

    /// `H dpsi/dH` on the separatrix as a function of `psi`.
    pub fn chi(&self, psi: f64) -> Result<f64> {
        let phi = psi.powf(1.5);
        Ok(2.0 / 3.0 * self.y(phi)? / psi.sqrt())
    }

    /// `Phi` with `T(Phi) = t`.
    pub fn phi_at_time(&self, t: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.phi_min, t.abs().max(1.0) + 10.0);
        if self.time(lo)? > t {
            return Err(Error::Domain(format!("ln H = {t} lies before the separatrix table")));
        }
        while self.time(hi)? < t {
            hi *= 2.0;
        }
        let mut phi = (t - t.max(1.0).ln() / 3.0).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.time(phi)? - t;
            if f > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let step = f * self.y(phi)?;
            let mut next = phi - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - phi).abs() <= 1e-15 * phi.max(1.0) {
                return Ok(next);
            }
            phi = next;
        }
        Ok(phi)
    }

    /// The selected far-field solution `psi_CV(H)` for `ln H = ln_h`.
    pub fn psi(&self, ln_h: f64) -> Result<f64> {
        Ok(self.phi_at_time(ln_h)?.powf(2.0 / 3.0))
    }
}
