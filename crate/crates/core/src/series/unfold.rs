//! The contact-line unfolding `mu_b(H) = b H + w(b H, H^{3-n}[, H ln H])`.

use super::{apply_t_nonresonant, apply_t_resonant, compute_g, GSeries, Series, Series2, Series3, SeriesCoeffs};
use crate::error::{Error, Result};
use crate::model::{near_resonance_warning, Params, ResonanceClass};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum WSeries<T> {
    /// Variables `(xi, rho)`.
    NonResonant(Series2<T>),
    /// Variables `(xi, rho, sigma)`; `3 - n = 1/m`.
    Resonant { m: u32, w: Series3<T> },
}

impl<T: Scalar> WSeries<T> {
    pub fn is_zero(&self) -> bool {
        match self {
            WSeries::NonResonant(w) => w.is_zero(),
            WSeries::Resonant { w, .. } => w.is_zero(),
        }
    }

    /// Embed into three variables with a silent `sigma` in the non-resonant case.
    pub fn as_series3(&self) -> Series3<T> {
        match self {
            WSeries::Resonant { w, .. } => w.clone(),
            WSeries::NonResonant(w) => {
                let mut s = Series3::zeros(w.deg());
                for ([j, l], c) in w.terms() {
                    s.set([j, l, 0], c.clone());
                }
                s
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.as_series3().max_abs()
    }
}

/// Result of the fixed-point iteration for `w`.
#[derive(Clone, Debug)]
pub struct Unfolding<T> {
    pub w: WSeries<T>,
    pub g: GSeries<T>,
    pub sweeps: usize,
    /// Sweeps in which the normalisation coefficient of `rho^m` had to be
    /// projected away. The inverse never produces it, so this stays zero.
    pub projection_events: usize,
    pub warning: Option<String>,
}

/// `g(rho, xi + w)` in the variables of `w`.
fn lift_g<T: Scalar, const M: usize>(g: &GSeries<T>, w: &Series<T, M>) -> Result<Series<T, M>> {
    let deg = w.deg();
    let rho = Series::<T, M>::var(1, deg);
    let mu = &Series::<T, M>::var(0, deg) + w;
    g.coeffs.with_deg(deg).compose(&[rho, mu])
}

fn step_nonresonant<T: Scalar>(g: &GSeries<T>, sc: &SeriesCoeffs<T>, w: &Series2<T>) -> Result<Series2<T>> {
    let mut f = lift_g(g, w)?;
    let c = f.get([0, 1]) - sc.c_prime.clone();
    f.set([0, 1], c);
    apply_t_nonresonant(&f, sc)
}

fn step_resonant<T: Scalar>(g: &GSeries<T>, sc: &SeriesCoeffs<T>, m: u32, w: &Series3<T>) -> Result<(Series3<T>, bool)> {
    let mt = T::from_i64(m as i64);
    let mut f = lift_g(g, w)?;
    let c = f.get([0, 1, 0]) - sc.c_prime.clone();
    f.set([0, 1, 0], c);
    let mut t = apply_t_resonant(&f.scale(&mt), m)?;
    let key = [0, m as usize, 0];
    let projected = !t.get(key).is_zero();
    if projected {
        t.set(key, T::zero());
    }
    Ok((t, projected))
}

/// Iterate `w = T[g(rho, xi + w) - c' rho]` (scaled by `m` when resonant)
/// until the truncated series is a fixed point. Each sweep settles one more
/// total degree, counting `sigma` as degree `m`.
pub fn solve_w<T: Scalar>(params: &Params, max_deg: usize) -> Result<Unfolding<T>> {
    let g = compute_g::<T>(params, max_deg)?;
    let sc = SeriesCoeffs::<T>::new(params);
    let max_sweeps = (sc.class.m().unwrap_or(0) as usize + 1) * (max_deg + 1) + 3;
    let warning = near_resonance_warning(params.n);
    match sc.class {
        ResonanceClass::NonResonant => {
            let mut w = Series2::<T>::zeros(max_deg);
            for sweep in 1..=max_sweeps {
                let next = step_nonresonant(&g, &sc, &w)?;
                if next == w {
                    return Ok(Unfolding { w: WSeries::NonResonant(w), g, sweeps: sweep, projection_events: 0, warning });
                }
                w = next;
            }
            Err(Error::NoConvergence(max_sweeps))
        }
        ResonanceClass::Resonant { m } => {
            let mut w = Series3::<T>::zeros(max_deg);
            let mut events = 0;
            for sweep in 1..=max_sweeps {
                let (next, projected) = step_resonant(&g, &sc, m, &w)?;
                events += projected as usize;
                if next == w {
                    return Ok(Unfolding { w: WSeries::Resonant { m, w }, g, sweeps: sweep, projection_events: events, warning });
                }
                w = next;
            }
            Err(Error::NoConvergence(max_sweeps))
        }
    }
}

/// `w - T[...]` evaluated at the returned `w`.
pub fn w_fixed_point_residual<T: Scalar>(u: &Unfolding<T>) -> Result<WSeries<T>> {
    let sc = SeriesCoeffs::<T>::new(&u.g.params);
    Ok(match &u.w {
        WSeries::NonResonant(w) => WSeries::NonResonant(w - &step_nonresonant(&u.g, &sc, w)?),
        WSeries::Resonant { m, w } => WSeries::Resonant { m: *m, w: w - &step_resonant(&u.g, &sc, *m, w)?.0 },
    })
}

/// Pointwise evaluation of `mu_b(H)` and its derivatives, in floating point.
#[derive(Clone, Debug)]
pub struct ContactSeries {
    pub params: Params,
    pub class: ResonanceClass,
    pub degree: usize,
    pub unfolding: Unfolding<f64>,
    exponent: f64,
    w: [Series3<f64>; 4],
    wx: [Series3<f64>; 4],
    radius: f64,
}

/// Values of `mu_b(H)`, `d mu_b/dH` and their `b`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuEval {
    pub mu: f64,
    pub dmu: f64,
    pub dmu_db: f64,
    pub ddmu_db: f64,
}

fn with_partials(s: Series3<f64>) -> [Series3<f64>; 4] {
    let (a, b, c) = (s.partial(0), s.partial(1), s.partial(2));
    [s, a, b, c]
}

impl ContactSeries {
    pub fn new(params: &Params, degree: usize) -> Result<Self> {
        Ok(Self::from_unfolding(solve_w::<f64>(params, degree)?))
    }

    pub fn from_unfolding(u: Unfolding<f64>) -> Self {
        let params = u.g.params;
        let sc = SeriesCoeffs::<f64>::new(&params);
        let w3 = u.w.as_series3();
        let radius = w3.empirical_radius();
        let degree = w3.deg();
        ContactSeries {
            params,
            class: sc.class,
            degree,
            exponent: sc.three_minus_n,
            wx: with_partials(w3.partial(0)),
            w: with_partials(w3),
            radius,
            unfolding: u,
        }
    }

    /// Bound on `|xi| + |rho| + |sigma|` inside which evaluation is allowed.
    pub fn window(&self) -> f64 {
        0.1 * self.radius
    }

    /// Exponent `3 - n` of the `rho` variable (exactly `1/m` when resonant).
    pub fn rho_exponent(&self) -> f64 {
        self.exponent
    }

    fn coords(&self, b: f64, h: f64) -> Result<[f64; 3]> {
        if !(h >= 0.0) {
            return Err(Error::Domain(format!("contact-line series needs H >= 0, got {h}")));
        }
        let sigma = match self.class {
            ResonanceClass::Resonant { .. } if h > 0.0 => h * h.ln(),
            _ => 0.0,
        };
        let x = [b * h, h.powf(self.exponent), sigma];
        let size = x.iter().map(|v| v.abs()).sum::<f64>();
        if !(size <= self.window()) {
            return Err(Error::ConvergenceWindow { size, limit: self.window() });
        }
        Ok(x)
    }

    fn chain(&self, s: &[Series3<f64>; 4], x: [f64; 3], b: f64, h: f64) -> (f64, f64) {
        let val = s[0].eval(x);
        if h == 0.0 {
            // derivative only finite when 3 - n > 1
            let d = b * s[1].eval(x) + if self.exponent > 1.0 { 0.0 } else { f64::NAN };
            return (val, d);
        }
        let drho = self.exponent * h.powf(self.exponent - 1.0);
        let dsigma = 1.0 + h.ln();
        (val, b * s[1].eval(x) + drho * s[2].eval(x) + dsigma * s[3].eval(x))
    }

    pub fn eval(&self, b: f64, h: f64) -> Result<MuEval> {
        let x = self.coords(b, h)?;
        let (w, dw) = self.chain(&self.w, x, b, h);
        let (wx, dwx) = self.chain(&self.wx, x, b, h);
        Ok(MuEval {
            mu: b * h + w,
            dmu: b + dw,
            dmu_db: h * (1.0 + wx),
            ddmu_db: 1.0 + wx + h * dwx,
        })
    }

    /// `(mu_b(H), d mu_b / dH)`.
    pub fn eval_mu(&self, b: f64, h: f64) -> Result<(f64, f64)> {
        let e = self.eval(b, h)?;
        Ok((e.mu, e.dmu))
    }

    /// Coefficient of `w` at `xi^j rho^l sigma^p`.
    pub fn w_coeff(&self, e: [usize; 3]) -> f64 {
        self.w[0].get(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num::BigRational;

    fn params(n: f64, k: f64) -> Params {
        Params::new(n, k).unwrap()
    }

    #[test]
    fn nonresonant_low_order_values() {
        for (n, k) in [(1.5, 1.0), (0.7, 1.3), (2.2, 0.9)] {
            let u = solve_w::<f64>(&params(n, k), 8).unwrap();
            let WSeries::NonResonant(w) = &u.w else { panic!("expected non-resonant") };
            let k3 = k * k * k;
            assert_relative_eq!(w.get([0, 1]), -2.0 / (3.0 * k3 * (3.0 - n) * (2.0 - n)), max_relative = 1e-14);
            let a11 = u.g.coeffs.get([1, 1]);
            assert_relative_eq!(w.get([1, 1]), a11 / (3.0 - n), max_relative = 1e-14);
            for j in 0..=8 {
                assert_eq!(w.get([j, 0]), 0.0);
            }
            assert!(u.sweeps <= 10);
        }
    }

    #[test]
    fn fixed_point_exact_rational() {
        for (n, k) in [(1.5, 1.0), (2.0, 1.0), (2.5, 0.7)] {
            let u = solve_w::<BigRational>(&params(n, k), 8).unwrap();
            assert!(w_fixed_point_residual(&u).unwrap().is_zero(), "n={n}");
            assert_eq!(u.projection_events, 0);
        }
    }

    #[test]
    fn resonant_sigma_coefficients() {
        let u = solve_w::<f64>(&params(2.0, 1.0), 8).unwrap();
        let WSeries::Resonant { m: 1, w } = &u.w else { panic!("expected m = 1") };
        assert_relative_eq!(w.get([0, 0, 1]), -2.0 / 3.0, max_relative = 1e-14);

        let u = solve_w::<f64>(&params(2.5, 1.0), 8).unwrap();
        let WSeries::Resonant { m: 2, w } = &u.w else { panic!("expected m = 2") };
        assert_relative_eq!(w.get([0, 1, 0]), 8.0 / 3.0, max_relative = 1e-14);
        assert_eq!(w.get([0, 2, 0]), 0.0);
        assert!(w.get([0, 0, 1]).abs() > 0.0);
    }

    #[test]
    fn leading_correction_for_intermediate_n() {
        // for 2 < n < 3 the rho coefficient of w gives (2/(3(3-n)(n-2)k^3)) H^{3-n}
        let (n, k) = (2.4, 1.2);
        let cs = ContactSeries::new(&params(n, k), 10).unwrap();
        let expect = 2.0 / (3.0 * (3.0 - n) * (n - 2.0) * k.powi(3));
        assert_relative_eq!(cs.w_coeff([0, 1, 0]), expect, max_relative = 1e-13);
    }

    #[test]
    fn mu_vanishes_at_contact_line() {
        let cs = ContactSeries::new(&params(1.5, 1.0), 12).unwrap();
        assert_eq!(cs.eval_mu(0.7, 0.0).unwrap().0, 0.0);
    }

    #[test]
    fn b_derivative_is_height() {
        for n in [1.5, 2.0, 2.5] {
            let cs = ContactSeries::new(&params(n, 1.0), 12).unwrap();
            for b in [-0.5, 1.0] {
                let e = cs.eval(b, 1e-6).unwrap();
                assert!((e.dmu_db / 1e-6 - 1.0).abs() < 1e-3, "n={n} b={b}");
                let db = 1e-4;
                let fd = (cs.eval_mu(b + db, 1e-6).unwrap().0 - cs.eval_mu(b - db, 1e-6).unwrap().0) / (2.0 * db);
                assert_relative_eq!(fd, e.dmu_db, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn chain_rule_matches_finite_difference() {
        for n in [1.5, 2.0, 2.5] {
            let cs = ContactSeries::new(&params(n, 1.0), 12).unwrap();
            let (b, h) = (0.4, 2e-4);
            let d = 1e-9;
            let fd = (cs.eval_mu(b, h + d).unwrap().0 - cs.eval_mu(b, h - d).unwrap().0) / (2.0 * d);
            let e = cs.eval(b, h).unwrap();
            assert_relative_eq!(fd, e.dmu, max_relative = 1e-6);
            let fdb = (cs.eval(b, h + d).unwrap().dmu_db - cs.eval(b, h - d).unwrap().dmu_db) / (2.0 * d);
            assert_relative_eq!(fdb, e.ddmu_db, max_relative = 1e-6);
        }
    }

    #[test]
    fn zero_slope_and_zero_w_gives_zero() {
        let mut cs = ContactSeries::new(&params(1.5, 1.0), 6).unwrap();
        let zero = Series3::<f64>::zeros(6);
        cs.w = with_partials(zero.clone());
        cs.wx = with_partials(zero);
        for h in [0.0, 1e-5, 1e-3] {
            assert_eq!(cs.eval_mu(0.0, h).unwrap().0, 0.0);
        }
    }

    #[test]
    fn window_enforced() {
        let cs = ContactSeries::new(&params(1.5, 1.0), 12).unwrap();
        assert!(matches!(cs.eval_mu(0.0, 10.0), Err(Error::ConvergenceWindow { .. })));
    }
}
