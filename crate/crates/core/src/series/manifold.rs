//! The unstable-manifold function `g(rho, mu)` of the contact-line fixed point.

use super::Series2;
use crate::error::{Error, Result};
use crate::model::{resonance_class, Params, ResonanceClass};
use crate::scalar::{binom_minus_half, Scalar};

/// Parameter-dependent constants of the expansion in the coefficient field.
#[derive(Clone, Debug)]
pub struct SeriesCoeffs<T> {
    pub n: T,
    pub three_minus_n: T,
    /// `2 / (3 k^3)`
    pub two_over_3k3: T,
    /// `2 / (3 k^3 (3 - n))`, the drift of `mu` along `rho`.
    pub c_prime: T,
    pub class: ResonanceClass,
}

impl<T: Scalar> SeriesCoeffs<T> {
    pub fn new(params: &Params) -> Self {
        let class = resonance_class(params.n);
        // resonant exponents are taken exactly: 3 - n = 1/m
        let three_minus_n = match class {
            ResonanceClass::Resonant { m } => T::from_ratio(1, m as i64),
            ResonanceClass::NonResonant => T::from_i64(3) - T::from_f64(params.n),
        };
        let n = T::from_i64(3) - three_minus_n.clone();
        let k = T::from_f64(params.k);
        let two_over_3k3 = T::from_i64(2) / (T::from_i64(3) * k.clone() * k.clone() * k);
        let c_prime = two_over_3k3.clone() / three_minus_n.clone();
        SeriesCoeffs { n, three_minus_n, two_over_3k3, c_prime, class }
    }
}

/// Coefficients `A_{j,l}` of `g = sum A_{j,l} rho^j mu^l`.
#[derive(Clone, Debug)]
pub struct GSeries<T> {
    /// Variables ordered `(rho, mu)`.
    pub coeffs: Series2<T>,
    pub params: Params,
}

/// Taylor coefficients of `(2/(3k^3)) rho (1 - (1+rho)^{-1} (1+mu)^{-1/2})`.
pub fn rhs_c_coeffs<T: Scalar>(params: &Params, max_deg: usize) -> Series2<T> {
    let sc = SeriesCoeffs::<T>::new(params);
    rhs_with(&sc, max_deg)
}

fn rhs_with<T: Scalar>(sc: &SeriesCoeffs<T>, max_deg: usize) -> Series2<T> {
    let mut c = Series2::zeros(max_deg);
    let binoms: Vec<T> = (0..=max_deg).map(binom_minus_half).collect();
    for j in 1..=max_deg {
        for l in 0..=(max_deg - j) {
            if j == 1 && l == 0 {
                continue;
            }
            let sign = if (j - 1) % 2 == 0 { -T::one() } else { T::one() };
            c.set([j, l], sc.two_over_3k3.clone() * sign * binoms[l].clone());
        }
    }
    c
}

/// Solve the manifold equation degree by degree.
pub fn compute_g<T: Scalar>(params: &Params, max_deg: usize) -> Result<GSeries<T>> {
    if max_deg < 2 {
        return Err(Error::Domain(format!("series degree must be at least 2, got {max_deg}")));
    }
    let sc = SeriesCoeffs::<T>::new(params);
    let c = rhs_with(&sc, max_deg);
    let mut a = Series2::<T>::zeros(max_deg);
    for m in 2..=max_deg {
        for j in 0..=m {
            let l = m - j;
            let mut num = c.get([j, l]);
            if j >= 1 {
                num = num + sc.c_prime.clone() * T::from_i64(l as i64 + 1) * a.get([j - 1, l + 1]);
            }
            // quadratic term: both factors have total degree in [2, m-1]
            for j1 in 0..=j {
                let j2 = j - j1;
                for l1 in 0..=(l + 1) {
                    let l2 = l + 1 - l1;
                    if l2 == 0 || j1 + l1 < 2 || j2 + l2 < 2 || j1 + l1 >= m || j2 + l2 >= m {
                        continue;
                    }
                    let prod = a.get([j1, l1]) * a.get([j2, l2]);
                    if !prod.is_zero() {
                        num = num - T::from_i64(l2 as i64) * prod;
                    }
                }
            }
            let div = sc.three_minus_n.clone() * T::from_i64(j as i64) + T::from_i64(l as i64);
            a.set([j, l], num / div);
        }
    }
    Ok(GSeries { coeffs: a, params: *params })
}

struct ResidualParts<T> {
    residual: Series2<T>,
    scale: Series2<T>,
}

fn residual_parts<T: Scalar>(g: &GSeries<T>) -> ResidualParts<T> {
    let sc = SeriesCoeffs::<T>::new(&g.params);
    let d = g.coeffs.deg();
    let c = rhs_with(&sc, d);
    let eval = |a: &Series2<T>, c: &Series2<T>| -> Series2<T> {
        let radial = &a.euler(0).scale(&sc.three_minus_n) + &a.euler(1);
        let drift = a.partial(1).shift([1, 0]).scale(&sc.c_prime);
        let quad = a * &a.partial(1);
        &(&(&radial - &drift) + &quad) - c
    };
    let residual = eval(&g.coeffs, &c);
    let abs = g.coeffs.abs();
    let scale = {
        let radial = &abs.euler(0).scale(&sc.three_minus_n.abs()) + &abs.euler(1);
        let drift = abs.partial(1).shift([1, 0]).scale(&sc.c_prime.abs());
        let quad = &abs * &abs.partial(1);
        &(&(&radial + &drift) + &quad) + &c.abs()
    };
    ResidualParts { residual, scale }
}

/// Residual of the manifold PDE
/// `((3-n) rho d_rho + mu d_mu - c' rho d_mu) g + g d_mu g - C`.
/// Exact through the truncation degree.
pub fn g_pde_residual<T: Scalar>(g: &GSeries<T>) -> Series2<T> {
    residual_parts(g).residual
}

/// Largest coefficient of the residual relative to the magnitude of the
/// terms that cancel in it.
pub fn g_residual_relative<T: Scalar>(g: &GSeries<T>) -> f64 {
    let parts = residual_parts(g);
    parts
        .residual
        .terms()
        .map(|(e, r)| {
            let s = parts.scale.get(e).to_f64();
            let r = r.abs().to_f64();
            if s > 0.0 { r / s } else { r }
        })
        .fold(0.0, f64::max)
}

impl GSeries<f64> {
    /// Window for `|rho| + |mu|` inside which the truncation is trusted.
    pub fn window(&self) -> f64 {
        0.1 * self.coeffs.empirical_radius()
    }

    pub fn eval(&self, rho: f64, mu: f64) -> f64 {
        self.coeffs.eval([rho, mu])
    }
}

/// Unstable-manifold graph `p = p^-(r, q)` of the contact-line fixed point.
pub fn p_minus_eval(g: &GSeries<f64>, r: f64, q: f64) -> Result<f64> {
    let size = r.powi(3).abs() + (r * q).abs();
    let limit = g.window();
    if !(size <= limit) {
        return Err(Error::ConvergenceWindow { size, limit });
    }
    let sc = SeriesCoeffs::<f64>::new(&g.params);
    // r^{-1} g(r^3, r q): the factor rho in g cancels the division exactly
    let mut sum = 0.0;
    for ([j, l], a) in g.coeffs.terms() {
        sum += a * r.powi((3 * j + l) as i32 - 1) * q.powi(l as i32);
    }
    Ok(sum + q - sc.c_prime * r * r)
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
    fn rhs_low_order() {
        let p = params(1.5, 1.3);
        let c = rhs_c_coeffs::<f64>(&p, 6);
        let k3 = 1.3f64.powi(3);
        assert_relative_eq!(c.get([2, 0]), 2.0 / (3.0 * k3), epsilon = 1e-15);
        assert_relative_eq!(c.get([1, 1]), 1.0 / (3.0 * k3), epsilon = 1e-15);
        assert_eq!(c.get([1, 0]), 0.0);
        assert_eq!(c.get([0, 0]), 0.0);
        assert_eq!(c.get([0, 1]), 0.0);
    }

    #[test]
    fn rhs_matches_closed_form() {
        let p = params(2.0, 0.8);
        let c = rhs_c_coeffs::<f64>(&p, 14);
        let k3 = 0.8f64.powi(3);
        for (rho, mu) in [(0.01f64, 0.02f64), (-0.015, 0.01), (0.02, -0.01)] {
            let exact = 2.0 / (3.0 * k3) * rho * (1.0 - 1.0 / ((1.0 + rho) * (1.0 + mu).sqrt()));
            assert_relative_eq!(c.eval([rho, mu]), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn hand_derived_coefficients() {
        for (n, k) in [(1.5, 1.0), (2.0, 1.0), (2.5, 0.7), (0.4, 2.0)] {
            let g = compute_g::<f64>(&params(n, k), 8).unwrap();
            let k3 = k * k * k;
            let a11 = 1.0 / (3.0 * k3 * (4.0 - n));
            let a20 = 1.0 / (3.0 * k3 * (3.0 - n)) + 1.0 / (9.0 * k3 * k3 * (3.0 - n).powi(2) * (4.0 - n));
            assert_relative_eq!(g.coeffs.get([1, 1]), a11, max_relative = 1e-14);
            assert_relative_eq!(g.coeffs.get([2, 0]), a20, max_relative = 1e-14);
            for l in 0..=8 {
                assert_eq!(g.coeffs.get([0, l]), 0.0);
            }
            assert_eq!(g.coeffs.get([1, 0]), 0.0);
        }
    }

    #[test]
    fn residual_exact_in_rational_mode() {
        for (n, k) in [(1.5, 1.0), (2.0, 1.0), (2.5, 0.7)] {
            let g = compute_g::<BigRational>(&params(n, k), 8).unwrap();
            assert!(g_pde_residual(&g).is_zero(), "n={n}");
        }
    }

    #[test]
    fn residual_small_in_float_mode() {
        let g = compute_g::<f64>(&params(1.5, 1.0), 12).unwrap();
        assert!(g_residual_relative(&g) <= 1e-13);
    }

    #[test]
    fn residual_detects_perturbation() {
        let mut g = compute_g::<f64>(&params(1.5, 1.0), 8).unwrap();
        let a = g.coeffs.get([1, 1]);
        g.coeffs.set([1, 1], a + 1e-3);
        let r = g_pde_residual(&g);
        assert!(r.get([1, 1]).abs() > 1e-4);
    }

    #[test]
    fn residual_of_zero_is_minus_rhs() {
        let p = params(2.2, 1.1);
        let zero = GSeries { coeffs: Series2::<f64>::zeros(6), params: p };
        let r = g_pde_residual(&zero);
        let c = rhs_c_coeffs::<f64>(&p, 6);
        assert_eq!(r, -&c);
    }

    #[test]
    fn residual_pointwise_against_finite_differences() {
        let p = params(1.5, 1.0);
        let g = compute_g::<f64>(&p, 16).unwrap();
        let sc = SeriesCoeffs::<f64>::new(&p);
        let h = 1e-6;
        for (rho, mu) in [(0.01, 0.005), (0.02, -0.01), (0.005, 0.02)] {
            let f = |a: f64, b: f64| g.eval(a, b);
            let dr = (f(rho + h, mu) - f(rho - h, mu)) / (2.0 * h);
            let dm = (f(rho, mu + h) - f(rho, mu - h)) / (2.0 * h);
            let lhs = (3.0 - p.n) * rho * dr + mu * dm - sc.c_prime * rho * dm + f(rho, mu) * dm;
            let rhs = sc.two_over_3k3 * rho * (1.0 - 1.0 / ((1.0 + rho) * (1.0 + mu).sqrt()));
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn manifold_graph_at_origin() {
        let p = params(2.0, 1.0);
        let g = compute_g::<f64>(&p, 12).unwrap();
        assert_eq!(p_minus_eval(&g, 0.0, 0.0).unwrap(), 0.0);
        let h = 1e-4;
        let dq = (p_minus_eval(&g, 0.0, h).unwrap() - p_minus_eval(&g, 0.0, -h).unwrap()) / (2.0 * h);
        assert!((dq - 1.0).abs() < 1e-6);
        let d2r = (p_minus_eval(&g, h, 0.0).unwrap() - 2.0 * p_minus_eval(&g, 0.0, 0.0).unwrap()
            + p_minus_eval(&g, -h, 0.0).unwrap())
            / (h * h);
        assert_relative_eq!(d2r, -4.0 / 3.0, max_relative = 1e-5);
        assert!(matches!(p_minus_eval(&g, 5.0, 0.0), Err(Error::ConvergenceWindow { .. })));
    }

    #[test]
    fn degree_too_small() {
        assert!(compute_g::<f64>(&params(1.5, 1.0), 1).is_err());
    }
}
