//! Truncated multivariate power series and the contact-line expansions built
//! on top of them.

mod inverse;
mod manifold;
mod unfold;

pub use inverse::{apply_t_nonresonant, apply_t_resonant, divisor_floor, forward_nonresonant, forward_resonant, RES_GUARD};
pub use manifold::{compute_g, g_pde_residual, g_residual_relative, p_minus_eval, rhs_c_coeffs, GSeries, SeriesCoeffs};
pub use unfold::{solve_w, w_fixed_point_residual, ContactSeries, Unfolding, WSeries};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::fmt::Write as _;

/// Default truncation degree.
pub const DEFAULT_DEGREE: usize = 12;

/// Power series in `N` variables truncated at total degree `deg`.
///
/// Coefficients live in a dense `(deg+1)^N` table; entries above the total
/// degree bound are kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T, const N: usize> {
    deg: usize,
    coeffs: Vec<T>,
}

pub type Series2<T> = Series<T, 2>;
pub type Series3<T> = Series<T, 3>;

/// All exponent vectors with total degree `<= deg`, graded then lexicographic.
pub fn indices<const N: usize>(deg: usize) -> Vec<[usize; N]> {
    let mut out = Vec::new();
    for total in 0..=deg {
        let mut e = [0usize; N];
        fill(&mut e, 0, total, &mut out);
    }
    out
}

fn fill<const N: usize>(e: &mut [usize; N], pos: usize, left: usize, out: &mut Vec<[usize; N]>) {
    if pos + 1 == N {
        e[pos] = left;
        out.push(*e);
        return;
    }
    for v in (0..=left).rev() {
        e[pos] = v;
        fill(e, pos + 1, left - v, out);
    }
}

fn total<const N: usize>(e: &[usize; N]) -> usize {
    e.iter().sum()
}

impl<T: Scalar, const N: usize> Series<T, N> {
    pub fn zeros(deg: usize) -> Self {
        Series { deg, coeffs: vec![T::zero(); (deg + 1).pow(N as u32)] }
    }

    pub fn constant(c: T, deg: usize) -> Self {
        let mut s = Self::zeros(deg);
        s.set([0; N], c);
        s
    }

    /// The coordinate function `x_i`.
    pub fn var(i: usize, deg: usize) -> Self {
        let mut e = [0; N];
        e[i] = 1;
        Self::monomial(e, T::one(), deg)
    }

    pub fn monomial(e: [usize; N], c: T, deg: usize) -> Self {
        let mut s = Self::zeros(deg);
        s.set(e, c);
        s
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    fn pos(&self, e: &[usize; N]) -> usize {
        let b = self.deg + 1;
        e.iter().rev().fold(0, |acc, &x| acc * b + x)
    }

    /// Coefficient of `x^e`; zero beyond the truncation.
    pub fn get(&self, e: [usize; N]) -> T {
        if total(&e) > self.deg {
            T::zero()
        } else {
            self.coeffs[self.pos(&e)].clone()
        }
    }

    pub fn coeff(&self, e: [usize; N]) -> &T {
        assert!(total(&e) <= self.deg, "index {e:?} beyond degree {}", self.deg);
        &self.coeffs[self.pos(&e)]
    }

    /// Set a coefficient. Monomials above the truncation are dropped.
    pub fn set(&mut self, e: [usize; N], c: T) {
        if total(&e) <= self.deg {
            let p = self.pos(&e);
            self.coeffs[p] = c;
        }
    }

    /// Nonzero terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = ([usize; N], &T)> + '_ {
        indices::<N>(self.deg)
            .into_iter()
            .map(move |e| (e, &self.coeffs[self.pos(&e)]))
            .filter(|(_, c)| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Series<U, N> {
        Series { deg: self.deg, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Series<f64, N> {
        self.map(|c| c.to_f64())
    }

    pub fn abs(&self) -> Self {
        self.map(|c| c.abs())
    }

    /// Re-truncate (or pad) to a new degree bound.
    pub fn with_deg(&self, deg: usize) -> Self {
        let mut s = Self::zeros(deg);
        for (e, c) in self.terms() {
            s.set(e, c.clone());
        }
        s
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.deg != other.deg {
            return Err(Error::DegreeMismatch(self.deg, other.deg));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a.clone() + b.clone()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a.clone() - b.clone()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_trunc(other))
    }

    fn zip(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Series {
            deg: self.deg,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    /// Product truncated at the smaller of the two degree bounds.
    pub fn mul_trunc(&self, other: &Self) -> Self {
        let deg = self.deg.min(other.deg);
        let mut out = Self::zeros(deg);
        let a: Vec<_> = self.terms().filter(|(e, _)| total(e) <= deg).collect();
        let b: Vec<_> = other.terms().filter(|(e, _)| total(e) <= deg).collect();
        for (ea, ca) in &a {
            let ta = total(ea);
            for (eb, cb) in &b {
                if ta + total(eb) > deg {
                    // graded order: every later term is at least as heavy
                    break;
                }
                let mut e = [0; N];
                for i in 0..N {
                    e[i] = ea[i] + eb[i];
                }
                let p = out.pos(&e);
                out.coeffs[p] = out.coeffs[p].clone() + (*ca).clone() * (*cb).clone();
            }
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zeros(self.deg);
        for (e, c) in self.terms() {
            if e[i] > 0 {
                let mut f = e;
                f[i] -= 1;
                out.set(f, c.clone() * T::from_i64(e[i] as i64));
            }
        }
        out
    }

    /// Euler-type operator `x_i d/dx_i`, i.e. coefficient times exponent.
    pub fn euler(&self, i: usize) -> Self {
        let mut out = Self::zeros(self.deg);
        for (e, c) in self.terms() {
            out.set(e, c.clone() * T::from_i64(e[i] as i64));
        }
        out
    }

    /// Multiply by the monomial `x^e` (truncating).
    pub fn shift(&self, e: [usize; N]) -> Self {
        let mut out = Self::zeros(self.deg);
        for (f, c) in self.terms() {
            let mut g = f;
            for i in 0..N {
                g[i] += e[i];
            }
            out.set(g, c.clone());
        }
        out
    }

    /// Substitute series for each variable: `self(subs[0], ..., subs[N-1])`.
    /// Every substituted series must vanish at the origin unless `self` is a
    /// polynomial of degree within the truncation; the result is exact
    /// through the target degree either way.
    pub fn compose<const M: usize>(&self, subs: &[Series<T, M>; N]) -> Result<Series<T, M>> {
        let deg = subs[0].deg;
        for s in subs.iter() {
            if s.deg != deg {
                return Err(Error::DegreeMismatch(deg, s.deg));
            }
        }
        let max_pow = self.deg;
        let mut pows: Vec<Vec<Series<T, M>>> = Vec::with_capacity(N);
        for s in subs.iter() {
            let mut v = vec![Series::<T, M>::constant(T::one(), deg)];
            for p in 1..=max_pow {
                let next = v[p - 1].mul_trunc(s);
                v.push(next);
            }
            pows.push(v);
        }
        let mut out = Series::<T, M>::zeros(deg);
        for (e, c) in self.terms() {
            let mut term = Series::<T, M>::constant(c.clone(), deg);
            for i in 0..N {
                if e[i] > 0 {
                    term = term.mul_trunc(&pows[i][e[i]]);
                }
            }
            out = out.zip(&term, |a, b| a.clone() + b.clone());
        }
        Ok(out)
    }

    /// Weighted analytic norm `sum eps^(w . e) |c_e|`.
    pub fn eps_norm_weighted(&self, eps: f64, weights: [usize; N]) -> f64 {
        self.terms()
            .map(|(e, c)| {
                let w: usize = e.iter().zip(weights.iter()).map(|(a, b)| a * b).sum();
                eps.powi(w as i32) * c.abs().to_f64()
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Convergence radius estimate from the root test on the upper half of
    /// the retained degrees: `min_d M_d^{-1/d}`, `M_d` the largest
    /// coefficient modulus of total degree `d`.
    pub fn empirical_radius(&self) -> f64 {
        let mut m = vec![0.0f64; self.deg + 1];
        for (e, c) in self.terms() {
            let d = total(&e);
            m[d] = m[d].max(c.abs().to_f64());
        }
        let lo = (self.deg / 2).max(1);
        (lo..=self.deg)
            .filter(|&d| m[d] > 0.0)
            .map(|d| m[d].powf(-1.0 / d as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Coefficient table as CSV, one row per nonzero coefficient.
    pub fn to_csv(&self, names: [&str; N]) -> String {
        let mut s = String::new();
        for name in names {
            let _ = write!(s, "{name},");
        }
        s.push_str("value\n");
        for (e, c) in self.terms() {
            for x in e {
                let _ = write!(s, "{x},");
            }
            let _ = writeln!(s, "{:.16e}", c.to_f64());
        }
        s
    }
}

impl<const N: usize> Series<f64, N> {
    /// Evaluate at a point by summing monomials.
    pub fn eval(&self, x: [f64; N]) -> f64 {
        let mut pw = vec![vec![1.0; self.deg + 1]; N];
        for i in 0..N {
            for p in 1..=self.deg {
                pw[i][p] = pw[i][p - 1] * x[i];
            }
        }
        self.terms()
            .map(|(e, c)| (0..N).fold(*c, |acc, i| acc * pw[i][e[i]]))
            .sum()
    }
}

impl<T: Scalar, const N: usize> std::ops::Add for &Series<T, N> {
    type Output = Series<T, N>;
    fn add(self, rhs: Self) -> Series<T, N> {
        let deg = self.deg.min(rhs.deg);
        let (a, b) = (self.with_deg(deg), rhs.with_deg(deg));
        a.zip(&b, |x, y| x.clone() + y.clone())
    }
}

impl<T: Scalar, const N: usize> std::ops::Sub for &Series<T, N> {
    type Output = Series<T, N>;
    fn sub(self, rhs: Self) -> Series<T, N> {
        let deg = self.deg.min(rhs.deg);
        let (a, b) = (self.with_deg(deg), rhs.with_deg(deg));
        a.zip(&b, |x, y| x.clone() - y.clone())
    }
}

impl<T: Scalar, const N: usize> std::ops::Mul for &Series<T, N> {
    type Output = Series<T, N>;
    fn mul(self, rhs: Self) -> Series<T, N> {
        self.mul_trunc(rhs)
    }
}

impl<T: Scalar, const N: usize> std::ops::Neg for &Series<T, N> {
    type Output = Series<T, N>;
    fn neg(self) -> Series<T, N> {
        self.map(|c| -c.clone())
    }
}
