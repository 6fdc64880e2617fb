//! Picard iteration for the truncated problem
//! `psi = S[psi]`, `S[psi](H) = k^2 + int_eps^H int_{H1}^{1/eps} f(H2) psi(H2)^{-1/2} dH2 dH1`
//! on `[eps, 1/eps]`, an independent check on the shooting solver.

use crate::error::{Error, Result};
use crate::matching::Curve;
use crate::model::Params;
use crate::shoot::State;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// `K_eps`, the a-priori upper bound on `S[psi]` for normalised parameters.
pub fn k_eps(params: &Params, eps: f64) -> f64 {
    let (n, k) = (params.n, params.k);
    let c = if n < 2.0 {
        1.0 / (2.0 - n)
    } else if n == 2.0 {
        1.0
    } else {
        1.0 / ((3.0 - n) * (n - 2.0))
    };
    k * k + 3.0 * params.v * 2.0 / (3.0 * k) * (c + 1.0 / eps)
}

/// Upper bound on `d/dH S[psi]` from `psi >= k^2` and
/// `1/(H^2 + H^{n-1}) <= min(H^{-2}, H^{1-n})`.
pub fn ds_dh_bound(params: &Params, h: f64) -> f64 {
    let (n, k) = (params.n, params.k);
    let tail = if h >= 1.0 {
        1.0 / h
    } else if n == 2.0 {
        1.0 - h.ln()
    } else {
        1.0 + (1.0 - h.powf(2.0 - n)) / (2.0 - n)
    };
    2.0 * params.v / k * tail
}

/// Geometric grid on `[eps, 1/eps]` with `size` nodes.
pub fn geometric_grid(eps: f64, size: usize) -> Vec<f64> {
    let (a, b) = (eps.ln(), -eps.ln());
    let mut g: Vec<f64> = (0..size).map(|i| (a + (b - a) * i as f64 / (size - 1) as f64).exp()).collect();
    g[0] = eps;
    g[size - 1] = 1.0 / eps;
    g
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (Golub-Welsch).
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let jac = DMatrix::from_fn(order, order, |i, j| {
        if i.abs_diff(j) == 1 {
            let m = i.max(j) as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut out: Vec<(f64, f64)> =
        (0..order).map(|i| (0.5 * (eig.eigenvalues[i] + 1.0), eig.eigenvectors[(0, i)].powi(2))).collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Interval moments of the forcing against the linear hats, used to apply
/// `S` exactly for piecewise-linear `psi^{-1/2}`. All are nonnegative, so
/// `S` stays antitone on the grid.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    /// `int f (1 - s)`, `int f s` over interval `i`.
    inner: Vec<(f64, f64)>,
    /// The same moments weighted by `H - H_i`.
    outer: Vec<(f64, f64)>,
}

impl Quadrature {
    pub fn new(params: &Params, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::QuadratureError("grid must be strictly increasing with at least two nodes".into()));
        }
        let gl = gauss_legendre(8);
        let mut inner = Vec::with_capacity(nodes.len() - 1);
        let mut outer = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let d = w[1] - w[0];
            let (mut a, mut b, mut c, mut e) = (0.0, 0.0, 0.0, 0.0);
            for &(s, wt) in &gl {
                let f = params.forcing(w[0] + s * d) * wt * d;
                a += f * (1.0 - s);
                b += f * s;
                c += f * (1.0 - s) * s * d;
                e += f * s * s * d;
            }
            inner.push((a, b));
            outer.push((c, e));
        }
        Ok(Quadrature { nodes, inner, outer })
    }

    /// `S[psi]` on the nodes, together with `d/dH S[psi]`.
    pub fn apply(&self, psi: &[f64], k: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.nodes.len();
        if psi.len() != n {
            return Err(Error::QuadratureError(format!("{} values for {n} nodes", psi.len())));
        }
        let mut u = Vec::with_capacity(n);
        for (i, &p) in psi.iter().enumerate() {
            if !(p > 0.0) {
                return Err(Error::PsiNonpositive(self.nodes[i]));
            }
            u.push(1.0 / p.sqrt());
        }
        let mut tail = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let (a, b) = self.inner[i];
            tail[i] = tail[i + 1] + a * u[i] + b * u[i + 1];
        }
        let mut s = vec![k * k; n];
        for i in 0..n - 1 {
            let (c, e) = self.outer[i];
            let d = self.nodes[i + 1] - self.nodes[i];
            s[i + 1] = s[i] + d * tail[i + 1] + c * u[i] + e * u[i + 1];
        }
        Ok((s, tail))
    }
}

/// Values on a grid over `[eps, 1/eps]`.
#[derive(Clone, Debug, Serialize)]
pub struct GridFn {
    pub eps: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `d psi/dH` from the inner integral.
    pub slopes: Vec<f64>,
    /// Sup-distance between the last even and odd iterates.
    pub bracket_gap: f64,
    pub iterations: usize,
    pub params: Params,
}

impl GridFn {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("H,psi\n");
        for (h, p) in self.nodes.iter().zip(&self.values) {
            s.push_str(&format!("{:.16e},{:.16e}\n", h, p));
        }
        s
    }

    /// Linear interpolation in `H`.
    pub fn eval(&self, h: f64) -> Option<f64> {
        let n = self.nodes.len();
        if h < self.nodes[0] || h > self.nodes[n - 1] {
            return None;
        }
        let i = self.nodes.partition_point(|&x| x <= h).clamp(1, n - 1);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let s = (h - x0) / (x1 - x0);
        Some(self.values[i - 1] * (1.0 - s) + self.values[i] * s)
    }
}

impl Curve for GridFn {
    fn state(&self, h: f64) -> Option<State> {
        let psi = self.eval(h)?;
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= h).clamp(1, n - 1);
        let s = (h - self.nodes[i - 1]) / (self.nodes[i] - self.nodes[i - 1]);
        Some(State { h, psi, dpsi: self.slopes[i - 1] * (1.0 - s) + self.slopes[i] * s })
    }
    fn h_range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BvpConfig {
    pub eps: f64,
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BvpConfig {
    fn default() -> Self {
        BvpConfig { eps: 1e-3, grid_size: 8192, tol: 1e-9, max_iter: 500 }
    }
}

/// Slack for round-off in the monotone bracketing checks.
const BRACKET_SLACK: f64 = 1e-12;

/// Per-iterate record kept by `picard_iterates`.
#[derive(Clone, Debug, Serialize)]
pub struct PicardTrace {
    pub iterates: Vec<Vec<f64>>,
    pub k_eps: f64,
}

fn check_config(cfg: &BvpConfig) -> Result<()> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::Range { param: "eps", value: cfg.eps, bound: "(0, 1)" });
    }
    if cfg.grid_size < 64 {
        return Err(Error::Range { param: "grid_size", value: cfg.grid_size as f64, bound: ">= 64" });
    }
    Ok(())
}

/// Iterate `psi <- S[psi]` from `psi = k^2`. Even iterates rise and odd
/// iterates fall towards the fixed point; the midpoint of the last pair is
/// returned. `keep` retains up to that many iterates for inspection.
pub fn picard_solve_traced(params: &Params, cfg: &BvpConfig, keep: usize) -> Result<(GridFn, PicardTrace)> {
    check_config(cfg)?;
    let q = Quadrature::new(params, geometric_grid(cfg.eps, cfg.grid_size))?;
    let k = params.k;
    let mut prev = vec![k * k; cfg.grid_size];
    let mut trace = PicardTrace { iterates: vec![prev.clone()], k_eps: k_eps(params, cfg.eps) };
    // last even and odd iterates, for the bracketing checks
    let mut last: [Option<Vec<f64>>; 2] = [Some(prev.clone()), None];
    for it in 1..=cfg.max_iter {
        let (next, slopes) = q.apply(&prev, k)?;
        let parity = it % 2;
        if let Some(old) = &last[parity] {
            // even iterates nondecreasing, odd nonincreasing
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            if next.iter().zip(old).any(|(a, b)| sign * (a - b) < -BRACKET_SLACK * b.abs()) {
                return Err(Error::BracketViolation(it));
            }
        }
        if let Some(other) = &last[1 - parity] {
            let (lo, hi) = if parity == 0 { (&next, other) } else { (other, &next) };
            if lo.iter().zip(hi).any(|(a, b)| a - b > BRACKET_SLACK * b.abs()) {
                return Err(Error::BracketViolation(it));
            }
        }
        if trace.iterates.len() < keep {
            trace.iterates.push(next.clone());
        }
        let gap = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap <= cfg.tol {
            let values: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| 0.5 * (a + b)).collect();
            let (_, slopes) = q.apply(&values, k)?;
            let g = GridFn { eps: cfg.eps, nodes: q.nodes, values, slopes, bracket_gap: gap, iterations: it, params: *params };
            return Ok((g, trace));
        }
        let _ = slopes;
        last[parity] = Some(next.clone());
        prev = next;
    }
    Err(Error::NoConvergence(cfg.max_iter))
}

pub fn picard_solve(params: &Params, cfg: &BvpConfig) -> Result<GridFn> {
    picard_solve_traced(params, cfg, 0).map(|r| r.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossValidation {
    pub sup_abs: f64,
    pub sup_rel: f64,
    /// Height at which the relative difference peaks.
    pub worst_h: f64,
    pub window: (f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Sup-norm comparison on `[max(eps, 10 H0), min(1/eps, H_max/10)]`.
pub fn cross_validate(bvp: &GridFn, curve: &impl Curve, tol: f64) -> Result<CrossValidation> {
    let (h0, h1) = curve.h_range();
    let lo = bvp.nodes[0].max(10.0 * h0);
    let hi = bvp.nodes.last().unwrap().min(h1 / 10.0);
    if !(hi > lo) {
        return Err(Error::InsufficientOverlap(format!("[{lo:.3e}, {hi:.3e}] is empty")));
    }
    let (mut sup_abs, mut sup_rel, mut worst_h) = (0.0f64, 0.0f64, lo);
    for (&h, &v) in bvp.nodes.iter().zip(&bvp.values) {
        if h < lo || h > hi {
            continue;
        }
        let s = curve.state(h).ok_or_else(|| Error::InsufficientOverlap(format!("H = {h:.3e}")))?;
        let d = (v - s.psi).abs();
        sup_abs = sup_abs.max(d);
        if d / s.psi.abs() > sup_rel {
            sup_rel = d / s.psi.abs();
            worst_h = h;
        }
    }
    Ok(CrossValidation { sup_abs, sup_rel, worst_h, window: (lo, hi), tol, pass: sup_rel <= tol })
}
