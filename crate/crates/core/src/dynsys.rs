//! The autonomous contact-line system in `s = ln H`:
//! `r = H^{(3-n)/3}`, `q = H^{-(3-n)/3} mu`, `p = H^{-(3-n)/3} d mu/ds`
//! with `mu = psi/k^2 - 1`.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, lstsq};
use crate::model::Params;
use crate::shoot::Profile;
use crate::ode::{integrate, Options};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub s: f64,
    pub r: f64,
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn origin(s: f64) -> Self {
        PhasePoint { s, r: 0.0, q: 0.0, p: 0.0 }
    }

    /// Phase point for `psi(H)` and `dpsi/dH(H)`.
    pub fn from_profile(h: f64, psi: f64, dpsi: f64, params: &Params) -> Self {
        let k2 = params.k * params.k;
        let a = (3.0 - params.n) / 3.0;
        let mu = psi / k2 - 1.0;
        PhasePoint { s: h.ln(), r: h.powf(a), q: h.powf(-a) * mu, p: h.powf(params.n / 3.0) * dpsi / k2 }
    }

    /// Inverse of [`PhasePoint::from_profile`]: `(H, psi, dpsi/dH)`.
    pub fn to_profile(&self, params: &Params) -> (f64, f64, f64) {
        let k2 = params.k * params.k;
        let h = self.s.exp();
        let a = (3.0 - params.n) / 3.0;
        (h, k2 * (1.0 + h.powf(a) * self.q), k2 * h.powf(-params.n / 3.0) * self.p)
    }
}

/// Vector field with an optional sign fault in the linear `p` term, used as
/// a negative control by the verification battery.
#[derive(Clone, Copy, Debug)]
pub struct DynSys {
    pub params: Params,
    pub fault: bool,
}

impl DynSys {
    pub fn new(params: Params) -> Self {
        DynSys { params, fault: false }
    }

    pub fn field(&self, r: f64, q: f64, p: f64) -> Result<[f64; 3]> {
        let n = self.params.n;
        let k = self.params.k;
        let arg = 1.0 + r * q;
        if !(arg > 0.0) {
            return Err(Error::SqrtDomain(arg));
        }
        let den = 1.0 + r * r * r;
        if !(den > 0.0) {
            return Err(Error::Domain(format!("1 + r^3 = {den} is not positive")));
        }
        let lin = if self.fault { -n * p / 3.0 } else { n * p / 3.0 };
        Ok([
            (3.0 - n) * r / 3.0,
            -(3.0 - n) * q / 3.0 + p,
            lin - 2.0 / (3.0 * k * k * k) * r * r / den / arg.sqrt(),
        ])
    }
}

pub fn vector_field(pt: &PhasePoint, params: &Params) -> Result<[f64; 3]> {
    DynSys::new(*params).field(pt.r, pt.q, pt.p)
}

/// Linearisation at the fixed point.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub matrix: Matrix3<f64>,
    /// Sorted ascending.
    pub eigenvalues: [f64; 3],
    /// Tangent directions for `(3-n)/3`, `-(3-n)/3` and `n/3`.
    pub eigenvectors: [Vector3<f64>; 3],
}

pub fn jacobian_origin(params: &Params) -> Linearization {
    DynSys::new(*params).linearization()
}

impl DynSys {
    /// Jacobian of the field at the origin by central differences; the
    /// quadratic terms cancel, so the linear part is recovered exactly up
    /// to rounding.
    pub fn linearization(&self) -> Linearization {
        let d = 1e-5;
        let mut matrix = Matrix3::zeros();
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = d;
            let fp = self.field(e[0], e[1], e[2]).expect("field near origin");
            let fm = self.field(-e[0], -e[1], -e[2]).expect("field near origin");
            for i in 0..3 {
                matrix[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
            }
        }
        linearization_of(matrix)
    }
}

fn linearization_of(matrix: Matrix3<f64>) -> Linearization {
    let mut ev: Vec<f64> = matrix
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| vec![matrix[(0, 0)], matrix[(1, 1)], matrix[(2, 2)]]);
    ev.sort_by(f64::total_cmp);
    Linearization {
        matrix,
        eigenvalues: [ev[0], ev[1], ev[2]],
        eigenvectors: [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 1.0, 1.0)],
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<PhasePoint>,
    /// Largest relative deviation of `r` from its exact exponential.
    pub r_drift: f64,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,r,q,p\n");
        for pt in &self.points {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", pt.s, pt.r, pt.q, pt.p));
        }
        s
    }
}

/// Integrate the system from `start` to `s_end` (forward or backward).
pub fn integrate_s(start: PhasePoint, s_end: f64, sys: &DynSys, tol: f64) -> Result<Trajectory> {
    sys.field(start.r, start.q, start.p)?;
    let opts = Options { rtol: tol, atol: tol * 1e-12, ..Default::default() };
    let sol = integrate(|_, y: &[f64; 3]| sys.field(y[0], y[1], y[2]), start.s, [start.r, start.q, start.p], s_end, &opts, None)?;
    let a = (3.0 - sys.params.n) / 3.0;
    let mut drift = 0.0f64;
    let points: Vec<_> = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(&s, y)| {
            let exact = start.r * (a * (s - start.s)).exp();
            if exact > 0.0 {
                drift = drift.max((y[0] - exact).abs() / exact);
            }
            PhasePoint { s, r: y[0], q: y[1], p: y[2] }
        })
        .collect();
    Ok(Trajectory { points, r_drift: drift })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecaySlopes {
    pub slope_q: f64,
    pub slope_p: f64,
    /// Intercepts `exp(c)` of the fits `ln|q| = slope s + c` (resp. `p`).
    pub amp_q: f64,
    pub amp_p: f64,
    /// At `n = 2` the `q` fit is of `ln(|q|/|s|)`.
    pub log_corrected: bool,
}

/// Least-squares decay slopes of `ln|q|` and `ln|p|` in `s` over a window.
pub fn decay_slopes(traj: &Trajectory, window: (f64, f64), n: f64) -> Result<DecaySlopes> {
    let log_corrected = (n - 2.0).abs() < 1e-12;
    let (mut s, mut lq, mut lp) = (Vec::new(), Vec::new(), Vec::new());
    for pt in &traj.points {
        if pt.s < window.0 || pt.s > window.1 {
            continue;
        }
        if pt.q == 0.0 || pt.p == 0.0 || !pt.q.is_normal() || !pt.p.is_normal() {
            return Err(Error::InsufficientDecay(format!("q or p underflows at s = {}", pt.s)));
        }
        let corr = if log_corrected { pt.s.abs().ln() } else { 0.0 };
        s.push(pt.s);
        lq.push(pt.q.abs().ln() - corr);
        lp.push(pt.p.abs().ln() - corr);
    }
    if s.len() < 8 {
        return Err(Error::InsufficientDecay(format!("only {} samples in window", s.len())));
    }
    let fq = linear_fit(&s, &lq)?;
    let fp = linear_fit(&s, &lp)?;
    Ok(DecaySlopes { slope_q: fq.slope, slope_p: fp.slope, amp_q: fq.intercept.exp(), amp_p: fp.intercept.exp(), log_corrected })
}

/// Slope of `ln|q|` expected near the fixed point (lower bound for `n < 2`).
pub fn expected_decay(n: f64) -> f64 {
    if n <= 2.0 {
        n / 3.0
    } else {
        2.0 * (3.0 - n) / 3.0
    }
}

/// Resample a trajectory on a uniform `s` grid through the dense output of a
/// fresh integration; regression then weights `s` evenly.
pub fn uniform_trajectory(start: PhasePoint, s_end: f64, sys: &DynSys, tol: f64, samples: usize) -> Result<Trajectory> {
    let opts = Options { rtol: tol, atol: tol * 1e-12, ..Default::default() };
    let sol = integrate(|_, y: &[f64; 3]| sys.field(y[0], y[1], y[2]), start.s, [start.r, start.q, start.p], s_end, &opts, None)?;
    let a = (3.0 - sys.params.n) / 3.0;
    let mut drift = 0.0f64;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = start.s + (s_end - start.s) * i as f64 / (samples - 1) as f64;
        let y = sol.eval(s).ok_or_else(|| Error::Domain(format!("s = {s} outside trajectory")))?;
        let exact = start.r * (a * (s - start.s)).exp();
        drift = drift.max((y[0] - exact).abs() / exact);
        points.push(PhasePoint { s, r: y[0], q: y[1], p: y[2] });
    }
    Ok(Trajectory { points, r_drift: drift })
}

/// Backward trajectory seeded from a profile at `s_seed = ln H`.
pub fn cg_trajectory(profile: &Profile, s_seed: f64, s_end: f64, sys: &DynSys, samples: usize) -> Result<Trajectory> {
    let st = profile.eval(s_seed.exp()).ok_or_else(|| Error::Domain(format!("seed s = {s_seed} outside profile")))?;
    let start = PhasePoint::from_profile(st.h, st.psi, st.dpsi, &sys.params);
    uniform_trajectory(start, s_end, sys, 1e-12, samples)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayCheck {
    /// Plain line fits of `ln|q|`, `ln|p|`.
    pub slopes: DecaySlopes,
    /// Slope and amplitude used for the verdict.
    pub slope: f64,
    pub amp: f64,
    pub expected: f64,
    /// `2/(3(3-n)(n-2)k^3)` for `2 < n < 3`.
    pub expected_amp: Option<f64>,
    pub slope_ok: bool,
    pub amp_ok: bool,
}

/// Line fit of `ln|q|` for `2 < n < 3` with the relative corrections
/// `H^{i(n-2) + j(3-n)}` (and their `ln H` companions) as extra columns.
/// Returns the slope and `exp(intercept)`.
pub fn corrected_decay_fit(traj: &Trajectory, window: (f64, f64), n: f64) -> Result<(f64, f64)> {
    let mut exps: Vec<f64> = vec![];
    for i in 0..=3 {
        for j in 0..=3 {
            let e = i as f64 * (n - 2.0) + j as f64 * (3.0 - n);
            if (1..=3).contains(&(i + j)) && !exps.iter().any(|x| (x - e).abs() < 1e-6) {
                exps.push(e);
            }
        }
    }
    let pts: Vec<&PhasePoint> = traj.points.iter().filter(|pt| pt.s >= window.0 && pt.s <= window.1).collect();
    if pts.len() < 2 * exps.len() + 4 {
        return Err(Error::InsufficientDecay(format!("only {} samples in window", pts.len())));
    }
    let y: Vec<f64> = pts.iter().map(|pt| pt.q.abs().ln()).collect();
    let cols = 2 + 2 * exps.len();
    let f = lstsq(pts.len(), cols, |i, j| {
        let s = pts[i].s;
        match j {
            0 => 1.0,
            1 => s,
            _ => {
                let e = exps[(j - 2) / 2];
                let base = (e * s).exp();
                if (j - 2) % 2 == 0 { base } else { s * base }
            }
        }
    }, &y)?;
    Ok((f.coef[1], f.coef[0].exp()))
}

/// Relative tolerance on the decay slope.
pub const SLOPE_TOL: f64 = 0.02;
/// Relative tolerance on the `q` amplitude for `2 < n < 3`.
pub const AMP_TOL: f64 = 0.05;

/// Compare the decay of `q` along the profile's trajectory with the rates
/// at the fixed point: at least `n/3` below `n = 2`, `2/3` with a `ln H`
/// factor at `n = 2`, and `2(3-n)/3` with a known amplitude above.
pub fn check_decay(profile: &Profile, sys: &DynSys, window: (f64, f64)) -> Result<DecayCheck> {
    let n = sys.params.n;
    let traj = cg_trajectory(profile, window.1, window.0, sys, 301)?;
    let slopes = decay_slopes(&traj, window, n)?;
    let expected = expected_decay(n);
    let (slope, amp) = if n > 2.0 { corrected_decay_fit(&traj, window, n)? } else { (slopes.slope_q, slopes.amp_q) };
    let dev = slope - expected;
    let (slope_ok, expected_amp, amp_ok) = if n < 2.0 {
        (dev >= -SLOPE_TOL * expected, None, true)
    } else if n == 2.0 {
        (dev.abs() <= SLOPE_TOL * expected, None, true)
    } else {
        let k3 = sys.params.k.powi(3);
        let want = 2.0 / (3.0 * (3.0 - n) * (n - 2.0) * k3);
        (dev.abs() <= SLOPE_TOL * expected, Some(want), (amp / want - 1.0).abs() <= AMP_TOL)
    };
    Ok(DecayCheck { slopes, slope, amp, expected, expected_amp, slope_ok, amp_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(n: f64) -> Params {
        Params::new(n, 1.0).unwrap()
    }

    #[test]
    fn field_examples() {
        assert_eq!(vector_field(&PhasePoint::origin(0.0), &params(2.0)).unwrap(), [0.0, 0.0, 0.0]);
        let f = vector_field(&PhasePoint { s: 0.0, r: 1.0, q: 0.0, p: 0.0 }, &params(2.0)).unwrap();
        assert_relative_eq!(f[0], 1.0 / 3.0);
        assert_eq!(f[1], 0.0);
        assert_relative_eq!(f[2], -1.0 / 3.0);
        let f = vector_field(&PhasePoint { s: 0.0, r: 0.0, q: 1.0, p: 1.0 }, &params(1.0)).unwrap();
        assert_eq!(f, [0.0, -2.0 / 3.0 + 1.0, 1.0 / 3.0]);
        let bad = PhasePoint { s: 0.0, r: 1.0, q: -2.0, p: 0.0 };
        assert!(matches!(vector_field(&bad, &params(1.0)), Err(Error::SqrtDomain(_))));
    }

    #[test]
    fn eigenvalue_examples() {
        let l = jacobian_origin(&params(2.0));
        let want = [-1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for i in 0..3 {
            assert!((l.eigenvalues[i] - want[i]).abs() < 1e-12);
        }
        let l = jacobian_origin(&params(1.0));
        let want = [-2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for i in 0..3 {
            assert!((l.eigenvalues[i] - want[i]).abs() < 1e-12);
        }
        // tangent vectors are eigenvectors
        for (v, lam) in l.eigenvectors.iter().zip([2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0]) {
            assert!((l.matrix * v - v * lam).norm() < 1e-14);
        }
    }

    #[test]
    fn origin_is_fixed() {
        let sys = DynSys::new(params(1.5));
        let t = integrate_s(PhasePoint::origin(0.0), -10.0, &sys, 1e-10).unwrap();
        assert!(t.points.iter().all(|p| p.r == 0.0 && p.q == 0.0 && p.p == 0.0));
    }

    #[test]
    fn tangent_perturbation_decays_backward() {
        let n = 1.2;
        let sys = DynSys::new(params(n));
        let d = 1e-8;
        let start = PhasePoint { s: 0.0, r: 0.0, q: d, p: d };
        let t = uniform_trajectory(start, -15.0, &sys, 1e-12, 200).unwrap();
        let fit = decay_slopes(&t, (-15.0, 0.0), n).unwrap();
        assert!((fit.slope_q - n / 3.0).abs() < 1e-6);
        assert!((fit.slope_p - n / 3.0).abs() < 1e-6);
    }

    #[test]
    fn phase_point_round_trip() {
        let p = params(2.3);
        let pt = PhasePoint::from_profile(1e-3, 1.01, 3.0, &p);
        let (h, psi, dpsi) = pt.to_profile(&p);
        assert_relative_eq!(h, 1e-3, max_relative = 1e-14);
        assert_relative_eq!(psi, 1.01, max_relative = 1e-14);
        assert_relative_eq!(dpsi, 3.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn eigenvalues_for_random_n(n in 0.001f64..2.999) {
            let l = jacobian_origin(&params(n));
            let mut want = [(3.0 - n) / 3.0, -(3.0 - n) / 3.0, n / 3.0];
            want.sort_by(f64::total_cmp);
            for i in 0..3 {
                prop_assert!((l.eigenvalues[i] - want[i]).abs() < 1e-12);
            }
            prop_assert_eq!(l.eigenvalues.iter().filter(|&&x| x < 0.0).count(), 1);
        }
    }

    #[test]
    fn decay_along_converged_profiles() {
        for n in [1.5, 2.0, 2.5] {
            let p = params(n);
            let r = crate::shoot::shoot_b(&p, &crate::shoot::ShootConfig::default()).unwrap();
            let c = check_decay(&r.profile, &DynSys::new(p), (-20.0, -5.0)).unwrap();
            assert!(c.slope_ok && c.amp_ok, "n={n}: {c:?}");
            let bad = check_decay(&r.profile, &DynSys { params: p, fault: true }, (-20.0, -5.0));
            assert!(!matches!(bad, Ok(DecayCheck { slope_ok: true, .. })));
        }
    }

    #[test]
    fn fault_moves_an_eigenvalue() {
        let l = DynSys { params: params(2.0), fault: true }.linearization();
        assert!((l.eigenvalues[0] + 2.0 / 3.0).abs() < 1e-12);
    }
}
