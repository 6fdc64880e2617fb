//! Shooting on the contact-line parameter `b` for
//! `psi'' + (2/3)(H^2 + H^{n-1})^{-1} psi^{-1/2} = 0`, `psi(0) = k^2`,
//! `psi'(inf) = 0`, plus the linearised diagnostics around the solution.

use crate::error::{Error, Result};
use crate::fit::{golden_section, lstsq};
use crate::matching::CoxVoinov;
use crate::model::{resonance_class, Params, ResonanceClass, ScaleRecord};
use crate::ode::{integrate, Options, Solution, Stats, Stop};
use crate::series::{ContactSeries, DEFAULT_DEGREE};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct State {
    pub h: f64,
    pub psi: f64,
    pub dpsi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotClass {
    Undershoot,
    Overshoot,
    Converged,
}

/// Smallest starting height tried when the series window forces `H0` down.
pub const MIN_H0: f64 = 1e-10;

/// How a shot that reaches `H_max` is sorted during bisection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    /// Side of the Cox-Voinov separatrix at `H_max`.
    CoxVoinov,
    /// Only a zero of `psi'` before `H_max` counts as an undershoot.
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootConfig {
    pub h0: f64,
    pub h_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Acceptance band for `|psi'(H_max)|`; also the overshoot floor.
    pub conv_tol: f64,
    pub tol_b: f64,
    pub degree: usize,
    pub far_field: FarField,
    /// Initial bracket; `None` means `[-10/k, 10/k]`.
    pub bracket: Option<(f64, f64)>,
    pub max_expand: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            h0: 1e-4,
            h_max: 1e6,
            rtol: 1e-12,
            atol: 1e-14,
            conv_tol: 1e-5,
            tol_b: 1e-10,
            degree: DEFAULT_DEGREE,
            far_field: FarField::CoxVoinov,
            bracket: None,
            max_expand: 12,
        }
    }
}

/// Right-hand side in `t = ln H` for `(psi, chi = H psi')`.
#[derive(Clone, Copy, Debug)]
pub struct SlopeOde {
    pub params: Params,
    /// Multiplies the forcing; `0` turns the equation into `psi'' = 0`.
    pub forcing_scale: f64,
}

impl SlopeOde {
    pub fn new(params: Params) -> Self {
        SlopeOde { params, forcing_scale: 1.0 }
    }

    /// `H^2` times the forcing weight, written to stay finite as `H -> 0`.
    pub fn weight(&self, t: f64) -> f64 {
        let p = &self.params;
        self.forcing_scale * 2.0 * p.v / (1.0 + p.slip() * ((p.n - 3.0) * t).exp())
    }

    fn rhs(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        if !(y[0] > 0.0) {
            return Err(Error::PsiNonpositive(t.exp()));
        }
        Ok([y[1], y[1] - self.weight(t) / y[0].sqrt()])
    }

    /// `psi''` at a state.
    pub fn second_derivative(&self, s: &State) -> f64 {
        let t = s.h.ln();
        -self.weight(t) / (s.h * s.h) / s.psi.sqrt()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub min_step_log: f64,
    pub class: ShotClass,
    /// Height at which `psi'` reached zero, for undershoots.
    pub turn_h: Option<f64>,
}

/// Solution curve in `H` with continuous output.
#[derive(Clone, Debug)]
pub struct Profile {
    pub samples: Vec<State>,
    pub b: f64,
    pub params: Params,
    pub stats: ProfileStats,
    ode: SlopeOde,
    sol: Solution<2>,
}

impl Profile {
    pub fn h_range(&self) -> (f64, f64) {
        (self.samples[0].h, self.samples.last().unwrap().h)
    }

    pub fn last(&self) -> State {
        *self.samples.last().unwrap()
    }

    /// State at any height inside the integrated range.
    pub fn eval(&self, h: f64) -> Option<State> {
        let (lo, hi) = self.h_range();
        let t = if h <= lo { lo.ln() } else if h >= hi { hi.ln() } else { h.ln() };
        if h < lo * (1.0 - 1e-12) || h > hi * (1.0 + 1e-12) {
            return None;
        }
        let y = self.sol.eval(t)?;
        Some(State { h, psi: y[0], dpsi: y[1] / h })
    }

    pub fn second_derivative(&self, s: &State) -> f64 {
        self.ode.second_derivative(s)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("H,psi,dpsi\n");
        for st in &self.samples {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", st.h, st.psi, st.dpsi));
        }
        s
    }

    /// Shape properties expected of an accepted solution.
    pub fn shape(&self) -> ShapeReport {
        let k2 = self.params.k * self.params.k;
        let mut r = ShapeReport { dpsi_positive: true, d2psi_negative: true, psi_above_k2: true, psi_increasing: true, samples: self.samples.len() };
        for (i, s) in self.samples.iter().enumerate() {
            r.dpsi_positive &= s.dpsi > 0.0;
            r.d2psi_negative &= self.second_derivative(s) < 0.0;
            r.psi_above_k2 &= s.psi >= k2 * (1.0 - 1e-12);
            if i > 0 {
                r.psi_increasing &= s.psi > self.samples[i - 1].psi;
            }
        }
        r
    }

    /// Map a normalised profile to physical units.
    pub fn unscale(&self, rec: &ScaleRecord) -> Vec<State> {
        let a2 = rec.psi_scale();
        self.samples
            .iter()
            .map(|s| State { h: s.h * rec.h_scale, psi: s.psi * a2, dpsi: s.dpsi * a2 / rec.h_scale })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeReport {
    pub dpsi_positive: bool,
    pub d2psi_negative: bool,
    pub psi_above_k2: bool,
    pub psi_increasing: bool,
    pub samples: usize,
}

impl ShapeReport {
    pub fn all(&self) -> bool {
        self.dpsi_positive && self.d2psi_negative && self.psi_above_k2 && self.psi_increasing
    }
}

/// Contact-line data `psi = k^2 (1 + mu_b)`, `psi' = k^2 dmu_b/dH` at `H0`.
pub fn init_near_contact(b: f64, h0: f64, params: &Params, cs: &ContactSeries) -> Result<State> {
    let (mu, dmu) = cs.eval_mu(b, h0)?;
    let k2 = params.k * params.k;
    Ok(State { h: h0, psi: k2 * (1.0 + mu), dpsi: k2 * dmu })
}

/// Integrate from `start` up to `h_end`, stopping early when `psi'`
/// reaches zero.
pub fn integrate_h(start: State, h_end: f64, ode: &SlopeOde, opts: &Options) -> Result<Profile> {
    if !(h_end > start.h) {
        return Err(Error::Domain(format!("H_end = {h_end} must exceed H = {}", start.h)));
    }
    if !(start.psi > 0.0) {
        return Err(Error::PsiNonpositive(start.h));
    }
    let event = |_: f64, y: &[f64; 2]| y[1];
    let t0 = start.h.ln();
    let y0 = [start.psi, start.h * start.dpsi];
    // a shot that starts downhill has already turned
    let t_end = if start.dpsi <= 0.0 { t0 + 1e-9 } else { h_end.ln() };
    let ev: Option<&dyn Fn(f64, &[f64; 2]) -> f64> = if start.dpsi <= 0.0 { None } else { Some(&event) };
    let sol = integrate(|t, y: &[f64; 2]| ode.rhs(t, y), t0, y0, t_end, opts, ev)?;
    let samples: Vec<State> = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(&t, y)| {
            let h = t.exp();
            State { h, psi: y[0], dpsi: y[1] / h }
        })
        .collect();
    let Stats { accepted, rejected, evaluations, min_step } = sol.stats;
    let turned = sol.stop == Stop::Event || start.dpsi <= 0.0;
    let stats = ProfileStats {
        accepted,
        rejected,
        evaluations,
        min_step_log: min_step,
        class: if turned { ShotClass::Undershoot } else { ShotClass::Overshoot },
        turn_h: turned.then(|| if start.dpsi <= 0.0 { start.h } else { samples.last().unwrap().h }),
    };
    Ok(Profile { samples, b: f64::NAN, params: ode.params, stats, ode: *ode, sol })
}

fn shot_options(cfg: &ShootConfig) -> Options {
    Options { rtol: cfg.rtol, atol: cfg.atol, ..Default::default() }
}

/// Distance of the end state from the Cox-Voinov separatrix, `chi - X(psi)`.
pub fn separatrix_gap(s: &State) -> f64 {
    match CoxVoinov::shared().chi(s.psi) {
        Ok(x) => s.h * s.dpsi - x,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Integrate one shot and sort it.
/// `H0` drops by decades while `b H0` lies outside the series window.
pub fn shoot_once(b: f64, params: &Params, cfg: &ShootConfig, cs: &ContactSeries) -> Result<Profile> {
    let mut h0 = cfg.h0;
    let start = loop {
        match init_near_contact(b, h0, params, cs) {
            Err(Error::ConvergenceWindow { .. }) if h0 > MIN_H0 => h0 /= 10.0,
            r => break r?,
        }
    };
    let mut prof = integrate_h(start, cfg.h_max, &SlopeOde::new(*params), &shot_options(cfg))?;
    prof.b = b;
    if prof.stats.class != ShotClass::Undershoot {
        let end = prof.last();
        prof.stats.class = match cfg.far_field {
            FarField::CoxVoinov if separatrix_gap(&end) <= 0.0 => ShotClass::Undershoot,
            FarField::CoxVoinov => ShotClass::Overshoot,
            FarField::Flat if end.dpsi.abs() <= cfg.conv_tol => ShotClass::Converged,
            FarField::Flat => ShotClass::Overshoot,
        };
    }
    Ok(prof)
}

fn below(c: ShotClass) -> bool {
    c == ShotClass::Undershoot
}

#[derive(Clone, Debug)]
pub struct ShootResult {
    pub b_cg: f64,
    pub profile: Profile,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// `|psi'(H_max)|` missed the acceptance band; only the bracket is reliable.
    pub bracket_only: bool,
}

pub fn shoot_b(params: &Params, cfg: &ShootConfig) -> Result<ShootResult> {
    let cs = ContactSeries::new(params, cfg.degree)?;
    shoot_b_with(params, cfg, &cs)
}

/// Bisection on `b` between an undershoot and an overshoot.
pub fn shoot_b_with(params: &Params, cfg: &ShootConfig, cs: &ContactSeries) -> Result<ShootResult> {
    let (mut lo, mut hi) = cfg.bracket.unwrap_or((-10.0 / params.k, 10.0 / params.k));
    let class = |b: f64| shoot_once(b, params, cfg, cs).map(|p| p.stats.class);
    let (mut c_lo, mut c_hi) = (class(lo)?, class(hi)?);
    let mut expansions = 0;
    while !(below(c_lo) && !below(c_hi)) {
        if expansions == cfg.max_expand || below(c_lo) == below(c_hi) && expansions == cfg.max_expand {
            return Err(Error::NoBracket { lo, hi });
        }
        let w = hi - lo;
        match (below(c_lo), below(c_hi)) {
            (false, false) => {
                lo -= w;
                c_lo = class(lo).map_err(|_| Error::NoBracket { lo, hi })?;
            }
            (true, true) => {
                hi += w;
                c_hi = class(hi).map_err(|_| Error::NoBracket { lo, hi })?;
            }
            // inverted order would contradict d psi/d b > 0
            (false, true) => return Err(Error::NoBracket { lo, hi }),
            (true, false) => unreachable!(),
        }
        expansions += 1;
    }
    let mut iterations = 0;
    while hi - lo > cfg.tol_b {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(class(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let b_cg = 0.5 * (lo + hi);
    let mut profile = shoot_once(b_cg, params, cfg, cs)?;
    let end = profile.last();
    let reached = profile.stats.turn_h.is_none();
    let converged = reached && end.dpsi.abs() <= cfg.conv_tol;
    if converged {
        profile.stats.class = ShotClass::Converged;
    }
    Ok(ShootResult { b_cg, profile, bracket: (lo, hi), iterations, bracket_only: !converged })
}

/// Samples of a solution of the linearised equation
/// `eta'' = (1/3)(H^2 + H^{n-1})^{-1} psi^{-3/2} eta` along a profile.
#[derive(Clone, Debug)]
pub struct EtaTrajectory {
    pub h: Vec<f64>,
    pub eta: Vec<f64>,
    pub deta: Vec<f64>,
    pub psi: Vec<f64>,
    sol: Solution<4>,
}

impl EtaTrajectory {
    /// `(eta, eta')` at `h`.
    pub fn eval(&self, h: f64) -> Option<(f64, f64)> {
        let y = self.sol.eval(h.ln())?;
        Some((y[2], y[3] / h))
    }

    /// `(eta^2)''` from the equation, at each sample.
    pub fn eta_sq_second_derivative(&self, params: &Params) -> Vec<f64> {
        let ode = SlopeOde::new(*params);
        (0..self.h.len())
            .map(|i| {
                let h = self.h[i];
                let a = 0.5 * ode.weight(h.ln()) / (h * h) * self.psi[i].powf(-1.5);
                2.0 * self.deta[i].powi(2) + 2.0 * a * self.eta[i].powi(2)
            })
            .collect()
    }
}

fn eta_system(ode: SlopeOde) -> impl Fn(f64, &[f64; 4]) -> Result<[f64; 4]> {
    move |t, y| {
        if !(y[0] > 0.0) {
            return Err(Error::PsiNonpositive(t.exp()));
        }
        let w = ode.weight(t);
        Ok([y[1], y[1] - w / y[0].sqrt(), y[3], y[3] + 0.5 * w * y[0].powf(-1.5) * y[2]])
    }
}

fn eta_run(ode: SlopeOde, t0: f64, y0: [f64; 4], t1: f64, opts: &Options) -> Result<EtaTrajectory> {
    let sol = integrate(eta_system(ode), t0, y0, t1, opts, None)?;
    let mut tr = EtaTrajectory { h: vec![], eta: vec![], deta: vec![], psi: vec![], sol: sol.clone() };
    for (&t, y) in sol.t.iter().zip(&sol.y) {
        let h = t.exp();
        tr.h.push(h);
        tr.psi.push(y[0]);
        tr.eta.push(y[2]);
        tr.deta.push(y[3] / h);
    }
    Ok(tr)
}

/// The `b`-derivative of the shot, started from the series.
pub fn linearized_eta(profile: &Profile, cs: &ContactSeries, opts: &Options) -> Result<EtaTrajectory> {
    let (h0, h1) = profile.h_range();
    let s = profile.samples[0];
    let e = cs.eval(profile.b, h0)?;
    let k2 = profile.params.k * profile.params.k;
    let y0 = [s.psi, s.h * s.dpsi, k2 * e.dmu_db, h0 * k2 * e.ddmu_db];
    eta_run(profile.ode, h0.ln(), y0, h1.ln(), opts)
}

/// Solution with `(eta, eta') = (scale, 0)` at the far end, integrated back
/// towards the contact line.
pub fn far_eta(profile: &Profile, scale: f64, opts: &Options) -> Result<EtaTrajectory> {
    let (h0, h1) = profile.h_range();
    let s = profile.last();
    let y0 = [s.psi, s.h * s.dpsi, scale, 0.0];
    eta_run(profile.ode, h1.ln(), y0, h0.ln(), opts)
}

pub fn det2(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

#[derive(Clone, Debug, Serialize)]
pub struct TransversalityReport {
    /// `(H, det[(eta_b, eta_b'), (eta_inf, eta_inf')])`.
    pub det: Vec<(f64, f64)>,
    pub sign_constant: bool,
    pub min_abs: f64,
    pub det_floor: f64,
    pub pass: bool,
}

pub fn transversality_check(
    profile: &Profile,
    cs: &ContactSeries,
    grid: &[f64],
    det_floor: f64,
    far_scale: f64,
    opts: &Options,
) -> Result<TransversalityReport> {
    let eb = linearized_eta(profile, cs, opts)?;
    let ei = far_eta(profile, far_scale, opts)?;
    let mut det = Vec::with_capacity(grid.len());
    for &h in grid {
        let a = eb.eval(h).ok_or_else(|| Error::InsufficientOverlap(format!("H = {h} outside profile")))?;
        let b = ei.eval(h).ok_or_else(|| Error::InsufficientOverlap(format!("H = {h} outside profile")))?;
        det.push((h, det2(a, b)));
    }
    let sign = det.first().map(|d| d.1.signum()).unwrap_or(0.0);
    let sign_constant = sign != 0.0 && det.iter().all(|d| d.1.signum() == sign);
    let min_abs = det.iter().map(|d| d.1.abs()).fold(f64::INFINITY, f64::min);
    Ok(TransversalityReport { pass: sign_constant && min_abs >= det_floor, det, sign_constant, min_abs, det_floor })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BetaFit {
    /// Limit of `(mu_1 - mu_2)/H` at the contact line.
    pub beta: f64,
    /// Exponent `gamma` of the leading correction `A H^gamma`.
    pub exponent: f64,
    pub amplitude: f64,
    pub rms: f64,
}

/// Fit `(mu_1 - mu_2)/H = beta + A H^g + C H^{2g} + E H^{g+1}` over `window`.
/// The two extra columns keep `g/2` from fitting as well as `g`; resonant
/// exponents add an `H^{g+1} ln H` column.
pub fn beta_difference(p1: &Profile, p2: &Profile, window: (f64, f64)) -> Result<BetaFit> {
    let lo = window.0.max(p1.h_range().0).max(p2.h_range().0);
    let hi = window.1.min(p1.h_range().1).min(p2.h_range().1);
    if !(hi > lo * 10.0) {
        return Err(Error::InsufficientOverlap(format!("[{lo:.3e}, {hi:.3e}] spans less than a decade")));
    }
    let k2 = p1.params.k * p1.params.k;
    let npts = 160;
    let mut h = Vec::with_capacity(npts);
    let mut d = Vec::with_capacity(npts);
    for i in 0..npts {
        let x = lo * (hi / lo).powf(i as f64 / (npts - 1) as f64);
        let (a, b) = (p1.eval(x).unwrap(), p2.eval(x).unwrap());
        h.push(x);
        d.push((a.psi - b.psi) / k2 / x);
    }
    if d.iter().all(|v| *v == 0.0) {
        return Ok(BetaFit { beta: 0.0, exponent: f64::NAN, amplitude: 0.0, rms: 0.0 });
    }
    let resonant = resonance_class(p1.params.n) != ResonanceClass::NonResonant;
    let cols = if resonant { 5 } else { 4 };
    let fit_at = |g: f64| {
        let e = [0.0, g, 2.0 * g, g + 1.0];
        lstsq(npts, cols, |i, j| if j == 4 { h[i].powf(g + 1.0) * h[i].ln() } else { h[i].powf(e[j]) }, &d)
    };
    let rms = |g: f64| fit_at(g).map(|f| f.rms).unwrap_or(f64::INFINITY);
    let step = 0.02;
    let best = (0..=145).map(|i| 0.1 + step * i as f64).map(|g| (g, rms(g))).fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let g = golden_section(rms, best.0 - step, best.0 + step, 1e-6);
    let f = fit_at(g)?;
    Ok(BetaFit { beta: f.coef[0], exponent: g, amplitude: f.coef[1], rms: f.rms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normalize, validate_params};
    use approx::assert_relative_eq;

    fn params(n: f64, k: f64) -> Params {
        Params::new(n, k).unwrap()
    }

    #[test]
    fn zero_forcing_keeps_psi_affine() {
        let ode = SlopeOde { params: params(2.0, 1.0), forcing_scale: 0.0 };
        let p = integrate_h(State { h: 1e-3, psi: 1.0, dpsi: 0.5 }, 1e3, &ode, &Options::tol(1e-12, 1e-14)).unwrap();
        for s in &p.samples {
            assert_relative_eq!(s.psi, 1.0 + 0.5 * (s.h - 1e-3), max_relative = 1e-10);
            assert_relative_eq!(s.dpsi, 0.5, max_relative = 1e-10);
        }
    }

    #[test]
    fn step_against_fine_reference() {
        // Heun reference with 2^18 steps in H from (1, 1, 1)
        let pr = params(2.0, 1.0);
        let ode = SlopeOde::new(pr);
        let p = integrate_h(State { h: 1.0, psi: 1.0, dpsi: 1.0 }, 1.5, &ode, &Options::tol(1e-12, 1e-14)).unwrap();
        let f = |h: f64, y: [f64; 2]| [y[1], -pr.forcing(h) / y[0].sqrt()];
        let n = 1 << 18;
        let dh = 0.5 / n as f64;
        let mut y = [1.0, 1.0];
        for i in 0..n {
            let h = 1.0 + i as f64 * dh;
            let k1 = f(h, y);
            let k2 = f(h + dh, [y[0] + dh * k1[0], y[1] + dh * k1[1]]);
            y = [y[0] + 0.5 * dh * (k1[0] + k2[0]), y[1] + 0.5 * dh * (k1[1] + k2[1])];
        }
        let end = p.last();
        assert!((end.psi - y[0]).abs() < 1e-10);
        assert!((end.dpsi - y[1]).abs() < 1e-10);
    }

    #[test]
    fn contact_data() {
        let pr = params(1.5, 1.0);
        let cs = ContactSeries::new(&pr, 12).unwrap();
        let s = init_near_contact(0.5, 1e-4, &pr, &cs).unwrap();
        // next term is -(8/9) H^{3/2}
        assert!((s.psi - (1.0 + 0.5e-4 - 8.0 / 9.0 * 1e-6)).abs() < 1e-9);
        let s2 = init_near_contact(0.6, 1e-4, &pr, &cs).unwrap();
        assert_relative_eq!((s2.psi - s.psi) / 0.1, 1e-4, max_relative = 1e-2);
        let s3 = init_near_contact(0.5, 1e-9, &pr, &cs).unwrap();
        assert!((s3.psi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bisection_and_classification() {
        let pr = params(2.0, 1.0);
        let cfg = ShootConfig::default();
        let res = shoot_b(&pr, &cfg).unwrap();
        assert!(res.bracket.1 - res.bracket.0 <= 1e-10);
        assert!(!res.bracket_only);
        assert_eq!(res.profile.stats.class, ShotClass::Converged);
        assert!(res.profile.shape().all());
        let cs = ContactSeries::new(&pr, 12).unwrap();
        let under = shoot_once(res.b_cg - 0.1, &pr, &cfg, &cs).unwrap();
        assert_eq!(under.stats.class, ShotClass::Undershoot);
        assert!(under.stats.turn_h.is_some());
        let over = shoot_once(res.b_cg + 0.1, &pr, &cfg, &cs).unwrap();
        assert_eq!(over.stats.class, ShotClass::Overshoot);
        assert!(over.last().dpsi > cfg.conv_tol);
    }

    #[test]
    fn longer_domain_reproduces_b() {
        let pr = params(2.0, 1.0);
        let a = shoot_b(&pr, &ShootConfig::default()).unwrap();
        let b = shoot_b(&pr, &ShootConfig { h_max: 1e8, ..Default::default() }).unwrap();
        assert!((a.b_cg - b.b_cg).abs() < 1e-6, "{} vs {}", a.b_cg, b.b_cg);
    }

    #[test]
    fn flat_mode_still_brackets() {
        let pr = params(2.0, 1.0);
        let a = shoot_b(&pr, &ShootConfig::default()).unwrap();
        let f = shoot_b(&pr, &ShootConfig { far_field: FarField::Flat, ..Default::default() }).unwrap();
        assert!((a.b_cg - f.b_cg).abs() < 1e-3);
        assert!(f.b_cg <= a.b_cg + 1e-9, "flat criterion can only err towards undershoot");
    }

    #[test]
    fn uniqueness_from_different_brackets() {
        let pr = params(1.5, 1.0);
        let a = shoot_b(&pr, &ShootConfig { bracket: Some((-3.0, 7.0)), ..Default::default() }).unwrap();
        let b = shoot_b(&pr, &ShootConfig { bracket: Some((0.1, 40.0)), ..Default::default() }).unwrap();
        assert!((a.b_cg - b.b_cg).abs() <= 1e-9);
        // b-sensitivity grows like H, so compare where it stays O(1)
        let mut sup = 0.0f64;
        for s in a.profile.samples.iter().filter(|s| s.h <= 10.0) {
            sup = sup.max((b.profile.eval(s.h).unwrap().psi - s.psi).abs());
        }
        assert!(sup < 1e-6, "{sup}");
    }

    #[test]
    fn no_bracket_reported() {
        let pr = params(2.0, 1.0);
        let cfg = ShootConfig { bracket: Some((5.0, 6.0)), max_expand: 0, ..Default::default() };
        assert!(matches!(shoot_b(&pr, &cfg), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn difference_of_shots_is_convex_squared() {
        let pr = params(2.0, 1.0);
        let cfg = ShootConfig { h_max: 1e3, ..Default::default() };
        let cs = ContactSeries::new(&pr, 12).unwrap();
        let a = shoot_once(0.2, &pr, &cfg, &cs).unwrap();
        let b = shoot_once(0.5, &pr, &cfg, &cs).unwrap();
        // (phi^2)' = 2 phi phi' must be nondecreasing
        let top = a.h_range().1.min(b.h_range().1);
        let grid: Vec<f64> = (0..200).map(|i| 1e-4 * (top / 1e-4).powf(i as f64 / 199.0)).collect();
        let mut prev = f64::NEG_INFINITY;
        for &h in &grid {
            let (x, y) = (a.eval(h).unwrap(), b.eval(h).unwrap());
            let v = 2.0 * (x.psi - y.psi) * (x.dpsi - y.dpsi);
            assert!(v >= prev - 1e-10, "at H={h}");
            prev = v;
        }
    }

    #[test]
    fn linearised_direction() {
        let pr = params(2.0, 1.0);
        let cfg = ShootConfig::default();
        let cs = ContactSeries::new(&pr, 12).unwrap();
        let res = shoot_b_with(&pr, &cfg, &cs).unwrap();
        let o = Options::tol(1e-11, 1e-14);
        let eta = linearized_eta(&res.profile, &cs, &o).unwrap();
        assert_relative_eq!(eta.eta[0] / eta.h[0], 1.0, max_relative = 1e-3);
        assert!(eta.eta_sq_second_derivative(&pr).iter().all(|v| *v >= 0.0));
        for w in eta.h.windows(2).zip(eta.eta.windows(2).zip(eta.deta.windows(2))) {
            let (_, (e, d)) = w;
            assert!(e[1] * d[1] >= e[0] * d[0] - 1e-12);
        }
        assert!(*eta.deta.last().unwrap() > 0.1);

        // finite-difference check of the b-derivative at a mid height
        let db = 1e-6;
        let p1 = shoot_once(res.b_cg + db, &pr, &ShootConfig { h_max: 10.0, ..cfg }, &cs).unwrap();
        let p0 = shoot_once(res.b_cg - db, &pr, &ShootConfig { h_max: 10.0, ..cfg }, &cs).unwrap();
        let fd = (p1.eval(1.0).unwrap().psi - p0.eval(1.0).unwrap().psi) / (2.0 * db);
        assert_relative_eq!(fd, eta.eval(1.0).unwrap().0, max_relative = 1e-5);
    }

    #[test]
    fn transversality_and_homogeneity() {
        let pr = params(2.0, 1.0);
        let cs = ContactSeries::new(&pr, 12).unwrap();
        let res = shoot_b_with(&pr, &ShootConfig::default(), &cs).unwrap();
        let o = Options::tol(1e-11, 1e-14);
        let grid: Vec<f64> = (0..=8).map(|i| 10f64.powf(i as f64 * 0.5)).collect();
        let r1 = transversality_check(&res.profile, &cs, &grid, 1e-3, 1.0, &o).unwrap();
        let r10 = transversality_check(&res.profile, &cs, &grid, 1e-3, 10.0, &o).unwrap();
        assert!(r1.pass && r10.pass);
        for (a, b) in r1.det.iter().zip(&r10.det) {
            assert_relative_eq!(b.1, 10.0 * a.1, max_relative = 1e-6);
        }
        // constant Wronskian
        let d0 = r1.det[0].1;
        assert!(r1.det.iter().all(|d| (d.1 - d0).abs() < 1e-6 * d0.abs()));
        assert_eq!(det2((0.3, 1.7), (0.3, 1.7)), 0.0);
    }

    #[test]
    fn beta_exponents() {
        // below n = 2 the first correction is H^{3-n}; w has no pure xi terms
        for (n, want) in [(1.5, 1.5), (2.5, 0.5)] {
            let pr = params(n, 1.0);
            let cfg = ShootConfig { h_max: 1.0, ..Default::default() };
            let cs = ContactSeries::new(&pr, 12).unwrap();
            let a = shoot_once(0.3, &pr, &cfg, &cs).unwrap();
            let b = shoot_once(0.8, &pr, &cfg, &cs).unwrap();
            let f = beta_difference(&a, &b, (1e-4, 3e-2)).unwrap();
            assert_relative_eq!(f.beta, -0.5, max_relative = 1e-4);
            assert!((f.exponent - want).abs() < 0.1 * want, "n={n}: {}", f.exponent);
            let same = beta_difference(&a, &a, (1e-4, 3e-2)).unwrap();
            assert_eq!(same.beta, 0.0);
        }
    }

    #[test]
    fn physical_round_trip() {
        let phys = validate_params(2.0, 1.2, 2.0, 0.05).unwrap();
        let (norm, rec) = normalize(&phys, 1.2).unwrap();
        let cfg = ShootConfig { h_max: 1e4, ..Default::default() };
        let res = shoot_b(&norm, &cfg).unwrap();
        let unscaled = res.profile.unscale(&rec);
        let s0 = unscaled[0];
        let direct = integrate_h(s0, unscaled.last().unwrap().h, &SlopeOde::new(phys), &Options::tol(1e-12, 1e-14)).unwrap();
        for s in unscaled.iter().step_by(7) {
            let d = direct.eval(s.h).unwrap();
            assert_relative_eq!(d.psi, s.psi, max_relative = 1e-6);
            assert!((d.dpsi - s.dpsi).abs() <= 1e-6 * s0.dpsi.abs());
        }
        assert_relative_eq!(unscaled[0].psi, 1.2 * 1.2, max_relative = 1e-3);
    }
}
