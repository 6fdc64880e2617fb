//! Far-field matching: the Cox-Voinov constant `B`, the remainder, the
//! macroscopic angle law and parameter sweeps.

pub mod cox_voinov;

pub use cox_voinov::CoxVoinov;

use crate::error::{Error, Result};
use crate::fit::{golden_section, linear_fit, lstsq, mean};
use crate::model::{Params, ResonanceClass};
use crate::series::ContactSeries;
use crate::shoot::{shoot_b_with, Profile, ShootConfig, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Anything that can report `psi(H)`: integrated profiles and closed forms.
pub trait Curve {
    fn state(&self, h: f64) -> Option<State>;
    fn h_range(&self) -> (f64, f64);
}

impl Curve for Profile {
    fn state(&self, h: f64) -> Option<State> {
        self.eval(h)
    }
    fn h_range(&self) -> (f64, f64) {
        Profile::h_range(self)
    }
}

/// A curve given by a formula for `psi`, differentiated numerically.
pub struct FnCurve<F: Fn(f64) -> f64> {
    pub psi: F,
    pub range: (f64, f64),
}

impl<F: Fn(f64) -> f64> Curve for FnCurve<F> {
    fn state(&self, h: f64) -> Option<State> {
        if h < self.range.0 || h > self.range.1 {
            return None;
        }
        let d = 1e-5 * h;
        let dpsi = ((self.psi)(h + d) - (self.psi)(h - d)) / (2.0 * d);
        Some(State { h, psi: (self.psi)(h), dpsi })
    }
    fn h_range(&self) -> (f64, f64) {
        self.range
    }
}

/// `(ln(BH) - ln ln(BH)/3)^{2/3}`, the leading far-field form.
pub fn synthetic_psi(b: f64, h: f64) -> f64 {
    let l = (b * h).ln();
    (l - l.ln() / 3.0).powf(2.0 / 3.0)
}

/// The far-field solution `psi_CV(BH)` selected by the refined asymptotic.
pub fn cox_voinov_psi(ln_b: f64, h: f64) -> Result<f64> {
    CoxVoinov::shared().psi(ln_b + h.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BEstimator {
    /// `T(psi^{3/2}) - ln H` with the separatrix clock `T`.
    CoxVoinov,
    /// `psi^{3/2} - ln H + ln ln H / 3`.
    LogLog,
}

pub fn ln_b_sample(s: &State, est: BEstimator) -> Result<f64> {
    let phi = s.psi.powf(1.5);
    let lh = s.h.ln();
    match est {
        BEstimator::CoxVoinov => Ok(CoxVoinov::shared().time(phi)? - lh),
        BEstimator::LogLog => {
            if !(lh > 0.0) {
                return Err(Error::Domain(format!("ln ln H undefined at H = {}", s.h)));
            }
            Ok(phi - lh + lh.ln() / 3.0)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BEstimate {
    pub ln_b: f64,
    pub b: f64,
    /// Max minus min of the estimator over the window.
    pub spread: f64,
    pub window: (f64, f64),
    pub estimator: BEstimator,
    /// `(H, ln B(H))`.
    pub samples: Vec<(f64, f64)>,
}

pub const WINDOW_SAMPLES: usize = 64;

/// Average of the estimator over the upper half (in `ln H`) of `window`,
/// which must sit inside `[H_max/100, H_max]`.
pub fn extract_b(curve: &impl Curve, window: (f64, f64), est: BEstimator, fit_tol: f64) -> Result<BEstimate> {
    let h_max = curve.h_range().1;
    let (lo, hi) = window;
    let slack = 1.0 + 1e-9;
    if !(lo < hi) || lo * slack < h_max / 100.0 || hi > h_max * slack {
        return Err(Error::Domain(format!("window [{lo:.3e}, {hi:.3e}] outside [H_max/100, H_max] with H_max = {h_max:.3e}")));
    }
    let hi = hi.min(h_max);
    let mut samples = Vec::with_capacity(WINDOW_SAMPLES);
    for i in 0..WINDOW_SAMPLES {
        let h = lo * (hi / lo).powf(i as f64 / (WINDOW_SAMPLES - 1) as f64);
        let s = curve.state(h).ok_or_else(|| Error::Domain(format!("H = {h:.3e} outside curve")))?;
        samples.push((h, ln_b_sample(&s, est)?));
    }
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > fit_tol {
        return Err(Error::WindowTooNoisy { spread, tol: fit_tol });
    }
    let ln_b = mean(&vals[WINDOW_SAMPLES / 2..]);
    Ok(BEstimate { ln_b, b: ln_b.exp(), spread, window: (lo, hi), estimator: est, samples })
}

/// `ln B(H) = c0 + c1 H^g` fitted over `window`; `c0` is the limit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LnBLimit {
    pub ln_b: f64,
    pub exponent: f64,
    pub rms: f64,
}

pub fn extrapolate_ln_b(curve: &impl Curve, window: (f64, f64)) -> Result<LnBLimit> {
    let npts = 80;
    let mut h = Vec::with_capacity(npts);
    let mut y = Vec::with_capacity(npts);
    for i in 0..npts {
        let x = window.0 * (window.1 / window.0).powf(i as f64 / (npts - 1) as f64);
        let s = curve.state(x).ok_or_else(|| Error::Domain(format!("H = {x:.3e} outside curve")))?;
        h.push(x);
        y.push(ln_b_sample(&s, BEstimator::CoxVoinov)?);
    }
    let fit_at = |g: f64| lstsq(npts, 2, |i, j| if j == 0 { 1.0 } else { h[i].powf(-g) }, &y);
    let g = golden_section(|g| fit_at(g).map(|f| f.rms).unwrap_or(f64::INFINITY), 0.05, 3.0, 1e-6);
    let f = fit_at(g)?;
    Ok(LnBLimit { ln_b: f.coef[0], exponent: -g, rms: f.rms })
}

/// Relative remainders below this are indistinguishable from round-off.
pub const REMAINDER_NOISE: f64 = 1e-11;

#[derive(Clone, Debug, Serialize)]
pub struct RemainderFit {
    /// Slope of `ln|R| + ln ln H` against `ln H`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Slope of `ln|R|` alone; the gap to `exponent` is the log-factor drift.
    pub raw_exponent: f64,
    pub window: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

/// Fit `R = psi / psi_CV(BH) - 1 ~ A H^e / ln H` over `window`.
pub fn remainder_fit(curve: &impl Curve, ln_b: f64, window: (f64, f64)) -> Result<RemainderFit> {
    let npts = 60;
    let mut samples = Vec::with_capacity(npts);
    for i in 0..npts {
        let h = window.0 * (window.1 / window.0).powf(i as f64 / (npts - 1) as f64);
        let s = curve.state(h).ok_or_else(|| Error::Domain(format!("H = {h:.3e} outside curve")))?;
        samples.push((h, s.psi / cox_voinov_psi(ln_b, h)? - 1.0));
    }
    if samples.iter().all(|s| s.1.abs() < REMAINDER_NOISE) {
        return Err(Error::ResidualBelowNoise);
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let raw: Vec<f64> = samples.iter().map(|s| s.1.abs().max(f64::MIN_POSITIVE).ln()).collect();
    let corrected: Vec<f64> = raw.iter().zip(&x).map(|(r, l)| r + l.ln()).collect();
    let fit = linear_fit(&x, &corrected)?;
    let raw_fit = linear_fit(&x, &raw)?;
    Ok(RemainderFit { exponent: fit.slope, amplitude: fit.intercept.exp(), raw_exponent: raw_fit.slope, window, samples })
}

#[derive(Clone, Debug, Serialize)]
pub struct XSamples {
    pub h: Vec<f64>,
    pub x: Vec<f64>,
    /// `dH/dx = sqrt(psi)`.
    pub slope: Vec<f64>,
}

impl XSamples {
    /// Rows `x, (dH/dx)^3, ln x` for plotting the angle law.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,dHdx_cubed,ln_x\n");
        for (x, d) in self.x.iter().zip(&self.slope) {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x, d.powi(3), x.ln()));
        }
        s
    }
}

/// `x(H) = H0/k + int_{H0}^H psi^{-1/2} dH` by Simpson's rule in `ln H`.
pub fn reconstruct_x(curve: &impl Curve, k: f64, points: usize) -> Result<XSamples> {
    let (h0, h1) = curve.h_range();
    let n = (points.max(3) - 1) / 2 * 2;
    let (t0, t1) = (h0.ln(), h1.ln());
    let dt = (t1 - t0) / n as f64;
    let mut out = XSamples { h: Vec::with_capacity(n / 2 + 1), x: Vec::with_capacity(n / 2 + 1), slope: Vec::with_capacity(n / 2 + 1) };
    let at = |i: usize| -> Result<(f64, f64)> {
        let h = if i == n { h1 } else { (t0 + dt * i as f64).exp() };
        let s = curve.state(h).ok_or_else(|| Error::QuadratureError(format!("no state at H = {h:.3e}")))?;
        if !(s.psi > 0.0) {
            return Err(Error::PsiNonpositive(h));
        }
        Ok((h, s.psi.sqrt()))
    };
    let (h, r) = at(0)?;
    let mut x = h0 / k;
    out.h.push(h);
    out.x.push(x);
    out.slope.push(r);
    let mut prev = h / r;
    for i in (2..=n).step_by(2) {
        let (hm, rm) = at(i - 1)?;
        let (h, r) = at(i)?;
        let cur = h / r;
        x += dt / 3.0 * (prev + 4.0 * hm / rm + cur);
        prev = cur;
        out.h.push(h);
        out.x.push(x);
        out.slope.push(r);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AngleLaw {
    /// Slope of `(dH/dx)^3` against `ln x`.
    pub slope: f64,
    /// Intercept, the estimate of `ln B`.
    pub intercept: f64,
    pub monotone: bool,
}

/// Fit `(dH/dx)^3 = a ln x + c` over the samples with `H` in `window`.
pub fn angle_law(xs: &XSamples, window: (f64, f64)) -> Result<AngleLaw> {
    let idx: Vec<usize> = (0..xs.h.len()).filter(|&i| xs.h[i] >= window.0 && xs.h[i] <= window.1).collect();
    if idx.len() < 3 {
        return Err(Error::InsufficientOverlap(format!("{} samples in the far window", idx.len())));
    }
    let lx: Vec<f64> = idx.iter().map(|&i| xs.x[i].ln()).collect();
    let c: Vec<f64> = idx.iter().map(|&i| xs.slope[i].powi(3)).collect();
    let fit = linear_fit(&lx, &c)?;
    let monotone = c.windows(2).all(|w| w[1] > w[0]) && lx.windows(2).all(|w| w[1] > w[0]);
    Ok(AngleLaw { slope: fit.slope, intercept: fit.intercept, monotone })
}

/// `ln` of the constant in the physical law
/// `(dH/dx)^3 = 3V ln(B (3V)^{1/3} x / lambda)`.
pub fn physical_law_log_constant(ln_b: f64, v: f64, lambda: f64) -> f64 {
    ln_b + (3.0 * v).ln() / 3.0 - lambda.ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureReport {
    /// Max of `|psi'_num / psi'_series - 1|` over `[H0, 100 H0]`.
    pub max_rel_dev: f64,
    pub window: (f64, f64),
    /// `psi'(H0)` and the finite limit `k^2 b` when `n < 2`.
    pub dpsi_h0: f64,
    pub contact_limit: Option<f64>,
    /// Fitted and predicted `ln H` coefficients of `psi'` when resonant.
    pub log_coef: Option<(f64, f64)>,
}

/// Compare `psi'` near the contact line with the series derivative.
pub fn pressure_expansion_report(profile: &Profile, cs: &ContactSeries) -> Result<PressureReport> {
    let h0 = profile.h_range().0;
    let window = (h0, 100.0 * h0);
    let k2 = profile.params.k * profile.params.k;
    let npts = 60;
    let mut hs = Vec::with_capacity(npts);
    let mut num = Vec::with_capacity(npts);
    let mut max_rel_dev = 0.0f64;
    for i in 0..npts {
        let h = h0 * 100f64.powf(i as f64 / (npts - 1) as f64);
        let s = profile.eval(h).ok_or_else(|| Error::Domain(format!("H = {h:.3e} outside profile")))?;
        let pred = k2 * cs.eval(profile.b, h)?.dmu;
        max_rel_dev = max_rel_dev.max((s.dpsi / pred - 1.0).abs());
        hs.push(h);
        num.push(s.dpsi);
    }
    let n = profile.params.n;
    let contact_limit = (n < 2.0).then(|| k2 * profile.b);
    let log_coef = match cs.class {
        ResonanceClass::Resonant { m: 1 } => {
            // psi' = a + c ln H + O(H ln^2 H)
            let f = lstsq(npts, 5, |i, j| {
                let (h, l) = (hs[i], hs[i].ln());
                [1.0, l, h, h * l, h * l * l][j]
            }, &num)?;
            Some((f.coef[1], k2 * cs.w_coeff([0, 0, 1])))
        }
        _ => None,
    };
    Ok(PressureReport { max_rel_dev, window, dpsi_h0: num[0], contact_limit, log_coef })
}

/// Exponents `(e, log power)` of the near-field terms of `mu`, excluding the
/// probe `H ln H`.
fn near_field_basis(n: f64, class: ResonanceClass, max_exp: f64) -> Vec<(f64, i32)> {
    let a = 3.0 - n;
    let mut out: Vec<(f64, i32)> = vec![];
    let pmax = if class == ResonanceClass::NonResonant { 0 } else { 3 };
    for j in 0..=4 {
        for l in 0..=((max_exp / a) as usize + 1) {
            for p in 0..=pmax {
                let e = j as f64 + a * l as f64 + p as f64;
                if j + l + p == 0 || e > max_exp + 1e-9 || (p as f64) > e {
                    continue;
                }
                let key = (e, p as i32);
                if key == (1.0, 1) || out.iter().any(|o| (o.0 - e).abs() < 1e-9 && o.1 == key.1) {
                    continue;
                }
                out.push(key);
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct LogProbe {
    /// Coefficient of `H ln H` in `mu = psi/k^2 - 1`.
    pub coef: f64,
    pub stderr: f64,
    /// `|coef| / stderr`.
    pub significance: f64,
    pub rms: f64,
    pub window: (f64, f64),
    pub columns: usize,
}

/// Floor on the per-sample noise of `mu` used for the probe's error bar.
pub const PROBE_NOISE_FLOOR: f64 = 1e-13;

/// Least-squares test for an `H ln H` term in `mu` over `window`.
pub fn log_term_probe(profile: &Profile, window: (f64, f64)) -> Result<LogProbe> {
    let p = &profile.params;
    let k2 = p.k * p.k;
    let basis = near_field_basis(p.n, crate::model::resonance_class(p.n), 3.0);
    let npts = 200;
    let mut h = Vec::with_capacity(npts);
    let mut mu = Vec::with_capacity(npts);
    for i in 0..npts {
        let x = window.0 * (window.1 / window.0).powf(i as f64 / (npts - 1) as f64);
        let s = profile.eval(x).ok_or_else(|| Error::Domain(format!("H = {x:.3e} outside profile")))?;
        h.push(x);
        mu.push(s.psi / k2 - 1.0);
    }
    let cols = basis.len() + 1;
    let f = lstsq(npts, cols, |i, j| {
        if j == 0 {
            h[i] * h[i].ln()
        } else {
            let (e, q) = basis[j - 1];
            h[i].powf(e) * h[i].ln().powi(q)
        }
    }, &mu)?;
    let noise = f.rms.max(PROBE_NOISE_FLOOR);
    let stderr = if f.rms > 0.0 { f.stderr[0] * noise / f.rms } else { f64::INFINITY };
    Ok(LogProbe { coef: f.coef[0], stderr, significance: f.coef[0].abs() / stderr, rms: f.rms, window, columns: cols })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchResult {
    pub n: f64,
    pub k: f64,
    pub b_cg: f64,
    pub big_b: f64,
    pub ln_b: f64,
    pub ln_b_uncertainty: f64,
    pub ln_b_sequence: Vec<(f64, f64)>,
    pub remainder: Option<RemainderFit>,
    pub windows: MatchWindows,
    pub bracket_only: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MatchWindows {
    pub b_window: (f64, f64),
    pub remainder_window: (f64, f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MatchConfig {
    pub estimator: BEstimator,
    pub fit_tol: f64,
    pub remainder: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { estimator: BEstimator::CoxVoinov, fit_tol: 0.05, remainder: true }
    }
}

/// Window for the remainder fit: from `1e2` to `H_max/10`.
pub fn remainder_window(h_max: f64) -> (f64, f64) {
    (1e2, (h_max / 10.0).max(1e3))
}

pub fn match_profile(profile: &Profile, b_cg: f64, bracket_only: bool, cfg: &MatchConfig) -> Result<MatchResult> {
    let h_max = profile.h_range().1;
    let b_window = (h_max / 100.0, h_max);
    let est = extract_b(profile, b_window, cfg.estimator, cfg.fit_tol)?;
    let rw = remainder_window(h_max);
    let remainder = if cfg.remainder {
        let lim = extrapolate_ln_b(profile, (rw.0, h_max))?;
        match remainder_fit(profile, lim.ln_b, rw) {
            Ok(r) => Some(r),
            Err(Error::ResidualBelowNoise) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(MatchResult {
        n: profile.params.n,
        k: profile.params.k,
        b_cg,
        big_b: est.b,
        ln_b: est.ln_b,
        ln_b_uncertainty: est.spread,
        ln_b_sequence: est.samples,
        remainder,
        windows: MatchWindows { b_window: est.window, remainder_window: rw },
        bracket_only,
    })
}

/// Shoot and match for one parameter set.
pub fn solve_and_match(params: &Params, shoot: &ShootConfig, cfg: &MatchConfig) -> Result<(MatchResult, Profile)> {
    let cs = ContactSeries::new(params, shoot.degree)?;
    let res = shoot_b_with(params, shoot, &cs)?;
    let m = match_profile(&res.profile, res.b_cg, res.bracket_only, cfg)?;
    Ok((m, res.profile))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub b_cg: Option<f64>,
    pub big_b: Option<f64>,
    pub db_dk: Option<f64>,
    pub dbig_b_dk: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub n: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let mut s = String::from("k,b_cg,B_cg,dB_dk\n");
        for r in &self.rows {
            s.push_str(&format!("{:.16e},{},{},{}\n", r.k, f(r.b_cg), f(r.big_b), f(r.dbig_b_dk)));
        }
        s
    }

    pub fn row(&self, k: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.k - k).abs() < 1e-12)
    }
}

/// `k` values `lo + i (hi - lo)/(count - 1)`.
pub fn k_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// Shoot and match at each `k` in parallel, then take centred differences.
pub fn sweep_k(base: &Params, ks: &[f64], shoot: &ShootConfig, cfg: &MatchConfig) -> Result<SweepTable> {
    if ks.len() < 5 {
        return Err(Error::Domain(format!("sweep needs at least 5 k values, got {}", ks.len())));
    }
    if ks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("k values must be strictly increasing".into()));
    }
    let cfg = MatchConfig { remainder: false, ..*cfg };
    let mut rows: Vec<SweepRow> = ks
        .par_iter()
        .map(|&k| {
            let r = base.with_k(k).and_then(|p| solve_and_match(&p, shoot, &cfg));
            match r {
                Ok((m, _)) => SweepRow { k, b_cg: Some(m.b_cg), big_b: Some(m.big_b), db_dk: None, dbig_b_dk: None, error: None },
                Err(e) => SweepRow { k, b_cg: None, big_b: None, db_dk: None, dbig_b_dk: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    for i in 1..rows.len().saturating_sub(1) {
        let (a, c) = (&rows[i - 1], &rows[i + 1]);
        let dk = c.k - a.k;
        let d = |x: Option<f64>, y: Option<f64>| Some((y? - x?) / dk);
        let (db, dbb) = (d(a.b_cg, c.b_cg), d(a.big_b, c.big_b));
        rows[i].db_dk = db;
        rows[i].dbig_b_dk = dbb;
    }
    Ok(SweepTable { n: base.n, rows })
}

/// Thread count from `TW_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("TW_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Run `f` on a pool sized by `TW_THREADS` (default: rayon's choice).
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match threads_from_env().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
