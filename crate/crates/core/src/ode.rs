//! Dormand-Prince 5(4) integrator with continuous output and terminal events.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step relative to `max(|t|, 1)`.
    pub h_min_rel: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-10, atol: 1e-12, h_min_rel: 1e-14, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

impl Options {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Options { rtol, atol, ..Default::default() }
    }
}

/// Quartic interpolant over one accepted step.
#[derive(Clone, Debug)]
pub struct Segment<const D: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> Segment<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; D];
        for i in 0..D {
            let r = &self.r;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub min_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Finished,
    Event,
}

#[derive(Clone, Debug)]
pub struct Solution<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub segments: Vec<Segment<D>>,
    pub stats: Stats,
    pub stop: Stop,
}

impl<const D: usize> Solution<D> {
    pub fn last(&self) -> (f64, [f64; D]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }

    /// Continuous output anywhere inside the integrated range.
    pub fn eval(&self, t: f64) -> Option<[f64; D]> {
        let (t0, t1) = (self.t[0], *self.t.last().unwrap());
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if t < lo || t > hi {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.y[0]);
        }
        let forward = t1 >= t0;
        let i = self.t.partition_point(|&s| if forward { s <= t } else { s >= t });
        let i = i.clamp(1, self.segments.len()) - 1;
        Some(self.segments[i].eval(t))
    }
}

fn err_norm<const D: usize>(e: &[f64; D], y0: &[f64; D], y1: &[f64; D], o: &Options) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        s += (e[i] / sc).powi(2);
    }
    (s / D as f64).sqrt()
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `event`, when given, is watched after each accepted step; the first
/// transition from positive to non-positive is located on the interpolant
/// and terminates the integration there.
pub fn integrate<const D: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: &Options,
    event: Option<&dyn Fn(f64, &[f64; D]) -> f64>,
) -> Result<Solution<D>>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut sol = Solution { t: vec![t0], y: vec![y0], segments: Vec::new(), stats: Stats::default(), stop: Stop::Finished };
    sol.stats.min_step = f64::INFINITY;
    if t_end == t0 {
        sol.stats.min_step = 0.0;
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    sol.stats.evaluations += 1;
    let mut h = dir * initial_step(&mut f, t, &y, &k1, dir, opts)?.min((t_end - t0).abs());
    let mut g_prev = event.map(|g| g(t, &y));

    loop {
        if sol.stats.accepted + sol.stats.rejected >= opts.max_steps {
            return Err(Error::NoConvergence(opts.max_steps));
        }
        let h_floor = opts.h_min_rel * t.abs().max(1.0);
        if h.abs() < h_floor {
            return Err(Error::StepFailure { t, h: h.abs() });
        }
        let last = (t + h - t_end) * dir >= 0.0;
        if last {
            h = t_end - t;
        }
        let stage = (|| -> Result<_> {
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
            let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        sol.stats.evaluations += 6;
        let (_k2, k3, k4, k5, k6, k7, y1) = match stage {
            Ok(v) => v,
            // a trial point left the domain of f: retry with a smaller step
            Err(Error::SqrtDomain(_)) | Err(Error::Domain(_)) => {
                sol.stats.rejected += 1;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut e = [0.0; D];
        for i in 0..D {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = err_norm(&e, &y, &y1, opts);
        if !err.is_finite() || err > 1.0 {
            sol.stats.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
            h *= fac;
            continue;
        }

        let mut r = [[0.0; D]; 5];
        for i in 0..D {
            let dy = y1[i] - y[i];
            let bspl = h * k1[i] - dy;
            r[0][i] = y[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let seg = Segment { t0: t, h, r };
        sol.stats.accepted += 1;
        sol.stats.min_step = sol.stats.min_step.min(h.abs());
        let t1 = if last { t_end } else { t + h };

        if let (Some(g), Some(gp)) = (event, g_prev) {
            let g1 = g(t1, &y1);
            if gp > 0.0 && g1 <= 0.0 {
                let te = locate(&seg, g, t, t1);
                let ye = seg.eval(te);
                sol.segments.push(seg);
                sol.t.push(te);
                sol.y.push(ye);
                sol.stop = Stop::Event;
                return Ok(sol);
            }
            g_prev = Some(g1);
        }

        sol.segments.push(seg);
        sol.t.push(t1);
        sol.y.push(y1);
        if last {
            return Ok(sol);
        }
        t = t1;
        y = y1;
        k1 = k7;
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h = dir * (h.abs() * fac).min(opts.h_max);
    }
}

/// Bisection for the sign change of `g` on the step interpolant.
fn locate<const D: usize>(seg: &Segment<D>, g: &dyn Fn(f64, &[f64; D]) -> f64, ta: f64, tb: f64) -> f64 {
    let (mut a, mut b) = (ta, tb);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(m, &seg.eval(m)) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

fn initial_step<const D: usize, F>(f: &mut F, t: f64, y: &[f64; D], f0: &[f64; D], dir: f64, o: &Options) -> Result<f64>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let norm = |v: &[f64; D]| {
        let mut s = 0.0;
        for i in 0..D {
            let sc = o.atol + o.rtol * y[i].abs();
            s += (v[i] / sc).powi(2);
        }
        (s / D as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let f1 = match f(t + dir * h0, &y1) {
        Ok(v) => v,
        Err(_) => return Ok(h0 * 1e-3),
    };
    let mut df = [0.0; D];
    for i in 0..D {
        df[i] = f1[i] - f0[i];
    }
    let d2 = norm(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1).min(o.h_max))
}
