//! Adaptive ODE integration with dense output and event location.
//!
//! Default method is Dormand–Prince 5(4) with PI step control. On step-size
//! underflow the integration restarts from the last accepted state with an
//! L-stable, stiffly accurate 3-stage SDIRK scheme (Alexander, order 3)
//! with step-doubling error control.

use crate::error::{Error, Result};
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Explicit,
    Implicit,
    /// Explicit, switching to implicit on stiffness failure.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub h_max: f64,
    /// Relative step floor: `h < h_min_rel * max(1, |t|)` is an underflow.
    pub h_min_rel: f64,
    pub max_steps: usize,
    pub record: bool,
    pub method: Method,
    pub event_ttol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            h_min_rel: 1e-13,
            max_steps: 2_000_000,
            record: false,
            method: Method::Auto,
            event_ttol: 1e-12,
        }
    }
}

impl OdeOptions {
    pub fn tight() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() }
    }
}

/// Scalar event function `g(t, z)`; a crossing of zero is reported.
pub struct Event<'a, const N: usize> {
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// +1: only increasing crossings, -1: only decreasing, 0: both.
    pub direction: i8,
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(g: impl Fn(f64, &[f64; N]) -> f64 + 'a, direction: i8, terminal: bool) -> Self {
        Event { g: Box::new(g), direction, terminal }
    }

    /// Crossing of the hyperplane `z[k] = level`.
    pub fn coordinate(k: usize, level: f64, direction: i8, terminal: bool) -> Self {
        Event::new(move |_, z: &[f64; N]| z[k] - level, direction, terminal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub z: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// A terminal event fired.
    Event(usize),
    /// Reached the end of the time budget.
    Finished,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub z: Vec<[f64; N]>,
    pub events: Vec<EventHit<N>>,
    pub status: Status,
    pub t_final: f64,
    pub z_final: [f64; N],
    pub steps: usize,
    pub rejected: usize,
    pub used_implicit: bool,
}

impl<const N: usize> Solution<N> {
    pub fn first_event(&self, index: usize) -> Option<&EventHit<N>> {
        self.events.iter().find(|e| e.index == index)
    }
}

// Dormand–Prince 5(4) tableau.
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

#[derive(Clone, Copy)]
enum Dense<const N: usize> {
    Dopri { t0: f64, h: f64, r: [[f64; N]; 5] },
    Hermite { t0: f64, h: f64, y0: [f64; N], y1: [f64; N], f0: [f64; N], f1: [f64; N] },
}

impl<const N: usize> Dense<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let mut out = [0.0; N];
        match self {
            Dense::Dopri { t0, h, r } => {
                let th = (t - t0) / h;
                let th1 = 1.0 - th;
                for i in 0..N {
                    out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
                }
            }
            Dense::Hermite { t0, h, y0, y1, f0, f1 } => {
                let s = (t - t0) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                for i in 0..N {
                    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
                }
            }
        }
        out
    }
}

#[inline]
fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn err_norm<const N: usize>(e: &[f64; N], y0: &[f64; N], y1: &[f64; N], rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        s += (e[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

struct Stepper<'f, const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> {
    f: &'f F,
    opts: OdeOptions,
    facold: f64,
}

struct Step<const N: usize> {
    y1: [f64; N],
    f1: [f64; N],
    err: f64,
    dense: Dense<N>,
}

impl<'f, const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> Stepper<'f, N, F> {
    fn dopri(&self, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Step<N> {
        let f = self.f;
        let k2 = f(t + C2 * h, &lin(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &lin(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &lin(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &lin(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &lin(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = lin(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);
        let mut e = [0.0; N];
        for i in 0..N {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = err_norm(&e, y, &y1, self.opts.rtol, self.opts.atol);
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Step { y1, f1: k7, err, dense: Dense::Dopri { t0: t, h, r } }
    }

    fn jacobian(&self, t: f64, y: &[f64; N], fy: &[f64; N]) -> [[f64; N]; N] {
        let mut j = [[0.0; N]; N];
        for c in 0..N {
            let dh = 1e-8 * y[c].abs().max(1e-5);
            let mut yp = *y;
            yp[c] += dh;
            let fp = (self.f)(t, &yp);
            for r in 0..N {
                j[r][c] = (fp[r] - fy[r]) / dh;
            }
        }
        j
    }

    /// One SDIRK step of size `h`; `None` when Newton fails.
    fn sdirk(&self, t: f64, y: &[f64; N], fy: &[f64; N], h: f64) -> Option<[f64; N]> {
        const G: f64 = 0.435_866_521_508_459;
        let b1 = -(6.0 * G * G - 16.0 * G + 1.0) / 4.0;
        let b2 = (6.0 * G * G - 20.0 * G + 5.0) / 4.0;
        let c = [G, 0.5 * (1.0 + G), 1.0];
        let a = [[G, 0.0, 0.0], [0.5 * (1.0 - G), G, 0.0], [b1, b2, G]];
        let jac = self.jacobian(t, y, fy);
        let mut m = [[0.0; N]; N];
        for r in 0..N {
            for cc in 0..N {
                m[r][cc] = if r == cc { 1.0 } else { 0.0 } - h * G * jac[r][cc];
            }
        }
        let lu = lu_decompose(m)?;
        let mut ks: [[f64; N]; 3] = [[0.0; N]; 3];
        for s in 0..3 {
            let mut base = *y;
            for j in 0..s {
                for i in 0..N {
                    base[i] += h * a[s][j] * ks[j][i];
                }
            }
            let mut ys = if s == 0 { *y } else { lin(&base, h, &[(G, &ks[s - 1])]) };
            let mut ok = false;
            for _ in 0..12 {
                let fs = (self.f)(t + c[s] * h, &ys);
                let mut res = [0.0; N];
                for i in 0..N {
                    res[i] = -(ys[i] - base[i] - h * G * fs[i]);
                }
                let dy = lu_solve(&lu, res);
                let mut small = true;
                for i in 0..N {
                    ys[i] += dy[i];
                    let sc = self.opts.atol + self.opts.rtol * ys[i].abs();
                    if dy[i].abs() > 1e-3 * sc {
                        small = false;
                    }
                }
                if ys.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                if small {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return None;
            }
            let fs = (self.f)(t + c[s] * h, &ys);
            ks[s] = fs;
        }
        // Stiffly accurate: the last stage value is the step result.
        let mut y1 = *y;
        for s in 0..3 {
            for i in 0..N {
                y1[i] += h * a[2][s] * ks[s][i];
            }
        }
        Some(y1)
    }

    fn implicit_step(&self, t: f64, y: &[f64; N], fy: &[f64; N], h: f64) -> Option<Step<N>> {
        let big = self.sdirk(t, y, fy, h)?;
        let half = self.sdirk(t, y, fy, 0.5 * h)?;
        let fh = (self.f)(t + 0.5 * h, &half);
        let y1 = self.sdirk(t + 0.5 * h, &half, &fh, 0.5 * h)?;
        let mut e = [0.0; N];
        for i in 0..N {
            e[i] = (y1[i] - big[i]) / 7.0;
        }
        // Filter the estimate through (I - hγJ)^{-1} so stiff decaying modes
        // do not dominate it.
        let jac = self.jacobian(t, y, fy);
        let mut m = [[0.0; N]; N];
        for r in 0..N {
            for c in 0..N {
                m[r][c] = if r == c { 1.0 } else { 0.0 } - h * 0.435_866_521_508_459 * jac[r][c];
            }
        }
        if let Some(lu) = lu_decompose(m) {
            e = lu_solve(&lu, e);
        }
        let err = err_norm(&e, y, &y1, self.opts.rtol, self.opts.atol);
        let f1 = (self.f)(t + h, &y1);
        Some(Step { y1, f1, err, dense: Dense::Hermite { t0: t, h, y0: *y, y1, f0: *fy, f1 } })
    }

    fn initial_step(&self, t: f64, y: &[f64; N], f0: &[f64; N], order: f64) -> f64 {
        let sc = |i: usize| self.opts.atol + self.opts.rtol * y[i].abs();
        let d0 = (0..N).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..N).map(|i| (f0[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = lin(y, h0, &[(1.0, f0)]);
        let f1 = (self.f)(t + h0, &y1);
        let d2 = (0..N).map(|i| ((f1[i] - f0[i]) / sc(i)).powi(2)).sum::<f64>().sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / order)
        };
        (100.0 * h0).min(h1).min(self.opts.h_max)
    }
}

fn lu_decompose<const N: usize>(mut m: [[f64; N]; N]) -> Option<([[f64; N]; N], [usize; N])> {
    let mut piv = [0usize; N];
    for (i, p) in piv.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..N {
        let (mut best, mut bv) = (k, m[k][k].abs());
        for r in k + 1..N {
            if m[r][k].abs() > bv {
                best = r;
                bv = m[r][k].abs();
            }
        }
        if bv == 0.0 || !bv.is_finite() {
            return None;
        }
        m.swap(k, best);
        piv.swap(k, best);
        for r in k + 1..N {
            let f = m[r][k] / m[k][k];
            m[r][k] = f;
            for c in k + 1..N {
                m[r][c] -= f * m[k][c];
            }
        }
    }
    Some((m, piv))
}

fn lu_solve<const N: usize>(lu: &([[f64; N]; N], [usize; N]), b: [f64; N]) -> [f64; N] {
    let (m, piv) = lu;
    let mut x = [0.0; N];
    for i in 0..N {
        x[i] = b[piv[i]];
    }
    for i in 0..N {
        for j in 0..i {
            x[i] -= m[i][j] * x[j];
        }
    }
    for i in (0..N).rev() {
        for j in i + 1..N {
            x[i] -= m[i][j] * x[j];
        }
        x[i] /= m[i][i];
    }
    x
}

/// Integrates `z' = f(t, z)` from `t0` to `t_end > t0`, stopping at the first
/// terminal event.
pub fn solve<const N: usize, F>(
    f: F,
    t0: f64,
    z0: [f64; N],
    t_end: f64,
    events: &[Event<'_, N>],
    opts: OdeOptions,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(t_end > t0) {
        return Err(Error::Input(format!("time budget must be positive ({t0} -> {t_end})")));
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain { x: z0[0], y: if N > 1 { z0[1] } else { f64::NAN } });
    }
    let mut st = Stepper { f: &f, opts, facold: 1e-4 };
    let mut implicit = opts.method == Method::Implicit;
    let mut sol = Solution {
        t: vec![],
        z: vec![],
        events: vec![],
        status: Status::Finished,
        t_final: t0,
        z_final: z0,
        steps: 0,
        rejected: 0,
        used_implicit: implicit,
    };
    if opts.record {
        sol.t.push(t0);
        sol.z.push(z0);
    }
    let mut t = t0;
    let mut y = z0;
    let mut fy = f(t, &y);
    let mut g_old: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut h = opts.h0.unwrap_or_else(|| st.initial_step(t, &y, &fy, if implicit { 3.0 } else { 5.0 }));
    let mut last_rejected = false;

    while t < t_end {
        if sol.steps >= opts.max_steps {
            return Err(Error::NoReturn(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h < opts.h_min_rel * t.abs().max(1.0) {
            if opts.method == Method::Auto && !implicit {
                implicit = true;
                sol.used_implicit = true;
                h = (1e3 * opts.h_min_rel * t.abs().max(1.0)).max(h);
                continue;
            }
            return Err(Error::StiffnessFailure(format!("h = {h:e} at t = {t}")));
        }
        let step = if implicit {
            match st.implicit_step(t, &y, &fy, h) {
                Some(s) => s,
                None => {
                    h *= 0.25;
                    sol.rejected += 1;
                    continue;
                }
            }
        } else {
            st.dopri(t, &y, &fy, h)
        };
        let order = if implicit { 3.0 } else { 5.0 };
        if step.err.is_finite() && step.err <= 1.0 && step.y1.iter().all(|v| v.is_finite()) {
            let t_new = if last { t_end } else { t + h };
            sol.steps += 1;
            // Events on the accepted step.
            let mut first: Option<(f64, usize)> = None;
            let mut found: Vec<(f64, usize)> = vec![];
            for (k, ev) in events.iter().enumerate() {
                let a = g_old[k];
                let b = (ev.g)(t_new, &step.y1);
                let crossed = (a * b < 0.0) || (b == 0.0 && a != 0.0);
                let dir_ok = match ev.direction {
                    1 => a < 0.0,
                    -1 => a > 0.0,
                    _ => true,
                };
                if crossed && dir_ok {
                    let dense = step.dense;
                    let gk = |s: f64| {
                        if s >= t_new {
                            b
                        } else if s <= t {
                            a
                        } else {
                            (ev.g)(s, &dense.eval(s))
                        }
                    };
                    let tc = if b == 0.0 { t_new } else { brent(gk, t, t_new, opts.event_ttol, 200)? };
                    found.push((tc, k));
                    if ev.terminal && first.is_none_or(|(tf, _)| tc < tf) {
                        first = Some((tc, k));
                    }
                }
                g_old[k] = b;
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (tc, k) in found {
                if let Some((tf, _)) = first {
                    if tc > tf {
                        continue;
                    }
                }
                let zc = if tc == t_new { step.y1 } else { step.dense.eval(tc) };
                sol.events.push(EventHit { index: k, t: tc, z: zc });
            }
            if let Some((tf, k)) = first {
                let zc = if tf == t_new { step.y1 } else { step.dense.eval(tf) };
                if opts.record {
                    sol.t.push(tf);
                    sol.z.push(zc);
                }
                sol.status = Status::Event(k);
                sol.t_final = tf;
                sol.z_final = zc;
                return Ok(sol);
            }
            t = t_new;
            y = step.y1;
            fy = step.f1;
            if opts.record {
                sol.t.push(t);
                sol.z.push(y);
            }
            // PI controller.
            let beta = if implicit { 0.0 } else { 0.04 };
            let expo = 1.0 / order - 0.75 * beta;
            let fac11 = step.err.max(1e-16).powf(expo);
            let mut fac = fac11 / st.facold.powf(beta);
            fac = (fac / 0.9).clamp(0.2, 10.0);
            let mut hnew = (h / fac).min(opts.h_max);
            if last_rejected {
                hnew = hnew.min(h);
            }
            st.facold = step.err.max(1e-4);
            last_rejected = false;
            h = hnew;
        } else {
            sol.rejected += 1;
            last_rejected = true;
            let e = if step.err.is_finite() { step.err } else { 1e10 };
            h /= (e.powf(1.0 / order) / 0.9).clamp(1.0, 5.0).max(1.5);
        }
    }
    sol.t_final = t;
    sol.z_final = y;
    Ok(sol)
}
