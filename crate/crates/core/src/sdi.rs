//! Slow divergence integrals I±, their composites J± and Ī±, the center
//! closed form and zero finding.

use crate::error::{Error, Result};
use crate::psvf::{half_return_minus, half_return_plus, PiecewiseSystem};
use crate::quad::{integrate, QuadOptions};
use crate::roots::{brent, newton_polish};
use crate::slowfast::CriticalData;
use crate::transition::TransitionFunction;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// I±(x₂) = −∫_{x₂}^0 F′(s)²/G(s) ds; zero at x₂ = 0.
pub fn sdi_branch(c: &CriticalData, x2: f64) -> Result<f64> {
    sdi_branch_with(c, x2, QuadOptions::default())
}

pub fn sdi_branch_with(c: &CriticalData, x2: f64, opts: QuadOptions) -> Result<f64> {
    if x2 == 0.0 {
        return Ok(0.0);
    }
    if x2 > c.m2 || x2 < -c.m1 || !x2.is_finite() {
        return Err(Error::Precondition(format!("x2 = {x2} outside [-{}, {}]", c.m1, c.m2)));
    }
    let mut bad = None;
    let r = integrate(
        |s| {
            if s == 0.0 {
                return 0.0;
            }
            let g = c.g(s);
            if g * s >= 0.0 {
                bad = Some(s);
            }
            let d = c.df(s);
            d * d / g
        },
        x2,
        0.0,
        opts,
    )?;
    if let Some(s) = bad {
        return Err(Error::AssumptionsFail(format!("G vanishes or changes sign at {s}")));
    }
    Ok(-r.value)
}

/// Solution of F(x₂) = y on the branch of sign `side`.
pub fn fiber_point(c: &CriticalData, y: f64, side: f64) -> Result<f64> {
    let end = if side > 0.0 { c.m2 } else { -c.m1 };
    let top = c.f(end);
    if !(y > 0.0) || y > top {
        return Err(Error::FiberOutOfRange { y, lo: 0.0, hi: top });
    }
    let f = |x: f64| c.f(x) - y;
    let x0 = brent(f, 0.0, end, 1e-15, 300)?;
    let (lo, up) = if end > 0.0 { (0.0, end) } else { (end, 0.0) };
    Ok(newton_polish(f, |x| c.df(x), x0, lo, up, 3))
}

/// Solutions x₂⁺ > 0 and x₂⁻ < 0 of F(x₂) = y.
pub fn fiber_endpoints(c: &CriticalData, y: f64) -> Result<(f64, f64)> {
    let (fp, fm) = (c.f(c.m2), c.f(-c.m1));
    if !(y > 0.0) || y > fp.min(fm) {
        return Err(Error::FiberOutOfRange { y, lo: 0.0, hi: fp.min(fm) });
    }
    Ok((fiber_point(c, y, 1.0)?, fiber_point(c, y, -1.0)?))
}

/// J⁺(y) = I⁺(x₂⁺(ξ_X(y))), J⁻(y) = I⁻(x₂⁻(ξ_Y(y))).
pub fn j_pair(c: &CriticalData, system: &PiecewiseSystem, y: f64) -> Result<(f64, f64)> {
    let xp = half_return_plus(system, y)?.y;
    let xm = half_return_minus(system, y)?.y;
    let p = fiber_endpoints(c, xp)?.0;
    let m = fiber_endpoints(c, xm)?.1;
    Ok((sdi_branch(c, p)?, sdi_branch(c, m)?))
}

/// Ī±(y) = I±(x₂±(y)).
pub fn ibar_pair(c: &CriticalData, y: f64) -> Result<(f64, f64)> {
    let (p, m) = fiber_endpoints(c, y)?;
    Ok((sdi_branch(c, p)?, sdi_branch(c, m)?))
}

/// Ī⁺(y) − J⁻(y) when y^X > y^Y, J⁺(y) − Ī⁻(y) otherwise, for y strictly
/// between the tangency heights.
pub fn dodging_i(c: &CriticalData, system: &PiecewiseSystem, y: f64) -> Result<f64> {
    let (yx, yy) = c.comb.tangency_heights(0.0);
    let (lo, hi) = (yx.min(yy), yx.max(yy));
    if !(y > lo && y < hi) {
        return Err(Error::NotDodgingLevel(y));
    }
    if yx > yy {
        let ip = sdi_branch(c, fiber_point(c, y, 1.0)?)?;
        let xm = half_return_minus(system, y)?.y;
        Ok(ip - sdi_branch(c, fiber_point(c, xm, -1.0)?)?)
    } else {
        let xp = half_return_plus(system, y)?.y;
        let jp = sdi_branch(c, fiber_point(c, xp, 1.0)?)?;
        Ok(jp - sdi_branch(c, fiber_point(c, y, -1.0)?)?)
    }
}

/// s with φ(s) = u on the branch of sign `side`.
fn phi_inverse(phi: &TransitionFunction, u: f64, side: f64) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| phi.value(s) - u;
    let (lo, hi) = if side > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
    let s = brent(f, lo, hi, 1e-16, 300)?;
    Ok(newton_polish(f, |s| phi.d1(s), s, lo, hi, 3))
}

/// L(x) < 0 with φ²(L(x)) = φ²(x).
pub fn mirror_point(phi: &TransitionFunction, x: f64) -> Result<f64> {
    phi_inverse(phi, -phi.value(x), -1.0).map_err(|_| Error::FiberOutOfRange { y: x, lo: 0.0, hi: 1.0 })
}

/// I(x) = 4∫ₓ^{L(x)} φ φ′² ds, evaluated in the form
/// −4∫₀^{φ(x)} u [φ′(φ⁻¹(u)) − φ′(φ⁻¹(−u))] du.
pub fn center_closed_form(phi: &TransitionFunction, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Precondition(format!("x = {x} outside (0, 1)")));
    }
    mirror_point(phi, x)?;
    let top = phi.value(x);
    let mut err = None;
    let opts = QuadOptions { rtol: 1e-10, atol: 2.0 * f64::EPSILON * top * top, max_intervals: 4000 };
    let r = integrate(
        |u| {
            if u == 0.0 {
                return 0.0;
            }
            match (phi_inverse(phi, u, 1.0), phi_inverse(phi, -u, -1.0)) {
                (Ok(sp), Ok(sm)) => u * (phi.d1(sp) - phi.d1(sm)),
                (Err(e), _) | (_, Err(e)) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        0.0,
        top,
        opts,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(-4.0 * r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    Simple,
    SuspectedMultiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub location: f64,
    pub residual: f64,
    pub derivative: f64,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    pub window: (f64, f64),
    pub zeros: Vec<Zero>,
    /// Every sample was below `ZeroOptions::degenerate_tol` in magnitude.
    pub degenerate: bool,
}

impl ZeroSet {
    pub fn simple(&self) -> impl Iterator<Item = &Zero> {
        self.zeros.iter().filter(|z| z.multiplicity == Multiplicity::Simple)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroOptions {
    pub grid_n: usize,
    pub xtol: f64,
    /// Relative threshold on |f′| against the median grid slope.
    pub slope_ratio: f64,
    pub degenerate_tol: f64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions { grid_n: 2000, xtol: 1e-10, slope_ratio: 1e-3, degenerate_tol: 1e-14 }
    }
}

/// Sign-change scan on a uniform grid, Brent refinement, and detection of
/// touching zeros at local minima of |f|.
pub fn find_zeros<F: Fn(f64) -> f64 + Sync>(f: F, window: (f64, f64), grid_n: usize) -> ZeroSet {
    find_zeros_with(f, window, ZeroOptions { grid_n, ..Default::default() })
}

pub fn find_zeros_with<F: Fn(f64) -> f64 + Sync>(f: F, window: (f64, f64), o: ZeroOptions) -> ZeroSet {
    let (lo, hi) = window;
    let n = o.grid_n.max(4);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let finite: Vec<f64> = vs.iter().copied().filter(|v| v.is_finite()).collect();
    let fmax = finite.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = ZeroSet { window, zeros: Vec::new(), degenerate: false };
    if finite.is_empty() || fmax <= o.degenerate_tol {
        out.degenerate = !finite.is_empty();
        return out;
    }
    let dx = (hi - lo) / n as f64;
    let mut slopes: Vec<f64> = vs
        .windows(2)
        .filter(|w| w[0].is_finite() && w[1].is_finite())
        .map(|w| (w[1] - w[0]).abs() / dx)
        .collect();
    slopes.sort_by(f64::total_cmp);
    let slope_scale = slopes.get(slopes.len() / 2).copied().unwrap_or(0.0);
    let h = dx * 1e-2;
    let deriv = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let mut push = |x: f64, simple_sign: bool| {
        let d = deriv(x);
        let simple = simple_sign && d.abs() > o.slope_ratio * slope_scale;
        out.zeros.push(Zero {
            location: x,
            residual: f(x),
            derivative: d,
            multiplicity: if simple { Multiplicity::Simple } else { Multiplicity::SuspectedMultiple },
        });
    };
    for i in 0..n {
        let (a, b) = (vs[i], vs[i + 1]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        if a == 0.0 {
            // Exact grid hit: a zero when the neighbours straddle it or touch it.
            let prev = if i > 0 { vs[i - 1] } else { b };
            if i > 0 || prev * b < 0.0 {
                push(xs[i], prev * b < 0.0);
            }
            continue;
        }
        if a * b < 0.0 {
            if let Ok(x) = brent(&f, xs[i], xs[i + 1], o.xtol, 200) {
                push(x, true);
            }
            continue;
        }
        // Touching zero: interior local minimum of |f| that nearly vanishes.
        if i > 0 && b != 0.0 {
            let p = vs[i - 1];
            if p.is_finite() && a.abs() < p.abs() && a.abs() < b.abs() && p * a > 0.0 {
                let x = golden_min(|x| f(x).abs(), xs[i - 1], xs[i + 1], o.xtol);
                let fx = f(x).abs();
                if fx <= 1e-9 * fmax {
                    push(x, false);
                }
            }
        }
    }
    if let Some(&last) = vs.last() {
        if last == 0.0 && n > 0 && vs[n - 1] != 0.0 {
            push(xs[n], false);
        }
    }
    out
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Critical data bundled with the PSVF at α = 0 and the small-cycle ceiling y*.
#[derive(Debug, Clone)]
pub struct SdiProfile {
    pub critical: Arc<CriticalData>,
    pub system: PiecewiseSystem,
    pub y_star: f64,
}

/// 0.9·min(F(M₂), F(−M₁), y^X, y^Y).
pub fn default_y_star(c: &CriticalData) -> f64 {
    let (yx, yy) = c.comb.tangency_heights(0.0);
    0.9 * c.fiber_ceiling().min(yx).min(yy)
}

impl SdiProfile {
    pub fn new(critical: Arc<CriticalData>) -> Self {
        let system = critical.comb.psvf(0.0);
        let y_star = default_y_star(&critical);
        SdiProfile { critical, system, y_star }
    }

    pub fn i_plus(&self, x2: f64) -> Result<f64> {
        if x2 < 0.0 {
            return Err(Error::Precondition(format!("I+ needs x2 > 0, got {x2}")));
        }
        sdi_branch(&self.critical, x2)
    }

    pub fn i_minus(&self, x2: f64) -> Result<f64> {
        if x2 > 0.0 {
            return Err(Error::Precondition(format!("I- needs x2 < 0, got {x2}")));
        }
        sdi_branch(&self.critical, x2)
    }

    pub fn j_pair(&self, y: f64) -> Result<(f64, f64)> {
        j_pair(&self.critical, &self.system, y)
    }

    pub fn ibar_pair(&self, y: f64) -> Result<(f64, f64)> {
        if !(y > 0.0 && y < self.y_star) {
            return Err(Error::FiberOutOfRange { y, lo: 0.0, hi: self.y_star });
        }
        ibar_pair(&self.critical, y)
    }

    pub fn terminal_j(&self, y: f64) -> Result<f64> {
        self.j_pair(y).map(|(p, m)| p - m)
    }

    pub fn small_d(&self, y: f64) -> Result<f64> {
        self.ibar_pair(y).map(|(p, m)| p - m)
    }

    pub fn dodging_i(&self, y: f64) -> Result<f64> {
        dodging_i(&self.critical, &self.system, y)
    }

    /// (0, y*).
    pub fn small_window(&self) -> (f64, f64) {
        (0.0, self.y_star)
    }

    /// Open interval between the tangency heights.
    pub fn dodging_window(&self) -> Result<(f64, f64)> {
        let (yx, yy) = self.critical.comb.tangency_heights(0.0);
        if (yx - yy).abs() < 1e-12 {
            return Err(Error::Precondition("tangency heights coincide; no dodging levels".into()));
        }
        Ok((yx.min(yy), yx.max(yy)))
    }

    /// Heights above both tangencies whose half returns land inside the fiber range.
    pub fn terminal_window(&self) -> Result<(f64, f64)> {
        let (yx, yy) = self.critical.comb.tangency_heights(0.0);
        let base = yx.max(yy);
        let ceiling = self.critical.fiber_ceiling();
        let lands = |y: f64| -> Option<(f64, f64)> {
            let p = half_return_plus(&self.system, y).ok()?;
            let m = half_return_minus(&self.system, y).ok()?;
            (!p.grazing && !m.grazing).then_some((p.y, m.y))
        };
        let inside = |y: f64| lands(y).is_some_and(|(p, m)| p > 0.0 && m > 0.0 && p <= ceiling && m <= ceiling);
        let mut step = 1e-3;
        let mut probe = base + step;
        let mut last_good = None;
        while probe < base + 1e3 {
            if inside(probe) {
                last_good = Some(probe);
            } else if last_good.is_some() {
                break;
            }
            step *= 1.5;
            probe = base + step;
        }
        let good = last_good.ok_or(Error::Precondition("no terminal levels above the tangencies".into()))?;
        let bisect = |mut a: f64, mut b: f64| {
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                if inside(m) {
                    a = m;
                } else {
                    b = m;
                }
            }
            a
        };
        let lo = if inside(base + 1e-9) { base + 1e-9 } else { bisect(good, base) };
        let hi = bisect(good, probe);
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::slowfast::critical_data;
    use crate::transition::{build_phi_k, PhiKSpec};

    fn center(phi: TransitionFunction) -> CriticalData {
        critical_data(Arc::new(models::center_combination()), Arc::new(phi)).unwrap()
    }

    #[test]
    fn linear_core_branch() {
        // φ(s) = s near 0 gives F′²/G = −4s, so I⁺(x) = −2x².
        let phi = TransitionFunction::custom("lin", |x| (x, 1.0, 0.0));
        let c = center(phi);
        for &x in &[0.1, 0.3, 0.5] {
            assert!((sdi_branch(&c, x).unwrap() + 2.0 * x * x).abs() < 1e-13);
            assert!((sdi_branch(&c, -x).unwrap() + 2.0 * x * x).abs() < 1e-13);
        }
        assert_eq!(sdi_branch(&c, 0.0).unwrap(), 0.0);
        assert!(sdi_branch(&c, 2.0).is_err());
    }

    #[test]
    fn fiber_round_trip() {
        let c = center(build_phi_k(&PhiKSpec::default_k(1)).unwrap());
        let (p, m) = fiber_endpoints(&c, c.f(0.07)).unwrap();
        assert!((p - 0.07).abs() < 1e-10);
        let l = mirror_point(&c.phi, 0.07).unwrap();
        assert!((m - l).abs() < 1e-10);
        assert!(matches!(fiber_endpoints(&c, 1.5), Err(Error::FiberOutOfRange { .. })));
        assert!(fiber_endpoints(&c, 0.0).is_err());
    }

    #[test]
    fn odd_phi_nulls() {
        let c = Arc::new(center(TransitionFunction::Psi));
        let prof = SdiProfile::new(c.clone());
        for &y in &[0.01, 0.2, 0.5] {
            assert!(prof.small_d(y).unwrap().abs() < 1e-10);
        }
        for &y in &[1.2, 1.5, 1.8] {
            assert!(prof.terminal_j(y).unwrap().abs() < 1e-10);
        }
        for &x in &[0.05, 0.3, 0.7] {
            assert!(center_closed_form(&c.phi, x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn find_zeros_examples() {
        let z = find_zeros(|y| y - 0.3, (0.0, 1.0), 100);
        assert_eq!(z.zeros.len(), 1);
        assert!((z.zeros[0].location - 0.3).abs() < 1e-10);
        assert_eq!(z.zeros[0].multiplicity, Multiplicity::Simple);

        let z = find_zeros(|y| (y - 0.3137).powi(2), (0.0, 1.0), 100);
        assert_eq!(z.zeros.len(), 1);
        assert_eq!(z.zeros[0].multiplicity, Multiplicity::SuspectedMultiple);
        assert!((z.zeros[0].location - 0.3137).abs() < 1e-4);

        let z = find_zeros(|y| (y - 0.3137).powi(3), (0.0, 1.0), 100);
        assert_eq!(z.zeros[0].multiplicity, Multiplicity::SuspectedMultiple);

        let z = find_zeros(|_| 0.0, (0.0, 1.0), 100);
        assert!(z.zeros.is_empty() && z.degenerate);

        let z = find_zeros(|y| y * y + 1.0, (0.0, 1.0), 100);
        assert!(z.zeros.is_empty() && !z.degenerate);
    }

    #[test]
    fn windows() {
        let prof = SdiProfile::new(Arc::new(center(TransitionFunction::Psi)));
        let (lo, hi) = prof.terminal_window().unwrap();
        assert!((lo - 1.0).abs() < 1e-3 && (hi - 2.0).abs() < 1e-6, "{lo} {hi}");
        assert!(prof.dodging_window().is_err());
        assert!((prof.y_star - 0.9).abs() < 1e-9);
        assert!(matches!(prof.dodging_i(1.0), Err(Error::NotDodgingLevel(_))));
    }
}
