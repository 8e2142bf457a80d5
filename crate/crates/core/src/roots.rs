//! Scalar root finding: sign scans, Brent, bisection on signs, Newton polish.

use crate::error::{Error, Result};

/// Brent's method on a bracket with a sign change.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Numerical(format!("no sign change on [{a}, {b}]: {fa:e}, {fb:e}")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Numerical("brent: iteration limit".into()))
}

/// Bisection driven by a sign oracle only; returns the final bracket.
///
/// `pos(x)` is `true` where the function is positive. Requires
/// `pos(a) != pos(b)`.
pub fn bisect_sign<F: FnMut(f64) -> bool>(mut pos: F, a: f64, b: f64, xtol: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (a, b);
    let plo = pos(lo);
    if plo == pos(hi) {
        return Err(Error::Numerical(format!("no sign change on [{a}, {b}]")));
    }
    while (hi - lo).abs() > xtol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pos(mid) == plo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Brackets `[x_i, x_{i+1}]` of a uniform grid where `f` changes sign.
pub fn sign_change_brackets<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    brackets_from_samples(&xs, &vs)
}

pub fn brackets_from_samples(xs: &[f64], vs: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < xs.len() {
        let (a, b) = (vs[i], vs[i + 1]);
        if a == 0.0 && i > 0 {
            i += 1;
            continue;
        }
        if a.is_finite() && b.is_finite() && (a * b < 0.0 || (b == 0.0 && i + 2 < xs.len() && a * vs[i + 2] < 0.0)) {
            let hi = if b == 0.0 { xs[i + 2] } else { xs[i + 1] };
            out.push((xs[i], hi));
        }
        i += 1;
    }
    out
}

/// Newton iterations kept inside `[lo, hi]`; falls back to the input on failure.
pub fn newton_polish<F, D>(f: F, df: D, x0: f64, lo: f64, hi: f64, iters: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..iters {
        let fx = f(x);
        let d = df(x);
        if fx == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let nx = x - fx / d;
        if !(lo..=hi).contains(&nx) || !nx.is_finite() {
            break;
        }
        if (nx - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            x = nx;
            break;
        }
        x = nx;
    }
    if f(x).abs() <= f(x0).abs() {
        x
    } else {
        x0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_rejects_same_sign() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn sign_bisection() {
        let (lo, hi) = bisect_sign(|x| x > 0.3, 0.0, 1.0, 1e-12).unwrap();
        assert!(lo <= 0.3 && hi >= 0.3 && hi - lo <= 1e-12);
    }

    #[test]
    fn brackets_on_grid() {
        let b = sign_change_brackets(|x| (x - 0.25) * (x - 0.61), 0.0, 1.0, 100);
        assert_eq!(b.len(), 2);
        assert!(b[0].0 <= 0.25 && b[0].1 >= 0.25);
    }
}
