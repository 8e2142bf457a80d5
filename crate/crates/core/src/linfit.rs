//! Small dense least-squares fits.

use crate::error::{Error, Result};

/// Least-squares polynomial fit of degree `deg` in the variable `x - x0`.
/// Returns coefficients ordered by increasing power.
pub fn polyfit(xs: &[f64], ys: &[f64], x0: f64, deg: usize) -> Result<Vec<f64>> {
    let n = deg + 1;
    if xs.len() != ys.len() || xs.len() < n {
        return Err(Error::Input(format!("polyfit needs at least {n} samples")));
    }
    // Householder QR on the Vandermonde matrix.
    let m = xs.len();
    let mut a: Vec<Vec<f64>> = xs.iter().map(|&x| (0..n).map(|k| (x - x0).powi(k as i32)).collect()).collect();
    let mut b = ys.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("rank-deficient fit".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|t| t * t).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let s = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vn;
            for i in k..m {
                a[i][j] -= s * v[i - k];
            }
        }
        let s = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vn;
        for i in k..m {
            b[i] -= s * v[i - k];
        }
    }
    let mut c = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * c[j];
        }
        c[k] = s / a[k][k];
    }
    Ok(c)
}
