//! Ready-made combinations: the non-smooth center, the II₂ focus family
//! and an engineered dodging example.

use crate::poly::MPoly;
use crate::slowfast::{Builtin, Combination, Term};
use crate::transition::PhiKSpec;
use serde::{Deserialize, Serialize};

/// Z̃(λ, x, y) = (y − λ², α − λ).
pub fn center_combination() -> Combination {
    Combination::new("center")
}

/// Z̃ = (y − λ² − (α − x)λ^{m−1}/2 − (α + x)λ^m/2, α − λ − xλⁿ), m ≥ 4 and n ≥ 2 even.
pub fn ii2_combination(m: u32, n: u32) -> Combination {
    assert!(m >= 4 && n >= 2, "II2 combination needs m >= 4, n >= 2");
    let mut c = Combination::new(&format!("ii2_m{m}_n{n}"));
    c.a[0] = Term::Poly(MPoly::new(vec![(-0.5, [m - 4, 0, 0, 1]), (-0.5, [m - 3, 0, 0, 1])]));
    c.a[1] = Term::Poly(MPoly::new(vec![(0.5, [m - 3, 0, 0, 0]), (-0.5, [m - 2, 0, 0, 0])]));
    c.b[1] = Term::Poly(MPoly::new(vec![(-1.0, [n - 1, 0, 0, 0])]));
    c
}

/// Parameters of the dodging example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DodgingParams {
    /// Tangency height of the minus side.
    pub h_minus: f64,
    /// Tangency height of the plus side.
    pub h_plus: f64,
    pub l1: f64,
    pub p: i32,
    pub k_left: f64,
    pub k_right: f64,
    pub width: f64,
}

impl Default for DodgingParams {
    fn default() -> Self {
        DodgingParams { h_minus: 0.018, h_plus: 0.03, l1: 0.5, p: 4, k_left: 0.1, k_right: 1.0, width: 0.07 }
    }
}

/// Center combination with a capped parabola in A (tangencies at
/// y^Y = h_minus < y^X = h_plus, up to O(h^5)) and a skewed damping term in B.
pub fn dodging_combination(p: &DodgingParams) -> Combination {
    let mut c = Combination::new("dodging");
    c.a[0] = Term::Builtin(Builtin::CappedParabola { h_minus: p.h_minus, h_plus: p.h_plus, l1: p.l1, p: p.p });
    c.b[0] = Term::Builtin(Builtin::SkewedDamping { k_left: p.k_left, k_right: p.k_right, width: p.width });
    c
}

/// Single-zero φ_k tuned so the planted cycle lives at desk-checkable ε.
pub fn desk_phi_spec() -> PhiKSpec {
    PhiKSpec { zeros: vec![0.06], delta: 138.9, nu: 0.066 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ii2_matches_displayed_formula() {
        let c = ii2_combination(4, 2);
        for &(l, x, y, a) in &[(0.3, 0.1, 0.5, 0.2), (-0.8, -0.4, 1.2, -0.1), (1.0, 0.0, 1.0, 0.0)] {
            let z = c.eval(l, x, y, a);
            let want0 = y - l * l - (a - x) * l * l * l / 2.0 - (a + x) * l.powi(4) / 2.0;
            let want1 = a - l - x * l * l;
            assert!((z[0] - want0).abs() < 1e-15 && (z[1] - want1).abs() < 1e-15);
        }
        let c = ii2_combination(6, 4);
        let z = c.eval(0.7, 0.2, 0.1, 0.3);
        let want0 = 0.1 - 0.49 - (0.1) * 0.7f64.powi(5) / 2.0 - 0.5 * 0.7f64.powi(6) / 2.0;
        assert!((z[0] - want0).abs() < 1e-15);
        assert!((z[1] - (0.3 - 0.7 - 0.2 * 0.7f64.powi(4))).abs() < 1e-15);
    }

    #[test]
    fn ii2_psvf_sides() {
        let s = std::sync::Arc::new(ii2_combination(4, 2)).psvf(0.1);
        let (x, y) = (0.3, 0.8);
        assert_eq!(s.plus.eval(x, y), [y - 1.0 - 0.1, 0.1 - 1.0 - x]);
        let m = s.minus.eval(x, y);
        assert!((m[0] - (y - 1.0 - x)).abs() < 1e-15 && (m[1] - (0.1 + 1.0 - x)).abs() < 1e-15);
    }

    #[test]
    fn dodging_heights() {
        let p = DodgingParams::default();
        let (yx, yy) = dodging_combination(&p).tangency_heights(0.0);
        assert!((yx - p.h_plus).abs() < 1e-6 && (yy - p.h_minus).abs() < 1e-6);
        let c = dodging_combination(&p);
        // λ² − H cap(λ²/H) for λ well inside the cap.
        let l: f64 = 0.01;
        let u = l * l / p.h_minus;
        let s = p.h_minus * u / (1.0 + u.powi(4)).powf(0.25);
        assert!((c.a_val(l * -1.0, 0.0, 0.0) - (l * l - s)).abs() < 1e-18);
        // B(λ, 0) = λ t² (1 − k_m − k_d t).
        let t = (0.3f64 / p.width).tanh();
        let want = 0.3 * t * t * (1.0 - 0.55 - 0.45 * t);
        assert!((c.b_val(0.3, 0.0, 0.0, 0.0) - want).abs() < 1e-15);
    }
}
