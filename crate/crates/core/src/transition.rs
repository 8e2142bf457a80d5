//! Transition functions and the φ_k factory.

use crate::error::{Error, Result};
use crate::poly::{rational_from_f64, zero_planting_poly, Poly1, RPoly};
use crate::scalar::{Jet, Scalar};
use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// User-supplied core: returns `(φ, φ', φ'')` on `(-1, 1)`.
pub type CoreFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// Smooth map clamped to `sign(x)` outside `[-1, 1]`.
#[derive(Clone)]
pub enum TransitionFunction {
    Psi,
    PhiK(Box<PhiK>),
    Custom { name: String, core: CoreFn },
}

impl fmt::Debug for TransitionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionFunction::Psi => write!(f, "Psi"),
            TransitionFunction::PhiK(p) => write!(f, "PhiK({:?})", p.spec),
            TransitionFunction::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// ψ(x) = tanh(x / (1 - x²)) on (-1, 1), sign(x) outside.
pub fn psi<T: Scalar>(x: T) -> T {
    let v = x.value();
    if v >= 1.0 {
        T::cst(1.0)
    } else if v <= -1.0 {
        T::cst(-1.0)
    } else {
        (x / (-(x * x) + 1.0)).tanh()
    }
}

/// Plateau bump: 1 on [-ν, ν], 0 outside (-2ν, 2ν).
pub fn bump<T: Scalar>(x: T, nu: f64) -> T {
    let t = x / nu;
    let a = if t.value() < 0.0 { -t } else { t };
    let av = a.value();
    if av <= 1.0 {
        T::cst(1.0)
    } else if av >= 2.0 {
        T::cst(0.0)
    } else {
        let s = a - 1.0;
        ((-(s * s) + 1.0).recip() * -1.0 + 1.0).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiKSpec {
    pub zeros: Vec<f64>,
    pub delta: f64,
    pub nu: f64,
}

impl PhiKSpec {
    /// `k` zeros equally spaced in (0.02, 0.08), δ = 0.01, ν = 0.1.
    pub fn default_k(k: usize) -> Self {
        let zeros = (1..=k).map(|i| 0.02 + 0.06 * i as f64 / (k + 1) as f64).collect();
        PhiKSpec { zeros, delta: 0.01, nu: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::Input(format!("blend radius must lie in (0, 1/2), got {}", self.nu)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Input(format!("amplitude must be non-negative, got {}", self.delta)));
        }
        let mut prev = 0.0;
        for &a in &self.zeros {
            if !(a > prev) {
                return Err(Error::Input("zeros must be positive and strictly increasing".into()));
            }
            prev = a;
        }
        if prev >= self.nu {
            return Err(Error::Input(format!("largest zero {prev} must be below the blend radius {}", self.nu)));
        }
        Ok(())
    }
}

/// φ_k = (x + δφ_e)β_ν + ψ(1 - β_ν).
#[derive(Debug, Clone)]
pub struct PhiK {
    pub spec: PhiKSpec,
    /// P(x) = x³ ∏ (x² - aᵢ²), exact.
    pub p: RPoly,
    /// φ_e with ∫₀ˣ s φ_e'(s) ds = P(x), exact.
    pub phi_e: RPoly,
    core: Poly1,
    p_f64: Poly1,
}

impl PhiK {
    /// x + δφ_e(x).
    pub fn core<T: Scalar>(&self, x: T) -> T {
        self.core.eval(x)
    }

    pub fn p_eval(&self, x: f64) -> f64 {
        self.p_f64.eval(x)
    }

    pub fn phi_e_eval(&self, x: f64) -> f64 {
        self.phi_e.to_f64().eval(x)
    }

    pub fn eval<T: Scalar>(&self, x: T) -> T {
        let v = x.value();
        let nu = self.spec.nu;
        if v.abs() <= nu {
            self.core(x)
        } else if v.abs() >= 2.0 * nu {
            psi(x)
        } else {
            let b = bump(x, nu);
            self.core(x) * b + psi(x) * (-b + 1.0)
        }
    }
}

/// φ_e from the coefficients of an odd P (index = degree).
pub fn build_phi_e(p: &RPoly) -> Result<RPoly> {
    if !p.coeff(0).is_zero() || !p.coeff(1).is_zero() {
        return Err(Error::InvalidP("constant and linear coefficients must vanish".into()));
    }
    if !p.is_odd() {
        return Err(Error::InvalidP("P must be odd".into()));
    }
    let mut out = RPoly(vec![]);
    for (deg, c) in p.0.iter().enumerate() {
        if deg < 3 || c.is_zero() {
            continue;
        }
        let j = (deg - 1) / 2;
        let factor = BigRational::new(BigInt::from(2 * j + 1), BigInt::from(2 * j));
        out = RPoly({
            let mut v = out.0.clone();
            if v.len() < 2 * j + 1 {
                v.resize(2 * j + 1, BigRational::zero());
            }
            v[2 * j] = c * factor;
            v
        });
    }
    Ok(out.trimmed())
}

/// Checks ∫₀ˣ s φ_e'(s) ds = P(x) coefficient-wise in exact arithmetic.
pub fn antiderivative_identity_holds(p: &RPoly, phi_e: &RPoly) -> bool {
    phi_e.derivative().shift(1).integral() == p.clone().trimmed()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub min_derivative: f64,
    pub argmin: f64,
    pub monotone: bool,
}

impl TransitionFunction {
    pub fn psi() -> Self {
        TransitionFunction::Psi
    }

    pub fn custom(name: &str, core: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        TransitionFunction::Custom { name: name.to_string(), core: Arc::new(core) }
    }

    pub fn name(&self) -> String {
        match self {
            TransitionFunction::Psi => "psi".into(),
            TransitionFunction::PhiK(p) => format!("phi_k(k={})", p.spec.zeros.len()),
            TransitionFunction::Custom { name, .. } => name.clone(),
        }
    }

    pub fn as_phi_k(&self) -> Option<&PhiK> {
        match self {
            TransitionFunction::PhiK(p) => Some(p),
            _ => None,
        }
    }

    /// Value and first two derivatives.
    pub fn jet(&self, x: f64) -> Jet {
        if x >= 1.0 {
            return Jet::new(1.0, 0.0, 0.0);
        }
        if x <= -1.0 {
            return Jet::new(-1.0, 0.0, 0.0);
        }
        match self {
            TransitionFunction::Psi => psi(Jet::var(x)),
            TransitionFunction::PhiK(p) => p.eval(Jet::var(x)),
            TransitionFunction::Custom { core, .. } => {
                let (v, d, dd) = core(x);
                Jet::new(v, d, dd)
            }
        }
    }

    /// Composition with an incoming jet.
    pub fn compose(&self, x: Jet) -> Jet {
        let p = self.jet(x.v);
        Jet::new(p.v, p.d * x.d, p.dd * x.d * x.d + p.d * x.dd)
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TransitionFunction::Psi => psi(x),
            TransitionFunction::PhiK(p) => {
                if x >= 1.0 {
                    1.0
                } else if x <= -1.0 {
                    -1.0
                } else {
                    p.eval(x)
                }
            }
            TransitionFunction::Custom { .. } => self.jet(x).v,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.jet(x).d
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.jet(x).dd
    }
}

/// Minimum of φ' on a uniform grid, refined around the minimizer.
pub fn check_monotone(phi: &TransitionFunction, lo: f64, hi: f64, grid_n: usize) -> Result<MonotoneReport> {
    if grid_n < 1000 {
        return Err(Error::Input(format!("grid_n must be at least 1000, got {grid_n}")));
    }
    if !(hi > lo) {
        return Err(Error::Input(format!("empty interval [{lo}, {hi}]")));
    }
    let grid = |a: f64, b: f64, n: usize| (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64);
    let (mut argmin, mut min) = (lo, f64::INFINITY);
    for x in grid(lo, hi, grid_n) {
        let d = phi.d1(x);
        if d < min {
            min = d;
            argmin = x;
        }
    }
    let mut w = (hi - lo) / grid_n as f64;
    for _ in 0..4 {
        let (a, b) = ((argmin - w).max(lo), (argmin + w).min(hi));
        for x in grid(a, b, 64) {
            let d = phi.d1(x);
            if d < min {
                min = d;
                argmin = x;
            }
        }
        w /= 16.0;
    }
    Ok(MonotoneReport { min_derivative: min, argmin, monotone: min > 0.0 })
}

/// Builds φ_k and certifies monotonicity on the blend support `[-2ν, 2ν]`.
pub fn build_phi_k(spec: &PhiKSpec) -> Result<TransitionFunction> {
    spec.validate()?;
    let zeros = spec.zeros.iter().map(|&a| rational_from_f64(a)).collect::<Result<Vec<_>>>()?;
    let p = zero_planting_poly(&zeros);
    let phi_e = build_phi_e(&p)?;
    let mut core = phi_e.to_f64();
    for c in core.0.iter_mut() {
        *c *= spec.delta;
    }
    if core.0.len() < 2 {
        core.0.resize(2, 0.0);
    }
    core.0[1] += 1.0;
    let phi = TransitionFunction::PhiK(Box::new(PhiK { spec: spec.clone(), p_f64: p.to_f64(), p, phi_e, core }));
    let rep = check_monotone(&phi, -2.0 * spec.nu, 2.0 * spec.nu, 4000)?;
    if !rep.monotone {
        return Err(Error::NonMonotoneBlend { min_derivative: rep.min_derivative });
    }
    Ok(phi)
}

/// Certificate for a φ_k on [-1, 1].
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Grid minimum of φ' on `[-1 + margin, 1 - margin]`.
    pub min_derivative: f64,
    pub margin: f64,
    /// φ coincides with ψ on the margins, where ψ is strictly increasing.
    pub tails_are_psi: bool,
    pub phi_at_minus_one: f64,
    pub phi_at_one: f64,
    pub phi_at_zero: f64,
    pub dphi_at_zero: f64,
    pub passed: bool,
}

/// Margin below which ψ' underflows in double precision is about 1.4e-3.
pub const CERT_MARGIN: f64 = 2e-3;

pub fn certify(phi: &TransitionFunction) -> Result<Certificate> {
    let m = CERT_MARGIN;
    let rep = check_monotone(phi, -1.0 + m, 1.0 - m, 20_000)?;
    let tails_are_psi = match phi {
        TransitionFunction::Psi => true,
        TransitionFunction::PhiK(p) => 2.0 * p.spec.nu < 1.0 - m,
        TransitionFunction::Custom { .. } => false,
    };
    let c = Certificate {
        min_derivative: rep.min_derivative,
        margin: m,
        tails_are_psi,
        phi_at_minus_one: phi.value(-1.0),
        phi_at_one: phi.value(1.0),
        phi_at_zero: phi.value(0.0),
        dphi_at_zero: phi.d1(0.0),
        passed: false,
    };
    let passed = c.min_derivative > 0.0
        && c.tails_are_psi
        && c.phi_at_minus_one == -1.0
        && c.phi_at_one == 1.0
        && c.phi_at_zero.abs() <= 1e-12
        && (c.dphi_at_zero - 1.0).abs() <= 1e-12;
    Ok(Certificate { passed, ..c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_rational;

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(1.0), 1.0);
        assert_eq!(psi(3.0), 1.0);
        assert_eq!(psi(-1.0), -1.0);
        assert!((psi(0.5) - (2.0f64 / 3.0).tanh()).abs() < 1e-15);
        assert!((psi(Jet::var(0.0)).d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0, 0.1), 1.0);
        assert_eq!(bump(0.1, 0.1), 1.0);
        assert_eq!(bump(0.25, 0.1), 0.0);
        let b = bump(0.15, 0.1);
        // exp(1 - 1/(1 - 0.25)) = exp(-1/3)
        assert!((b - (-1.0f64 / 3.0).exp()).abs() < 1e-14);
        assert_eq!(bump(-0.15, 0.1), b);
    }

    #[test]
    fn phi_e_single_term() {
        let p = RPoly(vec![0.into(), 0.into(), 0.into(), 1.into()].into_iter().map(|v: i32| BigRational::from_integer(v.into())).collect());
        let e = build_phi_e(&p).unwrap();
        assert_eq!(e.coeff(2), parse_rational("3/2").unwrap());
        assert!(antiderivative_identity_holds(&p, &e));
    }

    #[test]
    fn phi_e_k1() {
        let p = zero_planting_poly(&[parse_rational("0.05").unwrap()]);
        let e = build_phi_e(&p).unwrap();
        assert_eq!(e.coeff(4), parse_rational("5/4").unwrap());
        assert_eq!(e.coeff(2), parse_rational("-0.00375").unwrap());
        assert!(antiderivative_identity_holds(&p, &e));
        assert!(e.is_even() && p.is_odd());
    }

    #[test]
    fn invalid_p_rejected() {
        let p = RPoly(vec![BigRational::zero(), BigRational::from_integer(1.into())]);
        assert!(matches!(build_phi_e(&p), Err(Error::InvalidP(_))));
        let p = RPoly(vec![BigRational::zero(), BigRational::zero(), BigRational::from_integer(1.into())]);
        assert!(matches!(build_phi_e(&p), Err(Error::InvalidP(_))));
    }

    #[test]
    fn phi_k_default_values() {
        let phi = build_phi_k(&PhiKSpec { zeros: vec![0.05], delta: 0.01, nu: 0.1 }).unwrap();
        assert_eq!(phi.value(0.0), 0.0);
        assert!((phi.d1(0.0) - 1.0).abs() < 1e-15);
        let pk = phi.as_phi_k().unwrap();
        let want = 0.05 + 0.01 * (1.25 * 0.05f64.powi(4) - 0.00375 * 0.05f64.powi(2));
        assert!((phi.value(0.05) - want).abs() < 1e-16);
        assert!((pk.phi_e_eval(0.05) - (1.25 * 0.05f64.powi(4) - 0.00375 * 0.0025)).abs() < 1e-18);
        assert_eq!(phi.value(1.0), 1.0);
        assert_eq!(phi.value(-1.0), -1.0);
    }

    #[test]
    fn non_monotone_for_huge_delta() {
        let r = build_phi_k(&PhiKSpec { zeros: vec![0.05], delta: 1e6, nu: 0.1 });
        assert!(matches!(r, Err(Error::NonMonotoneBlend { .. })));
    }

    #[test]
    fn psi_monotone_check() {
        let r = check_monotone(&TransitionFunction::Psi, -0.99, 0.99, 1000).unwrap();
        assert!(r.monotone && r.min_derivative > 0.0);
        assert!(check_monotone(&TransitionFunction::Psi, -0.5, 0.5, 10).is_err());
    }

    #[test]
    fn default_zero_spacing() {
        assert_eq!(PhiKSpec::default_k(1).zeros, vec![0.05]);
        let z = PhiKSpec::default_k(3).zeros;
        assert!((z[0] - 0.035).abs() < 1e-15 && (z[2] - 0.065).abs() < 1e-15);
    }
}
