//! Continuous combinations, their regularizations, the scaling chart,
//! critical data (F, G, C₀, slow flow) and the slow-fast Hopf checker.

use crate::error::{Error, Result};
use crate::poly::MPoly;
use crate::psvf::{PiecewiseSystem, PlanarField};
use crate::scalar::{Jet, Scalar};
use crate::transition::TransitionFunction;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Callable term `(λ, x, y, α) -> value`.
pub type TermFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Named closed-form terms used by the engineered examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Builtin {
    /// λ³A₀(λ) = λ² − H(λ)·cap(λ²/H(λ)), cap(u) = u/(1+u^p)^{1/p},
    /// H = h_minus + (h_plus − h_minus)·step(λ/l1).
    CappedParabola { h_minus: f64, h_plus: f64, l1: f64, p: i32 },
    /// λ²B₀(λ) = λ t² (1 − k_m − k_d t), t = tanh(λ/w), with k_m, k_d the
    /// mean and half-difference of `k_left`, `k_right`.
    SkewedDamping { k_left: f64, k_right: f64, width: f64 },
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step<T: Scalar>(t: T) -> T {
    let v = t.value();
    if v <= 0.0 {
        T::cst(0.0)
    } else if v >= 1.0 {
        T::cst(1.0)
    } else {
        let a = (t.recip() * -1.0).exp();
        let b = ((-t + 1.0).recip() * -1.0).exp();
        a / (a + b)
    }
}

/// tanh(z)/z, smooth through 0.
fn tanhc<T: Scalar>(z: T) -> T {
    if z.value().abs() < 1e-3 {
        let z2 = z * z;
        -(z2 * (z2 * (z2 * (17.0 / 315.0) - 2.0 / 15.0) + 1.0 / 3.0)) + 1.0
    } else {
        z.tanh() / z
    }
}

/// (1 − (1+q)^{−1/p}) / q, smooth through 0.
fn cap_defect<T: Scalar>(q: T, p: f64) -> T {
    if q.value() < 1e-8 {
        -(q * ((p + 1.0) / (2.0 * p * p))) + 1.0 / p
    } else {
        -((q.ln_1p() * (-1.0 / p)).exp_m1()) / q
    }
}

impl Builtin {
    pub fn eval<T: Scalar>(&self, l: T, _x: T, _y: T, _alpha: f64) -> T {
        match *self {
            Builtin::CappedParabola { h_minus, h_plus, l1, p } => {
                let h = smooth_step(l / l1) * (h_plus - h_minus) + h_minus;
                let q = (l * l / h).powi(p);
                cap_defect(q, p as f64) * l.powi(2 * p - 1) / h.powi(p)
            }
            Builtin::SkewedDamping { k_left, k_right, width } => {
                let km = 0.5 * (k_left + k_right);
                let kd = 0.5 * (k_right - k_left);
                let z = l / width;
                let t = z.tanh();
                t * tanhc(z) * (-(t * kd) + (1.0 - km)) / width
            }
        }
    }
}

/// One A_i or B_j entry of a combination.
#[derive(Clone, Default)]
pub enum Term {
    #[default]
    Zero,
    Poly(MPoly),
    Builtin(Builtin),
    Callable(TermFn),
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => write!(f, "Zero"),
            Term::Poly(p) => write!(f, "Poly({:?})", p.terms()),
            Term::Builtin(b) => write!(f, "{b:?}"),
            Term::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl Term {
    pub fn is_zero(&self) -> bool {
        match self {
            Term::Zero => true,
            Term::Poly(p) => p.is_zero(),
            _ => false,
        }
    }

    pub fn eval(&self, l: f64, x: f64, y: f64, alpha: f64) -> f64 {
        match self {
            Term::Zero => 0.0,
            Term::Poly(p) => p.eval(l, x, y, alpha),
            Term::Builtin(b) => b.eval(l, x, y, alpha),
            Term::Callable(f) => f(l, x, y, alpha),
        }
    }

    pub fn eval_jet(&self, l: Jet, x: Jet, y: Jet, alpha: f64) -> Jet {
        match self {
            Term::Zero => Jet::cst(0.0),
            Term::Poly(p) => p.eval(l, x, y, alpha),
            Term::Builtin(b) => b.eval(l, x, y, alpha),
            Term::Callable(f) => {
                // Differences along the curve s -> v + s d + s²/2 dd.
                let at = |s: f64| {
                    f(
                        l.v + s * l.d + 0.5 * s * s * l.dd,
                        x.v + s * x.d + 0.5 * s * s * x.dd,
                        y.v + s * y.d + 0.5 * s * s * y.dd,
                        alpha,
                    )
                };
                let h = 1e-4;
                let (m2, m1, c, p1, p2) = (at(-2.0 * h), at(-h), at(0.0), at(h), at(2.0 * h));
                let d = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
                let dd = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
                Jet::new(c, d, dd)
            }
        }
    }
}

/// Z̃(λ, x, y) = (y − λ² + A(λ, x), α − λ + B(λ, x, y)) with
/// A = Σ λ^{3−i} xⁱ Aᵢ(λ, x) and B = Σ_{j≤2} λ^{2−j} xʲ Bⱼ(λ, x) + y B₃(λ, x, y).
#[derive(Debug, Clone, Default)]
pub struct Combination {
    pub name: String,
    pub a: [Term; 4],
    pub b: [Term; 4],
}

trait Eval<T: Scalar> {
    fn term(&self, t: &Term, l: T, x: T, y: T, alpha: f64) -> T;
}

struct F64Eval;
impl Eval<f64> for F64Eval {
    #[inline]
    fn term(&self, t: &Term, l: f64, x: f64, y: f64, alpha: f64) -> f64 {
        t.eval(l, x, y, alpha)
    }
}

struct JetEval;
impl Eval<Jet> for JetEval {
    #[inline]
    fn term(&self, t: &Term, l: Jet, x: Jet, y: Jet, alpha: f64) -> Jet {
        t.eval_jet(l, x, y, alpha)
    }
}

impl Combination {
    pub fn new(name: &str) -> Self {
        Combination { name: name.to_string(), ..Default::default() }
    }

    fn a_generic<T: Scalar, E: Eval<T>>(&self, e: &E, l: T, x: T, alpha: f64) -> T {
        let mut acc = T::cst(0.0);
        for (i, t) in self.a.iter().enumerate() {
            if t.is_zero() {
                continue;
            }
            let mut m = e.term(t, l, x, T::cst(0.0), alpha);
            if i < 3 {
                m = m * l.powi(3 - i as i32);
            }
            if i > 0 {
                m = m * x.powi(i as i32);
            }
            acc = acc + m;
        }
        acc
    }

    fn b_generic<T: Scalar, E: Eval<T>>(&self, e: &E, l: T, x: T, y: T, alpha: f64) -> T {
        let mut acc = T::cst(0.0);
        for (j, t) in self.b.iter().enumerate() {
            if t.is_zero() {
                continue;
            }
            let m = if j < 3 {
                let mut m = e.term(t, l, x, T::cst(0.0), alpha);
                if j < 2 {
                    m = m * l.powi(2 - j as i32);
                }
                if j > 0 {
                    m = m * x.powi(j as i32);
                }
                m
            } else {
                e.term(t, l, x, y, alpha) * y
            };
            acc = acc + m;
        }
        acc
    }

    pub fn a_val(&self, l: f64, x: f64, alpha: f64) -> f64 {
        self.a_generic(&F64Eval, l, x, alpha)
    }

    pub fn b_val(&self, l: f64, x: f64, y: f64, alpha: f64) -> f64 {
        self.b_generic(&F64Eval, l, x, y, alpha)
    }

    pub fn a_jet(&self, l: Jet, x: Jet, alpha: f64) -> Jet {
        self.a_generic(&JetEval, l, x, alpha)
    }

    pub fn b_jet(&self, l: Jet, x: Jet, y: Jet, alpha: f64) -> Jet {
        self.b_generic(&JetEval, l, x, y, alpha)
    }

    pub fn eval(&self, l: f64, x: f64, y: f64, alpha: f64) -> [f64; 2] {
        [y - l * l + self.a_val(l, x, alpha), alpha - l + self.b_val(l, x, y, alpha)]
    }

    pub fn eval_jet(&self, l: Jet, x: Jet, y: Jet, alpha: f64) -> [Jet; 2] {
        [y - l * l + self.a_jet(l, x, alpha), -l + alpha + self.b_jet(l, x, y, alpha)]
    }

    /// Tangency heights (y^X, y^Y) = (1 − A(1, 0), 1 − A(−1, 0)).
    pub fn tangency_heights(&self, alpha: f64) -> (f64, f64) {
        (1.0 - self.a_val(1.0, 0.0, alpha), 1.0 - self.a_val(-1.0, 0.0, alpha))
    }

    /// The PSVF (X, Y) = (Z̃(1, ·), Z̃(−1, ·)).
    pub fn psvf(self: &Arc<Self>, alpha: f64) -> PiecewiseSystem {
        PiecewiseSystem {
            plus: Arc::new(SideField { comb: self.clone(), lambda: 1.0, alpha }),
            minus: Arc::new(SideField { comb: self.clone(), lambda: -1.0, alpha }),
            params: [("alpha".to_string(), alpha)].into_iter().collect(),
        }
    }
}

/// Z̃(±1, x, y) as a planar field.
#[derive(Debug, Clone)]
pub struct SideField {
    pub comb: Arc<Combination>,
    pub lambda: f64,
    pub alpha: f64,
}

impl PlanarField for SideField {
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        self.comb.eval(self.lambda, x, y, self.alpha)
    }

    fn analytic_jacobian(&self, x: f64, y: f64) -> Option<[[f64; 2]; 2]> {
        let l = Jet::cst(self.lambda);
        let dx = self.comb.eval_jet(l, Jet::var(x), Jet::cst(y), self.alpha);
        let dy = self.comb.eval_jet(l, Jet::cst(x), Jet::var(y), self.alpha);
        Some([[dx[0].d, dy[0].d], [dx[1].d, dy[1].d]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// φ(x/ε)
    EpsPower1,
    /// φ(x/ε²)
    EpsPower2,
}

impl Mode {
    fn power(self) -> i32 {
        match self {
            Mode::EpsPower1 => 1,
            Mode::EpsPower2 => 2,
        }
    }
}

/// (x, y) ↦ Z̃(φ(x/ε^p), x, y) with α = εα̃.
#[derive(Debug, Clone)]
pub struct RegularizedSystem {
    pub comb: Arc<Combination>,
    pub phi: Arc<TransitionFunction>,
    pub eps: f64,
    pub alpha_t: f64,
    pub mode: Mode,
}

pub fn regularize(
    comb: Arc<Combination>,
    phi: Arc<TransitionFunction>,
    eps: f64,
    alpha_t: f64,
    mode: Mode,
) -> Result<RegularizedSystem> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("epsilon must be positive, got {eps}")));
    }
    Ok(RegularizedSystem { comb, phi, eps, alpha_t, mode })
}

impl RegularizedSystem {
    pub fn alpha(&self) -> f64 {
        self.eps * self.alpha_t
    }

    pub fn stripe_width(&self) -> f64 {
        self.eps.powi(self.mode.power())
    }

    pub fn chart(&self) -> ChartSystem {
        ChartSystem {
            comb: self.comb.clone(),
            phi: self.phi.clone(),
            eps: self.eps,
            alpha_t: self.alpha_t,
            power: self.mode.power(),
        }
    }

    pub fn with_alpha(&self, alpha_t: f64) -> Self {
        RegularizedSystem { alpha_t, ..self.clone() }
    }
}

impl PlanarField for RegularizedSystem {
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let l = self.phi.value(x / self.stripe_width());
        self.comb.eval(l, x, y, self.alpha())
    }

    fn analytic_jacobian(&self, x: f64, y: f64) -> Option<[[f64; 2]; 2]> {
        let w = self.stripe_width();
        let xj = Jet::var(x);
        let l = self.phi.compose(xj / w);
        let dx = self.comb.eval_jet(l, xj, Jet::cst(y), self.alpha());
        let dy = self.comb.eval_jet(Jet::cst(l.v), Jet::cst(x), Jet::var(y), self.alpha());
        Some([[dx[0].d, dy[0].d], [dx[1].d, dy[1].d]])
    }
}

/// Scaling-chart field in (x₂, y), x = ε² x₂, time multiplied by ε²:
/// ẋ₂ = y − φ² + A(φ, ε²x₂), ẏ = ε²(εα̃ − φ + B(φ, ε²x₂, y)).
///
/// `power` is 2 for φ(x/ε²) and 1 for φ(x/ε); the stripe width is ε^power.
#[derive(Debug, Clone)]
pub struct ChartSystem {
    pub comb: Arc<Combination>,
    pub phi: Arc<TransitionFunction>,
    pub eps: f64,
    pub alpha_t: f64,
    pub power: i32,
}

pub fn chart_field(comb: Arc<Combination>, phi: Arc<TransitionFunction>, eps: f64, alpha_t: f64) -> ChartSystem {
    ChartSystem { comb, phi, eps, alpha_t, power: 2 }
}

impl ChartSystem {
    pub fn alpha(&self) -> f64 {
        self.eps * self.alpha_t
    }

    pub fn with_alpha(&self, alpha_t: f64) -> Self {
        ChartSystem { alpha_t, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        ChartSystem { eps, ..self.clone() }
    }

    pub fn width(&self) -> f64 {
        self.eps.powi(self.power)
    }

    #[inline]
    pub fn rhs(&self, x2: f64, y: f64) -> [f64; 2] {
        let e2 = self.width();
        let l = self.phi.value(x2);
        let x = e2 * x2;
        let a = self.alpha();
        [
            y - l * l + self.comb.a_val(l, x, a),
            e2 * (a - l + self.comb.b_val(l, x, y, a)),
        ]
    }

    /// Jacobian with respect to (x₂, y).
    pub fn jac(&self, x2: f64, y: f64) -> [[f64; 2]; 2] {
        let e2 = self.width();
        let a = self.alpha();
        let l = self.phi.jet(x2);
        let xj = Jet::new(e2 * x2, e2, 0.0);
        let yc = Jet::cst(y);
        let fx = yc - l * l + self.comb.a_jet(l, xj, a);
        let gx = self.comb.b_jet(l, xj, yc, a) - l;
        let lc = Jet::cst(l.v);
        let xc = Jet::cst(e2 * x2);
        let gy = self.comb.b_jet(lc, xc, Jet::var(y), a);
        [[fx.d, 1.0], [e2 * gx.d, e2 * gy.d]]
    }

    pub fn divergence(&self, x2: f64, y: f64) -> f64 {
        let j = self.jac(x2, y);
        j[0][0] + j[1][1]
    }
}

impl PlanarField for ChartSystem {
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        self.rhs(x, y)
    }
    fn analytic_jacobian(&self, x: f64, y: f64) -> Option<[[f64; 2]; 2]> {
        Some(self.jac(x, y))
    }
}

/// F, G and the validated interval [−M₁, M₂].
#[derive(Debug, Clone)]
pub struct CriticalData {
    pub comb: Arc<Combination>,
    pub phi: Arc<TransitionFunction>,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowFlowValue {
    pub value: f64,
    /// One-sided limits at 0 disagreed by more than 1e-4 relative.
    pub flagged: bool,
}

impl CriticalData {
    /// (F, F', F'') at x₂.
    pub fn f_jet(&self, x2: f64) -> Jet {
        let l = self.phi.jet(x2);
        l * l - self.comb.a_jet(l, Jet::cst(0.0), 0.0)
    }

    pub fn f(&self, x2: f64) -> f64 {
        let l = self.phi.value(x2);
        l * l - self.comb.a_val(l, 0.0, 0.0)
    }

    pub fn df(&self, x2: f64) -> f64 {
        self.f_jet(x2).d
    }

    /// (G, G', G'') at x₂.
    pub fn g_jet(&self, x2: f64) -> Jet {
        let l = self.phi.jet(x2);
        let f = l * l - self.comb.a_jet(l, Jet::cst(0.0), 0.0);
        self.comb.b_jet(l, Jet::cst(0.0), f, 0.0) - l
    }

    pub fn g(&self, x2: f64) -> f64 {
        let l = self.phi.value(x2);
        let f = l * l - self.comb.a_val(l, 0.0, 0.0);
        self.comb.b_val(l, 0.0, f, 0.0) - l
    }

    /// G/F'; at 0 the average of the values at ±1e-6.
    pub fn slow_flow(&self, x2: f64) -> SlowFlowValue {
        if x2 == 0.0 {
            let a = self.g(1e-6) / self.df(1e-6);
            let b = self.g(-1e-6) / self.df(-1e-6);
            let flagged = (a - b).abs() > 1e-4 * a.abs().max(b.abs());
            SlowFlowValue { value: 0.5 * (a + b), flagged }
        } else {
            SlowFlowValue { value: self.g(x2) / self.df(x2), flagged: false }
        }
    }

    pub fn in_domain(&self, x2: f64) -> bool {
        x2 != 0.0 && x2 >= -self.m1 && x2 <= self.m2
    }

    /// min(F(M₂), F(−M₁)).
    pub fn fiber_ceiling(&self) -> f64 {
        self.f(self.m2).min(self.f(-self.m1))
    }
}

fn assumptions_hold(c: &CriticalData, x: f64) -> bool {
    c.df(x) / x > 0.0 && c.g(x) / x < 0.0
}

/// Largest `m` on the side `sign` such that A2 and A3 hold on the scan grid.
fn validated_half_width(c: &CriticalData, sign: f64, n: usize) -> f64 {
    let max = 1.0 - 1.0 / n as f64;
    let mut good = 0.0;
    for i in 1..n {
        let r = i as f64 / n as f64;
        if assumptions_hold(c, sign * r) {
            good = r;
            continue;
        }
        if good == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (good, r);
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if assumptions_hold(c, sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return lo;
    }
    good.min(max)
}

/// Builds F, G and validates A0, A2, A3 on a 10⁴-point scan of each side.
pub fn critical_data(comb: Arc<Combination>, phi: Arc<TransitionFunction>) -> Result<CriticalData> {
    let p0 = phi.jet(0.0);
    if p0.v.abs() > 1e-12 || !(p0.d > 0.0) {
        return Err(Error::AssumptionA0(format!("φ(0) = {}, φ'(0) = {}", p0.v, p0.d)));
    }
    let mut c = CriticalData { comb, phi, m1: 0.0, m2: 0.0 };
    c.m2 = validated_half_width(&c, 1.0, 10_000);
    c.m1 = validated_half_width(&c, -1.0, 10_000);
    if c.m1 == 0.0 || c.m2 == 0.0 {
        return Err(Error::AssumptionsFail(format!("validated interval [-{}, {}] is empty", c.m1, c.m2)));
    }
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub a0: bool,
    pub phi0: f64,
    pub dphi0: f64,
    pub a1: bool,
    pub a_plus: f64,
    pub a_minus: f64,
    pub a2_a3: bool,
    pub m1: f64,
    pub m2: f64,
    pub y_x: f64,
    pub y_y: f64,
    pub slow_flow_at_zero: Option<SlowFlowValue>,
    pub message: Option<String>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.a0 && self.a1 && self.a2_a3
    }
}

/// Evaluates A0–A3 without failing early.
pub fn check_assumptions(comb: Arc<Combination>, phi: Arc<TransitionFunction>) -> AssumptionReport {
    let p0 = phi.jet(0.0);
    let a_plus = comb.a_val(1.0, 0.0, 0.0);
    let a_minus = comb.a_val(-1.0, 0.0, 0.0);
    let (y_x, y_y) = comb.tangency_heights(0.0);
    let mut r = AssumptionReport {
        a0: p0.v.abs() <= 1e-12 && p0.d > 0.0,
        phi0: p0.v,
        dphi0: p0.d,
        a1: a_plus < 1.0 && a_minus < 1.0,
        a_plus,
        a_minus,
        a2_a3: false,
        m1: 0.0,
        m2: 0.0,
        y_x,
        y_y,
        slow_flow_at_zero: None,
        message: None,
    };
    match critical_data(comb, phi) {
        Ok(c) => {
            r.a2_a3 = true;
            r.m1 = c.m1;
            r.m2 = c.m2;
            r.slow_flow_at_zero = Some(c.slow_flow(0.0));
        }
        Err(e) => r.message = Some(e.to_string()),
    }
    r
}

/// A planar slow-fast form ẋ = f(x, y), ẏ = ε g(x, y) at ε = 0,
/// written over jets so derivatives are exact.
pub struct SlowFastForm<'a> {
    pub f: Box<dyn Fn(Jet, Jet) -> Jet + 'a>,
    pub g: Box<dyn Fn(Jet, Jet) -> Jet + 'a>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfCondition {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfReport {
    pub point: (f64, f64),
    pub conditions: Vec<HopfCondition>,
    pub is_hopf: bool,
    pub verdict: String,
}

/// f = g = f_x = 0, f_xx ≠ 0, g_x f_y < 0 at `at`.
pub fn hopf_check(form: &SlowFastForm<'_>, at: (f64, f64)) -> HopfReport {
    let (x0, y0) = at;
    let fx = (form.f)(Jet::var(x0), Jet::cst(y0));
    let fy = (form.f)(Jet::cst(x0), Jet::var(y0));
    let gx = (form.g)(Jet::var(x0), Jet::cst(y0));
    let zero = |v: f64| v.abs() < 1e-9;
    let conditions = vec![
        HopfCondition { name: "f = 0", value: fx.v, pass: zero(fx.v) },
        HopfCondition { name: "g = 0", value: gx.v, pass: zero(gx.v) },
        HopfCondition { name: "f_x = 0", value: fx.d, pass: zero(fx.d) },
        HopfCondition { name: "f_xx != 0", value: fx.dd, pass: fx.dd.abs() > 1e-6 },
        HopfCondition { name: "g_x f_y < 0", value: gx.d * fy.d, pass: gx.d * fy.d < 0.0 },
    ];
    let is_hopf = conditions.iter().all(|c| c.pass);
    let verdict = if is_hopf {
        "slow-fast Hopf point".to_string()
    } else {
        let failed: Vec<&str> = conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        format!("not-a-Hopf-point (fails: {})", failed.join(", "))
    };
    HopfReport { point: at, conditions, is_hopf, verdict }
}

/// ẋ = y − x² + x³h₁, ẏ = ε(a − x + x²h₂ + y h₃) with constant hᵢ.
pub fn normal_form(a: f64, h1: f64, h2: f64, h3: f64) -> SlowFastForm<'static> {
    SlowFastForm {
        f: Box::new(move |x, y| y - x * x + x.powi(3) * h1),
        g: Box::new(move |x, y| -x + a + x * x * h2 + y * h3),
    }
}

/// Chart form at ε = 0 with α̃ absorbed: f = y − φ² + A(φ, 0), g = −φ + B(φ, 0, y).
pub fn chart_form(comb: Arc<Combination>, phi: Arc<TransitionFunction>) -> SlowFastForm<'static> {
    let (c1, p1) = (comb.clone(), phi.clone());
    SlowFastForm {
        f: Box::new(move |x, y| {
            let l = p1.compose(x);
            y - l * l + c1.a_jet(l, Jet::cst(0.0), 0.0)
        }),
        g: Box::new(move |x, y| {
            let l = phi.compose(x);
            comb.b_jet(l, Jet::cst(0.0), y, 0.0) - l
        }),
    }
}

/// Linear regularization after x = εx̃ and time rescaling, at ε = 0:
/// f = (X₁+Y₁)/2 + φ(x)(X₁−Y₁)/2, g = (X₂+Y₂)/2 + φ(x)(X₂−Y₂)/2,
/// with X, Y evaluated at (0, y).
pub fn linear_regularization_form(system: PiecewiseSystem, phi: Arc<TransitionFunction>) -> SlowFastForm<'static> {
    let s = Arc::new(system);
    let side = move |s: &PiecewiseSystem, plus: bool, k: usize, y: Jet| {
        let fld = if plus { s.plus.as_ref() } else { s.minus.as_ref() };
        let v = fld.eval(0.0, y.v)[k];
        let j = fld.jacobian(0.0, y.v);
        Jet::new(v, j[k][1] * y.d, j[k][1] * y.dd)
    };
    let (s1, p1) = (s.clone(), phi.clone());
    SlowFastForm {
        f: Box::new(move |x, y| {
            let (xa, ya) = (side(&s1, true, 0, y), side(&s1, false, 0, y));
            (xa + ya) * 0.5 + p1.compose(x) * (xa - ya) * 0.5
        }),
        g: Box::new(move |x, y| {
            let (xa, ya) = (side(&s, true, 1, y), side(&s, false, 1, y));
            (xa + ya) * 0.5 + phi.compose(x) * (xa - ya) * 0.5
        }),
    }
}
