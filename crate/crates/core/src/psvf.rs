//! Planar piecewise-smooth vector fields with switching line `{x = 0}`.

use crate::error::{Error, Result};
use crate::linfit::polyfit;
use crate::ode::{solve, Event, OdeOptions, Status};
use crate::roots::brent;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A smooth planar field `(x, y) -> (vx, vy)`.
pub trait PlanarField: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> [f64; 2];

    /// Analytic Jacobian `[[∂x vx, ∂y vx], [∂x vy, ∂y vy]]`, if known.
    fn analytic_jacobian(&self, _x: f64, _y: f64) -> Option<[[f64; 2]; 2]> {
        None
    }

    fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        self.analytic_jacobian(x, y).unwrap_or_else(|| fd_jacobian(self, x, y))
    }
}

/// Fourth-order central differences with `h = eps^(1/3)` scaled by |coordinate|.
pub fn fd_jacobian<F: PlanarField + ?Sized>(f: &F, x: f64, y: f64) -> [[f64; 2]; 2] {
    let step = |c: f64| f64::EPSILON.cbrt() * c.abs().max(1.0);
    let d = |g: &dyn Fn(f64) -> [f64; 2], h: f64| {
        let (a, b, c, e) = (g(-2.0 * h), g(-h), g(h), g(2.0 * h));
        [
            (a[0] - 8.0 * b[0] + 8.0 * c[0] - e[0]) / (12.0 * h),
            (a[1] - 8.0 * b[1] + 8.0 * c[1] - e[1]) / (12.0 * h),
        ]
    };
    let dx = d(&|s| f.eval(x + s, y), step(x));
    let dy = d(&|s| f.eval(x, y + s), step(y));
    [[dx[0], dy[0]], [dx[1], dy[1]]]
}

/// `(vx, vy) = M (x, y) + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub m: [[f64; 2]; 2],
    pub c: [f64; 2],
}

impl PlanarField for AffineField {
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.m[0][0] * x + self.m[0][1] * y + self.c[0],
            self.m[1][0] * x + self.m[1][1] * y + self.c[1],
        ]
    }
    fn analytic_jacobian(&self, _x: f64, _y: f64) -> Option<[[f64; 2]; 2]> {
        Some(self.m)
    }
}

/// Closure-backed field without analytic derivatives.
#[derive(Clone)]
pub struct FnField(pub Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>);

impl FnField {
    pub fn new(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        FnField(Arc::new(f))
    }
}

impl PlanarField for FnField {
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        (self.0)(x, y)
    }
}

/// The pair `(X, Y)` active on `{x > 0}` and `{x < 0}`.
#[derive(Clone)]
pub struct PiecewiseSystem {
    pub plus: Arc<dyn PlanarField>,
    pub minus: Arc<dyn PlanarField>,
    pub params: BTreeMap<String, f64>,
}

impl fmt::Debug for PiecewiseSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseSystem").field("params", &self.params).finish()
    }
}

impl PiecewiseSystem {
    pub fn new(plus: impl PlanarField + 'static, minus: impl PlanarField + 'static) -> Self {
        PiecewiseSystem { plus: Arc::new(plus), minus: Arc::new(minus), params: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }

    pub fn side(&self, side: Side) -> &dyn PlanarField {
        match side {
            Side::Plus => self.plus.as_ref(),
            Side::Minus => self.minus.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TangencyKind {
    Regular,
    VisibleFold,
    InvisibleFold,
    FieldSingularity,
    HigherOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangencyReport {
    pub side: Side,
    pub y: f64,
    pub kind: TangencyKind,
    pub second_lie: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPartition {
    pub window: (f64, f64),
    pub sliding: Vec<(f64, f64)>,
    pub sewing: Vec<(f64, f64)>,
    pub tangencies: Vec<f64>,
}

/// Lie derivatives of `F(x, y) = x` along `field` at `(0, y)`.
pub fn lie_derivative(field: &dyn PlanarField, order: u32, y: f64) -> Result<f64> {
    let v = field.eval(0.0, y);
    if !v[0].is_finite() || !v[1].is_finite() {
        return Err(Error::Domain { x: 0.0, y });
    }
    match order {
        1 => Ok(v[0]),
        2 => {
            let j = field.jacobian(0.0, y);
            let r = v[0] * j[0][0] + v[1] * j[0][1];
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::Domain { x: 0.0, y })
            }
        }
        o => Err(Error::UnsupportedOrder(o)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TangencyOptions {
    /// Grid cell width along Σ.
    pub grid_width: f64,
    /// |X²F| below this counts as zero.
    pub second_tol: f64,
    /// |vx| below this on a whole cell marks a non-isolated zero.
    pub flat_tol: f64,
}

impl Default for TangencyOptions {
    fn default() -> Self {
        TangencyOptions { grid_width: 1e-4, second_tol: 1e-9, flat_tol: 1e-13 }
    }
}

fn fold_kind(side: Side, second: f64, vy: f64, tol: f64) -> TangencyKind {
    if second.abs() <= tol {
        if vy.abs() <= tol {
            TangencyKind::FieldSingularity
        } else {
            TangencyKind::HigherOrder
        }
    } else {
        let visible = match side {
            Side::Plus => second > 0.0,
            Side::Minus => second < 0.0,
        };
        if visible {
            TangencyKind::VisibleFold
        } else {
            TangencyKind::InvisibleFold
        }
    }
}

fn side_tangencies(field: &dyn PlanarField, side: Side, lo: f64, hi: f64, o: TangencyOptions) -> Result<Vec<TangencyReport>> {
    let n = (((hi - lo) / o.grid_width).ceil() as usize).max(2);
    let ys: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vs = ys.iter().map(|&y| lie_derivative(field, 1, y)).collect::<Result<Vec<f64>>>()?;
    for i in 0..n {
        if vs[i].abs() <= o.flat_tol && vs[i + 1].abs() <= o.flat_tol {
            return Err(Error::DegenerateTangencyLocus { lo: ys[i], hi: ys[i + 1] });
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let (a, b) = (vs[i], vs[i + 1]);
        let mut root = None;
        if a == 0.0 {
            root = Some(ys[i]);
        } else if a * b < 0.0 {
            root = Some(brent(|y| field.eval(0.0, y)[0], ys[i], ys[i + 1], 1e-15, 200)?);
        } else if b == 0.0 && i + 1 == n {
            root = Some(ys[n]);
        }
        if let Some(y) = root {
            let second = lie_derivative(field, 2, y)?;
            let vy = field.eval(0.0, y)[1];
            out.push(TangencyReport { side, y, kind: fold_kind(side, second, vy, o.second_tol), second_lie: second });
            if b == 0.0 {
                i += 1;
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Isolated zeros of the first Lie derivatives on `window`, per side.
pub fn classify_tangencies(system: &PiecewiseSystem, window: (f64, f64)) -> Result<Vec<TangencyReport>> {
    classify_tangencies_with(system, window, TangencyOptions::default())
}

pub fn classify_tangencies_with(system: &PiecewiseSystem, window: (f64, f64), o: TangencyOptions) -> Result<Vec<TangencyReport>> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::Input(format!("empty window [{lo}, {hi}]")));
    }
    let mut v = side_tangencies(system.plus.as_ref(), Side::Plus, lo, hi, o)?;
    v.extend(side_tangencies(system.minus.as_ref(), Side::Minus, lo, hi, o)?);
    Ok(v)
}

/// Sewing and sliding intervals of Σ inside `window`.
pub fn region_partition(system: &PiecewiseSystem, window: (f64, f64)) -> Result<RegionPartition> {
    let tang = classify_tangencies(system, window)?;
    let mut cuts: Vec<f64> = tang.iter().map(|t| t.y).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let mut edges = vec![window.0];
    edges.extend(cuts.iter().copied().filter(|&c| c > window.0 && c < window.1));
    edges.push(window.1);
    let mut part = RegionPartition { window, sliding: vec![], sewing: vec![], tangencies: cuts };
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let prod = system.plus.eval(0.0, mid)[0] * system.minus.eval(0.0, mid)[0];
        let target = if prod > 0.0 { &mut part.sewing } else { &mut part.sliding };
        match target.last_mut() {
            Some(last) if last.1 == w[0] && prod != 0.0 => last.1 = w[1],
            _ => target.push((w[0], w[1])),
        }
    }
    Ok(part)
}

/// y-component of the Filippov sliding field
/// `(X·YF − Y·XF)/(YF − XF)` at `(0, y)`.
pub fn filippov_sliding(system: &PiecewiseSystem, y: f64) -> Result<f64> {
    let x = system.plus.eval(0.0, y);
    let v = system.minus.eval(0.0, y);
    if !(x[0] * v[0] < 0.0) {
        return Err(Error::NotSliding(y));
    }
    Ok((x[1] * v[0] - v[1] * x[0]) / (v[0] - x[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfReturn {
    pub y: f64,
    pub time: f64,
    /// Crossing with |vx| < 1e-9.
    pub grazing: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnOptions {
    pub t_max: f64,
    pub ode: OdeOptions,
    /// |x| beyond this counts as leaving the domain.
    pub x_bound: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions { t_max: 200.0, ode: OdeOptions::tight(), x_bound: 1e6 }
    }
}

/// Other endpoint of the orbit arc of `field` through `(0, y)` lying in the
/// half-plane `sign * x > 0`. The arc is followed forward in time when the
/// field points into that half-plane at `(0, y)` and backward otherwise.
fn half_return(field: &dyn PlanarField, y: f64, sign: f64, o: ReturnOptions) -> Result<HalfReturn> {
    let v0 = field.eval(0.0, y);
    if v0[0].abs() < 1e-12 {
        // Degenerate arc at a tangency.
        return Ok(HalfReturn { y, time: 0.0, grazing: true });
    }
    let s = if v0[0] * sign > 0.0 { 1.0 } else { -1.0 };
    let rhs = |_t: f64, z: &[f64; 2]| {
        let v = field.eval(z[0], z[1]);
        [s * v[0], s * v[1]]
    };
    let xb = o.x_bound;
    let events = [Event::coordinate(0, 0.0, 0, true), Event::new(move |_, z: &[f64; 2]| xb - z[0].abs(), -1, true)];
    let sol = solve(rhs, 0.0, [0.0, y], o.t_max, &events, o.ode)?;
    match sol.status {
        Status::Event(0) => {
            let vx = field.eval(0.0, sol.z_final[1])[0];
            Ok(HalfReturn { y: sol.z_final[1], time: sol.t_final, grazing: vx.abs() < 1e-9 })
        }
        Status::Event(_) => Err(Error::DomainExit(format!("|x| reached {xb} from (0, {y})"))),
        Status::Finished => Err(Error::NoReturn(format!("no return to x = 0 from (0, {y}) within t = {}", o.t_max))),
    }
}

/// ξ_X: the arc of `X` in `{x > 0}` through `(0, y)`; forward in time above
/// the tangency.
pub fn half_return_plus(system: &PiecewiseSystem, y: f64) -> Result<HalfReturn> {
    half_return(system.plus.as_ref(), y, 1.0, ReturnOptions::default())
}

/// ξ_Y: the arc of `Y` in `{x < 0}` through `(0, y)`; backward in time above
/// the tangency.
pub fn half_return_minus(system: &PiecewiseSystem, y: f64) -> Result<HalfReturn> {
    half_return(system.minus.as_ref(), y, -1.0, ReturnOptions::default())
}

pub fn half_return_plus_with(system: &PiecewiseSystem, y: f64, o: ReturnOptions) -> Result<HalfReturn> {
    half_return(system.plus.as_ref(), y, 1.0, o)
}

pub fn half_return_minus_with(system: &PiecewiseSystem, y: f64, o: ReturnOptions) -> Result<HalfReturn> {
    half_return(system.minus.as_ref(), y, -1.0, o)
}

/// Zero of `Y F` nearest to `from`, by an outward scan in both directions.
fn nearest_minus_tangency(system: &PiecewiseSystem, from: f64) -> Result<f64> {
    let g = |y: f64| system.minus.eval(0.0, y)[0];
    let g0 = g(from);
    if g0 == 0.0 {
        return Ok(from);
    }
    let mut step = 1e-3;
    let (mut up, mut down) = (from, from);
    for _ in 0..200 {
        let (u, d) = (up + step, down - step);
        if g(u) * g0 <= 0.0 {
            return brent(g, up, u, 1e-15, 200);
        }
        if g(d) * g0 <= 0.0 {
            return brent(g, d, down, 1e-15, 200);
        }
        up = u;
        down = d;
        step *= 1.25;
    }
    Err(Error::Inversion(format!("no tangency of Y near y = {from}")))
}

/// Solves ξ_Y(z) = target by a grid scan, bisection (Brent) and Newton polish.
///
/// The search runs on the far side of the tangency of `Y` nearest to `target`.
pub fn invert_half_return_minus(system: &PiecewiseSystem, target: f64) -> Result<f64> {
    let ty = nearest_minus_tangency(system, target)?;
    if (ty - target).abs() <= 1e-12 {
        return Ok(ty);
    }
    let dir = if target < ty { 1.0 } else { -1.0 };
    let reach = dir * 4.0 * (ty - target).abs().max(1e-3);
    let g = |z: f64| half_return_minus(system, z).map(|h| h.y - target);
    let n = 64;
    let zs: Vec<f64> = (1..=n).map(|i| ty + reach * i as f64 / n as f64).collect();
    let mut prev: Option<(f64, f64)> = None;
    for &z in &zs {
        let v = match g(z) {
            Ok(v) => v,
            Err(_) => {
                prev = None;
                continue;
            }
        };
        if v == 0.0 {
            return Ok(z);
        }
        if let Some((pz, pv)) = prev {
            if pv * v < 0.0 {
                let (lo, hi) = if pz < z { (pz, z) } else { (z, pz) };
                let mut err = None;
                let root = brent(
                    |s| match g(s) {
                        Ok(v) => v,
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    },
                    lo,
                    hi,
                    1e-13,
                    200,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                let root = root?;
                let h = 1e-6 * root.abs().max(1.0);
                let polished = crate::roots::newton_polish(
                    |s| g(s).unwrap_or(f64::NAN),
                    |s| (g(s + h).unwrap_or(f64::NAN) - g(s - h).unwrap_or(f64::NAN)) / (2.0 * h),
                    root,
                    lo,
                    hi,
                    3,
                );
                return Ok(polished);
            }
        }
        prev = Some((z, v));
    }
    Err(Error::Inversion(format!("no bracket for ξ_Y(z) = {target} beyond the tangency at {ty}")))
}

/// ξ = ξ_Y⁻¹ ∘ ξ_X.
pub fn first_return(system: &PiecewiseSystem, y: f64) -> Result<f64> {
    let hx = half_return_plus(system, y)?;
    invert_half_return_minus(system, hx.y)
}

/// Fit of ξ(y) = y* + c1 (y − y*) + a (y − y*)² + … around `y_star`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub y_star: f64,
    pub coefficients: Vec<f64>,
    pub a: f64,
}

/// Degree-4 least squares on 9 symmetric samples with spacing `spacing`.
pub fn fit_first_return(system: &PiecewiseSystem, y_star: f64, spacing: f64) -> Result<QuadraticFit> {
    let ys: Vec<f64> = (-4..=4).map(|i| y_star + spacing * i as f64).collect();
    let vals = ys.iter().map(|&y| first_return(system, y)).collect::<Result<Vec<_>>>()?;
    let c = polyfit(&ys, &vals, y_star, 4)?;
    Ok(QuadraticFit { y_star, a: c[2], coefficients: c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    VV,
    VI,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldFoldType {
    /// |a| below tolerance: center or higher codimension.
    Center,
    AttractingFocus,
    RepellingFocus,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldFoldReport {
    pub visibility: Visibility,
    pub kind: FoldFoldType,
    pub a: Option<f64>,
    pub plus: TangencyReport,
    pub minus: TangencyReport,
}

/// Classifies a fold-fold point at `(0, y_star)`.
pub fn classify_fold_fold(system: &PiecewiseSystem, y_star: f64) -> Result<FoldFoldReport> {
    classify_fold_fold_with(system, y_star, 1e-6, 1e-4)
}

pub fn classify_fold_fold_with(system: &PiecewiseSystem, y_star: f64, loc_tol: f64, a_tol: f64) -> Result<FoldFoldReport> {
    let tang = classify_tangencies(system, (y_star - 0.05, y_star + 0.05))?;
    let pick = |side: Side| {
        tang.iter()
            .filter(|t| t.side == side && (t.y - y_star).abs() <= loc_tol)
            .find(|t| matches!(t.kind, TangencyKind::VisibleFold | TangencyKind::InvisibleFold))
            .copied()
    };
    let (plus, minus) = match (pick(Side::Plus), pick(Side::Minus)) {
        (Some(p), Some(m)) => (p, m),
        _ => return Err(Error::NotFoldFold(format!("both sides need a fold within {loc_tol} of y = {y_star}"))),
    };
    let visible = |t: &TangencyReport| t.kind == TangencyKind::VisibleFold;
    let visibility = match (visible(&plus), visible(&minus)) {
        (true, true) => Visibility::VV,
        (false, false) => Visibility::II,
        _ => Visibility::VI,
    };
    if visibility != Visibility::II {
        return Ok(FoldFoldReport { visibility, kind: FoldFoldType::Undetermined, a: None, plus, minus });
    }
    let fit = fit_first_return(system, y_star, 1e-2)?;
    let kind = if fit.a.abs() < a_tol {
        FoldFoldType::Center
    } else if fit.a < 0.0 {
        FoldFoldType::AttractingFocus
    } else {
        FoldFoldType::RepellingFocus
    };
    Ok(FoldFoldReport { visibility, kind, a: Some(fit.a), plus, minus })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn center(alpha: f64) -> PiecewiseSystem {
        PiecewiseSystem::new(
            AffineField { m: [[0.0, 1.0], [0.0, 0.0]], c: [-1.0, alpha - 1.0] },
            AffineField { m: [[0.0, 1.0], [0.0, 0.0]], c: [-1.0, alpha + 1.0] },
        )
    }

    fn ii2(alpha: f64) -> PiecewiseSystem {
        PiecewiseSystem::new(
            AffineField { m: [[0.0, 1.0], [-1.0, 0.0]], c: [-1.0 - alpha, alpha - 1.0] },
            AffineField { m: [[-1.0, 1.0], [-1.0, 0.0]], c: [-1.0, alpha + 1.0] },
        )
    }

    #[test]
    fn lie_derivatives() {
        let s = center(0.0);
        assert_eq!(lie_derivative(s.plus.as_ref(), 1, 1.7).unwrap(), 0.7);
        assert_eq!(lie_derivative(ii2(0.0).plus.as_ref(), 2, 1.0).unwrap(), -1.0);
        assert!(matches!(lie_derivative(s.plus.as_ref(), 3, 1.0), Err(Error::UnsupportedOrder(3))));
        let z = FnField::new(|_, y| [0.0, y]);
        assert_eq!(lie_derivative(&z, 1, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn fd_second_lie_matches_analytic() {
        let s = ii2(0.0);
        let f = s.plus.clone();
        let g = FnField::new(move |x, y| f.eval(x, y));
        let a = lie_derivative(&g, 2, 1.0).unwrap();
        assert!((a + 1.0).abs() < 1e-9);
    }

    #[test]
    fn ii2_tangencies() {
        let t = classify_tangencies(&ii2(0.1), (0.5, 1.5)).unwrap();
        assert_eq!(t.len(), 2);
        let p = t.iter().find(|t| t.side == Side::Plus).unwrap();
        let m = t.iter().find(|t| t.side == Side::Minus).unwrap();
        assert!((p.y - 1.1).abs() < 1e-12 && (m.y - 1.0).abs() < 1e-12);
        assert_eq!(p.kind, TangencyKind::InvisibleFold);
        assert_eq!(m.kind, TangencyKind::InvisibleFold);
    }

    #[test]
    fn transversal_and_degenerate() {
        let s = PiecewiseSystem::new(FnField::new(|_, _| [1.0, 0.0]), FnField::new(|_, _| [1.0, 0.0]));
        assert!(classify_tangencies(&s, (0.0, 1.0)).unwrap().is_empty());
        let d = PiecewiseSystem::new(FnField::new(|_, _| [0.0, 1.0]), FnField::new(|_, _| [1.0, 0.0]));
        assert!(matches!(classify_tangencies(&d, (0.0, 1.0)), Err(Error::DegenerateTangencyLocus { .. })));
    }

    #[test]
    fn partitions() {
        let p = region_partition(&ii2(0.2), (0.5, 1.5)).unwrap();
        assert_eq!(p.sliding.len(), 1);
        assert!((p.sliding[0].0 - 1.0).abs() < 1e-12 && (p.sliding[0].1 - 1.2).abs() < 1e-12);
        let c = region_partition(&center(0.0), (0.5, 1.5)).unwrap();
        assert!(c.sliding.is_empty());
        let below = region_partition(&ii2(0.0), (0.2, 0.8)).unwrap();
        assert_eq!(below.sewing, vec![(0.2, 0.8)]);
    }

    #[test]
    fn sliding_field_ii2() {
        let a = 0.2;
        let s = ii2(a);
        for &y in &[1.02, 1.1, 1.19] {
            let v = filippov_sliding(&s, y).unwrap();
            assert!((a * v - (a * a + a - 2.0 * y + 2.0)).abs() < 1e-12);
        }
        let eq = (a * a + a + 2.0) / 2.0;
        assert!(filippov_sliding(&s, eq).unwrap().abs() < 1e-12);
        assert!(matches!(filippov_sliding(&s, 1.5), Err(Error::NotSliding(_))));
    }

    #[test]
    fn sliding_field_symmetric() {
        let s = PiecewiseSystem::new(FnField::new(|_, y| [-y, 3.0]), FnField::new(|_, y| [y, 3.0]));
        assert!((filippov_sliding(&s, 0.7).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn half_returns_linear_center() {
        for &y in &[1.1, 1.5, 1.9] {
            assert!((half_return_plus(&center(0.0), y).unwrap().y - (2.0 - y)).abs() < 1e-9);
            assert!((half_return_minus(&center(0.0), y).unwrap().y - (2.0 - y)).abs() < 1e-9);
            assert!((half_return_plus(&ii2(0.0), y).unwrap().y - (2.0 - y)).abs() < 1e-9);
        }
        assert!(half_return_plus(&center(0.0), 1.0).unwrap().grazing);
    }

    #[test]
    fn first_return_center_is_identity() {
        for &y in &[1.2, 1.6] {
            assert!((first_return(&center(0.0), y).unwrap() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn fold_fold_types() {
        let r = classify_fold_fold(&ii2(0.0), 1.0).unwrap();
        assert_eq!(r.visibility, Visibility::II);
        assert_eq!(r.kind, FoldFoldType::AttractingFocus);
        let c = classify_fold_fold(&center(0.0), 1.0).unwrap();
        assert_eq!(c.kind, FoldFoldType::Center);
        let vv = PiecewiseSystem::new(
            AffineField { m: [[0.0, 1.0], [0.0, 0.0]], c: [-1.0, 1.0] },
            AffineField { m: [[0.0, 1.0], [0.0, 0.0]], c: [-1.0, -1.0] },
        );
        let r = classify_fold_fold(&vv, 1.0).unwrap();
        assert_eq!(r.visibility, Visibility::VV);
        assert!(classify_fold_fold(&ii2(0.3), 1.0).is_err());
    }
}
