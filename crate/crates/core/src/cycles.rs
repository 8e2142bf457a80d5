//! Orbit integration in the scaling chart, return maps on {x₂ = 0}, tuning
//! of the breaking parameter α̃ and limit-cycle bookkeeping.

use crate::error::{Error, Result};
use crate::ode::{solve, Event, OdeOptions, Solution, Status};
use crate::psvf::PlanarField;
use crate::roots::brent;
use crate::sdi::fiber_point;
use crate::slowfast::{ChartSystem, CriticalData};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest ε the chart integrations are meant for.
pub const EPS_FLOOR: f64 = 0.02;

/// Integrates a planar field from `start` for at most `t_budget`.
pub fn integrate(
    field: &dyn PlanarField,
    start: [f64; 2],
    t_budget: f64,
    events: &[Event<'_, 2>],
    opts: OdeOptions,
) -> Result<Solution<2>> {
    solve(|_, z: &[f64; 2]| field.eval(z[0], z[1]), 0.0, start, t_budget, events, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// Above both tangency heights.
    Terminal,
    /// Strictly between the tangency heights.
    Dodging,
    /// Below both tangency heights, inside the small-cycle ceiling.
    Small,
}

/// The section {x₂ = 0, y ∈ window}, crossed with x₂ increasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionSpec {
    pub window: (f64, f64),
    pub kind: SectionKind,
}

impl SectionSpec {
    pub fn new(window: (f64, f64), kind: SectionKind) -> Self {
        SectionSpec { window, kind }
    }

    /// Checks the window against the tangency heights of `chart` at α = 0.
    pub fn validate(&self, chart: &ChartSystem) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo < hi && lo > 0.0) {
            return Err(Error::Input(format!("bad section window ({lo}, {hi})")));
        }
        let (yx, yy) = chart.comb.tangency_heights(0.0);
        let (tl, th) = (yx.min(yy), yx.max(yy));
        let ok = match self.kind {
            SectionKind::Terminal => lo > th,
            SectionKind::Dodging => lo > tl && hi < th,
            SectionKind::Small => hi < tl,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{:?} window ({lo}, {hi}) incompatible with tangency heights {tl}, {th}",
                self.kind
            )))
        }
    }

    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.window;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    pub ode: OdeOptions,
    /// Chart-time budget is `budget / width`.
    pub budget: f64,
    pub x_bound: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { ode: OdeOptions::tight(), budget: 100.0, x_bound: 1e9 }
    }
}

impl OrbitOptions {
    pub fn loose(&self) -> Self {
        let mut o = *self;
        o.ode.rtol *= 100.0;
        o.ode.atol *= 100.0;
        o
    }
}

/// Forward (`sign` = 1) or backward (`sign` = −1) arc from (0, y) to the next
/// crossing of x₂ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfOrbit {
    pub y_end: f64,
    /// Chart time.
    pub time: f64,
    /// ln |dy_end/dy|.
    pub log_deriv: f64,
    pub deriv_sign: f64,
    /// Height at which the arc re-enters the stripe |x₂| < 1.
    pub landing: Option<f64>,
}

/// The derivative uses Π′(y) = f₁(0, y)/f₁(0, Π(y))·exp(∫ div dt) along the arc.
pub fn half_orbit(chart: &ChartSystem, y: f64, sign: f64, o: &OrbitOptions) -> Result<HalfOrbit> {
    let s = sign.signum();
    let dir = if s > 0.0 { -1 } else { 1 };
    let xb = o.x_bound;
    let events = [
        Event::coordinate(0, 0.0, dir, true),
        Event::coordinate(0, s, dir, false),
        Event::new(move |_, z: &[f64; 3]| xb - z[0].abs(), -1, true),
    ];
    let sol = solve(
        |_, z: &[f64; 3]| {
            let v = chart.rhs(z[0], z[1]);
            [s * v[0], s * v[1], s * chart.divergence(z[0], z[1])]
        },
        0.0,
        [0.0, y, 0.0],
        o.budget / chart.width(),
        &events,
        o.ode,
    )?;
    match sol.status {
        Status::Event(0) => {
            let z = sol.z_final;
            let f0 = chart.rhs(0.0, y)[0];
            let f1 = chart.rhs(0.0, z[1])[0];
            let landing = sol.events.iter().rfind(|e| e.index == 1).map(|e| e.z[1]);
            Ok(HalfOrbit {
                y_end: z[1],
                time: sol.t_final,
                log_deriv: f0.abs().ln() - f1.abs().ln() + z[2],
                deriv_sign: (f0 * f1).signum(),
                landing,
            })
        }
        Status::Event(_) => Err(Error::DomainExit(format!("orbit from (0, {y}) left |x2| < {xb}"))),
        Status::Finished => Err(Error::NoReturn(format!("no return to x2 = 0 from (0, {y}) within the time budget"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Displacement {
    pub y: f64,
    /// sign(Π⁻′)·(Π⁺ − Π⁻); same sign as return(y) − y.
    pub value: f64,
    pub plus: HalfOrbit,
    pub minus: HalfOrbit,
}

impl Displacement {
    /// Return-map derivative Π⁺′/Π⁻′.
    pub fn multiplier(&self) -> f64 {
        self.plus.deriv_sign * self.minus.deriv_sign * (self.plus.log_deriv - self.minus.log_deriv).exp()
    }

    /// Period in original time.
    pub fn period(&self, chart: &ChartSystem) -> f64 {
        chart.width() * (self.plus.time + self.minus.time)
    }
}

pub fn displacement_full(chart: &ChartSystem, y: f64, o: &OrbitOptions) -> Result<Displacement> {
    let plus = half_orbit(chart, y, 1.0, o)?;
    let minus = half_orbit(chart, y, -1.0, o)?;
    Ok(Displacement { y, value: minus.deriv_sign * (plus.y_end - minus.y_end), plus, minus })
}

/// Difference-map displacement at (0, y); zero exactly at fixed points of the return map.
pub fn displacement(chart: &ChartSystem, y: f64) -> Result<f64> {
    displacement_full(chart, y, &OrbitOptions::default()).map(|d| d.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnResult {
    pub y_return: f64,
    /// Period in original time.
    pub period: f64,
    pub steps: usize,
    pub used_implicit: bool,
}

/// Full forward orbit from (0, y) back to {x₂ = 0} crossed with x₂ increasing.
pub fn poincare_return(chart: &ChartSystem, section: &SectionSpec, y: f64) -> Result<ReturnResult> {
    poincare_return_with(chart, section, y, &OrbitOptions::default())
}

pub fn poincare_return_with(chart: &ChartSystem, section: &SectionSpec, y: f64, o: &OrbitOptions) -> Result<ReturnResult> {
    let (lo, hi) = section.window;
    if !(y >= lo && y <= hi) {
        return Err(Error::Precondition(format!("y = {y} outside section window ({lo}, {hi})")));
    }
    let xb = o.x_bound;
    let events = [Event::coordinate(0, 0.0, 1, true), Event::new(move |_, z: &[f64; 2]| xb - z[0].abs(), -1, true)];
    let sol = integrate(chart, [0.0, y], 2.0 * o.budget / chart.width(), &events, o.ode)?;
    match sol.status {
        Status::Event(0) => Ok(ReturnResult {
            y_return: sol.z_final[1],
            period: chart.width() * sol.t_final,
            steps: sol.steps,
            used_implicit: sol.used_implicit,
        }),
        Status::Event(_) => Err(Error::DomainExit(format!("orbit from (0, {y}) escaped"))),
        Status::Finished => Err(Error::NoReturn(format!("no return to the section from (0, {y})"))),
    }
}

/// Point (x₂, F(x₂)) on a critical branch, given by x₂ or by its height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    X2(f64),
    Height(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneOptions {
    pub range: (f64, f64),
    /// Anchors on the attracting (x₂ > 0) and repelling (x₂ < 0) branches.
    pub anchors: (Anchor, Anchor),
    pub xtol: f64,
}

impl TuneOptions {
    /// Anchors at 0.8·M₂ and −0.8·M₁, range [−c·ε, c·ε].
    pub fn standard(critical: &CriticalData, eps: f64, c: f64) -> Self {
        TuneOptions {
            range: (-c * eps, c * eps),
            anchors: (Anchor::X2(0.8 * critical.m2), Anchor::X2(-0.8 * critical.m1)),
            xtol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneResult {
    pub alpha_t: f64,
    /// Value of the matching function at `alpha_t` (may be ±∞ next to the jump).
    pub gap: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

fn anchor_point(c: &CriticalData, a: Anchor, plus: bool) -> Result<[f64; 2]> {
    let x = match a {
        Anchor::X2(x) => x,
        Anchor::Height(h) => fiber_point(c, h, if plus { 1.0 } else { -1.0 })?,
    };
    Ok([x, c.f(x)])
}

/// Height where the orbit from `start` first meets x₂ = 0 in the direction of `sign`.
fn shoot(chart: &ChartSystem, start: [f64; 2], sign: f64, o: &OrbitOptions) -> Result<Option<f64>> {
    let dir = if sign > 0.0 { -1 } else { 1 };
    let xb = o.x_bound;
    let events = [Event::coordinate(0, 0.0, dir, true), Event::new(move |_, z: &[f64; 2]| xb - z[0].abs(), -1, true)];
    let sol = solve(
        |_, z: &[f64; 2]| {
            let v = chart.rhs(z[0], z[1]);
            [sign * v[0], sign * v[1]]
        },
        0.0,
        start,
        o.budget / chart.width(),
        &events,
        o.ode,
    )?;
    Ok(match sol.status {
        Status::Event(0) => Some(sol.z_final[1]),
        _ => None,
    })
}

/// Matching gap between the forward shot from the attracting anchor and the
/// backward shot from the repelling anchor; ±∞ when a shot misses x₂ = 0.
pub fn connection_gap(chart: &ChartSystem, critical: &CriticalData, anchors: (Anchor, Anchor), o: &OrbitOptions) -> Result<f64> {
    let a = anchor_point(critical, anchors.0, true)?;
    let b = anchor_point(critical, anchors.1, false)?;
    let Some(fa) = shoot(chart, a, 1.0, o)? else {
        return Ok(f64::INFINITY);
    };
    let Some(fb) = shoot(chart, b, -1.0, o)? else {
        return Ok(f64::NEG_INFINITY);
    };
    Ok(fa - fb)
}

fn sign_bisect<F: Fn(f64) -> Result<f64>>(g: F, range: (f64, f64), xtol: f64) -> Result<TuneResult> {
    let (mut lo, mut hi) = range;
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo == 0.0 {
        return Ok(TuneResult { alpha_t: lo, gap: 0.0, bracket: (lo, lo), iterations: 0 });
    }
    if ghi == 0.0 {
        return Ok(TuneResult { alpha_t: hi, gap: 0.0, bracket: (hi, hi), iterations: 0 });
    }
    if glo.signum() == ghi.signum() || glo.is_nan() || ghi.is_nan() {
        return Err(Error::NoConnectionInRange { lo, hi });
    }
    let slo = glo.signum();
    let mut it = 0;
    let mut gap = glo;
    while hi - lo > xtol * (1.0 + lo.abs().max(hi.abs())) && it < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        it += 1;
        if gm == 0.0 {
            return Ok(TuneResult { alpha_t: mid, gap: 0.0, bracket: (mid, mid), iterations: it });
        }
        if gm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
        gap = gm;
    }
    let alpha_t = 0.5 * (lo + hi);
    let _ = gap;
    let gap = g(alpha_t)?;
    Ok(TuneResult { alpha_t, gap, bracket: (lo, hi), iterations: it })
}

/// α̃ at which the two slow-manifold shots meet on x₂ = 0 (sign-only bisection).
pub fn tune_alpha(chart: &ChartSystem, critical: &CriticalData, opts: &TuneOptions) -> Result<TuneResult> {
    if chart.eps < EPS_FLOOR {
        return Err(Error::BelowEpsFloor { eps: chart.eps, floor: EPS_FLOOR });
    }
    let o = OrbitOptions::default();
    sign_bisect(|a| connection_gap(&chart.with_alpha(a), critical, opts.anchors, &o), opts.range, opts.xtol)
}

/// α̃ with displacement(y₀) = 0: the first sign change of a 41-point scan of
/// `range` nearest its centre, refined by sign-only bisection.
pub fn tune_alpha_anchor_y(chart: &ChartSystem, y0: f64, range: (f64, f64), xtol: f64) -> Result<TuneResult> {
    if chart.eps < EPS_FLOOR {
        return Err(Error::BelowEpsFloor { eps: chart.eps, floor: EPS_FLOOR });
    }
    let o = OrbitOptions::default();
    let d = |a: f64| displacement_full(&chart.with_alpha(a), y0, &o).map(|d| d.value).unwrap_or(f64::NAN);
    let n = 40;
    let xs: Vec<f64> = (0..=n).map(|i| range.0 + (range.1 - range.0) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.par_iter().map(|&a| d(a)).collect();
    let mid = 0.5 * (range.0 + range.1);
    let best = (0..n)
        .filter(|&i| vs[i].is_finite() && vs[i + 1].is_finite() && vs[i] * vs[i + 1] <= 0.0)
        .min_by(|&i, &j| (xs[i] - mid).abs().total_cmp(&(xs[j] - mid).abs()))
        .ok_or(Error::NoConnectionInRange { lo: range.0, hi: range.1 })?;
    sign_bisect(
        |a| displacement_full(&chart.with_alpha(a), y0, &o).map(|d| d.value),
        (xs[best], xs[best + 1]),
        xtol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlSample {
    pub eps: f64,
    pub alpha_t: f64,
    pub residual: f64,
}

/// Samples of the breaking parameter α̃(ε), interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlCurve {
    pub samples: Vec<ControlSample>,
}

impl ControlCurve {
    pub fn new(mut samples: Vec<ControlSample>) -> Self {
        samples.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        ControlCurve { samples }
    }

    pub fn eval(&self, eps: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || eps < s[0].eps || eps > s[s.len() - 1].eps {
            return None;
        }
        let i = s.partition_point(|p| p.eps <= eps).min(s.len() - 1).max(1);
        if s.len() == 1 {
            return Some(s[0].alpha_t);
        }
        let (a, b) = (s[i - 1], s[i]);
        if b.eps == a.eps {
            return Some(a.alpha_t);
        }
        let t = (eps - a.eps) / (b.eps - a.eps);
        Some(a.alpha_t + t * (b.alpha_t - a.alpha_t))
    }

    /// Largest |α̃| over the samples.
    pub fn bound(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.alpha_t.abs()))
    }
}

/// Tunes α̃ at each ε of `eps_list`.
pub fn control_curve(chart: &ChartSystem, critical: &CriticalData, eps_list: &[f64], c: f64) -> Result<ControlCurve> {
    let samples = eps_list
        .par_iter()
        .map(|&e| {
            let r = tune_alpha(&chart.with_eps(e), critical, &TuneOptions::standard(critical, e, c))?;
            Ok(ControlSample { eps: e, alpha_t: r.alpha_t, residual: r.gap })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ControlCurve::new(samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    NearNeutral,
}

/// Predicted landing heights of the canard skeleton on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Skeleton {
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub y0: f64,
    pub period: f64,
    pub multiplier: f64,
    pub stability: Stability,
    pub eps: f64,
    pub alpha_t: f64,
    pub residual: f64,
    pub landing_plus: Option<f64>,
    pub landing_minus: Option<f64>,
    /// max |landing − predicted landing| over both sides.
    pub hausdorff_proxy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub y: f64,
    pub value: f64,
    /// Value from the 100× looser integration.
    pub loose: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleSearch {
    pub records: Vec<CycleRecord>,
    /// Refined zeros dropped because the return-map derivative was not positive.
    pub rejected: Vec<f64>,
    pub samples: Vec<Sample>,
    /// No sample rose above its noise estimate.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CycleOptions {
    pub grid_n: usize,
    pub orbit: OrbitOptions,
    /// A sample counts only if |Δ| exceeds `noise_factor` times the difference
    /// between the tight and the 100× looser integration.
    pub noise_factor: f64,
    /// Relative floor, scaled by max(1, |y|).
    pub noise_floor: f64,
    pub skeleton: Option<Skeleton>,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions { grid_n: 60, orbit: OrbitOptions::default(), noise_factor: 1.0, noise_floor: 5e-15, skeleton: None }
    }
}

fn classify(m: f64) -> Stability {
    if m.abs() < 1.0 - 1e-3 {
        Stability::Stable
    } else if m.abs() > 1.0 + 1e-3 {
        Stability::Unstable
    } else {
        Stability::NearNeutral
    }
}

fn sample(chart: &ChartSystem, y: f64, o: &CycleOptions) -> Sample {
    let tight = displacement_full(chart, y, &o.orbit).map(|d| d.value);
    let loose = displacement_full(chart, y, &o.orbit.loose()).map(|d| d.value);
    match (tight, loose) {
        (Ok(t), Ok(l)) => Sample { y, value: t, loose: l, noise: (t - l).abs() },
        _ => Sample { y, value: f64::NAN, loose: f64::NAN, noise: f64::INFINITY },
    }
}

impl Sample {
    pub fn trusted(&self, o: &CycleOptions) -> bool {
        self.value.is_finite()
            && self.value.signum() == self.loose.signum()
            && self.value.abs() > o.noise_factor * self.noise + o.noise_floor * self.y.abs().max(1.0)
    }
}

/// Fixed point record at a refined y₀.
pub fn cycle_record(chart: &ChartSystem, y0: f64, o: &CycleOptions) -> Result<CycleRecord> {
    let d = displacement_full(chart, y0, &o.orbit)?;
    let m = d.multiplier();
    let proxy = match (o.skeleton, d.plus.landing, d.minus.landing) {
        (Some(s), Some(p), Some(q)) => Some((p - s.plus).abs().max((q - s.minus).abs())),
        _ => None,
    };
    Ok(CycleRecord {
        y0,
        period: d.period(chart),
        multiplier: m,
        stability: classify(m),
        eps: chart.eps,
        alpha_t: chart.alpha_t,
        residual: d.value,
        landing_plus: d.plus.landing,
        landing_minus: d.minus.landing,
        hausdorff_proxy: proxy,
    })
}

/// Scans the section window, refines every trusted sign change of the
/// displacement by Brent and records the fixed points.
pub fn find_cycles(chart: &ChartSystem, section: &SectionSpec, o: &CycleOptions) -> CycleSearch {
    let ys = section.grid(o.grid_n.max(2));
    let samples: Vec<Sample> = ys.par_iter().map(|&y| sample(chart, y, o)).collect();
    let trusted: Vec<bool> = samples.iter().map(|s| s.trusted(o)).collect();
    let degenerate = !trusted.iter().any(|&t| t);
    // Consecutive trusted samples of opposite sign, at most one untrusted sample apart.
    let idx: Vec<usize> = (0..samples.len()).filter(|&i| trusted[i]).collect();
    let brackets: Vec<(f64, f64)> = idx
        .windows(2)
        .filter(|w| w[1] - w[0] <= 2 && samples[w[0]].value * samples[w[1]].value < 0.0)
        .map(|w| (samples[w[0]].y, samples[w[1]].y))
        .collect();
    let found: Vec<CycleRecord> = brackets
        .par_iter()
        .filter_map(|&(a, b)| {
            let f = |y: f64| displacement_full(chart, y, &o.orbit).map(|d| d.value).unwrap_or(f64::NAN);
            let y0 = brent(f, a, b, 1e-14, 200).ok()?;
            cycle_record(chart, y0, o).ok()
        })
        .collect();
    let (records, bad): (Vec<CycleRecord>, Vec<CycleRecord>) = found.into_iter().partition(|r| r.multiplier > 0.0);
    let rejected = bad.iter().map(|r| r.y0).collect();
    CycleSearch { records, rejected, samples, degenerate }
}

/// Anchor height for a second fixed point: the trusted interior extremum of Δ
/// next to the top fixed point, pushed 1.5 times its distance further out.
/// Below the fixed point is tried first.
pub fn suggest_anchor_y(search: &CycleSearch, o: &CycleOptions) -> Option<f64> {
    let trusted: Vec<&Sample> = search.samples.iter().filter(|s| s.trusted(o)).collect();
    let (lo, hi) = (trusted.first()?.y, trusted.last()?.y);
    let y_z = search.records.iter().map(|r| r.y0).max_by(f64::total_cmp)?;
    let below: Vec<&Sample> = trusted.iter().rev().copied().filter(|s| s.y < y_z).collect();
    let above: Vec<&Sample> = trusted.iter().copied().filter(|s| s.y > y_z).collect();
    for run in [below, above] {
        let Some(first) = run.first() else { continue };
        let sign = first.value.signum();
        let side: Vec<&Sample> = run.iter().copied().take_while(|s| s.value.signum() == sign).collect();
        let (k, m) = side
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.value.abs().total_cmp(&b.1.value.abs()))?;
        if k + 1 == side.len() {
            continue;
        }
        let y0 = m.y - 1.5 * (y_z - m.y);
        if y0 > lo && y0 < hi {
            return Some(y0);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleNode {
    pub alpha_c: f64,
    pub y_c: f64,
    /// Distance between the two fixed points at the last α̃ where both exist.
    pub separation: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleNodeResult {
    pub counts: Vec<(f64, usize)>,
    pub fold: Option<SaddleNode>,
    pub degenerate: bool,
}

/// Local extremum of the displacement in `[a, b]` (golden section on ±Δ).
fn extremum(chart: &ChartSystem, a: f64, b: f64, minimum: bool, o: &OrbitOptions) -> Result<(f64, f64)> {
    let s = if minimum { 1.0 } else { -1.0 };
    let f = |y: f64| displacement_full(chart, y, o).map(|d| s * d.value);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-9 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let y = 0.5 * (a + b);
    Ok((y, s * f(y)?))
}

/// Sweeps α̃ over `alphas`, counts fixed points in the section and locates
/// the fold where a pair of fixed points disappears.
pub fn detect_saddle_node(chart: &ChartSystem, section: &SectionSpec, alphas: &[f64], o: &CycleOptions) -> Result<SaddleNodeResult> {
    if chart.eps < EPS_FLOOR {
        return Err(Error::BelowEpsFloor { eps: chart.eps, floor: EPS_FLOOR });
    }
    if alphas.len() < 2 {
        return Err(Error::Input("saddle-node sweep needs at least two values of alpha".into()));
    }
    let scans: Vec<CycleSearch> = alphas.iter().map(|&a| find_cycles(&chart.with_alpha(a), section, o)).collect();
    let counts: Vec<(f64, usize)> = alphas.iter().zip(&scans).map(|(&a, s)| (a, s.records.len())).collect();
    let degenerate = scans.iter().all(|s| s.degenerate);
    let mut out = SaddleNodeResult { counts, fold: None, degenerate };
    if degenerate {
        return Ok(out);
    }
    // Adjacent sweep values where a pair of fixed points is lost; pairs that
    // leave through the window edges are discarded.
    let drops: Vec<usize> = (0..alphas.len() - 1)
        .filter(|&i| {
            let (c0, c1) = (out.counts[i].1, out.counts[i + 1].1);
            (c0 >= 2 && c1 + 2 <= c0) || (c1 >= 2 && c0 + 2 <= c1)
        })
        .collect();
    for i in drops {
        let (with, without) = if out.counts[i].1 > out.counts[i + 1].1 { (i, i + 1) } else { (i + 1, i) };
        if let Some(fold) = locate_fold(chart, section, &scans[with], alphas[with], alphas[without], o)? {
            out.fold = Some(fold);
            break;
        }
    }
    Ok(out)
}

fn locate_fold(
    chart: &ChartSystem,
    section: &SectionSpec,
    scan: &CycleSearch,
    a_with: f64,
    a_without: f64,
    o: &CycleOptions,
) -> Result<Option<SaddleNode>> {
    let mut ys: Vec<f64> = scan.records.iter().map(|r| r.y0).collect();
    ys.sort_by(f64::total_cmp);
    let k = (0..ys.len() - 1)
        .min_by(|&a, &b| (ys[a + 1] - ys[a]).total_cmp(&(ys[b + 1] - ys[b])))
        .unwrap();
    let (y1, y2) = (ys[k], ys[k + 1]);
    let (w0, w1) = section.window;
    let (lo, hi) = (w0.max(y1 - (y2 - y1)), w1.min(y2 + (y2 - y1)));
    let mid = displacement_full(&chart.with_alpha(a_with), 0.5 * (y1 + y2), &o.orbit)?.value;
    let minimum = mid < 0.0;
    let margin = 1e-3 * (w1 - w0);
    let exists = |a: f64| -> Result<(bool, f64)> {
        let (ye, fe) = extremum(&chart.with_alpha(a), lo, hi, minimum, &o.orbit)?;
        let interior = ye > lo + margin && ye < hi - margin;
        Ok(((fe < 0.0) == minimum && fe != 0.0 && interior, ye))
    };
    let (mut aw, mut an) = (a_with, a_without);
    let mut last = exists(aw)?;
    if !last.0 || exists(an)?.0 {
        return Ok(None);
    }
    for _ in 0..80 {
        let m = 0.5 * (aw + an);
        if m == aw || m == an {
            break;
        }
        let e = exists(m)?;
        if e.0 {
            aw = m;
            last = e;
        } else {
            an = m;
        }
    }
    let ye = last.1;
    if !(ye > lo + margin && ye < hi - margin) {
        return Ok(None);
    }
    let cf = chart.with_alpha(aw);
    let f = |y: f64| displacement_full(&cf, y, &o.orbit).map(|d| d.value).unwrap_or(f64::NAN);
    let za = brent(f, lo, ye, 1e-14, 200).unwrap_or(ye);
    let zb = brent(f, ye, hi, 1e-14, 200).unwrap_or(ye);
    let multiplier = displacement_full(&cf, ye, &o.orbit)?.multiplier();
    Ok(Some(SaddleNode { alpha_c: 0.5 * (aw + an), y_c: ye, separation: (zb - za).abs(), multiplier }))
}

/// Connection tuning at a given ε: `c` sets the default range [−c·ε, c·ε];
/// `range` and `anchors` override the defaults of [`TuneOptions::standard`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunePlan {
    pub c: f64,
    #[serde(default)]
    pub range: Option<(f64, f64)>,
    #[serde(default)]
    pub anchors: Option<(Anchor, Anchor)>,
}

impl TunePlan {
    pub fn new(c: f64) -> Self {
        TunePlan { c, range: None, anchors: None }
    }

    pub fn options(&self, critical: &CriticalData, eps: f64) -> TuneOptions {
        let mut t = TuneOptions::standard(critical, eps, self.c);
        if let Some(r) = self.range {
            t.range = r;
        }
        if let Some(a) = self.anchors {
            t.anchors = a;
        }
        t
    }
}

/// How α̃ is chosen at each ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    Fixed(f64),
    /// Slow-manifold connection.
    Connection(TunePlan),
    /// Connection, then retuned within a fifth of the tuning range so that Δ
    /// vanishes at [`suggest_anchor_y`] when fewer than two fixed points were found.
    Anchored(TunePlan),
}

impl AlphaPolicy {
    pub fn resolve(&self, chart: &ChartSystem, critical: &CriticalData, section: &SectionSpec, o: &CycleOptions) -> Result<f64> {
        match self {
            AlphaPolicy::Fixed(a) => Ok(*a),
            AlphaPolicy::Connection(p) => tune_alpha(chart, critical, &p.options(critical, chart.eps)).map(|r| r.alpha_t),
            AlphaPolicy::Anchored(p) => anchored_alpha(chart, critical, section, p, o),
        }
    }
}

/// α̃ from [`AlphaPolicy::Anchored`].
pub fn anchored_alpha(chart: &ChartSystem, critical: &CriticalData, section: &SectionSpec, plan: &TunePlan, o: &CycleOptions) -> Result<f64> {
    let t = plan.options(critical, chart.eps);
    let a = tune_alpha(chart, critical, &t)?.alpha_t;
    let search = find_cycles(&chart.with_alpha(a), section, o);
    if search.records.len() >= 2 {
        return Ok(a);
    }
    let Some(y0) = suggest_anchor_y(&search, o) else {
        return Ok(a);
    };
    let h = 0.1 * (t.range.1 - t.range.0);
    Ok(tune_alpha_anchor_y(chart, y0, (a - h, a + h), 1e-15)?.alpha_t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub alpha_t: Option<f64>,
    pub fixed_points: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// x₂⁺ of the landing height of each fixed point.
    pub fibers: Vec<f64>,
    /// min over fibers and predictions of |fiber − predicted| / |predicted|.
    pub distance: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub predicted_fibers: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// Distances are non-increasing as ε decreases.
    pub monotone: bool,
}

/// One ε of [`convergence_study`]; failures are recorded in `flag`.
pub fn convergence_row(
    chart: &ChartSystem,
    critical: &CriticalData,
    section: &SectionSpec,
    predicted_fibers: &[f64],
    policy: AlphaPolicy,
    o: &CycleOptions,
) -> ConvergenceRow {
    let mut row = ConvergenceRow {
        eps: chart.eps,
        alpha_t: None,
        fixed_points: vec![],
        multipliers: vec![],
        fibers: vec![],
        distance: None,
        flag: None,
    };
    let a = match policy.resolve(chart, critical, section, o) {
        Ok(a) => a,
        Err(err) => {
            row.flag = Some(err.to_string());
            return row;
        }
    };
    row.alpha_t = Some(a);
    let search = find_cycles(&chart.with_alpha(a), section, o);
    if search.records.is_empty() && !predicted_fibers.is_empty() {
        row.flag = Some("no cycles found".into());
    }
    for r in &search.records {
        row.fixed_points.push(r.y0);
        row.multipliers.push(r.multiplier);
        if let Some(h) = r.landing_plus {
            if let Ok(x) = fiber_point(critical, h, 1.0) {
                row.fibers.push(x);
            }
        }
    }
    row.distance = row
        .fibers
        .iter()
        .flat_map(|x| predicted_fibers.iter().map(move |z| (x - z).abs() / z.abs()))
        .min_by(f64::total_cmp);
    row
}

/// For each ε: α̃ by `policy`, fixed points on `section`, and the relative
/// distance of their landing fibers to the nearest of `predicted_fibers`.
pub fn convergence_study(
    chart: &ChartSystem,
    critical: &CriticalData,
    section: &SectionSpec,
    eps_list: &[f64],
    predicted_fibers: &[f64],
    policy: AlphaPolicy,
    o: &CycleOptions,
) -> Result<ConvergenceTable> {
    if eps_list.len() < 2 {
        return Err(Error::Input("convergence study needs at least two values of epsilon".into()));
    }
    let rows: Vec<ConvergenceRow> = eps_list
        .iter()
        .map(|&e| convergence_row(&chart.with_eps(e), critical, section, predicted_fibers, policy, o))
        .collect();
    let mut sorted: Vec<&ConvergenceRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = sorted.windows(2).all(|w| match (w[0].distance, w[1].distance) {
        (Some(a), Some(b)) => b <= a,
        (None, None) => true,
        _ => false,
    });
    Ok(ConvergenceTable { predicted_fibers: predicted_fibers.to_vec(), rows, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceIntegral {
    /// ∫ div dt in chart time.
    pub raw: f64,
    /// ε²·raw: the slow-time normalization.
    pub scaled: f64,
    /// max |y − F(x₂)| along the segment.
    pub max_offset: f64,
}

/// ∫ div along the chart orbit from `start` between the crossings of
/// x₂ = `entry` and x₂ = `exit`.
pub fn divergence_along_orbit(
    chart: &ChartSystem,
    critical: &CriticalData,
    start: [f64; 2],
    entry: f64,
    exit: f64,
) -> Result<DivergenceIntegral> {
    if entry == exit {
        return Ok(DivergenceIntegral { raw: 0.0, scaled: 0.0, max_offset: 0.0 });
    }
    let dir = if exit < entry { -1 } else { 1 };
    let events = [Event::coordinate(0, entry, dir, false), Event::coordinate(0, exit, dir, true)];
    let mut o = OdeOptions::tight();
    o.record = true;
    let sol = solve(
        |_, z: &[f64; 3]| {
            let v = chart.rhs(z[0], z[1]);
            [v[0], v[1], chart.divergence(z[0], z[1])]
        },
        0.0,
        [start[0], start[1], 0.0],
        200.0 / chart.width(),
        &events,
        o,
    )?;
    let hit_in = sol.first_event(0).copied();
    let (Some(e_in), Status::Event(1)) = (hit_in, sol.status) else {
        return Err(Error::NotACanardSegment(format!("orbit from {start:?} does not cross x2 = {entry} then {exit}")));
    };
    let t0 = e_in.t;
    let max_offset = sol
        .t
        .iter()
        .zip(&sol.z)
        .filter(|(t, _)| **t >= t0)
        .map(|(_, z)| (z[1] - critical.f(z[0])).abs())
        .fold(0.0, f64::max);
    if max_offset > chart.eps.sqrt() {
        return Err(Error::NotACanardSegment(format!("distance {max_offset} to the critical curve exceeds sqrt(eps)")));
    }
    let raw = sol.z_final[2] - e_in.z[2];
    Ok(DivergenceIntegral { raw, scaled: chart.width() * raw, max_offset })
}
