//! The single-step subcommands.

use crate::output::{envelope, read, write_json, ManifestHash, Table};
use clap::{Args, ValueEnum};
use foldreg::config::{ModelSpec, PhiSpec, SystemSpec};
use foldreg::cycles::{
    detect_saddle_node, find_cycles, Anchor, AlphaPolicy, CycleOptions, SectionKind, SectionSpec, TunePlan, EPS_FLOOR,
};
use foldreg::psvf::{classify_fold_fold, classify_tangencies, region_partition, FoldFoldReport, TangencyReport, RegionPartition};
use foldreg::sdi::{center_closed_form, find_zeros_with, sdi_branch, SdiProfile, ZeroOptions, ZeroSet};
use foldreg::slowfast::{chart_field, check_assumptions, critical_data, hopf_check, chart_form, ChartSystem, Combination, CriticalData};
use foldreg::transition::{build_phi_k, certify, check_monotone, PhiKSpec, TransitionFunction};
use foldreg::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    /// System description (JSON).
    #[serde(skip)]
    pub system: PathBuf,
    /// Transition function spec (JSON), or a build-phi output; ψ when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub phi: Option<PathBuf>,
}

pub struct Model {
    pub spec: SystemSpec,
    pub comb: Arc<Combination>,
    pub phi: Arc<TransitionFunction>,
}

impl Model {
    pub fn critical(&self) -> Result<CriticalData> {
        critical_data(self.comb.clone(), self.phi.clone())
    }

    pub fn chart(&self, eps: f64) -> ChartSystem {
        chart_field(self.comb.clone(), self.phi.clone(), eps, 0.0)
    }
}

pub fn load_system(path: &Path, h: &mut ManifestHash) -> Result<SystemSpec> {
    let bytes = read(path)?;
    h.part("system", &bytes);
    let text = String::from_utf8(bytes).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    SystemSpec::from_json(&text).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// A bare φ spec or the `result.spec` of a build-phi output.
pub fn parse_phi(text: &str) -> Result<PhiSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Input(format!("phi JSON: {e}")))?;
    let v = match v.get("result").and_then(|r| r.get("spec")) {
        Some(s) => s.clone(),
        None => v,
    };
    serde_json::from_value(v).map_err(|e| Error::Input(format!("phi JSON: {e}")))
}

pub fn load_model(a: &ModelArgs, h: &mut ManifestHash) -> Result<Model> {
    let spec = load_system(&a.system, h)?;
    let phi_spec = match &a.phi {
        Some(p) => {
            let bytes = read(p)?;
            h.part("phi", &bytes);
            parse_phi(&String::from_utf8_lossy(&bytes))?
        }
        None => PhiSpec::Psi,
    };
    model_from(spec, phi_spec)
}

pub fn model_from(spec: SystemSpec, phi_spec: PhiSpec) -> Result<Model> {
    let comb = Arc::new(spec.combination()?);
    let phi = Arc::new(phi_spec.build()?);
    Ok(Model { spec, comb, phi })
}

fn window_arg(w: &Option<Vec<f64>>) -> Result<Option<(f64, f64)>> {
    match w.as_deref() {
        None => Ok(None),
        Some([lo, hi]) if lo < hi => Ok(Some((*lo, *hi))),
        Some(w) => Err(Error::Input(format!("window needs LO < HI, got {w:?}"))),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// System description (JSON).
    #[serde(skip)]
    pub system: PathBuf,
    /// Overrides the `alpha` of the system file.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// y-window on the switching line.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    model: String,
    alpha: f64,
    y_x: f64,
    y_y: f64,
    window: (f64, f64),
    tangencies: Vec<TangencyReport>,
    regions: RegionPartition,
    fold_fold: Option<FoldFoldReport>,
    fold_fold_error: Option<String>,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let mut h = ManifestHash::new("analyze");
    h.json("args", a);
    let spec = load_system(&a.system, &mut h)?;
    let alpha = a.alpha.unwrap_or(spec.alpha);
    let comb = Arc::new(spec.combination()?);
    let sys = comb.psvf(alpha);
    let (y_x, y_y) = comb.tangency_heights(alpha);
    let window = window_arg(&a.window)?.unwrap_or((y_x.min(y_y) - 0.5, y_x.max(y_y) + 0.5));
    let tangencies = classify_tangencies(&sys, window)?;
    let regions = region_partition(&sys, window)?;
    let (fold_fold, fold_fold_error) = match classify_fold_fold(&sys, y_x) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e)),
    };
    let report = AnalyzeReport {
        model: comb.name.clone(),
        alpha,
        y_x,
        y_y,
        window,
        tangencies,
        regions,
        fold_fold,
        fold_fold_error: fold_fold_error.as_ref().map(|e| e.to_string()),
    };
    write_json(a.out.as_deref(), &envelope("analyze", &h.finish(), &report)?)?;
    match fold_fold_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct BuildPhiArgs {
    /// Planted zeros a₁ < … < a_k, comma separated; empty for k = 0.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub zeros: Vec<f64>,
    /// Amplitude δ of the core perturbation.
    #[arg(long)]
    pub delta: f64,
    /// Blend radius ν.
    #[arg(long)]
    pub nu: f64,
    /// Number of CSV samples on [−1, 1].
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Sampled φ, φ′, φ″.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

pub fn build_phi(a: &BuildPhiArgs) -> Result<()> {
    let mut h = ManifestHash::new("build-phi");
    h.json("args", a);
    let hash = h.finish();
    let spec = PhiKSpec { zeros: a.zeros.clone(), delta: a.delta, nu: a.nu };
    let phi = build_phi_k(&spec)?;
    let certificate = certify(&phi)?;
    let monotone = check_monotone(&phi, -1.0, 1.0, 20_000)?;
    let result = serde_json::json!({
        "spec": PhiSpec::PhiK(spec),
        "certificate": certificate,
        "monotone": monotone,
    });
    write_json(a.out.as_deref(), &envelope("build-phi", &hash, &result)?)?;
    if let Some(p) = &a.csv {
        let mut t = Table::new(&["x", "phi", "dphi", "d2phi"]);
        let n = a.samples.max(2) - 1;
        for i in 0..=n {
            let x = -1.0 + 2.0 * i as f64 / n as f64;
            t.push(vec![x, phi.value(x), phi.d1(x), phi.d2(x)]);
        }
        t.write(p, "build-phi", &hash)?;
    }
    if certificate.passed {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "certification failed (min derivative {:e})",
            certificate.min_derivative
        )))
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn check(a: &CheckArgs) -> Result<()> {
    let mut h = ManifestHash::new("check-assumptions");
    h.json("args", a);
    let m = load_model(&a.model, &mut h)?;
    let report = check_assumptions(m.comb.clone(), m.phi.clone());
    let hopf = hopf_check(&chart_form(m.comb.clone(), m.phi.clone()), (0.0, 0.0));
    let result = serde_json::json!({ "assumptions": report, "hopf": hopf });
    write_json(a.out.as_deref(), &envelope("check-assumptions", &h.finish(), &result)?)?;
    if report.a0 && report.a1 && report.a2_a3 {
        Ok(())
    } else {
        Err(Error::AssumptionsFail(report.message.unwrap_or_else(|| "see report".into())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// I± over x₂ ∈ (−M₁, M₂).
    Branch,
    /// J⁺ − J⁻ above both tangencies.
    Terminal,
    /// Ī⁺ − Ī⁻ below both tangencies.
    Small,
    /// The dodging integral between the tangencies.
    Dodging,
    /// The center closed form in x ∈ (0, 1).
    ClosedForm,
}

/// Evaluator and default window for a profile kind.
pub struct Profile {
    pub kind: ProfileKind,
    pub sdi: SdiProfile,
    pub phi: Arc<TransitionFunction>,
}

impl Profile {
    pub fn new(m: &Model, kind: ProfileKind) -> Result<Self> {
        if kind == ProfileKind::ClosedForm && m.spec.model != ModelSpec::Center {
            return Err(Error::Precondition("the closed form holds for the center combination only".into()));
        }
        Ok(Profile { kind, sdi: SdiProfile::new(Arc::new(m.critical()?)), phi: m.phi.clone() })
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::Branch => sdi_branch(&self.sdi.critical, s),
            ProfileKind::Terminal => self.sdi.terminal_j(s),
            ProfileKind::Small => self.sdi.small_d(s),
            ProfileKind::Dodging => self.sdi.dodging_i(s),
            ProfileKind::ClosedForm => center_closed_form(&self.phi, s),
        }
    }

    pub fn default_window(&self) -> Result<(f64, f64)> {
        let c = &self.sdi.critical;
        Ok(match self.kind {
            ProfileKind::Branch => (-c.m1, c.m2),
            ProfileKind::Terminal => self.sdi.terminal_window()?,
            ProfileKind::Small => (1e-6 * self.sdi.y_star, self.sdi.y_star),
            ProfileKind::Dodging => {
                let (lo, hi) = self.sdi.dodging_window()?;
                let d = 1e-6 * (hi - lo);
                (lo + d, hi - d)
            }
            ProfileKind::ClosedForm => (1e-6, 1.0 - 1e-6),
        })
    }

    pub fn zeros(&self, window: (f64, f64), grid_n: usize) -> ZeroSet {
        find_zeros_with(|s| self.eval(s).unwrap_or(f64::NAN), window, ZeroOptions { grid_n, ..Default::default() })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SdiArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ProfileKind::Terminal)]
    pub kind: ProfileKind,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Number of samples.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

pub fn sdi(a: &SdiArgs) -> Result<()> {
    let mut h = ManifestHash::new("sdi");
    h.json("args", a);
    let m = load_model(&a.model, &mut h)?;
    let hash = h.finish();
    let p = Profile::new(&m, a.kind)?;
    let window = match window_arg(&a.window)? {
        Some(w) => w,
        None => p.default_window()?,
    };
    let n = a.n.max(2) - 1;
    let mut t = Table::new(&["s", "value"]);
    for i in 0..=n {
        let s = window.0 + (window.1 - window.0) * i as f64 / n as f64;
        t.push(vec![s, p.eval(s).unwrap_or(f64::NAN)]);
    }
    let result = serde_json::json!({
        "kind": a.kind,
        "window": window,
        "y_star": p.sdi.y_star,
        "m1": p.sdi.critical.m1,
        "m2": p.sdi.critical.m2,
        "samples": t.rows,
    });
    write_json(a.out.as_deref(), &envelope("sdi", &hash, &result)?)?;
    if let Some(c) = &a.csv {
        t.write(c, "sdi", &hash)?;
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct ZerosArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ProfileKind::Terminal)]
    pub kind: ProfileKind,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn zeros(a: &ZerosArgs) -> Result<()> {
    let mut h = ManifestHash::new("zeros");
    h.json("args", a);
    let m = load_model(&a.model, &mut h)?;
    let p = Profile::new(&m, a.kind)?;
    let window = match window_arg(&a.window)? {
        Some(w) => w,
        None => p.default_window()?,
    };
    let z = p.zeros(window, a.grid);
    let result = serde_json::json!({ "kind": a.kind, "simple_count": z.simple().count(), "zero_set": z });
    write_json(a.out.as_deref(), &envelope("zeros", &h.finish(), &result)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionArg {
    Terminal,
    Small,
    Dodging,
}

impl SectionArg {
    pub fn kind(self) -> SectionKind {
        match self {
            SectionArg::Terminal => SectionKind::Terminal,
            SectionArg::Small => SectionKind::Small,
            SectionArg::Dodging => SectionKind::Dodging,
        }
    }

    pub fn profile(self) -> ProfileKind {
        match self {
            SectionArg::Terminal => ProfileKind::Terminal,
            SectionArg::Small => ProfileKind::Small,
            SectionArg::Dodging => ProfileKind::Dodging,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AlphaArgs {
    /// Fixed breaking parameter α̃.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["tune", "anchored"])]
    pub alpha: Option<f64>,
    /// Tune α̃ by slow-manifold connection in [−C·ε, C·ε].
    #[arg(long, value_name = "C", conflicts_with = "anchored")]
    pub tune: Option<f64>,
    /// As --tune, then retune so that a second fixed point appears.
    #[arg(long, value_name = "C")]
    pub anchored: Option<f64>,
    /// Overrides the tuning range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub tune_range: Option<Vec<f64>>,
    /// Anchor heights on the attracting and the repelling branch.
    #[arg(long, num_args = 2, value_names = ["PLUS", "MINUS"])]
    pub anchor_heights: Option<Vec<f64>>,
}

impl AlphaArgs {
    pub fn policy(&self) -> Result<AlphaPolicy> {
        let plan = |c: f64| -> Result<TunePlan> {
            let mut p = TunePlan::new(c);
            p.range = window_arg(&self.tune_range)?;
            p.anchors = match self.anchor_heights.as_deref() {
                None => None,
                Some([hp, hm]) => Some((Anchor::Height(*hp), Anchor::Height(*hm))),
                Some(v) => return Err(Error::Input(format!("two anchor heights expected, got {v:?}"))),
            };
            Ok(p)
        };
        Ok(match (self.alpha, self.tune, self.anchored) {
            (Some(a), _, _) => AlphaPolicy::Fixed(a),
            (_, Some(c), _) => AlphaPolicy::Connection(plan(c)?),
            (_, _, Some(c)) => AlphaPolicy::Anchored(plan(c)?),
            _ => AlphaPolicy::Fixed(0.0),
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CyclesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = SectionArg::Terminal)]
    pub section: SectionArg,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    /// Displacement samples on the section.
    #[arg(long, default_value_t = 60)]
    pub grid: usize,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Displacement samples.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

pub struct Setup {
    pub critical: CriticalData,
    pub chart: ChartSystem,
    pub section: SectionSpec,
    pub options: CycleOptions,
}

pub fn setup(model: &Model, eps: f64, section: SectionArg, window: Option<(f64, f64)>, grid: usize) -> Result<Setup> {
    if !(eps >= EPS_FLOOR) {
        return Err(Error::BelowEpsFloor { eps, floor: EPS_FLOOR });
    }
    let profile = Profile::new(model, section.profile())?;
    let window = match window {
        Some(w) => w,
        None => profile.default_window()?,
    };
    let chart = model.chart(eps);
    let section = SectionSpec::new(window, section.kind());
    section.validate(&chart)?;
    let critical = model.critical()?;
    Ok(Setup { critical, chart, section, options: CycleOptions { grid_n: grid, ..Default::default() } })
}

pub fn samples_table(search: &foldreg::cycles::CycleSearch, o: &CycleOptions) -> Table {
    let mut t = Table::new(&["y", "displacement", "loose", "noise", "trusted"]);
    for s in &search.samples {
        t.push(vec![s.y, s.value, s.loose, s.noise, if s.trusted(o) { 1.0 } else { 0.0 }]);
    }
    t
}

pub fn cycles(a: &CyclesArgs) -> Result<()> {
    let mut h = ManifestHash::new("cycles");
    h.json("args", a);
    let m = load_model(&a.model, &mut h)?;
    let hash = h.finish();
    let s = setup(&m, a.eps, a.section, window_arg(&a.window)?, a.grid)?;
    let policy = a.alpha.policy()?;
    let alpha_t = policy.resolve(&s.chart, &s.critical, &s.section, &s.options)?;
    let search = find_cycles(&s.chart.with_alpha(alpha_t), &s.section, &s.options);
    let result = serde_json::json!({
        "eps": a.eps,
        "alpha_policy": policy,
        "alpha_t": alpha_t,
        "section": s.section,
        "cycles": search.records,
        "rejected": search.rejected,
        "degenerate": search.degenerate,
    });
    write_json(a.out.as_deref(), &envelope("cycles", &hash, &result)?)?;
    if let Some(c) = &a.csv {
        samples_table(&search, &s.options).write(c, "cycles", &hash)?;
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = SectionArg::Dodging)]
    pub section: SectionArg,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 80)]
    pub grid: usize,
    /// Reference α̃ of the sweep (fixed or tuned).
    #[command(flatten)]
    pub alpha: AlphaArgs,
    /// Sweep offsets from the reference α̃: LO HI and the number of steps.
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], allow_hyphen_values = true)]
    pub offsets: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Fixed-point counts along the sweep.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

pub fn sweep_alphas(reference: f64, offsets: &[f64]) -> Result<Vec<f64>> {
    match offsets {
        [lo, hi, n] if lo < hi && *n >= 2.0 && n.fract() == 0.0 => {
            let n = *n as usize - 1;
            Ok((0..=n).map(|i| reference + lo + (hi - lo) * i as f64 / n as f64).collect())
        }
        _ => Err(Error::Input(format!("offsets need LO < HI and an integer N >= 2, got {offsets:?}"))),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let mut h = ManifestHash::new("sweep");
    h.json("args", a);
    let m = load_model(&a.model, &mut h)?;
    let hash = h.finish();
    let s = setup(&m, a.eps, a.section, window_arg(&a.window)?, a.grid)?;
    let reference = a.alpha.policy()?.resolve(&s.chart, &s.critical, &s.section, &s.options)?;
    let alphas = sweep_alphas(reference, &a.offsets)?;
    let r = detect_saddle_node(&s.chart, &s.section, &alphas, &s.options)?;
    let result = serde_json::json!({ "eps": a.eps, "alpha_reference": reference, "section": s.section, "saddle_node": r });
    write_json(a.out.as_deref(), &envelope("sweep", &hash, &result)?)?;
    if let Some(c) = &a.csv {
        let mut t = Table::new(&["alpha_t", "count"]);
        for &(al, n) in &r.counts {
            t.push(vec![al, n as f64]);
        }
        t.write(c, "sweep", &hash)?;
    }
    Ok(())
}
