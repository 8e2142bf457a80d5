//! Experiment manifests and the end-to-end pipeline.

use crate::commands::{load_system, model_from, samples_table, setup, sweep_alphas, Profile, SectionArg};
use crate::output::{envelope, read, sha256_hex, write_json, ManifestHash, Table};
use clap::Args;
use foldreg::config::{check_version, PhiSpec};
use foldreg::cycles::{
    convergence_row, convergence_study, detect_saddle_node, find_cycles, AlphaPolicy, ConvergenceRow, OrbitOptions,
    SaddleNodeResult, EPS_FLOOR,
};
use foldreg::psvf::half_return_plus;
use foldreg::sdi::{fiber_point, ZeroSet};
use foldreg::slowfast::check_assumptions;
use foldreg::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionConfig {
    pub kind: SectionArg,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleNodeConfig {
    /// Sweep α̃ over reference ± half_width.
    pub half_width: f64,
    pub steps: usize,
}

fn default_zero_grid() -> usize {
    2000
}

fn default_cycle_grid() -> usize {
    60
}

fn yes() -> bool {
    true
}

/// An experiment manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub name: String,
    /// System file, relative to the manifest.
    pub system: PathBuf,
    /// Expected sha256 of the system file.
    #[serde(default)]
    pub system_sha256: Option<String>,
    pub phi: PhiSpec,
    pub eps: Vec<f64>,
    pub alpha: AlphaPolicy,
    pub section: SectionConfig,
    #[serde(default = "default_zero_grid")]
    pub zero_grid: usize,
    #[serde(default = "default_cycle_grid")]
    pub cycle_grid: usize,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub saddle_node: Option<SaddleNodeConfig>,
    /// No random numbers are drawn; recorded for the reader.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Experiment manifest (JSON).
    pub manifest: PathBuf,
    /// Directory for report.json and CSV files; the report goes to stdout when omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    name: String,
    system_sha256: String,
    assumptions: foldreg::slowfast::AssumptionReport,
    y_star: f64,
    zeros_full: ZeroSet,
    zeros_section: ZeroSet,
    predicted_fibers: Vec<f64>,
    rows: Vec<ConvergenceRow>,
    monotone: Option<bool>,
    saddle_node: Option<SaddleNodeResult>,
}

pub fn run(a: &PipelineArgs) -> Result<()> {
    let bytes = read(&a.manifest)?;
    let man: ExperimentManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::Input(format!("{}: {e}", a.manifest.display())))?;
    check_version(man.schema_version)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let sys_path = base.join(&man.system);
    let sys_bytes = read(&sys_path)?;
    let system_sha256 = sha256_hex(&sys_bytes);
    if let Some(want) = &man.system_sha256 {
        if !want.eq_ignore_ascii_case(&system_sha256) {
            return Err(Error::Input(format!("{} has sha256 {system_sha256}, manifest expects {want}", sys_path.display())));
        }
    }
    let mut h = ManifestHash::new("pipeline");
    h.part("manifest", &bytes);
    let spec = load_system(&sys_path, &mut h)?;
    let hash = h.finish();
    if man.eps.is_empty() {
        return Err(Error::Input("manifest lists no epsilon".into()));
    }
    if let Some(&e) = man.eps.iter().find(|&&e| !(e >= EPS_FLOOR)) {
        return Err(Error::Precondition(format!(
            "epsilon {e} is below the floor {EPS_FLOOR}: the direct integrations are only meant for desk-scale epsilon"
        )));
    }
    let model = model_from(spec, man.phi.clone())?;
    let assumptions = check_assumptions(model.comb.clone(), model.phi.clone());
    if !(assumptions.a0 && assumptions.a1 && assumptions.a2_a3) {
        return Err(Error::AssumptionsFail(assumptions.message.clone().unwrap_or_else(|| "see check-assumptions".into())));
    }

    let profile = Profile::new(&model, man.section.kind.profile())?;
    let full = profile.default_window()?;
    let zeros_full = profile.zeros(full, man.zero_grid);
    let mut s = setup(&model, man.eps[0], man.section.kind, man.section.window, man.cycle_grid)?;
    if let Some(t) = man.tolerances {
        let mut o = OrbitOptions::default();
        o.ode.rtol = t.rtol;
        o.ode.atol = t.atol;
        s.options.orbit = o;
    }
    let zeros_section = profile.zeros(s.section.window, man.zero_grid);
    let predicted_fibers = predicted_fibers(&profile, &zeros_section, man.section.kind);

    let (rows, monotone) = if man.eps.len() >= 2 {
        let t = convergence_study(&s.chart, &s.critical, &s.section, &man.eps, &predicted_fibers, man.alpha, &s.options)?;
        (t.rows, Some(t.monotone))
    } else {
        (vec![convergence_row(&s.chart, &s.critical, &s.section, &predicted_fibers, man.alpha, &s.options)], None)
    };

    let saddle_node = match (man.saddle_node, rows[0].alpha_t) {
        (Some(c), Some(reference)) => {
            let alphas = sweep_alphas(reference, &[-c.half_width, c.half_width, c.steps as f64])?;
            Some(detect_saddle_node(&s.chart.with_eps(rows[0].eps), &s.section, &alphas, &s.options)?)
        }
        _ => None,
    };

    let report = Report {
        name: man.name.clone(),
        system_sha256,
        assumptions,
        y_star: profile.sdi.y_star,
        zeros_full,
        zeros_section,
        predicted_fibers,
        rows,
        monotone,
        saddle_node,
    };
    let env = envelope("pipeline", &hash, &report)?;
    match &a.out_dir {
        None => write_json(None, &env)?,
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
            write_json(Some(&dir.join("report.json")), &env)?;
            let mut t = Table::new(&["s", "value"]);
            let n = 400;
            for i in 0..=n {
                let y = full.0 + (full.1 - full.0) * i as f64 / n as f64;
                t.push(vec![y, profile.eval(y).unwrap_or(f64::NAN)]);
            }
            t.write(&dir.join("sdi.csv"), "pipeline", &hash)?;
            for (i, row) in report.rows.iter().enumerate() {
                if let Some(al) = row.alpha_t {
                    let search = find_cycles(&s.chart.with_eps(row.eps).with_alpha(al), &s.section, &s.options);
                    samples_table(&search, &s.options).write(&dir.join(format!("displacement_{i}.csv")), "pipeline", &hash)?;
                }
            }
        }
    }
    Ok(())
}

/// x₂⁺ fibers of the zeros: through ξ_X for terminal levels, directly otherwise.
fn predicted_fibers(p: &Profile, zeros: &ZeroSet, kind: SectionArg) -> Vec<f64> {
    let c = &p.sdi.critical;
    zeros
        .zeros
        .iter()
        .filter_map(|z| {
            let h = match kind {
                SectionArg::Terminal => half_return_plus(&p.sdi.system, z.location).ok()?.y,
                _ => z.location,
            };
            fiber_point(c, h, 1.0).ok()
        })
        .collect()
}
