//! Recipe implementations.
//!
//! Every recipe writes flat CSV/JSON files into the configured output
//! directory and finishes with a manifest hashing each of them. Data files
//! are byte-reproducible for a fixed config and seed, including across
//! thread counts; only the manifest carries wall-clock information.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use tetratomo::accuracy::{
    exact_accuracy_curve, fit_power_law, mc_accuracy_curve, normalize_curve, AccuracyCurve,
    PowerLawFit,
};
use tetratomo::estimate::{likelihood_region, linear_reconstruct, project_to_physical};
use tetratomo::povm::{outcome_probabilities, InstrumentMatrix, Tetrahedron};
use tetratomo::qstate::{stokes_to_density, DensityMatrix, NamedState};
use tetratomo::sim::{asymptote_counts, stream_events};

use crate::config::{ExperimentConfig, Recipe};
use crate::manifest::write_manifest;

/// Runs averaged into the one-qubit comparison curve of the two-qubit
/// recipe.
const TWO_QUBIT_COMPARISON_RUNS: usize = 40;

pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: Vec<String>,
}

pub fn run_recipe(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| {
        format!("creating output directory {}", cfg.output_dir.display())
    })?;
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        files: Vec::new(),
        summary: Vec::new(),
    };
    match cfg.recipe {
        Recipe::Converge => run_converge(cfg, &mut out)?,
        Recipe::Accuracy1q => run_accuracy_1q(cfg, &mut out)?,
        Recipe::FitTable => run_fit_table(cfg, &mut out)?,
        Recipe::Accuracy2q => run_accuracy_2q(cfg, &mut out)?,
        Recipe::Custom => run_custom(cfg, &mut out)?,
    }
    let manifest = write_manifest(&out.dir, cfg, &out.files, start.elapsed().as_secs_f64())?;
    Ok(RunReport {
        files: out.files,
        manifest,
        summary: out.summary,
    })
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
    summary: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.summary.push(line);
    }
}

fn standard_matrix(qubits: u8) -> Result<InstrumentMatrix> {
    Ok(InstrumentMatrix::new(&Tetrahedron::standard(), qubits)?)
}

fn require_qubits(recipe: Recipe, state: &NamedState, qubits: u8) -> Result<()> {
    if state.qubit_count() != qubits {
        bail!(
            "recipe {recipe} needs a {qubits}-qubit state, but {} has {} qubit(s)",
            state.label(),
            state.qubit_count()
        );
    }
    Ok(())
}

/// Reference the distances are measured against: the exact input state, or
/// a linear reconstruction from one large simulated ensemble (asymptote
/// mode, substream 0 of `master_seed`).
fn reference_for(
    state: &NamedState,
    b: &InstrumentMatrix,
    cfg: &ExperimentConfig,
    master_seed: u64,
) -> Result<DensityMatrix> {
    if cfg.asymptote {
        let counts = asymptote_counts(state, b, cfg.asymptote_events, master_seed)?;
        Ok(stokes_to_density(&linear_reconstruct(&counts, b)?))
    } else {
        Ok(stokes_to_density(state.stokes()))
    }
}

/// 1-2-5 decade checkpoints up to and including `events`.
fn checkpoint_schedule(events: u64) -> Vec<u64> {
    let mut points = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for mult in [1, 2, 5] {
            let n = decade.saturating_mul(mult);
            if n > events {
                break 'outer;
            }
            points.push(n);
        }
        decade = decade.saturating_mul(10);
    }
    if points.last() != Some(&events) {
        points.push(events);
    }
    points
}

fn curve_csv(curve: &AccuracyCurve) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    curve.write_csv(&mut bytes)?;
    Ok(bytes)
}

#[derive(Serialize)]
struct FitRecord {
    state: String,
    a: f64,
    c: f64,
    residual_rms: f64,
    n_min: u64,
    n_max: u64,
}

impl FitRecord {
    fn new(state: &str, fit: &PowerLawFit) -> Self {
        Self {
            state: state.to_string(),
            a: fit.a,
            c: fit.c,
            residual_rms: fit.residual_rms,
            n_min: fit.n_min,
            n_max: fit.n_max,
        }
    }
}

fn run_converge(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let state = cfg.states()?.remove(0);
    require_qubits(Recipe::Converge, &state, 1)?;
    let b = standard_matrix(1)?;
    let p = outcome_probabilities(&b, state.stokes())?;
    let stream = stream_events(&p, cfg.events, cfg.seed)?.with_source(state.clone());

    let mut estimates = Vec::new();
    writeln!(estimates, "event_index,S1,S2,S3")?;
    for n in 1..=cfg.events {
        let counts = stream.collapse_prefix(n as usize);
        let mut s = linear_reconstruct(&counts, &b)?;
        if cfg.project {
            s = project_to_physical(&s);
        }
        let c = s.components();
        writeln!(estimates, "{},{},{},{}", n, c[1], c[2], c[3])?;
    }
    out.write("estimates.csv", &estimates)?;

    for n in checkpoint_schedule(cfg.events) {
        let counts = stream.collapse_prefix(n as usize);
        let region =
            likelihood_region(&counts, &b, cfg.grid_resolution, cfg.threshold_delta)?;
        let mut bytes = Vec::new();
        region.write_csv(&mut bytes)?;
        out.write(&format!("region_n{n:06}.csv"), &bytes)?;
        out.note(format!(
            "N = {n:>6}: likelihood region holds {} of {} grid points",
            region.member_count(),
            region.grid().len()
        ));
    }
    Ok(())
}

fn run_accuracy_1q(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let states = cfg.states()?;
    let b = standard_matrix(1)?;
    for (index, state) in states.iter().enumerate() {
        require_qubits(Recipe::Accuracy1q, state, 1)?;
        let label = state.label().as_str();
        let master = cfg.seed + index as u64;

        let reference = reference_for(state, &b, cfg, master)?;
        let mc = mc_accuracy_curve(
            state.stokes(),
            &b,
            cfg.events,
            &reference,
            cfg.runs,
            master,
            cfg.project,
            label,
        )?;
        out.write(&format!("accuracy_mc_{label}.csv"), &curve_csv(&mc)?)?;

        let model_reference = stokes_to_density(state.stokes());
        let exact = exact_accuracy_curve(
            state.stokes(),
            &b,
            1,
            cfg.events,
            &model_reference,
            false,
            label,
        )?;
        out.write(&format!("accuracy_exact_{label}.csv"), &curve_csv(&exact)?)?;

        let last = mc.points().last().expect("nonempty curve");
        out.note(format!(
            "{label}: sampled D(N={}) = {:.5} +/- {:.5}, exact {:.5}",
            last.n,
            last.d_avg,
            last.std_error,
            exact.points().last().expect("nonempty curve").d_avg
        ));
    }
    Ok(())
}

fn run_fit_table(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let states = cfg.states()?;
    let b = standard_matrix(1)?;
    let mut records = Vec::new();
    for state in &states {
        require_qubits(Recipe::FitTable, state, 1)?;
        let label = state.label().as_str();
        let reference = stokes_to_density(state.stokes());
        let curve =
            exact_accuracy_curve(state.stokes(), &b, 1, cfg.events, &reference, false, label)?;
        out.write(&format!("curve_{label}.csv"), &curve_csv(&curve)?)?;
        let fit = fit_power_law(&curve, cfg.fit_min, cfg.fit_max.min(cfg.events))?;
        out.note(format!(
            "{label}: a = {:.4}, c = {:.4} (rms {:.2e})",
            fit.a, fit.c, fit.residual_rms
        ));
        records.push(FitRecord::new(label, &fit));
    }
    out.write(
        "fits.json",
        serde_json::to_string_pretty(&records)?.as_bytes(),
    )?;
    Ok(())
}

fn run_accuracy_2q(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let state = cfg.states()?.remove(0);
    require_qubits(Recipe::Accuracy2q, &state, 2)?;
    let label = state.label().as_str();
    let b2 = standard_matrix(2)?;
    let b1 = standard_matrix(1)?;

    let reference2 = reference_for(&state, &b2, cfg, cfg.seed)?;
    let curve2 = mc_accuracy_curve(
        state.stokes(),
        &b2,
        cfg.events,
        &reference2,
        cfg.runs,
        cfg.seed,
        cfg.project,
        label,
    )?;
    let normalized2 = normalize_curve(&curve2, 2)?;
    out.write(
        &format!("curve_{label}_normalized.csv"),
        &curve_csv(&normalized2)?,
    )?;

    let horizontal = NamedState::horizontal();
    let comparison_seed = cfg.seed + 1;
    let reference1 = reference_for(&horizontal, &b1, cfg, comparison_seed)?;
    let curve1 = mc_accuracy_curve(
        horizontal.stokes(),
        &b1,
        cfg.events,
        &reference1,
        TWO_QUBIT_COMPARISON_RUNS,
        comparison_seed,
        cfg.project,
        horizontal.label().as_str(),
    )?;
    let normalized1 = normalize_curve(&curve1, 1)?;
    out.write("curve_horizontal_normalized.csv", &curve_csv(&normalized1)?)?;

    let fit = fit_power_law(&normalized2, cfg.fit_min, cfg.fit_max.min(cfg.events))?;
    out.write(
        &format!("fit_{label}.json"),
        serde_json::to_string_pretty(&FitRecord::new(label, &fit))?.as_bytes(),
    )?;

    let mut worst: f64 = 1.0;
    let mut worst_n = 0;
    for (p2, p1) in normalized2
        .points()
        .iter()
        .zip(normalized1.points())
        .filter(|(p2, _)| p2.n >= cfg.fit_min && p2.n <= cfg.fit_max)
    {
        let ratio = p2.d_avg / p1.d_avg;
        let factor = if ratio >= 1.0 { ratio } else { 1.0 / ratio };
        if factor > worst {
            worst = factor;
            worst_n = p2.n;
        }
    }
    out.note(format!(
        "{label}: c = {:.4}; worst normalized-curve ratio factor {:.3} at N = {worst_n} \
         over N in [{}, {}]",
        fit.c,
        worst,
        cfg.fit_min,
        cfg.fit_max.min(cfg.events)
    ));
    Ok(())
}

fn run_custom(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let state = cfg.states()?.remove(0);
    let qubits = state.qubit_count();
    let label = state.label().as_str();
    let b = standard_matrix(qubits)?;
    let reference = reference_for(&state, &b, cfg, cfg.seed)?;
    let curve = mc_accuracy_curve(
        state.stokes(),
        &b,
        cfg.events,
        &reference,
        cfg.runs,
        cfg.seed,
        cfg.project,
        label,
    )?;
    out.write(&format!("accuracy_mc_{label}.csv"), &curve_csv(&curve)?)?;
    match fit_power_law(&curve, cfg.fit_min, cfg.fit_max.min(cfg.events)) {
        Ok(fit) => {
            out.write(
                &format!("fit_{label}.json"),
                serde_json::to_string_pretty(&FitRecord::new(label, &fit))?.as_bytes(),
            )?;
            out.note(format!("{label}: a = {:.4}, c = {:.4}", fit.a, fit.c));
        }
        Err(e) => out.note(format!("{label}: fit skipped ({e})")),
    }
    Ok(())
}

/// Reads back a fits.json written by the fit_table recipe.
pub fn read_fit_records(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let body = std::fs::read_to_string(path)?;
    let parsed: serde_json::Value = serde_json::from_str(&body)?;
    let mut records = Vec::new();
    for entry in parsed.as_array().context("fits.json should be an array")? {
        records.push((
            entry["state"].as_str().context("state")?.to_string(),
            entry["a"].as_f64().context("a")?,
            entry["c"].as_f64().context("c")?,
        ));
    }
    Ok(records)
}
