use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Parser;

use tetratomo::accuracy::{exact_accuracy_curve, fit_power_law, mc_accuracy_curve, AccuracyCurve};
use tetratomo::estimate::{likelihood_region, linear_reconstruct, project_to_physical};
use tetratomo::povm::{outcome_probabilities, InstrumentMatrix, Tetrahedron};
use tetratomo::qstate::{stokes_to_density, DensityMatrix, NamedState};
use tetratomo::sim::{asymptote_counts, stream_events, CountVector};

use tetratomo_cli::cli::{
    AccuracyMode, Cli, Command, FrameChoice, OutputFormat, PovmAction, RecipeOverrides,
};
use tetratomo_cli::config::parse_state;
use tetratomo_cli::recipes::run_recipe;

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Povm { action } => povm(action),
        Command::Simulate {
            state,
            events,
            seed,
            out,
        } => simulate(&state, events, seed, out.as_deref()),
        Command::Reconstruct {
            counts,
            project,
            out,
        } => reconstruct(&counts, project, out.as_deref()),
        Command::Region {
            counts,
            grid_res,
            delta,
            out,
        } => region(&counts, grid_res, delta, out.as_deref()),
        Command::Accuracy { mode } => accuracy(mode),
        Command::Fit {
            input,
            nmin,
            nmax,
            out,
        } => fit(&input, nmin, nmax, out.as_deref()),
        Command::Recipe { name, overrides } => recipe(&name, &overrides),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn povm(action: PovmAction) -> Result<()> {
    let PovmAction::Show { frame, qubits, out } = action;
    let tetra = match frame {
        FrameChoice::Standard => Tetrahedron::standard(),
        FrameChoice::Cube => Tetrahedron::cube_corners(),
    };
    let b = InstrumentMatrix::new(&tetra, qubits)?;
    let mut bytes = Vec::new();
    writeln!(bytes, "# tetrahedron vertices")?;
    writeln!(bytes, "vertex,x,y,z")?;
    for (j, v) in tetra.vertices().iter().enumerate() {
        writeln!(bytes, "{},{},{},{}", j + 1, v[0], v[1], v[2])?;
    }
    writeln!(bytes)?;
    writeln!(bytes, "# instrument matrix ({} outcomes)", b.dim())?;
    for j in 0..b.dim() {
        let row: Vec<String> = b.row(j).iter().map(|x| x.to_string()).collect();
        writeln!(bytes, "{},{}", j + 1, row.join(","))?;
    }
    emit(out.as_deref(), &bytes)
}

fn simulate(state: &str, events: u64, seed: u64, out: Option<&Path>) -> Result<()> {
    let state = parse_state(state)?;
    let b = InstrumentMatrix::new(&Tetrahedron::standard(), state.qubit_count())?;
    let p = outcome_probabilities(&b, state.stokes())?;
    let stream = stream_events(&p, events, seed)?;
    let mut bytes = Vec::new();
    writeln!(bytes, "event_index,outcome")?;
    for (index, outcome) in stream.outcomes().iter().enumerate() {
        writeln!(bytes, "{},{}", index + 1, outcome)?;
    }
    emit(out, &bytes)
}

fn parse_counts(spec: &str) -> Result<CountVector> {
    let values: Vec<u64> = spec
        .split(',')
        .map(|field| {
            field
                .trim()
                .parse::<u64>()
                .with_context(|| format!("bad count {field:?}"))
        })
        .collect::<Result<_>>()?;
    Ok(CountVector::new(values)?)
}

fn reconstruct(counts: &str, project: bool, out: Option<&Path>) -> Result<()> {
    let counts = parse_counts(counts)?;
    let qubits = if counts.outcome_count() == 4 { 1 } else { 2 };
    let b = InstrumentMatrix::new(&Tetrahedron::standard(), qubits)?;
    let mut s = linear_reconstruct(&counts, &b)?;
    if project {
        s = project_to_physical(&s);
    }
    let body = serde_json::json!({
        "stokes": s.components(),
        "qubit_count": s.qubit_count(),
        "physical": s.is_physical(),
        "projected": project,
    });
    let mut bytes = serde_json::to_string_pretty(&body)?.into_bytes();
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn region(counts: &str, grid_res: usize, delta: f64, out: Option<&Path>) -> Result<()> {
    let counts = parse_counts(counts)?;
    let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1)?;
    let region = likelihood_region(&counts, &b, grid_res, delta)?;
    let mut bytes = Vec::new();
    region.write_csv(&mut bytes)?;
    emit(out, &bytes)
}

fn reference_from_flags(
    state: &NamedState,
    b: &InstrumentMatrix,
    asymptote: bool,
    asymptote_events: u64,
    seed: u64,
) -> Result<DensityMatrix> {
    if asymptote {
        let counts = asymptote_counts(state, b, asymptote_events, seed)?;
        Ok(stokes_to_density(&linear_reconstruct(&counts, b)?))
    } else {
        Ok(stokes_to_density(state.stokes()))
    }
}

fn curve_bytes(curve: &AccuracyCurve, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut bytes = Vec::new();
            curve.write_csv(&mut bytes)?;
            Ok(bytes)
        }
        OutputFormat::Json => {
            let points: Vec<_> = curve
                .points()
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "N": p.n,
                        "d_avg": p.d_avg,
                        "std_error": p.std_error,
                    })
                })
                .collect();
            let body = serde_json::json!({
                "method": curve.method().as_str(),
                "state": curve.state_label(),
                "normalized": curve.is_normalized(),
                "points": points,
            });
            let mut bytes = serde_json::to_string_pretty(&body)?.into_bytes();
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

fn accuracy(mode: AccuracyMode) -> Result<()> {
    match mode {
        AccuracyMode::Exact {
            state,
            nmin,
            nmax,
            seed,
            project,
            asymptote,
            asymptote_events,
            out,
            format,
        } => {
            let state = parse_state(&state)?;
            if state.qubit_count() != 1 {
                bail!(
                    "exact enumeration covers one-qubit states; use `accuracy mc` for {}",
                    state.label()
                );
            }
            if seed.is_some() && !asymptote {
                eprintln!("warning: --seed is ignored for exact curves (no sampling involved)");
            }
            let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1)?;
            let reference = reference_from_flags(
                &state,
                &b,
                asymptote,
                asymptote_events,
                seed.unwrap_or(1),
            )?;
            let curve = exact_accuracy_curve(
                state.stokes(),
                &b,
                nmin,
                nmax,
                &reference,
                project,
                state.label().as_str(),
            )?;
            emit(out.as_deref(), &curve_bytes(&curve, format)?)
        }
        AccuracyMode::Mc {
            state,
            events,
            runs,
            seed,
            project,
            asymptote,
            asymptote_events,
            out,
            format,
        } => {
            let state = parse_state(&state)?;
            let b = InstrumentMatrix::new(&Tetrahedron::standard(), state.qubit_count())?;
            let reference =
                reference_from_flags(&state, &b, asymptote, asymptote_events, seed)?;
            let curve = mc_accuracy_curve(
                state.stokes(),
                &b,
                events,
                &reference,
                runs,
                seed,
                project,
                state.label().as_str(),
            )?;
            emit(out.as_deref(), &curve_bytes(&curve, format)?)
        }
    }
}

fn fit(input: &Path, nmin: u64, nmax: u64, out: Option<&Path>) -> Result<()> {
    let file = std::fs::File::open(input)
        .with_context(|| format!("opening curve {}", input.display()))?;
    let curve = AccuracyCurve::read_csv(std::io::BufReader::new(file))?;
    let fit = fit_power_law(&curve, nmin, nmax)?;
    let body = serde_json::json!({
        "a": fit.a,
        "c": fit.c,
        "residual_rms": fit.residual_rms,
        "n_min": fit.n_min,
        "n_max": fit.n_max,
    });
    let mut bytes = serde_json::to_string_pretty(&body)?.into_bytes();
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn recipe(name: &str, overrides: &RecipeOverrides) -> Result<()> {
    let (cfg, warnings) = tetratomo_cli::cli::recipe_config(name, overrides)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let report = run_recipe(&cfg)?;
    for line in &report.summary {
        println!("{line}");
    }
    for file in &report.files {
        println!("wrote {}", file.display());
    }
    println!("wrote {}", report.manifest.display());
    Ok(())
}
