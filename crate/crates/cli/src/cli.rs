//! Command-line surface.
//!
//! Subcommands: `povm`, `simulate`, `reconstruct`, `region`,
//! `accuracy exact|mc`, `fit`, `recipe <name>`. Usage errors exit with
//! code 2 (clap's default), runtime failures with code 1.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, Recipe};

#[derive(Parser, Debug)]
#[command(
    name = "tetratomo",
    version,
    about = "Tetrahedron-POVM qubit tomography: simulation, reconstruction, and accuracy analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Inspect the measurement frame and its instrument matrix
    Povm {
        #[command(subcommand)]
        action: PovmAction,
    },
    /// Emit a seeded per-copy event stream as CSV (event_index,outcome)
    Simulate {
        /// Input state (named label or custom:<s0>,<s1>,...)
        #[arg(long)]
        state: String,
        /// Number of detection events
        #[arg(long)]
        events: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linearly reconstruct a Stokes vector from detector counts (JSON out)
    Reconstruct {
        /// Comma-separated detector counts (4 or 16 values)
        #[arg(long)]
        counts: String,
        /// Clip the estimate to the nearest physical state
        #[arg(long)]
        project: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map the likelihood of every pure state on the Poincaré sphere (CSV)
    Region {
        /// Comma-separated detector counts (4 values)
        #[arg(long)]
        counts: String,
        #[arg(long, default_value_t = 64)]
        grid_res: usize,
        /// Log-likelihood drop defining region membership
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy (average trace distance) versus ensemble size
    Accuracy {
        #[command(subcommand)]
        mode: AccuracyMode,
    },
    /// Fit a power law d = a / N^c to a curve CSV (JSON out)
    Fit {
        /// Curve CSV produced by `accuracy` or a recipe
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        nmin: u64,
        #[arg(long, default_value_t = 150)]
        nmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment recipe into an output directory
    Recipe {
        /// converge, accuracy_1q, fit_table, accuracy_2q, or custom
        name: String,
        #[command(flatten)]
        overrides: RecipeOverrides,
    },
}

#[derive(Subcommand, Debug)]
pub enum PovmAction {
    /// Print tetrahedron vertices and the instrument matrix as CSV
    Show {
        #[arg(long, value_enum, default_value_t = FrameChoice::Standard)]
        frame: FrameChoice,
        #[arg(long, default_value_t = 1)]
        qubits: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameChoice {
    /// First vertex along (sqrt(1/3), sqrt(2/3), 0)
    Standard,
    /// Cube-corner frame (1,1,1)/sqrt(3) and companions
    Cube,
}

#[derive(Subcommand, Debug)]
pub enum AccuracyMode {
    /// Exact curve by partition enumeration (deterministic; no sampling)
    Exact {
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 1)]
        nmin: u64,
        #[arg(long, default_value_t = 150)]
        nmax: u64,
        /// Only used with --asymptote (exact curves need no sampling)
        #[arg(long)]
        seed: Option<u64>,
        /// Constrain each reconstruction to the nearest physical state
        #[arg(long)]
        project: bool,
        /// Reference a simulated large-ensemble state instead of the input
        #[arg(long)]
        asymptote: bool,
        #[arg(long, default_value_t = 500_000)]
        asymptote_events: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Monte-Carlo cumulative curve (per-copy estimates, averaged runs)
    Mc {
        #[arg(long)]
        state: String,
        /// Events per run; the curve covers N = 1..=events
        #[arg(long)]
        events: u64,
        #[arg(long, default_value_t = 40)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        project: bool,
        #[arg(long)]
        asymptote: bool,
        #[arg(long, default_value_t = 500_000)]
        asymptote_events: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct RecipeOverrides {
    /// Override the recipe's default state
    #[arg(long)]
    pub state: Option<String>,
    /// Detection events (pairs for two-qubit recipes)
    #[arg(long)]
    pub events: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Power-law fit range lower edge
    #[arg(long)]
    pub nmin: Option<u64>,
    /// Power-law fit range upper edge
    #[arg(long)]
    pub nmax: Option<u64>,
    /// Constrain per-copy estimates to the nearest physical state
    #[arg(long)]
    pub project: bool,
    /// Use exact input states as references instead of simulated asymptotes
    #[arg(long)]
    pub no_asymptote: bool,
    #[arg(long)]
    pub asymptote_events: Option<u64>,
    #[arg(long)]
    pub grid_res: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Output directory (default: $TETRATOMO_OUT, then ./results)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses argv without exiting; used by tests and by `main`.
pub fn try_parse<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Resolves a recipe invocation into a full configuration plus any
/// advisory warnings.
pub fn recipe_config(
    name: &str,
    overrides: &RecipeOverrides,
) -> anyhow::Result<(ExperimentConfig, Vec<String>)> {
    let recipe: Recipe = name.parse()?;
    let mut cfg = ExperimentConfig::for_recipe(recipe);
    let mut warnings = Vec::new();
    if let Some(state) = &overrides.state {
        cfg.state = Some(state.clone());
    }
    if let Some(events) = overrides.events {
        cfg.events = events;
    }
    if let Some(runs) = overrides.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(nmin) = overrides.nmin {
        cfg.fit_min = nmin;
    }
    if let Some(nmax) = overrides.nmax {
        cfg.fit_max = nmax;
    }
    if overrides.project {
        cfg.project = true;
    }
    if overrides.no_asymptote {
        cfg.asymptote = false;
    }
    if let Some(n) = overrides.asymptote_events {
        cfg.asymptote_events = n;
    }
    if let Some(r) = overrides.grid_res {
        cfg.grid_resolution = r;
    }
    if let Some(d) = overrides.delta {
        cfg.threshold_delta = d;
    }
    cfg.output_dir = overrides
        .out
        .clone()
        .or_else(|| std::env::var_os(crate::OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    if recipe == Recipe::FitTable && overrides.seed.is_some() {
        warnings.push("fit_table is exact; --seed has no effect".to_string());
    }
    Ok((cfg, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_dispatch_parses() {
        let cli = try_parse(["tetratomo", "recipe", "fit_table", "--out", "results"]).unwrap();
        match cli.command {
            Command::Recipe { name, overrides } => {
                let (cfg, warnings) = recipe_config(&name, &overrides).unwrap();
                assert_eq!(cfg.recipe, Recipe::FitTable);
                assert_eq!(cfg.output_dir, PathBuf::from("results"));
                assert!(warnings.is_empty());
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(try_parse(["tetratomo", "simulate", "--state", "aligned", "--events", "5", "--bogus"]).is_err());
        assert!(try_parse(["tetratomo", "frobnicate"]).is_err());
    }

    #[test]
    fn accuracy_exact_flags_parse() {
        let cli = try_parse([
            "tetratomo", "accuracy", "exact", "--state", "unpolarized", "--nmax", "150",
            "--seed", "7",
        ])
        .unwrap();
        match cli.command {
            Command::Accuracy {
                mode: AccuracyMode::Exact { state, nmax, seed, .. },
            } => {
                assert_eq!(state, "unpolarized");
                assert_eq!(nmax, 150);
                assert_eq!(seed, Some(7));
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn custom_state_strings_flow_through() {
        let cli = try_parse([
            "tetratomo", "recipe", "custom", "--state", "custom:1,0.2,0.1,0.0", "--events", "50",
        ])
        .unwrap();
        match cli.command {
            Command::Recipe { name, overrides } => {
                let (cfg, _) = recipe_config(&name, &overrides).unwrap();
                let states = cfg.states().unwrap();
                assert_eq!(states[0].stokes().components(), &[1.0, 0.2, 0.1, 0.0]);
                assert_eq!(cfg.events, 50);
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn fit_table_seed_override_warns() {
        let cli = try_parse(["tetratomo", "recipe", "fit_table", "--seed", "9"]).unwrap();
        match cli.command {
            Command::Recipe { name, overrides } => {
                let (_, warnings) = recipe_config(&name, &overrides).unwrap();
                assert_eq!(warnings.len(), 1);
            }
            other => panic!("parsed {other:?}"),
        }
    }
}
