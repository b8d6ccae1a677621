//! Experiment orchestration for the tetratomo toolkit: named recipes with
//! reproducible seeding, flat-file (CSV/JSON) outputs, and a manifest that
//! hashes every file a run produces.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod recipes;

pub use config::{parse_state, ExperimentConfig, Recipe};
pub use recipes::{run_recipe, RunReport};

/// Environment variable holding the default output directory for recipes.
pub const OUTPUT_DIR_ENV: &str = "TETRATOMO_OUT";
