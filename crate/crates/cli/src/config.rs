//! Experiment configuration: recipe names, per-recipe defaults, and the
//! state-specification grammar.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use serde::Serialize;

use tetratomo::qstate::{NamedState, StokesVector};

/// Named experiment recipes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Per-copy convergence of one reconstructed state with likelihood
    /// regions at checkpoints.
    Converge,
    /// One-qubit accuracy curves (sampled and exact) for the standard test
    /// states.
    Accuracy1q,
    /// Exact curves and power-law fits for the four one-qubit test states.
    FitTable,
    /// Two-qubit Bell-state curve overlaid on the one-qubit horizontal
    /// curve, both normalized per free parameter.
    Accuracy2q,
    /// Monte-Carlo curve for a caller-chosen state.
    Custom,
}

impl Recipe {
    pub fn as_str(&self) -> &'static str {
        match self {
            Recipe::Converge => "converge",
            Recipe::Accuracy1q => "accuracy_1q",
            Recipe::FitTable => "fit_table",
            Recipe::Accuracy2q => "accuracy_2q",
            Recipe::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Recipe {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converge" => Ok(Recipe::Converge),
            "accuracy_1q" => Ok(Recipe::Accuracy1q),
            "fit_table" => Ok(Recipe::FitTable),
            "accuracy_2q" => Ok(Recipe::Accuracy2q),
            "custom" => Ok(Recipe::Custom),
            other => bail!(
                "unknown recipe {other:?}; expected converge, accuracy_1q, fit_table, accuracy_2q or custom"
            ),
        }
    }
}

impl std::fmt::Display for Recipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fully resolved configuration of one recipe run. Serialized verbatim into
/// the manifest, so a run can be reproduced from its manifest alone.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub recipe: Recipe,
    /// State specification string, `None` when the recipe supplies its own
    /// state list.
    pub state: Option<String>,
    /// Detection events per run (pairs, for two-qubit recipes).
    pub events: u64,
    /// Independent repetitions averaged per curve.
    pub runs: usize,
    pub seed: u64,
    pub fit_min: u64,
    pub fit_max: u64,
    /// Apply the nearest-physical-state constraint to per-copy estimates.
    pub project: bool,
    /// Measure distances against a simulated large-ensemble reference
    /// instead of the exact input state.
    pub asymptote: bool,
    pub asymptote_events: u64,
    pub grid_resolution: usize,
    pub threshold_delta: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for a recipe: 200 copies for convergence, 40 runs of 150
    /// events for the one-qubit curves, 5 runs of 5000 pairs for the
    /// two-qubit comparison, fits over N in [10, 150].
    pub fn for_recipe(recipe: Recipe) -> Self {
        let base = Self {
            recipe,
            state: None,
            events: 150,
            runs: 40,
            seed: 1,
            fit_min: 10,
            fit_max: 150,
            project: false,
            asymptote: true,
            asymptote_events: 500_000,
            grid_resolution: 64,
            threshold_delta: 3.0,
            output_dir: PathBuf::from("results"),
        };
        match recipe {
            Recipe::Converge => Self {
                state: Some("aligned".into()),
                events: 200,
                runs: 1,
                project: true,
                ..base
            },
            Recipe::Accuracy1q => base,
            Recipe::FitTable => Self {
                asymptote: false,
                ..base
            },
            Recipe::Accuracy2q => Self {
                events: 5000,
                runs: 5,
                fit_min: 100,
                fit_max: 5000,
                ..base
            },
            Recipe::Custom => Self {
                asymptote: false,
                ..base
            },
        }
    }

    /// The configured state, or this recipe's default state list.
    pub fn states(&self) -> Result<Vec<NamedState>> {
        if let Some(spec) = &self.state {
            return Ok(vec![parse_state(spec)?]);
        }
        Ok(match self.recipe {
            Recipe::Converge => vec![NamedState::aligned()],
            Recipe::Accuracy1q => vec![
                NamedState::aligned(),
                NamedState::anti_aligned(),
                NamedState::unpolarized(),
            ],
            Recipe::FitTable => vec![
                NamedState::unpolarized(),
                NamedState::horizontal(),
                NamedState::aligned(),
                NamedState::anti_aligned(),
            ],
            Recipe::Accuracy2q => vec![NamedState::bell_psi_plus()],
            Recipe::Custom => bail!("recipe custom requires --state"),
        })
    }
}

/// Parses a state specification: one of the named labels, or
/// `custom:<s0>,<s1>,...` with 4 or 16 comma-separated components.
/// Custom states must be normalized (`S0 = 1`) and physical.
pub fn parse_state(spec: &str) -> Result<NamedState> {
    match spec {
        "unpolarized" => return Ok(NamedState::unpolarized()),
        "horizontal" => return Ok(NamedState::horizontal()),
        "aligned" => return Ok(NamedState::aligned()),
        "anti_aligned" => return Ok(NamedState::anti_aligned()),
        "bell_psi_plus" => return Ok(NamedState::bell_psi_plus()),
        _ => {}
    }
    let Some(body) = spec.strip_prefix("custom:") else {
        bail!(
            "unknown state {spec:?}; expected unpolarized, horizontal, aligned, anti_aligned, \
             bell_psi_plus or custom:<s0>,<s1>,..."
        );
    };
    let components: Vec<f64> = body
        .split(',')
        .map(|field| {
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("bad stokes component {field:?}: {e}"))
        })
        .collect::<Result<_>>()?;
    let stokes = StokesVector::new(components)
        .map_err(|e| anyhow!("invalid custom state: {e}"))?;
    if (stokes.s0() - 1.0).abs() > 1e-9 {
        bail!("custom state must be normalized (S0 = 1), got S0 = {}", stokes.s0());
    }
    if !stokes.is_physical() {
        bail!("custom state is unphysical (density matrix has negative eigenvalues)");
    }
    Ok(NamedState::custom(stokes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_defaults_match_experimental_parameters() {
        let converge = ExperimentConfig::for_recipe(Recipe::Converge);
        assert_eq!(converge.events, 200);
        assert!(converge.project);

        let one_qubit = ExperimentConfig::for_recipe(Recipe::Accuracy1q);
        assert_eq!((one_qubit.events, one_qubit.runs), (150, 40));

        let two_qubit = ExperimentConfig::for_recipe(Recipe::Accuracy2q);
        assert_eq!((two_qubit.events, two_qubit.runs), (5000, 5));

        let fits = ExperimentConfig::for_recipe(Recipe::FitTable);
        assert_eq!((fits.fit_min, fits.fit_max), (10, 150));
        assert_eq!(fits.states().unwrap().len(), 4);
    }

    #[test]
    fn named_states_parse() {
        for name in [
            "unpolarized",
            "horizontal",
            "aligned",
            "anti_aligned",
            "bell_psi_plus",
        ] {
            assert_eq!(parse_state(name).unwrap().label().as_str(), name);
        }
    }

    #[test]
    fn custom_states_are_validated() {
        let ok = parse_state("custom:1,0.2,0.1,0.0").unwrap();
        assert_eq!(ok.stokes().components(), &[1.0, 0.2, 0.1, 0.0]);

        assert!(parse_state("custom:1,2,0,0").is_err()); // unphysical
        assert!(parse_state("custom:0.5,0,0,0").is_err()); // not normalized
        assert!(parse_state("custom:1,0,0").is_err()); // bad length
        assert!(parse_state("diagonal").is_err()); // unknown label
    }

    #[test]
    fn custom_recipe_requires_a_state() {
        let cfg = ExperimentConfig::for_recipe(Recipe::Custom);
        assert!(cfg.states().is_err());
    }
}
