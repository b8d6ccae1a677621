//! Synthetic detection records with reproducible seeding.
//!
//! Every draw comes from a ChaCha8 generator: `event_rng(seed, stream)`
//! seeds the key from the master seed and selects an independent substream.
//! Stream 0 backs direct draws ([`sample_counts`], [`stream_events`],
//! [`asymptote_counts`]); Monte-Carlo drivers assign stream `r + 1` to run
//! `r`, so runs can execute in parallel without sharing generator state.
//!
//! Counts are always produced as `N` sequential categorical draws (inverse
//! CDF over the fixed outcome order), never by a binomial shortcut, so a
//! collapsed [`EventStream`] and [`sample_counts`] agree event by event
//! under the same seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::povm::{outcome_probabilities, InstrumentMatrix};
use crate::qstate::NamedState;
use crate::{Error, Result};

/// Detector tallies for one finite ensemble.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        match counts.len() {
            4 | 16 => Ok(Self { counts }),
            n => Err(Error::BadStokesLength(n)),
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn outcome_count(&self) -> usize {
        self.counts.len()
    }
}

/// Ordered per-copy outcomes, with the seed that produced them.
#[derive(Clone, Debug)]
pub struct EventStream {
    outcomes: Vec<u8>,
    outcome_count: usize,
    seed: u64,
    source: Option<NamedState>,
}

impl EventStream {
    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> Option<&NamedState> {
        self.source.as_ref()
    }

    pub fn with_source(mut self, state: NamedState) -> Self {
        self.source = Some(state);
        self
    }

    /// Tallies the first `n` events.
    pub fn collapse_prefix(&self, n: usize) -> CountVector {
        assert!(n <= self.outcomes.len(), "prefix longer than stream");
        let mut counts = vec![0u64; self.outcome_count];
        for &outcome in &self.outcomes[..n] {
            counts[outcome as usize] += 1;
        }
        CountVector { counts }
    }

    pub fn collapse(&self) -> CountVector {
        self.collapse_prefix(self.outcomes.len())
    }
}

/// Deterministic generator for `(master seed, stream index)`.
pub fn event_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) struct CategoricalCdf {
    cdf: Vec<f64>,
    /// Highest outcome with nonzero probability; absorbs rounding at the
    /// top of the CDF so zero-probability outcomes are never drawn.
    fallback: usize,
}

impl CategoricalCdf {
    pub(crate) fn new(p: &[f64]) -> Result<Self> {
        if !matches!(p.len(), 4 | 16) {
            return Err(Error::InvalidDistribution(format!(
                "need 4 or 16 outcomes, got {}",
                p.len()
            )));
        }
        let mut sum = 0.0;
        for (j, &value) in p.iter().enumerate() {
            if !value.is_finite() || value < -crate::povm::PROBABILITY_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {j} has probability {value}"
                )));
            }
            sum += value.max(0.0);
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        let mut cdf = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        let mut fallback = 0;
        for (j, &value) in p.iter().enumerate() {
            let clamped = value.max(0.0);
            acc += clamped;
            cdf.push(acc);
            if clamped > 0.0 {
                fallback = j;
            }
        }
        Ok(Self { cdf, fallback })
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        // Strict `<` keeps zero-probability outcomes unreachable: their CDF
        // step is empty.
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.fallback)
    }

    pub(crate) fn outcome_count(&self) -> usize {
        self.cdf.len()
    }
}

pub(crate) fn draw_counts_into(
    cdf: &CategoricalCdf,
    n: u64,
    rng: &mut ChaCha8Rng,
    counts: &mut [u64],
) {
    counts.fill(0);
    for _ in 0..n {
        counts[cdf.draw(rng)] += 1;
    }
}

/// Multinomial sample of `n` events from `p`, deterministic in `seed`.
pub fn sample_counts(p: &[f64], n: u64, seed: u64) -> Result<CountVector> {
    let cdf = CategoricalCdf::new(p)?;
    let mut rng = event_rng(seed, 0);
    let mut counts = vec![0u64; cdf.outcome_count()];
    draw_counts_into(&cdf, n, &mut rng, &mut counts);
    Ok(CountVector { counts })
}

/// `n` categorical draws kept in order; collapsing a prefix of the stream
/// reproduces [`sample_counts`] for the same seed.
pub fn stream_events(p: &[f64], n: u64, seed: u64) -> Result<EventStream> {
    let cdf = CategoricalCdf::new(p)?;
    let mut rng = event_rng(seed, 0);
    let mut outcomes = Vec::with_capacity(n as usize);
    for _ in 0..n {
        outcomes.push(cdf.draw(&mut rng) as u8);
    }
    Ok(EventStream {
        outcomes,
        outcome_count: cdf.outcome_count(),
        seed,
        source: None,
    })
}

/// Large-ensemble counts used to build an asymptote reference state.
pub fn asymptote_counts(
    state: &NamedState,
    b: &InstrumentMatrix,
    n_large: u64,
    seed: u64,
) -> Result<CountVector> {
    let p = outcome_probabilities(b, state.stokes())?;
    sample_counts(&p, n_large, seed)
}
