//! Average trace distance of the linear estimator versus ensemble size.
//!
//! For a fixed input state measured `N` times, every partition of the `N`
//! events among the detectors reconstructs to one state and one trace
//! distance from a reference. Weighting each partition by its multinomial
//! probability gives the exact expected accuracy:
//!
//! ```text
//! D_avg(N) = sum_k  c_k p_k D_k,   c_k = N! / prod_j n_j!,   p_k = prod_j p_j^{n_j}
//! ```
//!
//! [`average_trace_distance_exact`] evaluates that sum by enumerating all
//! compositions of `N` (feasible for four outcomes up to `N` of a few
//! hundred; refused above [`DEFAULT_PATTERN_CAP`] patterns, where the
//! Monte-Carlo path takes over). [`brute_force_average`] recomputes the
//! same expectation from all `m^N` raw detector sequences and serves as the
//! independent oracle for the enumeration path.
//!
//! Multiplicities are handled in log space (factorials overflow 64-bit
//! integers at `N = 21`); partial sums are compensated and folded in a
//! fixed chunk order so results are bit-stable across thread counts.

use num_complex::Complex64;

use crate::exec::{self, Kahan};
use crate::povm::{outcome_probabilities, InstrumentMatrix};
use crate::qstate::{self, DensityMatrix, StokesVector};
use crate::sim::{draw_counts_into, event_rng, CategoricalCdf, CountVector};
use crate::{Error, Result};

/// Exact enumeration is refused above this many partition patterns.
pub const DEFAULT_PATTERN_CAP: u64 = 20_000_000;
/// The sequence-level oracle is refused above this many raw sequences.
pub const BRUTE_FORCE_SEQUENCE_CAP: u64 = 65_536;
/// Monte-Carlo runs are processed in fixed batches of this size; the batch
/// boundaries (not the thread count) define the reduction order.
const MC_BATCH: usize = 1024;

/// Number of compositions of `n` into `parts` nonnegative parts,
/// `C(n + parts - 1, parts - 1)`, saturating at `u64::MAX`.
pub fn pattern_count(n: u64, parts: usize) -> u64 {
    let k = parts as u64 - 1;
    let a = n + k;
    let mut c: u128 = 1;
    for i in 1..=k {
        c = match c.checked_mul((a - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u64::MAX,
        };
    }
    u64::try_from(c).unwrap_or(u64::MAX)
}

/// `ln(k!)` for `k = 0..=n` as compensated cumulative sums of `ln k`
/// (the log-gamma function at integer arguments).
pub(crate) fn ln_factorial_table(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    table.push(0.0);
    let mut acc = Kahan::new();
    for k in 1..=n {
        acc.add((k as f64).ln());
        table.push(acc.value());
    }
    table
}

/// Lazy lexicographic enumeration of all compositions of a total into a
/// fixed number of nonnegative parts.
#[derive(Clone, Debug)]
pub struct Compositions {
    state: Vec<u64>,
    started: bool,
    done: bool,
}

impl Compositions {
    fn new(total: u64, parts: usize) -> Self {
        let mut state = vec![0u64; parts];
        state[parts - 1] = total;
        Self {
            state,
            started: false,
            done: false,
        }
    }

    /// Steps to the next composition in ascending lexicographic order and
    /// exposes it without allocating.
    pub(crate) fn advance(&mut self) -> Option<&[u64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.state);
        }
        let m = self.state.len();
        // Rightmost position whose suffix still holds events to promote.
        let mut suffix = self.state[m - 1];
        let mut j = m - 1;
        loop {
            if j == 0 {
                self.done = true;
                return None;
            }
            j -= 1;
            if suffix > 0 {
                break;
            }
            suffix += self.state[j];
        }
        self.state[j] += 1;
        for slot in &mut self.state[j + 1..] {
            *slot = 0;
        }
        self.state[m - 1] = suffix - 1;
        Some(&self.state)
    }
}

impl Iterator for Compositions {
    type Item = CountVector;

    fn next(&mut self) -> Option<CountVector> {
        let counts = self.advance()?.to_vec();
        Some(CountVector::new(counts).expect("enumeration arity is 4 or 16"))
    }
}

/// All ways to distribute `n` events among `outcomes` detectors, in
/// ascending lexicographic order, `C(n + m - 1, m - 1)` patterns in total.
pub fn enumerate_patterns(n: u64, outcomes: usize) -> Result<Compositions> {
    enumerate_patterns_with_cap(n, outcomes, DEFAULT_PATTERN_CAP)
}

pub fn enumerate_patterns_with_cap(n: u64, outcomes: usize, cap: u64) -> Result<Compositions> {
    if !matches!(outcomes, 4 | 16) {
        return Err(Error::BadStokesLength(outcomes));
    }
    if n == 0 {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let patterns = pattern_count(n, outcomes);
    if patterns > cap {
        return Err(Error::PatternCapExceeded { patterns, cap });
    }
    Ok(Compositions::new(n, outcomes))
}

/// One partition pattern with its log multiplicity, log probability, and
/// trace distance from a reference.
#[derive(Clone, Debug)]
pub struct PartitionPattern {
    pub counts: CountVector,
    pub log_multiplicity: f64,
    pub log_probability: f64,
    pub distance: f64,
}

impl PartitionPattern {
    pub fn evaluate(
        counts: CountVector,
        probs: &[f64],
        b: &InstrumentMatrix,
        reference: &DensityMatrix,
    ) -> Result<Self> {
        if counts.outcome_count() != probs.len() {
            return Err(Error::DimensionMismatch(counts.outcome_count(), probs.len()));
        }
        let total = counts.total();
        let table = ln_factorial_table(total);
        let mut log_multiplicity = table[total as usize];
        let mut log_probability = 0.0;
        for (&c, &p) in counts.counts().iter().zip(probs) {
            log_multiplicity -= table[c as usize];
            if c > 0 {
                log_probability += if p > 0.0 {
                    c as f64 * p.ln()
                } else {
                    f64::NEG_INFINITY
                };
            }
        }
        let estimate = crate::estimate::linear_reconstruct(&counts, b)?;
        let distance = qstate::trace_distance(reference, &qstate::stokes_to_density(&estimate))?;
        Ok(Self {
            counts,
            log_multiplicity,
            log_probability,
            distance,
        })
    }

    /// `c_k p_k`, the weight this pattern carries in the exact average.
    pub fn weight(&self) -> f64 {
        (self.log_multiplicity + self.log_probability).exp()
    }
}

fn rho_dim_for_outcomes(m: usize) -> usize {
    if m == 4 {
        2
    } else {
        4
    }
}

fn transpose_inverse(b: &InstrumentMatrix) -> Vec<f64> {
    let m = b.dim();
    let inv = b.inverse();
    let mut cols = vec![0.0; m * m];
    for j in 0..m {
        for a in 0..m {
            cols[j * m + a] = inv[a * m + j];
        }
    }
    cols
}

/// Distance of one reconstructed Stokes slice from the reference, with the
/// optional nearest-physical-state constraint applied first. `s` is
/// scratch and may be rewritten.
fn distance_of_estimate(
    s: &mut [f64],
    rho_dim: usize,
    reference: &[Complex64],
    rho_buf: &mut [Complex64],
    work: &mut qstate::EigenWork,
    project: bool,
) -> f64 {
    if project {
        if s.len() == 4 {
            let norm = (s[1] * s[1] + s[2] * s[2] + s[3] * s[3]).sqrt();
            if norm > 1.0 {
                let scale = 1.0 / norm;
                s[1] *= scale;
                s[2] *= scale;
                s[3] *= scale;
            }
        } else {
            let vector = StokesVector::new(s.to_vec()).expect("valid stokes length");
            let projected = crate::estimate::project_to_physical(&vector);
            s.copy_from_slice(projected.components());
        }
    }
    let rho = &mut rho_buf[..rho_dim * rho_dim];
    qstate::density_from_stokes_into(s, rho);
    qstate::trace_distance_with(work, reference, rho, rho_dim)
}

struct ExactSums {
    distance: f64,
    mean: Vec<f64>,
}

/// Shared enumeration sweep: weights every composition of `n`, folding
/// per-chunk compensated partials in a fixed order. Chunks are indexed by
/// the first detector's count, which matches the outer level of the
/// lexicographic enumeration.
fn exact_sums(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n: u64,
    reference: &DensityMatrix,
    project: bool,
    want_mean: bool,
) -> Result<ExactSums> {
    let m = b.dim();
    let rho_dim = rho_dim_for_outcomes(m);
    if reference.dim() != rho_dim {
        return Err(Error::DimensionMismatch(reference.dim(), rho_dim));
    }
    if n == 0 {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let patterns = pattern_count(n, m);
    if patterns > DEFAULT_PATTERN_CAP {
        return Err(Error::PatternCapExceeded {
            patterns,
            cap: DEFAULT_PATTERN_CAP,
        });
    }
    let p = outcome_probabilities(b, state)?;
    exact_sums_from_probs(&p, b, n, reference, project, want_mean)
}

fn exact_sums_from_probs(
    p: &[f64],
    b: &InstrumentMatrix,
    n: u64,
    reference: &DensityMatrix,
    project: bool,
    want_mean: bool,
) -> Result<ExactSums> {
    let m = b.dim();
    let rho_dim = rho_dim_for_outcomes(m);
    let log_p: Vec<f64> = p
        .iter()
        .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
        .collect();
    let ln_fact = ln_factorial_table(n);
    let inv_cols = transpose_inverse(b);
    let reference_entries = reference.entries();

    let chunks = exec::map_collect(n as usize + 1, |first_idx| {
        let first = first_idx as u64;
        let mut w_sum = Kahan::new();
        let mut wd_sum = Kahan::new();
        let mut ws_sum = vec![Kahan::new(); if want_mean { m } else { 0 }];
        // Every pattern in this chunk puts `first` events on detector 0.
        if first > 0 && log_p[0] == f64::NEG_INFINITY {
            return (0.0, 0.0, vec![0.0; ws_sum.len()]);
        }
        let base_lw = ln_fact[n as usize] - ln_fact[first as usize]
            + if first > 0 {
                first as f64 * log_p[0]
            } else {
                0.0
            };
        let mut rest = Compositions::new(n - first, m - 1);
        let mut s_buf = [0.0f64; 16];
        let mut rho_buf = [Complex64::new(0.0, 0.0); 16];
        let mut work = qstate::EigenWork::new(rho_dim);
        let inv_n = 1.0 / n as f64;
        'pattern: while let Some(rest_counts) = rest.advance() {
            let mut lw = base_lw;
            for (j, &count) in rest_counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let lp = log_p[j + 1];
                if lp == f64::NEG_INFINITY {
                    continue 'pattern;
                }
                lw += count as f64 * lp - ln_fact[count as usize];
            }
            let w = lw.exp();

            s_buf[..m].fill(0.0);
            if first > 0 {
                let col = &inv_cols[..m];
                for a in 0..m {
                    s_buf[a] += first as f64 * col[a];
                }
            }
            for (j, &count) in rest_counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let col = &inv_cols[(j + 1) * m..(j + 2) * m];
                for a in 0..m {
                    s_buf[a] += count as f64 * col[a];
                }
            }
            for value in &mut s_buf[..m] {
                *value *= inv_n;
            }
            if want_mean {
                for (a, slot) in ws_sum.iter_mut().enumerate() {
                    slot.add(w * s_buf[a]);
                }
            }
            let d = distance_of_estimate(
                &mut s_buf[..m],
                rho_dim,
                reference_entries,
                &mut rho_buf,
                &mut work,
                project,
            );
            w_sum.add(w);
            wd_sum.add(w * d);
        }
        (
            w_sum.value(),
            wd_sum.value(),
            ws_sum.iter().map(Kahan::value).collect::<Vec<f64>>(),
        )
    });

    let mut w_total = Kahan::new();
    let mut wd_total = Kahan::new();
    let mut ws_total = vec![Kahan::new(); if want_mean { m } else { 0 }];
    for (w, wd, ws) in chunks {
        w_total.add(w);
        wd_total.add(wd);
        for (slot, value) in ws_total.iter_mut().zip(&ws) {
            slot.add(*value);
        }
    }
    let weight = w_total.value();
    if (weight - 1.0).abs() > 1e-10 {
        return Err(Error::WeightCompleteness(weight));
    }
    Ok(ExactSums {
        distance: wd_total.value(),
        mean: ws_total.iter().map(Kahan::value).collect(),
    })
}

/// Exact multinomial-weighted average trace distance for `n` detected
/// copies. Reconstruction inside the average is unconstrained.
pub fn average_trace_distance_exact(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n: u64,
    reference: &DensityMatrix,
) -> Result<f64> {
    Ok(exact_sums(state, b, n, reference, false, false)?.distance)
}

/// Multinomial-weighted mean of the linear estimator. The linear map is
/// exactly unbiased, so this equals the true Stokes vector for every `n`.
pub fn exact_estimator_mean(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n: u64,
) -> Result<StokesVector> {
    let reference = qstate::stokes_to_density(state);
    let sums = exact_sums(state, b, n, &reference, false, true)?;
    StokesVector::new(sums.mean)
}

/// Exact accuracy curve over `N = n_min..=n_max`.
pub fn exact_accuracy_curve(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n_min: u64,
    n_max: u64,
    reference: &DensityMatrix,
    project: bool,
    label: &str,
) -> Result<AccuracyCurve> {
    if n_min == 0 || n_max < n_min {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let span = (n_max - n_min + 1) as usize;
    let results = exec::map_collect(span, |i| {
        exact_sums(state, b, n_min + i as u64, reference, project, false).map(|s| s.distance)
    });
    let mut points = Vec::with_capacity(span);
    for (i, result) in results.into_iter().enumerate() {
        points.push(CurvePoint {
            n: n_min + i as u64,
            d_avg: result?,
            std_error: 0.0,
        });
    }
    AccuracyCurve::new(points, CurveMethod::Exact, label, false)
}

/// Sequence-level oracle: the same expectation as
/// [`average_trace_distance_exact`], evaluated by walking all `m^n` raw
/// detector sequences with plain per-sequence probability products (no
/// multiplicities, no log-gamma). Capped at 65 536 sequences.
pub fn brute_force_average(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n: u64,
    reference: &DensityMatrix,
) -> Result<f64> {
    let m = b.dim();
    let rho_dim = rho_dim_for_outcomes(m);
    if reference.dim() != rho_dim {
        return Err(Error::DimensionMismatch(reference.dim(), rho_dim));
    }
    if n == 0 {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let exponent = u32::try_from(n).unwrap_or(u32::MAX);
    let sequences = (m as u64)
        .checked_pow(exponent)
        .unwrap_or(u64::MAX);
    if sequences > BRUTE_FORCE_SEQUENCE_CAP {
        return Err(Error::SequenceCapExceeded {
            sequences,
            cap: BRUTE_FORCE_SEQUENCE_CAP,
        });
    }
    let p = outcome_probabilities(b, state)?;
    let inv_cols = transpose_inverse(b);
    let mut counts = vec![0u64; m];
    let mut s_buf = [0.0f64; 16];
    let mut rho_buf = [Complex64::new(0.0, 0.0); 16];
    let mut work = qstate::EigenWork::new(rho_dim);
    let mut acc = Kahan::new();
    let inv_n = 1.0 / n as f64;
    for sequence in 0..sequences {
        let mut probability = 1.0;
        counts.fill(0);
        let mut digits = sequence;
        for _ in 0..n {
            let outcome = (digits % m as u64) as usize;
            digits /= m as u64;
            probability *= p[outcome];
            counts[outcome] += 1;
        }
        if probability == 0.0 {
            continue;
        }
        s_buf[..m].fill(0.0);
        for (j, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let col = &inv_cols[j * m..(j + 1) * m];
            for a in 0..m {
                s_buf[a] += count as f64 * col[a];
            }
        }
        for value in &mut s_buf[..m] {
            *value *= inv_n;
        }
        let d = distance_of_estimate(
            &mut s_buf[..m],
            rho_dim,
            reference.entries(),
            &mut rho_buf,
            &mut work,
            false,
        );
        acc.add(probability * d);
    }
    Ok(acc.value())
}

/// Monte-Carlo mean and standard error of the trace distance.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub d_avg: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate over `runs` independent count vectors of size `n`.
/// Run `r` draws from substream `r + 1` of the master seed, so the result
/// is deterministic for a given seed regardless of thread count.
pub fn average_trace_distance_mc(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n: u64,
    reference: &DensityMatrix,
    runs: usize,
    seed: u64,
) -> Result<McEstimate> {
    let m = b.dim();
    let rho_dim = rho_dim_for_outcomes(m);
    if reference.dim() != rho_dim {
        return Err(Error::DimensionMismatch(reference.dim(), rho_dim));
    }
    if runs < 2 {
        return Err(Error::TooFew {
            what: "runs",
            needed: 2,
            got: runs,
        });
    }
    if n == 0 {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let p = outcome_probabilities(b, state)?;
    let cdf = CategoricalCdf::new(&p)?;
    let inv_cols = transpose_inverse(b);
    let reference_entries = reference.entries();

    let batches = runs.div_ceil(MC_BATCH);
    let partials = exec::map_collect(batches, |batch| {
        let lo = batch * MC_BATCH;
        let hi = (lo + MC_BATCH).min(runs);
        let mut counts = vec![0u64; m];
        let mut s_buf = [0.0f64; 16];
        let mut rho_buf = [Complex64::new(0.0, 0.0); 16];
        let mut work = qstate::EigenWork::new(rho_dim);
        let mut sum = Kahan::new();
        let mut sum_sq = Kahan::new();
        let inv_n = 1.0 / n as f64;
        for run in lo..hi {
            let mut rng = event_rng(seed, run as u64 + 1);
            draw_counts_into(&cdf, n, &mut rng, &mut counts);
            s_buf[..m].fill(0.0);
            for (j, &count) in counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let col = &inv_cols[j * m..(j + 1) * m];
                for a in 0..m {
                    s_buf[a] += count as f64 * col[a];
                }
            }
            for value in &mut s_buf[..m] {
                *value *= inv_n;
            }
            let d = distance_of_estimate(
                &mut s_buf[..m],
                rho_dim,
                reference_entries,
                &mut rho_buf,
                &mut work,
                false,
            );
            sum.add(d);
            sum_sq.add(d * d);
        }
        (sum.value(), sum_sq.value())
    });

    let mut sum = Kahan::new();
    let mut sum_sq = Kahan::new();
    for (s, s2) in partials {
        sum.add(s);
        sum_sq.add(s2);
    }
    let r = runs as f64;
    let mean = sum.value() / r;
    let variance = ((sum_sq.value() - r * mean * mean) / (r - 1.0)).max(0.0);
    Ok(McEstimate {
        d_avg: mean,
        std_error: (variance / r).sqrt(),
    })
}

/// Cumulative Monte-Carlo curve: each run streams `n_max` events once and
/// re-estimates after every event (prefix sums of one stream per run), so
/// the point at `N = n_max` coincides with [`average_trace_distance_mc`]
/// for the same seed and run count.
pub fn mc_accuracy_curve(
    state: &StokesVector,
    b: &InstrumentMatrix,
    n_max: u64,
    reference: &DensityMatrix,
    runs: usize,
    seed: u64,
    project: bool,
    label: &str,
) -> Result<AccuracyCurve> {
    let m = b.dim();
    let rho_dim = rho_dim_for_outcomes(m);
    if reference.dim() != rho_dim {
        return Err(Error::DimensionMismatch(reference.dim(), rho_dim));
    }
    if runs < 2 {
        return Err(Error::TooFew {
            what: "runs",
            needed: 2,
            got: runs,
        });
    }
    if n_max == 0 {
        return Err(Error::TooFew {
            what: "events",
            needed: 1,
            got: 0,
        });
    }
    let p = outcome_probabilities(b, state)?;
    let cdf = CategoricalCdf::new(&p)?;
    let inv_cols = transpose_inverse(b);
    let reference_entries = reference.entries();
    let steps = n_max as usize;

    let run_curves = exec::map_collect(runs, |run| {
        let mut rng = event_rng(seed, run as u64 + 1);
        let mut counts = vec![0u64; m];
        let mut s_buf = [0.0f64; 16];
        let mut rho_buf = [Complex64::new(0.0, 0.0); 16];
        let mut work = qstate::EigenWork::new(rho_dim);
        let mut distances = Vec::with_capacity(steps);
        for k in 1..=steps {
            counts[cdf.draw(&mut rng)] += 1;
            // Reconstruct from the tallies in detector order (not event
            // order) so each prefix point is bit-identical to a scalar
            // Monte-Carlo evaluation of the same run at this N.
            s_buf[..m].fill(0.0);
            for (j, &count) in counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let col = &inv_cols[j * m..(j + 1) * m];
                for a in 0..m {
                    s_buf[a] += count as f64 * col[a];
                }
            }
            let inv_k = 1.0 / k as f64;
            for value in &mut s_buf[..m] {
                *value *= inv_k;
            }
            let d = distance_of_estimate(
                &mut s_buf[..m],
                rho_dim,
                reference_entries,
                &mut rho_buf,
                &mut work,
                project,
            );
            distances.push(d);
        }
        distances
    });

    // Fold in the same fixed batch structure as the scalar path.
    let r = runs as f64;
    let mut points = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut sum = Kahan::new();
        let mut sum_sq = Kahan::new();
        for batch in run_curves.chunks(MC_BATCH) {
            let mut batch_sum = Kahan::new();
            let mut batch_sum_sq = Kahan::new();
            for curve in batch {
                let d = curve[k];
                batch_sum.add(d);
                batch_sum_sq.add(d * d);
            }
            sum.add(batch_sum.value());
            sum_sq.add(batch_sum_sq.value());
        }
        let mean = sum.value() / r;
        let variance = ((sum_sq.value() - r * mean * mean) / (r - 1.0)).max(0.0);
        points.push(CurvePoint {
            n: k as u64 + 1,
            d_avg: mean,
            std_error: (variance / r).sqrt(),
        });
    }
    AccuracyCurve::new(points, CurveMethod::MonteCarlo, label, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveMethod {
    Exact,
    MonteCarlo,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::Exact => "exact",
            CurveMethod::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for CurveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CurveMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(CurveMethod::Exact),
            "monte_carlo" => Ok(CurveMethod::MonteCarlo),
            other => Err(format!("unknown curve method {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub d_avg: f64,
    /// Standard error of the mean; zero for exact points.
    pub std_error: f64,
}

/// Accuracy versus ensemble size, exact or sampled.
#[derive(Clone, Debug)]
pub struct AccuracyCurve {
    points: Vec<CurvePoint>,
    method: CurveMethod,
    state_label: String,
    normalized: bool,
}

impl AccuracyCurve {
    pub fn new(
        points: Vec<CurvePoint>,
        method: CurveMethod,
        state_label: &str,
        normalized: bool,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFew {
                what: "curve points",
                needed: 1,
                got: 0,
            });
        }
        for window in points.windows(2) {
            if window[1].n <= window[0].n {
                return Err(Error::CurveParse {
                    line: 0,
                    reason: format!("N not strictly increasing at N = {}", window[1].n),
                });
            }
        }
        for point in &points {
            if point.d_avg < 0.0 || (method == CurveMethod::Exact && point.std_error != 0.0) {
                return Err(Error::CurveParse {
                    line: 0,
                    reason: format!("invalid point at N = {}", point.n),
                });
            }
        }
        Ok(Self {
            points,
            method,
            state_label: state_label.to_string(),
            normalized,
        })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn method(&self) -> CurveMethod {
        self.method
    }

    pub fn state_label(&self) -> &str {
        &self.state_label
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn point_at(&self, n: u64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// CSV rows `N,d_avg,std_error,method,state,normalized`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "N,d_avg,std_error,method,state,normalized")?;
        for point in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                point.n, point.d_avg, point.std_error, self.method, self.state_label, self.normalized
            )?;
        }
        Ok(())
    }

    /// Parses a curve previously written by [`AccuracyCurve::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(line))) => line,
            _ => {
                return Err(Error::CurveParse {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        if header.trim() != "N,d_avg,std_error,method,state,normalized" {
            return Err(Error::CurveParse {
                line: 1,
                reason: format!("unexpected header {header:?}"),
            });
        }
        let mut points = Vec::new();
        let mut meta: Option<(CurveMethod, String, bool)> = None;
        for (index, line) in lines {
            let line = line.map_err(|e| Error::CurveParse {
                line: index + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = |reason: String| Error::CurveParse {
                line: index + 1,
                reason,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(parse(format!("expected 6 fields, got {}", fields.len())));
            }
            let n: u64 = fields[0]
                .parse()
                .map_err(|e| parse(format!("bad N: {e}")))?;
            let d_avg: f64 = fields[1]
                .parse()
                .map_err(|e| parse(format!("bad d_avg: {e}")))?;
            let std_error: f64 = fields[2]
                .parse()
                .map_err(|e| parse(format!("bad std_error: {e}")))?;
            let method: CurveMethod = fields[3].parse().map_err(parse)?;
            let normalized: bool = fields[5]
                .parse()
                .map_err(|e| parse(format!("bad normalized flag: {e}")))?;
            match &meta {
                None => meta = Some((method, fields[4].to_string(), normalized)),
                Some((m, s, f)) => {
                    if *m != method || s != fields[4] || *f != normalized {
                        return Err(parse("mixed curves in one file".into()));
                    }
                }
            }
            points.push(CurvePoint {
                n,
                d_avg,
                std_error,
            });
        }
        let (method, state_label, normalized) = meta.ok_or(Error::CurveParse {
            line: 2,
            reason: "no data rows".into(),
        })?;
        AccuracyCurve::new(points, method, &state_label, normalized)
    }
}

/// Divides a curve by the number of free state parameters, `2^{2n} - 1`
/// (3 for one qubit, 15 for two), for cross-dimension comparison.
pub fn normalize_curve(curve: &AccuracyCurve, qubit_count: u8) -> Result<AccuracyCurve> {
    if curve.normalized {
        return Err(Error::AlreadyNormalized);
    }
    let factor = match qubit_count {
        1 => 3.0,
        2 => 15.0,
        n => return Err(Error::BadQubitCount(n)),
    };
    let points = curve
        .points
        .iter()
        .map(|p| CurvePoint {
            n: p.n,
            d_avg: p.d_avg / factor,
            std_error: p.std_error / factor,
        })
        .collect();
    Ok(AccuracyCurve {
        points,
        method: curve.method,
        state_label: curve.state_label.clone(),
        normalized: true,
    })
}

/// Power-law description `d = a / N^c` fitted in log-log space.
#[derive(Clone, Copy, Debug)]
pub struct PowerLawFit {
    pub a: f64,
    pub c: f64,
    /// Root-mean-square residual in log space over the fitted points.
    pub residual_rms: f64,
    pub n_min: u64,
    pub n_max: u64,
}

/// Unweighted least squares of `ln d_avg` against `ln N` over the points
/// with `n_min <= N <= n_max`.
pub fn fit_power_law(curve: &AccuracyCurve, n_min: u64, n_max: u64) -> Result<PowerLawFit> {
    let selected: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| p.n >= n_min && p.n <= n_max)
        .collect();
    if selected.len() < 3 {
        return Err(Error::TooFew {
            what: "fit points",
            needed: 3,
            got: selected.len(),
        });
    }
    for point in &selected {
        if point.d_avg <= 0.0 {
            return Err(Error::NonPositivePoint(point.d_avg));
        }
    }
    let xs: Vec<f64> = selected.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = selected.iter().map(|p| p.d_avg.ln()).collect();
    let count = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let mut covariance = 0.0;
    let mut variance = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        covariance += (x - x_mean) * (y - y_mean);
        variance += (x - x_mean) * (x - x_mean);
    }
    let slope = covariance / variance;
    let intercept = y_mean - slope * x_mean;
    let mut residual_sq = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let predicted = intercept + slope * x;
        residual_sq += (y - predicted) * (y - predicted);
    }
    Ok(PowerLawFit {
        a: intercept.exp(),
        c: -slope,
        residual_rms: (residual_sq / count).sqrt(),
        n_min,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::Tetrahedron;
    use crate::qstate::{stokes_to_density, NamedState};
    use crate::testkit::assert_close;

    fn b1() -> InstrumentMatrix {
        InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap()
    }

    #[test]
    fn one_event_patterns_are_the_unit_vectors() {
        let patterns: Vec<Vec<u64>> = enumerate_patterns(1, 4)
            .unwrap()
            .map(|c| c.counts().to_vec())
            .collect();
        assert_eq!(
            patterns,
            vec![
                vec![0, 0, 0, 1],
                vec![0, 0, 1, 0],
                vec![0, 1, 0, 0],
                vec![1, 0, 0, 0],
            ]
        );
    }

    #[test]
    fn two_event_pattern_count() {
        assert_eq!(enumerate_patterns(2, 4).unwrap().count(), 10);
        assert_eq!(pattern_count(2, 4), 10);
    }

    #[test]
    fn large_pattern_count_matches_closed_form() {
        assert_eq!(pattern_count(150, 4), 585_276);
        assert_eq!(enumerate_patterns(150, 4).unwrap().count(), 585_276);
    }

    #[test]
    fn sixteen_outcome_enumeration_is_capped() {
        assert!(matches!(
            enumerate_patterns(40, 16),
            Err(Error::PatternCapExceeded { .. })
        ));
        assert_eq!(pattern_count(2, 16), 136);
    }

    #[test]
    fn patterns_cover_every_total_exactly_once() {
        let mut seen = std::collections::HashSet::new();
        for counts in enumerate_patterns(7, 4).unwrap() {
            assert_eq!(counts.total(), 7);
            assert!(seen.insert(counts.counts().to_vec()));
        }
        assert_eq!(seen.len() as u64, pattern_count(7, 4));
    }

    #[test]
    fn log_multiplicity_matches_integer_factorials() {
        fn factorial(n: u64) -> u128 {
            (1..=n as u128).product::<u128>().max(1)
        }
        let b = b1();
        let reference = stokes_to_density(NamedState::unpolarized().stokes());
        let probs = [0.25; 4];
        for counts in enumerate_patterns(9, 4).unwrap() {
            let exact = factorial(counts.total())
                / counts
                    .counts()
                    .iter()
                    .map(|&c| factorial(c))
                    .product::<u128>();
            let pattern =
                PartitionPattern::evaluate(counts, &probs, &b, &reference).unwrap();
            let got = pattern.log_multiplicity.exp();
            assert_close(got / exact as f64, 1.0, 1e-10);
            assert!(pattern.distance >= 0.0);
        }
    }

    #[test]
    fn exact_single_copy_unpolarized_is_three_halves() {
        let b = b1();
        let state = NamedState::unpolarized();
        let reference = stokes_to_density(state.stokes());
        let d = average_trace_distance_exact(state.stokes(), &b, 1, &reference).unwrap();
        assert_close(d, 1.5, 1e-12);
    }

    #[test]
    fn exact_two_copies_unpolarized_closed_form() {
        // Four single-detector patterns at distance 3/2 plus six split
        // patterns at distance sqrt(3)/2.
        let b = b1();
        let state = NamedState::unpolarized();
        let reference = stokes_to_density(state.stokes());
        let d = average_trace_distance_exact(state.stokes(), &b, 2, &reference).unwrap();
        assert_close(d, 3.0 * (1.0 + 3.0f64.sqrt()) / 8.0, 1e-12);
    }

    #[test]
    fn exact_single_copy_aligned_and_anti_aligned() {
        let b = b1();
        let aligned = NamedState::aligned();
        let d = average_trace_distance_exact(
            aligned.stokes(),
            &b,
            1,
            &stokes_to_density(aligned.stokes()),
        )
        .unwrap();
        assert_close(d, (1.0 + 3.0f64.sqrt()) / 2.0, 1e-12);

        let anti = NamedState::anti_aligned();
        let d = average_trace_distance_exact(
            anti.stokes(),
            &b,
            1,
            &stokes_to_density(anti.stokes()),
        )
        .unwrap();
        assert_close(d, 2.0f64.sqrt(), 1e-12);
    }

    #[test]
    fn degenerate_distribution_collapses_to_one_pattern() {
        let b = b1();
        let reference = stokes_to_density(NamedState::unpolarized().stokes());
        let n = 5;
        let sums =
            exact_sums_from_probs(&[1.0, 0.0, 0.0, 0.0], &b, n, &reference, false, false)
                .unwrap();
        let counts = CountVector::new(vec![n, 0, 0, 0]).unwrap();
        let estimate = crate::estimate::linear_reconstruct(&counts, &b).unwrap();
        let d = qstate::trace_distance(&reference, &stokes_to_density(&estimate)).unwrap();
        assert_close(sums.distance, d, 1e-12);
    }

    #[test]
    fn brute_force_agrees_with_enumeration() {
        let b = b1();
        for state in [
            NamedState::unpolarized(),
            NamedState::aligned(),
            NamedState::horizontal(),
        ] {
            let reference = stokes_to_density(state.stokes());
            for n in 1..=4 {
                let exact =
                    average_trace_distance_exact(state.stokes(), &b, n, &reference).unwrap();
                let brute = brute_force_average(state.stokes(), &b, n, &reference).unwrap();
                assert_close(exact, brute, 1e-12);
            }
        }
    }

    #[test]
    fn brute_force_rejects_oversized_inputs() {
        let b = b1();
        let state = NamedState::unpolarized();
        let reference = stokes_to_density(state.stokes());
        assert!(matches!(
            brute_force_average(state.stokes(), &b, 9, &reference),
            Err(Error::SequenceCapExceeded { .. })
        ));
    }

    #[test]
    fn estimator_mean_is_unbiased() {
        let b = b1();
        for state in [NamedState::aligned(), NamedState::unpolarized()] {
            for n in [1, 5] {
                let mean = exact_estimator_mean(state.stokes(), &b, n).unwrap();
                for (got, want) in mean.components().iter().zip(state.stokes().components()) {
                    assert_close(*got, *want, 1e-10);
                }
            }
        }
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let b = b1();
        let state = NamedState::aligned();
        let reference = stokes_to_density(state.stokes());
        let a = average_trace_distance_mc(state.stokes(), &b, 30, &reference, 2, 11).unwrap();
        let b_est = average_trace_distance_mc(state.stokes(), &b, 30, &reference, 2, 11).unwrap();
        assert_eq!(a.d_avg, b_est.d_avg);
        assert_eq!(a.std_error, b_est.std_error);
    }

    #[test]
    fn mc_matches_exact_within_three_standard_errors() {
        let b = b1();
        let state = NamedState::unpolarized();
        let reference = stokes_to_density(state.stokes());
        let exact = average_trace_distance_exact(state.stokes(), &b, 5, &reference).unwrap();
        let mc =
            average_trace_distance_mc(state.stokes(), &b, 5, &reference, 20_000, 1).unwrap();
        assert!(
            (mc.d_avg - exact).abs() <= 3.0 * mc.std_error,
            "mc {} vs exact {} (se {})",
            mc.d_avg,
            exact,
            mc.std_error
        );
    }

    #[test]
    fn cumulative_curve_endpoint_matches_scalar_mc() {
        let b = b1();
        let state = NamedState::aligned();
        let reference = stokes_to_density(state.stokes());
        let runs = 8;
        let seed = 3;
        let curve = mc_accuracy_curve(
            state.stokes(),
            &b,
            40,
            &reference,
            runs,
            seed,
            false,
            "aligned",
        )
        .unwrap();
        let scalar =
            average_trace_distance_mc(state.stokes(), &b, 40, &reference, runs, seed).unwrap();
        let last = curve.points().last().unwrap();
        assert_eq!(last.d_avg, scalar.d_avg);
        assert_eq!(last.std_error, scalar.std_error);
    }

    #[test]
    fn synthetic_power_law_fits_exactly() {
        let points: Vec<CurvePoint> = (1..=100)
            .map(|n| CurvePoint {
                n,
                d_avg: 2.0 / (n as f64).sqrt(),
                std_error: 0.0,
            })
            .collect();
        let curve = AccuracyCurve::new(points, CurveMethod::Exact, "synthetic", false).unwrap();
        let fit = fit_power_law(&curve, 1, 100).unwrap();
        assert_close(fit.a, 2.0, 1e-12);
        assert_close(fit.c, 0.5, 1e-12);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn fit_rejects_thin_or_nonpositive_data() {
        let curve = AccuracyCurve::new(
            vec![
                CurvePoint {
                    n: 1,
                    d_avg: 1.0,
                    std_error: 0.0,
                },
                CurvePoint {
                    n: 2,
                    d_avg: 0.5,
                    std_error: 0.0,
                },
            ],
            CurveMethod::Exact,
            "thin",
            false,
        )
        .unwrap();
        assert!(matches!(
            fit_power_law(&curve, 1, 2),
            Err(Error::TooFew { .. })
        ));
    }

    #[test]
    fn normalization_divides_and_refuses_twice() {
        let curve = AccuracyCurve::new(
            vec![CurvePoint {
                n: 1,
                d_avg: 1.5,
                std_error: 0.0,
            }],
            CurveMethod::Exact,
            "unpolarized",
            false,
        )
        .unwrap();
        let normalized = normalize_curve(&curve, 1).unwrap();
        assert_close(normalized.points()[0].d_avg, 0.5, 1e-15);
        assert!(normalized.is_normalized());
        assert!(matches!(
            normalize_curve(&normalized, 1),
            Err(Error::AlreadyNormalized)
        ));
        let two_qubit = normalize_curve(&curve, 2).unwrap();
        assert_close(two_qubit.points()[0].d_avg, 0.1, 1e-15);
    }

    #[test]
    fn curve_csv_round_trips() {
        let b = b1();
        let state = NamedState::aligned();
        let reference = stokes_to_density(state.stokes());
        let curve = mc_accuracy_curve(
            state.stokes(),
            &b,
            20,
            &reference,
            4,
            9,
            true,
            "aligned",
        )
        .unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let parsed = AccuracyCurve::read_csv(&buf[..]).unwrap();
        assert_eq!(parsed.points().len(), curve.points().len());
        assert_eq!(parsed.method(), curve.method());
        assert_eq!(parsed.state_label(), curve.state_label());
        for (a, b) in parsed.points().iter().zip(curve.points()) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.d_avg, b.d_avg);
            assert_eq!(a.std_error, b.std_error);
        }
    }

    #[test]
    fn exact_curve_is_monotone_for_small_n() {
        let b = b1();
        let state = NamedState::unpolarized();
        let reference = stokes_to_density(state.stokes());
        let curve =
            exact_accuracy_curve(state.stokes(), &b, 1, 30, &reference, false, "unpolarized")
                .unwrap();
        for window in curve.points().windows(2) {
            assert!(
                window[1].d_avg <= window[0].d_avg + 1e-12,
                "accuracy curve rose between N = {} and {}",
                window[0].n,
                window[1].n
            );
        }
    }
}
