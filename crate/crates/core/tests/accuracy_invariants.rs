//! Slow invariants of the exact accuracy model over the full working range.

use tetratomo::accuracy::{exact_accuracy_curve, exact_estimator_mean};
use tetratomo::povm::{InstrumentMatrix, Tetrahedron};
use tetratomo::qstate::{stokes_to_density, NamedState};

/// The exact average trace distance decreases with every additional copy
/// for all four one-qubit test states over N = 1..150, and stays finite
/// (no log-space overflow at large multiplicities).
#[test]
fn exact_curves_decrease_monotonically_up_to_150() {
    let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
    for state in [
        NamedState::unpolarized(),
        NamedState::horizontal(),
        NamedState::aligned(),
        NamedState::anti_aligned(),
    ] {
        let reference = stokes_to_density(state.stokes());
        let curve = exact_accuracy_curve(
            state.stokes(),
            &b,
            1,
            150,
            &reference,
            false,
            state.label().as_str(),
        )
        .unwrap();
        for point in curve.points() {
            assert!(
                point.d_avg.is_finite() && point.d_avg >= 0.0,
                "{} produced d = {} at N = {}",
                state.label(),
                point.d_avg,
                point.n
            );
        }
        for window in curve.points().windows(2) {
            assert!(
                window[1].d_avg <= window[0].d_avg + 1e-12,
                "{} rose between N = {} ({}) and N = {} ({})",
                state.label(),
                window[0].n,
                window[0].d_avg,
                window[1].n,
                window[1].d_avg
            );
        }
    }
}

/// The multinomial-weighted estimator mean reproduces the input state for
/// every named one-qubit state at several ensemble sizes.
#[test]
fn estimator_mean_is_unbiased_for_all_named_states() {
    let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
    for state in [
        NamedState::unpolarized(),
        NamedState::horizontal(),
        NamedState::aligned(),
        NamedState::anti_aligned(),
    ] {
        for n in [1, 5, 25] {
            let mean = exact_estimator_mean(state.stokes(), &b, n).unwrap();
            for (got, want) in mean.components().iter().zip(state.stokes().components()) {
                assert!(
                    (got - want).abs() <= 1e-10,
                    "{} biased at N = {n}: {got} vs {want}",
                    state.label()
                );
            }
        }
    }
}
