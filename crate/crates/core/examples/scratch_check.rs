// Temporary development check for fit values and two-qubit scaling.
use std::time::Instant;

use tetratomo::accuracy::{
    average_trace_distance_exact, exact_accuracy_curve, fit_power_law, mc_accuracy_curve,
    normalize_curve,
};
use tetratomo::estimate::linear_reconstruct;
use tetratomo::povm::{InstrumentMatrix, Tetrahedron};
use tetratomo::qstate::{stokes_to_density, NamedState};
use tetratomo::sim::asymptote_counts;

fn main() {
    let t = Tetrahedron::standard();
    let b1 = InstrumentMatrix::new(&t, 1).unwrap();

    let start = Instant::now();
    for state in [
        NamedState::unpolarized(),
        NamedState::horizontal(),
        NamedState::aligned(),
        NamedState::anti_aligned(),
    ] {
        let reference = stokes_to_density(state.stokes());
        let t0 = Instant::now();
        let curve = exact_accuracy_curve(
            state.stokes(),
            &b1,
            1,
            150,
            &reference,
            false,
            state.label().as_str(),
        )
        .unwrap();
        let fit = fit_power_law(&curve, 10, 150).unwrap();
        println!(
            "{:<14} a = {:.4}  c = {:.4}  rms = {:.2e}  ({:.1?})",
            state.label().as_str(),
            fit.a,
            fit.c,
            fit.residual_rms,
            t0.elapsed()
        );
    }
    println!("exact curves total: {:.1?}", start.elapsed());

    // Ordering check: anti-aligned <= aligned for N = 2..150.
    let aligned = NamedState::aligned();
    let anti = NamedState::anti_aligned();
    let ra = stokes_to_density(aligned.stokes());
    let rn = stokes_to_density(anti.stokes());
    let mut violations = 0;
    let mut ties = 0;
    for n in 2..=150u64 {
        let da = average_trace_distance_exact(aligned.stokes(), &b1, n, &ra).unwrap();
        let dn = average_trace_distance_exact(anti.stokes(), &b1, n, &rn).unwrap();
        if dn > da {
            violations += 1;
            if n < 10 {
                println!("  ordering violated at N={n}: anti {dn} vs aligned {da}");
            }
        }
        if (dn - da).abs() < 1e-15 {
            ties += 1;
        }
    }
    println!("ordering violations: {violations}, ties: {ties}");

    // Two-qubit scaling check.
    let t0 = Instant::now();
    let b2 = InstrumentMatrix::new(&t, 2).unwrap();
    let bell = NamedState::bell_psi_plus();
    let asym_counts = asymptote_counts(&bell, &b2, 500_000, 1_000).unwrap();
    let asym = stokes_to_density(&linear_reconstruct(&asym_counts, &b2).unwrap());
    let bell_curve = mc_accuracy_curve(
        bell.stokes(),
        &b2,
        5000,
        &asym,
        5,
        42,
        false,
        "bell_psi_plus",
    )
    .unwrap();
    let bell_norm = normalize_curve(&bell_curve, 2).unwrap();

    let horizontal = NamedState::horizontal();
    let asym1_counts = asymptote_counts(&horizontal, &b1, 500_000, 2_000).unwrap();
    let asym1 = stokes_to_density(&linear_reconstruct(&asym1_counts, &b1).unwrap());
    let h_curve = mc_accuracy_curve(
        horizontal.stokes(),
        &b1,
        5000,
        &asym1,
        40,
        43,
        false,
        "horizontal",
    )
    .unwrap();
    let h_norm = normalize_curve(&h_curve, 1).unwrap();

    let mut worst_ratio: f64 = 1.0;
    let mut worst_n = 0;
    for n in 100..=5000usize {
        let r2 = bell_norm.points()[n - 1].d_avg;
        let r1 = h_norm.points()[n - 1].d_avg;
        let ratio = r2 / r1;
        let excess = if ratio > 1.0 { ratio } else { 1.0 / ratio };
        if excess > worst_ratio {
            worst_ratio = excess;
            worst_n = n;
        }
    }
    println!(
        "two-qubit/one-qubit worst ratio factor: {worst_ratio:.3} at N = {worst_n} ({:.1?})",
        t0.elapsed()
    );
    for n in [100, 300, 1000, 3000, 5000] {
        let r2 = bell_norm.points()[n - 1].d_avg;
        let r1 = h_norm.points()[n - 1].d_avg;
        println!("  N={n:<5} 2q = {r2:.5}  1q = {r1:.5}  ratio = {:.3}", r2 / r1);
    }
    let fit2 = fit_power_law(&bell_curve, 100, 5000).unwrap();
    println!("two-qubit fit: a = {:.4} c = {:.4}", fit2.a, fit2.c);
}
