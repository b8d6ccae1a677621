// Temporary development check: is the ~0.61 normalized two-qubit/one-qubit
// ratio the model truth or an artifact?
use tetratomo::accuracy::{
    average_trace_distance_exact, average_trace_distance_mc, fit_power_law, mc_accuracy_curve,
    normalize_curve,
};
use tetratomo::povm::{InstrumentMatrix, Tetrahedron};
use tetratomo::qstate::{stokes_to_density, NamedState};

fn main() {
    let t = Tetrahedron::standard();
    let b1 = InstrumentMatrix::new(&t, 1).unwrap();
    let b2 = InstrumentMatrix::new(&t, 2).unwrap();
    let bell = NamedState::bell_psi_plus();
    let horizontal = NamedState::horizontal();
    let rb = stokes_to_density(bell.stokes());
    let rh = stokes_to_density(horizontal.stokes());

    // Independent cross-check of the two-qubit MC pipeline against exact
    // enumeration at N = 10 (3.27M sixteen-part patterns).
    let exact10 = average_trace_distance_exact(bell.stokes(), &b2, 10, &rb).unwrap();
    let mc10 = average_trace_distance_mc(bell.stokes(), &b2, 10, &rb, 20_000, 5).unwrap();
    println!(
        "bell N=10: exact {exact10:.6}  mc {:.6} +/- {:.6}  (z = {:.2})",
        mc10.d_avg,
        mc10.std_error,
        (mc10.d_avg - exact10) / mc10.std_error
    );

    // High-statistics ratio with true references.
    let bell_curve =
        mc_accuracy_curve(bell.stokes(), &b2, 3000, &rb, 100, 11, false, "bell").unwrap();
    let h_curve =
        mc_accuracy_curve(horizontal.stokes(), &b1, 3000, &rh, 400, 12, false, "h").unwrap();
    let bn = normalize_curve(&bell_curve, 2).unwrap();
    let hn = normalize_curve(&h_curve, 1).unwrap();
    for n in [100, 300, 1000, 3000] {
        let r2 = bn.points()[n - 1].d_avg;
        let r1 = hn.points()[n - 1].d_avg;
        println!(
            "N={n:<5} 2q {r2:.5} (se {:.5})  1q {r1:.5} (se {:.5})  ratio {:.4}  sqrtN*2q {:.4}  sqrtN*1q {:.4}",
            bn.points()[n - 1].std_error,
            hn.points()[n - 1].std_error,
            r2 / r1,
            (n as f64).sqrt() * r2 * 15.0,
            (n as f64).sqrt() * r1 * 3.0,
        );
    }
    let fit2 = fit_power_law(&bell_curve, 100, 3000).unwrap();
    println!("100-run 2q fit: a = {:.4} c = {:.4}", fit2.a, fit2.c);

    // c-fit stability across seeds for the actual 5-run recipe.
    for seed in [1u64, 2, 3, 4, 5] {
        let c5 = mc_accuracy_curve(bell.stokes(), &b2, 5000, &rb, 5, seed, false, "bell").unwrap();
        let f = fit_power_law(&c5, 100, 5000).unwrap();
        println!("5-run seed {seed}: a = {:.4} c = {:.4}", f.a, f.c);
    }
}
