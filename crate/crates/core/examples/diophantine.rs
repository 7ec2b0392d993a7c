//! Diophantine constants of the golden mean, rotation numbers of perturbed
//! rotations, and how small divisors show up in the coboundary solution.
//!
//!     cargo run --release --example diophantine

use microlocal::circle::{diophantine_check, rotation_number, DiophantineParams, MapSpec, TrigPoly};
use microlocal::cohomology::solve_rotation_coboundary;
use microlocal::pipeline::golden_mean;

fn main() -> microlocal::Result<()> {
    let phi = golden_mean();
    for k in [0.2, 0.38, 0.5] {
        let r = diophantine_check(phi, &DiophantineParams { k, beta: 0.0, q_max: 10_000 })?;
        println!("K = {k}: satisfied {} (margin {:+.6}, worst p/q = {}/{})", r.satisfied, r.margin, r.worst_p, r.worst_q);
    }

    for eps in [0.0, 0.01, 0.1] {
        let f = MapSpec::PerturbedRotation { alpha: phi, eps, p: TrigPoly::sin_mode(1, 1.0) };
        println!("ε = {eps}: rotation number {:.9}", rotation_number(&f, 100_000)?);
    }

    // a τ with many modes: divisors |e^{2πinα} − 1| are smallest at Fibonacci n
    let triples: Vec<(i64, f64, f64)> = (1..=40).map(|n| (n, 0.0, 1.0 / (n * n) as f64)).collect();
    let tau = TrigPoly::from_triples(&triples)?;
    let sol = solve_rotation_coboundary(&tau, phi)?;
    println!("40 modes: smallest divisor {:?}, residual {:.2e}", sol.smallest_divisor, sol.residual);
    match solve_rotation_coboundary(&tau, 0.25) {
        Ok(_) => println!("α = 1/4 unexpectedly solvable"),
        Err(e) => println!("α = 1/4: {e}"),
    }
    Ok(())
}
