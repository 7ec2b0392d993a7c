//! Windowed oscillatory integrals: a phase without critical points decays
//! faster than any power of ħ, a nondegenerate critical point gives ħ^{1/2}.
//!
//!     cargo run --release --example decay_dichotomy

use microlocal::circle::{PeriodicFunction, PhaseFunction, PiecewiseGrid};
use microlocal::microsupport::decay_slope;
use microlocal::quadrature::{oscillatory_integral, QuadPolicy};

fn main() -> microlocal::Result<()> {
    let (y, a) = (0.5, 0.1);
    let hbars: Vec<f64> = (0..=6).map(|j| 0.01 * 0.5f64.powi(j)).collect();
    let policy = QuadPolicy::default();

    let linear = PhaseFunction::linear(0.5);
    // φ = (z − y)²/2 near y; the kink at 0 lies outside the window
    let quadratic = PhaseFunction::new(
        0.0,
        PeriodicFunction::Grid(PiecewiseGrid::from_fn(4096, vec![0.0], |z| 0.5 * (z - y) * (z - y))?),
    );

    for (name, phase) in [("|φ′| = 0.5", &linear), ("φ′(y) = 0, φ″ = 1", &quadratic)] {
        let values = hbars
            .iter()
            .map(|&h| oscillatory_integral(y, a, phase, h, &policy).map(|v| v.norm()))
            .collect::<microlocal::Result<Vec<_>>>()?;
        for (h, v) in hbars.iter().zip(&values) {
            println!("{name:>18}  ħ = {h:.3e}  |I| = {v:.6e}");
        }
        println!("{name:>18}  slope over the 4 smallest ħ: {:.3}", decay_slope(&values, &hbars)?);
    }
    Ok(())
}
