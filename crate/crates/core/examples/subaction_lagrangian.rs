//! Calibrated subaction for A = −½τ′ on the doubling map, the Lagrangian
//! state built from S′ = u, and where its evolution actually lives.
//!
//! The subaction has a kink where the maximizing branch switches; the
//! scan shows the consequence (extra support off Graph(u) near it).
//!
//!     cargo run --release --example subaction_lagrangian [x]

use microlocal::ergodic::{solve_subaction, SkewSpec};
use microlocal::microsupport::{correlation_scan, predict_support, support_match, PredictedSupport};
use microlocal::pipeline::{build_s_from_u, unit_tau, ExperimentSpec, Scenario};
use microlocal::circle::PeriodicFunction;
use microlocal::states::StateFamily;

fn main() -> microlocal::Result<()> {
    let x: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let tau = unit_tau();
    let skew = SkewSpec::from_tau(&tau, 0.5)?;
    let sol = solve_subaction(&skew, 2048, 1e-10, 60)?;
    println!(
        "b: residual {:.2e} after {} iterations, contraction {:?}",
        sol.bellman_residual,
        sol.iterations,
        sol.contraction_ratio_range(3)
    );
    println!("breakpoints of b: {:?}", sol.b.breakpoints());

    // the subaction is the candidate invariant graph u; S′ = u
    let u = PeriodicFunction::Grid(sol.b.clone());
    let spec = ExperimentSpec::preset(Scenario::SubsupDoubling);
    let evo = spec.evolution()?;
    let graph = predict_support(&evo, &PredictedSupport::Graph(u.clone()), spec.lambda)?;

    let family = StateFamily::Lagrangian { phase: build_s_from_u(&u), x }.evolved(evo);
    let map = correlation_scan(&family, &spec.grid, &spec.ladder, &spec.policy)?;
    let m = support_match(&map, &graph)?;
    println!("x = {x}: {} support cells, worst distance to Graph(u) {:.2} cells, hit {}", m.support_cells, m.hausdorff_cells, m.hit);
    Ok(())
}
