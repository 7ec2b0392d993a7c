//! Diophantine rotation: solve w(z+α) − w(z) = −τ(z) by Fourier division,
//! check that Graph(w′) is invariant, and scan an evolved Lagrangian state.
//!
//!     cargo run --release --example rotation_invariance

use microlocal::circle::{MapSpec, PeriodicFunction};
use microlocal::cohomology::{graph_invariance_residual, solve_rotation_coboundary, verify_coboundary};
use microlocal::microsupport::{correlation_scan, support_match, PredictedSupport};
use microlocal::pipeline::{build_s_from_u, golden_mean, unit_tau, ExperimentSpec, Scenario};
use microlocal::states::StateFamily;

fn main() -> microlocal::Result<()> {
    let alpha = golden_mean();
    let tau = unit_tau();
    let f = MapSpec::Rotation { alpha };
    let sol = solve_rotation_coboundary(&tau, alpha)?;
    println!("smallest divisor {:?}", sol.smallest_divisor);
    println!("coboundary residual {:.2e}", verify_coboundary(&sol.w, &tau, &f, 4096));
    let u = PeriodicFunction::Trig(sol.u.clone());
    println!("graph invariance residual {:.2e}", graph_invariance_residual(&u, &f, &tau, 4096)?);

    let spec = ExperimentSpec::preset(Scenario::DiffeoInvariance);
    let family = StateFamily::Lagrangian { phase: build_s_from_u(&u), x: 0.2 }.evolved(spec.evolution()?);
    let map = correlation_scan(&family, &spec.grid, &spec.ladder, &spec.policy)?;
    let m = support_match(&map, &PredictedSupport::Graph(u))?;
    println!("{} support cells, worst distance to Graph(u) {:.2} cells, hit {}", m.support_cells, m.hausdorff_cells, m.hit);
    Ok(())
}
