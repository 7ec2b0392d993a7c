//! With ν = 1/ħ the potential τ enters the classical dynamics: the source
//! (0, 0) lands on η = 2ξ + τ′(y) at both preimages.
//!
//!     cargo run --release --example semiclassical_coupling

use microlocal::microsupport::{predict_support, PredictedSupport};
use microlocal::pipeline::{run_experiment, ExperimentSpec, Scenario};

fn main() -> microlocal::Result<()> {
    let spec = ExperimentSpec::preset(Scenario::Theorem2);
    let predicted = predict_support(&spec.evolution()?, &PredictedSupport::Points(vec![(0.0, 0.0)]), spec.lambda)?;
    println!("predicted: {predicted:?}");

    let report = run_experiment(&spec)?.report;
    let s = &report.runs[0].summary;
    for p in &s.peaks {
        println!("peak ({:.4}, {:+.4})", p.y, p.eta);
    }
    println!("hit: {}", report.hit);
    Ok(())
}
