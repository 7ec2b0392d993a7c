//! Wavepacket at (0.6, 1) pushed through the doubling map with τ ≡ 0:
//! the evolved state concentrates at the two preimages with doubled
//! momentum, {(0.3, 2), (0.8, 2)}.
//!
//!     cargo run --release --example doubling_theorem1 [out_dir]

use microlocal::pipeline::{run_experiment, write_run, ExperimentSpec, Scenario};

fn main() -> microlocal::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let spec = ExperimentSpec::preset(Scenario::Theorem1);
    let outcome = run_experiment(&spec)?;
    let run = &outcome.report.runs[0];
    println!("predicted: {:?}", run.predicted);
    for p in &run.summary.peaks {
        println!("peak ({:.4}, {:.4}) magnitude {:.3e}", p.y, p.eta, p.magnitude);
    }
    if let Some(m) = &run.summary.matched {
        println!("hausdorff {:.3} cells, hit {}", m.hausdorff_cells, m.hit);
    }
    println!("scan took {:.1} s", outcome.report.timings.scan_s);
    println!("run directory: {}", write_run(&spec, &outcome, &out)?.display());
    Ok(())
}
