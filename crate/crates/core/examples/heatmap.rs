//! PGM heatmaps of the evolved Theorem 2 state at each ħ of a short ladder.
//! Width is N_y, height N_η, the top row is η_max.
//!
//!     cargo run --release --example heatmap [out_dir]

use microlocal::circle::MapSpec;
use microlocal::microsupport::{correlation_scan, HbarLadder, ScanGrid};
use microlocal::pipeline::unit_tau;
use microlocal::quadrature::QuadPolicy;
use microlocal::states::{Coupling, EvolutionSpec, StateFamily};

fn main() -> microlocal::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let spec = EvolutionSpec::new(MapSpec::Doubling, unit_tau(), Coupling::Semiclassical)?;
    let family = StateFamily::Wavepacket { x: 0.0, xi: 0.0 }.evolved(spec);
    let grid = ScanGrid::new(128, 129, -3.0, 3.0)?;
    let ladder = HbarLadder::geometric(0.01, 0.5, 4)?;
    let map = correlation_scan(&family, &grid, &ladder, &QuadPolicy::default())?;
    for (h, hbar) in ladder.values().iter().enumerate() {
        let path = out.join(format!("heatmap_{h}.pgm"));
        map.write_pgm(h, &path)?;
        println!("ħ = {hbar:.2e} → {}", path.display());
    }
    Ok(())
}
