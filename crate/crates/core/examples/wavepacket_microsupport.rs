//! Micro-support of a single periodic wavepacket: one blob at (x, ξ),
//! fast decay everywhere else.
//!
//!     cargo run --release --example wavepacket_microsupport [out_dir]

use microlocal::microsupport::{correlation_scan, HbarLadder, ScanGrid};
use microlocal::quadrature::QuadPolicy;
use microlocal::states::StateFamily;

fn main() -> microlocal::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let (x, xi) = (0.5, 0.8);
    let grid = ScanGrid::new(64, 64, -4.0, 4.0)?;
    let ladder = HbarLadder::geometric(0.01, 0.5, 6)?;
    let map = correlation_scan(&StateFamily::Wavepacket { x, xi }, &grid, &ladder, &QuadPolicy::default())?;

    let (j, k) = map.argmax(map.smallest_hbar_index());
    println!("argmax cell ({j}, {k}) = ({:.4}, {:.4}), source ({x}, {xi})", grid.y(j), grid.eta(k));
    println!("support: {} cells in {} component(s)", map.support_cells().len(), map.components().len());

    // slopes along the η axis through the source
    let jx = grid.nearest(x, 0.0).0;
    for eta in [xi, xi + 0.25, xi + 0.5, xi + 1.0, -2.0] {
        let k = grid.nearest(x, eta).1;
        println!("  slope at η = {:+.3}: {:.2}", grid.eta(k), map.slope(jx, k));
    }

    let path = out.join("wavepacket_microsupport.pgm");
    map.write_pgm(map.smallest_hbar_index(), &path)?;
    println!("heatmap: {}", path.display());
    Ok(())
}
