//! Tsujii series s(x, a) for A = −½τ′, the cocycle identity it satisfies,
//! the involution kernel, and the twist check over words of length 3.
//!
//!     cargo run --release --example tsujii_twist

use microlocal::circle::MapSpec;
use microlocal::ergodic::{involution_kernel, tsujii_series, twist_check, SkewSpec, SymbolSequence};
use microlocal::pipeline::unit_tau;

fn main() -> microlocal::Result<()> {
    let spec = SkewSpec::from_tau(&unit_tau(), 0.5)?;
    let a = SymbolSequence::new(vec![1, 2, 2, 1, 2, 1, 1, 2, 1, 2, 2, 2, 1, 1, 1, 2, 1, 2, 1, 1, 2, 2])?;

    let x = 0.3;
    let s = tsujii_series(&spec, x, &a)?;
    println!("s(x, a) = {:.12} (tail ≤ {:.1e})", s.value, s.tail_bound);

    // s(f(x), π(x)a) = A(x) + λ s(x, a), with π(x) the branch containing x
    let fx = MapSpec::Doubling.apply(x);
    let digit = if x < 0.5 { 1 } else { 2 };
    let lhs = tsujii_series(&spec, fx, &a.prepend(digit))?.value;
    let rhs = -0.5 * (std::f64::consts::TAU * x).cos() + 0.5 * s.value;
    println!("cocycle: lhs {lhs:.12}, rhs {rhs:.12}, |diff| {:.1e}", (lhs - rhs).abs());

    println!("W(0.3, a, 0.7) = {:.12}", involution_kernel(&spec, 0.3, &a, 0.7)?);

    let words: Vec<SymbolSequence> = (0..8u8)
        .map(|w| SymbolSequence::new((0..3).map(|i| 1 + ((w >> (2 - i)) & 1)).collect()))
        .collect::<microlocal::Result<_>>()?;
    let pairs: Vec<_> = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).map(|(i, j)| (words[i].clone(), words[j].clone())).collect();
    let grid: Vec<f64> = (0..64).map(|j| (j as f64 + 0.5) / 64.0).collect();
    let r = twist_check(&spec, &grid, &pairs, 30, 1e-5)?;
    println!("twist holds: {} (min margin {:.4}, {} points evaluated)", r.holds, r.min_margin, r.evaluated);
    if let Some(w) = r.witness {
        println!("  witness x = {:.4}, a = {:?}, b = {:?}", w.x, w.a.digits(), w.b.digits());
    }
    Ok(())
}
