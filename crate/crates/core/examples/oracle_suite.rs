//! Every reference case: library value, independent value, verdict.
//! Pass `--heavy` to include the cases that run full scans.
//!
//!     cargo run --release --example oracle_suite [--heavy]

use microlocal::oracle::{run_all, OracleContext};

fn main() -> microlocal::Result<()> {
    let heavy = std::env::args().any(|a| a == "--heavy");
    let outcomes = run_all(&OracleContext { seed: 0 }, heavy, None)?;
    for o in &outcomes {
        println!("{} {:<40} expected {:<24e} computed {:e}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.expected, o.computed);
        if let Some(n) = &o.note {
            println!("     {n}");
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{}/{} pass", outcomes.len() - failed, outcomes.len());
    Ok(())
}
