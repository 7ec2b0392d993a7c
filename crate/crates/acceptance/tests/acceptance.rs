//! `cargo test -p microlocal-acceptance --test acceptance`
//!
//! Optional argument: a criterion id (e.g. `4`) to run just that one.

use microlocal_acceptance::{criteria, Verdict};

fn main() {
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut verdicts: Vec<Verdict> = vec![];
    for (id, run) in criteria() {
        if only.as_deref().is_some_and(|o| o != id) {
            continue;
        }
        match run() {
            Ok(v) => {
                for v in v {
                    println!("{}", v.line());
                    verdicts.push(v);
                }
            }
            Err(e) => {
                let v = Verdict { id, name: "criterion", pass: false, detail: format!("error: {e}") };
                println!("{}", v.line());
                verdicts.push(v);
            }
        }
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {}/{} pass{}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
