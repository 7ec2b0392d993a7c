use microlocal::oracle::{registry, run_all, OracleContext};

#[test]
fn light_oracle_cases_pass() {
    let outcomes = run_all(&OracleContext { seed: 0 }, false, None).unwrap();
    assert_eq!(outcomes.len(), registry().iter().filter(|c| !c.heavy).count());
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn oracle_outcomes_round_trip() {
    let outcomes = run_all(&OracleContext { seed: 0 }, false, Some("quadrature.")).unwrap();
    assert!(!outcomes.is_empty());
    let text = serde_json::to_string(&outcomes).unwrap();
    let back: Vec<microlocal::oracle::OracleOutcome> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, outcomes);
}
