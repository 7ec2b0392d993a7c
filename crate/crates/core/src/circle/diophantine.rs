use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constants of the condition `|α − p/q| > K/q^{2+β}`, checked for `q ≤ q_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
    pub q_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub satisfied: bool,
    pub worst_q: u64,
    pub worst_p: u64,
    /// `min_q (|α − p/q|·q^{2+β}) − K`.
    pub margin: f64,
    /// The expansion terminated: `α` is rational at machine precision.
    pub rational: bool,
}

/// Scans continued-fraction convergents and intermediate fractions of `α`
/// with denominators up to `q_max`.
pub fn diophantine_check(alpha: f64, params: &DiophantineParams) -> Result<DiophantineReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(params.k > 0.0) || !(params.beta >= 0.0) || params.q_max == 0 {
        return Err(Error::InvalidInput("need K > 0, beta >= 0, q_max > 0".into()));
    }
    let exact_hit = |p: u64, q: u64| (q as f64 * alpha - p as f64).abs() <= 64.0 * f64::EPSILON * q as f64;
    let mut worst = (f64::INFINITY, 0u64, 0u64);
    let mut consider = |p: u64, q: u64| {
        let s = (q as f64 * alpha - p as f64).abs() * (q as f64).powf(1.0 + params.beta);
        if s < worst.0 {
            worst = (s, p, q);
        }
    };

    // a_0 = 0 gives the convergent 0/1
    consider(0, 1);
    // (h_prev, h) and (k_prev, k): numerators/denominators of the last two convergents
    let (mut h_prev, mut h) = (1u64, 0u64);
    let (mut k_prev, mut k) = (0u64, 1u64);
    let mut x = 1.0 / alpha;
    'expansion: loop {
        let a = x.floor();
        let a_int = if a > 1e15 { params.q_max.saturating_add(1) } else { a as u64 };
        // intermediate fractions for t < a, the next convergent at t = a
        for t in 1..=a_int {
            let q = t.saturating_mul(k).saturating_add(k_prev);
            let p = t.saturating_mul(h).saturating_add(h_prev);
            if q > params.q_max {
                break 'expansion;
            }
            consider(p, q);
            if exact_hit(p, q) {
                return Ok(DiophantineReport {
                    satisfied: false,
                    worst_q: q,
                    worst_p: p,
                    margin: -params.k,
                    rational: true,
                });
            }
        }
        let h_next = a_int * h + h_prev;
        let k_next = a_int * k + k_prev;
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        let frac = x - a;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    let (s, p, q) = worst;
    let margin = s - params.k;
    Ok(DiophantineReport { satisfied: margin > 0.0, worst_q: q, worst_p: p, margin, rational: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over every denominator: nearest numerators floor/ceil(qα).
    fn brute_min(alpha: f64, beta: f64, q_max: u64) -> (f64, u64) {
        let mut best = (f64::INFINITY, 0);
        for q in 1..=q_max {
            let qa = q as f64 * alpha;
            for p in [qa.floor(), qa.ceil()] {
                let s = (qa - p).abs() * (q as f64).powf(1.0 + beta);
                if s < best.0 {
                    best = (s, q);
                }
            }
        }
        best
    }

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn golden_mean_thresholds() {
        let p = DiophantineParams { k: 0.2, beta: 0.0, q_max: 10_000 };
        let r = diophantine_check(golden(), &p).unwrap();
        assert!(r.satisfied);
        let (oracle, _) = brute_min(golden(), 0.0, 10_000);
        assert!((r.margin + 0.2 - oracle).abs() < 1e-9);
        // the minimum is 1/φ² at q = 1
        assert!((oracle - (1.0 - golden())).abs() < 1e-12);

        let r = diophantine_check(golden(), &DiophantineParams { k: 0.5, ..p }).unwrap();
        assert!(!r.satisfied);
        assert!((r.margin - (oracle - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn rational_is_flagged() {
        let r = diophantine_check(1.0 / 3.0, &DiophantineParams { k: 1e-6, beta: 0.0, q_max: 1000 }).unwrap();
        assert!(!r.satisfied && r.rational);
        assert_eq!(r.worst_q, 3);
        assert_eq!(r.margin, -1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = DiophantineParams { k: 0.2, beta: 0.0, q_max: 10 };
        assert!(diophantine_check(1.5, &p).is_err());
        assert!(diophantine_check(0.3, &DiophantineParams { k: -1.0, ..p }).is_err());
    }

    proptest! {
        #[test]
        fn convergent_scan_matches_brute_force(alpha in 0.01f64..0.99, beta in 0.0f64..0.5) {
            let p = DiophantineParams { k: 1e-3, beta, q_max: 500 };
            let r = diophantine_check(alpha, &p).unwrap();
            prop_assume!(!r.rational);
            let (oracle, _) = brute_min(alpha, beta, 500);
            // convergents and intermediate fractions realise the minimum whenever it is
            // below 1/2 (Legendre); above that only the bound matters
            if oracle < 0.5 {
                prop_assert!((r.margin + 1e-3 - oracle).abs() <= 1e-9 * (1.0 + oracle));
            } else {
                prop_assert!(r.margin + 1e-3 >= oracle - 1e-9);
            }
        }

        #[test]
        fn monotone_in_k(alpha in 0.01f64..0.99, k1 in 0.01f64..1.0, f in 0.0f64..1.0) {
            let p = DiophantineParams { k: k1, beta: 0.0, q_max: 1000 };
            let r1 = diophantine_check(alpha, &p).unwrap();
            let r2 = diophantine_check(alpha, &DiophantineParams { k: k1 * f + 1e-9, ..p }).unwrap();
            if r1.satisfied {
                prop_assert!(r2.satisfied);
            }
        }
    }
}
