//! Independent reference computations behind the documented examples.
//!
//! Every case pairs a library result with a value obtained another way
//! (closed form, brute force, direct summation, finer quadrature, finite
//! differences) and a rule for comparing them. `mlc oracle` runs them.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{
    diophantine_check, DiophantineParams, MapSpec, PeriodicFunction, PhaseFunction, PiecewiseGrid, Side, TrigPoly,
};
use crate::cohomology::{graph_invariance_residual, solve_rotation_coboundary, verify_coboundary};
use crate::ergodic::{
    coboundary_residual, involution_kernel, skew_forward, skew_inverse_branches, solve_subaction, sup_over_sequences,
    tsujii_series, twist_check, SkewSpec, SubactionSolution, SupMode, SymbolSequence,
};
use crate::microsupport::{correlation_scan, decay_slope, predict_support, HbarLadder, PredictedSupport, ScanGrid};
use crate::pipeline::{build_s_from_u, golden_mean, run_experiment, unit_tau, ExperimentReport, ExperimentSpec, Scenario};
use crate::quadrature::{gaussian_derivative_l1, gaussian_derivative, inner_product, oscillatory_integral, QuadPolicy};
use crate::states::{evolve, Coupling, EvolutionSpec, LagrangianParams, QuantumState, StateFamily};
use crate::{Complex64, Error, Result};

/// How `computed` is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Rule {
    /// `|computed − expected| ≤ tol`.
    Abs(f64),
    /// `|computed − expected| ≤ tol·|expected|`.
    Rel(f64),
    /// `computed ≥ bound` (expected shown for reference).
    AtLeast(f64),
    /// `computed ≤ bound`.
    AtMost(f64),
}

impl Rule {
    pub fn check(self, expected: f64, computed: f64) -> bool {
        match self {
            Rule::Abs(t) => (computed - expected).abs() <= t,
            Rule::Rel(t) => (computed - expected).abs() <= t * expected.abs(),
            Rule::AtLeast(b) => computed >= b,
            Rule::AtMost(b) => computed <= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub id: String,
    pub description: String,
    pub expected: f64,
    pub computed: f64,
    pub rule: Rule,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub struct Measured {
    pub expected: f64,
    pub computed: f64,
    pub rule: Rule,
    pub note: Option<String>,
}

fn m(expected: f64, computed: f64, rule: Rule) -> Result<Measured> {
    Ok(Measured { expected, computed, rule, note: None })
}

fn noted(expected: f64, computed: f64, rule: Rule, note: &str) -> Result<Measured> {
    Ok(Measured { expected, computed, rule, note: Some(note.into()) })
}

#[derive(Debug, Clone, Copy)]
pub struct OracleContext {
    pub seed: u64,
}

pub struct OracleCase {
    pub id: &'static str,
    pub description: &'static str,
    /// Runs a full scan or a deep tree search (seconds to minutes).
    pub heavy: bool,
    run: fn(&OracleContext) -> Result<Measured>,
}

impl OracleCase {
    pub fn run(&self, ctx: &OracleContext) -> Result<OracleOutcome> {
        let r = (self.run)(ctx)?;
        Ok(OracleOutcome {
            id: self.id.into(),
            description: self.description.into(),
            expected: r.expected,
            computed: r.computed,
            rule: r.rule,
            pass: r.rule.check(r.expected, r.computed),
            note: r.note,
        })
    }
}

// ---- reference formulas -------------------------------------------------

/// `Σ_{|k|≤k_max} e^{iξ(z−k)/ħ} e^{−(z−k−x)²/4ħ}`.
pub fn direct_wavepacket(x: f64, xi: f64, hbar: f64, z: f64, k_max: i64) -> Complex64 {
    (-k_max..=k_max)
        .map(|k| {
            let t = z - k as f64;
            Complex64::from_polar((-(t - x) * (t - x) / (4.0 * hbar)).exp(), xi * t / hbar)
        })
        .sum()
}

/// `⟨φ_{a,0}, φ_{b,0}⟩ = √(2πħ) Σ_m e^{−(a−b−m)²/8ħ}`.
pub fn gaussian_overlap(a: f64, b: f64, hbar: f64) -> f64 {
    (TAU * hbar).sqrt() * (-6..=6).map(|m| (-(a - b - m as f64).powi(2) / (8.0 * hbar)).exp()).sum::<f64>()
}

/// `∫_{−a}^{a} e^{−t²/4ħ} dt = 2√(πħ)·erf(a/2√ħ)`.
pub fn gaussian_window(a: f64, hbar: f64) -> f64 {
    2.0 * (PI * hbar).sqrt() * libm::erf(a / (2.0 * hbar.sqrt()))
}

/// `c(1 − λ^K)/(1 − λ)`.
pub fn geometric_sum(c: f64, lambda: f64, k: usize) -> f64 {
    c * (1.0 - lambda.powi(k as i32)) / (1.0 - lambda)
}

/// `min_{1≤q≤q_max} q^{2+β}|α − p/q|` with `p` the nearest integer, by
/// scanning every denominator.
pub fn brute_force_diophantine(alpha: f64, beta: f64, q_max: u64) -> (f64, u64) {
    let mut best = (f64::INFINITY, 0);
    for q in 1..=q_max {
        let qf = q as f64;
        let v = (qf * alpha - (qf * alpha).round()).abs() * qf.powf(1.0 + beta);
        if v < best.0 {
            best = (v, q);
        }
    }
    best
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<T>(f: impl Fn(f64) -> T, a: f64, b: f64, n: usize) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
{
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc = acc + f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn central_difference(f: impl Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    (f(z + h) - f(z - h)) / (2.0 * h)
}

fn cosine_skew() -> SkewSpec {
    SkewSpec::from_tau(&unit_tau(), 0.5).expect("static spec")
}

fn cosine_subaction() -> &'static SubactionSolution {
    static SOL: OnceLock<SubactionSolution> = OnceLock::new();
    SOL.get_or_init(|| solve_subaction(&cosine_skew(), 2048, 1e-10, 60).expect("static subaction"))
}

fn theorem1_report() -> Result<&'static ExperimentReport> {
    static REP: OnceLock<std::result::Result<ExperimentReport, String>> = OnceLock::new();
    REP.get_or_init(|| {
        run_experiment(&ExperimentSpec::preset(Scenario::Theorem1)).map(|o| o.report).map_err(|e| e.to_string())
    })
    .as_ref()
    .map_err(|e| Error::NotConverged(e.clone()))
}

fn diffeo_report() -> Result<&'static ExperimentReport> {
    static REP: OnceLock<std::result::Result<ExperimentReport, String>> = OnceLock::new();
    REP.get_or_init(|| {
        run_experiment(&ExperimentSpec::preset(Scenario::DiffeoInvariance))
            .map(|o| o.report)
            .map_err(|e| e.to_string())
    })
    .as_ref()
    .map_err(|e| Error::NotConverged(e.clone()))
}

fn max_point_deviation(got: &PredictedSupport, want: &[(f64, f64)]) -> f64 {
    let PredictedSupport::Points(p) = got else { return f64::INFINITY };
    if p.len() != want.len() {
        return f64::INFINITY;
    }
    p.iter().zip(want).map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs())).fold(0.0, f64::max)
}

// ---- cases --------------------------------------------------------------

pub fn registry() -> Vec<OracleCase> {
    vec![
        OracleCase {
            id: "circle.perturbed_derivative",
            description: "f'(0) of z+α+0.1 sin(2πz) against a central difference of the lift",
            heavy: false,
            run: |_| {
                let f = MapSpec::PerturbedRotation { alpha: golden_mean(), eps: 0.1, p: TrigPoly::sin_mode(1, 1.0) };
                m(central_difference(|z| f.lift(z), 0.0, 1e-5), f.derivative(0.0), Rule::Abs(1e-8))
            },
        },
        OracleCase {
            id: "circle.perturbed_rotation_number",
            description: "rotation number of z+α+0.01 sin(2πz), α golden, within 0.01 of α",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let f = MapSpec::PerturbedRotation { alpha, eps: 0.01, p: TrigPoly::sin_mode(1, 1.0) };
                // long orbit of the lift, independent of the library routine
                let (mut z, mut turns) = (0.0f64, 0.0f64);
                let n = 1_000_000;
                for _ in 0..n {
                    let next = f.lift(z);
                    turns += next.floor();
                    z = next - next.floor();
                }
                let long = (turns + z) / n as f64;
                let got = crate::circle::rotation_number(&f, 100_000)?;
                Ok(Measured {
                    expected: alpha,
                    computed: got,
                    rule: Rule::Abs(0.01),
                    note: Some(format!("long-orbit oracle (n=1e6): {long:.9}")),
                })
            },
        },
        OracleCase {
            id: "circle.diophantine_golden_k0.2",
            description: "golden mean, K=0.2, β=0, q≤1e4: min q²|α−p/q| by brute force; satisfied",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let r = diophantine_check(alpha, &DiophantineParams { k: 0.2, beta: 0.0, q_max: 10_000 })?;
                let (brute, _) = brute_force_diophantine(alpha, 0.0, 10_000);
                let computed = if r.satisfied { r.margin + 0.2 } else { f64::NAN };
                noted(brute, computed, Rule::Abs(1e-9), "minimum is 1/φ² = 0.381966 at q=1; 0.276 = 1/(φ+2) is only a lower bound")
            },
        },
        OracleCase {
            id: "circle.diophantine_golden_k0.5",
            description: "golden mean, K=0.5: margin equals brute-force minimum − 0.5 < 0; not satisfied",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let r = diophantine_check(alpha, &DiophantineParams { k: 0.5, beta: 0.0, q_max: 10_000 })?;
                let (brute, _) = brute_force_diophantine(alpha, 0.0, 10_000);
                let computed = if r.satisfied { f64::NAN } else { r.margin };
                m(brute - 0.5, computed, Rule::Abs(1e-9))
            },
        },
        OracleCase {
            id: "circle.abs_kink_left",
            description: "left derivative at 1/2 of |z−1/2| sampled on M=512",
            heavy: false,
            run: |_| {
                let g = PiecewiseGrid::from_fn(512, vec![0.0, 0.5], |z| (z - 0.5).abs())?;
                m(-1.0, g.derivative(0.5, Some(Side::Left))?, Rule::Abs(1e-6))
            },
        },
        OracleCase {
            id: "circle.abs_kink_right",
            description: "right derivative at 1/2 of |z−1/2| sampled on M=512",
            heavy: false,
            run: |_| {
                let g = PiecewiseGrid::from_fn(512, vec![0.0, 0.5], |z| (z - 0.5).abs())?;
                m(1.0, g.derivative(0.5, Some(Side::Right))?, Rule::Abs(1e-6))
            },
        },
        OracleCase {
            id: "states.wavepacket_centre",
            description: "|φ_{0.5,0}(0.5)| at ħ=0.01 against the |k|≤50 sum (and ≥ 1)",
            heavy: false,
            run: |_| {
                let v = QuantumState::wavepacket(0.5, 0.0, 0.01)?.eval(0.5).norm();
                let direct = direct_wavepacket(0.5, 0.0, 0.01, 0.5, 50).norm();
                m(direct, if v >= 1.0 { v } else { f64::NAN }, Rule::Rel(1e-14))
            },
        },
        OracleCase {
            id: "states.wavepacket_two_copies",
            description: "|φ_{0.2,1}(0.7)| at ħ=0.005 against the |k|≤50 sum",
            heavy: false,
            run: |_| {
                let v = QuantumState::wavepacket(0.2, 1.0, 0.005)?.eval(0.7).norm();
                let direct = direct_wavepacket(0.2, 1.0, 0.005, 0.7, 50).norm();
                noted(
                    direct,
                    v,
                    Rule::Rel(1e-3),
                    "copies k=0 and k=1 are both 0.5 away: modulus 2|cos 100|e^{-12.5}, not e^{-12.5}",
                )
            },
        },
        OracleCase {
            id: "states.lagrangian_quadratic",
            description: "S=z²/2 (drift 1/2 plus periodic (z²−z)/2), x=0.5, ħ=0.01, z=0.5 against the |k|≤50 sum",
            heavy: false,
            run: |_| {
                let grid = PiecewiseGrid::from_fn(2048, vec![0.0], |z| 0.5 * (z * z - z))?;
                let p = LagrangianParams::new(PhaseFunction::new(0.5, PeriodicFunction::Grid(grid)), 0.5, 0.01)?;
                let v = crate::states::eval_lagrangian(&p, 0.5);
                let direct = crate::states::lagrangian_sum(&p, 0.5, -50, 50);
                let k0 = Complex64::from_polar(1.0, 0.125 / 0.01);
                Ok(Measured {
                    expected: 0.0,
                    computed: (v - direct).norm(),
                    rule: Rule::Abs(1e-12),
                    note: Some(format!("|value − k0 term| = {:.2e}", (v - k0).norm())),
                })
            },
        },
        OracleCase {
            id: "states.evolved_modulus",
            description: "max over 128 points of ||F̂ψ(z)| − |ψ(2z)||, τ=cos, semiclassical, ħ=0.01",
            heavy: false,
            run: |_| {
                let s = QuantumState::wavepacket(0.3, 0.7, 0.01)?;
                let spec = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::cos_mode(1, 1.0), Coupling::Semiclassical)?;
                let e = evolve(&s, &spec);
                let worst = (0..128)
                    .map(|j| {
                        let z = j as f64 / 128.0;
                        (e.eval(z).norm() - s.eval(MapSpec::Doubling.apply(z)).norm()).abs()
                    })
                    .fold(0.0, f64::max);
                m(0.0, worst, Rule::Abs(1e-14))
            },
        },
        OracleCase {
            id: "quadrature.self_overlap",
            description: "⟨φ,φ⟩ at x=0.5, ξ=0, ħ=0.01 against √(2πħ) (closed form)",
            heavy: false,
            run: |_| {
                let s = QuantumState::wavepacket(0.5, 0.0, 0.01)?;
                let v = inner_product(&s, &s, &QuadPolicy::default())?.re;
                Ok(Measured {
                    expected: (TAU * 0.01f64).sqrt(),
                    computed: v,
                    rule: Rule::Rel(1e-4),
                    note: Some(format!("all-images closed form {:.15}", gaussian_overlap(0.5, 0.5, 0.01))),
                })
            },
        },
        OracleCase {
            id: "quadrature.overlap_min_image",
            description: "|⟨φ_{0.2,0}, φ_{0.8,0}⟩| at ħ=0.005 against the all-images Gaussian overlap",
            heavy: false,
            run: |_| {
                let a = QuantumState::wavepacket(0.2, 0.0, 0.005)?;
                let b = QuantumState::wavepacket(0.8, 0.0, 0.005)?;
                let v = inner_product(&a, &b, &QuadPolicy::default())?.norm();
                noted(
                    gaussian_overlap(0.2, 0.8, 0.005),
                    v,
                    Rule::Rel(1e-10),
                    "min-image distance is 0.4, so the overlap is about 3.27e-3, not below 1e-8",
                )
            },
        },
        OracleCase {
            id: "quadrature.window_erf",
            description: "∫ over |z−0.5|≤0.3 of e^{−(z−y)²/4ħ}, ħ=0.01, against 2√(πħ)·erf(1.5)",
            heavy: false,
            run: |_| {
                let v = oscillatory_integral(0.5, 0.3, &PhaseFunction::zero(), 0.01, &QuadPolicy::default())?;
                noted(
                    gaussian_window(0.3, 0.01),
                    v.re,
                    Rule::Abs(1e-6),
                    "the erf factor is 0.9661; 0.35449 is the untruncated integral",
                )
            },
        },
        OracleCase {
            id: "quadrature.window_linear_phase",
            description: "|∫ e^{−(z−y)²/4ħ} e^{i·0.5z/ħ}| over |z−0.5|≤0.4, ħ=0.01, against fine Simpson",
            heavy: false,
            run: |_| {
                let (y, a, h) = (0.5, 0.4, 0.01);
                let v = oscillatory_integral(y, a, &PhaseFunction::linear(0.5), h, &QuadPolicy::default())?;
                let f = |z: f64| Complex64::from_polar((-(z - y) * (z - y) / (4.0 * h)).exp(), 0.5 * z / h);
                let reference = simpson(f, y - a, y + a, 400_000);
                noted(
                    reference.norm(),
                    v.norm(),
                    Rule::Rel(1e-9),
                    "window endpoints leave about 7e-4; e^{-25} is the full-line transform",
                )
            },
        },
        OracleCase {
            id: "quadrature.estderiv_n3_quadrature",
            description: "∫|g'''| over |t|≤0.3 at ħ=2.5e-3 against fine Simpson of |g'''|",
            heavy: false,
            run: |_| {
                let (a, h) = (0.3, 2.5e-3);
                let reference = simpson(|t| gaussian_derivative(3, t, h).abs(), -a, a, 2_000_000);
                m(reference, gaussian_derivative_l1(3, a, h)?, Rule::Rel(1e-6))
            },
        },
        OracleCase {
            id: "quadrature.estderiv_n3_limit",
            description: "ħ·∫|g'''| at ħ=2.5e-3 against its ħ→0 limit 1+4e^{−3/2}",
            heavy: false,
            run: |_| {
                let h = 2.5e-3;
                noted(
                    1.0 + 4.0 * (-1.5f64).exp(),
                    h * gaussian_derivative_l1(3, 0.3, h)?,
                    Rule::Rel(0.05),
                    "limit is 1+4e^{-3/2} = 1.8925; the value 2 comes from taking g''(0) = -1/ħ instead of -1/(2ħ)",
                )
            },
        },
        OracleCase {
            id: "microsupport.far_cell_slope",
            description: "slope at (0.1, 3) for φ_{0.5,0}, 64×64 grid, ladder j=0..6 (≥ 4); expected = closed-form overlap slope",
            heavy: true,
            run: |_| {
                let grid = ScanGrid::new(64, 64, -4.0, 4.0)?;
                let ladder = HbarLadder::geometric(0.01, 0.5, 6)?;
                let map = correlation_scan(&StateFamily::Wavepacket { x: 0.5, xi: 0.0 }, &grid, &ladder, &QuadPolicy::default())?;
                let (j, k) = grid.nearest(0.1, 3.0);
                let (dy, de) = (grid.y(j) - 0.5, grid.eta(k));
                // ln of the overlap is −(Δy²/8 + Δη²/2)/ħ; regress it in log space to avoid underflow
                let c = dy * dy / 8.0 + de * de / 2.0;
                let tail = &ladder.values()[ladder.len() - 4..];
                let expected = ls_slope(
                    &tail.iter().map(|h| h.ln()).collect::<Vec<_>>(),
                    &tail.iter().map(|h| -c / h).collect::<Vec<_>>(),
                );
                m(expected, map.slope(j, k), Rule::AtLeast(4.0))
            },
        },
        OracleCase {
            id: "microsupport.exp_ladder_slope",
            description: "slope of e^{−0.01/ħ} on 0.01·2^{−j}, j=3..6 (≥ 8); expected = hand regression",
            heavy: false,
            run: |_| {
                let h: Vec<f64> = (3..=6).map(|j| 0.01 * 0.5f64.powi(j)).collect();
                let v: Vec<f64> = h.iter().map(|h| (-0.01 / h).exp()).collect();
                let xs: Vec<f64> = h.iter().map(|h| h.ln()).collect();
                let ys: Vec<f64> = h.iter().map(|h| -0.01 / h).collect();
                let expected = ls_slope(&xs, &ys);
                let got = decay_slope(&v, &h)?;
                Ok(Measured {
                    expected,
                    computed: got,
                    rule: Rule::AtLeast(8.0),
                    note: Some(format!("|computed − expected| = {:.1e}", (got - expected).abs())),
                })
            },
        },
        OracleCase {
            id: "microsupport.theorem2_prediction",
            description: "doubling, τ′=cos, source (0,0) → {(0,1),(0.5,−1)} by η=2ξ+τ′(y)",
            heavy: false,
            run: |_| {
                let spec = EvolutionSpec::new(MapSpec::Doubling, unit_tau(), Coupling::Semiclassical)?;
                let p = predict_support(&spec, &PredictedSupport::Points(vec![(0.0, 0.0)]), 0.5)?;
                let d = unit_tau().derivative();
                m(0.0, max_point_deviation(&p, &[(0.0, d.eval(0.0)), (0.5, d.eval(0.5))]), Rule::Abs(1e-15))
            },
        },
        OracleCase {
            id: "microsupport.theorem1_desk_run",
            description: "Theorem 1 preset: Hausdorff distance to {(0.3,2),(0.8,2)} in cells (≤ 1.5)",
            heavy: true,
            run: |_| {
                let r = theorem1_report()?;
                let d = r.runs[0].summary.matched.map_or(f64::INFINITY, |m| m.hausdorff_cells);
                m(0.0, d, Rule::AtMost(1.5))
            },
        },
        OracleCase {
            id: "microsupport.theorem1_heatmap_blobs",
            description: "Theorem 1 preset: two support components, peaks within 1.5 cells of the predicted cells",
            heavy: true,
            run: |_| {
                let r = theorem1_report()?;
                let s = &r.runs[0].summary;
                let want = [(0.3, 2.0), (0.8, 2.0)];
                let worst = if s.components == 2 {
                    s.peaks
                        .iter()
                        .map(|p| {
                            want.iter()
                                .map(|&(y, e)| {
                                    (crate::circle::circle_distance(p.y, y) * s.grid.n_y as f64)
                                        .hypot((p.eta - e) / s.grid.eta_step())
                                })
                                .fold(f64::INFINITY, f64::min)
                        })
                        .fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                m(0.0, worst, Rule::AtMost(1.5))
            },
        },
        OracleCase {
            id: "ergodic.forward_cos",
            description: "F(0,4) with A=−½cos(2π·), λ=½: s-component 2 − 0.5",
            heavy: false,
            run: |_| m(1.5, skew_forward(&cosine_skew(), 0.0, 4.0).1, Rule::Abs(1e-15)),
        },
        OracleCase {
            id: "ergodic.inverse_const",
            description: "G₁,G₂(0,2) with A≡1, λ=½ → {(0,2),(0.5,2)}",
            heavy: false,
            run: |_| {
                let spec = SkewSpec::new(MapSpec::Doubling, 0.5, TrigPoly::constant(1.0).into())?;
                let g = skew_inverse_branches(&spec, 0.0, 2.0)?;
                m(0.0, max_point_deviation(&PredictedSupport::Points(g.to_vec()), &[(0.0, 2.0), (0.5, 2.0)]), Rule::Abs(1e-15))
            },
        },
        OracleCase {
            id: "ergodic.geometric_series",
            description: "Tsujii series of A≡0.7, λ=½, K=20 against c(1−λ^K)/(1−λ)",
            heavy: false,
            run: |_| {
                let spec = SkewSpec::new(MapSpec::Doubling, 0.5, TrigPoly::constant(0.7).into())?;
                let v = tsujii_series(&spec, 0.3, &SymbolSequence::constant(2, 20)?)?.value;
                m(geometric_sum(0.7, 0.5, 20), v, Rule::Abs(1e-14))
            },
        },
        OracleCase {
            id: "ergodic.subaction_vs_tree",
            description: "max over seeded points of |b(x) − tree sup (K=26)|, M=2048; bound 2(½)^26 sup|A| + 1e-9",
            heavy: true,
            run: |ctx| {
                let sol = cosine_subaction();
                let spec = cosine_skew();
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
                let mut worst = 0.0f64;
                for _ in 0..4 {
                    let x: f64 = rng.gen();
                    let t = sup_over_sequences(&spec, x, 26, SupMode::Tree)?;
                    worst = worst.max((sol.b.eval(x) - t.value).abs());
                }
                noted(
                    0.0,
                    worst,
                    Rule::AtMost(2.0 * 0.5f64.powi(26) * 0.5 + 1e-9),
                    "tree depth 26 (the exact-mode cap) stands in for depth 40",
                )
            },
        },
        OracleCase {
            id: "ergodic.sup_at_quarter",
            description: "|b(0.25) − tree sup (K=22)| within tail (½)^22·sup|A|/(½) + 1e-9",
            heavy: false,
            run: |_| {
                let t = sup_over_sequences(&cosine_skew(), 0.25, 22, SupMode::Tree)?;
                m(0.0, (cosine_subaction().b.eval(0.25) - t.value).abs(), Rule::AtMost(t.tail_bound + 1e-9))
            },
        },
        OracleCase {
            id: "ergodic.kernel_direct",
            description: "W(0.3,(1,…),0.5), K=30, against a hand-rolled two-series subtraction",
            heavy: false,
            run: |_| {
                let spec = cosine_skew();
                let a = SymbolSequence::constant(1, 30)?;
                let series = |x: f64| {
                    let (mut w, mut s, mut l) = (x, 0.0, 1.0);
                    for _ in 0..30 {
                        w *= 0.5;
                        s += l * -0.5 * (TAU * w).cos();
                        l *= 0.5;
                    }
                    s
                };
                m(series(0.3) - series(0.5), involution_kernel(&spec, 0.3, &a, 0.5)?, Rule::Abs(1e-14))
            },
        },
        OracleCase {
            id: "ergodic.twist_refinement",
            description: "twist verdict for A=−½cos(2π·) on 16 points equals the verdict on 64 points (1 = holds)",
            heavy: false,
            run: |_| {
                let spec = cosine_skew();
                let pairs: Vec<(SymbolSequence, SymbolSequence)> = [
                    (vec![1, 1, 1], vec![1, 1, 2]),
                    (vec![1, 2, 1], vec![2, 1, 1]),
                    (vec![1, 1, 2], vec![2, 2, 2]),
                    (vec![1, 2, 2], vec![2, 1, 2]),
                ]
                .into_iter()
                .map(|(a, b)| Ok((SymbolSequence::new(a)?, SymbolSequence::new(b)?)))
                .collect::<Result<_>>()?;
                let grid = |n: usize| (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect::<Vec<_>>();
                let coarse = twist_check(&spec, &grid(16), &pairs, 30, 1e-5)?;
                let fine = twist_check(&spec, &grid(64), &pairs, 30, 1e-5)?;
                Ok(Measured {
                    expected: fine.holds as u8 as f64,
                    computed: coarse.holds as u8 as f64,
                    rule: Rule::Abs(0.0),
                    note: Some(format!("min margins: coarse {:.6e}, fine {:.6e}", coarse.min_margin, fine.min_margin)),
                })
            },
        },
        OracleCase {
            id: "ergodic.coboundary_rotation",
            description: "|u(z) − u(z+α) − τ′(z)| for u=w′, golden rotation, τ=sin(2π·)/(2π) (≤ 1e-8)",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let sol = solve_rotation_coboundary(&unit_tau(), alpha)?;
                let r = coboundary_residual(&sol.u.into(), &unit_tau(), &MapSpec::Rotation { alpha }, 0.5, 4096)?;
                m(0.0, r.max_residual_se, Rule::AtMost(1e-8))
            },
        },
        OracleCase {
            id: "ergodic.bellman_gap",
            description: "Bellman gap of the solved subaction at the maximizing branch, every node (≤ tol 1e-10)",
            heavy: false,
            run: |_| {
                let sol = cosine_subaction();
                let spec = cosine_skew();
                let m_nodes = sol.b.m();
                let mut worst = 0.0f64;
                for j in 0..m_nodes {
                    let z = j as f64 / m_nodes as f64;
                    let y = 0.5 * (z + (sol.maximizing_branch[j] - 1) as f64);
                    let v = 0.5 * sol.b.eval(y) - 0.5 * (TAU * y).cos();
                    worst = worst.max((sol.b.samples()[j] - v).abs());
                }
                let _ = spec;
                m(0.0, worst, Rule::AtMost(1e-10))
            },
        },
        OracleCase {
            id: "cohomology.golden_cos_coefficient",
            description: "ŵ₁ for τ=cos(2π·), golden α, against −½/(e^{2πiα}−1)",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let sol = solve_rotation_coboundary(&TrigPoly::cos_mode(1, 1.0), alpha)?;
                let want = Complex64::new(-0.5, 0.0) / (Complex64::from_polar(1.0, TAU * alpha) - 1.0);
                m(0.0, (sol.w.coeff(1) - want).norm(), Rule::Abs(1e-15))
            },
        },
        OracleCase {
            id: "cohomology.golden_cos_residual",
            description: "max |w(z+α) − w(z) + τ(z)| on 4096 points for τ=cos(2π·), golden α (≤ 1e-12)",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let tau = TrigPoly::cos_mode(1, 1.0);
                let sol = solve_rotation_coboundary(&tau, alpha)?;
                m(0.0, verify_coboundary(&sol.w, &tau, &MapSpec::Rotation { alpha }, 4096), Rule::AtMost(1e-12))
            },
        },
        OracleCase {
            id: "cohomology.perturbed_growth",
            description: "residual of w+0.1cos(2π·) is at least 0.1|e^{2πiα}−1|(1−1e-3)",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let tau = TrigPoly::cos_mode(1, 1.0);
                let sol = solve_rotation_coboundary(&tau, alpha)?;
                let r = verify_coboundary(&sol.w.add(&TrigPoly::cos_mode(1, 0.1)), &tau, &MapSpec::Rotation { alpha }, 4096);
                let bound = 0.1 * (Complex64::from_polar(1.0, TAU * alpha) - 1.0).norm();
                m(bound, r, Rule::AtLeast(bound * (1.0 - 1e-3)))
            },
        },
        OracleCase {
            id: "cohomology.graph_invariance",
            description: "graph residual of u=w′ under the golden rotation, τ=sin(2π·)/(2π) (≤ 1e-10)",
            heavy: false,
            run: |_| {
                let alpha = golden_mean();
                let sol = solve_rotation_coboundary(&unit_tau(), alpha)?;
                m(0.0, graph_invariance_residual(&sol.u.into(), &MapSpec::Rotation { alpha }, &unit_tau(), 4096)?, Rule::AtMost(1e-10))
            },
        },
        OracleCase {
            id: "pipeline.s_from_cos",
            description: "S′ − u at 256 points for u=cos(2π·), S built from u (≤ 1e-10)",
            heavy: false,
            run: |_| {
                let u = TrigPoly::cos_mode(1, 1.0);
                let s = build_s_from_u(&u.clone().into());
                let worst = (0..256)
                    .map(|j| {
                        let z = j as f64 / 256.0;
                        let fd = central_difference(|z| (TAU * z).sin() / TAU, z, 1e-6);
                        (s.derivative(z) - u.eval(z)).abs().max((s.eval(z) - (TAU * z).sin() / TAU).abs()).max(
                            if (fd - u.eval(z)).abs() > 1e-8 { f64::INFINITY } else { 0.0 },
                        )
                    })
                    .fold(0.0, f64::max);
                m(0.0, worst, Rule::AtMost(1e-10))
            },
        },
        OracleCase {
            id: "pipeline.diffeo_hit",
            description: "DiffeoInvariance preset: worst support→Graph(u) distance in cells over the runs (≤ 1.5)",
            heavy: true,
            run: |_| {
                let r = diffeo_report()?;
                let worst = r
                    .runs
                    .iter()
                    .map(|run| run.summary.matched.map_or(f64::INFINITY, |m| m.hausdorff_cells))
                    .fold(0.0, f64::max);
                m(0.0, worst, Rule::AtMost(1.5))
            },
        },
        OracleCase {
            id: "pipeline.diffeo_graph_residual",
            description: "DiffeoInvariance preset: reported graph-invariance residual (≤ 1e-8)",
            heavy: true,
            run: |_| {
                let r = diffeo_report()?;
                m(0.0, r.residuals.graph_invariance.unwrap_or(f64::INFINITY), Rule::AtMost(1e-8))
            },
        },
    ]
}

/// Runs the registry, optionally only ids starting with `filter`.
pub fn run_all(ctx: &OracleContext, include_heavy: bool, filter: Option<&str>) -> Result<Vec<OracleOutcome>> {
    registry()
        .iter()
        .filter(|c| include_heavy || !c.heavy)
        .filter(|c| filter.map_or(true, |f| c.id.starts_with(f)))
        .map(|c| c.run(ctx))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let r = registry();
        let mut ids: Vec<_> = r.iter().map(|c| c.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), r.len());
    }

    #[test]
    fn rules() {
        assert!(Rule::Abs(0.1).check(1.0, 1.05));
        assert!(!Rule::Rel(0.01).check(1.0, 1.05));
        assert!(Rule::AtLeast(4.0).check(0.0, 4.0));
        assert!(!Rule::AtMost(1.5).check(0.0, f64::NAN));
        assert!(!Rule::Abs(1.0).check(0.0, f64::NAN));
    }

    #[test]
    fn reference_formulas() {
        let direct: f64 = simpson(|t: f64| (-t * t / 0.04).exp(), -0.3, 0.3, 2000);
        assert!((gaussian_window(0.3, 0.01) - direct).abs() < 1e-12);
        assert!((geometric_sum(1.0, 0.5, 20) - (2.0 - 2f64.powi(-19))).abs() < 1e-15);
        let (v, q) = brute_force_diophantine(1.0 / 3.0, 0.0, 10);
        assert!(v < 1e-15 && q == 3);
        let s: f64 = simpson(|x: f64| x * x, 0.0, 1.0, 10);
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }
}
