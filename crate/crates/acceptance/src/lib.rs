//! Acceptance criteria as functions returning verdicts; the `acceptance`
//! test target prints one line per verdict.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use microlocal::circle::{circle_distance, MapSpec, PeriodicFunction, PhaseFunction, PiecewiseGrid};
use microlocal::ergodic::{solve_subaction, sup_over_sequences, tsujii_series, SkewSpec, SupMode, SymbolSequence};
use microlocal::microsupport::{correlation_scan, decay_slope, HbarLadder, ScanGrid, HIT_TOLERANCE_CELLS};
use microlocal::oracle::{run_all, OracleContext};
use microlocal::pipeline::{run_experiment, unit_tau, ExperimentReport, ExperimentSpec, Scenario};
use microlocal::quadrature::{gaussian_derivative_l1, oscillatory_integral, QuadPolicy};
use microlocal::states::{wavepacket_sum, StateFamily, WavepacketParams};
use microlocal::Result;

pub const SEED: u64 = 20_240_917;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: &'static str, name: &'static str, pass: bool, detail: String) -> Self {
        Verdict { id, name, pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} [{}] {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn ladder(j_max: usize) -> HbarLadder {
    HbarLadder::geometric(0.01, 0.5, j_max).expect("static ladder")
}

pub fn wavepacket_self_support() -> Result<Vec<Verdict>> {
    let t = Instant::now();
    let (x, xi) = (0.5, 0.8);
    let grid = ScanGrid::new(64, 64, -4.0, 4.0)?;
    let map = correlation_scan(&StateFamily::Wavepacket { x, xi }, &grid, &ladder(6), &QuadPolicy::default())?;
    let comps = map.components().len();
    let (j, k) = map.argmax(map.smallest_hbar_index());
    let off = grid.cell_distance(j, k, x, xi);
    let mut min_far = f64::INFINITY;
    for j in 0..grid.n_y {
        for k in 0..grid.n_eta {
            if circle_distance(grid.y(j), x).hypot(grid.eta(k) - xi) > 0.2 {
                min_far = min_far.min(map.slope(j, k));
            }
        }
    }
    Ok(vec![Verdict::new(
        "1",
        "wavepacket self-support",
        comps == 1 && off <= 1.0 && min_far >= 4.0,
        format!(
            "{comps} component(s), argmax {off:.2} cells from source, min far slope {min_far:.2} (>= 4), {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    )])
}

fn match_detail(r: &ExperimentReport) -> String {
    r.runs
        .iter()
        .map(|run| match run.summary.matched {
            Some(m) => format!("x={:.2}: {:.2} cells ({} support cells)", run.source.0, m.hausdorff_cells, m.support_cells),
            None => format!("x={:.2}: empty support", run.source.0),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn theorem1() -> Result<Vec<Verdict>> {
    let r = run_experiment(&ExperimentSpec::preset(Scenario::Theorem1))?.report;
    Ok(vec![Verdict::new(
        "2",
        "doubling, tau = 0: support at {(0.3,2),(0.8,2)}",
        r.hit,
        format!("{} (<= {HIT_TOLERANCE_CELLS}), {:.1} s", match_detail(&r), r.timings.total_s),
    )])
}

pub fn theorem2() -> Result<Vec<Verdict>> {
    let r = run_experiment(&ExperimentSpec::preset(Scenario::Theorem2))?.report;
    Ok(vec![Verdict::new(
        "3",
        "semiclassical coupling: support at {(0,1),(0.5,-1)}",
        r.hit,
        format!("{} (<= {HIT_TOLERANCE_CELLS}), {:.1} s", match_detail(&r), r.timings.total_s),
    )])
}

pub fn subsup_doubling() -> Result<Vec<Verdict>> {
    let spec = ExperimentSpec::preset(Scenario::SubsupDoubling);
    let skew = SkewSpec::from_tau(&spec.tau, spec.lambda)?;
    let sol = solve_subaction(&skew, 2048, 1e-10, 60)?;
    let ratio = sol.contraction_ratio_range(5);
    let solver_ok = sol.converged
        && sol.bellman_residual <= 1e-10
        && sol.iterations <= 60
        && ratio.is_some_and(|(lo, hi)| lo >= 0.45 && hi <= 0.55);
    let solver = Verdict::new(
        "4a",
        "subaction solver, M = 2048",
        solver_ok,
        format!(
            "residual {:.2e} (<= 1e-10) after {} iterations (<= 60), contraction {:?} (in [0.45, 0.55])",
            sol.bellman_residual, sol.iterations, ratio
        ),
    );
    let r = run_experiment(&spec)?.report;
    let support = Verdict::new(
        "4b",
        "evolved Lagrangian support on Graph(u), x in {0.2, 0.5, 0.8}",
        r.hit,
        format!("{} (<= {HIT_TOLERANCE_CELLS}), certified {}, {:.1} s", match_detail(&r), r.certified, r.timings.total_s),
    );
    Ok(vec![solver, support])
}

pub fn rotation_invariance() -> Result<Vec<Verdict>> {
    let r = run_experiment(&ExperimentSpec::preset(Scenario::DiffeoInvariance))?.report;
    let eq = r.residuals.eqrot.unwrap_or(f64::INFINITY);
    let gi = r.residuals.graph_invariance.unwrap_or(f64::INFINITY);
    Ok(vec![Verdict::new(
        "5",
        "golden rotation: coboundary, graph invariance, support on Graph(u)",
        eq <= 1e-12 && gi <= 1e-8 && r.hit,
        format!(
            "eqrot {eq:.2e} (<= 1e-12), graph {gi:.2e} (<= 1e-8), {}, {:.1} s",
            match_detail(&r),
            r.timings.total_s
        ),
    )])
}

pub fn decay_dichotomy() -> Result<Vec<Verdict>> {
    let (y, a) = (0.5, 0.1);
    let hbars = ladder(6).values().to_vec();
    let policy = QuadPolicy::default();
    let slope = |phase: &PhaseFunction| -> Result<f64> {
        let v = hbars
            .iter()
            .map(|&h| oscillatory_integral(y, a, phase, h, &policy).map(|c| c.norm()))
            .collect::<Result<Vec<_>>>()?;
        decay_slope(&v, &hbars)
    };
    let fast = slope(&PhaseFunction::linear(0.5))?;
    let quad = PhaseFunction::new(
        0.0,
        PeriodicFunction::Grid(PiecewiseGrid::from_fn(4096, vec![0.0], |z| 0.5 * (z - y) * (z - y))?),
    );
    let slow = slope(&quad)?;
    Ok(vec![
        Verdict::new("6a", "non-stationary phase decays fast", fast >= 4.0, format!("slope {fast:.3} (>= 4), window a = {a}")),
        Verdict::new(
            "6b",
            "nondegenerate critical point decays like hbar^(1/2)",
            (slow - 0.5).abs() <= 0.1,
            format!("slope {slow:.3} (0.5 +- 0.1)"),
        ),
    ])
}

pub fn estderiv_scaling() -> Result<Vec<Verdict>> {
    let a: f64 = 0.3;
    let hs: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    let mut n1_err = 0.0f64;
    for &h in &hs {
        let want = 2.0 - 2.0 * (-a * a / (4.0 * h)).exp();
        n1_err = n1_err.max((gaussian_derivative_l1(1, a, h)? - want).abs());
    }
    let spread = |n: usize, m: i32| -> Result<(f64, f64)> {
        let v = hs.iter().map(|&h| gaussian_derivative_l1(n, a, h).map(|x| x * h.powi(m))).collect::<Result<Vec<_>>>()?;
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        Ok(((hi - lo) / hi, (v[2] - v[1]).abs() / v[2]))
    };
    let ((s3, l3), (s5, l5)) = (spread(3, 1)?, spread(5, 2)?);
    let n1 = gaussian_derivative_l1(1, a, 2.5e-3)?;
    let (e2, e4) = (gaussian_derivative_l1(2, a, 2.5e-3)? / n1, gaussian_derivative_l1(4, a, 2.5e-3)? / n1);
    Ok(vec![
        Verdict::new("7a", "n = 1 closed form", n1_err <= 1e-10, format!("max error {n1_err:.2e} (<= 1e-10)")),
        Verdict::new(
            "7b",
            "odd n: value * hbar^m settles",
            s3 <= 0.1 && s5 <= 0.1,
            format!("relative spread n=3 {s3:.3}, n=5 {s5:.3} (<= 0.1), a = {a}; last step alone {l3:.3}, {l5:.3}"),
        ),
        Verdict::new(
            "7c",
            "even n: value below 1e-6 of the n = 1 value at hbar = 2.5e-3",
            e2 <= 1e-6 && e4 <= 1e-6,
            format!("ratios n=2 {e2:.3e}, n=4 {e4:.3e} (<= 1e-6)"),
        ),
    ])
}

pub fn truncation() -> Result<Vec<Verdict>> {
    let mut worst = 0.0f64;
    for h in [0.01, 0.005, 0.0025, 0.001] {
        let p = WavepacketParams::new(0.5, 0.8, h)?;
        for i in 0..1000 {
            let z = i as f64 / 1000.0;
            worst = worst.max((wavepacket_sum(&p, z, -2, 2) - wavepacket_sum(&p, z, -50, 50)).norm());
        }
    }
    Ok(vec![Verdict::new(
        "8",
        "|k| <= 2 truncation, hbar <= 0.01",
        worst <= 1e-12,
        format!("max difference {worst:.2e} (<= 1e-12) over 1000 points x 4 hbar"),
    )])
}

pub fn subaction_cross_method() -> Result<Vec<Verdict>> {
    let spec = SkewSpec::from_tau(&unit_tau(), 0.5)?;
    let sol = solve_subaction(&spec, 2048, 1e-10, 60)?;
    let tol = 0.5f64.powi(22) * spec.potential.sup_abs() / 0.5 + 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..32 {
        let x: f64 = rng.gen();
        let t = sup_over_sequences(&spec, x, 22, SupMode::Tree)?;
        worst = worst.max((t.value - sol.b.eval(x)).abs());
    }
    Ok(vec![Verdict::new(
        "9",
        "tree sup (K = 22) vs value iteration (M = 2048)",
        worst <= tol,
        format!("max difference {worst:.2e} (<= {tol:.2e}) at 32 seeded points"),
    )])
}

pub fn cocycle_identity() -> Result<Vec<Verdict>> {
    let spec = SkewSpec::from_tau(&unit_tau(), 0.5)?;
    let depth = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5eed);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: f64 = rng.gen();
        let a = SymbolSequence::new((0..depth).map(|_| rng.gen_range(1..=2)).collect())?;
        let digit = if x < 0.5 { 1 } else { 2 };
        let lhs = tsujii_series(&spec, MapSpec::Doubling.apply(x), &a.prepend(digit))?;
        let s = tsujii_series(&spec, x, &a)?;
        let rhs = -0.5 * (TAU * x).cos() + 0.5 * s.value;
        let d = (lhs.value - rhs).abs();
        worst = worst.max(d);
        worst_excess = worst_excess.max(d - (s.tail_bound + 1e-12));
    }
    Ok(vec![Verdict::new(
        "10",
        "cocycle s(f(x), pi(x)a) = A(x) + s(x,a)/2",
        worst_excess <= 0.0,
        format!("max |lhs - rhs| {worst:.2e} at 100 seeded samples, depth {depth} (<= tail + 1e-12)"),
    )])
}

pub fn oracle_suite() -> Result<Vec<Verdict>> {
    let t = Instant::now();
    let out = run_all(&OracleContext { seed: SEED }, true, None)?;
    let failed: Vec<&str> = out.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
    Ok(vec![Verdict::new(
        "11",
        "oracle suite (including full-scan cases)",
        failed.is_empty(),
        format!(
            "{}/{} cases pass{}, {:.1} s",
            out.len() - failed.len(),
            out.len(),
            if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) },
            t.elapsed().as_secs_f64()
        ),
    )])
}

pub type Criterion = (&'static str, fn() -> Result<Vec<Verdict>>);

pub fn criteria() -> Vec<Criterion> {
    vec![
        ("1", wavepacket_self_support),
        ("2", theorem1),
        ("3", theorem2),
        ("4", subsup_doubling),
        ("5", rotation_invariance),
        ("6", decay_dichotomy),
        ("7", estderiv_scaling),
        ("8", truncation),
        ("9", subaction_cross_method),
        ("10", cocycle_identity),
        ("11", oracle_suite),
    ]
}
