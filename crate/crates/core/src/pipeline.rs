//! End-to-end experiments: build the classical object, evolve the state,
//! scan, and compare the extracted support with the prediction.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circle::{MapSpec, PeriodicFunction, PhaseFunction, TrigPoly};
use crate::cohomology::{graph_invariance_residual, solve_rotation_coboundary};
use crate::ergodic::{coboundary_residual, solve_subaction, BellmanGapStats, SkewSpec};
use crate::microsupport::{
    correlation_scan, predict_support, support_match, HbarLadder, MapSummary, MatchReport, MicrosupportMap,
    PredictedSupport, ScanGrid, HIT_TOLERANCE_CELLS, SLOPE_THRESHOLD,
};
use crate::quadrature::QuadPolicy;
use crate::states::{Coupling, EvolutionSpec, StateFamily};
use crate::{Error, Result};

/// Residual level above which a report is flagged non-certified.
pub const CERTIFY_TOL: f64 = 1e-6;
pub const EQROT_TOL: f64 = 1e-12;
pub const GRAPH_INVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Doubling, `τ ≡ 0`, fixed `ν = 1`, wavepacket source.
    Theorem1,
    /// Doubling with semiclassical coupling, wavepacket source.
    Theorem2,
    /// Lagrangian states with `S′ = u`, `u` the calibrated subaction.
    SubsupDoubling,
    /// Lagrangian states with `S′ = u = w′` over a rotation.
    DiffeoInvariance,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::Theorem1, Scenario::Theorem2, Scenario::SubsupDoubling, Scenario::DiffeoInvariance];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Theorem1 => "theorem1",
            Scenario::Theorem2 => "theorem2",
            Scenario::SubsupDoubling => "subsup_doubling",
            Scenario::DiffeoInvariance => "diffeo_invariance",
        }
    }

    pub fn coupling(self) -> Coupling {
        match self {
            Scenario::Theorem1 => Coupling::Fixed { nu: 1.0 },
            _ => Coupling::Semiclassical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Wavepacket { x: f64, xi: f64 },
    /// One Lagrangian state per position; `S` is derived from `u`.
    Lagrangian { x: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubactionSettings {
    pub m: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SubactionSettings {
    fn default() -> Self {
        SubactionSettings { m: 2048, tol: 1e-10, max_iter: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: Scenario,
    pub map: MapSpec,
    pub tau: TrigPoly,
    pub lambda: f64,
    pub source: Source,
    pub grid: ScanGrid,
    pub ladder: HbarLadder,
    pub policy: QuadPolicy,
    pub subaction: SubactionSettings,
    pub seed: u64,
}

pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `τ(z) = sin(2πz)/(2π)`, so `τ′ = cos(2πz)`.
pub fn unit_tau() -> TrigPoly {
    TrigPoly::sin_mode(1, 1.0 / std::f64::consts::TAU)
}

pub fn default_grid() -> ScanGrid {
    ScanGrid { n_y: 64, n_eta: 513, eta_min: -4.0, eta_max: 4.0 }
}

pub fn default_ladder() -> HbarLadder {
    HbarLadder::geometric(0.01, 0.5, 9).expect("static ladder")
}

impl ExperimentSpec {
    pub fn preset(scenario: Scenario) -> ExperimentSpec {
        let (map, tau, source) = match scenario {
            Scenario::Theorem1 => (MapSpec::Doubling, TrigPoly::zero(), Source::Wavepacket { x: 0.6, xi: 1.0 }),
            Scenario::Theorem2 => (MapSpec::Doubling, unit_tau(), Source::Wavepacket { x: 0.0, xi: 0.0 }),
            Scenario::SubsupDoubling => {
                (MapSpec::Doubling, unit_tau(), Source::Lagrangian { x: vec![0.2, 0.5, 0.8] })
            }
            Scenario::DiffeoInvariance => (
                MapSpec::Rotation { alpha: golden_mean() },
                unit_tau(),
                Source::Lagrangian { x: vec![0.2, 0.5, 0.8] },
            ),
        };
        ExperimentSpec {
            name: scenario.name().to_string(),
            scenario,
            map,
            tau,
            lambda: 0.5,
            source,
            grid: default_grid(),
            ladder: default_ladder(),
            policy: QuadPolicy::default(),
            subaction: SubactionSettings::default(),
            seed: 0,
        }
    }

    /// Parses a spec; only `scenario` is required, everything else
    /// defaults to the scenario's preset.
    pub fn from_json(text: &str) -> Result<ExperimentSpec> {
        let given: serde_json::Value = serde_json::from_str(text)?;
        let obj = given
            .as_object()
            .ok_or_else(|| Error::InvalidInput("experiment spec must be a JSON object".into()))?;
        let scenario: Scenario = serde_json::from_value(
            obj.get("scenario").cloned().ok_or_else(|| Error::InvalidInput("missing field `scenario`".into()))?,
        )?;
        let mut merged = serde_json::to_value(ExperimentSpec::preset(scenario))?;
        for (k, v) in obj {
            merged[k] = v.clone();
        }
        let spec: ExperimentSpec = serde_json::from_value(merged)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.policy.validate()?;
        self.map.validate()?;
        let bad = |msg: &str| Err(Error::InvalidInput(format!("{}: {msg}", self.scenario.name())));
        match (self.scenario, &self.source) {
            (Scenario::Theorem1 | Scenario::Theorem2, Source::Wavepacket { .. }) => {}
            (Scenario::SubsupDoubling | Scenario::DiffeoInvariance, Source::Lagrangian { x }) if !x.is_empty() => {}
            _ => return bad("source kind does not fit the scenario"),
        }
        match self.scenario {
            Scenario::Theorem1 if self.tau.sup_bound() != 0.0 => return bad("tau must vanish"),
            Scenario::Theorem1 | Scenario::Theorem2 | Scenario::SubsupDoubling if !self.map.is_doubling() => {
                return bad("map must be doubling")
            }
            Scenario::DiffeoInvariance if !matches!(self.map, MapSpec::Rotation { .. }) => {
                return bad("map must be a rotation (the only exactly solvable case)")
            }
            Scenario::SubsupDoubling if !(self.lambda > 0.0 && self.lambda < 1.0) => {
                return bad("lambda must lie in (0,1)")
            }
            _ => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn evolution(&self) -> Result<EvolutionSpec> {
        EvolutionSpec::new(self.map.clone(), self.tau.clone(), self.scenario.coupling())
    }
}

/// `S = ρz + P(z)` with `ρ = mean u`, `P(0) = 0`, `S′ = u`.
pub fn build_s_from_u(u: &PeriodicFunction) -> PhaseFunction {
    u.antiderivative()
}

/// A measured quantity next to the tolerance it is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Check {
        Check { name: name.into(), measured, tolerance, pass: measured <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubactionStats {
    pub bellman_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub contraction_ratio: Option<(f64, f64)>,
    pub breakpoints: Vec<f64>,
    pub bellman_gap: Option<BellmanGapStats>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Everywhere residual of the coboundary equation for the `u` used.
    pub coboundary: Option<f64>,
    pub subaction: Option<SubactionStats>,
    /// `max |w(z+α) − w(z) + τ(z)|`.
    pub eqrot: Option<f64>,
    pub graph_invariance: Option<f64>,
    /// `max |g − u|` with `g` the predicted image of `Graph(u)`.
    pub graph_image_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Phase-space point of the source state.
    pub source: (f64, f64),
    pub predicted: PredictedSupport,
    /// Scan summary; its `match` compares against `predicted`.
    pub summary: MapSummary,
    /// Images of the source point itself (Lagrangian runs only).
    pub fiber_points: Option<PredictedSupport>,
    pub fiber_match: Option<MatchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub classical_s: f64,
    pub scan_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub scenario: Scenario,
    pub spec_hash: String,
    pub runs: Vec<RunReport>,
    pub residuals: Residuals,
    pub checks: Vec<Check>,
    /// All runs hit their prediction.
    pub hit: bool,
    pub certified: bool,
    pub timings: Timings,
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub maps: Vec<MicrosupportMap>,
}

fn match_or_miss(map: &MicrosupportMap, predicted: &PredictedSupport) -> Result<Option<MatchReport>> {
    match support_match(map, predicted) {
        Ok(m) => Ok(Some(m)),
        Err(Error::EmptySupport) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let t0 = Instant::now();
    let evo = spec.evolution()?;
    let mut residuals = Residuals::default();
    let mut checks = vec![];

    // classical side: the u whose graph should carry the support
    let u: Option<PeriodicFunction> = match spec.scenario {
        Scenario::Theorem1 | Scenario::Theorem2 => None,
        Scenario::SubsupDoubling => {
            let skew = SkewSpec::from_tau(&spec.tau, spec.lambda)?;
            let s = &spec.subaction;
            let sol = solve_subaction(&skew, s.m, s.tol, s.max_iter)?;
            if !sol.converged {
                return Err(Error::NotConverged(format!(
                    "ergodic: Bellman update {:.3e} above tol {:.1e} after {} iterations",
                    sol.update_history.last().copied().unwrap_or(f64::NAN),
                    s.tol,
                    sol.iterations
                )));
            }
            let u = PeriodicFunction::Grid(sol.b.clone());
            let cob = coboundary_residual(&u, &spec.tau, &spec.map, spec.lambda, s.m)?;
            residuals.coboundary = Some(cob.max_residual_se);
            checks.push(Check::at_most("bellman_residual", sol.bellman_residual, s.tol));
            residuals.subaction = Some(SubactionStats {
                bellman_residual: sol.bellman_residual,
                iterations: sol.iterations,
                converged: sol.converged,
                contraction_ratio: sol.contraction_ratio_range(5),
                breakpoints: sol.b.breakpoints().to_vec(),
                bellman_gap: cob.bellman_gap,
            });
            Some(u)
        }
        Scenario::DiffeoInvariance => {
            let MapSpec::Rotation { alpha } = spec.map else { unreachable!("validated") };
            let sol = solve_rotation_coboundary(&spec.tau, alpha)?;
            let u = PeriodicFunction::Trig(sol.u.clone());
            let gi = graph_invariance_residual(&u, &spec.map, &spec.tau, 4096)?;
            let cob = coboundary_residual(&u, &spec.tau, &spec.map, spec.lambda, 4096)?;
            residuals.eqrot = Some(sol.residual);
            residuals.graph_invariance = Some(gi);
            residuals.coboundary = Some(cob.max_residual_se);
            checks.push(Check::at_most("eqrot_residual", sol.residual, EQROT_TOL));
            checks.push(Check::at_most("graph_invariance_residual", gi, GRAPH_INVARIANCE_TOL));
            Some(u)
        }
    };
    if let Some(u) = &u {
        let PredictedSupport::Graph(g) = predict_support(&evo, &PredictedSupport::Graph(u.clone()), spec.lambda)?
        else {
            unreachable!()
        };
        let dev = (0..4096)
            .map(|j| {
                let y = j as f64 / 4096.0;
                (g.eval(y) - u.eval(y)).abs()
            })
            .fold(0.0, f64::max);
        residuals.graph_image_deviation = Some(dev);
    }
    let classical_s = t0.elapsed().as_secs_f64();

    let sources: Vec<(StateFamily, (f64, f64))> = match &spec.source {
        Source::Wavepacket { x, xi } => vec![(StateFamily::Wavepacket { x: *x, xi: *xi }, (*x, *xi))],
        Source::Lagrangian { x } => {
            let u = u.as_ref().expect("lagrangian scenarios build u");
            let phase = build_s_from_u(u);
            x.iter().map(|&x| (StateFamily::Lagrangian { phase: phase.clone(), x }, (x, u.eval(x)))).collect()
        }
    };

    let t1 = Instant::now();
    let mut runs = vec![];
    let mut maps = vec![];
    for (family, point) in sources {
        let evolved = family.evolved(evo.clone());
        let map = correlation_scan(&evolved, &spec.grid, &spec.ladder, &spec.policy)?;
        let points = predict_support(&evo, &PredictedSupport::Points(vec![point]), spec.lambda)?;
        let (predicted, fiber_points) = match &u {
            None => (points, None),
            Some(u) => (PredictedSupport::Graph(u.clone()), Some(points)),
        };
        let matched = match_or_miss(&map, &predicted)?;
        let fiber_match = match &fiber_points {
            Some(p) => match_or_miss(&map, p)?,
            None => None,
        };
        runs.push(RunReport { source: point, predicted, summary: map.summary(matched), fiber_points, fiber_match });
        maps.push(map);
    }
    let scan_s = t1.elapsed().as_secs_f64();

    let hit = runs.iter().all(|r| r.summary.matched.is_some_and(|m| m.hit));
    for (i, r) in runs.iter().enumerate() {
        let d = r.summary.matched.map_or(f64::INFINITY, |m| m.hausdorff_cells);
        checks.push(Check::at_most(&format!("run{i}_match_cells"), d, HIT_TOLERANCE_CELLS));
    }
    let certified = residuals.coboundary.map_or(true, |r| r <= CERTIFY_TOL);
    if let Some(r) = residuals.coboundary {
        checks.push(Check::at_most("coboundary_residual", r, CERTIFY_TOL));
    }
    checks.push(Check { name: "slope_threshold".into(), measured: SLOPE_THRESHOLD, tolerance: SLOPE_THRESHOLD, pass: true });

    let report = ExperimentReport {
        name: spec.name.clone(),
        scenario: spec.scenario,
        spec_hash: spec.hash(),
        runs,
        residuals,
        checks,
        hit,
        certified,
        timings: Timings { classical_s, scan_s, total_s: t0.elapsed().as_secs_f64() },
    };
    Ok(ExperimentOutcome { report, maps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub scenario: Scenario,
    pub spec_hash: String,
    pub created: String,
    pub version: String,
    pub seed: u64,
    pub files: Vec<String>,
}

/// Creates `<out>/<name>-<UTC timestamp>` (suffixed on collision).
pub fn create_run_dir(out: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    let base = format!("{safe}-{stamp}");
    for i in 0.. {
        let dir = if i == 0 { out.join(&base) } else { out.join(format!("{base}-{i}")) };
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Writes spec, report, per-run CSV/summary/heatmap and the manifest.
pub fn write_run(spec: &ExperimentSpec, outcome: &ExperimentOutcome, out: &Path) -> Result<PathBuf> {
    let dir = create_run_dir(out, &spec.name)?;
    let mut files = vec![];
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        std::fs::write(dir.join(&name), bytes)?;
        files.push(name);
        Ok(())
    };
    put("spec.json".into(), serde_json::to_string_pretty(spec)?.as_bytes())?;
    put("report.json".into(), serde_json::to_string_pretty(&outcome.report)?.as_bytes())?;
    for (i, (map, run)) in outcome.maps.iter().zip(&outcome.report.runs).enumerate() {
        put(format!("map_{i}.csv"), map.to_csv().as_bytes())?;
        put(format!("summary_{i}.json"), serde_json::to_string_pretty(&run.summary)?.as_bytes())?;
        put(format!("heatmap_{i}.pgm"), &map.pgm_bytes(map.smallest_hbar_index())?)?;
    }
    let manifest = Manifest {
        name: spec.name.clone(),
        scenario: spec.scenario,
        spec_hash: spec.hash(),
        created: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: spec.seed,
        files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_from_u_examples() {
        let s = build_s_from_u(&PeriodicFunction::zero());
        assert_eq!(s.eval(0.7), 0.0);
        let s = build_s_from_u(&PeriodicFunction::Trig(TrigPoly::constant(3.0)));
        assert!((s.eval(0.4) - 1.2).abs() < 1e-15 && (s.eval(2.5) - 7.5).abs() < 1e-14);
        let u = TrigPoly::cos_mode(1, 1.0);
        let s = build_s_from_u(&PeriodicFunction::Trig(u.clone()));
        for j in 0..256 {
            let z = j as f64 / 256.0;
            assert!((s.eval(z) - (std::f64::consts::TAU * z).sin() / std::f64::consts::TAU).abs() < 1e-14);
            assert!((s.derivative(z) - u.eval(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn spec_json_defaults_and_validation() {
        let s = ExperimentSpec::from_json(r#"{"scenario":"theorem1"}"#).unwrap();
        assert_eq!(s, ExperimentSpec::preset(Scenario::Theorem1));
        let s = ExperimentSpec::from_json(r#"{"scenario":"theorem2","name":"t2b","grid":{"n_y":32,"n_eta":65,"eta_min":-3,"eta_max":3}}"#)
            .unwrap();
        assert_eq!(s.grid.n_y, 32);
        assert_eq!(s.name, "t2b");
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        assert!(ExperimentSpec::from_json(r#"{"scenario":"theorem1","tau":[[1,0.0,-0.5]]}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"scenario":"diffeo_invariance","map":{"kind":"doubling"}}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"name":"x"}"#).is_err());
        let e = ExperimentSpec::from_json(r#"{"scenario":"theorem2","source":{"kind":"lagrangian","x":[0.5]}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn hash_changes_with_spec() {
        let a = ExperimentSpec::preset(Scenario::Theorem2);
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
