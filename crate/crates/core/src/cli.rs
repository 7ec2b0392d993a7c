//! Command-line front end. `mlc <command> [--config file.json] --out dir`.
//!
//! Every command reads an optional JSON config (missing keys take the
//! defaults shown by `Default`), writes its artifacts under `--out` and
//! maps library errors to exit status 2 (bad request) or 3 (numerical
//! non-convergence or a failed check).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::circle::{MapSpec, PeriodicFunction, TrigPoly};
use crate::cohomology::{graph_invariance_residual, solve_rotation_coboundary, verify_coboundary, CoboundarySolution, RESIDUAL_GRID};
use crate::ergodic::{solve_subaction, twist_check, SkewSpec, SubactionSolution, SymbolSequence, TwistReport};
use crate::microsupport::{correlation_scan, support_match, HbarLadder, MapSummary, PredictedSupport, ScanGrid};
use crate::oracle::{run_all, OracleContext, OracleOutcome};
use crate::pipeline::{golden_mean, run_experiment, unit_tau, write_run, ExperimentSpec, Scenario};
use crate::quadrature::{norm, QuadPolicy};
use crate::states::{Coupling, EvolutionSpec, StateFamily};
use crate::{Error, Result};

pub const THREADS_ENV: &str = "MLC_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(name = "mlc", version, about = "Micro-support of evolved states on the circle")]
pub struct CliConfig {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON config for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "mlc-out")]
    pub out: PathBuf,
    /// Worker threads; falls back to $MLC_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sample an (evolved) state on [0,1).
    Evolve {
        #[arg(long)]
        hbar: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Micro-support scan of a state family.
    Scan {
        #[command(flatten)]
        overrides: ScanOverrides,
    },
    /// Calibrated subaction by value iteration.
    Subaction {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Twist condition on a grid of base points.
    Twist {
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Rotation coboundary equation and graph invariance.
    Cohomology {
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Full experiment into a timestamped run directory.
    Experiment {
        /// Preset to run when no config is given.
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<Scenario>,
        #[command(flatten)]
        overrides: ScanOverrides,
    },
    /// Reference computations against their independent oracles.
    Oracle {
        /// Include the cases that run full scans.
        #[arg(long)]
        heavy: bool,
        /// Only ids starting with this prefix.
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanOverrides {
    /// Grid size as `N_Y x N_ETA`, e.g. `64x513`.
    #[arg(long, value_parser = parse_grid_size)]
    pub grid: Option<(usize, usize)>,
    /// Geometric ladder as `hbar0,ratio,j_max`.
    #[arg(long, value_parser = parse_ladder)]
    pub ladder: Option<HbarLadder>,
}

fn parse_grid_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected N_YxN_ETA")?;
    let n_y = a.trim().parse().map_err(|e| format!("N_Y: {e}"))?;
    let n_eta = b.trim().parse().map_err(|e| format!("N_ETA: {e}"))?;
    Ok((n_y, n_eta))
}

fn parse_ladder(s: &str) -> std::result::Result<HbarLadder, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [h, r, j] = parts[..] else { return Err("expected hbar0,ratio,j_max".into()) };
    let h: f64 = h.parse().map_err(|e| format!("hbar0: {e}"))?;
    let r: f64 = r.parse().map_err(|e| format!("ratio: {e}"))?;
    let j: usize = j.parse().map_err(|e| format!("j_max: {e}"))?;
    HbarLadder::geometric(h, r, j).map_err(|e| e.to_string())
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    Scenario::ALL
        .into_iter()
        .find(|sc| sc.name() == s)
        .ok_or_else(|| format!("unknown scenario; one of {:?}", Scenario::ALL.map(Scenario::name)))
}

impl ScanOverrides {
    fn apply(&self, grid: &mut ScanGrid, ladder: &mut HbarLadder) -> Result<()> {
        if let Some((n_y, n_eta)) = self.grid {
            *grid = ScanGrid::new(n_y, n_eta, grid.eta_min, grid.eta_max)?;
        }
        if let Some(l) = &self.ladder {
            *ladder = l.clone();
        }
        Ok(())
    }
}

// ---- per-command configs ------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub family: StateFamily,
    /// Applied once to `family`; `null` samples the family itself.
    pub evolution: Option<EvolutionSpec>,
    pub hbar: f64,
    pub samples: usize,
    pub policy: QuadPolicy,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            family: StateFamily::Wavepacket { x: 0.6, xi: 1.0 },
            evolution: Some(EvolutionSpec {
                map: MapSpec::Doubling,
                tau: TrigPoly::zero(),
                coupling: Coupling::Fixed { nu: 1.0 },
            }),
            hbar: 0.01,
            samples: 512,
            policy: QuadPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub family: StateFamily,
    pub grid: ScanGrid,
    pub ladder: HbarLadder,
    pub policy: QuadPolicy,
    /// Compared against the support mask when present.
    pub predicted: Option<PredictedSupport>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            family: StateFamily::Wavepacket { x: 0.5, xi: 0.8 },
            grid: ScanGrid { n_y: 64, n_eta: 64, eta_min: -4.0, eta_max: 4.0 },
            ladder: HbarLadder::geometric(0.01, 0.5, 6).expect("static ladder"),
            policy: QuadPolicy::default(),
            predicted: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubactionConfig {
    pub skew: SkewSpec,
    pub m: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SubactionConfig {
    fn default() -> Self {
        SubactionConfig {
            skew: SkewSpec::from_tau(&unit_tau(), 0.5).expect("static spec"),
            m: 2048,
            tol: 1e-10,
            max_iter: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwistConfig {
    pub skew: SkewSpec,
    /// Midpoints of this many equal cells.
    pub points: usize,
    pub depth: usize,
    pub h_fd: f64,
    /// Defaults to every ordered pair of distinct words of length 3.
    pub pairs: Option<Vec<(SymbolSequence, SymbolSequence)>>,
}

impl Default for TwistConfig {
    fn default() -> Self {
        TwistConfig {
            skew: SkewSpec::from_tau(&unit_tau(), 0.5).expect("static spec"),
            points: 64,
            depth: 30,
            h_fd: 1e-5,
            pairs: None,
        }
    }
}

fn words_of_length_three() -> Vec<(SymbolSequence, SymbolSequence)> {
    let words: Vec<Vec<u8>> =
        (0..8u8).map(|w| (0..3).map(|i| 1 + ((w >> (2 - i)) & 1)).collect()).collect();
    let mut pairs = vec![];
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            pairs.push((SymbolSequence::new(a.clone()).expect("digits"), SymbolSequence::new(b.clone()).expect("digits")));
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohomologyConfig {
    pub tau: TrigPoly,
    pub alpha: f64,
    pub m: usize,
}

impl Default for CohomologyConfig {
    fn default() -> Self {
        CohomologyConfig { tau: unit_tau(), alpha: golden_mean(), m: RESIDUAL_GRID }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub config: EvolveConfig,
    pub norm: f64,
    pub parent_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub config: CohomologyConfig,
    pub solution: CoboundarySolution,
    pub coboundary_residual: f64,
    pub graph_invariance_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubactionOutput {
    pub config: SubactionConfig,
    pub solution: SubactionSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistOutput {
    pub config: TwistConfig,
    pub report: TwistReport,
}

// ---- dispatch -----------------------------------------------------------

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    /// One-line result for stdout.
    pub message: String,
    /// Set when the command finished but a numerical target was missed;
    /// maps to exit status 3.
    pub failure: Option<String>,
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::InvalidInput(format!("{THREADS_ENV}={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::InvalidInput("thread count must be >= 1".into()));
    }
    Ok(n)
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidInput(format!("output directory {} not writable: {e}", dir.display())))?;
        Ok(Writer { dir: dir.to_path_buf(), files: vec![] })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.put(name, serde_json::to_string_pretty(value)?.as_bytes())
    }
}

/// Runs one command in a pool sized by `--threads` / `$MLC_THREADS`.
pub fn execute(config: &CliConfig) -> Result<CommandOutput> {
    let threads = thread_count(config.global.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| run_command(config))
}

/// Executes and reports on stdout/stderr; returns the process exit status.
pub fn dispatch(config: CliConfig) -> i32 {
    match execute(&config) {
        Ok(out) => {
            println!("{}", out.message);
            match out.failure {
                Some(why) => {
                    eprintln!("mlc: {why}");
                    3
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("mlc: {e}");
            e.exit_code()
        }
    }
}

fn run_command(config: &CliConfig) -> Result<CommandOutput> {
    let g = &config.global;
    let cfg_path = g.config.as_deref();
    match &config.command {
        Command::Evolve { hbar, samples } => {
            let mut c: EvolveConfig = load(cfg_path)?;
            c.hbar = hbar.unwrap_or(c.hbar);
            c.samples = samples.unwrap_or(c.samples);
            if c.samples == 0 {
                return Err(Error::InvalidInput("samples must be >= 1".into()));
            }
            let mut w = Writer::new(&g.out)?;
            let parent = c.family.at(c.hbar)?;
            let state = match &c.evolution {
                Some(spec) => c.family.clone().evolved(spec.clone()).at(c.hbar)?,
                None => parent.clone(),
            };
            let mut csv = String::from("z,re,im,modulus\n");
            for j in 0..c.samples {
                let z = j as f64 / c.samples as f64;
                let v = state.eval(z);
                csv.push_str(&format!("{},{},{},{}\n", fmt17(z), fmt17(v.re), fmt17(v.im), fmt17(v.norm())));
            }
            w.put("state.csv", csv.as_bytes())?;
            let report = EvolveReport {
                norm: norm(&state, &c.policy)?,
                parent_norm: c.evolution.as_ref().map(|_| norm(&parent, &c.policy)).transpose()?,
                config: c,
            };
            w.json("evolve.json", &report)?;
            Ok(CommandOutput { message: format!("norm {}", fmt17(report.norm)), files: w.files, failure: None })
        }
        Command::Scan { overrides } => {
            let mut c: ScanConfig = load(cfg_path)?;
            overrides.apply(&mut c.grid, &mut c.ladder)?;
            c.grid.validate()?;
            let mut w = Writer::new(&g.out)?;
            let map = correlation_scan(&c.family, &c.grid, &c.ladder, &c.policy)?;
            let matched = match &c.predicted {
                Some(p) => Some(support_match(&map, p)?),
                None => None,
            };
            let summary: MapSummary = map.summary(matched);
            w.json("scan.json", &c)?;
            w.put("map.csv", map.to_csv().as_bytes())?;
            w.json("summary.json", &summary)?;
            w.put("heatmap.pgm", &map.pgm_bytes(map.smallest_hbar_index())?)?;
            let mut message = format!("{} support cells, {} peaks", summary.support_cells, summary.peaks.len());
            if let Some(m) = &summary.matched {
                message.push_str(&format!(", hausdorff {:.3} cells, hit {}", m.hausdorff_cells, m.hit));
            }
            Ok(CommandOutput { message, files: w.files, failure: None })
        }
        Command::Subaction { m, tol, max_iter } => {
            let mut c: SubactionConfig = load(cfg_path)?;
            c.m = m.unwrap_or(c.m);
            c.tol = tol.unwrap_or(c.tol);
            c.max_iter = max_iter.unwrap_or(c.max_iter);
            let mut w = Writer::new(&g.out)?;
            let sol = solve_subaction(&c.skew, c.m, c.tol, c.max_iter)?;
            w.put("b.csv", sol.to_csv().as_bytes())?;
            w.json("subaction.json", &SubactionOutput { config: c.clone(), solution: sol.clone() })?;
            let failure = (!sol.converged).then(|| {
                format!(
                    "subaction: update above tol {:e} after max_iter {} (last {:e})",
                    c.tol,
                    c.max_iter,
                    sol.update_history.last().copied().unwrap_or(f64::NAN)
                )
            });
            Ok(CommandOutput {
                message: format!("residual {:e} after {} iterations", sol.bellman_residual, sol.iterations),
                files: w.files,
                failure,
            })
        }
        Command::Twist { depth, points } => {
            let mut c: TwistConfig = load(cfg_path)?;
            c.depth = depth.unwrap_or(c.depth);
            c.points = points.unwrap_or(c.points);
            if c.points == 0 {
                return Err(Error::InvalidInput("points must be >= 1".into()));
            }
            let mut w = Writer::new(&g.out)?;
            let grid: Vec<f64> = (0..c.points).map(|j| (j as f64 + 0.5) / c.points as f64).collect();
            let pairs = c.pairs.clone().unwrap_or_else(words_of_length_three);
            let report = twist_check(&c.skew, &grid, &pairs, c.depth, c.h_fd)?;
            let message = format!("twist holds: {}, min margin {:e}", report.holds, report.min_margin);
            w.json("twist.json", &TwistOutput { config: c, report })?;
            Ok(CommandOutput { message, files: w.files, failure: None })
        }
        Command::Cohomology { alpha } => {
            let mut c: CohomologyConfig = load(cfg_path)?;
            c.alpha = alpha.unwrap_or(c.alpha);
            let mut w = Writer::new(&g.out)?;
            let sol = solve_rotation_coboundary(&c.tau, c.alpha)?;
            let f = MapSpec::Rotation { alpha: c.alpha };
            let u: PeriodicFunction = sol.u.clone().into();
            let report = CohomologyReport {
                coboundary_residual: verify_coboundary(&sol.w, &c.tau, &f, c.m),
                graph_invariance_residual: graph_invariance_residual(&u, &f, &c.tau, c.m)?,
                solution: sol,
                config: c,
            };
            let mut csv = String::from("z,w,u\n");
            for j in 0..report.config.m {
                let z = j as f64 / report.config.m as f64;
                csv.push_str(&format!("{},{},{}\n", fmt17(z), fmt17(report.solution.w.eval(z)), fmt17(report.solution.u.eval(z))));
            }
            w.put("w_u.csv", csv.as_bytes())?;
            w.json("cohomology.json", &report)?;
            Ok(CommandOutput {
                message: format!(
                    "coboundary residual {:e}, graph residual {:e}",
                    report.coboundary_residual, report.graph_invariance_residual
                ),
                files: w.files,
                failure: None,
            })
        }
        Command::Experiment { scenario, overrides } => {
            let mut spec = match (cfg_path, scenario) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", p.display())))?;
                    ExperimentSpec::from_json(&text)?
                }
                (None, Some(s)) => ExperimentSpec::preset(*s),
                (None, None) => return Err(Error::InvalidInput("experiment needs --config or --scenario".into())),
            };
            overrides.apply(&mut spec.grid, &mut spec.ladder)?;
            if let Some(seed) = g.seed {
                spec.seed = seed;
            }
            spec.validate()?;
            let outcome = run_experiment(&spec)?;
            let dir = write_run(&spec, &outcome, &g.out)?;
            let r = &outcome.report;
            Ok(CommandOutput {
                message: format!("{}: hit {}, certified {}", dir.display(), r.hit, r.certified),
                files: vec![dir],
                failure: None,
            })
        }
        Command::Oracle { heavy, filter } => {
            let ctx = OracleContext { seed: g.seed.unwrap_or(0) };
            let mut w = Writer::new(&g.out)?;
            let outcomes = run_all(&ctx, *heavy, filter.as_deref())?;
            w.json("oracle.json", &outcomes)?;
            w.put("oracle.csv", oracle_csv(&outcomes).as_bytes())?;
            for o in &outcomes {
                println!("{} {} expected {} computed {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.expected, o.computed);
            }
            let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
            Ok(CommandOutput {
                message: format!("{}/{} oracle cases pass", outcomes.len() - failed.len(), outcomes.len()),
                files: w.files,
                failure: (!failed.is_empty()).then(|| format!("oracle mismatch: {}", failed.join(", "))),
            })
        }
    }
}

/// 17 significant digits, round-trip safe.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn oracle_csv(outcomes: &[OracleOutcome]) -> String {
    let mut s = String::from("id,expected,computed,rule,tolerance,pass\n");
    for o in outcomes {
        let (rule, tol) = match o.rule {
            crate::oracle::Rule::Abs(t) => ("abs", t),
            crate::oracle::Rule::Rel(t) => ("rel", t),
            crate::oracle::Rule::AtLeast(t) => ("at_least", t),
            crate::oracle::Rule::AtMost(t) => ("at_most", t),
        };
        s.push_str(&format!("{},{},{},{},{},{}\n", o.id, fmt17(o.expected), fmt17(o.computed), rule, fmt17(tol), o.pass));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_parsers() {
        assert_eq!(parse_grid_size("64x513").unwrap(), (64, 513));
        assert!(parse_grid_size("64").is_err());
        assert_eq!(parse_ladder("0.01,0.5,6").unwrap().len(), 7);
        assert!(parse_ladder("0.01,0.5").is_err());
        assert!(parse_ladder("0.5,0.5,6").is_err());
        assert_eq!(parse_scenario("theorem2").unwrap(), Scenario::Theorem2);
        assert!(parse_scenario("nope").is_err());
    }

    #[test]
    fn twist_default_pairs_are_ordered() {
        let p = words_of_length_three();
        assert_eq!(p.len(), 28);
        assert!(p.iter().all(|(a, b)| a.digits() < b.digits()));
    }

    #[test]
    fn configs_round_trip_and_reject_unknown_keys() {
        let c = ScanConfig::default();
        let back: ScanConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let e: EvolveConfig = serde_json::from_str(r#"{"hbar":0.005}"#).unwrap();
        assert_eq!(e.hbar, 0.005);
        assert!(serde_json::from_str::<CohomologyConfig>(r#"{"alpah":0.3}"#).is_err());
    }
}
