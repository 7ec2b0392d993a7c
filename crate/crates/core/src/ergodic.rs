//! Skew product `F(z,s) = (2z, λs + A(z))`, discounted Bellman subactions,
//! the cocycle series over inverse-branch orbits, and the twist check.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{reduce, MapSpec, PeriodicFunction, PiecewiseGrid, TrigPoly};
use crate::{Error, Result};

/// Skew product over a circle map with discount `λ` and potential `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewSpec {
    pub map: MapSpec,
    pub lambda: f64,
    #[serde(rename = "A")]
    pub potential: PeriodicFunction,
}

impl SkewSpec {
    pub fn new(map: MapSpec, lambda: f64, potential: PeriodicFunction) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidInput(format!("lambda must lie in (0,1], got {lambda}")));
        }
        map.validate()?;
        Ok(SkewSpec { map, lambda, potential })
    }

    /// Doubling map with `A = −½τ′`.
    pub fn from_tau(tau: &TrigPoly, lambda: f64) -> Result<Self> {
        Self::new(MapSpec::Doubling, lambda, PeriodicFunction::Trig(tau.derivative().scaled(-0.5)))
    }

    fn require_doubling(&self) -> Result<()> {
        if self.map.is_doubling() {
            Ok(())
        } else {
            Err(Error::InvalidMap("operation defined for the doubling map only".into()))
        }
    }

    fn a(&self, z: f64) -> f64 {
        self.potential.eval(z)
    }

    fn tail(&self, depth: usize) -> f64 {
        if self.lambda >= 1.0 {
            f64::INFINITY
        } else {
            self.lambda.powi(depth as i32) * self.potential.sup_abs() / (1.0 - self.lambda)
        }
    }
}

/// `(f(z), λs + A(z))`.
pub fn skew_forward(spec: &SkewSpec, z: f64, s: f64) -> (f64, f64) {
    (spec.map.apply(z), spec.lambda * s + spec.a(z))
}

/// Inverse branch `τ_d(x) = (x + d − 1)/2` of the doubling map, `d ∈ {1, 2}`.
#[inline]
pub fn inverse_branch(digit: u8, x: f64) -> f64 {
    0.5 * (x + (digit - 1) as f64)
}

/// Branch label of a point: 1 on `[0, ½)`, 2 on `[½, 1)`.
#[inline]
pub fn branch_of(x: f64) -> u8 {
    if reduce(x) < 0.5 {
        1
    } else {
        2
    }
}

/// `G₁(y,r) = (y/2, (r − A(y/2))/λ)` and `G₂(y,r) = (y/2 + ½, (r − A(y/2+½))/λ)`.
pub fn skew_inverse_branches(spec: &SkewSpec, y: f64, r: f64) -> Result<[(f64, f64); 2]> {
    spec.require_doubling()?;
    let y = reduce(y);
    let g = |d: u8| {
        let p = inverse_branch(d, y);
        (p, (r - spec.a(p)) / spec.lambda)
    };
    Ok([g(1), g(2)])
}

/// Finite prefix `(a_0, …, a_{K−1})` of a sequence over `{1, 2}`.
///
/// Ordering is lexicographic, which for equal lengths is the order used by
/// the twist condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct SymbolSequence(Vec<u8>);

impl SymbolSequence {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.iter().any(|&d| d != 1 && d != 2) {
            return Err(Error::InvalidInput("symbol digits must be 1 or 2".into()));
        }
        Ok(SymbolSequence(digits))
    }

    pub fn constant(digit: u8, depth: usize) -> Result<Self> {
        Self::new(vec![digit; depth])
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Extends with 1s (or truncates) to exactly `depth` digits.
    pub fn padded(&self, depth: usize) -> SymbolSequence {
        let mut d = self.0.clone();
        d.resize(depth, 1);
        SymbolSequence(d)
    }

    /// `(d, a_0, a_1, …)`.
    pub fn prepend(&self, d: u8) -> SymbolSequence {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(d);
        v.extend_from_slice(&self.0);
        SymbolSequence(v)
    }
}

impl TryFrom<Vec<u8>> for SymbolSequence {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        SymbolSequence::new(v)
    }
}

impl From<SymbolSequence> for Vec<u8> {
    fn from(s: SymbolSequence) -> Self {
        s.0
    }
}

/// A truncated series together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub tail_bound: f64,
}

/// `s(x,a) = Σ_{k<K} λ^k A(τ_{a_k} ∘ … ∘ τ_{a_0}(x))` with `K = len(a)`.
pub fn tsujii_series(spec: &SkewSpec, x: f64, a: &SymbolSequence) -> Result<Truncated> {
    spec.require_doubling()?;
    if a.is_empty() {
        return Err(Error::InvalidInput("symbol sequence must have depth >= 1".into()));
    }
    let mut w = reduce(x);
    let mut weight = 1.0;
    let mut sum = 0.0;
    for &d in a.digits() {
        w = inverse_branch(d, w);
        sum += weight * spec.a(w);
        weight *= spec.lambda;
    }
    Ok(Truncated { value: sum, tail_bound: spec.tail(a.len()) })
}

/// `W(x,a) = s(x,a) − s(x̄,a)` at the same depth.
pub fn involution_kernel(spec: &SkewSpec, x: f64, a: &SymbolSequence, x_bar: f64) -> Result<f64> {
    Ok(tsujii_series(spec, x, a)?.value - tsujii_series(spec, x_bar, a)?.value)
}

/// How `sup_over_sequences` explores the preimage tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMode {
    /// All `2^K` prefixes, exactly (`K ≤ 26`).
    Tree,
    /// `K` Bellman steps on an `m`-point grid.
    Grid { m: usize },
}

pub const TREE_DEPTH_MAX: usize = 26;

fn tree_value(spec: &SkewSpec, x: f64, depth: usize) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    let branch = |d: u8| {
        let y = inverse_branch(d, x);
        spec.a(y) + spec.lambda * tree_value(spec, y, depth - 1)
    };
    let (v1, v2) = if depth > 12 { rayon::join(|| branch(1), || branch(2)) } else { (branch(1), branch(2)) };
    v1.max(v2)
}

/// `max_a s(x,a)` over all prefixes of length `K`; the error against the
/// infinite-depth supremum is at most the reported tail.
pub fn sup_over_sequences(spec: &SkewSpec, x: f64, depth: usize, mode: SupMode) -> Result<Truncated> {
    spec.require_doubling()?;
    let value = match mode {
        SupMode::Tree => {
            if depth > TREE_DEPTH_MAX {
                return Err(Error::InvalidInput(format!(
                    "tree mode supports depth <= {TREE_DEPTH_MAX}, got {depth}"
                )));
            }
            tree_value(spec, reduce(x), depth)
        }
        SupMode::Grid { m } => {
            let mut b = PiecewiseGrid::new(vec![0.0; m.max(16)], vec![])?;
            let mut bps = Breakpoints::default();
            for _ in 0..depth {
                let step = bellman_step(spec, &b);
                bps = bps.advance(&step, spec);
                b = PiecewiseGrid::new(step.values, bps.points())?;
            }
            b.eval(x)
        }
    };
    Ok(Truncated { value, tail_bound: spec.tail(depth) })
}

/// One application of `(Tb)(z) = max_{f(y)=z} {λ b(y) + A(y)}` at the nodes.
struct BellmanStep {
    values: Vec<f64>,
    branch: Vec<u8>,
    /// `v₁ − v₂` at each node.
    diff: Vec<f64>,
}

fn bellman_step(spec: &SkewSpec, b: &PiecewiseGrid) -> BellmanStep {
    let m = b.m();
    let out: Vec<(f64, u8, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let z = j as f64 / m as f64;
            let y1 = inverse_branch(1, z);
            let y2 = inverse_branch(2, z);
            let v1 = spec.lambda * b.eval(y1) + spec.a(y1);
            let v2 = spec.lambda * b.eval(y2) + spec.a(y2);
            // ties go to the lower preimage
            if v1 >= v2 {
                (v1, 1, v1 - v2)
            } else {
                (v2, 2, v1 - v2)
            }
        })
        .collect();
    let mut values = Vec::with_capacity(m);
    let mut branch = Vec::with_capacity(m);
    let mut diff = Vec::with_capacity(m);
    for (v, br, d) in out {
        values.push(v);
        branch.push(br);
        diff.push(d);
    }
    BellmanStep { values, branch, diff }
}

/// Breakpoints with the number of forward images taken to reach them.
#[derive(Debug, Clone, Default)]
struct Breakpoints(Vec<(f64, u8)>);

const IMAGE_GENERATIONS: u8 = 2;

impl Breakpoints {
    fn points(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.0).collect()
    }

    /// Switches of the maximizing family plus forward images of the previous
    /// kinks (a kink of `b` at `p` reappears in `Tb` at `f(p)`).
    fn advance(&self, step: &BellmanStep, spec: &SkewSpec) -> Breakpoints {
        let m = step.values.len();
        let h = 1.0 / m as f64;
        let mut pts: Vec<(f64, u8)> = Vec::new();
        for j in 0..m {
            let k = (j + 1) % m;
            let (bj, bk) = (step.branch[j], step.branch[k]);
            let zj = j as f64 * h;
            if k != 0 {
                if bj != bk {
                    let (dj, dk) = (step.diff[j], step.diff[k]);
                    pts.push((zj + h * root_fraction(dj, dk), 0));
                }
            } else if bj == bk {
                // across z = 1 ≡ 0 branch 1 continues as branch 2 and vice versa,
                // so equal labels mean the maximizing preimage jumped
                let (dj, dk) = (step.diff[j], -step.diff[k]);
                pts.push((zj + h * root_fraction(dj, dk), 0));
            }
        }
        for &(p, g) in &self.0 {
            if g < IMAGE_GENERATIONS {
                pts.push((spec.map.apply(p), g + 1));
            }
        }
        for &p in spec.potential.breakpoints() {
            pts.push((spec.map.apply(p), 1));
        }
        for p in pts.iter_mut() {
            p.0 = snap(reduce(p.0), m);
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out: Vec<(f64, u8)> = Vec::new();
        for p in pts {
            match out.last_mut() {
                Some(last) if (p.0 - last.0).abs() <= 1e-12 => last.1 = last.1.min(p.1),
                _ => out.push(p),
            }
        }
        if out.len() > 1 && out[0].0 + 1.0 - out[out.len() - 1].0 <= 1e-12 {
            let last = out.pop().unwrap();
            out[0].1 = out[0].1.min(last.1);
        }
        Breakpoints(out)
    }
}

/// Position in `[0,1]` of the linear root between values `dj` and `dk`.
fn root_fraction(dj: f64, dk: f64) -> f64 {
    if dj == dk {
        0.5
    } else {
        (dj / (dj - dk)).clamp(0.0, 1.0)
    }
}

/// Rounds points lying within `1e−9` cells of a node onto the node.
fn snap(z: f64, m: usize) -> f64 {
    let t = z * m as f64;
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        reduce(r / m as f64)
    } else {
        z
    }
}

/// Fixed point of the Bellman operator on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubactionSolution {
    pub b: PiecewiseGrid,
    pub bellman_residual: f64,
    pub iterations: usize,
    pub maximizing_branch: Vec<u8>,
    pub converged: bool,
    /// Sup-norm size of every update, in order.
    pub update_history: Vec<f64>,
}

impl SubactionSolution {
    /// Smallest and largest ratio of successive updates from iteration
    /// `skip + 1` on, ignoring updates already at roundoff level.
    pub fn contraction_ratio_range(&self, skip: usize) -> Option<(f64, f64)> {
        let h = &self.update_history;
        let mut range: Option<(f64, f64)> = None;
        for k in (skip + 1).max(1)..h.len() {
            if h[k] < 1e-13 || h[k - 1] == 0.0 {
                break;
            }
            let r = h[k] / h[k - 1];
            range = Some(match range {
                None => (r, r),
                Some((lo, hi)) => (lo.min(r), hi.max(r)),
            });
        }
        range
    }

    /// JSON shape `{samples, breakpoints, residual, iterations, branch}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "samples": self.b.samples(),
            "breakpoints": self.b.breakpoints(),
            "residual": self.bellman_residual,
            "iterations": self.iterations,
            "branch": self.maximizing_branch,
            "converged": self.converged,
            "update_history": self.update_history,
        })
    }

    /// CSV rows `z,b,branch`.
    pub fn to_csv(&self) -> String {
        let m = self.b.m();
        let mut s = String::from("z,b,branch\n");
        for (j, (v, br)) in self.b.samples().iter().zip(&self.maximizing_branch).enumerate() {
            s.push_str(&format!("{:.16e},{:.16e},{}\n", j as f64 / m as f64, v, br));
        }
        s
    }
}

/// Value iteration from `b₀ ≡ 0` until the sup-norm update is at most `tol`.
///
/// A run that exhausts `max_iter` returns the last iterate with
/// `converged = false`.
pub fn solve_subaction(spec: &SkewSpec, m: usize, tol: f64, max_iter: usize) -> Result<SubactionSolution> {
    spec.require_doubling()?;
    if !(spec.lambda < 1.0) {
        return Err(Error::InvalidInput("value iteration needs lambda < 1".into()));
    }
    if m < 64 {
        return Err(Error::InvalidInput(format!("grid size must be >= 64, got {m}")));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidInput("need tol > 0 and max_iter >= 1".into()));
    }
    let mut b = PiecewiseGrid::new(vec![0.0; m], vec![])?;
    let mut bps = Breakpoints::default();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let step = bellman_step(spec, &b);
        let update = step
            .values
            .iter()
            .zip(b.samples())
            .fold(0.0f64, |acc, (v, old)| acc.max((v - old).abs()));
        bps = bps.advance(&step, spec);
        b = PiecewiseGrid::new(step.values, bps.points())?;
        history.push(update);
        if update <= tol {
            converged = true;
            break;
        }
    }
    let check = bellman_step(spec, &b);
    let residual = check
        .values
        .iter()
        .zip(b.samples())
        .fold(0.0f64, |acc, (v, old)| acc.max((v - old).abs()));
    Ok(SubactionSolution {
        b,
        bellman_residual: residual,
        iterations,
        maximizing_branch: check.branch,
        converged,
        update_history: history,
    })
}

/// Outcome of the twist check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    pub holds: bool,
    pub min_margin: f64,
    pub witness: Option<TwistWitness>,
    /// Grid points whose finite-difference stencil touches 0 or ½.
    pub skipped: Vec<f64>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistWitness {
    pub x: f64,
    pub a: SymbolSequence,
    pub b: SymbolSequence,
    pub margin: f64,
}

/// Minimum over grid × pairs of `∂s/∂x(x,a) − ∂s/∂x(x,b)`, derivatives by
/// central differences of the depth-`K` series. Prefixes shorter than `K`
/// are padded with 1s.
pub fn twist_check(
    spec: &SkewSpec,
    x_grid: &[f64],
    pairs: &[(SymbolSequence, SymbolSequence)],
    depth: usize,
    h_fd: f64,
) -> Result<TwistReport> {
    spec.require_doubling()?;
    if depth == 0 || !(h_fd > 0.0 && h_fd < 0.25) {
        return Err(Error::InvalidInput("need depth >= 1 and 0 < h_fd < 1/4".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no symbol pairs given".into()));
    }
    let mut padded = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (a, b) = (a.padded(depth), b.padded(depth));
        if a.cmp(&b) != Ordering::Less {
            return Err(Error::InvalidInput(format!(
                "pair must satisfy a < b lexicographically: {:?} vs {:?}",
                a.digits(),
                b.digits()
            )));
        }
        padded.push((a, b));
    }
    let ds = |x: f64, a: &SymbolSequence| -> Result<f64> {
        let hi = tsujii_series(spec, x + h_fd, a)?.value;
        let lo = tsujii_series(spec, x - h_fd, a)?.value;
        Ok((hi - lo) / (2.0 * h_fd))
    };
    let mut skipped = Vec::new();
    let mut best: Option<TwistWitness> = None;
    let mut evaluated = 0;
    for &x in x_grid {
        if x - h_fd <= 0.0 || x + h_fd >= 1.0 || (x - 0.5).abs() <= h_fd {
            skipped.push(x);
            continue;
        }
        for (a, b) in &padded {
            let margin = ds(x, a)? - ds(x, b)?;
            evaluated += 1;
            if best.as_ref().map_or(true, |w| margin < w.margin) {
                best = Some(TwistWitness { x, a: a.clone(), b: b.clone(), margin });
            }
        }
    }
    let min_margin = best.as_ref().map_or(f64::NAN, |w| w.margin);
    Ok(TwistReport { holds: min_margin > 0.0, min_margin, witness: best, skipped, evaluated })
}

/// Summary of the per-point Bellman gaps `min_i |b(z) − (λb(y_i) + A(y_i))|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellmanGapStats {
    pub max_min_gap: f64,
    pub mean_min_gap: f64,
    /// Largest violation of `b(z) ≥ λb(y) + A(y)` over both preimages.
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoboundaryReport {
    pub max_residual_se: f64,
    pub bellman_gap: Option<BellmanGapStats>,
}

/// Residual of the coboundary equation on an `m`-grid.
///
/// Doubling: `|u(f(z)) − λu(z) + ½τ′(z)|`, plus Bellman gaps for `A = −½τ′`.
/// Diffeomorphisms: `|u(z) − u(f(z))f′(z) − τ′(z)|`.
pub fn coboundary_residual(
    u: &PeriodicFunction,
    tau: &TrigPoly,
    f: &MapSpec,
    lambda: f64,
    m: usize,
) -> Result<CoboundaryReport> {
    if m == 0 {
        return Err(Error::InvalidInput("grid must be nonempty".into()));
    }
    let dtau = tau.derivative();
    let zs = (0..m).map(|j| j as f64 / m as f64);
    if f.is_doubling() {
        let a = |y: f64| -0.5 * dtau.eval(y);
        let mut max_res = 0.0f64;
        let (mut max_gap, mut sum_gap, mut max_viol) = (0.0f64, 0.0, f64::NEG_INFINITY);
        for z in zs {
            let r = (u.eval(f.apply(z)) - lambda * u.eval(z) + 0.5 * dtau.eval(z)).abs();
            max_res = max_res.max(r);
            let bz = u.eval(z);
            let mut gap = f64::INFINITY;
            for d in [1u8, 2] {
                let y = inverse_branch(d, z);
                let v = lambda * u.eval(y) + a(y);
                gap = gap.min((bz - v).abs());
                max_viol = max_viol.max(v - bz);
            }
            max_gap = max_gap.max(gap);
            sum_gap += gap;
        }
        Ok(CoboundaryReport {
            max_residual_se: max_res,
            bellman_gap: Some(BellmanGapStats {
                max_min_gap: max_gap,
                mean_min_gap: sum_gap / m as f64,
                max_violation: max_viol,
            }),
        })
    } else {
        let max_res = zs
            .map(|z| (u.eval(z) - u.eval(f.apply(z)) * f.derivative(z) - dtau.eval(z)).abs())
            .fold(0.0f64, f64::max);
        Ok(CoboundaryReport { max_residual_se: max_res, bellman_gap: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn constant(c: f64) -> SkewSpec {
        SkewSpec::new(MapSpec::Doubling, 0.5, PeriodicFunction::Trig(TrigPoly::constant(c))).unwrap()
    }

    /// `A = −½τ′` with `τ = sin(2πz)/(2π)`, i.e. `A = −½cos(2πz)`.
    fn cosine() -> SkewSpec {
        SkewSpec::from_tau(&TrigPoly::sin_mode(1, 1.0 / TAU), 0.5).unwrap()
    }

    #[test]
    fn forward_examples() {
        let (z, s) = skew_forward(&constant(0.0), 0.3, 2.0);
        assert!((z - 0.6).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        let (z, s) = skew_forward(&constant(1.0), 0.3, 0.0);
        assert!((z - 0.6).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        let (z, s) = skew_forward(&cosine(), 0.0, 4.0);
        assert_eq!(z, 0.0);
        assert!((s - 1.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_branch_examples() {
        let g = skew_inverse_branches(&constant(0.0), 0.6, 1.0).unwrap();
        assert!((g[0].0 - 0.3).abs() < 1e-15 && (g[0].1 - 2.0).abs() < 1e-15);
        assert!((g[1].0 - 0.8).abs() < 1e-15 && (g[1].1 - 2.0).abs() < 1e-15);
        let g = skew_inverse_branches(&constant(1.0), 0.0, 2.0).unwrap();
        assert_eq!(g, [(0.0, 2.0), (0.5, 2.0)]);
        let rot = SkewSpec::new(MapSpec::Rotation { alpha: 0.3 }, 0.5, PeriodicFunction::zero()).unwrap();
        assert!(skew_inverse_branches(&rot, 0.1, 0.0).is_err());
    }

    #[test]
    fn inverse_then_forward_is_identity() {
        let spec = cosine();
        for k in 0..50 {
            let y = (k as f64 * 0.618_033_988_7) % 1.0;
            let r = -2.0 + 0.08 * k as f64;
            for (p, s) in skew_inverse_branches(&spec, y, r).unwrap() {
                let (y2, r2) = skew_forward(&spec, p, s);
                assert!(crate::circle::circle_distance(y, y2) < 1e-12 && (r - r2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn series_of_constants() {
        let a = SymbolSequence::constant(1, 20).unwrap();
        let t = tsujii_series(&constant(1.0), 0.3, &a).unwrap();
        assert!((t.value - (2.0 - 2f64.powi(-19))).abs() < 1e-14);
        assert!((t.tail_bound - 2f64.powi(-19)).abs() < 1e-20);
        assert_eq!(tsujii_series(&constant(0.0), 0.7, &a).unwrap().value, 0.0);
    }

    #[test]
    fn cocycle_identity() {
        let spec = cosine();
        for k in 0..50 {
            let x = (0.013 + k as f64 * 0.754_877_666) % 1.0;
            let digits: Vec<u8> = (0..30).map(|i| 1 + ((k * 7 + i * 3) % 5 == 0) as u8).collect();
            let a = SymbolSequence::new(digits).unwrap();
            let lhs = tsujii_series(&spec, spec.map.apply(x), &a.prepend(branch_of(x))).unwrap();
            let rhs = spec.a(x) + 0.5 * tsujii_series(&spec, x, &a).unwrap().value;
            assert!((lhs.value - rhs).abs() <= lhs.tail_bound + 1e-12);
        }
    }

    #[test]
    fn kernel_properties() {
        let spec = cosine();
        let a = SymbolSequence::constant(1, 30).unwrap();
        assert_eq!(involution_kernel(&spec, 0.3, &a, 0.3).unwrap(), 0.0);
        let w = involution_kernel(&spec, 0.3, &a, 0.5).unwrap();
        let direct = tsujii_series(&spec, 0.3, &a).unwrap().value - tsujii_series(&spec, 0.5, &a).unwrap().value;
        assert!((w - direct).abs() < 1e-14);
        assert_eq!(w, -involution_kernel(&spec, 0.5, &a, 0.3).unwrap());
        assert_eq!(involution_kernel(&constant(2.0), 0.1, &a, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn trivial_subactions() {
        let s = solve_subaction(&constant(0.0), 64, 1e-12, 10).unwrap();
        assert!(s.converged && s.bellman_residual == 0.0);
        assert!(s.b.samples().iter().all(|&v| v == 0.0));
        let s = solve_subaction(&constant(0.7), 64, 1e-12, 100).unwrap();
        assert!(s.converged);
        assert!(s.b.samples().iter().all(|&v| (v - 1.4).abs() < 1e-11));
    }

    #[test]
    fn cosine_subaction_contracts_and_kinks_at_zero_and_half() {
        let s = solve_subaction(&cosine(), 256, 1e-10, 60).unwrap();
        assert!(s.converged && s.bellman_residual <= 1e-10);
        let (lo, hi) = s.contraction_ratio_range(5).unwrap();
        assert!(lo >= 0.45 && hi <= 0.55, "{lo} {hi}");
        assert_eq!(s.b.breakpoints(), &[0.0, 0.5]);
    }

    #[test]
    fn sup_over_sequences_constants() {
        for mode in [SupMode::Tree, SupMode::Grid { m: 64 }] {
            assert_eq!(sup_over_sequences(&constant(0.0), 0.3, 10, mode).unwrap().value, 0.0);
            let v = sup_over_sequences(&constant(0.5), 0.3, 10, mode).unwrap().value;
            assert!((v - 0.5 * (2.0 - 2f64.powi(1 - 10))).abs() < 1e-13);
        }
        assert!(sup_over_sequences(&constant(0.5), 0.3, 27, SupMode::Tree).is_err());
    }

    #[test]
    fn twist_degenerate_and_validation() {
        let a = SymbolSequence::new(vec![1, 1, 2]).unwrap();
        let b = SymbolSequence::new(vec![1, 2, 1]).unwrap();
        let r = twist_check(&constant(1.0), &[0.2, 0.3, 0.7], &[(a.clone(), b.clone())], 20, 1e-5).unwrap();
        assert_eq!(r.min_margin, 0.0);
        assert!(!r.holds);
        assert!(twist_check(&constant(1.0), &[0.2], &[(a.clone(), a.clone())], 20, 1e-5).is_err());
        assert!(twist_check(&constant(1.0), &[0.2], &[(b, a)], 20, 1e-5).is_err());
        let r = twist_check(&cosine(), &[0.0, 0.5, 0.25], &[(SymbolSequence::constant(1, 3).unwrap(), SymbolSequence::constant(2, 3).unwrap())], 20, 1e-5).unwrap();
        assert_eq!(r.skipped, vec![0.0, 0.5]);
        assert_eq!(r.evaluated, 1);
    }

    #[test]
    fn subaction_json_and_csv_shapes() {
        let s = solve_subaction(&constant(0.0), 64, 1e-12, 5).unwrap();
        let v = s.to_json();
        assert_eq!(v["samples"].as_array().unwrap().len(), 64);
        assert_eq!(v["residual"], 0.0);
        let csv = s.to_csv();
        assert!(csv.starts_with("z,b,branch\n"));
        assert_eq!(csv.lines().count(), 65);
    }
}
