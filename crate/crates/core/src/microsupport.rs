//! Phase-space scans of `|⟨φ_{y,η}, Φ_ħ⟩|` over an `ħ` ladder, decay-slope
//! fits, support extraction and comparison against predicted supports.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{circle_distance, CirclePoint, MapSpec, PeriodicFunction, PiecewiseGrid, TrigPoly};
use crate::ergodic::{skew_inverse_branches, SkewSpec};
use crate::quadrature::QuadPolicy;
use crate::states::{truncation_radius, Coupling, EvolutionSpec, QuantumState, StateFamily, HBAR_MAX};
use crate::{Complex64, Error, Result};

/// Cells with slope below this are support.
pub const SLOPE_THRESHOLD: f64 = 2.0;
/// Ladder points used by every slope fit.
pub const FIT_POINTS: usize = 4;
/// Largest tolerated fraction of failed cells.
pub const MAX_FAILED_FRACTION: f64 = 0.01;
pub const HIT_TOLERANCE_CELLS: f64 = 1.5;

/// `n_y` points `j/n_y` and `n_eta` points spanning `[eta_min, eta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub n_y: usize,
    pub n_eta: usize,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl ScanGrid {
    pub fn new(n_y: usize, n_eta: usize, eta_min: f64, eta_max: f64) -> Result<Self> {
        let g = ScanGrid { n_y, n_eta, eta_min, eta_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y < 16 || self.n_eta < 16 {
            return Err(Error::InvalidInput("scan grid needs at least 16 nodes per axis".into()));
        }
        if !(self.eta_min.is_finite() && self.eta_max.is_finite() && self.eta_min < self.eta_max) {
            return Err(Error::InvalidInput("eta range must be finite with eta_min < eta_max".into()));
        }
        Ok(())
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.n_y as f64
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.eta_min + k as f64 * self.eta_step()
    }

    pub fn eta_step(&self) -> f64 {
        (self.eta_max - self.eta_min) / (self.n_eta - 1) as f64
    }

    pub fn eta_abs_max(&self) -> f64 {
        self.eta_min.abs().max(self.eta_max.abs())
    }

    pub fn cells(&self) -> usize {
        self.n_y * self.n_eta
    }

    /// Continuous cell coordinates of a phase-space point.
    pub fn to_cells(&self, y: f64, eta: f64) -> (f64, f64) {
        (crate::circle::reduce(y) * self.n_y as f64, (eta - self.eta_min) / self.eta_step())
    }

    /// Nearest node, with `η` clamped into the window.
    pub fn nearest(&self, y: f64, eta: f64) -> (usize, usize) {
        let (a, b) = self.to_cells(y, eta);
        let j = (a.round() as usize) % self.n_y;
        let k = b.round().clamp(0.0, (self.n_eta - 1) as f64) as usize;
        (j, k)
    }

    /// Distance in cell units between a node and a point, `y` periodic.
    pub fn cell_distance(&self, j: usize, k: usize, y: f64, eta: f64) -> f64 {
        let dy = circle_distance(self.y(j), y) * self.n_y as f64;
        let de = (self.eta(k) - eta) / self.eta_step();
        dy.hypot(de)
    }
}

/// Decreasing `ħ` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderRepr")]
pub struct HbarLadder {
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LadderRepr {
    Geometric { hbar0: f64, ratio: f64, j_max: usize },
    Values { values: Vec<f64> },
}

impl TryFrom<LadderRepr> for HbarLadder {
    type Error = Error;
    fn try_from(r: LadderRepr) -> Result<Self> {
        match r {
            LadderRepr::Geometric { hbar0, ratio, j_max } => HbarLadder::geometric(hbar0, ratio, j_max),
            LadderRepr::Values { values } => HbarLadder::from_values(values),
        }
    }
}

impl HbarLadder {
    /// `ħ₀·r^j`, `j = 0..=j_max`.
    pub fn geometric(hbar0: f64, ratio: f64, j_max: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidInput(format!("ladder ratio must lie in (0,1), got {ratio}")));
        }
        Self::from_values((0..=j_max).map(|j| hbar0 * ratio.powi(j as i32)).collect())
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 5 {
            return Err(Error::InvalidInput("ladder needs at least 5 values".into()));
        }
        if values.iter().any(|&h| !(h > 0.0 && h <= HBAR_MAX)) {
            return Err(Error::InvalidInput(format!("ladder values must lie in (0, {HBAR_MAX}]")));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("ladder values must be strictly decreasing".into()));
        }
        Ok(HbarLadder { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Least-squares slope of `ln v` against `ln ħ` over the [`FIT_POINTS`]
/// smallest `ħ`. Zeros are floored at `1e−300`.
pub fn decay_slope(values: &[f64], hbars: &[f64]) -> Result<f64> {
    if values.len() != hbars.len() {
        return Err(Error::InvalidInput("values and hbars differ in length".into()));
    }
    if values.len() < FIT_POINTS {
        return Err(Error::InvalidInput(format!("decay_slope needs >= {FIT_POINTS} values")));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| hbars[a].total_cmp(&hbars[b]));
    let pts: Vec<(f64, f64)> =
        idx[..FIT_POINTS].iter().map(|&i| (hbars[i].ln(), values[i].max(1e-300).ln())).collect();
    Ok(regression_slope(&pts))
}

fn regression_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Slope over the smallest-`ħ` values that clear their roundoff floor.
/// Fewer than two resolved values means the cell decayed below resolution:
/// `+∞`.
pub fn censored_slope(values: &[f64], floors: &[f64], hbars: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] > floors[i]).collect();
    idx.sort_by(|&a, &b| hbars[a].total_cmp(&hbars[b]));
    idx.truncate(FIT_POINTS);
    if idx.len() < 2 {
        return f64::INFINITY;
    }
    let pts: Vec<(f64, f64)> = idx.iter().map(|&i| (hbars[i].ln(), values[i].ln())).collect();
    regression_slope(&pts)
}

/// `‖φ_{y,η}‖²` in closed form (independent of `y`).
pub fn wavepacket_norm_sq(eta: f64, hbar: f64) -> f64 {
    let mut s = 1.0;
    for m in 1..=12 {
        let m = m as f64;
        let g = (-m * m / (8.0 * hbar)).exp();
        if g < 1e-20 {
            break;
        }
        s += 2.0 * (eta * m / hbar).cos() * g;
    }
    (TAU * hbar).sqrt() * s
}

/// Correlation magnitudes over `[ħ][y][η]` with fitted slopes and support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrosupportMap {
    pub grid: ScanGrid,
    pub hbars: Vec<f64>,
    /// `|⟨φ_{y,η}, Φ_ħ⟩| / (‖φ_{y,η}‖‖Φ_ħ‖)`, flat `[ħ][y][η]`.
    pub magnitudes: Vec<f64>,
    /// Roundoff floor of each magnitude, same layout.
    #[serde(with = "infinite_as_null")]
    pub floors: Vec<f64>,
    /// Flat `[y][η]`; `+∞` where the cell decays below resolution or failed.
    #[serde(with = "infinite_as_null")]
    pub slopes: Vec<f64>,
    pub support_mask: Vec<bool>,
    pub failed: Vec<bool>,
    pub slope_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub j: usize,
    pub k: usize,
    pub y: f64,
    pub eta: f64,
    pub magnitude: f64,
}

impl MicrosupportMap {
    fn idx(&self, h: usize, j: usize, k: usize) -> usize {
        (h * self.grid.n_y + j) * self.grid.n_eta + k
    }

    pub fn magnitude(&self, h: usize, j: usize, k: usize) -> f64 {
        self.magnitudes[self.idx(h, j, k)]
    }

    pub fn slope(&self, j: usize, k: usize) -> f64 {
        self.slopes[j * self.grid.n_eta + k]
    }

    pub fn in_support(&self, j: usize, k: usize) -> bool {
        self.support_mask[j * self.grid.n_eta + k]
    }

    /// Slice `[y][η]` at ladder index `h`.
    pub fn slice(&self, h: usize) -> &[f64] {
        let n = self.grid.cells();
        &self.magnitudes[h * n..(h + 1) * n]
    }

    pub fn smallest_hbar_index(&self) -> usize {
        self.hbars.len() - 1
    }

    pub fn failed_cells(&self) -> usize {
        self.failed.iter().filter(|&&f| f).count()
    }

    pub fn support_cells(&self) -> Vec<(usize, usize)> {
        let n_eta = self.grid.n_eta;
        (0..self.support_mask.len()).filter(|&i| self.support_mask[i]).map(|i| (i / n_eta, i % n_eta)).collect()
    }

    /// Cell maximizing the magnitude at ladder index `h`.
    pub fn argmax(&self, h: usize) -> (usize, usize) {
        let s = self.slice(h);
        let mut best = 0;
        for i in 1..s.len() {
            if s[i] > s[best] {
                best = i;
            }
        }
        (best / self.grid.n_eta, best % self.grid.n_eta)
    }

    /// 8-connected components of the support mask, `y` periodic.
    pub fn components(&self) -> Vec<Vec<(usize, usize)>> {
        let (n_y, n_eta) = (self.grid.n_y, self.grid.n_eta);
        let mut seen = vec![false; self.support_mask.len()];
        let mut out = Vec::new();
        for start in 0..self.support_mask.len() {
            if !self.support_mask[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let (j, k) = (i / n_eta, i % n_eta);
                comp.push((j, k));
                for dj in [n_y - 1, 0, 1] {
                    for dk in [-1i64, 0, 1] {
                        let kk = k as i64 + dk;
                        if (dj == 0 && dk == 0) || kk < 0 || kk >= n_eta as i64 {
                            continue;
                        }
                        let n = ((j + dj) % n_y) * n_eta + kk as usize;
                        if self.support_mask[n] && !seen[n] {
                            seen[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Brightest smallest-`ħ` cell of every support component; the global
    /// argmax when the support is empty (nothing for an all-zero map).
    pub fn peaks(&self) -> Vec<Peak> {
        let h = self.smallest_hbar_index();
        let peak = |(j, k): (usize, usize)| Peak {
            j,
            k,
            y: self.grid.y(j),
            eta: self.grid.eta(k),
            magnitude: self.magnitude(h, j, k),
        };
        let comps = self.components();
        if comps.is_empty() {
            let (j, k) = self.argmax(h);
            return if self.magnitude(h, j, k) > 0.0 { vec![peak((j, k))] } else { vec![] };
        }
        let mut peaks: Vec<Peak> = comps
            .iter()
            .map(|c| {
                let best = c
                    .iter()
                    .copied()
                    .max_by(|a, b| self.magnitude(h, a.0, a.1).total_cmp(&self.magnitude(h, b.0, b.1)))
                    .unwrap();
                peak(best)
            })
            .collect();
        peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
        peaks
    }

    /// Long-format CSV `hbar,y,eta,magnitude`.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.magnitudes.len() * 96 + 32);
        s.push_str("hbar,y,eta,magnitude\n");
        for (h, &hbar) in self.hbars.iter().enumerate() {
            for j in 0..self.grid.n_y {
                for k in 0..self.grid.n_eta {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt17(hbar),
                        fmt17(self.grid.y(j)),
                        fmt17(self.grid.eta(k)),
                        fmt17(self.magnitude(h, j, k))
                    ));
                }
            }
        }
        s
    }

    pub fn summary(&self, matched: Option<MatchReport>) -> MapSummary {
        let (n_y, n_eta) = (self.grid.n_y, self.grid.n_eta);
        MapSummary {
            grid: self.grid,
            hbars: self.hbars.clone(),
            slope_threshold: self.slope_threshold,
            slopes: (0..n_y)
                .map(|j| (0..n_eta).map(|k| Some(self.slope(j, k)).filter(|s| s.is_finite())).collect())
                .collect(),
            mask: (0..n_y).map(|j| (0..n_eta).map(|k| self.in_support(j, k)).collect()).collect(),
            peaks: self.peaks(),
            components: self.components().len(),
            support_cells: self.support_cells().len(),
            failed_cells: self.failed_cells(),
            matched,
        }
    }

    /// Binary PGM of slice `h`: width `n_y`, height `n_eta`, row 0 at
    /// `eta_max`, min-max scaled (a constant slice maps to 0).
    pub fn pgm_bytes(&self, h: usize) -> Result<Vec<u8>> {
        if h >= self.hbars.len() {
            return Err(Error::InvalidInput(format!("slice index {h} outside ladder of {}", self.hbars.len())));
        }
        let s = self.slice(h);
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let (n_y, n_eta) = (self.grid.n_y, self.grid.n_eta);
        let mut out = format!("P5\n{n_y} {n_eta}\n255\n").into_bytes();
        for row in 0..n_eta {
            let k = n_eta - 1 - row;
            for j in 0..n_y {
                let v = s[j * n_eta + k];
                out.push(if range > 0.0 { ((v - lo) / range * 255.0).round() as u8 } else { 0 });
            }
        }
        Ok(out)
    }

    pub fn write_pgm(&self, h: usize, path: &Path) -> Result<()> {
        std::fs::write(path, self.pgm_bytes(h)?)?;
        Ok(())
    }

    /// Refits slopes and support from the stored magnitudes.
    fn fit(&mut self) {
        let n = self.grid.cells();
        let nh = self.hbars.len();
        let last = nh - 1;
        for c in 0..n {
            let vals: Vec<f64> = (0..nh).map(|h| self.magnitudes[h * n + c]).collect();
            let floors: Vec<f64> = (0..nh).map(|h| self.floors[h * n + c]).collect();
            let slope = if self.failed[c] { f64::INFINITY } else { censored_slope(&vals, &floors, &self.hbars) };
            self.slopes[c] = slope;
            self.support_mask[c] = !self.failed[c] && slope < self.slope_threshold && vals[last] > floors[last];
        }
    }
}

/// JSON has no infinity; `+∞` travels as `null`.
mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| Some(*x).filter(|x| x.is_finite())).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

/// 17 significant digits, round-trip safe.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON summary of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub grid: ScanGrid,
    pub hbars: Vec<f64>,
    pub slope_threshold: f64,
    /// `[y][η]`; `null` where the cell decays below resolution.
    pub slopes: Vec<Vec<Option<f64>>>,
    pub mask: Vec<Vec<bool>>,
    pub peaks: Vec<Peak>,
    pub components: usize,
    pub support_cells: usize,
    pub failed_cells: usize,
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<MatchReport>,
}

/// One `ħ` slice computed by the windowed fast path.
struct Slice {
    magnitudes: Vec<f64>,
    floors: Vec<f64>,
}

const RESEED: usize = 256;

fn scan_slice(state: &QuantumState, grid: &ScanGrid, policy: &QuadPolicy) -> Result<Slice> {
    let hbar = state.hbar();
    let bound = state.phase_scale_bound();
    let n = policy.with_bound(policy.phase_scale_bound.max(bound + grid.eta_abs_max())).nodes(hbar)?;
    let nf = n as f64;
    let phi: Vec<Complex64> = (0..n).into_par_iter().map(|i| state.eval(i as f64 / nf)).collect();
    let norm_state = (phi.iter().map(|v| v.norm_sqr()).sum::<f64>() / nf).sqrt();
    let probe_norms: Vec<f64> = (0..grid.n_eta).map(|k| wavepacket_norm_sq(grid.eta(k), hbar).sqrt()).collect();
    let r = truncation_radius(hbar);
    let d_eta = grid.eta_step();
    let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.n_y)
        .into_par_iter()
        .map(|j| {
            let y = grid.y(j);
            let lo = ((y - r) * nf).ceil() as i64;
            let hi = ((y + r) * nf).floor() as i64;
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.n_eta];
            let mut abs_sum = 0.0;
            for m in lo..=hi {
                let u = m as f64 / nf;
                let t = u - y;
                let w = phi[m.rem_euclid(n as i64) as usize] * (-t * t / (4.0 * hbar)).exp();
                abs_sum += w.norm();
                let rate = -u / hbar;
                let step = Complex64::from_polar(1.0, rate * d_eta);
                for (c, chunk) in acc.chunks_mut(RESEED).enumerate() {
                    let mut p = w * Complex64::from_polar(1.0, rate * grid.eta(c * RESEED));
                    for a in chunk {
                        *a += p;
                        p *= step;
                    }
                }
            }
            let mut mags = Vec::with_capacity(grid.n_eta);
            let mut floors = Vec::with_capacity(grid.n_eta);
            for k in 0..grid.n_eta {
                let denom = nf * probe_norms[k] * norm_state;
                if denom > 0.0 {
                    let eta = grid.eta(k);
                    let theta = (2.0 * eta.abs() + 3.0 * bound) / hbar + 50.0;
                    mags.push(acc[k].norm() / denom);
                    floors.push(16.0 * f64::EPSILON * (RESEED as f64 + theta) * abs_sum / denom);
                } else {
                    mags.push(0.0);
                    floors.push(0.0);
                }
            }
            (mags, floors)
        })
        .collect();
    let mut magnitudes = Vec::with_capacity(grid.cells());
    let mut floors = Vec::with_capacity(grid.cells());
    for (m, f) in cols {
        magnitudes.extend(m);
        floors.extend(f);
    }
    Ok(Slice { magnitudes, floors })
}

/// Scans one state per ladder value.
///
/// A slice whose quadrature cannot be sized (node cap) marks every cell
/// failed; more than 1% failed cells rejects the run.
pub fn scan_states(states: &[QuantumState], grid: &ScanGrid, policy: &QuadPolicy) -> Result<MicrosupportMap> {
    grid.validate()?;
    policy.validate()?;
    if states.len() < FIT_POINTS {
        return Err(Error::InvalidInput(format!("need at least {FIT_POINTS} ladder states")));
    }
    let cells = grid.cells();
    let mut map = MicrosupportMap {
        grid: *grid,
        hbars: states.iter().map(|s| s.hbar()).collect(),
        magnitudes: Vec::with_capacity(cells * states.len()),
        floors: Vec::with_capacity(cells * states.len()),
        slopes: vec![0.0; cells],
        support_mask: vec![false; cells],
        failed: vec![false; cells],
        slope_threshold: SLOPE_THRESHOLD,
    };
    let mut first_error = None;
    for state in states {
        match scan_slice(state, grid, policy) {
            Ok(s) => {
                map.magnitudes.extend(s.magnitudes);
                map.floors.extend(s.floors);
            }
            Err(e) => {
                map.magnitudes.extend(std::iter::repeat(0.0).take(cells));
                map.floors.extend(std::iter::repeat(f64::INFINITY).take(cells));
                map.failed.iter_mut().for_each(|f| *f = true);
                first_error.get_or_insert(e);
            }
        }
    }
    let failed = map.failed_cells() as f64 / cells as f64;
    if failed > MAX_FAILED_FRACTION {
        let cause = first_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::NotConverged(format!(
            "microsupport: {:.1}% of cells failed quadrature (limit {:.0}%): {cause}",
            100.0 * failed,
            100.0 * MAX_FAILED_FRACTION
        )));
    }
    map.fit();
    Ok(map)
}

/// Scan of `family` over `ladder`.
pub fn correlation_scan(
    family: &StateFamily,
    grid: &ScanGrid,
    ladder: &HbarLadder,
    policy: &QuadPolicy,
) -> Result<MicrosupportMap> {
    let states = ladder.values().iter().map(|&h| family.at(h)).collect::<Result<Vec<_>>>()?;
    scan_states(&states, grid, policy)
}

/// One normalized cell through the generic inner product; slow, used to
/// cross-check the windowed path.
pub fn probe_magnitude(state: &QuantumState, y: f64, eta: f64, policy: &QuadPolicy) -> Result<f64> {
    use crate::quadrature::{inner_product, norm};
    let probe = QuantumState::wavepacket(y, eta, state.hbar())?;
    let ns = norm(state, policy)?;
    if ns == 0.0 {
        return Ok(0.0);
    }
    Ok(inner_product(&probe, state, policy)?.norm() / (norm(&probe, policy)? * ns))
}

/// Where the theory places the micro-support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictedSupport {
    Points(Vec<(f64, f64)>),
    Graph(PeriodicFunction),
}

fn coupling_weight(c: &Coupling) -> f64 {
    match c {
        Coupling::Semiclassical => 1.0,
        // ν fixed: the τ′ kick is νħτ′ → 0
        Coupling::Fixed { .. } => 0.0,
    }
}

/// Image of a source support under `F̂_ν`.
///
/// Points `(x, ξ)` go to `(y, ξ/λ + cτ′(y))` over the preimages of `x` for
/// doubling (the skew-product branches `G_i` with `A = −λcτ′`), and to
/// `(y, ξf′(y) + cτ′(y))` for diffeomorphisms; a graph of `u` goes to the
/// graph of `u(f(y))f′(y) + cτ′(y)`. `c` is 1 for semiclassical coupling.
pub fn predict_support(spec: &EvolutionSpec, source: &PredictedSupport, lambda: f64) -> Result<PredictedSupport> {
    let c = coupling_weight(&spec.coupling);
    let dtau = spec.tau.derivative();
    match source {
        PredictedSupport::Points(pts) => {
            if pts.is_empty() {
                return Err(Error::InvalidInput("predicted point set is empty".into()));
            }
            let mut out = Vec::new();
            if spec.map.is_doubling() {
                let skew = SkewSpec::new(MapSpec::Doubling, lambda, dtau.scaled(-lambda * c).into())?;
                for &(x, xi) in pts {
                    for (y, eta) in skew_inverse_branches(&skew, x, xi)? {
                        out.push((y, eta));
                    }
                }
            } else {
                for &(x, xi) in pts {
                    for y in spec.map.preimages(CirclePoint::new(x))? {
                        let y = y.value();
                        out.push((y, xi * spec.map.derivative(y) + c * dtau.eval(y)));
                    }
                }
            }
            Ok(PredictedSupport::Points(out))
        }
        PredictedSupport::Graph(u) => {
            let kick = dtau.scaled(c);
            let g: PeriodicFunction = match (u, &spec.map) {
                (PeriodicFunction::Trig(u), MapSpec::Rotation { alpha }) => u.shifted(*alpha).add(&kick).into(),
                (PeriodicFunction::Trig(u), MapSpec::Doubling) => {
                    let src = u.nonnegative_coeffs();
                    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * src.len().max(1) - 1];
                    for (n, cn) in src.iter().enumerate() {
                        coeffs[2 * n] = cn * 2.0;
                    }
                    TrigPoly::from_nonnegative(coeffs)?.add(&kick).into()
                }
                _ => {
                    let mut bps = Vec::new();
                    for &p in u.breakpoints() {
                        bps.extend(spec.map.preimages(CirclePoint::new(p))?.into_iter().map(|q| q.value()));
                    }
                    let map = &spec.map;
                    PiecewiseGrid::from_fn(4096, bps, |y| u.eval(map.apply(y)) * map.derivative(y) + kick.eval(y))?
                        .into()
                }
            };
            Ok(PredictedSupport::Graph(g))
        }
    }
}

/// Agreement between an extracted support and a prediction, in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub hausdorff_cells: f64,
    /// Max over predicted points of the distance to the support. Not
    /// defined for graphs: a localized state only lights up part of the
    /// graph.
    pub predicted_to_support: Option<f64>,
    pub support_to_predicted: f64,
    pub support_cells: usize,
    pub tolerance_cells: f64,
    pub hit: bool,
}

/// Distance from cell point `(a, b)` to the segment `p0 → p1`, with the
/// cell `y` coordinate periodic of period `n_y`.
fn segment_distance(a: f64, b: f64, p0: (f64, f64), p1: (f64, f64), n_y: f64) -> f64 {
    let a = p0.0 + (a - p0.0 + 0.5 * n_y).rem_euclid(n_y) - 0.5 * n_y;
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((a - p0.0) * dx + (b - p0.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a - p0.0 - t * dx).hypot(b - p0.1 - t * dy)
}

pub fn support_match(map: &MicrosupportMap, predicted: &PredictedSupport) -> Result<MatchReport> {
    let support = map.support_cells();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let grid = &map.grid;
    let (p2s, s2p) = match predicted {
        PredictedSupport::Points(pts) => {
            if pts.is_empty() {
                return Err(Error::InvalidInput("predicted point set is empty".into()));
            }
            let p2s = pts
                .iter()
                .map(|&(y, eta)| {
                    support.iter().map(|&(j, k)| grid.cell_distance(j, k, y, eta)).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max);
            let s2p = support
                .iter()
                .map(|&(j, k)| {
                    pts.iter().map(|&(y, eta)| grid.cell_distance(j, k, y, eta)).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max);
            (Some(p2s), s2p)
        }
        PredictedSupport::Graph(g) => {
            let m = 8 * grid.n_y;
            let samples: Vec<(f64, f64)> = (0..=m)
                .map(|i| {
                    let y = i as f64 / m as f64;
                    (y * grid.n_y as f64, (g.eval(y) - grid.eta_min) / grid.eta_step())
                })
                .collect();
            let n_y = grid.n_y as f64;
            let s2p = support
                .iter()
                .map(|&(j, k)| {
                    samples
                        .windows(2)
                        .map(|w| segment_distance(j as f64, k as f64, w[0], w[1], n_y))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max);
            (None, s2p)
        }
    };
    let hausdorff = p2s.unwrap_or(0.0).max(s2p);
    Ok(MatchReport {
        hausdorff_cells: hausdorff,
        predicted_to_support: p2s,
        support_to_predicted: s2p,
        support_cells: support.len(),
        tolerance_cells: HIT_TOLERANCE_CELLS,
        hit: hausdorff <= HIT_TOLERANCE_CELLS,
    })
}

/// Stationary-phase scale of a pairing: `|⟨·,·⟩| ~ √(2πħ)·e^{−d²/8ħ}` for
/// coherent states a phase-space distance `d` apart.
pub fn coherent_overlap(d_y: f64, d_eta: f64, hbar: f64) -> f64 {
    (-(d_y * d_y + d_eta * d_eta) / (8.0 * hbar)).exp()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::norm;

    fn small_grid() -> ScanGrid {
        ScanGrid::new(32, 33, -4.0, 4.0).unwrap()
    }

    #[test]
    fn slope_examples() {
        let hb: Vec<f64> = (0..7).map(|j| 0.01 * 0.5f64.powi(j)).collect();
        let sq: Vec<f64> = hb.iter().map(|h| h * h).collect();
        assert!((decay_slope(&sq, &hb).unwrap() - 2.0).abs() < 1e-9);
        let c = vec![0.3; 7];
        assert!(decay_slope(&c, &hb).unwrap().abs() < 1e-12);
        let hb36: Vec<f64> = (3..=6).map(|j| 0.01 * 0.5f64.powi(j)).collect();
        let e: Vec<f64> = hb36.iter().map(|h| (-0.01 / h).exp()).collect();
        assert!(decay_slope(&e, &hb36).unwrap() >= 8.0);
        assert!(decay_slope(&e[..3], &hb36[..3]).is_err());
    }

    #[test]
    fn censored_slope_ignores_values_below_floor() {
        let hb: Vec<f64> = (0..7).map(|j| 0.01 * 0.5f64.powi(j)).collect();
        let v: Vec<f64> = hb.iter().map(|h| h.sqrt()).collect();
        let floors = vec![0.0; 7];
        assert!((censored_slope(&v, &floors, &hb) - 0.5).abs() < 1e-12);
        assert_eq!(censored_slope(&v, &[1.0; 7], &hb), f64::INFINITY);
    }

    #[test]
    fn ladder_validation_and_json() {
        assert!(HbarLadder::geometric(0.01, 0.5, 3).is_err());
        assert!(HbarLadder::geometric(0.2, 0.5, 6).is_err());
        assert!(HbarLadder::geometric(0.01, 1.0, 6).is_err());
        let l = HbarLadder::geometric(0.01, 0.5, 6).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<HbarLadder>(&s).unwrap(), l);
        let g: HbarLadder = serde_json::from_str(r#"{"hbar0":0.01,"ratio":0.5,"j_max":6}"#).unwrap();
        assert_eq!(g, l);
    }

    #[test]
    fn probe_norm_closed_form() {
        let policy = QuadPolicy::default();
        for &(eta, h) in &[(0.0, 0.05), (0.7, 0.05), (-3.0, 0.01), (1.0, 0.1)] {
            let q = norm(&QuantumState::wavepacket(0.3, eta, h).unwrap(), &policy).unwrap();
            assert!((wavepacket_norm_sq(eta, h).sqrt() - q).abs() < 1e-12 * q, "{eta} {h}");
        }
    }

    #[test]
    fn fast_path_matches_generic_inner_product() {
        let grid = small_grid();
        let policy = QuadPolicy::default();
        let spec = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::sin_mode(1, 1.0 / TAU), Coupling::Semiclassical)
            .unwrap();
        for state in [
            QuantumState::wavepacket(0.5, 0.8, 0.005).unwrap(),
            crate::states::evolve(&QuantumState::wavepacket(0.1, 0.5, 0.002).unwrap(), &spec),
        ] {
            let s = scan_slice(&state, &grid, &policy).unwrap();
            for &(j, k) in &[(16, 20), (3, 5), (0, 16), (31, 32), (8, 24)] {
                let fast = s.magnitudes[j * grid.n_eta + k];
                let slow = probe_magnitude(&state, grid.y(j), grid.eta(k), &policy).unwrap();
                let tol = 1e-10 * slow.max(1e-6) + s.floors[j * grid.n_eta + k];
                assert!((fast - slow).abs() <= tol, "{j} {k}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn zero_family_has_empty_support() {
        let ladder = HbarLadder::geometric(0.01, 0.5, 4).unwrap();
        let m = correlation_scan(&StateFamily::Zero, &small_grid(), &ladder, &QuadPolicy::default()).unwrap();
        assert!(m.magnitudes.iter().all(|&v| v == 0.0));
        assert!(m.support_cells().is_empty());
        assert!(m.peaks().is_empty());
        assert!(matches!(support_match(&m, &PredictedSupport::Points(vec![(0.5, 0.0)])), Err(Error::EmptySupport)));
    }

    #[test]
    fn wavepacket_scan_peak_and_far_decay() {
        let grid = small_grid();
        let ladder = HbarLadder::geometric(0.01, 0.5, 9).unwrap();
        let fam = StateFamily::Wavepacket { x: 0.5, xi: 0.0 };
        let m = correlation_scan(&fam, &grid, &ladder, &QuadPolicy::default()).unwrap();
        assert!(m.magnitudes.iter().all(|&v| v <= 1.0 + 1e-6));
        let (j, k) = m.argmax(m.smallest_hbar_index());
        assert!(grid.cell_distance(j, k, 0.5, 0.0) <= 1.0);
        let (j, k) = grid.nearest(0.1, 3.0);
        assert!(m.slope(j, k) >= 4.0);
        assert_eq!(m.components().len(), 1);
        let r = support_match(&m, &PredictedSupport::Points(vec![(0.5, 0.0)])).unwrap();
        assert!(r.hit, "{r:?}");
        let miss = support_match(&m, &PredictedSupport::Points(vec![(0.5, 5.0 * grid.eta_step())])).unwrap();
        assert!(!miss.hit);
        let m2 = correlation_scan(&fam, &grid, &ladder, &QuadPolicy::default()).unwrap();
        assert_eq!(m.magnitudes, m2.magnitudes);
    }

    #[test]
    fn predictions_from_the_skew_branches() {
        let zero = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::zero(), Coupling::Fixed { nu: 1.0 }).unwrap();
        let p = predict_support(&zero, &PredictedSupport::Points(vec![(0.6, 1.0)]), 0.5).unwrap();
        let PredictedSupport::Points(pts) = p else { panic!() };
        assert!((pts[0].0 - 0.3).abs() < 1e-15 && (pts[0].1 - 2.0).abs() < 1e-15);
        assert!((pts[1].0 - 0.8).abs() < 1e-15 && (pts[1].1 - 2.0).abs() < 1e-15);
        let sc = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::sin_mode(1, 1.0 / TAU), Coupling::Semiclassical)
            .unwrap();
        let PredictedSupport::Points(pts) =
            predict_support(&sc, &PredictedSupport::Points(vec![(0.0, 0.0)]), 0.5).unwrap()
        else {
            panic!()
        };
        assert!((pts[0].0).abs() < 1e-15 && (pts[0].1 - 1.0).abs() < 1e-15);
        assert!((pts[1].0 - 0.5).abs() < 1e-15 && (pts[1].1 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn graph_prediction_trig_matches_sampled() {
        let u = TrigPoly::from_triples(&[(1, 0.3, -0.2), (2, 0.1, 0.05)]).unwrap();
        let tau = TrigPoly::sin_mode(1, 1.0 / TAU);
        for map in [MapSpec::Doubling, MapSpec::Rotation { alpha: 0.37 }] {
            let spec = EvolutionSpec::new(map.clone(), tau.clone(), Coupling::Semiclassical).unwrap();
            let PredictedSupport::Graph(g) =
                predict_support(&spec, &PredictedSupport::Graph(u.clone().into()), 0.5).unwrap()
            else {
                panic!()
            };
            for i in 0..64 {
                let y = i as f64 / 64.0 + 0.003;
                let direct = u.eval(map.apply(y)) * map.derivative(y) + tau.derivative_at(y);
                assert!((g.eval(y) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heatmap_rules() {
        let grid = ScanGrid::new(16, 16, -1.0, 1.0).unwrap();
        let cells = grid.cells();
        let mut m = MicrosupportMap {
            grid,
            hbars: vec![0.01],
            magnitudes: vec![0.25; cells],
            floors: vec![0.0; cells],
            slopes: vec![0.0; cells],
            support_mask: vec![false; cells],
            failed: vec![false; cells],
            slope_threshold: SLOPE_THRESHOLD,
        };
        let b = m.pgm_bytes(0).unwrap();
        let header = b"P5\n16 16\n255\n";
        assert_eq!(&b[..header.len()], header);
        assert!(b[header.len()..].iter().all(|&p| p == 0));
        m.magnitudes[3 * 16 + 15] = 1.0; // y=3, eta=eta_max
        let b = m.pgm_bytes(0).unwrap();
        let px = &b[header.len()..];
        assert_eq!(px.len(), 256);
        assert_eq!(px.iter().filter(|&&p| p == 255).count(), 1);
        assert_eq!(px[3], 255);
        assert!(m.pgm_bytes(1).is_err());
    }

    #[test]
    fn csv_and_summary_round_trip() {
        let ladder = HbarLadder::geometric(0.01, 0.5, 4).unwrap();
        let m = correlation_scan(&StateFamily::Wavepacket { x: 0.25, xi: 1.0 }, &small_grid(), &ladder, &QuadPolicy::default())
            .unwrap();
        let csv = m.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("hbar,y,eta,magnitude"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[3], m.magnitude(0, 0, 0));
        let s = m.summary(None);
        assert!(!s.peaks.is_empty());
        let back: MapSummary = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let full: MicrosupportMap = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(full, m);
    }
}
