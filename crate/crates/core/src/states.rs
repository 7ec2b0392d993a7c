//! Periodic Gaussian wavepackets, Lagrangian states and the evolution
//! `φ ↦ φ(f(z))·e^{iντ(z)}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{reduce, MapSpec, PhaseFunction, TrigPoly};
use crate::{Error, Result};

/// Largest admissible semiclassical parameter.
pub const HBAR_MAX: f64 = 0.1;

/// Relative size of the largest dropped Gaussian term.
pub const TRUNCATION_EPS: f64 = 1e-18;

/// `R(ħ) = √(4ħ·ln(1/ε))`: copies with `|z − k − x| > R` are dropped.
pub fn truncation_radius(hbar: f64) -> f64 {
    (4.0 * hbar * (1.0 / TRUNCATION_EPS).ln()).sqrt()
}

/// Inclusive range of `k` with `|z − k − x| ≤ R(ħ)`.
pub fn copy_range(z: f64, x: f64, hbar: f64) -> (i64, i64) {
    let r = truncation_radius(hbar);
    ((z - x - r).ceil() as i64, (z - x + r).floor() as i64)
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar <= HBAR_MAX {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("hbar must lie in (0, {HBAR_MAX}], got {hbar}")))
    }
}

/// Coherent state centred at `(x, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketParams {
    pub x: f64,
    pub xi: f64,
    pub hbar: f64,
}

impl WavepacketParams {
    pub fn new(x: f64, xi: f64, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        if !x.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidInput("non-finite wavepacket centre".into()));
        }
        Ok(WavepacketParams { x: reduce(x), xi, hbar })
    }
}

/// `Σ_k e^{iξ(z−k)/ħ} e^{−(z−k−x)²/4ħ}` over an explicit range of `k`.
pub fn wavepacket_sum(p: &WavepacketParams, z: f64, k_min: i64, k_max: i64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in k_min..=k_max {
        let t = z - k as f64;
        let d = t - p.x;
        acc += Complex64::from_polar((-d * d / (4.0 * p.hbar)).exp(), p.xi * t / p.hbar);
    }
    acc
}

/// Periodic Gaussian wavepacket `φ_{x,ξ}(z)`, truncated at `R(ħ)`.
pub fn eval_wavepacket(p: &WavepacketParams, z: f64) -> Complex64 {
    let z = reduce(z);
    let (lo, hi) = copy_range(z, p.x, p.hbar);
    wavepacket_sum(p, z, lo, hi)
}

/// Wavepacket-weighted phase `e^{iS(z)/ħ}` centred at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianParams {
    #[serde(rename = "S")]
    pub phase: PhaseFunction,
    pub x: f64,
    pub hbar: f64,
}

impl LagrangianParams {
    pub fn new(phase: PhaseFunction, x: f64, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        Ok(LagrangianParams { phase, x: reduce(x), hbar })
    }
}

/// `Σ_k e^{iS(z−k)/ħ} e^{−(z−k−x)²/4ħ}` over an explicit range of `k`.
pub fn lagrangian_sum(p: &LagrangianParams, z: f64, k_min: i64, k_max: i64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in k_min..=k_max {
        let t = z - k as f64;
        let d = t - p.x;
        acc += Complex64::from_polar((-d * d / (4.0 * p.hbar)).exp(), p.phase.eval(t) / p.hbar);
    }
    acc
}

pub fn eval_lagrangian(p: &LagrangianParams, z: f64) -> Complex64 {
    let z = reduce(z);
    let (lo, hi) = copy_range(z, p.x, p.hbar);
    lagrangian_sum(p, z, lo, hi)
}

/// How the potential phase scales with `ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Fixed { nu: f64 },
    /// `ν = 1/ħ`.
    Semiclassical,
}

impl Coupling {
    pub fn nu(&self, hbar: f64) -> f64 {
        match self {
            Coupling::Fixed { nu } => *nu,
            Coupling::Semiclassical => 1.0 / hbar,
        }
    }
}

/// The operator `F̂_ν φ(z) = φ(f(z))·e^{iντ(z)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub map: MapSpec,
    pub tau: TrigPoly,
    pub coupling: Coupling,
}

impl EvolutionSpec {
    pub fn new(map: MapSpec, tau: TrigPoly, coupling: Coupling) -> Result<Self> {
        map.validate()?;
        if let Coupling::Fixed { nu } = coupling {
            if !nu.is_finite() {
                return Err(Error::InvalidInput("non-finite coupling".into()));
            }
        }
        Ok(EvolutionSpec { map, tau, coupling })
    }

    /// Bound on the local frequency (times `ħ`) of an evolved state whose
    /// parent has bound `parent`.
    pub fn phase_scale_bound(&self, parent: f64, hbar: f64) -> f64 {
        let tau_part = self.tau.derivative_sup_bound() * self.coupling.nu(hbar) * hbar;
        self.map.derivative_sup() * parent + tau_part
    }
}

/// An evaluable state on the circle carrying its `ħ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantumState {
    Wavepacket(WavepacketParams),
    Lagrangian(LagrangianParams),
    Evolved {
        parent: Box<QuantumState>,
        #[serde(flatten)]
        spec: EvolutionSpec,
    },
    /// `Σ c_n e^{2πinz}` with arbitrary complex coefficients `(n, re, im)`.
    Fourier { hbar: f64, modes: Vec<(i64, f64, f64)> },
    Zero { hbar: f64 },
}

impl QuantumState {
    pub fn wavepacket(x: f64, xi: f64, hbar: f64) -> Result<Self> {
        Ok(QuantumState::Wavepacket(WavepacketParams::new(x, xi, hbar)?))
    }

    pub fn lagrangian(phase: PhaseFunction, x: f64, hbar: f64) -> Result<Self> {
        Ok(QuantumState::Lagrangian(LagrangianParams::new(phase, x, hbar)?))
    }

    pub fn hbar(&self) -> f64 {
        match self {
            QuantumState::Wavepacket(p) => p.hbar,
            QuantumState::Lagrangian(p) => p.hbar,
            QuantumState::Evolved { parent, .. } => parent.hbar(),
            QuantumState::Fourier { hbar, .. } | QuantumState::Zero { hbar } => *hbar,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QuantumState::Wavepacket(_) => "wavepacket",
            QuantumState::Lagrangian(_) => "lagrangian",
            QuantumState::Evolved { .. } => "evolved",
            QuantumState::Fourier { .. } => "fourier",
            QuantumState::Zero { .. } => "zero",
        }
    }

    pub fn eval(&self, z: f64) -> Complex64 {
        match self {
            QuantumState::Wavepacket(p) => eval_wavepacket(p, z),
            QuantumState::Lagrangian(p) => eval_lagrangian(p, z),
            QuantumState::Evolved { parent, spec } => {
                let nu = spec.coupling.nu(parent.hbar());
                parent.eval(spec.map.apply(z)) * Complex64::from_polar(1.0, nu * spec.tau.eval(z))
            }
            QuantumState::Fourier { modes, .. } => {
                let z = reduce(z);
                modes
                    .iter()
                    .map(|&(n, re, im)| {
                        Complex64::new(re, im)
                            * Complex64::from_polar(1.0, std::f64::consts::TAU * n as f64 * z)
                    })
                    .sum()
            }
            QuantumState::Zero { .. } => Complex64::new(0.0, 0.0),
        }
    }

    /// Bound for `ħ·|d/dz arg φ|`, used to size quadrature grids.
    pub fn phase_scale_bound(&self) -> f64 {
        match self {
            QuantumState::Wavepacket(p) => p.xi.abs(),
            QuantumState::Lagrangian(p) => p.phase.derivative_sup(),
            QuantumState::Evolved { parent, spec } => {
                spec.phase_scale_bound(parent.phase_scale_bound(), parent.hbar())
            }
            QuantumState::Fourier { hbar, modes } => {
                let n = modes.iter().map(|m| m.0.unsigned_abs()).max().unwrap_or(0);
                std::f64::consts::TAU * n as f64 * hbar
            }
            QuantumState::Zero { .. } => 0.0,
        }
    }
}

/// `F̂_ν` applied to `state`.
pub fn evolve(state: &QuantumState, spec: &EvolutionSpec) -> QuantumState {
    QuantumState::Evolved { parent: Box::new(state.clone()), spec: spec.clone() }
}

/// A state for every `ħ` of a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateFamily {
    Wavepacket {
        x: f64,
        xi: f64,
    },
    Lagrangian {
        #[serde(rename = "S")]
        phase: PhaseFunction,
        x: f64,
    },
    Evolved {
        parent: Box<StateFamily>,
        #[serde(flatten)]
        spec: EvolutionSpec,
    },
    Zero,
}

impl StateFamily {
    pub fn at(&self, hbar: f64) -> Result<QuantumState> {
        match self {
            StateFamily::Wavepacket { x, xi } => QuantumState::wavepacket(*x, *xi, hbar),
            StateFamily::Lagrangian { phase, x } => QuantumState::lagrangian(phase.clone(), *x, hbar),
            StateFamily::Evolved { parent, spec } => Ok(evolve(&parent.at(hbar)?, spec)),
            StateFamily::Zero => {
                check_hbar(hbar)?;
                Ok(QuantumState::Zero { hbar })
            }
        }
    }

    pub fn evolved(self, spec: EvolutionSpec) -> StateFamily {
        StateFamily::Evolved { parent: Box::new(self), spec }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::PeriodicFunction;
    use std::f64::consts::TAU;

    fn wp(x: f64, xi: f64, hbar: f64) -> WavepacketParams {
        WavepacketParams::new(x, xi, hbar).unwrap()
    }

    #[test]
    fn centre_value_and_symmetry() {
        let p = wp(0.5, 0.0, 0.01);
        let v = eval_wavepacket(&p, 0.5);
        let oracle = wavepacket_sum(&p, 0.5, -50, 50);
        assert!(v.norm() >= 1.0);
        assert!((v - oracle).norm() < 1e-15);
        for hbar in [0.1, 0.01, 0.001] {
            let p = wp(0.5, 0.0, hbar);
            let (a, b) = (eval_wavepacket(&p, 0.6).norm(), eval_wavepacket(&p, 0.4).norm());
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
        }
    }

    #[test]
    fn two_equidistant_copies() {
        // z = 0.7 is at distance 0.5 from both x = 0.2 and x + 1
        let p = wp(0.2, 1.0, 0.005);
        let v = eval_wavepacket(&p, 0.7).norm();
        let oracle = wavepacket_sum(&p, 0.7, -50, 50).norm();
        assert!((v - oracle).abs() <= 1e-12 * oracle);
        let closed = 2.0 * (100.0f64).cos().abs() * (-12.5f64).exp();
        assert!((v - closed).abs() <= 1e-9 * closed);
    }

    #[test]
    fn modulus_independent_of_momentum() {
        // exact while a single copy dominates; overlapping copies interfere at
        // the level of e^{-1/16ħ}, far below 1e-14 at this ħ
        let (a, b) = (wp(0.3, 0.0, 0.001), wp(0.3, 7.0, 0.001));
        for j in 0..128 {
            let z = j as f64 / 128.0;
            let (m0, m7) = (eval_wavepacket(&a, z).norm(), eval_wavepacket(&b, z).norm());
            assert!((m0 - m7).abs() <= 1e-14);
        }
    }

    #[test]
    fn linear_phase_lagrangian_is_wavepacket() {
        let l = LagrangianParams::new(PhaseFunction::linear(2.0), 0.3, 0.01).unwrap();
        let w = wp(0.3, 2.0, 0.01);
        for j in 0..64 {
            let z = j as f64 / 64.0;
            assert!((eval_lagrangian(&l, z) - eval_wavepacket(&w, z)).norm() < 1e-14);
        }
    }

    #[test]
    fn quadratic_like_phase_matches_direct_sum() {
        // S = z²/2 on [0,1) realised as drift 1/2 plus periodic (z²−z)/2
        let m = 2048;
        let grid = crate::circle::PiecewiseGrid::from_fn(m, vec![0.0], |z| 0.5 * (z * z - z)).unwrap();
        let s = PhaseFunction::new(0.5, PeriodicFunction::Grid(grid));
        let l = LagrangianParams::new(s, 0.5, 0.01).unwrap();
        let v = eval_lagrangian(&l, 0.5);
        let oracle = lagrangian_sum(&l, 0.5, -50, 50);
        assert!((v - oracle).norm() < 1e-12);
        let k0 = Complex64::from_polar(1.0, 0.125 / 0.01);
        assert!((v - k0).norm() < 1e-10);
    }

    #[test]
    fn evolution_examples() {
        let s = QuantumState::wavepacket(0.4, 1.0, 0.01).unwrap();
        let plain = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::zero(), Coupling::Semiclassical).unwrap();
        let e = evolve(&s, &plain);
        for j in 0..32 {
            let z = j as f64 / 32.0;
            assert_eq!(e.eval(z), s.eval(MapSpec::Doubling.apply(z)));
        }
        let tau = TrigPoly::cos_mode(1, 1.0).add(&TrigPoly::sin_mode(2, 0.3));
        let id = EvolutionSpec::new(MapSpec::Rotation { alpha: 0.0 }, tau.clone(), Coupling::Fixed { nu: 3.0 }).unwrap();
        let e = evolve(&s, &id);
        for j in 0..32 {
            let z = j as f64 / 32.0;
            let want = s.eval(z) * Complex64::from_polar(1.0, 3.0 * tau.eval(z));
            assert!((e.eval(z) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn semiclassical_evolution_preserves_modulus() {
        let s = QuantumState::wavepacket(0.6, 1.0, 0.01).unwrap();
        let spec = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::cos_mode(1, 1.0), Coupling::Semiclassical).unwrap();
        let e = evolve(&s, &spec);
        for j in 0..128 {
            let z = j as f64 / 128.0;
            let (a, b) = (e.eval(z).norm(), s.eval((2.0 * z) % 1.0).norm());
            assert!((a - b).abs() <= 1e-14 * b.max(1e-300));
        }
    }

    #[test]
    fn evolution_composes() {
        let s = QuantumState::wavepacket(0.25, -0.5, 0.02).unwrap();
        let tau = TrigPoly::sin_mode(1, 1.0 / TAU);
        let spec = EvolutionSpec::new(MapSpec::Rotation { alpha: 0.3 }, tau.clone(), Coupling::Fixed { nu: 2.5 }).unwrap();
        let twice = evolve(&evolve(&s, &spec), &spec);
        for j in 0..64 {
            let z = j as f64 / 64.0;
            let fz = spec.map.apply(z);
            let want = s.eval(spec.map.apply(fz)) * Complex64::from_polar(1.0, 2.5 * (tau.eval(z) + tau.eval(fz)));
            assert!((twice.eval(z) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn periodic_in_z() {
        let p = wp(0.05, 1.3, 1e-4);
        let z = 0.0;
        let zl = 1.0 - f64::EPSILON;
        assert!((eval_wavepacket(&p, z) - eval_wavepacket(&p, zl)).norm() < 1e-10);
    }

    #[test]
    fn hbar_range_enforced() {
        assert!(WavepacketParams::new(0.5, 0.0, 0.0).is_err());
        assert!(WavepacketParams::new(0.5, 0.0, 0.2).is_err());
        assert!(WavepacketParams::new(0.5, 0.0, 0.1).is_ok());
    }

    #[test]
    fn descriptors_round_trip() {
        let s = QuantumState::wavepacket(0.5, 0.8, 0.01).unwrap();
        let spec = EvolutionSpec::new(MapSpec::Doubling, TrigPoly::sin_mode(1, 0.1), Coupling::Semiclassical).unwrap();
        let e = evolve(&s, &spec);
        let json = serde_json::to_string(&e).unwrap();
        let back: QuantumState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["kind"], "evolved");
        assert_eq!(v["parent"]["xi"], 0.8);
        assert!(v.get("map").is_some() && v.get("tau").is_some() && v.get("coupling").is_some());

        let fam = StateFamily::Wavepacket { x: 0.6, xi: 1.0 }.evolved(spec);
        let back: StateFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
    }
}
