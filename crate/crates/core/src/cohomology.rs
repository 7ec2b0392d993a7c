//! Rotation coboundaries `w(z+α) − w(z) = −τ(z)` by Fourier division, and
//! residual checks for `w`, `u = w′` over any circle map.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circle::{MapSpec, PeriodicFunction, TrigPoly};
use crate::{Complex64, Error, Result};

pub const MEAN_TOL: f64 = 1e-12;
pub const RESONANCE_TOL: f64 = 1e-13;
pub const RESIDUAL_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoboundarySolution {
    pub alpha: f64,
    #[serde(rename = "w_coeffs")]
    pub w: TrigPoly,
    #[serde(rename = "u_coeffs")]
    pub u: TrigPoly,
    pub residual: f64,
    /// `min |e^{2πinα} − 1|` over the modes of `τ`; `None` when `τ ≡ 0`.
    pub smallest_divisor: Option<f64>,
}

/// `ŵ_n = −τ̂_n/(e^{2πinα} − 1)`, `ŵ₀ = 0`.
pub fn solve_rotation_coboundary(tau: &TrigPoly, alpha: f64) -> Result<CoboundarySolution> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be finite".into()));
    }
    let mean = tau.mean();
    if mean.abs() > MEAN_TOL {
        return Err(Error::Obstruction(mean));
    }
    let c = tau.nonnegative_coeffs();
    let mut w = vec![Complex64::new(0.0, 0.0); c.len().max(1)];
    let mut smallest: Option<f64> = None;
    for n in 1..c.len() {
        if c[n] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let divisor = Complex64::from_polar(1.0, TAU * n as f64 * alpha) - 1.0;
        let size = divisor.norm();
        if size < RESONANCE_TOL {
            return Err(Error::Resonance { mode: n as i64, divisor: size });
        }
        smallest = Some(smallest.map_or(size, |s: f64| s.min(size)));
        w[n] = -c[n] / divisor;
    }
    let w = TrigPoly::from_nonnegative(w)?;
    let u = w.derivative();
    let residual = verify_coboundary(&w, tau, &MapSpec::Rotation { alpha }, RESIDUAL_GRID);
    Ok(CoboundarySolution { alpha, w, u, residual, smallest_divisor: smallest })
}

/// `max |w(f(z)) − w(z) + τ(z)|` over an `m`-grid.
pub fn verify_coboundary(w: &TrigPoly, tau: &TrigPoly, f: &MapSpec, m: usize) -> f64 {
    (0..m)
        .map(|j| {
            let z = j as f64 / m as f64;
            (w.eval(f.apply(z)) - w.eval(z) + tau.eval(z)).abs()
        })
        .fold(0.0, f64::max)
}

/// `max |u(f(z)) − (u(z) − τ′(z))/f′(z)|` over an `m`-grid.
pub fn graph_invariance_residual(u: &PeriodicFunction, f: &MapSpec, tau: &TrigPoly, m: usize) -> Result<f64> {
    let dtau = tau.derivative();
    let mut worst = 0.0f64;
    for j in 0..m {
        let z = j as f64 / m as f64;
        let d = f.derivative(z);
        if !(d > 0.0) {
            return Err(Error::InvalidMap(format!("f' = {d} at z = {z}; need f' > 0")));
        }
        worst = worst.max((u.eval(f.apply(z)) - (u.eval(z) - dtau.eval(z)) / d).abs());
    }
    Ok(worst)
}
