use serde::{Deserialize, Serialize};

use super::point::{reduce, CirclePoint};
use super::trig::TrigPoly;
use crate::{Error, Result};

/// Circle dynamics `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// `f(z) = 2z mod 1`.
    Doubling,
    /// `f(z) = z + α mod 1`.
    Rotation { alpha: f64 },
    /// `f(z) = z + α + ε·p(z) mod 1`.
    #[serde(rename = "perturbed")]
    PerturbedRotation { alpha: f64, eps: f64, p: TrigPoly },
}

const VERIFY_GRID: usize = 4096;
const BISECTION_TOL: f64 = 1e-14;

impl MapSpec {
    /// Checks finiteness and, for perturbed rotations, `f′ > 0` on a grid.
    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::Doubling => Ok(()),
            MapSpec::Rotation { alpha } if alpha.is_finite() => Ok(()),
            MapSpec::Rotation { alpha } => Err(Error::InvalidMap(format!("rotation angle {alpha}"))),
            MapSpec::PerturbedRotation { alpha, eps, p } => {
                if !alpha.is_finite() || !eps.is_finite() {
                    return Err(Error::InvalidMap("non-finite perturbed rotation parameters".into()));
                }
                for j in 0..VERIFY_GRID {
                    let z = j as f64 / VERIFY_GRID as f64;
                    let d = 1.0 + eps * p.derivative_at(z);
                    if d <= 0.0 {
                        return Err(Error::InvalidMap(format!(
                            "perturbed rotation is not orientation preserving: f'({z}) = {d}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Lift `F(z)` without reduction.
    pub fn lift(&self, z: f64) -> f64 {
        match self {
            MapSpec::Doubling => 2.0 * z,
            MapSpec::Rotation { alpha } => z + alpha,
            MapSpec::PerturbedRotation { alpha, eps, p } => z + alpha + eps * p.eval(z),
        }
    }

    pub fn eval(&self, z: CirclePoint) -> CirclePoint {
        CirclePoint::new(self.lift(z.value()))
    }

    /// `f(z)` reduced to `[0,1)`.
    pub fn apply(&self, z: f64) -> f64 {
        reduce(self.lift(z))
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            MapSpec::Doubling => 2.0,
            MapSpec::Rotation { .. } => 1.0,
            MapSpec::PerturbedRotation { eps, p, .. } => 1.0 + eps * p.derivative_at(z),
        }
    }

    /// Upper bound for `sup f′`.
    pub fn derivative_sup(&self) -> f64 {
        match self {
            MapSpec::Doubling => 2.0,
            MapSpec::Rotation { .. } => 1.0,
            MapSpec::PerturbedRotation { eps, p, .. } => 1.0 + eps.abs() * p.derivative_sup_bound(),
        }
    }

    pub fn is_doubling(&self) -> bool {
        matches!(self, MapSpec::Doubling)
    }

    /// All `y` with `f(y) = x`, in increasing order.
    pub fn preimages(&self, x: CirclePoint) -> Result<Vec<CirclePoint>> {
        let x = x.value();
        match self {
            MapSpec::Doubling => Ok(vec![CirclePoint::new(x / 2.0), CirclePoint::new(x / 2.0 + 0.5)]),
            MapSpec::Rotation { alpha } => Ok(vec![CirclePoint::new(x - alpha)]),
            MapSpec::PerturbedRotation { alpha, eps, p } => {
                let delta = eps.abs() * p.sup_bound();
                let (mut lo, mut hi) = (x - alpha - delta, x - alpha + delta);
                let g = |y: f64| self.lift(y) - x;
                let (glo, ghi) = (g(lo), g(hi));
                if glo > 0.0 || ghi < 0.0 {
                    return Err(Error::InvalidMap(format!(
                        "preimage bisection failed at x={x}: lift is not monotone"
                    )));
                }
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(vec![CirclePoint::new(0.5 * (lo + hi))])
            }
        }
    }
}

/// Birkhoff average `(F^n(z₀) − z₀)/n` of the lift from `z₀ = 0`.
pub fn rotation_number(m: &MapSpec, n_iter: usize) -> Result<f64> {
    if m.is_doubling() {
        return Err(Error::NotHomeomorphism(
            "rotation number is undefined for the doubling map".into(),
        ));
    }
    if n_iter < 1000 {
        return Err(Error::InvalidInput(format!("n_iter must be >= 1000, got {n_iter}")));
    }
    // Track the integer part separately so the fractional part keeps full precision.
    let mut z = 0.0f64;
    let mut turns = 0.0f64;
    for _ in 0..n_iter {
        let next = m.lift(z);
        let whole = next.floor();
        turns += whole;
        z = next - whole;
    }
    Ok((turns + z) / n_iter as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    fn perturbed() -> MapSpec {
        MapSpec::PerturbedRotation { alpha: golden(), eps: 0.1, p: TrigPoly::sin_mode(1, 1.0) }
    }

    #[test]
    fn eval_examples() {
        let d = MapSpec::Doubling;
        assert!((d.apply(0.3) - 0.6).abs() < 1e-15);
        assert_eq!(d.apply(0.75), 0.5);
        let r = MapSpec::Rotation { alpha: 0.25 };
        assert!((r.apply(0.9) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn preimage_examples() {
        let d = MapSpec::Doubling;
        let p = d.preimages(0.6.into()).unwrap();
        assert!((p[0].value() - 0.3).abs() < 1e-15 && (p[1].value() - 0.8).abs() < 1e-15);
        let p = d.preimages(0.0.into()).unwrap();
        assert_eq!((p[0].value(), p[1].value()), (0.0, 0.5));
        let r = MapSpec::Rotation { alpha: 0.25 };
        assert!((r.preimages(0.1.into()).unwrap()[0].value() - 0.85).abs() < 1e-12);
    }

    #[test]
    fn preimages_invert_eval_on_grid() {
        for m in [MapSpec::Doubling, MapSpec::Rotation { alpha: 0.3 }, perturbed()] {
            for j in 0..1024 {
                let z = CirclePoint::new(j as f64 / 1024.0);
                let pre = m.preimages(m.eval(z)).unwrap();
                assert!(pre.iter().any(|y| y.distance(z) <= 1e-12), "{m:?} at {z:?}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let h = 1e-6;
        for m in [MapSpec::Doubling, MapSpec::Rotation { alpha: 0.3 }, perturbed()] {
            for j in 0..64 {
                let z = j as f64 / 64.0 + 0.01;
                let fd = (m.lift(z + h) - m.lift(z - h)) / (2.0 * h);
                let d = m.derivative(z);
                assert!((fd - d).abs() <= 1e-6 * d.abs(), "{m:?} z={z}");
            }
        }
        // 1 + 0.1·p′(0) with p = sin(2π·), against a central difference
        let m = perturbed();
        let fd = (m.lift(1e-5) - m.lift(-1e-5)) / 2e-5;
        assert!((m.derivative(0.0) - fd).abs() < 1e-8);
        assert!((m.derivative(0.0) - (1.0 + 0.1 * std::f64::consts::TAU)).abs() < 1e-14);
    }

    #[test]
    fn validation_rejects_folding_perturbation() {
        let bad = MapSpec::PerturbedRotation { alpha: 0.3, eps: 0.5, p: TrigPoly::sin_mode(1, 1.0) };
        assert!(bad.validate().is_err());
        assert!(perturbed().validate().is_ok());
    }

    #[test]
    fn rotation_numbers() {
        let a = 0.381_966_011_250_105_1;
        let r = rotation_number(&MapSpec::Rotation { alpha: a }, 100_000).unwrap();
        assert!((r - a).abs() < 1e-5);
        let r = rotation_number(&MapSpec::Rotation { alpha: 0.5 }, 10_000).unwrap();
        assert!((r - 0.5).abs() < 1e-4);
        assert!(matches!(rotation_number(&MapSpec::Doubling, 10_000), Err(Error::NotHomeomorphism(_))));
        assert!(rotation_number(&MapSpec::Rotation { alpha: 0.5 }, 10).is_err());
    }

    #[test]
    fn json_tags() {
        let s = serde_json::to_string(&MapSpec::Rotation { alpha: 0.25 }).unwrap();
        assert_eq!(s, r#"{"kind":"rotation","alpha":0.25}"#);
        let m: MapSpec = serde_json::from_str(r#"{"kind":"doubling"}"#).unwrap();
        assert_eq!(m, MapSpec::Doubling);
        let m: MapSpec =
            serde_json::from_str(r#"{"kind":"perturbed","alpha":0.3,"eps":0.01,"p":[[1,0,-0.5]]}"#).unwrap();
        assert!(matches!(m, MapSpec::PerturbedRotation { .. }));
    }
}
