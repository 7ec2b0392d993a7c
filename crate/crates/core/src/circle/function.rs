use serde::{Deserialize, Serialize};

use super::grid::{PiecewiseGrid, Side};
use super::point::reduce;
use super::trig::TrigPoly;
use crate::Result;

/// A real function on the circle: a trigonometric polynomial or a piecewise
/// interpolated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicFunction {
    Trig(TrigPoly),
    Grid(PiecewiseGrid),
}

impl PeriodicFunction {
    pub fn zero() -> Self {
        PeriodicFunction::Trig(TrigPoly::zero())
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.eval(z),
            PeriodicFunction::Grid(g) => g.eval(z),
        }
    }

    /// Derivative; for grids a side is needed exactly at breakpoints.
    pub fn derivative(&self, z: f64, side: Option<Side>) -> Result<f64> {
        match self {
            PeriodicFunction::Trig(p) => Ok(p.derivative_at(z)),
            PeriodicFunction::Grid(g) => g.derivative(z, side),
        }
    }

    /// Derivative that never fails: right limit at breakpoints.
    pub fn derivative_right(&self, z: f64) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.derivative_at(z),
            PeriodicFunction::Grid(g) => g.derivative(z, Some(Side::Right)).unwrap_or(f64::NAN),
        }
    }

    /// `c_0` for polynomials, trapezoid average for grids.
    pub fn mean(&self) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.mean(),
            PeriodicFunction::Grid(g) => g.mean(),
        }
    }

    /// Upper bound (polynomials) or sampled maximum (grids) of `|g|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.sup_bound(),
            PeriodicFunction::Grid(g) => g.sup_abs(),
        }
    }

    pub fn derivative_sup(&self) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.derivative_sup_bound(),
            PeriodicFunction::Grid(g) => g.derivative_sup(),
        }
    }

    /// Lift primitive with value 0 at `z = 0`.
    pub fn antiderivative(&self) -> PhaseFunction {
        match self {
            PeriodicFunction::Trig(p) => {
                let (drift, per) = p.antiderivative_parts();
                PhaseFunction::new(drift, PeriodicFunction::Trig(per))
            }
            PeriodicFunction::Grid(g) => {
                let (drift, per) = g.antiderivative_parts();
                PhaseFunction::new(drift, PeriodicFunction::Grid(per))
            }
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            PeriodicFunction::Trig(_) => &[],
            PeriodicFunction::Grid(g) => g.breakpoints(),
        }
    }
}

impl From<TrigPoly> for PeriodicFunction {
    fn from(p: TrigPoly) -> Self {
        PeriodicFunction::Trig(p)
    }
}

impl From<PiecewiseGrid> for PeriodicFunction {
    fn from(g: PiecewiseGrid) -> Self {
        PeriodicFunction::Grid(g)
    }
}

/// A lift `S(z) = ρ·z + P(z)` with `P` periodic, evaluable on all of ℝ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFunction {
    #[serde(default)]
    pub drift: f64,
    pub periodic: PeriodicFunction,
}

impl PhaseFunction {
    pub fn new(drift: f64, periodic: PeriodicFunction) -> Self {
        PhaseFunction { drift, periodic }
    }

    pub fn zero() -> Self {
        PhaseFunction::new(0.0, PeriodicFunction::zero())
    }

    /// `S(z) = ξ·z`.
    pub fn linear(xi: f64) -> Self {
        PhaseFunction::new(xi, PeriodicFunction::zero())
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.drift * z + self.periodic.eval(reduce(z))
    }

    /// `S′(z) = ρ + P′(z)`, right limit at breakpoints.
    pub fn derivative(&self, z: f64) -> f64 {
        self.drift + self.periodic.derivative_right(reduce(z))
    }

    /// Bound for `sup|S′|`.
    pub fn derivative_sup(&self) -> f64 {
        self.drift.abs() + self.periodic.derivative_sup()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn antiderivative_of_cosine_is_sine_over_two_pi() {
        let u = PeriodicFunction::Trig(TrigPoly::cos_mode(1, 1.0));
        let s = u.antiderivative();
        assert_eq!(s.drift, 0.0);
        for k in 0..256 {
            let z = k as f64 / 256.0;
            assert!((s.eval(z) - (TAU * z).sin() / TAU).abs() < 1e-15);
            assert!((s.derivative(z) - u.eval(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn lift_consistency_under_integer_shift() {
        let u = PeriodicFunction::Trig(TrigPoly::constant(3.0).add(&TrigPoly::sin_mode(2, 0.4)));
        let s = u.antiderivative();
        assert!((s.drift - 3.0).abs() < 1e-15);
        for z in [0.1, 0.45, 0.9] {
            assert!((s.eval(z - 2.0) - (s.eval(z) - 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn json_tagging() {
        let f = PeriodicFunction::Trig(TrigPoly::cos_mode(1, 0.5));
        let v = serde_json::to_value(&f).unwrap();
        assert!(v.get("trig").is_some());
        let s = PhaseFunction::new(1.0, f);
        let back: PhaseFunction = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
