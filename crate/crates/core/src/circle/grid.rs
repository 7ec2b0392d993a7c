use serde::{Deserialize, Serialize};

use super::point::{reduce, CIRCLE_TOL};
use crate::{Error, Result};

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Periodic function sampled at `z_j = j/M`, smooth between breakpoints.
///
/// Evaluation uses degree-4 Lagrange interpolation on the 5 nearest samples
/// inside the piece containing `z` (fewer if the piece holds fewer samples).
/// Samples lying exactly on a breakpoint belong to both adjacent pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct PiecewiseGrid {
    samples: Vec<f64>,
    breakpoints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(rename = "M")]
    m: usize,
    samples: Vec<f64>,
    #[serde(default)]
    breakpoints: Vec<f64>,
}

impl TryFrom<GridRepr> for PiecewiseGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        if r.samples.len() != r.m {
            return Err(Error::InvalidInput(format!(
                "M = {} but {} samples given",
                r.m,
                r.samples.len()
            )));
        }
        PiecewiseGrid::new(r.samples, r.breakpoints)
    }
}

impl From<PiecewiseGrid> for GridRepr {
    fn from(g: PiecewiseGrid) -> Self {
        GridRepr { m: g.samples.len(), samples: g.samples, breakpoints: g.breakpoints }
    }
}

const STENCIL: usize = 5;

impl PiecewiseGrid {
    pub fn new(samples: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        if samples.len() < 16 {
            return Err(Error::InvalidInput(format!(
                "piecewise grid needs M >= 16 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid sample".into()));
        }
        let mut bps: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut sorted = breakpoints;
        if sorted.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("non-finite breakpoint".into()));
        }
        for b in sorted.iter_mut() {
            *b = reduce(*b);
        }
        sorted.sort_by(f64::total_cmp);
        for b in sorted {
            match bps.last() {
                Some(&last) if b - last <= CIRCLE_TOL => {}
                _ => bps.push(b),
            }
        }
        if bps.len() > 1 && bps[0] + 1.0 - bps[bps.len() - 1] <= CIRCLE_TOL {
            bps.pop();
        }
        Ok(PiecewiseGrid { samples, breakpoints: bps })
    }

    /// Samples `f(j/M)` for `j = 0..M`.
    pub fn from_fn(m: usize, breakpoints: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..m).map(|j| f(j as f64 / m as f64)).collect();
        Self::new(samples, breakpoints)
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.m() as f64
    }

    /// Index of the breakpoint within tolerance of `z`, if any.
    fn breakpoint_at(&self, z: f64) -> Option<usize> {
        self.breakpoints
            .iter()
            .position(|&b| super::point::circle_distance(b, z) <= CIRCLE_TOL)
    }

    /// Piece containing `z` as a lift interval `(lo, hi)` with `lo ≤ z ≤ hi`
    /// after shifting `z` to the returned lift `zl`.
    fn piece(&self, z: f64, side: Side) -> (f64, f64, f64) {
        let bps = &self.breakpoints;
        let nb = bps.len();
        if nb == 0 {
            return (f64::NEG_INFINITY, f64::INFINITY, z);
        }
        let z = match self.breakpoint_at(z) {
            Some(i) => bps[i],
            None => z,
        };
        // index of first breakpoint strictly greater than z (Right) or >= z (Left)
        let k = match side {
            Side::Right => bps.partition_point(|&b| b <= z),
            Side::Left => bps.partition_point(|&b| b < z),
        };
        let lo = if k == 0 { bps[nb - 1] - 1.0 } else { bps[k - 1] };
        let hi = if k == nb { bps[0] + 1.0 } else { bps[k] };
        (lo, hi, z)
    }

    /// Stencil start index (as a lift index) and length for evaluation at lift `zl`
    /// inside the piece `(lo, hi)`.
    fn stencil(&self, lo: f64, hi: f64, zl: f64) -> (i64, usize) {
        let m = self.m() as f64;
        let centre = (zl * m).round() as i64 - 2;
        if lo == f64::NEG_INFINITY {
            return (centre, STENCIL);
        }
        let jmin = (lo * m - 1e-9).ceil() as i64;
        let jmax = (hi * m + 1e-9).floor() as i64;
        let count = (jmax - jmin + 1).max(0) as usize;
        if count >= STENCIL {
            (centre.clamp(jmin, jmax - STENCIL as i64 + 1), STENCIL)
        } else if count >= 1 {
            (jmin, count)
        } else {
            ((zl * m).floor() as i64, 2)
        }
    }

    fn sample(&self, j: i64) -> f64 {
        let m = self.m() as i64;
        self.samples[j.rem_euclid(m) as usize]
    }

    /// Value and first derivative of the local interpolant.
    fn local(&self, z: f64, side: Side) -> (f64, f64) {
        let z = reduce(z);
        let (lo, hi, zl) = self.piece(z, side);
        let (start, len) = self.stencil(lo, hi, zl);
        let m = self.m() as f64;
        // local coordinate: nodes at t = 0, 1, .., len-1
        let t = zl * m - start as f64;
        let mut dd = [0.0f64; STENCIL];
        for (i, d) in dd.iter_mut().enumerate().take(len) {
            *d = self.sample(start + i as i64);
        }
        for level in 1..len {
            for i in (level..len).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / level as f64;
            }
        }
        let mut p = dd[len - 1];
        let mut dp = 0.0;
        for i in (0..len - 1).rev() {
            dp = dp * (t - i as f64) + p;
            p = p * (t - i as f64) + dd[i];
        }
        (p, dp * m)
    }

    /// Value at `z`; at a breakpoint the right-hand piece is used.
    pub fn eval(&self, z: f64) -> f64 {
        self.local(z, Side::Right).0
    }

    pub fn eval_side(&self, z: f64, side: Side) -> f64 {
        self.local(z, side).0
    }

    /// Derivative at `z`. Exactly at a breakpoint a side is required.
    pub fn derivative(&self, z: f64, side: Option<Side>) -> Result<f64> {
        let z = reduce(z);
        match (self.breakpoint_at(z), side) {
            (Some(i), None) => Err(Error::AtBreakpoint(self.breakpoints[i])),
            (_, s) => Ok(self.local(z, s.unwrap_or(Side::Right)).1),
        }
    }

    /// Trapezoid average of the samples.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.m() as f64
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest derivative magnitude seen at nodes and cell midpoints (both sides).
    pub fn derivative_sup(&self) -> f64 {
        let m = self.m();
        let mut best = 0.0f64;
        for j in 0..m {
            for z in [j as f64 / m as f64, (j as f64 + 0.5) / m as f64] {
                for side in [Side::Left, Side::Right] {
                    best = best.max(self.local(z, side).1.abs());
                }
            }
        }
        best
    }

    /// Exact integral of the interpolant over `[0, 1)` together with the
    /// primitive sampled at every node (`G(0) = 0`).
    fn primitive_at_nodes(&self) -> (f64, Vec<f64>) {
        // 3-point Gauss-Legendre is exact for the degree-4 interpolant on any
        // sub-interval where the stencil is fixed.
        const GL_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const GL_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let m = self.m();
        let mf = m as f64;
        let mut out = Vec::with_capacity(m);
        let mut acc = 0.0;
        for j in 0..m {
            out.push(acc);
            let a = j as f64 / mf;
            let b = (j + 1) as f64 / mf;
            let mut cuts = vec![a, (j as f64 + 0.5) / mf, b];
            for &bp in &self.breakpoints {
                if bp > a && bp < b {
                    cuts.push(bp);
                }
            }
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi - lo <= 0.0 {
                    continue;
                }
                let c = 0.5 * (lo + hi);
                let r = 0.5 * (hi - lo);
                for k in 0..3 {
                    acc += GL_W[k] * r * self.eval(c + r * GL_X[k]);
                }
            }
        }
        (acc, out)
    }

    /// Primitive with value 0 at `z = 0`, split as `ρ·z + P(z)`: `ρ` is the
    /// exact integral of the interpolant and `P` is sampled on the same grid
    /// with the same breakpoints.
    pub fn antiderivative_parts(&self) -> (f64, PiecewiseGrid) {
        let (total, g) = self.primitive_at_nodes();
        let m = self.m() as f64;
        let samples = g.iter().enumerate().map(|(j, v)| v - total * j as f64 / m).collect();
        let p = PiecewiseGrid { samples, breakpoints: self.breakpoints.clone() };
        (total, p)
    }

    /// Pointwise affine map `a·g + b` keeping the breakpoints.
    pub fn affine(&self, a: f64, b: f64) -> PiecewiseGrid {
        PiecewiseGrid {
            samples: self.samples.iter().map(|v| a * v + b).collect(),
            breakpoints: self.breakpoints.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn abs_kink_one_sided_derivatives() {
        let g = PiecewiseGrid::from_fn(512, vec![0.5, 0.0], |z| (z - 0.5).abs()).unwrap();
        assert!((g.derivative(0.5, Some(Side::Left)).unwrap() + 1.0).abs() < 1e-6);
        assert!((g.derivative(0.5, Some(Side::Right)).unwrap() - 1.0).abs() < 1e-6);
        assert!(matches!(g.derivative(0.5, None), Err(Error::AtBreakpoint(_))));
        assert!((g.eval(0.3) - 0.2).abs() < 1e-13);
        assert!((g.eval(0.77) - 0.27).abs() < 1e-13);
    }

    #[test]
    fn smooth_interpolation_order() {
        // error of degree-4 interpolation scales like M^-5
        let f = |z: f64| (TAU * z).sin() + 0.3 * (2.0 * TAU * z).cos();
        let err = |m: usize| {
            let g = PiecewiseGrid::from_fn(m, vec![], f).unwrap();
            (0..997).map(|k| {
                let z = (k as f64 + 0.37) / 997.0;
                (g.eval(z) - f(z)).abs()
            })
            .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 < 1e-5, "{e1}");
        assert!(e1 / e2 > 25.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn antiderivative_round_trip() {
        let u = PiecewiseGrid::from_fn(256, vec![], |z| 1.5 + (TAU * z).cos()).unwrap();
        let (drift, p) = u.antiderivative_parts();
        assert!((drift - 1.5).abs() < 1e-12);
        for k in 0..50 {
            let z = (k as f64 + 0.5) / 50.0;
            let exact = (TAU * z).sin() / TAU;
            assert!((p.eval(z) - exact).abs() < 1e-10);
            assert!((p.derivative(z, None).unwrap() + drift - u.eval(z)).abs() < 1e-7);
        }
    }

    #[test]
    fn kinked_antiderivative_matches_exact() {
        let u = PiecewiseGrid::from_fn(128, vec![0.5, 0.0], |z| (z - 0.5).abs()).unwrap();
        let (drift, p) = u.antiderivative_parts();
        assert!((drift - 0.25).abs() < 1e-14);
        let exact = |z: f64| {
            let g = if z < 0.5 { 0.5 * z - 0.5 * z * z } else { 0.125 + 0.5 * (z - 0.5) * (z - 0.5) };
            g - 0.25 * z
        };
        for k in 0..40 {
            let z = k as f64 / 40.0 + 0.003;
            assert!((p.eval(z) - exact(z)).abs() < 1e-13);
        }
    }

    #[test]
    fn json_shape() {
        let g = PiecewiseGrid::from_fn(16, vec![0.25], |z| z).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["M"], 16);
        assert_eq!(v["breakpoints"][0], 0.25);
        let back: PiecewiseGrid = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
        assert!(PiecewiseGrid::new(vec![0.0; 8], vec![]).is_err());
    }
}
