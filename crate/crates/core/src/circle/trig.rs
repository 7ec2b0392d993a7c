use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Real-valued trigonometric polynomial `z ↦ Σ_{|n|≤N} c_n e^{2πinz}`.
///
/// Only the modes `n ≥ 0` are stored; `c_{-n} = conj(c_n)` is implied.
/// Serializes as a JSON array of `[n, re, im]` triples covering both signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i64, f64, f64)>", into = "Vec<(i64, f64, f64)>")]
pub struct TrigPoly {
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly { coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly { coeffs: vec![Complex64::new(c, 0.0)] }
    }

    /// `amp·cos(2πnz)`.
    pub fn cos_mode(n: usize, amp: f64) -> Self {
        let mut p = Self::with_degree(n);
        if n == 0 {
            p.coeffs[0] = Complex64::new(amp, 0.0);
        } else {
            p.coeffs[n] = Complex64::new(amp / 2.0, 0.0);
        }
        p
    }

    /// `amp·sin(2πnz)`.
    pub fn sin_mode(n: usize, amp: f64) -> Self {
        let mut p = Self::with_degree(n);
        if n > 0 {
            p.coeffs[n] = Complex64::new(0.0, -amp / 2.0);
        }
        p
    }

    /// Builds from the coefficients of the modes `0..=N`. The imaginary part
    /// of `c_0` must vanish.
    pub fn from_nonnegative(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Ok(Self::zero());
        }
        if coeffs[0].im.abs() > 1e-12 * (1.0 + coeffs[0].re.abs()) {
            return Err(Error::InvalidInput(format!(
                "c_0 must be real for a real-valued polynomial, got {}",
                coeffs[0]
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite Fourier coefficient".into()));
        }
        let mut coeffs = coeffs;
        coeffs[0].im = 0.0;
        Ok(TrigPoly { coeffs }.trimmed())
    }

    /// Builds from `(n, re, im)` triples. A mode given with only one sign is
    /// completed by conjugate symmetry; when both signs are present they must
    /// be conjugate.
    pub fn from_triples(triples: &[(i64, f64, f64)]) -> Result<Self> {
        let degree = triples.iter().map(|t| t.0.unsigned_abs() as usize).max().unwrap_or(0);
        let mut pos: Vec<Option<Complex64>> = vec![None; degree + 1];
        let mut neg: Vec<Option<Complex64>> = vec![None; degree + 1];
        for &(n, re, im) in triples {
            let c = Complex64::new(re, im);
            let slot = if n >= 0 { &mut pos[n as usize] } else { &mut neg[(-n) as usize] };
            if slot.is_some() {
                return Err(Error::InvalidInput(format!("mode {n} listed twice")));
            }
            *slot = Some(c);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        for n in 0..=degree {
            coeffs[n] = match (pos[n], neg[n]) {
                (Some(p), Some(m)) if n > 0 => {
                    let scale = 1.0 + p.norm().max(m.norm());
                    if (p - m.conj()).norm() > 1e-12 * scale {
                        return Err(Error::InvalidInput(format!(
                            "c_-{n} is not the conjugate of c_{n}: polynomial is not real-valued"
                        )));
                    }
                    p
                }
                (Some(p), _) => p,
                (None, Some(m)) => m.conj(),
                (None, None) => Complex64::new(0.0, 0.0),
            };
        }
        Self::from_nonnegative(coeffs)
    }

    /// `(n, re, im)` triples for every nonzero mode of both signs, ordered by `n`.
    pub fn triples(&self) -> Vec<(i64, f64, f64)> {
        let mut out = Vec::new();
        for n in (1..self.coeffs.len()).rev() {
            let c = self.coeffs[n].conj();
            if c != Complex64::new(0.0, 0.0) {
                out.push((-(n as i64), c.re, c.im));
            }
        }
        for (n, c) in self.coeffs.iter().enumerate() {
            if n == 0 || *c != Complex64::new(0.0, 0.0) {
                out.push((n as i64, c.re, c.im));
            }
        }
        out
    }

    fn with_degree(n: usize) -> Self {
        TrigPoly { coeffs: vec![Complex64::new(0.0, 0.0); n + 1] }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `c_n` for any sign of `n`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        match self.coeffs.get(k) {
            None => Complex64::new(0.0, 0.0),
            Some(c) if n < 0 => c.conj(),
            Some(c) => *c,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let z = z - z.floor();
        let mut acc = 0.0;
        for n in (1..self.coeffs.len()).rev() {
            let (s, c) = (TAU * n as f64 * z).sin_cos();
            let a = self.coeffs[n];
            acc += a.re * c - a.im * s;
        }
        self.coeffs[0].re + 2.0 * acc
    }

    /// Spectral derivative: coefficients `2πin·c_n`.
    pub fn derivative(&self) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::new(0.0, TAU * n as f64))
            .collect();
        TrigPoly { coeffs }.trimmed()
    }

    pub fn derivative_at(&self, z: f64) -> f64 {
        let z = z - z.floor();
        let mut acc = 0.0;
        for n in 1..self.coeffs.len() {
            let w = TAU * n as f64;
            let (s, c) = (w * z).sin_cos();
            let a = self.coeffs[n];
            // d/dz Re(a e^{iwz}) = -w (a.re sin + a.im cos)
            acc -= w * (a.re * s + a.im * c);
        }
        2.0 * acc
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `Σ|c_n|`, an upper bound for `sup|g|`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs[0].norm() + 2.0 * self.coeffs[1..].iter().map(|c| c.norm()).sum::<f64>()
    }

    /// `Σ 2π|n||c_n|`, an upper bound for `sup|g′|`.
    pub fn derivative_sup_bound(&self) -> f64 {
        self.derivative().sup_bound()
    }

    /// `z ↦ g(z + α)`.
    pub fn shifted(&self, alpha: f64) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, TAU * n as f64 * alpha))
            .collect();
        TrigPoly { coeffs }
    }

    pub fn scaled(&self, s: f64) -> TrigPoly {
        TrigPoly { coeffs: self.coeffs.iter().map(|c| c * s).collect() }.trimmed()
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeff(k as i64) + other.coeff(k as i64))
            .collect();
        TrigPoly { coeffs }.trimmed()
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scaled(-1.0))
    }

    /// Primitive with value 0 at `z = 0`, split into drift `c_0` and the
    /// periodic part `Σ_{n≠0} c_n (e^{2πinz} − 1)/(2πin)`.
    pub fn antiderivative_parts(&self) -> (f64, TrigPoly) {
        let mut coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / Complex64::new(0.0, TAU * n as f64)
                }
            })
            .collect();
        let at_zero: f64 = 2.0 * coeffs[1..].iter().map(|c| c.re).sum::<f64>();
        coeffs[0] = Complex64::new(-at_zero, 0.0);
        (self.coeffs[0].re, TrigPoly { coeffs }.trimmed())
    }

    /// Nonnegative-mode coefficients.
    pub fn nonnegative_coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

impl TryFrom<Vec<(i64, f64, f64)>> for TrigPoly {
    type Error = Error;
    fn try_from(v: Vec<(i64, f64, f64)>) -> Result<Self> {
        TrigPoly::from_triples(&v)
    }
}

impl From<TrigPoly> for Vec<(i64, f64, f64)> {
    fn from(p: TrigPoly) -> Self {
        p.triples()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_sum(triples: &[(i64, f64, f64)], z: f64) -> Complex64 {
        triples
            .iter()
            .map(|&(n, re, im)| Complex64::new(re, im) * Complex64::from_polar(1.0, TAU * n as f64 * z))
            .sum()
    }

    #[test]
    fn cosine_derivative_and_mean() {
        let p = TrigPoly::cos_mode(1, 1.0);
        assert!((p.derivative_at(0.25) + TAU).abs() < 1e-12);
        assert!((p.derivative().eval(0.25) + TAU).abs() < 1e-12);
        assert_eq!(p.mean(), 0.0);
    }

    #[test]
    fn sine_mode_values() {
        let p = TrigPoly::sin_mode(1, 1.0 / TAU);
        assert!((p.eval(0.25) - 1.0 / TAU).abs() < 1e-15);
        assert!((p.derivative_at(0.0) - 1.0).abs() < 1e-14);
        assert!((p.derivative_at(0.5) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_real_polynomial() {
        assert!(TrigPoly::from_triples(&[(1, 1.0, 0.0), (-1, 1.0, 1.0)]).is_err());
        assert!(TrigPoly::from_triples(&[(0, 1.0, 0.5)]).is_err());
        assert!(TrigPoly::from_triples(&[(2, 1.0, 0.0), (2, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = TrigPoly::cos_mode(1, 0.5).add(&TrigPoly::sin_mode(3, 0.2)).add(&TrigPoly::constant(0.1));
        let s = serde_json::to_string(&p).unwrap();
        let q: TrigPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn antiderivative_of_mean_zero_is_periodic() {
        let p = TrigPoly::cos_mode(1, 1.0).add(&TrigPoly::sin_mode(2, 0.7));
        let (drift, per) = p.antiderivative_parts();
        assert_eq!(drift, 0.0);
        assert!(per.eval(0.0).abs() < 1e-15);
        assert!((per.eval(1.0 - 1e-16) - per.eval(0.0)).abs() < 1e-12);
        // P′ = p
        for k in 0..16 {
            let z = k as f64 / 16.0;
            assert!((per.derivative_at(z) - p.eval(z)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn eval_matches_direct_fourier_sum(
            c in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
            z in 0.0f64..1.0,
        ) {
            let mut triples = vec![(0, c[0].0, 0.0)];
            for (n, &(re, im)) in c.iter().enumerate().skip(1) {
                triples.push((n as i64, re, im));
                triples.push((-(n as i64), re, -im));
            }
            let p = TrigPoly::from_triples(&triples).unwrap();
            let d = direct_sum(&triples, z);
            prop_assert!((p.eval(z) - d.re).abs() < 1e-12);
            prop_assert!(d.im.abs() < 1e-12);
        }
    }
}
