//! Inner products of oscillatory states, windowed oscillatory integrals and
//! L1 norms of Gaussian derivatives.

use std::f64::consts::{PI, TAU};
use std::sync::LazyLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::PhaseFunction;
use crate::states::QuantumState;
use crate::{Error, Result};

/// Largest node count a single integral may use.
pub const NODE_CAP: usize = 1 << 22;

/// Node-count policy `N = max(n_min, ppw·bound/(2πħ))`.
///
/// A third floor `√(80/ħ)/π` keeps the Gaussian envelope itself resolved
/// when the phase bound is tiny.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPolicy {
    pub n_min: usize,
    pub points_per_wavelength: usize,
    #[serde(default)]
    pub phase_scale_bound: f64,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        QuadPolicy { n_min: 1024, points_per_wavelength: 8, phase_scale_bound: 0.0 }
    }
}

impl QuadPolicy {
    pub fn new(n_min: usize, points_per_wavelength: usize, phase_scale_bound: f64) -> Result<Self> {
        let p = QuadPolicy { n_min, points_per_wavelength, phase_scale_bound };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_wavelength < 8 {
            return Err(Error::InvalidInput("points_per_wavelength must be >= 8".into()));
        }
        if self.n_min < 64 {
            return Err(Error::InvalidInput("n_min must be >= 64".into()));
        }
        if !(self.phase_scale_bound >= 0.0 && self.phase_scale_bound.is_finite()) {
            return Err(Error::InvalidInput("phase_scale_bound must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.phase_scale_bound = bound;
        self
    }

    /// Node count at `ħ`, or an error past [`NODE_CAP`].
    pub fn nodes(&self, hbar: f64) -> Result<usize> {
        let wave = self.points_per_wavelength as f64 * self.phase_scale_bound / (TAU * hbar);
        let envelope = (80.0 / hbar).sqrt() / PI;
        let n = (self.n_min as f64).max(wave.ceil()).max(envelope.ceil()).max(64.0);
        if !n.is_finite() || n > NODE_CAP as f64 {
            return Err(Error::NodeCap { nodes: n, cap: NODE_CAP });
        }
        Ok(n as usize)
    }
}

/// Compensated (Neumaier) complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: Complex64,
    comp: Complex64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, v: Complex64) {
        self.sum.re = neumaier(self.sum.re, v.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, v.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, v: f64, comp: &mut f64) -> f64 {
    let t = sum + v;
    if sum.abs() >= v.abs() {
        *comp += (sum - t) + v;
    } else {
        *comp += (v - t) + sum;
    }
    t
}

/// Composite trapezoid `(1/N) Σ f(j/N)` of a 1-periodic function.
pub fn trapezoid_periodic(f: impl Fn(f64) -> Complex64, n: usize) -> Complex64 {
    let mut acc = KahanSum::default();
    for j in 0..n {
        acc.add(f(j as f64 / n as f64));
    }
    acc.value() / n as f64
}

/// Inner product with the bookkeeping needed for roundoff estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProduct {
    pub value: Complex64,
    /// `(1/N) Σ |ψ||φ|`.
    pub abs_sum: f64,
    pub nodes: usize,
}

fn check_same_hbar(psi: &QuantumState, phi: &QuantumState) -> Result<f64> {
    let (a, b) = (psi.hbar(), phi.hbar());
    if (a - b).abs() > 1e-15 * a.abs().max(b.abs()) {
        return Err(Error::HbarMismatch(a, b));
    }
    Ok(a)
}

/// `⟨ψ, φ⟩ = ∫₀¹ conj(ψ)·φ` by the trapezoid rule. The policy's phase bound
/// is raised to the states' own bounds if it is smaller.
pub fn inner_product_detailed(psi: &QuantumState, phi: &QuantumState, policy: &QuadPolicy) -> Result<InnerProduct> {
    let hbar = check_same_hbar(psi, phi)?;
    let bound = policy.phase_scale_bound.max(psi.phase_scale_bound() + phi.phase_scale_bound());
    let n = policy.with_bound(bound).nodes(hbar)?;
    let mut acc = KahanSum::default();
    let mut abs = 0.0;
    for j in 0..n {
        let z = j as f64 / n as f64;
        let (a, b) = (psi.eval(z), phi.eval(z));
        acc.add(a.conj() * b);
        abs += a.norm() * b.norm();
    }
    Ok(InnerProduct { value: acc.value() / n as f64, abs_sum: abs / n as f64, nodes: n })
}

pub fn inner_product(psi: &QuantumState, phi: &QuantumState, policy: &QuadPolicy) -> Result<Complex64> {
    Ok(inner_product_detailed(psi, phi, policy)?.value)
}

pub fn norm(state: &QuantumState, policy: &QuadPolicy) -> Result<f64> {
    Ok(inner_product(state, state, policy)?.re.max(0.0).sqrt())
}

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
static GAUSS_LEGENDRE: LazyLock<([f64; GL_ORDER], [f64; GL_ORDER])> = LazyLock::new(|| {
    let n = GL_ORDER;
    let mut x = [0.0; GL_ORDER];
    let mut w = [0.0; GL_ORDER];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
});

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre with `panels` equal panels; returns the
/// integral and `∫|integrand|`.
fn gauss_panels(lo: f64, hi: f64, panels: usize, f: &impl Fn(f64) -> Complex64) -> (Complex64, f64) {
    let (xs, ws) = &*GAUSS_LEGENDRE;
    let h = (hi - lo) / panels as f64;
    let mut acc = KahanSum::default();
    let mut abs = 0.0;
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * h;
        for k in 0..GL_ORDER {
            let v = f(c + 0.5 * h * xs[k]) * (0.5 * h * ws[k]);
            acc.add(v);
            abs += v.norm();
        }
    }
    (acc.value(), abs)
}

const OSC_REL_TOL: f64 = 1e-10;

/// `∫_{y−a}^{y+a} e^{−(z−y)²/4ħ} e^{iφ(z)/ħ} dz` for a phase given as a
/// closure with derivative bound `phase_bound`.
///
/// Panels are doubled until two consecutive levels agree to `1e−10`
/// relative, or to the roundoff floor of the integrand's absolute mass.
pub fn oscillatory_integral_with(
    y: f64,
    a: f64,
    phase: impl Fn(f64) -> f64,
    phase_bound: f64,
    hbar: f64,
    policy: &QuadPolicy,
) -> Result<Complex64> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::InvalidInput(format!("window half-width must lie in (0, 1/2), got {a}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let f = |z: f64| {
        let d = z - y;
        Complex64::from_polar((-d * d / (4.0 * hbar)).exp(), phase(z) / hbar)
    };
    let bound = phase_bound.max(policy.phase_scale_bound);
    let waves = 2.0 * a * (bound / hbar + 1.0 / hbar.sqrt()) / TAU;
    let points = (policy.points_per_wavelength as f64 * waves).max(64.0);
    let mut panels = ((points / GL_ORDER as f64).ceil() as usize).max(4);
    let (mut prev, _) = gauss_panels(y - a, y + a, panels, &f);
    loop {
        panels *= 2;
        if panels * GL_ORDER > NODE_CAP {
            return Err(Error::NodeCap { nodes: (panels * GL_ORDER) as f64, cap: NODE_CAP });
        }
        let (next, abs) = gauss_panels(y - a, y + a, panels, &f);
        let floor = 64.0 * f64::EPSILON * abs;
        if (next - prev).norm() <= OSC_REL_TOL * next.norm() + floor {
            return Ok(next);
        }
        prev = next;
    }
}

/// Windowed oscillatory integral with phase `φ = S` given as a lift.
pub fn oscillatory_integral(y: f64, a: f64, phase: &PhaseFunction, hbar: f64, policy: &QuadPolicy) -> Result<Complex64> {
    oscillatory_integral_with(y, a, |z| phase.eval(z), phase.derivative_sup(), hbar, policy)
}

/// Largest derivative order supported by the Hermite table.
pub const HERMITE_MAX: usize = 8;

/// Physicists' Hermite polynomial `H_n(s)`.
pub fn hermite(n: usize, s: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * s);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * s * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `dⁿ/dtⁿ e^{−t²/4ħ} = (−1)ⁿ (2√ħ)^{−n} H_n(s) e^{−s²}` with `s = t/(2√ħ)`.
pub fn gaussian_derivative(n: usize, t: f64, hbar: f64) -> f64 {
    let c = 2.0 * hbar.sqrt();
    let s = t / c;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * c.powi(-(n as i32)) * hermite(n, s) * (-s * s).exp()
}

/// `∫_{−a}^{a} |dⁿ/dtⁿ e^{−t²/4ħ}| dt`.
///
/// The integrand changes sign only at the roots of `H_n`, so the integral is
/// the sum of absolute increments of the `(n−1)`-th derivative between
/// consecutive roots inside the window.
pub fn gaussian_derivative_l1(n: usize, a: f64, hbar: f64) -> Result<f64> {
    if n > HERMITE_MAX {
        return Err(Error::HermiteOrder(n));
    }
    if n == 0 {
        return Err(Error::InvalidInput("derivative order must be >= 1".into()));
    }
    if !(a > 0.0 && a < 0.5) || !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("need a in (0,1/2) and hbar > 0, got a={a}, hbar={hbar}")));
    }
    let c = 2.0 * hbar.sqrt();
    let big_s = a / c;
    let mut cuts = vec![-big_s];
    // roots of H_n lie in |s| < sqrt(2n+1); scan densely there
    let scan_hi = big_s.min((2.0 * n as f64 + 1.0).sqrt() + 1.0);
    let steps = 4000;
    let h = 2.0 * scan_hi / steps as f64;
    let mut s0 = -scan_hi;
    let mut v0 = hermite(n, s0);
    for i in 1..=steps {
        let s1 = -scan_hi + i as f64 * h;
        let v1 = hermite(n, s1);
        if v0 == 0.0 && s0 > -big_s {
            cuts.push(s0);
        } else if v0 * v1 < 0.0 {
            let (mut lo, mut hi, mut vlo) = (s0, s1, v0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let vm = hermite(n, mid);
                if vm * vlo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    vlo = vm;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        s0 = s1;
        v0 = v1;
    }
    cuts.push(big_s);
    let prim = |s: f64| gaussian_derivative(n - 1, s * c, hbar);
    Ok(cuts.windows(2).map(|w| (prim(w[1]) - prim(w[0])).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{PeriodicFunction, TrigPoly};
    use crate::states::QuantumState;

    fn policy() -> QuadPolicy {
        QuadPolicy::default()
    }

    #[test]
    fn node_policy() {
        let p = QuadPolicy::new(1024, 8, 6.0).unwrap();
        assert_eq!(p.nodes(0.1).unwrap(), 1024);
        assert!(p.nodes(1e-4).unwrap() >= (8.0 * 6.0 / (TAU * 1e-4)) as usize);
        assert!(matches!(p.nodes(1e-7), Err(Error::NodeCap { .. })));
        assert!(QuadPolicy::new(1024, 4, 0.0).is_err());
    }

    #[test]
    fn wavepacket_norm_closed_form() {
        let s = QuantumState::wavepacket(0.5, 0.0, 0.01).unwrap();
        let v = inner_product(&s, &s, &policy()).unwrap();
        let oracle = (TAU * 0.01f64).sqrt();
        assert!((v.re - oracle).abs() <= 1e-4 * oracle);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn trig_states_are_orthonormal_exactly() {
        let a = QuantumState::Fourier { hbar: 0.01, modes: vec![(1, 1.0, 0.0)] };
        let b = QuantumState::Fourier { hbar: 0.01, modes: vec![(1, 1.0, 0.0)] };
        let v = inner_product(&a, &b, &policy()).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let c = QuantumState::Fourier { hbar: 0.01, modes: vec![(3, 0.0, 1.0)] };
        assert!(inner_product(&a, &c, &policy()).unwrap().norm() < 1e-14);
    }

    #[test]
    fn trapezoid_exact_below_nyquist() {
        let n = 64;
        for k in 1..n / 2 {
            let v = trapezoid_periodic(|z| Complex64::from_polar(1.0, TAU * k as f64 * z), n);
            assert!(v.norm() < 1e-13, "mode {k}");
        }
        let v = trapezoid_periodic(|z| Complex64::new((TAU * 3.0 * z).cos().powi(2), 0.0), n);
        assert!((v.re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn mismatched_hbar_rejected() {
        let a = QuantumState::wavepacket(0.5, 0.0, 0.01).unwrap();
        let b = QuantumState::wavepacket(0.5, 0.0, 0.02).unwrap();
        assert!(matches!(inner_product(&a, &b, &policy()), Err(Error::HbarMismatch(..))));
    }

    #[test]
    fn refinement_converged_at_policy_bound() {
        let pairs = [
            ((0.3, 1.0), (0.35, 1.2)),
            ((0.5, 0.0), (0.5, 0.5)),
            ((0.1, -2.0), (0.9, -2.0)),
            ((0.7, 3.0), (0.72, 2.9)),
        ];
        for hbar in [0.01, 0.002] {
            for &((x1, k1), (x2, k2)) in &pairs {
                let a = QuantumState::wavepacket(x1, k1, hbar).unwrap();
                let b = QuantumState::wavepacket(x2, k2, hbar).unwrap();
                let p = policy();
                let d = inner_product_detailed(&a, &b, &p).unwrap();
                let fine = QuadPolicy { n_min: 4 * d.nodes, ..p };
                let r = inner_product(&a, &b, &fine).unwrap();
                assert!((d.value - r).norm() <= 1e-10 * r.norm() + 1e-15 * d.abs_sum);
            }
        }
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert!((hermite(3, 0.5) - (8.0 * 0.125 - 12.0 * 0.5)).abs() < 1e-14);
        assert!((hermite(4, 1.0) - (16.0 - 48.0 + 12.0)).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_l1_closed_form() {
        let (a, hbar) = (0.3, 0.01);
        let v = gaussian_derivative_l1(1, a, hbar).unwrap();
        assert!((v - (2.0 - 2.0 * (-a * a / (4.0 * hbar)).exp())).abs() < 1e-10);
        assert!(matches!(gaussian_derivative_l1(9, a, hbar), Err(Error::HermiteOrder(9))));
    }

    #[test]
    fn oscillatory_zero_phase_matches_erf() {
        let v = oscillatory_integral(0.5, 0.3, &PhaseFunction::zero(), 0.01, &policy()).unwrap();
        let oracle = 2.0 * (PI * 0.01f64).sqrt() * libm::erf(1.5);
        assert!((v.re - oracle).abs() < 1e-12);
        assert!(v.im.abs() < 1e-14);
        let lin0 = oscillatory_integral(0.5, 0.3, &PhaseFunction::linear(0.0), 0.01, &policy()).unwrap();
        assert_eq!(lin0, v);
    }

    #[test]
    fn oscillatory_rejects_bad_window() {
        let phase = PhaseFunction::new(0.0, PeriodicFunction::Trig(TrigPoly::cos_mode(1, 1.0)));
        assert!(oscillatory_integral(0.5, 0.6, &phase, 0.01, &policy()).is_err());
    }
}
