//! Classical Mie series for a perfectly conducting sphere and for a sphere
//! with a scalar surface impedance, written in the textbook Riccati–Bessel
//! form. This module intentionally depends on nothing but the special
//! functions, so agreement with the spectral solver is a genuine cross-check.
//!
//! Conventions: time factor `e^{-iωt}`, incident field `x̂ e^{iωz}`, the
//! scattered field is `Σ E_n (i a_n N_e1n − b_n M_o1n)` with `h_n^{(1)}`
//! radial functions, `ψ_n = x j_n`, `ξ_n = x h_n^{(1)}`.
//!
//! With the boundary condition `ν × E + λ H_T = 0`:
//!
//! ```text
//! a_n = (ψ'_n + iλ ψ_n) / (ξ'_n + iλ ξ_n)
//! b_n = (ψ_n − iλ ψ'_n) / (ξ_n − iλ ξ'_n)
//! ```
//!
//! and `λ = 0` gives the conducting sphere `a_n = ψ'_n/ξ'_n`, `b_n = ψ_n/ξ_n`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::special::{sph_bessel_with_riccati, BesselKind};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MieSurface {
    Pec,
    /// Scalar impedance `ν × E + λ H_T = 0`.
    Impedance(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieCoefficients {
    pub n: usize,
    pub a_n: Complex64,
    pub b_n: Complex64,
}

/// Series length `x + 4.05 x^{1/3} + 2`, padded by ten terms.
pub fn series_length(x: f64) -> usize {
    (x + 4.05 * x.cbrt() + 2.0).ceil() as usize + 10
}

fn check(omega: f64, a: f64) -> Result<f64> {
    if !(omega > 0.0) || !(a > 0.0) {
        return Err(GibcError::Domain(format!(
            "omega and radius must be positive, got {omega}, {a}"
        )));
    }
    Ok(omega * a)
}

/// Coefficients for `n = 1..=nstop`.
pub fn mie_series(surface: MieSurface, omega: f64, a: f64, nstop: usize) -> Result<Vec<MieCoefficients>> {
    let x = check(omega, a)?;
    let (j, dj) = sph_bessel_with_riccati(BesselKind::J, nstop, x)?;
    let (h, dh) = sph_bessel_with_riccati(BesselKind::H1, nstop, x)?;
    let lambda = match surface {
        MieSurface::Pec => Complex64::new(0.0, 0.0),
        MieSurface::Impedance(l) => l,
    };
    Ok((1..=nstop)
        .map(|n| {
            let psi = x * j[n];
            let xi = x * h[n];
            let (dpsi, dxi) = (dj[n], dh[n]);
            let (a_n, b_n) = match surface {
                MieSurface::Pec => (dpsi / dxi, psi / xi),
                MieSurface::Impedance(_) => (
                    (dpsi + I * lambda * psi) / (dxi + I * lambda * xi),
                    (psi - I * lambda * dpsi) / (xi - I * lambda * dxi),
                ),
            };
            MieCoefficients { n, a_n, b_n }
        })
        .collect())
}

pub fn mie_coefficients(surface: MieSurface, omega: f64, a: f64, n: usize) -> Result<MieCoefficients> {
    if n == 0 {
        return Err(GibcError::Domain("Mie coefficients start at n = 1".into()));
    }
    Ok(mie_series(surface, omega, a, n)?[n - 1])
}

/// Amplitude functions `S_1(θ)`, `S_2(θ)` from the angular recurrences.
pub fn amplitude_functions(coeffs: &[MieCoefficients], theta: f64) -> (Complex64, Complex64) {
    let mu = theta.cos();
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    let (mut pi_prev, mut pi) = (0.0_f64, 1.0_f64);
    for c in coeffs {
        let n = c.n as f64;
        let tau = n * mu * pi - (n + 1.0) * pi_prev;
        let f = (2.0 * n + 1.0) / (n * (n + 1.0));
        s1 += f * (c.a_n * pi + c.b_n * tau);
        s2 += f * (c.a_n * tau + c.b_n * pi);
        let next = ((2.0 * n + 1.0) * mu * pi - (n + 1.0) * pi_prev) / n;
        pi_prev = pi;
        pi = next;
    }
    (s1, s2)
}

/// Far-field amplitude `(E_θ, E_φ)` for a unit incident field, `E^s ~ e^{iωr}/r E_∞`.
pub fn mie_far_field(
    surface: MieSurface,
    omega: f64,
    a: f64,
    theta: f64,
    phi: f64,
    nstop: Option<usize>,
) -> Result<(Complex64, Complex64)> {
    let x = check(omega, a)?;
    let coeffs = mie_series(surface, omega, a, nstop.unwrap_or_else(|| series_length(x)))?;
    let (s1, s2) = amplitude_functions(&coeffs, theta);
    let pref = 1.0 / (-I * omega);
    Ok((pref * phi.cos() * s2, -pref * phi.sin() * s1))
}

/// Radar cross section `4π |E_∞|²` towards `direction` for the incident
/// field `x̂ e^{iωz}`.
pub fn mie_rcs(surface: MieSurface, omega: f64, a: f64, direction: &[f64; 3]) -> Result<f64> {
    mie_rcs_truncated(surface, omega, a, direction, None)
}

pub fn mie_rcs_truncated(
    surface: MieSurface,
    omega: f64,
    a: f64,
    direction: &[f64; 3],
    nstop: Option<usize>,
) -> Result<f64> {
    let r = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if r == 0.0 {
        return Err(GibcError::Domain("zero direction vector".into()));
    }
    let theta = (direction[2] / r).clamp(-1.0, 1.0).acos();
    let phi = direction[1].atan2(direction[0]);
    let (et, ep) = mie_far_field(surface, omega, a, theta, phi, nstop)?;
    Ok(4.0 * PI * (et.norm_sqr() + ep.norm_sqr()))
}

/// Closed-form monostatic cross section `(π/k²) |Σ (2n+1)(−1)^n (a_n − b_n)|²`.
pub fn backscatter_closed_form(coeffs: &[MieCoefficients], omega: f64) -> f64 {
    let s: Complex64 = coeffs
        .iter()
        .map(|c| {
            let sign = if c.n % 2 == 0 { 1.0 } else { -1.0 };
            (2 * c.n + 1) as f64 * sign * (c.a_n - c.b_n)
        })
        .sum();
    PI / (omega * omega) * s.norm_sqr()
}

/// Extinction and scattering efficiencies `(Q_ext, Q_sca)`.
pub fn efficiencies(coeffs: &[MieCoefficients], x: f64) -> (f64, f64) {
    let mut ext = 0.0;
    let mut sca = 0.0;
    for c in coeffs {
        let w = (2 * c.n + 1) as f64;
        ext += w * (c.a_n + c.b_n).re;
        sca += w * (c.a_n.norm_sqr() + c.b_n.norm_sqr());
    }
    (2.0 / (x * x) * ext, 2.0 / (x * x) * sca)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pec_n1_matches_trigonometric_closed_forms() {
        let x: f64 = 1.0;
        let (s, c) = x.sin_cos();
        // ψ_1 = sin x / x − cos x,  χ_1 = cos x / x + sin x,  ξ_1 = ψ_1 − i χ_1
        let psi = s / x - c;
        let chi = c / x + s;
        let xi = Complex64::new(psi, -chi);
        // derivatives: ψ_0 − ψ_1/x, with ψ_0 = sin x, ξ_0 = −i e^{ix}
        let dpsi = s - psi / x;
        let xi0 = -I * Complex64::from_polar(1.0, x);
        let dxi = xi0 - xi / x;
        let m = mie_coefficients(MieSurface::Pec, 1.0, 1.0, 1).unwrap();
        assert!((m.a_n - dpsi / dxi).norm() < 1e-12);
        assert!((m.b_n - psi / xi).norm() < 1e-12);
    }

    #[test]
    fn rayleigh_scaling_of_coefficients() {
        for n in 1..4usize {
            let c1 = mie_coefficients(MieSurface::Pec, 0.02, 1.0, n).unwrap();
            let c2 = mie_coefficients(MieSurface::Pec, 0.01, 1.0, n).unwrap();
            let expect = 2f64.powi(2 * n as i32 + 1);
            assert!((c1.a_n.norm() / c2.a_n.norm() / expect - 1.0).abs() < 1e-2);
            assert!((c1.b_n.norm() / c2.b_n.norm() / expect - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn lossless_impedance_is_unitary() {
        for lam in [0.3, 1.0, 7.0] {
            for x in [0.5, 1.0, 2.0] {
                for c in mie_series(MieSurface::Impedance(Complex64::new(0.0, lam)), x, 1.0, 15).unwrap() {
                    assert!(((1.0 - 2.0 * c.a_n).norm() - 1.0).abs() < 1e-10);
                    assert!(((1.0 - 2.0 * c.b_n).norm() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn power_balance_and_passivity() {
        for lam in [Complex64::new(1.0, 0.5), Complex64::new(0.2, -3.0), Complex64::new(0.0, 2.0)] {
            let coeffs = mie_series(MieSurface::Impedance(lam), 1.5, 1.0, 20).unwrap();
            let (ext, sca) = efficiencies(&coeffs, 1.5);
            assert!(ext - sca >= -1e-10);
            for c in &coeffs {
                assert!(c.a_n.norm() <= 1.0 + 1e-12 && c.b_n.norm() <= 1.0 + 1e-12);
            }
        }
        let coeffs = mie_series(MieSurface::Pec, 1.5, 1.0, 20).unwrap();
        let (ext, sca) = efficiencies(&coeffs, 1.5);
        assert!((ext - sca).abs() < 1e-12);
    }

    #[test]
    fn backscatter_series_agrees_with_amplitude_functions() {
        for x in [0.5, 1.0, 2.0] {
            let coeffs = mie_series(MieSurface::Pec, x, 1.0, series_length(x)).unwrap();
            let direct = mie_rcs(MieSurface::Pec, x, 1.0, &[0.0, 0.0, -1.0]).unwrap();
            let closed = backscatter_closed_form(&coeffs, x);
            assert!((direct - closed).abs() <= 1e-12 * closed);
        }
    }

    #[test]
    fn truncation_doubling_is_converged() {
        for x in [0.5, 1.0, 2.0] {
            let n = series_length(x);
            let d = [0.3, 0.1, -0.9];
            let s1 = mie_rcs_truncated(MieSurface::Pec, x, 1.0, &d, Some(n)).unwrap();
            let s2 = mie_rcs_truncated(MieSurface::Pec, x, 1.0, &d, Some(2 * n)).unwrap();
            assert!((s1 - s2).abs() <= 1e-12 * s2);
        }
    }

    #[test]
    fn rayleigh_backscatter_power_law() {
        let back = [0.0, 0.0, -1.0];
        let s1 = mie_rcs(MieSurface::Pec, 0.1, 1.0, &back).unwrap();
        let s2 = mie_rcs(MieSurface::Pec, 0.05, 1.0, &back).unwrap();
        assert!((s1 / s2 / 16.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn small_impedance_approaches_conductor() {
        let back = [0.0, 0.0, -1.0];
        let pec = mie_rcs(MieSurface::Pec, 1.0, 1.0, &back).unwrap();
        let imp = mie_rcs(MieSurface::Impedance(Complex64::new(1e-4, 0.0)), 1.0, 1.0, &back).unwrap();
        assert!((imp - pec).abs() < 1e-2 * pec);
    }

    #[test]
    fn large_impedance_approaches_magnetic_conductor() {
        // λ → ∞ exchanges the roles of ψ and ψ' (a perfect magnetic conductor)
        let big = mie_coefficients(MieSurface::Impedance(Complex64::new(1e8, 0.0)), 1.0, 1.0, 2).unwrap();
        let pec = mie_coefficients(MieSurface::Pec, 1.0, 1.0, 2).unwrap();
        assert!((big.a_n - pec.b_n).norm() < 1e-6);
        assert!((big.b_n - pec.a_n).norm() < 1e-6);
    }
}
