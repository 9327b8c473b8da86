//! Spherical Bessel and Hankel functions, Riccati derivatives, and
//! orthonormal scalar and vector spherical harmonics.
//!
//! Conventions:
//!
//! ```text
//! h_n(x)      = j_n(x) + i y_n(x)               (outgoing for e^{-i w t})
//! D[z_n](x)   = d/dx [x z_n(x)] = x z_{n-1}(x) - n z_n(x)
//! Y_n^m       = P̄_n^m(cos θ) e^{i m φ}            (Condon–Shortley phase, L²(S²)-orthonormal)
//! U_n^m       = ∇_S Y_n^m / (a √(n(n+1)))         (gradient type, L²-normalized on radius a)
//! V_n^m       = r̂ × U_n^m                         (curl type)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::vec3::{spherical_frame, C3};

/// Largest supported degree for every spectral routine.
pub const MAX_DEGREE: usize = 200;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselKind {
    J,
    Y,
    H1,
}

/// Degree/order pair indexing the tangential spectral basis. `n >= 1`, `|m| <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: usize,
    pub m: i32,
}

impl ModeIndex {
    pub fn new(n: usize, m: i32) -> Result<Self> {
        if n == 0 {
            return Err(GibcError::Domain("tangential modes need n >= 1".into()));
        }
        if m.unsigned_abs() as usize > n {
            return Err(GibcError::Domain(format!("|m| = {} exceeds n = {n}", m.abs())));
        }
        Ok(ModeIndex { n, m })
    }

    /// `n (n + 1)` as a float.
    #[inline]
    pub fn eigenvalue(&self) -> f64 {
        (self.n * (self.n + 1)) as f64
    }
}

/// The two families of tangential vector spherical harmonics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    /// `U_n^m`, proportional to `∇_Γ Y_n^m`.
    GradType,
    /// `V_n^m = ν × U_n^m`.
    CurlType,
}

fn check_argument(nmax: usize, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(GibcError::Domain(format!(
            "spherical Bessel argument must be positive and finite, got {x}"
        )));
    }
    if nmax > MAX_DEGREE {
        return Err(GibcError::Range(format!(
            "degree {nmax} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// `j_0 .. j_nmax` at `x > 0`. Upward recurrence while `n <= x`, normalized
/// downward (Miller) recurrence otherwise. Values below the f64 range come back as 0.
fn j_values(nmax: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = (s / x - c) / x;
    if nmax as f64 <= x {
        let mut out = Vec::with_capacity(nmax + 1);
        out.push(j0);
        if nmax >= 1 {
            out.push(j1);
        }
        for n in 1..nmax {
            let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
            out.push(next);
        }
        return out;
    }

    let start = nmax + 16 + x.ceil() as usize + (4.0 * (nmax as f64).sqrt()) as usize;
    let mut f = vec![0.0_f64; start + 2];
    f[start] = 1e-30;
    for k in (1..=start).rev() {
        f[k - 1] = (2 * k + 1) as f64 / x * f[k] - f[k + 1];
        if f[k - 1].abs() > 1e100 {
            for v in f[k - 1..].iter_mut() {
                *v *= 1e-100;
            }
        }
    }
    // sum_k (2k+1) j_k(x)^2 = 1 fixes the scale; the sign follows whichever
    // of j_0, j_1 is larger in magnitude.
    let sum: f64 = f
        .iter()
        .enumerate()
        .map(|(k, v)| (2 * k + 1) as f64 * v * v)
        .sum();
    let mut scale = 1.0 / sum.sqrt();
    let reference = if j0.abs() >= j1.abs() { (j0, f[0]) } else { (j1, f[1]) };
    if reference.0 * reference.1 < 0.0 {
        scale = -scale;
    }
    f.truncate(nmax + 1);
    f.iter_mut().for_each(|v| *v *= scale);
    f
}

/// `y_0 .. y_nmax` by upward recurrence; may contain infinities past overflow.
fn y_values(nmax: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-c / x);
    if nmax >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

/// `z_0(x) .. z_nmax(x)` for the requested kind.
pub fn sph_bessel_array(kind: BesselKind, nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    check_argument(nmax, x)?;
    match kind {
        BesselKind::J => Ok(j_values(nmax, x).into_iter().map(Complex64::from).collect()),
        BesselKind::Y | BesselKind::H1 => {
            let y = y_values(nmax, x);
            if let Some(n) = y.iter().position(|v| !v.is_finite()) {
                return Err(GibcError::Range(format!(
                    "y_{n}({x}) overflows double precision"
                )));
            }
            if kind == BesselKind::Y {
                Ok(y.into_iter().map(Complex64::from).collect())
            } else {
                let j = j_values(nmax, x);
                Ok(j.into_iter()
                    .zip(y)
                    .map(|(jr, yr)| Complex64::new(jr, yr))
                    .collect())
            }
        }
    }
}

/// Spherical Bessel `j_n`, `y_n` or Hankel `h_n^{(1)}` at `x > 0`.
pub fn sph_bessel(kind: BesselKind, n: usize, x: f64) -> Result<Complex64> {
    Ok(sph_bessel_array(kind, n, x)?[n])
}

/// `z_{-1}` used by the Riccati derivative at `n = 0`.
fn z_minus_one(kind: BesselKind, x: f64) -> Complex64 {
    let (s, c) = x.sin_cos();
    match kind {
        BesselKind::J => Complex64::new(c / x, 0.0),
        BesselKind::Y => Complex64::new(s / x, 0.0),
        BesselKind::H1 => Complex64::new(c / x, s / x),
    }
}

/// Values `z_n(x)` and Riccati derivatives `(x z_n)'(x)` for `n = 0..=nmax`.
pub fn sph_bessel_with_riccati(
    kind: BesselKind,
    nmax: usize,
    x: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let z = sph_bessel_array(kind, nmax, x)?;
    let mut d = Vec::with_capacity(nmax + 1);
    d.push(x * z_minus_one(kind, x));
    for n in 1..=nmax {
        d.push(x * z[n - 1] - n as f64 * z[n]);
    }
    Ok((z, d))
}

/// Riccati derivative `d/dx [x z_n(x)]`.
pub fn riccati_deriv(kind: BesselKind, n: usize, x: f64) -> Result<Complex64> {
    let (_, d) = sph_bessel_with_riccati(kind, n, x)?;
    Ok(d[n])
}

/// Ratio `(x h_n)' / (x h_n)` by forward recurrence on `h_n / h_{n-1}`.
/// Never overflows, so it remains usable where `h_n` itself does not fit in f64.
pub fn hankel_log_derivative(n: usize, x: f64) -> Result<Complex64> {
    check_argument(0, x)?;
    // ratio_k = h_k / h_{k-1}
    let h0 = Complex64::new(x.sin(), -x.cos()) / x;
    let hm1 = Complex64::new(x.cos(), x.sin()) / x;
    let mut ratio = h0 / hm1;
    for k in 0..n {
        ratio = (2 * k + 1) as f64 / x - 1.0 / ratio;
    }
    // (x h_n)'/(x h_n) = h_{n-1}/h_n - n/x
    Ok(1.0 / ratio - n as f64 / x)
}

/// Normalized associated Legendre values `P̄_n^m(cos θ)` (Condon–Shortley phase),
/// `P̄_n^m / sin θ` and `d P̄_n^m / dθ` for `0 <= m <= n <= nmax`, pole-safe.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    nmax: usize,
    p: Vec<f64>,
    p_over_sin: Vec<f64>,
    dp_dtheta: Vec<f64>,
}

impl LegendreTable {
    pub fn new(nmax: usize, theta: f64) -> Self {
        let stride = nmax + 2;
        let idx = |n: usize, m: usize| n * stride + m;
        let (s, x) = theta.sin_cos();
        let s = s.abs();
        let mut p = vec![0.0; (nmax + 1) * stride];
        let mut q = vec![0.0; (nmax + 1) * stride];
        p[idx(0, 0)] = 0.5 / PI.sqrt();
        for m in 1..=nmax {
            let f = -(((2 * m + 1) as f64) / ((2 * m) as f64)).sqrt();
            q[idx(m, m)] = f * p[idx(m - 1, m - 1)];
            p[idx(m, m)] = q[idx(m, m)] * s;
        }
        for m in 0..=nmax {
            if m < nmax {
                let f = ((2 * m + 3) as f64).sqrt() * x;
                p[idx(m + 1, m)] = f * p[idx(m, m)];
                q[idx(m + 1, m)] = f * q[idx(m, m)];
            }
            for n in (m + 2)..=nmax {
                let nf = n as f64;
                let mf = m as f64;
                let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                let b = (((nf - 1.0) * (nf - 1.0) - mf * mf)
                    / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0))
                    .sqrt();
                p[idx(n, m)] = a * (x * p[idx(n - 1, m)] - b * p[idx(n - 2, m)]);
                q[idx(n, m)] = a * (x * q[idx(n - 1, m)] - b * q[idx(n - 2, m)]);
            }
        }
        let mut dp = vec![0.0; (nmax + 1) * stride];
        for n in 1..=nmax {
            let nf = n as f64;
            dp[idx(n, 0)] = (nf * (nf + 1.0)).sqrt() * p[idx(n, 1)];
            for m in 1..=n {
                let mf = m as f64;
                let up = ((nf - mf) * (nf + mf + 1.0)).sqrt() * p[idx(n, m + 1)];
                let down = ((nf + mf) * (nf - mf + 1.0)).sqrt() * p[idx(n, m - 1)];
                dp[idx(n, m)] = 0.5 * (up - down);
            }
        }
        LegendreTable {
            nmax,
            p,
            p_over_sin: q,
            dp_dtheta: dp,
        }
    }

    #[inline]
    fn idx(&self, n: usize, m: usize) -> usize {
        n * (self.nmax + 2) + m
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// `P̄_n^m(cos θ)` for `m >= 0`.
    #[inline]
    pub fn p(&self, n: usize, m: usize) -> f64 {
        self.p[self.idx(n, m)]
    }

    /// `P̄_n^m(cos θ) / sin θ` for `m >= 1`, finite at the poles.
    #[inline]
    pub fn p_over_sin(&self, n: usize, m: usize) -> f64 {
        self.p_over_sin[self.idx(n, m)]
    }

    #[inline]
    pub fn dp_dtheta(&self, n: usize, m: usize) -> f64 {
        self.dp_dtheta[self.idx(n, m)]
    }

    /// `Y_n^m(θ, φ)` for any `|m| <= n`.
    pub fn ylm(&self, n: usize, m: i32, phi: f64) -> Complex64 {
        let ma = m.unsigned_abs() as usize;
        let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
        Complex64::from_polar(sign * self.p(n, ma), m as f64 * phi)
    }

    /// Unit-sphere surface gradient `∇_S Y_n^m` as `(θ̂, φ̂)` components.
    pub fn grad_ylm(&self, n: usize, m: i32, phi: f64) -> (Complex64, Complex64) {
        let ma = m.unsigned_abs() as usize;
        let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
        let e = Complex64::from_polar(sign, m as f64 * phi);
        let d_theta = e * self.dp_dtheta(n, ma);
        let d_phi = if ma == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            e * I * (m as f64) * self.p_over_sin(n, ma)
        };
        (d_theta, d_phi)
    }
}

/// Fully normalized spherical harmonic `Y_n^m(θ, φ)` with Condon–Shortley phase.
pub fn ylm(n: usize, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() as usize > n {
        return Err(GibcError::Domain(format!("|m| = {} exceeds n = {n}", m.abs())));
    }
    if n > MAX_DEGREE {
        return Err(GibcError::Range(format!("degree {n} exceeds {MAX_DEGREE}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(GibcError::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(LegendreTable::new(n, theta).ylm(n, m, phi))
}

/// Tangential VSH components `(θ̂, φ̂)` of `U_n^m` or `V_n^m` on the sphere of radius `a`.
pub fn vsh_components(
    table: &LegendreTable,
    pol: Polarization,
    mode: ModeIndex,
    phi: f64,
    a: f64,
) -> (Complex64, Complex64) {
    let (gt, gp) = table.grad_ylm(mode.n, mode.m, phi);
    let s = 1.0 / (a * mode.eigenvalue().sqrt());
    match pol {
        Polarization::GradType => (gt * s, gp * s),
        // r̂ × θ̂ = φ̂, r̂ × φ̂ = −θ̂
        Polarization::CurlType => (-gp * s, gt * s),
    }
}

/// Cartesian value of `U_n^m` (grad type) or `V_n^m` (curl type) at `(θ, φ)` on radius `a`.
pub fn vsh_eval(pol: Polarization, mode: ModeIndex, theta: f64, phi: f64, a: f64) -> Result<C3> {
    let mode = ModeIndex::new(mode.n, mode.m)?;
    if mode.n > MAX_DEGREE {
        return Err(GibcError::Range(format!("degree {} exceeds {MAX_DEGREE}", mode.n)));
    }
    if !(a > 0.0) {
        return Err(GibcError::Domain(format!("radius must be positive, got {a}")));
    }
    let table = LegendreTable::new(mode.n, theta);
    let (ct, cp) = vsh_components(&table, pol, mode, phi, a);
    let (_, th, ph) = spherical_frame(theta, phi);
    Ok([
        ct * th[0] + cp * ph[0],
        ct * th[1] + cp * ph[1],
        ct * th[2] + cp * ph[2],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series `j_n(x) = x^n Σ_k (-x²/2)^k / (k! (2n+2k+1)!!)`, 30 terms.
    fn j_series(n: usize, x: f64) -> f64 {
        let mut dfact = 1.0;
        for k in 1..=n {
            dfact *= (2 * k + 1) as f64;
        }
        let mut term = x.powi(n as i32) / dfact;
        let mut sum = term;
        for k in 1..30 {
            term *= -x * x / (2.0 * k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn j0_matches_series() {
        let v = sph_bessel(BesselKind::J, 0, 1.0).unwrap();
        assert!((v.re - j_series(0, 1.0)).abs() < 1e-15);
        assert!((v.re - 0.841470984807897).abs() < 1e-14);
    }

    #[test]
    fn j_small_argument_vanishes() {
        let v = sph_bessel(BesselKind::J, 1, 1e-12).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn series_agreement_downward_regime() {
        for n in [2usize, 5, 10, 20] {
            for x in [0.3, 1.0, 2.5] {
                let v = sph_bessel(BesselKind::J, n, x).unwrap().re;
                let s = j_series(n, x);
                assert!((v - s).abs() <= 1e-13 * s.abs(), "n={n} x={x}: {v} vs {s}");
            }
        }
    }

    #[test]
    fn h0_closed_form() {
        let v = sph_bessel(BesselKind::H1, 0, 1.0).unwrap();
        let closed = -I * Complex64::new(0.0, 1.0).exp();
        assert!((v - closed).norm() < 1e-15);
        assert!((v.re - 0.841470984807897).abs() < 1e-14);
        assert!((v.im + 0.540302305868140).abs() < 1e-14);
    }

    #[test]
    fn domain_and_range_errors() {
        assert!(matches!(sph_bessel(BesselKind::J, 1, 0.0), Err(GibcError::Domain(_))));
        assert!(matches!(sph_bessel(BesselKind::J, 1, -1.0), Err(GibcError::Domain(_))));
        assert!(matches!(sph_bessel(BesselKind::J, 201, 1.0), Err(GibcError::Range(_))));
        assert!(matches!(sph_bessel(BesselKind::Y, 200, 0.1), Err(GibcError::Range(_))));
    }

    #[test]
    fn riccati_j0_at_pi() {
        let v = riccati_deriv(BesselKind::J, 0, PI).unwrap();
        assert!((v.re + 1.0).abs() < 1e-14);
    }

    fn riccati_fd(kind: BesselKind, n: usize, x: f64) -> Complex64 {
        let h = 1e-5;
        let f = |t: f64| t * sph_bessel(kind, n, t).unwrap();
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn riccati_finite_difference() {
        let d = riccati_deriv(BesselKind::J, 1, 1.0).unwrap();
        assert!((d - riccati_fd(BesselKind::J, 1, 1.0)).norm() < 1e-8);
        let d = riccati_deriv(BesselKind::H1, 1, 2.0).unwrap();
        assert!((d - riccati_fd(BesselKind::H1, 1, 2.0)).norm() < 1e-8);
    }

    #[test]
    fn wronskian_holds() {
        let xs = [0.1, 0.5, 1.0, 3.0, 7.5, 12.0, 25.0, 50.0];
        for &x in &xs {
            let j = j_values(51, x);
            let y = y_values(51, x);
            for n in 0..=50 {
                if !y[n + 1].is_finite() {
                    continue;
                }
                let jp = if n == 0 { -j[1] } else { j[n - 1] - (n + 1) as f64 / x * j[n] };
                let yp = if n == 0 { -y[1] } else { y[n - 1] - (n + 1) as f64 / x * y[n] };
                let w = j[n] * yp - jp * y[n];
                let expected = 1.0 / (x * x);
                assert!(
                    ((w - expected) / expected).abs() <= 1e-10,
                    "n={n} x={x}: {w} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn recurrence_consistency() {
        for kind in [BesselKind::J, BesselKind::Y, BesselKind::H1] {
            for &x in &[0.7, 3.0, 20.0] {
                let z = sph_bessel_array(kind, 30, x).unwrap();
                for n in 1..30 {
                    let lhs = z[n - 1] + z[n + 1];
                    let rhs = z[n] * ((2 * n + 1) as f64 / x);
                    let scale = lhs.norm().max(rhs.norm()).max(z[n].norm());
                    assert!((lhs - rhs).norm() <= 1e-10 * scale, "{kind:?} n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn log_derivative_matches_direct() {
        for n in [1usize, 4, 15] {
            for x in [0.5, 2.0, 9.0] {
                let (h, d) = sph_bessel_with_riccati(BesselKind::H1, n, x).unwrap();
                let direct = d[n] / (x * h[n]);
                let rec = hankel_log_derivative(n, x).unwrap();
                assert!((direct - rec).norm() < 1e-11 * direct.norm());
            }
        }
    }

    #[test]
    fn ylm_constants() {
        let y00 = ylm(0, 0, 0.3, 1.2).unwrap();
        assert!((y00.re - 0.282094791773878).abs() < 1e-14);
        let y10 = ylm(1, 0, 0.0, 0.0).unwrap();
        assert!((y10.re - 0.488602511902920).abs() < 1e-14);
        assert!(matches!(ylm(2, 3, 0.1, 0.1), Err(GibcError::Domain(_))));
    }

    #[test]
    fn ylm_negative_order_symmetry() {
        let (t, p) = (1.1, 0.7);
        for n in 1..6 {
            for m in 1..=n as i32 {
                let a = ylm(n, m, t, p).unwrap();
                let b = ylm(n, -m, t, p).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((b - sign * a.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (t, p) = (1.1, 0.7);
        let h = 1e-6;
        for n in 1..6 {
            let table = LegendreTable::new(n, t);
            for m in -(n as i32)..=n as i32 {
                let (gt, gp) = table.grad_ylm(n, m, p);
                let dt = (ylm(n, m, t + h, p).unwrap() - ylm(n, m, t - h, p).unwrap()) / (2.0 * h);
                let dp = (ylm(n, m, t, p + h).unwrap() - ylm(n, m, t, p - h).unwrap())
                    / (2.0 * h * t.sin());
                assert!((gt - dt).norm() < 1e-8, "theta n={n} m={m}");
                assert!((gp - dp).norm() < 1e-8, "phi n={n} m={m}");
            }
        }
    }

    #[test]
    fn grad_type_y10_points_along_minus_theta() {
        let (t, p) = (0.9, 0.3);
        let u = vsh_eval(Polarization::GradType, ModeIndex::new(1, 0).unwrap(), t, p, 1.0).unwrap();
        let (_, th, _) = spherical_frame(t, p);
        // ∇_S Y_1^0 = -√(3/4π) sin θ θ̂, divided by √2
        let coeff = -(3.0 / (4.0 * PI)).sqrt() * t.sin() / 2f64.sqrt();
        for k in 0..3 {
            assert!((u[k] - coeff * th[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn pole_values_are_finite_and_tangential() {
        for &t in &[0.0, PI] {
            for n in 1..5 {
                for m in -(n as i32)..=n as i32 {
                    let mode = ModeIndex::new(n, m).unwrap();
                    let u = vsh_eval(Polarization::GradType, mode, t, 0.4, 1.0).unwrap();
                    assert!(u.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
                    assert!(u[2].norm() < 1e-14);
                }
            }
        }
    }
}
