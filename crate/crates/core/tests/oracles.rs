//! Checks against independent references: closed forms, dense linear
//! algebra and classical scattering limits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use gibc::mie::{mie_far_field, mie_rcs, MieSurface};
use gibc::quadrature::{gauss_legendre, SphereQuadrature};
use gibc::special::{sph_bessel, ylm, BesselKind};
use gibc::surface::{icosphere, laplacian_matrix, mass_matrix, CsrMatrix};

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.n, m.n, |i, j| rows[i][j])
}

#[test]
fn stiffness_is_psd_with_constant_kernel() {
    let mesh = icosphere(2, 1.0).unwrap();
    let k = dense(&laplacian_matrix(&mesh).unwrap());
    assert!((&k - k.transpose()).amax() < 1e-14);
    let eig = SymmetricEigen::new(k);
    let mut values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(values[0].abs() < 1e-12, "smallest eigenvalue {}", values[0]);
    assert!(values[1] > 1e-3, "kernel is not one-dimensional: {}", values[1]);
}

#[test]
fn generalized_eigenvalues_approach_sphere_spectrum() {
    // K x = μ M x: the first nonzero cluster approximates n(n+1) = 2, three-fold.
    let mesh = icosphere(3, 1.0).unwrap();
    let k = dense(&laplacian_matrix(&mesh).unwrap());
    let m = dense(&mass_matrix(&mesh));
    let l = m.clone().cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let sym = &li * k * li.transpose();
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for v in &values[1..4] {
        assert!((v - 2.0).abs() < 2e-2, "{v}");
    }
    for v in &values[4..9] {
        assert!((v - 6.0).abs() < 1.5e-1, "{v}");
    }
    let area: f64 = m.iter().sum();
    assert!((area - mesh.total_area()).abs() < 1e-12 * area);
}

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    for n in [1usize, 4, 9, 20] {
        let (x, w) = gauss_legendre(n);
        for deg in 0..2 * n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
            assert!((q - exact).abs() < 1e-14, "n {n}, degree {deg}: {q}");
        }
    }
}

#[test]
fn spherical_bessel_closed_forms_and_wronskian() {
    for x in [0.1, 1.0, 3.7, 25.0] {
        let (s, c) = (f64::sin(x), f64::cos(x));
        let j0 = s / x;
        let j1 = s / (x * x) - c / x;
        let y0 = -c / x;
        let y1 = -c / (x * x) - s / x;
        let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
        for (kind, n, expect) in [
            (BesselKind::J, 0, j0),
            (BesselKind::J, 1, j1),
            (BesselKind::J, 2, j2),
            (BesselKind::Y, 0, y0),
            (BesselKind::Y, 1, y1),
        ] {
            let got = sph_bessel(kind, n, x).unwrap().re;
            // the closed forms themselves cancel like 1/x² for small x
            let tol = 1e-14 * (1.0 + 1.0 / (x * x)) * expect.abs().max(1.0 / x);
            assert!((got - expect).abs() <= tol, "{kind:?} {n} at {x}: {got} vs {expect}");
        }
        // j_n y_{n-1} - j_{n-1} y_n = 1/x² for all n
        for n in 1..30 {
            let j = |k| sph_bessel(BesselKind::J, k, x).unwrap().re;
            let y = |k| sph_bessel(BesselKind::Y, k, x).unwrap().re;
            let w = j(n) * y(n - 1) - j(n - 1) * y(n);
            let scale = (j(n) * y(n - 1)).abs() + (j(n - 1) * y(n)).abs();
            if scale.is_finite() {
                assert!((w * x * x - 1.0).abs() <= 1e-12 * scale * x * x, "n {n} at {x}");
            }
        }
    }
}

#[test]
fn spherical_harmonics_are_orthonormal() {
    let quad = SphereQuadrature::for_degree(8);
    let modes: Vec<(usize, i32)> = (0..=6).flat_map(|n| (-(n as i32)..=n as i32).map(move |m| (n, m))).collect();
    for &(n1, m1) in &modes {
        for &(n2, m2) in &modes {
            let g = quad.integrate(1.0, |_, t, p| ylm(n1, m1, t, p).unwrap() * ylm(n2, m2, t, p).unwrap().conj());
            let expect = if (n1, m1) == (n2, m2) { 1.0 } else { 0.0 };
            assert!((g - Complex64::new(expect, 0.0)).norm() < 1e-13, "({n1},{m1}) ({n2},{m2})");
        }
    }
}

#[test]
fn small_pec_sphere_follows_rayleigh_law() {
    // backscatter of a small conducting sphere: σ = 9π ω⁴ a⁶
    let (omega, a) = (0.01, 1.0);
    let sigma = mie_rcs(MieSurface::Pec, omega, a, &[0.0, 0.0, -1.0]).unwrap();
    let rayleigh = 9.0 * PI * omega.powi(4) * a.powi(6);
    assert!((sigma / rayleigh - 1.0).abs() < 1e-3, "{sigma} vs {rayleigh}");
}

#[test]
fn lossless_sphere_satisfies_optical_theorem() {
    // extinction from the forward amplitude equals the integrated scattered power
    for surface in [MieSurface::Pec, MieSurface::Impedance(Complex64::new(0.0, 0.7))] {
        let (omega, a) = (1.3, 1.0);
        let quad = SphereQuadrature::new(60, 120);
        let scattered = quad.integrate(1.0, |_, t, p| {
            let (et, ep) = mie_far_field(surface, omega, a, t, p, None).unwrap();
            Complex64::new(et.norm_sqr() + ep.norm_sqr(), 0.0)
        });
        let (et, _) = mie_far_field(surface, omega, a, 0.0, 0.0, None).unwrap();
        let extinction = 4.0 * PI / omega * et.im;
        assert!(
            (scattered.re - extinction.abs()).abs() < 1e-10 * scattered.re,
            "{surface:?}: {} vs {}",
            scattered.re,
            extinction
        );
    }
}
