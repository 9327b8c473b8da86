//! Small fixed-size 3-vector helpers for real and complex vectors.

use num_complex::Complex64;

pub type R3 = [f64; 3];
pub type C3 = [Complex64; 3];

pub const C3_ZERO: C3 = [Complex64::new(0.0, 0.0); 3];

#[inline]
pub fn dot(a: &R3, b: &R3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &R3, b: &R3) -> R3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn sub(a: &R3, b: &R3) -> R3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &R3, b: &R3) -> R3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(s: f64, a: &R3) -> R3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn norm(a: &R3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &R3) -> R3 {
    let n = norm(a);
    scale(1.0 / n, a)
}

#[inline]
pub fn to_complex(a: &R3) -> C3 {
    [a[0].into(), a[1].into(), a[2].into()]
}

/// Bilinear dot product (no conjugation).
#[inline]
pub fn cdot(a: &C3, b: &C3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Hermitian product `a · conj(b)`.
#[inline]
pub fn cdot_conj(a: &C3, b: &C3) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

#[inline]
pub fn rdot(a: &R3, b: &C3) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

#[inline]
pub fn ccross(a: &C3, b: &C3) -> C3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn rcross(a: &R3, b: &C3) -> C3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

#[inline]
pub fn cadd(a: &C3, b: &C3) -> C3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn csub(a: &C3, b: &C3) -> C3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn cscale(s: Complex64, a: &C3) -> C3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn cnorm_sq(a: &C3) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

#[inline]
pub fn cnorm(a: &C3) -> f64 {
    cnorm_sq(a).sqrt()
}

/// Spherical coordinates `(r, theta, phi)` of a Cartesian point.
pub fn to_spherical(x: &R3) -> (f64, f64, f64) {
    let r = norm(x);
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    (r, theta, phi)
}

/// Orthonormal frame `(r_hat, theta_hat, phi_hat)` at angles `(theta, phi)`.
pub fn spherical_frame(theta: f64, phi: f64) -> (R3, R3, R3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        [st * cp, st * sp, ct],
        [ct * cp, ct * sp, -st],
        [-sp, cp, 0.0],
    )
}
