//! Gauss–Legendre rules and a product rule on spheres, plus the tangential
//! projection onto the `U_n^m` / `V_n^m` basis built on top of it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::special::LegendreTable;
use crate::vec3::{cdot, spherical_frame, C3, R3};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // recompute the derivative at the converged node
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let pnm1 = if n == 1 { 1.0 } else { p0 };
        if n > 0 {
            dp = nf * (z * p1 - pnm1) / (z * z - 1.0);
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

/// Tensor rule on a sphere: Gauss–Legendre in `cos θ`, trapezoid in `φ`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub theta: Vec<f64>,
    /// Weights for `d(cos θ)`.
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let theta = x.iter().map(|c| c.acos()).collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        SphereQuadrature {
            theta,
            theta_weights: w,
            phi,
        }
    }

    /// Rule adequate for products of fields band-limited to degree `nmax`:
    /// `2 nmax` Gauss points in θ, `4 nmax` trapezoid points in φ.
    pub fn for_degree(nmax: usize) -> Self {
        let n = nmax.max(2);
        Self::new(2 * n, 4 * n)
    }

    #[inline]
    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.phi.len() as f64
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `∫ g ds` over the sphere of radius `r` for a complex integrand given at
    /// `(x, θ, φ)`.
    pub fn integrate<F>(&self, r: f64, mut g: F) -> Complex64
    where
        F: FnMut(&R3, f64, f64) -> Complex64,
    {
        let wphi = self.phi_weight();
        let mut total = Complex64::new(0.0, 0.0);
        for (&t, &wt) in self.theta.iter().zip(&self.theta_weights) {
            let mut ring = Complex64::new(0.0, 0.0);
            for &p in &self.phi {
                let (rh, _, _) = spherical_frame(t, p);
                let x = [r * rh[0], r * rh[1], r * rh[2]];
                ring += g(&x, t, p);
            }
            total += ring * wt;
        }
        total * (wphi * r * r)
    }
}

/// Number of tangential modes with `1 <= n <= nmax`.
#[inline]
pub fn mode_count(nmax: usize) -> usize {
    (nmax + 1) * (nmax + 1) - 1
}

/// Flat position of `(n, m)` in the ordering `n` ascending, then `m` ascending.
#[inline]
pub fn flat_index(n: usize, m: i32) -> usize {
    ((n * n + n - 1) as isize + m as isize) as usize
}

/// L²-projection of a tangential field on the sphere of radius `a` onto
/// `U_n^m` (first vector) and `V_n^m` (second), `1 <= n <= nmax`, flat order.
///
/// The field is sampled once per quadrature node; the φ-sum is done per order
/// `m` before the θ-sum, so the cost is `O(points · nmax)`.
pub fn project_tangential<F>(
    quad: &SphereQuadrature,
    a: f64,
    nmax: usize,
    mut field: F,
) -> (Vec<Complex64>, Vec<Complex64>)
where
    F: FnMut(&R3) -> C3,
{
    let count = mode_count(nmax);
    let mut alpha = vec![Complex64::new(0.0, 0.0); count];
    let mut beta = vec![Complex64::new(0.0, 0.0); count];
    let nphi = quad.phi.len();
    let wphi = quad.phi_weight();
    let mut f_theta = vec![Complex64::new(0.0, 0.0); nphi];
    let mut f_phi = vec![Complex64::new(0.0, 0.0); nphi];
    let mm = nmax as i32;
    let mut ft = vec![Complex64::new(0.0, 0.0); 2 * nmax + 1];
    let mut fp = vec![Complex64::new(0.0, 0.0); 2 * nmax + 1];
    let i = Complex64::new(0.0, 1.0);

    for (&t, &wt) in quad.theta.iter().zip(&quad.theta_weights) {
        for (j, &p) in quad.phi.iter().enumerate() {
            let (rh, th, ph) = spherical_frame(t, p);
            let x = [a * rh[0], a * rh[1], a * rh[2]];
            let v = field(&x);
            let thc = [th[0].into(), th[1].into(), th[2].into()];
            let phc = [ph[0].into(), ph[1].into(), ph[2].into()];
            f_theta[j] = cdot(&v, &thc);
            f_phi[j] = cdot(&v, &phc);
        }
        for m in -mm..=mm {
            let mut st = Complex64::new(0.0, 0.0);
            let mut sp = Complex64::new(0.0, 0.0);
            for (j, &p) in quad.phi.iter().enumerate() {
                let e = Complex64::from_polar(1.0, -(m as f64) * p);
                st += f_theta[j] * e;
                sp += f_phi[j] * e;
            }
            ft[(m + mm) as usize] = st * wphi;
            fp[(m + mm) as usize] = sp * wphi;
        }
        let table = LegendreTable::new(nmax, t);
        // area element a² d(cosθ) dφ, basis scale 1/(a c)
        for n in 1..=nmax {
            let c = ((n * (n + 1)) as f64).sqrt();
            let scale = wt * a / c;
            for m in -(n as i32)..=n as i32 {
                let ma = m.unsigned_abs() as usize;
                let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
                let dp = table.dp_dtheta(n, ma);
                let q = if ma == 0 { 0.0 } else { table.p_over_sin(n, ma) };
                let mq = i * (m as f64 * q);
                let k = (m + mm) as usize;
                let idx = flat_index(n, m);
                alpha[idx] += sign * scale * (ft[k] * dp - mq * fp[k]);
                beta[idx] += sign * scale * (mq * ft[k] + fp[k] * dp);
            }
        }
    }
    (alpha, beta)
}
