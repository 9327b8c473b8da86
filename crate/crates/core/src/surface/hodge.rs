use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::vec3::dot;

use super::{
    basis_gradients, curlvec_gamma, grad_gamma, weak_curl_gamma, weak_div_gamma, ScalarFieldP1,
    TangentFieldP0, TriMesh,
};

/// Real symmetric matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| x[self.cols[k]] * self.vals[k])
                    .sum()
            })
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.cols[k] == j)
            .map_or(0.0, |k| self.vals[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[k]] = self.vals[k];
            }
        }
        d
    }
}

/// Stiffness matrix `K_ij = ∫ ∇φ_i · ∇φ_j ds`.
pub fn laplacian_matrix(mesh: &TriMesh) -> Result<CsrMatrix> {
    let mut t = Vec::with_capacity(9 * mesh.faces.len());
    for (f, face) in mesh.faces.iter().enumerate() {
        let g = basis_gradients(mesh, f)?;
        for a in 0..3 {
            for b in 0..3 {
                t.push((face[a], face[b], mesh.areas[f] * dot(&g[a], &g[b])));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.vertices.len(), t))
}

/// Consistent P1 mass matrix `M_ij = ∫ φ_i φ_j ds`.
pub fn mass_matrix(mesh: &TriMesh) -> CsrMatrix {
    let mut t = Vec::with_capacity(9 * mesh.faces.len());
    for (f, face) in mesh.faces.iter().enumerate() {
        let a = mesh.areas[f];
        for p in 0..3 {
            for q in 0..3 {
                let w = if p == q { a / 6.0 } else { a / 12.0 };
                t.push((face[p], face[q], w));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.vertices.len(), t)
}

fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate gradients for a symmetric positive (semi)definite matrix.
/// With `project`, iterates are kept orthogonal to the constants, which
/// solves the singular Laplace system for a right-hand side of zero sum.
fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[Complex64],
    tol: f64,
    project: bool,
) -> Result<Vec<Complex64>> {
    let n = b.len();
    let proj = |v: &mut Vec<Complex64>| {
        if project {
            let mean: Complex64 = v.iter().sum::<Complex64>() / n as f64;
            v.iter_mut().for_each(|z| *z -= mean);
        }
    };
    let mut rhs = b.to_vec();
    proj(&mut rhs);
    let bn = vnorm(&rhs);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = hdot(&r, &r).re;
    for _ in 0..(10 * n).max(100) {
        let mut ap = a.mul(&p);
        proj(&mut ap);
        let pap = hdot(&p, &ap).re;
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = hdot(&r, &r).re;
        if rr_new.sqrt() <= tol * bn {
            proj(&mut x);
            return Ok(x);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(GibcError::Topology(
        "conjugate gradients did not converge (singular system)".into(),
    ))
}

/// Output of [`hodge_decompose_mesh`]: `v = grad p + curlvec q + r`.
#[derive(Debug, Clone)]
pub struct HodgeDecomposition {
    pub p: ScalarFieldP1,
    pub q: ScalarFieldP1,
    pub r: TangentFieldP0,
    /// `‖r‖_{L²}`
    pub residual_norm: f64,
}

/// Removes the area-weighted mean `∫ p ds / |Γ|` of a P1 scalar.
fn remove_mean(mesh: &TriMesh, x: &mut [Complex64]) {
    let mut lumped = vec![0.0; mesh.vertices.len()];
    for (f, face) in mesh.faces.iter().enumerate() {
        for &v in face {
            lumped[v] += mesh.areas[f] / 3.0;
        }
    }
    let total: f64 = lumped.iter().sum();
    let mean: Complex64 = x.iter().zip(&lumped).map(|(z, w)| z * w).sum::<Complex64>() / total;
    x.iter_mut().for_each(|z| *z -= mean);
}

/// Discrete Helmholtz–Hodge splitting on a closed genus-0 mesh. `p` and `q`
/// solve `K p = −weak_div v` and `K q = weak_curl v` with zero mean.
pub fn hodge_decompose_mesh(mesh: &TriMesh, v: &TangentFieldP0) -> Result<HodgeDecomposition> {
    if mesh.connected_components() != 1 {
        return Err(GibcError::Topology(format!(
            "mesh has {} connected components; the Laplace systems are singular",
            mesh.connected_components()
        )));
    }
    if mesh.euler_characteristic() != 2 {
        return Err(GibcError::Topology(format!(
            "Euler characteristic {} (genus-0 surface required)",
            mesh.euler_characteristic()
        )));
    }
    let k = laplacian_matrix(mesh)?;
    let div = weak_div_gamma(mesh, v)?;
    let curl = weak_curl_gamma(mesh, v)?;
    let b_p: Vec<Complex64> = div.iter().map(|z| -z).collect();
    let mut p = conjugate_gradient(&k, &b_p, 1e-13, true)?;
    let mut q = conjugate_gradient(&k, &curl, 1e-13, true)?;
    remove_mean(mesh, &mut p);
    remove_mean(mesh, &mut q);
    let p = ScalarFieldP1 { values: p };
    let q = ScalarFieldP1 { values: q };
    let recon = grad_gamma(mesh, &p)?.add(&curlvec_gamma(mesh, &q)?);
    let r = v.sub(&recon);
    let residual_norm = r.l2_norm(mesh);
    Ok(HodgeDecomposition {
        p,
        q,
        r,
        residual_norm,
    })
}

/// `‖div_h grad p‖² / ‖grad p‖²` with the discrete divergence taken in the
/// P1 space, i.e. `pᴴ K M⁻¹ K p / pᴴ K p`. For `p` sampled from `Y_n^m` this
/// tends to `n(n+1)/a²`.
pub fn vector_laplacian_rayleigh(mesh: &TriMesh, p: &ScalarFieldP1) -> Result<f64> {
    let k = laplacian_matrix(mesh)?;
    let m = mass_matrix(mesh);
    let kp = k.mul(&p.values);
    let div = conjugate_gradient(&m, &kp, 1e-13, false)?;
    let num = hdot(&kp, &div).re;
    let den = hdot(&p.values, &kp).re;
    Ok(num / den)
}
