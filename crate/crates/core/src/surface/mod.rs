//! Discrete tangential calculus on closed oriented triangle meshes.
//!
//! Scalars are continuous piecewise linear (one value per vertex), tangent
//! fields are constant per face. Every pairing between the two spaces is then
//! integrated exactly, so the weak divergence and weak scalar curl are exact
//! adjoints of the discrete surface gradient and vector curl:
//!
//! ```text
//! grad p|_f      = Σ_i p_i ∇φ_i,      ∇φ_i = ν × e_i / (2 A_f)
//! curlvec p|_f   = −ν × grad p|_f
//! weak_div(v)_i  = −Σ_f A_f ∇φ_i · v_f
//! weak_curl(v)_i =  Σ_f A_f curlvec φ_i · v_f
//! ```
//!
//! where `e_i` is the edge opposite vertex `i`, traversed counter-clockwise.

mod hodge;
mod icosphere;
mod mesh;

pub use hodge::{
    hodge_decompose_mesh, laplacian_matrix, mass_matrix, vector_laplacian_rayleigh, CsrMatrix,
    HodgeDecomposition,
};
pub use icosphere::icosphere;
pub use mesh::TriMesh;

use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::vec3::{cross, rdot, rcross, scale, C3, R3};

/// Complex values at the mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldP1 {
    pub values: Vec<Complex64>,
}

/// One complex tangent vector per face.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFieldP0 {
    pub vectors: Vec<C3>,
}

/// Vertex-indexed linear functional on P1 scalars (a dual vector).
pub type DualP1 = Vec<Complex64>;

impl ScalarFieldP1 {
    pub fn from_fn(mesh: &TriMesh, f: impl Fn(&R3) -> Complex64) -> Self {
        ScalarFieldP1 {
            values: mesh.vertices.iter().map(f).collect(),
        }
    }

    pub fn zeros(mesh: &TriMesh) -> Self {
        ScalarFieldP1 {
            values: vec![Complex64::new(0.0, 0.0); mesh.vertices.len()],
        }
    }
}

impl TangentFieldP0 {
    /// Builds a field, checking length and tangentiality `|v·ν| <= 1e-12 |v|`.
    pub fn new(mesh: &TriMesh, vectors: Vec<C3>) -> Result<Self> {
        if vectors.len() != mesh.faces.len() {
            return Err(GibcError::Parameter(format!(
                "tangent field has {} vectors for {} faces",
                vectors.len(),
                mesh.faces.len()
            )));
        }
        for (f, v) in vectors.iter().enumerate() {
            let vn = rdot(&mesh.face_normals[f], v).norm();
            if vn > 1e-12 * crate::vec3::cnorm(v).max(f64::MIN_POSITIVE) && vn > 0.0 {
                return Err(GibcError::Parameter(format!(
                    "vector on face {f} is not tangential (|v·ν| = {vn:.3e})"
                )));
            }
        }
        Ok(TangentFieldP0 { vectors })
    }

    /// Samples `f` at face barycenters and projects onto each face plane.
    pub fn from_fn(mesh: &TriMesh, f: impl Fn(&R3) -> C3) -> Self {
        let vectors = (0..mesh.faces.len())
            .map(|k| {
                let v = f(&mesh.barycenter(k));
                project_tangent(&mesh.face_normals[k], &v)
            })
            .collect();
        TangentFieldP0 { vectors }
    }

    /// `ν × v` face by face.
    pub fn rotate(&self, mesh: &TriMesh) -> Self {
        TangentFieldP0 {
            vectors: self
                .vectors
                .iter()
                .zip(&mesh.face_normals)
                .map(|(v, n)| rcross(n, v))
                .collect(),
        }
    }

    /// `(∫ |v|² ds)^{1/2}`.
    pub fn l2_norm(&self, mesh: &TriMesh) -> f64 {
        self.vectors
            .iter()
            .zip(&mesh.areas)
            .map(|(v, a)| a * crate::vec3::cnorm_sq(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        TangentFieldP0 {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| crate::vec3::csub(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        TangentFieldP0 {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| crate::vec3::cadd(a, b))
                .collect(),
        }
    }
}

/// Removes the normal component of `v`.
pub fn project_tangent(n: &R3, v: &C3) -> C3 {
    let vn = rdot(n, v);
    [v[0] - vn * n[0], v[1] - vn * n[1], v[2] - vn * n[2]]
}

/// The three basis gradients `∇φ_i` of face `f`.
fn basis_gradients(mesh: &TriMesh, f: usize) -> Result<[R3; 3]> {
    let area = mesh.areas[f];
    if area <= mesh.degenerate_threshold() {
        return Err(GibcError::Assembly {
            face: f,
            reason: format!("degenerate triangle (area {area:.3e})"),
        });
    }
    let [i, j, k] = mesh.faces[f];
    let (xi, xj, xk) = (&mesh.vertices[i], &mesh.vertices[j], &mesh.vertices[k]);
    let n = &mesh.face_normals[f];
    let s = 1.0 / (2.0 * area);
    let g = |a: &R3, b: &R3| scale(s, &cross(n, &crate::vec3::sub(b, a)));
    // edge opposite i runs j → k, opposite j runs k → i, opposite k runs i → j
    Ok([g(xj, xk), g(xk, xi), g(xi, xj)])
}

fn check_scalar(mesh: &TriMesh, p: &ScalarFieldP1) -> Result<()> {
    if p.values.len() != mesh.vertices.len() {
        return Err(GibcError::Parameter(format!(
            "scalar field has {} values for {} vertices",
            p.values.len(),
            mesh.vertices.len()
        )));
    }
    Ok(())
}

fn check_tangent(mesh: &TriMesh, v: &TangentFieldP0) -> Result<()> {
    if v.vectors.len() != mesh.faces.len() {
        return Err(GibcError::Parameter(format!(
            "tangent field has {} vectors for {} faces",
            v.vectors.len(),
            mesh.faces.len()
        )));
    }
    Ok(())
}

/// Per-face gradient of the linear interpolant.
pub fn grad_gamma(mesh: &TriMesh, p: &ScalarFieldP1) -> Result<TangentFieldP0> {
    check_scalar(mesh, p)?;
    let mut vectors = Vec::with_capacity(mesh.faces.len());
    for (f, face) in mesh.faces.iter().enumerate() {
        let g = basis_gradients(mesh, f)?;
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for (local, &vi) in face.iter().enumerate() {
            for d in 0..3 {
                v[d] += p.values[vi] * g[local][d];
            }
        }
        vectors.push(v);
    }
    Ok(TangentFieldP0 { vectors })
}

/// `curlvec p = −ν × grad p` per face.
pub fn curlvec_gamma(mesh: &TriMesh, p: &ScalarFieldP1) -> Result<TangentFieldP0> {
    let g = grad_gamma(mesh, p)?;
    Ok(TangentFieldP0 {
        vectors: g
            .vectors
            .iter()
            .zip(&mesh.face_normals)
            .map(|(v, n)| crate::vec3::cscale(Complex64::new(-1.0, 0.0), &rcross(n, v)))
            .collect(),
    })
}

/// `w_i = −∫ ∇φ_i · v ds`, the weak surface divergence.
pub fn weak_div_gamma(mesh: &TriMesh, v: &TangentFieldP0) -> Result<DualP1> {
    check_tangent(mesh, v)?;
    let mut w = vec![Complex64::new(0.0, 0.0); mesh.vertices.len()];
    for (f, face) in mesh.faces.iter().enumerate() {
        let g = basis_gradients(mesh, f)?;
        let a = mesh.areas[f];
        for (local, &vi) in face.iter().enumerate() {
            w[vi] -= a * rdot(&g[local], &v.vectors[f]);
        }
    }
    Ok(w)
}

/// `w_i = ∫ curlvec φ_i · v ds`, the weak scalar surface curl.
pub fn weak_curl_gamma(mesh: &TriMesh, v: &TangentFieldP0) -> Result<DualP1> {
    check_tangent(mesh, v)?;
    let mut w = vec![Complex64::new(0.0, 0.0); mesh.vertices.len()];
    for (f, face) in mesh.faces.iter().enumerate() {
        let g = basis_gradients(mesh, f)?;
        let a = mesh.areas[f];
        let n = &mesh.face_normals[f];
        for (local, &vi) in face.iter().enumerate() {
            let cv = scale(-1.0, &cross(n, &g[local]));
            w[vi] += a * rdot(&cv, &v.vectors[f]);
        }
    }
    Ok(w)
}

/// `⟨ξ, w⟩ = Σ conj(ξ_i) w_i`.
pub fn pair_dual(xi: &ScalarFieldP1, w: &DualP1) -> Complex64 {
    xi.values.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// `∫ a · conj(b) ds` for two face-constant fields.
pub fn inner_p0(mesh: &TriMesh, a: &TangentFieldP0, b: &TangentFieldP0) -> Complex64 {
    a.vectors
        .iter()
        .zip(&b.vectors)
        .zip(&mesh.areas)
        .map(|((x, y), w)| *w * crate::vec3::cdot_conj(x, y))
        .sum()
}
