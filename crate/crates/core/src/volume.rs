//! Bounded-domain formulation on the shell `a < r < R`, reduced to one radial
//! problem per mode and closed by the transparent operator at `r = R`.
//!
//! The unknown is the magnetic field `H`. With the sphere-of-radius-`r`
//! harmonics `U^s`, `V^s` of the unit sphere and `c = √(n(n+1))`:
//!
//! * curl type: `H = (w/r) V^s`, `curl H = −(c w/r²) Y r̂ − (w'/r) U^s`.
//!   The restricted form is
//!   `∫ w' v̄' + (c²/r² − ω²) w v̄ dr − iω z_V w(a) v̄(a) − iω s_V(ωR) w(R) v̄(R)`.
//! * gradient type: tangential–normal form `H = (W/r) U^s + (Q/c) Y r̂`, which
//!   gives `curl H = ((W' − Q)/r) V^s` and
//!   `∫ (W' − Q)(W̄_v' − Q̄_v) − ω² (r² Q Q̄_v / c² + W W̄_v) dr`
//!   with the same boundary terms acting on `W`. `W` is continuous and `Q`
//!   element-wise discontinuous, the 1-D analogue of edge elements.
//!
//! In both cases the right-hand side is `−iω f v̄(a)` with `f` the data
//! coefficient of the mode, and the magnetic trace coefficient on the sphere of
//! radius `a` is the value of `w` (resp. `W`) at `r = a`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{GibcError, Result};
use crate::quadrature::gauss_legendre;
use crate::scatter::{incident_trace, solve_coefficients, IncidentField};
use crate::special::{sph_bessel_with_riccati, BesselKind, ModeIndex, Polarization};
use crate::spectral::{calderon_block, impedance_eigenvalues, CalderonBlock, ImpedanceModel};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Element partition of `[a, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub a: f64,
    pub r_outer: f64,
    /// Element end points, `a` first and `R` last.
    pub nodes: Vec<f64>,
    /// Polynomial order of the continuous unknown, 1 or 2.
    pub order: usize,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>, order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(GibcError::Parameter(format!("element order must be 1 or 2, got {order}")));
        }
        if nodes.len() < 5 {
            return Err(GibcError::Parameter(format!(
                "radial grid needs at least 4 elements, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.iter().any(|r| !r.is_finite()) || !(nodes[0] > 0.0) {
            return Err(GibcError::Domain("radial nodes must be finite and positive".into()));
        }
        if nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(GibcError::Parameter("radial nodes must be strictly increasing".into()));
        }
        Ok(RadialGrid {
            a: nodes[0],
            r_outer: *nodes.last().unwrap(),
            nodes,
            order,
        })
    }

    pub fn uniform(a: f64, r_outer: f64, elements: usize, order: usize) -> Result<Self> {
        if !(a > 0.0 && r_outer > a) {
            return Err(GibcError::Domain(format!("need 0 < a < R, got a = {a}, R = {r_outer}")));
        }
        let h = (r_outer - a) / elements as f64;
        let mut nodes: Vec<f64> = (0..elements).map(|k| a + k as f64 * h).collect();
        nodes.push(r_outer);
        Self::new(nodes, order)
    }

    /// 64 second-order elements per wavelength `2π/ω`, at least 4.
    pub fn default_for(omega: f64, a: f64, r_outer: f64) -> Result<Self> {
        let per_length = 64.0 * omega / (2.0 * PI);
        let elements = ((r_outer - a) * per_length).ceil().max(4.0) as usize;
        Self::uniform(a, r_outer, elements, 2)
    }

    /// Like [`RadialGrid::default_for`], but resolves the angular oscillation
    /// of degrees up to `nmax`: the local wavenumber is `max(ω, (nmax + ½)/a)`.
    pub fn default_for_degree(omega: f64, a: f64, r_outer: f64, nmax: usize) -> Result<Self> {
        Self::default_for(omega.max((nmax as f64 + 0.5) / a), a, r_outer)
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_h(&self) -> f64 {
        self.nodes.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// Positions of the Lagrange nodes of the continuous unknown.
    pub fn lagrange_nodes(&self) -> Vec<f64> {
        let p = self.order;
        let mut out = Vec::with_capacity(self.elements() * p + 1);
        for e in 0..self.elements() {
            let (r0, r1) = (self.nodes[e], self.nodes[e + 1]);
            for k in 0..p {
                out.push(r0 + (r1 - r0) * k as f64 / p as f64);
            }
        }
        out.push(self.r_outer);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    /// Lagrange interpolation of the continuous unknown.
    Nodal { grid: RadialGrid },
    /// `w = A ψ_n(ωr) + B ξ_n(ωr)` (curl type) or the gradient-type analogue.
    Exact { omega: f64, coeffs: [Complex64; 2] },
}

/// Radial solution of a single mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub mode: ModeIndex,
    pub pol: Polarization,
    /// Values of `w` (curl type) or `W` (gradient type) at [`Self::nodes`].
    pub w: Vec<Complex64>,
    pub nodes: Vec<f64>,
    /// Element-wise Legendre coefficients of `Q` (gradient type, FEM only).
    pub q: Vec<Complex64>,
    /// Coefficient of `U_n^m` or `V_n^m` in `H_T` on the sphere of radius `a`.
    pub trace_coeff: Complex64,
    profile: Profile,
}

impl ModeSolution {
    /// Value of `w` / `W` at radius `r` inside the shell.
    pub fn sample(&self, r: f64) -> Result<Complex64> {
        let (a, big_r) = (self.nodes[0], *self.nodes.last().unwrap());
        if r < a - 1e-12 * a || r > big_r + 1e-12 * big_r {
            return Err(GibcError::Domain(format!("r = {r} outside [{a}, {big_r}]")));
        }
        match &self.profile {
            Profile::Exact { omega, coeffs } => {
                let (psi, xi) = exact_basis(self.pol, self.mode.n, *omega, r)?;
                Ok(coeffs[0] * psi.0 + coeffs[1] * xi.0)
            }
            Profile::Nodal { grid } => {
                let e = grid.nodes.partition_point(|&x| x <= r).clamp(1, grid.elements()) - 1;
                let (r0, r1) = (grid.nodes[e], grid.nodes[e + 1]);
                let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
                let p = grid.order;
                let (phi, _) = lagrange(p, t);
                Ok((0..=p).map(|k| self.w[e * p + k] * phi[k]).sum())
            }
        }
    }
}

/// The transparent operator on the artificial sphere of radius `R`.
///
/// It is the exterior Calderón map evaluated at `R`.
pub fn transparent_block(n: usize, omega: f64, r_outer: f64) -> Result<CalderonBlock> {
    calderon_block(n, omega, r_outer)
}

/// `(w, C)` of the regular and outgoing radial solutions at `r`; `C` is the
/// curl coefficient `W' − Q` for the gradient type and `w'` for the curl type.
type Pair = (Complex64, Complex64);

fn exact_basis(pol: Polarization, n: usize, omega: f64, r: f64) -> Result<(Pair, Pair)> {
    let x = omega * r;
    let (j, dj) = sph_bessel_with_riccati(BesselKind::J, n, x)?;
    let (h, dh) = sph_bessel_with_riccati(BesselKind::H1, n, x)?;
    let (psi, dpsi) = (j[n] * x, dj[n]);
    let (xi, dxi) = (h[n] * x, dh[n]);
    Ok(match pol {
        Polarization::CurlType => ((psi, omega * dpsi), (xi, omega * dxi)),
        Polarization::GradType => ((-I * dpsi / omega, I * psi), (-I * dxi / omega, I * xi)),
    })
}

fn check_setup(omega: f64, a: f64, r_outer: f64) -> Result<()> {
    if !(omega > 0.0) {
        return Err(GibcError::Domain(format!("omega must be positive, got {omega}")));
    }
    if !(a > 0.0 && r_outer > a) {
        return Err(GibcError::Domain(format!("need 0 < a < R, got a = {a}, R = {r_outer}")));
    }
    Ok(())
}

/// Boundary coefficients `(z, s)` for the polarization.
fn robin_terms(
    pol: Polarization,
    model: &ImpedanceModel,
    n: usize,
    omega: f64,
    a: f64,
    r_outer: f64,
) -> Result<(Complex64, Complex64)> {
    let (zu, zv) = impedance_eigenvalues(model, n, a);
    let block = transparent_block(n, omega, r_outer)?;
    Ok(match pol {
        Polarization::GradType => (zu, block.s_u),
        Polarization::CurlType => (zv, block.s_v),
    })
}

/// Solution in the span of the regular and outgoing radial functions, fixed by
/// the two natural boundary conditions
/// `C(R) = iω s w(R)` and `−C(a) − iω z w(a) = −iω f`.
pub fn solve_mode_exact(
    mode: ModeIndex,
    pol: Polarization,
    model: &ImpedanceModel,
    omega: f64,
    a: f64,
    r_outer: f64,
    f_coeff: Complex64,
) -> Result<ModeSolution> {
    check_setup(omega, a, r_outer)?;
    let n = mode.n;
    let (z, s) = robin_terms(pol, model, n, omega, a, r_outer)?;
    let (pa, xa) = exact_basis(pol, n, omega, a)?;
    let (pr, xr) = exact_basis(pol, n, omega, r_outer)?;
    let outer = |b: Pair| b.1 - I * omega * s * b.0;
    let inner = |b: Pair| -b.1 - I * omega * z * b.0;
    let mut m = [[outer(pr), outer(xr)], [inner(pa), inner(xa)]];
    // column equilibration keeps the 2×2 well scaled for large n
    let scales = [
        m[0][0].norm().max(m[1][0].norm()),
        m[0][1].norm().max(m[1][1].norm()),
    ];
    for row in m.iter_mut() {
        row[0] /= scales[0];
        row[1] /= scales[1];
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det.norm() > 1e-14) {
        return Err(GibcError::Resonance {
            n,
            model: model.name().to_string(),
        });
    }
    let rhs = [ZERO, -I * omega * f_coeff];
    let c0 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det / scales[0];
    let c1 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det / scales[1];
    let wa = c0 * pa.0 + c1 * xa.0;
    let wr = c0 * pr.0 + c1 * xr.0;
    Ok(ModeSolution {
        mode,
        pol,
        w: vec![wa, wr],
        nodes: vec![a, r_outer],
        q: Vec::new(),
        trace_coeff: wa,
        profile: Profile::Exact {
            omega,
            coeffs: [c0, c1],
        },
    })
}

/// Lagrange basis of order `p` on equispaced nodes of `[0, 1]`: values and
/// `t`-derivatives.
fn lagrange(p: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    match p {
        1 => (vec![1.0 - t, t], vec![-1.0, 1.0]),
        _ => (
            vec![
                2.0 * (t - 0.5) * (t - 1.0),
                4.0 * t * (1.0 - t),
                2.0 * t * (t - 0.5),
            ],
            vec![4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
        ),
    }
}

/// Legendre polynomials of degree `< p` on `[0, 1]` (discontinuous space).
fn legendre_local(p: usize, t: f64) -> Vec<f64> {
    let s = 2.0 * t - 1.0;
    (0..p).map(|k| if k == 0 { 1.0 } else { s }).collect()
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored with
/// room for the fill-in of partial pivoting.
#[derive(Debug, Clone)]
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            ZERO
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// `y = A x` using the original band.
    fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting. Returns `None` when a pivot
    /// falls below `1e-14` times the largest entry.
    fn solve(mut self, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
        let n = self.n;
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let right = self.kl + self.ku;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut piv = k;
            for i in k + 1..=last {
                if self.get(i, k).norm() > self.get(piv, k).norm() {
                    piv = i;
                }
            }
            let pivot = self.get(piv, k);
            if !(pivot.norm() > 1e-14 * scale) {
                return None;
            }
            let jmax = (k + right).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let (s1, s2) = (self.slot(k, j), self.slot(piv, j));
                    self.data.swap(s1, s2);
                }
                b.swap(k, piv);
            }
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                if l == ZERO {
                    continue;
                }
                for j in k..=jmax {
                    let v = self.get(k, j);
                    let s = self.slot(i, j);
                    self.data[s] -= l * v;
                }
                let bk = b[k];
                b[i] -= l * bk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + right).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=jmax {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
        Some(b)
    }
}

/// Which bilinear form to assemble.
#[derive(Clone, Copy)]
enum FormKind {
    /// The restricted variational form with its boundary terms.
    Problem { z: Complex64, s: Complex64 },
    /// The mode-restricted `H(curl)` inner product `∫ |curl v|² + |v|²`.
    CurlNorm,
}

struct Layout {
    dofs: usize,
    band: usize,
    last_w: usize,
}

fn layout(pol: Polarization, grid: &RadialGrid) -> Layout {
    let p = grid.order;
    let ne = grid.elements();
    match pol {
        Polarization::CurlType => Layout {
            dofs: ne * p + 1,
            band: p,
            last_w: ne * p,
        },
        Polarization::GradType => Layout {
            dofs: ne * 2 * p + 1,
            band: 2 * p,
            last_w: ne * 2 * p,
        },
    }
}

/// Global index of local continuous node `k` (0..=p) of element `e`.
fn w_index(pol: Polarization, p: usize, e: usize, k: usize) -> usize {
    match pol {
        Polarization::CurlType => e * p + k,
        Polarization::GradType => {
            if k == p {
                (e + 1) * 2 * p
            } else {
                e * 2 * p + k
            }
        }
    }
}

fn q_index(p: usize, e: usize, j: usize) -> usize {
    e * 2 * p + p + j
}

fn assemble(
    pol: Polarization,
    n: usize,
    omega: f64,
    grid: &RadialGrid,
    kind: FormKind,
) -> BandMatrix {
    let p = grid.order;
    let lay = layout(pol, grid);
    let mut mat = BandMatrix::new(lay.dofs, lay.band, lay.band);
    let c2 = (n * (n + 1)) as f64;
    let (gx, gw) = gauss_legendre(p + 4);
    let (k_curl, k_mass) = match kind {
        FormKind::Problem { .. } => (1.0, -omega * omega),
        FormKind::CurlNorm => (1.0, 1.0),
    };
    for e in 0..grid.elements() {
        let (r0, r1) = (grid.nodes[e], grid.nodes[e + 1]);
        let h = r1 - r0;
        for (&xg, &wg) in gx.iter().zip(&gw) {
            let t = 0.5 * (xg + 1.0);
            let r = r0 + h * t;
            let wq = 0.5 * wg * h;
            let (phi, dphi_t) = lagrange(p, t);
            let dphi: Vec<f64> = dphi_t.iter().map(|d| d / h).collect();
            match pol {
                Polarization::CurlType => {
                    // |curl|² = |w'|² + c²|w|²/r², |H|² = |w|²
                    for i in 0..=p {
                        for j in 0..=p {
                            let v = k_curl * (dphi[i] * dphi[j] + c2 / (r * r) * phi[i] * phi[j])
                                + k_mass * phi[i] * phi[j];
                            mat.add(w_index(pol, p, e, i), w_index(pol, p, e, j), (v * wq).into());
                        }
                    }
                }
                Polarization::GradType => {
                    let ell = legendre_local(p, t);
                    let rq = r * r / c2;
                    for i in 0..=p {
                        let gi = w_index(pol, p, e, i);
                        for j in 0..=p {
                            let v = k_curl * dphi[i] * dphi[j] + k_mass * phi[i] * phi[j];
                            mat.add(gi, w_index(pol, p, e, j), (v * wq).into());
                        }
                        for j in 0..p {
                            let v = -k_curl * dphi[i] * ell[j];
                            mat.add(gi, q_index(p, e, j), (v * wq).into());
                            mat.add(q_index(p, e, j), gi, (v * wq).into());
                        }
                    }
                    for i in 0..p {
                        for j in 0..p {
                            let v = (k_curl + k_mass * rq) * ell[i] * ell[j];
                            mat.add(q_index(p, e, i), q_index(p, e, j), (v * wq).into());
                        }
                    }
                }
            }
        }
    }
    if let FormKind::Problem { z, s } = kind {
        mat.add(0, 0, -I * omega * z);
        mat.add(lay.last_w, lay.last_w, -I * omega * s);
    }
    mat
}

/// Galerkin solution of the restricted variational form on `grid`.
///
/// `f_coeff` is the data coefficient `f_U` or `f_V` of the mode; the load
/// `−iω f v̄(a)` is formed here.
pub fn solve_mode_fem(
    mode: ModeIndex,
    pol: Polarization,
    model: &ImpedanceModel,
    omega: f64,
    grid: &RadialGrid,
    f_coeff: Complex64,
) -> Result<ModeSolution> {
    check_setup(omega, grid.a, grid.r_outer)?;
    let n = mode.n;
    let (z, s) = robin_terms(pol, model, n, omega, grid.a, grid.r_outer)?;
    let mat = assemble(pol, n, omega, grid, FormKind::Problem { z, s });
    let lay = layout(pol, grid);
    let mut b = vec![ZERO; lay.dofs];
    b[0] = -I * omega * f_coeff;
    let x = mat.solve(b).ok_or_else(|| GibcError::Resonance {
        n,
        model: model.name().to_string(),
    })?;
    let p = grid.order;
    let ne = grid.elements();
    let w: Vec<Complex64> = (0..ne)
        .flat_map(|e| (0..p).map(move |k| (e, k)))
        .map(|(e, k)| x[w_index(pol, p, e, k)])
        .chain(std::iter::once(x[lay.last_w]))
        .collect();
    let q = match pol {
        Polarization::CurlType => Vec::new(),
        Polarization::GradType => (0..ne)
            .flat_map(|e| (0..p).map(move |j| (e, j)))
            .map(|(e, j)| x[q_index(p, e, j)])
            .collect(),
    };
    Ok(ModeSolution {
        mode,
        pol,
        trace_coeff: w[0],
        w,
        nodes: grid.lagrange_nodes(),
        q,
        profile: Profile::Nodal { grid: grid.clone() },
    })
}

/// `∫_a^R |w_h − w|² dr` for a Galerkin solution against a reference profile.
pub fn l2_error(fem: &ModeSolution, reference: &ModeSolution) -> Result<f64> {
    let Profile::Nodal { grid } = &fem.profile else {
        return Err(GibcError::Parameter("first argument must be a Galerkin solution".into()));
    };
    let (gx, gw) = gauss_legendre(grid.order + 6);
    let mut acc = 0.0;
    for e in 0..grid.elements() {
        let (r0, r1) = (grid.nodes[e], grid.nodes[e + 1]);
        for (&xg, &wg) in gx.iter().zip(&gw) {
            let r = r0 + 0.5 * (xg + 1.0) * (r1 - r0);
            acc += 0.5 * wg * (r1 - r0) * (fem.sample(r)? - reference.sample(r)?).norm_sqr();
        }
    }
    Ok(acc.sqrt())
}

/// Lower bound estimate for `|a(v, v)| / ‖v‖²_curl` over random discrete `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityWitness {
    pub c0: f64,
    pub samples: usize,
    pub ratios: Vec<f64>,
}

/// Samples the assembled per-mode form on random discrete fields of both
/// polarizations and reports the smallest ratio `|a(v,v)| / ‖v‖²`.
pub fn coercivity_witness<R: Rng>(
    n: usize,
    model: &ImpedanceModel,
    omega: f64,
    grid: &RadialGrid,
    samples: usize,
    rng: &mut R,
) -> Result<CoercivityWitness> {
    check_setup(omega, grid.a, grid.r_outer)?;
    let mut ratios = Vec::with_capacity(samples);
    for k in 0..samples {
        let pol = if k % 2 == 0 {
            Polarization::GradType
        } else {
            Polarization::CurlType
        };
        let (z, s) = robin_terms(pol, model, n, omega, grid.a, grid.r_outer)?;
        let form = assemble(pol, n, omega, grid, FormKind::Problem { z, s });
        let gram = assemble(pol, n, omega, grid, FormKind::CurlNorm);
        let v: Vec<Complex64> = (0..form.n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let quad = |m: &BandMatrix| -> Complex64 {
            m.mul(&v).iter().zip(&v).map(|(av, x)| x.conj() * av).sum()
        };
        ratios.push(quad(&form).norm() / quad(&gram).re);
    }
    let c0 = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityWitness {
        c0,
        samples,
        ratios,
    })
}

/// Radial solver used by [`volume_surface_equivalence`].
#[derive(Debug, Clone, PartialEq)]
pub enum RadialSolver {
    Exact { r_outer: f64 },
    Fem(RadialGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRow {
    pub n: usize,
    pub m: i32,
    pub pol: Polarization,
    pub surface: Complex64,
    pub volume: Complex64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub max_rel_diff: f64,
}

/// Solves the scattering problem both ways and compares trace coefficients per
/// mode. Relative differences use `|u_surface| + ε` with
/// `ε = 1e-12 · max |u_surface|` so that modes the incident field does not
/// excite do not divide by round-off.
pub fn volume_surface_equivalence(
    model: &ImpedanceModel,
    omega: f64,
    a: f64,
    incident: &IncidentField,
    nmax: usize,
    solver: &RadialSolver,
) -> Result<EquivalenceReport> {
    let f = incident_trace(incident, model, a, nmax)?;
    let (u, _, clamped) = solve_coefficients(&f, model, omega, a, nmax)?;
    let limit = clamped.unwrap_or(nmax);
    let biggest = u
        .alpha
        .iter()
        .chain(&u.beta)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let eps = 1e-12 * biggest + f64::MIN_POSITIVE;
    let mut rows = Vec::new();
    for n in 1..=limit {
        for m in -(n as i32)..=n as i32 {
            let mode = ModeIndex::new(n, m)?;
            for pol in [Polarization::GradType, Polarization::CurlType] {
                let (data, surface) = match pol {
                    Polarization::GradType => (f.alpha_at(n, m), u.alpha_at(n, m)),
                    Polarization::CurlType => (f.beta_at(n, m), u.beta_at(n, m)),
                };
                let sol = match solver {
                    RadialSolver::Exact { r_outer } => {
                        solve_mode_exact(mode, pol, model, omega, a, *r_outer, data)?
                    }
                    RadialSolver::Fem(grid) => {
                        if (grid.a - a).abs() > 1e-14 * a {
                            return Err(GibcError::Parameter(format!(
                                "grid starts at {} but the sphere radius is {a}",
                                grid.a
                            )));
                        }
                        solve_mode_fem(mode, pol, model, omega, grid, data)?
                    }
                };
                let volume = sol.trace_coeff;
                rows.push(EquivalenceRow {
                    n,
                    m,
                    pol,
                    surface,
                    volume,
                    rel_diff: (volume - surface).norm() / (surface.norm() + eps),
                });
            }
        }
    }
    let max_rel_diff = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    Ok(EquivalenceReport { rows, max_rel_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const POLS: [Polarization; 2] = [Polarization::GradType, Polarization::CurlType];

    #[test]
    fn band_solver_matches_dense_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let mut m = BandMatrix::new(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 3).min(n - 1) {
                m.add(i, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        let x: Vec<Complex64> = (0..n).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let b = m.mul(&x);
        let y = m.clone().solve(b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn transparent_block_is_the_exterior_map() {
        for n in 1..6 {
            assert_eq!(transparent_block(n, 1.3, 2.0).unwrap(), calderon_block(n, 1.3, 2.0).unwrap());
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let model = ImpedanceModel::Scalar { lambda: c(1.0, 0.5) };
        let grid = RadialGrid::uniform(1.0, 2.0, 8, 2).unwrap();
        let mode = ModeIndex::new(2, 1).unwrap();
        for pol in POLS {
            let s = solve_mode_fem(mode, pol, &model, 1.0, &grid, ZERO).unwrap();
            assert!(s.w.iter().chain(&s.q).all(|z| *z == ZERO));
            let e = solve_mode_exact(mode, pol, &model, 1.0, 1.0, 2.0, ZERO).unwrap();
            assert_eq!(e.trace_coeff, ZERO);
        }
    }

    #[test]
    fn exact_solution_is_outgoing_and_independent_of_r_outer() {
        let model = ImpedanceModel::Scalar { lambda: c(1.0, 0.5) };
        for n in 1..=8 {
            let mode = ModeIndex::new(n, 0).unwrap();
            for pol in POLS {
                let s2 = solve_mode_exact(mode, pol, &model, 1.0, 1.0, 2.0, c(0.3, -0.7)).unwrap();
                let s4 = solve_mode_exact(mode, pol, &model, 1.0, 1.0, 4.0, c(0.3, -0.7)).unwrap();
                let rel = (s2.trace_coeff - s4.trace_coeff).norm() / s2.trace_coeff.norm();
                assert!(rel < 1e-10, "n={n} {pol:?} {rel}");
                let Profile::Exact { coeffs, .. } = s2.profile else { unreachable!() };
                assert!(coeffs[0].norm() < 1e-10 * coeffs[1].norm().max(1e-300) + 1e-300 || coeffs[0].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn manufactured_outgoing_solution_converges_at_order_plus_one() {
        let model = ImpedanceModel::Scalar { lambda: c(1.0, 0.5) };
        let mode = ModeIndex::new(2, 0).unwrap();
        for order in [1, 2] {
            for pol in POLS {
                let exact = solve_mode_exact(mode, pol, &model, 1.0, 1.0, 2.0, c(1.0, 0.0)).unwrap();
                let errs: Vec<(f64, f64)> = [8, 16, 32]
                    .iter()
                    .map(|&ne| {
                        let grid = RadialGrid::uniform(1.0, 2.0, ne, order).unwrap();
                        let fem = solve_mode_fem(mode, pol, &model, 1.0, &grid, c(1.0, 0.0)).unwrap();
                        (grid.max_h(), l2_error(&fem, &exact).unwrap())
                    })
                    .collect();
                let rate = (errs[1].1 / errs[2].1).ln() / (errs[1].0 / errs[2].0).ln();
                assert!(rate >= order as f64 + 0.8, "order {order} {pol:?}: {errs:?} rate {rate}");
            }
        }
    }

    #[test]
    fn div_only_fem_matches_exact_and_has_positive_witness() {
        let model = ImpedanceModel::DivOnly {
            lambda: I,
            gamma: -I,
        };
        // self-convergence of the trace: ≤ 1e-6 on 32 elements, ≤ 1e-8 after
        // refining the element size by 4
        for (ne, tol) in [(32, 1e-6), (128, 1e-8)] {
            let grid = RadialGrid::uniform(1.0, 2.0, ne, 2).unwrap();
            for n in 1..=4 {
                let mode = ModeIndex::new(n, 1).unwrap();
                for pol in POLS {
                    let fem = solve_mode_fem(mode, pol, &model, 1.0, &grid, c(0.5, 0.2)).unwrap();
                    let ex = solve_mode_exact(mode, pol, &model, 1.0, 1.0, 2.0, c(0.5, 0.2)).unwrap();
                    let rel = (fem.trace_coeff - ex.trace_coeff).norm() / ex.trace_coeff.norm();
                    assert!(rel < tol, "ne={ne} n={n} {pol:?} {rel}");
                }
            }
        }
        let grid = RadialGrid::default_for(1.0, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let wit = coercivity_witness(2, &model, 1.0, &grid, 50, &mut rng).unwrap();
        assert_eq!(wit.ratios.len(), 50);
        assert!(wit.c0 > 0.0);
    }

    #[test]
    fn exact_volume_solution_matches_surface_solution() {
        let inc = IncidentField::plane_wave([0.0, 0.0, 1.0], [c(1.0, 0.0), ZERO, ZERO], 1.0).unwrap();
        let models = [
            ImpedanceModel::Scalar { lambda: c(1.0, 0.5) },
            ImpedanceModel::ThinCoating { delta: 0.01, eps: c(2.0, 0.0), mu: c(1.0, 0.0), omega: 1.0 },
            ImpedanceModel::DivOnly { lambda: I, gamma: -I },
        ];
        for model in models {
            let rep = volume_surface_equivalence(&model, 1.0, 1.0, &inc, 8, &RadialSolver::Exact { r_outer: 2.0 }).unwrap();
            assert_eq!(rep.rows.len(), 2 * 80);
            assert!(rep.max_rel_diff <= 1e-10, "{} {}", model.name(), rep.max_rel_diff);
            let grid = RadialGrid::default_for(1.0, 1.0, 2.0).unwrap();
            let fem = volume_surface_equivalence(&model, 1.0, 1.0, &inc, 4, &RadialSolver::Fem(grid)).unwrap();
            assert!(fem.max_rel_diff <= 1e-4, "{} {}", model.name(), fem.max_rel_diff);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::uniform(1.0, 2.0, 3, 2).is_err());
        assert!(RadialGrid::uniform(2.0, 1.0, 8, 2).is_err());
        assert!(RadialGrid::uniform(1.0, 2.0, 8, 3).is_err());
        assert!(RadialGrid::new(vec![1.0, 1.2, 1.1, 1.5, 2.0], 1).is_err());
        let g = RadialGrid::uniform(1.0, 2.0, 4, 2).unwrap();
        assert_eq!(g.lagrange_nodes().len(), 9);
    }
}
