//! Per-mode realization on a sphere of the impedance operators, the
//! magnetic-to-electric Calderón map, the surface sesquilinear form and the
//! weighted Helmholtz splitting of tangential fields.
//!
//! Every operator here is diagonal in the `(n, m)` index and independent of
//! `m`, so a tangential field is stored as two flat coefficient vectors
//! (`alpha` on `U_n^m`, `beta` on `V_n^m`) and operators as per-degree scalars.
//!
//! With `x = ω r` and `D(x) = (x h_n(x))'`, the Calderón map sends
//! `α U + β V` (the trace `H_T`) to `s_U α U + s_V β V` (the trace `ν × E`) with
//!
//! ```text
//! s_U = i x h_n(x) / D(x),     s_V = -i D(x) / (x h_n(x)).
//! ```
//!
//! Both are evaluated from the log-derivative recurrence, so they stay finite
//! even where `h_n` itself overflows.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{GibcError, Result};
use crate::quadrature::{flat_index, mode_count};
use crate::special::{hankel_log_derivative, sph_bessel, BesselKind, MAX_DEGREE};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated expansion `Σ α_n^m U_n^m + β_n^m V_n^m` on the sphere of radius `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTangentField {
    pub nmax: usize,
    pub a: f64,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

impl SpectralTangentField {
    pub fn zeros(nmax: usize, a: f64) -> Self {
        let count = mode_count(nmax);
        SpectralTangentField {
            nmax,
            a,
            alpha: vec![ZERO; count],
            beta: vec![ZERO; count],
        }
    }

    pub fn from_coefficients(
        nmax: usize,
        a: f64,
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        let count = mode_count(nmax);
        if alpha.len() != count || beta.len() != count {
            return Err(GibcError::Parameter(format!(
                "expected {count} coefficients per family for N_max = {nmax}, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        if !(a > 0.0) {
            return Err(GibcError::Domain(format!("radius must be positive, got {a}")));
        }
        Ok(SpectralTangentField { nmax, a, alpha, beta })
    }

    /// Uniformly random coefficients in the unit square, for property tests.
    pub fn random<R: Rng>(nmax: usize, a: f64, rng: &mut R) -> Self {
        let mut f = Self::zeros(nmax, a);
        for z in f.alpha.iter_mut().chain(f.beta.iter_mut()) {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    /// Iterates `(n, m, flat index)` in the canonical order.
    pub fn modes(&self) -> impl Iterator<Item = (usize, i32, usize)> {
        modes(self.nmax)
    }

    pub fn alpha_at(&self, n: usize, m: i32) -> Complex64 {
        self.alpha[flat_index(n, m)]
    }

    pub fn beta_at(&self, n: usize, m: i32) -> Complex64 {
        self.beta[flat_index(n, m)]
    }

    fn weighted(&self, wa: impl Fn(f64) -> f64, wb: impl Fn(f64) -> f64) -> f64 {
        self.modes()
            .map(|(n, _, k)| {
                let ev = (n * (n + 1)) as f64;
                wa(ev) * self.alpha[k].norm_sqr() + wb(ev) * self.beta[k].norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_l2(&self) -> f64 {
        self.weighted(|_| 1.0, |_| 1.0)
    }

    /// `‖u‖² = ‖u‖²_{L²} + ‖curl_Γ u‖²_{L²}`.
    pub fn norm_h1_curl(&self) -> f64 {
        let a2 = self.a * self.a;
        self.weighted(|_| 1.0, |ev| 1.0 + ev / a2)
    }

    /// `‖u‖² = ‖u‖²_{L²} + ‖div_Γ u‖²_{L²}`.
    pub fn norm_h1_div(&self) -> f64 {
        let a2 = self.a * self.a;
        self.weighted(|ev| 1.0 + ev / a2, |_| 1.0)
    }

    /// Spectral `H^{-1/2}(curl_Γ)` norm.
    pub fn norm_hm12_curl(&self) -> f64 {
        let a2 = self.a * self.a;
        self.weighted(
            |ev| (1.0 + ev).powf(-0.5),
            |ev| (1.0 + ev).powf(-0.5) * (1.0 + ev / a2),
        )
    }

    /// Energy-space norm natural for the given impedance model.
    pub fn norm_v(&self, model: &ImpedanceModel) -> f64 {
        match model.resolve() {
            ImpedanceModel::FullSecondOrder { .. } => self.norm_h1_div() + self.norm_h1_curl(),
            ImpedanceModel::CurlOnly { .. } => self.norm_h1_curl(),
            ImpedanceModel::DivOnly { .. } => self.norm_h1_div(),
            _ => self.norm_l2(),
        }
    }

    /// Largest coefficient modulus at degree `n`.
    pub fn degree_max(&self, n: usize) -> f64 {
        (-(n as i32)..=n as i32)
            .map(|m| {
                let k = flat_index(n, m);
                self.alpha[k].norm().max(self.beta[k].norm())
            })
            .fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.nmax != other.nmax {
            return Err(GibcError::Parameter(format!(
                "index sets differ: N_max {} vs {}",
                self.nmax, other.nmax
            )));
        }
        if (self.a - other.a).abs() > 1e-14 * self.a.max(other.a) {
            return Err(GibcError::Parameter(format!(
                "radius mismatch: {} vs {}",
                self.a, other.a
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.alpha.iter_mut().zip(&other.alpha).for_each(|(x, y)| *x += y);
        out.beta.iter_mut().zip(&other.beta).for_each(|(x, y)| *x += y);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.alpha.iter_mut().chain(out.beta.iter_mut()).for_each(|x| *x *= s);
        out
    }

    /// Applies per-degree multipliers `(f_U(n), f_V(n))` to every mode.
    pub fn map_degrees(&self, mut f: impl FnMut(usize) -> (Complex64, Complex64)) -> Self {
        let mut out = self.clone();
        for n in 1..=self.nmax {
            let (mu, mv) = f(n);
            for m in -(n as i32)..=n as i32 {
                let k = flat_index(n, m);
                out.alpha[k] *= mu;
                out.beta[k] *= mv;
            }
        }
        out
    }
}

/// `(n, m, flat index)` for `1 <= n <= nmax`, `n` ascending then `m` ascending.
pub fn modes(nmax: usize) -> impl Iterator<Item = (usize, i32, usize)> {
    (1..=nmax).flat_map(|n| (-(n as i32)..=n as i32).map(move |m| (n, m, flat_index(n, m))))
}

/// Impedance operator `Z = rot_Γ η curl_Γ + ∇_Γ γ div_Γ + λ` and its special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpedanceModel {
    FullSecondOrder {
        lambda: Complex64,
        eta: Complex64,
        gamma: Complex64,
    },
    CurlOnly {
        lambda: Complex64,
        eta: Complex64,
    },
    DivOnly {
        lambda: Complex64,
        gamma: Complex64,
    },
    Scalar {
        lambda: Complex64,
    },
    /// Thin layer of thickness `delta` and material `(eps, mu)` at frequency
    /// `omega`; equivalent to `CurlOnly` with `η = iδ/(ωε)`, `λ = −iωμδ`.
    ThinCoating {
        delta: f64,
        eps: Complex64,
        mu: Complex64,
        omega: f64,
    },
}

impl ImpedanceModel {
    /// Replaces the thin-coating parametrization by its `CurlOnly` equivalent.
    pub fn resolve(&self) -> ImpedanceModel {
        match *self {
            ImpedanceModel::ThinCoating {
                delta,
                eps,
                mu,
                omega,
            } => ImpedanceModel::CurlOnly {
                lambda: -I * omega * mu * delta,
                eta: I * delta / (omega * eps),
            },
            other => other,
        }
    }

    /// `(λ, η, γ)` with missing coefficients set to zero.
    pub fn coefficients(&self) -> (Complex64, Complex64, Complex64) {
        match self.resolve() {
            ImpedanceModel::FullSecondOrder { lambda, eta, gamma } => (lambda, eta, gamma),
            ImpedanceModel::CurlOnly { lambda, eta } => (lambda, eta, ZERO),
            ImpedanceModel::DivOnly { lambda, gamma } => (lambda, ZERO, gamma),
            ImpedanceModel::Scalar { lambda } => (lambda, ZERO, ZERO),
            ImpedanceModel::ThinCoating { .. } => unreachable!("resolved above"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ImpedanceModel::FullSecondOrder { .. } => "full",
            ImpedanceModel::CurlOnly { .. } => "curl_only",
            ImpedanceModel::DivOnly { .. } => "div_only",
            ImpedanceModel::Scalar { .. } => "scalar",
            ImpedanceModel::ThinCoating { .. } => "thin_coating",
        }
    }
}

/// Eigenvalues `(z_U, z_V)` of `Z` on `U_n^m` and `V_n^m` at radius `a`.
pub fn impedance_eigenvalues(model: &ImpedanceModel, n: usize, a: f64) -> (Complex64, Complex64) {
    let (lambda, eta, gamma) = model.coefficients();
    let k = (n * (n + 1)) as f64 / (a * a);
    (lambda - gamma * k, lambda + eta * k)
}

/// Which existence argument applies to a model's constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceRoute {
    /// Coercive impedance plus compact perturbation on the surface.
    SurfaceCoercive,
    /// Surface formulation after splitting off gradients.
    SurfaceHelmholtz,
    /// Volume formulation with a coercive imaginary part.
    VolumeThdiv,
    None,
}

impl ExistenceRoute {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExistenceRoute::SurfaceCoercive => "surface_coercive",
            ExistenceRoute::SurfaceHelmholtz => "surface_helmholtz",
            ExistenceRoute::VolumeThdiv => "volume_thdiv",
            ExistenceRoute::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub uniqueness_ok: bool,
    pub existence_route: ExistenceRoute,
    pub violated_conditions: Vec<String>,
}

/// Evaluates the sign conditions on constant coefficients. Violations are
/// collected, never raised.
pub fn hypothesis_check(model: &ImpedanceModel) -> HypothesisReport {
    let (lambda, eta, gamma) = model.coefficients();
    let mut violated = Vec::new();
    fn need(ok: bool, what: &str, v: &mut Vec<String>) -> bool {
        if !ok {
            v.push(what.to_string());
        }
        ok
    }

    // Re⟨Z v, v⟩ >= 0: per mode Re z_U, Re z_V >= 0 for every degree.
    let mut uniqueness_ok = need(lambda.re >= 0.0, "Re(lambda) >= 0", &mut violated);
    uniqueness_ok &= need(eta.re >= 0.0, "Re(eta) >= 0", &mut violated);
    uniqueness_ok &= need(gamma.re <= 0.0, "Re(gamma) <= 0", &mut violated);

    let route = match model.resolve() {
        ImpedanceModel::FullSecondOrder { .. } => {
            let mut ok = uniqueness_ok;
            ok &= need(eta.norm() > 0.0, "|eta| >= c > 0", &mut violated);
            ok &= need(gamma.norm() > 0.0, "|gamma| >= c > 0", &mut violated);
            ok &= need(
                eta.im * gamma.im <= 0.0,
                "Im(eta) and Im(gamma) of opposite sign",
                &mut violated,
            );
            if ok {
                ExistenceRoute::SurfaceCoercive
            } else {
                ExistenceRoute::None
            }
        }
        ImpedanceModel::CurlOnly { .. } => {
            let mut ok = uniqueness_ok;
            ok &= need(lambda.norm() > 0.0, "|lambda| >= c > 0", &mut violated);
            ok &= need(eta.norm() > 0.0, "|eta| >= c > 0", &mut violated);
            if !ok {
                ExistenceRoute::None
            } else if lambda.im * eta.im >= 0.0 {
                ExistenceRoute::SurfaceCoercive
            } else {
                ExistenceRoute::SurfaceHelmholtz
            }
        }
        ImpedanceModel::DivOnly { .. } => {
            let mut ok = uniqueness_ok;
            ok &= need(lambda.im > 0.0, "Im(lambda) >= c > 0", &mut violated);
            ok &= need(gamma.im < 0.0, "Im(gamma) <= -c < 0", &mut violated);
            if ok {
                ExistenceRoute::VolumeThdiv
            } else {
                ExistenceRoute::None
            }
        }
        ImpedanceModel::Scalar { .. } => {
            if uniqueness_ok && lambda.im > 0.0 {
                ExistenceRoute::VolumeThdiv
            } else {
                if uniqueness_ok {
                    violated.push("Im(lambda) >= c > 0".to_string());
                }
                ExistenceRoute::None
            }
        }
        ImpedanceModel::ThinCoating { .. } => unreachable!("resolved above"),
    };
    HypothesisReport {
        uniqueness_ok,
        existence_route: route,
        violated_conditions: violated,
    }
}

/// Per-degree Calderón map at radius `r`: `ν × E = s_u α U + s_v β V`.
///
/// The off-diagonal entries vanish identically; the full 2×2 matrix is
/// available through [`CalderonBlock::matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalderonBlock {
    pub n: usize,
    pub s_u: Complex64,
    pub s_v: Complex64,
    /// `h_n(ω r)` is not representable in double precision; the block itself
    /// is still accurate but field reconstruction at this degree is not.
    pub degraded: bool,
}

impl CalderonBlock {
    /// Matrix in the `(U, V)` component layout, acting on `(α, β)`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.s_u, ZERO], [ZERO, self.s_v]]
    }

    pub fn apply(&self, alpha: Complex64, beta: Complex64) -> (Complex64, Complex64) {
        (self.s_u * alpha, self.s_v * beta)
    }
}

pub fn calderon_block(n: usize, omega: f64, r: f64) -> Result<CalderonBlock> {
    if n == 0 {
        return Err(GibcError::Domain("Calderón blocks need n >= 1".into()));
    }
    if !(omega > 0.0) || !(r > 0.0) {
        return Err(GibcError::Domain(format!(
            "omega and radius must be positive, got {omega}, {r}"
        )));
    }
    if n > MAX_DEGREE {
        return Err(GibcError::Range(format!("degree {n} exceeds {MAX_DEGREE}")));
    }
    let x = omega * r;
    let log_d = hankel_log_derivative(n, x)?;
    let degraded = sph_bessel(BesselKind::H1, n, x).is_err();
    Ok(CalderonBlock {
        n,
        s_u: I / log_d,
        s_v: -I * log_d,
        degraded,
    })
}

/// Operators that act diagonally on [`SpectralTangentField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    Impedance(ImpedanceModel),
    Calderon { omega: f64, radius: f64 },
}

/// Applies `op` mode by mode; the result is expressed in the L² pivot basis.
pub fn apply_operator(op: &Operator, u: &SpectralTangentField) -> Result<SpectralTangentField> {
    match op {
        Operator::Impedance(model) => {
            Ok(u.map_degrees(|n| impedance_eigenvalues(model, n, u.a)))
        }
        Operator::Calderon { omega, radius } => {
            if (radius - u.a).abs() > 1e-14 * radius.max(u.a) {
                return Err(GibcError::Parameter(format!(
                    "Calderón radius {radius} differs from field radius {}",
                    u.a
                )));
            }
            let blocks = (1..=u.nmax)
                .map(|n| calderon_block(n, *omega, *radius))
                .collect::<Result<Vec<_>>>()?;
            Ok(u.map_degrees(|n| (blocks[n - 1].s_u, blocks[n - 1].s_v)))
        }
    }
}

/// `Σ Au · conj(v)` over both families.
pub fn pairing(au: &SpectralTangentField, v: &SpectralTangentField) -> Result<Complex64> {
    au.check_compatible(v)?;
    let s: Complex64 = au
        .alpha
        .iter()
        .zip(&v.alpha)
        .chain(au.beta.iter().zip(&v.beta))
        .map(|(x, y)| x * y.conj())
        .sum();
    Ok(s)
}

/// Per-degree factor `t_n = (n(n+1)/a²)(λ + s_U)`: the action of `A_S` on
/// `span{Y_n^m}` is `a_Γ(∇_Γ Y, ∇_Γ Y)` for unit-L² `Y`. The `η` term is absent
/// because `curl_Γ ∇_Γ = 0`.
pub fn as_mode_multiplier(lambda: Complex64, n: usize, omega: f64, a: f64) -> Result<Complex64> {
    let block = calderon_block(n, omega, a)?;
    let k = (n * (n + 1)) as f64 / (a * a);
    Ok(k * (lambda + block.s_u))
}

/// Coefficients `p_n^m` of a zero-mean scalar on the L²-normalized harmonics
/// `Y_n^m / a`, `1 <= n <= nmax`, flat order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCoefficients {
    pub nmax: usize,
    pub a: f64,
    pub values: Vec<Complex64>,
}

/// `∇_Γ p` for `p = Σ p_n^m Y_n^m / a`: `∇_Γ (Y/a) = (√(n(n+1))/a) U`.
pub fn surface_gradient(p: &ScalarCoefficients) -> SpectralTangentField {
    let mut out = SpectralTangentField::zeros(p.nmax, p.a);
    for (n, _, k) in modes(p.nmax) {
        out.alpha[k] = p.values[k] * (((n * (n + 1)) as f64).sqrt() / p.a);
    }
    out
}

#[derive(Debug, Clone)]
pub struct HelmholtzSplit {
    pub p: ScalarCoefficients,
    pub w: SpectralTangentField,
    /// `max |a_Γ(w, ∇_Γ Y_n^m)|` over modes: membership defect of `w` in `X`.
    pub x_residual: f64,
    /// Measured `(‖w‖_V + ‖∇_Γ p‖_V) / ‖u‖_V`.
    pub continuity_constant: f64,
}

/// Splits `u = ∇_Γ p + w`, `w` being `a_Γ`-orthogonal to all gradients.
///
/// Per degree, `p` solves `t_n p = a_Γ(u, ∇_Γ Y_n^m)`; a vanishing `t_n`
/// means `A_S` is not injective and raises a decomposition error.
pub fn helmholtz_decompose_spectral(
    u: &SpectralTangentField,
    model: &ImpedanceModel,
    omega: f64,
) -> Result<HelmholtzSplit> {
    let (lambda, _, _) = model.coefficients();
    let a = u.a;
    let mut p = ScalarCoefficients {
        nmax: u.nmax,
        a,
        values: vec![ZERO; u.alpha.len()],
    };
    let mut q_factor = Vec::with_capacity(u.nmax);
    for n in 1..=u.nmax {
        let block = calderon_block(n, omega, a)?;
        let t = as_mode_multiplier(lambda, n, omega, a)?;
        let c_over_a = ((n * (n + 1)) as f64).sqrt() / a;
        // a_Γ(v, ∇Y) for v on U_n^m reduces to (c/a) (λ + s_U) v_U
        let g = c_over_a * (lambda + block.s_u);
        let scale = (n * (n + 1)) as f64 / (a * a) * (1.0 + lambda.norm());
        if t.norm() <= 1e-14 * scale {
            return Err(GibcError::Decomposition { n });
        }
        q_factor.push(g);
        for m in -(n as i32)..=n as i32 {
            let k = flat_index(n, m);
            p.values[k] = g * u.alpha[k] / t;
        }
    }
    let grad = surface_gradient(&p);
    let w = u.sub(&grad)?;
    let x_residual = modes(u.nmax)
        .map(|(n, _, k)| (q_factor[n - 1] * w.alpha[k]).norm())
        .fold(0.0, f64::max);
    let un = u.norm_v(model);
    let continuity_constant = if un > 0.0 {
        (w.norm_v(model) + grad.norm_v(model)) / un
    } else {
        1.0
    };
    Ok(HelmholtzSplit {
        p,
        w,
        x_residual,
        continuity_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn impedance_eigenvalue_examples() {
        let full = ImpedanceModel::FullSecondOrder {
            lambda: c(1.0, 0.0),
            eta: c(2.0, 0.0),
            gamma: c(-3.0, 0.0),
        };
        assert_eq!(impedance_eigenvalues(&full, 1, 1.0), (c(7.0, 0.0), c(5.0, 0.0)));
        let s = ImpedanceModel::Scalar { lambda: c(0.3, 0.2) };
        assert_eq!(impedance_eigenvalues(&s, 4, 2.0), (c(0.3, 0.2), c(0.3, 0.2)));
        let curl = ImpedanceModel::CurlOnly {
            lambda: c(0.5, 1.0),
            eta: c(3.0, 0.0),
        };
        for n in 1..6 {
            assert_eq!(impedance_eigenvalues(&curl, n, 1.3).0, c(0.5, 1.0));
        }
    }

    #[test]
    fn thin_coating_resolution() {
        let t = ImpedanceModel::ThinCoating {
            delta: 0.01,
            eps: c(1.0, 0.0),
            mu: c(1.0, 0.0),
            omega: 1.0,
        };
        let (l, e, g) = t.coefficients();
        assert!((l - c(0.0, -0.01)).norm() < 1e-16);
        assert!((e - c(0.0, 0.01)).norm() < 1e-16);
        assert_eq!(g, ZERO);
    }

    #[test]
    fn hypothesis_examples() {
        let ok = ImpedanceModel::FullSecondOrder {
            lambda: c(1.0, 0.0),
            eta: c(1.0, 1.0),
            gamma: c(-1.0, -1.0),
        };
        let r = hypothesis_check(&ok);
        assert!(r.uniqueness_ok);
        assert_eq!(r.existence_route, ExistenceRoute::SurfaceCoercive);
        assert!(r.violated_conditions.is_empty());

        let bad = ImpedanceModel::FullSecondOrder {
            lambda: c(1.0, 0.0),
            eta: c(1.0, 1.0),
            gamma: c(-1.0, 1.0),
        };
        let r = hypothesis_check(&bad);
        assert_eq!(r.existence_route, ExistenceRoute::None);
        assert!(r.violated_conditions.iter().any(|s| s.contains("opposite sign")));

        let div = ImpedanceModel::DivOnly {
            lambda: c(0.0, 1.0),
            gamma: c(0.0, -1.0),
        };
        assert_eq!(hypothesis_check(&div).existence_route, ExistenceRoute::VolumeThdiv);

        let active = ImpedanceModel::Scalar { lambda: c(-1.0, 0.0) };
        assert!(!hypothesis_check(&active).uniqueness_ok);
    }

    #[test]
    fn calderon_is_diagonal_and_m_independent() {
        let u = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            SpectralTangentField::random(5, 1.0, &mut rng)
        };
        let mut pure_u = u.clone();
        pure_u.beta.iter_mut().for_each(|z| *z = ZERO);
        let out = apply_operator(&Operator::Calderon { omega: 1.3, radius: 1.0 }, &pure_u).unwrap();
        assert!(out.beta.iter().all(|z| *z == ZERO));
        for (n, m, k) in modes(5) {
            let b = calderon_block(n, 1.3, 1.0).unwrap();
            assert_eq!(out.alpha[k], b.s_u * pure_u.alpha[k], "n={n} m={m}");
        }
    }

    #[test]
    fn calderon_large_argument_limit_and_passivity() {
        let b = calderon_block(1, 200.0, 1.0).unwrap();
        assert!((b.s_u - 1.0).norm() < 1e-2);
        assert!((b.s_v - 1.0).norm() < 1e-2);
        for n in 1..40 {
            for x in [0.3, 1.0, 5.0, 20.0] {
                let b = calderon_block(n, x, 1.0).unwrap();
                assert!(b.s_u.re > 0.0 && b.s_v.re > 0.0);
            }
        }
    }

    #[test]
    fn calderon_flags_overflow_but_stays_finite() {
        let b = calderon_block(150, 0.5, 1.0).unwrap();
        assert!(b.degraded);
        assert!(b.s_u.re.is_finite() && b.s_v.im.is_finite());
    }

    #[test]
    fn radius_mismatch_is_reported() {
        let u = SpectralTangentField::zeros(3, 1.0);
        let r = apply_operator(&Operator::Calderon { omega: 1.0, radius: 2.0 }, &u);
        assert!(matches!(r, Err(GibcError::Parameter(_))));
        let v = SpectralTangentField::zeros(4, 1.0);
        assert!(matches!(pairing(&u, &v), Err(GibcError::Parameter(_))));
    }

    #[test]
    fn as_multiplier_matches_generic_pairing() {
        let lambda = c(1.0, 0.0);
        let model = ImpedanceModel::Scalar { lambda };
        for n in 1..=20 {
            let mut p = ScalarCoefficients {
                nmax: 20,
                a: 1.0,
                values: vec![ZERO; mode_count(20)],
            };
            p.values[flat_index(n, 0)] = c(1.0, 0.0);
            let g = surface_gradient(&p);
            let zg = apply_operator(&Operator::Impedance(model), &g).unwrap();
            let sg = apply_operator(&Operator::Calderon { omega: 1.0, radius: 1.0 }, &g).unwrap();
            let form = pairing(&zg.add(&sg).unwrap(), &g).unwrap();
            let t = as_mode_multiplier(lambda, n, 1.0, 1.0).unwrap();
            assert!((form - t).norm() <= 1e-12 * t.norm(), "n={n}");
        }
    }

    #[test]
    fn decomposition_of_a_gradient() {
        let model = ImpedanceModel::Scalar { lambda: c(1.0, 0.0) };
        let mut u = SpectralTangentField::zeros(4, 1.0);
        u.alpha[flat_index(1, 0)] = c(2f64.sqrt(), 0.0);
        let split = helmholtz_decompose_spectral(&u, &model, 1.0).unwrap();
        assert!(split.w.norm_l2() < 1e-14);
        assert!((split.p.values[flat_index(1, 0)] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn norms_weight_the_right_family() {
        let mut u = SpectralTangentField::zeros(2, 1.0);
        u.beta[flat_index(2, 1)] = c(1.0, 0.0);
        assert!((u.norm_h1_curl() - 7f64.sqrt()).abs() < 1e-14);
        assert!((u.norm_h1_div() - 1.0).abs() < 1e-14);
    }
}
