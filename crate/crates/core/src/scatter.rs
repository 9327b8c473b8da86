//! Surface formulation `S_Γ u + Z u = f` on a sphere: incident data, the
//! per-mode solve, field reconstruction and the energy / radiation diagnostics.
//!
//! Outgoing fields are parametrized by their magnetic trace `u = α U + β V`
//! on the sphere of radius `a`. Writing `x = ω r`, `c = √(n(n+1))` and
//! `U^s = ∇_S Y`/c, `V^s = r̂ × U^s` on the unit sphere, each degree contributes
//!
//! ```text
//! A = iωα / (c D_h(ωa))             B = −β / (a c h_n(ωa))
//! E = −A c h_n(x) V^s               H = −B c h_n(x) V^s
//! H = A/(iω) [c² h_n(x)/r Y r̂ + c D_h(x)/r U^s]
//! E = (i/ω) B [c² h_n(x)/r Y r̂ + c D_h(x)/r U^s]
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::quadrature::{flat_index, project_tangential, SphereQuadrature};
use crate::special::{sph_bessel_with_riccati, BesselKind, LegendreTable};
use crate::spectral::{
    apply_operator, calderon_block, hypothesis_check, impedance_eigenvalues, pairing,
    HypothesisReport, ImpedanceModel, Operator, SpectralTangentField,
};
use crate::vec3::{
    cadd, ccross, cdot_conj, cnorm, cnorm_sq, cscale, csub, dot, norm, rcross, spherical_frame,
    sub, to_complex, to_spherical, C3, R3,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default truncation degree `ceil(ωa + 6 (ωa)^{1/3} + 8)`.
pub fn default_nmax(omega: f64, a: f64) -> usize {
    let x = omega * a;
    (x + 6.0 * x.cbrt() + 8.0).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidentKind {
    /// `E = p e^{iω x·d}`, `H = (d × p) e^{iω x·d}`.
    PlaneWave { d: R3, p: C3 },
    /// Point dipole at `position`; electric unless `magnetic` is set.
    Dipole {
        moment: C3,
        position: R3,
        magnetic: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentField {
    pub kind: IncidentKind,
    pub omega: f64,
}

impl IncidentField {
    pub fn plane_wave(d: R3, p: C3, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(GibcError::Domain(format!("omega must be positive, got {omega}")));
        }
        if (norm(&d) - 1.0).abs() > 1e-12 {
            return Err(GibcError::Domain("propagation direction must be a unit vector".into()));
        }
        let dp = d[0] * p[0] + d[1] * p[1] + d[2] * p[2];
        if dp.norm() > 1e-12 {
            return Err(GibcError::Domain(format!(
                "polarization not transverse: |d·p| = {:.3e}",
                dp.norm()
            )));
        }
        Ok(IncidentField {
            kind: IncidentKind::PlaneWave { d, p },
            omega,
        })
    }

    pub fn dipole(moment: C3, position: R3, magnetic: bool, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(GibcError::Domain(format!("omega must be positive, got {omega}")));
        }
        Ok(IncidentField {
            kind: IncidentKind::Dipole {
                moment,
                position,
                magnetic,
            },
            omega,
        })
    }

    /// `(E, H)` at `x`.
    pub fn fields(&self, x: &R3) -> (C3, C3) {
        match self.kind {
            IncidentKind::PlaneWave { d, p } => {
                let phase = Complex64::from_polar(1.0, self.omega * dot(x, &d));
                (cscale(phase, &p), cscale(phase, &rcross(&d, &p)))
            }
            IncidentKind::Dipole {
                moment,
                position,
                magnetic,
            } => {
                let (e, h) = electric_dipole_fields(&moment, &sub(x, &position), self.omega);
                if magnetic {
                    (h, cscale(Complex64::new(-1.0, 0.0), &e))
                } else {
                    (e, h)
                }
            }
        }
    }

    /// Amplitude used to normalize cross sections (`|p|` for plane waves).
    pub fn amplitude(&self) -> f64 {
        match self.kind {
            IncidentKind::PlaneWave { p, .. } => cnorm(&p),
            IncidentKind::Dipole { moment, .. } => cnorm(&moment),
        }
    }
}

/// Radiating fields of an electric dipole `p` at the origin, evaluated at `x`.
pub fn electric_dipole_fields(p: &C3, x: &R3, k: f64) -> (C3, C3) {
    let r = norm(x);
    let n = [x[0] / r, x[1] / r, x[2] / r];
    let nc = to_complex(&n);
    let g = Complex64::from_polar(1.0, k * r);
    let n_x_p = rcross(&n, p);
    let h = cscale(
        k * k / (4.0 * PI) * g / r * (1.0 - 1.0 / (I * k * r)),
        &n_x_p,
    );
    let far = cscale(k * k * g / r, &ccross(&n_x_p, &nc));
    let np = n[0] * p[0] + n[1] * p[1] + n[2] * p[2];
    let near_dir = csub(&cscale(3.0 * np, &nc), p);
    let near = cscale((1.0 / (r * r * r) - I * k / (r * r)) * g, &near_dir);
    (cscale(Complex64::new(1.0 / (4.0 * PI), 0.0), &cadd(&far, &near)), h)
}

/// Degree-wise radial factors of the outgoing family at radius `r`, already
/// divided by the normalizing values at `a`.
struct RadialFactors {
    /// multiplies α to give the coefficient of `V^s` in E
    e_v: Vec<Complex64>,
    /// multiplies α to give the coefficients of `Y r̂` and `U^s` in H
    h_r: Vec<Complex64>,
    h_u: Vec<Complex64>,
    /// multiplies β: `V^s` in H, `Y r̂` and `U^s` in E
    hb_v: Vec<Complex64>,
    eb_r: Vec<Complex64>,
    eb_u: Vec<Complex64>,
}

impl RadialFactors {
    fn new(nmax: usize, omega: f64, a: f64, r: f64) -> Result<Self> {
        let (ha, da) = sph_bessel_with_riccati(BesselKind::H1, nmax, omega * a)?;
        let (hr, dr) = sph_bessel_with_riccati(BesselKind::H1, nmax, omega * r)?;
        let mut f = RadialFactors {
            e_v: vec![ZERO; nmax + 1],
            h_r: vec![ZERO; nmax + 1],
            h_u: vec![ZERO; nmax + 1],
            hb_v: vec![ZERO; nmax + 1],
            eb_r: vec![ZERO; nmax + 1],
            eb_u: vec![ZERO; nmax + 1],
        };
        for n in 1..=nmax {
            let c = ((n * (n + 1)) as f64).sqrt();
            let a_amp = I * omega / (c * da[n]);
            f.e_v[n] = -a_amp * c * hr[n];
            f.h_r[n] = a_amp / (I * omega) * c * c * hr[n] / r;
            f.h_u[n] = a_amp / (I * omega) * c * dr[n] / r;
            let b_amp = -1.0 / (a * c * ha[n]);
            f.hb_v[n] = -b_amp * c * hr[n];
            f.eb_r[n] = I / omega * b_amp * c * c * hr[n] / r;
            f.eb_u[n] = I / omega * b_amp * c * dr[n] / r;
        }
        Ok(f)
    }
}

/// Sums the outgoing fields of `u` at one point, given the Legendre table of
/// its polar angle.
fn sum_fields(
    u: &SpectralTangentField,
    rf: &RadialFactors,
    table: &LegendreTable,
    theta: f64,
    phi: f64,
) -> (C3, C3) {
    // accumulate spherical components (r, θ, φ)
    let mut e = [ZERO; 3];
    let mut h = [ZERO; 3];
    for n in 1..=u.nmax {
        let c = ((n * (n + 1)) as f64).sqrt();
        for m in -(n as i32)..=n as i32 {
            let k = flat_index(n, m);
            let (al, be) = (u.alpha[k], u.beta[k]);
            if al == ZERO && be == ZERO {
                continue;
            }
            let y = table.ylm(n, m, phi);
            let (gt, gp) = table.grad_ylm(n, m, phi);
            let (ut, up) = (gt / c, gp / c);
            let (vt, vp) = (-up, ut);
            // E
            let ev = al * rf.e_v[n];
            let er = be * rf.eb_r[n];
            let eu = be * rf.eb_u[n];
            e[0] += er * y;
            e[1] += ev * vt + eu * ut;
            e[2] += ev * vp + eu * up;
            // H
            let hv = be * rf.hb_v[n];
            let hr = al * rf.h_r[n];
            let hu = al * rf.h_u[n];
            h[0] += hr * y;
            h[1] += hv * vt + hu * ut;
            h[2] += hv * vp + hu * up;
        }
    }
    let (rh, th, ph) = spherical_frame(theta, phi);
    let to_cart = |s: [Complex64; 3]| -> C3 {
        [
            s[0] * rh[0] + s[1] * th[0] + s[2] * ph[0],
            s[0] * rh[1] + s[1] * th[1] + s[2] * ph[1],
            s[0] * rh[2] + s[1] * th[2] + s[2] * ph[2],
        ]
    };
    (to_cart(e), to_cart(h))
}

/// Scattered `(E, H)` at `x` (`|x| >= a`) for the magnetic trace `u`.
pub fn evaluate_fields(u: &SpectralTangentField, omega: f64, x: &R3) -> Result<(C3, C3)> {
    let (r, theta, phi) = to_spherical(x);
    if r < u.a * (1.0 - 1e-12) {
        return Err(GibcError::Domain(format!(
            "field evaluation at |x| = {r} inside the sphere of radius {}",
            u.a
        )));
    }
    if !(omega > 0.0) {
        return Err(GibcError::Domain(format!("omega must be positive, got {omega}")));
    }
    let rf = RadialFactors::new(u.nmax, omega, u.a, r)?;
    let table = LegendreTable::new(u.nmax, theta);
    Ok(sum_fields(u, &rf, &table, theta, phi))
}

/// Calls `visit(x, x̂, E, H, weight)` at every node of a quadrature rule on the
/// sphere of radius `r`.
fn visit_sphere<F>(u: &SpectralTangentField, omega: f64, r: f64, quad: &SphereQuadrature, mut visit: F) -> Result<()>
where
    F: FnMut(&R3, &R3, &C3, &C3, f64),
{
    let rf = RadialFactors::new(u.nmax, omega, u.a, r)?;
    let wphi = quad.phi_weight();
    for (&t, &wt) in quad.theta.iter().zip(&quad.theta_weights) {
        let table = LegendreTable::new(u.nmax, t);
        for &p in &quad.phi {
            let (rh, _, _) = spherical_frame(t, p);
            let x = [r * rh[0], r * rh[1], r * rh[2]];
            let (e, h) = sum_fields(u, &rf, &table, t, p);
            visit(&x, &rh, &e, &h, wt * wphi * r * r);
        }
    }
    Ok(())
}

fn flux_quadrature(nmax: usize, omega: f64, r: f64) -> SphereQuadrature {
    let l = nmax + (omega * r).ceil() as usize + 20;
    SphereQuadrature::new(l + 1, 2 * l + 2)
}

/// Far-field amplitude `E_∞(x̂)` with `E^s ~ e^{iωr}/r E_∞`.
pub fn far_field_amplitude(u: &SpectralTangentField, omega: f64, dir: &R3) -> Result<C3> {
    let (_, theta, phi) = to_spherical(dir);
    let x = omega * u.a;
    let (ha, da) = sph_bessel_with_riccati(BesselKind::H1, u.nmax, x)?;
    let table = LegendreTable::new(u.nmax, theta);
    let mut et = ZERO;
    let mut ep = ZERO;
    let mut mi = -I; // (−i)^n, starting at n = 1
    for n in 1..=u.nmax {
        let c = ((n * (n + 1)) as f64).sqrt();
        // α: −i(−i)^{n+1} α / D_h(ωa) V^s ;  β: −i(−i)^n β / (ωa h_n(ωa)) U^s
        let fa = -I * mi * (-I) / da[n];
        let fb = -I * mi / (x * ha[n]);
        for m in -(n as i32)..=n as i32 {
            let k = flat_index(n, m);
            let (gt, gp) = table.grad_ylm(n, m, phi);
            let (ut, up) = (gt / c, gp / c);
            let (vt, vp) = (-up, ut);
            let ca = fa * u.alpha[k];
            let cb = fb * u.beta[k];
            et += ca * vt + cb * ut;
            ep += ca * vp + cb * up;
        }
        mi *= -I;
    }
    let (_, th, ph) = spherical_frame(theta, phi);
    Ok([
        et * th[0] + ep * ph[0],
        et * th[1] + ep * ph[1],
        et * th[2] + ep * ph[2],
    ])
}

/// `σ(x̂) = 4π |E_∞(x̂)|² / |E^i|²` for every direction.
pub fn far_field_rcs(
    u: &SpectralTangentField,
    omega: f64,
    directions: &[R3],
    incident_amplitude: f64,
) -> Result<Vec<(R3, f64)>> {
    if directions.is_empty() {
        return Err(GibcError::Parameter("no far-field directions given".into()));
    }
    directions
        .iter()
        .map(|d| {
            let dn = crate::vec3::normalize(d);
            let e = far_field_amplitude(u, omega, &dn)?;
            Ok((dn, 4.0 * PI * cnorm_sq(&e) / (incident_amplitude * incident_amplitude)))
        })
        .collect()
}

/// Spectral coefficients of the traces `ν × E^i` and `H^i_T` on radius `a`.
#[derive(Debug, Clone)]
pub struct IncidentTraces {
    pub n_cross_e: SpectralTangentField,
    pub h_t: SpectralTangentField,
}

fn project_traces(inc: &IncidentField, a: f64, nmax: usize, degree: usize) -> IncidentTraces {
    let quad = SphereQuadrature::for_degree(degree);
    let (ea, eb) = project_tangential(&quad, a, nmax, |x| {
        let (e, _) = inc.fields(x);
        let nu = [x[0] / a, x[1] / a, x[2] / a];
        rcross(&nu, &e)
    });
    let (ha, hb) = project_tangential(&quad, a, nmax, |x| inc.fields(x).1);
    IncidentTraces {
        n_cross_e: SpectralTangentField {
            nmax,
            a,
            alpha: ea,
            beta: eb,
        },
        h_t: SpectralTangentField {
            nmax,
            a,
            alpha: ha,
            beta: hb,
        },
    }
}

fn max_abs_diff(x: &SpectralTangentField, y: &SpectralTangentField) -> f64 {
    x.alpha
        .iter()
        .zip(&y.alpha)
        .chain(x.beta.iter().zip(&y.beta))
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

fn max_abs(x: &SpectralTangentField) -> f64 {
    x.alpha.iter().chain(&x.beta).map(|z| z.norm()).fold(0.0, f64::max)
}

/// Projects the incident traces by quadrature, refining the rule until two
/// successive resolutions agree (the tail check).
pub fn incident_traces_quadrature(inc: &IncidentField, a: f64, nmax: usize) -> Result<IncidentTraces> {
    if let IncidentKind::Dipole { position, .. } = inc.kind {
        if norm(&position) >= a {
            return Err(GibcError::Domain(
                "dipole source must lie inside the scatterer".into(),
            ));
        }
    }
    let base = nmax + (inc.omega * a).ceil() as usize + 12;
    let mut prev = project_traces(inc, a, nmax, base);
    for extra in [8usize, 16, 32, 64] {
        let next = project_traces(inc, a, nmax, base + extra);
        let scale = max_abs(&next.n_cross_e).max(max_abs(&next.h_t));
        let diff = max_abs_diff(&prev.n_cross_e, &next.n_cross_e)
            .max(max_abs_diff(&prev.h_t, &next.h_t));
        if diff <= 1e-13 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(GibcError::Quadrature(format!(
        "incident projection did not stabilize up to degree {}",
        base + 64
    )))
}

/// Closed-form multipole expansion of a plane wave's traces.
pub fn plane_wave_traces_closed_form(
    d: &R3,
    p: &C3,
    omega: f64,
    a: f64,
    nmax: usize,
) -> Result<IncidentTraces> {
    let x = omega * a;
    let (j, dj) = sph_bessel_with_riccati(BesselKind::J, nmax, x)?;
    let q = rcross(d, p);
    let (_, td, pd) = to_spherical(d);
    let (_, th, ph) = spherical_frame(td, pd);
    let table = LegendreTable::new(nmax, td);
    let mut nxe = SpectralTangentField::zeros(nmax, a);
    let mut ht = SpectralTangentField::zeros(nmax, a);
    let mut il = I; // i^n from n = 1
    for n in 1..=nmax {
        let c = ((n * (n + 1)) as f64).sqrt();
        for m in -(n as i32)..=n as i32 {
            let k = flat_index(n, m);
            let (gt, gp) = table.grad_ylm(n, m, pd);
            let us: C3 = [
                (gt * th[0] + gp * ph[0]) / c,
                (gt * th[1] + gp * ph[1]) / c,
                (gt * th[2] + gp * ph[2]) / c,
            ];
            let amp_a = 4.0 * PI * il * cdot_conj(&q, &us) / c;
            let amp_b = -4.0 * PI * il * cdot_conj(p, &us) / c;
            ht.alpha[k] = amp_a * c * dj[n] / (I * omega);
            nxe.alpha[k] = amp_a * c * j[n] * a;
            ht.beta[k] = -amp_b * c * j[n] * a;
            nxe.beta[k] = I / omega * amp_b * c * dj[n];
        }
        il *= I;
    }
    Ok(IncidentTraces {
        n_cross_e: nxe,
        h_t: ht,
    })
}

/// Right-hand side `f = −(ν × E^i + Z H^i_T)` on the sphere of radius `a`.
pub fn incident_trace(
    inc: &IncidentField,
    model: &ImpedanceModel,
    a: f64,
    nmax: usize,
) -> Result<SpectralTangentField> {
    let traces = incident_traces_quadrature(inc, a, nmax)?;
    rhs_from_traces(&traces, model)
}

pub fn rhs_from_traces(traces: &IncidentTraces, model: &ImpedanceModel) -> Result<SpectralTangentField> {
    let zh = apply_operator(&Operator::Impedance(*model), &traces.h_t)?;
    Ok(traces.n_cross_e.add(&zh)?.scale(Complex64::new(-1.0, 0.0)))
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub omega: f64,
    pub model: ImpedanceModel,
    pub hypothesis: HypothesisReport,
    /// Magnetic trace `H_T` of the scattered field.
    pub u: SpectralTangentField,
    pub energy_residual: f64,
    pub silver_muller: Vec<(f64, f64)>,
    /// Per degree `n = 1..=N_max`, `max |d| / min |d|` of the mode matrix.
    pub mode_condition_numbers: Vec<f64>,
    /// `(x̂, σ)` on the `φ = 0` half plane, θ in 5° steps.
    pub far_field: Vec<(R3, f64)>,
    /// Coefficients did not decay below `1e-12` of the peak before `N_max`.
    pub truncation_warning: bool,
    /// Degree cap applied because `h_n(ωa)` left the double range.
    pub clamped_nmax: Option<usize>,
}

/// Per-mode solve of `(S_Γ + Z) u = f` with diagnostics.
pub fn solve_surface(
    f: &SpectralTangentField,
    model: &ImpedanceModel,
    omega: f64,
    a: f64,
    nmax: usize,
) -> Result<SolveReport> {
    let u = solve_coefficients(f, model, omega, a, nmax)?;
    let (u, conds, clamped) = u;
    let peak = u.alpha.iter().chain(&u.beta).map(|z| z.norm()).fold(0.0, f64::max);
    let truncation_warning = peak > 0.0 && u.degree_max(u.nmax) > 1e-12 * peak;
    let f_used = truncate(f, u.nmax);
    let energy_residual = energy_identity(&u, model, omega, 2.0 * a, Some(&f_used))?.residual;
    let silver_muller = silver_muller_residual(&u, omega, &[4.0 * a, 8.0 * a, 16.0 * a])?;
    let dirs: Vec<R3> = (0..=36)
        .map(|k| {
            let t = PI * k as f64 / 36.0;
            [t.sin(), 0.0, t.cos()]
        })
        .collect();
    let far_field = far_field_rcs(&u, omega, &dirs, 1.0)?;
    Ok(SolveReport {
        omega,
        model: *model,
        hypothesis: hypothesis_check(model),
        u,
        energy_residual,
        silver_muller,
        mode_condition_numbers: conds,
        far_field,
        truncation_warning,
        clamped_nmax: clamped,
    })
}

fn truncate(f: &SpectralTangentField, nmax: usize) -> SpectralTangentField {
    let count = crate::quadrature::mode_count(nmax);
    SpectralTangentField {
        nmax,
        a: f.a,
        alpha: f.alpha[..count].to_vec(),
        beta: f.beta[..count].to_vec(),
    }
}

type Solved = (SpectralTangentField, Vec<f64>, Option<usize>);

/// The linear-algebra part of [`solve_surface`]: coefficients, per-degree
/// condition numbers and the clamp (if any).
pub fn solve_coefficients(
    f: &SpectralTangentField,
    model: &ImpedanceModel,
    omega: f64,
    a: f64,
    nmax: usize,
) -> Result<Solved> {
    if (f.a - a).abs() > 1e-14 * a {
        return Err(GibcError::Parameter(format!(
            "data radius {} differs from sphere radius {a}",
            f.a
        )));
    }
    if nmax > f.nmax {
        return Err(GibcError::Parameter(format!(
            "requested N_max = {nmax} exceeds the data's N_max = {}",
            f.nmax
        )));
    }
    let mut limit = nmax;
    let mut clamped = None;
    let mut blocks = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let b = calderon_block(n, omega, a)?;
        if b.degraded {
            limit = n - 1;
            clamped = Some(limit);
            break;
        }
        blocks.push(b);
    }
    let mut u = truncate(f, limit);
    let mut conds = Vec::with_capacity(limit);
    for n in 1..=limit {
        let (zu, zv) = impedance_eigenvalues(model, n, a);
        let b = &blocks[n - 1];
        let du = b.s_u + zu;
        let dv = b.s_v + zv;
        let big = du.norm().max(dv.norm());
        let small = du.norm().min(dv.norm());
        let scale = b.s_u.norm() + b.s_v.norm() + zu.norm() + zv.norm();
        if small <= 1e-14 * scale {
            return Err(GibcError::Resonance {
                n,
                model: model.name().to_string(),
            });
        }
        conds.push(big / small);
        for m in -(n as i32)..=n as i32 {
            let k = flat_index(n, m);
            u.alpha[k] /= du;
            u.beta[k] /= dv;
        }
    }
    Ok((u, conds, clamped))
}

/// Terms of the integrated energy balance on the annulus `a < |x| < R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `Re⟨Z u, u⟩`
    pub impedance_term: f64,
    /// `Re ∫_{∂B_R} (x̂ × E) · H̄ ds`
    pub flux: f64,
    /// `Re⟨f, u⟩` (zero for the homogeneous identity)
    pub source_term: f64,
    /// `∫_{∂B_R} |x̂ × E| |H| ds`, the scale of the flux integrand
    pub flux_scale: f64,
    pub residual: f64,
}

/// Energy balance of the scattered field with trace `u`:
/// `Re⟨Z u, u⟩ + Re ∫_{∂B_R}(x̂×E)·H̄ − Re⟨f, u⟩ = 0` when `ν×E + Z u = f`.
pub fn energy_identity(
    u: &SpectralTangentField,
    model: &ImpedanceModel,
    omega: f64,
    r: f64,
    f: Option<&SpectralTangentField>,
) -> Result<EnergyBalance> {
    if r <= u.a {
        return Err(GibcError::Domain(format!(
            "flux radius {r} must exceed the sphere radius {}",
            u.a
        )));
    }
    let zu = apply_operator(&Operator::Impedance(*model), u)?;
    let impedance_term = pairing(&zu, u)?.re;
    let source_term = match f {
        Some(f) => pairing(f, u)?.re,
        None => 0.0,
    };
    let quad = flux_quadrature(u.nmax, omega, r);
    let mut flux = 0.0;
    let mut scale = 0.0;
    visit_sphere(u, omega, r, &quad, |_, xh, e, h, w| {
        let xe = rcross(xh, e);
        flux += w * (xe[0] * h[0].conj() + xe[1] * h[1].conj() + xe[2] * h[2].conj()).re;
        scale += w * cnorm(&xe) * cnorm(h);
    })?;
    let sum = impedance_term + flux - source_term;
    let denom = impedance_term.abs() + flux.abs() + source_term.abs() + scale;
    let residual = if denom == 0.0 { 0.0 } else { sum.abs() / denom };
    Ok(EnergyBalance {
        impedance_term,
        flux,
        source_term,
        flux_scale: scale,
        residual,
    })
}

pub fn energy_identity_residual(
    u: &SpectralTangentField,
    model: &ImpedanceModel,
    omega: f64,
    r: f64,
    f: Option<&SpectralTangentField>,
) -> Result<f64> {
    Ok(energy_identity(u, model, omega, r, f)?.residual)
}

/// Flux of the total field (scattered plus incident) through `∂B_R`, with the
/// matching identity on the boundary: since `ν×E + Z H_T = 0` for the total
/// field, `Re⟨Z H_T, H_T⟩ + flux = 0` and the flux (minus the absorbed power)
/// is nonpositive whenever `Re Z >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalFieldBalance {
    pub impedance_term: f64,
    pub flux: f64,
    pub flux_scale: f64,
    /// `flux / (|Re⟨Z H_T,H_T⟩| + |flux| + scale)`
    pub normalized_flux: f64,
    pub residual: f64,
}

pub fn total_field_balance(
    u: &SpectralTangentField,
    incident: &IncidentField,
    model: &ImpedanceModel,
    r: f64,
) -> Result<TotalFieldBalance> {
    let omega = incident.omega;
    if r <= u.a {
        return Err(GibcError::Domain(format!(
            "flux radius {r} must exceed the sphere radius {}",
            u.a
        )));
    }
    let traces = incident_traces_quadrature(incident, u.a, u.nmax)?;
    let total = u.add(&traces.h_t)?;
    let zt = apply_operator(&Operator::Impedance(*model), &total)?;
    let impedance_term = pairing(&zt, &total)?.re;
    let quad = flux_quadrature(u.nmax, omega, r);
    let mut flux = 0.0;
    let mut scale = 0.0;
    visit_sphere(u, omega, r, &quad, |x, xh, e, h, w| {
        let (ei, hi) = incident.fields(x);
        let e = cadd(e, &ei);
        let h = cadd(h, &hi);
        let xe = rcross(xh, &e);
        flux += w * (xe[0] * h[0].conj() + xe[1] * h[1].conj() + xe[2] * h[2].conj()).re;
        scale += w * cnorm(&xe) * cnorm(&h);
    })?;
    let denom = impedance_term.abs() + flux.abs() + scale;
    let (normalized_flux, residual) = if denom == 0.0 {
        (0.0, 0.0)
    } else {
        (flux / denom, (impedance_term + flux).abs() / denom)
    };
    Ok(TotalFieldBalance {
        impedance_term,
        flux,
        flux_scale: scale,
        normalized_flux,
        residual,
    })
}

/// `∫_{∂B_R} |H × x̂ − (x̂ × E) × x̂|² ds` for each radius.
///
/// For a radiating field the integrand is `O(R^{-6})`, so this integral
/// decays like `R^{-4}`.
pub fn silver_muller_integral(
    u: &SpectralTangentField,
    omega: f64,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&r| {
            if r <= u.a {
                return Err(GibcError::Domain(format!(
                    "radius {r} must exceed the sphere radius {}",
                    u.a
                )));
            }
            let quad = flux_quadrature(u.nmax, omega, r);
            let mut total = 0.0;
            visit_sphere(u, omega, r, &quad, |_, xh, e, h, w| {
                let xhc = to_complex(xh);
                let hx = ccross(h, &xhc);
                let et = ccross(&rcross(xh, e), &xhc);
                total += w * cnorm_sq(&csub(&hx, &et));
            })?;
            Ok((r, total))
        })
        .collect()
}

/// Silver–Müller defect `‖H × x̂ − (x̂ × E) × x̂‖_{L²(∂B_R)}` for each radius;
/// the square root of [`silver_muller_integral`], decaying like `R^{-2}`.
pub fn silver_muller_residual(
    u: &SpectralTangentField,
    omega: f64,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    Ok(silver_muller_integral(u, omega, radii)?
        .into_iter()
        .map(|(r, v)| (r, v.sqrt()))
        .collect())
}

/// Curl of a complex field by central differences with step `h`.
pub fn finite_difference_curl<F>(field: F, x: &R3, h: f64) -> C3
where
    F: Fn(&R3) -> C3,
{
    let mut d = [[ZERO; 3]; 3]; // d[j][i] = ∂_j F_i
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let fp = field(&xp);
        let fm = field(&xm);
        for i in 0..3 {
            d[j][i] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    [d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]]
}

/// Relative Maxwell residual `(|curl H + iωE| + |curl E − iωH|) / (|ωE| + |ωH|)`.
pub fn maxwell_residual<F>(fields: F, omega: f64, x: &R3, h: f64) -> f64
where
    F: Fn(&R3) -> (C3, C3),
{
    let (e, hh) = fields(x);
    let ch = finite_difference_curl(|y| fields(y).1, x, h);
    let ce = finite_difference_curl(|y| fields(y).0, x, h);
    let r1 = cadd(&ch, &cscale(I * omega, &e));
    let r2 = csub(&ce, &cscale(I * omega, &hh));
    (cnorm(&r1) + cnorm(&r2)) / (omega * (cnorm(&e) + cnorm(&hh)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x_pol() -> C3 {
        [c(1.0, 0.0), ZERO, ZERO]
    }

    #[test]
    fn plane_wave_validation() {
        assert!(IncidentField::plane_wave([0.0, 0.0, 1.0], [ZERO, ZERO, c(1.0, 0.0)], 1.0).is_err());
        assert!(IncidentField::plane_wave([0.0, 0.0, 2.0], x_pol(), 1.0).is_err());
        assert!(IncidentField::plane_wave([0.0, 0.0, 1.0], x_pol(), 1.0).is_ok());
    }

    #[test]
    fn incident_fields_satisfy_maxwell() {
        let pw = IncidentField::plane_wave([0.0, 0.0, 1.0], x_pol(), 1.3).unwrap();
        assert!(maxwell_residual(|x| pw.fields(x), 1.3, &[0.3, -0.2, 0.9], 1e-4) < 1e-7);
        for magnetic in [false, true] {
            let dp = IncidentField::dipole([c(0.2, 0.1), c(-0.4, 0.0), c(1.0, 0.3)], [0.1, 0.0, -0.2], magnetic, 0.8)
                .unwrap();
            let res = maxwell_residual(|x| dp.fields(x), 0.8, &[1.1, 0.4, -0.7], 1e-4);
            assert!(res < 1e-7, "magnetic={magnetic}: {res}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let inc = IncidentField::plane_wave([0.0, 0.0, 1.0], x_pol(), 1.0).unwrap();
        let q = incident_traces_quadrature(&inc, 1.0, 12).unwrap();
        let cf = plane_wave_traces_closed_form(&[0.0, 0.0, 1.0], &x_pol(), 1.0, 1.0, 12).unwrap();
        assert!(max_abs_diff(&q.h_t, &cf.h_t) < 1e-10);
        assert!(max_abs_diff(&q.n_cross_e, &cf.n_cross_e) < 1e-10);
    }

    #[test]
    fn closed_form_oblique_incidence() {
        let d = crate::vec3::normalize(&[0.3, -0.5, 0.8]);
        let e1 = crate::vec3::normalize(&crate::vec3::cross(&d, &[0.0, 0.0, 1.0]));
        let e2 = crate::vec3::cross(&d, &e1);
        let p = [
            c(e1[0], 0.2 * e2[0]),
            c(e1[1], 0.2 * e2[1]),
            c(e1[2], 0.2 * e2[2]),
        ];
        let inc = IncidentField::plane_wave(d, p, 1.7).unwrap();
        let q = incident_traces_quadrature(&inc, 1.2, 14).unwrap();
        let cf = plane_wave_traces_closed_form(&d, &p, 1.7, 1.2, 14).unwrap();
        assert!(max_abs_diff(&q.h_t, &cf.h_t) < 1e-10);
        assert!(max_abs_diff(&q.n_cross_e, &cf.n_cross_e) < 1e-10);
    }

    #[test]
    fn calderon_reproduces_dipole_traces() {
        for magnetic in [false, true] {
            for r in [1.0, 2.0] {
                let dp = IncidentField::dipole([c(0.3, 0.0), c(0.0, -0.5), c(1.0, 0.2)], [0.0; 3], magnetic, 1.0)
                    .unwrap();
                let t = project_traces(&dp, r, 3, 20);
                let s = apply_operator(&Operator::Calderon { omega: 1.0, radius: r }, &t.h_t).unwrap();
                let err = max_abs_diff(&s, &t.n_cross_e);
                assert!(err < 1e-10 * max_abs(&t.n_cross_e), "magnetic={magnetic} r={r}: {err}");
            }
        }
    }

    #[test]
    fn evaluated_fields_satisfy_maxwell_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = SpectralTangentField::random(5, 1.0, &mut rng);
        let omega = 1.4;
        for _ in 0..5 {
            let dir = crate::vec3::normalize(&[
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            let x = crate::vec3::scale(2.0, &dir);
            let res = maxwell_residual(|y| evaluate_fields(&u, omega, y).unwrap(), omega, &x, 1e-4);
            assert!(res < 1e-6, "{res}");
        }
        let quad = SphereQuadrature::for_degree(12);
        let (al, be) = project_tangential(&quad, 1.0, 5, |x| evaluate_fields(&u, omega, x).unwrap().1);
        let back = SpectralTangentField { nmax: 5, a: 1.0, alpha: al, beta: be };
        assert!(max_abs_diff(&back, &u) < 1e-8);
        assert!(evaluate_fields(&u, omega, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn far_field_matches_large_radius_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = SpectralTangentField::random(4, 1.0, &mut rng);
        let omega = 1.0;
        let dir = crate::vec3::normalize(&[0.2, 0.7, -0.4]);
        let r = 1e3;
        let (e, _) = evaluate_fields(&u, omega, &crate::vec3::scale(r, &dir)).unwrap();
        let einf = far_field_amplitude(&u, omega, &dir).unwrap();
        let phase = Complex64::from_polar(r, -omega * r);
        let scaled = cscale(phase, &e);
        assert!(cnorm(&csub(&scaled, &einf)) <= 1e-2 * cnorm(&einf));
        assert!((cnorm(&e) * r - cnorm(&einf)).abs() <= 1e-2 * cnorm(&einf));
    }

    #[test]
    fn zero_data_gives_zero_everything() {
        let model = ImpedanceModel::Scalar { lambda: c(1.0, 0.5) };
        let f = SpectralTangentField::zeros(6, 1.0);
        let rep = solve_surface(&f, &model, 1.0, 1.0, 6).unwrap();
        assert!(rep.u.alpha.iter().chain(&rep.u.beta).all(|z| *z == ZERO));
        assert_eq!(rep.energy_residual, 0.0);
        assert!(rep.silver_muller.iter().all(|(_, v)| *v == 0.0));
        assert!(rep.far_field.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn scalar_zero_impedance_rhs_is_minus_n_cross_e() {
        let inc = IncidentField::plane_wave([0.0, 0.0, 1.0], x_pol(), 1.0).unwrap();
        let pec = ImpedanceModel::Scalar { lambda: ZERO };
        let f = incident_trace(&inc, &pec, 1.0, 8).unwrap();
        let t = incident_traces_quadrature(&inc, 1.0, 8).unwrap();
        assert!(max_abs_diff(&f, &t.n_cross_e.scale(c(-1.0, 0.0))) < 1e-15);
    }

    #[test]
    fn solve_is_linear() {
        let model = ImpedanceModel::FullSecondOrder { lambda: c(1.0, 0.0), eta: c(1.0, 1.0), gamma: c(-1.0, -1.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f1 = SpectralTangentField::random(8, 1.0, &mut rng);
        let f2 = SpectralTangentField::random(8, 1.0, &mut rng);
        let s = c(0.3, -1.2);
        let (u1, _, _) = solve_coefficients(&f1, &model, 1.0, 1.0, 8).unwrap();
        let (u2, _, _) = solve_coefficients(&f2, &model, 1.0, 1.0, 8).unwrap();
        let (u12, _, _) = solve_coefficients(&f1.add(&f2.scale(s)).unwrap(), &model, 1.0, 1.0, 8).unwrap();
        let lin = u1.add(&u2.scale(s)).unwrap();
        assert!(max_abs_diff(&u12, &lin) <= 1e-12 * max_abs(&lin));
    }
}
