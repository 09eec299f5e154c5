//! Axial torsion and the x³-rotation 2-form.
//!
//! The spinor route evaluates the closed bilinear formulas directly. The
//! coframe route builds `ϑ` from the spinor, differentiates it and assembles
//! `(1/3) o_jk ϑ^j ∧ dϑ^k` with the exterior algebra in [`crate::forms`].
//! Starred quantities come back complex so that their (vanishing) imaginary
//! parts stay observable.

use crate::error::{Error, Result};
use crate::forms::{alternate3, exterior_derivative_from_partials, Form};
use crate::lattice::{gradient, FieldKind, LatticeField, Stencil, MAX_DIMS};
use crate::params::{ModelParams, Sign};
use crate::sources::{JetSource, PotentialJet, SpinorJet, SpinorJet2};
use crate::spinor::{
    coframe_of_spinor, density_of_spinor, sigma_lower, sigma_upper, transverse_bilinear, verify_coframe, CoframeDensity, Spinor, C64, FRAME_METRIC,
    I, ZERO,
};

/// Tolerance on the orthonormality of a coframe fed to the coframe route.
pub const COFRAME_TOL: f64 = 1e-9;

pub(crate) fn nonzero_density(xi: &Spinor) -> Result<f64> {
    let rho = density_of_spinor(xi);
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::VanishingDensity { density: rho });
    }
    Ok(rho)
}

pub(crate) fn positive_density(eta: &Spinor) -> Result<f64> {
    let rho = density_of_spinor(eta);
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity { density: rho });
    }
    Ok(rho)
}

/// `∂_α + m⁻¹ A_α ∂₃` applied to a jet.
fn mixed_derivative(j: &SpinorJet, alpha: usize, coupling: Option<(&[f64; 3], f64)>) -> Spinor {
    match coupling {
        Some((a, m)) => j.d[alpha] + j.d[3] * (a[alpha] / m),
        None => j.d[alpha],
    }
}

/// `ξ̄σ^α D_α ξ − ξσ^α D_α ξ̄` summed over α = 0..2.
pub(crate) fn torsion_numerator_4d(j: &SpinorJet, coupling: Option<(&[f64; 3], f64)>) -> C64 {
    let xi = &j.value;
    (0..3)
        .map(|alpha| {
            let s = sigma_upper(alpha);
            let dxi = mixed_derivative(j, alpha, coupling);
            s.sandwich(xi, &dxi) - s.sandwich(&dxi, xi)
        })
        .sum()
}

/// Spinor-route `*T^ax` (no coupling) or `*T_A^ax` of a 4D jet.
pub fn star_torsion_point(j: &SpinorJet, coupling: Option<(&[f64; 3], f64)>) -> Result<C64> {
    let rho = nonzero_density(&j.value)?;
    Ok(-2.0 * I * torsion_numerator_4d(j, coupling) / (3.0 * rho))
}

pub(crate) fn d3_numerator(j: &SpinorJet, alpha: usize) -> C64 {
    let s = sigma_lower(alpha);
    s.sandwich(&j.value, &j.d[3]) - s.sandwich(&j.d[3], &j.value)
}

/// Spinor-route `(*D₃ϑ)_α`, α = 0..2.
pub fn star_d3_point(j: &SpinorJet) -> Result<[C64; 3]> {
    let rho = nonzero_density(&j.value)?;
    Ok([0, 1, 2].map(|alpha| 2.0 * I * d3_numerator(j, alpha) / (3.0 * rho)))
}

/// `η̄σ^α(i∂ ± A)_α η − ησ^α(i∂ ∓ A)_α η̄` for the separated field.
pub fn reduced_numerator(j: &SpinorJet, a: &[f64; 3], r: Sign) -> C64 {
    let eta = &j.value;
    let rv = r.value();
    (0..3)
        .map(|alpha| {
            let s = sigma_upper(alpha);
            let plus = j.d[alpha] * I + *eta * (rv * a[alpha]);
            let conj_minus = j.d[alpha] * (-I) - *eta * (rv * a[alpha]);
            s.sandwich(eta, &plus) - s.sandwich(&conj_minus, eta)
        })
        .sum()
}

/// `*T_{A±}^ax` of the separated field; the sign `r` picks `±`.
pub fn star_torsion_reduced_point(j: &SpinorJet, a: &[f64; 3], r: Sign) -> Result<C64> {
    let rho = positive_density(&j.value)?;
    Ok(-2.0 * reduced_numerator(j, a, r) / (3.0 * rho))
}

/// `(*D₃ϑ)_α = ±4m η̄σ_α η / (3ρ)` of the separated field.
pub fn star_d3_reduced_point(eta: &Spinor, m: f64, r: Sign) -> Result<[f64; 3]> {
    let rho = positive_density(eta)?;
    Ok([0, 1, 2].map(|alpha| r.value() * 4.0 * m * sigma_lower(alpha).sandwich(eta, eta).re / (3.0 * rho)))
}

/// The three x³-independent quantities of the separated field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPoint {
    pub star_t: C64,
    pub star_d3: [f64; 3],
    pub rho: f64,
}

pub fn reduced_point(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign) -> Result<ReducedPoint> {
    Ok(ReducedPoint {
        star_t: star_torsion_reduced_point(j, a, r)?,
        star_d3: star_d3_reduced_point(&j.value, m, r)?,
        rho: density_of_spinor(&j.value),
    })
}

/// Value and gradient of the separated `*T_{A±}^ax`, from a second-order jet.
pub fn star_torsion_reduced_grad(j2: &SpinorJet2, pot: &PotentialJet, r: Sign) -> Result<(f64, [f64; MAX_DIMS])> {
    let eta = j2.value;
    let rho = positive_density(&eta)?;
    let rv = r.value();
    let n = reduced_numerator(&j2.first(), &pot.a, r);
    let s3 = sigma_lower(3);
    let mut grad = [0.0; MAX_DIMS];
    for (beta, g) in grad.iter_mut().enumerate() {
        let db = j2.d[beta];
        let mut dn = ZERO;
        for alpha in 0..3 {
            let s = sigma_upper(alpha);
            let a = pot.a[alpha];
            let da = pot.da[beta][alpha];
            let plus = j2.d[alpha] * I + eta * (rv * a);
            let d_plus = j2.dd[beta][alpha] * I + eta * (rv * da) + db * (rv * a);
            let conj_minus = j2.d[alpha] * (-I) - eta * (rv * a);
            let d_conj_minus = j2.dd[beta][alpha] * (-I) - eta * (rv * da) - db * (rv * a);
            dn += s.sandwich(&db, &plus) + s.sandwich(&eta, &d_plus);
            dn -= s.sandwich(&d_conj_minus, &eta) + s.sandwich(&conj_minus, &db);
        }
        let drho = 2.0 * s3.sandwich(&eta, &db).re;
        *g = (-2.0 * (dn * rho - n * drho) / (3.0 * rho * rho)).re;
    }
    Ok(((-2.0 * n / (3.0 * rho)).re, grad))
}

/// Values and gradients of the 4D `*T_A^ax` and `(*D₃ϑ)_α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarGrad4 {
    pub star_t: f64,
    pub d_star_t: [f64; MAX_DIMS],
    pub star_d3: [f64; 3],
    /// `d_star_d3[β][α] = ∂_β (*D₃ϑ)_α`.
    pub d_star_d3: [[f64; 3]; MAX_DIMS],
}

pub fn star_grad_4d(j2: &SpinorJet2, pot: &PotentialJet, m: f64) -> Result<StarGrad4> {
    let xi = j2.value;
    let rho = nonzero_density(&xi)?;
    let first = j2.first();
    let coupling = Some((&pot.a, m));
    let n = torsion_numerator_4d(&first, coupling);
    let w = [0, 1, 2].map(|alpha| d3_numerator(&first, alpha));
    let s3 = sigma_lower(3);
    let mut out = StarGrad4 {
        star_t: (-2.0 * I * n / (3.0 * rho)).re,
        d_star_t: [0.0; MAX_DIMS],
        star_d3: w.map(|v| (2.0 * I * v / (3.0 * rho)).re),
        d_star_d3: [[0.0; 3]; MAX_DIMS],
    };
    for beta in 0..MAX_DIMS {
        let db = j2.d[beta];
        let drho = 2.0 * s3.sandwich(&xi, &db).re;
        let mut dn = ZERO;
        for alpha in 0..3 {
            let s = sigma_upper(alpha);
            let a = pot.a[alpha] / m;
            let da = pot.da[beta][alpha] / m;
            let dxi = j2.d[alpha] + j2.d[3] * a;
            let d_dxi = j2.dd[beta][alpha] + j2.d[3] * da + j2.dd[beta][3] * a;
            dn += s.sandwich(&db, &dxi) + s.sandwich(&xi, &d_dxi) - s.sandwich(&d_dxi, &xi) - s.sandwich(&dxi, &db);
        }
        out.d_star_t[beta] = (-2.0 * I * (dn * rho - n * drho) / (3.0 * rho * rho)).re;
        for alpha in 0..3 {
            let s = sigma_lower(alpha);
            let dd3 = j2.dd[beta][3];
            let dw = s.sandwich(&db, &j2.d[3]) + s.sandwich(&xi, &dd3) - s.sandwich(&dd3, &xi) - s.sandwich(&j2.d[3], &db);
            out.d_star_d3[beta][alpha] = (2.0 * I * (dw * rho - w[alpha] * drho) / (3.0 * rho * rho)).re;
        }
    }
    Ok(out)
}

/// A coframe with its partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoframeJet {
    pub theta: [[f64; 3]; 3],
    /// `d[β][j][α] = ∂_β ϑ^j_α`.
    pub d: [[[f64; 3]; 3]; MAX_DIMS],
    pub rho: f64,
}

/// Coframe jet of a positive-class spinor jet by the product rule.
pub fn coframe_jet(j: &SpinorJet) -> Result<CoframeJet> {
    let CoframeDensity { theta, rho } = coframe_of_spinor(&j.value)?;
    let s3 = sigma_lower(3);
    let mut d = [[[0.0; 3]; 3]; MAX_DIMS];
    for (beta, db) in d.iter_mut().enumerate() {
        let dv = j.d[beta];
        let drho = 2.0 * s3.sandwich(&j.value, &dv).re;
        let q1 = transverse_bilinear(&dv, &j.value);
        let q2 = transverse_bilinear(&j.value, &dv);
        for alpha in 0..3 {
            let dj = 2.0 * sigma_lower(alpha).sandwich(&j.value, &dv).re;
            let dq = q1[alpha] + q2[alpha];
            let raw = [dj, dq.re, dq.im];
            for k in 0..3 {
                db[k][alpha] = (raw[k] - theta[k][alpha] * drho) / rho;
            }
        }
    }
    Ok(CoframeJet { theta, d, rho })
}

fn check_coframe(theta: &[[f64; 3]; 3]) -> Result<()> {
    let check = verify_coframe(&CoframeDensity { theta: *theta, rho: 1.0 }, COFRAME_TOL);
    if !check.pass {
        return Err(Error::InvalidCoframe { deviation: check.metric_deviation.max(check.det_deviation) });
    }
    Ok(())
}

fn d_theta(cj: &CoframeJet, k: usize) -> Form {
    let partials: Vec<Form> = (0..3).map(|beta| Form::covector(3, &cj.d[beta][k])).collect();
    exterior_derivative_from_partials(3, 1, &partials)
}

/// Coframe-route `T^ax = (1/3) o_jk ϑ^j ∧ dϑ^k`.
pub fn axial_torsion_from_jet(cj: &CoframeJet) -> Form {
    let mut t = Form::zero(3, 3);
    for k in 0..3 {
        let w = Form::covector(3, &cj.theta[k]).wedge(&d_theta(cj, k)).expect("1-form ∧ 2-form in three dimensions");
        t = t.add(&w.scale(FRAME_METRIC[k] / 3.0));
    }
    t
}

/// Coframe-route `D₃ϑ = (1/3) o_jk ϑ^j ∧ ∂₃ϑ^k`.
pub fn d3_rotation_from_jet(cj: &CoframeJet) -> Form {
    let mut out = Form::zero(3, 2);
    for k in 0..3 {
        let w = Form::covector(3, &cj.theta[k]).wedge(&Form::covector(3, &cj.d[3][k])).expect("two covectors");
        out = out.add(&w.scale(FRAME_METRIC[k] / 3.0));
    }
    out
}

/// `T_{αβγ} = o_jk ϑ^j_α (dϑ^k)_{βγ}`, flattened with γ fastest.
pub fn torsion_tensor_from_jet(cj: &CoframeJet) -> [f64; 27] {
    let mut t = [0.0; 27];
    for k in 0..3 {
        let dk = d_theta(cj, k);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    t[(a * 3 + b) * 3 + c] += FRAME_METRIC[k] * cj.theta[k][a] * dk.get(&[b, c]);
                }
            }
        }
    }
    t
}

/// `T_ext^ax` of the Kaluza–Klein extension `ϑ^3 = dx³`, as a 4D 3-form.
pub fn extended_axial_torsion(cj: &CoframeJet) -> Form {
    let mut t = Form::zero(4, 3);
    for k in 0..3 {
        let mut row = [0.0; 4];
        row[..3].copy_from_slice(&cj.theta[k]);
        let partials: Vec<Form> = (0..4)
            .map(|beta| {
                let mut p = [0.0; 4];
                p[..3].copy_from_slice(&cj.d[beta][k]);
                Form::covector(4, &p)
            })
            .collect();
        let dk = exterior_derivative_from_partials(4, 1, &partials);
        let w = Form::covector(4, &row).wedge(&dk).expect("1-form ∧ 2-form in four dimensions");
        t = t.add(&w.scale(FRAME_METRIC[k] / 3.0));
    }
    t
}

fn coframe_jet_from_lattice(theta: &LatticeField, grads: &[LatticeField], idx: usize) -> CoframeJet {
    let v = theta.at(idx);
    let mut cj = CoframeJet { theta: [[0.0; 3]; 3], d: [[[0.0; 3]; 3]; MAX_DIMS], rho: 1.0 };
    for k in 0..3 {
        cj.theta[k].copy_from_slice(&v[3 * k..3 * k + 3]);
    }
    for (beta, g) in grads.iter().enumerate() {
        let gv = g.at(idx);
        for k in 0..3 {
            cj.d[beta][k].copy_from_slice(&gv[3 * k..3 * k + 3]);
        }
    }
    cj
}

/// Coframe and density fields of a positive-class spinor field.
pub fn coframe_field(xi: &LatticeField) -> Result<(LatticeField, LatticeField)> {
    let mut err = None;
    let theta = xi.map(FieldKind::Coframe { dims: 3 }, |idx, _, dst| match coframe_of_spinor(&xi.spinor_at(idx)) {
        Ok(cd) => {
            for k in 0..3 {
                dst[3 * k..3 * k + 3].copy_from_slice(&cd.theta[k]);
            }
        }
        Err(e) => {
            err.get_or_insert(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let rho = xi.map(FieldKind::Scalar, |idx, _, dst| dst[0] = density_of_spinor(&xi.spinor_at(idx)));
    Ok((theta, rho))
}

fn require_coframe(theta: &LatticeField) -> Result<()> {
    if theta.kind != (FieldKind::Coframe { dims: 3 }) {
        return Err(Error::DimensionMismatch(format!("expected a 3×3 coframe field, got {:?}", theta.kind)));
    }
    if theta.spec.dims() < 3 {
        return Err(Error::DimensionMismatch("coframe route needs at least three lattice axes".into()));
    }
    Ok(())
}

/// Pointwise assembly over a coframe lattice field and its stencil gradient.
fn coframe_route<F>(theta: &LatticeField, stencil: Stencil, axes: usize, kind: FieldKind, mut f: F) -> Result<LatticeField>
where
    F: FnMut(&CoframeJet, &mut [f64]),
{
    require_coframe(theta)?;
    let grads = gradient(theta, axes, stencil)?;
    let refs: Vec<&LatticeField> = grads.iter().collect();
    let mut out = LatticeField::zeros(&theta.spec, kind);
    out.margin = LatticeField::joint_margin(&refs);
    let nc = kind.real_components();
    for idx in 0..theta.spec.len() {
        let dst = &mut out.data[idx * nc..(idx + 1) * nc];
        if !theta.spec.is_interior(idx, &out.margin) {
            dst.fill(f64::NAN);
            continue;
        }
        let cj = coframe_jet_from_lattice(theta, &grads, idx);
        check_coframe(&cj.theta)?;
        f(&cj, dst);
    }
    Ok(out)
}

/// Coframe-route axial torsion 3-form.
pub fn axial_torsion_coframe(theta: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    coframe_route(theta, stencil, 3, FieldKind::Form { dims: 3, rank: 3 }, |cj, dst| dst.copy_from_slice(axial_torsion_from_jet(cj).components()))
}

/// Full torsion tensor `o_jk ϑ^j ⊗ dϑ^k`.
pub fn torsion_tensor(theta: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    coframe_route(theta, stencil, 3, FieldKind::Tensor3 { dims: 3 }, |cj, dst| dst.copy_from_slice(&torsion_tensor_from_jet(cj)))
}

/// Total antisymmetrisation of a torsion tensor field.
pub fn antisymmetrize(t: &LatticeField) -> Result<LatticeField> {
    if t.kind != (FieldKind::Tensor3 { dims: 3 }) {
        return Err(Error::RankMismatch { left: format!("{:?}", t.kind), right: "Tensor3 { dims: 3 }".into() });
    }
    Ok(t.map(FieldKind::Form { dims: 3, rank: 3 }, |_, v, dst| dst.copy_from_slice(alternate3(3, v).components())))
}

/// Coframe-route `D₃ϑ` on a 4D lattice.
pub fn d3_rotation_coframe(theta: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    if theta.spec.dims() != 4 {
        return Err(Error::DimensionMismatch("D3 rotation needs a 4D lattice".into()));
    }
    coframe_route(theta, stencil, 4, FieldKind::Form { dims: 3, rank: 2 }, |cj, dst| dst.copy_from_slice(d3_rotation_from_jet(cj).components()))
}

pub(crate) fn pointwise<F>(src: &JetSource, kind: FieldKind, mut f: F) -> Result<LatticeField>
where
    F: FnMut(usize, &SpinorJet, &mut [f64]) -> Result<()>,
{
    let spec = src.spec();
    let mut out = LatticeField::zeros(spec, kind);
    out.margin = src.margin();
    let nc = kind.real_components();
    for idx in 0..spec.len() {
        let dst = &mut out.data[idx * nc..(idx + 1) * nc];
        if !src.is_interior(idx) {
            dst.fill(f64::NAN);
            continue;
        }
        f(idx, &src.jet(idx), dst)?;
    }
    Ok(out)
}

/// Spinor-route `(*D₃ϑ)_α` as a covector field.
pub fn d3_rotation_spinor(src: &JetSource) -> Result<LatticeField> {
    pointwise(src, FieldKind::covector(3), |_, j, dst| {
        let d = star_d3_point(j)?;
        for a in 0..3 {
            dst[a] = d[a].re;
        }
        Ok(())
    })
}

/// Spinor-route `*T^ax`, or `*T_A^ax` when `with_a` is set.
pub fn axial_torsion_spinor(src: &JetSource, params: &ModelParams, with_a: bool) -> Result<LatticeField> {
    pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let pot = params.potential.jet(&src.position(idx));
        let coupling = if with_a { Some((&pot.a, params.m)) } else { None };
        dst[0] = star_torsion_point(j, coupling)?.re;
        Ok(())
    })
}

/// `*T_{A±}^ax`, `*D₃ϑ` and `ρ` of a separated field, sign taken from `params.r`.
#[derive(Debug, Clone)]
pub struct ReducedQuantities {
    pub star_t: LatticeField,
    pub star_d3: LatticeField,
    pub rho: LatticeField,
}

pub fn reduced_quantities(src: &JetSource, params: &ModelParams) -> Result<ReducedQuantities> {
    let mut d3 = Vec::new();
    let mut rho = Vec::new();
    let star_t = pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let pot = params.potential.jet(&src.position(idx));
        let p = reduced_point(j, &pot.a, params.m, params.r)?;
        dst[0] = p.star_t.re;
        d3.push((idx, p.star_d3));
        rho.push((idx, p.rho));
        Ok(())
    })?;
    let mut star_d3 = star_t.map(FieldKind::covector(3), |_, _, _| {});
    let mut rho_f = star_t.map(FieldKind::Scalar, |_, _, _| {});
    for (idx, v) in d3 {
        star_d3.at_mut(idx).copy_from_slice(&v);
    }
    for (idx, v) in rho {
        rho_f.at_mut(idx)[0] = v;
    }
    Ok(ReducedQuantities { star_t, star_d3, rho: rho_f })
}

/// Outcome of a Kaluza–Klein decomposition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkReport {
    /// max `|‖T_ext‖²|` over the lattice.
    pub lhs_max: f64,
    /// max `|‖D₃ϑ‖²|`.
    pub d3_max: f64,
    /// max `|‖T_ext‖² − (‖T‖² + ‖D₃ϑ‖²)|` with the right side from the same coframe jets.
    pub identity_residual: f64,
    /// max `|‖T_ext‖² − (−(*T)² − ‖*D₃ϑ‖²)|` with the right side from the spinor route.
    pub route_residual: f64,
    pub route_rms: f64,
    pub points: usize,
}

/// Compares `‖T_ext^ax‖²` of the extended coframe against `‖T^ax‖² + ‖D₃ϑ‖²`.
///
/// `src` must be four-dimensional. In stencil mode the coframe is sampled
/// from the spinor and differentiated on the lattice, so the spinor-route
/// comparison carries the stencil error of both routes.
pub fn kk_decomposition_check(src: &JetSource) -> Result<KkReport> {
    let spec = src.spec();
    if spec.dims() != 4 {
        return Err(Error::DimensionMismatch("Kaluza-Klein check needs a 4D lattice".into()));
    }
    let lattice_route = match src.stencil_kind() {
        Some(stencil) => {
            let (theta, _) = coframe_field(&src.samples())?;
            let grads = gradient(&theta, 4, stencil)?;
            Some((theta, grads))
        }
        None => None,
    };
    let mut rep = KkReport { lhs_max: 0.0, d3_max: 0.0, identity_residual: 0.0, route_residual: 0.0, route_rms: 0.0, points: 0 };
    let mut sum_sq = 0.0;
    for idx in 0..spec.len() {
        if !src.is_interior(idx) {
            continue;
        }
        let j = src.jet(idx);
        let cj = match &lattice_route {
            Some((theta, grads)) => {
                let refs: Vec<&LatticeField> = grads.iter().collect();
                if !spec.is_interior(idx, &LatticeField::joint_margin(&refs)) {
                    continue;
                }
                coframe_jet_from_lattice(theta, grads, idx)
            }
            None => coframe_jet(&j)?,
        };
        check_coframe(&cj.theta)?;
        let lhs = extended_axial_torsion(&cj).norm_sqr()?;
        let t = axial_torsion_from_jet(&cj).norm_sqr()?;
        let d = d3_rotation_from_jet(&cj).norm_sqr()?;
        let st = star_torsion_point(&j, None)?.re;
        let sd = star_d3_point(&j)?;
        let sd_norm: f64 = (0..3).map(|a| crate::spinor::METRIC[a] * sd[a].re * sd[a].re).sum();
        let spinor_rhs = -st * st - sd_norm;
        rep.lhs_max = rep.lhs_max.max(lhs.abs());
        rep.d3_max = rep.d3_max.max(d.abs());
        rep.identity_residual = rep.identity_residual.max((lhs - t - d).abs());
        let diff = lhs - spinor_rhs;
        rep.route_residual = rep.route_residual.max(diff.abs());
        sum_sq += diff * diff;
        rep.points += 1;
    }
    rep.route_rms = if rep.points > 0 { (sum_sq / rep.points as f64).sqrt() } else { 0.0 };
    Ok(rep)
}

/// Residuals of the two torsion routes on one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteComparison {
    pub max_abs: f64,
    pub rms: f64,
    /// Largest `|*T^ax|` seen, for scaling.
    pub magnitude: f64,
    pub max_imag: f64,
    pub points: usize,
}

/// Compares `*T^ax` from the spinor formula with the Hodge dual of the
/// coframe-route 3-form, both built from the same jet source.
pub fn compare_torsion_routes(src: &JetSource) -> Result<RouteComparison> {
    let spec = src.spec();
    let lattice_route = match src.stencil_kind() {
        Some(stencil) => {
            let (theta, _) = coframe_field(&src.samples())?;
            Some(axial_torsion_coframe(&theta, stencil)?)
        }
        None => None,
    };
    let mut rep = RouteComparison { max_abs: 0.0, rms: 0.0, magnitude: 0.0, max_imag: 0.0, points: 0 };
    let mut sum_sq = 0.0;
    for idx in 0..spec.len() {
        if !src.is_interior(idx) {
            continue;
        }
        let j = src.jet(idx);
        let coframe_t = match &lattice_route {
            Some(t) => {
                if !t.is_interior(idx) {
                    continue;
                }
                Form::from_components(3, 3, t.at(idx))
            }
            None => {
                let cj = coframe_jet(&j)?;
                check_coframe(&cj.theta)?;
                axial_torsion_from_jet(&cj)
            }
        };
        let star_coframe = coframe_t.hodge()?.components()[0];
        let star_spinor = star_torsion_point(&j, None)?;
        let diff = star_spinor.re - star_coframe;
        rep.max_abs = rep.max_abs.max(diff.abs());
        rep.magnitude = rep.magnitude.max(star_spinor.re.abs());
        rep.max_imag = rep.max_imag.max(star_spinor.im.abs());
        sum_sq += diff * diff;
        rep.points += 1;
    }
    rep.rms = if rep.points > 0 { (sum_sq / rep.points as f64).sqrt() } else { 0.0 };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::sources::{rng_from_seed, BandLimit, BandLimitedSpinor, ConstantSpinor, KkLift, PlaneWaveSpinor, Potential, SpinorField};
    use std::f64::consts::{PI, TAU};

    fn jet_at(f: &dyn SpinorField, x: [f64; 4]) -> SpinorJet {
        f.jet(&x)
    }

    fn rest_wave(m: f64, s: Sign) -> PlaneWaveSpinor {
        PlaneWaveSpinor { zeta: Spinor::from_real(1.0, 0.0), p: [s.value() * m, 0.0, 0.0, 0.0], antiperiodic: false }
    }

    #[test]
    fn constant_spinor_has_no_torsion() {
        let j = jet_at(&ConstantSpinor(Spinor::from_real(1.0, 0.0)), [0.0; 4]);
        assert_eq!(star_torsion_point(&j, None).unwrap(), ZERO);
        assert_eq!(star_d3_point(&j).unwrap(), [ZERO; 3]);
        let cj = coframe_jet(&j).unwrap();
        assert_eq!(axial_torsion_from_jet(&cj).max_abs(), 0.0);
    }

    #[test]
    fn time_phase_gives_four_thirds_sm() {
        for s in Sign::BOTH {
            let m = 1.7;
            let j = jet_at(&rest_wave(m, s), [0.3, 0.1, -0.2, 0.0]);
            let t = star_torsion_reduced_point(&j, &[0.0; 3], Sign::Plus).unwrap();
            assert!((t.re - 4.0 * s.value() * m / 3.0).abs() < 1e-14);
            let t4 = star_torsion_point(&j, None).unwrap();
            assert!((t4.re - 4.0 * s.value() * m / 3.0).abs() < 1e-14);
            let cj = coframe_jet(&j).unwrap();
            let hodge = axial_torsion_from_jet(&cj).hodge().unwrap().components()[0];
            assert!((hodge - t4.re).abs() < 1e-13);
        }
    }

    #[test]
    fn d3_of_separated_field_matches_reduced_formula() {
        let band = BandLimit::default();
        let eta = BandLimitedSpinor::seeded(4, &[1.0, 1.0, 1.0, 0.0], &band);
        for r in Sign::BOTH {
            let m = 0.8;
            let xi = KkLift { eta: eta.clone(), r, m };
            let x = [0.4, 1.2, -0.3, 0.9];
            let d4 = star_d3_point(&xi.jet(&x)).unwrap();
            let d3 = star_d3_reduced_point(&eta.value(&x), m, r).unwrap();
            for a in 0..3 {
                assert!((d4[a].re - d3[a]).abs() < 1e-13);
                assert!(d4[a].im.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn separated_torsion_matches_4d_route() {
        let band = BandLimit::default();
        let mut rng = rng_from_seed(9);
        let eta = BandLimitedSpinor::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], &band);
        let pot = Potential::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], &band);
        for r in Sign::BOTH {
            let m = 1.3;
            let xi = KkLift { eta: eta.clone(), r, m };
            let x = [0.2, -0.5, 0.7, 0.35];
            let a = pot.jet(&x).a;
            let t4 = star_torsion_point(&xi.jet(&x), Some((&a, m))).unwrap();
            let t3 = star_torsion_reduced_point(&eta.jet(&x), &a, r).unwrap();
            assert!((t4.re - t3.re).abs() < 1e-13, "{t4} vs {t3}");
        }
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let band = BandLimit::default();
        let mut rng = rng_from_seed(21);
        let eta = BandLimitedSpinor::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], &band);
        let pot = Potential::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], &band);
        let x = [0.3, 0.6, -1.1, 0.0];
        let (_, g) = star_torsion_reduced_grad(&eta.jet2(&x), &pot.jet(&x), Sign::Minus).unwrap();
        let h = 1e-6;
        for b in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[b] += h;
            xm[b] -= h;
            let fp = star_torsion_reduced_point(&eta.jet(&xp), &pot.jet(&xp).a, Sign::Minus).unwrap().re;
            let fm = star_torsion_reduced_point(&eta.jet(&xm), &pot.jet(&xm).a, Sign::Minus).unwrap().re;
            assert!(((fp - fm) / (2.0 * h) - g[b]).abs() < 1e-7);
        }
    }

    #[test]
    fn grad_4d_matches_finite_differences() {
        let band = BandLimit::default();
        let mut rng = rng_from_seed(22);
        let eta = BandLimitedSpinor::random(&mut rng, &[1.0, 1.0, 1.0, 2.0], &band);
        let pot = Potential::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], &band);
        let m = 1.1;
        let x = [0.3, 0.6, -1.1, 0.2];
        let g = star_grad_4d(&eta.jet2(&x), &pot.jet(&x), m).unwrap();
        let h = 1e-6;
        for b in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[b] += h;
            xm[b] -= h;
            let tp = star_torsion_point(&eta.jet(&xp), Some((&pot.jet(&xp).a, m))).unwrap().re;
            let tm = star_torsion_point(&eta.jet(&xm), Some((&pot.jet(&xm).a, m))).unwrap().re;
            assert!(((tp - tm) / (2.0 * h) - g.d_star_t[b]).abs() < 1e-7);
            let dp = star_d3_point(&eta.jet(&xp)).unwrap();
            let dm = star_d3_point(&eta.jet(&xm)).unwrap();
            for a in 0..3 {
                assert!(((dp[a].re - dm[a].re) / (2.0 * h) - g.d_star_d3[b][a]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn coframe_jet_matches_finite_differences() {
        let eta = BandLimitedSpinor::seeded(5, &[1.0, 1.0, 1.0, 0.0], &BandLimit::default());
        let x = [0.1, 0.2, 0.3, 0.0];
        let cj = coframe_jet(&eta.jet(&x)).unwrap();
        let h = 1e-6;
        for b in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[b] += h;
            xm[b] -= h;
            let p = coframe_of_spinor(&eta.value(&xp)).unwrap().theta;
            let q = coframe_of_spinor(&eta.value(&xm)).unwrap().theta;
            for k in 0..3 {
                for a in 0..3 {
                    assert!(((p[k][a] - q[k][a]) / (2.0 * h) - cj.d[b][k][a]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn routes_agree_analytically_on_random_fields() {
        let spec = LatticeSpec::periodic_box(&[6, 6, 6], &[TAU; 3]).unwrap();
        for seed in 0..5 {
            let eta = BandLimitedSpinor::seeded(seed, &[1.0, 1.0, 1.0, 0.0], &BandLimit::default());
            let rep = compare_torsion_routes(&JetSource::analytic(&spec, &eta)).unwrap();
            assert!(rep.max_abs < 1e-12 * rep.magnitude.max(1.0), "{rep:?}");
            assert!(rep.max_imag < 1e-13);
        }
    }

    #[test]
    fn alternation_of_torsion_tensor_is_axial_torsion() {
        let spec = LatticeSpec::periodic_box(&[8, 8, 8], &[TAU; 3]).unwrap();
        let eta = BandLimitedSpinor::seeded(2, &[1.0, 1.0, 1.0, 0.0], &BandLimit::default());
        let xi = crate::sources::sample_spinor(&spec, &eta);
        let (theta, _) = coframe_field(&xi).unwrap();
        let t = torsion_tensor(&theta, Stencil::Second).unwrap();
        let ax = axial_torsion_coframe(&theta, Stencil::Second).unwrap();
        assert!(antisymmetrize(&t).unwrap().max_abs_diff(&ax).unwrap() < 1e-13);
    }

    #[test]
    fn invalid_coframe_is_rejected() {
        let spec = LatticeSpec::periodic_box(&[4, 4, 4], &[1.0; 3]).unwrap();
        let theta =
            LatticeField::from_fn(&spec, FieldKind::Coframe { dims: 3 }, |_, _, v| v.copy_from_slice(&[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]));
        assert!(matches!(axial_torsion_coframe(&theta, Stencil::Second), Err(Error::InvalidCoframe { .. })));
    }

    #[test]
    fn kk_identity_holds_for_phase_lift() {
        let m = 1.0;
        let xi = KkLift { eta: ConstantSpinor(Spinor::from_real(1.0, 0.0)), r: Sign::Plus, m };
        let spec = LatticeSpec::periodic_box(&[4, 4, 4, 4], &[TAU, TAU, TAU, PI / m]).unwrap();
        let rep = kk_decomposition_check(&JetSource::analytic(&spec, &xi)).unwrap();
        assert!(rep.route_residual < 1e-10 && rep.identity_residual < 1e-12);
        assert!(rep.d3_max > 1.0);
    }

    #[test]
    fn reduced_quantities_are_scale_and_phase_invariant() {
        let eta = BandLimitedSpinor::seeded(8, &[1.0, 1.0, 1.0, 0.0], &BandLimit::default());
        let x = [0.5, -0.2, 0.9, 0.0];
        let j = eta.jet(&x);
        let a = [0.1, -0.2, 0.05];
        let base = reduced_point(&j, &a, 1.0, Sign::Plus).unwrap();
        for k in [C64::new(2.0, 0.0), C64::from_polar(1.0, 1.1)] {
            let mut jk = j;
            jk.value = jk.value * k;
            for d in jk.d.iter_mut() {
                *d = *d * k;
            }
            let p = reduced_point(&jk, &a, 1.0, Sign::Plus).unwrap();
            assert!((p.star_t - base.star_t).norm() < 1e-13);
            for c in 0..3 {
                assert!((p.star_d3[c] - base.star_d3[c]).abs() < 1e-13);
            }
            assert!((p.rho - k.norm_sqr() * base.rho).abs() < 1e-13);
        }
    }
}
