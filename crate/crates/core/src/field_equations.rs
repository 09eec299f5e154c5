//! Dirac operators, the explicit nonlinear field equations for `ξ` and `η`,
//! the finite-difference Euler–Lagrange oracle and the equivalence check
//! between the two.
//!
//! Products such as `(*T)η` are differentiated with the Leibniz rule from
//! second-order jets in analytic mode. In stencil mode the product is formed
//! on the lattice first and then differenced, exactly as a discretisation of
//! the printed equation would do.

use crate::error::{Error, Result};
use crate::lagrangians::{dirac_lagrangian_point, lagrangian_4d_point, lagrangian_reduced_point};
use crate::lattice::{gradient, FieldKind, LatticeField, Stencil, MAX_DIMS};
use crate::params::{ModelParams, Sign};
use crate::sources::{local_jet, JetSource, SpinorJet};
use crate::spinor::{sigma_lower, sigma_upper, DottedSpinor, Spinor, C64, I};
use crate::torsion::{
    nonzero_density, positive_density, star_d3_point, star_grad_4d, star_torsion_point, star_torsion_reduced_grad, star_torsion_reduced_point,
};
use crate::variational::{action_gradient, LocalDensity, ProbeSet};

/// `σ^α(i∂_α + rA_α)η + smσ³η` at a point.
pub fn dirac_apply_point(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign, s: Sign) -> DottedSpinor {
    let mut out = sigma_upper(3).apply(&j.value) * (s.value() * m);
    for alpha in 0..3 {
        let v = j.d[alpha] * I + j.value * (r.value() * a[alpha]);
        out = out + sigma_upper(alpha).apply(&v);
    }
    out
}

/// `D_rs η` with the signs and potential from `params`.
pub fn dirac_apply(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    dirac_apply_signed(src, params, params.r, params.s)
}

fn dirac_apply_signed(src: &JetSource, params: &ModelParams, r: Sign, s: Sign) -> Result<LatticeField> {
    for_each_point(src, src.margin(), |idx, j| {
        let a = params.potential.jet(&src.position(idx)).a;
        Ok(dirac_apply_point(j, &a, params.m, r, s))
    })
}

fn for_each_point<F>(src: &JetSource, margin: Vec<usize>, mut f: F) -> Result<LatticeField>
where
    F: FnMut(usize, &SpinorJet) -> Result<DottedSpinor>,
{
    let spec = src.spec();
    let mut out = LatticeField::zeros(spec, FieldKind::Spinor);
    out.margin = margin;
    for idx in 0..spec.len() {
        if !out.is_interior(idx) {
            out.at_mut(idx).fill(f64::NAN);
            continue;
        }
        let v = f(idx, &src.jet(idx))?;
        out.set_spinor(idx, &v.retag());
    }
    Ok(out)
}

/// The separated equation given `*T`, the product `P = (*T)η` and its
/// first derivatives.
fn reduced_core(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign, t: f64, p: &Spinor, dp: &[Spinor; 3]) -> Result<DottedSpinor> {
    let eta = &j.value;
    let rho = positive_density(eta)?;
    let rv = r.value();
    let mut bracket = DottedSpinor::zero();
    for alpha in 0..3 {
        let s = sigma_upper(alpha);
        let first = j.d[alpha] * I + *eta * (rv * a[alpha]);
        let second = dp[alpha] * I + *p * (rv * a[alpha]);
        bracket = bracket + s.apply(&first) * t + s.apply(&second);
    }
    let l = lagrangian_reduced_point(j, a, m, r)?.checked("separated density")?;
    Ok(bracket * (4.0 / 3.0) + sigma_upper(3).apply(eta) * (32.0 * m * m / 9.0) - sigma_lower(3).apply(eta) * (l / rho))
}

/// Residual of the field equation for the separated field `η`; the sign
/// `r` selects `L_+` or `L_−`.
pub fn field_equation_residual_reduced(src: &JetSource, params: &ModelParams, r: Sign) -> Result<LatticeField> {
    match src.stencil_kind() {
        None => for_each_point(src, src.margin(), |idx, _| {
            let j2 = src.jet2(idx).expect("closed-form source");
            let pot = params.potential.jet(&src.position(idx));
            let (t, dt) = star_torsion_reduced_grad(&j2, &pot, r)?;
            let eta = j2.value;
            let dp = [0, 1, 2].map(|b| eta * dt[b] + j2.d[b] * t);
            reduced_core(&j2.first(), &pot.a, params.m, r, t, &(eta * t), &dp)
        }),
        Some(stencil) => {
            let mut t_err = None;
            let samples = src.samples();
            let p = samples.map(FieldKind::Spinor, |idx, _, dst| {
                if !src.is_interior(idx) {
                    dst.fill(f64::NAN);
                    return;
                }
                let j = src.jet(idx);
                let a = params.potential.jet(&src.position(idx)).a;
                match star_torsion_reduced_point(&j, &a, r) {
                    Ok(t) => write_spinor(dst, &(j.value * t.re)),
                    Err(e) => {
                        t_err.get_or_insert(e);
                        dst.fill(f64::NAN);
                    }
                }
            });
            if let Some(e) = t_err {
                return Err(e);
            }
            let mut p = p;
            p.margin = src.margin();
            let dp = gradient(&p, 3, stencil)?;
            let margin = LatticeField::joint_margin(&dp.iter().collect::<Vec<_>>());
            for_each_point(src, margin, |idx, j| {
                let a = params.potential.jet(&src.position(idx)).a;
                let t = star_torsion_reduced_point(j, &a, r)?.re;
                let d = [0, 1, 2].map(|b| dp[b].spinor_at(idx));
                reduced_core(j, &a, params.m, r, t, &p.spinor_at(idx), &d)
            })
        }
    }
}

fn write_spinor(dst: &mut [f64], s: &Spinor) {
    dst.copy_from_slice(&[s.c[0].re, s.c[0].im, s.c[1].re, s.c[1].im]);
}

/// The 4D equation given `*T`, `*D₃ϑ`, the products `P = (*T)ξ`,
/// `Q_α = (*D₃ϑ)_α ξ` and the derivatives it needs of them.
struct FourDTerms {
    t: f64,
    star_d3: [f64; 3],
    /// `∂_β P` for β = 0..3.
    dp: [Spinor; MAX_DIMS],
    /// `∂₃ Q_α`.
    d3q: [Spinor; 3],
}

fn four_d_core(j: &SpinorJet, a: &[f64; 3], m: f64, terms: &FourDTerms) -> Result<DottedSpinor> {
    let xi = &j.value;
    let rho = nonzero_density(xi)?;
    let mut bracket = DottedSpinor::zero();
    for alpha in 0..3 {
        let s = sigma_upper(alpha);
        let k = a[alpha] / m;
        let d_xi = j.d[alpha] + j.d[3] * k;
        let d_p = terms.dp[alpha] + terms.dp[3] * k;
        bracket = bracket + s.apply(&d_xi) * terms.t + s.apply(&d_p);
        bracket = bracket - s.apply(&j.d[3]) * terms.star_d3[alpha] - s.apply(&terms.d3q[alpha]);
    }
    let l = lagrangian_4d_point(j, a, m)?.checked("4D density")?;
    Ok(bracket * (4.0 * I / 3.0) - sigma_lower(3).apply(xi) * (l / rho))
}

/// Residual of the 4D field equation for `ξ`.
pub fn field_equation_residual_4d(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    if src.spec().dims() != 4 {
        return Err(Error::DimensionMismatch(format!("4D field equation on a {}D lattice", src.spec().dims())));
    }
    let m = params.m;
    match src.stencil_kind() {
        None => for_each_point(src, src.margin(), |idx, _| {
            let j2 = src.jet2(idx).expect("closed-form source");
            let pot = params.potential.jet(&src.position(idx));
            let g = star_grad_4d(&j2, &pot, m)?;
            let xi = j2.value;
            let terms = FourDTerms {
                t: g.star_t,
                star_d3: g.star_d3,
                dp: [0, 1, 2, 3].map(|b| xi * g.d_star_t[b] + j2.d[b] * g.star_t),
                d3q: [0, 1, 2].map(|al| xi * g.d_star_d3[3][al] + j2.d[3] * g.star_d3[al]),
            };
            four_d_core(&j2.first(), &pot.a, m, &terms)
        }),
        Some(stencil) => {
            // P and the three Q_α packed as four spinors per point.
            let samples = src.samples();
            let mut err = None;
            let mut packed = LatticeField::zeros(src.spec(), FieldKind::Complex(8));
            packed.margin = src.margin();
            packed.twisted = samples.twisted.clone();
            for idx in 0..src.spec().len() {
                let dst = packed.at_mut(idx);
                if !src.is_interior(idx) {
                    dst.fill(f64::NAN);
                    continue;
                }
                let j = src.jet(idx);
                let a = params.potential.jet(&src.position(idx)).a;
                match star_torsion_point(&j, Some((&a, m))).and_then(|t| Ok((t, star_d3_point(&j)?))) {
                    Ok((t, d)) => {
                        write_spinor(&mut dst[0..4], &(j.value * t.re));
                        for al in 0..3 {
                            write_spinor(&mut dst[4 + 4 * al..8 + 4 * al], &(j.value * d[al].re));
                        }
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        dst.fill(f64::NAN);
                    }
                }
            }
            if let Some(e) = err {
                return Err(e);
            }
            let d = gradient(&packed, 4, stencil)?;
            let margin = LatticeField::joint_margin(&d.iter().collect::<Vec<_>>());
            let chunk = |f: &LatticeField, idx: usize, k: usize| {
                let v = &f.at(idx)[4 * k..4 * k + 4];
                Spinor::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))
            };
            for_each_point(src, margin, |idx, j| {
                let a = params.potential.jet(&src.position(idx)).a;
                let terms = FourDTerms {
                    t: star_torsion_point(j, Some((&a, m)))?.re,
                    star_d3: star_d3_point(j)?.map(|v| v.re),
                    dp: [0, 1, 2, 3].map(|b| chunk(&d[b], idx, 0)),
                    d3q: [0, 1, 2].map(|al| chunk(&d[3], idx, al + 1)),
                };
                four_d_core(j, &a, m, &terms)
            })
        }
    }
}

/// Evaluates the 4D equation on `ξ = η e^{−irmx³}` at a fixed `x³` from a
/// 3D source for `η`: x⁰..x² derivatives come from `src`, the x³
/// derivatives are exact. Returns `e^{+irmx³}` times the residual, which
/// the separation of variables says equals the separated residual.
pub fn field_equation_residual_4d_separated(src: &JetSource, params: &ModelParams, x3: f64) -> Result<LatticeField> {
    let (m, r) = (params.m, params.r);
    let k = C64::new(0.0, -r.value() * m);
    let phase = (k * x3).exp();
    let lift = |j: &SpinorJet| {
        let mut l = SpinorJet { value: j.value * phase, ..Default::default() };
        for b in 0..3 {
            l.d[b] = j.d[b] * phase;
        }
        l.d[3] = l.value * k;
        l
    };
    let stencil = src.stencil_kind();
    let spec = src.spec().clone();
    let mut packed = LatticeField::zeros(&spec, FieldKind::Complex(8));
    packed.margin = src.margin();
    let mut dt_analytic = vec![None; spec.len()];
    for idx in 0..spec.len() {
        if !src.is_interior(idx) {
            packed.at_mut(idx).fill(f64::NAN);
            continue;
        }
        let j = src.jet(idx);
        let a = params.potential.jet(&src.position(idx)).a;
        let l = lift(&j);
        let t = star_torsion_point(&l, Some((&a, m)))?.re;
        let d = star_d3_point(&l)?.map(|v| v.re);
        let dst = packed.at_mut(idx);
        write_spinor(&mut dst[0..4], &(j.value * t));
        for al in 0..3 {
            write_spinor(&mut dst[4 + 4 * al..8 + 4 * al], &(j.value * d[al]));
        }
        if let Some(j2) = src.jet2(idx) {
            let pot = params.potential.jet(&src.position(idx));
            let lifted2 = j2.times_exp(k * x3, &[ZERO_C, ZERO_C, ZERO_C, k], &[[ZERO_C; MAX_DIMS]; MAX_DIMS]);
            dt_analytic[idx] = Some(star_grad_4d(&lifted2, &pot, m)?);
        }
    }
    let dp3 = match stencil {
        Some(s) => Some(gradient(&packed, 3, s)?),
        None => None,
    };
    let margin = match &dp3 {
        Some(d) => LatticeField::joint_margin(&d.iter().collect::<Vec<_>>()),
        None => src.margin(),
    };
    let chunk = |f: &LatticeField, idx: usize, k: usize| {
        let v = &f.at(idx)[4 * k..4 * k + 4];
        Spinor::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))
    };
    for_each_point(src, margin, |idx, j| {
        let a = params.potential.jet(&src.position(idx)).a;
        let l = lift(j);
        let t = star_torsion_point(&l, Some((&a, m)))?.re;
        let sd = star_d3_point(&l)?.map(|v| v.re);
        let dp_eta: [Spinor; 3] = match (&dp3, &dt_analytic[idx]) {
            (Some(d), _) => [0, 1, 2].map(|b| chunk(&d[b], idx, 0)),
            (None, Some(g)) => [0, 1, 2].map(|b| j.value * g.d_star_t[b] + j.d[b] * t),
            (None, None) => unreachable!("closed-form sources carry second-order jets"),
        };
        let terms = FourDTerms {
            t,
            star_d3: sd,
            dp: [dp_eta[0] * phase, dp_eta[1] * phase, dp_eta[2] * phase, l.value * (k * t)],
            d3q: [0, 1, 2].map(|al| l.value * (k * sd[al])),
        };
        Ok(four_d_core(&l, &a, m, &terms)? * phase.conj())
    })
}

const ZERO_C: C64 = C64::new(0.0, 0.0);

/// Which discrete action to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `L_r` of the separated field.
    Reduced,
    /// `L_rs`.
    Dirac,
    /// The 4D density of `ξ`.
    FourD,
}

struct PointDensity<'a> {
    kind: DensityKind,
    params: &'a ModelParams,
    stencil: Stencil,
}

impl LocalDensity for PointDensity<'_> {
    fn density(&self, field: &LatticeField, q: usize) -> Result<Option<f64>> {
        let Some(j) = local_jet(field, q, self.stencil) else { return Ok(None) };
        let p = self.params;
        let a = p.potential.jet(&field.spec.position(q)).a;
        Ok(Some(match self.kind {
            DensityKind::Reduced => lagrangian_reduced_point(&j, &a, p.m, p.r)?.spelled,
            DensityKind::Dirac => dirac_lagrangian_point(&j, &a, p.m, p.r, p.s).0,
            DensityKind::FourD => lagrangian_4d_point(&j, &a, p.m)?.spelled,
        }))
    }

    fn reach(&self) -> usize {
        self.stencil.radius()
    }
}

/// Gradient of the discrete action `Σ L ∏h` (per unit cell volume) with
/// respect to `Re` and `Im` of each spinor component at the probes.
pub fn discrete_variational_derivative(
    kind: DensityKind,
    field: &LatticeField,
    params: &ModelParams,
    probes: &ProbeSet,
    stencil: Stencil,
) -> Result<LatticeField> {
    action_gradient(field, &PointDensity { kind, params, stencil }, probes)
}

/// Outcome of comparing the field equation with the two Dirac equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    SolvesDPlus,
    SolvesDMinus,
    /// The field equation residual is bounded away from zero and neither
    /// Dirac equation holds.
    SolvesNeither,
    /// Field equation and Dirac equations disagree about being solved.
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Outcome {
    pub verdict: Verdict,
    /// Largest scaled field-equation residual over the checked points.
    pub field_equation: f64,
    pub dirac_plus: f64,
    pub dirac_minus: f64,
    pub points: usize,
}

/// Characteristic inverse length of the field and potential at a point.
fn rate(j: &SpinorJet, a: &[f64; 3], m: f64) -> f64 {
    let dmax = (0..3).map(|b| j.d[b].norm()).fold(0.0, f64::max);
    m + a.iter().map(|v| v * v).sum::<f64>().sqrt() + dmax / j.value.norm()
}

/// Evaluates the separated field equation (sign `r`) and `D_{r±}η`, scales
/// each by the natural size of its terms, and classifies the field. Note
/// that the field equation is second order and the Dirac operator first
/// order, so they are scaled by `|η| k²` and `|η| k` respectively with `k`
/// the local [`rate`].
pub fn theorem1_check(src: &JetSource, params: &ModelParams, r: Sign, tol: f64) -> Result<Theorem1Outcome> {
    let fe = field_equation_residual_reduced(src, params, r)?;
    let dp = dirac_apply_signed(src, params, r, Sign::Plus)?;
    let dm = dirac_apply_signed(src, params, r, Sign::Minus)?;
    let mut out = Theorem1Outcome { verdict: Verdict::SolvesNeither, field_equation: 0.0, dirac_plus: 0.0, dirac_minus: 0.0, points: 0 };
    for idx in fe.interior_points() {
        let j = src.jet(idx);
        positive_density(&j.value)?;
        let a = params.potential.jet(&src.position(idx)).a;
        let k = rate(&j, &a, params.m).max(1.0);
        let size = j.value.norm();
        out.field_equation = out.field_equation.max(fe.spinor_at(idx).norm() / (size * k * k));
        out.dirac_plus = out.dirac_plus.max(dp.spinor_at(idx).norm() / (size * k));
        out.dirac_minus = out.dirac_minus.max(dm.spinor_at(idx).norm() / (size * k));
        out.points += 1;
    }
    out.verdict = match (out.field_equation <= tol, out.dirac_plus <= tol, out.dirac_minus <= tol) {
        (true, true, false) => Verdict::SolvesDPlus,
        (true, false, true) => Verdict::SolvesDMinus,
        (false, false, false) => Verdict::SolvesNeither,
        _ => Verdict::Inconsistent,
    };
    Ok(out)
}

/// Largest pointwise `|ψ|` of a spinor field over its interior.
pub fn max_spinor_norm(f: &LatticeField) -> f64 {
    f.interior_points().map(|i| f.spinor_at(i).norm()).fold(0.0, f64::max)
}
