//! Formally self-adjoint first-order operators `A = iB^α∂_α + (i/2)∂_αB^α + C`,
//! their scaling-covariant Lagrangians `Re(u*Au)`, the combined Lagrangian
//! `L₊L₋/(L₊ − L₋)` and the check that its critical points are exactly the
//! solutions of `A₊u = 0` or `A₋u = 0`.
//!
//! Vector functions `Ω → ℂ^m` live on lattices as `FieldKind::Complex(m)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangians::DEGENERATE;
use crate::lattice::{FieldKind, LatticeField, LatticeSpec, Stencil, MAX_DIMS};
use crate::sources::{ComplexTrig, TrigPoly};
use crate::spinor::{C64, I};
use crate::variational::{action_gradient, LocalDensity, ProbeSet};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// `Σ_k H_k f_k(x)` with constant Hermitian `H_k` and real trigonometric
/// `f_k`, so the field is Hermitian everywhere and has exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub dim: usize,
    pub terms: Vec<(CMat, TrigPoly)>,
}

impl MatrixField {
    pub fn constant(m: CMat) -> Self {
        Self { dim: m.nrows(), terms: vec![(m, TrigPoly { constant: 1.0, terms: vec![] })] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(CMat::identity(dim, dim))
    }

    pub fn scalar(dim: usize, k: f64) -> Self {
        Self::constant(CMat::identity(dim, dim) * C64::new(k, 0.0))
    }

    pub fn value(&self, x: &[f64; MAX_DIMS]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (h, f) in &self.terms {
            out += h * C64::new(f.eval(x), 0.0);
        }
        out
    }

    pub fn derivative(&self, x: &[f64; MAX_DIMS], axis: usize) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (h, f) in &self.terms {
            out += h * C64::new(f.jet2(x).d[axis], 0.0);
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(h, _)| h.nrows() == self.dim && (h - h.adjoint()).iter().all(|z| z.norm() <= tol))
    }

    /// `base · I` plus `terms` random Hermitian matrices with entries of size
    /// at most `amp`, each multiplied by a smooth random function bounded by 1.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, base: f64, amp: f64, terms: usize, base_k: &[f64; MAX_DIMS]) -> Self {
        let mut out = Self::scalar(dim, base);
        for _ in 0..terms {
            let f = TrigPoly::random(rng, base_k, 2, 3, 1.0);
            out.terms.push((random_hermitian(rng, dim, amp), f));
        }
        out
    }
}

fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, amp: f64) -> CMat {
    let mut h = CMat::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = C64::new(rng.gen_range(-amp..amp), 0.0);
        for j in i + 1..dim {
            let z = C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)) * std::f64::consts::FRAC_1_SQRT_2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// `A = iB^α∂_α + (i/2)(∂_αB^α) + C` on `ℂ^mdim`-valued functions of `n`
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderOperator {
    pub n: usize,
    pub mdim: usize,
    pub b: Vec<MatrixField>,
    pub c: MatrixField,
}

impl FirstOrderOperator {
    pub fn new(b: Vec<MatrixField>, c: MatrixField) -> Result<Self> {
        let mdim = c.dim;
        if b.is_empty() || b.len() > MAX_DIMS || b.iter().any(|m| m.dim != mdim) {
            return Err(Error::DimensionMismatch(format!("{} derivative coefficients of size {mdim}", b.len())));
        }
        if !c.is_hermitian(1e-14) || !b.iter().all(|m| m.is_hermitian(1e-14)) {
            return Err(Error::InvalidParams("operator coefficients must be Hermitian".into()));
        }
        Ok(Self { n: b.len(), mdim, b, c })
    }

    /// The scalar example `iu′ ± u` on the line.
    pub fn example(sign: f64) -> Self {
        Self::new(vec![MatrixField::identity(1)], MatrixField::scalar(1, sign)).expect("valid example")
    }

    /// A pair `A_± = A ± D` sharing `B` with `D` positive definite, so that
    /// `L₊ − L₋ = 2u*Du > 0` wherever `u ≠ 0`.
    pub fn random_pair<R: Rng>(rng: &mut R, n: usize, mdim: usize, base_k: &[f64; MAX_DIMS]) -> (Self, Self) {
        let b: Vec<MatrixField> = (0..n).map(|_| MatrixField::random(rng, mdim, 2.0, 0.3, 2, base_k)).collect();
        let c = MatrixField::random(rng, mdim, 0.0, 0.8, 2, base_k);
        let d = random_hermitian(rng, mdim, 0.2) + CMat::identity(mdim, mdim);
        let shift = |k: f64| {
            let mut m = c.clone();
            m.terms.push((d.clone() * C64::new(k, 0.0), TrigPoly { constant: 1.0, terms: vec![] }));
            m
        };
        (Self::new(b.clone(), shift(1.0)).expect("Hermitian by construction"), Self::new(b, shift(-1.0)).expect("Hermitian by construction"))
    }

    /// `A u` from the value and first derivatives of `u` at `x`.
    pub fn apply_jet(&self, x: &[f64; MAX_DIMS], u: &CVec, du: &[CVec]) -> CVec {
        let mut out = self.c.value(x) * u;
        for (alpha, b) in self.b.iter().enumerate() {
            out += b.value(x) * &du[alpha] * I;
            out += b.derivative(x, alpha) * u * (0.5 * I);
        }
        out
    }

    /// `Re(u*Au)` and the expanded form `(i/2)[u*B^α∂_αu − (∂_αu*)B^αu] + u*Cu`.
    pub fn lagrangian_jet(&self, x: &[f64; MAX_DIMS], u: &CVec, du: &[CVec]) -> LagrangianForms {
        let au = self.apply_jet(x, u, du);
        let pairing = u.dotc(&au).re;
        let mut expanded = u.dotc(&(self.c.value(x) * u));
        let mut magnitude = expanded.norm();
        for (alpha, b) in self.b.iter().enumerate() {
            let bm = b.value(x);
            let t = u.dotc(&(&bm * &du[alpha])) - du[alpha].dotc(&(&bm * u));
            expanded += 0.5 * I * t;
            magnitude += t.norm();
        }
        LagrangianForms { pairing, expanded: expanded.re, magnitude }
    }
}

/// The two printed forms of a first-order Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianForms {
    pub pairing: f64,
    pub expanded: f64,
    pub magnitude: f64,
}

impl LagrangianForms {
    pub fn checked(self) -> Result<f64> {
        let d = (self.pairing - self.expanded).abs();
        if d > crate::lagrangians::FORM_TOL * self.magnitude.max(1.0) {
            return Err(Error::FormMismatch { what: "first-order density", discrepancy: d });
        }
        Ok(self.pairing)
    }
}

/// `L₊L₋/(L₊ − L₋)`; `scale` sets what counts as a vanishing denominator.
pub fn combine(lp: f64, lm: f64, scale: f64) -> Result<f64> {
    let denom = lp - lm;
    if !(denom.abs() > DEGENERATE * scale) {
        return Err(Error::DegenerateDenominator { denominator: denom });
    }
    Ok(lp * lm / denom)
}

/// Folds [`combine`] over several scaling-covariant densities,
/// `((L₁ ∘ L₂) ∘ L₃) ∘ …`.
pub fn hierarchy(ls: &[f64], scale: f64) -> Result<f64> {
    let (first, rest) = ls.split_first().ok_or_else(|| Error::InvalidParams("empty hierarchy".into()))?;
    rest.iter().try_fold(*first, |acc, &l| combine(acc, l, scale))
}

/// Value and first derivatives of a vector function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorJet {
    pub value: CVec,
    pub d: Vec<CVec>,
}

/// A closed-form vector function.
pub trait VectorField {
    fn jet(&self, x: &[f64; MAX_DIMS]) -> VectorJet;
}

/// `offset + (trigonometric polynomial per component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigVector {
    pub n: usize,
    pub offset: CVec,
    pub comps: Vec<ComplexTrig>,
}

impl TrigVector {
    pub fn random<R: Rng>(rng: &mut R, n: usize, mdim: usize, base_k: &[f64; MAX_DIMS], amp: f64) -> Self {
        let offset = CVec::from_fn(mdim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let comps = (0..mdim).map(|_| ComplexTrig::random(rng, base_k, 2, 3, amp)).collect();
        Self { n, offset, comps }
    }
}

impl VectorField for TrigVector {
    fn jet(&self, x: &[f64; MAX_DIMS]) -> VectorJet {
        let m = self.comps.len();
        let mut value = self.offset.clone();
        let mut d = vec![CVec::zeros(m); self.n];
        for (k, c) in self.comps.iter().enumerate() {
            let (v, dv, _) = c.jet2(x);
            value[k] += v;
            for (a, da) in d.iter_mut().enumerate() {
                da[k] = dv[a];
            }
        }
        VectorJet { value, d }
    }
}

/// `amp · e^{i k·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpVector {
    pub amp: CVec,
    pub k: Vec<f64>,
}

impl VectorField for ExpVector {
    fn jet(&self, x: &[f64; MAX_DIMS]) -> VectorJet {
        let phase: f64 = self.k.iter().zip(x).map(|(k, x)| k * x).sum();
        let value = &self.amp * C64::from_polar(1.0, phase);
        let d = self.k.iter().map(|&k| &value * C64::new(0.0, k)).collect();
        VectorJet { value, d }
    }
}

/// `e^h u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpScaled<V> {
    pub inner: V,
    pub h: TrigPoly,
}

impl<V: VectorField> VectorField for ExpScaled<V> {
    fn jet(&self, x: &[f64; MAX_DIMS]) -> VectorJet {
        let j = self.inner.jet(x);
        let h = self.h.jet2(x);
        let f = C64::new(h.value.exp(), 0.0);
        let d = j.d.iter().enumerate().map(|(a, da)| (da + &j.value * C64::new(h.d[a], 0.0)) * f).collect();
        VectorJet { value: j.value * f, d }
    }
}

/// Samples a vector function as a `Complex(m)` field.
pub fn sample_vector(spec: &LatticeSpec, field: &dyn VectorField, mdim: usize) -> LatticeField {
    LatticeField::from_fn(spec, FieldKind::Complex(mdim), |_, x, dst| {
        let v = field.jet(x).value;
        for k in 0..mdim {
            dst[2 * k] = v[k].re;
            dst[2 * k + 1] = v[k].im;
        }
    })
}

fn mdim_of(u: &LatticeField) -> Result<usize> {
    match u.kind {
        FieldKind::Complex(m) => Ok(m),
        other => Err(Error::DimensionMismatch(format!("expected a complex vector field, got {other:?}"))),
    }
}

fn vec_from(v: &[f64]) -> CVec {
    CVec::from_fn(v.len() / 2, |k, _| C64::new(v[2 * k], v[2 * k + 1]))
}

fn write_vec(dst: &mut [f64], v: &CVec) {
    for (k, z) in v.iter().enumerate() {
        dst[2 * k] = z.re;
        dst[2 * k + 1] = z.im;
    }
}

/// Value and stencil derivatives of `u` at `idx`, or `None` at an open edge.
fn stencil_jet(u: &LatticeField, idx: usize, stencil: Stencil) -> Option<VectorJet> {
    let nc = u.ncomp();
    let mut buf = vec![0.0; nc];
    let mut d = Vec::with_capacity(u.spec.dims());
    for axis in 0..u.spec.dims() {
        if !u.derivative_at(idx, axis, stencil, &mut buf) {
            return None;
        }
        d.push(vec_from(&buf));
    }
    Some(VectorJet { value: vec_from(u.at(idx)), d })
}

fn check_operator(op: &FirstOrderOperator, u: &LatticeField) -> Result<()> {
    if mdim_of(u)? != op.mdim || u.spec.dims() != op.n {
        return Err(Error::DimensionMismatch(format!(
            "operator on C^{} over {} variables, field {:?} over {} axes",
            op.mdim,
            op.n,
            u.kind,
            u.spec.dims()
        )));
    }
    Ok(())
}

fn edge_margin(spec: &LatticeSpec, width: usize) -> Vec<usize> {
    spec.periodic.iter().map(|&p| if p { 0 } else { width }).collect()
}

fn pointwise_jets<F>(u: &LatticeField, stencil: Stencil, kind: FieldKind, mut f: F) -> Result<LatticeField>
where
    F: FnMut(usize, &[f64; MAX_DIMS], &VectorJet, &mut [f64]) -> Result<()>,
{
    let mut out = LatticeField::zeros(&u.spec, kind);
    out.margin = edge_margin(&u.spec, stencil.radius());
    for idx in 0..u.spec.len() {
        let x = u.spec.position(idx);
        let jet = stencil_jet(u, idx, stencil);
        let dst = out.at_mut(idx);
        match jet {
            Some(j) => f(idx, &x, &j, dst)?,
            None => dst.fill(f64::NAN),
        }
    }
    Ok(out)
}

/// `Au` as printed, with stencil derivatives of `u` and exact `∂_αB^α`.
pub fn op_apply(op: &FirstOrderOperator, u: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    check_operator(op, u)?;
    pointwise_jets(u, stencil, u.kind, |_, x, j, dst| {
        write_vec(dst, &op.apply_jet(x, &j.value, &j.d));
        Ok(())
    })
}

/// `(i/2)(B^α∂_αu + ∂_α(B^αu)) + Cu`: equal to [`op_apply`] in the
/// continuum and exactly symmetric on a periodic lattice.
pub fn op_apply_symmetric(op: &FirstOrderOperator, u: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    check_operator(op, u)?;
    let bu: Vec<LatticeField> =
        op.b.iter()
            .map(|b| {
                let mut f = LatticeField::from_fn(&u.spec, u.kind, |idx, x, dst| write_vec(dst, &(b.value(x) * vec_from(u.at(idx)))));
                f.twisted = u.twisted.clone();
                f
            })
            .collect();
    let nc = u.ncomp();
    let mut buf = vec![0.0; nc];
    pointwise_jets(u, stencil, u.kind, |idx, x, j, dst| {
        let mut out = op.c.value(x) * &j.value;
        for (alpha, b) in op.b.iter().enumerate() {
            bu[alpha].derivative_at(idx, alpha, stencil, &mut buf);
            out += (b.value(x) * &j.d[alpha] + vec_from(&buf)) * (0.5 * I);
        }
        write_vec(dst, &out);
        Ok(())
    })
}

/// `L(u) = Re(u*Au)`, cross-checked against the expanded form.
pub fn first_order_lagrangian(op: &FirstOrderOperator, u: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    check_operator(op, u)?;
    pointwise_jets(u, stencil, FieldKind::Scalar, |_, x, j, dst| {
        dst[0] = op.lagrangian_jet(x, &j.value, &j.d).checked()?;
        Ok(())
    })
}

fn combined_at(op_p: &FirstOrderOperator, op_m: &FirstOrderOperator, x: &[f64; MAX_DIMS], j: &VectorJet) -> Result<f64> {
    let lp = op_p.lagrangian_jet(x, &j.value, &j.d).checked()?;
    let lm = op_m.lagrangian_jet(x, &j.value, &j.d).checked()?;
    combine(lp, lm, j.value.norm_squared())
}

/// `L₊L₋/(L₊ − L₋)` on a lattice.
pub fn combined_lagrangian(op_p: &FirstOrderOperator, op_m: &FirstOrderOperator, u: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    check_operator(op_p, u)?;
    check_operator(op_m, u)?;
    pointwise_jets(u, stencil, FieldKind::Scalar, |_, x, j, dst| {
        dst[0] = combined_at(op_p, op_m, x, j)?;
        Ok(())
    })
}

/// `L₊`, `L₋` and the combined density of a closed-form `u` at `x`.
pub fn lagrangians_at(op_p: &FirstOrderOperator, op_m: &FirstOrderOperator, u: &dyn VectorField, x: &[f64; MAX_DIMS]) -> Result<[f64; 3]> {
    let j = u.jet(x);
    let lp = op_p.lagrangian_jet(x, &j.value, &j.d).checked()?;
    let lm = op_m.lagrangian_jet(x, &j.value, &j.d).checked()?;
    Ok([lp, lm, combine(lp, lm, j.value.norm_squared())?])
}

/// The example field equation at a point from `u, u′, u″`:
/// `(w u)′ + ((ūu′)² − (uū′)²)/(4|u|⁴) u + u` with `w = (ūu′ − uū′)/(2|u|²)`.
pub fn example_ode_residual_point(u: C64, du: C64, ddu: C64) -> C64 {
    let n = u.conj() * du - u * du.conj();
    let dn = u.conj() * ddu - u * ddu.conj();
    let den = 2.0 * u.norm_sqr();
    let dden = 4.0 * (u.conj() * du).re;
    let w = n / den;
    let dw = (dn * den - n * dden) / (den * den);
    let quartic = ((u.conj() * du).powi(2) - (u * du.conj()).powi(2)) / (4.0 * u.norm_sqr().powi(2));
    dw * u + w * du + quartic * u + u
}

/// The example field equation on a 1D lattice; `(wu)′` is a stencil
/// derivative of the product.
pub fn example_ode_residual(u: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    if mdim_of(u)? != 1 || u.spec.dims() != 1 {
        return Err(Error::DimensionMismatch("the example acts on scalar functions of one variable".into()));
    }
    for idx in 0..u.spec.len() {
        if u.complex_at(idx, 0).norm() == 0.0 {
            return Err(Error::VanishingU { index: idx });
        }
    }
    let du = pointwise_jets(u, stencil, u.kind, |_, _, j, dst| {
        write_vec(dst, &j.d[0]);
        Ok(())
    })?;
    let mut wu = LatticeField::zeros(&u.spec, u.kind);
    wu.margin = du.margin.clone();
    for idx in 0..u.spec.len() {
        let (v, d) = (u.complex_at(idx, 0), du.complex_at(idx, 0));
        let w = (v.conj() * d - v * d.conj()) / (2.0 * v.norm_sqr());
        let p = w * v;
        wu.at_mut(idx).copy_from_slice(&[p.re, p.im]);
    }
    let mut out = LatticeField::zeros(&u.spec, u.kind);
    out.margin = edge_margin(&u.spec, 2 * stencil.radius());
    let mut buf = [0.0; 2];
    for idx in 0..u.spec.len() {
        if !out.is_interior(idx) {
            out.at_mut(idx).fill(f64::NAN);
            continue;
        }
        wu.derivative_at(idx, 0, stencil, &mut buf);
        let (v, d) = (u.complex_at(idx, 0), du.complex_at(idx, 0));
        let quartic = ((v.conj() * d).powi(2) - (v * d.conj()).powi(2)) / (4.0 * v.norm_sqr().powi(2));
        let r = C64::new(buf[0], buf[1]) + quartic * v + v;
        out.at_mut(idx).copy_from_slice(&[r.re, r.im]);
    }
    Ok(out)
}

/// Integrates `A u = 0` on a 1D lattice from `u0` at the first point with
/// classical RK4, `substeps` steps per lattice spacing:
/// `u′ = B⁻¹(iC − B′/2) u`.
pub fn solve_first_order_1d(op: &FirstOrderOperator, u0: &CVec, spec: &LatticeSpec, substeps: usize) -> Result<LatticeField> {
    if op.n != 1 || spec.dims() != 1 || u0.len() != op.mdim {
        return Err(Error::DimensionMismatch("1D integration needs a one-variable operator and lattice".into()));
    }
    let rhs = |x: f64, u: &CVec| -> Result<CVec> {
        let p = [x, 0.0, 0.0, 0.0];
        let b = op.b[0].value(&p);
        let inv = b.try_inverse().ok_or_else(|| Error::InvalidParams(format!("B is singular at x = {x}")))?;
        Ok(inv * (op.c.value(&p) * I - op.b[0].derivative(&p, 0) * C64::new(0.5, 0.0)) * u)
    };
    let mut out = LatticeField::zeros(spec, FieldKind::Complex(op.mdim));
    let mut u = u0.clone();
    let mut x = spec.position(0)[0];
    let dt = spec.h[0] / substeps as f64;
    write_vec(out.at_mut(0), &u);
    for idx in 1..spec.len() {
        for _ in 0..substeps {
            let k1 = rhs(x, &u)?;
            let k2 = rhs(x + dt / 2.0, &(&u + &k1 * C64::new(dt / 2.0, 0.0)))?;
            let k3 = rhs(x + dt / 2.0, &(&u + &k2 * C64::new(dt / 2.0, 0.0)))?;
            let k4 = rhs(x + dt, &(&u + &k3 * C64::new(dt, 0.0)))?;
            u += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
            x += dt;
        }
        write_vec(out.at_mut(idx), &u);
    }
    Ok(out)
}

struct CombinedDensity<'a> {
    op_p: &'a FirstOrderOperator,
    op_m: &'a FirstOrderOperator,
    stencil: Stencil,
}

impl LocalDensity for CombinedDensity<'_> {
    fn density(&self, field: &LatticeField, q: usize) -> Result<Option<f64>> {
        let Some(j) = stencil_jet(field, q, self.stencil) else { return Ok(None) };
        combined_at(self.op_p, self.op_m, &field.spec.position(q), &j).map(Some)
    }

    fn reach(&self) -> usize {
        self.stencil.radius()
    }
}

/// FD gradient of `Σ L ∏h` for the combined density.
pub fn combined_action_gradient(
    op_p: &FirstOrderOperator,
    op_m: &FirstOrderOperator,
    u: &LatticeField,
    probes: &ProbeSet,
    stencil: Stencil,
) -> Result<LatticeField> {
    check_operator(op_p, u)?;
    check_operator(op_m, u)?;
    action_gradient(u, &CombinedDensity { op_p, op_m, stencil }, probes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaVerdict {
    SolvesAPlus,
    SolvesAMinus,
    SolvesNeither,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaOutcome {
    pub verdict: LemmaVerdict,
    /// Largest scaled combined-action gradient.
    pub gradient: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub points: usize,
}

/// Compares the combined-action gradient with `A₊u` and `A₋u` (symmetric
/// discretisation, the exact lattice Euler–Lagrange operators of `L_±`) at
/// every point where the gradient is defined. Each is divided by
/// `|u| (Σ_α ‖B^α‖ k + ‖C‖)` with `k = max(1, |∂u|/|u|)`.
pub fn lemma_check(op_p: &FirstOrderOperator, op_m: &FirstOrderOperator, u: &LatticeField, stencil: Stencil, tol: f64) -> Result<LemmaOutcome> {
    let grad = combined_action_gradient(op_p, op_m, u, &ProbeSet::Interior, stencil)?;
    let ap = op_apply_symmetric(op_p, u, stencil)?;
    let am = op_apply_symmetric(op_m, u, stencil)?;
    let mut out = LemmaOutcome { verdict: LemmaVerdict::SolvesNeither, gradient: 0.0, a_plus: 0.0, a_minus: 0.0, points: 0 };
    for idx in 0..u.spec.len() {
        let g = grad.at(idx);
        if g[0].is_nan() {
            continue;
        }
        let j = stencil_jet(u, idx, stencil).expect("gradient defined implies interior");
        let x = u.spec.position(idx);
        let size = j.value.norm();
        let k = (j.d.iter().map(|d| d.norm()).fold(0.0, f64::max) / size).max(1.0);
        let norm = |m: &MatrixField| m.value(&x).norm();
        let op_size = |op: &FirstOrderOperator| op.b.iter().map(norm).sum::<f64>() * k + norm(&op.c);
        let scale = size * op_size(op_p).max(op_size(op_m));
        out.gradient = out.gradient.max(g.iter().map(|v| v * v).sum::<f64>().sqrt() / scale);
        out.a_plus = out.a_plus.max(vec_from(ap.at(idx)).norm() / scale);
        out.a_minus = out.a_minus.max(vec_from(am.at(idx)).norm() / scale);
        out.points += 1;
    }
    out.verdict = match (out.gradient <= tol, out.a_plus <= tol, out.a_minus <= tol) {
        (true, true, false) => LemmaVerdict::SolvesAPlus,
        (true, false, true) => LemmaVerdict::SolvesAMinus,
        (false, false, false) => LemmaVerdict::SolvesNeither,
        _ => LemmaVerdict::Inconsistent,
    };
    Ok(out)
}
