//! Closed-form fields with exact derivatives ("analytic mode"), seeded
//! band-limited generators, and the bridge from lattice samples to jets
//! ("stencil mode").
//!
//! Random fields are trigonometric polynomials drawn from a ChaCha8 stream
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`); the order of draws is
//! fixed by the constructors below so a seed always reproduces a field.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lattice::{gradient, FieldKind, LatticeField, LatticeSpec, Stencil, MAX_DIMS};
use crate::params::Sign;
use crate::spinor::{Spinor, C64, ZERO};

/// The seeded generator used everywhere.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random spinor with `|ξ¹| ∈ [0.2, 5]` (log-uniform), `|ξ²| ≤ 0.9 |ξ¹|`
/// and uniform phases, so `ξ̄σ₃ξ > 0.19 |ξ¹|²`.
pub fn random_positive_spinor<R: Rng>(rng: &mut R) -> Spinor {
    let r1 = rng.gen_range(0.2f64.ln()..5.0f64.ln()).exp();
    let r2 = r1 * rng.gen_range(0.0..0.9);
    let p1 = rng.gen_range(0.0..TAU);
    let p2 = rng.gen_range(0.0..TAU);
    Spinor::new(C64::from_polar(r1, p1), C64::from_polar(r2, p2))
}

/// Value and first partial derivatives of a spinor field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorJet {
    pub value: Spinor,
    /// `d[α] = ∂_α`; axes beyond the field's dimension are zero.
    pub d: [Spinor; MAX_DIMS],
}

/// Value, first and second partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorJet2 {
    pub value: Spinor,
    pub d: [Spinor; MAX_DIMS],
    /// `dd[α][β] = ∂_α ∂_β`.
    pub dd: [[Spinor; MAX_DIMS]; MAX_DIMS],
}

impl SpinorJet2 {
    pub fn first(&self) -> SpinorJet {
        SpinorJet { value: self.value, d: self.d }
    }

    pub fn constant(value: Spinor) -> Self {
        Self { value, ..Default::default() }
    }

    /// Multiplies the field by `exp(g)` for a complex function `g` given by
    /// its value, gradient and Hessian.
    pub fn times_exp(&self, g: C64, dg: &[C64; MAX_DIMS], ddg: &[[C64; MAX_DIMS]; MAX_DIMS]) -> Self {
        let f = g.exp();
        let v = self.value;
        let mut out = SpinorJet2 { value: v * f, ..Default::default() };
        for a in 0..MAX_DIMS {
            out.d[a] = (v * dg[a] + self.d[a]) * f;
            for b in 0..MAX_DIMS {
                let t = v * (ddg[a][b] + dg[a] * dg[b]) + self.d[b] * dg[a] + self.d[a] * dg[b] + self.dd[a][b];
                out.dd[a][b] = t * f;
            }
        }
        out
    }

    pub fn add_scaled(&self, other: &SpinorJet2, k: C64) -> Self {
        let mut out = *self;
        out.value = out.value + other.value * k;
        for a in 0..MAX_DIMS {
            out.d[a] = out.d[a] + other.d[a] * k;
            for b in 0..MAX_DIMS {
                out.dd[a][b] = out.dd[a][b] + other.dd[a][b] * k;
            }
        }
        out
    }
}

/// A spinor field known in closed form.
pub trait SpinorField {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2;

    fn jet(&self, x: &[f64; MAX_DIMS]) -> SpinorJet {
        self.jet2(x).first()
    }

    fn value(&self, x: &[f64; MAX_DIMS]) -> Spinor {
        self.jet2(x).value
    }

    /// Whether the field changes sign under `x³ ↦ x³ + π/m`.
    fn antiperiodic_x3(&self) -> bool {
        false
    }
}

impl<T: SpinorField + ?Sized> SpinorField for &T {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        (**self).jet2(x)
    }
    fn antiperiodic_x3(&self) -> bool {
        (**self).antiperiodic_x3()
    }
}

impl<T: SpinorField + ?Sized> SpinorField for Box<T> {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        (**self).jet2(x)
    }
    fn antiperiodic_x3(&self) -> bool {
        (**self).antiperiodic_x3()
    }
}

/// Real trigonometric polynomial `c + Σ a_t cos(k_t·x + φ_t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub k: [f64; MAX_DIMS],
    pub amp: f64,
    pub phase: f64,
}

/// Value, gradient and Hessian of a real function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealJet2 {
    pub value: f64,
    pub d: [f64; MAX_DIMS],
    pub dd: [[f64; MAX_DIMS]; MAX_DIMS],
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    /// Draws `terms` modes with integer mode numbers in `[-max_mode, max_mode]`
    /// on each axis with nonzero `base_k`, rescaled so that the sup norm of
    /// the oscillating part is at most `sup_bound`.
    pub fn random<R: Rng>(rng: &mut R, base_k: &[f64; MAX_DIMS], max_mode: i32, terms: usize, sup_bound: f64) -> Self {
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut k = [0.0; MAX_DIMS];
            loop {
                let mut any = false;
                for a in 0..MAX_DIMS {
                    let n = rng.gen_range(-max_mode..=max_mode);
                    k[a] = if base_k[a] == 0.0 { 0.0 } else { n as f64 * base_k[a] };
                    any |= k[a] != 0.0;
                }
                if any || base_k.iter().all(|&b| b == 0.0) {
                    break;
                }
            }
            let amp = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..TAU);
            out.push(TrigTerm { k, amp, phase });
        }
        let total: f64 = out.iter().map(|t| t.amp.abs()).sum();
        if total > 0.0 {
            let scale = sup_bound / total;
            for t in out.iter_mut() {
                t.amp *= scale;
            }
        }
        Self { constant: 0.0, terms: out }
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|t| t.amp.abs()).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64; MAX_DIMS]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.amp * (dot4(&t.k, x) + t.phase).cos()).sum::<f64>()
    }

    pub fn jet2(&self, x: &[f64; MAX_DIMS]) -> RealJet2 {
        let mut j = RealJet2 { value: self.constant, ..Default::default() };
        for t in &self.terms {
            let arg = dot4(&t.k, x) + t.phase;
            let (s, c) = arg.sin_cos();
            j.value += t.amp * c;
            for a in 0..MAX_DIMS {
                j.d[a] -= t.amp * t.k[a] * s;
                for b in 0..MAX_DIMS {
                    j.dd[a][b] -= t.amp * t.k[a] * t.k[b] * c;
                }
            }
        }
        j
    }
}

fn dot4(a: &[f64; MAX_DIMS], b: &[f64; MAX_DIMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Complex trigonometric polynomial `re + i·im`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexTrig {
    pub re: TrigPoly,
    pub im: TrigPoly,
}

impl ComplexTrig {
    pub fn random<R: Rng>(rng: &mut R, base_k: &[f64; MAX_DIMS], max_mode: i32, terms: usize, sup_bound: f64) -> Self {
        let re = TrigPoly::random(rng, base_k, max_mode, terms, sup_bound / 2.0);
        let im = TrigPoly::random(rng, base_k, max_mode, terms, sup_bound / 2.0);
        Self { re, im }
    }

    /// Value, gradient and Hessian as complex numbers.
    pub fn jet2(&self, x: &[f64; MAX_DIMS]) -> (C64, [C64; MAX_DIMS], [[C64; MAX_DIMS]; MAX_DIMS]) {
        let r = self.re.jet2(x);
        let i = self.im.jet2(x);
        let mut d = [ZERO; MAX_DIMS];
        let mut dd = [[ZERO; MAX_DIMS]; MAX_DIMS];
        for a in 0..MAX_DIMS {
            d[a] = C64::new(r.d[a], i.d[a]);
            for b in 0..MAX_DIMS {
                dd[a][b] = C64::new(r.dd[a][b], i.dd[a][b]);
            }
        }
        (C64::new(r.value, i.value), d, dd)
    }
}

/// Knobs for seeded band-limited fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimit {
    pub max_mode: i32,
    pub terms: usize,
    /// Bound on `sup |δa|` and `sup |δb|`.
    pub amplitude: f64,
}

impl Default for BandLimit {
    fn default() -> Self {
        Self { max_mode: 3, terms: 6, amplitude: 0.3 }
    }
}

/// Positive-class spinor `η = (1 + δa, δb)` with band-limited `δa, δb`.
///
/// With `sup |δa|, sup |δb| ≤ 0.3` the density stays above `0.49 − 0.09`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedSpinor {
    pub a: ComplexTrig,
    pub b: ComplexTrig,
}

impl BandLimitedSpinor {
    pub fn random<R: Rng>(rng: &mut R, base_k: &[f64; MAX_DIMS], band: &BandLimit) -> Self {
        let a = ComplexTrig::random(rng, base_k, band.max_mode, band.terms, band.amplitude);
        let b = ComplexTrig::random(rng, base_k, band.max_mode, band.terms, band.amplitude);
        Self { a, b }
    }

    pub fn seeded(seed: u64, base_k: &[f64; MAX_DIMS], band: &BandLimit) -> Self {
        Self::random(&mut rng_from_seed(seed), base_k, band)
    }

    /// Lower bound of the density implied by the amplitude bounds.
    pub fn density_floor(&self) -> f64 {
        let sa = self.a.re.sup_bound() + self.a.im.sup_bound();
        let sb = self.b.re.sup_bound() + self.b.im.sup_bound();
        (1.0 - sa).powi(2) - sb * sb
    }
}

impl SpinorField for BandLimitedSpinor {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        let (av, ad, add) = self.a.jet2(x);
        let (bv, bd, bdd) = self.b.jet2(x);
        let mut j = SpinorJet2 { value: Spinor::new(av + 1.0, bv), ..Default::default() };
        for a in 0..MAX_DIMS {
            j.d[a] = Spinor::new(ad[a], bd[a]);
            for b in 0..MAX_DIMS {
                j.dd[a][b] = Spinor::new(add[a][b], bdd[a][b]);
            }
        }
        j
    }
}

/// Wavenumber bases `2π/L` for a periodic box; zero on axes beyond `axes`.
pub fn base_wavenumbers(spec: &LatticeSpec, axes: usize) -> [f64; MAX_DIMS] {
    let mut k = [0.0; MAX_DIMS];
    for a in 0..axes.min(spec.dims()) {
        k[a] = TAU / spec.length(a);
    }
    k
}

/// `ζ e^{−i p·x}` over all four coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveSpinor {
    pub zeta: Spinor,
    pub p: [f64; MAX_DIMS],
    pub antiperiodic: bool,
}

impl SpinorField for PlaneWaveSpinor {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        let mut dg = [ZERO; MAX_DIMS];
        for a in 0..MAX_DIMS {
            dg[a] = C64::new(0.0, -self.p[a]);
        }
        SpinorJet2::constant(self.zeta).times_exp(C64::new(0.0, -dot4(&self.p, x)), &dg, &[[ZERO; MAX_DIMS]; MAX_DIMS])
    }

    fn antiperiodic_x3(&self) -> bool {
        self.antiperiodic
    }
}

/// A constant spinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSpinor(pub Spinor);

impl SpinorField for ConstantSpinor {
    fn jet2(&self, _x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        SpinorJet2::constant(self.0)
    }
}

/// Separation ansatz `ξ = η e^{−i r m x³}`, with `r = +` the upper sign.
#[derive(Debug, Clone, PartialEq)]
pub struct KkLift<S> {
    pub eta: S,
    pub r: Sign,
    pub m: f64,
}

impl<S: SpinorField> SpinorField for KkLift<S> {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        let w = self.r.value() * self.m;
        let mut dg = [ZERO; MAX_DIMS];
        dg[3] = C64::new(0.0, -w);
        self.eta.jet2(x).times_exp(C64::new(0.0, -w * x[3]), &dg, &[[ZERO; MAX_DIMS]; MAX_DIMS])
    }

    fn antiperiodic_x3(&self) -> bool {
        !self.eta.antiperiodic_x3()
    }
}

/// `c · e^{h(x)} · inner` for a real trigonometric `h` and complex constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled<S> {
    pub inner: S,
    pub h: TrigPoly,
    pub c: C64,
}

impl<S: SpinorField> SpinorField for Rescaled<S> {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        let h = self.h.jet2(x);
        let g = C64::new(h.value, 0.0) + self.c.ln();
        let dg = h.d.map(|v| C64::new(v, 0.0));
        let ddg = h.dd.map(|row| row.map(|v| C64::new(v, 0.0)));
        self.inner.jet2(x).times_exp(g, &dg, &ddg)
    }

    fn antiperiodic_x3(&self) -> bool {
        self.inner.antiperiodic_x3()
    }
}

/// `base + ε · perturbation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed<S, T> {
    pub base: S,
    pub perturbation: T,
    pub eps: f64,
}

impl<S: SpinorField, T: SpinorField> SpinorField for Perturbed<S, T> {
    fn jet2(&self, x: &[f64; MAX_DIMS]) -> SpinorJet2 {
        self.base.jet2(x).add_scaled(&self.perturbation.jet2(x), C64::new(self.eps, 0.0))
    }

    fn antiperiodic_x3(&self) -> bool {
        self.base.antiperiodic_x3()
    }
}

/// Electromagnetic covector `A_α(x⁰, x¹, x²)`, α = 0..2.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant([f64; 3]),
    BandLimited(Box<[TrigPoly; 3]>),
}

/// `A_α` and `da[β][α] = ∂_β A_α`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialJet {
    pub a: [f64; 3],
    pub da: [[f64; 3]; MAX_DIMS],
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant([0.0; 3])
    }

    /// Weak constant electric field `A = (A₀, 0, 0)`.
    pub fn electric(a0: f64) -> Self {
        Potential::Constant([a0, 0.0, 0.0])
    }

    /// Band-limited potential depending on `x⁰, x¹, x²` only.
    pub fn random<R: Rng>(rng: &mut R, base_k: &[f64; MAX_DIMS], band: &BandLimit) -> Self {
        let mut k = *base_k;
        k[3] = 0.0;
        let comps = [0, 1, 2].map(|_| {
            let mut p = TrigPoly::random(rng, &k, band.max_mode, band.terms, band.amplitude);
            p.constant = rng.gen_range(-band.amplitude..band.amplitude);
            p
        });
        Potential::BandLimited(Box::new(comps))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Constant(a) if a.iter().all(|&v| v == 0.0))
    }

    pub fn jet(&self, x: &[f64; MAX_DIMS]) -> PotentialJet {
        match self {
            Potential::Constant(a) => PotentialJet { a: *a, da: [[0.0; 3]; MAX_DIMS] },
            Potential::BandLimited(p) => {
                let mut out = PotentialJet::default();
                for alpha in 0..3 {
                    let j = p[alpha].jet2(x);
                    out.a[alpha] = j.value;
                    for beta in 0..MAX_DIMS {
                        out.da[beta][alpha] = j.d[beta];
                    }
                }
                out
            }
        }
    }
}

/// Samples a closed-form spinor on a lattice, marking the x³ twist.
pub fn sample_spinor<S: SpinorField + ?Sized>(spec: &LatticeSpec, field: &S) -> LatticeField {
    let mut out = LatticeField::from_fn(spec, FieldKind::Spinor, |_, x, v| {
        let s = field.value(x);
        v.copy_from_slice(&[s.c[0].re, s.c[0].im, s.c[1].re, s.c[1].im]);
    });
    if spec.dims() == 4 && field.antiperiodic_x3() {
        out.twisted[3] = true;
    }
    out
}

/// First-order jets assembled from stencil derivatives of a lattice spinor.
#[derive(Debug, Clone)]
pub struct StencilJets {
    pub field: LatticeField,
    pub derivatives: Vec<LatticeField>,
    pub margin: Vec<usize>,
}

impl StencilJets {
    pub fn new(field: &LatticeField, stencil: Stencil) -> Result<Self> {
        let derivatives = gradient(field, field.spec.dims(), stencil)?;
        let refs: Vec<&LatticeField> = derivatives.iter().collect();
        let margin = LatticeField::joint_margin(&refs);
        Ok(Self { field: field.clone(), derivatives, margin })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.field.spec
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.field.spec.is_interior(idx, &self.margin)
    }

    pub fn jet(&self, idx: usize) -> SpinorJet {
        let mut j = SpinorJet { value: self.field.spinor_at(idx), ..Default::default() };
        for (a, d) in self.derivatives.iter().enumerate() {
            j.d[a] = d.spinor_at(idx);
        }
        j
    }
}

/// First-order jet of a lattice spinor at one point from a local stencil,
/// or `None` when the stencil leaves a non-periodic axis.
pub fn local_jet(field: &LatticeField, idx: usize, stencil: Stencil) -> Option<SpinorJet> {
    let mut j = SpinorJet { value: field.spinor_at(idx), ..Default::default() };
    let mut buf = [0.0; 4];
    for axis in 0..field.spec.dims() {
        if !field.derivative_at(idx, axis, stencil, &mut buf) {
            return None;
        }
        j.d[axis] = Spinor::new(C64::new(buf[0], buf[1]), C64::new(buf[2], buf[3]));
    }
    Some(j)
}

/// Where pointwise jets come from: exact derivatives of a closed-form field
/// or stencil derivatives of lattice samples.
pub enum JetSource<'a> {
    Analytic { spec: LatticeSpec, field: &'a dyn SpinorField },
    Stencil { jets: StencilJets, stencil: Stencil },
}

impl<'a> JetSource<'a> {
    pub fn analytic(spec: &LatticeSpec, field: &'a dyn SpinorField) -> Self {
        JetSource::Analytic { spec: spec.clone(), field }
    }

    pub fn stencil(field: &LatticeField, stencil: Stencil) -> Result<Self> {
        Ok(JetSource::Stencil { jets: StencilJets::new(field, stencil)?, stencil })
    }

    /// Samples `field` on `spec` and differentiates with `stencil`.
    pub fn sampled(spec: &LatticeSpec, field: &dyn SpinorField, stencil: Stencil) -> Result<JetSource<'static>> {
        JetSource::stencil(&sample_spinor(spec, field), stencil).map(JetSource::into_static)
    }

    fn into_static(self) -> JetSource<'static> {
        match self {
            JetSource::Stencil { jets, stencil } => JetSource::Stencil { jets, stencil },
            JetSource::Analytic { .. } => unreachable!("only stencil sources are detached"),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        match self {
            JetSource::Analytic { spec, .. } => spec,
            JetSource::Stencil { jets, .. } => jets.spec(),
        }
    }

    pub fn margin(&self) -> Vec<usize> {
        match self {
            JetSource::Analytic { spec, .. } => vec![0; spec.dims()],
            JetSource::Stencil { jets, .. } => jets.margin.clone(),
        }
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        match self {
            JetSource::Analytic { .. } => true,
            JetSource::Stencil { jets, .. } => jets.is_interior(idx),
        }
    }

    pub fn position(&self, idx: usize) -> [f64; MAX_DIMS] {
        self.spec().position(idx)
    }

    pub fn jet(&self, idx: usize) -> SpinorJet {
        match self {
            JetSource::Analytic { spec, field } => field.jet(&spec.position(idx)),
            JetSource::Stencil { jets, .. } => jets.jet(idx),
        }
    }

    /// Second-order jet; only closed-form sources have one.
    pub fn jet2(&self, idx: usize) -> Option<SpinorJet2> {
        match self {
            JetSource::Analytic { spec, field } => Some(field.jet2(&spec.position(idx))),
            JetSource::Stencil { .. } => None,
        }
    }

    /// The field values as lattice samples.
    pub fn samples(&self) -> LatticeField {
        match self {
            JetSource::Analytic { spec, field } => sample_spinor(spec, *field),
            JetSource::Stencil { jets, .. } => jets.field.clone(),
        }
    }

    pub fn stencil_kind(&self) -> Option<Stencil> {
        match self {
            JetSource::Analytic { .. } => None,
            JetSource::Stencil { stencil, .. } => Some(*stencil),
        }
    }

    /// Interior indices.
    pub fn points(&self) -> Vec<usize> {
        (0..self.spec().len()).filter(|&i| self.is_interior(i)).collect()
    }
}
