//! Uniform lattices over `(x⁰, x¹, x²[, x³])` and the fields that live on
//! them, with central-difference partial derivatives.
//!
//! Values are stored point-major: every lattice point owns a contiguous run
//! of `kind.real_components()` doubles, complex values as `(re, im)` pairs.
//! Points are ordered row-major with the last axis fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinor::{Spinor, C64};

pub const MAX_DIMS: usize = 4;

/// Extents, spacings and periodicity of a lattice. Coordinates are
/// `x_axis = i · h[axis]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl LatticeSpec {
    pub fn new(n: Vec<usize>, h: Vec<f64>, periodic: Vec<bool>) -> Result<Self> {
        let dims = n.len();
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::DimensionMismatch(format!("lattice must have 1..=4 axes, got {dims}")));
        }
        if h.len() != dims || periodic.len() != dims {
            return Err(Error::DimensionMismatch("extents, spacings and periodic flags differ in length".into()));
        }
        if n.contains(&0) {
            return Err(Error::InvalidParams("lattice extents must be positive".into()));
        }
        if h.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams("lattice spacings must be positive".into()));
        }
        Ok(Self { n, h, periodic })
    }

    /// Fully periodic box with the given side lengths.
    pub fn periodic_box(n: &[usize], lengths: &[f64]) -> Result<Self> {
        if n.len() != lengths.len() {
            return Err(Error::DimensionMismatch("extents and lengths differ in length".into()));
        }
        let h = n.iter().zip(lengths).map(|(&k, &l)| l / k as f64).collect();
        Self::new(n.to_vec(), h, vec![true; n.len()])
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.n[axis] as f64 * self.h[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.n).fold(0, |acc, (&c, &n)| acc * n + c)
    }

    pub fn coords(&self, mut idx: usize) -> [usize; MAX_DIMS] {
        let mut out = [0; MAX_DIMS];
        for axis in (0..self.dims()).rev() {
            out[axis] = idx % self.n[axis];
            idx /= self.n[axis];
        }
        out
    }

    /// Physical position of a point, zero-padded to four coordinates.
    pub fn position(&self, idx: usize) -> [f64; MAX_DIMS] {
        let c = self.coords(idx);
        let mut x = [0.0; MAX_DIMS];
        for axis in 0..self.dims() {
            x[axis] = c[axis] as f64 * self.h[axis];
        }
        x
    }

    /// Checks that a periodic Kaluza–Klein axis has circumference `π/m`.
    pub fn check_kk_period(&self, m: f64, rel_tol: f64) -> Result<()> {
        if self.dims() == 4 && self.periodic[3] {
            let period = std::f64::consts::PI / m;
            let len = self.length(3);
            if (len - period).abs() > rel_tol * period {
                return Err(Error::ConfigInvalid(format!("x3 circumference {len} differs from pi/m = {period}")));
            }
        }
        Ok(())
    }

    /// Whether a point lies at least `margin[axis]` points away from every
    /// non-periodic boundary.
    pub fn is_interior(&self, idx: usize, margin: &[usize]) -> bool {
        let c = self.coords(idx);
        (0..self.dims()).all(|a| self.periodic[a] || (c[a] >= margin[a] && c[a] + margin[a] < self.n[a]))
    }
}

/// What each lattice point carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Scalar,
    /// `n` complex components.
    Complex(usize),
    /// Two complex components.
    Spinor,
    /// Antisymmetric covariant tensor of `rank` over `dims` form indices,
    /// storing only the `binomial(dims, rank)` independent components.
    Form {
        dims: usize,
        rank: usize,
    },
    /// `dims × dims` real matrix, row `j` the covector `ϑ^j`.
    Coframe {
        dims: usize,
    },
    /// Rank-3 covariant tensor with no symmetry, `dims³` components.
    Tensor3 {
        dims: usize,
    },
}

impl FieldKind {
    pub fn real_components(&self) -> usize {
        match *self {
            FieldKind::Scalar => 1,
            FieldKind::Complex(n) => 2 * n,
            FieldKind::Spinor => 4,
            FieldKind::Form { dims, rank } => binomial(dims, rank),
            FieldKind::Coframe { dims } => dims * dims,
            FieldKind::Tensor3 { dims } => dims * dims * dims,
        }
    }

    pub fn covector(dims: usize) -> Self {
        FieldKind::Form { dims, rank: 1 }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Central-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Stencil::Second),
            4 => Ok(Stencil::Fourth),
            _ => Err(Error::InvalidParams(format!("stencil order must be 2 or 4, got {order}"))),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
        }
    }

    pub fn radius(&self) -> usize {
        self.order() / 2
    }

    /// Weights for offsets `1..=radius`; the stencil is antisymmetric.
    pub fn weights(&self) -> &'static [f64] {
        match self {
            Stencil::Second => &[0.5],
            Stencil::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
        }
    }

    /// The stencil maps `e^{ikx}` to `i · symbol(kh) / h · e^{ikx}`.
    pub fn symbol(&self, theta: f64) -> f64 {
        match self {
            Stencil::Second => theta.sin(),
            Stencil::Fourth => (8.0 * theta.sin() - (2.0 * theta).sin()) / 6.0,
        }
    }

    /// Minimum extent along a differentiated axis.
    pub fn min_points(&self) -> usize {
        match self {
            Stencil::Second => 3,
            Stencil::Fourth => 5,
        }
    }
}

/// Values of one [`FieldKind`] at every point of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub spec: LatticeSpec,
    pub kind: FieldKind,
    pub data: Vec<f64>,
    /// Points within `margin[axis]` of a non-periodic boundary hold NaN.
    pub margin: Vec<usize>,
    /// Axes along which the field changes sign across the periodic seam.
    pub twisted: Vec<bool>,
}

impl LatticeField {
    pub fn zeros(spec: &LatticeSpec, kind: FieldKind) -> Self {
        let dims = spec.dims();
        Self { data: vec![0.0; spec.len() * kind.real_components()], spec: spec.clone(), kind, margin: vec![0; dims], twisted: vec![false; dims] }
    }

    pub fn from_data(spec: &LatticeSpec, kind: FieldKind, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() * kind.real_components() {
            return Err(Error::DimensionMismatch(format!("expected {} values, got {}", spec.len() * kind.real_components(), data.len())));
        }
        let mut f = Self::zeros(spec, kind);
        f.data = data;
        Ok(f)
    }

    /// Samples a pointwise function at every lattice position.
    pub fn from_fn<F>(spec: &LatticeSpec, kind: FieldKind, mut f: F) -> Self
    where
        F: FnMut(usize, &[f64; MAX_DIMS], &mut [f64]),
    {
        let mut out = Self::zeros(spec, kind);
        let nc = kind.real_components();
        for idx in 0..spec.len() {
            let x = spec.position(idx);
            f(idx, &x, &mut out.data[idx * nc..(idx + 1) * nc]);
        }
        out
    }

    pub fn with_twist(mut self, axis: usize, twisted: bool) -> Self {
        self.twisted[axis] = twisted;
        self
    }

    pub fn ncomp(&self) -> usize {
        self.kind.real_components()
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[idx * nc..(idx + 1) * nc]
    }

    pub fn at_mut(&mut self, idx: usize) -> &mut [f64] {
        let nc = self.ncomp();
        &mut self.data[idx * nc..(idx + 1) * nc]
    }

    pub fn scalar_at(&self, idx: usize) -> f64 {
        self.data[idx * self.ncomp()]
    }

    pub fn spinor_at(&self, idx: usize) -> Spinor {
        let v = self.at(idx);
        Spinor::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))
    }

    pub fn set_spinor(&mut self, idx: usize, s: &Spinor) {
        let v = self.at_mut(idx);
        v[0] = s.c[0].re;
        v[1] = s.c[0].im;
        v[2] = s.c[1].re;
        v[3] = s.c[1].im;
    }

    pub fn complex_at(&self, idx: usize, comp: usize) -> C64 {
        let v = self.at(idx);
        C64::new(v[2 * comp], v[2 * comp + 1])
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.spec.is_interior(idx, &self.margin)
    }

    /// Indices of every point outside the NaN boundary layer.
    pub fn interior_points(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.spec.len()).filter(move |&i| self.is_interior(i))
    }

    /// Combined margin of several fields.
    pub fn joint_margin(fields: &[&LatticeField]) -> Vec<usize> {
        let dims = fields[0].spec.dims();
        (0..dims).map(|a| fields.iter().map(|f| f.margin[a]).max().unwrap_or(0)).collect()
    }

    /// Pointwise map into a new field; the margin is inherited and the twist
    /// is cleared (callers re-twist when the image is still antiperiodic).
    pub fn map<F>(&self, kind: FieldKind, mut f: F) -> LatticeField
    where
        F: FnMut(usize, &[f64], &mut [f64]),
    {
        let mut out = LatticeField::zeros(&self.spec, kind);
        out.margin = self.margin.clone();
        let nc = kind.real_components();
        for idx in 0..self.spec.len() {
            let dst = &mut out.data[idx * nc..(idx + 1) * nc];
            if self.is_interior(idx) {
                f(idx, self.at(idx), dst);
            } else {
                dst.fill(f64::NAN);
            }
        }
        out
    }

    /// Largest absolute component difference over the joint interior.
    pub fn max_abs_diff(&self, other: &LatticeField) -> Result<f64> {
        if self.spec != other.spec || self.kind != other.kind {
            return Err(Error::DimensionMismatch("fields live on different lattices or kinds".into()));
        }
        let margin = LatticeField::joint_margin(&[self, other]);
        let mut m = 0.0f64;
        for idx in 0..self.spec.len() {
            if !self.spec.is_interior(idx, &margin) {
                continue;
            }
            for (a, b) in self.at(idx).iter().zip(other.at(idx)) {
                m = m.max((a - b).abs());
            }
        }
        Ok(m)
    }

    /// Largest absolute component over the interior.
    pub fn max_abs(&self) -> f64 {
        self.interior_points().flat_map(|i| self.at(i).iter().map(|v| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max)
    }

    /// Stencil derivative along `axis` at a single point, written into `out`.
    /// Returns `false` when the stencil would leave a non-periodic axis.
    pub fn derivative_at(&self, idx: usize, axis: usize, stencil: Stencil, out: &mut [f64]) -> bool {
        let spec = &self.spec;
        let n = spec.n[axis];
        let stride = spec.stride(axis);
        let i = (idx / stride) % n;
        let radius = stencil.radius();
        if !spec.periodic[axis] && (i < radius || i + radius >= n) {
            return false;
        }
        let nc = self.ncomp();
        let base = idx - i * stride;
        let seam = if self.twisted[axis] { -1.0 } else { 1.0 };
        out[..nc].fill(0.0);
        for (k, &w) in stencil.weights().iter().enumerate() {
            let off = k as isize + 1;
            let (ip, sp) = wrap(i as isize + off, n, seam);
            let (im, sm) = wrap(i as isize - off, n, seam);
            let p = (base + ip * stride) * nc;
            let q = (base + im * stride) * nc;
            for c in 0..nc {
                out[c] += w * (sp * self.data[p + c] - sm * self.data[q + c]);
            }
        }
        let inv_h = 1.0 / spec.h[axis];
        for v in out[..nc].iter_mut() {
            *v *= inv_h;
        }
        true
    }

    /// Index of the point `offset` steps along `axis`, with the seam sign,
    /// or `None` past a non-periodic edge.
    pub fn neighbour(&self, idx: usize, axis: usize, offset: isize) -> Option<(usize, f64)> {
        let spec = &self.spec;
        let n = spec.n[axis];
        let stride = spec.stride(axis);
        let i = (idx / stride) % n;
        let j = i as isize + offset;
        if !spec.periodic[axis] && (j < 0 || j >= n as isize) {
            return None;
        }
        let seam = if self.twisted[axis] { -1.0 } else { 1.0 };
        let jn = j.rem_euclid(n as isize) as usize;
        let sign = if j.div_euclid(n as isize) % 2 == 0 { 1.0 } else { seam };
        Some((idx - i * stride + jn * stride, sign))
    }
}

/// Central-difference derivative along `axis`.
///
/// Periodic axes wrap (with a sign flip for twisted axes); non-periodic axes
/// leave a NaN boundary layer of the stencil radius, recorded in `margin`.
pub fn partial_derivative(f: &LatticeField, axis: usize, stencil: Stencil) -> Result<LatticeField> {
    let spec = &f.spec;
    if axis >= spec.dims() {
        return Err(Error::AxisOutOfRange { axis, dims: spec.dims() });
    }
    let n = spec.n[axis];
    if n < stencil.min_points() {
        return Err(Error::GridTooSmall { axis, n, required: stencil.min_points() });
    }
    let nc = f.ncomp();
    let stride = spec.stride(axis);
    let inv_h = 1.0 / spec.h[axis];
    let periodic = spec.periodic[axis];
    let sign_seam = if f.twisted[axis] { -1.0 } else { 1.0 };
    let radius = stencil.radius();
    let weights = stencil.weights();

    let mut out = LatticeField::zeros(spec, f.kind);
    out.margin = f.margin.clone();
    out.twisted = f.twisted.clone();
    if !periodic {
        out.margin[axis] += radius;
    }

    for idx in 0..spec.len() {
        let i = (idx / stride) % n;
        let base = idx - i * stride;
        let dst = &mut out.data[idx * nc..(idx + 1) * nc];
        if !periodic && (i < radius || i + radius >= n) {
            dst.fill(f64::NAN);
            continue;
        }
        dst.fill(0.0);
        for (k, &w) in weights.iter().enumerate() {
            let off = k + 1;
            let (ip, sp) = wrap(i as isize + off as isize, n, sign_seam);
            let (im, sm) = wrap(i as isize - off as isize, n, sign_seam);
            let p = base + ip * stride;
            let q = base + im * stride;
            for c in 0..nc {
                dst[c] += w * (sp * f.data[p * nc + c] - sm * f.data[q * nc + c]);
            }
        }
        for v in dst.iter_mut() {
            *v *= inv_h;
        }
    }
    Ok(out)
}

fn wrap(i: isize, n: usize, seam: f64) -> (usize, f64) {
    let n = n as isize;
    if i < 0 {
        ((i + n) as usize, seam)
    } else if i >= n {
        ((i - n) as usize, seam)
    } else {
        (i as usize, 1.0)
    }
}

/// Derivatives along every axis `0..axes`.
pub fn gradient(f: &LatticeField, axes: usize, stencil: Stencil) -> Result<Vec<LatticeField>> {
    (0..axes).map(|a| partial_derivative(f, a, stencil)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_field(n: usize, k: f64) -> LatticeField {
        let spec = LatticeSpec::periodic_box(&[n], &[2.0 * PI]).unwrap();
        LatticeField::from_fn(&spec, FieldKind::Scalar, |_, x, v| v[0] = (k * x[0]).sin())
    }

    fn max_err(f: &LatticeField, d: &LatticeField, k: f64) -> f64 {
        (0..f.spec.len()).map(|i| (d.scalar_at(i) - k * (k * f.spec.position(i)[0]).cos()).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_has_zero_derivative() {
        let spec = LatticeSpec::new(vec![6, 7], vec![0.3, 0.2], vec![true, false]).unwrap();
        let f = LatticeField::from_fn(&spec, FieldKind::Scalar, |_, _, v| v[0] = 2.5);
        for axis in 0..2 {
            let d = partial_derivative(&f, axis, Stencil::Second).unwrap();
            assert_eq!(d.max_abs(), 0.0);
        }
    }

    #[test]
    fn sine_derivative_within_taylor_bound() {
        let k = 3.0;
        let f = sine_field(64, k);
        let d = partial_derivative(&f, 0, Stencil::Second).unwrap();
        let h = f.spec.h[0];
        assert!(max_err(&f, &d, k) <= k.powi(3) * h * h / 6.0);
    }

    #[test]
    fn refinement_ratios_match_order() {
        let k = 2.0;
        for (stencil, expect) in [(Stencil::Second, 4.0), (Stencil::Fourth, 16.0)] {
            let coarse = sine_field(64, k);
            let fine = sine_field(128, k);
            let e1 = max_err(&coarse, &partial_derivative(&coarse, 0, stencil).unwrap(), k);
            let e2 = max_err(&fine, &partial_derivative(&fine, 0, stencil).unwrap(), k);
            let ratio = e1 / e2;
            assert!((ratio - expect).abs() < 0.05 * expect, "ratio {ratio}");
        }
    }

    #[test]
    fn nonperiodic_axis_flags_margin() {
        let spec = LatticeSpec::new(vec![10], vec![0.1], vec![false]).unwrap();
        let f = LatticeField::from_fn(&spec, FieldKind::Scalar, |_, x, v| v[0] = x[0] * x[0]);
        let d = partial_derivative(&f, 0, Stencil::Fourth).unwrap();
        assert_eq!(d.margin, vec![2]);
        assert!(d.scalar_at(1).is_nan());
        assert!((d.scalar_at(5) - 1.0).abs() < 1e-12);
        assert_eq!(d.interior_points().count(), 6);
    }

    #[test]
    fn twisted_axis_wraps_with_sign() {
        // cos(x/2) is antiperiodic on [0, 2π).
        let spec = LatticeSpec::periodic_box(&[64], &[2.0 * PI]).unwrap();
        let f = LatticeField::from_fn(&spec, FieldKind::Scalar, |_, x, v| v[0] = (0.5 * x[0]).cos()).with_twist(0, true);
        let d = partial_derivative(&f, 0, Stencil::Fourth).unwrap();
        for i in 0..64 {
            let x = spec.position(i)[0];
            assert!((d.scalar_at(i) + 0.5 * (0.5 * x).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn errors_on_bad_axis_and_small_grid() {
        let f = sine_field(4, 1.0);
        assert!(matches!(partial_derivative(&f, 1, Stencil::Second), Err(Error::AxisOutOfRange { .. })));
        assert!(matches!(partial_derivative(&f, 0, Stencil::Fourth), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn stencil_symbol_matches_plane_wave() {
        let n = 16;
        let spec = LatticeSpec::periodic_box(&[n], &[2.0 * PI]).unwrap();
        let f = LatticeField::from_fn(&spec, FieldKind::Complex(1), |_, x, v| {
            v[0] = (2.0 * x[0]).cos();
            v[1] = (2.0 * x[0]).sin();
        });
        for st in [Stencil::Second, Stencil::Fourth] {
            let d = partial_derivative(&f, 0, st).unwrap();
            let eff = st.symbol(2.0 * spec.h[0]) / spec.h[0];
            for i in 0..n {
                let expect = C64::new(0.0, eff) * f.complex_at(i, 0);
                assert!((d.complex_at(i, 0) - expect).norm() < 1e-13);
            }
        }
    }
}
