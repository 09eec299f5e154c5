//! Two-component spinor algebra and the pointwise correspondence between a
//! positive-density spinor and a (coframe, density) pair in 1+2 dimensions.
//!
//! Conventions: metric `g = diag(-1, +1, +1)`, frame metric `o_jk` equal to
//! the same diagonal, Pauli matrices with the first index enumerating rows,
//! and the metric spinor `[[0, -1], [1, 0]]` for every index placement.

use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Minkowski metric diagonal in 1+2 dimensions, `g_{αβ} = g^{αβ}`.
pub const METRIC: [f64; 3] = [-1.0, 1.0, 1.0];
/// Minkowski metric diagonal in 1+3 dimensions.
pub const METRIC_4D: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];
/// Frame metric `o_jk = o^jk`.
pub const FRAME_METRIC: [f64; 3] = [-1.0, 1.0, 1.0];

/// Marker for spinors carrying an undotted index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Undotted;
/// Marker for spinors carrying a dotted index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dotted;

/// A two-component complex spinor. The index type is a tag only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor<K = Undotted> {
    pub c: [C64; 2],
    _kind: PhantomData<K>,
}

pub type DottedSpinor = Spinor<Dotted>;

impl<K> Spinor<K> {
    pub const fn new(c1: C64, c2: C64) -> Self {
        Self { c: [c1, c2], _kind: PhantomData }
    }

    pub fn from_real(c1: f64, c2: f64) -> Self {
        Self::new(C64::new(c1, 0.0), C64::new(c2, 0.0))
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO)
    }

    /// Reinterpret the index type.
    pub fn retag<L>(self) -> Spinor<L> {
        Spinor::new(self.c[0], self.c[1])
    }

    pub fn scale(self, k: C64) -> Self {
        Self::new(self.c[0] * k, self.c[1] * k)
    }

    pub fn scale_re(self, k: f64) -> Self {
        Self::new(self.c[0] * k, self.c[1] * k)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c[0].norm_sqr() + self.c[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c[0].norm().max(self.c[1].norm())
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<K> Default for Spinor<K> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<K> Add for Spinor<K> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.c[0] + o.c[0], self.c[1] + o.c[1])
    }
}

impl<K> Sub for Spinor<K> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.c[0] - o.c[0], self.c[1] - o.c[1])
    }
}

impl<K> Neg for Spinor<K> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.c[0], -self.c[1])
    }
}

impl<K> Mul<C64> for Spinor<K> {
    type Output = Self;
    fn mul(self, k: C64) -> Self {
        self.scale(k)
    }
}

impl<K> Mul<f64> for Spinor<K> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.scale_re(k)
    }
}

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(m: [[C64; 2]; 2]) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn scale(&self, k: f64) -> Self {
        let m = self.0;
        Self([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]])
    }

    /// `(M v)_ȧ = M_{ȧb} v^b`: undotted in, dotted out.
    pub fn apply(&self, v: &Spinor) -> DottedSpinor {
        let m = &self.0;
        Spinor::new(m[0][0] * v.c[0] + m[0][1] * v.c[1], m[1][0] * v.c[0] + m[1][1] * v.c[1])
    }

    /// Hermitian sandwich `ū^ȧ M_{ȧb} v^b`.
    pub fn sandwich(&self, u: &Spinor, v: &Spinor) -> C64 {
        let mv = self.apply(v);
        u.c[0].conj() * mv.c[0] + u.c[1].conj() * mv.c[1]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.0;
        (0..2).all(|i| (0..2).all(|j| (m[i][j] - m[j][i].conj()).norm() <= tol))
    }
}

/// Pauli matrices with a lower spacetime index, `σ_α` for α = 0..3.
pub fn sigma_lower(alpha: usize) -> Mat2 {
    match alpha {
        0 => Mat2([[ONE, ZERO], [ZERO, ONE]]),
        1 => Mat2([[ZERO, ONE], [ONE, ZERO]]),
        2 => Mat2([[ZERO, -I], [I, ZERO]]),
        3 => Mat2([[ONE, ZERO], [ZERO, -ONE]]),
        _ => panic!("Pauli index {alpha} out of range"),
    }
}

/// Pauli matrices with the spacetime index raised by `g`: `σ^0 = -σ_0`.
pub fn sigma_upper(alpha: usize) -> Mat2 {
    if alpha == 0 {
        sigma_lower(0).scale(-1.0)
    } else {
        sigma_lower(alpha)
    }
}

/// The metric spinor, identical for all four index placements.
pub fn epsilon() -> [[f64; 2]; 2] {
    [[0.0, -1.0], [1.0, 0.0]]
}

/// The full set of constant algebraic data.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSet {
    pub sigma_lower: [Mat2; 4],
    pub sigma_upper: [Mat2; 4],
    pub epsilon: [[f64; 2]; 2],
}

impl PauliSet {
    pub fn standard() -> Self {
        Self { sigma_lower: [0, 1, 2, 3].map(sigma_lower), sigma_upper: [0, 1, 2, 3].map(sigma_upper), epsilon: epsilon() }
    }
}

impl Default for PauliSet {
    fn default() -> Self {
        Self::standard()
    }
}

/// `ξ̄^ȧ σ_{3ȧb} ξ^b = |ξ¹|² − |ξ²|²`.
pub fn density_of_spinor(xi: &Spinor) -> f64 {
    sigma_lower(3).sandwich(xi, xi).re
}

/// Current with lower index, `j_α = ξ̄ σ_α ξ`, α = 0..2.
pub fn current_lower(xi: &Spinor) -> [f64; 3] {
    [0, 1, 2].map(|a| sigma_lower(a).sandwich(xi, xi).re)
}

/// `ε^{ċḃ} σ_{3ḃa} ξ^a σ_{αċd} ξ^d`, the unnormalised `(ϑ¹ + iϑ²)_α`.
pub fn transverse_numerator(xi: &Spinor) -> [C64; 3] {
    transverse_bilinear(xi, xi)
}

/// The symmetric bilinear map behind [`transverse_numerator`], with the
/// first slot feeding `σ_3` and the second feeding `σ_α`.
pub(crate) fn transverse_bilinear(u: &Spinor, v: &Spinor) -> [C64; 3] {
    let eps = epsilon();
    let s3 = sigma_lower(3).0;
    let mut out = [ZERO; 3];
    for (alpha, slot) in out.iter_mut().enumerate() {
        let sa = sigma_lower(alpha).0;
        let mut acc = ZERO;
        for c in 0..2 {
            for b in 0..2 {
                if eps[c][b] == 0.0 {
                    continue;
                }
                for a in 0..2 {
                    for d in 0..2 {
                        acc += eps[c][b] * s3[b][a] * u.c[a] * sa[c][d] * v.c[d];
                    }
                }
            }
        }
        *slot = acc;
    }
    out
}

/// Coframe `ϑ^j_α` (row `j`, column `α`) with its positive density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoframeDensity {
    pub theta: [[f64; 3]; 3],
    pub rho: f64,
}

impl CoframeDensity {
    pub fn identity() -> Self {
        Self { theta: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], rho: 1.0 }
    }
}

/// Builds the coframe and density of a positive-class spinor.
pub fn coframe_of_spinor(xi: &Spinor) -> Result<CoframeDensity> {
    let rho = density_of_spinor(xi);
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity { density: rho });
    }
    let j = current_lower(xi);
    let q = transverse_numerator(xi);
    let mut theta = [[0.0; 3]; 3];
    for a in 0..3 {
        theta[0][a] = j[a] / rho;
        theta[1][a] = q[a].re / rho;
        theta[2][a] = q[a].im / rho;
    }
    Ok(CoframeDensity { theta, rho })
}

/// Outcome of [`verify_coframe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoframeCheck {
    /// max over (α, β) of `|o_jk ϑ^j_α ϑ^k_β − g_αβ|`.
    pub metric_deviation: f64,
    /// `|det ϑ − 1|`.
    pub det_deviation: f64,
    /// `ϑ⁰₀`, which must be positive.
    pub theta00: f64,
    pub rho: f64,
    pub pass: bool,
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn metric_deviation(theta: &[[f64; 3]; 3]) -> f64 {
    let mut dev = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let g: f64 = (0..3).map(|j| FRAME_METRIC[j] * theta[j][a] * theta[j][b]).sum();
            let target = if a == b { METRIC[a] } else { 0.0 };
            dev = dev.max((g - target).abs());
        }
    }
    dev
}

/// Checks orthonormality, unit determinant, time orientation and positive density.
pub fn verify_coframe(cd: &CoframeDensity, tol: f64) -> CoframeCheck {
    let metric_deviation = metric_deviation(&cd.theta);
    let det_deviation = (det3(&cd.theta) - 1.0).abs();
    let theta00 = cd.theta[0][0];
    let pass = metric_deviation <= tol && det_deviation <= tol && theta00 > 0.0 && cd.rho > 0.0;
    CoframeCheck { metric_deviation, det_deviation, theta00, rho: cd.rho, pass }
}

/// The density-flipping map `ξ^c = ε^{cb} σ_{3ȧb} ξ̄^ȧ`; it is an involution.
pub fn conjugate_swap(xi: &Spinor) -> Spinor {
    let eps = epsilon();
    let s3 = sigma_lower(3).0;
    let mut out = [ZERO; 2];
    for (c, slot) in out.iter_mut().enumerate() {
        for b in 0..2 {
            for a in 0..2 {
                *slot += eps[c][b] * s3[a][b] * xi.c[a].conj();
            }
        }
    }
    Spinor::new(out[0], out[1])
}

/// Maps a negative-density spinor to its positive-density partner.
pub fn bijection_to_positive(xi_tilde: &Spinor) -> Result<Spinor> {
    let density = density_of_spinor(xi_tilde);
    if !(density < 0.0) {
        return Err(Error::WrongDensitySign { density });
    }
    Ok(conjugate_swap(xi_tilde))
}
