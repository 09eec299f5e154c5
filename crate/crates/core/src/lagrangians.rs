//! Lagrangian densities. Each one is evaluated twice, once as the written-out
//! spinor expression and once in its compact torsion form, and the two must
//! agree pointwise.

use crate::error::{Error, Result};
use crate::forms::Form;
use crate::lattice::{FieldKind, LatticeField};
use crate::params::{ModelParams, Sign};
use crate::sources::{JetSource, SpinorJet};
use crate::spinor::{density_of_spinor, sigma_upper, I, METRIC};
use crate::torsion::{
    d3_numerator, nonzero_density, pointwise, positive_density, reduced_numerator, star_d3_point, star_torsion_point, torsion_numerator_4d,
};

/// Relative agreement required between the two forms of a density.
pub const FORM_TOL: f64 = 1e-12;

/// Below `DEGENERATE · m · |η|²` the factorization denominator counts as zero.
pub const DEGENERATE: f64 = 1e-9;

/// A density in written-out and compact form, with the size of the terms
/// that were combined (for relative comparisons).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityForms {
    pub spelled: f64,
    pub compact: f64,
    pub magnitude: f64,
}

impl DensityForms {
    pub fn discrepancy(&self) -> f64 {
        (self.spelled - self.compact).abs()
    }

    pub fn checked(self, what: &'static str) -> Result<f64> {
        if self.discrepancy() > FORM_TOL * self.magnitude.max(1.0) {
            return Err(Error::FormMismatch { what, discrepancy: self.discrepancy() });
        }
        Ok(self.spelled)
    }
}

/// The 4D density, from the written-out spinor expression and from
/// `(‖T_A^ax‖² + ‖D₃ϑ‖²)ρ` with the forms recovered by inverse Hodge duals.
pub fn lagrangian_4d_point(j: &SpinorJet, a: &[f64; 3], m: f64) -> Result<DensityForms> {
    let rho = nonzero_density(&j.value)?;
    let bracket = I * torsion_numerator_4d(j, Some((a, m)));
    let w = [0, 1, 2].map(|alpha| I * d3_numerator(j, alpha));
    let w_norm: f64 = (0..3).map(|alpha| METRIC[alpha] * (w[alpha] * w[alpha]).re).sum();
    let spelled = -4.0 / (9.0 * rho) * ((bracket * bracket).re + w_norm);

    let t = star_torsion_point(j, Some((a, m)))?.re;
    let d = star_d3_point(j)?.map(|v| v.re);
    let t_form = Form::scalar(3, t).hodge_inverse()?;
    let d_form = Form::covector(3, &d).hodge_inverse()?;
    let compact = (t_form.norm_sqr()? + d_form.norm_sqr()?) * rho;
    let magnitude = 4.0 / (9.0 * rho.abs()) * (bracket.norm_sqr() + w.iter().map(|v| v.norm_sqr()).sum::<f64>());
    Ok(DensityForms { spelled, compact, magnitude })
}

/// `L_±(η)` written out and as `−((*T_{A±}^ax)² − 16m²/9)ρ`.
pub fn lagrangian_reduced_point(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign) -> Result<DensityForms> {
    let rho = positive_density(&j.value)?;
    let n = reduced_numerator(j, a, r);
    let half = 0.5 * n;
    let spelled = -16.0 / (9.0 * rho) * ((half * half).re - (m * rho).powi(2));
    let t = (-2.0 * n / (3.0 * rho)).re;
    let compact = -(t * t - 16.0 / 9.0 * m * m) * rho;
    let magnitude = 16.0 / (9.0 * rho) * (half.norm_sqr() + (m * rho).powi(2));
    Ok(DensityForms { spelled, compact, magnitude })
}

/// Dirac density `L_rs`, written out, and `(−¾ *T_{Ar}^ax + sm)ρ` when `ρ > 0`.
pub fn dirac_lagrangian_point(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign, s: Sign) -> (f64, Option<f64>) {
    let eta = &j.value;
    let n = reduced_numerator(j, a, r);
    let mass = s.value() * m * sigma_upper(3).sandwich(eta, eta).re;
    let spelled = 0.5 * n.re + mass;
    let rho = density_of_spinor(eta);
    let compact = (rho > 0.0).then(|| {
        let t = (-2.0 * n / (3.0 * rho)).re;
        (-0.75 * t + s.value() * m) * rho
    });
    (spelled, compact)
}

/// `L_r + (32m/9) L_{r+} L_{r−} / (L_{r+} − L_{r−})`.
pub fn factorization_point(j: &SpinorJet, a: &[f64; 3], m: f64, r: Sign) -> Result<f64> {
    let (lp, _) = dirac_lagrangian_point(j, a, m, r, Sign::Plus);
    let (lm, _) = dirac_lagrangian_point(j, a, m, r, Sign::Minus);
    let denom = lp - lm;
    if !(denom > DEGENERATE * m * j.value.norm_sqr()) {
        return Err(Error::DegenerateDenominator { denominator: denom });
    }
    let lr = lagrangian_reduced_point(j, a, m, r)?.checked("separated density")?;
    Ok(lr + 32.0 * m / 9.0 * lp * lm / denom)
}

/// Lattice form of the 4D density; fails if the two forms disagree.
pub fn lagrangian_4d(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let a = params.potential.jet(&src.position(idx)).a;
        dst[0] = lagrangian_4d_point(j, &a, params.m)?.checked("4D density")?;
        Ok(())
    })
}

/// Lattice form of `L_±`, with the sign taken from `params.r`.
pub fn lagrangian_reduced(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let a = params.potential.jet(&src.position(idx)).a;
        dst[0] = lagrangian_reduced_point(j, &a, params.m, params.r)?.checked("separated density")?;
        Ok(())
    })
}

/// Lattice form of `L_rs`; the compact form is cross-checked where `ρ > 0`.
pub fn dirac_lagrangian(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let a = params.potential.jet(&src.position(idx)).a;
        let (spelled, compact) = dirac_lagrangian_point(j, &a, params.m, params.r, params.s);
        if let Some(c) = compact {
            let magnitude = spelled.abs() + params.m * j.value.norm_sqr() + j.d.iter().map(|d| d.norm()).sum::<f64>() * j.value.norm();
            DensityForms { spelled, compact: c, magnitude }.checked("Dirac density")?;
        }
        dst[0] = spelled;
        Ok(())
    })
}

/// Pointwise factorization residual with the sign taken from `params.r`.
pub fn factorization_residual(src: &JetSource, params: &ModelParams) -> Result<LatticeField> {
    pointwise(src, FieldKind::Scalar, |idx, j, dst| {
        let a = params.potential.jet(&src.position(idx)).a;
        dst[0] = factorization_point(j, &a, params.m, params.r)?;
        Ok(())
    })
}

/// Kahan–Babuška (Neumaier) summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `Σ L · ∏h` over the interior of a scalar density field.
pub fn discrete_action(density: &LatticeField) -> f64 {
    compensated_sum(density.interior_points().map(|i| density.scalar_at(i))) * density.spec.cell_volume()
}
