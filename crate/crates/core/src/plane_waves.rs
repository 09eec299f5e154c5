//! The four plane-wave solutions, their coframes, energies and the
//! electron/positron and spin labels read off from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Stencil, MAX_DIMS};
use crate::params::{ModelParams, Sign};
use crate::sources::{PlaneWaveSpinor, Potential};
use crate::spinor::{coframe_of_spinor, CoframeDensity, Spinor, C64, METRIC};

/// A plane wave `(1,0) e^{−i[(sm − rA₀)x⁰ + rmx³]}` in a constant electric
/// potential `A = (A₀, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveLabel {
    pub r: Sign,
    pub s: Sign,
    pub m: f64,
    pub a0: f64,
}

impl PlaneWaveLabel {
    pub fn new(r: Sign, s: Sign, m: f64, a0: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
        }
        if !(0.0..m).contains(&a0) {
            return Err(Error::InvalidProbeField { a0, m });
        }
        Ok(Self { r, s, m, a0 })
    }

    pub fn free(r: Sign, s: Sign, m: f64) -> Result<Self> {
        Self::new(r, s, m, 0.0)
    }

    /// Frequency in x⁰, `sm − rA₀`.
    pub fn p0(&self) -> f64 {
        self.s.value() * self.m - self.r.value() * self.a0
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.m, self.r, self.s, Potential::electric(self.a0)).expect("label mass is positive")
    }

    /// All four sign combinations in table order.
    pub fn all(m: f64, a0: f64) -> Result<[Self; 4]> {
        Ok([
            Self::new(Sign::Plus, Sign::Plus, m, a0)?,
            Self::new(Sign::Plus, Sign::Minus, m, a0)?,
            Self::new(Sign::Minus, Sign::Plus, m, a0)?,
            Self::new(Sign::Minus, Sign::Minus, m, a0)?,
        ])
    }
}

/// The 4D solution `ξ`, antiperiodic with period `π/m` in x³.
pub fn plane_wave_spinor(label: &PlaneWaveLabel) -> PlaneWaveSpinor {
    PlaneWaveSpinor { zeta: Spinor::from_real(1.0, 0.0), p: [label.p0(), 0.0, 0.0, label.r.value() * label.m], antiperiodic: true }
}

/// The separated field `η = ξ e^{irmx³}`.
pub fn reduced_plane_wave(label: &PlaneWaveLabel) -> PlaneWaveSpinor {
    PlaneWaveSpinor { zeta: Spinor::from_real(1.0, 0.0), p: [label.p0(), 0.0, 0.0, 0.0], antiperiodic: false }
}

/// Rotation angle of `(ϑ¹, ϑ²)` at `x`.
pub fn rotation_angle(label: &PlaneWaveLabel, x: &[f64; MAX_DIMS]) -> f64 {
    2.0 * (label.p0() * x[0] + label.r.value() * label.m * x[3])
}

/// Closed-form coframe: `ρ = 1`, `ϑ⁰ = dx⁰`, and `ϑ¹, ϑ²` rotated in the
/// `(x¹, x²)` plane by [`rotation_angle`].
pub fn plane_wave_coframe(label: &PlaneWaveLabel, x: &[f64; MAX_DIMS]) -> CoframeDensity {
    let (sin, cos) = rotation_angle(label, x).sin_cos();
    CoframeDensity { theta: [[1.0, 0.0, 0.0], [0.0, cos, sin], [0.0, -sin, cos]], rho: 1.0 }
}

/// `diag(−p₀ + sm, −p₀ − sm)`, the Dirac operator on `ζ e^{−ip₀x⁰}`.
pub fn dispersion_matrix(p0: f64, s: Sign, m: f64) -> [[f64; 2]; 2] {
    [[-p0 + s.value() * m, 0.0], [0.0, -p0 - s.value() * m]]
}

/// Kernel of [`dispersion_matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionKernel {
    /// Only the zero spinor.
    Trivial,
    /// Spanned by a spinor of positive density.
    Positive(Spinor),
    /// Spanned by a spinor whose density is negative; excluded.
    Rejected(Spinor),
}

pub fn dispersion_kernel(p0: f64, s: Sign, m: f64, tol: f64) -> DispersionKernel {
    let d = dispersion_matrix(p0, s, m);
    if d[0][0].abs() <= tol * m {
        DispersionKernel::Positive(Spinor::from_real(1.0, 0.0))
    } else if d[1][1].abs() <= tol * m {
        DispersionKernel::Rejected(Spinor::from_real(0.0, 1.0))
    } else {
        DispersionKernel::Trivial
    }
}

/// `ε = |sm − rA₀|`.
pub fn energy(label: &PlaneWaveLabel) -> f64 {
    label.p0().abs()
}

/// Angular rate of `ϑ¹` in x⁰ at fixed `(x¹, x², x³)`, measured from the
/// coframe built out of the spinor: the unwrapped angle is sampled on
/// `samples` points over `[0, duration]` and fitted with a straight line.
/// Positive means counterclockwise in the `(x¹, x²)` plane.
pub fn measured_rotation_rate(label: &PlaneWaveLabel, x3: f64, duration: f64, samples: usize) -> Result<f64> {
    let xi = plane_wave_spinor(label);
    let mut ts = Vec::with_capacity(samples);
    let mut angles: Vec<f64> = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = duration * k as f64 / (samples - 1) as f64;
        let cd = coframe_of_spinor(&crate::sources::SpinorField::value(&xi, &[t, 0.3, -0.2, x3]))?;
        let raw = cd.theta[1][2].atan2(cd.theta[1][1]);
        let a = match angles.last() {
            Some(prev) => prev + wrap_pi(raw - prev),
            None => raw,
        };
        ts.push(t);
        angles.push(a);
    }
    Ok(slope(&ts, &angles))
}

fn wrap_pi(d: f64) -> f64 {
    (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Particle {
    Electron,
    Positron,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl std::fmt::Display for Particle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Particle::Electron => "electron",
            Particle::Positron => "positron",
        })
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Spin::Up => "up",
            Spin::Down => "down",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub r: Sign,
    pub s: Sign,
    pub particle: Particle,
    pub spin: Spin,
    pub energy: f64,
}

/// Electron if `ε < m` in the probe field `0 < A₀ < m`; spin up if the
/// free wave's `(ϑ¹, ϑ²)` turns counterclockwise in x⁰.
pub fn classify(label: &PlaneWaveLabel) -> Result<Classification> {
    if !(label.a0 > 0.0 && label.a0 < label.m) {
        return Err(Error::InvalidProbeField { a0: label.a0, m: label.m });
    }
    let eps = energy(label);
    let particle = if eps < label.m { Particle::Electron } else { Particle::Positron };
    let free = PlaneWaveLabel { a0: 0.0, ..*label };
    let period = std::f64::consts::PI / label.m;
    let rate = measured_rotation_rate(&free, 0.0, period, 64)?;
    let spin = if rate > 0.0 { Spin::Up } else { Spin::Down };
    Ok(Classification { r: label.r, s: label.s, particle, spin, energy: eps })
}

/// The four classifications in table order: (+,+), (+,−), (−,+), (−,−).
pub fn classification_table(m: f64, a0: f64) -> Result<Vec<Classification>> {
    PlaneWaveLabel::all(m, a0)?.iter().map(classify).collect()
}

/// Proper orthochronous boost of 1+2 Minkowski space with rapidity `chi`
/// along the direction at angle `phi` in the `(x¹, x²)` plane, acting on
/// lower-index covectors.
pub fn boost_matrix(chi: f64, phi: f64) -> [[f64; 3]; 3] {
    let (ch, sh) = (chi.cosh(), chi.sinh());
    let n = [phi.cos(), phi.sin()];
    let mut b = [[0.0; 3]; 3];
    b[0][0] = ch;
    for i in 0..2 {
        b[0][i + 1] = sh * n[i];
        b[i + 1][0] = sh * n[i];
        for j in 0..2 {
            b[i + 1][j + 1] = if i == j { 1.0 } else { 0.0 } + (ch - 1.0) * n[i] * n[j];
        }
    }
    b
}

/// A boosted solution of `D_rs η = 0` with constant `A = (A₀, A₁, A₂)`:
/// kinetic momentum `k = Λ(sm, 0, 0)`, canonical momentum `p = k − rA`, and
/// kernel spinor `ζ = (k₀ + sm, k₁ + ik₂)`, which has positive density.
pub fn boosted_wave(r: Sign, s: Sign, m: f64, a: &[f64; 3], chi: f64, phi: f64) -> PlaneWaveSpinor {
    let b = boost_matrix(chi, phi);
    let rest = [s.value() * m, 0.0, 0.0];
    let k: [f64; 3] = [0, 1, 2].map(|i| (0..3).map(|j| b[i][j] * rest[j]).sum());
    let zeta = Spinor::new(C64::new(k[0] + s.value() * m, 0.0), C64::new(k[1], k[2]));
    let scale = 1.0 / zeta.norm();
    PlaneWaveSpinor { zeta: zeta * scale, p: [k[0] - r.value() * a[0], k[1] - r.value() * a[1], k[2] - r.value() * a[2], 0.0], antiperiodic: false }
}

/// `‖p‖² = g^{αβ} p_α p_β` over the first three components.
pub fn minkowski_norm_sqr(p: &[f64]) -> f64 {
    (0..3).map(|a| METRIC[a] * p[a] * p[a]).sum()
}

/// Lattice spacing and sampled wavenumber that make a stencil see exactly
/// the continuum momentum `p` along one axis. With `θ = 2πk/n`, the stencil
/// derivative of `e^{−iθj}` is `−i S(θ)/h`, so `h = S(θ)/|p|` and the sampled
/// wave carries `θ/h` (sign of `p`). Axes with `p = 0` keep `default_h`.
pub fn resolved_axis(p: f64, n: usize, cycles: usize, stencil: Stencil, default_h: f64) -> (f64, f64) {
    if p == 0.0 {
        return (default_h, 0.0);
    }
    let theta = std::f64::consts::TAU * cycles as f64 / n as f64;
    let h = stencil.symbol(theta) / p.abs();
    (h, p.signum() * theta / h)
}

/// A periodic lattice and a sampled plane wave on which the stencil Dirac
/// operator vanishes identically. `cycles[a]` full periods fit on axis `a`.
pub fn lattice_resolved_wave(
    wave: &PlaneWaveSpinor,
    n: &[usize; 3],
    cycles: &[usize; 3],
    stencil: Stencil,
) -> Result<(LatticeSpec, PlaneWaveSpinor)> {
    let mut h = vec![0.0; 3];
    let mut p = [0.0; MAX_DIMS];
    for a in 0..3 {
        (h[a], p[a]) = resolved_axis(wave.p[a], n[a], cycles[a], stencil, 0.5);
    }
    let spec = LatticeSpec::new(n.to_vec(), h, vec![true; 3])?;
    Ok((spec, PlaneWaveSpinor { p, ..*wave }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_equations::{
        dirac_apply, discrete_variational_derivative, field_equation_residual_4d, field_equation_residual_reduced, theorem1_check, DensityKind,
        Verdict,
    };
    use crate::sources::{sample_spinor, JetSource, SpinorField};
    use crate::spinor::verify_coframe;
    use crate::variational::{max_finite_abs, ProbeSet};
    use std::f64::consts::{PI, TAU};

    fn labels() -> Vec<PlaneWaveLabel> {
        let mut v = PlaneWaveLabel::all(1.0, 0.0).unwrap().to_vec();
        v.extend(PlaneWaveLabel::all(1.3, 0.4).unwrap());
        v
    }

    #[test]
    fn spinor_values_and_antiperiodicity() {
        let l = PlaneWaveLabel::free(Sign::Plus, Sign::Plus, 1.0).unwrap();
        let xi = plane_wave_spinor(&l);
        assert_eq!(xi.value(&[0.0; 4]), Spinor::from_real(1.0, 0.0));
        for l in labels() {
            let xi = plane_wave_spinor(&l);
            let x = [0.3, 0.2, -0.5, 0.7];
            let shifted = [x[0], x[1], x[2], x[3] + PI / l.m];
            assert!((xi.value(&shifted) + xi.value(&x)).norm() < 1e-14);
            assert!((crate::spinor::density_of_spinor(&xi.value(&x)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_coframe_matches_spinor_coframe() {
        for l in labels() {
            let xi = plane_wave_spinor(&l);
            for k in 0..20 {
                let x = [0.37 * k as f64, 0.1, 0.2, -0.23 * k as f64];
                let a = plane_wave_coframe(&l, &x);
                let b = coframe_of_spinor(&xi.value(&x)).unwrap();
                assert!(verify_coframe(&a, 1e-12).pass);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((a.theta[i][j] - b.theta[i][j]).abs() < 1e-12);
                    }
                }
            }
        }
        let l = PlaneWaveLabel::free(Sign::Minus, Sign::Plus, 2.0).unwrap();
        assert_eq!(plane_wave_coframe(&l, &[0.0; 4]).theta, CoframeDensity::identity().theta);
        assert!((rotation_angle(&l, &[0.5, 0.0, 0.0, 0.25]) - 2.0 * 2.0 * (0.5 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn dispersion_examples() {
        for s in Sign::BOTH {
            let m = 1.0;
            assert_eq!(dispersion_matrix(s.value() * m, s, m), [[0.0, 0.0], [0.0, -2.0 * s.value() * m]]);
            assert!(matches!(dispersion_kernel(s.value() * m, s, m, 1e-12), DispersionKernel::Positive(_)));
            assert!(matches!(dispersion_kernel(-s.value() * m, s, m, 1e-12), DispersionKernel::Rejected(_)));
            assert_eq!(dispersion_kernel(0.0, s, m, 1e-12), DispersionKernel::Trivial);
        }
    }

    #[test]
    fn energies() {
        let e = |r, s, a0| energy(&PlaneWaveLabel::new(r, s, 1.0, a0).unwrap());
        assert_eq!(e(Sign::Plus, Sign::Plus, 0.0), 1.0);
        assert_eq!(e(Sign::Plus, Sign::Plus, 0.25), 0.75);
        assert_eq!(e(Sign::Plus, Sign::Minus, 0.25), 1.25);
    }

    #[test]
    fn measured_rate_is_twice_the_energy() {
        for l in labels() {
            for x3 in [0.0, 0.8] {
                let rate = measured_rotation_rate(&l, x3, 3.0, 200).unwrap();
                assert!((rate.abs() - 2.0 * energy(&l)).abs() < 1e-8, "{l:?}: {rate}");
            }
        }
    }

    #[test]
    fn table_layout() {
        use Particle::*;
        use Spin::*;
        let t = classification_table(1.0, 0.3).unwrap();
        let got: Vec<_> = t.iter().map(|c| (c.r, c.s, c.particle, c.spin)).collect();
        assert_eq!(
            got,
            vec![
                (Sign::Plus, Sign::Plus, Electron, Up),
                (Sign::Plus, Sign::Minus, Positron, Down),
                (Sign::Minus, Sign::Plus, Positron, Up),
                (Sign::Minus, Sign::Minus, Electron, Down),
            ]
        );
        for a0 in [0.01, 0.5, 0.99] {
            for c in classification_table(1.0, a0).unwrap() {
                assert_eq!(c.particle == Electron, c.r == c.s);
            }
        }
        let free = PlaneWaveLabel::free(Sign::Plus, Sign::Plus, 1.0).unwrap();
        assert!(matches!(classify(&free), Err(Error::InvalidProbeField { .. })));
        assert!(matches!(PlaneWaveLabel::new(Sign::Plus, Sign::Plus, 1.0, 1.0), Err(Error::InvalidProbeField { .. })));
    }

    #[test]
    fn plane_waves_solve_the_field_equations() {
        for l in labels() {
            let params = l.params();
            let spec4 = LatticeSpec::periodic_box(&[3, 3, 3, 4], &[TAU, TAU, TAU, PI / l.m]).unwrap();
            let res = field_equation_residual_4d(&JetSource::analytic(&spec4, &plane_wave_spinor(&l)), &params).unwrap();
            assert!(res.max_abs() < 1e-10);
            let spec3 = LatticeSpec::periodic_box(&[4, 3, 3], &[TAU, TAU, TAU]).unwrap();
            let eta = reduced_plane_wave(&l);
            let out = theorem1_check(&JetSource::analytic(&spec3, &eta), &params, l.r, 1e-9).unwrap();
            let expected = if l.s == Sign::Plus { Verdict::SolvesDPlus } else { Verdict::SolvesDMinus };
            assert_eq!(out.verdict, expected);
        }
    }

    #[test]
    fn boosted_waves_solve_dirac_and_field_equations() {
        let spec = LatticeSpec::periodic_box(&[3, 3, 3], &[TAU, TAU, TAU]).unwrap();
        for (k, (chi, phi)) in [(0.0, 0.0), (0.4, 1.0), (1.2, -2.5)].into_iter().enumerate() {
            let b = boost_matrix(chi, phi);
            for i in 0..3 {
                for j in 0..3 {
                    let g: f64 = (0..3).map(|a| METRIC[a] * b[a][i] * b[a][j]).sum();
                    assert!((g - METRIC[i] * if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
            for r in Sign::BOTH {
                for s in Sign::BOTH {
                    let a = [0.1 * k as f64, -0.2, 0.05];
                    let m = 0.9;
                    let wave = boosted_wave(r, s, m, &a, chi, phi);
                    let kin: Vec<f64> = (0..3).map(|i| wave.p[i] + r.value() * a[i]).collect();
                    assert!((minkowski_norm_sqr(&kin) + m * m).abs() < 1e-12);
                    let params = ModelParams::new(m, r, s, Potential::Constant(a)).unwrap();
                    let src = JetSource::analytic(&spec, &wave);
                    assert!(dirac_apply(&src, &params).unwrap().max_abs() < 1e-12);
                    let res = field_equation_residual_reduced(&src, &params, r).unwrap();
                    assert!(res.max_abs() < 1e-9, "{r:?} {s:?} {chi}: {}", res.max_abs());
                }
            }
        }
    }

    #[test]
    fn lattice_resolved_waves_are_discrete_solutions() {
        for stencil in [Stencil::Second, Stencil::Fourth] {
            for (r, s) in [(Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Minus), (Sign::Plus, Sign::Minus)] {
                let wave = boosted_wave(r, s, 1.0, &[0.0; 3], 0.5, 0.7);
                let (spec, sampled) = lattice_resolved_wave(&wave, &[8, 8, 8], &[1, 1, 1], stencil).unwrap();
                let params = ModelParams::new(1.0, r, s, Potential::zero()).unwrap();
                let field = sample_spinor(&spec, &sampled);
                let src = JetSource::stencil(&field, stencil).unwrap();
                assert!(dirac_apply(&src, &params).unwrap().max_abs() < 1e-12);
                let probes = ProbeSet::Points(vec![0, 77, 300]);
                for kind in [DensityKind::Dirac, DensityKind::Reduced] {
                    let g = discrete_variational_derivative(kind, &field, &params, &probes, stencil).unwrap();
                    assert!(max_finite_abs(&g) < 1e-6, "{kind:?}: {}", max_finite_abs(&g));
                }
            }
        }
    }
}
