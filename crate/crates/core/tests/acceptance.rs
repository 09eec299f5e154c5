//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness; the process fails if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::{Duration, Instant};

use cosserat::error::Result;
use cosserat::field_equations::{
    discrete_variational_derivative, field_equation_residual_4d, field_equation_residual_reduced, theorem1_check, DensityKind, Verdict,
};
use cosserat::lagrangians::{dirac_lagrangian_point, factorization_point, lagrangian_reduced_point};
use cosserat::lattice::{LatticeSpec, Stencil};
use cosserat::lemma::{
    example_ode_residual, example_ode_residual_point, lagrangians_at, lemma_check, sample_vector, CVec, ExpScaled, ExpVector, FirstOrderOperator,
    LemmaVerdict, TrigVector,
};
use cosserat::params::{ModelParams, Sign};
use cosserat::plane_waves::{
    boosted_wave, classify, energy, lattice_resolved_wave, measured_rotation_rate, minkowski_norm_sqr, reduced_plane_wave, resolved_axis, Particle,
    PlaneWaveLabel, Spin,
};
use cosserat::sources::{
    base_wavenumbers, random_positive_spinor, rng_from_seed, sample_spinor, BandLimit, BandLimitedSpinor, JetSource, KkLift, PlaneWaveSpinor,
    Potential, Rescaled, SpinorField, TrigPoly,
};
use cosserat::spinor::{coframe_of_spinor, verify_coframe, C64};
use cosserat::torsion::{compare_torsion_routes, kk_decomposition_check};
use cosserat::variational::{max_finite_abs, ProbeSet};
use rand::Rng;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn box3(n: usize) -> LatticeSpec {
    LatticeSpec::periodic_box(&[n, n, n], &[TAU; 3]).unwrap()
}

fn box4(n: [usize; 4], m: f64) -> LatticeSpec {
    LatticeSpec::periodic_box(&n, &[TAU, TAU, TAU, PI / m]).unwrap()
}

fn random_eta(seed: u64) -> (BandLimitedSpinor, Potential) {
    let mut rng = rng_from_seed(seed);
    let k = [1.0, 1.0, 1.0, 0.0];
    let eta = BandLimitedSpinor::random(&mut rng, &k, &BandLimit::default());
    let pot = Potential::random(&mut rng, &k, &BandLimit { max_mode: 2, terms: 3, amplitude: 0.3 });
    (eta, pot)
}

/// The four plane waves at `A₀` plus twenty boosted waves with random
/// constant potentials.
fn plane_waves(m: f64, a0: f64) -> Vec<(PlaneWaveSpinor, ModelParams)> {
    let mut out: Vec<_> = PlaneWaveLabel::all(m, a0).unwrap().iter().map(|l| (reduced_plane_wave(l), l.params())).collect();
    let mut rng = rng_from_seed(2024);
    for i in 0..20 {
        let r = Sign::BOTH[i % 2];
        let s = Sign::BOTH[(i / 2) % 2];
        let a = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let wave = boosted_wave(r, s, m, &a, rng.gen_range(0.0..1.5), rng.gen_range(0.0..TAU));
        out.push((wave, ModelParams::new(m, r, s, Potential::Constant(a)).unwrap()));
    }
    out
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut worst = 0.0f64;
    let mut oriented = true;
    for _ in 0..10_000 {
        let c = verify_coframe(&coframe_of_spinor(&random_positive_spinor(&mut rng))?, 1e-12);
        worst = worst.max(c.metric_deviation).max(c.det_deviation);
        oriented &= c.theta00 > 0.0;
    }
    let t = start.elapsed();
    outcome(worst < 1e-12 && oriented && t < Duration::from_secs(1), format!("max deviation {worst:.2e}, {} ms", t.as_millis()))
}

fn criterion_2() -> Result<Outcome> {
    let start = Instant::now();
    let eta = BandLimitedSpinor::seeded(2, &[1.0, 1.0, 1.0, 0.0], &BandLimit { max_mode: 1, ..Default::default() });
    let coarse = compare_torsion_routes(&JetSource::sampled(&box3(32), &eta, Stencil::Second)?)?;
    let t32 = start.elapsed();
    let fine = compare_torsion_routes(&JetSource::sampled(&box3(64), &eta, Stencil::Second)?)?;
    let ratio = coarse.rms / fine.rms;
    let spec = box3(6);
    let mut analytic = 0.0f64;
    for (wave, _) in plane_waves(1.0, 0.25) {
        analytic = analytic.max(compare_torsion_routes(&JetSource::analytic(&spec, &wave))?.max_abs);
    }
    let pass = (ratio - 4.0).abs() <= 0.3 && analytic < 1e-10 && t32 < Duration::from_secs(10);
    outcome(pass, format!("rms ratio {ratio:.3}, plane waves {analytic:.2e}, 32^3 in {} ms", t32.as_millis()))
}

fn criterion_3() -> Result<Outcome> {
    let m = 1.0;
    let mut analytic = 0.0f64;
    let mut stencil = 0.0f64;
    for seed in 0..100 {
        let spec = box4([4; 4], m);
        let xi = BandLimitedSpinor::seeded(seed, &base_wavenumbers(&spec, 4), &BandLimit::default());
        let a = kk_decomposition_check(&JetSource::analytic(&spec, &xi))?;
        analytic = analytic.max(a.identity_residual).max(a.route_residual);
        let spec = box4([8; 4], m);
        let xi = BandLimitedSpinor::seeded(seed, &base_wavenumbers(&spec, 4), &BandLimit::default());
        stencil = stencil.max(kk_decomposition_check(&JetSource::sampled(&spec, &xi, Stencil::Second)?)?.identity_residual);
    }
    // Stencil route against the spinor formulas: observed order of the rms gap.
    let spec = box4([12, 12, 12, 8], m);
    let xi = BandLimitedSpinor::seeded(3, &base_wavenumbers(&spec, 4), &BandLimit { max_mode: 1, ..Default::default() });
    let c = kk_decomposition_check(&JetSource::sampled(&spec, &xi, Stencil::Second)?)?;
    let f = kk_decomposition_check(&JetSource::sampled(&box4([24, 24, 24, 16], m), &xi, Stencil::Second)?)?;
    let order = (c.route_rms / f.route_rms).log2();
    let pass = analytic < 1e-10 && stencil < 1e-10 && (order - 2.0).abs() <= 0.5;
    outcome(pass, format!("analytic {analytic:.2e}, stencil identity {stencil:.2e}, route order {order:.2}"))
}

fn criterion_4() -> Result<Outcome> {
    let start = Instant::now();
    let m = 1.0;
    let spec = box3(3);
    let mut worst = 0.0f64;
    for seed in 0..1000 {
        let (eta, pot) = random_eta(10_000 + seed);
        for idx in 0..spec.len() {
            let x = spec.position(idx);
            let (j, a) = (eta.jet(&x), pot.jet(&x).a);
            for r in Sign::BOTH {
                let res = factorization_point(&j, &a, m, r)?;
                let lr = lagrangian_reduced_point(&j, &a, m, r)?.spelled;
                worst = worst.max(res.abs() / (lr.abs() + (res - lr).abs()));
            }
        }
    }
    let t = start.elapsed();
    outcome(worst < 1e-10 && t < Duration::from_secs(10), format!("max relative residual {worst:.2e}, {} ms", t.as_millis()))
}

fn criterion_5() -> Result<Outcome> {
    let spec = box3(4);
    let mut fe = 0.0f64;
    let mut grad = 0.0f64;
    let mut shell = 0.0f64;
    for (wave, params) in plane_waves(1.0, 0.25) {
        let a = params.potential.jet(&[0.0; 4]).a;
        let kin: Vec<f64> = (0..3).map(|i| wave.p[i] + params.r.value() * a[i]).collect();
        shell = shell.max((minkowski_norm_sqr(&kin) + params.m * params.m).abs());
        fe = fe.max(field_equation_residual_reduced(&JetSource::analytic(&spec, &wave), &params, params.r)?.max_abs());
        let (lat, sampled) = lattice_resolved_wave(&wave, &[8, 8, 8], &[1, 1, 1], Stencil::Second)?;
        let field = sample_spinor(&lat, &sampled);
        let g = discrete_variational_derivative(DensityKind::Reduced, &field, &params, &ProbeSet::Interior, Stencil::Second)?;
        let k = params.m + a.iter().map(|v| v * v).sum::<f64>().sqrt() + wave.p[..3].iter().map(|v| v * v).sum::<f64>().sqrt();
        grad = grad.max(max_finite_abs(&g) / k.max(1.0).powi(2));
    }
    let pass = fe < 1e-9 && grad < 1e-6 && shell < 1e-12;
    outcome(pass, format!("field equation {fe:.2e}, scaled gradient {grad:.2e}, mass shell {shell:.2e}"))
}

fn criterion_6() -> Result<Outcome> {
    let spec = box3(3);
    let mut bad_t = 0;
    let mut bad_l = 0;
    for seed in 0..1000u64 {
        let (eta, pot) = random_eta(20_000 + seed);
        let r = Sign::BOTH[(seed % 2) as usize];
        let params = ModelParams::new(1.0, r, Sign::Plus, pot)?;
        if theorem1_check(&JetSource::analytic(&spec, &eta), &params, r, 1e-9)?.verdict == Verdict::Inconsistent {
            bad_t += 1;
        }
        let mut rng = rng_from_seed(30_000 + seed);
        let k = [1.0, 0.0, 0.0, 0.0];
        let mdim = 1 + (seed % 4) as usize;
        let line = LatticeSpec::new(vec![24], vec![TAU / 24.0], vec![true])?;
        let (op_p, op_m) = FirstOrderOperator::random_pair(&mut rng, 1, mdim, &k);
        let u = sample_vector(&line, &TrigVector::random(&mut rng, 1, mdim, &k, 0.5), mdim);
        if lemma_check(&op_p, &op_m, &u, Stencil::Second, 1e-6)?.verdict == LemmaVerdict::Inconsistent {
            bad_l += 1;
        }
    }
    outcome(bad_t == 0 && bad_l == 0, format!("inconsistent verdicts: theorem {bad_t}, lemma {bad_l}"))
}

fn criterion_7() -> Result<Outcome> {
    let m = 1.0;
    let spec3 = box3(4);
    let spec4 = box4([4, 4, 4, 3], m);
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let (eta, pot) = random_eta(40_000 + seed);
        for r in Sign::BOTH {
            let params = ModelParams::new(m, r, Sign::Plus, pot.clone())?;
            let res3 = field_equation_residual_reduced(&JetSource::analytic(&spec3, &eta), &params, r)?;
            let xi = KkLift { eta: eta.clone(), r, m };
            let res4 = field_equation_residual_4d(&JetSource::analytic(&spec4, &xi), &params)?;
            for idx in 0..spec4.len() {
                let c = spec4.coords(idx);
                let phase = C64::new(0.0, -r.value() * m * spec4.position(idx)[3]).exp();
                worst = worst.max((res4.spinor_at(idx) - res3.spinor_at(spec3.index(&c[..3])) * phase).norm());
            }
        }
    }
    outcome(worst < 1e-9, format!("max difference {worst:.2e}"))
}

fn criterion_8() -> Result<Outcome> {
    use Particle::*;
    use Spin::*;
    let expected = [(Electron, Up, 0.75), (Positron, Down, 1.25), (Positron, Up, 1.25), (Electron, Down, 0.75)];
    let mut ok = true;
    let mut worst = 0.0f64;
    for (l, (p, s, e)) in PlaneWaveLabel::all(1.0, 0.25)?.iter().zip(expected) {
        let c = classify(l)?;
        ok &= c.particle == p && c.spin == s;
        let half_rate = measured_rotation_rate(l, 0.3, 2.0 * PI, 300)?.abs() / 2.0;
        worst = worst.max((energy(l) - e).abs()).max((half_rate - e).abs());
    }
    outcome(ok && worst < 1e-8, format!("labels match: {ok}, max energy error {worst:.2e}"))
}

fn criterion_9() -> Result<Outcome> {
    let mut analytic = 0.0f64;
    for k in [1.0, -1.0] {
        for i in 0..100 {
            let u = C64::from_polar(1.0, k * 0.173 * i as f64);
            analytic = analytic.max(example_ode_residual_point(u, u * C64::new(0.0, k), -u * k * k).norm());
        }
    }
    let dense = LatticeSpec::new(vec![16_384], vec![TAU / 16_384.0], vec![true])?;
    let mut stencil = 0.0f64;
    for k in [1.0, -1.0] {
        let u = sample_vector(&dense, &ExpVector { amp: CVec::from_element(1, C64::new(1.0, 0.0)), k: vec![k] }, 1);
        stencil = stencil.max(example_ode_residual(&u, Stencil::Second)?.max_abs());
    }
    let (op_p, op_m) = (FirstOrderOperator::example(1.0), FirstOrderOperator::example(-1.0));
    let (h, k) = resolved_axis(1.0, 32, 1, Stencil::Fourth, 0.1);
    let line = LatticeSpec::new(vec![32], vec![h], vec![true])?;
    let wave = |k: f64| sample_vector(&line, &ExpVector { amp: CVec::from_element(1, C64::new(1.0, 0.0)), k: vec![k] }, 1);
    let plus = lemma_check(&op_p, &op_m, &wave(k), Stencil::Fourth, 1e-6)?.verdict;
    let minus = lemma_check(&op_p, &op_m, &wave(-k), Stencil::Fourth, 1e-6)?.verdict;
    let branches = plus == LemmaVerdict::SolvesAPlus && minus == LemmaVerdict::SolvesAMinus;
    outcome(
        analytic < 1e-12 && stencil < 1e-6 && branches,
        format!("analytic {analytic:.2e}, dense stencil {stencil:.2e}, branches {plus:?}/{minus:?}"),
    )
}

fn criterion_10() -> Result<Outcome> {
    let m = 1.0;
    let spec = box3(3);
    let k2 = [1.0, 1.0, 0.0, 0.0];
    let mut worst = 0.0f64;
    let rel = |scaled: f64, f: f64, base: f64| (scaled - f * base).abs() / scaled.abs().max(1.0);
    for seed in 0..100u64 {
        let (eta, pot) = random_eta(50_000 + seed);
        let mut rng = rng_from_seed(60_000 + seed);
        let h = TrigPoly::random(&mut rng, &[1.0, 1.0, 1.0, 0.0], 2, 3, 0.8);
        let scaled = Rescaled { inner: eta.clone(), h: h.clone(), c: C64::new(1.0, 0.0) };
        for idx in 0..spec.len() {
            let x = spec.position(idx);
            let f = (2.0 * h.eval(&x)).exp();
            let (j, js, a) = (eta.jet(&x), scaled.jet(&x), pot.jet(&x).a);
            for r in Sign::BOTH {
                let (l, ls) = (lagrangian_reduced_point(&j, &a, m, r)?.spelled, lagrangian_reduced_point(&js, &a, m, r)?.spelled);
                worst = worst.max(rel(ls, f, l));
                for s in Sign::BOTH {
                    worst = worst.max(rel(dirac_lagrangian_point(&js, &a, m, r, s).0, f, dirac_lagrangian_point(&j, &a, m, r, s).0));
                }
            }
        }
        let (op_p, op_m) = FirstOrderOperator::random_pair(&mut rng, 2, 2, &k2);
        let u = TrigVector::random(&mut rng, 2, 2, &k2, 0.4);
        let hu = TrigPoly::random(&mut rng, &k2, 2, 3, 0.8);
        let su = ExpScaled { inner: u.clone(), h: hu.clone() };
        for t in 0..5 {
            let x = [0.7 * t as f64, -0.4 * t as f64, 0.0, 0.0];
            let f = (2.0 * hu.eval(&x)).exp();
            let (a, b) = (lagrangians_at(&op_p, &op_m, &u, &x)?, lagrangians_at(&op_p, &op_m, &su, &x)?);
            for i in 0..3 {
                worst = worst.max(rel(b[i], f, a[i]));
            }
        }
    }
    outcome(worst < 1e-12, format!("max relative deviation {worst:.2e}"))
}

fn criterion_11() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let start = Instant::now();
    let mut files = Vec::new();
    let mut codes = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_cosserat"))
            .args(["run", "all", "--m", "1", "--grid", "24", "--seed", "7", "--out"])
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()?;
        codes.push(status.code());
        files.push(std::fs::read(&path)?);
    }
    let per_run = start.elapsed() / 2;
    let identical = files[0] == files[1];
    let all_pass = codes.iter().all(|c| *c == Some(0));
    outcome(
        identical && all_pass && per_run < Duration::from_secs(120),
        format!("identical: {identical}, exit codes {codes:?}, {:.1} s per run", per_run.as_secs_f64()),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("coframe correspondence", criterion_1),
        ("two-route torsion", criterion_2),
        ("KK decomposition", criterion_3),
        ("factorization", criterion_4),
        ("field equations forward", criterion_5),
        ("never inconsistent", criterion_6),
        ("separation of variables", criterion_7),
        ("classification table", criterion_8),
        ("first-order example", criterion_9),
        ("scaling covariance", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("{} criterion {:2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
