//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

mod common;

use std::time::{Duration, Instant};

use jetconv::envelope::{brute_force_oracle, build_envelope, DomainBox, EnvelopeModel, Generator};
use jetconv::extension::{build_extension, empirical_lipschitz, verify_extension, Choice, ExtensionConfig, ExtensionModel};
use jetconv::{c1, jet, Jet, Modulus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run(number: usize, title: &str, limit: Option<Duration>, body: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = body();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed <= l);
    let pass = v.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / limit {:.0} s", l.as_secs_f64()));
    println!(
        "criterion {number} [{title}]: {} ({}; {:.2} s{budget})",
        if pass { "pass" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let jet = Jet::from_scalars(&[-1.0, 1.0], &[1.0 / (1.0 + alpha); 2], &[-1.0, 1.0]).unwrap();
        let m = Modulus::holder(alpha).unwrap();
        let a = jet::compute_a_intrinsic(&jet, &m).unwrap().value;
        let lip = jet::lip_omega_g(&jet, &m);
        let expected_a = 2.0 / (1.0 + 1.0 / alpha).powf(alpha);
        let expected_lip = 2f64.powf(1.0 - alpha);
        let expected_ratio = ((1.0 + alpha) / (2.0 * alpha)).powf(alpha);
        worst = worst.max((a - expected_a).abs()).max((lip - expected_lip).abs()).max((lip / a - expected_ratio).abs());
    }
    verdict(worst <= 1e-9, format!("max deviation {worst:.2e}"))
}

fn criterion_2() -> Verdict {
    let ts: Vec<f64> = (0..401).map(|k| -2.0 + 4.0 * k as f64 / 400.0).collect();
    let values: Vec<f64> = ts.iter().map(|t| 2.0 / 3.0 * t.abs().powf(1.5)).collect();
    let slopes: Vec<f64> = ts.iter().map(|t| t.signum() * t.abs().sqrt()).collect();
    let jet = Jet::from_scalars(&ts, &values, &slopes).unwrap();
    let m = Modulus::holder(0.5).unwrap();
    let a = jet::compute_a_intrinsic(&jet, &m).unwrap().value;
    let lip = jet::lip_omega_g(&jet, &m);
    let lower = (4.0f64 / 3.0).sqrt() - 1e-3;
    let pass = (lower..=1.3076).contains(&a) && (lip - 2f64.sqrt()).abs() <= 1e-9;
    verdict(pass, format!("A = {a:.6}, lip = {lip:.12}"))
}

fn criterion_3() -> Verdict {
    let results: Vec<(f64, f64)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(3_000 + i);
            let d = 1 + (i % 3) as usize;
            let n = rng.gen_range(2..=8);
            let points = spread_points(&mut rng, n, d, 1.5, 0.05);
            let m = coercive_modulus(&mut rng);
            let jet = if rng.gen_bool(0.7) { psi_sum_jet(&mut rng, &m, points) } else { quadratic_jet(&mut rng, points) };
            let a = jet::compute_a_intrinsic(&jet, &m).unwrap().value;
            let b = jet::compute_a_extrinsic(&jet, &m);
            ((a - b).abs() / (1.0 + a), a)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let finite = results.iter().all(|r| r.1.is_finite());
    verdict(worst <= 1e-5 && finite, format!("500 jets, max |A_int - A_ext|/(1+A) = {worst:.2e}"))
}

struct SuiteRun {
    modulus: Modulus,
    model: ExtensionModel,
    interpolation: f64,
    gradient: f64,
    empirical_a: f64,
    empirical_lip_grad: f64,
    empirical_lip_fl: f64,
}

/// Independent multipliers: `K` for `A(F, ∇F)` and `K·c` for `lip_ω(∇F)`.
fn theorem_factors(m: &Modulus) -> (f64, f64) {
    match m.holder_exponent() {
        Some(alpha) => {
            let k = 2f64.powf(1.0 - alpha);
            (k, k * ((1.0 + alpha) / (2.0 * alpha)).powf(alpha))
        }
        None => (2.0, 8.0 / 3.0),
    }
}

fn extension_suite() -> Vec<SuiteRun> {
    let moduli = suite_moduli();
    (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(4_000 + i);
            let modulus = moduli[i as usize % moduli.len()].clone();
            let n = rng.gen_range(2..=8);
            let points = spread_points(&mut rng, n, 1, 1.5, 0.05);
            let jet = psi_sum_jet(&mut rng, &modulus, points);
            let diam = jet.diameter();
            let (lo, hi) = jet.bounding_box()[0];
            let margin = 2.0 * diam.max(0.5);
            let domain = DomainBox::new(vec![lo - margin], vec![hi + margin]).unwrap();
            let cfg = ExtensionConfig::new(modulus.clone()).with_lipschitz(Choice::Auto).with_domain(domain).with_resolution(4001);
            let model = build_extension(&jet, cfg).unwrap();
            let report = verify_extension(&model, 10_000, i);
            let empirical_lip_fl = empirical_lipschitz(&model, 10_000, 7 + i);
            SuiteRun {
                modulus,
                interpolation: report.interpolation_max_error,
                gradient: report.gradient_max_error,
                empirical_a: report.empirical_a,
                empirical_lip_grad: report.empirical_lip_omega_grad_f,
                empirical_lip_fl,
                model,
            }
        })
        .collect()
}

fn criterion_4(suite: &[SuiteRun]) -> Verdict {
    let mut failures = 0;
    let (mut worst_interp, mut worst_grad) = (0.0f64, 0.0f64);
    for run in suite {
        let m = run.model.m();
        let s = run.model.spacing();
        let interp_bound = 10.0 * m * s * run.modulus.omega(s).unwrap();
        let grad_bound = 5e-2 * (1.0 + m);
        let scale = run.model.jet().values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if run.interpolation > interp_bound + 1e-12 * scale || run.gradient > grad_bound {
            failures += 1;
        }
        worst_interp = worst_interp.max(run.interpolation / (interp_bound + 1e-12 * scale));
        worst_grad = worst_grad.max(run.gradient / grad_bound);
    }
    verdict(
        failures == 0,
        format!("{} jets, {failures} failures, worst interpolation/bound {worst_interp:.3}, worst gradient/bound {worst_grad:.3}", suite.len()),
    )
}

fn criterion_5(suite: &[SuiteRun]) -> Verdict {
    let mut violations = 0;
    let (mut worst_a, mut worst_lip) = (0.0f64, 0.0f64);
    for run in suite {
        let (ka, kl) = theorem_factors(&run.modulus);
        let m = run.model.m();
        if m == 0.0 {
            continue;
        }
        let ra = run.empirical_a / (ka * m);
        let rl = run.empirical_lip_grad / (kl * m);
        worst_a = worst_a.max(ra);
        worst_lip = worst_lip.max(rl);
        if ra > 1.05 || rl > 1.05 {
            violations += 1;
        }
    }
    let alpha_one = theorem_factors(&Modulus::holder(1.0).unwrap()) == (1.0, 1.0);
    verdict(
        violations == 0 && alpha_one,
        format!("{violations} violations, worst A(F)/(K M) {worst_a:.4}, worst lip(gradF)/(K c M) {worst_lip:.4}"),
    )
}

fn criterion_6(suite: &[SuiteRun]) -> Verdict {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for run in suite {
        let l = run.model.lipschitz().unwrap();
        let band = 5e-3 * (1.0 + l);
        let lip = run.empirical_lip_fl;
        worst = worst.max((lip - l).abs() / band);
        if (lip - l).abs() > band || lip > l * (1.0 + 5e-3) {
            failures += 1;
        }
    }
    let parabola = Jet::from_scalars(&[0.0], &[0.0], &[0.0]).unwrap();
    let gen = Generator::new(parabola, Modulus::linear(), 1.0).unwrap();
    let huber = build_envelope(gen, DomainBox::new(vec![-3.0], vec![3.0]).unwrap(), 4001).unwrap();
    let at_two = huber.eval_lipschitz(1.0, &[2.0]).unwrap();
    let huber_ok = (at_two - 1.5).abs() <= 5e-3;
    verdict(
        failures == 0 && huber_ok,
        format!("{failures} failures, worst |lip - L|/band {worst:.3}; Huber F_L(2) = {at_two:.6}"),
    )
}

fn criterion_7() -> Verdict {
    let rows: Vec<(usize, f64, usize)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i);
            let d = if i < 10 { 1 } else { 2 };
            let modulus = coercive_modulus(&mut rng);
            let n = rng.gen_range(2..=6);
            let points = spread_points(&mut rng, n, d, 1.0, 0.1);
            let jet = psi_sum_jet(&mut rng, &modulus, points);
            let a = jet::compute_a_intrinsic(&jet, &modulus).unwrap().value;
            let m = a * rng.gen_range(1.0..2.0) + 0.1;
            let domain = DomainBox::new(vec![-2.0; d], vec![2.0; d]).unwrap();
            let gen = Generator::new(jet, modulus, m).unwrap();
            let model = build_envelope(gen.clone(), domain.clone(), if d == 1 { 4001 } else { 129 }).unwrap();
            let mut fails = 0;
            let mut worst = 0.0f64;
            for q in 0..25u64 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect();
                let env = model.eval(&x).unwrap();
                let oracle = brute_force_oracle(&gen, &domain, &x, 100_000, 100 * i + q).unwrap();
                let tol = 5e-3 * (1.0 + gen.eval_g(&x).abs());
                worst = worst.max((env - oracle).abs() / tol);
                if (env - oracle).abs() > tol {
                    fails += 1;
                }
            }
            (d, worst, fails)
        })
        .collect();
    let fails: usize = rows.iter().map(|r| r.2).sum();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    verdict(fails == 0, format!("20 generators x 25 queries, {fails} failures, worst deviation/tol {worst:.3}"))
}

/// `λH(x + (1-λ)h) + (1-λ)H(x - λh) - H(x)`.
fn second_difference(h_fn: impl Fn(&[f64]) -> f64, x: &[f64], h: &[f64], lambda: f64) -> f64 {
    let plus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + (1.0 - lambda) * b).collect();
    let minus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a - lambda * b).collect();
    lambda * h_fn(&plus) + (1.0 - lambda) * h_fn(&minus) - h_fn(x)
}

fn psi_inequality_violations(m: &Modulus, d: usize, seed: u64) -> usize {
    let k = smoothness_k(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10_000)
        .filter(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lambda = rng.gen_range(0.0..1.0);
            let lhs = second_difference(|v| psi(m, v).0, &z, &h, lambda);
            let rhs = k * lambda * (1.0 - lambda) * m.phi(norm(&h)).unwrap();
            lhs > rhs + 1e-12 * (1.0 + psi(m, &z).0)
        })
        .count()
}

/// Triples `(x, h, λ)` whose three points lie in the inner half of the box.
fn envelope_violations(model: &EnvelopeModel, bound: impl Fn(f64, f64) -> f64 + Sync, lipschitz: Option<f64>, triples: usize, seed: u64) -> usize {
    let d = model.dimension();
    let lo = model.domain().lo().to_vec();
    let hi = model.domain().hi().to_vec();
    (0..triples)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let quarter: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.25 * (b - a)).collect();
            let x: Vec<f64> = (0..d).map(|k| rng.gen_range(lo[k] + quarter[k]..hi[k] - quarter[k])).collect();
            let h: Vec<f64> = (0..d).map(|k| rng.gen_range(-quarter[k]..quarter[k])).collect();
            let lambda = rng.gen_range(0.0..1.0);
            let eval = |p: &[f64]| match lipschitz {
                Some(l) => model.eval_lipschitz(l, p).unwrap(),
                None => model.eval(p).unwrap(),
            };
            second_difference(eval, &x, &h, lambda) > bound(norm(&h), lambda)
        })
        .count()
}

fn criterion_8() -> Verdict {
    let mut psi_fail = 0;
    for (i, m) in suite_moduli().iter().enumerate() {
        for d in 1..=3 {
            psi_fail += psi_inequality_violations(m, d, 8_000 + 10 * i as u64 + d as u64);
        }
    }

    let mut env_fail = 0;
    let mut checked = 0;
    for (i, modulus) in suite_moduli().into_iter().enumerate() {
        for d in [1usize, 2] {
            let mut rng = ChaCha8Rng::seed_from_u64(8_100 + 10 * i as u64 + d as u64);
            let n = rng.gen_range(2..=5);
            let points = spread_points(&mut rng, n, d, 1.0, 0.1);
            let jet = psi_sum_jet(&mut rng, &modulus, points);
            let a = jet::compute_a_intrinsic(&jet, &modulus).unwrap().value;
            let l = jet::sup_norm_g(&jet);
            let domain = DomainBox::new(vec![-3.0; d], vec![3.0; d]).unwrap();
            let gen = Generator::new(jet, modulus.clone(), a).unwrap();
            let model = build_envelope(gen, domain, if d == 1 { 4001 } else { 65 }).unwrap().with_lipschitz_cap(l);
            let spacing = model.grid().max_spacing();
            let k = smoothness_k(&modulus);
            let slack = 10.0 * a * spacing * modulus.omega(spacing).unwrap() + 1e-9;
            let bound = |r: f64, lambda: f64| k * a * lambda * (1.0 - lambda) * modulus.phi(r).unwrap() + slack;
            env_fail += envelope_violations(&model, bound, None, 10_000, 8_200 + i as u64);
            env_fail += envelope_violations(&model, bound, Some(l), 10_000, 8_300 + i as u64);
            checked += 20_000;
        }
    }
    verdict(
        psi_fail == 0 && env_fail == 0,
        format!("psi: 150000 triples, {psi_fail} violations; envelopes: {checked} triples, {env_fail} violations"),
    )
}

/// A convex `C¹` function on the line with its derivative.
fn convex_c1(kind: usize, a: f64, c: f64) -> (Box<dyn Fn(f64) -> f64 + Sync>, Box<dyn Fn(f64) -> f64 + Sync>) {
    match kind {
        0 => (Box::new(move |t| a * (t - c).powi(2) / 2.0), Box::new(move |t| a * (t - c))),
        1 => (Box::new(move |t| a * ((t - c).cosh()).ln()), Box::new(move |t| a * (t - c).tanh())),
        2 => (Box::new(move |t| a * (1.0 + (t - c).exp()).ln()), Box::new(move |t| a / (1.0 + (c - t).exp()))),
        3 => (
            Box::new(move |t| a * (t - c).abs().powf(1.5)),
            Box::new(move |t| 1.5 * a * (t - c).signum() * (t - c).abs().sqrt()),
        ),
        _ => (
            Box::new(move |t| {
                let u = (t - c).abs();
                a * if u <= 1.0 { u * u / 2.0 } else { u - 0.5 }
            }),
            Box::new(move |t| a * (t - c).clamp(-1.0, 1.0)),
        ),
    }
}

fn criterion_9() -> Verdict {
    let rows: Vec<(bool, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9_000 + i);
            let (f, g) = convex_c1(i as usize % 5, rng.gen_range(0.3..2.0), rng.gen_range(-0.5..0.5));
            let n = rng.gen_range(21..=101);
            let ts: Vec<f64> = (0..n).map(|k| -2.0 + 4.0 * k as f64 / (n - 1) as f64).collect();
            let jet = Jet::from_scalars(&ts, &ts.iter().map(|&t| f(t)).collect::<Vec<_>>(), &ts.iter().map(|&t| g(t)).collect::<Vec<_>>()).unwrap();
            let alpha = [0.25, 0.5, 0.75, 1.0][i as usize % 4];
            let built = c1::build_delta_and_omega(&jet, alpha, None).unwrap();
            let clean = built.check_invariants().is_clean();
            let l = jet::sup_norm_g(&jet);
            let cap = 2.0 * (2.0 * l).powf(1.0 - alpha);
            let a = built.a_for(&jet);
            (clean && a <= cap + 1e-6 && built.m == cap, a / cap)
        })
        .collect();
    let failures = rows.iter().filter(|r| !r.0).count();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    verdict(failures == 0, format!("50 jets, {failures} failures, worst A/(2(2L)^(1-alpha)) {worst:.4}"))
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;
    all &= run(1, "symmetric power sharpness", Some(secs(1)), criterion_1);
    all &= run(2, "Hölder gap on a dense grid", Some(secs(5)), criterion_2);
    all &= run(3, "intrinsic and extrinsic A agree", Some(secs(60)), criterion_3);
    let start = Instant::now();
    let suite = extension_suite();
    let build = start.elapsed();
    all &= run(4, "interpolation and gradients", Some(secs(120).saturating_sub(build)), || criterion_4(&suite));
    all &= run(5, "theorem bounds", None, || criterion_5(&suite));
    all &= run(6, "sharp Lipschitz constant", None, || criterion_6(&suite));
    println!("  (suite of criteria 4 to 6 built and verified in {:.2} s)", build.as_secs_f64());
    all &= run(7, "envelope matches brute force", Some(secs(120)), criterion_7);
    all &= run(8, "uniform smoothness", None, criterion_8);
    all &= run(9, "constructed modulus", Some(secs(60)), criterion_9);
    if !all {
        std::process::exit(1);
    }
}
