//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use wildsim::diagnostics::{
    cf_distances, conservation_check, default_xi_grid, envelope_check, legendre_moment_checks, moment_decay_fit,
    representation_crosscheck, run_identity_suite, w_decay_fit, EnvelopeSettings, IdentitySettings, LegendreSettings,
    MomentSpec,
};
use wildsim::geometry::{collision_frames, fibonacci_directions, path_rotation_array, rotation_array, z_rotation};
use wildsim::kernel::{make_kernel, CollisionKernel, KernelSpec, Preset};
use wildsim::sampler::{conditional_cf, draw_tree_sample, make_datum, make_initial_datum, DatumSpec, Estimator};
use wildsim::tree::{enumerate_trees, sample_tree, McKeanTree};
use wildsim::weights::symmetric_function_bound;
use wildsim::{MonteCarlo, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn xabs() -> CollisionKernel {
    make_kernel(&KernelSpec::from(Preset::Xabs)).expect("2|x| kernel")
}

fn spectral() -> Result<Outcome> {
    let k = xabs();
    let lambda = k.lambda_b()?;
    let l4 = k.l_s(4.0)?;
    let mut ok = (lambda + 1.0 / 3.0).abs() <= 1e-9 && (l4 - 1.0 / 3.0).abs() <= 1e-9;
    let mut worst_l2: f64 = 0.0;
    for p in [Preset::Xabs, Preset::Cubic, Preset::SqrtW] {
        let l2 = make_kernel(&KernelSpec::from(p))?.l_s(2.0)?;
        worst_l2 = worst_l2.max((l2 - 0.5).abs());
    }
    ok &= worst_l2 <= 1e-9;
    Ok(Outcome {
        pass: ok,
        detail: format!("Λ_b = {lambda:.12}, l_4 = {l4:.12}, max |l_2 - 1/2| over 3 kernels = {worst_l2:.1e}"),
    })
}

fn identities() -> Result<Outcome> {
    let settings = IdentitySettings { times: vec![0.5, 1.0, 2.0, 3.0], ..IdentitySettings::default() };
    let report = run_identity_suite(&xabs(), &settings, &MonteCarlo::new(100_000, 11))?;
    let equalities = report.entries.iter().filter(|e| e.comparison == wildsim::diagnostics::Comparison::Equality);
    let max_z = equalities.map(|e| e.z_score.abs()).fold(0.0, f64::max);
    let failed = report.failures().count();
    Ok(Outcome {
        pass: report.passed(),
        detail: format!(
            "{} entries, {failed} failed, max |z| = {max_z:.2} (order-2/3 rates use 1 - 2f, 1 - 2g)",
            report.entries.len()
        ),
    })
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn small_n_laws() -> Result<Outcome> {
    let mut ok = true;
    let mut trees = 0;
    for n in 1..=6 {
        let mut chain: HashMap<McKeanTree, i64> = HashMap::new();
        let total = factorial(n - 1);
        for code in 0..total {
            let mut t = McKeanTree::leaf();
            let mut c = code;
            for m in 1..n as i64 {
                let k = (c % m) as usize + 1;
                c /= m;
                t = t.germinate(k)?;
            }
            *chain.entry(t).or_default() += 1;
        }
        let all = enumerate_trees(n)?;
        let mut sum = Rational64::from_integer(0);
        for t in &all {
            let p = t.probability_exact()?;
            sum += p;
            ok &= p == Rational64::new(chain.get(t).copied().unwrap_or(0), total);
        }
        ok &= sum == Rational64::from_integer(1) && chain.len() == all.len();
        trees += all.len();
    }
    Ok(Outcome { pass: ok, detail: format!("{trees} trees with n <= 6 match the germination chain exactly") })
}

fn geometry() -> Result<Outcome> {
    let k = xabs();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut orth, mut det, mut diff, mut shift): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=64);
        let tree = sample_tree(n, &mut rng)?;
        let phis: Vec<f64> = (1..n).map(|_| k.sample_phi(&mut rng)).collect();
        let thetas: Vec<f64> = (1..n).map(|_| rng.random::<f64>() * TAU).collect();
        let rec = rotation_array(&tree, &phis, &thetas)?;
        let path = path_rotation_array(&tree, &phis, &thetas)?;
        for (a, b) in rec.iter().zip(&path) {
            orth = orth.max(a.orthogonality_error());
            det = det.max((a.det() - 1.0).abs());
            diff = diff.max(a.max_abs_diff(b));
        }
    }
    for _ in 0..1000 {
        let phi = rng.random::<f64>() * FRAC_PI_2;
        let theta = rng.random::<f64>() * TAU;
        let alpha = rng.random::<f64>() * TAU;
        let (l0, r0) = collision_frames(phi, theta);
        let (l1, r1) = collision_frames(phi, (theta + alpha) % TAU);
        let rot = z_rotation(alpha);
        shift = shift.max((rot * l0).max_abs_diff(&l1)).max((rot * r0).max_abs_diff(&r1));
    }
    let worst = orth.max(det).max(diff).max(shift);
    Ok(Outcome {
        pass: worst <= 1e-12,
        detail: format!(
            "orthogonality {orth:.1e}, det {det:.1e}, recursive vs path {diff:.1e}, R(α) shift {shift:.1e}"
        ),
    })
}

fn legendre() -> Result<Outcome> {
    let report = legendre_moment_checks(&xabs(), &LegendreSettings::default(), &MonteCarlo::new(100_000, 5))?;
    Ok(Outcome {
        pass: report.passed(),
        detail: format!(
            "{} leaf checks over trees n <= 4, k = 1..3, max |z| = {:.2}",
            report.entries.len(),
            report.max_abs_z()
        ),
    })
}

fn crosscheck() -> Result<Outcome> {
    let mu0 = make_initial_datum(&DatumSpec::SixPoint)?;
    let report = representation_crosscheck(
        &mu0,
        &xabs(),
        &[0.5, 1.0, 2.0],
        &default_xi_grid(),
        Estimator::RaoBlackwell,
        &MonteCarlo::new(100_000, 6),
        4.0,
    )?;
    let max_z = report.points.iter().map(|p| p.z_re.abs().max(p.z_im.abs())).fold(0.0, f64::max);
    Ok(Outcome {
        pass: report.pass,
        detail: format!(
            "{:.1}% of {} (t, ξ) points within |z| <= 4, max |z| = {max_z:.2}",
            100.0 * report.pass_fraction,
            report.points.len()
        ),
    })
}

fn conservation() -> Result<Outcome> {
    let k = xabs();
    let six = make_initial_datum(&DatumSpec::SixPoint)?;
    let a = conservation_check(&six, &k, &[0.5, 1.0, 2.0, 4.0], &MonteCarlo::new(100_000, 7), 4.0)?;
    let shifted = make_datum(
        &DatumSpec::Gaussian { mean: [1.0, 0.0, 0.0], covariance: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] },
        false,
    )?;
    let b = conservation_check(&shifted, &k, &[1.0], &MonteCarlo::new(100_000, 8), 4.0)?;
    let max_z = a.moments.max_abs_z().max(b.moments.max_abs_z());
    let defect = a.max_collision_defect.max(b.max_collision_defect);
    Ok(Outcome {
        pass: a.pass && b.pass,
        detail: format!(
            "max |z| = {max_z:.2} over {} moments, max collision defect {defect:.1e} over {} collisions",
            a.moments.entries.len() + b.moments.entries.len(),
            a.collisions + b.collisions
        ),
    })
}

fn rates() -> Result<Outcome> {
    let k = xabs();
    let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let w = w_decay_fit(&k, &times, &MonteCarlo::new(100_000, 9))?;
    let w_rel = (w.fitted_rate / w.reference_rate - 1.0).abs();
    // Σ u_i^4 = 3/5 removes the cubic-harmonic part of the six-point excess.
    let a = 0.5 * 0.8f64.sqrt().asin();
    let spec = MomentSpec::Directional { direction: [a.cos(), a.sin(), 0.0] };
    let six = make_initial_datum(&DatumSpec::SixPoint)?;
    let m = moment_decay_fit(&six, &k, &times, &spec, &MonteCarlo::new(400_000, 10))?;
    let m_rel = (m.fitted_rate / m.reference_rate - 1.0).abs();
    Ok(Outcome {
        pass: w_rel <= 0.05 && m_rel <= 0.15,
        detail: format!(
            "E[W] rate {:.4} ({:.1}% off), fourth-moment rate {:.4} ({:.1}% off), target {:.4}",
            w.fitted_rate,
            100.0 * w_rel,
            m.fitted_rate,
            100.0 * m_rel,
            w.reference_rate
        ),
    })
}

fn gaussian_fixed_point() -> Result<Outcome> {
    let k = xabs();
    let mu0 = make_initial_datum(&DatumSpec::standard_gaussian())?;
    let dirs = fibonacci_directions(6);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 4.0] {
        for _ in 0..1000 {
            let s = draw_tree_sample(t, &k, &mut rng, 1_000_000)?;
            for i in 0..=8 {
                let rho = 0.5 * i as f64;
                for &u in &dirs {
                    let z = conditional_cf(&s, &mu0, rho, u)?;
                    worst = worst.max((z - (-0.5 * rho * rho).exp()).norm());
                }
            }
        }
    }
    let d = cf_distances(
        &mu0,
        &k,
        &[0.5, 1.0, 2.0, 4.0],
        &default_xi_grid(),
        Estimator::RaoBlackwell,
        &MonteCarlo::new(20_000, 13),
    )?;
    let d_max = d.iter().map(|p| p.distance).fold(0.0, f64::max);
    Ok(Outcome {
        pass: worst <= 1e-12 && d_max == 0.0,
        detail: format!("max |N̂ - e^(-ρ²/2)| = {worst:.1e}, max D(t) = {d_max}"),
    })
}

fn weight_vector(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e.powf(spread)
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn newton() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut sk_violations, mut product_checks, mut product_violations) = (0, 0, 0);
    for i in 0..10_000 {
        let (r, a_star, lo, hi) = match i % 3 {
            0 => (1, 0.5, 2, 64),
            1 => (2, 1.0 / 8.0, 9, 64),
            _ => (3, 1.0 / 48.0, 49, 400),
        };
        let a = loop {
            let n = rng.random_range(lo..=hi);
            let spread = rng.random_range(0.0..2.0);
            let a = weight_vector(&mut rng, n, spread);
            if a.iter().map(|x| x * x).sum::<f64>() <= a_star {
                break a;
            }
        };
        let report = symmetric_function_bound(&a, r, a_star)?;
        sk_violations += report.violations.len();
        if let Some(p) = report.product {
            product_checks += 1;
            product_violations += p.violations;
        }
    }
    Ok(Outcome {
        pass: sk_violations == 0 && product_violations == 0 && product_checks > 0,
        detail: format!(
            "10^4 vectors: {sk_violations} S_k violations, {product_violations} product-bound violations over {product_checks} grids"
        ),
    })
}

fn envelope() -> Result<Outcome> {
    let mu0 = make_initial_datum(&DatumSpec::standard_gaussian())?;
    let report = envelope_check(&mu0, &xabs(), &EnvelopeSettings::default(), &MonteCarlo::new(10_000, 15))?;
    Ok(Outcome {
        pass: report.pass,
        detail: format!(
            "{} violations in {} checks over {} samples, max |N̂|/Ψ = {:.4}",
            report.violations, report.checks, report.n_samples, report.max_ratio
        ),
    })
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("spectral oracle", spectral, Duration::from_secs(1)),
        ("identity suite", identities, Duration::from_secs(120)),
        ("exact small-n laws", small_n_laws, Duration::from_secs(10)),
        ("geometry", geometry, Duration::from_secs(10)),
        ("Legendre identities", legendre, Duration::from_secs(60)),
        ("representation cross-check", crosscheck, Duration::from_secs(300)),
        ("conservation", conservation, Duration::from_secs(60)),
        ("rate recovery", rates, Duration::from_secs(300)),
        ("Gaussian fixed point", gaussian_fixed_point, Duration::from_secs(30)),
        ("Newton bound", newton, Duration::from_secs(30)),
        ("envelope", envelope, Duration::from_secs(60)),
    ];
    let mut all = true;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(o) => (o.pass && elapsed <= *limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.2} s, limit {} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
