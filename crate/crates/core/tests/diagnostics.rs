use wildsim::diagnostics::{
    cf_distances, conservation_check, default_xi_grid, envelope_check, fit_log_linear, moment_decay_fit,
    representation_crosscheck, run_identity_suite, weight_decay_fit, EnvelopeSettings, IdentitySettings, MomentSpec,
    WeightStatistic,
};
use wildsim::geometry::dot;
use wildsim::kernel::{make_kernel, CollisionKernel, KernelSpec, Preset};
use wildsim::sampler::{make_datum, make_initial_datum, DatumSpec, Estimator};
use wildsim::{Error, MonteCarlo};

fn xabs() -> CollisionKernel {
    make_kernel(&KernelSpec::from(Preset::Xabs)).unwrap()
}

#[test]
fn identities_are_exact_at_time_zero() {
    let settings = IdentitySettings { times: vec![0.0], sizes: vec![], ..IdentitySettings::default() };
    let report = run_identity_suite(&xabs(), &settings, &MonteCarlo::new(2000, 1)).unwrap();
    for e in report.entries.iter().filter(|e| e.identity != "markov_w") {
        assert_eq!(e.mc_mean, 1.0, "{}", e.identity);
        assert_eq!(e.closed_form, 1.0, "{}", e.identity);
    }
    assert!(report.passed());
}

#[test]
fn identity_reference_for_fourth_powers() {
    let settings =
        IdentitySettings { times: vec![3.0], exponents: vec![2.0, 4.0], sizes: vec![], ..Default::default() };
    let report = run_identity_suite(&xabs(), &settings, &MonteCarlo::new(20_000, 2)).unwrap();
    let s4 = report.entries.iter().find(|e| e.identity == "sum_abs_pi_pow" && e.parameters["s"] == 4.0).unwrap();
    assert!((s4.closed_form - (-1.0f64).exp()).abs() < 1e-12);
    let s2 = report.entries.iter().find(|e| e.identity == "sum_abs_pi_pow" && e.parameters["s"] == 2.0).unwrap();
    assert!((s2.closed_form - 1.0).abs() < 1e-12);
    assert!(report.passed());
}

#[test]
fn other_kernels_pass_the_identity_suite() {
    for p in [Preset::Cubic, Preset::SqrtW, Preset::Spike { width: 0.3 }] {
        let k = make_kernel(&KernelSpec::from(p)).unwrap();
        let settings = IdentitySettings { times: vec![1.0, 2.0], sizes: vec![3], ..Default::default() };
        let report = run_identity_suite(&k, &settings, &MonteCarlo::new(50_000, 3)).unwrap();
        assert!(report.passed(), "{p:?}: {:?}", report.failures().collect::<Vec<_>>());
    }
}

#[test]
fn order_two_and_three_sums_decay_at_doubled_rates() {
    let k = xabs();
    let times = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    for stat in [WeightStatistic::Zeta, WeightStatistic::Eta] {
        let fit = weight_decay_fit(&k, &times, stat, &MonteCarlo::new(50_000, 4)).unwrap();
        assert!(fit.agrees(4.0 * fit.rate_std_error.max(0.01)), "{stat:?}: {fit:?}");
    }
    let f = k.f_b().unwrap();
    assert!((f - 29.0 / 108.0).abs() < 1e-10);
}

#[test]
fn shifted_gaussian_keeps_its_mean() {
    let mu0 = make_datum(
        &DatumSpec::Gaussian { mean: [1.0, 0.0, 0.0], covariance: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] },
        false,
    )
    .unwrap();
    let r = conservation_check(&mu0, &xabs(), &[1.0], &MonteCarlo::new(50_000, 5), 4.0).unwrap();
    assert!(r.pass, "{r:?}");
    let m0 = r.moments.entries.iter().find(|e| e.identity == "mean_velocity").unwrap();
    assert_eq!(m0.closed_form, 1.0);
    let energy = r.moments.entries.iter().find(|e| e.identity == "energy").unwrap();
    assert!((energy.closed_form - 4.0).abs() < 1e-12);
}

#[test]
fn gaussian_has_no_moment_signal() {
    let mu0 = make_initial_datum(&DatumSpec::standard_gaussian()).unwrap();
    let r = moment_decay_fit(&mu0, &xabs(), &[1.0, 2.0, 3.0, 4.0], &MomentSpec::default(), &MonteCarlo::new(20_000, 6));
    assert!(matches!(r, Err(Error::InsufficientSignal { .. })));
}

#[test]
fn six_point_has_no_fourth_moment_excess_along_an_axis() {
    let mu0 = make_initial_datum(&DatumSpec::SixPoint).unwrap();
    let r = moment_decay_fit(&mu0, &xabs(), &[1.0, 2.0, 3.0, 4.0], &MomentSpec::default(), &MonteCarlo::new(20_000, 6));
    assert!(matches!(r, Err(Error::InsufficientSignal { masked: 1, total: 1 })), "{r:?}");
}

#[test]
fn heavy_tail_has_no_fourth_moment() {
    let mu0 = make_initial_datum(&DatumSpec::HeavyTail { q: 3.5 }).unwrap();
    let r = moment_decay_fit(&mu0, &xabs(), &[1.0, 2.0, 3.0, 4.0], &MomentSpec::default(), &MonteCarlo::new(100, 6));
    assert!(matches!(r, Err(Error::MomentUnavailable(_))));
}

#[test]
fn distance_at_time_zero_is_the_initial_gap() {
    let mu0 = make_initial_datum(&DatumSpec::SixPoint).unwrap();
    let grid = default_xi_grid();
    let d = cf_distances(&mu0, &xabs(), &[0.0], &grid, Estimator::RaoBlackwell, &MonteCarlo::new(100, 7)).unwrap();
    let direct = grid.iter().map(|&xi| (mu0.cf(xi).unwrap().re - (-0.5 * dot(xi, xi)).exp()).abs()).fold(0.0, f64::max);
    assert!((d[0].raw - direct).abs() < 1e-14);
    assert!((d[0].distance - direct).abs() < 1e-11);
}

#[test]
fn six_point_distance_decreases() {
    let mu0 = make_initial_datum(&DatumSpec::SixPoint).unwrap();
    let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let d =
        cf_distances(&mu0, &xabs(), &times, &default_xi_grid(), Estimator::RaoBlackwell, &MonteCarlo::new(20_000, 8))
            .unwrap();
    let raw: Vec<f64> = d.iter().map(|p| p.raw).collect();
    let se: Vec<f64> = d.iter().map(|p| p.std_error).collect();
    for w in d.windows(2) {
        assert!(w[1].raw <= w[0].raw + 4.0 * w[0].std_error.hypot(w[1].std_error));
    }
    let fit = fit_log_linear(&times, &raw, &se, -1.0 / 3.0).unwrap();
    assert!(fit.fitted_rate <= -0.25, "{fit:?}");
}

#[test]
fn gaussian_crosscheck_is_exact_on_the_representation_side() {
    let mu0 = make_initial_datum(&DatumSpec::standard_gaussian()).unwrap();
    let r = representation_crosscheck(
        &mu0,
        &xabs(),
        &[0.0, 1.0],
        &default_xi_grid(),
        Estimator::RaoBlackwell,
        &MonteCarlo::new(20_000, 9),
        4.0,
    )
    .unwrap();
    assert!(r.pass);
    for p in &r.points {
        assert!((p.representation.re - (-0.5 * dot(p.xi, p.xi)).exp()).abs() < 1e-12);
    }
}

#[test]
fn envelope_premise_is_verified() {
    let mu0 = make_initial_datum(&DatumSpec::standard_gaussian()).unwrap();
    let ok = envelope_check(&mu0, &xabs(), &EnvelopeSettings::default(), &MonteCarlo::new(500, 10)).unwrap();
    assert!(ok.pass && ok.violations == 0);
    let doubled = EnvelopeSettings { q: 0.5, ..EnvelopeSettings::default() };
    assert!(matches!(
        envelope_check(&mu0, &xabs(), &doubled, &MonteCarlo::new(500, 10)),
        Err(Error::PremiseFailed { .. })
    ));
    let t0 = EnvelopeSettings { t: 0.0, ..EnvelopeSettings::default() };
    assert!(envelope_check(&mu0, &xabs(), &t0, &MonteCarlo::new(200, 11)).unwrap().pass);
}
