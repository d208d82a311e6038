use serde::Serialize;
use wildsim::diagnostics::{
    cf_distance_curve, conservation_check, envelope_check, legendre_moment_checks, moment_decay_fit,
    representation_crosscheck, run_identity_suite, weight_decay_fit, DecayFit, EnvelopeSettings, IdentityEntry,
    IdentitySettings, LegendreSettings, MomentSpec, WeightStatistic,
};
use wildsim::exec::map_batches;
use wildsim::kernel::{make_kernel, truncate, CollisionKernel, KernelFunctionals};
use wildsim::sampler::{cf_estimate_grid, check_time, make_datum, Estimator, InitialDatum, WildCascade};
use wildsim::{Execution, MonteCarlo};

use crate::config::{Command, RunConfig};
use crate::output::{num, opt, run_id, write_json, Report, Table};
use crate::CliError;

#[derive(Serialize)]
struct KernelInfo {
    #[serde(flatten)]
    functionals: KernelFunctionals,
    /// Mass of the truncated kernel; model times are multiplied by it.
    time_scale: f64,
}

struct Setup {
    kernel: CollisionKernel,
    info: KernelInfo,
    mu0: InitialDatum,
    mc: MonteCarlo,
    /// Times in units of the normalized kernel.
    times: Vec<f64>,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let spec = cfg.kernel.spec();
    let built = match cfg.truncate {
        Some(level) => truncate(&spec, level),
        None => make_kernel(&spec).map(|k| (k, 1.0)),
    };
    let (kernel, scale) = built.map_err(|e| CliError::Config(format!("kernel: {e}")))?;
    let functionals = kernel.functionals(&[1.0, 2.0, 3.0, 4.0])?;
    let mu0 = make_datum(&cfg.mu0, cfg.normalize).map_err(|e| CliError::Config(format!("mu0: {e}")))?;
    let execution = if cfg.workers == 1 { Execution::sequential() } else { Execution::parallel(cfg.workers) };
    let mc = MonteCarlo::new(cfg.n_samples, cfg.seed).with_execution(execution).with_n_max(cfg.n_max);
    let times: Vec<f64> = cfg.t_list.iter().map(|t| t * scale).collect();
    for &t in &times {
        check_time(t, cfg.n_max).map_err(|e| CliError::Config(format!("t = {t}: {e}")))?;
    }
    Ok(Setup { kernel, info: KernelInfo { functionals, time_scale: scale }, mu0, mc, times })
}

fn estimator(cfg: &RunConfig, mu0: &InitialDatum) -> Estimator {
    cfg.estimator.map(Estimator::from).unwrap_or_else(|| Estimator::default_for(mu0))
}

fn emit<E: Serialize>(cfg: &RunConfig, s: &Setup, pass: bool, entries: E, table: Table) -> Result<bool, CliError> {
    let report = Report {
        suite: cfg.command.name(),
        run_id: run_id(cfg)?,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        kernel: &s.info,
        pass,
        entries,
    };
    write_json(&report, cfg.out.as_deref())?;
    if let Some(path) = &cfg.csv {
        table.write_path(path)?;
    }
    Ok(pass)
}

fn identity_table(entries: &[IdentityEntry]) -> Table {
    let mut t = Table::new(&[
        "identity",
        "t",
        "parameters",
        "n",
        "mc_mean",
        "mc_se",
        "closed_form",
        "reference_source",
        "z_score",
        "pass",
    ]);
    for e in entries {
        let params: Vec<String> = e.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        t.push(vec![
            e.identity.clone(),
            opt(e.t),
            params.join(";"),
            e.n_samples.to_string(),
            num(e.mc_mean),
            num(e.mc_se),
            num(e.closed_form),
            serde_json::to_value(e.reference_source)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            num(e.z_score),
            e.pass.to_string(),
        ]);
    }
    t
}

#[derive(Serialize)]
struct NamedFit {
    name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    pass: bool,
}

fn decay(cfg: &RunConfig, s: &Setup) -> Result<bool, CliError> {
    let mut fits = Vec::new();
    for (name, stat) in [
        ("mean_w", WeightStatistic::W),
        ("sum_pi2_abs_zeta", WeightStatistic::Zeta),
        ("sum_abs_pi3_eta", WeightStatistic::Eta),
    ] {
        let fit = weight_decay_fit(&s.kernel, &s.times, stat, &s.mc)?;
        let pass = (fit.fitted_rate / fit.reference_rate - 1.0).abs() <= cfg.rate_tolerance;
        fits.push(NamedFit { name, fit: Some(fit), error: None, pass });
    }
    let spec = MomentSpec::Directional { direction: cfg.direction };
    match moment_decay_fit(&s.mu0, &s.kernel, &s.times, &spec, &s.mc.substream(100)) {
        Ok(fit) => {
            let pass = (fit.fitted_rate / fit.reference_rate - 1.0).abs() <= cfg.rate_tolerance;
            fits.push(NamedFit { name: "fourth_moment", fit: Some(fit), error: None, pass });
        }
        Err(e @ (wildsim::Error::InsufficientSignal { .. } | wildsim::Error::MomentUnavailable(_))) => {
            fits.push(NamedFit { name: "fourth_moment", fit: None, error: Some(e.to_string()), pass: false });
        }
        Err(e) => return Err(e.into()),
    }
    let mut table = Table::new(&["fit", "t", "value", "std_error", "used", "fitted_rate", "reference_rate"]);
    for f in &fits {
        if let Some(fit) = &f.fit {
            for i in 0..fit.times.len() {
                table.push(vec![
                    f.name.to_string(),
                    num(fit.times[i]),
                    num(fit.values[i]),
                    num(fit.std_errors[i]),
                    fit.used[i].to_string(),
                    num(fit.fitted_rate),
                    num(fit.reference_rate),
                ]);
            }
        }
    }
    let pass = fits.iter().all(|f| f.pass);
    emit(cfg, s, pass, &fits, table)
}

fn cfcurve(cfg: &RunConfig, s: &Setup) -> Result<bool, CliError> {
    let grid = cfg.xi_grid.frequencies();
    let (points, fit) = cf_distance_curve(&s.mu0, &s.kernel, &s.times, &grid, estimator(cfg, &s.mu0), &s.mc)?;
    // Non-increasing within noise.
    let pass = points.windows(2).all(|w| w[1].raw <= w[0].raw + cfg.z_threshold * w[0].std_error.hypot(w[1].std_error));
    let mut table = Table::new(&["t", "distance", "raw", "std_error", "xi_x", "xi_y", "xi_z"]);
    for p in &points {
        table.push(vec![
            num(p.t),
            num(p.distance),
            num(p.raw),
            num(p.std_error),
            num(p.worst_xi[0]),
            num(p.worst_xi[1]),
            num(p.worst_xi[2]),
        ]);
    }
    #[derive(Serialize)]
    struct Curve {
        points: Vec<wildsim::diagnostics::DistancePoint>,
        fit: Option<DecayFit>,
        fit_error: Option<String>,
    }
    let (fit, fit_error) = match fit {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    emit(cfg, s, pass, Curve { points, fit, fit_error }, table)
}

fn simulate(cfg: &RunConfig, s: &Setup) -> Result<bool, CliError> {
    let mut table = Table::new(&["t", "vx", "vy", "vz"]);
    for (ti, (&t, &t_model)) in cfg.t_list.iter().zip(&s.times).enumerate() {
        let mc = s.mc.substream(ti as u64);
        let batches = map_batches(mc.samples, mc.seed, mc.execution, |rng, count| {
            let mut cascade = WildCascade::default();
            (0..count).map(|_| cascade.sample(t_model, &s.mu0, &s.kernel, rng, mc.n_max)).collect::<Vec<_>>()
        });
        for v in batches.into_iter().flatten() {
            let v = v?;
            table.push(vec![num(t), num(v[0]), num(v[1]), num(v[2])]);
        }
    }
    match &cfg.csv {
        Some(path) => table.write_path(path)?,
        None => table.write_to(std::io::stdout().lock())?,
    }
    if let Some(path) = &cfg.out {
        let report = Report {
            suite: cfg.command.name(),
            run_id: run_id(cfg)?,
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            kernel: &s.info,
            pass: true,
            entries: table.rows.len(),
        };
        write_json(&report, Some(path))?;
    }
    Ok(true)
}

/// Runs the configured command. `Ok(false)` means a check failed.
pub fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    let s = setup(cfg)?;
    match cfg.command {
        Command::Identities => {
            let settings = IdentitySettings {
                times: s.times.clone(),
                a_star: cfg.a_star,
                z_threshold: cfg.z_threshold,
                ..IdentitySettings::default()
            };
            let r = run_identity_suite(&s.kernel, &settings, &s.mc)?;
            emit(cfg, &s, r.passed(), &r.entries, identity_table(&r.entries))
        }
        Command::Conserve => {
            let r = conservation_check(&s.mu0, &s.kernel, &s.times, &s.mc, cfg.z_threshold)?;
            emit(cfg, &s, r.pass, &r, identity_table(&r.moments.entries))
        }
        Command::Legendre => {
            let settings = LegendreSettings {
                max_leaves: cfg.max_leaves,
                z_threshold: cfg.z_threshold,
                ..LegendreSettings::default()
            };
            let r = legendre_moment_checks(&s.kernel, &settings, &s.mc)?;
            emit(cfg, &s, r.passed(), &r.entries, identity_table(&r.entries))
        }
        Command::Decay => decay(cfg, &s),
        Command::Cfcurve => cfcurve(cfg, &s),
        Command::Crosscheck => {
            let grid = cfg.xi_grid.frequencies();
            let est = estimator(cfg, &s.mu0);
            let r = representation_crosscheck(&s.mu0, &s.kernel, &s.times, &grid, est, &s.mc, cfg.z_threshold)?;
            let mut table = Table::new(&[
                "t",
                "xi_x",
                "xi_y",
                "xi_z",
                "rep_re",
                "rep_im",
                "rep_se_re",
                "rep_se_im",
                "wild_re",
                "wild_im",
                "wild_se_re",
                "wild_se_im",
                "z_re",
                "z_im",
                "pass",
            ]);
            for p in &r.points {
                let (a, b) = (&p.representation, &p.cascade);
                table.push(vec![
                    num(p.t),
                    num(p.xi[0]),
                    num(p.xi[1]),
                    num(p.xi[2]),
                    num(a.re),
                    num(a.im),
                    num(a.se_re),
                    num(a.se_im),
                    num(b.re),
                    num(b.im),
                    num(b.se_re),
                    num(b.se_im),
                    num(p.z_re),
                    num(p.z_im),
                    p.pass.to_string(),
                ]);
            }
            emit(cfg, &s, r.pass, &r, table)
        }
        Command::Envelope => {
            let mut reports = Vec::new();
            let mut table = Table::new(&["t", "lambda", "q", "samples", "checks", "violations", "max_ratio"]);
            for (i, &t) in s.times.iter().enumerate() {
                let settings = EnvelopeSettings { lambda: cfg.lambda, q: cfg.q, t, ..EnvelopeSettings::default() };
                let r = envelope_check(&s.mu0, &s.kernel, &settings, &s.mc.substream(i as u64))?;
                table.push(vec![
                    num(t),
                    num(cfg.lambda),
                    num(cfg.q),
                    r.n_samples.to_string(),
                    r.checks.to_string(),
                    r.violations.to_string(),
                    num(r.max_ratio),
                ]);
                reports.push(r);
            }
            let pass = reports.iter().all(|r| r.pass);
            emit(cfg, &s, pass, &reports, table)
        }
        Command::Cf => {
            let grid = cfg.xi_grid.frequencies();
            let est = estimator(cfg, &s.mu0);
            let mut all = Vec::new();
            let mut table = Table::new(&["t", "xi_x", "xi_y", "xi_z", "re", "im", "se_re", "se_im", "n"]);
            for (i, &t) in s.times.iter().enumerate() {
                for e in cf_estimate_grid(&grid, t, &s.mu0, &s.kernel, est, &s.mc.substream(i as u64))? {
                    table.push(vec![
                        num(e.t),
                        num(e.xi[0]),
                        num(e.xi[1]),
                        num(e.xi[2]),
                        num(e.re),
                        num(e.im),
                        num(e.se_re),
                        num(e.se_im),
                        e.n_samples.to_string(),
                    ]);
                    all.push(e);
                }
            }
            emit(cfg, &s, true, &all, table)
        }
        Command::Simulate => simulate(cfg, &s),
    }
}
