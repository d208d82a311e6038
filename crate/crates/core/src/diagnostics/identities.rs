use crate::diagnostics::report::{Comparison, IdentityEntry, IdentityReport, ReferenceSource};
use crate::exec::{try_reduce_batches, MonteCarlo, Summary};
use crate::kernel::CollisionKernel;
use crate::sampler::{check_time, LeafWeights};
use crate::weights::{expected_sum, power_sum};
use crate::Result;

/// Parameters of [`run_identity_suite`] beyond the Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySettings {
    pub times: Vec<f64>,
    /// Exponents `s` for `E[Σ|π|^s]`.
    pub exponents: Vec<f64>,
    /// Tree sizes for the conditional `E[Σ|π|^s | ν = n]` checks.
    pub sizes: Vec<usize>,
    /// Threshold of the Markov bound `P(W >= a*) <= E[W] / a*`.
    pub a_star: f64,
    pub z_threshold: f64,
}

impl Default for IdentitySettings {
    fn default() -> Self {
        IdentitySettings {
            times: vec![0.5, 1.0, 2.0, 4.0],
            exponents: vec![1.0, 2.0, 3.0, 4.0],
            sizes: vec![2, 3, 5, 8],
            a_star: 0.5,
            z_threshold: 4.0,
        }
    }
}

const EXTRA: usize = 5;

/// Checks the weight identities against closed forms built from the kernel
/// functionals: power sums of `π`, the order-2 and order-3 sums, `E[W]`,
/// `Σπ² = 1` and the Markov bound on `W`.
pub fn run_identity_suite(
    kernel: &CollisionKernel,
    settings: &IdentitySettings,
    mc: &MonteCarlo,
) -> Result<IdentityReport> {
    let fs = kernel.functionals(&settings.exponents)?;
    let z = settings.z_threshold;
    let mut report = IdentityReport::new("identities", z);
    let ns = settings.exponents.len();

    for (ti, &t) in settings.times.iter().enumerate() {
        check_time(t, mc.n_max)?;
        let mc_t = mc.substream(ti as u64);
        let a_star = settings.a_star;
        let acc: Vec<Summary> = try_reduce_batches(mc_t.samples, mc_t.seed, mc_t.execution, |rng, count| {
            let mut acc = vec![Summary::default(); ns + EXTRA];
            let mut lw = LeafWeights::default();
            for _ in 0..count {
                lw.draw(t, kernel, rng, mc_t.n_max)?;
                for (i, &s) in settings.exponents.iter().enumerate() {
                    acc[i].push(power_sum(&lw.pi, s));
                }
                let w = power_sum(&lw.pi, 4.0);
                let zeta: f64 = lw.pi.iter().zip(&lw.zeta).map(|(p, z)| p * p * z.abs()).sum();
                let eta: f64 = lw.pi.iter().zip(&lw.eta).map(|(p, e)| (p * p * p * e).abs()).sum();
                acc[ns].push(zeta);
                acc[ns + 1].push(eta);
                acc[ns + 2].push(w);
                acc[ns + 3].push(lw.pi.iter().map(|p| p * p).sum());
                acc[ns + 4].push(if w >= a_star { 1.0 } else { 0.0 });
            }
            Ok(acc)
        })?;

        for (i, &s) in settings.exponents.iter().enumerate() {
            let l = fs.l(s).expect("requested exponent");
            report.entries.push(IdentityEntry::new(
                "sum_abs_pi_pow",
                Some(t),
                &[("s", s)],
                &acc[i],
                (-(1.0 - 2.0 * l) * t).exp(),
                ReferenceSource::Quadrature,
                Comparison::Equality,
                z,
            ));
        }
        let rate = |a: f64| (-(1.0 - 2.0 * a) * t).exp();
        report.entries.push(IdentityEntry::new(
            "sum_pi2_abs_zeta",
            Some(t),
            &[],
            &acc[ns],
            rate(fs.f_b),
            ReferenceSource::Quadrature,
            Comparison::Equality,
            z,
        ));
        report.entries.push(IdentityEntry::new(
            "sum_abs_pi3_eta",
            Some(t),
            &[],
            &acc[ns + 1],
            rate(fs.g_b),
            ReferenceSource::Quadrature,
            Comparison::Equality,
            z,
        ));
        let ew = (fs.lambda_b * t).exp();
        report.entries.push(IdentityEntry::new(
            "mean_w",
            Some(t),
            &[],
            &acc[ns + 2],
            ew,
            ReferenceSource::Quadrature,
            Comparison::Equality,
            z,
        ));
        report.entries.push(IdentityEntry::new(
            "sum_pi_squared",
            Some(t),
            &[],
            &acc[ns + 3],
            1.0,
            ReferenceSource::Exact,
            Comparison::Equality,
            z,
        ));
        report.entries.push(IdentityEntry::new(
            "markov_w",
            Some(t),
            &[("a_star", a_star)],
            &acc[ns + 4],
            (ew / a_star).min(1.0),
            ReferenceSource::Quadrature,
            Comparison::UpperBound,
            z,
        ));
    }

    for &n in &settings.sizes {
        let mc_n = mc.substream(1_000 + n as u64);
        let acc: Vec<Summary> = try_reduce_batches(mc_n.samples, mc_n.seed, mc_n.execution, |rng, count| {
            let mut acc = vec![Summary::default(); ns];
            let mut lw = LeafWeights::default();
            for _ in 0..count {
                lw.grow(n, kernel, rng);
                for (i, &s) in settings.exponents.iter().enumerate() {
                    acc[i].push(power_sum(&lw.pi, s));
                }
            }
            Ok(acc)
        })?;
        for (i, &s) in settings.exponents.iter().enumerate() {
            let l = fs.l(s).expect("requested exponent");
            report.entries.push(IdentityEntry::new(
                "conditional_sum_abs_pi_pow",
                None,
                &[("s", s), ("n", n as f64)],
                &acc[i],
                expected_sum(l, n),
                ReferenceSource::ClosedForm,
                Comparison::Equality,
                z,
            ));
        }
    }
    Ok(report)
}
