use serde::{Deserialize, Serialize};

use crate::exec::{reduce_batches, try_reduce_batches, MonteCarlo, Summary};
use crate::geometry::{dot, norm, scale, Vec3};
use crate::kernel::CollisionKernel;
use crate::sampler::{cf_estimate_grid, check_time, Estimator, InitialDatum, LeafWeights, WildCascade};
use crate::{Error, Result};

/// Absolute slack below which a characteristic-function discrepancy is
/// treated as rounding.
pub const CF_FLOOR: f64 = 1e-12;

/// Weighted least-squares fit of `log value = log_prefactor + rate · t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Points entering the fit; the rest were within two standard errors of zero.
    pub used: Vec<bool>,
    pub fitted_rate: f64,
    pub fitted_log_prefactor: f64,
    /// Standard error of the fitted rate.
    pub rate_std_error: f64,
    /// Root mean square of the weighted log residuals.
    pub residual: f64,
    pub reference_rate: f64,
}

impl DecayFit {
    /// `|fitted - reference| <= tolerance`.
    pub fn agrees(&self, tolerance: f64) -> bool {
        (self.fitted_rate - self.reference_rate).abs() <= tolerance
    }
}

/// Fits a log-linear decay. Points with `value < 2 se` are masked; if half
/// the grid or more is masked, or fewer than two points remain, the fit is
/// refused.
pub fn fit_log_linear(times: &[f64], values: &[f64], std_errors: &[f64], reference_rate: f64) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() != std_errors.len() {
        return Err(Error::ArityMismatch { expected: times.len(), got: values.len().min(std_errors.len()) });
    }
    let used: Vec<bool> = values.iter().zip(std_errors).map(|(&v, &s)| v > 0.0 && v >= 2.0 * s).collect();
    let masked = used.iter().filter(|u| !**u).count();
    let total = times.len();
    if 2 * masked >= total || total - masked < 2 {
        return Err(Error::InsufficientSignal { masked, total });
    }
    // Delta method: sd(log v) ≈ se / v.
    let pts: Vec<(f64, f64, f64)> = (0..total)
        .filter(|&i| used[i])
        .map(|i| {
            let sd = (std_errors[i] / values[i]).max(1e-15);
            (times[i], values[i].ln(), 1.0 / (sd * sd))
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let tbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let stt: f64 = pts.iter().map(|p| p.2 * (p.0 - tbar).powi(2)).sum();
    if stt <= 0.0 {
        return Err(Error::BadSpec("decay fit needs at least two distinct times".into()));
    }
    let rate = pts.iter().map(|p| p.2 * (p.0 - tbar) * (p.1 - ybar)).sum::<f64>() / stt;
    let intercept = ybar - rate * tbar;
    let chi2: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - rate * p.0).powi(2)).sum();
    Ok(DecayFit {
        times: times.to_vec(),
        values: values.to_vec(),
        std_errors: std_errors.to_vec(),
        used,
        fitted_rate: rate,
        fitted_log_prefactor: intercept,
        rate_std_error: stt.recip().sqrt(),
        residual: (chi2 / pts.len() as f64).sqrt(),
        reference_rate,
    })
}

/// Which moment of `μ(·, t)` to follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSpec {
    /// `E (u·v)^4` for a direction `u` (normalized before use).
    Directional { direction: Vec3 },
}

impl Default for MomentSpec {
    fn default() -> Self {
        MomentSpec::Directional { direction: [1.0, 0.0, 0.0] }
    }
}

/// Leaf-weight sums whose means decay exponentially in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightStatistic {
    /// `W = Σ π^4`, rate `Λ_b`.
    W,
    /// `Σ π² |ζ|`, rate `-(1 - 2 f(b))`.
    Zeta,
    /// `Σ |π³ η|`, rate `-(1 - 2 g(b))`.
    Eta,
}

impl WeightStatistic {
    pub fn reference_rate(&self, kernel: &CollisionKernel) -> Result<f64> {
        Ok(match self {
            WeightStatistic::W => kernel.lambda_b()?,
            WeightStatistic::Zeta => -(1.0 - 2.0 * kernel.f_b()?),
            WeightStatistic::Eta => -(1.0 - 2.0 * kernel.g_b()?),
        })
    }

    fn evaluate(&self, lw: &LeafWeights) -> f64 {
        match self {
            WeightStatistic::W => lw.pi.iter().map(|p| (p * p) * (p * p)).sum(),
            WeightStatistic::Zeta => lw.pi.iter().zip(&lw.zeta).map(|(p, z)| p * p * z.abs()).sum(),
            WeightStatistic::Eta => lw.pi.iter().zip(&lw.eta).map(|(p, e)| (p * p * p * e).abs()).sum(),
        }
    }
}

/// `E_t[W]` against `e^{Λ_b t}`.
pub fn w_decay_fit(kernel: &CollisionKernel, times: &[f64], mc: &MonteCarlo) -> Result<DecayFit> {
    weight_decay_fit(kernel, times, WeightStatistic::W, mc)
}

/// Decay fit of the mean of a leaf-weight sum.
pub fn weight_decay_fit(
    kernel: &CollisionKernel,
    times: &[f64],
    statistic: WeightStatistic,
    mc: &MonteCarlo,
) -> Result<DecayFit> {
    let rate = statistic.reference_rate(kernel)?;
    let mut values = Vec::with_capacity(times.len());
    let mut ses = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        check_time(t, mc.n_max)?;
        let mc_t = mc.substream(ti as u64);
        let s: Summary = try_reduce_batches(mc_t.samples, mc_t.seed, mc_t.execution, |rng, count| {
            let mut s = Summary::default();
            let mut lw = LeafWeights::default();
            for _ in 0..count {
                lw.draw(t, kernel, rng, mc_t.n_max)?;
                s.push(statistic.evaluate(&lw));
            }
            Ok(s)
        })?;
        values.push(s.mean);
        ses.push(s.std_error());
    }
    fit_log_linear(times, &values, &ses, rate)
}

/// Distance of a fourth moment of `μ(·, t)` from its Maxwellian value,
/// sampled with the Wild cascade and fitted against `Λ_b`.
pub fn moment_decay_fit(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    times: &[f64],
    spec: &MomentSpec,
    mc: &MonteCarlo,
) -> Result<DecayFit> {
    mu0.moments().require_m4()?;
    let lambda = kernel.lambda_b()?;
    let MomentSpec::Directional { direction } = *spec;
    let r = norm(direction);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadSpec("moment direction must be a non-zero finite vector".into()));
    }
    let u = scale(direction, 1.0 / r);
    let sigma2 = mu0.moments().m2 / 3.0;
    let target = 3.0 * sigma2 * sigma2;
    let fourth = |x: f64| (x * x) * (x * x);
    let mc0 = mc.substream(u64::MAX);
    let initial = reduce_batches(mc0.samples, mc0.seed, mc0.execution, |rng, count| {
        let mut s = Summary::default();
        for _ in 0..count {
            s.push(fourth(dot(u, mu0.sample(rng))));
        }
        s
    });
    if (initial.mean - target).abs() <= 2.0 * initial.std_error() {
        return Err(Error::InsufficientSignal { masked: 1, total: 1 });
    }
    let mut values = Vec::with_capacity(times.len());
    let mut ses = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        check_time(t, mc.n_max)?;
        let mc_t = mc.substream(ti as u64);
        let s: Summary = try_reduce_batches(mc_t.samples, mc_t.seed, mc_t.execution, |rng, count| {
            let mut s = Summary::default();
            let mut cascade = WildCascade::default();
            for _ in 0..count {
                let x = dot(u, cascade.sample(t, mu0, kernel, rng, mc_t.n_max)?);
                s.push(fourth(x));
            }
            Ok(s)
        })?;
        values.push((s.mean - target).abs());
        ses.push(s.std_error());
    }
    fit_log_linear(times, &values, &ses, lambda)
}

/// `D(t)` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub t: f64,
    /// `max_ξ max(|γ̂ - g(ξ)| - 2 se - floor, 0)`.
    pub distance: f64,
    /// Raw `|γ̂ - g(ξ)|` at the maximizing frequency.
    pub raw: f64,
    pub std_error: f64,
    pub worst_xi: Vec3,
}

/// Noise-corrected sup distance between the estimated characteristic
/// function and the Maxwellian one on a frequency grid.
pub fn cf_distances(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    times: &[f64],
    xis: &[Vec3],
    estimator: Estimator,
    mc: &MonteCarlo,
) -> Result<Vec<DistancePoint>> {
    let sigma2 = mu0.moments().m2 / 3.0;
    let mut out = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        let est = cf_estimate_grid(xis, t, mu0, kernel, estimator, &mc.substream(ti as u64))?;
        let mut best = DistancePoint { t, distance: 0.0, raw: 0.0, std_error: 0.0, worst_xi: [0.0; 3] };
        let mut best_key = f64::NEG_INFINITY;
        for e in &est {
            let g = (-0.5 * sigma2 * dot(e.xi, e.xi)).exp();
            let raw = (e.value() - g).norm();
            let se = e.std_error();
            let key = raw - 2.0 * se - CF_FLOOR;
            if key > best_key {
                best_key = key;
                best = DistancePoint { t, distance: key.max(0.0), raw, std_error: se, worst_xi: e.xi };
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// [`cf_distances`] followed by a decay fit against `Λ_b`.
pub fn cf_distance_curve(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    times: &[f64],
    xis: &[Vec3],
    estimator: Estimator,
    mc: &MonteCarlo,
) -> Result<(Vec<DistancePoint>, Result<DecayFit>)> {
    let points = cf_distances(mu0, kernel, times, xis, estimator, mc)?;
    let values: Vec<f64> = points.iter().map(|p| p.raw).collect();
    let ses: Vec<f64> = points.iter().map(|p| p.std_error).collect();
    let fit = fit_log_linear(times, &values, &ses, kernel.lambda_b()?);
    Ok((points, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_is_recovered() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let values: Vec<f64> = times.iter().map(|t: &f64| 2.0 * (-0.4 * t).exp()).collect();
        let ses = vec![1e-3; 4];
        let fit = fit_log_linear(&times, &values, &ses, -0.4).unwrap();
        assert!((fit.fitted_rate + 0.4).abs() < 1e-12);
        assert!((fit.fitted_log_prefactor - 2f64.ln()).abs() < 1e-12);
        assert!(fit.agrees(1e-9));
    }

    #[test]
    fn noise_only_is_refused() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let values = [0.01, 0.002, 0.001, 0.0005];
        let ses = [0.001, 0.002, 0.002, 0.002];
        assert!(matches!(
            fit_log_linear(&times, &values, &ses, -1.0),
            Err(Error::InsufficientSignal { masked: 3, total: 4 })
        ));
    }
}
