use serde::{Deserialize, Serialize};

use crate::exec::{try_reduce_batches, Accumulate, MonteCarlo};
use crate::geometry::{fibonacci_directions, frame, scale};
use crate::kernel::CollisionKernel;
use crate::sampler::{check_time, conditional_cf_in_frame, draw_tree_sample, InitialDatum};
use crate::weights::{envelope_radius, psi_envelope};
use crate::{Error, Result};

/// Parameters of [`envelope_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSettings {
    pub lambda: f64,
    pub q: f64,
    pub t: f64,
    /// Radial points per direction on `[0, R]`.
    pub radial_points: usize,
    pub directions: usize,
    /// Largest `|ξ|` on the premise grid.
    pub premise_radius: f64,
}

impl Default for EnvelopeSettings {
    fn default() -> Self {
        EnvelopeSettings {
            lambda: 0.5f64.sqrt(),
            q: 0.25,
            t: 1.0,
            radial_points: 32,
            directions: 8,
            premise_radius: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub settings: EnvelopeSettings,
    pub n_samples: u64,
    pub checks: u64,
    pub violations: u64,
    /// Largest `|N̂| / Ψ` seen.
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Default)]
struct Counts {
    samples: u64,
    checks: u64,
    violations: u64,
    max_ratio: f64,
}

impl Accumulate for Counts {
    fn merge(&mut self, o: &Self) {
        self.samples += o.samples;
        self.checks += o.checks;
        self.violations += o.violations;
        self.max_ratio = self.max_ratio.max(o.max_ratio);
    }
}

fn tail_bound(lambda: f64, q: f64, rho: f64) -> f64 {
    let l2 = lambda * lambda;
    (l2 / (l2 + rho * rho)).powf(q)
}

/// Verifies `|μ̂_0(ξ)| <= (λ²/(λ²+|ξ|²))^q` on a grid, then checks
/// `|N̂(ρ; u)| <= Ψ(ρ)` sample by sample for `ρ` in `[0, R]` with
/// `R = (1/2)(m_4 W)^{-1/4}`.
pub fn envelope_check(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    settings: &EnvelopeSettings,
    mc: &MonteCarlo,
) -> Result<EnvelopeReport> {
    let EnvelopeSettings { lambda, q, t, radial_points, directions, premise_radius } = *settings;
    if !(lambda > 0.0 && q > 0.0 && radial_points >= 2 && directions >= 1) {
        return Err(Error::BadSpec("envelope needs lambda > 0, q > 0 and a non-trivial grid".into()));
    }
    check_time(t, mc.n_max)?;
    let m4 = mu0.moments().require_m4()?;
    let dirs = fibonacci_directions(directions.max(32));
    for i in 0..=2000 {
        let rho = premise_radius * i as f64 / 2000.0;
        for &u in &dirs {
            if mu0.cf(scale(u, rho))?.norm() > tail_bound(lambda, q, rho) + 1e-12 {
                return Err(Error::PremiseFailed { rho });
            }
        }
    }
    let frames = fibonacci_directions(directions).into_iter().map(frame).collect::<Result<Vec<_>>>()?;
    let counts: Counts = try_reduce_batches(mc.samples, mc.seed, mc.execution, |rng, count| {
        let mut c = Counts { samples: count as u64, ..Counts::default() };
        for _ in 0..count {
            let s = draw_tree_sample(t, kernel, rng, mc.n_max)?;
            let r = envelope_radius(m4, s.w());
            for i in 0..radial_points {
                let rho = r * i as f64 / (radial_points - 1) as f64;
                let psi = psi_envelope(lambda, q, &s.pi, rho);
                for b in &frames {
                    let n = conditional_cf_in_frame(&s, mu0, rho, b)?.norm();
                    c.checks += 1;
                    if n > psi * (1.0 + 1e-12) + 1e-15 {
                        c.violations += 1;
                    }
                    c.max_ratio = c.max_ratio.max(n / psi);
                }
            }
        }
        Ok(c)
    })?;
    Ok(EnvelopeReport {
        settings: settings.clone(),
        n_samples: counts.samples,
        checks: counts.checks,
        violations: counts.violations,
        max_ratio: counts.max_ratio,
        pass: counts.violations == 0,
    })
}
