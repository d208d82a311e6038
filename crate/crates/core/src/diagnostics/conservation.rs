use serde::{Deserialize, Serialize};

use crate::diagnostics::report::{Comparison, IdentityEntry, IdentityReport, ReferenceSource};
use crate::exec::{try_reduce_batches, Accumulate, MonteCarlo, Summary};
use crate::geometry::dot;
use crate::kernel::CollisionKernel;
use crate::sampler::{check_time, InitialDatum, WildCascade};
use crate::Result;

/// Largest per-collision relative defect accepted as exact conservation.
pub const COLLISION_TOLERANCE: f64 = 1e-12;

/// Moments of `μ(·, t)` against those of `μ_0`, plus the exactness of
/// every simulated collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub moments: IdentityReport,
    pub max_collision_defect: f64,
    pub collisions: u64,
    pub pass: bool,
}

#[derive(Default)]
struct CascadeStats {
    moments: Vec<Summary>,
    max_defect: f64,
    collisions: u64,
}

impl Accumulate for CascadeStats {
    fn merge(&mut self, other: &Self) {
        self.moments.merge(&other.moments);
        self.max_defect = self.max_defect.max(other.max_defect);
        self.collisions += other.collisions;
    }
}

/// Samples the Wild cascade at each time and tests that the mean velocity
/// and the energy match those of `μ_0`.
pub fn conservation_check(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    times: &[f64],
    mc: &MonteCarlo,
    z_threshold: f64,
) -> Result<ConservationReport> {
    let mean = mu0.moments().mean;
    let energy = mu0.moments().m2;
    let mut moments = IdentityReport::new("conservation", z_threshold);
    let mut max_defect: f64 = 0.0;
    let mut collisions = 0;
    for (ti, &t) in times.iter().enumerate() {
        check_time(t, mc.n_max)?;
        let mc_t = mc.substream(ti as u64);
        let stats: CascadeStats = try_reduce_batches(mc_t.samples, mc_t.seed, mc_t.execution, |rng, count| {
            let mut cascade = WildCascade::default();
            let mut acc = vec![Summary::default(); 4];
            for _ in 0..count {
                let v = cascade.sample(t, mu0, kernel, rng, mc_t.n_max)?;
                for i in 0..3 {
                    acc[i].push(v[i]);
                }
                acc[3].push(dot(v, v));
            }
            Ok(CascadeStats { moments: acc, max_defect: cascade.max_defect(), collisions: cascade.collisions() })
        })?;
        max_defect = max_defect.max(stats.max_defect);
        collisions += stats.collisions;
        for i in 0..3 {
            moments.entries.push(IdentityEntry::new(
                "mean_velocity",
                Some(t),
                &[("component", i as f64)],
                &stats.moments[i],
                mean[i],
                ReferenceSource::Exact,
                Comparison::Equality,
                z_threshold,
            ));
        }
        moments.entries.push(IdentityEntry::new(
            "energy",
            Some(t),
            &[],
            &stats.moments[3],
            energy,
            ReferenceSource::Exact,
            Comparison::Equality,
            z_threshold,
        ));
    }
    let pass = moments.passed() && max_defect <= COLLISION_TOLERANCE;
    Ok(ConservationReport { moments, max_collision_defect: max_defect, collisions, pass })
}
