use std::f64::consts::TAU;

use rand::Rng;

use crate::diagnostics::report::{Comparison, IdentityEntry, IdentityReport, ReferenceSource};
use crate::exec::{batch_rng, derive_seed, try_reduce_batches, MonteCarlo, Summary};
use crate::geometry::{dot, frame, leaf_directions, norm, path_rotation_array, scale, Vec3};
use crate::kernel::CollisionKernel;
use crate::tree::enumerate_trees;
use crate::weights::{leaf_weights, legendre};
use crate::{Error, Result};

/// Parameters of [`legendre_moment_checks`].
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSettings {
    /// Trees of every size `1..=max_leaves` are enumerated.
    pub max_leaves: usize,
    pub orders: Vec<usize>,
    pub u: Vec3,
    pub xi: Vec3,
    pub z_threshold: f64,
}

impl Default for LegendreSettings {
    fn default() -> Self {
        LegendreSettings {
            max_leaves: 4,
            orders: vec![1, 2, 3],
            u: [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0],
            xi: [2.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0],
            z_threshold: 4.0,
        }
    }
}

fn unit(v: Vec3, what: &str) -> Result<Vec3> {
    let r = norm(v);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadSpec(format!("{what} must be a non-zero finite vector")));
    }
    Ok(scale(v, 1.0 / r))
}

/// For every tree up to `max_leaves` leaves and one kernel draw of its
/// angles `φ`, averages `P_k(ψ_j(u)·ξ)` over uniform `θ` and compares with
/// `P_k(u·ξ) f_j^{(k)}`.
pub fn legendre_moment_checks(
    kernel: &CollisionKernel,
    settings: &LegendreSettings,
    mc: &MonteCarlo,
) -> Result<IdentityReport> {
    let u = unit(settings.u, "u")?;
    let xi = unit(settings.xi, "xi")?;
    let basis = frame(u)?;
    let mut report = IdentityReport::new("legendre", settings.z_threshold);
    let mut tag = 0u64;
    for n in 1..=settings.max_leaves {
        for (ti, tree) in enumerate_trees(n)?.into_iter().enumerate() {
            tag += 1;
            let mut rng = batch_rng(derive_seed(mc.seed, tag), u64::MAX);
            let phis: Vec<f64> = (1..n).map(|_| kernel.sample_phi(&mut rng)).collect();
            let weights = settings.orders.iter().map(|&k| leaf_weights(&tree, &phis, k)).collect::<Result<Vec<_>>>()?;
            let no = settings.orders.len();
            let mc_t = mc.substream(tag);
            let acc: Vec<Summary> = try_reduce_batches(mc_t.samples, mc_t.seed, mc_t.execution, |rng, count| {
                let mut acc = vec![Summary::default(); no * n];
                let mut thetas = vec![0.0; n - 1];
                for _ in 0..count {
                    thetas.iter_mut().for_each(|t| *t = rng.random::<f64>() * TAU);
                    let rot = path_rotation_array(&tree, &phis, &thetas)?;
                    for (j, psi) in leaf_directions(&basis, &rot).into_iter().enumerate() {
                        let c = dot(psi, xi);
                        for (o, &k) in settings.orders.iter().enumerate() {
                            acc[o * n + j].push(legendre(k, c));
                        }
                    }
                }
                Ok(acc)
            })?;
            let c = dot(u, xi);
            for (o, &k) in settings.orders.iter().enumerate() {
                for j in 0..n {
                    report.entries.push(IdentityEntry::new(
                        format!("legendre_addition {tree}"),
                        None,
                        &[("n", n as f64), ("tree", ti as f64), ("k", k as f64), ("leaf", j as f64)],
                        &acc[o * n + j],
                        legendre(k, c) * weights[o].values[j],
                        ReferenceSource::ClosedForm,
                        Comparison::Equality,
                        settings.z_threshold,
                    ));
                }
            }
        }
    }
    Ok(report)
}
