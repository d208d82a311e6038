use serde::{Deserialize, Serialize};

use crate::exec::MonteCarlo;
use crate::geometry::Vec3;
use crate::kernel::CollisionKernel;
use crate::sampler::{cf_estimate_grid, wild_cf_grid, CfEstimate, Estimator, InitialDatum};
use crate::Result;

/// Fraction of grid points that must agree.
pub const REQUIRED_FRACTION: f64 = 0.95;

/// One frequency compared between the tree representation and the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckPoint {
    pub t: f64,
    pub xi: Vec3,
    pub representation: CfEstimate,
    pub cascade: CfEstimate,
    pub z_re: f64,
    pub z_im: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub points: Vec<CrosscheckPoint>,
    pub z_threshold: f64,
    pub pass_fraction: f64,
    pub required_fraction: f64,
    pub pass: bool,
}

fn two_sample_z(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let d = a - b;
    if d.abs() <= 1e-12 {
        return 0.0;
    }
    let s = sa.hypot(sb);
    if s > 0.0 {
        d / s
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Compares the tree-representation estimate of `γ̂(ξ, t)` with the
/// empirical characteristic function of independent Wild-cascade draws.
pub fn representation_crosscheck(
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    times: &[f64],
    xis: &[Vec3],
    estimator: Estimator,
    mc: &MonteCarlo,
    z_threshold: f64,
) -> Result<CrosscheckReport> {
    let mut points = Vec::with_capacity(times.len() * xis.len());
    for (ti, &t) in times.iter().enumerate() {
        let rep = cf_estimate_grid(xis, t, mu0, kernel, estimator, &mc.substream(2 * ti as u64))?;
        let cas = wild_cf_grid(xis, t, mu0, kernel, &mc.substream(2 * ti as u64 + 1))?;
        for (r, c) in rep.into_iter().zip(cas) {
            let z_re = two_sample_z(r.re, r.se_re, c.re, c.se_re);
            let z_im = two_sample_z(r.im, r.se_im, c.im, c.se_im);
            let pass = z_re.abs() <= z_threshold && z_im.abs() <= z_threshold;
            points.push(CrosscheckPoint { t, xi: r.xi, representation: r, cascade: c, z_re, z_im, pass });
        }
    }
    let pass_fraction =
        if points.is_empty() { 1.0 } else { points.iter().filter(|p| p.pass).count() as f64 / points.len() as f64 };
    Ok(CrosscheckReport {
        points,
        z_threshold,
        pass_fraction,
        required_fraction: REQUIRED_FRACTION,
        pass: pass_fraction >= REQUIRED_FRACTION,
    })
}
