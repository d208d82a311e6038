use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_reduce_batches, MonteCarlo, Summary};
use crate::geometry::{dot, frame, norm, scale, Mat3, Vec3};
use crate::kernel::CollisionKernel;

use super::{check_time, draw_tree_sample, InitialDatum, TreeSample, WildCascade};

/// Estimator of `μ̂(ξ, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Average of `exp(i ρ S(u))` with `S(u) = Σ π_j ψ_j(u)·V_j`.
    Raw,
    /// Average of the conditional characteristic function `N̂(ρ; u)`.
    RaoBlackwell,
}

impl Estimator {
    /// Rao–Blackwell when `μ̂_0` is available in closed form, raw otherwise.
    pub fn default_for(mu0: &InitialDatum) -> Self {
        if mu0.has_analytic_cf() {
            Estimator::RaoBlackwell
        } else {
            Estimator::Raw
        }
    }
}

/// Monte Carlo estimate of a characteristic function value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfEstimate {
    pub t: f64,
    pub xi: Vec3,
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub n_samples: usize,
}

impl CfEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Combined standard error `sqrt(se_re² + se_im²)`.
    pub fn std_error(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

/// `N̂(ρ; u) = Π_j μ̂_0(ρ π_j ψ_j(u))`.
pub fn conditional_cf(sample: &TreeSample, mu0: &InitialDatum, rho: f64, u: Vec3) -> Result<Complex64> {
    if !mu0.has_analytic_cf() {
        return Err(Error::NoAnalyticCf);
    }
    let b = frame(unit(u)?)?;
    conditional_cf_in_frame(sample, mu0, rho, &b)
}

pub(crate) fn conditional_cf_in_frame(
    sample: &TreeSample,
    mu0: &InitialDatum,
    rho: f64,
    b: &Mat3,
) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for (p, o) in sample.pi.iter().zip(&sample.rotations) {
        let psi = b.apply(o.column(2));
        acc *= mu0.cf(scale(psi, rho * p))?;
    }
    Ok(acc)
}

fn unit(u: Vec3) -> Result<Vec3> {
    let r = norm(u);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadSpec("direction must be a non-zero finite vector".into()));
    }
    Ok(scale(u, 1.0 / r))
}

struct GridPoint {
    rho: f64,
    frame: Option<Mat3>,
}

fn prepare(xis: &[Vec3]) -> Result<Vec<GridPoint>> {
    xis.iter()
        .map(|&xi| {
            let rho = norm(xi);
            if !rho.is_finite() {
                return Err(Error::BadSpec("frequency must be finite".into()));
            }
            let frame = if rho > 0.0 { Some(frame(scale(xi, 1.0 / rho))?) } else { None };
            Ok(GridPoint { rho, frame })
        })
        .collect()
}

fn finish(xis: &[Vec3], t: f64, acc: &[Summary], n: usize) -> Vec<CfEstimate> {
    xis.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let (re, im) = (&acc[2 * i], &acc[2 * i + 1]);
            CfEstimate { t, xi, re: re.mean, im: im.mean, se_re: re.std_error(), se_im: im.std_error(), n_samples: n }
        })
        .collect()
}

/// Estimates `μ̂(ξ, t)` at every point of `xis`, reusing each tree draw
/// across the grid. `ξ = 0` yields exactly 1.
pub fn cf_estimate_grid(
    xis: &[Vec3],
    t: f64,
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    estimator: Estimator,
    mc: &MonteCarlo,
) -> Result<Vec<CfEstimate>> {
    check_time(t, mc.n_max)?;
    if estimator == Estimator::RaoBlackwell && !mu0.has_analytic_cf() {
        return Err(Error::NoAnalyticCf);
    }
    let grid = prepare(xis)?;
    let acc: Vec<Summary> = try_reduce_batches(mc.samples, mc.seed, mc.execution, |rng, count| {
        let mut acc = vec![Summary::default(); 2 * grid.len()];
        let mut dirs: Vec<Vec3> = Vec::new();
        let mut velocities: Vec<Vec3> = Vec::new();
        for _ in 0..count {
            let sample = draw_tree_sample(t, kernel, rng, mc.n_max)?;
            dirs.clear();
            dirs.extend(sample.rotations.iter().map(|o| o.column(2)));
            if estimator == Estimator::Raw {
                velocities.clear();
                velocities.extend((0..sample.nu).map(|_| mu0.sample(rng)));
            }
            for (i, g) in grid.iter().enumerate() {
                let z = match &g.frame {
                    None => Complex64::new(1.0, 0.0),
                    Some(b) => match estimator {
                        Estimator::RaoBlackwell => conditional_cf_in_frame(&sample, mu0, g.rho, b)?,
                        Estimator::Raw => {
                            let s: f64 = sample
                                .pi
                                .iter()
                                .zip(&dirs)
                                .zip(&velocities)
                                .map(|((p, c), v)| p * dot(b.apply(*c), *v))
                                .sum();
                            Complex64::from_polar(1.0, g.rho * s)
                        }
                    },
                };
                acc[2 * i].push(z.re);
                acc[2 * i + 1].push(z.im);
            }
        }
        Ok(acc)
    })?;
    let mut out = finish(xis, t, &acc, mc.samples);
    for (e, g) in out.iter_mut().zip(&grid) {
        if g.frame.is_none() {
            *e = CfEstimate { re: 1.0, im: 0.0, se_re: 0.0, se_im: 0.0, ..e.clone() };
        }
    }
    Ok(out)
}

/// Single-point version of [`cf_estimate_grid`].
pub fn cf_estimate(
    xi: Vec3,
    t: f64,
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    estimator: Estimator,
    mc: &MonteCarlo,
) -> Result<CfEstimate> {
    Ok(cf_estimate_grid(&[xi], t, mu0, kernel, estimator, mc)?.remove(0))
}

/// Empirical characteristic function of velocities drawn by the Wild cascade.
pub fn wild_cf_grid(
    xis: &[Vec3],
    t: f64,
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    mc: &MonteCarlo,
) -> Result<Vec<CfEstimate>> {
    check_time(t, mc.n_max)?;
    let acc: Vec<Summary> = try_reduce_batches(mc.samples, mc.seed, mc.execution, |rng, count| {
        let mut acc = vec![Summary::default(); 2 * xis.len()];
        let mut cascade = WildCascade::default();
        for _ in 0..count {
            let v = cascade.sample(t, mu0, kernel, rng, mc.n_max)?;
            for (i, xi) in xis.iter().enumerate() {
                let (s, c) = dot(*xi, v).sin_cos();
                acc[2 * i].push(c);
                acc[2 * i + 1].push(s);
            }
        }
        Ok(acc)
    })?;
    Ok(finish(xis, t, &acc, mc.samples))
}
