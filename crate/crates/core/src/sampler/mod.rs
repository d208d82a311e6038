//! Random McKean trees with their weights and rotations, initial data,
//! the Wild cascade and characteristic-function estimators.

mod cascade;
mod cf;
mod datum;

pub use cascade::{collide, wild_velocity, Orientation, WildCascade};
pub(crate) use cf::conditional_cf_in_frame;
pub use cf::{cf_estimate, cf_estimate_grid, conditional_cf, wild_cf_grid, CfEstimate, Estimator};
pub use datum::{make_datum, make_initial_datum, DatumSpec, GaussianComponent, InitialDatum, Moment, MomentTable};

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{collision_frames, Mat3};
use crate::kernel::CollisionKernel;
use crate::weights::legendre;

/// Rejects negative times and times whose expected tree size `e^t` exceeds `cap`.
pub fn check_time(t: f64, cap: usize) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::BadSpec(format!("time must be finite and non-negative, got {t}")));
    }
    let expected = t.exp();
    if expected > cap as f64 {
        return Err(Error::TimeTooLarge { expected, cap });
    }
    Ok(())
}

/// Draws `ν` with `P[ν = n] = e^{-t} (1 - e^{-t})^{n-1}` by inversion.
pub fn sample_nu<R: Rng + ?Sized>(t: f64, rng: &mut R, cap: usize) -> Result<usize> {
    check_time(t, cap)?;
    if t == 0.0 {
        return Ok(1);
    }
    let u = 1.0 - rng.random::<f64>();
    // ln(1 - e^{-t}) computed without cancellation for small t.
    let log_q = (-(-t).exp_m1()).ln();
    let extra = (u.ln() / log_q).floor();
    if extra >= cap as f64 {
        return Err(Error::TimeTooLarge { expected: t.exp(), cap });
    }
    Ok(1 + extra as usize)
}

/// One draw of `(ν, π, O)` grown by germination. Each step picks a uniform
/// array slot `k`; leaf `k` is replaced by its left child and the right
/// child is appended. Angles are stored in germination order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSample {
    pub nu: usize,
    pub pi: Vec<f64>,
    pub rotations: Vec<Mat3>,
    pub phis: Vec<f64>,
    pub thetas: Vec<f64>,
    pub slots: Vec<usize>,
}

impl TreeSample {
    fn single() -> Self {
        TreeSample {
            nu: 1,
            pi: vec![1.0],
            rotations: vec![Mat3::IDENTITY],
            phis: Vec::new(),
            thetas: Vec::new(),
            slots: Vec::new(),
        }
    }

    /// Grows a sample with exactly `nu` leaves.
    pub fn grow<R: Rng + ?Sized>(nu: usize, kernel: &CollisionKernel, rng: &mut R) -> Self {
        let mut s = TreeSample::single();
        s.pi.reserve(nu);
        s.rotations.reserve(nu);
        for m in 1..nu.max(1) {
            let k = rng.random_range(0..m);
            let phi = kernel.sample_phi(rng);
            let theta = rng.random::<f64>() * TAU;
            let (ml, mr) = collision_frames(phi, theta);
            let (w, q) = (s.pi[k], s.rotations[k]);
            s.pi[k] = w * phi.cos();
            s.pi.push(w * phi.sin());
            s.rotations[k] = q * ml;
            s.rotations.push(q * mr);
            s.phis.push(phi);
            s.thetas.push(theta);
            s.slots.push(k);
        }
        s.nu = s.pi.len();
        s
    }

    /// `W = Σ π_j^4`.
    pub fn w(&self) -> f64 {
        self.pi.iter().map(|p| (p * p) * (p * p)).sum()
    }
}

/// Draws `ν` and then a [`TreeSample`] of that size.
pub fn draw_tree_sample<R: Rng + ?Sized>(
    t: f64,
    kernel: &CollisionKernel,
    rng: &mut R,
    cap: usize,
) -> Result<TreeSample> {
    let nu = sample_nu(t, rng, cap)?;
    Ok(TreeSample::grow(nu, kernel, rng))
}

/// Weights of orders 1, 2 and 3 without the rotations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LeafWeights {
    pub pi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
}

impl LeafWeights {
    /// Refills `self` with a draw of exactly `nu` leaves.
    pub fn grow<R: Rng + ?Sized>(&mut self, nu: usize, kernel: &CollisionKernel, rng: &mut R) {
        self.pi.clear();
        self.zeta.clear();
        self.eta.clear();
        self.pi.push(1.0);
        self.zeta.push(1.0);
        self.eta.push(1.0);
        for m in 1..nu.max(1) {
            let k = rng.random_range(0..m);
            let (s, c) = kernel.sample_phi(rng).sin_cos();
            let (p, z, e) = (self.pi[k], self.zeta[k], self.eta[k]);
            self.pi[k] = p * c;
            self.pi.push(p * s);
            self.zeta[k] = z * legendre(2, c);
            self.zeta.push(z * legendre(2, s));
            self.eta[k] = e * legendre(3, c);
            self.eta.push(e * legendre(3, s));
        }
    }

    /// Draws `ν` and refills `self`.
    pub fn draw<R: Rng + ?Sized>(&mut self, t: f64, kernel: &CollisionKernel, rng: &mut R, cap: usize) -> Result<()> {
        let nu = sample_nu(t, rng, cap)?;
        self.grow(nu, kernel, rng);
        Ok(())
    }
}
