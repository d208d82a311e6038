use std::f64::consts::TAU;

use rand::Rng;

use crate::error::Result;
use crate::geometry::{add, cross, dot, norm, scale, sub, Vec3};
use crate::kernel::CollisionKernel;

use super::{sample_nu, InitialDatum};

/// Post-collision pair `(v*, w*)` for collision angles `(φ, θ)`, where
/// `ω = sinφ cosθ a + sinφ sinθ b + cosφ û` and `û = (w - v)/|w - v|`.
pub fn collide(v: Vec3, w: Vec3, phi: f64, theta: f64) -> (Vec3, Vec3) {
    let d = sub(w, v);
    let r = norm(d);
    if r == 0.0 {
        return (v, w);
    }
    let u = scale(d, 1.0 / r);
    // Complete û to an orthonormal frame using the axis it is least aligned with.
    let axis = (0..3).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap_or(0);
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let a0 = sub(e, scale(u, u[axis]));
    let a = scale(a0, 1.0 / norm(a0));
    let b = cross(u, a);
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let omega = add(add(scale(a, sp * ct), scale(b, sp * st)), scale(u, cp));
    let c = dot(d, omega);
    (add(v, scale(omega, c)), sub(w, scale(omega, c)))
}

/// Which child value enters a collision as `v` (the one whose image is kept).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    LeftIsV,
    RightIsV,
}

const LEAF: u32 = u32::MAX;

/// Reusable scratch space for sampling velocities from `μ(·, t)` by folding
/// a germinated tree bottom-up.
#[derive(Debug, Clone)]
pub struct WildCascade {
    children: Vec<[u32; 2]>,
    angles: Vec<(f64, f64)>,
    leaves: Vec<u32>,
    values: Vec<Vec3>,
    orientation: Orientation,
    max_defect: f64,
    collisions: u64,
}

impl Default for WildCascade {
    fn default() -> Self {
        WildCascade::new(Orientation::LeftIsV)
    }
}

impl WildCascade {
    pub fn new(orientation: Orientation) -> Self {
        WildCascade {
            children: Vec::new(),
            angles: Vec::new(),
            leaves: Vec::new(),
            values: Vec::new(),
            orientation,
            max_defect: 0.0,
            collisions: 0,
        }
    }

    /// Largest relative momentum or energy defect seen over all collisions.
    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    /// Draws one velocity: samples `ν`, germinates a tree of that size,
    /// attaches `μ_0` draws to the leaves and folds the collisions bottom-up.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        t: f64,
        mu0: &InitialDatum,
        kernel: &CollisionKernel,
        rng: &mut R,
        cap: usize,
    ) -> Result<Vec3> {
        let nu = sample_nu(t, rng, cap)?;
        Ok(self.sample_size(nu, mu0, kernel, rng))
    }

    /// Same as [`sample`](Self::sample) for a fixed number of leaves.
    pub fn sample_size<R: Rng + ?Sized>(
        &mut self,
        nu: usize,
        mu0: &InitialDatum,
        kernel: &CollisionKernel,
        rng: &mut R,
    ) -> Vec3 {
        self.children.clear();
        self.angles.clear();
        self.leaves.clear();
        self.children.push([LEAF, LEAF]);
        self.angles.push((0.0, 0.0));
        self.leaves.push(0);
        for m in 1..nu.max(1) {
            let k = rng.random_range(0..m);
            let id = self.leaves[k] as usize;
            let a = self.children.len() as u32;
            self.children.push([LEAF, LEAF]);
            self.children.push([LEAF, LEAF]);
            self.angles.push((0.0, 0.0));
            self.angles.push((0.0, 0.0));
            self.children[id] = [a, a + 1];
            self.angles[id] = (kernel.sample_phi(rng), rng.random::<f64>() * TAU);
            self.leaves[k] = a;
            self.leaves.push(a + 1);
        }
        // Children always have larger ids than their parent.
        self.values.clear();
        self.values.resize(self.children.len(), [0.0; 3]);
        for id in (0..self.children.len()).rev() {
            let [l, r] = self.children[id];
            self.values[id] = if l == LEAF {
                mu0.sample(rng)
            } else {
                let (lv, rv) = (self.values[l as usize], self.values[r as usize]);
                let (v, w) = match self.orientation {
                    Orientation::LeftIsV => (lv, rv),
                    Orientation::RightIsV => (rv, lv),
                };
                let (phi, theta) = self.angles[id];
                let (vs, ws) = collide(v, w, phi, theta);
                self.record(v, w, vs, ws);
                vs
            };
        }
        self.values[0]
    }

    fn record(&mut self, v: Vec3, w: Vec3, vs: Vec3, ws: Vec3) {
        let energy = dot(v, v) + dot(w, w);
        let scale = energy.max(f64::MIN_POSITIVE);
        let dp = norm(sub(add(vs, ws), add(v, w))) / scale.sqrt();
        let de = (dot(vs, vs) + dot(ws, ws) - energy).abs() / scale;
        self.max_defect = self.max_defect.max(dp).max(de);
        self.collisions += 1;
    }
}

/// One draw from `μ(·, t)` with a fresh scratch buffer.
pub fn wild_velocity<R: Rng + ?Sized>(
    t: f64,
    mu0: &InitialDatum,
    kernel: &CollisionKernel,
    rng: &mut R,
    cap: usize,
) -> Result<Vec3> {
    WildCascade::default().sample(t, mu0, kernel, rng, cap)
}
