//! Rotation matrices attached to a tree, the four-chart atlas of the sphere
//! and leaf directions.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{McKeanTree, Side};

pub type Vec3 = [f64; 3];

const CHART_RADIUS_SQ: f64 = 1.0 / 144.0;
const CHART_TOLERANCE: f64 = 1e-9;

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        dot(m[0], cross(m[1], m[2]))
    }

    /// `max |MᵀM - I|` entrywise.
    pub fn orthogonality_error(&self) -> f64 {
        let p = self.transpose() * *self;
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                e = e.max((p.0[i][j] - id).abs());
            }
        }
        e
    }

    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e = e.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        e
    }
}

impl Mul for Mat3 {
    type Output = Mat3;

    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j] + self.0[i][2] * rhs.0[2][j];
            }
        }
        Mat3(out)
    }
}

/// The pair `(M^l(φ, θ), M^r(φ, θ))`.
pub fn collision_frames(phi: f64, theta: f64) -> (Mat3, Mat3) {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let left = Mat3([[-ct * cp, st, ct * sp], [-st * cp, -ct, st * sp], [sp, 0.0, cp]]);
    let right = Mat3([[st, ct * sp, -ct * cp], [-ct, st * sp, -st * cp], [0.0, cp, sp]]);
    (left, right)
}

/// Rotation by `alpha` about the third axis.
pub fn z_rotation(alpha: f64) -> Mat3 {
    let (s, c) = alpha.sin_cos();
    Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

fn check_angles(tree: &McKeanTree, phis: &[f64], thetas: &[f64]) -> Result<()> {
    let expected = tree.leaf_count() - 1;
    for got in [phis.len(), thetas.len()] {
        if got != expected {
            return Err(Error::ArityMismatch { expected, got });
        }
    }
    Ok(())
}

/// Rotation array built recursively: the left block of the root is
/// premultiplied by `M^l`, the right block by `M^r`.
pub fn rotation_array(tree: &McKeanTree, phis: &[f64], thetas: &[f64]) -> Result<Vec<Mat3>> {
    check_angles(tree, phis, thetas)?;
    fn build(tree: &McKeanTree, phis: &[f64], thetas: &[f64]) -> Vec<Mat3> {
        let n = tree.leaf_count();
        if n == 1 {
            return vec![Mat3::IDENTITY];
        }
        let (l, r) = tree.split().expect("tree with more than one leaf");
        let nl = l.leaf_count();
        let (ml, mr) = collision_frames(phis[n - 2], thetas[n - 2]);
        let left = build(&l, &phis[..nl - 1], &thetas[..nl - 1]);
        let right = build(&r, &phis[nl - 1..n - 2], &thetas[nl - 1..n - 2]);
        left.into_iter().map(|o| ml * o).chain(right.into_iter().map(|o| mr * o)).collect()
    }
    Ok(build(tree, phis, thetas))
}

/// Rotation array as ordered path products `M^{ε_1}(φ_{m_1}) M^{ε_2}(φ_{m_2}) ...`
/// from the root down to each leaf.
pub fn path_rotation_array(tree: &McKeanTree, phis: &[f64], thetas: &[f64]) -> Result<Vec<Mat3>> {
    check_angles(tree, phis, thetas)?;
    Ok(tree.fold_paths(Mat3::IDENTITY, |q, m, side| {
        let (ml, mr) = collision_frames(phis[m], thetas[m]);
        match side {
            Side::Left => *q * ml,
            Side::Right => *q * mr,
        }
    }))
}

/// One of the four charts covering the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart(u8);

impl Chart {
    pub const ALL: [Chart; 4] = [Chart(1), Chart(2), Chart(3), Chart(4)];

    pub fn new(k: u8) -> Result<Chart> {
        if (1..=4).contains(&k) {
            Ok(Chart(k))
        } else {
            Err(Error::BadSpec(format!("chart index must be 1..=4, got {k}")))
        }
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    fn v_center(&self) -> f64 {
        if self.0 % 2 == 1 {
            PI
        } else {
            0.0
        }
    }

    /// Ellipse functional; the open domain is `value < 1/144`.
    pub fn domain_value(&self, u: f64, v: f64) -> f64 {
        let a = (u - PI / 2.0) / (5.0 * PI);
        let b = (v - self.v_center()) / (11.0 * PI);
        a * a + b * b
    }

    /// The parametrization `h_k(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        if self.0 <= 2 {
            [cv * su, sv * su, cu]
        } else {
            [cu, cv * su, sv * su]
        }
    }

    /// The orthogonal basis `B_k(u, v)` whose third column is `h_k(u, v)`.
    pub fn basis_at(&self, u: f64, v: f64) -> Mat3 {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let r1 = [sv, cv * cu, cv * su];
        let r2 = [-cv, sv * cu, sv * su];
        let r3 = [0.0, -su, cu];
        if self.0 <= 2 {
            Mat3([r1, r2, r3])
        } else {
            Mat3([r3, r1, r2])
        }
    }

    /// Inverse of [`point`](Self::point) on this chart's domain.
    pub fn coordinates(&self, x: Vec3) -> Result<(f64, f64)> {
        let r = norm(x);
        if !(r > 0.0) {
            return Err(Error::OutOfChart);
        }
        let x = scale(x, 1.0 / r);
        let (pole, a, b) = if self.0 <= 2 { (x[2], x[0], x[1]) } else { (x[0], x[1], x[2]) };
        let u = pole.clamp(-1.0, 1.0).acos();
        let mut v = b.atan2(a);
        if self.0 % 2 == 1 && v < 0.0 {
            v += 2.0 * PI;
        }
        if self.domain_value(u, v) > CHART_RADIUS_SQ + CHART_TOLERANCE {
            return Err(Error::OutOfChart);
        }
        Ok((u, v))
    }

    pub fn contains(&self, x: Vec3) -> bool {
        self.coordinates(x).is_ok()
    }

    /// `B_k` evaluated at the chart coordinates of the unit vector `x`.
    pub fn basis(&self, x: Vec3) -> Result<Mat3> {
        let (u, v) = self.coordinates(x)?;
        Ok(self.basis_at(u, v))
    }
}

/// First chart (in order 1..4) containing `x`.
pub fn select_chart(x: Vec3) -> Result<Chart> {
    Chart::ALL.into_iter().find(|c| c.contains(x)).ok_or(Error::OutOfChart)
}

/// Orthogonal frame `B(u)` with third column `u`, from the first chart containing `u`.
pub fn frame(x: Vec3) -> Result<Mat3> {
    select_chart(x)?.basis(x)
}

/// `ψ_j = B O_j e_3` for every leaf.
pub fn leaf_directions(basis: &Mat3, rotations: &[Mat3]) -> Vec<Vec3> {
    rotations.iter().map(|o| basis.apply(o.column(2))).collect()
}

/// `n` roughly uniform unit vectors on a Fibonacci spiral.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}
