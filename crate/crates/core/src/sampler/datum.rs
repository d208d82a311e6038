use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, scale, sub, Mat3, Vec3};
use crate::quadrature::integrate_pieces;

/// Description of an initial velocity distribution before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumSpec {
    Gaussian {
        mean: Vec3,
        covariance: [[f64; 3]; 3],
    },
    Mixture {
        components: Vec<GaussianComponent>,
    },
    /// Weighted atoms `(w, v)`.
    Discrete {
        atoms: Vec<(f64, Vec3)>,
    },
    /// Mass 1/6 at each of `±e_1, ±e_2, ±e_3`.
    SixPoint,
    /// Density `q / (4π |v|^{3+q})` on `|v| >= 1`, `q` in (3, 4).
    HeavyTail {
        q: f64,
    },
    /// Equally weighted velocity table.
    Table {
        velocities: Vec<Vec3>,
    },
}

impl DatumSpec {
    /// Standard Gaussian `γ_{0,1}`.
    pub fn standard_gaussian() -> Self {
        DatumSpec::Gaussian { mean: [0.0; 3], covariance: Mat3::IDENTITY.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec3,
    pub covariance: [[f64; 3]; 3],
}

/// An absolute moment that may be infinite or not available in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
    Unknown,
}

impl Moment {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Moment::Finite(v) => Some(v),
            _ => None,
        }
    }
}

/// Moments of the normalized datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub mean: Vec3,
    pub covariance: [[f64; 3]; 3],
    /// `E|v|^2`.
    pub m2: f64,
    /// `E|v|^3`.
    pub m3: Moment,
    /// `E|v|^4`.
    pub m4: Moment,
    /// `E[|v|^2 v]`, when `m3` is finite.
    pub big_m3: Option<Vec3>,
}

impl MomentTable {
    pub fn require_m4(&self) -> Result<f64> {
        self.m4.finite().ok_or(Error::MomentUnavailable("m4"))
    }

    pub fn require_m3(&self) -> Result<f64> {
        self.m3.finite().ok_or(Error::MomentUnavailable("m3"))
    }
}

#[derive(Debug, Clone)]
struct Gauss {
    mean: Vec3,
    cov: [[f64; 3]; 3],
    chol: [[f64; 3]; 3],
}

impl Gauss {
    fn new(mean: Vec3, cov: [[f64; 3]; 3]) -> Result<Self> {
        Ok(Gauss { mean, cov, chol: cholesky(&cov)? })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let z: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let l = &self.chol;
        [
            self.mean[0] + l[0][0] * z[0],
            self.mean[1] + l[1][0] * z[0] + l[1][1] * z[1],
            self.mean[2] + l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
        ]
    }

    fn cf(&self, xi: Vec3) -> Complex64 {
        let q = dot(xi, Mat3(self.cov).apply(xi));
        Complex64::from_polar((-0.5 * q).exp(), dot(xi, self.mean))
    }

    fn moments(&self) -> MomentTable {
        let m = self.mean;
        let s = Mat3(self.cov);
        let tr = s.0[0][0] + s.0[1][1] + s.0[2][2];
        let tr2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| s.0[i][j] * s.0[j][i]).sum();
        let mm = dot(m, m);
        let sm = s.apply(m);
        let m4 = tr * tr + 2.0 * tr2 + 2.0 * mm * tr + 4.0 * dot(m, sm) + mm * mm;
        let sigma2 = tr / 3.0;
        let isotropic = mm == 0.0
            && (0..3).all(|i| {
                (0..3).all(|j| {
                    let target = if i == j { sigma2 } else { 0.0 };
                    (s.0[i][j] - target).abs() <= 1e-12 * sigma2.max(1.0)
                })
            });
        let m3 = if isotropic { Moment::Finite(8.0 * (2.0 / PI).sqrt() * sigma2.powf(1.5)) } else { Moment::Unknown };
        let big_m3 = [0, 1, 2].map(|i| (mm + tr) * m[i] + 2.0 * sm[i]);
        MomentTable { mean: m, covariance: self.cov, m2: tr + mm, m3, m4: Moment::Finite(m4), big_m3: Some(big_m3) }
    }
}

fn cholesky(a: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let scale = (0..3).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    for i in 0..3 {
        for j in 0..3 {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale || !a[i][j].is_finite() {
                return Err(Error::BadSpec("covariance must be symmetric and finite".into()));
            }
        }
    }
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d < -1e-12 * scale {
                    return Err(Error::BadSpec("covariance must be positive semidefinite".into()));
                }
                l[i][i] = d.max(0.0).sqrt();
            } else if l[j][j] > 1e-150 {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

#[derive(Debug, Clone)]
enum Law {
    Gaussian(Gauss),
    Mixture { cumulative: Vec<f64>, weights: Vec<f64>, parts: Vec<Gauss> },
    Discrete { cumulative: Vec<f64>, atoms: Vec<(f64, Vec3)> },
    HeavyTail { q: f64, scale: f64 },
}

/// A normalized initial datum: zero mean and `trace(covariance) = 3`.
#[derive(Debug, Clone)]
pub struct InitialDatum {
    law: Law,
    moments: MomentTable,
    spec: DatumSpec,
    normalization: (Vec3, f64),
}

fn cumulative(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::BadSpec("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::BadSpec("weights must have positive sum".into()));
    }
    let mut acc = 0.0;
    let mut c: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    *c.last_mut().expect("non-empty") = 1.0;
    Ok(c)
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn discrete_moments(atoms: &[(f64, Vec3)]) -> MomentTable {
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    let mut mean = [0.0; 3];
    for (w, v) in atoms {
        for i in 0..3 {
            mean[i] += w / total * v[i];
        }
    }
    let mut cov = [[0.0; 3]; 3];
    let (mut m2, mut m3, mut m4, mut big) = (0.0, 0.0, 0.0, [0.0; 3]);
    for (w, v) in atoms {
        let p = w / total;
        let d = sub(*v, mean);
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += p * d[i] * d[j];
            }
        }
        let r2 = dot(*v, *v);
        m2 += p * r2;
        m3 += p * r2.powf(1.5);
        m4 += p * r2 * r2;
        for i in 0..3 {
            big[i] += p * r2 * v[i];
        }
    }
    MomentTable { mean, covariance: cov, m2, m3: Moment::Finite(m3), m4: Moment::Finite(m4), big_m3: Some(big) }
}

fn heavy_tail_moments(q: f64, s: f64) -> MomentTable {
    let m2 = s * s * q / (q - 2.0);
    let c = m2 / 3.0;
    MomentTable {
        mean: [0.0; 3],
        covariance: [[c, 0.0, 0.0], [0.0, c, 0.0], [0.0, 0.0, c]],
        m2,
        m3: if q > 3.0 { Moment::Finite(s.powi(3) * q / (q - 3.0)) } else { Moment::Infinite },
        m4: if q > 4.0 { Moment::Finite(s.powi(4) * q / (q - 4.0)) } else { Moment::Infinite },
        big_m3: (q > 3.0).then_some([0.0; 3]),
    }
}

/// Characteristic function of the unit-scale heavy-tailed density at `|ξ| = ρ`.
fn heavy_tail_cf(q: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 1.0;
    }
    if rho <= 12.0 {
        let r2 = rho * rho;
        let mut value =
            1.0 - q / (6.0 * (q - 2.0)) * r2 - libm::tgamma(1.0 - q) * (q * PI / 2.0).cos() / (1.0 + q) * rho.powf(q);
        // term_m = ρ^{2m} / (2m+1)!
        let mut term = r2 / 6.0;
        for m in 2..200 {
            term *= r2 / ((2 * m) as f64 * (2 * m + 1) as f64);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let add = q * sign * term / (2.0 * m as f64 - q);
            value -= add;
            if term < 1e-18 && m as f64 > rho {
                break;
            }
        }
        return value;
    }
    // (q/ρ) ∫_1^∞ r^{-2-q} sin(ρ r) dr, truncated where the tail is below 1e-13.
    let upper = (q / (rho * (1.0 + q) * 1e-13)).powf(1.0 / (1.0 + q)).max(2.0);
    let period = TAU / rho;
    let pieces = ((upper - 1.0) / period).ceil() as usize;
    let points: Vec<f64> = (0..=pieces).map(|i| 1.0 + i as f64 * period).collect();
    let integral = integrate_pieces(|r: f64| r.powf(-2.0 - q) * (rho * r).sin(), &points, 1e-14).unwrap_or(f64::NAN);
    q / rho * integral
}

fn raw_law(spec: &DatumSpec) -> Result<Law> {
    match spec {
        DatumSpec::Gaussian { mean, covariance } => Ok(Law::Gaussian(Gauss::new(*mean, *covariance)?)),
        DatumSpec::Mixture { components } => {
            let weights: Vec<f64> = components.iter().map(|c| c.weight).collect();
            let cumulative = cumulative(&weights)?;
            let total: f64 = weights.iter().sum();
            let parts = components.iter().map(|c| Gauss::new(c.mean, c.covariance)).collect::<Result<_>>()?;
            Ok(Law::Mixture { cumulative, weights: weights.iter().map(|w| w / total).collect(), parts })
        }
        DatumSpec::Discrete { atoms } => {
            let weights: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            let cumulative = cumulative(&weights)?;
            let total: f64 = weights.iter().sum();
            if atoms.iter().any(|a| a.1.iter().any(|x| !x.is_finite())) {
                return Err(Error::BadSpec("atoms must be finite".into()));
            }
            Ok(Law::Discrete { cumulative, atoms: atoms.iter().map(|&(w, v)| (w / total, v)).collect() })
        }
        DatumSpec::SixPoint => {
            let mut atoms = Vec::new();
            for i in 0..3 {
                for s in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[i] = s;
                    atoms.push((1.0 / 6.0, v));
                }
            }
            raw_law(&DatumSpec::Discrete { atoms })
        }
        DatumSpec::HeavyTail { q } => {
            if !(*q > 3.0 && *q < 4.0) {
                return Err(Error::BadSpec(format!("heavy-tail exponent must lie in (3, 4), got {q}")));
            }
            Ok(Law::HeavyTail { q: *q, scale: 1.0 })
        }
        DatumSpec::Table { velocities } => {
            raw_law(&DatumSpec::Discrete { atoms: velocities.iter().map(|&v| (1.0, v)).collect() })
        }
    }
}

impl Law {
    fn moments(&self) -> MomentTable {
        match self {
            Law::Gaussian(g) => g.moments(),
            Law::Mixture { weights, parts, .. } => {
                let tables: Vec<MomentTable> = parts.iter().map(Gauss::moments).collect();
                let mut mean = [0.0; 3];
                let mut second = [[0.0; 3]; 3];
                let (mut m2, mut m4) = (0.0, 0.0);
                let mut m3 = Some(0.0);
                let mut big = [0.0; 3];
                for (w, (g, t)) in weights.iter().zip(parts.iter().zip(&tables)) {
                    for i in 0..3 {
                        mean[i] += w * g.mean[i];
                        big[i] += w * t.big_m3.unwrap_or([0.0; 3])[i];
                        for j in 0..3 {
                            second[i][j] += w * (g.cov[i][j] + g.mean[i] * g.mean[j]);
                        }
                    }
                    m2 += w * t.m2;
                    m4 += w * t.m4.finite().unwrap_or(f64::NAN);
                    m3 = m3.zip(t.m3.finite()).map(|(a, b)| a + w * b);
                }
                let mut cov = second;
                for i in 0..3 {
                    for j in 0..3 {
                        cov[i][j] -= mean[i] * mean[j];
                    }
                }
                MomentTable {
                    mean,
                    covariance: cov,
                    m2,
                    m3: m3.map_or(Moment::Unknown, Moment::Finite),
                    m4: Moment::Finite(m4),
                    big_m3: Some(big),
                }
            }
            Law::Discrete { atoms, .. } => discrete_moments(atoms),
            Law::HeavyTail { q, scale } => heavy_tail_moments(*q, *scale),
        }
    }

    /// The law of `s (v - shift)`.
    fn affine(self, shift: Vec3, s: f64) -> Result<Law> {
        let map = |v: Vec3| scale(sub(v, shift), s);
        let map_cov = |c: [[f64; 3]; 3]| c.map(|row| row.map(|x| x * s * s));
        Ok(match self {
            Law::Gaussian(g) => Law::Gaussian(Gauss::new(map(g.mean), map_cov(g.cov))?),
            Law::Mixture { cumulative, weights, parts } => Law::Mixture {
                cumulative,
                weights,
                parts: parts.into_iter().map(|g| Gauss::new(map(g.mean), map_cov(g.cov))).collect::<Result<_>>()?,
            },
            Law::Discrete { cumulative, atoms } => {
                Law::Discrete { cumulative, atoms: atoms.into_iter().map(|(w, v)| (w, map(v))).collect() }
            }
            Law::HeavyTail { q, scale } => Law::HeavyTail { q, scale: scale * s },
        })
    }
}

/// Builds a datum and rescales it to zero mean and `trace(covariance) = 3`.
pub fn make_initial_datum(spec: &DatumSpec) -> Result<InitialDatum> {
    make_datum(spec, true)
}

/// Builds a datum, normalizing it only when asked.
pub fn make_datum(spec: &DatumSpec, normalize: bool) -> Result<InitialDatum> {
    let raw = raw_law(spec)?;
    if !normalize {
        let moments = raw.moments();
        return Ok(InitialDatum { law: raw, moments, spec: spec.clone(), normalization: ([0.0; 3], 1.0) });
    }
    let m = raw.moments();
    let trace = m.covariance[0][0] + m.covariance[1][1] + m.covariance[2][2];
    if !(trace > 1e-300 && trace.is_finite()) {
        return Err(Error::BadSpec("initial datum must have a positive finite second moment".into()));
    }
    let s = (3.0 / trace).sqrt();
    let law = raw.affine(m.mean, s)?;
    let mut moments = law.moments();
    // The normalized mean is zero up to rounding; store it exactly.
    moments.mean = moments.mean.map(|x| if x.abs() < 1e-14 { 0.0 } else { x });
    Ok(InitialDatum { law, moments, spec: spec.clone(), normalization: (m.mean, s) })
}

impl InitialDatum {
    pub fn spec(&self) -> &DatumSpec {
        &self.spec
    }

    pub fn moments(&self) -> &MomentTable {
        &self.moments
    }

    /// `(shift, scale)` such that normalized velocities are `scale (v - shift)`.
    pub fn normalization(&self) -> (Vec3, f64) {
        self.normalization
    }

    pub fn has_analytic_cf(&self) -> bool {
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match &self.law {
            Law::Gaussian(g) => g.sample(rng),
            Law::Mixture { cumulative, parts, .. } => {
                let i = pick(cumulative, rng.random::<f64>());
                parts[i].sample(rng)
            }
            Law::Discrete { cumulative, atoms } => atoms[pick(cumulative, rng.random::<f64>())].1,
            Law::HeavyTail { q, scale } => {
                let r = (1.0 - rng.random::<f64>()).powf(-1.0 / q) * scale;
                let z = 2.0 * rng.random::<f64>() - 1.0;
                let a = TAU * rng.random::<f64>();
                let s = (1.0 - z * z).max(0.0).sqrt();
                [r * s * a.cos(), r * s * a.sin(), r * z]
            }
        }
    }

    /// `μ̂_0(ξ) = E e^{i ξ·v}`.
    pub fn cf(&self, xi: Vec3) -> Result<Complex64> {
        Ok(match &self.law {
            Law::Gaussian(g) => g.cf(xi),
            Law::Mixture { weights, parts, .. } => weights.iter().zip(parts).map(|(w, g)| g.cf(xi) * w).sum(),
            Law::Discrete { atoms, .. } => atoms.iter().map(|(w, v)| Complex64::from_polar(*w, dot(xi, *v))).sum(),
            Law::HeavyTail { q, scale } => Complex64::new(heavy_tail_cf(*q, scale * norm(xi)), 0.0),
        })
    }
}
