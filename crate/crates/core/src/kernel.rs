//! Collision kernels `b` on (0,1), their spectral functionals and the
//! angular law `beta(dphi) = b(cos phi) sin phi dphi / 2` on `[0, pi]`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_left_singular, DEFAULT_TOLERANCE};

/// Number of intervals of the tabulated angular CDF.
pub const PHI_TABLE_INTERVALS: usize = 4096;
const SYMMETRY_TOLERANCE: f64 = 1e-8;
const CHECK_GRID: usize = 1000;

/// Closed-form kernel families. Each one is symmetric by construction,
/// being of the form `x * H(x^2 (1 - x^2))` or `x * H(|x - sqrt(1 - x^2)|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "preset")]
pub enum Preset {
    /// `b(x) = 2|x|`.
    Xabs,
    /// `b(x) ∝ |x|^3 (1 - x^2)`.
    Cubic,
    /// `b(x) ∝ x^2 sqrt(1 - x^2)`.
    SqrtW,
    /// Compactly supported bump around `x = 1/sqrt(2)`:
    /// `b(x) ∝ |x| (1 - ((|x| - sqrt(1 - x^2)) / width)^2)_+`.
    Spike { width: f64 },
    /// `b(x) ∝ |x| (x^2 (1 - x^2))^(-gamma)`; non-summable for `gamma >= 1`.
    PowerW { gamma: f64 },
}

impl Preset {
    /// Value at `x` with `y = sqrt(1 - x^2)` supplied by the caller.
    fn raw(&self, x: f64, y: f64) -> f64 {
        match *self {
            Preset::Xabs => 2.0 * x,
            Preset::Cubic => x * x * x * y * y,
            Preset::SqrtW => x * x * y,
            Preset::Spike { width } => {
                let d = (x - y) / width;
                x * (1.0 - d * d).max(0.0)
            }
            Preset::PowerW { gamma } => x * (x * y).powf(-2.0 * gamma),
        }
    }

    fn exponents(&self) -> [f64; 2] {
        match *self {
            Preset::PowerW { gamma } => [1.0 - 2.0 * gamma, -gamma],
            Preset::SqrtW => [2.0, 0.5],
            _ => [1.0, 0.0],
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match *self {
            Preset::Spike { width } => {
                // |x - sqrt(1 - x^2)| = width at the support edges.
                let mut v = Vec::new();
                for s in [-width, width] {
                    let disc = 2.0 - s * s;
                    if disc >= 0.0 {
                        let x = 0.5 * (s + disc.sqrt());
                        if x > 0.0 && x < 1.0 {
                            v.push(x);
                        }
                    }
                }
                v
            }
            _ => Vec::new(),
        }
    }
}

/// Raw (unnormalized) kernel description.
#[derive(Clone)]
pub enum KernelSpec {
    Preset(Preset),
    /// Piecewise-linear table of `(x, b(x))` nodes. Outside the node range the
    /// kernel is extended by `b(x0) (x/x0)^e0` and `b(xn) ((1-x)/(1-xn))^e1`.
    Table {
        points: Vec<(f64, f64)>,
        endpoint_exponents: [f64; 2],
    },
    /// Arbitrary function with declared endpoint exponents.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        endpoint_exponents: [f64; 2],
    },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Preset(p) => f.debug_tuple("Preset").field(p).finish(),
            KernelSpec::Table { points, endpoint_exponents } => f
                .debug_struct("Table")
                .field("nodes", &points.len())
                .field("endpoint_exponents", endpoint_exponents)
                .finish(),
            KernelSpec::Function { endpoint_exponents, .. } => {
                f.debug_struct("Function").field("endpoint_exponents", endpoint_exponents).finish_non_exhaustive()
            }
        }
    }
}

impl From<Preset> for KernelSpec {
    fn from(p: Preset) -> Self {
        KernelSpec::Preset(p)
    }
}

#[derive(Clone)]
enum Profile {
    Preset(Preset),
    Table { xs: Vec<f64>, bs: Vec<f64>, exponents: [f64; 2] },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Truncated { inner: Box<Profile>, level: f64 },
}

impl Profile {
    /// Value at `x` in `[0, 1]`, with `y = sqrt(1 - x^2)` supplied so that
    /// both endpoints are resolved to full precision.
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Profile::Preset(p) => p.raw(x, y),
            Profile::Table { xs, bs, exponents } => table_eval(xs, bs, *exponents, x, y),
            Profile::Function(f) => f(x),
            Profile::Truncated { inner, level } => {
                // Symmetrized b ∧ n; integrates to the same mass as b ∧ n.
                let direct = inner.eval(x, y).min(*level);
                let mirrored = inner.eval(y, x).min(*level);
                let swapped = if y > 0.0 {
                    mirrored * x / y
                } else if mirrored == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                0.5 * (direct + swapped)
            }
        }
    }
}

fn table_eval(xs: &[f64], bs: &[f64], e: [f64; 2], x: f64, y: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        if xs[0] <= 0.0 {
            return bs[0];
        }
        return bs[0] * (x / xs[0]).powf(e[0]);
    }
    if x >= xs[n - 1] {
        if xs[n - 1] >= 1.0 {
            return bs[n - 1];
        }
        // 1 - x = y^2 / (1 + x) keeps precision near x = 1.
        return bs[n - 1] * (y * y / (1.0 + x) / (1.0 - xs[n - 1])).powf(e[1]);
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    bs[i] + w * (bs[i + 1] - bs[i])
}

/// Normalized, validated collision kernel together with its angular sampler.
#[derive(Clone)]
pub struct CollisionKernel {
    profile: Profile,
    scale: f64,
    exponents: [f64; 2],
    breaks: Vec<f64>,
    truncation: Option<Truncation>,
    phi_cdf: Arc<[f64]>,
}

/// Record of a truncation `b ∧ n` with mass `B_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub level: f64,
    pub mass: f64,
}

impl fmt::Debug for CollisionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollisionKernel")
            .field("scale", &self.scale)
            .field("exponents", &self.exponents)
            .field("truncation", &self.truncation)
            .finish_non_exhaustive()
    }
}

/// Spectral quantities of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFunctionals {
    pub lambda_b: f64,
    pub l_s: Vec<(f64, f64)>,
    pub f_b: f64,
    pub g_b: f64,
}

impl KernelFunctionals {
    /// Looks up `l_s` for an exponent that was requested at construction.
    pub fn l(&self, s: f64) -> Option<f64> {
        self.l_s.iter().find(|(k, _)| *k == s).map(|&(_, v)| v)
    }
}

fn profile_from_spec(spec: &KernelSpec) -> Result<(Profile, [f64; 2], Vec<f64>)> {
    match spec {
        KernelSpec::Preset(p) => {
            match *p {
                Preset::Spike { width } if !(width > 0.0 && width.is_finite()) => {
                    return Err(Error::BadSpec(format!("spike width must be positive, got {width}")))
                }
                Preset::PowerW { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                    return Err(Error::BadSpec(format!("power exponent must be positive, got {gamma}")))
                }
                _ => {}
            }
            Ok((Profile::Preset(*p), p.exponents(), p.breaks()))
        }
        KernelSpec::Table { points, endpoint_exponents } => {
            if points.len() < 2 {
                return Err(Error::BadSpec("kernel table needs at least two nodes".into()));
            }
            let mut pts = points.clone();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.iter().any(|&(x, b)| !(0.0..=1.0).contains(&x) || !b.is_finite()) {
                return Err(Error::BadSpec("kernel table nodes must lie in [0,1] with finite values".into()));
            }
            if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::BadSpec("kernel table nodes must be distinct".into()));
            }
            if let Some(&(x, b)) = pts.iter().find(|p| p.1 < 0.0) {
                return Err(Error::NegativeKernel { value: b, at: x });
            }
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let bs: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let breaks = xs.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect();
            Ok((Profile::Table { xs, bs, exponents: *endpoint_exponents }, *endpoint_exponents, breaks))
        }
        KernelSpec::Function { f, endpoint_exponents } => {
            Ok((Profile::Function(f.clone()), *endpoint_exponents, Vec::new()))
        }
    }
}

/// `∫_0^1 f(x, sqrt(1 - x^2)) dx`, computed as an integral over `x = cos φ`
/// for `x >= 1/√2` and over `x = sin ψ` below, so that both endpoints sit at
/// angle zero where the power substitution is exact. `exponents` describe the
/// integrand as `x^e0` near 0 and `(1 - x)^e1` near 1.
fn integrate_unit<F: Fn(f64, f64) -> f64>(f: F, exponents: [f64; 2], breaks: &[f64], tol: f64) -> Result<f64> {
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &x in breaks.iter().filter(|&&x| x > 0.0 && x < 1.0) {
        if x >= FRAC_1_SQRT_2 {
            upper.push(x.acos());
        } else {
            lower.push(x.asin());
        }
    }
    let near_one = integrate_left_singular(
        |phi: f64| {
            let (s, c) = phi.sin_cos();
            f(c, s) * s
        },
        0.0,
        FRAC_PI_4,
        2.0 * exponents[1] + 1.0,
        &upper,
        0.5 * tol,
    )?;
    let near_zero = integrate_left_singular(
        |psi: f64| {
            let (s, c) = psi.sin_cos();
            f(s, c) * c
        },
        0.0,
        FRAC_PI_4,
        exponents[0],
        &lower,
        0.5 * tol,
    )?;
    Ok(near_one + near_zero)
}

fn check_grid() -> impl Iterator<Item = f64> {
    (0..CHECK_GRID).map(|i| (i as f64 + 0.5) / CHECK_GRID as f64)
}

fn mass(profile: &Profile, exponents: [f64; 2], breaks: &[f64]) -> Result<f64> {
    if exponents.iter().any(|&e| e <= -1.0) {
        return Err(Error::NotNormalizable);
    }
    let z = integrate_unit(|x, y| profile.eval(x, y), exponents, breaks, 1e-12).map_err(|_| Error::NotNormalizable)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NotNormalizable);
    }
    Ok(z)
}

fn finish(
    profile: Profile,
    exponents: [f64; 2],
    breaks: Vec<f64>,
    z: f64,
    truncation: Option<Truncation>,
) -> Result<CollisionKernel> {
    for x in check_grid() {
        let v = profile.eval(x, (1.0 - x * x).sqrt());
        if v < 0.0 {
            return Err(Error::NegativeKernel { value: v, at: x });
        }
        if !v.is_finite() {
            return Err(Error::NotNormalizable);
        }
    }
    let scale = 1.0 / z;
    for x in check_grid() {
        let y = (1.0 - x * x).sqrt();
        let bx = scale * profile.eval(x, y);
        let by = scale * profile.eval(y, x) * x / y;
        let residual = (bx - by).abs() / bx.abs().max(1.0);
        if residual > SYMMETRY_TOLERANCE {
            return Err(Error::SymmetryViolation { residual, at: x });
        }
    }
    let mut kernel = CollisionKernel { profile, scale, exponents, breaks, truncation, phi_cdf: Arc::from(Vec::new()) };
    kernel.phi_cdf = Arc::from(kernel.build_phi_cdf()?);
    Ok(kernel)
}

/// Validates and normalizes a kernel so that `∫_0^1 b = 1`.
pub fn make_kernel(spec: &KernelSpec) -> Result<CollisionKernel> {
    let (profile, exponents, breaks) = profile_from_spec(spec)?;
    let z = mass(&profile, exponents, &breaks)?;
    finish(profile, exponents, breaks, z, None)
}

/// Points `x = cos φ` where the profile crosses `level`, located by a scan
/// in `φ` followed by bisection.
fn level_crossings(p: &Profile, level: f64) -> Vec<f64> {
    const SCAN: usize = 4096;
    let g = |phi: f64| {
        let (s, c) = phi.sin_cos();
        p.eval(c, s) - level
    };
    let h = FRAC_PI_2 / SCAN as f64;
    let mut out = Vec::new();
    let mut prev = g(0.5 * h);
    for i in 1..SCAN {
        let (a, b) = ((i as f64 - 0.5) * h, (i as f64 + 0.5) * h);
        let cur = g(b);
        if prev.is_finite() && cur.is_finite() && (prev > 0.0) != (cur > 0.0) {
            let (mut lo, mut hi) = (a, b);
            let lo_positive = prev > 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == lo_positive {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((0.5 * (lo + hi)).cos());
        }
        prev = cur;
    }
    out
}

/// Builds the cutoff approximation `(b ∧ n) / B_n` with `B_n = ∫_0^1 (b ∧ n)`.
///
/// The truncated profile is symmetrized under `x ↔ sqrt(1 - x^2)`; this keeps
/// both the mass `B_n` and the collision operator unchanged.
pub fn truncate(spec: &KernelSpec, level: f64) -> Result<(CollisionKernel, f64)> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::BadSpec(format!("truncation level must be positive, got {level}")));
    }
    let (inner, inner_exp, mut breaks) = profile_from_spec(spec)?;
    for x in level_crossings(&inner, level) {
        breaks.push(x);
        breaks.push(((1.0 - x) * (1.0 + x)).sqrt());
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let clipped_exp = inner_exp.map(|e| e.max(0.0));
    let b_n = integrate_unit(|x, y| inner.eval(x, y).min(level), clipped_exp, &breaks, 1e-12)
        .map_err(|_| Error::NotNormalizable)?;
    if !(b_n > 0.0 && b_n.is_finite()) {
        return Err(Error::NotNormalizable);
    }
    let profile = Profile::Truncated { inner: Box::new(inner), level };
    let kernel = finish(profile, [0.0, -0.5], breaks, b_n, Some(Truncation { level, mass: b_n }))?;
    Ok((kernel, b_n))
}

impl CollisionKernel {
    /// Normalized kernel value at `x` in `[-1, 1]` (extended evenly).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs().min(1.0);
        self.eval_xy(x, ((1.0 - x) * (1.0 + x)).sqrt())
    }

    /// Normalized value at `x = cos φ` given also `y = sin φ`, both in `[0, 1]`.
    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        self.scale * self.profile.eval(x, y)
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// `∫_0^1 w(x, y) b(x) dx` with `y = sqrt(1 - x^2)`, to the given tolerance.
    pub fn integrate_against<F: Fn(f64, f64) -> f64>(&self, w: F, extra_breaks: &[f64], tol: f64) -> Result<f64> {
        let mut breaks = self.breaks.clone();
        breaks.extend_from_slice(extra_breaks);
        integrate_unit(|x, y| w(x, y) * self.eval_xy(x, y), self.exponents, &breaks, tol)
    }

    /// `Λ_b = -2 ∫ x^2 (1 - x^2) b(x) dx`.
    pub fn lambda_b(&self) -> Result<f64> {
        Ok(-2.0 * self.integrate_against(|x, y| x * x * y * y, &[], DEFAULT_TOLERANCE)?)
    }

    /// `l_s = ∫ (1 - x^2)^(s/2) b(x) dx`.
    pub fn l_s(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::BadSpec(format!("l_s needs s > 0, got {s}")));
        }
        self.integrate_against(|_, y| y.powf(s), &[], DEFAULT_TOLERANCE)
    }

    /// `f(b) = ∫ sin^2 φ |3/2 sin^2 φ - 1/2| β(dφ)`.
    pub fn f_b(&self) -> Result<f64> {
        let kink = (2.0f64 / 3.0).sqrt();
        self.integrate_against(
            |_, y| {
                let s2 = y * y;
                s2 * (1.5 * s2 - 0.5).abs()
            },
            &[kink],
            DEFAULT_TOLERANCE,
        )
    }

    /// `g(b) = ∫ sin^4 φ |5/2 sin^2 φ - 3/2| β(dφ)`.
    pub fn g_b(&self) -> Result<f64> {
        let kink = (2.0f64 / 5.0).sqrt();
        self.integrate_against(
            |_, y| {
                let s2 = y * y;
                s2 * s2 * (2.5 * s2 - 1.5).abs()
            },
            &[kink],
            DEFAULT_TOLERANCE,
        )
    }

    pub fn functionals(&self, s_list: &[f64]) -> Result<KernelFunctionals> {
        let l_s = s_list.iter().map(|&s| Ok((s, self.l_s(s)?))).collect::<Result<Vec<_>>>()?;
        Ok(KernelFunctionals { lambda_b: self.lambda_b()?, l_s, f_b: self.f_b()?, g_b: self.g_b()? })
    }

    fn build_phi_cdf(&self) -> Result<Vec<f64>> {
        let n = PHI_TABLE_INTERVALS;
        let half = n / 2;
        let h = PI / n as f64;
        // β-mass of [φ_{i-1}, φ_i] for φ in [0, π/2]. Below π/4 the pieces are
        // integrated in φ, above it in ψ = π/2 - φ, so each endpoint is at zero.
        let quarter = n / 4;
        let upper: Vec<f64> =
            self.breaks.iter().filter(|&&x| (FRAC_1_SQRT_2..1.0).contains(&x)).map(|x| x.acos()).collect();
        let lower: Vec<f64> = self.breaks.iter().filter(|&&x| x > 0.0 && x < FRAC_1_SQRT_2).map(|x| x.asin()).collect();
        let mut pieces = Vec::with_capacity(half);
        for i in 1..=half {
            let m = if i <= quarter {
                let e = if i == 1 { 2.0 * self.exponents[1] + 1.0 } else { 0.0 };
                let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
                let f = |phi: f64| {
                    let (s, c) = phi.sin_cos();
                    self.eval_xy(c, s) * s
                };
                if i == 1 {
                    integrate_left_singular(f, a, b, e, &upper, 1e-13)?
                } else {
                    integrate_left_singular(f, a, b, 0.0, &upper, 1e-13)?
                }
            } else {
                let e = if i == half { self.exponents[0] } else { 0.0 };
                let (a, b) = ((half - i) as f64 * h, (half - i + 1) as f64 * h);
                let f = |psi: f64| {
                    let (s, c) = psi.sin_cos();
                    self.eval_xy(s, c) * c
                };
                integrate_left_singular(f, a, b, e, &lower, 1e-13)?
            };
            pieces.push(m.max(0.0));
        }
        let total: f64 = pieces.iter().sum();
        let mut cdf = vec![0.0; n + 1];
        let mut acc = 0.0;
        for i in 1..=half {
            acc += pieces[i - 1];
            cdf[i] = 0.5 * acc / total;
        }
        cdf[half] = 0.5;
        for i in half + 1..=n {
            cdf[i] = 1.0 - cdf[n - i];
        }
        cdf[n] = 1.0;
        Ok(cdf)
    }

    /// Tabulated CDF of β at the nodes `φ_i = iπ/N`.
    pub fn phi_cdf(&self) -> &[f64] {
        &self.phi_cdf
    }

    /// Maps `u` in `[0, 1)` to an angle by inverting the tabulated CDF.
    pub fn phi_quantile(&self, u: f64) -> f64 {
        let cdf = &self.phi_cdf;
        let n = cdf.len() - 1;
        let h = PI / n as f64;
        let i = (cdf.partition_point(|&c| c <= u).max(1) - 1).min(n - 1);
        let width = cdf[i + 1] - cdf[i];
        let frac = if width > 0.0 { ((u - cdf[i]) / width).clamp(0.0, 1.0) } else { 0.0 };
        (i as f64 + frac) * h
    }

    /// Draws `φ ~ β`.
    pub fn sample_phi<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.phi_quantile(rng.random::<f64>())
    }
}
