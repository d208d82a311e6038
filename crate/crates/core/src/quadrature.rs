//! Adaptive Gauss–Kronrod (7/15) quadrature with optional endpoint
//! substitutions for integrable power singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Default absolute tolerance used by kernel functionals.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        k += w * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    let error = ((k - g) * h).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_pieces(f, &[a, b], tol)
}

/// Integrates over consecutive pieces `[p0,p1], [p1,p2], ...` with a shared
/// global error budget. Interior points are typically kinks of the integrand.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let mut total_error = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let s = kronrod(&f, w[0], w[1]);
            total_error += s.error;
            heap.push(s);
        }
    }
    while total_error > tol {
        if heap.len() >= MAX_SEGMENTS {
            break;
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute from scratch so that the bookkeeping drift does not matter.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = segs.iter().map(|s| s.value).sum();
    let error: f64 = segs.iter().map(|s| s.error).sum();
    if !value.is_finite() || error > tol {
        return Err(Error::QuadratureFailure { tolerance: tol, estimate: error });
    }
    Ok(value)
}

/// Integrates over `[a, b]` where the integrand behaves like `(x - a)^e`
/// near `a`. For a non-integer `e < 1` the substitution `x = a + h s^p` with
/// `p = 2/(1 + e)` makes the transformed integrand vanish linearly at `s = 0`.
/// Interior `breaks` are passed through the substitution.
pub fn integrate_left_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    exponent: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if exponent <= -1.0 {
        return Err(Error::QuadratureFailure { tolerance: tol, estimate: f64::INFINITY });
    }
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let smooth = exponent >= 1.0 || exponent.fract() == 0.0;
    if smooth {
        return integrate_pieces(f, &pts, tol);
    }
    let p = 2.0 / (1.0 + exponent);
    let h = b - a;
    let g = |s: f64| f(a + h * s.powf(p)) * h * p * s.powf(p - 1.0);
    let spts: Vec<f64> = pts.iter().map(|&x| ((x - a) / h).powf(1.0 / p)).collect();
    integrate_pieces(g, &spts, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (1024.0 / 10.0 - 8.0)).abs() < 1e-11);
    }

    #[test]
    fn kink_converges() {
        let v = integrate_pieces(|x: f64| (x - 0.3).abs(), &[0.0, 1.0], 1e-10).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn power_singularities() {
        let v = integrate_left_singular(|y: f64| 1.0 / y.sqrt(), 0.0, 1.0, -0.5, &[], 1e-11).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = integrate_left_singular(|x: f64| x.powf(-0.75), 0.0, 1.0, -0.75, &[0.3], 1e-11).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
        let v = integrate_left_singular(|x: f64| x.powf(0.3), 0.0, 1.0, 0.3, &[], 1e-12).unwrap();
        assert!((v - 1.0 / 1.3).abs() < 1e-11);
    }

    #[test]
    fn divergent_exponent_rejected() {
        assert!(integrate_left_singular(|x: f64| 1.0 / x, 0.0, 1.0, -1.0, &[], 1e-10).is_err());
    }
}
