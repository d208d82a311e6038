//! Leaf weights `π`, `ζ`, `η`, the statistic `W`, expected-sum recursions,
//! the Newton power-sum bounds and the envelope function `Ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{McKeanTree, Side};

const BRANCH_TOLERANCE: f64 = 1e-12;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Legendre polynomial `P_k(x)` by the three-term recurrence.
pub fn legendre(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for m in 1..k {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Leaf weights of Legendre order `k`; `order = 1` gives the `π` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightArray {
    pub values: Vec<f64>,
    pub order: usize,
}

impl WeightArray {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ |w_j|^s`.
    pub fn power_sum(&self, s: f64) -> f64 {
        power_sum(&self.values, s)
    }
}

/// `Σ |w_j|^s`.
pub fn power_sum(values: &[f64], s: f64) -> f64 {
    if s == 2.0 {
        return values.iter().map(|v| v * v).sum();
    }
    if s == 4.0 {
        return values.iter().map(|v| (v * v) * (v * v)).sum();
    }
    values.iter().map(|v| v.abs().powf(s)).sum()
}

/// Leaf weights of order `k` for a tree with angles `phis` (length `n - 1`,
/// indexed as in [`McKeanTree::fold_paths`]). Along each path the weight is
/// multiplied by `P_k(cos φ)` on a left turn and `P_k(sin φ)` on a right turn.
pub fn leaf_weights(tree: &McKeanTree, phis: &[f64], k: usize) -> Result<WeightArray> {
    let n = tree.leaf_count();
    if phis.len() + 1 != n {
        return Err(Error::ArityMismatch { expected: n - 1, got: phis.len() });
    }
    if k == 0 {
        return Err(Error::BadSpec("Legendre order must be at least 1".into()));
    }
    let values = tree.fold_paths(1.0, |w, m, side| {
        let c = match side {
            Side::Left => phis[m].cos(),
            Side::Right => phis[m].sin(),
        };
        w * legendre(k, c)
    });
    Ok(WeightArray { values, order: k })
}

/// `W = Σ π_j^4`.
pub fn w_statistic(pi: &WeightArray) -> Result<f64> {
    if pi.order != 1 {
        return Err(Error::WrongOrder { expected: 1, got: pi.order });
    }
    Ok(pi.power_sum(4.0))
}

/// `a_n` from `a_1 = 1`, `a_{n+1} = (1 + (2α - 1)/n) a_n`.
pub fn expected_sum(alpha: f64, n: usize) -> f64 {
    let mut a = 1.0;
    for m in 1..n {
        a *= 1.0 + (2.0 * alpha - 1.0) / m as f64;
    }
    a
}

/// Closed form of [`expected_sum`]: `Γ(n + 2α - 1) / (Γ(n) Γ(2α))`, or the
/// alternating binomial when `1 - 2α` is a positive integer.
pub fn expected_sum_closed_form(alpha: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let m = 1.0 - 2.0 * alpha;
    let mr = m.round();
    if mr >= 1.0 && (m - mr).abs() <= BRANCH_TOLERANCE {
        let m = mr as usize;
        if n > m {
            return 0.0;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        return sign * binomial(m - 1, n - 1);
    }
    let (la, sa) = libm::lgamma_r(n as f64 + 2.0 * alpha - 1.0);
    let (lb, _) = libm::lgamma_r(n as f64);
    let (lc, sc) = libm::lgamma_r(2.0 * alpha);
    (sa * sc) as f64 * (la - lb - lc).exp()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E_t = e^{-(1 - 2α) t}`, the mixture of `a_n` over the law of `ν`.
pub fn expected_sum_at_time(alpha: f64, t: f64) -> f64 {
    (-(1.0 - 2.0 * alpha) * t).exp()
}

/// Outcome of the Newton-identity checks for one weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    /// `N_k = Σ a_j^k` for `k = 1..=K`.
    pub power_sums: Vec<f64>,
    /// `S_k`, the elementary symmetric functions, for `k = 1..=K`.
    pub elementary: Vec<f64>,
    /// `1/k! - 2^{k-1} a*` for `k = 1..=K`.
    pub bounds: Vec<f64>,
    /// Whether `N_2 <= a*` so that the bounds apply.
    pub hypothesis_holds: bool,
    /// Orders `k` at which `S_k` fell below its bound.
    pub violations: Vec<usize>,
    pub product: Option<ProductBoundCheck>,
}

impl NewtonReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.product.as_ref().is_none_or(|p| p.violations == 0)
    }
}

/// `Π (1 + a_j x^2) >= x^{2r} / (2 r!)` on a grid of `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBoundCheck {
    pub r: usize,
    pub epsilon: f64,
    pub points: usize,
    pub violations: usize,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Elementary symmetric functions of `a` up to order `k_max` via Newton's
/// identities `k S_k = Σ_{j=1}^k (-1)^{j+1} N_j S_{k-j}`.
pub fn elementary_symmetric(a: &[f64], k_max: usize) -> (Vec<f64>, Vec<f64>) {
    let n: Vec<f64> = (1..=k_max).map(|k| a.iter().map(|x| x.powi(k as i32)).sum()).collect();
    let mut s = vec![1.0];
    for k in 1..=k_max {
        let mut acc = 0.0;
        for j in 1..=k {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * n[j - 1] * s[k - j];
        }
        s.push(acc / k as f64);
    }
    s.remove(0);
    (n, s)
}

/// Checks `S_k >= 1/k! - 2^{k-1} a*` for `k <= min(n, max(8, r))` and, when
/// `n >= r` and `a* <= 1/(2^r r!)`, the product bound on a log grid of `x`.
pub fn symmetric_function_bound(a: &[f64], r: usize, a_star: f64) -> Result<NewtonReport> {
    let n1: f64 = a.iter().sum();
    if (n1 - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { value: n1 });
    }
    if r == 0 || !(a_star > 0.0) {
        return Err(Error::BadSpec("need r >= 1 and a* > 0".into()));
    }
    let k_max = a.len().min(r.max(8));
    let (power_sums, elementary) = elementary_symmetric(a, k_max);
    let n2 = power_sums.get(1).copied().unwrap_or(n1 * n1);
    let hypothesis_holds = n2 <= a_star;
    let bounds: Vec<f64> = (1..=k_max).map(|k| 1.0 / factorial(k) - 2f64.powi(k as i32 - 1) * a_star).collect();
    let mut violations = Vec::new();
    if hypothesis_holds {
        for k in 1..=k_max.min(8) {
            let slack = 64.0 * f64::EPSILON / factorial(k);
            if elementary[k - 1] < bounds[k - 1] - slack {
                violations.push(k);
            }
        }
    }
    let partition_a_star = 1.0 / (2f64.powi(r as i32) * factorial(r));
    let product = (hypothesis_holds && a.len() >= r && a_star <= partition_a_star * (1.0 + 1e-12)).then(|| {
        let epsilon = 1.0 / (2.0 * factorial(r));
        let points = 121;
        let violations = (0..points)
            .filter(|&i| {
                let x = 10f64.powf(-3.0 + 6.0 * i as f64 / (points - 1) as f64);
                let lhs: f64 = a.iter().map(|aj| (aj * x * x).ln_1p()).sum();
                let rhs = epsilon.ln() + 2.0 * r as f64 * x.ln();
                lhs < rhs - 1e-12
            })
            .count();
        ProductBoundCheck { r, epsilon, points, violations }
    });
    Ok(NewtonReport { power_sums, elementary, bounds, hypothesis_holds, violations, product })
}

/// `r = 11 ⌈2/p⌉` and `a* = 1/(2^r r!)`.
pub fn partition_parameters(p: f64) -> Result<(usize, f64)> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::BadSpec(format!("p must be positive, got {p}")));
    }
    let r = 11 * (2.0 / p).ceil() as usize;
    Ok((r, 1.0 / (2f64.powi(r as i32) * factorial(r))))
}

/// `Ψ(ρ) = Π_j (λ² / (λ² + ρ² π_j²))^q`.
pub fn psi_envelope(lambda: f64, q: f64, pi: &[f64], rho: f64) -> f64 {
    let l2 = lambda * lambda;
    let log: f64 = pi.iter().map(|p| (rho * rho * p * p / l2).ln_1p()).sum();
    (-q * log).exp()
}

/// `R = (1/2) (m4 W)^{-1/4}`.
pub fn envelope_radius(m4: f64, w: f64) -> f64 {
    0.5 * (m4 * w).powf(-0.25)
}
