//! Hermite polynomials and Gauss quadrature rules.
//!
//! The Hermite rules keep weights in log form: for a few hundred nodes the
//! outermost weights are far below the smallest representable `f64`, while the
//! polynomial values they multiply are far above the largest one.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Rescaling threshold for the log-scaled recurrences.
const BIG: f64 = 1e150;

/// Physicists' Hermite polynomial as `(ln |H_n(x)|, sign)`.
///
/// Uses the recurrence of the normalised polynomials ĥ_n = H_n/√(2ⁿ n!), so
/// neither 2ⁿ n! nor H_n itself overflows for large n.
pub fn hermite_h_log(n: usize, x: f64) -> (f64, f64) {
    let (ln_hat, sign) = normalized_hermite_log(n, x);
    let ln_norm = 0.5 * (n as f64 * std::f64::consts::LN_2 + ln_factorial(n));
    (ln_hat + ln_norm, sign)
}

/// Physicists' Hermite polynomial H_n(x); non-finite when the value is not
/// representable (use [`hermite_h_log`] then).
pub fn hermite_h(n: usize, x: f64) -> f64 {
    if n <= 60 {
        // Direct recurrence is exact in integer arithmetic at small n and
        // cheaper; the log form takes over beyond.
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..n {
            let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    let (ln_abs, sign) = hermite_h_log(n, x);
    sign * ln_abs.exp()
}

/// ĥ_n(x) = H_n(x)/√(2ⁿ n!) as `(ln |ĥ_n|, sign)`.
pub fn normalized_hermite_log(n: usize, x: f64) -> (f64, f64) {
    let (_, cur, scale) = normalized_pair(n, x);
    if cur == 0.0 {
        (f64::NEG_INFINITY, 1.0)
    } else {
        (cur.abs().ln() + scale, cur.signum())
    }
}

/// Returns `(ĥ_{n−1}, ĥ_n, ln scale)` with both values multiplied by
/// `exp(−scale)`.
fn normalized_pair(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur, mut scale) = (0.0, 1.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            scale += BIG.ln();
        }
    }
    (prev, cur, scale)
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ln Σ exp(a_i), robust against overflow and empty/all −∞ input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|a| (a - max).exp()).sum::<f64>().ln()
}

/// Gauss–Hermite rule for the weight e^{−x²}: nodes in increasing order and
/// natural-log weights.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub ln_weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Gauss–Hermite rule needs at least one node"));
        }
        let nf = n as f64;
        let half = n.div_ceil(2);
        // Starting values: eigenvalues of the Jacobi matrix (Golub–Welsch),
        // polished below by Newton on the recurrence.
        let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(|a, b| b.total_cmp(a));
        let mut pos = Vec::with_capacity(half);
        let mut ln_w = Vec::with_capacity(half);
        for (i, &guess) in guesses.iter().take(half).enumerate() {
            let mut z = guess;
            if n % 2 == 1 && i == half - 1 {
                z = 0.0;
            }
            let mut converged = false;
            let mut ln_pp = 0.0;
            let mut last_change = f64::NAN;
            for _ in 0..50 {
                let (prev, cur, scale) = normalized_pair(n, z);
                // d/dx ĥ_n = √(2n) ĥ_{n−1}
                let pp = (2.0 * nf).sqrt() * prev;
                let step = cur / pp;
                ln_pp = pp.abs().ln() + scale;
                if step.abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
                z -= step;
                last_change = step.abs();
            }
            if !converged {
                return Err(Error::NoConvergence {
                    what: format!("Gauss–Hermite node {i} of {n}"),
                    iterations: 50,
                    last_change,
                });
            }
            pos.push(z);
            // With ĥ normalised so that ∫e^{−x²}ĥ_n² = √π, w = 2√π / ĥ'_n(x)².
            ln_w.push(std::f64::consts::LN_2 + 0.5 * PI.ln() - 2.0 * ln_pp);
        }
        let mut nodes = Vec::with_capacity(n);
        let mut ln_weights = Vec::with_capacity(n);
        for i in 0..half {
            nodes.push(-pos[i]);
            ln_weights.push(ln_w[i]);
        }
        let mirror = if n % 2 == 1 { half - 1 } else { half };
        for i in (0..mirror).rev() {
            nodes.push(pos[i]);
            ln_weights.push(ln_w[i]);
        }
        if n % 2 == 1 {
            // The middle node is exactly zero by symmetry.
            nodes[half - 1] = 0.0;
        }
        let rule = Self { nodes, ln_weights };
        rule.check()?;
        Ok(rule)
    }

    /// Process-wide cached rule; building large rules costs an eigenvalue
    /// decomposition.
    pub fn shared(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(n)?);
        cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(n, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self) -> Result<()> {
        if !self.nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::SelfTest(format!(
                "Gauss–Hermite nodes for n = {} are not strictly increasing",
                self.len()
            )));
        }
        let total = log_sum_exp(self.ln_weights.iter().copied()).exp();
        if (total / PI.sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::SelfTest(format!(
                "Gauss–Hermite weights for n = {} sum to {total}, expected √π",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss–Legendre rule needs at least one node");
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 1.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let step = p1 / pp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// ∫_a^b f with this rule mapped onto [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// Outcome of [`integrate_adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive panel quadrature: the panel with the largest error
/// estimate (whole-panel rule against the two half-panel rules) is bisected
/// until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive(
    what: &str,
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rule: &GaussLegendre,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<AdaptiveResult> {
    let make = |a: f64, b: f64| {
        let whole = rule.integrate(a, b, &f);
        let m = 0.5 * (a + b);
        let halves = rule.integrate(a, m, &f) + rule.integrate(m, b, &f);
        Panel {
            a,
            b,
            value: halves,
            error: (whole - halves).abs(),
        }
    };
    let mut heap = BinaryHeap::new();
    heap.push(make(a, b));
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(AdaptiveResult {
                value,
                error,
                panels: heap.len(),
            });
        }
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                what: what.to_string(),
                achieved: error,
                target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::Quadrature {
                what: what.to_string(),
                achieved: error,
                target,
            });
        }
        heap.push(make(worst.a, m));
        heap.push(make(m, worst.b));
    }
}
