//! Quadrature rules: Gauss–Legendre panels for rapidity integrals and
//! Hermite-weighted rules for Gaussian boost averages.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
///
/// Newton iteration on the three-term recurrence, started from the
/// Chebyshev-like asymptotic guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for
/// ∫ g(u) e^{−u²} du, from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("cache lock").get(&n) {
        return rule.clone();
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize to remove eigen-solver asymmetry.
    for i in 0..n / 2 {
        let k = n - 1 - i;
        let x = 0.5 * (pairs[k].0 - pairs[i].0);
        let w = 0.5 * (pairs[k].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let rule = Arc::new(pairs.into_iter().unzip());
    cache.lock().expect("cache lock").insert(n, rule.clone());
    rule
}

/// A rule for ∫ g(u) e^{−u²} du on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HermiteRule {
    /// Gauss–Hermite with the given node count.
    GaussHermite { nodes: usize },
    /// Trapezoid sum with step `step` on [−half_width, half_width]; converges
    /// geometrically for entire integrands, including strongly oscillating
    /// weights produced by complex shifts.
    Trapezoid { step: f64, half_width: f64 },
}

impl Default for HermiteRule {
    fn default() -> Self {
        HermiteRule::GaussHermite { nodes: 64 }
    }
}

impl HermiteRule {
    /// Resolves boost averages of packets at wedge depth and their complex
    /// shifts up to Im z ≈ 2π at ε ≥ 0.5.
    pub const WEDGE: HermiteRule = HermiteRule::Trapezoid { step: 0.07, half_width: 9.5 };

    /// Node positions u_j and weights w_j with Σ w_j g(u_j) ≈ ∫ g e^{−u²}.
    pub fn nodes(&self) -> Arc<(Vec<f64>, Vec<f64>)> {
        match *self {
            HermiteRule::GaussHermite { nodes } => gauss_hermite(nodes),
            HermiteRule::Trapezoid { step, half_width } => {
                let n = (half_width / step).ceil() as i64;
                let (u, w) = (-n..=n)
                    .map(|k| {
                        let u = k as f64 * step;
                        (u, step * (-u * u).exp())
                    })
                    .unzip();
                Arc::new((u, w))
            }
        }
    }

    /// The rule with doubled resolution, used for stability checks.
    pub fn refined(&self) -> HermiteRule {
        match *self {
            HermiteRule::GaussHermite { nodes } => HermiteRule::GaussHermite { nodes: 2 * nodes },
            HermiteRule::Trapezoid { step, half_width } => HermiteRule::Trapezoid {
                step: step / 2.0,
                half_width: half_width + 1.0,
            },
        }
    }

    /// The rule with halved resolution.
    pub fn coarsened(&self) -> HermiteRule {
        match *self {
            HermiteRule::GaussHermite { nodes } => HermiteRule::GaussHermite { nodes: (nodes / 2).max(1) },
            HermiteRule::Trapezoid { step, half_width } => HermiteRule::Trapezoid { step: 2.0 * step, half_width },
        }
    }
}

/// Composite Gauss–Legendre rule on [−theta_max, theta_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RapidityGrid {
    pub theta_max: f64,
    pub panels: usize,
    pub order: usize,
}

impl Default for RapidityGrid {
    fn default() -> Self {
        RapidityGrid { theta_max: 8.0, panels: 64, order: 16 }
    }
}

impl RapidityGrid {
    pub fn len(&self) -> usize {
        self.panels * self.order
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn doubled(&self) -> RapidityGrid {
        RapidityGrid { panels: 2 * self.panels, ..*self }
    }

    pub fn halved(&self) -> RapidityGrid {
        RapidityGrid { panels: (self.panels / 2).max(1), ..*self }
    }

    /// Nodes and weights, panel by panel in increasing θ.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.order);
        let h = 2.0 * self.theta_max / self.panels as f64;
        let mut nodes = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        for p in 0..self.panels {
            let a = -self.theta_max + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        (nodes, weights)
    }
}

/// Pairwise summation with a fixed tree shape, so results do not depend on
/// how callers chunk their work.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + std::ops::Add<Output = T> + Default,
{
    match xs.len() {
        0 => T::default(),
        1 => xs[0],
        n if n <= 8 => xs.iter().copied().fold(T::default(), |a, b| a + b),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
