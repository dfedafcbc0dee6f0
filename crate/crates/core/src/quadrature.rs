//! Gaussian quadrature rules and deterministic summation.

use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Rule {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    /// Gauss–Hermite rule with `n` nodes for the weight `exp(-x²)`.
    pub fn gauss_hermite(n: usize) -> Rule {
        assert!(n >= 1, "rule needs at least one node");
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        // Nodes were produced largest first; store ascending.
        nodes.reverse();
        weights.reverse();
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with this (Legendre) rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Pushes the mapped nodes and weights for `[a, b]` into the buffers.
    pub fn push_mapped(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(mid + half * x);
            weights.push(w * half);
        }
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    let d = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, d)
}

/// Composite rule on `[a, b]` split into panels no wider than `max_width`.
pub fn composite(rule: &Rule, a: f64, b: f64, max_width: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    if b <= a {
        return (nodes, weights);
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    nodes.reserve(panels * rule.len());
    weights.reserve(panels * rule.len());
    for k in 0..panels {
        let lo = a + k as f64 * h;
        rule.push_mapped(lo, lo + h, &mut nodes, &mut weights);
    }
    (nodes, weights)
}

/// Composite rule on `[a, b]` with panel edges growing geometrically from
/// `first` by `ratio` (capped at `max_width`).
pub fn graded(rule: &Rule, a: f64, b: f64, first: f64, ratio: f64, max_width: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut lo = a;
    let mut h = first.min(max_width);
    while lo < b {
        let hi = (lo + h).min(b);
        rule.push_mapped(lo, hi, &mut nodes, &mut weights);
        lo = hi;
        h = (h * ratio).min(max_width);
    }
    (nodes, weights)
}

/// Pairwise summation: deterministic and accurate to `O(log n · ε)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(v)` over a slice, without allocating.
pub fn pairwise_sum_by(values: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for &v in values {
            s += f(v);
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let r = Rule::gauss_legendre(n);
            for k in 0..(2 * n) {
                let got = r.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} k={k} got={got}");
            }
        }
    }

    #[test]
    fn hermite_moments() {
        for n in [1usize, 2, 5, 10, 20, 40] {
            let r = Rule::gauss_hermite(n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            for k in 0..(2 * n).min(30) {
                let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                let size: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| (w * x.powi(k as i32)).abs()).sum();
                // ∫ x^k e^{-x²} = Γ((k+1)/2) for even k.
                let want = if k % 2 == 1 { 0.0 } else { statrs::function::gamma::gamma((k as f64 + 1.0) / 2.0) };
                assert!((got - want).abs() <= 1e-12 * size, "n={n} k={k} got={got} want={want}");
            }
        }
    }

    #[test]
    fn graded_covers_interval() {
        let r = Rule::gauss_legendre(8);
        let (x, w) = graded(&r, 0.0, 100.0, 1e-3, 1.3, 5.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
        assert_relative_eq!(s, 1.0 - (-100.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, max_relative = 1e-14);
    }
}
