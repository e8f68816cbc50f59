use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of a quadrature rule on a fixed interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss-Legendre rule with `n` points mapped to `[a, b]`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
        let n = NonZeroUsize::new(n.max(1)).expect("positive");
        let gl = GaussLegendre::new(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut pairs: Vec<(f64, f64)> =
            gl.iter().map(|(x, w)| (mid + half * x, half * w)).collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        Rule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Composite Gauss-Legendre rule: `panels` equal panels of `n` points each.
    pub fn composite(n: usize, panels: usize, a: f64, b: f64) -> Rule {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let base = Rule::gauss_legendre(n, 0.0, h);
        let mut nodes = Vec::with_capacity(n * panels);
        let mut weights = Vec::with_capacity(n * panels);
        for p in 0..panels {
            let off = a + p as f64 * h;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(off + x);
                weights.push(*w);
            }
        }
        Rule { nodes, weights }
    }

    /// Rule built from explicit breakpoints, `n` points per sub-interval.
    pub fn piecewise(n: usize, breaks: &[f64]) -> Rule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                let r = Rule::gauss_legendre(n, w[0], w[1]);
                nodes.extend(r.nodes);
                weights.extend(r.weights);
            }
        }
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let r = Rule::gauss_legendre(5, -1.0, 2.0);
        let v = r.integrate(|x| x.powi(9));
        assert!((v - (2f64.powi(10) - 1.0) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn composite_matches_single() {
        let a = Rule::composite(8, 5, 0.0, 3.0).integrate(|x| (-x * x).exp());
        let b = Rule::gauss_legendre(60, 0.0, 3.0).integrate(|x| (-x * x).exp());
        assert!((a - b).abs() < 1e-14);
    }
}
