//! Gauss-Legendre quadrature.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on `P_n` from the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over [lo, hi].
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Adaptive composite rule: bisects panels until a panel and its two
    /// halves agree within `tol` (absolute), to at most `max_depth` levels.
    pub fn integrate_adaptive(
        &self,
        lo: f64,
        hi: f64,
        tol: f64,
        max_depth: u32,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let whole = self.integrate(lo, hi, &mut f);
        self.refine(lo, hi, whole, tol, max_depth, &mut f)
    }

    fn refine(
        &self,
        lo: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        f: &mut impl FnMut(f64) -> f64,
    ) -> f64 {
        let mid = 0.5 * (lo + hi);
        let left = self.integrate(lo, mid, &mut *f);
        let right = self.integrate(mid, hi, &mut *f);
        if depth == 0 || (left + right - whole).abs() <= tol {
            return left + right;
        }
        self.refine(lo, mid, left, 0.5 * tol, depth - 1, f)
            + self.refine(mid, hi, right, 0.5 * tol, depth - 1, f)
    }

    /// Composite rule: `panels` equal sub-intervals of [lo, hi].
    pub fn integrate_composite(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .map(|p| {
                let a = lo + p as f64 * h;
                self.integrate(a, a + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 8, 33, 128, 256] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::new(8);
        // Degree 15 is the highest integrated exactly by 8 nodes.
        let v = g.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand() {
        let g = GaussLegendre::new(64);
        let v = g.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
        let c = g.integrate_composite(0.0, 10.0, 4, |x| (-x).exp());
        assert!((c - (1.0 - (-10.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn adaptive_resolves_sharp_features() {
        let g = GaussLegendre::new(16);
        // Steep exponential edge: single rule is poor, adaptive is not.
        let exact = (1.0 - (-200.0f64).exp()) / 200.0;
        let v = g.integrate_adaptive(0.0, 1.0, 1e-15, 30, |x| (-200.0 * x).exp());
        assert!((v - exact).abs() < 1e-15, "{v} vs {exact}");
        assert!((g.integrate(0.0, 1.0, |x| (-200.0 * x).exp()) - exact).abs() > 1e-6);
    }

    #[test]
    fn two_point_nodes() {
        let g = GaussLegendre::new(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((g.nodes[1] - r).abs() < 1e-15 && (g.nodes[0] + r).abs() < 1e-15);
    }
}
