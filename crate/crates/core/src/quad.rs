//! Gauss-Legendre quadrature on panel decompositions of a finite interval.
//!
//! Nodes and weights on [-1, 1] are computed with Newton iteration on the
//! Legendre recurrence, then mapped onto uniform panels. The integrands in
//! this crate are smooth with Gaussian decay, so a moderate fixed rule per
//! panel converges far below the tolerances we verify against.

/// Gauss-Legendre nodes and weights on [-1, 1] for an `n`-point rule.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots are symmetric; solve for the non-negative half.
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Evaluates (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// A reusable panel rule: `integrate` sums `f` over `[lo, hi]` split into
/// uniform panels with a fixed Gauss-Legendre rule on each.
pub(crate) struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub(crate) fn new(points_per_panel: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points_per_panel);
        Self { nodes, weights }
    }

    /// Visits every quadrature point of the decomposition, passing
    /// `(abscissa, weight)` to `visit`.
    pub(crate) fn for_each_point<F: FnMut(f64, f64)>(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        mut visit: F,
    ) {
        let width = (hi - lo) / panels as f64;
        let half = 0.5 * width;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            for (t, w) in self.nodes.iter().zip(self.weights.iter()) {
                visit(mid + half * t, half * w);
            }
        }
    }
}
