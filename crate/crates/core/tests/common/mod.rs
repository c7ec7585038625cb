//! Shared oracles for the integration tests.
#![allow(dead_code)] // each test target compiles this module separately
//!
//! Everything here recomputes quantities along routes that are independent of
//! the library's production path: the estimate functional by brute-force
//! scalar loops and by direct two-dimensional quadrature of the defining
//! integral, using hard-coded Gauss-Legendre constants rather than the
//! library's own rule generator.

use corr_core::basis::{hermite_cdf_values, hermite_function_values, BasisCache};
use corr_core::fmt::g17;
use corr_core::state::CoefficientState;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Literal quadruple-nested-loop evaluation of the four estimate terms:
///
/// ```text
/// 12 sum a1_k W_lk A_lm W_mo a2_o - 6 sum a1_k W_lk A_lm z_m
/// - 6 sum z_l A_lm W_mo a2_o + 3 sum z_l A_lm z_m
/// ```
pub fn scalar_form(state: &CoefficientState, cache: &BasisCache) -> f64 {
    let dim = state.order() + 1;
    let a1 = state.a1();
    let a2 = state.a2();
    let a = state.joint();
    let w = cache.w();
    let z = cache.z();
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    let mut t3 = 0.0;
    let mut t4 = 0.0;
    for l in 0..dim {
        for m in 0..dim {
            let alm = a.get(l, m);
            for k in 0..dim {
                let wlk = w.get(l, k);
                for o in 0..dim {
                    t1 += a1[k] * wlk * alm * w.get(m, o) * a2[o];
                }
                t2 += a1[k] * wlk * alm * z[m];
            }
            for o in 0..dim {
                t3 += z[l] * alm * w.get(m, o) * a2[o];
            }
            t4 += z[l] * alm * z[m];
        }
    }
    12.0 * t1 - 6.0 * t2 - 6.0 * t3 + 3.0 * t4
}

// 10-point Gauss-Legendre constants on [-1, 1] (Abramowitz & Stegun values),
// deliberately literal so the quadrature oracle shares nothing with the
// library's Newton-iteration rule.
const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

fn gl10_panel_points(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut out = Vec::with_capacity(panels * 10);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for i in 0..5 {
            out.push((mid - half * GL10_NODES[i], half * GL10_WEIGHTS[i]));
            out.push((mid + half * GL10_NODES[i], half * GL10_WEIGHTS[i]));
        }
    }
    out
}

/// Self-check of the literal constants: the rule must integrate x^2 and x^18
/// on [-1, 1] essentially exactly.
pub fn assert_gl10_constants_valid() {
    let pts = gl10_panel_points(-1.0, 1.0, 1);
    let total: f64 = pts.iter().map(|(_, w)| w).sum();
    assert!((total - 2.0).abs() < 1e-14, "weights sum {total}");
    let x2: f64 = pts.iter().map(|(x, w)| w * x * x).sum();
    assert!((x2 - 2.0 / 3.0).abs() < 1e-14);
    let x18: f64 = pts.iter().map(|(x, w)| w * x.powi(18)).sum();
    assert!((x18 - 2.0 / 19.0).abs() < 1e-13);
}

/// Direct two-dimensional quadrature of the defining integral
/// `12 (F1(x) - 1/2)(F2(y) - 1/2) f(x, y)` over a truncated plane, where
/// `F1`, `F2`, and `f` are the series reconstructed from the state's
/// coefficients. Never touches the precomputed integral table.
pub fn quadrature_form(state: &CoefficientState) -> f64 {
    let order = state.order();
    let dim = order + 1;
    let points = gl10_panel_points(-12.0, 12.0, 48);

    // Per-axis precomputation of h-vectors and centered CDF series values.
    let axis = |coeffs: &[f64]| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut hs = Vec::with_capacity(points.len());
        let mut centered = Vec::with_capacity(points.len());
        for &(t, _) in &points {
            let h = hermite_function_values(t, order).unwrap();
            let f = hermite_cdf_values(t, order).unwrap();
            let series: f64 = coeffs.iter().zip(f.iter()).map(|(c, fv)| c * fv).sum();
            hs.push(h.values().to_vec());
            centered.push(series - 0.5);
        }
        (hs, centered)
    };
    let (hx, cx) = axis(state.a1());
    let (hy, cy) = axis(state.a2());

    let a = state.joint();
    let mut total = 0.0;
    for (i, &(_, wx)) in points.iter().enumerate() {
        // Row vector r = hx_i^T A, reused over the inner loop.
        let mut row = vec![0.0; dim];
        for k in 0..dim {
            let hk = hx[i][k];
            if hk == 0.0 {
                continue;
            }
            for (r, av) in row.iter_mut().zip(a.row(k)) {
                *r += hk * av;
            }
        }
        let mut inner = 0.0;
        for (j, &(_, wy)) in points.iter().enumerate() {
            let density: f64 = row.iter().zip(hy[j].iter()).map(|(r, h)| r * h).sum();
            inner += wy * cy[j] * density;
        }
        total += wx * cx[i] * inner;
    }
    12.0 * total
}

/// Builds a coefficient state with uniformly random coefficients through the
/// public snapshot interface (entries within the documented state bounds).
pub fn random_snapshot_state(order: usize, rng: &mut ChaCha8Rng) -> CoefficientState {
    let dim = order + 1;
    let vec_entries = |rng: &mut ChaCha8Rng, bound: f64| -> Vec<String> {
        (0..dim)
            .map(|_| g17(rng.random_range(-bound..bound)))
            .collect()
    };
    let a1 = vec_entries(rng, 0.6).join(",");
    let a2 = vec_entries(rng, 0.6).join(",");
    let rows: Vec<String> = (0..dim)
        .map(|_| format!("[{}]", vec_entries(rng, 0.5).join(",")))
        .collect();
    let json = format!(
        "{{\"order\":{order},\"mode\":{{\"stationary\":7}},\"a1\":[{a1}],\"a2\":[{a2}],\"A\":[{}]}}",
        rows.join(",")
    );
    CoefficientState::from_snapshot_json(&json).unwrap()
}

/// Builds a coefficient state by streaming random observations through the
/// production update path.
pub fn random_data_state(order: usize, n: usize, rng: &mut ChaCha8Rng) -> CoefficientState {
    let mut state = CoefficientState::stationary(order).unwrap();
    for _ in 0..n {
        let x = rng.random_range(-2.5..2.5);
        let y = 0.5 * x + rng.random_range(-2.0..2.0);
        state.update(x, y).unwrap();
    }
    state
}
