//! Normalized Hermite functions, their running integrals, and the
//! precomputed integral table used by the correlation estimator.
//!
//! The normalized Hermite functions are
//! `h_k(x) = (2^k k! sqrt(pi))^(-1/2) exp(-x^2/2) H_k(x)`
//! with `H_k` the physicists' Hermite polynomials. They are evaluated with the
//! normalized three-term recurrence
//! `h_{k+1}(x) = x sqrt(2/(k+1)) h_k(x) - sqrt(k/(k+1)) h_{k-1}(x)`,
//! which stays in range for every supported order (the raw `H_k` route
//! overflows `f64` through `k!` long before order 50).
//!
//! The running integrals `F_k(x) = integral of h_k over (-inf, x]` satisfy an
//! analytic recurrence seeded by the Gaussian CDF, so only one numerical
//! quadrature is ever needed: the table entries
//! `W[k][l] = integral of h_k(u) * F_l(u) du` over the real line. Those are
//! computed once per order by panelled Gauss-Legendre quadrature and verified
//! against the integration-by-parts identity `W + W^T = z z^T`, where
//! `z[k] = integral of h_k` has a closed-form recurrence.

use crate::fmt::json_array;
use crate::matrix::SquareMatrix;
use crate::quad::PanelRule;
use thiserror::Error;

/// Largest supported truncation order. Bounds the table size and the
/// quadrature cost; everything in range is covered by the identity check.
pub const MAX_ORDER: usize = 50;

/// Integration domain half-width for the `W` quadrature. The integrands decay
/// like `exp(-u^2/2)` times a polynomial, so the tails beyond this are far
/// below double-precision resolution for every supported order.
const QUAD_HALF_WIDTH: f64 = 40.0;
const QUAD_PANEL_WIDTH: f64 = 0.25;
const QUAD_POINTS_PER_PANEL: usize = 12;

/// Tolerance on the `W + W^T = z z^T` identity at construction time.
const IDENTITY_TOL: f64 = 1e-10;

/// Global bound on `|h_k(x)|`; the maximum is `pi^(-1/4)` at `k = 0`.
pub const HERMITE_FUNCTION_BOUND: f64 = 0.8;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("order {0} is outside the supported range 1..={MAX_ORDER}")]
    InvalidOrder(usize),

    #[error("argument must be finite, got {0}")]
    NonFiniteArgument(f64),

    #[error(
        "basis identity check failed: max |(W + W^T - z z^T)| = {residual:.3e} exceeds {tol:.1e} \
         (quadrature misconfiguration)"
    )]
    IdentityCheckFailed { residual: f64, tol: f64 },

    #[error("malformed basis cache JSON: {0}")]
    MalformedJson(String),
}

/// Values `h_0(x) .. h_N(x)` of the normalized Hermite functions at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteVector {
    values: Vec<f64>,
}

impl HermiteVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Truncation order `N`; the vector holds `N + 1` values.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// Evaluates `h_0(x) .. h_order(x)`.
pub fn hermite_function_values(x: f64, order: usize) -> Result<HermiteVector, BasisError> {
    if order == 0 || order > MAX_ORDER {
        return Err(BasisError::InvalidOrder(order));
    }
    if !x.is_finite() {
        return Err(BasisError::NonFiniteArgument(x));
    }
    let mut values = vec![0.0; order + 1];
    hermite_values_into(x, &mut values);
    Ok(HermiteVector { values })
}

/// Fills `out` with `h_0(x) .. h_N(x)` where `N = out.len() - 1`.
/// Deterministic: identical inputs produce bit-identical outputs.
#[inline]
pub(crate) fn hermite_values_into(x: f64, out: &mut [f64]) {
    debug_assert!(x.is_finite());
    debug_assert!(!out.is_empty());
    let gauss = (-0.5 * x * x).exp();
    out[0] = PI_NEG_QUARTER * gauss;
    if out.len() == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * out[0];
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Evaluates the running integrals `F_0(x) .. F_order(x)` with
/// `F_k(x) = integral of h_k over (-inf, x]`.
///
/// `x = +inf` is accepted as a sentinel and yields the full-line integrals
/// `z_k`. The recurrence is
/// `F_{k+1}(x) = sqrt(2/(k+1)) * (sqrt(k/2) F_{k-1}(x) - h_k(x))`,
/// seeded by `F_0(x) = sqrt(2) pi^(1/4) Phi(x)` and `F_1(x) = -sqrt(2) h_0(x)`.
pub fn hermite_cdf_values(x: f64, order: usize) -> Result<Vec<f64>, BasisError> {
    if order == 0 || order > MAX_ORDER {
        return Err(BasisError::InvalidOrder(order));
    }
    if x == f64::INFINITY {
        return Ok(z_vector(order));
    }
    if !x.is_finite() {
        return Err(BasisError::NonFiniteArgument(x));
    }
    let mut h = vec![0.0; order + 1];
    hermite_values_into(x, &mut h);
    let mut f = vec![0.0; order + 1];
    cdf_values_into(x, &h, &mut f);
    Ok(f)
}

#[inline]
fn cdf_values_into(x: f64, h: &[f64], out: &mut [f64]) {
    out[0] = Z0 * standard_normal_cdf(x);
    if out.len() == 1 {
        return;
    }
    out[1] = -std::f64::consts::SQRT_2 * h[0];
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * ((kf / 2.0).sqrt() * out[k - 1] - h[k]);
    }
}

/// `z_k = integral of h_k over the real line`, by the closed recurrence
/// `z_0 = sqrt(2) pi^(1/4)`, `z_1 = 0`, `z_{k+1} = sqrt(k/(k+1)) z_{k-1}`.
/// Odd entries are exactly zero.
fn z_vector(order: usize) -> Vec<f64> {
    let mut z = vec![0.0; order + 1];
    z[0] = Z0;
    for k in 1..order {
        let kf = k as f64;
        z[k + 1] = (kf / (kf + 1.0)).sqrt() * z[k - 1];
    }
    z
}

// pi^(-1/4) and z_0 = sqrt(2) * pi^(1/4).
const PI_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;
const Z0: f64 = 1.882_792_527_553_429_6;

/// Standard normal CDF via the complementary error function.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Immutable table of Hermite basis integrals for one truncation order.
///
/// Holds `W[k][l] = integral h_k(u) F_l(u) du` and `z[k] = integral h_k(u) du`
/// for `k, l = 0..=order`. Construction runs the quadrature once and fails if
/// the integration-by-parts identity is not met, so a successfully built cache
/// is numerically trustworthy. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisCache {
    order: usize,
    w: SquareMatrix,
    z: Vec<f64>,
}

impl BasisCache {
    /// Builds the cache for `order` in `1..=50`.
    pub fn build(order: usize) -> Result<Self, BasisError> {
        if order == 0 || order > MAX_ORDER {
            return Err(BasisError::InvalidOrder(order));
        }
        let dim = order + 1;
        let z = z_vector(order);
        let mut w = SquareMatrix::zeros(dim);

        let rule = PanelRule::new(QUAD_POINTS_PER_PANEL);
        let panels = (2.0 * QUAD_HALF_WIDTH / QUAD_PANEL_WIDTH) as usize;
        let mut h = vec![0.0; dim];
        let mut f = vec![0.0; dim];
        rule.for_each_point(-QUAD_HALF_WIDTH, QUAD_HALF_WIDTH, panels, |u, weight| {
            hermite_values_into(u, &mut h);
            cdf_values_into(u, &h, &mut f);
            for (k, hk) in h.iter().enumerate() {
                let hk_w = weight * hk;
                let row = w.row_mut(k);
                for (wkl, fl) in row.iter_mut().zip(f.iter()) {
                    *wkl += hk_w * fl;
                }
            }
        });

        let cache = Self { order, w, z };
        let residual = cache.identity_residual();
        if residual.is_nan() || residual > IDENTITY_TOL || !cache.w.is_finite() {
            return Err(BasisError::IdentityCheckFailed {
                residual,
                tol: IDENTITY_TOL,
            });
        }
        Ok(cache)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn w(&self) -> &SquareMatrix {
        &self.w
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// `max_kl |(W + W^T - z z^T)_kl|`, the integration-by-parts residual.
    pub fn identity_residual(&self) -> f64 {
        let dim = self.order + 1;
        let mut worst = 0.0_f64;
        for k in 0..dim {
            for l in 0..dim {
                let lhs = self.w.get(k, l) + self.w.get(l, k);
                worst = worst.max((lhs - self.z[k] * self.z[l]).abs());
            }
        }
        worst
    }

    /// Serializes as `{"order": N, "z": [..], "W": [[..row-major..]]}` with
    /// 17-significant-digit numbers.
    pub fn to_json(&self) -> String {
        let rows: Vec<String> = (0..=self.order).map(|k| json_array(self.w.row(k))).collect();
        format!(
            "{{\"order\":{},\"z\":{},\"W\":[{}]}}",
            self.order,
            json_array(&self.z),
            rows.join(",")
        )
    }

    /// Parses the `to_json` format and re-checks the cache invariants.
    pub fn from_json(text: &str) -> Result<Self, BasisError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| BasisError::MalformedJson(e.to_string()))?;
        let order = value["order"]
            .as_u64()
            .ok_or_else(|| BasisError::MalformedJson("missing integer field `order`".into()))?
            as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(BasisError::InvalidOrder(order));
        }
        let dim = order + 1;
        let z = parse_float_array(&value["z"], dim, "z")?;
        let rows = value["W"]
            .as_array()
            .ok_or_else(|| BasisError::MalformedJson("missing array field `W`".into()))?;
        if rows.len() != dim {
            return Err(BasisError::MalformedJson(format!(
                "expected {dim} rows in `W`, found {}",
                rows.len()
            )));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            data.extend(parse_float_array(row, dim, "W row")?);
        }
        let cache = Self {
            order,
            w: SquareMatrix::from_rows(dim, data),
            z,
        };
        let residual = cache.identity_residual();
        if residual.is_nan() || residual > IDENTITY_TOL || !cache.w.is_finite() {
            return Err(BasisError::IdentityCheckFailed {
                residual,
                tol: IDENTITY_TOL,
            });
        }
        Ok(cache)
    }
}

fn parse_float_array(
    value: &serde_json::Value,
    expected_len: usize,
    what: &str,
) -> Result<Vec<f64>, BasisError> {
    let items = value
        .as_array()
        .ok_or_else(|| BasisError::MalformedJson(format!("`{what}` is not an array")))?;
    if items.len() != expected_len {
        return Err(BasisError::MalformedJson(format!(
            "`{what}` has length {}, expected {expected_len}",
            items.len()
        )));
    }
    items
        .iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| BasisError::MalformedJson(format!("non-numeric entry in `{what}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation through the explicit Hermite polynomial coefficients,
    /// with exact factorial normalization. Independent of the normalized
    /// recurrence; usable for k <= 10 before k! strains f64.
    fn hermite_oracle(x: f64, k: usize) -> f64 {
        // H_k coefficients by the polynomial recurrence H_{k+1} = 2x H_k - 2k H_{k-1}.
        let mut coeffs: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 2.0]];
        for n in 1..k.max(1) {
            let prev = &coeffs[n];
            let prev2 = &coeffs[n - 1];
            let mut next = vec![0.0; n + 2];
            for (p, c) in prev.iter().enumerate() {
                next[p + 1] += 2.0 * c;
            }
            for (p, c) in prev2.iter().enumerate() {
                next[p] -= 2.0 * n as f64 * c;
            }
            coeffs.push(next);
        }
        let poly = &coeffs[k];
        let mut hk = 0.0;
        for c in poly.iter().rev() {
            hk = hk * x + c;
        }
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        let norm = (2.0_f64.powi(k as i32) * fact * std::f64::consts::PI.sqrt()).sqrt();
        hk * (-0.5 * x * x).exp() / norm
    }

    /// Adaptive Simpson integration of h_k over [a, b].
    fn integrate_hermite(k: usize, a: f64, b: f64, tol: f64) -> f64 {
        fn h(k: usize, x: f64) -> f64 {
            let mut buf = vec![0.0; k + 1];
            hermite_values_into(x, &mut buf);
            buf[k]
        }
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn recurse(
            k: usize,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = h(k, lm);
            let frm = h(k, rm);
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(k, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + recurse(k, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (h(k, a), h(k, m), h(k, b));
        let whole = simpson(a, b, fa, fm, fb);
        recurse(k, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn closed_form_values_at_zero() {
        let h = hermite_function_values(0.0, 2).unwrap();
        assert!((h.values()[0] - 0.751_125_544_464_942_5).abs() < 1e-15);
        assert_eq!(h.values()[1], 0.0);
        assert!((h.values()[2] - (-0.531_125_966_02_f64)).abs() < 1e-9);
        // Oracle cross-check for the same entry.
        assert!((h.values()[2] - hermite_oracle(0.0, 2)).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_polynomial_oracle_on_grid() {
        for k in 0..=10 {
            let mut x = -5.0;
            while x <= 5.0 {
                let h = hermite_function_values(x, 10).unwrap();
                let oracle = hermite_oracle(x, k);
                assert!(
                    (h.values()[k] - oracle).abs() < 1e-12,
                    "k={k} x={x} got {} oracle {}",
                    h.values()[k],
                    oracle
                );
                x += 0.25;
            }
        }
    }

    #[test]
    fn hermite_values_respect_global_bound() {
        let mut x = -8.0;
        while x <= 8.0 {
            let h = hermite_function_values(x, MAX_ORDER).unwrap();
            for (k, v) in h.values().iter().enumerate() {
                assert!(v.abs() <= HERMITE_FUNCTION_BOUND, "k={k} x={x} v={v}");
            }
            x += 0.0625;
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let a = hermite_function_values(1.234_567_89, 20).unwrap();
        let b = hermite_function_values(1.234_567_89, 20).unwrap();
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn non_finite_argument_rejected() {
        assert!(matches!(
            hermite_function_values(f64::NAN, 4),
            Err(BasisError::NonFiniteArgument(_))
        ));
        assert!(matches!(
            hermite_cdf_values(f64::NEG_INFINITY, 4),
            Err(BasisError::NonFiniteArgument(_))
        ));
        assert!(matches!(
            hermite_function_values(0.0, 0),
            Err(BasisError::InvalidOrder(0))
        ));
    }

    #[test]
    fn cdf_closed_forms_at_zero_and_infinity() {
        let f = hermite_cdf_values(0.0, 1).unwrap();
        // F_0(0) = sqrt(2) pi^(1/4) / 2, F_1(0) = -sqrt(2) pi^(-1/4).
        assert!((f[0] - 0.941_396_263_776_714_8).abs() < 1e-14);
        assert!((f[1] - (-1.062_251_932_027_197)).abs() < 1e-14);

        let at_inf = hermite_cdf_values(f64::INFINITY, 3).unwrap();
        assert!((at_inf[0] - Z0).abs() < 1e-15);
        assert_eq!(at_inf[1], 0.0);
        assert!((at_inf[2] - Z0 / std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(at_inf[3], 0.0);
    }

    #[test]
    fn cdf_recurrence_matches_adaptive_quadrature() {
        for k in 0..=10 {
            for x in [-3.0, -1.0, 0.0, 1.0, 3.0] {
                let f = hermite_cdf_values(x, 10).unwrap();
                let oracle = integrate_hermite(k, -30.0, x, 1e-12);
                assert!(
                    (f[k] - oracle).abs() < 1e-8,
                    "k={k} x={x} recurrence {} quadrature {}",
                    f[k],
                    oracle
                );
            }
        }
    }

    #[test]
    fn z_vector_closed_forms() {
        let cache = BasisCache::build(2).unwrap();
        assert!((cache.z()[0] - 1.882_792_527_553_429_6).abs() < 1e-15);
        assert_eq!(cache.z()[1], 0.0);
        assert!((cache.z()[2] - 1.331_335_363_800_389).abs() < 1e-14);
        // z_2 against direct quadrature of h_2.
        let q = integrate_hermite(2, -30.0, 30.0, 1e-12);
        assert!((cache.z()[2] - q).abs() < 1e-10);
    }

    #[test]
    fn odd_z_entries_are_exactly_zero() {
        let cache = BasisCache::build(21).unwrap();
        for k in (1..=21).step_by(2) {
            assert_eq!(cache.z()[k], 0.0, "z[{k}]");
        }
    }

    #[test]
    fn identity_holds_for_all_orders_up_to_twenty() {
        for order in 1..=20 {
            let cache = BasisCache::build(order).unwrap();
            assert!(
                cache.identity_residual() <= 1e-10,
                "order {order}: residual {}",
                cache.identity_residual()
            );
        }
    }

    #[test]
    fn antisymmetric_pair_at_order_one() {
        let cache = BasisCache::build(1).unwrap();
        // W_01 + W_10 = z_0 z_1 = 0.
        let s = cache.w().get(0, 1) + cache.w().get(1, 0);
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn w_entry_against_direct_quadrature() {
        // W_00 = integral h_0 F_0 = (1/2) F_0(inf)^2 by parts; check numerically too.
        let cache = BasisCache::build(2).unwrap();
        assert!((cache.w().get(0, 0) - 0.5 * Z0 * Z0).abs() < 1e-12);
    }

    #[test]
    fn json_golden_prefix_at_order_one() {
        let cache = BasisCache::build(1).unwrap();
        let text = cache.to_json();
        assert!(
            text.starts_with(
                "{\"order\":1,\"z\":[1.8827925275534296e0,0.0000000000000000e0],\"W\":[["
            ),
            "golden prefix mismatch: {text}"
        );
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let cache = BasisCache::build(6).unwrap();
        let text = cache.to_json();
        let back = BasisCache::from_json(&text).unwrap();
        assert_eq!(cache, back);
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn build_rejects_out_of_range_order() {
        assert!(matches!(BasisCache::build(0), Err(BasisError::InvalidOrder(0))));
        assert!(matches!(
            BasisCache::build(MAX_ORDER + 1),
            Err(BasisError::InvalidOrder(_))
        ));
    }
}
