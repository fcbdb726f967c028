//! Scalar kernel sequences driving the fractional operators.
//!
//! `k^beta(j) = Gamma(beta + j) / (Gamma(beta) Gamma(j + 1))` is generated
//! by its term-ratio recurrence `k(j+1) = k(j) (beta + j)/(j + 1)` rather
//! than by Gamma evaluations, so horizons in the thousands stay exact and
//! overflow-free. `h_alpha` is the scalar three-term recursion whose
//! convolution with the resolvent sequence produces solutions.

use crate::error::{Error, Result};

/// Hard cap on requested sequence lengths.
pub const MAX_HORIZON: usize = 2_000_000;

/// Generation aborts once magnitudes pass this (geometric growth of `h_alpha`).
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// The kernel sequence `k^beta(0..=N)` for a fixed real order `beta > 0`.
#[derive(Debug, Clone)]
pub struct KernelSeq {
    order: f64,
    values: Vec<f64>,
}

impl KernelSeq {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest valid index.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// `h_alpha(0..=N)` for `2 < alpha < 3`.
#[derive(Debug, Clone)]
pub struct HSeq {
    alpha: f64,
    values: Vec<f64>,
}

impl HSeq {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Largest root of `z^2 + (1 - alpha) z + (alpha-1)(alpha-2)/2`, the
    /// asymptotic ratio `h(n+1)/h(n)`.
    pub fn dominant_root(&self) -> f64 {
        dominant_h_root(self.alpha)
    }
}

pub fn dominant_h_root(alpha: f64) -> f64 {
    ((alpha - 1.0) + ((alpha - 1.0) * (3.0 - alpha)).sqrt()) / 2.0
}

fn check_horizon(n: usize) -> Result<()> {
    if n > MAX_HORIZON {
        return Err(Error::Capacity(format!(
            "requested horizon {n} exceeds maximum {MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// Generate `k^beta(0..=n)` by the multiplicative recurrence.
pub fn kernel_sequence(beta: f64, n: usize) -> Result<KernelSeq> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::Domain(format!(
            "kernel order must be positive, got {beta}"
        )));
    }
    check_horizon(n)?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    for j in 0..n {
        let next = values[j] * (beta + j as f64) / (j as f64 + 1.0);
        if !next.is_finite() || next.abs() > OVERFLOW_LIMIT {
            return Err(Error::Capacity(format!(
                "kernel order {beta} overflows f64 at index {}",
                j + 1
            )));
        }
        values.push(next);
    }
    Ok(KernelSeq {
        order: beta,
        values,
    })
}

/// Generate `h_alpha(0..=n)`: `h(0) = 1`, `h(1) = alpha - 1`,
/// `h(2) = alpha (alpha - 1)/2`, then
/// `h(n+3) = (alpha - 1) h(n+2) - (alpha-1)(alpha-2)/2 h(n+1)`.
pub fn h_sequence(alpha: f64, n: usize) -> Result<HSeq> {
    check_alpha(alpha)?;
    check_horizon(n)?;
    let c = (alpha - 1.0) * (alpha - 2.0) / 2.0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    if n >= 1 {
        values.push(alpha - 1.0);
    }
    if n >= 2 {
        values.push(alpha * (alpha - 1.0) / 2.0);
    }
    for m in 0..n.saturating_sub(2) {
        let next = (alpha - 1.0) * values[m + 2] - c * values[m + 1];
        if !next.is_finite() || next.abs() > OVERFLOW_LIMIT {
            return Err(Error::Capacity(format!(
                "h sequence for alpha = {alpha} exceeds {OVERFLOW_LIMIT:.0e} at index {}",
                m + 3
            )));
        }
        values.push(next);
    }
    Ok(HSeq { alpha, values })
}

/// Validate `2 < alpha < 3`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 2.0 && alpha < 3.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (2, 3), got {alpha}"
        )));
    }
    Ok(())
}

/// Maximum relative defect of the semigroup identity
/// `(k^beta * k^gamma)(n) = k^{beta+gamma}(n)` over `n <= horizon`.
pub fn kernel_semigroup_residual(beta: f64, gamma: f64, horizon: usize) -> Result<f64> {
    let a = kernel_sequence(beta, horizon)?;
    let b = kernel_sequence(gamma, horizon)?;
    let ab = kernel_sequence(beta + gamma, horizon)?;
    let mut worst = 0.0f64;
    for n in 0..=horizon {
        let conv: f64 = (0..=n).map(|j| a.values[n - j] * b.values[j]).sum();
        let denom = ab.values[n].abs().max(1.0);
        worst = worst.max((conv - ab.values[n]).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_starts_at_one_and_beta() {
        let k = kernel_sequence(1.7, 8).unwrap();
        assert_eq!(k.get(0), 1.0);
        assert!((k.get(1) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn order_one_kernel_is_all_ones() {
        let k = kernel_sequence(1.0, 10).unwrap();
        assert!(k.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_order_kernel_hand_values() {
        let k = kernel_sequence(0.5, 3).unwrap();
        let expect = [1.0, 0.5, 0.375, 0.3125];
        for (v, e) in k.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_rejects_bad_order() {
        assert!(matches!(kernel_sequence(0.0, 4), Err(Error::Domain(_))));
        assert!(matches!(kernel_sequence(-1.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_rejects_huge_horizon() {
        assert!(matches!(
            kernel_sequence(0.5, MAX_HORIZON + 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn kernel_recurrence_invariant() {
        let k = kernel_sequence(2.3, 64).unwrap();
        for j in 0..64 {
            let expect = k.get(j) * (2.3 + j as f64) / (j as f64 + 1.0);
            assert!((k.get(j + 1) - expect).abs() <= 1e-14 * expect.abs());
        }
    }

    #[test]
    fn kernel_monotonicity() {
        let grow = kernel_sequence(1.4, 100).unwrap();
        assert!(grow.values().windows(2).all(|w| w[1] >= w[0]));
        let shrink = kernel_sequence(0.6, 100).unwrap();
        assert!(shrink.values()[1..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn h_initial_values() {
        let h = h_sequence(2.5, 6).unwrap();
        assert_eq!(h.get(0), 1.0);
        assert!((h.get(1) - 1.5).abs() < 1e-15);
        assert!((h.get(2) - 1.875).abs() < 1e-15);
        // one hand step of the recursion: 1.5*1.875 - 0.375*1.5
        assert!((h.get(3) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn h_recursion_residual_small() {
        for &alpha in &[2.1, 2.5, 2.9] {
            let h = h_sequence(alpha, 200).unwrap();
            let c = (alpha - 1.0) * (alpha - 2.0) / 2.0;
            for n in 0..198 {
                let lhs = h.get(n + 3) + (1.0 - alpha) * h.get(n + 2) + c * h.get(n + 1);
                let scale = h.get(n + 3).abs().max(1.0);
                assert!(lhs.abs() / scale < 1e-12, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn h_rejects_out_of_range_alpha() {
        assert!(matches!(h_sequence(2.0, 4), Err(Error::Domain(_))));
        assert!(matches!(h_sequence(3.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn h_overflows_to_capacity_error() {
        // dominant root ~1.183 for alpha=2.5; 1e300 is passed well before 2e5 terms
        assert!(matches!(h_sequence(2.5, 200_000), Err(Error::Capacity(_))));
    }

    #[test]
    fn h_ratio_converges_to_dominant_root() {
        for &alpha in &[2.1, 2.5, 2.9] {
            let h = h_sequence(alpha, 401).unwrap();
            let ratio = h.get(401) / h.get(400);
            assert!(
                (ratio - dominant_h_root(alpha)).abs() < 1e-6,
                "alpha={alpha} ratio={ratio}"
            );
        }
    }

    #[test]
    fn semigroup_residual_tiny() {
        for &(b, g) in &[(0.3, 0.7), (0.7, 1.2), (0.5, 0.5), (1.0, 1.0)] {
            let r = kernel_semigroup_residual(b, g, 200).unwrap();
            assert!(r <= 1e-10, "orders ({b},{g}): residual {r}");
        }
    }

    #[test]
    fn semigroup_horizon_zero_is_exact() {
        assert_eq!(kernel_semigroup_residual(0.4, 1.3, 0).unwrap(), 0.0);
    }

    #[test]
    fn order_one_squared_is_triangular() {
        // k^1 * k^1 = k^2 with k^2(n) = n + 1
        let k2 = kernel_sequence(2.0, 50).unwrap();
        for n in 0..=50 {
            assert!((k2.get(n) - (n as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(kernel_semigroup_residual(1.0, 1.0, 50).unwrap() < 1e-14);
    }

    #[test]
    fn complementary_orders_give_ones() {
        // k^{3-alpha} * k^{alpha-2} = k^1 = 1
        let alpha = 2.7;
        let a = kernel_sequence(3.0 - alpha, 150).unwrap();
        let b = kernel_sequence(alpha - 2.0, 150).unwrap();
        for n in 0..=150 {
            let conv: f64 = (0..=n).map(|j| a.get(n - j) * b.get(j)).sum();
            assert!((conv - 1.0).abs() < 1e-12, "n={n} conv={conv}");
        }
    }
}
