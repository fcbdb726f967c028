//! Finite convolution, integer forward differences, fractional sums, and
//! the Riemann-Liouville fractional difference on finite-horizon sequences.
//!
//! The fractional difference of order `alpha` in `(2, 3)` consumes three
//! trailing points: an input on `0..=N` produces an output on `0..=N-3`.
//! Horizons are kept explicit everywhere so identity tests never compare
//! zero-padded tails.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{check_alpha, kernel_sequence};
use crate::linalg::{is_finite_matrix, is_finite_vector, spectral_norm};

/// A finite-horizon vector-valued sequence `u : {0..N} -> C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<DVector<Complex64>>,
}

impl Signal {
    pub fn new(values: Vec<DVector<Complex64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape(
                "signal must contain at least one entry".into(),
            ));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::Shape("signal dimension must be at least 1".into()));
        }
        for (n, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Shape(format!(
                    "signal entry {n} has dimension {} but entry 0 has {dim}",
                    v.len()
                )));
            }
            if !is_finite_vector(v) {
                return Err(Error::Shape(format!("signal entry {n} is not finite")));
            }
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize, horizon: usize) -> Self {
        Self {
            values: vec![DVector::zeros(dim); horizon + 1],
        }
    }

    /// Scalar (d = 1) signal from real values.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| DVector::from_element(1, Complex64::new(v, 0.0)))
                .collect(),
        )
    }

    pub fn from_fn(
        dim: usize,
        horizon: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        Self {
            values: (0..=horizon)
                .map(|n| DVector::from_fn(dim, |i, _| f(n, i)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> &DVector<Complex64> {
        &self.values[n]
    }

    pub fn values(&self) -> &[DVector<Complex64>] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Truncate (or keep) to horizon `n`.
    pub fn restricted(&self, n: usize) -> Result<Self> {
        if n >= self.values.len() {
            return Err(Error::Shape(format!(
                "cannot restrict horizon {} to {n}",
                self.horizon()
            )));
        }
        Ok(Self {
            values: self.values[..=n].to_vec(),
        })
    }
}

/// A finite sequence of `d x d` complex matrices indexed from a possibly
/// negative start.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSeq {
    start: isize,
    values: Vec<DMatrix<Complex64>>,
}

impl OperatorSeq {
    pub fn new(start: isize, values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if start > 0 {
            return Err(Error::Shape(format!(
                "start index must be <= 0, got {start}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Shape("operator sequence must be nonempty".into()));
        }
        let dim = values[0].nrows();
        for (i, m) in values.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Shape(format!(
                    "entry {} is {}x{}, expected {dim}x{dim}",
                    start + i as isize,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !is_finite_matrix(m) {
                return Err(Error::Shape(format!(
                    "entry {} is not finite",
                    start + i as isize
                )));
            }
        }
        if (values.len() as isize) <= -start {
            return Err(Error::Shape("sequence must reach index 0".into()));
        }
        Ok(Self { start, values })
    }

    pub fn from_positive(values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        Self::new(0, values)
    }

    pub fn start(&self) -> isize {
        self.start
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    /// Largest valid index.
    pub fn horizon(&self) -> usize {
        (self.start + self.values.len() as isize - 1) as usize
    }

    pub fn get(&self, n: isize) -> &DMatrix<Complex64> {
        &self.values[(n - self.start) as usize]
    }

    /// Entries for indices `0..=horizon`.
    pub fn positive_part(&self) -> &[DMatrix<Complex64>] {
        &self.values[(-self.start) as usize..]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

fn require_equal_horizons(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("horizon mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Finite (Cauchy) convolution `(a * g)(n) = sum_{j<=n} a(n-j) g(j)` of a
/// real scalar sequence with a signal, both on `0..=N`.
pub fn convolve(a: &[f64], g: &Signal) -> Result<Signal> {
    require_equal_horizons(a.len() - 1, g.horizon())?;
    let dim = g.dim();
    let mut out = Vec::with_capacity(a.len());
    for n in 0..a.len() {
        let mut acc = DVector::<Complex64>::zeros(dim);
        for j in 0..=n {
            acc.axpy(
                Complex64::new(a[n - j], 0.0),
                g.get(j),
                Complex64::new(1.0, 0.0),
            );
        }
        out.push(acc);
    }
    Signal::new(out)
}

/// Same convolution for an operator sequence; entries at negative indices
/// are ignored by restriction to `0..=N`.
pub fn convolve_operator(a: &[f64], g: &OperatorSeq) -> Result<OperatorSeq> {
    require_equal_horizons(a.len() - 1, g.horizon())?;
    let pos = g.positive_part();
    let dim = g.dim();
    let mut out = Vec::with_capacity(a.len());
    for n in 0..a.len() {
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for j in 0..=n {
            acc += &pos[j] * Complex64::new(a[n - j], 0.0);
        }
        out.push(acc);
    }
    OperatorSeq::from_positive(out)
}

/// Scalar-with-scalar convolution on a common horizon.
pub fn convolve_scalar(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    require_equal_horizons(a.len() - 1, b.len() - 1)?;
    Ok((0..a.len())
        .map(|n| (0..=n).map(|j| a[n - j] * b[j]).sum())
        .collect())
}

/// m-fold forward difference; output horizon shrinks to `N - m`.
pub fn forward_difference(u: &Signal, m: usize) -> Result<Signal> {
    if m == 0 {
        return Err(Error::Domain("difference order must be positive".into()));
    }
    if m > u.horizon() {
        return Err(Error::Shape(format!(
            "difference order {m} exceeds horizon {}",
            u.horizon()
        )));
    }
    let mut cur = u.values().to_vec();
    for _ in 0..m {
        cur = cur.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    Signal::new(cur)
}

pub fn forward_difference_operator(u: &OperatorSeq, m: usize) -> Result<OperatorSeq> {
    if m == 0 {
        return Err(Error::Domain("difference order must be positive".into()));
    }
    if m > u.horizon() {
        return Err(Error::Shape(format!(
            "difference order {m} exceeds horizon {}",
            u.horizon()
        )));
    }
    let mut cur = u.positive_part().to_vec();
    for _ in 0..m {
        cur = cur.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    OperatorSeq::from_positive(cur)
}

/// Fractional sum `Delta^{-beta} u = k^beta * u` for `0 < beta <= 1`.
pub fn fractional_sum(u: &Signal, beta: f64) -> Result<Signal> {
    if !beta.is_finite() || beta <= 0.0 || beta > 1.0 {
        return Err(Error::Domain(format!(
            "sum order must lie in (0, 1], got {beta}"
        )));
    }
    let k = kernel_sequence(beta, u.horizon())?;
    convolve(k.values(), u)
}

/// Riemann-Liouville fractional difference of order `alpha` in `(2, 3)`:
/// the third forward difference of the `(3 - alpha)`-fractional sum.
/// Output lives on `0..=N-3`.
pub fn fractional_difference(u: &Signal, alpha: f64) -> Result<Signal> {
    check_alpha(alpha)?;
    if u.horizon() < 3 {
        return Err(Error::Shape(format!(
            "fractional difference needs horizon >= 3, got {}",
            u.horizon()
        )));
    }
    let smoothed = fractional_sum(u, 3.0 - alpha)?;
    forward_difference(&smoothed, 3)
}

/// Fractional difference acting columnwise on an operator sequence
/// restricted to indices `>= 0`.
pub fn fractional_difference_operator(u: &OperatorSeq, alpha: f64) -> Result<OperatorSeq> {
    check_alpha(alpha)?;
    if u.horizon() < 3 {
        return Err(Error::Shape(format!(
            "fractional difference needs horizon >= 3, got {}",
            u.horizon()
        )));
    }
    let k = kernel_sequence(3.0 - alpha, u.horizon())?;
    let smoothed = convolve_operator(k.values(), u)?;
    forward_difference_operator(&smoothed, 3)
}

/// Maximum deviation in the convolution/difference exchange identity:
/// `Delta^alpha (b * P)(n)` against the convolution term
/// `(b * Delta^alpha P)(n)` plus the three boundary corrections
/// `b(n+3) P(0)`, `b(n+2) [P(1) - alpha P(0)]`, and
/// `b(n+1) [P(2) - alpha P(1) + alpha(alpha-1)/2 P(0)]`,
/// normalized per index by the magnitude of the left side.
pub fn conv_diff_identity_residual(b: &[f64], p: &Signal, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n_hor = p.horizon();
    require_equal_horizons(b.len() - 1, n_hor)?;
    if n_hor < 6 {
        return Err(Error::Shape(format!(
            "horizon must be at least 6, got {n_hor}"
        )));
    }
    let bp = convolve(b, p)?;
    let lhs = fractional_difference(&bp, alpha)?;
    let dp = fractional_difference(p, alpha)?;
    let b_restr = &b[..n_hor - 2];
    let conv_term = convolve(b_restr, &dp)?;

    let a = alpha;
    let p0 = p.get(0);
    let corr1 = p.get(1) - p0 * Complex64::new(a, 0.0);
    let corr2 = p.get(2) - p.get(1) * Complex64::new(a, 0.0)
        + p0 * Complex64::new(a * (a - 1.0) / 2.0, 0.0);

    let mut worst = 0.0f64;
    for n in 0..=n_hor - 3 {
        let rhs = conv_term.get(n)
            + p0 * Complex64::new(b[n + 3], 0.0)
            + &corr1 * Complex64::new(b[n + 2], 0.0)
            + &corr2 * Complex64::new(b[n + 1], 0.0);
        let diff = (lhs.get(n) - rhs).norm();
        let scale = lhs.get(n).norm().max(1.0);
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}
