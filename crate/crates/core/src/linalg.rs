//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Operator 2-norm (largest singular value) of a dense complex matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &DVector<Complex64>) -> f64 {
    v.norm()
}

pub fn is_finite_matrix(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_vector(v: &DVector<Complex64>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Causal (lower-triangular Toeplitz) convolution of two scalar complex
/// sequences via FFT: out(n) = sum_{j<=n} a(n-j) b(j), n = 0..=len-1.
///
/// This is the internal fast path; callers that need the exact direct sum
/// use the O(N^2) loops in `calculus`. The two are compared in tests.
pub struct CausalFft {
    len: usize,
    size: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl CausalFft {
    pub fn new(len: usize) -> Self {
        let size = (2 * len).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);
        Self {
            len,
            size,
            fft,
            ifft,
        }
    }

    pub fn seq_len(&self) -> usize {
        self.len
    }

    /// Forward transform of a sequence zero-padded to the plan size.
    pub fn forward(&self, seq: &[Complex64]) -> Vec<Complex64> {
        assert!(seq.len() <= self.size);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        buf[..seq.len()].copy_from_slice(seq);
        self.fft.process(&mut buf);
        buf
    }

    /// Inverse transform; returns the first `len` entries, normalized.
    pub fn inverse(&self, mut freq: Vec<Complex64>) -> Vec<Complex64> {
        self.ifft.process(&mut freq);
        let scale = 1.0 / self.size as f64;
        freq.truncate(self.len);
        freq.iter_mut().for_each(|z| *z *= scale);
        freq
    }

    pub fn convolve(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let fa = self.forward(a);
        let fb = self.forward(b);
        let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        self.inverse(prod)
    }
}

/// Direct causal convolution of scalar complex slices, truncated to the
/// shorter input length.
pub fn causal_convolve_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|j| a[k - j] * b[j]).sum())
        .collect()
}

/// Deterministic complex Householder unitary I - 2 w w^H from a seed vector.
/// Used by tests and fixtures to build normal matrices with known norms.
pub fn householder_unitary(dim: usize, seed: &[f64]) -> DMatrix<Complex64> {
    assert!(seed.len() >= 2 * dim);
    let mut w = DVector::from_fn(dim, |i, _| Complex64::new(seed[2 * i], seed[2 * i + 1]));
    let nrm = w.norm();
    w /= Complex64::new(nrm, 0.0);
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let two = Complex64::new(2.0, 0.0);
    &id - (&w * w.adjoint()) * two
}
