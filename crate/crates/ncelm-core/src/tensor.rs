//! Dense row-major matrices, numerically stable reductions, and a seeded
//! deterministic random stream.
//!
//! Everything is `f64`. The kernels fix their summation order in the source
//! (eight-lane accumulators for dot products), so results are bit-identical
//! across runs and build hosts regardless of the vector ISA the compiler
//! targets.

use crate::error::{Error, Result};

/// Dense matrix, row-major `f64` storage.
///
/// `data.len() == rows * cols` always holds; constructors that accept user
/// data reject non-finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row-major data, rejecting length mismatches and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{}x{} needs {} values, got {}", rows, cols, rows * cols, data.len()),
            ));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("Matrix::from_vec data".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("from_rows", "ragged rows".to_string()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn transposed(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`, the standard product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (l, &a_il) in a_row.iter().enumerate() {
                axpy(out_row, a_il, other.row(l));
            }
        }
        Ok(out)
    }

    /// `self * other^T`; `other` is `n x k` with `k == self.cols`.
    ///
    /// Row-against-row dot products, the cache-friendly orientation for the
    /// score computations where both operands are stored row-major.
    pub fn matmul_nt(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::shape(
                "matmul_nt",
                format!("{}x{} * ({}x{})^T", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, other.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * other`; both operands are `n x *` with matching `n`.
    ///
    /// Accumulates rank-1 updates row by row; used for weight gradients
    /// `dW = dY^T X`.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::shape(
                "matmul_tn",
                format!("({}x{})^T * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (j, &a_ij) in a_row.iter().enumerate() {
                axpy(out.row_mut(j), a_ij, b_row);
            }
        }
        Ok(out)
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "add_assign",
                format!("{:?} += {:?}", self.shape(), other.shape()),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "scaled_add",
                format!("{:?} += a*{:?}", self.shape(), other.shape()),
            ));
        }
        axpy(&mut self.data, alpha, &other.data);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for x in &mut self.data {
            *x *= alpha;
        }
    }

    /// Sum of squares of all entries.
    pub fn sq_sum(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    /// Column sums as a length-`cols` vector.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Dot product with a fixed eight-accumulator summation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let split = n - n % 8;
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for j in 0..8 {
            acc[j] += ca[j] * cb[j];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha * x` over slices of equal length.
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Stable `ln(sum_i exp(v_i))`: `max(v) + ln(sum exp(v_i - max))`.
///
/// Never overflows for finite inputs; rejects the empty vector.
pub fn log_sum_exp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("log_sum_exp of empty vector".into()));
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = v.iter().map(|x| (x - m).exp()).sum();
    Ok(m + s.ln())
}

/// Two-operand log-sum-exp, `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Seeded deterministic random stream.
///
/// The generator is SplitMix64, a 64-bit counter-based design. From state
/// `s` the update is:
///
/// ```text
/// s  = s + 0x9E3779B97F4A7C15                 (wrapping)
/// z  = s
/// z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
/// z  = (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
/// out = z ^ (z >> 31)
/// ```
///
/// Uniform doubles are formed as `(out >> 11) * 2^-53`, giving values in
/// `[0, 1)`. Two streams with the same seed emit identical sequences.
///
/// Sub-task streams are derived from the *root seed* and a role tag:
/// `child_seed = mix(seed XOR fnv1a64(tag))` where `mix` is one SplitMix64
/// output step and `fnv1a64` is the standard FNV-1a 64-bit hash of the tag
/// bytes. Streams for different roles are therefore independent of each
/// other and of how much the parent stream has been consumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, state: seed }
    }

    /// Derives an independent stream for a named sub-task ("init",
    /// "dropout", "noise", ...). Depends only on the root seed and the tag.
    pub fn split(&self, role: &str) -> RngStream {
        RngStream::new(mix64(self.seed ^ fnv1a64(role.as_bytes())))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// (seed, state) pair, sufficient to reconstruct the stream exactly.
    pub fn snapshot(&self) -> (u64, u64) {
        (self.seed, self.state)
    }

    pub fn restore(seed: u64, state: u64) -> Self {
        RngStream { seed, state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// `n` uniform draws in `[lo, hi)`; rejects `lo >= hi`.
    pub fn uniform_vec(&mut self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "uniform range requires lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok((0..n).map(|_| self.uniform(lo, hi)).collect())
    }

    /// Zero-mean Gaussian draw via Box-Muller: with `u1 in (0,1]`,
    /// `u2 in [0,1)`, returns `sigma * sqrt(-2 ln u1) * cos(2 pi u2)`.
    /// Consumes exactly two raw draws per sample.
    pub fn gaussian(&mut self, sigma: f64) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform index in `[0, n)`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64()) * n as f64) as usize % n
    }
}
