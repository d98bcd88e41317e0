//! Small dense matrix products.
//!
//! Every output row of `matmul` depends only on the matching row of `a`, so
//! stacking independent items into one product never changes their results.

use crate::numerics::Real;

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `c (m×n) [+]= a (m×k) · b (k×n)`.
pub fn matmul<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if !accumulate {
        c.iter_mut().for_each(|v| *v = T::zero());
    }
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &aip) in arow.iter().enumerate() {
            if aip != T::zero() {
                axpy(aip, &b[p * n..(p + 1) * n], crow);
            }
        }
    }
}

/// `c (m×n) [+]= aᵀ · b` with `a` stored as `k×m` and `b` as `k×n`.
pub fn matmul_tn<T: Real>(a: &[T], b: &[T], c: &mut [T], k: usize, m: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if !accumulate {
        c.iter_mut().for_each(|v| *v = T::zero());
    }
    for r in 0..k {
        let arow = &a[r * m..(r + 1) * m];
        let brow = &b[r * n..(r + 1) * n];
        for (i, &ari) in arow.iter().enumerate() {
            if ari != T::zero() {
                axpy(ari, brow, &mut c[i * n..(i + 1) * n]);
            }
        }
    }
}

/// `c (m×n) [+]= a · bᵀ` with `a` stored as `m×k` and `b` as `n×k`.
pub fn matmul_nt<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize, accumulate: bool) {
    let bt = transpose(b, n, k);
    matmul(a, &bt, c, m, k, n, accumulate);
}

/// Transpose of a `rows×cols` matrix.
pub fn transpose<T: Real>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), rows * cols);
    let mut out = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
