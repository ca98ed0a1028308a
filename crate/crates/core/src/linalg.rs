//! Small dense helpers shared across the estimator modules.

use ndarray::{Array1, Array2, LinalgScalar};
use num_complex::Complex64;

/// Kronecker product a ⊗ b.
pub fn kron<T: LinalgScalar>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors, a ⊗ b.
pub fn kron_vec<T: LinalgScalar>(a: &Array1<T>, b: &Array1<T>) -> Array1<T> {
    let mut out = Array1::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Khatri-Rao product: column-wise Kronecker of equally wide matrices.
pub fn khatri_rao<T: LinalgScalar>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    assert_eq!(a.ncols(), b.ncols(), "khatri_rao: column counts differ");
    let mut out = Array2::zeros((a.nrows() * b.nrows(), a.ncols()));
    for c in 0..a.ncols() {
        let col = kron_vec(&a.column(c).to_owned(), &b.column(c).to_owned());
        out.column_mut(c).assign(&col);
    }
    out
}

/// Column-major vectorization, vec(A).
pub fn vec_cm<T: LinalgScalar>(a: &Array2<T>) -> Array1<T> {
    let (r, c) = a.dim();
    let mut out = Array1::zeros(r * c);
    for j in 0..c {
        for i in 0..r {
            out[j * r + i] = a[(i, j)];
        }
    }
    out
}

/// Inverse of [`vec_cm`]: reshape a column-major vector back into r x c.
pub fn unvec_cm<T: LinalgScalar>(v: &Array1<T>, r: usize, c: usize) -> Array2<T> {
    assert_eq!(v.len(), r * c);
    let mut out = Array2::zeros((r, c));
    for j in 0..c {
        for i in 0..r {
            out[(i, j)] = v[j * r + i];
        }
    }
    out
}

/// Reverse the row order of a matrix (left-multiplication by the exchange matrix J).
pub fn flip_rows<T: LinalgScalar>(a: &Array2<T>) -> Array2<T> {
    let mut out = a.clone();
    let n = a.nrows();
    for i in 0..n {
        out.row_mut(i).assign(&a.row(n - 1 - i));
    }
    out
}

/// Element-wise conjugate.
pub fn conj(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.mapv(|z| z.conj())
}

/// Conjugate transpose.
pub fn hermitian(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut t = a.t().to_owned();
    t.mapv_inplace(|z| z.conj());
    t
}

/// Block diagonal matrix with `n` copies of `a`.
pub fn block_diag_repeat<T: LinalgScalar>(a: &Array2<T>, n: usize) -> Array2<T> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((r * n, c * n));
    for k in 0..n {
        out.slice_mut(ndarray::s![k * r..(k + 1) * r, k * c..(k + 1) * c])
            .assign(a);
    }
    out
}

/// Block diagonal matrix from a list of equally sized blocks.
pub fn block_diag<T: LinalgScalar>(blocks: &[Array2<T>]) -> Array2<T> {
    assert!(!blocks.is_empty());
    let (r, c) = blocks[0].dim();
    let n = blocks.len();
    let mut out = Array2::zeros((r * n, c * n));
    for (k, b) in blocks.iter().enumerate() {
        assert_eq!(b.dim(), (r, c));
        out.slice_mut(ndarray::s![k * r..(k + 1) * r, k * c..(k + 1) * c])
            .assign(b);
    }
    out
}

/// Promote a real matrix to complex storage.
pub fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|x| Complex64::new(x, 0.0))
}

/// Squared Frobenius norm of a complex matrix.
pub fn fro_norm_sq(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
