//! Dense linear-algebra helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

/// Default relative threshold for numerical rank: singular values above
/// `tol * sigma_max` count.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Thin SVD with singular values sorted in descending order.
///
/// Returns `(U, sigma, V)` with `U` of shape `rows x k`, `V` of shape
/// `cols x k` and `k = min(rows, cols)`.
pub fn svd_sorted(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (DMatrix::zeros(rows, 0), DVector::zeros(0), DMatrix::zeros(cols, 0));
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u_s = DMatrix::zeros(rows, k);
    let mut v_s = DMatrix::zeros(cols, k);
    let mut s_s = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        u_s.set_column(dst, &u.column(src));
        v_s.set_column(dst, &v_t.row(src).transpose());
        s_s[dst] = s[src];
    }
    (u_s, s_s, v_s)
}

/// Number of singular values strictly above `tol * sigma_max`.
pub fn numerical_rank_of_values(sigma: &DVector<f64>, tol: f64) -> usize {
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > tol * smax).count()
}

pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let (_, s, _) = svd_sorted(a);
    numerical_rank_of_values(&s, tol)
}

/// Extend the orthonormal columns of `basis` (shape `n x r`) to an `n x n`
/// orthonormal matrix whose first `r` columns are exactly `basis`.
pub fn complete_orthonormal(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, r) = basis.shape();
    let mut out = DMatrix::zeros(n, n);
    out.columns_mut(0, r).copy_from(basis);
    let mut filled = r;
    // Gram-Schmidt against the canonical vectors, twice for stability.
    for k in 0..n {
        if filled == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for j in 0..filled {
                let c = out.column(j).dot(&v);
                v -= out.column(j) * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            out.set_column(filled, &(v / norm));
            filled += 1;
        }
    }
    out
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest absolute entry of `a - I`.
pub fn identity_deviation(a: &DMatrix<f64>) -> f64 {
    let mut dev: f64 = 0.0;
    for ((i, j), v) in a.iter().enumerate().map(|(k, v)| ((k % a.nrows(), k / a.nrows()), v)) {
        let target = if i == j { 1.0 } else { 0.0 };
        dev = dev.max((v - target).abs());
    }
    dev
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// sign correction).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = random_gaussian(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Solve for the inverse of a square matrix, reporting its 2-norm condition
/// number.
pub(crate) fn inverse_with_condition(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let (_, s, _) = svd_sorted(a);
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin == 0.0 { f64::INFINITY } else { smax / smin };
    a.clone().try_inverse().map(|inv| (inv, cond))
}
