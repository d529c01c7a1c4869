//! Wrap-around Hankel lifting and its generalized inverses.
//!
//! For a signal `f` of length `n` and a filter length `d`, the lifted matrix
//! `H_d(f)` is `n x d` with entry `(i, j) = f[(i + j) mod n]` (0-based). Every
//! circular convolution in this crate is a product with such a matrix, so
//! these routines are the algebra the rest of the library stands on.
//!
//! `unlift` is the adjoint-normalized left inverse: entry `k` is the mean of
//! the `d` entries that `H_d` places on wrapped anti-diagonal `k`. On a
//! Hankel-structured input it inverts the lift exactly; on any other matrix it
//! first projects onto the Hankel space (anti-diagonal averaging) and then
//! reads off the signal.

use nalgebra::{DMatrix, DVector};

use crate::error::{param, shape, Result};

/// Default number of entries above which [`lift_auto`] returns an implicit
/// view instead of a dense matrix.
pub const DENSE_LIMIT: usize = 1 << 24;

fn check_len(n: usize, d: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(param(format!("filter length d={d} must satisfy 1 <= d <= n={n}")));
    }
    Ok(())
}

/// A signal as a one-channel `n x 1` matrix.
pub fn to_channel(f: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(f.len(), 1, f.as_slice())
}

/// Wrap-around Hankel matrix `H_d(f)`, shape `n x d`.
pub fn lift(f: &DVector<f64>, d: usize) -> Result<DMatrix<f64>> {
    let n = f.len();
    check_len(n, d)?;
    Ok(DMatrix::from_fn(n, d, |i, j| f[(i + j) % n]))
}

/// Extended Hankel matrix `H_{d|p}(Z) = [H_d(z_1) ... H_d(z_p)]`, shape `n x pd`.
pub fn lift_extended(z: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let (n, p) = z.shape();
    if p == 0 {
        return Err(param("multi-channel signal needs at least one channel"));
    }
    check_len(n, d)?;
    Ok(DMatrix::from_fn(n, p * d, |i, col| {
        let (ch, j) = (col / d, col % d);
        z[((i + j) % n, ch)]
    }))
}

/// Block Hankel matrix of an `n1 x n2` image for a `d1 x d2` patch, shape
/// `(n1 n2) x (d1 d2)`.
///
/// Rows follow column-stacked `vec` order of the output image (`row = c * n1 + r`)
/// and columns follow `vec` order of the kernel (`col = t * d1 + s`), so that
/// `vec(Y) = H_{d1,d2}(X) vec(K)` with `Y[r, c] = sum X[r + s, c + t] K[s, t]`.
pub fn lift_block_2d(x: &DMatrix<f64>, d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    let (n1, n2) = x.shape();
    check_len(n1, d1)?;
    check_len(n2, d2)?;
    Ok(DMatrix::from_fn(n1 * n2, d1 * d2, |row, col| {
        let (c, r) = (row / n1, row % n1);
        let (t, s) = (col / d1, col % d1);
        x[((r + s) % n1, (c + t) % n2)]
    }))
}

/// Extended block Hankel matrix `[H_{d1,d2}(X_1) ... H_{d1,d2}(X_p)]`.
pub fn lift_block_2d_extended(images: &[DMatrix<f64>], d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    let first = images.first().ok_or_else(|| param("at least one image channel is required"))?;
    let (n1, n2) = first.shape();
    if images.iter().any(|im| im.shape() != (n1, n2)) {
        return Err(shape("image channels differ in size"));
    }
    let block = d1 * d2;
    let mut out = DMatrix::zeros(n1 * n2, block * images.len());
    for (k, im) in images.iter().enumerate() {
        out.columns_mut(k * block, block).copy_from(&lift_block_2d(im, d1, d2)?);
    }
    Ok(out)
}

/// Generalized inverse of [`lift`]: `out[k]` is the mean of the entries of `b`
/// on wrapped anti-diagonal `k`.
pub fn unlift(b: &DMatrix<f64>) -> DVector<f64> {
    let (n, d) = b.shape();
    let mut out = DVector::zeros(n);
    if n == 0 || d == 0 {
        return out;
    }
    for j in 0..d {
        for i in 0..n {
            out[(i + j) % n] += b[(i, j)];
        }
    }
    out / d as f64
}

/// Column-block-wise [`unlift`] of an `n x pd` matrix into `n x p` channels.
pub fn unlift_extended(b: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let (n, cols) = b.shape();
    if p == 0 || cols % p != 0 {
        return Err(shape(format!("{cols} columns cannot be split into {p} channel blocks")));
    }
    let d = cols / p;
    let mut out = DMatrix::zeros(n, p);
    for ch in 0..p {
        let block = b.columns(ch * d, d).into_owned();
        out.set_column(ch, &unlift(&block));
    }
    Ok(out)
}

/// Generalized inverse of [`lift_block_2d`] for an `n1 x n2` image: each pixel
/// is the mean of the `d1 d2` lifted entries that copy it.
pub fn unlift_block_2d(b: &DMatrix<f64>, n1: usize, n2: usize, d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    if b.shape() != (n1 * n2, d1 * d2) {
        return Err(shape(format!(
            "block Hankel inverse expects {}x{}, got {}x{}",
            n1 * n2,
            d1 * d2,
            b.nrows(),
            b.ncols()
        )));
    }
    let mut out = DMatrix::zeros(n1, n2);
    for col in 0..d1 * d2 {
        let (t, s) = (col / d1, col % d1);
        for row in 0..n1 * n2 {
            let (c, r) = (row / n1, row % n1);
            out[((r + s) % n1, (c + t) % n2)] += b[(row, col)];
        }
    }
    Ok(out / (d1 * d2) as f64)
}

/// Channel-wise [`unlift_block_2d`] of an extended block Hankel matrix.
pub fn unlift_block_2d_extended(
    b: &DMatrix<f64>,
    p: usize,
    n1: usize,
    n2: usize,
    d1: usize,
    d2: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let block = d1 * d2;
    if p == 0 || b.ncols() != p * block {
        return Err(shape(format!("{} columns do not hold {p} blocks of {block}", b.ncols())));
    }
    (0..p)
        .map(|k| unlift_block_2d(&b.columns(k * block, block).into_owned(), n1, n2, d1, d2))
        .collect()
}

/// The `n x d` matrix `C_d(h)`: column `j` holds `h` shifted down by `j`.
///
/// Shifts that run past row `n` wrap around, which keeps
/// `lift(f ⊛ h̄, d) = lift(f, n) * circulant(h, d, n)` valid for every `d`.
pub fn circulant(h: &DVector<f64>, d: usize, n: usize) -> Result<DMatrix<f64>> {
    let m = h.len();
    if m > n {
        return Err(param(format!("filter length {m} exceeds n={n}")));
    }
    if d == 0 || d > n {
        return Err(param(format!("column count d={d} must satisfy 1 <= d <= n={n}")));
    }
    let mut out = DMatrix::zeros(n, d);
    for j in 0..d {
        for (s, &hs) in h.iter().enumerate() {
            out[((j + s) % n, j)] += hs;
        }
    }
    Ok(out)
}

/// Index-computed view of `H_d(f)` that never materializes the matrix.
#[derive(Debug, Clone, Copy)]
pub struct HankelView<'a> {
    f: &'a [f64],
    d: usize,
}

impl<'a> HankelView<'a> {
    pub fn new(f: &'a [f64], d: usize) -> Result<Self> {
        check_len(f.len(), d)?;
        Ok(Self { f, d })
    }

    pub fn nrows(&self) -> usize {
        self.f.len()
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[(i + j) % self.f.len()]
    }

    /// `H_d(f) v` for a length-`d` vector.
    pub fn mul_vec(&self, v: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.d {
            return Err(shape(format!("vector length {} != d={}", v.len(), self.d)));
        }
        let n = self.f.len();
        Ok(DVector::from_fn(n, |i, _| v.iter().enumerate().map(|(j, vj)| self.get(i, j) * vj).sum()))
    }

    /// `H_d(f)^T u` for a length-`n` vector.
    pub fn tr_mul_vec(&self, u: &[f64]) -> Result<DVector<f64>> {
        let n = self.f.len();
        if u.len() != n {
            return Err(shape(format!("vector length {} != n={n}", u.len())));
        }
        Ok(DVector::from_fn(self.d, |j, _| u.iter().enumerate().map(|(i, ui)| ui * self.get(i, j)).sum()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.d, |i, j| self.get(i, j))
    }
}

/// A lifted signal, dense or implicit depending on its size.
#[derive(Debug, Clone)]
pub enum Lifted<'a> {
    Dense(DMatrix<f64>),
    Implicit(HankelView<'a>),
}

/// Lift densely when `n * d <= limit`, otherwise return an implicit view.
pub fn lift_auto(f: &DVector<f64>, d: usize, limit: usize) -> Result<Lifted<'_>> {
    check_len(f.len(), d)?;
    if f.len().saturating_mul(d) <= limit {
        lift(f, d).map(Lifted::Dense)
    } else {
        HankelView::new(f.as_slice(), d).map(Lifted::Implicit)
    }
}
