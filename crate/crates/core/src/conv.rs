//! Circular convolution in SISO, SIMO, MIMO, MISO and 2-D forms.
//!
//! The public routines take filters in the Hankel-product convention: the
//! output is `H_d(f) g`, i.e. `out[k] = sum_j f[(k + j) mod n] g[j]`, which
//! correlates with `g`. Use [`flip_filter`] to express a true convolution
//! `f ⊛ g` in this convention, or [`circular_convolve`] directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{param, shape, Result};

/// `out[k] = sum_j f[(k + j) mod n] g[j]`, equal to `lift(f, |g|) * g`.
pub fn conv_circular(f: &DVector<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, d) = (f.len(), g.len());
    if d == 0 || d > n {
        return Err(param(format!("filter length {d} must be in 1..={n}")));
    }
    Ok(DVector::from_fn(n, |k, _| (0..d).map(|j| f[(k + j) % n] * g[j]).sum()))
}

/// True circular convolution `(a ⊛ b)[k] = sum_j a[(k - j) mod n] b[j]`, with
/// `b` zero-padded to the length of `a`.
pub fn circular_convolve(a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, m) = (a.len(), b.len());
    if m > n {
        return Err(param(format!("filter length {m} exceeds signal length {n}")));
    }
    Ok(DVector::from_fn(n, |k, _| (0..m).map(|j| a[(k + n - j) % n] * b[j]).sum()))
}

/// Zero-pad `g` to length `n` and reverse it circularly, so that
/// `conv_circular(f, flip_filter(g, n)) == circular_convolve(f, g)`.
pub fn flip_filter(g: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    if g.len() > n || n == 0 {
        return Err(param(format!("filter length {} exceeds n={n}", g.len())));
    }
    Ok(DVector::from_fn(n, |k, _| {
        let src = (n - k) % n;
        if src < g.len() {
            g[src]
        } else {
            0.0
        }
    }))
}

/// A 1-D filter together with the convention its taps are written in.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    pub taps: DVector<f64>,
    /// `true` when `taps` are already in the Hankel-product convention.
    pub flipped: bool,
}

impl FilterKernel {
    pub fn hankel(taps: DVector<f64>) -> Self {
        Self { taps, flipped: true }
    }

    pub fn convolution(taps: DVector<f64>) -> Self {
        Self { taps, flipped: false }
    }

    pub fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        if self.flipped {
            conv_circular(f, &self.taps)
        } else {
            circular_convolve(f, &self.taps)
        }
    }
}

/// Multi-channel kernel `Ψ` of shape `pd x q`: block `j` (rows `j*d..(j+1)*d`)
/// holds the filters applied to input channel `j`, one column per output.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoKernel {
    matrix: DMatrix<f64>,
    p: usize,
    d: usize,
}

impl MimoKernel {
    pub fn new(matrix: DMatrix<f64>, p: usize) -> Result<Self> {
        let rows = matrix.nrows();
        if p == 0 || rows == 0 || rows % p != 0 {
            return Err(shape(format!("{rows} kernel rows cannot be split into {p} blocks")));
        }
        if matrix.ncols() == 0 {
            return Err(shape("kernel needs at least one output channel"));
        }
        Ok(Self { d: rows / p, matrix, p })
    }

    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| shape("no kernel blocks"))?;
        let (d, q) = first.shape();
        if blocks.iter().any(|b| b.shape() != (d, q)) {
            return Err(shape("kernel blocks differ in shape"));
        }
        let mut m = DMatrix::zeros(d * blocks.len(), q);
        for (j, b) in blocks.iter().enumerate() {
            m.rows_mut(j * d, d).copy_from(b);
        }
        Self::new(m, blocks.len())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.matrix.ncols()
    }

    /// The `d x q` block for input channel `j`.
    pub fn block(&self, j: usize) -> DMatrix<f64> {
        self.matrix.rows(j * self.d, self.d).into_owned()
    }

    /// Filter from input channel `j` to output channel `i`.
    pub fn filter(&self, j: usize, i: usize) -> DVector<f64> {
        self.matrix.view((j * self.d, i), (self.d, 1)).column(0).into_owned()
    }

    /// Kernel whose block `j` is `w[j]` times block `j` of `self`.
    pub fn scaled(&self, w: &DVector<f64>) -> Result<Self> {
        if w.len() != self.p {
            return Err(shape(format!("weight length {} != p={}", w.len(), self.p)));
        }
        let mut m = self.matrix.clone();
        for j in 0..self.p {
            m.rows_mut(j * self.d, self.d).scale_mut(w[j]);
        }
        Self::new(m, self.p)
    }
}

fn check_signal(z: &DMatrix<f64>, p: usize, d: usize) -> Result<()> {
    if z.ncols() != p {
        return Err(shape(format!("signal has {} channels, kernel expects {p}", z.ncols())));
    }
    if d > z.nrows() {
        return Err(param(format!("filter length {d} exceeds signal length {}", z.nrows())));
    }
    Ok(())
}

/// Single input, `q` filters: column `i` is `conv_circular(f, Ψ[:, i])`.
pub fn conv_simo(f: &DVector<f64>, psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let z = DMatrix::from_column_slice(f.len(), 1, f.as_slice());
    conv_mimo(&z, &MimoKernel::new(psi.clone(), 1)?)
}

/// `y_i = sum_j conv_circular(z_j, ψ_i^j)`, equal to `lift_extended(Z, d) Ψ`.
pub fn conv_mimo(z: &DMatrix<f64>, kernel: &MimoKernel) -> Result<DMatrix<f64>> {
    let (p, d, q) = (kernel.p(), kernel.d(), kernel.q());
    check_signal(z, p, d)?;
    let n = z.nrows();
    let psi = kernel.matrix();
    Ok(DMatrix::from_fn(n, q, |k, i| {
        let mut acc = 0.0;
        for j in 0..p {
            for s in 0..d {
                acc += z[((k + s) % n, j)] * psi[(j * d + s, i)];
            }
        }
        acc
    }))
}

/// Multi-input, single-output: `y = sum_j conv_circular(z_j, ψ^j)` for a
/// stacked `pd` filter vector.
pub fn conv_miso(z: &DMatrix<f64>, psi: &DVector<f64>) -> Result<DVector<f64>> {
    let kernel = MimoKernel::new(DMatrix::from_column_slice(psi.len(), 1, psi.as_slice()), z.ncols())?;
    Ok(conv_mimo(z, &kernel)?.column(0).into_owned())
}

/// MIMO convolution with a scalar weight per input channel, computed by
/// weighting each channel's contribution.
pub fn conv_cnn_weighted(z: &DMatrix<f64>, kernel: &MimoKernel, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (p, q) = (kernel.p(), kernel.q());
    if w.len() != p {
        return Err(shape(format!("weight length {} != p={p}", w.len())));
    }
    check_signal(z, p, kernel.d())?;
    let mut out = DMatrix::zeros(z.nrows(), q);
    for j in 0..p {
        let zj = z.column(j).into_owned();
        for i in 0..q {
            out.column_mut(i).axpy(w[j], &conv_circular(&zj, &kernel.filter(j, i))?, 1.0);
        }
    }
    Ok(out)
}

/// True-convolution MIMO: `y_i = sum_j z_j ⊛ k_i^j` with the same block layout
/// as [`conv_mimo`].
pub fn convolve_mimo(z: &DMatrix<f64>, kernel: &MimoKernel) -> Result<DMatrix<f64>> {
    let (p, d, q) = (kernel.p(), kernel.d(), kernel.q());
    check_signal(z, p, d)?;
    let n = z.nrows();
    let k = kernel.matrix();
    Ok(DMatrix::from_fn(n, q, |t, i| {
        let mut acc = 0.0;
        for j in 0..p {
            for s in 0..d {
                acc += z[((t + n - s) % n, j)] * k[(j * d + s, i)];
            }
        }
        acc
    }))
}

/// 2-D MIMO convolution over `p` images with a `d1 d2 p x q` kernel matrix.
///
/// Column `i` of block `j` holds `vec(K_i^j)` in column-major order, and
/// `Y_i[r, c] = sum_j sum_{s,t} X_j[r + s, c + t] K_i^j[s, t]` with wrap-around.
pub fn conv_mimo_2d(images: &[DMatrix<f64>], kernel: &DMatrix<f64>, d1: usize, d2: usize) -> Result<Vec<DMatrix<f64>>> {
    let first = images.first().ok_or_else(|| param("at least one image channel is required"))?;
    let (n1, n2) = first.shape();
    if images.iter().any(|im| im.shape() != (n1, n2)) {
        return Err(shape("image channels differ in size"));
    }
    if d1 == 0 || d2 == 0 || d1 > n1 || d2 > n2 {
        return Err(param(format!("patch {d1}x{d2} does not fit image {n1}x{n2}")));
    }
    let block = d1 * d2;
    if kernel.nrows() != block * images.len() {
        return Err(shape(format!(
            "kernel has {} rows, expected {}",
            kernel.nrows(),
            block * images.len()
        )));
    }
    Ok((0..kernel.ncols())
        .map(|i| {
            DMatrix::from_fn(n1, n2, |r, c| {
                let mut acc = 0.0;
                for (j, x) in images.iter().enumerate() {
                    for t in 0..d2 {
                        for s in 0..d1 {
                            acc += x[((r + s) % n1, (c + t) % n2)] * kernel[(j * block + t * d1 + s, i)];
                        }
                    }
                }
                acc
            })
        })
        .collect())
}
