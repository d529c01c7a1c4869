//! Non-local bases `Φ` and their duals `Φ̃`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{param, shape, Error, Result};
use crate::linalg::{complete_orthonormal, identity_deviation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonlocalKind {
    Identity,
    Haar,
    Dct,
    AvgPool,
    MaxPool,
    Svd,
    Custom,
}

impl NonlocalKind {
    /// Whether the basis halves the signal length.
    pub fn pools(self) -> bool {
        matches!(self, Self::AvgPool | Self::MaxPool)
    }
}

impl fmt::Display for NonlocalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Identity => "identity",
            Self::Haar => "haar",
            Self::Dct => "dct",
            Self::AvgPool => "avgpool",
            Self::MaxPool => "maxpool",
            Self::Svd => "svd",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for NonlocalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "haar" => Ok(Self::Haar),
            "dct" => Ok(Self::Dct),
            "avgpool" => Ok(Self::AvgPool),
            "maxpool" => Ok(Self::MaxPool),
            other => Err(param(format!("unknown non-local basis '{other}'"))),
        }
    }
}

/// A non-local basis `Φ` (`n x m`) with its dual `Φ̃` (`n x m`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    pub phi: DMatrix<f64>,
    pub phi_dual: DMatrix<f64>,
    pub kind: NonlocalKind,
}

impl BasisPair {
    pub fn new(phi: DMatrix<f64>, phi_dual: DMatrix<f64>, kind: NonlocalKind) -> Result<Self> {
        if phi.shape() != phi_dual.shape() {
            return Err(shape(format!(
                "basis {}x{} and dual {}x{} differ",
                phi.nrows(),
                phi.ncols(),
                phi_dual.nrows(),
                phi_dual.ncols()
            )));
        }
        Ok(Self { phi, phi_dual, kind })
    }

    /// Self-dual pair `Φ̃ = Φ`.
    pub fn orthogonal(phi: DMatrix<f64>, kind: NonlocalKind) -> Self {
        Self { phi_dual: phi.clone(), phi, kind }
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn m(&self) -> usize {
        self.phi.ncols()
    }

    /// `max |Φ̃Φᵀ - I|`.
    pub fn frame_deviation(&self) -> f64 {
        identity_deviation(&(&self.phi_dual * self.phi.transpose()))
    }

    pub fn is_tight(&self, tol: f64) -> bool {
        self.frame_deviation() <= tol
    }

    pub fn identity(n: usize) -> Self {
        Self::orthogonal(DMatrix::identity(n, n), NonlocalKind::Identity)
    }

    /// One-level orthonormal Haar basis `[Φ_low Φ_high]` (`n x n`, `n` even).
    pub fn haar(n: usize) -> Result<Self> {
        let (low, high) = haar_bands(n)?;
        let mut phi = DMatrix::zeros(n, n);
        phi.columns_mut(0, n / 2).copy_from(&low);
        phi.columns_mut(n / 2, n / 2).copy_from(&high);
        Ok(Self::orthogonal(phi, NonlocalKind::Haar))
    }

    /// Orthonormal DCT-II basis; column `k` is the `k`-th cosine atom.
    pub fn dct(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("DCT basis needs n >= 1"));
        }
        let phi = DMatrix::from_fn(n, n, |t, k| {
            let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            c * (PI * (t as f64 + 0.5) * k as f64 / n as f64).cos()
        });
        Ok(Self::orthogonal(phi, NonlocalKind::Dct))
    }

    /// Average pooling alone: `Φ = Φ̃ = Φ_low` (`n x n/2`). Not a frame.
    pub fn avg_pool(n: usize) -> Result<Self> {
        let (low, _) = haar_bands(n)?;
        Ok(Self::orthogonal(low, NonlocalKind::AvgPool))
    }

    /// Max pooling on pairs `(2i, 2i+1)`: column `i` selects the entry whose
    /// row of `reference` has the larger sum, ties going to the lower index.
    pub fn max_pool(reference: &DMatrix<f64>) -> Result<Self> {
        let n = reference.nrows();
        if n == 0 || n % 2 != 0 {
            return Err(param(format!("pooling needs an even length, got {n}")));
        }
        let mut phi = DMatrix::zeros(n, n / 2);
        for i in 0..n / 2 {
            let a = reference.row(2 * i).sum();
            let b = reference.row(2 * i + 1).sum();
            let pick = if b > a { 2 * i + 1 } else { 2 * i };
            phi[(pick, i)] = 1.0;
        }
        Ok(Self::orthogonal(phi, NonlocalKind::MaxPool))
    }

    /// Left singular vectors `U` (`n x r`, orthonormal) completed to an
    /// orthonormal `n x n` basis with `U` as its first columns.
    pub fn svd(u: &DMatrix<f64>) -> Self {
        Self::orthogonal(complete_orthonormal(u), NonlocalKind::Svd)
    }

    /// Build the basis for `kind` at length `n`; `reference` drives max pooling.
    pub fn for_kind(kind: NonlocalKind, n: usize, reference: Option<&DMatrix<f64>>) -> Result<Self> {
        match kind {
            NonlocalKind::Identity => Ok(Self::identity(n)),
            NonlocalKind::Haar => Self::haar(n),
            NonlocalKind::Dct => Self::dct(n),
            NonlocalKind::AvgPool => Self::avg_pool(n),
            NonlocalKind::MaxPool => match reference {
                Some(r) => Self::max_pool(r),
                None => Err(param("max pooling needs a reference signal")),
            },
            NonlocalKind::Svd | NonlocalKind::Custom => Err(param(format!("{kind} bases are data-supplied"))),
        }
    }
}

/// Haar low-pass and high-pass halves, each `n x n/2`.
pub fn haar_bands(n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n == 0 || n % 2 != 0 {
        return Err(param(format!("Haar basis needs an even length, got {n}")));
    }
    let mut low = DMatrix::zeros(n, n / 2);
    let mut high = DMatrix::zeros(n, n / 2);
    for i in 0..n / 2 {
        low[(2 * i, i)] = FRAC_1_SQRT_2;
        low[(2 * i + 1, i)] = FRAC_1_SQRT_2;
        high[(2 * i, i)] = FRAC_1_SQRT_2;
        high[(2 * i + 1, i)] = -FRAC_1_SQRT_2;
    }
    Ok((low, high))
}
