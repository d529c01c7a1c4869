//! Low-rank structure of lifted signals: FRI signal synthesis, Hankel SVDs,
//! annihilating filters, SVD-derived bases and rank-`r` shrinkage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::BasisPair;
use crate::error::{param, Error, Result};
use crate::hankel::{lift, lift_extended, unlift_extended};
use crate::layer::FilterBank;
use crate::linalg::{numerical_rank_of_values, svd_sorted};

/// One term `c k^l λ^k` of a finite-rate-of-innovation signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriTerm {
    pub amplitude: Complex64,
    pub base: Complex64,
    pub degree: u32,
}

impl FriTerm {
    pub fn new(amplitude: Complex64, base: Complex64, degree: u32) -> Self {
        Self { amplitude, base, degree }
    }

    /// Undamped exponential `c e^{-i ω k}`.
    pub fn exponential(amplitude: Complex64, omega: f64) -> Self {
        Self::new(amplitude, Complex64::from_polar(1.0, -omega), 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriSignalSpec {
    pub terms: Vec<FriTerm>,
    pub n: usize,
}

impl FriSignalSpec {
    /// Sum of `degree + 1` over the terms. This is the rank of the wrap-around
    /// lift when the terms are closed under conjugation (so the signal is
    /// real), every base is an `n`-th root of unity and every degree is 0;
    /// other terms are not `n`-periodic and wrap-around raises the rank.
    pub fn innovation_rank(&self) -> usize {
        self.terms.iter().map(|t| t.degree as usize + 1).sum()
    }
}

/// `f[k] = Re sum c k^l λ^k` for `k = 0..n`.
pub fn fri_generate(spec: &FriSignalSpec) -> Result<DVector<f64>> {
    if spec.n == 0 {
        return Err(param("signal length must be positive"));
    }
    for t in &spec.terms {
        if t.base.norm() > 1.0 + 1e-12 {
            return Err(param(format!("base {} lies outside the unit disc", t.base)));
        }
    }
    Ok(DVector::from_fn(spec.n, |k, _| {
        spec.terms
            .iter()
            .map(|t| {
                let poly = (k as f64).powi(t.degree as i32);
                (t.amplitude * t.base.powu(k as u32) * poly).re
            })
            .sum()
    }))
}

/// Thin SVD of a lifted signal with its numerical rank.
#[derive(Debug, Clone)]
pub struct HankelSvd {
    /// `n x k` left singular vectors, `k = min(n, pd)`.
    pub u: DMatrix<f64>,
    /// Singular values, descending.
    pub sigma: DVector<f64>,
    /// `pd x k` right singular vectors.
    pub v: DMatrix<f64>,
    pub rank: usize,
    pub p: usize,
    pub d: usize,
}

impl HankelSvd {
    pub fn u_r(&self) -> DMatrix<f64> {
        self.u.columns(0, self.rank).into_owned()
    }

    pub fn v_r(&self) -> DMatrix<f64> {
        self.v.columns(0, self.rank).into_owned()
    }

    pub fn sigma_r(&self) -> DVector<f64> {
        self.sigma.rows(0, self.rank).into_owned()
    }

    /// Frobenius norm of the singular values past `r`, the Eckart-Young error.
    pub fn tail_energy(&self, r: usize) -> f64 {
        let r = r.min(self.sigma.len());
        self.sigma.rows(r, self.sigma.len() - r).norm()
    }

    /// Best rank-`r` approximation of the lifted matrix.
    pub fn truncated(&self, r: usize) -> DMatrix<f64> {
        let r = r.min(self.sigma.len());
        let us = DMatrix::from_fn(self.u.nrows(), r, |i, j| self.u[(i, j)] * self.sigma[j]);
        us * self.v.columns(0, r).transpose()
    }
}

/// SVD of `lift_extended(z, d)`; rank counts singular values above `tol * σ_1`.
pub fn hankel_svd(z: &DMatrix<f64>, d: usize, tol: f64) -> Result<HankelSvd> {
    let h = lift_extended(z, d)?;
    let (u, sigma, v) = svd_sorted(&h);
    let rank = numerical_rank_of_values(&sigma, tol);
    Ok(HankelSvd { u, sigma, v, rank, p: z.ncols(), d })
}

/// Unit-norm annihilating filter `h` of length `r + 1`, where `r` is the
/// numerical rank of `lift(f, d)`, so that `f ⊛ h ≈ 0`.
///
/// The filter is the reversed smallest right singular vector of
/// `lift(f, r + 1)`.
pub fn min_annihilator(f: &DVector<f64>, d: usize, tol: f64) -> Result<DVector<f64>> {
    let (_, s, _) = svd_sorted(&lift(f, d)?);
    let rank = numerical_rank_of_values(&s, tol);
    if rank >= d {
        return Err(Error::NoAnnihilator { rank });
    }
    let (_, _, v) = svd_sorted(&lift(f, rank + 1)?);
    let null = v.column(rank);
    Ok(DVector::from_fn(rank + 1, |j, _| null[rank - j]))
}

/// Non-local basis `[U_r U_⊥]` and local bank `Ψ = Ψ̃ = V_r` from a Hankel SVD.
///
/// Encoding the lifted signal with these gives `C = [diag(σ_r); 0]`.
pub fn svd_bases(svd: &HankelSvd) -> Result<(BasisPair, FilterBank)> {
    if svd.rank == 0 {
        return Err(param("SVD bases need rank >= 1"));
    }
    let basis = BasisPair::svd(&svd.u_r());
    let bank = FilterBank::orthonormal(svd.v_r(), svd.p)?;
    Ok((basis, bank))
}

/// Unlift of the best rank-`r` approximation of `lift_extended(z, d)`.
/// `r = 0` returns zeros.
pub fn lowrank_shrink(z: &DMatrix<f64>, d: usize, r: usize) -> Result<DMatrix<f64>> {
    if r == 0 {
        lift_extended(z, d)?;
        return Ok(DMatrix::zeros(z.nrows(), z.ncols()));
    }
    let svd = hankel_svd(z, d, 0.0)?;
    unlift_extended(&svd.truncated(r), z.ncols())
}

/// Single-channel [`lowrank_shrink`].
pub fn lowrank_shrink_signal(f: &DVector<f64>, d: usize, r: usize) -> Result<DVector<f64>> {
    let z = DMatrix::from_column_slice(f.len(), 1, f.as_slice());
    Ok(lowrank_shrink(&z, d, r)?.column(0).into_owned())
}
