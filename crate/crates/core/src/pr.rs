//! Checks for perfect-reconstruction conditions.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{BasisPair, NonlocalKind};
use crate::error::{param, shape, Error, Result};
use crate::hankel::{lift, lift_extended, to_channel, unlift};
use crate::layer::{check_banks, FilterBank};
use crate::linalg::{identity_deviation, numerical_rank};
use crate::network::NetworkSpec;

/// Outcome of one condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct PrReport {
    pub condition: String,
    pub satisfied: bool,
    pub deviation: f64,
    pub tolerance: f64,
    /// A signal exposing the violation, when one is known.
    pub witness: Option<DVector<f64>>,
}

impl PrReport {
    fn new(condition: &str, deviation: f64, tolerance: f64) -> Self {
        Self { condition: condition.to_string(), satisfied: deviation <= tolerance, deviation, tolerance, witness: None }
    }

    /// `condition<TAB>pass|fail<TAB>deviation`.
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{:.6e}", self.condition, if self.satisfied { "pass" } else { "fail" }, self.deviation)
    }
}

impl fmt::Display for PrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// `max |Φ̃Φᵀ - I|`.
pub fn check_frame_nonlocal(phi: &DMatrix<f64>, phi_dual: &DMatrix<f64>, tol: f64) -> Result<PrReport> {
    if phi.shape() != phi_dual.shape() {
        return Err(shape("non-local basis and dual differ in shape"));
    }
    Ok(PrReport::new("frame_nonlocal", identity_deviation(&(phi_dual * phi.transpose())), tol))
}

/// `max |ΨΨ̃ᵀ - I|`.
pub fn check_frame_local(psi: &DMatrix<f64>, psi_dual: &DMatrix<f64>, tol: f64) -> Result<PrReport> {
    if psi.shape() != psi_dual.shape() {
        return Err(shape("local basis and dual differ in shape"));
    }
    Ok(PrReport::new("frame_local", identity_deviation(&(psi * psi_dual.transpose())), tol))
}

/// Frequency-domain PR test of a `pd x q` bank with `p` input channels.
///
/// At each of `grid` DFT frequencies, forms the `p x p` matrix
/// `M[j, k] = (1/d) sum_i conj(ψ̂_i^j) ψ̃̂_i^k` and reports `max |M - I|`.
/// For `p = 1` this is `(1/d) sum_i conj(ψ̂_i) ψ̃̂_i = 1`. The witness is a
/// cosine at the worst frequency.
pub fn check_pr_fourier(psi: &DMatrix<f64>, psi_dual: &DMatrix<f64>, p: usize, grid: usize, tol: f64) -> Result<PrReport> {
    if psi.shape() != psi_dual.shape() {
        return Err(shape("local basis and dual differ in shape"));
    }
    let (rows, q) = psi.shape();
    if p == 0 || rows % p != 0 || rows == 0 {
        return Err(shape(format!("{rows} rows cannot hold {p} channel blocks")));
    }
    let d = rows / p;
    if grid < d {
        return Err(param(format!("grid {grid} is shorter than the filter length {d}")));
    }
    let dft = |col: &DMatrix<f64>, j: usize, i: usize, w: f64| -> Complex64 {
        (0..d).map(|s| Complex64::from_polar(col[(j * d + s, i)], -w * s as f64)).sum()
    };
    let mut worst = (0.0_f64, 0.0_f64);
    for t in 0..grid {
        let w = 2.0 * PI * t as f64 / grid as f64;
        let a: Vec<Vec<Complex64>> = (0..p).map(|j| (0..q).map(|i| dft(psi, j, i, w)).collect()).collect();
        let b: Vec<Vec<Complex64>> = (0..p).map(|j| (0..q).map(|i| dft(psi_dual, j, i, w)).collect()).collect();
        for j in 0..p {
            for k in 0..p {
                let m: Complex64 = (0..q).map(|i| a[j][i].conj() * b[k][i]).sum::<Complex64>() / d as f64;
                let target = if j == k { 1.0 } else { 0.0 };
                let dev = (m - target).norm();
                if dev > worst.0 {
                    worst = (dev, w);
                }
            }
        }
    }
    let mut report = PrReport::new("fourier", worst.0, tol);
    if !report.satisfied {
        report.witness = Some(DVector::from_fn(grid, |k, _| (worst.1 * k as f64).cos()));
    }
    Ok(report)
}

/// Minimal output channels for PR at each layer: `q_l = prod_{i<=l} d_i`.
pub fn min_channels(d: &[usize]) -> Result<Vec<usize>> {
    if d.contains(&0) {
        return Err(param("filter lengths must be positive"));
    }
    Ok(d
        .iter()
        .scan(1usize, |acc, &di| {
            *acc *= di;
            Some(*acc)
        })
        .collect())
}

/// Rank of the lifted layer input against its bound at one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankBoundRow {
    pub layer: usize,
    pub rank: usize,
    /// `rank lift(f, n)`.
    pub signal_rank: usize,
    /// `d_l p_l`.
    pub width: usize,
}

impl RankBoundRow {
    pub fn bound(&self) -> usize {
        self.signal_rank.min(self.width)
    }

    pub fn satisfied(&self) -> bool {
        self.rank <= self.bound()
    }
}

/// Per-layer `rank lift_extended(C_{l-1}, d_l) <= min(rank lift(f, n), d_l p_l)`
/// for a network of identity non-local bases, linear layers and zero biases.
pub fn rank_bound_check(f: &DVector<f64>, net: &NetworkSpec, banks: &[FilterBank], tol: f64) -> Result<Vec<RankBoundRow>> {
    check_banks(net, banks, f.len())?;
    for (l, (spec, bank)) in net.layers.iter().zip(banks).enumerate() {
        if spec.nonlocal != NonlocalKind::Identity {
            return Err(Error::Precondition(format!("layer {} uses a {} non-local basis; the bound needs identity", l + 1, spec.nonlocal)));
        }
        if spec.relu || spec.bypass || bank.b_enc.iter().any(|&b| b != 0.0) {
            return Err(Error::Precondition(format!("layer {} is not a linear unbiased convolution", l + 1)));
        }
    }
    let signal_rank = numerical_rank(&lift(f, f.len())?, tol);
    let mut x = to_channel(f);
    let mut rows = Vec::with_capacity(banks.len());
    for (l, bank) in banks.iter().enumerate() {
        let h = lift_extended(&x, bank.d())?;
        rows.push(RankBoundRow { layer: l + 1, rank: numerical_rank(&h, tol), signal_rank, width: h.ncols() });
        x = h * &bank.psi;
    }
    Ok(rows)
}

/// Two-branch pooled encoder-decoder: a full-resolution branch plus an
/// average-pooled branch, summed at the output.
///
/// Returns `(f̂, f̂ - f)` with
/// `f̂ = unlift(H Ψ Ψ̃₁ᵀ) + unlift(ΦΦᵀ H Ψ Ψ̃₂ᵀ)` and `Φ` the average-pool basis.
pub fn unet_round_trip(
    f: &DVector<f64>,
    psi: &DMatrix<f64>,
    psi_dual_1: &DMatrix<f64>,
    psi_dual_2: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = f.len();
    if n % 2 != 0 {
        return Err(param(format!("pooling needs an even length, got {n}")));
    }
    if psi.shape() != psi_dual_1.shape() || psi.shape() != psi_dual_2.shape() {
        return Err(shape("branch filters differ in shape"));
    }
    let pool = BasisPair::avg_pool(n)?;
    let filtered = lift(f, psi.nrows())? * psi;
    let full = unlift(&(&filtered * psi_dual_1.transpose()));
    let pooled = unlift(&(&pool.phi * (pool.phi.transpose() * &filtered) * psi_dual_2.transpose()));
    let out = full + pooled;
    let residual = &out - f;
    Ok((out, residual))
}
