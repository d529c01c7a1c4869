//! Framelet encoder and decoder layers and their multi-layer recursion.
//!
//! A layer with non-local pair `(Φ, Φ̃)` and filter bank `(Ψ, Ψ̃, b_enc, b_dec)`
//! encodes `Z` into `C = Φᵀ(Z ⊛ Ψ + 1 b_encᵀ)` and decodes coefficients with
//! `Ẑ = (Φ̃ C) ⊛ ν(Ψ̃) + 1 b_decᵀ`. With `Φ̃Φᵀ = I`, `ΨΨ̃ᵀ = I` and the matched
//! decoder bias the pair reconstructs `Z` exactly.

use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisPair, NonlocalKind};
use crate::conv::{conv_mimo, convolve_mimo, MimoKernel};
use crate::error::{param, shape, Error, Result};
use crate::linalg::{identity_deviation, inverse_with_condition};
use crate::network::NetworkSpec;
use crate::nonlin::relu;

/// Condition number above which a pseudo-dual is refused.
pub const MAX_CONDITION: f64 = 1e8;

/// Local basis `Ψ` and dual `Ψ̃` (both `pd x q`) with encoder and decoder biases.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub psi: DMatrix<f64>,
    pub psi_dual: DMatrix<f64>,
    pub b_enc: DVector<f64>,
    pub b_dec: DVector<f64>,
    p: usize,
    d: usize,
}

impl FilterBank {
    /// Bank with zero biases.
    pub fn new(psi: DMatrix<f64>, psi_dual: DMatrix<f64>, p: usize) -> Result<Self> {
        if psi.shape() != psi_dual.shape() {
            return Err(shape(format!(
                "filters {}x{} and dual {}x{} differ",
                psi.nrows(),
                psi.ncols(),
                psi_dual.nrows(),
                psi_dual.ncols()
            )));
        }
        let rows = psi.nrows();
        if p == 0 || rows == 0 || rows % p != 0 || psi.ncols() == 0 {
            return Err(shape(format!("{rows}x{} bank cannot hold {p} channel blocks", psi.ncols())));
        }
        let q = psi.ncols();
        Ok(Self { psi, psi_dual, b_enc: DVector::zeros(q), b_dec: DVector::zeros(p), p, d: rows / p })
    }

    /// Self-dual bank `Ψ̃ = Ψ`.
    pub fn orthonormal(psi: DMatrix<f64>, p: usize) -> Result<Self> {
        Self::new(psi.clone(), psi, p)
    }

    /// Bank whose dual is the pseudo-inverse transpose of `Ψ`:
    /// `(ΨΨᵀ)⁻¹Ψ` when `q >= pd`, `Ψ(ΨᵀΨ)⁻¹` otherwise.
    pub fn with_pseudo_dual(psi: DMatrix<f64>, p: usize) -> Result<Self> {
        let (rows, q) = psi.shape();
        let dual = if q >= rows {
            let (inv, cond) = inverse_with_condition(&(&psi * psi.transpose())).ok_or(Error::IllConditioned(f64::INFINITY))?;
            if cond > MAX_CONDITION {
                return Err(Error::IllConditioned(cond));
            }
            inv * &psi
        } else {
            let (inv, cond) = inverse_with_condition(&(psi.transpose() * &psi)).ok_or(Error::IllConditioned(f64::INFINITY))?;
            if cond > MAX_CONDITION {
                return Err(Error::IllConditioned(cond));
            }
            &psi * inv
        };
        Self::new(psi, dual, p)
    }

    /// Set the encoder bias and re-derive the matched decoder bias.
    pub fn with_bias(mut self, b_enc: DVector<f64>) -> Result<Self> {
        if b_enc.len() != self.q() {
            return Err(shape(format!("encoder bias length {} != q={}", b_enc.len(), self.q())));
        }
        self.b_enc = b_enc;
        self.b_dec = self.matched_bias();
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.psi.ncols()
    }

    /// `max |ΨΨ̃ᵀ - I|`.
    pub fn frame_deviation(&self) -> f64 {
        identity_deviation(&(&self.psi * self.psi_dual.transpose()))
    }

    /// Decoder bias cancelling the encoder bias:
    /// `b_dec[i] = -(1/d) 1ᵀ Ψ̃_i b_enc`, with `Ψ̃_i` the `i`-th `d x q` block.
    pub fn matched_bias(&self) -> DVector<f64> {
        let a = &self.psi_dual * &self.b_enc;
        DVector::from_fn(self.p, |i, _| -a.rows(i * self.d, self.d).sum() / self.d as f64)
    }

    /// Decoder kernel `ν(Ψ̃)` (`dq x p`): block `j` row `s` column `k` holds
    /// `Ψ̃[k d + s, j] / d`.
    pub fn nu_kernel(&self) -> DMatrix<f64> {
        nu_kernel(&self.psi_dual, self.p).expect("bank shape validated at construction")
    }

    pub fn kernel(&self) -> MimoKernel {
        MimoKernel::new(self.psi.clone(), self.p).expect("bank shape validated at construction")
    }

    pub(crate) fn check_consistent(&self) -> Result<()> {
        let (p, d, q) = (self.p, self.d, self.q());
        if self.psi.shape() != (p * d, q) || self.psi_dual.shape() != (p * d, q) {
            return Err(shape("filter and dual shapes disagree with bank metadata"));
        }
        if self.b_enc.len() != q || self.b_dec.len() != p {
            return Err(shape(format!(
                "bias lengths {}/{} do not match q={q}, p={p}",
                self.b_enc.len(),
                self.b_dec.len()
            )));
        }
        Ok(())
    }
}

/// Rearrange a `pd x q` dual bank into the `dq x p` decoder kernel, including
/// the `1/d` normalization.
pub fn nu_kernel(psi_dual: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let (rows, q) = psi_dual.shape();
    if p == 0 || rows == 0 || rows % p != 0 {
        return Err(shape(format!("{rows} rows cannot hold {p} channel blocks")));
    }
    let d = rows / p;
    Ok(DMatrix::from_fn(d * q, p, |row, k| {
        let (j, s) = (row / d, row % d);
        psi_dual[(k * d + s, j)] / d as f64
    }))
}

/// `Z ⊛ Ψ + 1 b_encᵀ` before the non-local basis is applied.
pub fn filter_response(z: &DMatrix<f64>, bank: &FilterBank) -> Result<DMatrix<f64>> {
    bank.check_consistent()?;
    let mut y = conv_mimo(z, &bank.kernel())?;
    for (mut col, b) in y.column_iter_mut().zip(bank.b_enc.iter()) {
        col.add_scalar_mut(*b);
    }
    Ok(y)
}

/// `C = Φᵀ(Z ⊛ Ψ + 1 b_encᵀ)`, shape `m x q`.
pub fn encode(z: &DMatrix<f64>, basis: &BasisPair, bank: &FilterBank) -> Result<DMatrix<f64>> {
    if basis.n() != z.nrows() {
        return Err(shape(format!("basis length {} != signal length {}", basis.n(), z.nrows())));
    }
    Ok(basis.phi.transpose() * filter_response(z, bank)?)
}

/// `Ẑ = (Φ̃C) ⊛ ν(Ψ̃) + 1 b_decᵀ`, shape `n x p`.
pub fn decode(c: &DMatrix<f64>, basis: &BasisPair, bank: &FilterBank) -> Result<DMatrix<f64>> {
    bank.check_consistent()?;
    if c.shape() != (basis.m(), bank.q()) {
        return Err(shape(format!(
            "coefficients {}x{} do not match basis width {} and q={}",
            c.nrows(),
            c.ncols(),
            basis.m(),
            bank.q()
        )));
    }
    let g = &basis.phi_dual * c;
    let nu = MimoKernel::new(bank.nu_kernel(), bank.q())?;
    let mut z = convolve_mimo(&g, &nu)?;
    for (mut col, b) in z.column_iter_mut().zip(bank.b_dec.iter()) {
        col.add_scalar_mut(*b);
    }
    Ok(z)
}

/// Per-layer state recorded by [`multi_layer_encode`].
#[derive(Debug, Clone)]
pub struct LayerRecord {
    /// Layer input `X_{l-1}` (`n_l x p_l`).
    pub input: DMatrix<f64>,
    pub basis: BasisPair,
    /// Coefficients before the nonlinearity.
    pub coeffs: DMatrix<f64>,
    /// Coefficients after the nonlinearity (equal to `coeffs` without ReLU).
    pub output: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct EncodedStack {
    pub records: Vec<LayerRecord>,
}

impl EncodedStack {
    /// Deepest layer output, the decoder's starting point.
    pub fn top(&self) -> Option<&DMatrix<f64>> {
        self.records.last().map(|r| &r.output)
    }
}

pub(crate) fn check_banks(net: &NetworkSpec, banks: &[FilterBank], n: usize) -> Result<()> {
    if banks.len() != net.depth() {
        return Err(shape(format!("{} banks for a {}-layer network", banks.len(), net.depth())));
    }
    for (l, (s, bank)) in net.shapes(n)?.iter().zip(banks).enumerate() {
        if (bank.p(), bank.d(), bank.q()) != (s.p, s.d, s.q) {
            return Err(shape(format!(
                "layer {}: bank (p,d,q)=({},{},{}) but network expects ({},{},{})",
                l + 1,
                bank.p(),
                bank.d(),
                bank.q(),
                s.p,
                s.d,
                s.q
            )));
        }
        bank.check_consistent()?;
    }
    Ok(())
}

/// Non-local basis for one layer; max pooling looks at the filter response.
pub fn layer_basis(kind: NonlocalKind, filtered: &DMatrix<f64>) -> Result<BasisPair> {
    BasisPair::for_kind(kind, filtered.nrows(), Some(filtered))
}

/// Run every encoder layer, recording inputs, bases and coefficients.
pub fn multi_layer_encode(f: &DVector<f64>, net: &NetworkSpec, banks: &[FilterBank]) -> Result<EncodedStack> {
    if net.depth() == 0 {
        return Err(param("network has no layers"));
    }
    check_banks(net, banks, f.len())?;
    let mut x = DMatrix::from_column_slice(f.len(), 1, f.as_slice());
    let mut records = Vec::with_capacity(net.depth());
    for (spec, bank) in net.layers.iter().zip(banks) {
        let filtered = filter_response(&x, bank)?;
        let basis = layer_basis(spec.nonlocal, &filtered)?;
        let coeffs = basis.phi.transpose() * filtered;
        let output = if spec.relu { relu(&coeffs) } else { coeffs.clone() };
        records.push(LayerRecord { input: x, basis, coeffs, output: output.clone() });
        x = output;
    }
    Ok(EncodedStack { records })
}

/// Decode from the recorded top-layer output.
pub fn multi_layer_decode(stack: &EncodedStack, net: &NetworkSpec, banks: &[FilterBank]) -> Result<DVector<f64>> {
    let top = stack.top().ok_or_else(|| param("empty encoder stack"))?;
    decode_from(top, stack, net, banks)
}

/// Decode starting from arbitrary top-layer coefficients, reusing the bases
/// and bypass inputs recorded in `stack`.
pub fn decode_from(top: &DMatrix<f64>, stack: &EncodedStack, net: &NetworkSpec, banks: &[FilterBank]) -> Result<DVector<f64>> {
    if stack.records.len() != net.depth() || banks.len() != net.depth() {
        return Err(shape("stack, network and banks disagree in depth"));
    }
    let mut y = top.clone();
    for ((spec, bank), rec) in net.layers.iter().zip(banks).zip(&stack.records).rev() {
        let activated = if spec.relu { relu(&y) } else { y };
        let mut x = decode(&activated, &rec.basis, bank)?;
        if spec.bypass {
            x += &rec.input;
        }
        y = x;
    }
    if y.ncols() != 1 {
        return Err(shape(format!("decoder ended with {} channels", y.ncols())));
    }
    Ok(y.column(0).into_owned())
}

/// `decode(encode(f))` through the whole network.
pub fn forward(f: &DVector<f64>, net: &NetworkSpec, banks: &[FilterBank]) -> Result<DVector<f64>> {
    let stack = multi_layer_encode(f, net, banks)?;
    multi_layer_decode(&stack, net, banks)
}
