//! ReLU, opposite-phase filter banks, residual blocks and bypass connections.

use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::hankel::lift_extended;
use crate::layer::FilterBank;
use crate::linalg::{numerical_rank_of_values, svd_sorted, DEFAULT_RANK_TOL};

/// Frame tolerance for [`crelu_extend`].
pub const FRAME_TOL: f64 = 1e-10;

pub fn relu(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.map(|v| v.max(0.0))
}

/// Opposite-phase bank `Ψ = [Ψ₊ -Ψ₊]`, `Ψ̃ = [Ψ̃₊ -Ψ̃₊]`, `b_enc = [b₊; -b₊]`.
///
/// Since `ρ(A) - ρ(-A) = A`, encoding, applying ReLU and decoding with this
/// bank is the linear map given by `Ψ₊Ψ̃₊ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CreluBank {
    pub psi_plus: DMatrix<f64>,
    pub psi_dual_plus: DMatrix<f64>,
    pub b_enc_plus: DVector<f64>,
    /// The doubled bank, ready for encode/decode.
    pub bank: FilterBank,
}

impl CreluBank {
    fn build(psi_plus: DMatrix<f64>, psi_dual_plus: DMatrix<f64>, b_enc_plus: DVector<f64>, p: usize) -> Result<Self> {
        if psi_plus.shape() != psi_dual_plus.shape() {
            return Err(shape("Ψ₊ and Ψ̃₊ differ in shape"));
        }
        let m = psi_plus.ncols();
        if b_enc_plus.len() != m {
            return Err(shape(format!("bias length {} != {m} filters", b_enc_plus.len())));
        }
        let psi = concat_opposite(&psi_plus);
        let dual = concat_opposite(&psi_dual_plus);
        let mut bank = FilterBank::new(psi, dual, p)?;
        let d = bank.d();
        let a = &psi_dual_plus * &b_enc_plus;
        bank.b_enc = DVector::from_fn(2 * m, |k, _| if k < m { b_enc_plus[k] } else { -b_enc_plus[k - m] });
        bank.b_dec = DVector::from_fn(p, |i, _| -a.rows(i * d, d).sum() / d as f64);
        Ok(Self { psi_plus, psi_dual_plus, b_enc_plus, bank })
    }

    /// `Ψ₊Ψ̃₊ᵀ`, the linear map realized through the ReLU.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.psi_plus * self.psi_dual_plus.transpose()
    }
}

fn concat_opposite(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, m) = a.shape();
    let mut out = DMatrix::zeros(r, 2 * m);
    out.columns_mut(0, m).copy_from(a);
    out.columns_mut(m, m).copy_from(&(-a));
    out
}

/// Opposite-phase extension of a bank satisfying `Ψ₊Ψ̃₊ᵀ = I`, with the
/// decoder bias matched to `b_enc_plus`.
pub fn crelu_extend(psi_plus: DMatrix<f64>, psi_dual_plus: DMatrix<f64>, b_enc_plus: DVector<f64>, p: usize) -> Result<CreluBank> {
    if psi_plus.shape() != psi_dual_plus.shape() {
        return Err(shape("Ψ₊ and Ψ̃₊ differ in shape"));
    }
    let deviation = crate::linalg::identity_deviation(&(&psi_plus * psi_dual_plus.transpose()));
    if deviation > FRAME_TOL {
        return Err(Error::FrameViolated { deviation });
    }
    CreluBank::build(psi_plus, psi_dual_plus, b_enc_plus, p)
}

/// `ρ(F - ρ(FΨ)Ψ̃ᵀ)` together with whether `F` was nonnegative.
pub fn residual_block(f: &DMatrix<f64>, psi: &DMatrix<f64>, psi_dual: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if psi.shape() != psi_dual.shape() || psi.nrows() != f.ncols() {
        return Err(shape(format!(
            "residual block: input has {} columns, filters are {}x{} and {}x{}",
            f.ncols(),
            psi.nrows(),
            psi.ncols(),
            psi_dual.nrows(),
            psi_dual.ncols()
        )));
    }
    let nonneg = f.iter().all(|&v| v >= 0.0);
    let inner = relu(&(f * psi)) * psi_dual.transpose();
    Ok((relu(&(f - inner)), nonneg))
}

/// Opposite-phase bank of width `2m` whose ReLU round trip reproduces `x`
/// exactly when `m` is at least the rank of `lift_extended(x, d)`.
///
/// `Ψ₊ = Ψ̃₊` holds the leading `m` right singular vectors, so
/// `Ψ₊Ψ̃₊ᵀ` projects onto a space containing the row space of the lift.
pub fn insufficient_channel_bases(x: &DMatrix<f64>, d: usize, m: usize) -> Result<CreluBank> {
    let h = lift_extended(x, d)?;
    let (_, s, v) = svd_sorted(&h);
    let rank = numerical_rank_of_values(&s, DEFAULT_RANK_TOL);
    if m < rank || m == 0 {
        return Err(Error::InsufficientChannels { rank, channels: m });
    }
    let pd = h.ncols();
    let mut psi = DMatrix::zeros(pd, m);
    let k = m.min(v.ncols());
    psi.columns_mut(0, k).copy_from(&v.columns(0, k));
    CreluBank::build(psi.clone(), psi, DVector::zeros(m), x.ncols())
}

/// `f + net(f)`: a bypass connection around `net`.
pub fn bypass_wrap<F>(net: F, f: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let y = net(f)?;
    if y.len() != f.len() {
        return Err(shape(format!("network output length {} != input length {}", y.len(), f.len())));
    }
    Ok(f + y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisPair;
    use crate::hankel::{lift, unlift, unlift_extended};
    use crate::layer::{decode, encode};
    use crate::linalg::{random_gaussian, random_orthogonal};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn relu_round_trip(z: &DMatrix<f64>, basis: &BasisPair, bank: &FilterBank) -> DMatrix<f64> {
        let c = encode(z, basis, bank).unwrap();
        decode(&relu(&c), basis, bank).unwrap()
    }

    #[test]
    fn relu_basics() {
        let x = DMatrix::from_row_slice(1, 3, &[-1., 0., 2.]);
        assert_eq!(relu(&x), DMatrix::from_row_slice(1, 3, &[0., 0., 2.]));
        let pos = DMatrix::from_row_slice(1, 2, &[0.5, 3.]);
        assert_eq!(relu(&pos), pos);
    }

    proptest! {
        #[test]
        fn opposite_relus_sum_to_identity(v in prop::collection::vec(-1e3..1e3f64, 12)) {
            let a = DMatrix::from_column_slice(3, 4, &v);
            prop_assert_eq!(relu(&a) - relu(&(-&a)), a);
        }
    }

    #[test]
    fn identity_filters_pass_through_relu() {
        let bank = crelu_extend(DMatrix::identity(3, 3), DMatrix::identity(3, 3), DVector::zeros(3), 1).unwrap();
        let z = DMatrix::from_column_slice(6, 1, &[1., -2., 3., -4., 0.5, -0.25]);
        let basis = BasisPair::identity(6);
        assert!((relu_round_trip(&z, &basis, &bank.bank) - &z).amax() < 1e-14);
    }

    #[test]
    fn random_orthogonal_relu_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_orthogonal(4, &mut rng);
        let b = random_gaussian(4, 1, &mut rng).column(0).into_owned();
        let bank = crelu_extend(q.clone(), q, b, 1).unwrap();
        let z = random_gaussian(12, 1, &mut rng);
        let basis = BasisPair::dct(12).unwrap();
        let back = relu_round_trip(&z, &basis, &bank.bank);
        assert!((back - &z).norm() / z.norm() < 1e-10);
    }

    #[test]
    fn unmatched_bias_leaves_constant_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_orthogonal(3, &mut rng);
        let b = DVector::from_column_slice(&[0.7, -1.2, 0.4]);
        let mut bank = crelu_extend(q.clone(), q.clone(), b.clone(), 1).unwrap().bank;
        bank.b_dec = DVector::zeros(1);
        let z = random_gaussian(9, 1, &mut rng);
        let back = relu_round_trip(&z, &BasisPair::identity(9), &bank);
        // offset is (1/d) 1ᵀ Ψ̃₊ b₊ on every sample
        let offset = (&q * &b).sum() / 3.0;
        for k in 0..9 {
            assert!((back[(k, 0)] - z[(k, 0)] - offset).abs() < 1e-12);
        }
    }

    #[test]
    fn crelu_rejects_broken_frame() {
        let mut psi = DMatrix::identity(2, 2);
        psi[(1, 1)] = 0.5;
        assert!(matches!(
            crelu_extend(psi, DMatrix::identity(2, 2), DVector::zeros(2), 1),
            Err(Error::FrameViolated { .. })
        ));
    }

    #[test]
    fn insufficient_channels_rank_one() {
        // constant signal has a rank-1 lift; pd = 4, m = 1
        let x = DMatrix::from_element(8, 1, 2.5);
        let bank = insufficient_channel_bases(&x, 4, 1).unwrap();
        assert_eq!(bank.bank.q(), 2);
        let back = relu_round_trip(&x, &BasisPair::identity(8), &bank.bank);
        assert!((back - &x).amax() < 1e-12);
    }

    #[test]
    fn insufficient_channels_full_width_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_gaussian(10, 1, &mut rng);
        let bank = insufficient_channel_bases(&x, 3, 3).unwrap();
        assert!(crate::linalg::identity_deviation(&bank.projector()) < 1e-12);
    }

    #[test]
    fn insufficient_channels_reports_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_gaussian(10, 1, &mut rng);
        match insufficient_channel_bases(&x, 4, 2) {
            Err(Error::InsufficientChannels { rank, channels }) => assert_eq!((rank, channels), (4, 2)),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn residual_block_zero_filters() {
        let f = DMatrix::from_fn(5, 3, |i, j| (i + j) as f64);
        let (out, nonneg) = residual_block(&f, &DMatrix::zeros(3, 2), &DMatrix::zeros(3, 2)).unwrap();
        assert!(nonneg);
        assert_eq!(out, f);
    }

    #[test]
    fn residual_block_null_space_filters_reconstruct() {
        // 2 + cos has a rank-3 lift; with d = 4 the lift has a one-dimensional null space
        let n = 16;
        let x = DVector::from_fn(n, |k, _| 2.0 + (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos());
        let h = lift(&x, 4).unwrap();
        let (_, s, v) = svd_sorted(&h);
        assert_eq!(numerical_rank_of_values(&s, 1e-8), 3);
        let null = v.columns(3, 1).into_owned();
        let psi = concat_opposite(&null);
        let (out, nonneg) = residual_block(&h, &psi, &psi).unwrap();
        assert!(nonneg);
        assert!((unlift(&out) - &x).amax() < 1e-12);
    }

    #[test]
    fn residual_block_least_singular_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_gaussian(12, 2, &mut rng).map(|v| v.abs() + 0.1);
        let h = lift_extended(&x, 2).unwrap();
        let (_, s, v) = svd_sorted(&h);
        let last = v.columns(v.ncols() - 1, 1).into_owned();
        let psi = concat_opposite(&last);
        let (out, _) = residual_block(&h, &psi, &psi).unwrap();
        let sigma_min = s[s.len() - 1];
        assert!((&out - &h).norm() <= sigma_min + 1e-12);
        let z = unlift_extended(&out, 2).unwrap();
        assert_eq!(z.shape(), (12, 2));
    }

    #[test]
    fn bypass_examples() {
        let f = DVector::from_column_slice(&[1., 2., 3.]);
        assert_eq!(bypass_wrap(|x| Ok(x * 0.0), &f).unwrap(), f);
        assert_eq!(bypass_wrap(|x| Ok(-x), &f).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn bypass_with_annihilating_encoder_keeps_signal() {
        // first difference annihilates constants, so the inner network only sees the spike
        let n = 8;
        let h = DMatrix::from_column_slice(2, 1, &[std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]);
        let bank = FilterBank::new(h.clone(), -h, 1).unwrap();
        let basis = BasisPair::identity(n);
        let net = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let z = DMatrix::from_column_slice(n, 1, x.as_slice());
            Ok(decode(&encode(&z, &basis, &bank)?, &basis, &bank)?.column(0).into_owned())
        };
        let clean = DVector::from_element(n, 1.0);
        let mut spike = DVector::zeros(n);
        spike[3] = 0.8;
        assert!(net(&clean).unwrap().amax() < 1e-15);
        let out = bypass_wrap(net, &(&clean + &spike)).unwrap();
        let noise_only = bypass_wrap(net, &spike).unwrap();
        assert!((out - &clean - noise_only).amax() < 1e-15);
    }
}
