//! Multi-resolution framelet networks on Haar non-local bases.
//!
//! Each layer filters its input, splits the result into a low band
//! `Φ_lowᵀ F` and a high band `Φ_highᵀ F`, and passes only the low band down.
//! The decoder stacks `[Φ_low Ĉ_low | Φ_high Ĉ_high]` along channels and
//! applies the dual bank `[Ψ̃ | Ψ̃_high]`, which by default uses `Ψ̃` for both
//! halves. The 2-D variant uses the separable Haar basis and four subbands.

use nalgebra::{DMatrix, DVector};

use crate::basis::{haar_bands, NonlocalKind};
use crate::conv::circular_convolve;
use crate::error::{param, shape, Result};
use crate::hankel::{lift_block_2d_extended, lift_extended, to_channel, unlift_block_2d_extended, unlift_extended};
use crate::layer::FilterBank;
use crate::network::NetworkSpec;
use crate::nonlin::{relu, CreluBank};

/// Haar low-pass and high-pass halves of an orthonormal basis of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarPair {
    pub low: DMatrix<f64>,
    pub high: DMatrix<f64>,
}

pub fn haar_pair(n: usize) -> Result<HaarPair> {
    let (low, high) = haar_bands(n)?;
    Ok(HaarPair { low, high })
}

/// A layer bank for the multi-resolution network. `high_dual`, when set,
/// replaces `Ψ̃` for the high band.
#[derive(Debug, Clone, PartialEq)]
pub struct MraBank {
    pub bank: FilterBank,
    pub high_dual: Option<DMatrix<f64>>,
}

impl From<FilterBank> for MraBank {
    fn from(bank: FilterBank) -> Self {
        Self { bank, high_dual: None }
    }
}

impl MraBank {
    /// Opposite-phase bank for a rectified low band. The high band is left
    /// unrectified, so its dual keeps only the `Ψ̃₊` half.
    pub fn crelu(crelu: &CreluBank) -> Self {
        let (rows, m) = crelu.psi_dual_plus.shape();
        let mut high = DMatrix::zeros(rows, 2 * m);
        high.columns_mut(0, m).copy_from(&crelu.psi_dual_plus);
        Self { bank: crelu.bank.clone(), high_dual: Some(high) }
    }

    fn high_dual(&self) -> &DMatrix<f64> {
        self.high_dual.as_ref().unwrap_or(&self.bank.psi_dual)
    }
}

/// Encoder output: per-layer low and high bands (`n / 2^l x q_l`).
#[derive(Debug, Clone, PartialEq)]
pub struct MraState {
    /// Low bands after the optional ReLU.
    pub low: Vec<DMatrix<f64>>,
    pub high: Vec<DMatrix<f64>>,
}

fn check_network(n: usize, net: &NetworkSpec, banks: &[MraBank]) -> Result<Vec<usize>> {
    if banks.len() != net.depth() {
        return Err(shape(format!("{} banks for a {}-layer network", banks.len(), net.depth())));
    }
    let levels = net.depth() as u32;
    if n == 0 || n % 2usize.pow(levels) != 0 {
        return Err(param(format!("length {n} is not divisible by 2^{levels}")));
    }
    let mut p = 1;
    let mut lengths = Vec::with_capacity(banks.len());
    for (l, (spec, b)) in net.layers.iter().zip(banks).enumerate() {
        if spec.nonlocal != NonlocalKind::Haar {
            return Err(param(format!("layer {}: multi-resolution layers use the haar basis, got {}", l + 1, spec.nonlocal)));
        }
        let len = n >> l;
        if (b.bank.p(), b.bank.d(), b.bank.q()) != (p, spec.d, spec.q) {
            return Err(shape(format!(
                "layer {}: bank (p,d,q)=({},{},{}) but network expects ({p},{},{})",
                l + 1,
                b.bank.p(),
                b.bank.d(),
                b.bank.q(),
                spec.d,
                spec.q
            )));
        }
        if spec.d > len {
            return Err(param(format!("layer {}: filter length {} exceeds length {len}", l + 1, spec.d)));
        }
        if let Some(h) = &b.high_dual {
            if h.shape() != b.bank.psi.shape() {
                return Err(shape(format!("layer {}: high-band dual has the wrong shape", l + 1)));
            }
        }
        lengths.push(len);
        p = spec.q;
    }
    Ok(lengths)
}

fn add_bias(mut m: DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    for (mut col, v) in m.column_iter_mut().zip(b.iter()) {
        col.add_scalar_mut(*v);
    }
    m
}

/// Run the multi-resolution encoder on `f`.
pub fn mra_encode(f: &DVector<f64>, net: &NetworkSpec, banks: &[MraBank]) -> Result<MraState> {
    let lengths = check_network(f.len(), net, banks)?;
    let mut x = to_channel(f);
    let mut state = MraState { low: Vec::new(), high: Vec::new() };
    for ((spec, b), len) in net.layers.iter().zip(banks).zip(lengths) {
        let haar = haar_pair(len)?;
        let filtered = add_bias(lift_extended(&x, spec.d)? * &b.bank.psi, &b.bank.b_enc);
        let low = haar.low.transpose() * &filtered;
        let low = if spec.relu { relu(&low) } else { low };
        state.high.push(haar.high.transpose() * &filtered);
        state.low.push(low.clone());
        x = low;
    }
    Ok(state)
}

/// Reconstruct from the deepest low band and every high band.
pub fn mra_decode(state: &MraState, net: &NetworkSpec, banks: &[MraBank]) -> Result<DVector<f64>> {
    let depth = net.depth();
    if state.low.len() != depth || state.high.len() != depth {
        return Err(shape("state depth differs from the network"));
    }
    if depth == 0 {
        return Err(param("network has no layers"));
    }
    let n = state.low[0].nrows() * 2;
    check_network(n, net, banks)?;
    let mut low = state.low[depth - 1].clone();
    for l in (0..depth).rev() {
        let b = &banks[l];
        let len = n >> l;
        let haar = haar_pair(len)?;
        let high = &state.high[l];
        if low.shape() != (len / 2, b.bank.q()) || high.shape() != (len / 2, b.bank.q()) {
            return Err(shape(format!("layer {}: band shapes do not match the bank", l + 1)));
        }
        let lifted = &haar.low * &low * b.bank.psi_dual.transpose() + &haar.high * high * b.high_dual().transpose();
        let x = add_bias(unlift_extended(&lifted, b.bank.p())?, &b.bank.b_dec);
        low = if l > 0 && net.layers[l - 1].relu { relu(&x) } else { x };
    }
    Ok(low.column(0).into_owned())
}

/// Filter each high-band channel: column `i` of the result is
/// `C_high[:, i] ⊛ H[:, i]`.
pub fn highband_filter(c_high: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.ncols() != c_high.ncols() {
        return Err(shape(format!("{} filters for {} channels", h.ncols(), c_high.ncols())));
    }
    let mut out = DMatrix::zeros(c_high.nrows(), c_high.ncols());
    for i in 0..c_high.ncols() {
        let y = circular_convolve(&c_high.column(i).into_owned(), &h.column(i).into_owned())?;
        out.set_column(i, &y);
    }
    Ok(out)
}

/// Separable 2-D Haar subbands of an `n1 x n2` grid, each `n1 n2 x n1 n2 / 4`,
/// acting on column-major vectorized images.
#[derive(Debug, Clone, PartialEq)]
pub struct Haar2d {
    pub ll: DMatrix<f64>,
    pub lh: DMatrix<f64>,
    pub hl: DMatrix<f64>,
    pub hh: DMatrix<f64>,
}

/// Kronecker product `B ⊗ A`, the operator `vec(X) -> vec(A X Bᵀ)`.
fn kron(b: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    b.kronecker(a)
}

/// Subband bases; the first letter is the band along rows, the second along
/// columns.
pub fn haar_2d(n1: usize, n2: usize) -> Result<Haar2d> {
    let (l1, h1) = haar_bands(n1)?;
    let (l2, h2) = haar_bands(n2)?;
    Ok(Haar2d { ll: kron(&l2, &l1), lh: kron(&h2, &l1), hl: kron(&l2, &h1), hh: kron(&h2, &h1) })
}

/// One 2-D layer: square `d x d` patches, optional ReLU on the LL band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mra2dLayer {
    pub d: usize,
    pub q: usize,
    pub relu: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mra2d {
    pub layers: Vec<Mra2dLayer>,
}

/// Per-layer subband coefficients, each `(n1 n2 / 4^l) x q_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mra2dState {
    pub ll: Vec<DMatrix<f64>>,
    pub lh: Vec<DMatrix<f64>>,
    pub hl: Vec<DMatrix<f64>>,
    pub hh: Vec<DMatrix<f64>>,
    pub rows: usize,
    pub cols: usize,
}

/// 2-D multi-resolution network with the layer geometry of `net`; each
/// layer uses `d x d` patches. Banks are `p d^2 x q`.
pub fn build_2d_mra(net: &NetworkSpec) -> Result<Mra2d> {
    let layers = net
        .layers
        .iter()
        .enumerate()
        .map(|(l, s)| {
            if s.nonlocal != NonlocalKind::Haar {
                return Err(param(format!("layer {}: multi-resolution layers use the haar basis", l + 1)));
            }
            Ok(Mra2dLayer { d: s.d, q: s.q, relu: s.relu })
        })
        .collect::<Result<Vec<_>>>()?;
    if layers.is_empty() {
        return Err(param("network has no layers"));
    }
    Ok(Mra2d { layers })
}

fn columns_as_images(m: &DMatrix<f64>, rows: usize, cols: usize) -> Vec<DMatrix<f64>> {
    (0..m.ncols()).map(|i| DMatrix::from_column_slice(rows, cols, m.column(i).as_slice())).collect()
}

impl Mra2d {
    fn check(&self, n1: usize, n2: usize, banks: &[MraBank]) -> Result<()> {
        let scale = 1usize << self.layers.len();
        if n1 % scale != 0 || n2 % scale != 0 || n1 == 0 || n2 == 0 {
            return Err(param(format!("image {n1}x{n2} is not divisible by {scale}")));
        }
        if banks.len() != self.layers.len() {
            return Err(shape(format!("{} banks for {} layers", banks.len(), self.layers.len())));
        }
        let mut p = 1;
        for (l, (layer, b)) in self.layers.iter().zip(banks).enumerate() {
            if (b.bank.p(), b.bank.d(), b.bank.q()) != (p, layer.d * layer.d, layer.q) {
                return Err(shape(format!("layer {}: bank shape does not match a {}x{} patch", l + 1, layer.d, layer.d)));
            }
            if layer.d > n1 >> l || layer.d > n2 >> l {
                return Err(param(format!("layer {}: patch larger than the image", l + 1)));
            }
            p = layer.q;
        }
        Ok(())
    }

    pub fn encode(&self, image: &DMatrix<f64>, banks: &[MraBank]) -> Result<Mra2dState> {
        let (n1, n2) = image.shape();
        self.check(n1, n2, banks)?;
        let mut x = vec![image.clone()];
        let mut state = Mra2dState { ll: vec![], lh: vec![], hl: vec![], hh: vec![], rows: n1, cols: n2 };
        for (l, (layer, b)) in self.layers.iter().zip(banks).enumerate() {
            let (r, c) = (n1 >> l, n2 >> l);
            let bands = haar_2d(r, c)?;
            let filtered = add_bias(lift_block_2d_extended(&x, layer.d, layer.d)? * &b.bank.psi, &b.bank.b_enc);
            let ll = bands.ll.transpose() * &filtered;
            let ll = if layer.relu { relu(&ll) } else { ll };
            state.lh.push(bands.lh.transpose() * &filtered);
            state.hl.push(bands.hl.transpose() * &filtered);
            state.hh.push(bands.hh.transpose() * &filtered);
            x = columns_as_images(&ll, r / 2, c / 2);
            state.ll.push(ll);
        }
        Ok(state)
    }

    pub fn decode(&self, state: &Mra2dState, banks: &[MraBank]) -> Result<DMatrix<f64>> {
        let (n1, n2) = (state.rows, state.cols);
        self.check(n1, n2, banks)?;
        let depth = self.layers.len();
        if [state.ll.len(), state.lh.len(), state.hl.len(), state.hh.len()].iter().any(|&k| k != depth) {
            return Err(shape("state depth differs from the network"));
        }
        let mut low = state.ll[depth - 1].clone();
        for l in (0..depth).rev() {
            let (layer, b) = (&self.layers[l], &banks[l]);
            let (r, c) = (n1 >> l, n2 >> l);
            let bands = haar_2d(r, c)?;
            let expected = (r * c / 4, layer.q);
            if low.shape() != expected || state.hh[l].shape() != expected {
                return Err(shape(format!("layer {}: subband shapes do not match", l + 1)));
            }
            let lifted = &bands.ll * &low * b.bank.psi_dual.transpose()
                + (&bands.lh * &state.lh[l] + &bands.hl * &state.hl[l] + &bands.hh * &state.hh[l]) * b.high_dual().transpose();
            let images = unlift_block_2d_extended(&lifted, b.bank.p(), r, c, layer.d, layer.d)?;
            let mut stacked = DMatrix::zeros(r * c, images.len());
            for (k, im) in images.iter().enumerate() {
                stacked.set_column(k, &DVector::from_column_slice(im.as_slice()));
            }
            let stacked = add_bias(stacked, &b.bank.b_dec);
            low = if l > 0 && self.layers[l - 1].relu { relu(&stacked) } else { stacked };
        }
        Ok(DMatrix::from_column_slice(n1, n2, low.column(0).as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity_deviation, random_gaussian, random_orthogonal};
    use crate::network::LayerSpec;
    use crate::nonlin::crelu_extend;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    fn haar_layer(d: usize, q: usize) -> LayerSpec {
        LayerSpec::linear(d, q).with_nonlocal(NonlocalKind::Haar)
    }

    /// Orthonormal square bank scaled so that `ΨΨ̃ᵀ = I` and `‖HΨ‖ = ‖f‖`.
    fn tight_bank(pd: usize, p: usize, rng: &mut ChaCha8Rng) -> MraBank {
        let q = random_orthogonal(pd, rng);
        let d = (pd / p) as f64;
        FilterBank::new(&q / d.sqrt(), &q * d.sqrt(), p).unwrap().into()
    }

    #[test]
    fn haar_pair_examples() {
        let h = haar_pair(2).unwrap();
        assert_eq!(h.low, DMatrix::from_column_slice(2, 1, &[S, S]));
        assert_eq!(h.high, DMatrix::from_column_slice(2, 1, &[S, -S]));
        let h = haar_pair(8).unwrap();
        let mut full = DMatrix::zeros(8, 8);
        full.columns_mut(0, 4).copy_from(&h.low);
        full.columns_mut(4, 4).copy_from(&h.high);
        assert!(identity_deviation(&(full.transpose() * &full)) < 1e-15);
        assert!(identity_deviation(&(&full * full.transpose())) < 1e-15);
        let s = h.low.transpose() * DVector::from_element(8, 1.0);
        assert!((s - DVector::from_element(4, 2f64.sqrt())).amax() < 1e-15);
        assert!(haar_pair(5).is_err());
    }

    #[test]
    fn single_layer_identity_filter_is_haar_transform() {
        let f = DVector::from_column_slice(&[4., 2., 5., 7., 1., 1., 0., 6.]);
        let net = NetworkSpec::new(vec![haar_layer(1, 1)]).unwrap();
        let banks = vec![MraBank::from(FilterBank::orthonormal(DMatrix::identity(1, 1), 1).unwrap())];
        let st = mra_encode(&f, &net, &banks).unwrap();
        for i in 0..4 {
            assert!((st.low[0][(i, 0)] - (f[2 * i] + f[2 * i + 1]) * S).abs() < 1e-14);
            assert!((st.high[0][(i, 0)] - (f[2 * i] - f[2 * i + 1]) * S).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_has_no_detail() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = NetworkSpec::new(vec![haar_layer(2, 2), haar_layer(2, 4), haar_layer(2, 8)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng), tight_bank(4, 2, &mut rng), tight_bank(8, 4, &mut rng)];
        let st = mra_encode(&DVector::from_element(16, 3.0), &net, &banks).unwrap();
        assert!(st.high.iter().all(|h| h.amax() < 1e-13));
    }

    #[test]
    fn two_layer_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = NetworkSpec::new(vec![haar_layer(2, 2), haar_layer(3, 6)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng), tight_bank(6, 2, &mut rng)];
        let st = mra_encode(&DVector::from_element(16, 1.0), &net, &banks).unwrap();
        assert_eq!(st.low[0].shape(), (8, 2));
        assert_eq!(st.high[0].shape(), (8, 2));
        assert_eq!(st.low[1].shape(), (4, 6));
        assert_eq!(st.high[1].shape(), (4, 6));
    }

    #[test]
    fn round_trip_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = NetworkSpec::new(vec![haar_layer(2, 2), haar_layer(2, 4)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng), tight_bank(4, 2, &mut rng)];
        let f = random_gaussian(16, 1, &mut rng).column(0).into_owned();
        let st = mra_encode(&f, &net, &banks).unwrap();
        let back = mra_decode(&st, &net, &banks).unwrap();
        assert!((back - &f).norm() / f.norm() < 1e-10);
        let energy = st.low[1].norm_squared() + st.high.iter().map(|h| h.norm_squared()).sum::<f64>();
        assert!((energy - f.norm_squared()).abs() < 1e-10 * f.norm_squared());
    }

    #[test]
    fn dropping_detail_costs_its_energy_for_unit_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = NetworkSpec::new(vec![haar_layer(1, 1)]).unwrap();
        let banks = vec![MraBank::from(FilterBank::orthonormal(DMatrix::identity(1, 1), 1).unwrap())];
        let f = random_gaussian(8, 1, &mut rng).column(0).into_owned();
        let mut st = mra_encode(&f, &net, &banks).unwrap();
        let high_energy = st.high[0].norm_squared();
        st.high[0].fill(0.0);
        let approx = mra_decode(&st, &net, &banks).unwrap();
        assert!(((approx - &f).norm_squared() - high_energy).abs() < 1e-12);
    }

    #[test]
    fn dropping_detail_bounded_for_longer_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = NetworkSpec::new(vec![haar_layer(2, 2)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng)];
        let f = random_gaussian(8, 1, &mut rng).column(0).into_owned();
        let mut st = mra_encode(&f, &net, &banks).unwrap();
        let high_energy = st.high[0].norm_squared();
        st.high[0].fill(0.0);
        let approx = mra_decode(&st, &net, &banks).unwrap();
        assert!((approx - &f).norm_squared() <= high_energy + 1e-12);
    }

    #[test]
    fn crelu_low_band_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q1 = random_orthogonal(2, &mut rng);
        let c1 = crelu_extend(q1.clone(), q1, DVector::zeros(2), 1).unwrap();
        let q2 = random_orthogonal(8, &mut rng);
        let b2 = random_gaussian(8, 1, &mut rng).column(0).into_owned();
        let c2 = crelu_extend(q2.clone(), q2, b2, 4).unwrap();
        let net = NetworkSpec::new(vec![haar_layer(2, 4).with_relu(true), haar_layer(2, 16).with_relu(true)]).unwrap();
        let banks = vec![MraBank::crelu(&c1), MraBank::crelu(&c2)];
        let f = random_gaussian(16, 1, &mut rng).column(0).into_owned();
        let st = mra_encode(&f, &net, &banks).unwrap();
        assert!(st.low.iter().all(|l| l.iter().all(|&v| v >= 0.0)));
        let back = mra_decode(&st, &net, &banks).unwrap();
        assert!((back - &f).norm() / f.norm() < 1e-10);
    }

    #[test]
    fn highband_filter_examples() {
        let c = DMatrix::from_fn(6, 2, |i, j| (i * 2 + j) as f64 - 3.0);
        let delta = DMatrix::from_column_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(highband_filter(&c, &delta).unwrap(), c);
        assert_eq!(highband_filter(&c, &DMatrix::zeros(2, 2)).unwrap(), DMatrix::zeros(6, 2));
        let h = DMatrix::from_column_slice(2, 2, &[1.0, -0.5, 2.0, 0.25]);
        let y = highband_filter(&c, &h).unwrap();
        for i in 0..2 {
            for k in 0..6 {
                let expected = c[(k, i)] * h[(0, i)] + c[((k + 5) % 6, i)] * h[(1, i)];
                assert!((y[(k, i)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn filtered_highband_still_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = NetworkSpec::new(vec![haar_layer(2, 2)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng)];
        let f = random_gaussian(8, 1, &mut rng).column(0).into_owned();
        let mut st = mra_encode(&f, &net, &banks).unwrap();
        st.high[0] = highband_filter(&st.high[0], &DMatrix::from_element(1, 2, 1.0)).unwrap();
        assert!((mra_decode(&st, &net, &banks).unwrap() - &f).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = NetworkSpec::new(vec![haar_layer(2, 2), haar_layer(2, 4)]).unwrap();
        let banks = vec![tight_bank(2, 1, &mut rng), tight_bank(4, 2, &mut rng)];
        assert!(mra_encode(&DVector::zeros(6), &net, &banks).is_err());
        let plain = NetworkSpec::new(vec![LayerSpec::linear(2, 2)]).unwrap();
        assert!(mra_encode(&DVector::zeros(8), &plain, &banks[..1]).is_err());
    }

    fn net_2d() -> (Mra2d, Vec<MraBank>) {
        let net = NetworkSpec::new(vec![haar_layer(2, 4), haar_layer(1, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b1 = FilterBank::orthonormal(random_orthogonal(4, &mut rng), 1).unwrap().into();
        let b2 = FilterBank::orthonormal(random_orthogonal(4, &mut rng), 4).unwrap().into();
        (build_2d_mra(&net).unwrap(), vec![b1, b2])
    }

    #[test]
    fn image_round_trip() {
        let (mra, banks) = net_2d();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_gaussian(16, 16, &mut rng);
        let st = mra.encode(&x, &banks).unwrap();
        let back = mra.decode(&st, &banks).unwrap();
        assert!((back - &x).norm() / x.norm() < 1e-10);
    }

    #[test]
    fn constant_image_only_ll() {
        let (mra, banks) = net_2d();
        let st = mra.encode(&DMatrix::from_element(8, 8, 2.0), &banks).unwrap();
        for l in 0..2 {
            assert!(st.lh[l].amax() < 1e-13 && st.hl[l].amax() < 1e-13 && st.hh[l].amax() < 1e-13);
            assert!(st.ll[l].amax() > 1.0);
        }
    }

    #[test]
    fn checkerboard_lands_in_hh() {
        let net = NetworkSpec::new(vec![haar_layer(1, 1)]).unwrap();
        let mra = build_2d_mra(&net).unwrap();
        let banks = vec![MraBank::from(FilterBank::orthonormal(DMatrix::identity(1, 1), 1).unwrap())];
        let x = DMatrix::from_fn(4, 6, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 });
        let st = mra.encode(&x, &banks).unwrap();
        // each 2x2 tile [[1,-1],[-1,1]] has Haar coefficient 2 in HH and 0 elsewhere
        assert!(st.ll[0].amax() < 1e-14 && st.lh[0].amax() < 1e-14 && st.hl[0].amax() < 1e-14);
        assert!(st.hh[0].iter().all(|&v| (v - 2.0).abs() < 1e-14));
        assert!((st.hh[0].norm_squared() - x.norm_squared()).abs() < 1e-12);
    }
}
