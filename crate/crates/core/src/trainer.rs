//! Gradient-descent fitting of filter banks to input/target signal pairs.
//!
//! The objective is `Σ ‖f*_i − net(f_i)‖²` through the full encoder/decoder
//! recursion, including ReLU, bypass connections and both biases. Non-local
//! bases are treated as constants (max pooling is piecewise constant in the
//! filter response). The ReLU derivative at 0 is taken as 0.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;

use crate::error::{param, shape, Error, Result};
use crate::hankel::{lift_extended, unlift_extended};
use crate::layer::{check_banks, multi_layer_encode, FilterBank};
use crate::network::NetworkSpec;
use crate::nonlin::relu;

/// Maximum number of step halvings per iteration.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pairs: Vec<(DVector<f64>, DVector<f64>)>,
}

impl TrainingSet {
    pub fn new(pairs: Vec<(DVector<f64>, DVector<f64>)>) -> Result<Self> {
        let Some(first) = pairs.first() else {
            return Err(param("training set is empty"));
        };
        let n = first.0.len();
        for (i, (x, y)) in pairs.iter().enumerate() {
            if x.len() != n || y.len() != n {
                return Err(shape(format!("pair {i}: lengths {}/{} differ from {n}", x.len(), y.len())));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(DVector<f64>, DVector<f64>)] {
        &self.pairs
    }

    pub fn signal_len(&self) -> usize {
        self.pairs[0].0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Largest step tried; halved on a loss increase.
    pub step: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { step: 1e-2, iterations: 2000, seed: 0 }
    }
}

/// Gradient with the same layout as a [`FilterBank`].
#[derive(Debug, Clone, PartialEq)]
pub struct BankGrad {
    pub psi: DMatrix<f64>,
    pub psi_dual: DMatrix<f64>,
    pub b_enc: DVector<f64>,
    pub b_dec: DVector<f64>,
}

impl BankGrad {
    fn zeros_like(bank: &FilterBank) -> Self {
        Self {
            psi: DMatrix::zeros(bank.psi.nrows(), bank.psi.ncols()),
            psi_dual: DMatrix::zeros(bank.psi.nrows(), bank.psi.ncols()),
            b_enc: DVector::zeros(bank.b_enc.len()),
            b_dec: DVector::zeros(bank.b_dec.len()),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        self.psi += &other.psi;
        self.psi_dual += &other.psi_dual;
        self.b_enc += &other.b_enc;
        self.b_dec += &other.b_dec;
    }

    pub fn norm_squared(&self) -> f64 {
        self.psi.norm_squared() + self.psi_dual.norm_squared() + self.b_enc.norm_squared() + self.b_dec.norm_squared()
    }

    fn is_finite(&self) -> bool {
        self.norm_squared().is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub banks: Vec<FilterBank>,
    /// Loss before the first step and after every accepted step.
    pub trace: Vec<f64>,
}

/// Uniform `[−1/√(pd), 1/√(pd)]` filters and duals, zero biases.
pub fn init_banks(net: &NetworkSpec, n: usize, seed: u64) -> Result<Vec<FilterBank>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    net.shapes(n)?
        .iter()
        .map(|s| {
            let a = 1.0 / ((s.p * s.d) as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a).map_err(|e| param(e.to_string()))?;
            let psi = DMatrix::from_fn(s.p * s.d, s.q, |_, _| dist.sample(&mut rng));
            let dual = DMatrix::from_fn(s.p * s.d, s.q, |_, _| dist.sample(&mut rng));
            FilterBank::new(psi, dual, s.p)
        })
        .collect()
}

fn add_bias(mut m: DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    for (mut col, v) in m.column_iter_mut().zip(b.iter()) {
        col.add_scalar_mut(*v);
    }
    m
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

fn positive_mask(g: &mut DMatrix<f64>, pre: &DMatrix<f64>) {
    g.zip_apply(pre, |gv, pv| {
        if pv <= 0.0 {
            *gv = 0.0;
        }
    });
}

/// Squared error and gradient for one pair.
fn sample_loss_grad(f: &DVector<f64>, target: &DVector<f64>, net: &NetworkSpec, banks: &[FilterBank]) -> Result<(f64, Vec<BankGrad>)> {
    let depth = net.depth();
    let stack = multi_layer_encode(f, net, banks)?;
    let recs = &stack.records;

    // decoder pass, keeping each layer's input and Φ̃ρ(Y)
    let mut dec_in = Vec::with_capacity(depth);
    let mut dec_g = Vec::with_capacity(depth);
    let mut y = recs[depth - 1].output.clone();
    for l in (0..depth).rev() {
        let (spec, bank, rec) = (&net.layers[l], &banks[l], &recs[l]);
        let act = if spec.relu { relu(&y) } else { y.clone() };
        let g = &rec.basis.phi_dual * act;
        let mut z = add_bias(unlift_extended(&(&g * bank.psi_dual.transpose()), bank.p())?, &bank.b_dec);
        if spec.bypass {
            z += &rec.input;
        }
        dec_in.push(y);
        dec_g.push(g);
        y = z;
    }
    dec_in.reverse();
    dec_g.reverse();
    let resid = y.column(0) - target;
    let loss = resid.norm_squared();

    let mut grads: Vec<BankGrad> = banks.iter().map(BankGrad::zeros_like).collect();
    // gradients with respect to each encoder output X_l
    let mut g_out: Vec<DMatrix<f64>> = recs.iter().map(|r| DMatrix::zeros(r.output.nrows(), r.output.ncols())).collect();

    let mut gz = DMatrix::from_column_slice(resid.len(), 1, (resid * 2.0).as_slice());
    for l in 0..depth {
        let (spec, bank, rec) = (&net.layers[l], &banks[l], &recs[l]);
        if spec.bypass && l > 0 {
            g_out[l - 1] += &gz;
        }
        grads[l].b_dec = column_sums(&gz);
        let d = bank.d();
        // adjoint of the anti-diagonal mean is the lift scaled by 1/d
        let gb = lift_extended(&gz, d)? / d as f64;
        grads[l].psi_dual = gb.transpose() * &dec_g[l];
        let mut gy = rec.basis.phi_dual.transpose() * (gb * &bank.psi_dual);
        if spec.relu {
            positive_mask(&mut gy, &dec_in[l]);
        }
        if l + 1 < depth {
            gz = gy;
        } else {
            g_out[l] += &gy;
        }
    }

    for l in (0..depth).rev() {
        let (spec, bank, rec) = (&net.layers[l], &banks[l], &recs[l]);
        let mut gc = std::mem::replace(&mut g_out[l], DMatrix::zeros(0, 0));
        if spec.relu {
            positive_mask(&mut gc, &rec.coeffs);
        }
        let gf = &rec.basis.phi * gc;
        grads[l].b_enc = column_sums(&gf);
        let d = bank.d();
        grads[l].psi = lift_extended(&rec.input, d)?.transpose() * &gf;
        if l > 0 {
            // adjoint of the lift is d times the anti-diagonal mean
            let gx = unlift_extended(&(&gf * bank.psi.transpose()), bank.p())? * d as f64;
            g_out[l - 1] += &gx;
        }
    }
    Ok((loss, grads))
}

fn check(data: &TrainingSet, net: &NetworkSpec, banks: &[FilterBank]) -> Result<()> {
    if net.depth() == 0 {
        return Err(param("network has no layers"));
    }
    check_banks(net, banks, data.signal_len())
}

fn per_sample(data: &TrainingSet, net: &NetworkSpec, banks: &[FilterBank]) -> Result<Vec<(f64, Vec<BankGrad>)>> {
    data.pairs.par_iter().map(|(x, y)| sample_loss_grad(x, y, net, banks)).collect()
}

/// Loss and gradient, summed over pairs in a fixed order.
pub fn loss_and_grad(banks: &[FilterBank], data: &TrainingSet, net: &NetworkSpec) -> Result<(f64, Vec<BankGrad>)> {
    check(data, net, banks)?;
    let terms = per_sample(data, net, banks)?;
    let mut total = 0.0;
    let mut grads: Vec<BankGrad> = banks.iter().map(BankGrad::zeros_like).collect();
    for (l, g) in terms {
        total += l;
        grads.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b));
    }
    Ok((total, grads))
}

/// `Σ ‖f*_i − net(f_i)‖²`.
pub fn loss(banks: &[FilterBank], data: &TrainingSet, net: &NetworkSpec) -> Result<f64> {
    check(data, net, banks)?;
    let terms: Vec<f64> = data
        .pairs
        .par_iter()
        .map(|(x, y)| crate::layer::forward(x, net, banks).map(|out| (out - y).norm_squared()))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

pub fn grad(banks: &[FilterBank], data: &TrainingSet, net: &NetworkSpec) -> Result<Vec<BankGrad>> {
    loss_and_grad(banks, data, net).map(|(_, g)| g)
}

fn step_banks(banks: &[FilterBank], grads: &[BankGrad], s: f64) -> Vec<FilterBank> {
    banks
        .iter()
        .zip(grads)
        .map(|(b, g)| {
            let mut out = b.clone();
            out.psi -= &g.psi * s;
            out.psi_dual -= &g.psi_dual * s;
            out.b_enc -= &g.b_enc * s;
            out.b_dec -= &g.b_dec * s;
            out
        })
        .collect()
}

/// Train from seeded random banks.
pub fn fit(data: &TrainingSet, net: &NetworkSpec, config: &TrainConfig) -> Result<TrainOutcome> {
    let banks = init_banks(net, data.signal_len(), config.seed)?;
    fit_from(data, net, config, banks)
}

/// Full-batch gradient descent with backtracking from the given banks. A
/// rejected step is halved up to [`MAX_HALVINGS`] times; after an accepted
/// step the next trial step doubles, capped at `config.step`.
pub fn fit_from(data: &TrainingSet, net: &NetworkSpec, config: &TrainConfig, mut banks: Vec<FilterBank>) -> Result<TrainOutcome> {
    if !(config.step > 0.0) || config.iterations == 0 {
        return Err(param("step size and iteration budget must be positive"));
    }
    let mut trace = Vec::new();
    let mut step = config.step;
    for iteration in 0..config.iterations {
        let (current, grads) = loss_and_grad(&banks, data, net)?;
        if trace.is_empty() {
            trace.push(current);
        }
        if !current.is_finite() || !grads.iter().all(BankGrad::is_finite) {
            return Err(Error::Diverged { iteration, trace });
        }
        if current == 0.0 || grads.iter().all(|g| g.norm_squared() == 0.0) {
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..=MAX_HALVINGS {
            let candidate = step_banks(&banks, &grads, s);
            let value = loss(&candidate, data, net)?;
            if value <= current {
                accepted = Some((candidate, value));
                break;
            }
            s /= 2.0;
        }
        let Some((next, value)) = accepted else { break };
        banks = next;
        trace.push(value);
        step = (2.0 * s).min(config.step);
    }
    Ok(TrainOutcome { banks, trace })
}

/// `count` pairs of (noisy, clean) cosines of length `n` with frequency 3 and
/// phases `0.7 i`; the noise is Gaussian with standard deviation `noise`.
pub fn noisy_cosines(count: usize, n: usize, noise: f64, seed: u64) -> Result<TrainingSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).map_err(|e| param(e.to_string()))?;
    let pairs = (0..count)
        .map(|i| {
            let phase = i as f64 * 0.7;
            let clean = DVector::from_fn(n, |k, _| (2.0 * PI * 3.0 * k as f64 / n as f64 + phase).cos());
            let noisy = clean.map(|v| v + normal.sample(&mut rng));
            (noisy, clean)
        })
        .collect();
    TrainingSet::new(pairs)
}

/// `count` pairs of (constant plus a spike of height 2, constant) with
/// levels drawn from `N(0.5, 1)`; spike `i` sits at `(5 i + 3) mod n`.
pub fn spikes_on_constants(count: usize, n: usize, seed: u64) -> Result<TrainingSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.5, 1.0).map_err(|e| param(e.to_string()))?;
    let pairs = (0..count)
        .map(|i| {
            let clean = DVector::from_element(n, normal.sample(&mut rng));
            let mut noisy = clean.clone();
            noisy[(5 * i + 3) % n] += 2.0;
            (noisy, clean)
        })
        .collect();
    TrainingSet::new(pairs)
}
