//! Denoising and masked inpainting driven by a restoration operator.

use nalgebra::DVector;

use crate::error::{param, shape, Result};
use crate::layer::{forward, FilterBank};
use crate::lowrank::lowrank_shrink_signal;
use crate::mra::{mra_decode, mra_encode, MraBank};
use crate::network::NetworkSpec;

/// A shape-preserving map `Q` on signals.
pub trait RestorationOperator {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl RestorationOperator for Identity {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(f.clone())
    }
}

/// Rank-`r` truncation of the `d`-column Hankel lift.
#[derive(Debug, Clone, Copy)]
pub struct HankelShrinkage {
    pub d: usize,
    pub r: usize,
}

impl RestorationOperator for HankelShrinkage {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        lowrank_shrink_signal(f, self.d, self.r)
    }
}

/// Encode-decode through a multi-layer framelet network.
#[derive(Debug, Clone)]
pub struct FrameletNetwork {
    pub net: NetworkSpec,
    pub banks: Vec<FilterBank>,
}

impl RestorationOperator for FrameletNetwork {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        forward(f, &self.net, &self.banks)
    }
}

/// Multi-resolution network; `keep_high = false` discards every high band.
#[derive(Debug, Clone)]
pub struct MraNetwork {
    pub net: NetworkSpec,
    pub banks: Vec<MraBank>,
    pub keep_high: bool,
}

impl RestorationOperator for MraNetwork {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        let mut state = mra_encode(f, &self.net, &self.banks)?;
        if !self.keep_high {
            state.high.iter_mut().for_each(|h| h.fill(0.0));
        }
        mra_decode(&state, &self.net, &self.banks)
    }
}

impl<T: RestorationOperator + ?Sized> RestorationOperator for &T {
    fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).apply(f)
    }
}

pub fn denoise<Q: RestorationOperator + ?Sized>(g: &DVector<f64>, q: &Q) -> Result<DVector<f64>> {
    q.apply(g)
}

fn check_output(out: &DVector<f64>, n: usize) -> Result<()> {
    if out.len() != n {
        return Err(shape(format!("operator changed the length from {n} to {}", out.len())));
    }
    Ok(())
}

/// `μ P g + (I − μ P) Q(f)` where `P` keeps the observed samples.
pub fn masked_update<Q: RestorationOperator + ?Sized>(
    f: &DVector<f64>,
    g: &DVector<f64>,
    observed: &[bool],
    mu: f64,
    q: &Q,
) -> Result<DVector<f64>> {
    if f.len() != g.len() || g.len() != observed.len() {
        return Err(shape("signal, observation and mask lengths differ"));
    }
    let qf = q.apply(f)?;
    check_output(&qf, f.len())?;
    Ok(DVector::from_fn(f.len(), |i, _| if observed[i] { mu * g[i] + (1.0 - mu) * qf[i] } else { qf[i] }))
}

/// Relaxation weights `λ_n`; a sequence repeats its last entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Schedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Sequence(v) => v[n.min(v.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::Sequence(v) => v,
        };
        if values.is_empty() || values.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(param("relaxation weights must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintProblem {
    pub observed: DVector<f64>,
    /// `true` where the sample is known.
    pub mask: Vec<bool>,
    pub mu: f64,
    pub lambda: Schedule,
    pub max_iters: usize,
    pub tol: f64,
    /// Ground truth for error tracking.
    pub truth: Option<DVector<f64>>,
}

impl InpaintProblem {
    pub fn new(observed: DVector<f64>, mask: Vec<bool>) -> Self {
        Self { observed, mask, mu: 0.99, lambda: Schedule::Constant(0.5), max_iters: 1000, tol: 1e-8, truth: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mask.len() != self.observed.len() {
            return Err(shape(format!("mask has {} entries for {} samples", self.mask.len(), self.observed.len())));
        }
        if !self.mask.iter().any(|&m| m) {
            return Err(param("no observed samples"));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(param(format!("mu = {} is outside [0, 1)", self.mu)));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.observed.len() {
                return Err(shape("ground truth length differs from the observation"));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(param("tolerance must be non-negative"));
        }
        self.lambda.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `‖f_{n+1} − f_n‖ / ‖f_n‖`.
    pub residual: f64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintResult {
    pub signal: DVector<f64>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

/// Relaxed fixed-point iteration `f ← f + λ_n (masked_update(f) − f)`
/// starting from the masked observation.
pub fn inpaint<Q: RestorationOperator + ?Sized>(problem: &InpaintProblem, q: &Q) -> Result<InpaintResult> {
    problem.validate()?;
    let g = &problem.observed;
    if problem.mask.iter().all(|&m| m) {
        return Ok(InpaintResult { signal: g.clone(), trace: Vec::new(), converged: true });
    }
    let mut f = DVector::from_fn(g.len(), |i, _| if problem.mask[i] { g[i] } else { 0.0 });
    let mut trace = Vec::new();
    for n in 0..problem.max_iters {
        let target = masked_update(&f, g, &problem.mask, problem.mu, q)?;
        let lambda = problem.lambda.at(n);
        let next = if lambda == 1.0 { target } else { &f + (target - &f) * lambda };
        let step = (&next - &f).norm();
        let scale = f.norm();
        let residual = if scale > 0.0 { step / scale } else { step };
        f = next;
        let error = problem.truth.as_ref().map(|t| (&f - t).norm());
        trace.push(TraceRow { iteration: n + 1, residual, error });
        if !residual.is_finite() {
            return Ok(InpaintResult { signal: f, trace, converged: false });
        }
        if step <= problem.tol * scale {
            return Ok(InpaintResult { signal: f, trace, converged: true });
        }
    }
    Ok(InpaintResult { signal: f, trace, converged: false })
}
