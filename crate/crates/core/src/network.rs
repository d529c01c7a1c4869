//! Layer descriptors for multi-layer encoder-decoder networks.

use crate::basis::NonlocalKind;
use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    /// Filter length.
    pub d: usize,
    /// Output channels.
    pub q: usize,
    pub nonlocal: NonlocalKind,
    pub relu: bool,
    pub bypass: bool,
}

impl LayerSpec {
    pub fn linear(d: usize, q: usize) -> Self {
        Self { d, q, nonlocal: NonlocalKind::Identity, relu: false, bypass: false }
    }

    pub fn with_nonlocal(mut self, kind: NonlocalKind) -> Self {
        self.nonlocal = kind;
        self
    }

    pub fn with_relu(mut self, relu: bool) -> Self {
        self.relu = relu;
        self
    }

    pub fn with_bypass(mut self, bypass: bool) -> Self {
        self.bypass = bypass;
        self
    }
}

/// Shape of one layer after chaining: input channels `p`, filter length `d`,
/// output channels `q`, input length `n` and coefficient length `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { layers };
        for (l, layer) in spec.layers.iter().enumerate() {
            if layer.d == 0 || layer.q == 0 {
                return Err(param(format!("layer {}: d and q must be positive", l + 1)));
            }
            if matches!(layer.nonlocal, NonlocalKind::Svd | NonlocalKind::Custom) {
                return Err(param(format!("layer {}: {} bases cannot be built from a config", l + 1, layer.nonlocal)));
            }
        }
        Ok(spec)
    }

    /// Copy with every ReLU switched off.
    pub fn linearized(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| l.with_relu(false)).collect() }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Input channel counts: `p_1 = 1`, `p_l = q_{l-1}`.
    pub fn input_channels(&self) -> Vec<usize> {
        let mut p = 1;
        self.layers
            .iter()
            .map(|l| {
                let cur = p;
                p = l.q;
                cur
            })
            .collect()
    }

    /// Per-layer shapes for an input of length `n`, validating filter lengths
    /// and pooling divisibility.
    pub fn shapes(&self, n: usize) -> Result<Vec<LayerShape>> {
        let mut len = n;
        let mut out = Vec::with_capacity(self.layers.len());
        for ((l, layer), p) in self.layers.iter().enumerate().zip(self.input_channels()) {
            if layer.d > len {
                return Err(param(format!("layer {}: filter length {} exceeds signal length {len}", l + 1, layer.d)));
            }
            let m = if layer.nonlocal.pools() {
                if len % 2 != 0 {
                    return Err(param(format!("layer {}: pooling needs an even length, got {len}", l + 1)));
                }
                len / 2
            } else {
                len
            };
            out.push(LayerShape { p, d: layer.d, q: layer.q, n: len, m });
            len = m;
        }
        Ok(out)
    }
}
