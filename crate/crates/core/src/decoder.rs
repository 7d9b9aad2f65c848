//! Weighted sum-product forward pass over the unrolled network.
//!
//! LLRs follow `ℓ = log Pr(c=1|y) / Pr(c=0|y)`: positive favors bit 1. VN
//! messages are kept in the tanh domain, CN messages in the LLR domain:
//!
//! ```text
//! μ_vc,ℓ = tanh((ℓ_v + Σ_{k≠j} w_k μ_cv,ℓ-1) / 2)
//! μ_cv,ℓ = 2 atanh(Π_{k≠i} μ_vc,ℓ)
//! o_v,ℓ  = σ(ℓ_v + Σ_k w'_k μ_cv,ℓ)
//! ```
//!
//! Internally the check rule is evaluated as `sign · φ(Σ φ(|λ|))` on the VN
//! LLRs `λ`, with `φ(x) = -ln tanh(x/2)`. This is the same function as the
//! tanh product but keeps full precision once messages saturate.
//!
//! With the positive-favors-1 sign convention the check rule is exact only on
//! checks of even degree (an odd number of extrinsic inputs); see
//! [`crate::tanner::ParityCheckMatrix::odd_weight_rows`].

use crate::error::{Error, Result};
use crate::tanner::ParityCheckMatrix;
use crate::trellis::{TrellisSpec, WeightVector};

/// What the VN layers add their extrinsic messages to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LlrMode {
    /// The channel LLR `ℓ_v` at every iteration.
    #[default]
    Initial,
    /// From iteration 2 on, the previous iteration's accumulated LLR `o_pre`.
    /// The output layer keeps using `ℓ_v`.
    Updated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub llr_mode: LlrMode,
    /// Tanh-domain values are clipped to `[-1 + clip_eps, 1 - clip_eps]`.
    pub clip_eps: f64,
    /// `false` runs plain sum-product whatever the weights say.
    pub weighted: bool,
    /// Stop as soon as the hard decision satisfies every check.
    pub early_exit: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { llr_mode: LlrMode::Initial, clip_eps: 1e-12, weighted: true, early_exit: true }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps < 1e-3) {
            return Err(Error::Config(format!("clip_eps must lie in (0, 1e-3), got {}", self.clip_eps)));
        }
        Ok(())
    }
}

/// Messages of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    /// VN-layer outputs per edge, tanh domain.
    pub mu_vc: Vec<f64>,
    /// The same messages as LLRs, clamped to `±2 atanh(1 - clip_eps)`.
    pub lambda_vc: Vec<f64>,
    /// CN-layer outputs per edge, LLR domain.
    pub mu_cv: Vec<f64>,
    pub o_pre: Vec<f64>,
    pub o_post: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// One entry per executed iteration.
    pub states: Vec<MessageState>,
    pub hard_bits: Vec<u8>,
    /// Whether `hard_bits` satisfies every check.
    pub converged: bool,
    pub iterations_used: usize,
}

impl DecodeResult {
    pub fn final_state(&self) -> &MessageState {
        self.states.last().expect("at least one iteration")
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clip(x: f64, eps: f64) -> f64 {
    x.clamp(-1.0 + eps, 1.0 - eps)
}

/// `tanh((llr + Σ w·μ) / 2)`, clipped. `incoming` must exclude the target check.
pub fn vn_message(llr: f64, incoming: impl IntoIterator<Item = (f64, f64)>, clip_eps: f64) -> f64 {
    let sum = llr + incoming.into_iter().map(|(w, mu)| w * mu).sum::<f64>();
    clip((sum / 2.0).tanh(), clip_eps)
}

/// `2 atanh(Π μ)` with the product clipped. `incoming` must exclude the
/// target variable.
pub fn cn_message(incoming: impl IntoIterator<Item = f64>, clip_eps: f64) -> f64 {
    let prod: f64 = incoming.into_iter().product();
    2.0 * clip(prod, clip_eps).atanh()
}

/// `-ln tanh(x/2)` for `x >= 0`; its own inverse, with `φ(0) = ∞`.
pub(crate) fn phi(x: f64) -> f64 {
    if x > 1.0 {
        2.0 * (-x).exp().atanh()
    } else {
        (-x).exp().ln_1p() - (-(-x).exp_m1()).ln()
    }
}

/// Largest message magnitude representable under clipping `eps`.
pub(crate) fn llr_limit(eps: f64) -> f64 {
    2.0 * (1.0 - eps).atanh()
}

/// [`cn_message`] evaluated from VN messages given as LLRs.
pub fn cn_message_llr(incoming: impl IntoIterator<Item = f64>, clip_eps: f64) -> f64 {
    let (mut neg, mut total) = (false, 0.0);
    for x in incoming {
        neg ^= x < 0.0;
        total += phi(x.abs());
    }
    let mag = phi(total).min(llr_limit(clip_eps));
    if neg {
        -mag
    } else {
        mag
    }
}

/// `(o_pre, σ(o_pre))` with `o_pre = llr + Σ w'·μ` over every adjacent check.
pub fn output_layer(llr: f64, incoming: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let pre = llr + incoming.into_iter().map(|(w, mu)| w * mu).sum::<f64>();
    (pre, sigmoid(pre))
}

/// Bit 1 iff `o_pre > 0`; ties go to 0.
pub fn hard_decision(o_pre: &[f64]) -> Vec<u8> {
    o_pre.iter().map(|&x| u8::from(x > 0.0)).collect()
}

/// True iff every row parity of `bits` is even.
pub fn syndrome_check(bits: &[u8], h: &ParityCheckMatrix) -> bool {
    h.is_codeword(bits)
}

/// Effective per-edge `(w, w')` for a configuration.
pub(crate) fn edge_weights(weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig) -> (Vec<f64>, Vec<f64>) {
    if cfg.weighted {
        (weights.vn_weights(spec), weights.wp.clone())
    } else {
        (vec![1.0; spec.n_edges()], vec![1.0; spec.n_edges()])
    }
}

/// Runs up to `spec.iterations()` iterations of the weighted network.
pub fn decode(llr: &[f64], weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig) -> Result<DecodeResult> {
    if llr.len() != spec.n_vars() {
        return Err(Error::Length { expected: spec.n_vars(), found: llr.len() });
    }
    weights.check_shape(spec)?;
    cfg.validate()?;
    Ok(run(llr, weights, spec, cfg))
}

pub(crate) fn run(llr: &[f64], weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig) -> DecodeResult {
    let graph = spec.graph();
    let (n, n_edges) = (spec.n_vars(), spec.n_edges());
    let (vn_w, out_w) = edge_weights(weights, spec, cfg);
    let edges = graph.edges();
    let eps = cfg.clip_eps;
    let limit = llr_limit(eps);

    let mut states: Vec<MessageState> = Vec::with_capacity(spec.iterations());
    let mut hard_bits = vec![0u8; n];
    let mut converged = false;
    for _ in 0..spec.iterations() {
        let prev = states.last();
        let base: &[f64] = match (cfg.llr_mode, prev) {
            (LlrMode::Updated, Some(p)) => &p.o_pre,
            _ => llr,
        };

        let sums: Vec<f64> = (0..n_edges)
            .map(|e| {
                let v = edges[e].var;
                match prev {
                    Some(p) => base[v] + spec.vn_inputs(e).iter().map(|&f| vn_w[f] * p.mu_cv[f]).sum::<f64>(),
                    None => base[v],
                }
            })
            .collect();
        let mu_vc: Vec<f64> = sums.iter().map(|&x| clip((x / 2.0).tanh(), eps)).collect();
        let lambda_vc: Vec<f64> = sums.iter().map(|&x| x.clamp(-limit, limit)).collect();

        let phis: Vec<f64> = lambda_vc.iter().map(|x| phi(x.abs())).collect();
        let mu_cv: Vec<f64> = (0..n_edges)
            .map(|e| {
                let inputs = spec.cn_inputs(e);
                let mag = phi(inputs.iter().map(|&f| phis[f]).sum()).min(limit);
                if inputs.iter().filter(|&&f| lambda_vc[f] < 0.0).count() % 2 == 1 {
                    -mag
                } else {
                    mag
                }
            })
            .collect();

        let (o_pre, o_post): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|v| output_layer(llr[v], spec.out_inputs(v).iter().map(|&f| (out_w[f], mu_cv[f]))))
            .unzip();

        hard_bits = hard_decision(&o_pre);
        converged = graph.syndrome_ok(&hard_bits);
        states.push(MessageState { mu_vc, lambda_vc, mu_cv, o_pre, o_post });
        if cfg.early_exit && converged {
            break;
        }
    }
    let iterations_used = states.len();
    DecodeResult { states, hard_bits, converged, iterations_used }
}
