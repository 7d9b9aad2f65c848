//! Multiloss cross entropy, its reverse-mode gradient through the unrolled
//! network, and the gradient-descent training loop.
//!
//! The backward pass walks the iterations from last to first. Each output
//! layer injects `(σ(o_pre) - c) / (n ln 2)`; the adjoints then flow through
//! the check layer (leave-one-out products), the variable layer (tanh
//! derivative), and into the previous iteration's check messages. Tied weights
//! collect one contribution per iteration.

use crate::channel::{self, SimMode};
use crate::decoder::{self, sigmoid, DecoderConfig, LlrMode, MessageState};
use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::lattice::{LatticeConfig, Vnr};
use crate::rng;
use crate::trellis::{TrellisSpec, WeightVector};
use rayon::prelude::*;
use std::f64::consts::LN_2;
use std::fmt;

/// `∂L/∂W`, laid out like [`WeightVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(spec: &TrellisSpec) -> Self {
        GradientVector { w: vec![0.0; spec.culprits().len()], wp: vec![0.0; spec.n_edges()] }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().chain(&self.wp).copied().collect()
    }

    pub fn from_flat(spec: &TrellisSpec, flat: &[f64]) -> Result<Self> {
        let wv = WeightVector::from_flat(spec, flat)?;
        Ok(GradientVector { w: wv.w, wp: wv.wp })
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.wp).all(|x| x.is_finite())
    }

    fn add_assign(&mut self, other: &GradientVector) {
        self.w.iter_mut().zip(&other.w).for_each(|(a, b)| *a += b);
        self.wp.iter_mut().zip(&other.wp).for_each(|(a, b)| *a += b);
    }

    fn scale(&mut self, s: f64) {
        self.w.iter_mut().chain(self.wp.iter_mut()).for_each(|a| *a *= s);
    }
}

/// `-(1/n) Σ [c log2 o + (1-c) log2(1-o)]`.
pub fn cross_entropy(o_post: &[f64], c: &[u8]) -> f64 {
    assert_eq!(o_post.len(), c.len(), "length mismatch");
    let sum: f64 = o_post
        .iter()
        .zip(c)
        .map(|(&o, &b)| if b == 1 { o.log2() } else { (1.0 - o).log2() })
        .sum();
    -sum / o_post.len() as f64
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// [`cross_entropy`] evaluated from the pre-sigmoid values, without
/// saturating when `σ(o_pre)` rounds to 0 or 1.
pub fn cross_entropy_logits(o_pre: &[f64], c: &[u8]) -> f64 {
    assert_eq!(o_pre.len(), c.len(), "length mismatch");
    let sum: f64 = o_pre.iter().zip(c).map(|(&x, &b)| softplus(x) - f64::from(b) * x).sum();
    sum / (o_pre.len() as f64 * LN_2)
}

/// Sum of per-iteration cross entropies.
pub fn multiloss(states: &[MessageState], c: &[u8]) -> f64 {
    states.iter().map(|s| cross_entropy_logits(&s.o_pre, c)).sum()
}

fn check_inputs(llr: &[f64], weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig, c: &[u8]) -> Result<()> {
    if llr.len() != spec.n_vars() {
        return Err(Error::Length { expected: spec.n_vars(), found: llr.len() });
    }
    if c.len() != spec.n_vars() {
        return Err(Error::Length { expected: spec.n_vars(), found: c.len() });
    }
    weights.check_shape(spec)?;
    cfg.validate()
}

fn training_config(cfg: &DecoderConfig) -> DecoderConfig {
    DecoderConfig { early_exit: false, ..*cfg }
}

/// Multiloss of all `spec.iterations()` outputs (early exit disabled).
pub fn loss(llr: &[f64], weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig, c: &[u8]) -> Result<f64> {
    check_inputs(llr, weights, spec, cfg, c)?;
    let res = decoder::run(llr, weights, spec, &training_config(cfg));
    Ok(multiloss(&res.states, c))
}

/// Multiloss and its exact gradient with respect to every trainable weight.
pub fn forward_backward(
    llr: &[f64],
    weights: &WeightVector,
    spec: &TrellisSpec,
    cfg: &DecoderConfig,
    c: &[u8],
) -> Result<(f64, GradientVector)> {
    check_inputs(llr, weights, spec, cfg, c)?;
    Ok(forward_backward_unchecked(llr, weights, spec, &training_config(cfg), c))
}

fn forward_backward_unchecked(
    llr: &[f64],
    weights: &WeightVector,
    spec: &TrellisSpec,
    cfg: &DecoderConfig,
    c: &[u8],
) -> (f64, GradientVector) {
    let res = decoder::run(llr, weights, spec, cfg);
    let loss = multiloss(&res.states, c);
    (loss, backward(&res.states, weights, spec, cfg, c))
}

fn backward(states: &[MessageState], weights: &WeightVector, spec: &TrellisSpec, cfg: &DecoderConfig, c: &[u8]) -> GradientVector {
    let graph = spec.graph();
    let edges = graph.edges();
    let (n, n_edges) = (spec.n_vars(), spec.n_edges());
    let (vn_w, out_w) = decoder::edge_weights(weights, spec, cfg);
    let limit = decoder::llr_limit(cfg.clip_eps);
    let scale = 1.0 / (n as f64 * LN_2);

    let mut grad = GradientVector::zeros(spec);
    // Adjoints arriving from iteration t + 1.
    let mut carry_cv = vec![0.0; n_edges];
    let mut carry_opre = vec![0.0; n];
    let mut g_vc = vec![0.0; n_edges];

    for t in (0..states.len()).rev() {
        let s = &states[t];

        let mut g_cv = std::mem::replace(&mut carry_cv, vec![0.0; n_edges]);
        for v in 0..n {
            let g_o = (sigmoid(s.o_pre[v]) - f64::from(c[v])) * scale + carry_opre[v];
            for &f in spec.out_inputs(v) {
                if cfg.weighted {
                    grad.wp[f] += g_o * s.mu_cv[f];
                }
                g_cv[f] += g_o * out_w[f];
            }
        }

        // μ_cv[e] = sign · φ(Σ_f φ(|λ_vc[f]|)), zero slope once clamped
        g_vc.iter_mut().for_each(|x| *x = 0.0);
        for e in 0..n_edges {
            if g_cv[e] == 0.0 {
                continue;
            }
            let inputs = spec.cn_inputs(e);
            let total: f64 = inputs.iter().map(|&f| decoder::phi(s.lambda_vc[f].abs())).sum();
            if decoder::phi(total) > limit {
                continue;
            }
            let negative = inputs.iter().filter(|&&f| s.lambda_vc[f] < 0.0).count() % 2 == 1;
            let sinh_total = total.sinh();
            for &f in inputs {
                let x = s.lambda_vc[f];
                let d = if x == 0.0 {
                    inputs.iter().filter(|&&k| k != f).map(|&k| (s.lambda_vc[k] / 2.0).tanh()).product()
                } else {
                    // sign of the product over the other inputs
                    let others_neg = negative ^ (x < 0.0);
                    let mag = 1.0 / (sinh_total * x.abs().sinh());
                    if others_neg {
                        -mag
                    } else {
                        mag
                    }
                };
                g_vc[f] += g_cv[e] * d;
            }
        }

        // λ_vc[e] = clamp(base_v + Σ w_f μ_cv,t-1[f])
        carry_opre.iter_mut().for_each(|x| *x = 0.0);
        if t == 0 {
            continue;
        }
        let prev = &states[t - 1];
        let into_base = cfg.llr_mode == LlrMode::Updated;
        for e in 0..n_edges {
            if !(s.lambda_vc[e].abs() < limit) || g_vc[e] == 0.0 {
                continue;
            }
            let ds = g_vc[e];
            for &f in spec.vn_inputs(e) {
                carry_cv[f] += ds * vn_w[f];
                if cfg.weighted {
                    if let Some(slot) = spec.culprit_slot(f) {
                        grad.w[slot] += ds * prev.mu_cv[f];
                    }
                }
            }
            if into_base {
                carry_opre[edges[e].var] += ds;
            }
        }
    }
    grad
}

/// Central differences `(L(W + h e_k) - L(W - h e_k)) / 2h` per weight.
pub fn finite_diff_grad(
    llr: &[f64],
    weights: &WeightVector,
    spec: &TrellisSpec,
    cfg: &DecoderConfig,
    c: &[u8],
    h: f64,
) -> Result<GradientVector> {
    check_inputs(llr, weights, spec, cfg, c)?;
    if !(h > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    let cfg = training_config(cfg);
    let flat = weights.to_flat();
    let eval = |flat: &[f64]| {
        let w = WeightVector::from_flat(spec, flat).expect("same shape");
        multiloss(&decoder::run(llr, &w, spec, &cfg).states, c)
    };
    let mut probe = flat.clone();
    let g: Vec<f64> = (0..flat.len())
        .map(|k| {
            probe[k] = flat[k] + h;
            let up = eval(&probe);
            probe[k] = flat[k] - h;
            let down = eval(&probe);
            probe[k] = flat[k];
            (up - down) / (2.0 * h)
        })
        .collect();
    GradientVector::from_flat(spec, &g)
}

/// `W - α·∇L`, no projection.
pub fn gradient_step(weights: &WeightVector, grad: &GradientVector, alpha: f64) -> WeightVector {
    assert_eq!(weights.w.len(), grad.w.len(), "shape mismatch");
    assert_eq!(weights.wp.len(), grad.wp.len(), "shape mismatch");
    let step = |w: &[f64], g: &[f64]| w.iter().zip(g).map(|(w, g)| w - alpha * g).collect();
    WeightVector { w: step(&weights.w, &grad.w), wp: step(&weights.wp, &grad.wp) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub trend_window: usize,
    pub seed: u64,
    pub vnr: Vnr,
    /// How training words are received: `Code` (BPSK) or `Lattice` (folded).
    pub mode: SimMode,
    pub q: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            beta: 0.01,
            batch_size: 20,
            max_steps: 1000,
            trend_window: 10,
            seed: 0,
            vnr: Vnr::from_db(0.0),
            mode: SimMode::Lattice,
            q: 4,
        }
    }
}

/// Steps are numbered on the outer RNG index, whose top value is reserved.
const MAX_STEPS_LIMIT: usize = (1 << 24) - 1;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.trend_window < 2 {
            return bad(format!("trend window must be at least 2, got {}", self.trend_window));
        }
        if self.max_steps >= MAX_STEPS_LIMIT {
            return bad(format!("max steps must be below {MAX_STEPS_LIMIT}"));
        }
        if self.mode == SimMode::Uncoded {
            return bad("training needs the code or lattice channel".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    BetaReached,
    TrendReversal,
    MaxSteps,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::BetaReached => "beta_reached",
            StopReason::TrendReversal => "trend_reversal",
            StopReason::MaxSteps => "max_steps",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Batch-mean multiloss at each executed step.
    pub losses: Vec<f64>,
    pub steps: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("step,mean_loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, fmt12(*l)));
        }
        out
    }
}

fn trend_reversed(losses: &[f64], window: usize) -> bool {
    if losses.len() < 2 * window {
        return false;
    }
    let tail = &losses[losses.len() - 2 * window..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    mean(&tail[window..]) > mean(&tail[..window])
}

/// Gradient descent on the all-zero codeword.
///
/// Each step draws `batch_size` received words from substreams
/// `(seed, step, member)`, averages loss and gradient in member order, and
/// checks the stopping rules before updating. The returned weights are those
/// that produced the last recorded loss.
pub fn train(
    spec: &TrellisSpec,
    init: WeightVector,
    dec_cfg: &DecoderConfig,
    cfg: &TrainConfig,
) -> Result<(WeightVector, TrainReport)> {
    cfg.validate()?;
    dec_cfg.validate()?;
    init.check_shape(spec)?;
    let dec_cfg = training_config(dec_cfg);
    let lattice = LatticeConfig::new(&spec.graph().to_matrix(), cfg.q)?;
    let sigma = lattice.sigma(cfg.vnr);
    let n = spec.n_vars();
    let zero = vec![0u8; n];
    log::info!(
        "training: n={n} params={} sigma={} alpha={} beta={} batch={}",
        spec.n_params(),
        fmt12(sigma),
        cfg.alpha,
        cfg.beta,
        cfg.batch_size
    );

    let mut weights = init;
    let mut losses = Vec::new();
    for step in 0..cfg.max_steps {
        let samples: Vec<(f64, GradientVector)> = (0..cfg.batch_size)
            .into_par_iter()
            .map(|b| {
                let mut rng = rng::substream(cfg.seed, step as u64, b as u64);
                let llr = channel::zero_codeword_llr(cfg.mode, n, sigma, cfg.q, &mut rng);
                forward_backward_unchecked(&llr, &weights, spec, &dec_cfg, &zero)
            })
            .collect();
        let mut mean_loss = 0.0;
        let mut grad = GradientVector::zeros(spec);
        for (l, g) in &samples {
            mean_loss += l;
            grad.add_assign(g);
        }
        let inv = 1.0 / cfg.batch_size as f64;
        mean_loss *= inv;
        grad.scale(inv);
        if !mean_loss.is_finite() || !grad.is_finite() {
            return Err(Error::Diverged { step: step + 1, loss: mean_loss });
        }
        losses.push(mean_loss);
        log::debug!("step {} loss {}", step + 1, fmt12(mean_loss));

        let stop = if mean_loss < cfg.beta {
            Some(StopReason::BetaReached)
        } else if trend_reversed(&losses, cfg.trend_window) {
            Some(StopReason::TrendReversal)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            let steps = losses.len();
            log::info!("training stopped after {steps} steps: {stop_reason}");
            return Ok((weights, TrainReport { losses, steps, stop_reason }));
        }
        weights = gradient_step(&weights, &grad, cfg.alpha);
    }
    let steps = losses.len();
    Ok((weights, TrainReport { losses, steps, stop_reason: StopReason::MaxSteps }))
}
