//! AWGN channel and the Monte Carlo BER/WER harness.

use crate::decoder::{self, DecoderConfig};
use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::lattice::{self, sigma_to_vnr_db, vnr_to_sigma, LatticeConfig, Vnr};
use crate::rng::{self, Rng};
use crate::tanner::{gf2_rank, nullspace_basis};
use crate::trellis::{TrellisSpec, WeightVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// `y_i = x_i + n_i`, `n_i ~ N(0, σ²)`.
pub fn awgn(x: &[f64], sigma: f64, rng: &mut Rng) -> Vec<f64> {
    assert!(sigma >= 0.0, "negative noise level");
    x.iter()
        .map(|&xi| {
            let n: f64 = StandardNormal.sample(rng);
            xi + sigma * n
        })
        .collect()
}

/// LLR of a `±1` symbol observed in noise: `2y/σ²`.
pub fn bpsk_llr(y: &[f64], sigma: f64) -> Vec<f64> {
    lattice::fold_llr(y, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    /// Threshold detection of independent BPSK symbols, no decoder.
    Uncoded,
    /// BPSK-modulated codewords through the neural decoder.
    Code,
    /// Construction A points through the folding decoder.
    #[default]
    Lattice,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncoded" => Ok(SimMode::Uncoded),
            "code" => Ok(SimMode::Code),
            "lattice" => Ok(SimMode::Lattice),
            other => Err(Error::Config(format!("unknown mode `{other}` (code|lattice|uncoded)"))),
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Uncoded => "uncoded",
            SimMode::Code => "code",
            SimMode::Lattice => "lattice",
        })
    }
}

/// Half-range of the random integer offsets `z` used for lattice transmissions.
const Z_RANGE: i64 = 2;

/// Channel LLRs for one noisy reception of the all-zero codeword.
pub fn zero_codeword_llr(mode: SimMode, n: usize, sigma: f64, q: u32, rng: &mut Rng) -> Vec<f64> {
    let y = awgn(&vec![-1.0; n], sigma, rng);
    match mode {
        SimMode::Lattice => lattice::fold_llr(&lattice::fold(&y, q).a_hat, sigma),
        SimMode::Code | SimMode::Uncoded => bpsk_llr(&y, sigma),
    }
}

/// A noise level, given either as a VNR or directly as σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoisePoint {
    Vnr(Vnr),
    Sigma(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    pub points: Vec<NoisePoint>,
    pub max_trials: u64,
    pub target_word_errors: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub q: u32,
    /// Transmit uniformly random codewords instead of the all-zero word.
    pub random_codewords: bool,
    /// Trials evaluated in parallel between early-stop checks.
    pub chunk_size: usize,
}

impl Default for SimPlan {
    fn default() -> Self {
        SimPlan {
            points: Vec::new(),
            max_trials: 10_000,
            target_word_errors: 100,
            seed: 0,
            mode: SimMode::Lattice,
            q: 4,
            random_codewords: false,
            chunk_size: 1024,
        }
    }
}

impl SimPlan {
    pub fn validate(&self) -> Result<()> {
        if self.max_trials == 0 {
            return Err(Error::Config("max trials must be at least 1".into()));
        }
        if self.target_word_errors == 0 {
            return Err(Error::Config("target word errors must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::Config("chunk size must be at least 1".into()));
        }
        if self.max_trials >= 1 << 40 || self.points.len() >= 1 << 24 {
            return Err(Error::Config("plan too large for the RNG stream layout".into()));
        }
        for p in &self.points {
            if let NoisePoint::Sigma(s) = p {
                if !(*s >= 0.0 && s.is_finite()) {
                    return Err(Error::Config(format!("invalid sigma {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Decoder used by the coded modes.
#[derive(Debug, Clone, Copy)]
pub struct DecoderBundle<'a> {
    pub spec: &'a TrellisSpec,
    pub weights: &'a WeightVector,
    pub cfg: DecoderConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub vnr_db: f64,
    pub sigma: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub word_errors: u64,
    /// Symbols per trial.
    pub n: usize,
}

impl SimRow {
    pub fn ber(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.trials as f64 * self.n as f64)
    }

    pub fn wer(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.word_errors as f64 / self.trials as f64
    }

    /// Wilson 95% interval half-width of the BER.
    pub fn ci95(&self) -> f64 {
        wilson_half_width(self.bit_errors, self.trials * self.n as u64)
    }
}

pub fn wilson_half_width(successes: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = total as f64;
    let p = successes as f64 / n;
    Z / (1.0 + Z * Z / n) * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
}

pub const REPORT_HEADER: &str = "vnr_db,sigma,trials,bit_errors,word_errors,ber,wer,ci95";

impl SimReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt12(r.vnr_db),
                fmt12(r.sigma),
                r.trials,
                r.bit_errors,
                r.word_errors,
                fmt12(r.ber()),
                fmt12(r.wer()),
                fmt12(r.ci95())
            ));
        }
        out
    }
}

struct Trial {
    bit_errors: u64,
    word_error: bool,
}

struct Setup<'a> {
    mode: SimMode,
    n: usize,
    q: u32,
    bundle: Option<DecoderBundle<'a>>,
    lattice: Option<LatticeConfig>,
    basis: Vec<Vec<u8>>,
    random_codewords: bool,
}

impl Setup<'_> {
    fn codeword(&self, rng: &mut Rng) -> Vec<u8> {
        let mut c = vec![0u8; self.n];
        if !self.random_codewords {
            return c;
        }
        if self.mode == SimMode::Uncoded {
            c.iter_mut().for_each(|b| *b = rng.gen_range(0..=1));
            return c;
        }
        for v in &self.basis {
            if rng.gen::<bool>() {
                c.iter_mut().zip(v).for_each(|(a, b)| *a ^= b);
            }
        }
        c
    }

    fn trial(&self, sigma: f64, rng: &mut Rng) -> Trial {
        let c = self.codeword(rng);
        let bpsk: Vec<f64> = c.iter().map(|&b| 2.0 * f64::from(b) - 1.0).collect();
        match self.mode {
            SimMode::Uncoded => {
                let y = awgn(&bpsk, sigma, rng);
                let bits = y.iter().map(|&v| u8::from(v > 0.0));
                count(bits.zip(c.iter().copied()).filter(|(a, b)| a != b).count())
            }
            SimMode::Code => {
                let b = self.bundle.as_ref().expect("coded mode has a decoder");
                let y = awgn(&bpsk, sigma, rng);
                let llr = bpsk_llr(&y, sigma.max(f64::MIN_POSITIVE));
                let r = decoder::run(&llr, b.weights, b.spec, &b.cfg);
                count(r.hard_bits.iter().zip(&c).filter(|(a, b)| a != b).count())
            }
            SimMode::Lattice => {
                let b = self.bundle.as_ref().expect("coded mode has a decoder");
                let h = self.lattice.expect("lattice mode has a lattice");
                let z: Vec<i64> = (0..self.n).map(|_| rng.gen_range(-Z_RANGE..=Z_RANGE)).collect();
                let q = i64::from(self.q);
                let x: Vec<i64> = bpsk.iter().zip(&z).map(|(&s, &zi)| s as i64 + q * zi).collect();
                let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                let y = awgn(&xf, sigma, rng);
                let folded = lattice::fold(&y, h.q);
                let llr = lattice::fold_llr(&folded.a_hat, sigma.max(f64::MIN_POSITIVE));
                let r = decoder::run(&llr, b.weights, b.spec, &b.cfg);
                let x_hat = lattice::unfold(&r.hard_bits, &folded.a, &folded.z_hat, h.q);
                count(x_hat.0.iter().zip(&x).filter(|(a, b)| a != b).count())
            }
        }
    }
}

fn count(errors: usize) -> Trial {
    Trial { bit_errors: errors as u64, word_error: errors > 0 }
}

/// Runs every point of `plan`.
///
/// Trial `t` of point `p` uses substream `(seed, p, t)`. Trials are evaluated
/// in parallel chunks and scanned in order, stopping at the trial that reaches
/// `target_word_errors`, so the report does not depend on the thread count.
/// `decoder` is required for the coded modes; in uncoded mode it only fixes
/// the block length (1 without it).
pub fn run_montecarlo(plan: &SimPlan, decoder: Option<DecoderBundle<'_>>) -> Result<SimReport> {
    plan.validate()?;
    let (n, k, lattice, basis) = match (plan.mode, &decoder) {
        (SimMode::Uncoded, None) => (1, 1, None, Vec::new()),
        (SimMode::Uncoded, Some(b)) => (b.spec.n_vars(), b.spec.n_vars(), None, Vec::new()),
        (_, None) => return Err(Error::Config(format!("{} mode needs a decoder", plan.mode))),
        (_, Some(b)) => {
            b.cfg.validate()?;
            b.weights.check_shape(b.spec)?;
            let h = b.spec.graph().to_matrix();
            let lat = LatticeConfig::new(&h, plan.q)?;
            let basis = if plan.random_codewords { nullspace_basis(&h) } else { Vec::new() };
            (h.n_cols(), h.n_cols() - gf2_rank(&h), Some(lat), basis)
        }
    };
    let setup = Setup {
        mode: plan.mode,
        n,
        q: plan.q,
        bundle: if plan.mode == SimMode::Uncoded { None } else { decoder },
        lattice,
        basis,
        random_codewords: plan.random_codewords,
    };

    let mut rows = Vec::with_capacity(plan.points.len());
    for (p, point) in plan.points.iter().enumerate() {
        let (vnr_db, sigma) = match *point {
            NoisePoint::Vnr(v) => (v.db(), vnr_to_sigma(v.db(), n, k, plan.q)),
            NoisePoint::Sigma(s) => (sigma_to_vnr_db(s, n, k, plan.q), s),
        };
        let mut row = SimRow { vnr_db, sigma, trials: 0, bit_errors: 0, word_errors: 0, n };
        'chunks: while row.trials < plan.max_trials {
            let start = row.trials;
            let end = (start + plan.chunk_size as u64).min(plan.max_trials);
            let results: Vec<Trial> = (start..end)
                .into_par_iter()
                .map(|t| setup.trial(sigma, &mut rng::substream(plan.seed, p as u64, t)))
                .collect();
            for r in results {
                row.trials += 1;
                row.bit_errors += r.bit_errors;
                row.word_errors += u64::from(r.word_error);
                if row.word_errors >= plan.target_word_errors {
                    break 'chunks;
                }
            }
        }
        log::info!(
            "point {}: vnr_db={} sigma={} trials={} ber={} wer={}",
            p + 1,
            fmt12(vnr_db),
            fmt12(sigma),
            row.trials,
            fmt12(row.ber()),
            fmt12(row.wer())
        );
        rows.push(row);
    }
    Ok(SimReport { rows })
}
