//! Construction A lattices `Λ = qℤⁿ + C` and the folding decoder wrapped
//! around the neural decoder.
//!
//! Points are transmitted as `x = (2c - 1) + q·z`. The receiver folds `y` into
//! a single period, maps it to LLRs, decodes the code bits, and unfolds.

use crate::decoder::{self, DecodeResult, DecoderConfig};
use crate::error::{Error, Result};
use crate::tanner::{gf2_rank, ParityCheckMatrix};
use crate::trellis::{TrellisSpec, WeightVector};
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnrUnit {
    Db,
    Linear,
}

impl FromStr for VnrUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "db" | "dB" => Ok(VnrUnit::Db),
            "linear" => Ok(VnrUnit::Linear),
            other => Err(Error::Config(format!("unknown VNR unit `{other}` (db|linear)"))),
        }
    }
}

impl fmt::Display for VnrUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VnrUnit::Db => "db",
            VnrUnit::Linear => "linear",
        })
    }
}

/// Volume-to-noise ratio, stored in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vnr {
    db: f64,
}

impl Vnr {
    pub fn new(value: f64, unit: VnrUnit) -> Result<Self> {
        match unit {
            VnrUnit::Db if value.is_finite() => Ok(Vnr { db: value }),
            VnrUnit::Linear if value.is_finite() && value > 0.0 => Ok(Vnr { db: 10.0 * value.log10() }),
            _ => Err(Error::Config(format!("invalid VNR {value} ({unit})"))),
        }
    }

    pub fn from_db(db: f64) -> Self {
        Vnr { db }
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.db / 10.0)
    }
}

/// `σ = sqrt(q^((2n-k)/n) / (2πe · VNR))`.
pub fn vnr_to_sigma(vnr_db: f64, n: usize, k: usize, q: u32) -> f64 {
    let volume_term = f64::from(q).powf((2 * n - k) as f64 / n as f64);
    (volume_term / (2.0 * PI * E * 10f64.powf(vnr_db / 10.0))).sqrt()
}

/// Inverse of [`vnr_to_sigma`].
pub fn sigma_to_vnr_db(sigma: f64, n: usize, k: usize, q: u32) -> f64 {
    let volume_term = f64::from(q).powf((2 * n - k) as f64 / n as f64);
    10.0 * (volume_term / (2.0 * PI * E * sigma * sigma)).log10()
}

/// Parameters of `Λ = qℤⁿ + C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeConfig {
    pub n: usize,
    /// Code dimension `n - rank(H)`.
    pub k: usize,
    pub q: u32,
}

impl LatticeConfig {
    pub fn new(h: &ParityCheckMatrix, q: u32) -> Result<Self> {
        if q < 2 || q % 2 != 0 {
            return Err(Error::Config(format!("folding modulus must be even and >= 2, got {q}")));
        }
        Ok(LatticeConfig { n: h.n_cols(), k: h.n_cols() - gf2_rank(h), q })
    }

    pub fn sigma(&self, vnr: Vnr) -> f64 {
        vnr_to_sigma(vnr.db(), self.n, self.k, self.q)
    }
}

/// A lattice point; every coordinate is an integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64).collect()
    }
}

/// `x_i = (2c_i - 1) + q·z_i`; `c` must be a codeword of `h`.
pub fn encode(c: &[u8], z: &[i64], q: u32, h: &ParityCheckMatrix) -> Result<LatticePoint> {
    if c.len() != h.n_cols() {
        return Err(Error::Length { expected: h.n_cols(), found: c.len() });
    }
    if z.len() != c.len() {
        return Err(Error::Length { expected: c.len(), found: z.len() });
    }
    if c.iter().any(|&b| b > 1) || !h.is_codeword(c) {
        return Err(Error::NotACodeword);
    }
    let q = i64::from(q);
    Ok(LatticePoint(c.iter().zip(z).map(|(&b, &zi)| 2 * i64::from(b) - 1 + q * zi).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Folded {
    /// `round((y - 1) / q)`, halves rounded up.
    pub z_hat: Vec<i64>,
    /// `y - q·z_hat`, in `[1 - q/2, 1 + q/2)`.
    pub a: Vec<f64>,
    /// `a` reflected about 1 when `a > 1`.
    pub a_hat: Vec<f64>,
}

pub fn fold(y: &[f64], q: u32) -> Folded {
    let qf = f64::from(q);
    let mut out = Folded {
        z_hat: Vec::with_capacity(y.len()),
        a: Vec::with_capacity(y.len()),
        a_hat: Vec::with_capacity(y.len()),
    };
    for &yi in y {
        let z = ((yi - 1.0) / qf + 0.5).floor();
        let a = yi - qf * z;
        out.z_hat.push(z as i64);
        out.a.push(a);
        out.a_hat.push(if a > 1.0 { 2.0 - a } else { a });
    }
    out
}

/// `ℓ_i = ((â+1)² - (â-1)²) / (2σ²) = 2â/σ²`.
pub fn fold_llr(a_hat: &[f64], sigma: f64) -> Vec<f64> {
    let s2 = sigma * sigma;
    a_hat.iter().map(|&a| 2.0 * a / s2).collect()
}

/// Maps decoded bits back through the fold: `ĉ = 2 - c̃'` where `a > 1`,
/// `x̂ = ĉ + q·ẑ`.
pub fn unfold(c_tilde: &[u8], a: &[f64], z_hat: &[i64], q: u32) -> LatticePoint {
    assert!(c_tilde.len() == a.len() && a.len() == z_hat.len(), "length mismatch");
    let q = i64::from(q);
    LatticePoint(
        c_tilde
            .iter()
            .zip(a)
            .zip(z_hat)
            .map(|((&c, &ai), &z)| {
                let pm = 2 * i64::from(c) - 1;
                let c_hat = if ai > 1.0 { 2 - pm } else { pm };
                c_hat + q * z
            })
            .collect(),
    )
}

/// fold → LLR → neural decode → unfold.
pub fn decode_lattice(
    y: &[f64],
    weights: &WeightVector,
    spec: &TrellisSpec,
    cfg: &DecoderConfig,
    lattice: &LatticeConfig,
    sigma: f64,
) -> Result<(LatticePoint, DecodeResult)> {
    if y.len() != spec.n_vars() {
        return Err(Error::Length { expected: spec.n_vars(), found: y.len() });
    }
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    let folded = fold(y, lattice.q);
    let llr = fold_llr(&folded.a_hat, sigma);
    let result = decoder::decode(&llr, weights, spec, cfg)?;
    let x_hat = unfold(&result.hard_bits, &folded.a, &folded.z_hat, lattice.q);
    Ok((x_hat, result))
}
