//! Error-variance model of the CMA output and the semi-analytic
//! probability of correct classification built on it.
//!
//! The equalized output is modeled as `y = e^{j theta} s(i - D) + eps` with
//! `eps` Gaussian of variance
//!
//! ```text
//! sigma_eps^2 = EMSE + E|Delta|^2 + sigma_v^2 [(H H^H)^-1]_DD
//! ```
//!
//! where `Delta` is the intersymbol interference left by truncating the
//! zero-forcing inverse to the equalizer length.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{complex_gaussian_vec, toeplitz_channel_matrix, ChannelRealization, Transmission};
use crate::classifier::rck_classify;
use crate::distributions::TableSet;
use crate::equalizer::{combined_response, condition_estimate, ZfEqualizer};
use crate::error::{Error, Result};
use crate::signals::Constellation;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBreakdown {
    pub emse: f64,
    pub residual_isi: f64,
    pub noise_enhancement: f64,
    pub total: f64,
}

impl VarianceBreakdown {
    pub fn new(emse: f64, residual_isi: f64, noise_enhancement: f64) -> Self {
        Self {
            emse,
            residual_isi,
            noise_enhancement,
            total: emse + residual_isi + noise_enhancement,
        }
    }

    pub const CSV_HEADER: &'static str = "channel,level,emse,residual_isi,noise_enh,total";

    pub fn csv_row(&self, channel: &str, level: usize) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{channel},{level},{:?},{:?},{:?},{:?}",
            self.emse, self.residual_isi, self.noise_enhancement, self.total
        );
        s
    }
}

/// `mu (E|s|^6 - 2E|s|^4 + E|s|^2) / (4E|s|^2 - 2) Tr(H H^H)`.
pub fn emse_term(c: &Constellation, mu: f64, hm: &DMatrix<C64>) -> f64 {
    let m = c.moments();
    // Tr(H H^H) is the squared Frobenius norm.
    let trace = hm.norm_squared();
    let num = m.m6 - 2.0 * m.m4 + m.m2;
    // Constant-modulus alphabets cancel up to rounding; report them as 0.
    let num = if num.abs() < 1e-12 { 0.0 } else { num };
    mu * num / (4.0 * m.m2 - 2.0) * trace
}

/// `||w'^H H'||^2` for the taps `w(L), ..., w(L_zf - 1)` dropped when the ZF
/// inverse is cut to `len` taps. Zero when nothing is dropped.
pub fn residual_isi_term(zf: &ZfEqualizer, len: usize, h: &ChannelRealization) -> f64 {
    if len >= zf.len() {
        return 0.0;
    }
    combined_response(&zf.taps()[len..], h)
        .iter()
        .map(|v| v.norm_sqr())
        .sum()
}

/// `sigma_v^2 [(H H^H)^-1]_DD` via a Cholesky solve.
pub fn noise_enhancement_term(hm: &DMatrix<C64>, noise_var: f64, delay: usize) -> Result<f64> {
    let rows = hm.nrows();
    if delay >= rows {
        return Err(Error::Input(format!("delay {delay} outside the {rows}-tap equalizer")));
    }
    let gram = hm * hm.adjoint();
    let chol = gram.clone().cholesky().ok_or_else(|| Error::Singular {
        condition: condition_estimate(&gram),
    })?;
    let mut e = DMatrix::<C64>::zeros(rows, 1);
    e[(delay, 0)] = C64::new(1.0, 0.0);
    let x = chol.solve(&e);
    let v = x[(delay, 0)].re;
    if !v.is_finite() {
        return Err(Error::Singular {
            condition: condition_estimate(&gram),
        });
    }
    Ok(noise_var * v)
}

/// Full breakdown for alphabet `c` on channel `h` with a length-`len` CMA,
/// using the supplied ZF design for the truncation and delay terms. The
/// delay is capped to the equalizer span.
pub fn error_variance(
    c: &Constellation,
    mu: f64,
    h: &ChannelRealization,
    len: usize,
    noise_var: f64,
    zf: &ZfEqualizer,
) -> Result<VarianceBreakdown> {
    if len == 0 {
        return Err(Error::Config("equalizer length must be >= 1".into()));
    }
    let hm = toeplitz_channel_matrix(h, len);
    let emse = emse_term(c, mu, &hm);
    let isi = residual_isi_term(zf, len, h);
    let noise = noise_enhancement_term(&hm, noise_var, zf.delay().min(len - 1))?;
    Ok(VarianceBreakdown::new(emse, isi, noise))
}

/// [`error_variance`] with the ZF design derived from `cfg`.
pub fn error_variance_with_config(
    c: &Constellation,
    mu: f64,
    h: &ChannelRealization,
    len: usize,
    noise_var: f64,
    cfg: &crate::equalizer::ZfConfig,
) -> Result<VarianceBreakdown> {
    let zf = ZfEqualizer::design(h, cfg)?;
    error_variance(c, mu, h, len, noise_var, &zf)
}

/// `mean_i |y(i) - e^{j theta} s(iL - 1 - D)|^2` over the equalized blocks
/// of a transmission, `D` capped to the equalizer span.
pub fn aligned_error_power(y_eq: &[C64], tx: &Transmission, len: usize, delay: usize, phase: f64) -> f64 {
    let d = delay.min(len.saturating_sub(1)) as isize;
    let rot = C64::from_polar(1.0, phase);
    let total: f64 = y_eq
        .iter()
        .enumerate()
        .map(|(b, y)| {
            let n = (b * len + len - 1) as isize - d;
            (y - rot * tx.symbol(n)).norm_sqr()
        })
        .sum();
    total / y_eq.len().max(1) as f64
}

/// Semi-analytic accuracy: per-level and prior-weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct PcEstimate {
    pub per_level: Vec<f64>,
    pub variances: Vec<VarianceBreakdown>,
    pub pc: f64,
}

/// Settings for [`analytic_pc`].
#[derive(Debug, Clone)]
pub struct PcConfig {
    pub mu: f64,
    pub taps: usize,
    /// Equalized outputs per batch.
    pub samples: usize,
    /// Monte Carlo batches per level.
    pub batches: usize,
    /// Level priors; `None` means uniform.
    pub priors: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for PcConfig {
    fn default() -> Self {
        Self {
            mu: 1e-4,
            taps: 20,
            samples: 200,
            batches: 10_000,
            priors: None,
            seed: 0,
        }
    }
}

/// `P_c(h) = sum_k Pr(correct | M_k, h) Pr(M_k)`.
///
/// Each conditional probability is estimated by classifying `batches`
/// synthetic blocks of `s_k + eps`, `eps ~ CN(0, sigma_eps^2(k))`, with the
/// rcK rule at `gamma = 1/sigma_eps^2(k)`.
pub fn analytic_pc(
    h: &ChannelRealization,
    zf: &ZfEqualizer,
    noise_var: f64,
    tables: &TableSet,
    cfg: &PcConfig,
) -> Result<PcEstimate> {
    let levels = tables.levels();
    let priors = match &cfg.priors {
        Some(p) => {
            if p.len() != levels.len() || p.iter().any(|&v| !(v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config("priors must be nonnegative, one per level, summing to 1".into()));
            }
            p.clone()
        }
        None => vec![1.0 / levels.len() as f64; levels.len()],
    };
    if cfg.batches == 0 {
        return Err(Error::Config("need at least one Monte Carlo batch".into()));
    }
    let mut per_level = Vec::with_capacity(levels.len());
    let mut variances = Vec::with_capacity(levels.len());
    for (k, &level) in levels.iter().enumerate() {
        let c = Constellation::new(tables.mod_class(), level)?;
        let var = error_variance(&c, cfg.mu, h, cfg.taps, noise_var, zf)?;
        let gamma = if var.total > 0.0 { 1.0 / var.total } else { f64::INFINITY };
        let hits = (0..cfg.batches)
            .into_par_iter()
            .map(|b| -> Result<usize> {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((k as u64) << 40) | b as u64);
                let s = c.draw(cfg.samples, &mut rng);
                let y: Vec<C64> = if var.total > 0.0 {
                    let e = complex_gaussian_vec(cfg.samples, var.total, &mut rng);
                    s.iter().zip(&e).map(|(a, b)| a + b).collect()
                } else {
                    s
                };
                Ok(usize::from(rck_classify(&y, gamma, tables)?.chosen_level == level))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        per_level.push(hits as f64 / cfg.batches as f64);
        variances.push(var);
    }
    let pc = per_level.iter().zip(&priors).map(|(p, w)| p * w).sum();
    Ok(PcEstimate {
        per_level,
        variances,
        pc,
    })
}
