//! Multipath channel realizations, transmission through them, and the
//! banded Toeplitz channel matrix.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

/// Which generator produced a channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    /// Four taps: `h(0) = 1`, the rest i.i.d. `CN(0, 0.05)`.
    Ch1,
    /// Three independent taps with variances 0.95, 0.28 and 0.11 (EVA
    /// profile sampled at 1 MHz).
    Ch2,
    /// Deterministic `[1, 0, 0.9]`.
    Ch3,
    Custom,
}

impl ChannelModel {
    pub const CH1_TAP_VARIANCE: f64 = 0.05;
    pub const CH2_TAP_VARIANCES: [f64; 3] = [0.95, 0.28, 0.11];
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::Ch1 => "ch1",
            ChannelModel::Ch2 => "ch2",
            ChannelModel::Ch3 => "ch3",
            ChannelModel::Custom => "custom",
        })
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "ch1" => Ok(ChannelModel::Ch1),
            "ch2" => Ok(ChannelModel::Ch2),
            "ch3" => Ok(ChannelModel::Ch3),
            "custom" => Ok(ChannelModel::Custom),
            other => Err(Error::Parse(format!("unknown channel model '{other}'"))),
        }
    }
}

/// A block-fading channel impulse response `h = [h(0), ..., h(Q-1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<C64>,
    model: ChannelModel,
}

impl ChannelRealization {
    pub fn custom(taps: Vec<C64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Input("channel needs at least one tap".into()));
        }
        if taps.iter().all(|t| t.norm_sqr() == 0.0) {
            return Err(Error::Input("channel taps are all zero".into()));
        }
        Ok(Self {
            taps,
            model: ChannelModel::Custom,
        })
    }

    /// Single unit tap.
    pub fn identity() -> Self {
        Self {
            taps: vec![C64::new(1.0, 0.0)],
            model: ChannelModel::Custom,
        }
    }

    /// Draws one realization. `Custom` has no generator and is rejected.
    pub fn sample<R: Rng + ?Sized>(model: ChannelModel, rng: &mut R) -> Result<Self> {
        let taps = match model {
            ChannelModel::Ch1 => {
                let mut taps = vec![C64::new(1.0, 0.0)];
                taps.extend((0..3).map(|_| complex_gaussian(ChannelModel::CH1_TAP_VARIANCE, rng)));
                taps
            }
            ChannelModel::Ch2 => ChannelModel::CH2_TAP_VARIANCES
                .iter()
                .map(|&v| complex_gaussian(v, rng))
                .collect(),
            ChannelModel::Ch3 => vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.9, 0.0)],
            ChannelModel::Custom => {
                return Err(Error::Config("custom channels are loaded, not sampled".into()))
            }
        };
        Ok(Self { taps, model })
    }

    /// Parses one complex tap per line as `re im`; blank lines and `#`
    /// comments are skipped.
    pub fn parse_taps(text: &str) -> Result<Self> {
        let mut taps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let tap = match fields.as_slice() {
                [re] => C64::new(parse(re)?, 0.0),
                [re, im] => C64::new(parse(re)?, parse(im)?),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected 're im', got '{line}'",
                        lineno + 1
                    )))
                }
            };
            taps.push(tap);
        }
        Self::custom(taps)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_taps(&std::fs::read_to_string(path)?)
    }

    pub fn taps(&self) -> &[C64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    /// `sum |h(q)|^2`
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Every tap multiplied by `gain`; provenance is kept.
    pub fn scaled(&self, gain: C64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t * gain).collect(),
            model: self.model,
        }
    }
}

/// Additive white noise `v(n) ~ CN(0, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Input(format!("noise variance must be >= 0, got {variance}")));
        }
        Ok(Self { variance })
    }

    /// Transmit SNR `1/variance` in dB; `+inf` gives a noiseless channel.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            variance: snr_db_to_noise_variance(snr_db),
        }
    }
}

/// Noise variance for a transmit SNR in dB (unit symbol power).
pub fn snr_db_to_noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// One circular complex Gaussian sample of total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `n` i.i.d. `CN(0, variance)` samples.
pub fn complex_gaussian_vec<R: Rng + ?Sized>(n: usize, variance: f64, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(variance, rng)).collect()
}

/// Symbols, noiseless channel output and received samples of one block.
///
/// The first `Q-1` symbols are the warm-up prefix: `received[n]` is the
/// channel output driven by `symbols[n + Q - 1]`, so every received sample
/// has a full channel memory.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub symbols: Vec<C64>,
    pub clean: Vec<C64>,
    pub received: Vec<C64>,
    prefix: usize,
}

impl Transmission {
    /// Symbol `s(n)` in received-sample time; `n` may reach back into the
    /// warm-up prefix (`n >= -(Q-1)`).
    pub fn symbol(&self, n: isize) -> C64 {
        let idx = n + self.prefix as isize;
        assert!(idx >= 0, "symbol index {n} precedes the warm-up prefix");
        self.symbols[idx as usize]
    }

    pub fn prefix(&self) -> usize {
        self.prefix
    }
}

/// Noiseless convolution `x'(n) = sum_q h(q) s(n+Q-1-q)` over the samples
/// where the channel memory is fully loaded. Output length `len(s) - Q + 1`.
pub fn convolve_valid(symbols: &[C64], h: &ChannelRealization) -> Result<Vec<C64>> {
    let q = h.len();
    if symbols.len() < q {
        return Err(Error::Input(format!(
            "need at least {q} symbols for a {q}-tap channel, got {}",
            symbols.len()
        )));
    }
    Ok((q - 1..symbols.len())
        .map(|n| h.taps().iter().enumerate().map(|(k, t)| t * symbols[n - k]).sum())
        .collect())
}

/// Passes `symbols` (warm-up prefix included) through the channel and adds
/// noise.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[C64],
    h: &ChannelRealization,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Transmission> {
    let clean = convolve_valid(symbols, h)?;
    let received = if noise.variance == 0.0 {
        clean.clone()
    } else {
        clean
            .iter()
            .map(|x| x + complex_gaussian(noise.variance, rng))
            .collect()
    };
    Ok(Transmission {
        symbols: symbols.to_vec(),
        clean,
        received,
        prefix: h.len() - 1,
    })
}

/// `rows x (rows + Q - 1)` banded Toeplitz matrix with `h(q)` at `(r, r+q)`.
pub fn toeplitz_channel_matrix(h: &ChannelRealization, rows: usize) -> DMatrix<C64> {
    let q = h.len();
    let mut m = DMatrix::zeros(rows, rows + q - 1);
    for r in 0..rows {
        for (k, &t) in h.taps().iter().enumerate() {
            m[(r, r + k)] = t;
        }
    }
    m
}
