//! Level classifiers: the rcK goodness-of-fit rule fed by the CMA or a genie
//! ZF equalizer, and a sixth-order cumulant baseline.

use std::sync::OnceLock;

use crate::channel::ChannelRealization;
use crate::distributions::{extract_feature, Ecdf, FeatureCdfTable, TableSet, TestpointTable};
use crate::equalizer::{
    block_filter, clamp_snr, cma_run, estimate_snr, normalize_signal_power, CmaConfig, EqualizerRun, ZfConfig,
    ZfEqualizer, GAMMA_FLOOR,
};
use crate::error::{Error, Result};
use crate::signals::{Constellation, ModClass};
use crate::C64;

/// Minimum number of equalized outputs accepted by [`rck_classify`].
pub const MIN_RCK_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub chosen_level: usize,
    /// Candidate levels, in the order of `distances`.
    pub levels: Vec<usize>,
    pub distances: Vec<f64>,
    /// SNR grid point used (NaN for classifiers without one).
    pub gamma_used_db: f64,
    pub low_confidence: bool,
}

/// Index of the smallest distance; ties go to the lowest order.
fn argmin_level(levels: &[usize], distances: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..levels.len() {
        let better = distances[k] < distances[best]
            || (distances[k] == distances[best] && levels[k] < levels[best]);
        if better {
            best = k;
        }
    }
    levels[best]
}

/// Kuiper-style distance of every candidate at its testpoints.
///
/// For level `l` the deviations `ecdf(t) - F_l(t)` are taken over every
/// testpoint of every pair containing `l`; the distance is the largest
/// positive deviation plus the largest negative one.
pub fn rck_distances<E: Fn(f64) -> f64>(ecdf: E, tables: &[FeatureCdfTable], testpoints: &TestpointTable) -> Vec<f64> {
    tables
        .iter()
        .map(|table| {
            let mut up = f64::NEG_INFINITY;
            let mut down = f64::NEG_INFINITY;
            for t in testpoints.for_level(table.level) {
                let d = ecdf(t.tau) - table.values()[t.index];
                up = up.max(d);
                down = down.max(-d);
            }
            if up == f64::NEG_INFINITY {
                // A single candidate has no testpoints.
                0.0
            } else {
                (up + down).abs()
            }
        })
        .collect()
}

/// rcK decision on equalized outputs already scaled to unit signal power.
///
/// `gamma` is the linear SNR estimate; values below the clamp floor are
/// classified at the lowest grid SNR and flagged.
pub fn rck_classify(y_eq: &[C64], gamma: f64, tables: &TableSet) -> Result<ClassificationResult> {
    if y_eq.len() < MIN_RCK_SAMPLES {
        return Err(Error::Input(format!(
            "rcK needs at least {MIN_RCK_SAMPLES} equalized samples, got {}",
            y_eq.len()
        )));
    }
    let low_confidence = !(gamma >= GAMMA_FLOOR);
    let k = tables.nearest_snr_index(clamp_snr(gamma));
    let features = extract_feature(y_eq, tables.kind())?;
    let ecdf = Ecdf::new(&features)?;
    let distances = rck_distances(|t| ecdf.at(t), tables.tables_at(k), tables.testpoints_at(k));
    Ok(ClassificationResult {
        chosen_level: argmin_level(tables.levels(), &distances),
        levels: tables.levels().to_vec(),
        distances,
        gamma_used_db: tables.snr_grid()[k],
        low_confidence,
    })
}

/// Blind pipeline: CMA equalization of `x`, signal-power normalization with
/// the SNR estimate, then rcK.
pub fn cma_rck_classify(
    x: &[C64],
    noise_var: f64,
    cfg: &CmaConfig,
    tables: &TableSet,
) -> Result<(EqualizerRun, ClassificationResult)> {
    let run = cma_run(x, cfg, noise_var)?;
    let y = run.signal_normalized_output();
    let mut result = rck_classify(&y, run.gamma_raw, tables)?;
    result.low_confidence |= run.low_confidence();
    Ok((run, result))
}

/// Equalizer used by the genie baseline: the first `len` taps of the
/// inverse-channel series, or a length-`len` least-squares design when the
/// series does not converge.
pub fn genie_zf(h: &ChannelRealization, len: usize, cfg: &ZfConfig) -> Result<Vec<C64>> {
    let zf = ZfEqualizer::design(h, cfg)?;
    if zf.is_approximate() {
        Ok(ZfEqualizer::least_squares(h, len)?.taps().to_vec())
    } else {
        Ok(zf.truncated(len))
    }
}

/// Genie baseline: equalize with the true channel's ZF taps (truncated to
/// `len`), estimate the SNR with those taps, then rcK.
pub fn zf_rck_classify(
    x: &[C64],
    h: &ChannelRealization,
    noise_var: f64,
    len: usize,
    blocks: usize,
    cfg: &ZfConfig,
    tables: &TableSet,
) -> Result<ClassificationResult> {
    let taps = genie_zf(h, len, cfg)?;
    let out = block_filter(x, &taps, blocks)?;
    let gamma = estimate_snr(&out, &taps, noise_var);
    let y = normalize_signal_power(&out, clamp_snr(gamma));
    rck_classify(&y, gamma, tables)
}

/// Set partitions of six elements as block lists (203 of them).
fn partitions6() -> &'static [Vec<Vec<usize>>] {
    static CELL: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    CELL.get_or_init(|| {
        // Restricted growth strings a[0] = 0, a[i] <= 1 + max(a[..i]).
        let mut out = Vec::new();
        let mut a = [0usize; 6];
        fn rec(i: usize, max: usize, a: &mut [usize; 6], out: &mut Vec<Vec<Vec<usize>>>) {
            if i == 6 {
                let mut blocks = vec![Vec::new(); max + 1];
                for (e, &b) in a.iter().enumerate() {
                    blocks[b].push(e);
                }
                out.push(blocks);
                return;
            }
            for b in 0..=max + 1 {
                a[i] = b;
                rec(i + 1, max.max(b), a, out);
            }
        }
        a[0] = 0;
        rec(1, 0, &mut a, &mut out);
        out
    })
}

/// `cum(x, x, x, x*, x*, x*)` from moments `m(a, b) = E[x^a conj(x)^b]`.
fn c63_from_moments<M: Fn(usize, usize) -> C64>(m: M) -> f64 {
    const FACT: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];
    let mut acc = C64::new(0.0, 0.0);
    for blocks in partitions6() {
        let k = blocks.len();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let mut term = C64::new(sign * FACT[k - 1], 0.0);
        for block in blocks {
            let a = block.iter().filter(|&&e| e < 3).count();
            term *= m(a, block.len() - a);
        }
        acc += term;
    }
    acc.re
}

/// Sample C63 of `x` after scaling to unit mean power.
pub fn cumulant_c63(x: &[C64]) -> Result<f64> {
    let n = x.len();
    let power = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n.max(1) as f64;
    if n == 0 || !(power > 0.0) || !power.is_finite() {
        return Err(Error::Input("C63 of a zero-power sequence".into()));
    }
    let scale = power.sqrt().recip();
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for v in x {
        let z = v * scale;
        let zc = z.conj();
        let pa = [C64::new(1.0, 0.0), z, z * z, z * z * z];
        let pb = [C64::new(1.0, 0.0), zc, zc * zc, zc * zc * zc];
        for a in 0..4 {
            for b in 0..4 {
                if a + b > 0 {
                    m[a][b] += pa[a] * pb[b];
                }
            }
        }
    }
    Ok(c63_from_moments(|a, b| m[a][b] / n as f64))
}

/// Exact C63 of the equiprobable alphabet.
pub fn theoretical_c63(c: &Constellation) -> f64 {
    c63_from_moments(|a, b| c.mixed_moment(a as u32, b as u32))
}

/// Nearest-theoretical-value decision on the raw received samples.
pub fn cumulant_classify(x: &[C64], mod_class: ModClass, levels: &[usize]) -> Result<ClassificationResult> {
    if mod_class == ModClass::Psk {
        return Err(Error::Unsupported(
            "the C63 baseline cannot separate PSK orders".into(),
        ));
    }
    if levels.is_empty() {
        return Err(Error::Config("no candidate levels".into()));
    }
    let est = cumulant_c63(x)?;
    let distances = levels
        .iter()
        .map(|&l| Ok((est - theoretical_c63(&Constellation::new(mod_class, l)?)).abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationResult {
        chosen_level: argmin_level(levels, &distances),
        levels: levels.to_vec(),
        distances,
        gamma_used_db: f64::NAN,
        low_confidence: false,
    })
}
