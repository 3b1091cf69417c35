//! CDF comparison of the CMA output magnitude against the Gaussian error
//! model, with and without the residual-ISI term.
//!
//! The equalizer output is compared after rescaling it to the total power
//! the model predicts, `1 + sigma_eps^2`, so the comparison tests the shape
//! of the distribution rather than the CMA's gain.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{error_variance, VarianceBreakdown};
use crate::channel::{snr_db_to_noise_variance, transmit, ChannelRealization, NoiseSpec};
use crate::distributions::{theoretical_cdf_with_variance, Ecdf, FeatureCdfTable, FeatureKind, DEFAULT_GRID_SIZE};
use crate::equalizer::{cma_run, mean_power, CmaConfig, ZfEqualizer};
use crate::error::{Error, Result};
use crate::signals::{Constellation, ModClass};
use crate::C64;

#[derive(Debug, Clone)]
pub struct Fig1Config {
    pub channel: ChannelRealization,
    pub level: usize,
    pub snrs_db: Vec<f64>,
    pub taps: usize,
    /// Length of the ZF inverse whose tail defines the residual ISI.
    pub zf_len: usize,
    pub mu: f64,
    /// Equalized outputs (and CMA updates).
    pub samples: usize,
    pub seed: u64,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            channel: ChannelRealization::custom(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.9, 0.0)])
                .expect("fixed taps"),
            level: 16,
            snrs_db: vec![0.0, 20.0],
            taps: 20,
            zf_len: 90,
            mu: 1e-4,
            samples: 10_000,
            seed: 1,
        }
    }
}

/// Comparison at one SNR.
#[derive(Debug, Clone)]
pub struct Fig1Point {
    pub snr_db: f64,
    pub variance: VarianceBreakdown,
    /// Model variance with the residual-ISI term removed.
    pub variance_no_isi: f64,
    pub sup_full: f64,
    pub sup_no_isi: f64,
    /// Largest gap between the two model CDFs.
    pub model_gap: f64,
    pub magnitudes: Vec<f64>,
    pub model_full: FeatureCdfTable,
    pub model_no_isi: FeatureCdfTable,
}

fn scaled_magnitudes(y: &[C64], target_power: f64) -> Vec<f64> {
    let scale = (target_power / mean_power(y)).sqrt();
    y.iter().map(|v| v.norm() * scale).collect()
}

pub fn run_fig1(cfg: &Fig1Config) -> Result<Vec<Fig1Point>> {
    if cfg.samples < 2 {
        return Err(Error::Config("need at least 2 equalized outputs".into()));
    }
    let c = Constellation::new(ModClass::Qam, cfg.level)?;
    let zf = ZfEqualizer::with_length(&cfg.channel, cfg.zf_len)
        .or_else(|_| ZfEqualizer::least_squares(&cfg.channel, cfg.zf_len))?;
    let cma = CmaConfig::new(cfg.taps, cfg.mu, cfg.samples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let symbols = c.draw(cma.samples_needed() + cfg.channel.len() - 1, &mut rng);
    let mut points = Vec::with_capacity(cfg.snrs_db.len());
    for &snr in &cfg.snrs_db {
        let var = snr_db_to_noise_variance(snr);
        let tx = transmit(&symbols, &cfg.channel, NoiseSpec::new(var)?, &mut rng)?;
        let run = cma_run(&tx.received, &cma, var)?;
        let v = error_variance(&c, cfg.mu, &cfg.channel, cfg.taps, var, &zf)?;
        let v_no_isi = v.total - v.residual_isi;
        let full = theoretical_cdf_with_variance(&c, v.total, snr, FeatureKind::Magnitude, DEFAULT_GRID_SIZE)?;
        let no_isi = theoretical_cdf_with_variance(&c, v_no_isi, snr, FeatureKind::Magnitude, DEFAULT_GRID_SIZE)?;
        let mag_full = scaled_magnitudes(&run.output, 1.0 + v.total);
        let mag_no_isi = scaled_magnitudes(&run.output, 1.0 + v_no_isi);
        let sup_full = Ecdf::new(&mag_full)?.sup_distance(&full);
        let sup_no_isi = Ecdf::new(&mag_no_isi)?.sup_distance(&no_isi);
        let model_gap = full
            .grid()
            .iter()
            .chain(no_isi.grid())
            .map(|&t| (full.cdf_at(t) - no_isi.cdf_at(t)).abs())
            .fold(0.0, f64::max);
        points.push(Fig1Point {
            snr_db: snr,
            variance: v,
            variance_no_isi: v_no_isi,
            sup_full,
            sup_no_isi,
            model_gap,
            magnitudes: mag_full,
            model_full: full,
            model_no_isi: no_isi,
        });
    }
    Ok(points)
}

/// Curves on a common grid: `snr_db,tau,empirical,model_full,model_no_isi`.
pub fn write_fig1_csv<W: Write>(points: &[Fig1Point], grid_points: usize, out: &mut W) -> Result<()> {
    writeln!(out, "snr_db,tau,empirical,model_full,model_no_isi")?;
    for p in points {
        let ecdf = Ecdf::new(&p.magnitudes)?;
        let upper = p.model_full.grid().last().copied().unwrap_or(1.0);
        let n = grid_points.max(2);
        for j in 0..n {
            let t = upper * j as f64 / (n - 1) as f64;
            writeln!(
                out,
                "{},{t:.6},{:.6},{:.6},{:.6}",
                p.snr_db,
                ecdf.at(t),
                p.model_full.cdf_at(t),
                p.model_no_isi.cdf_at(t)
            )?;
        }
    }
    Ok(())
}

/// Sup-distances: `snr_db,emse,residual_isi,noise_enh,total,sup_full,sup_no_isi,model_gap`.
pub fn write_fig1_summary<W: Write>(points: &[Fig1Point], out: &mut W) -> Result<()> {
    writeln!(out, "snr_db,emse,residual_isi,noise_enh,total,sup_full,sup_no_isi,model_gap")?;
    for p in points {
        let v = p.variance;
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6},{:.6},{:.6}",
            p.snr_db, v.emse, v.residual_isi, v.noise_enhancement, v.total, p.sup_full, p.sup_no_isi, p.model_gap
        )?;
    }
    Ok(())
}
