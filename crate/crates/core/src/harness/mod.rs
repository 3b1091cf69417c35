//! Monte Carlo experiment orchestration and result serialization.
//!
//! Every realization gets its own ChaCha8 stream (`master_seed`, stream =
//! realization index), so results do not depend on the number of worker
//! threads. Within a realization the channel, the true level, the symbols
//! and a unit-variance noise sequence are drawn once and reused at every SNR
//! point by scaling the noise; all classifiers see the same received block.

pub mod cli;
pub mod fig1;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{complex_gaussian_vec, convolve_valid, snr_db_to_noise_variance, ChannelModel, ChannelRealization};
use crate::classifier::{cma_rck_classify, cumulant_classify, zf_rck_classify};
use crate::distributions::{default_snr_grid, CachePolicy, TableSet, DEFAULT_GRID_SIZE};
use crate::equalizer::{CmaConfig, ZfConfig};
use crate::error::{Error, Result};
use crate::signals::{Constellation, ModClass};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ClassifierKind {
    CmaRck,
    ZfRck,
    C63,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::CmaRck => "cma-rck",
            ClassifierKind::ZfRck => "zf-rck",
            ClassifierKind::C63 => "c63",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cma-rck" => Ok(ClassifierKind::CmaRck),
            "zf-rck" => Ok(ClassifierKind::ZfRck),
            "c63" => Ok(ClassifierKind::C63),
            other => Err(Error::Parse(format!("unknown classifier '{other}'"))),
        }
    }
}

/// Where each realization's channel comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Drawn (or, for `Ch3`, fixed) by one of the built-in models.
    Model(ChannelModel),
    /// The same taps for every realization.
    Fixed(ChannelRealization),
}

impl ChannelSpec {
    pub fn label(&self) -> String {
        match self {
            ChannelSpec::Model(m) => m.to_string(),
            ChannelSpec::Fixed(h) if h.taps() == [C64::new(1.0, 0.0)] => "identity".into(),
            ChannelSpec::Fixed(_) => "custom".into(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        match self {
            ChannelSpec::Model(m) => ChannelRealization::sample(*m, rng),
            ChannelSpec::Fixed(h) => Ok(h.clone()),
        }
    }
}

/// Parses `min:step:max`, a comma list, or a single value (`inf` allowed).
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        s.parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad SNR value '{s}': {e}")))
            .and_then(|v| {
                if v.is_nan() {
                    Err(Error::Parse("SNR is NaN".into()))
                } else {
                    Ok(v)
                }
            })
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [min, step, max] => {
            let (min, step, max) = (num(min)?, num(step)?, num(max)?);
            if !(step > 0.0) || !min.is_finite() || !max.is_finite() || !step.is_finite() {
                return Err(Error::Config(format!("invalid SNR range '{spec}'")));
            }
            let count = ((max - min) / step + 1e-9).floor();
            if count < 0.0 {
                Vec::new()
            } else {
                (0..=count as usize).map(|k| min + k as f64 * step).collect()
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Parse(format!("bad SNR spec '{spec}'"))),
    };
    if grid.is_empty() {
        return Err(Error::Config(format!("SNR spec '{spec}' is empty")));
    }
    Ok(grid)
}

/// Default cache directory for CDF tables.
pub fn default_table_dir() -> PathBuf {
    if let Some(d) = std::env::var_os("CMARCK_TABLE_DIR") {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("cmarck");
    }
    if let Some(d) = std::env::var_os("HOME") {
        return PathBuf::from(d).join(".cache").join("cmarck");
    }
    std::env::temp_dir().join("cmarck-tables")
}

pub fn default_levels(mod_class: ModClass) -> Vec<usize> {
    match mod_class {
        ModClass::Qam => vec![4, 16, 64],
        ModClass::Psk => vec![2, 4, 8],
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mod_class: ModClass,
    pub levels: Vec<usize>,
    pub channel: ChannelSpec,
    pub snr_grid_db: Vec<f64>,
    pub taps: usize,
    pub iterations: usize,
    pub mu: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub classifiers: Vec<ClassifierKind>,
    pub output_path: Option<PathBuf>,
    pub zf: ZfConfig,
    pub table_dir: PathBuf,
    pub cache: CachePolicy,
    pub grid_size: usize,
}

impl ExperimentConfig {
    /// 500 realizations of the standard receiver (`L = 20`, `M = 200`,
    /// `mu = 1e-4`) with the CMA-rcK classifier only.
    pub fn new(mod_class: ModClass, channel: ChannelSpec, snr_grid_db: Vec<f64>) -> Self {
        Self {
            mod_class,
            levels: default_levels(mod_class),
            channel,
            snr_grid_db,
            taps: 20,
            iterations: 200,
            mu: 1e-4,
            realizations: 500,
            master_seed: 0,
            classifiers: vec![ClassifierKind::CmaRck],
            output_path: None,
            zf: ZfConfig::default(),
            table_dir: default_table_dir(),
            cache: CachePolicy::UseOrBuild,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }

    pub fn cma(&self) -> CmaConfig {
        CmaConfig::new(self.taps, self.mu, self.iterations)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be >= 1".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::Config("levels must be nonempty".into()));
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return Err(Error::Config("levels must be distinct".into()));
        }
        for &l in &self.levels {
            Constellation::new(self.mod_class, l)?;
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::Config("SNR grid must be nonempty and finite or +inf".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers selected".into()));
        }
        if self.mod_class == ModClass::Psk && self.classifiers.contains(&ClassifierKind::C63) {
            return Err(Error::Unsupported(
                "the C63 cumulant baseline cannot distinguish PSK orders".into(),
            ));
        }
        if let ChannelSpec::Model(ChannelModel::Custom) = self.channel {
            return Err(Error::Config("custom channels need explicit taps".into()));
        }
        self.cma().validate()
    }

    fn tables(&self) -> Result<TableSet> {
        TableSet::load_or_build(
            &self.table_dir,
            self.mod_class,
            &self.levels,
            &default_snr_grid(),
            self.grid_size,
            self.cache,
        )
    }
}

/// Confusion counts plus accuracy summary of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub channel_label: String,
    pub mod_class: ModClass,
    pub levels: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    pub classifiers: Vec<ClassifierKind>,
    pub realizations: usize,
    /// `(classifier, snr index, true level, predicted level) -> count`
    pub counts: BTreeMap<(ClassifierKind, usize, usize, usize), usize>,
}

/// One row of the summary file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub classifier: ClassifierKind,
    pub snr_db: f64,
    pub pc: f64,
    pub ci_halfwidth: f64,
    pub n: usize,
}

/// Half-width of the Wilson score interval at 95% confidence.
pub fn wilson_halfwidth(successes: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = 1.959963984540054;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

impl ExperimentResult {
    pub fn correct(&self, classifier: ClassifierKind, snr_idx: usize) -> usize {
        self.levels
            .iter()
            .map(|&l| self.counts.get(&(classifier, snr_idx, l, l)).copied().unwrap_or(0))
            .sum()
    }

    pub fn pc(&self, classifier: ClassifierKind, snr_idx: usize) -> f64 {
        self.correct(classifier, snr_idx) as f64 / self.realizations as f64
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for &c in &self.classifiers {
            for (k, &snr) in self.snr_grid_db.iter().enumerate() {
                let hits = self.correct(c, k);
                rows.push(SummaryRow {
                    classifier: c,
                    snr_db: snr,
                    pc: hits as f64 / self.realizations as f64,
                    ci_halfwidth: wilson_halfwidth(hits, self.realizations),
                    n: self.realizations,
                });
            }
        }
        rows
    }

    /// Confusion CSV with every cell, zeros included.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "channel_model,mod_class,snr_db,classifier,true_level,predicted_level,count")?;
        for &c in &self.classifiers {
            for (k, &snr) in self.snr_grid_db.iter().enumerate() {
                for &t in &self.levels {
                    for &p in &self.levels {
                        let n = self.counts.get(&(c, k, t, p)).copied().unwrap_or(0);
                        writeln!(out, "{},{},{snr},{c},{t},{p},{n}", self.channel_label, self.mod_class)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "classifier,snr_db,pc,ci_halfwidth,n")?;
        for r in self.summary() {
            writeln!(out, "{},{},{:.6},{:.6},{}", r.classifier, r.snr_db, r.pc, r.ci_halfwidth, r.n)?;
        }
        Ok(())
    }
}

/// `results.csv` -> `results.summary.csv` (and likewise for other suffixes).
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    channel: String,
    mod_class: String,
    levels: &'a [usize],
    snr_grid_db: Vec<String>,
    taps: usize,
    iterations: usize,
    mu: f64,
    realizations: usize,
    master_seed: u64,
    classifiers: Vec<String>,
    lzf_tolerance: f64,
    grid_size: usize,
}

fn write_outputs(cfg: &ExperimentConfig, result: &ExperimentResult, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    result.write_csv(&mut out)?;
    out.flush()?;
    let mut sum = BufWriter::new(fs::File::create(sidecar_path(path, "summary.csv"))?);
    result.write_summary_csv(&mut sum)?;
    sum.flush()?;
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        channel: result.channel_label.clone(),
        mod_class: cfg.mod_class.to_string(),
        levels: &cfg.levels,
        snr_grid_db: cfg.snr_grid_db.iter().map(|s| s.to_string()).collect(),
        taps: cfg.taps,
        iterations: cfg.iterations,
        mu: cfg.mu,
        realizations: cfg.realizations,
        master_seed: cfg.master_seed,
        classifiers: cfg.classifiers.iter().map(|c| c.to_string()).collect(),
        lzf_tolerance: cfg.zf.tolerance,
        grid_size: cfg.grid_size,
    };
    fs::write(sidecar_path(path, "meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// One realization's draws, shared by every SNR point and classifier.
pub struct Realization {
    pub channel: ChannelRealization,
    pub level: usize,
    pub symbols: Vec<C64>,
    pub clean: Vec<C64>,
    /// Unit-variance noise, scaled per SNR.
    pub unit_noise: Vec<C64>,
}

impl Realization {
    /// Deterministic draw for realization `index` of `master_seed`.
    pub fn draw(cfg: &ExperimentConfig, index: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
        rng.set_stream(index as u64);
        let channel = cfg.channel.draw(&mut rng)?;
        let level = cfg.levels[rng.random_range(0..cfg.levels.len())];
        let c = Constellation::new(cfg.mod_class, level)?;
        let n = cfg.taps * cfg.iterations;
        let symbols = c.draw(n + channel.len() - 1, &mut rng);
        let clean = convolve_valid(&symbols, &channel)?;
        let unit_noise = complex_gaussian_vec(n, 1.0, &mut rng);
        Ok(Self {
            channel,
            level,
            symbols,
            clean,
            unit_noise,
        })
    }

    pub fn received(&self, noise_var: f64) -> Vec<C64> {
        if noise_var == 0.0 {
            return self.clean.clone();
        }
        let sd = noise_var.sqrt();
        self.clean.iter().zip(&self.unit_noise).map(|(x, v)| x + v * sd).collect()
    }
}

type Predictions = Vec<(ClassifierKind, usize, usize)>;

fn classify_realization(cfg: &ExperimentConfig, tables: &TableSet, index: usize) -> Result<(usize, Predictions)> {
    let r = Realization::draw(cfg, index)?;
    let cma = cfg.cma();
    let mut preds = Vec::with_capacity(cfg.snr_grid_db.len() * cfg.classifiers.len());
    for (k, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let var = snr_db_to_noise_variance(snr);
        let x = r.received(var);
        for &c in &cfg.classifiers {
            let chosen = match c {
                ClassifierKind::CmaRck => cma_rck_classify(&x, var, &cma, tables)?.1.chosen_level,
                ClassifierKind::ZfRck => {
                    zf_rck_classify(&x, &r.channel, var, cfg.taps, cfg.iterations, &cfg.zf, tables)?.chosen_level
                }
                ClassifierKind::C63 => cumulant_classify(&x, cfg.mod_class, &cfg.levels)?.chosen_level,
            };
            preds.push((c, k, chosen));
        }
    }
    Ok((r.level, preds))
}

/// Runs the sweep and, when `output_path` is set, writes the confusion CSV,
/// the summary CSV and a JSON metadata sidecar next to it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let tables = cfg.tables()?;
    let per_realization = (0..cfg.realizations)
        .into_par_iter()
        .map(|i| classify_realization(cfg, &tables, i))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for (truth, preds) in per_realization {
        for (c, k, p) in preds {
            *counts.entry((c, k, truth, p)).or_insert(0) += 1;
        }
    }
    let result = ExperimentResult {
        channel_label: cfg.channel.label(),
        mod_class: cfg.mod_class,
        levels: cfg.levels.clone(),
        snr_grid_db: cfg.snr_grid_db.clone(),
        classifiers: cfg.classifiers.clone(),
        realizations: cfg.realizations,
        counts,
    };
    if let Some(path) = &cfg.output_path {
        write_outputs(cfg, &result, path)?;
    }
    Ok(result)
}

/// Writes the CMA taps and equalized outputs of realization 0 at every SNR
/// point: `snr_db,kind,index,re,im` with `kind` one of `tap`/`output`.
pub fn dump_equalizer(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    cfg.validate()?;
    let r = Realization::draw(cfg, 0)?;
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "snr_db,kind,index,re,im")?;
    for &snr in &cfg.snr_grid_db {
        let var = snr_db_to_noise_variance(snr);
        let run = crate::equalizer::cma_run(&r.received(var), &cfg.cma(), var)?;
        for (i, w) in run.taps.iter().enumerate() {
            writeln!(out, "{snr},tap,{i},{:?},{:?}", w.re, w.im)?;
        }
        for (i, y) in run.output.iter().enumerate() {
            writeln!(out, "{snr},output,{i},{:?},{:?}", y.re, y.im)?;
        }
    }
    out.flush()?;
    Ok(())
}
