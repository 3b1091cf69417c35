//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Parser;

use super::fig1::{run_fig1, write_fig1_csv, write_fig1_summary, Fig1Config};
use super::{default_levels, dump_equalizer, parse_snr_grid, run_experiment, sidecar_path, ChannelSpec, ClassifierKind, ExperimentConfig};
use crate::channel::{ChannelModel, ChannelRealization};
use crate::distributions::{default_snr_grid, CachePolicy, TableSet};
use crate::error::{Error, Result};
use crate::signals::ModClass;

#[derive(Debug, Parser)]
#[command(
    name = "cmarck",
    version,
    about = "Blind QAM/PSK level classification with a CMA equalizer and an rcK classifier"
)]
struct Args {
    /// Channel model: ch1, ch2, ch3 or identity.
    #[arg(long, default_value = "ch1")]
    channel: String,
    /// Fixed channel taps, one `re im` pair per line (overrides --channel).
    #[arg(long, value_name = "PATH")]
    channel_file: Option<PathBuf>,
    /// Modulation family: qam or psk.
    #[arg(long = "mod", default_value = "qam")]
    mod_class: String,
    /// Candidate orders, comma separated (default 4,16,64 or 2,4,8).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// SNR points in dB: min:step:max, a comma list, or inf.
    #[arg(long, default_value = "20", allow_hyphen_values = true)]
    snr: String,
    #[arg(long, default_value_t = 500)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma separated subset of cma-rck, zf-rck, c63.
    #[arg(long, default_value = "cma-rck", value_delimiter = ',')]
    classifiers: Vec<String>,
    /// Confusion CSV; the summary and metadata go next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Equalizer length L.
    #[arg(long, default_value_t = 20)]
    taps: usize,
    /// CMA updates M (also the number of classified outputs).
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-4)]
    mu: f64,
    /// Run the CDF-model comparison instead of a sweep.
    #[arg(long)]
    fig1: bool,
    /// Recompute cached CDF tables.
    #[arg(long, conflicts_with = "no_build")]
    rebuild_tables: bool,
    /// Fail instead of building missing CDF tables.
    #[arg(long)]
    no_build: bool,
    /// Truncation tolerance of the ZF inverse.
    #[arg(long, default_value_t = 1e-4)]
    lzf_tolerance: f64,
    /// Write every CDF table as one CSV.
    #[arg(long, value_name = "PATH")]
    dump_cdf: Option<PathBuf>,
    /// Write CMA taps and outputs of the first realization.
    #[arg(long, value_name = "PATH")]
    dump_equalizer: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    table_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn build_config(args: &Args) -> Result<ExperimentConfig> {
    let mod_class: ModClass = args.mod_class.parse()?;
    let channel = if let Some(path) = &args.channel_file {
        ChannelSpec::Fixed(ChannelRealization::from_file(path)?)
    } else if args.channel.eq_ignore_ascii_case("identity") {
        ChannelSpec::Fixed(ChannelRealization::identity())
    } else {
        match args.channel.parse::<ChannelModel>()? {
            ChannelModel::Custom => return Err(Error::Config("use --channel-file for custom taps".into())),
            m => ChannelSpec::Model(m),
        }
    };
    let mut cfg = ExperimentConfig::new(mod_class, channel, parse_snr_grid(&args.snr)?);
    cfg.levels = args.levels.clone().unwrap_or_else(|| default_levels(mod_class));
    cfg.taps = args.taps;
    cfg.iterations = args.iterations;
    cfg.mu = args.mu;
    cfg.realizations = args.realizations;
    cfg.master_seed = args.seed;
    cfg.classifiers = args
        .classifiers
        .iter()
        .map(|c| c.parse())
        .collect::<Result<Vec<ClassifierKind>>>()?;
    cfg.classifiers.sort();
    cfg.classifiers.dedup();
    cfg.output_path = Some(args.out.clone());
    cfg.zf.tolerance = args.lzf_tolerance;
    if let Some(dir) = &args.table_dir {
        cfg.table_dir = dir.clone();
    }
    cfg.cache = if args.rebuild_tables {
        CachePolicy::Rebuild
    } else if args.no_build {
        CachePolicy::RequireCached
    } else {
        CachePolicy::UseOrBuild
    };
    Ok(cfg)
}

fn fig1(args: &Args, cfg: &ExperimentConfig) -> Result<()> {
    let mut f = Fig1Config {
        taps: cfg.taps,
        mu: cfg.mu,
        seed: cfg.master_seed,
        ..Fig1Config::default()
    };
    if let ChannelSpec::Fixed(h) = &cfg.channel {
        f.channel = h.clone();
    }
    if args.snr != "20" {
        f.snrs_db = cfg.snr_grid_db.clone();
    }
    let points = run_fig1(&f)?;
    let mut out = BufWriter::new(fs::File::create(&args.out)?);
    write_fig1_csv(&points, 512, &mut out)?;
    out.flush()?;
    let mut sum = BufWriter::new(fs::File::create(sidecar_path(&args.out, "summary.csv"))?);
    write_fig1_summary(&points, &mut sum)?;
    sum.flush()?;
    for p in &points {
        println!(
            "{:>5} dB  sigma_eps^2 = {:.4}  sup(full) = {:.4}  sup(no ISI) = {:.4}  model gap = {:.4}",
            p.snr_db, p.variance.total, p.sup_full, p.sup_no_isi, p.model_gap
        );
    }
    Ok(())
}

fn execute(args: &Args) -> Result<()> {
    let cfg = build_config(args)?;
    if args.fig1 {
        return fig1(args, &cfg);
    }
    cfg.validate()?;
    if let Some(path) = &args.dump_cdf {
        let set = TableSet::load_or_build(
            &cfg.table_dir,
            cfg.mod_class,
            &cfg.levels,
            &default_snr_grid(),
            cfg.grid_size,
            cfg.cache,
        )?;
        let mut out = BufWriter::new(fs::File::create(path)?);
        set.dump_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.dump_equalizer {
        dump_equalizer(&cfg, path)?;
    }
    let result = run_experiment(&cfg)?;
    for row in result.summary() {
        println!(
            "{:<8} {:>6} dB  Pc = {:.3} +/- {:.3}  (n = {})",
            row.classifier.to_string(),
            row.snr_db,
            row.pc,
            row.ci_halfwidth,
            row.n
        );
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs; returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match args.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&args)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => execute(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cmarck: error: {e}");
            1
        }
    }
}
