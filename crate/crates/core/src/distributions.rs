//! Signal features, theoretical feature CDFs, empirical CDFs and rcK
//! testpoints.
//!
//! A [`FeatureCdfTable`] tabulates `F(t) = Pr(f(s + g) <= t)` for one
//! constellation, where `g ~ CN(0, sigma_g^2)`, on a uniform grid:
//!
//! * magnitude feature: a mixture of Rician CDFs, one per constellation
//!   ring, integrated cell by cell with Gauss-Legendre quadrature;
//! * phase-difference feature: the wrapped difference of two independent
//!   noisy-symbol phases. The single-symbol phase density is known in closed
//!   form; its circular autocorrelation is taken with an FFT (spectrally
//!   accurate for periodic densities) and integrated with Simpson's rule.
//!
//! Tables for a whole SNR grid live in a [`TableSet`], which can be cached on
//! disk as CSV.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::signals::{Constellation, ModClass};
use crate::special::gauss_legendre5;
use crate::C64;

/// Default number of grid points per table.
pub const DEFAULT_GRID_SIZE: usize = 4096;

/// Which scalar feature of the equalized symbols is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    /// `|y(i)|`, used for QAM.
    Magnitude,
    /// `arg y(i) - arg y(i-1)` wrapped into `[-pi, pi)`, used for PSK.
    PhaseDiff,
}

impl FeatureKind {
    pub fn for_class(class: ModClass) -> Self {
        match class {
            ModClass::Qam => FeatureKind::Magnitude,
            ModClass::Psk => FeatureKind::PhaseDiff,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Magnitude => "magnitude",
            FeatureKind::PhaseDiff => "phase_diff",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(FeatureKind::Magnitude),
            "phase_diff" => Ok(FeatureKind::PhaseDiff),
            other => Err(Error::Parse(format!("unknown feature kind '{other}'"))),
        }
    }
}

/// Angles this close below `pi` fold onto `-pi`.
const PI_FOLD: f64 = 1e-12;

/// Wraps an angle into `[-pi, pi)`.
///
/// A lattice difference of exactly `pi` (e.g. between antipodal PSK points)
/// comes out of `arg` as either `pi - eps` or `-pi + eps` depending on
/// rounding; both are folded onto `-pi` so that noiseless inputs land on
/// one side of the cut.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if !(-PI + PI_FOLD..PI - PI_FOLD).contains(&w) {
        -PI
    } else {
        w
    }
}

/// Feature sequence of `y`: `M` magnitudes or `M-1` phase differences.
pub fn extract_feature(y: &[C64], kind: FeatureKind) -> Result<Vec<f64>> {
    match kind {
        FeatureKind::Magnitude => {
            if y.is_empty() {
                return Err(Error::Input("no samples to extract features from".into()));
            }
            Ok(y.iter().map(|v| v.norm()).collect())
        }
        FeatureKind::PhaseDiff => {
            if y.len() < 2 {
                return Err(Error::Input("phase differences need at least 2 samples".into()));
            }
            // arg(y_i conj(y_{i-1})) is the wrapped difference; a common
            // rotation cancels inside the product.
            Ok(y.windows(2)
                .map(|w| wrap_phase((w[1] * w[0].conj()).arg()))
                .collect())
        }
    }
}

/// How a table's values were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMethod {
    /// Cell-wise Gauss-Legendre integration of the Rician mixture density.
    Quadrature,
    /// FFT autocorrelation of the noisy-phase density plus Simpson
    /// integration.
    Convolution,
    /// Noiseless step function.
    Exact,
}

impl fmt::Display for CdfMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CdfMethod::Quadrature => "quadrature",
            CdfMethod::Convolution => "convolution",
            CdfMethod::Exact => "exact",
        })
    }
}

impl FromStr for CdfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(CdfMethod::Quadrature),
            "convolution" => Ok(CdfMethod::Convolution),
            "exact" => Ok(CdfMethod::Exact),
            other => Err(Error::Parse(format!("unknown CDF method '{other}'"))),
        }
    }
}

/// Theoretical CDF of one feature for one level at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCdfTable {
    pub mod_class: ModClass,
    pub level: usize,
    pub snr_db: f64,
    pub kind: FeatureKind,
    pub method: CdfMethod,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl FeatureCdfTable {
    /// Checks the table invariants: strictly increasing grid, values
    /// nondecreasing inside `[0, 1]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mod_class: ModClass,
        level: usize,
        snr_db: f64,
        kind: FeatureKind,
        method: CdfMethod,
        grid: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Input(format!(
                "table needs matching grid/values of length >= 2 (got {} / {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("table grid is not strictly increasing".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Input("table values decrease".into()));
        }
        if values[0] < 0.0 || values[values.len() - 1] > 1.0 {
            return Err(Error::Input("table values leave [0, 1]".into()));
        }
        Ok(Self {
            mod_class,
            level,
            snr_db,
            kind,
            method,
            grid,
            values,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation; 0 left of the grid and 1 right of it (the
    /// phase table closes at `(pi, 1)`).
    pub fn cdf_at(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if t < self.grid[0] {
            return 0.0;
        }
        let idx = self.grid.partition_point(|&g| g <= t);
        if idx == n {
            let (end_t, end_v) = match self.kind {
                FeatureKind::PhaseDiff => (PI, 1.0),
                FeatureKind::Magnitude => return 1.0,
            };
            if t >= end_t {
                return end_v;
            }
            let (t0, v0) = (self.grid[n - 1], self.values[n - 1]);
            return v0 + (end_v - v0) * (t - t0) / (end_t - t0);
        }
        let (t0, t1) = (self.grid[idx - 1], self.grid[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Theoretical CDF table at transmit-style SNR `snr_db` (`sigma_g^2 =
/// 10^(-snr/10)`).
pub fn theoretical_cdf(
    c: &Constellation,
    snr_db: f64,
    kind: FeatureKind,
    grid_size: usize,
) -> Result<FeatureCdfTable> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Input(format!("invalid SNR {snr_db} dB")));
    }
    let var = crate::channel::snr_db_to_noise_variance(snr_db);
    theoretical_cdf_with_variance(c, var, snr_db, kind, grid_size)
}

/// Theoretical CDF table for an explicit noise variance; `snr_label` is only
/// recorded in the table.
pub fn theoretical_cdf_with_variance(
    c: &Constellation,
    noise_var: f64,
    snr_label: f64,
    kind: FeatureKind,
    grid_size: usize,
) -> Result<FeatureCdfTable> {
    let upper = magnitude_upper(std::slice::from_ref(c), noise_var);
    cdf_on_range(c, noise_var, snr_label, kind, grid_size, upper)
}

/// Tables for several alphabets on one shared grid, as testpoint search
/// requires. The magnitude grid spans the widest alphabet.
pub fn theoretical_cdfs(
    cs: &[Constellation],
    snr_db: f64,
    kind: FeatureKind,
    grid_size: usize,
) -> Result<Vec<FeatureCdfTable>> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Input(format!("invalid SNR {snr_db} dB")));
    }
    let var = crate::channel::snr_db_to_noise_variance(snr_db);
    let upper = magnitude_upper(cs, var);
    cs.iter()
        .map(|c| cdf_on_range(c, var, snr_db, kind, grid_size, upper))
        .collect()
}

fn magnitude_upper(cs: &[Constellation], noise_var: f64) -> f64 {
    cs.iter().map(|c| c.max_magnitude()).fold(0.0, f64::max) + 5.0 * noise_var.sqrt()
}

fn cdf_on_range(
    c: &Constellation,
    noise_var: f64,
    snr_label: f64,
    kind: FeatureKind,
    grid_size: usize,
    magnitude_upper: f64,
) -> Result<FeatureCdfTable> {
    if grid_size < 256 {
        return Err(Error::Config(format!("grid size must be >= 256, got {grid_size}")));
    }
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::Input(format!("invalid noise variance {noise_var}")));
    }
    let (method, grid, values) = match kind {
        FeatureKind::Magnitude => magnitude_cdf(c, noise_var, grid_size, magnitude_upper),
        FeatureKind::PhaseDiff => phase_diff_cdf(c, noise_var, grid_size)?,
    };
    FeatureCdfTable::new(c.mod_class(), c.order(), snr_label, kind, method, grid, values)
}

/// Density of `|nu + g|` with `g ~ CN(0, 2 s2)` (Rician, per-dimension
/// variance `s2`).
pub fn rician_pdf(r: f64, nu: f64, s2: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let d = r - nu;
    (r / s2) * (-(d * d) / (2.0 * s2)).exp() * crate::special::bessel_i0e(r * nu / s2)
}

/// `Pr(|c + g| <= t)` for `|c| = radius`, `g ~ CN(0, noise_var)`, by adaptive
/// quadrature. Independent of the tabulated route.
pub fn rician_cdf(radius: f64, noise_var: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if noise_var == 0.0 {
        return if radius <= t { 1.0 } else { 0.0 };
    }
    let s2 = 0.5 * noise_var;
    let sd = s2.sqrt();
    // Essentially all mass lies within 12 per-dimension deviations of the
    // ring (or of 0 for small rings).
    let lo = (radius - 12.0 * sd).max(0.0);
    let hi = radius + 12.0 * sd;
    if t <= lo {
        return 0.0;
    }
    let upper = t.min(hi);
    let f = |r: f64| rician_pdf(r, radius, s2);
    crate::special::adaptive_simpson(&f, lo, upper, 1e-10).min(1.0)
}

fn magnitude_cdf(c: &Constellation, noise_var: f64, grid_size: usize, upper: f64) -> (CdfMethod, Vec<f64>, Vec<f64>) {
    let step = upper / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|j| j as f64 * step).collect();
    let rings = c.magnitude_rings();
    if noise_var == 0.0 {
        let values = grid
            .iter()
            .map(|&t| {
                rings
                    .iter()
                    .filter(|(r, _)| *r <= t + 1e-12)
                    .map(|(_, w)| w)
                    .sum::<f64>()
                    .min(1.0)
            })
            .collect();
        return (CdfMethod::Exact, grid, values);
    }
    let s2 = 0.5 * noise_var;
    let mut values = vec![0.0; grid_size];
    for &(radius, weight) in &rings {
        let f = |r: f64| rician_pdf(r, radius, s2);
        let mut acc = 0.0;
        for j in 1..grid_size {
            acc += gauss_legendre5(&f, grid[j - 1], grid[j]);
            values[j] += weight * acc;
        }
    }
    for v in values.iter_mut() {
        *v = v.min(1.0);
    }
    (CdfMethod::Quadrature, grid, values)
}

/// Density of `arg(1 + g) `, `g ~ CN(0, 1/rho)`, at angle `phi`.
pub fn noisy_phase_pdf(phi: f64, rho: f64) -> f64 {
    let (s, cphi) = phi.sin_cos();
    (-rho).exp() / (2.0 * PI)
        + 0.5 * (rho / PI).sqrt() * cphi * (-rho * s * s).exp() * (1.0 + erf(rho.sqrt() * cphi))
}

fn phase_diff_cdf(c: &Constellation, noise_var: f64, grid_size: usize) -> Result<(CdfMethod, Vec<f64>, Vec<f64>)> {
    if c.mod_class() != ModClass::Psk {
        return Err(Error::Unsupported(
            "phase-difference tables are defined for PSK alphabets".into(),
        ));
    }
    let order = c.order();
    if !grid_size.is_multiple_of(order) {
        return Err(Error::Config(format!(
            "grid size {grid_size} must be a multiple of the PSK order {order}"
        )));
    }
    let step = 2.0 * PI / grid_size as f64;
    let grid: Vec<f64> = (0..grid_size).map(|j| -PI + j as f64 * step).collect();
    // Symbol phase differences are uniform over multiples of 2 pi / M.
    let offsets: Vec<f64> = (0..order)
        .map(|m| wrap_phase(2.0 * PI * m as f64 / order as f64))
        .collect();
    if noise_var == 0.0 {
        let values = grid
            .iter()
            .map(|&t| offsets.iter().filter(|&&o| o <= t + 1e-12).count() as f64 / order as f64)
            .collect();
        return Ok((CdfMethod::Exact, grid, values));
    }

    // Fine lattice at half the grid spacing so each grid cell has a
    // midpoint sample for Simpson's rule.
    let n = 2 * grid_size;
    let delta = 2.0 * PI / n as f64;
    let rho = 1.0 / noise_var;
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..n)
        .map(|j| rustfft::num_complex::Complex::new(noisy_phase_pdf(j as f64 * delta, rho), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for v in buf.iter_mut() {
        *v = rustfft::num_complex::Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    // Autocorrelation at lag k*delta (the density is even, so this is also
    // the density of the noise phase difference).
    let auto: Vec<f64> = buf.iter().map(|v| (v.re * delta / n as f64).max(0.0)).collect();
    let shift = n / order;
    // Density of the full wrapped difference at angle k*delta (mod 2 pi).
    let density = |k: usize| -> f64 {
        (0..order)
            .map(|m| auto[(k + n - (m * shift) % n) % n])
            .sum::<f64>()
            / order as f64
    };
    // Grid point j sits at -pi + j*step = (2j + grid_size) * delta mod 2 pi.
    let at = |fine: usize| density((fine + grid_size) % n);
    let mut cells = Vec::with_capacity(grid_size);
    for j in 0..grid_size {
        let (a, m, b) = (at(2 * j), at(2 * j + 1), at(2 * j + 2));
        cells.push(step / 6.0 * (a + 4.0 * m + b));
    }
    let total: f64 = cells.iter().sum();
    let mut values = Vec::with_capacity(grid_size);
    let mut acc = 0.0;
    for cell in cells.iter() {
        values.push((acc / total).min(1.0));
        acc += cell;
    }
    Ok((CdfMethod::Convolution, grid, values))
}

/// `(1/M) sum 1{x <= t}` over unsorted samples.
pub fn ecdf_at(samples: &[f64], t: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("ECDF of an empty sample".into()));
    }
    Ok(samples.iter().filter(|&&x| x <= t).count() as f64 / samples.len() as f64)
}

/// Sorted-sample ECDF for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("ECDF of an empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Input("NaN feature sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn at(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }

    /// Kolmogorov-Smirnov sup-distance to a tabulated CDF.
    pub fn sup_distance(&self, table: &FeatureCdfTable) -> f64 {
        self.sup_distance_to(|t| table.cdf_at(t))
    }

    pub fn sup_distance_to<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i + 1) as f64 / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }
}

/// `t_lp^(delta)`: the feature value where `(-1)^delta (F_l - F_p)` peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Testpoint {
    pub l: usize,
    pub p: usize,
    pub delta: u8,
    pub snr_db: f64,
    pub tau: f64,
    /// Grid index of `tau` in the tables it was computed from.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestpointTable {
    pub entries: Vec<Testpoint>,
}

impl TestpointTable {
    /// Testpoints involving level `l` in either role.
    pub fn for_level(&self, l: usize) -> impl Iterator<Item = &Testpoint> {
        self.entries.iter().filter(move |t| t.l == l || t.p == l)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Testpoints for every unordered pair of the given tables (in order), both
/// signs; ties go to the smallest grid value. Yields `2 * C(K, 2)` entries.
pub fn compute_testpoints(tables: &[FeatureCdfTable]) -> Result<TestpointTable> {
    let Some(first) = tables.first() else {
        return Ok(TestpointTable::default());
    };
    for t in tables {
        if t.grid != first.grid || t.kind != first.kind || t.snr_db.to_bits() != first.snr_db.to_bits() {
            return Err(Error::Input(format!(
                "tables for levels {} and {} do not share grid, feature and SNR",
                first.level, t.level
            )));
        }
    }
    let mut entries = Vec::with_capacity(tables.len() * tables.len().saturating_sub(1));
    for (a, tl) in tables.iter().enumerate() {
        for tp in &tables[a + 1..] {
            for delta in 0..2u8 {
                let sign = if delta == 0 { 1.0 } else { -1.0 };
                let mut best = (0usize, f64::NEG_INFINITY);
                for (j, (fl, fp)) in tl.values.iter().zip(&tp.values).enumerate() {
                    let d = sign * (fl - fp);
                    if d > best.1 {
                        best = (j, d);
                    }
                }
                entries.push(Testpoint {
                    l: tl.level,
                    p: tp.level,
                    delta,
                    snr_db: tl.snr_db,
                    tau: tl.grid[best.0],
                    index: best.0,
                });
            }
        }
    }
    Ok(TestpointTable { entries })
}

/// Default SNR grid: -5 to 25 dB in 1 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (-5..=25).map(f64::from).collect()
}

/// All tables and testpoints for one set of candidate levels over an SNR
/// grid.
#[derive(Debug, Clone)]
pub struct TableSet {
    mod_class: ModClass,
    kind: FeatureKind,
    levels: Vec<usize>,
    snr_grid: Vec<f64>,
    grid_size: usize,
    /// `tables[snr][level]`
    tables: Vec<Vec<FeatureCdfTable>>,
    testpoints: Vec<TestpointTable>,
}

/// Whether a cached table set may be used, must be rebuilt, or must exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    UseOrBuild,
    Rebuild,
    RequireCached,
}

impl TableSet {
    pub fn build(mod_class: ModClass, levels: &[usize], snr_grid: &[f64], grid_size: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("no candidate levels".into()));
        }
        if snr_grid.is_empty() || snr_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("SNR grid must be nonempty and increasing".into()));
        }
        let constellations = levels
            .iter()
            .map(|&m| Constellation::new(mod_class, m))
            .collect::<Result<Vec<_>>>()?;
        let kind = FeatureKind::for_class(mod_class);
        let tables = snr_grid
            .par_iter()
            .map(|&snr| {
                theoretical_cdfs(&constellations, snr, kind, grid_size)
            })
            .collect::<Result<Vec<_>>>()?;
        let testpoints = tables
            .iter()
            .map(|t| compute_testpoints(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mod_class,
            kind,
            levels: levels.to_vec(),
            snr_grid: snr_grid.to_vec(),
            grid_size,
            tables,
            testpoints,
        })
    }

    pub fn mod_class(&self) -> ModClass {
        self.mod_class
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn snr_grid(&self) -> &[f64] {
        &self.snr_grid
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Tables for every level at SNR grid index `snr_idx`, in level order.
    pub fn tables_at(&self, snr_idx: usize) -> &[FeatureCdfTable] {
        &self.tables[snr_idx]
    }

    pub fn testpoints_at(&self, snr_idx: usize) -> &TestpointTable {
        &self.testpoints[snr_idx]
    }

    pub fn all_tables(&self) -> impl Iterator<Item = &FeatureCdfTable> {
        self.tables.iter().flatten()
    }

    /// Grid index whose SNR (dB) is nearest to the linear SNR `gamma`;
    /// out-of-range values snap to the ends.
    pub fn nearest_snr_index(&self, gamma: f64) -> usize {
        let db = if gamma.is_infinite() && gamma > 0.0 {
            f64::INFINITY
        } else if gamma > 0.0 {
            10.0 * gamma.log10()
        } else {
            f64::NEG_INFINITY
        };
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &g) in self.snr_grid.iter().enumerate() {
            let d = if db.is_infinite() {
                if db > 0.0 {
                    -g
                } else {
                    g
                }
            } else {
                (g - db).abs()
            };
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn manifest(mod_class: ModClass, levels: &[usize], snr_grid: &[f64], grid_size: usize) -> String {
        let kind = FeatureKind::for_class(mod_class);
        let levels: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
        let snrs: Vec<String> = snr_grid.iter().map(|s| format!("{s:?}")).collect();
        format!(
            "format=1\nmod_class={mod_class}\nkind={kind}\nlevels={}\nsnr_grid={}\ngrid_size={grid_size}\n",
            levels.join(","),
            snrs.join(",")
        )
    }

    /// Cache directory for these parameters under `root`.
    pub fn cache_dir(root: &Path, mod_class: ModClass, levels: &[usize], snr_grid: &[f64], grid_size: usize) -> PathBuf {
        let manifest = Self::manifest(mod_class, levels, snr_grid, grid_size);
        let digest = Sha256::digest(manifest.as_bytes());
        let hash: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        let levels: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
        root.join(format!("{mod_class}_{}_{hash}", levels.join("-")))
    }

    /// Loads the cached set under `root`, building (and saving) it when the
    /// policy allows.
    pub fn load_or_build(
        root: &Path,
        mod_class: ModClass,
        levels: &[usize],
        snr_grid: &[f64],
        grid_size: usize,
        policy: CachePolicy,
    ) -> Result<Self> {
        let dir = Self::cache_dir(root, mod_class, levels, snr_grid, grid_size);
        let manifest = Self::manifest(mod_class, levels, snr_grid, grid_size);
        let fresh = fs::read_to_string(dir.join("manifest.txt"))
            .map(|m| m == manifest)
            .unwrap_or(false);
        match policy {
            CachePolicy::UseOrBuild if fresh => {
                if let Ok(set) = Self::load(&dir) {
                    return Ok(set);
                }
            }
            CachePolicy::RequireCached => {
                if !fresh {
                    return Err(Error::Cache(format!("no table cache at {}", dir.display())));
                }
                return Self::load(&dir);
            }
            _ => {}
        }
        let set = Self::build(mod_class, levels, snr_grid, grid_size)?;
        set.save(&dir)?;
        Ok(set)
    }

    /// Writes one CSV per table, `testpoints.csv` and a manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::create_dir_all(dir)?;
        for table in self.all_tables() {
            let path = dir.join(format!("cdf_{}_{:?}.csv", table.level, table.snr_db));
            write_table_csv(table, &mut BufWriter::new(fs::File::create(path)?))?;
        }
        let mut tp = BufWriter::new(fs::File::create(dir.join("testpoints.csv"))?);
        writeln!(tp, "mod_class,kind,snr_db,l,p,delta,testpoint,index")?;
        for set in &self.testpoints {
            for t in &set.entries {
                writeln!(
                    tp,
                    "{},{},{:?},{},{},{},{:?},{}",
                    self.mod_class, self.kind, t.snr_db, t.l, t.p, t.delta, t.tau, t.index
                )?;
            }
        }
        tp.flush()?;
        // Manifest last: its presence marks a complete cache.
        fs::write(
            dir.join("manifest.txt"),
            Self::manifest(self.mod_class, &self.levels, &self.snr_grid, self.grid_size),
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
        let field = |key: &str| -> Result<String> {
            manifest
                .lines()
                .find_map(|l| l.strip_prefix(&format!("{key}=")))
                .map(str::to_string)
                .ok_or_else(|| Error::Cache(format!("manifest lacks '{key}'")))
        };
        let mod_class: ModClass = field("mod_class")?.parse()?;
        let kind: FeatureKind = field("kind")?.parse()?;
        let levels: Vec<usize> = parse_list(&field("levels")?)?;
        let snr_grid: Vec<f64> = parse_list(&field("snr_grid")?)?;
        let grid_size: usize = field("grid_size")?
            .parse()
            .map_err(|e| Error::Cache(format!("grid_size: {e}")))?;
        let mut tables = Vec::with_capacity(snr_grid.len());
        for &snr in &snr_grid {
            let row = levels
                .iter()
                .map(|&level| {
                    let path = dir.join(format!("cdf_{level}_{snr:?}.csv"));
                    read_table_csv(&mut BufReader::new(fs::File::open(&path)?))
                })
                .collect::<Result<Vec<_>>>()?;
            tables.push(row);
        }
        let mut by_snr: BTreeMap<u64, Vec<Testpoint>> = BTreeMap::new();
        let text = fs::read_to_string(dir.join("testpoints.csv"))?;
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Cache(format!("bad testpoint row '{line}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Cache(format!("{e}: '{line}'")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Cache(format!("{e}: '{line}'")));
            let snr_db = num(f[2])?;
            by_snr.entry(snr_db.to_bits()).or_default().push(Testpoint {
                snr_db,
                l: int(f[3])?,
                p: int(f[4])?,
                delta: int(f[5])? as u8,
                tau: num(f[6])?,
                index: int(f[7])?,
            });
        }
        let testpoints = snr_grid
            .iter()
            .map(|s| TestpointTable {
                entries: by_snr.remove(&s.to_bits()).unwrap_or_default(),
            })
            .collect();
        Ok(Self {
            mod_class,
            kind,
            levels,
            snr_grid,
            grid_size,
            tables,
            testpoints,
        })
    }

    /// All tables in one long-format CSV (`--dump-cdf`).
    pub fn dump_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "mod_class,level,snr_db,kind,tau,cdf")?;
        for t in self.all_tables() {
            for (g, v) in t.grid.iter().zip(&t.values) {
                writeln!(out, "{},{},{:?},{},{:?},{:?}", t.mod_class, t.level, t.snr_db, t.kind, g, v)?;
            }
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(|x| x.parse::<T>().map_err(|e| Error::Cache(format!("'{x}': {e}"))))
        .collect()
}

/// Header row, one metadata row, then `tau,cdf` pairs.
pub fn write_table_csv<W: Write>(t: &FeatureCdfTable, out: &mut W) -> Result<()> {
    writeln!(out, "mod_class,level,snr_db,kind,method")?;
    writeln!(out, "{},{},{:?},{},{}", t.mod_class, t.level, t.snr_db, t.kind, t.method)?;
    writeln!(out, "tau,cdf")?;
    for (g, v) in t.grid.iter().zip(&t.values) {
        writeln!(out, "{g:?},{v:?}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table_csv<R: BufRead>(input: &mut R) -> Result<FeatureCdfTable> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Cache("truncated table file".into()))
    };
    next()?;
    let meta = next()?;
    let m: Vec<&str> = meta.split(',').collect();
    if m.len() != 5 {
        return Err(Error::Cache(format!("bad table metadata '{meta}'")));
    }
    let mod_class: ModClass = m[0].parse()?;
    let level: usize = m[1].parse().map_err(|e| Error::Cache(format!("level: {e}")))?;
    let snr_db: f64 = m[2].parse().map_err(|e| Error::Cache(format!("snr: {e}")))?;
    let kind: FeatureKind = m[3].parse()?;
    let method: CdfMethod = m[4].parse()?;
    next()?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let Some((g, v)) = line.split_once(',') else {
            return Err(Error::Cache(format!("bad table row '{line}'")));
        };
        grid.push(g.parse().map_err(|e| Error::Cache(format!("{e}: '{line}'")))?);
        values.push(v.parse().map_err(|e| Error::Cache(format!("{e}: '{line}'")))?);
    }
    FeatureCdfTable::new(mod_class, level, snr_db, kind, method, grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian_vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qam(m: usize) -> Constellation {
        Constellation::new(ModClass::Qam, m).unwrap()
    }

    fn psk(m: usize) -> Constellation {
        Constellation::new(ModClass::Psk, m).unwrap()
    }

    fn synthetic(level: usize, f: impl Fn(f64) -> f64) -> FeatureCdfTable {
        let grid: Vec<f64> = (0..=1000).map(|j| j as f64 / 1000.0).collect();
        let values = grid.iter().map(|&t| f(t)).collect();
        FeatureCdfTable::new(ModClass::Qam, level, 0.0, FeatureKind::Magnitude, CdfMethod::Exact, grid, values).unwrap()
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), -PI);
        assert_eq!(wrap_phase(-PI), -PI);
        assert_eq!(wrap_phase(PI - 1e-15), -PI);
        assert_eq!(wrap_phase(-PI + 1e-15), -PI);
        let flip = C64::from_polar(1.0, PI / 2.0) * C64::from_polar(1.0, -PI / 2.0).conj();
        assert_eq!(wrap_phase(flip.arg()), -PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn features_of_clean_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = qam(4).draw(100, &mut rng);
        let mag = extract_feature(&y, FeatureKind::Magnitude).unwrap();
        assert_eq!(mag.len(), 100);
        assert!(mag.iter().all(|m| (m - 1.0).abs() < 1e-15));

        let y = psk(4).draw(100, &mut rng);
        let pd = extract_feature(&y, FeatureKind::PhaseDiff).unwrap();
        assert_eq!(pd.len(), 99);
        let lattice = [0.0, PI / 2.0, -PI / 2.0, -PI];
        assert!(pd.iter().all(|d| lattice.iter().any(|l| (d - l).abs() < 1e-12)));

        let rot = C64::from_polar(1.0, 0.7);
        let yr: Vec<C64> = y.iter().map(|v| v * rot).collect();
        let pdr = extract_feature(&yr, FeatureKind::PhaseDiff).unwrap();
        for (a, b) in pd.iter().zip(&pdr) {
            let d = wrap_phase(a - b).abs();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn feature_errors() {
        assert!(extract_feature(&[], FeatureKind::Magnitude).is_err());
        assert!(extract_feature(&[C64::new(1.0, 0.0)], FeatureKind::PhaseDiff).is_err());
    }

    #[test]
    fn ecdf_examples() {
        assert!((ecdf_at(&[1.0, 2.0, 3.0], 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ecdf_at(&[5.0, -1.0], f64::INFINITY).unwrap(), 1.0);
        assert!(ecdf_at(&[], 0.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        assert!((ecdf_at(&u, 0.3).unwrap() - 0.3).abs() < 0.005);
        let e = Ecdf::new(&u).unwrap();
        assert_eq!(e.at(0.3), ecdf_at(&u, 0.3).unwrap());
    }

    #[test]
    fn noiseless_qpsk_magnitude_is_unit_step() {
        let t = theoretical_cdf(&qam(4), f64::INFINITY, FeatureKind::Magnitude, 1024).unwrap();
        assert_eq!(t.method, CdfMethod::Exact);
        assert_eq!(t.cdf_at(0.999), 0.0);
        assert_eq!(t.cdf_at(1.0), 1.0);
        // Very high SNR tabulation approaches the same step.
        let hi = theoretical_cdf(&qam(4), 60.0, FeatureKind::Magnitude, 4096).unwrap();
        assert!(hi.cdf_at(0.99) < 1e-6);
        assert!(hi.cdf_at(1.01) > 1.0 - 1e-6);
    }

    #[test]
    fn magnitude_table_matches_monte_carlo() {
        let c = qam(16);
        let table = theoretical_cdf(&c, 20.0, FeatureKind::Magnitude, DEFAULT_GRID_SIZE).unwrap();
        assert_eq!(table.method, CdfMethod::Quadrature);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000_000;
        let s = c.draw(n, &mut rng);
        let g = complex_gaussian_vec(n, 0.01, &mut rng);
        let mag: Vec<f64> = s.iter().zip(&g).map(|(a, b)| (a + b).norm()).collect();
        let d = Ecdf::new(&mag).unwrap().sup_distance(&table);
        assert!(d <= 2e-3, "sup distance {d}");
    }

    #[test]
    fn magnitude_table_agrees_with_adaptive_quadrature() {
        for (order, snr) in [(4, -5.0), (16, 10.0), (64, 25.0)] {
            let c = qam(order);
            let table = theoretical_cdf(&c, snr, FeatureKind::Magnitude, DEFAULT_GRID_SIZE).unwrap();
            let var = crate::channel::snr_db_to_noise_variance(snr);
            for k in (0..DEFAULT_GRID_SIZE).step_by(97) {
                let t = table.grid()[k];
                let direct: f64 = c
                    .magnitude_rings()
                    .iter()
                    .map(|(r, w)| w * rician_cdf(*r, var, t))
                    .sum();
                assert!((direct - table.values()[k]).abs() < 1e-4, "{order} {snr} tau={t}: {direct} vs {}", table.values()[k]);
            }
        }
    }

    #[test]
    fn noisy_phase_density_matches_monte_carlo() {
        let rho = 4.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = complex_gaussian_vec(2_000_000, 1.0 / rho, &mut rng);
        let phases: Vec<f64> = g.iter().map(|v| (C64::new(1.0, 0.0) + v).arg()).collect();
        let e = Ecdf::new(&phases).unwrap();
        let f = |x: f64| noisy_phase_pdf(x, rho);
        for t in [-2.0, -0.5, 0.0, 0.3, 1.0] {
            let cdf = crate::special::adaptive_simpson(&f, -PI, t, 1e-10);
            assert!((cdf - e.at(t)).abs() < 2e-3, "t={t}: {cdf} vs {}", e.at(t));
        }
        let total = crate::special::adaptive_simpson(&f, -PI, PI, 1e-12);
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_diff_table_matches_monte_carlo() {
        for (order, snr) in [(2, 3.0), (4, 10.0), (8, 20.0)] {
            let c = psk(order);
            let table = theoretical_cdf(&c, snr, FeatureKind::PhaseDiff, DEFAULT_GRID_SIZE).unwrap();
            assert_eq!(table.method, CdfMethod::Convolution);
            let mut rng = ChaCha8Rng::seed_from_u64(5 + order as u64);
            let n = 2_000_000;
            let var = crate::channel::snr_db_to_noise_variance(snr);
            let s = c.draw(n + 1, &mut rng);
            let g = complex_gaussian_vec(n + 1, var, &mut rng);
            let y: Vec<C64> = s.iter().zip(&g).map(|(a, b)| a + b).collect();
            // Non-overlapping pairs keep the two symbols independent.
            let feats: Vec<f64> = y
                .chunks_exact(2)
                .map(|p| wrap_phase((p[1] * p[0].conj()).arg()))
                .collect();
            let d = Ecdf::new(&feats).unwrap().sup_distance(&table);
            assert!(d < 3e-3, "{order}-PSK {snr} dB: {d}");
        }
    }

    #[test]
    fn bpsk_phase_diff_half_mass_in_upper_half() {
        for snr in [-5.0, 0.0, 8.0, 25.0] {
            let t = theoretical_cdf(&psk(2), snr, FeatureKind::PhaseDiff, DEFAULT_GRID_SIZE).unwrap();
            let below_zero = t.cdf_at(-1e-9);
            let below_pi = t.cdf_at(PI - 1e-9);
            assert!((below_pi - below_zero - 0.5).abs() < 1e-3, "{snr}: {}", below_pi - below_zero);
        }
    }

    #[test]
    fn higher_snr_is_closer_to_the_step() {
        let step = |t: f64| if t >= 1.0 { 1.0 } else { 0.0 };
        let mut last = f64::INFINITY;
        for snr in [0.0, 5.0, 10.0, 20.0] {
            let table = theoretical_cdf(&qam(4), snr, FeatureKind::Magnitude, DEFAULT_GRID_SIZE).unwrap();
            let d = table
                .grid()
                .iter()
                .zip(table.values())
                .map(|(&t, &v)| (v - step(t)).abs())
                .fold(0.0, f64::max);
            // The step itself sits at a grid point, where the gap is ~1/2 for
            // any noise level, so measure away from it.
            let off: f64 = table
                .grid()
                .iter()
                .zip(table.values())
                .filter(|(t, _)| (*t - 1.0).abs() > 0.1)
                .map(|(&t, &v)| (v - step(t)).abs())
                .fold(0.0, f64::max);
            assert!(d <= 1.0);
            assert!(off < last, "{snr} dB: {off} !< {last}");
            last = off;
        }
    }

    #[test]
    fn grid_size_is_validated() {
        assert!(theoretical_cdf(&qam(4), 10.0, FeatureKind::Magnitude, 100).is_err());
        assert!(matches!(
            theoretical_cdf(&qam(16), 10.0, FeatureKind::PhaseDiff, 1024),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn synthetic_testpoints() {
        let f1 = synthetic(1, |t| t);
        let f2 = synthetic(2, |t| t * t);
        let tp = compute_testpoints(&[f1.clone(), f2.clone()]).unwrap();
        assert_eq!(tp.len(), 2);
        assert_eq!(tp.entries[0].delta, 0);
        assert!((tp.entries[0].tau - 0.5).abs() < 1e-12);
        // tau^2 - tau peaks (at 0) on both grid edges; the smaller wins.
        assert_eq!(tp.entries[1].tau, 0.0);
        // With the pair order reversed, the negative deviation is tau - tau^2.
        let rev = compute_testpoints(&[f2, f1]).unwrap();
        assert!((rev.entries[1].tau - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_tables_tie_to_smallest_tau() {
        let a = synthetic(4, |t| t);
        let mut b = a.clone();
        b.level = 16;
        let tp = compute_testpoints(&[a, b]).unwrap();
        assert!(tp.entries.iter().all(|t| t.tau == 0.0 && t.index == 0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = synthetic(4, |t| t);
        let grid: Vec<f64> = (0..=500).map(|j| j as f64 / 500.0).collect();
        let b = FeatureCdfTable::new(ModClass::Qam, 16, 0.0, FeatureKind::Magnitude, CdfMethod::Exact, grid.clone(), grid).unwrap();
        assert!(compute_testpoints(&[a, b]).is_err());
    }

    #[test]
    fn three_levels_give_six_testpoints_per_snr() {
        let set = TableSet::build(ModClass::Qam, &[4, 16, 64], &[0.0, 10.0, 20.0], 1024).unwrap();
        for k in 0..3 {
            let tp = set.testpoints_at(k);
            assert_eq!(tp.len(), 6);
            let tables = set.tables_at(k);
            for t in &tp.entries {
                assert!(t.tau >= tables[0].grid()[0] && t.tau <= *tables[0].grid().last().unwrap());
            }
        }
        let psk = TableSet::build(ModClass::Psk, &[2, 4, 8], &[10.0], 1024).unwrap();
        assert_eq!(psk.testpoints_at(0).len(), 6);
    }

    #[test]
    fn table_invariants_are_enforced() {
        let grid = vec![0.0, 1.0, 2.0];
        let mk = |g: Vec<f64>, v: Vec<f64>| FeatureCdfTable::new(ModClass::Qam, 4, 0.0, FeatureKind::Magnitude, CdfMethod::Exact, g, v);
        assert!(mk(grid.clone(), vec![0.0, 0.5, 1.0]).is_ok());
        assert!(mk(grid.clone(), vec![0.0, 0.6, 0.5]).is_err());
        assert!(mk(grid.clone(), vec![-0.1, 0.5, 1.0]).is_err());
        assert!(mk(grid.clone(), vec![0.0, 0.5, 1.1]).is_err());
        assert!(mk(vec![0.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]).is_err());
    }

    #[test]
    fn nearest_snr_snaps_and_clamps() {
        let set = TableSet::build(ModClass::Qam, &[4, 16], &default_snr_grid(), 256).unwrap();
        assert_eq!(set.snr_grid()[set.nearest_snr_index(100.0)], 20.0);
        assert_eq!(set.snr_grid()[set.nearest_snr_index(10f64.powf(1.26))], 13.0);
        assert_eq!(set.snr_grid()[set.nearest_snr_index(1e9)], 25.0);
        assert_eq!(set.snr_grid()[set.nearest_snr_index(f64::INFINITY)], 25.0);
        assert_eq!(set.snr_grid()[set.nearest_snr_index(1e-3)], -5.0);
        assert_eq!(set.snr_grid()[set.nearest_snr_index(-2.0)], -5.0);
    }

    #[test]
    fn cache_round_trip_and_policies() {
        let dir = tempfile::tempdir().unwrap();
        let snrs = [0.0, 12.5];
        let err = TableSet::load_or_build(dir.path(), ModClass::Psk, &[2, 4], &snrs, 256, CachePolicy::RequireCached);
        assert!(matches!(err, Err(Error::Cache(_))));
        let built = TableSet::load_or_build(dir.path(), ModClass::Psk, &[2, 4], &snrs, 256, CachePolicy::UseOrBuild).unwrap();
        let loaded = TableSet::load_or_build(dir.path(), ModClass::Psk, &[2, 4], &snrs, 256, CachePolicy::RequireCached).unwrap();
        for (a, b) in built.all_tables().zip(loaded.all_tables()) {
            assert_eq!(a, b);
        }
        for k in 0..snrs.len() {
            assert_eq!(built.testpoints_at(k), loaded.testpoints_at(k));
        }
        // Different grid parameters key a different directory.
        let other = TableSet::cache_dir(dir.path(), ModClass::Psk, &[2, 4], &snrs, 512);
        assert_ne!(other, TableSet::cache_dir(dir.path(), ModClass::Psk, &[2, 4], &snrs, 256));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tables_are_monotone_and_bounded(order_idx in 0usize..3, snr in -5.0f64..25.0, psk_kind in any::<bool>()) {
            let (c, kind) = if psk_kind {
                (psk([2, 4, 8][order_idx]), FeatureKind::PhaseDiff)
            } else {
                (qam([4, 16, 64][order_idx]), FeatureKind::Magnitude)
            };
            let t = theoretical_cdf(&c, snr, kind, 1024).unwrap();
            prop_assert!(t.values().windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(t.values()[0] >= 0.0 && *t.values().last().unwrap() <= 1.0);
            // The phase table stops one cell short of pi, where BPSK still
            // carries mass, so check the closed end instead.
            let end = match kind {
                FeatureKind::Magnitude => *t.values().last().unwrap(),
                FeatureKind::PhaseDiff => t.cdf_at(PI),
            };
            prop_assert!(end > 0.99);
        }

        #[test]
        fn ecdf_of_model_samples_is_close_at_testpoints(seed in 0u64..10_000) {
            // One DKW-style draw: M = 200 samples from F_l, sup over the
            // level's testpoints within 3/sqrt(M).
            let c = qam(16);
            let set = TableSet::build(ModClass::Qam, &[4, 16, 64], &[15.0], 1024).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 200;
            let s = c.draw(m, &mut rng);
            let g = complex_gaussian_vec(m, crate::channel::snr_db_to_noise_variance(15.0), &mut rng);
            let f: Vec<f64> = s.iter().zip(&g).map(|(a, b)| (a + b).norm()).collect();
            let e = Ecdf::new(&f).unwrap();
            let table = &set.tables_at(0)[1];
            let sup = set.testpoints_at(0).for_level(16)
                .map(|t| (e.at(t.tau) - table.values()[t.index]).abs())
                .fold(0.0, f64::max);
            prop_assert!(sup <= 3.0 / (m as f64).sqrt());
        }
    }

    #[test]
    fn testpoints_stable_under_grid_refinement() {
        let c: Vec<Constellation> = [4, 16, 64].iter().map(|&m| qam(m)).collect();
        for snr in [5.0, 15.0] {
            let coarse = theoretical_cdfs(&c, snr, FeatureKind::Magnitude, 4096).unwrap();
            let fine = theoretical_cdfs(&c, snr, FeatureKind::Magnitude, 16384).unwrap();
            let cell = coarse[0].grid()[1] - coarse[0].grid()[0];
            let a = compute_testpoints(&coarse).unwrap();
            let b = compute_testpoints(&fine).unwrap();
            for (x, y) in a.entries.iter().zip(&b.entries) {
                assert!((x.tau - y.tau).abs() <= cell, "{snr}: {} vs {}", x.tau, y.tau);
            }
        }
    }
}
