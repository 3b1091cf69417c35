//! Block-processing constant modulus equalizer and zero-forcing inverse
//! channel design.
//!
//! Tap vectors follow the `y = w^H x` convention throughout: tap `r` is
//! conjugated and multiplies `x(iL-1-r)`, the `r`-th most recent sample of
//! block `i`. Consecutive blocks never share samples.

use nalgebra::DMatrix;

use crate::channel::{toeplitz_channel_matrix, ChannelRealization};
use crate::error::{Error, Result};
use crate::C64;

/// Tap-norm threshold treated as numerical divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Lower clamp on the estimated output SNR (about -30 dB).
pub const GAMMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CmaConfig {
    /// Equalizer length `L`.
    pub taps: usize,
    /// Step size `mu`.
    pub step_size: f64,
    /// Number of tap updates `M` (also the number of equalized outputs).
    pub iterations: usize,
    /// Initial taps `w0`.
    pub init: Vec<C64>,
}

impl CmaConfig {
    /// Leading-spike initialization `w0 = [1, 0, ..., 0]`.
    pub fn new(taps: usize, step_size: f64, iterations: usize) -> Self {
        let mut init = vec![C64::new(0.0, 0.0); taps];
        if let Some(first) = init.first_mut() {
            *first = C64::new(1.0, 0.0);
        }
        Self {
            taps,
            step_size,
            iterations,
            init,
        }
    }

    /// `L = 20`, `mu = 1e-4`, `M = 200`.
    pub fn standard() -> Self {
        Self::new(20, 1e-4, 200)
    }

    pub fn samples_needed(&self) -> usize {
        self.taps * self.iterations
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::Config("equalizer length must be >= 1".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!("step size must be > 0, got {}", self.step_size)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration count must be >= 1".into()));
        }
        if self.init.len() != self.taps {
            return Err(Error::Config(format!(
                "initial tap vector has {} entries, expected {}",
                self.init.len(),
                self.taps
            )));
        }
        if self.init.iter().all(|w| w.norm_sqr() == 0.0) {
            return Err(Error::Config("initial taps are all zero".into()));
        }
        Ok(())
    }
}

/// Final taps, frozen-tap outputs and SNR estimate of one CMA run.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerRun {
    pub taps: Vec<C64>,
    pub output: Vec<C64>,
    /// Output SNR estimate clamped below at [`GAMMA_FLOOR`].
    pub gamma_hat: f64,
    /// Unclamped estimate; may be negative (or infinite without noise).
    pub gamma_raw: f64,
}

impl EqualizerRun {
    pub fn low_confidence(&self) -> bool {
        !(self.gamma_raw >= GAMMA_FLOOR)
    }

    /// Output rescaled so its signal part has unit power, i.e. the noise
    /// part has power `1/gamma_hat`.
    pub fn signal_normalized_output(&self) -> Vec<C64> {
        normalize_signal_power(&self.output, self.gamma_hat)
    }
}

/// Rescales `y` so the signal component implied by the SNR estimate has
/// unit power.
pub fn normalize_signal_power(y: &[C64], gamma: f64) -> Vec<C64> {
    let power = mean_power(y);
    let signal_fraction = if gamma.is_infinite() {
        1.0
    } else {
        gamma / (1.0 + gamma)
    };
    let scale = (power * signal_fraction).sqrt();
    if scale > 0.0 {
        y.iter().map(|v| v / scale).collect()
    } else {
        y.to_vec()
    }
}

pub(crate) fn mean_power(y: &[C64]) -> f64 {
    y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len().max(1) as f64
}

/// `w^H x_i` for 0-based block `block`, i.e. `sum_r conj(w_r) x(bL + L-1-r)`.
#[inline]
fn block_output(w: &[C64], x: &[C64], block: usize) -> C64 {
    let len = w.len();
    let end = block * len + len - 1;
    w.iter()
        .enumerate()
        .map(|(r, wr)| wr.conj() * x[end - r])
        .sum()
}

/// Frozen-tap outputs `w^H x_i` for the first `blocks` disjoint blocks.
pub fn block_filter(x: &[C64], w: &[C64], blocks: usize) -> Result<Vec<C64>> {
    if w.is_empty() {
        return Err(Error::Input("empty tap vector".into()));
    }
    if x.len() < w.len() * blocks {
        return Err(Error::Input(format!(
            "need {} samples for {blocks} blocks of {}, got {}",
            w.len() * blocks,
            w.len(),
            x.len()
        )));
    }
    Ok((0..blocks).map(|b| block_output(w, x, b)).collect())
}

/// `gamma = mean|y|^2 / (||w||^2 noise_var) - 1`, unclamped.
pub fn estimate_snr(output: &[C64], taps: &[C64], noise_var: f64) -> f64 {
    let tap_energy: f64 = taps.iter().map(|w| w.norm_sqr()).sum();
    let noise_out = tap_energy * noise_var;
    if noise_out == 0.0 {
        return f64::INFINITY;
    }
    mean_power(output) / noise_out - 1.0
}

pub fn clamp_snr(gamma: f64) -> f64 {
    if gamma >= GAMMA_FLOOR {
        gamma
    } else {
        GAMMA_FLOOR
    }
}

/// Runs the CMA (`R = 1`) over `M` disjoint blocks, then re-filters the same
/// blocks with the final taps.
pub fn cma_run(x: &[C64], cfg: &CmaConfig, noise_var: f64) -> Result<EqualizerRun> {
    cma_run_traced(x, cfg, noise_var, |_, _, _| {})
}

/// Like [`cma_run`], calling `observe(i, w_i, y(i))` after every update
/// (`i` is 1-based).
pub fn cma_run_traced<F>(x: &[C64], cfg: &CmaConfig, noise_var: f64, mut observe: F) -> Result<EqualizerRun>
where
    F: FnMut(usize, &[C64], C64),
{
    cfg.validate()?;
    let len = cfg.taps;
    if x.len() < cfg.samples_needed() {
        return Err(Error::Input(format!(
            "CMA needs {} samples (M={} blocks of L={}), got {}",
            cfg.samples_needed(),
            cfg.iterations,
            len,
            x.len()
        )));
    }
    let mut w = cfg.init.clone();
    for block in 0..cfg.iterations {
        let y = block_output(&w, x, block);
        // w <- w - mu (|y|^2 - 1) y* x_i
        let g = y.conj() * (cfg.step_size * (y.norm_sqr() - 1.0));
        let end = block * len + len - 1;
        for (r, wr) in w.iter_mut().enumerate() {
            *wr -= g * x[end - r];
        }
        let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged {
                iteration: block + 1,
                norm,
            });
        }
        observe(block + 1, &w, y);
    }
    let output = block_filter(x, &w, cfg.iterations)?;
    let gamma_raw = estimate_snr(&output, &w, noise_var);
    Ok(EqualizerRun {
        gamma_hat: clamp_snr(gamma_raw),
        gamma_raw,
        taps: w,
        output,
    })
}

/// Settings for the inverse-channel design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZfConfig {
    /// Truncate once the energy of the discarded tail, relative to the total,
    /// falls below this.
    pub tolerance: f64,
    /// Longest power series considered before giving up on it.
    pub max_len: usize,
    /// Length of the least-squares equalizer used when the series diverges.
    pub fallback_len: usize,
}

impl Default for ZfConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_len: 1024,
            fallback_len: 90,
        }
    }
}

/// FIR approximation of the zero-forcing equalizer `Z^-1{1/H(z)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfEqualizer {
    taps: Vec<C64>,
    delay: usize,
    phase: f64,
    approximate: bool,
}

impl ZfEqualizer {
    /// Power-series inverse truncated by `cfg.tolerance`, or a least-squares
    /// equalizer when the series does not converge (non-minimum-phase `h`).
    pub fn design(h: &ChannelRealization, cfg: &ZfConfig) -> Result<Self> {
        if !(cfg.tolerance > 0.0) || cfg.max_len == 0 || cfg.fallback_len == 0 {
            return Err(Error::Config(format!("invalid ZF configuration {cfg:?}")));
        }
        if let Some(series) = inverse_series(h, cfg.max_len) {
            let total: f64 = series.iter().map(|g| g.norm_sqr()).sum();
            // Suffix energies, tail[n] = sum_{k >= n} |g_k|^2.
            let mut tail = vec![0.0; series.len() + 1];
            for n in (0..series.len()).rev() {
                tail[n] = tail[n + 1] + series[n].norm_sqr();
            }
            let settled = tail[series.len() - series.len() / 4] < cfg.tolerance * total * 1e-2;
            if settled {
                if let Some(len) = (1..=series.len()).find(|&n| tail[n] < cfg.tolerance * total) {
                    return Ok(Self::from_filter(h, series[..len].to_vec(), false));
                }
            }
        }
        Self::least_squares(h, cfg.fallback_len)
    }

    /// Power-series inverse truncated to exactly `len` taps.
    pub fn with_length(h: &ChannelRealization, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("ZF length must be >= 1".into()));
        }
        let series = inverse_series(h, len)
            .ok_or_else(|| Error::Unsupported("channel has no causal power-series inverse".into()))?;
        Ok(Self::from_filter(h, series, false))
    }

    /// Length-`len` equalizer minimizing `||w^H H - e_D^T||` over taps and
    /// over every delay `D`; the best delay wins (ties to the smaller `D`).
    pub fn least_squares(h: &ChannelRealization, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("ZF length must be >= 1".into()));
        }
        let hm = toeplitz_channel_matrix(h, len);
        let gram = &hm * hm.adjoint();
        let chol = gram.clone().cholesky().ok_or_else(|| Error::Singular {
            condition: condition_estimate(&gram),
        })?;
        // Column D of G^-1 H is the optimal w for target e_D.
        let solved: DMatrix<C64> = chol.solve(&hm);
        let cols = hm.ncols();
        let mut best = (0usize, f64::NEG_INFINITY);
        for d in 0..cols {
            // Captured energy e_D^T H^H G^-1 H e_D.
            let captured = hm.column(d).dotc(&solved.column(d)).re;
            if captured > best.1 + 1e-12 {
                best = (d, captured);
            }
        }
        let w: Vec<C64> = solved.column(best.0).iter().copied().collect();
        let mut zf = Self {
            taps: w,
            delay: 0,
            phase: 0.0,
            approximate: true,
        };
        zf.locate_peak(h);
        Ok(zf)
    }

    fn from_filter(h: &ChannelRealization, filter: Vec<C64>, approximate: bool) -> Self {
        let mut zf = Self {
            taps: filter.into_iter().map(|g| g.conj()).collect(),
            delay: 0,
            phase: 0.0,
            approximate,
        };
        zf.locate_peak(h);
        zf
    }

    fn locate_peak(&mut self, h: &ChannelRealization) {
        let combined = self.combined_response(h);
        let (delay, peak) = combined
            .iter()
            .enumerate()
            .fold((0, C64::new(0.0, 0.0)), |best, (k, &v)| {
                if v.norm() > best.1.norm() + 1e-12 {
                    (k, v)
                } else {
                    best
                }
            });
        self.delay = delay;
        self.phase = peak.arg();
    }

    /// Taps in the `w^H x` convention.
    pub fn taps(&self) -> &[C64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Position `D` of the dominant entry of `w^H H`.
    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Phase `theta` of that entry.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// True for the least-squares fallback.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// First `len` taps, zero padded if the design is shorter.
    pub fn truncated(&self, len: usize) -> Vec<C64> {
        let mut w: Vec<C64> = self.taps.iter().take(len).copied().collect();
        w.resize(len, C64::new(0.0, 0.0));
        w
    }

    /// Row vector `w^H H`, i.e. the convolution of `conj(w)` with `h`.
    pub fn combined_response(&self, h: &ChannelRealization) -> Vec<C64> {
        combined_response(&self.taps, h)
    }
}

/// `w^H H` for a tap vector `w` and channel `h`.
pub fn combined_response(w: &[C64], h: &ChannelRealization) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); w.len() + h.len() - 1];
    for (l, wl) in w.iter().enumerate() {
        let c = wl.conj();
        for (q, hq) in h.taps().iter().enumerate() {
            out[l + q] += c * hq;
        }
    }
    out
}

/// Causal power series of `1/H(z)`: `g(0) = 1/h(0)`,
/// `g(n) = -(1/h(0)) sum_{q=1}^{min(n,Q-1)} h(q) g(n-q)`.
/// `None` when `h(0) = 0` or the series overflows.
fn inverse_series(h: &ChannelRealization, len: usize) -> Option<Vec<C64>> {
    let taps = h.taps();
    let h0 = taps[0];
    if h0.norm_sqr() == 0.0 {
        return None;
    }
    let inv = h0.inv();
    let mut g: Vec<C64> = Vec::with_capacity(len);
    for n in 0..len {
        let v = if n == 0 {
            inv
        } else {
            let acc: C64 = (1..taps.len().min(n + 1)).map(|q| taps[q] * g[n - q]).sum();
            -inv * acc
        };
        if !(v.re.is_finite() && v.im.is_finite()) || v.norm() > 1e150 {
            return None;
        }
        g.push(v);
    }
    Some(g)
}

pub(crate) fn condition_estimate(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse-channel design; see [`ZfEqualizer::design`].
pub fn zf_taps(h: &ChannelRealization, cfg: &ZfConfig) -> Result<ZfEqualizer> {
    ZfEqualizer::design(h, cfg)
}

/// Genie equalization with the first `len` ZF taps over `blocks` disjoint
/// blocks, blocked exactly like [`cma_run`].
pub fn zf_equalize(x: &[C64], zf: &ZfEqualizer, len: usize, blocks: usize) -> Result<Vec<C64>> {
    block_filter(x, &zf.truncated(len), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, ChannelModel, NoiseSpec};
    use crate::signals::{Constellation, ModClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ch3() -> ChannelRealization {
        ChannelRealization::custom(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.9, 0.0)]).unwrap()
    }

    fn qam(order: usize) -> Constellation {
        Constellation::new(ModClass::Qam, order).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CmaConfig::standard().validate().is_ok());
        assert!(CmaConfig::new(0, 1e-4, 10).validate().is_err());
        assert!(CmaConfig::new(4, 0.0, 10).validate().is_err());
        assert!(CmaConfig::new(4, 1e-4, 0).validate().is_err());
        let mut cfg = CmaConfig::new(4, 1e-4, 10);
        cfg.init = vec![c(0.0, 0.0); 4];
        assert!(cfg.validate().is_err());
        cfg.init = vec![c(1.0, 0.0); 3];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn insufficient_samples() {
        let cfg = CmaConfig::new(4, 1e-4, 10);
        let err = cma_run(&vec![c(1.0, 0.0); 39], &cfg, 0.0).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn constant_modulus_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = qam(4).draw(20 * 200, &mut rng);
        let cfg = CmaConfig::standard();
        let mut max_step: f64 = 0.0;
        let mut prev = cfg.init.clone();
        let run = cma_run_traced(&s, &cfg, 0.0, |_, w, _| {
            for (a, b) in w.iter().zip(&prev) {
                max_step = max_step.max((a - b).norm());
            }
            prev = w.to_vec();
        })
        .unwrap();
        // |y|^2 - 1 is zero up to the rounding of (1/sqrt 2)^2.
        assert!(max_step < 1e-18, "{max_step}");
        for (a, b) in run.taps.iter().zip(&cfg.init) {
            assert!((a - b).norm() < 1e-15);
        }
        // Output is every L-th sample, x(iL-1).
        for (i, y) in run.output.iter().enumerate() {
            assert!((y - s[i * 20 + 19]).norm() < 1e-15);
        }
        assert!(run.gamma_raw.is_infinite());
    }

    #[test]
    fn blocks_are_disjoint_and_reversed() {
        // Output of a unit tap at position r picks x(bL + L-1-r).
        let x: Vec<C64> = (0..40).map(|n| c(n as f64, 0.0)).collect();
        for r in 0..4 {
            let mut w = vec![c(0.0, 0.0); 4];
            w[r] = c(1.0, 0.0);
            let y = block_filter(&x, &w, 10).unwrap();
            for (b, v) in y.iter().enumerate() {
                assert_eq!(v.re, (b * 4 + 3 - r) as f64);
            }
        }
        let used: Vec<Vec<usize>> = (0..10).map(|b| (0..4).map(|r| b * 4 + 3 - r).collect()).collect();
        for pair in used.windows(2) {
            assert!(pair[0].iter().all(|i| !pair[1].contains(i)));
        }
    }

    #[test]
    fn snr_estimate_on_identity_channel() {
        let cfg = CmaConfig::standard();
        let noise = NoiseSpec::from_snr_db(20.0);
        for trial in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let s = qam(4).draw(cfg.samples_needed(), &mut rng);
            let t = transmit(&s, &ChannelRealization::identity(), noise, &mut rng).unwrap();
            let run = cma_run(&t.received, &cfg, noise.variance).unwrap();
            let db = 10.0 * run.gamma_hat.log10();
            assert!((db - 20.0).abs() <= 1.5, "trial {trial}: {db} dB");
        }
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = CmaConfig::new(4, 10.0, 50);
        let x = vec![c(30.0, 0.0); 200];
        match cma_run(&x, &cfg, 0.1) {
            Err(Error::Diverged { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rotation_by_quarter_turn_is_bitwise_equivariant() {
        // Multiplying by j only swaps and negates components, so the taps
        // must come out bit-for-bit identical.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = ChannelRealization::sample(ChannelModel::Ch1, &mut rng).unwrap();
        let s = qam(16).draw(4003, &mut rng);
        let t = transmit(&s, &h, NoiseSpec::from_snr_db(15.0), &mut rng).unwrap();
        let rotated: Vec<C64> = t.received.iter().map(|v| v * c(0.0, 1.0)).collect();
        let cfg = CmaConfig::standard();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let ra = cma_run_traced(&t.received, &cfg, 0.03, |_, w, _| a.push(w.to_vec())).unwrap();
        let rb = cma_run_traced(&rotated, &cfg, 0.03, |_, w, _| b.push(w.to_vec())).unwrap();
        assert_eq!(a, b);
        for (ya, yb) in ra.output.iter().zip(&rb.output) {
            assert_eq!(ya * c(0.0, 1.0), *yb);
        }
        assert_eq!(ra.gamma_hat, rb.gamma_hat);
    }

    #[test]
    fn zf_of_identity() {
        let zf = zf_taps(&ChannelRealization::identity(), &ZfConfig::default()).unwrap();
        assert_eq!(zf.taps(), &[c(1.0, 0.0)]);
        assert_eq!(zf.delay(), 0);
        assert_eq!(zf.phase(), 0.0);
        assert!(!zf.is_approximate());
    }

    #[test]
    fn zf_of_ch3_is_geometric() {
        let zf = ZfEqualizer::with_length(&ch3(), 90).unwrap();
        for (n, w) in zf.taps().iter().enumerate() {
            let want = if n % 2 == 0 { (-0.9f64).powi(n as i32 / 2) } else { 0.0 };
            assert!((w - c(want, 0.0)).norm() < 1e-12, "tap {n}");
        }
        assert!((zf.taps()[88].norm() - 0.9f64.powi(44)).abs() < 1e-15);
        assert!((zf.taps()[88].norm() - 9.7e-3).abs() < 0.05e-3);
        assert_eq!(zf.delay(), 0);
        // Tolerance-driven truncation lands near the hand-picked 90.
        let auto = zf_taps(&ch3(), &ZfConfig::default()).unwrap();
        assert!((80..=100).contains(&auto.len()), "{}", auto.len());
        assert!(!auto.is_approximate());
    }

    #[test]
    fn complex_channel_inverse_cancels_isi() {
        let h = ChannelRealization::custom(vec![c(0.8, 0.3), c(0.2, -0.4), c(0.1, 0.1)]).unwrap();
        let zf = zf_taps(&h, &ZfConfig::default()).unwrap();
        assert!(!zf.is_approximate());
        let comb = zf.combined_response(&h);
        assert!((comb[0] - c(1.0, 0.0)).norm() < 1e-6);
        let isi: f64 = comb[1..].iter().map(|v| v.norm_sqr()).sum();
        assert!(isi < 1e-4);
    }

    #[test]
    fn maximum_phase_channel_falls_back_to_least_squares() {
        // Zero at z = -2: the causal inverse series blows up.
        let h = ChannelRealization::custom(vec![c(0.5, 0.0), c(1.0, 0.0)]).unwrap();
        let zf = zf_taps(&h, &ZfConfig { fallback_len: 30, ..ZfConfig::default() }).unwrap();
        assert!(zf.is_approximate());
        assert_eq!(zf.len(), 30);
        let comb = zf.combined_response(&h);
        let peak = comb[zf.delay()];
        let rest: f64 = comb.iter().map(|v| v.norm_sqr()).sum::<f64>() - peak.norm_sqr();
        assert!(peak.norm() > 0.95 && rest < 0.05, "peak {peak} rest {rest} at {}", zf.delay());
        assert!(zf.delay() > 0);
    }

    #[test]
    fn zf_equalize_identity_and_long_ch3() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = qam(4).draw(2000, &mut rng);
        let id = zf_taps(&ChannelRealization::identity(), &ZfConfig::default()).unwrap();
        let out = zf_equalize(&s, &id, 20, 100).unwrap();
        for (i, y) in out.iter().enumerate() {
            assert_eq!(*y, s[i * 20 + 19]);
        }

        let lz = 90;
        let blocks = 500;
        let s = qam(4).draw(lz * blocks + 2, &mut rng);
        let t = transmit(&s, &ch3(), NoiseSpec::new(0.0).unwrap(), &mut rng).unwrap();
        let zf = ZfEqualizer::with_length(&ch3(), lz).unwrap();
        let out = zf_equalize(&t.received, &zf, lz, blocks).unwrap();
        let mse = out
            .iter()
            .enumerate()
            .map(|(b, y)| (y - t.symbol((b * lz + lz - 1) as isize)).norm_sqr())
            .sum::<f64>()
            / blocks as f64;
        assert!(mse <= 1e-3, "{mse}");
    }
}
