//! In-band and out-of-band quality measures: EVM, averaged periodogram PSD,
//! first-adjacent ACLR and per-point mask margins.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leakage::{build_leakage_matrix_unchecked, LeakageMatrix, MaskSpec};
use crate::precoders::DB_FLOOR;
use crate::signal::{gen_ofdm_symbol_indexed, CarrierConfig, Constellation, OfdmModulator};

/// Subcarriers per physical resource block.
pub const PRB_SIZE: usize = 12;
/// ACLR values are capped at this magnitude.
pub const ACLR_CAP_DB: f64 = 400.0;
/// Symbols per work item in batch loops. Fixed so results do not depend on
/// the thread count.
pub(crate) const CHUNK: usize = 32;

pub(crate) fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvmReport {
    pub overall_pct: f64,
    /// One entry per 12-subcarrier block in allocation order; a trailing
    /// partial block gets its own entry.
    pub per_prb_pct: Vec<f64>,
}

/// `100·‖d − d̄‖/‖d‖`, overall and per PRB.
pub fn evm(d: &[Complex64], d_bar: &[Complex64]) -> Result<EvmReport> {
    let mut acc = EvmAccumulator::new(d.len());
    acc.add(d, d_bar)?;
    acc.report()
}

/// Power-weighted EVM over a batch of symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct EvmAccumulator {
    len: usize,
    err: Vec<f64>,
    reference: Vec<f64>,
}

impl EvmAccumulator {
    pub fn new(len: usize) -> Self {
        let n_prb = len.div_ceil(PRB_SIZE);
        Self {
            len,
            err: vec![0.0; n_prb],
            reference: vec![0.0; n_prb],
        }
    }

    pub fn add(&mut self, d: &[Complex64], d_bar: &[Complex64]) -> Result<()> {
        for v in [d.len(), d_bar.len()] {
            if v != self.len {
                return Err(Error::DimensionMismatch {
                    expected: self.len,
                    actual: v,
                    context: "EVM vector length",
                });
            }
        }
        for (i, (x, y)) in d.iter().zip(d_bar).enumerate() {
            self.err[i / PRB_SIZE] += (x - y).norm_sqr();
            self.reference[i / PRB_SIZE] += x.norm_sqr();
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.err.iter_mut().zip(&other.err) {
            *a += b;
        }
        for (a, b) in self.reference.iter_mut().zip(&other.reference) {
            *a += b;
        }
    }

    pub fn report(&self) -> Result<EvmReport> {
        let total: f64 = self.reference.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let per_prb_pct = self
            .err
            .iter()
            .zip(&self.reference)
            .map(|(&e, &r)| if r > 0.0 { 100.0 * (e / r).sqrt() } else { 0.0 })
            .collect();
        Ok(EvmReport {
            overall_pct: 100.0 * (self.err.iter().sum::<f64>() / total).sqrt(),
            per_prb_pct,
        })
    }

    /// Share of the reference power in each PRB.
    pub fn prb_weights(&self) -> Vec<f64> {
        let total: f64 = self.reference.iter().sum();
        self.reference.iter().map(|r| r / total).collect()
    }
}

/// Averaged periodogram.
///
/// `bin_power` is the mean power per FFT bin, normalised so it sums to the
/// mean power per sample of the waveforms. `psd_dbm_per_100khz` is the power
/// in a `rbw_hz` window centred on each bin plus the calibration offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub psd_dbm_per_100khz: Vec<f64>,
    pub n_symbols_averaged: usize,
    /// dB offset added to the relative power to obtain dBm.
    pub calibration: f64,
    pub bin_hz: f64,
    pub rbw_hz: f64,
    pub bin_power: Vec<f64>,
}

impl PsdEstimate {
    /// Builds an estimate from per-bin powers on an ascending, uniform grid.
    pub fn from_bin_power(
        freqs_hz: Vec<f64>,
        bin_power: Vec<f64>,
        rbw_hz: f64,
        calibration: f64,
        n_symbols_averaged: usize,
    ) -> Result<Self> {
        if freqs_hz.len() != bin_power.len() || freqs_hz.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: freqs_hz.len(),
                actual: bin_power.len(),
                context: "PSD bins vs frequencies",
            });
        }
        let bin_hz = freqs_hz[1] - freqs_hz[0];
        if !(bin_hz > 0.0) || freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("freqs_hz", "must be strictly increasing"));
        }
        if !(rbw_hz >= bin_hz * (1.0 - 1e-9)) {
            return Err(Error::config(
                "rbw_hz",
                format!("{rbw_hz} Hz is below the bin width {bin_hz} Hz"),
            ));
        }
        // Window of `w` whole bins, rescaled to exactly rbw_hz.
        let n = bin_power.len();
        let w = ((rbw_hz / bin_hz).round() as usize).clamp(1, n);
        let scale = rbw_hz / (w as f64 * bin_hz);
        let half = w / 2;
        let mut psd = Vec::with_capacity(n);
        let mut acc: f64 = (0..w).map(|j| bin_power[(j + n - half) % n]).sum();
        for i in 0..n {
            psd.push(to_db(acc.max(0.0) * scale) + calibration);
            acc += bin_power[(i + w - half) % n] - bin_power[(i + n - half) % n];
        }
        Ok(Self {
            freqs_hz,
            psd_dbm_per_100khz: psd,
            n_symbols_averaged,
            calibration,
            bin_hz,
            rbw_hz,
            bin_power,
        })
    }

    /// Same estimate with a different calibration offset.
    pub fn with_calibration(mut self, calibration: f64) -> Self {
        let delta = calibration - self.calibration;
        for v in &mut self.psd_dbm_per_100khz {
            if *v - self.calibration > DB_FLOOR {
                *v += delta;
            } else {
                *v = DB_FLOOR + calibration;
            }
        }
        self.calibration = calibration;
        self
    }

    /// Power in `[center − half_width, center + half_width]`, treating each
    /// bin as a constant density over its width (edge bins count
    /// fractionally).
    pub fn band_power(&self, center_hz: f64, half_width_hz: f64) -> f64 {
        let (lo, hi) = (center_hz - half_width_hz, center_hz + half_width_hz);
        let b = self.bin_hz;
        self.freqs_hz
            .iter()
            .zip(&self.bin_power)
            .map(|(f, p)| {
                let overlap = (hi.min(f + 0.5 * b) - lo.max(f - 0.5 * b)).max(0.0);
                p * (overlap / b).min(1.0)
            })
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.bin_power.iter().sum()
    }

    /// Linear mean of the calibrated 100 kHz values over the central 80 % of
    /// the occupied band, in dB.
    pub fn in_band_level(&self, cfg: &CarrierConfig) -> f64 {
        let (lo, hi) = cfg.occupied_range();
        let scs = cfg.subcarrier_spacing_hz();
        let center = 0.5 * (lo + hi) as f64 * scs;
        let half = 0.4 * (hi - lo) as f64 * scs;
        let (sum, n) = self
            .freqs_hz
            .iter()
            .zip(&self.psd_dbm_per_100khz)
            .filter(|(f, _)| (*f - center).abs() <= half)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + 10f64.powf(p / 10.0), n + 1));
        if n == 0 {
            DB_FLOOR
        } else {
            to_db(sum / n as f64)
        }
    }
}

/// Streaming periodogram sum. Waveforms are zero-padded to a common FFT
/// length of at least four times their length.
pub struct PsdAccumulator {
    len: usize,
    nfft: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    sum: Vec<f64>,
    count: usize,
}

impl std::fmt::Debug for PsdAccumulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsdAccumulator")
            .field("len", &self.len)
            .field("nfft", &self.nfft)
            .field("count", &self.count)
            .finish()
    }
}

impl Clone for PsdAccumulator {
    fn clone(&self) -> Self {
        Self {
            len: self.len,
            nfft: self.nfft,
            fft: Arc::clone(&self.fft),
            buf: self.buf.clone(),
            sum: self.sum.clone(),
            count: self.count,
        }
    }
}

impl PsdAccumulator {
    pub fn new(len: usize) -> Self {
        let nfft = (4 * len.max(1)).next_power_of_two();
        Self {
            len,
            nfft,
            fft: FftPlanner::new().plan_fft_forward(nfft),
            buf: vec![Complex64::new(0.0, 0.0); nfft],
            sum: vec![0.0; nfft],
            count: 0,
        }
    }

    /// Empty accumulator sharing this one's FFT plan.
    pub fn fresh(&self) -> Self {
        Self {
            sum: vec![0.0; self.nfft],
            count: 0,
            ..self.clone()
        }
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, w: &[Complex64]) -> Result<()> {
        if w.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: w.len(),
                context: "waveform length in PSD batch",
            });
        }
        self.buf[..self.len].copy_from_slice(w);
        self.buf[self.len..].fill(Complex64::new(0.0, 0.0));
        self.fft.process(&mut self.buf);
        for (s, x) in self.sum.iter_mut().zip(&self.buf) {
            *s += x.norm_sqr();
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.nfft != self.nfft || other.len != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: other.len,
                context: "merging PSD accumulators",
            });
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish(&self, sample_rate_hz: f64, rbw_hz: f64, calibration: f64) -> Result<PsdEstimate> {
        if self.count == 0 {
            return Err(Error::config("waveforms", "at least one waveform is required"));
        }
        let n = self.nfft;
        let bin_hz = sample_rate_hz / n as f64;
        let norm = 1.0 / (self.count as f64 * n as f64 * self.len as f64);
        let mut freqs = Vec::with_capacity(n);
        let mut power = Vec::with_capacity(n);
        for i in 0..n {
            freqs.push((i as f64 - (n / 2) as f64) * bin_hz);
            power.push(self.sum[(i + n - n / 2) % n] * norm);
        }
        PsdEstimate::from_bin_power(freqs, power, rbw_hz, calibration, self.count)
    }
}

/// Averaged rectangular-window periodogram of equal-length waveforms sampled
/// at `cfg.sample_rate_hz()`, uncalibrated (offset 0 dB).
pub fn psd_periodogram<W: AsRef<[Complex64]>>(
    waveforms: &[W],
    cfg: &CarrierConfig,
    rbw_hz: f64,
) -> Result<PsdEstimate> {
    let Some(first) = waveforms.first() else {
        return Err(Error::config("waveforms", "at least one waveform is required"));
    };
    let mut acc = PsdAccumulator::new(first.as_ref().len());
    for w in waveforms {
        acc.add(w.as_ref())?;
    }
    acc.finish(cfg.sample_rate_hz(), rbw_hz, 0.0)
}

/// Channel geometry for ACLR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AclrGeometry {
    pub channel_spacing_hz: f64,
    pub measurement_bw_hz: f64,
}

impl AclrGeometry {
    /// Measurement bandwidth equal to the occupied bandwidth, channel spacing
    /// such that the occupied part is 90 % of the channel (4.5 MHz in 5 MHz
    /// for 25 PRBs at 15 kHz).
    pub fn for_carrier(cfg: &CarrierConfig) -> Self {
        let bw = cfg.n_allocated() as f64 * cfg.subcarrier_spacing_hz();
        Self {
            channel_spacing_hz: bw / 0.9,
            measurement_bw_hz: bw,
        }
    }
}

/// ACLR of the first adjacent channel with the default geometry for `cfg`.
pub fn aclr_first_adjacent(psd: &PsdEstimate, cfg: &CarrierConfig) -> Result<f64> {
    aclr_with_geometry(psd, cfg, &AclrGeometry::for_carrier(cfg))
}

/// `10·log10(P_assigned / P_adjacent)` for the worse of the two adjacent
/// channels, capped at ±[`ACLR_CAP_DB`].
pub fn aclr_with_geometry(psd: &PsdEstimate, cfg: &CarrierConfig, geom: &AclrGeometry) -> Result<f64> {
    let (lo, hi) = cfg.occupied_range();
    let center = 0.5 * (lo + hi) as f64 * cfg.subcarrier_spacing_hz();
    let half = 0.5 * geom.measurement_bw_hz;
    let f_min = psd.freqs_hz.first().copied().unwrap_or(0.0);
    let f_max = psd.freqs_hz.last().copied().unwrap_or(0.0);
    let reach = geom.channel_spacing_hz + half;
    if center - reach < f_min - psd.bin_hz || center + reach > f_max + psd.bin_hz {
        return Err(Error::InsufficientSpan(format!(
            "adjacent channels reach ±{:.0} Hz around {center:.0} Hz, spectrum covers [{f_min:.0}, {f_max:.0}] Hz",
            reach
        )));
    }
    let own = psd.band_power(center, half);
    let worst = psd
        .band_power(center - geom.channel_spacing_hz, half)
        .max(psd.band_power(center + geom.channel_spacing_hz, half));
    Ok(if worst <= 0.0 {
        ACLR_CAP_DB
    } else if own <= 0.0 {
        -ACLR_CAP_DB
    } else {
        (10.0 * (own / worst).log10()).clamp(-ACLR_CAP_DB, ACLR_CAP_DB)
    })
}

/// `10·log10(mean_s |a(ν_m)ᵀd̄_s|² / γ_m)` per mask point.
pub fn sem_margin<S: AsRef<[Complex64]>>(a: &LeakageMatrix, mask: &MaskSpec, symbols: &[S]) -> Result<Vec<f64>> {
    if a.n_rows() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            actual: a.n_rows(),
            context: "leakage rows vs mask points",
        });
    }
    let mut sum = vec![0.0; a.n_rows()];
    for s in symbols {
        for (acc, p) in sum.iter_mut().zip(a.apply(s.as_ref())?) {
            *acc += p.norm_sqr();
        }
    }
    let n = symbols.len().max(1) as f64;
    Ok(sum.iter().zip(mask.gamma()).map(|(s, g)| to_db(s / n / g)).collect())
}

/// Link between the leakage operator and absolute PSD levels, measured on
/// unprecoded symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCalibration {
    /// In-band level the PSD is pinned to.
    pub reference_dbm_per_100khz: f64,
    /// Added to relative 100 kHz power to obtain dBm.
    pub psd_offset_db: f64,
    /// Mean `|a(ν)ᵀd|²` at in-band points (the value of the leakage power
    /// that corresponds to the reference level).
    pub leakage_power: f64,
    pub n_symbols: usize,
    pub seed: u64,
}

/// In-band probe points: 57 fractional offsets spread over the central 93 %
/// of the occupied band.
pub fn calibration_points(cfg: &CarrierConfig) -> Vec<f64> {
    let (lo, hi) = cfg.occupied_range();
    let center = 0.5 * (lo + hi) as f64;
    let half = 0.93 * 0.5 * (hi - lo) as f64;
    (0..57)
        .map(|i| center - half + 2.0 * half * i as f64 / 56.0 + 0.37)
        .collect()
}

impl PowerCalibration {
    pub fn measure(
        cfg: &CarrierConfig,
        constellation: Constellation,
        reference_dbm_per_100khz: f64,
        rbw_hz: f64,
        n_symbols: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_symbols == 0 {
            return Err(Error::config("calibration.n_symbols", "must be at least 1"));
        }
        let probe = build_leakage_matrix_unchecked(cfg, &calibration_points(cfg))?;
        let modulator = OfdmModulator::new(cfg);
        let proto = PsdAccumulator::new(cfg.symbol_len());
        let chunks: Vec<(PsdAccumulator, f64)> = (0..n_symbols.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| -> Result<(PsdAccumulator, f64)> {
                let mut acc = proto.fresh();
                let mut leak = 0.0;
                for i in c * CHUNK..((c + 1) * CHUNK).min(n_symbols) {
                    let d = gen_ofdm_symbol_indexed(cfg, constellation, seed, i as u64);
                    acc.add(&modulator.modulate(&d)?)?;
                    leak += probe.apply(&d)?.iter().map(|p| p.norm_sqr()).sum::<f64>();
                }
                Ok((acc, leak))
            })
            .collect::<Result<_>>()?;
        let mut acc = proto.fresh();
        let mut leak = 0.0;
        for (a, l) in &chunks {
            acc.merge(a)?;
            leak += l;
        }
        let raw = acc.finish(cfg.sample_rate_hz(), rbw_hz, 0.0)?;
        Ok(Self {
            reference_dbm_per_100khz,
            psd_offset_db: reference_dbm_per_100khz - raw.in_band_level(cfg),
            leakage_power: leak / (n_symbols * probe.n_rows()) as f64,
            n_symbols,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_ofdm_symbol, ofdm_modulate};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evm_trivial_cases() {
        let d: Vec<_> = (0..30).map(|i| c(i as f64 + 1.0, -1.0)).collect();
        assert_eq!(evm(&d, &d).unwrap().overall_pct, 0.0);
        let s: Vec<_> = d.iter().map(|x| x * 0.99).collect();
        let r = evm(&d, &s).unwrap();
        assert!((r.overall_pct - 1.0).abs() < 1e-12);
        assert_eq!(r.per_prb_pct.len(), 3);
        assert!(r.per_prb_pct.iter().all(|p| (p - 1.0).abs() < 1e-12));
        assert!(matches!(evm(&[c(0.0, 0.0)], &[c(1.0, 0.0)]), Err(Error::ZeroNorm)));
        assert!(evm(&d, &d[1..]).is_err());
    }

    #[test]
    fn evm_decomposes_over_prbs() {
        let cfg = CarrierConfig::centered(128, 9, 60, 15e3, 2).unwrap();
        let d = gen_ofdm_symbol(&cfg, Constellation::Qam64, 3);
        let e = gen_ofdm_symbol(&cfg, Constellation::Qam4, 4);
        let d_bar: Vec<_> = d.iter().zip(e.iter()).map(|(x, y)| x + y * 0.05 * x.norm()).collect();
        let mut acc = EvmAccumulator::new(60);
        acc.add(&d, &d_bar).unwrap();
        let r = acc.report().unwrap();
        let w = acc.prb_weights();
        let sum: f64 = w.iter().zip(&r.per_prb_pct).map(|(w, p)| w * p * p).sum();
        assert!((sum - r.overall_pct.powi(2)).abs() <= 1e-10 * sum);
    }

    #[test]
    fn zero_input_hits_floor() {
        let cfg = CarrierConfig::centered(64, 4, 24, 15e3, 2).unwrap();
        let w = vec![vec![c(0.0, 0.0); cfg.symbol_len()]; 2];
        let p = psd_periodogram(&w, &cfg, 100e3).unwrap();
        assert!(p.psd_dbm_per_100khz.iter().all(|&v| v == DB_FLOOR));
    }

    #[test]
    fn exponential_peaks_at_its_subcarrier() {
        let cfg = CarrierConfig::centered(64, 4, 24, 15e3, 2).unwrap();
        let mut d = vec![c(0.0, 0.0); 24];
        d[17] = c(1.0, 0.0);
        let k = cfg.allocated_offsets()[17] as f64;
        let w = ofdm_modulate(&cfg, &d).unwrap();
        let p = psd_periodogram(&[w], &cfg, 15e3).unwrap();
        let (imax, _) = p
            .bin_power
            .iter()
            .enumerate()
            .fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert!((p.freqs_hz[imax] - k * 15e3).abs() <= p.bin_hz);
    }

    #[test]
    fn parseval_holds() {
        let cfg = CarrierConfig::centered(128, 9, 60, 15e3, 2).unwrap();
        let ws: Vec<_> = (0..5)
            .map(|i| ofdm_modulate(&cfg, &gen_ofdm_symbol_indexed(&cfg, Constellation::Qam16, 1, i)).unwrap())
            .collect();
        let p = psd_periodogram(&ws, &cfg, 100e3).unwrap();
        let mean: f64 = ws.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>() / (5 * cfg.symbol_len()) as f64;
        assert!((p.total_power() - mean).abs() <= 1e-3 * mean);
        assert!(p.freqs_hz.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rbw_below_bin_rejected() {
        let cfg = CarrierConfig::centered(64, 4, 24, 15e3, 2).unwrap();
        let w = vec![vec![c(1.0, 0.0); cfg.symbol_len()]];
        assert!(psd_periodogram(&w, &cfg, 10.0).is_err());
        let ragged = vec![vec![c(1.0, 0.0); 3], vec![c(1.0, 0.0); 4]];
        assert!(psd_periodogram(&ragged, &cfg, 100e3).is_err());
    }

    fn synthetic(adjacent: f64) -> (CarrierConfig, PsdEstimate) {
        let cfg = CarrierConfig::centered(512, 36, 300, 15e3, 2).unwrap();
        let n = 4096;
        let bin = cfg.sample_rate_hz() / n as f64;
        let freqs: Vec<f64> = (0..n).map(|i| (i as f64 - 2048.0) * bin).collect();
        let power = freqs
            .iter()
            .map(|f| {
                // the -150..149 allocation is centred at -7.5 kHz
                let f = (f + 7.5e3).abs();
                if f <= 2.25e6 {
                    1.0
                } else {
                    adjacent
                }
            })
            .collect();
        let p = PsdEstimate::from_bin_power(freqs, power, 100e3, 0.0, 1).unwrap();
        (cfg, p)
    }

    #[test]
    fn aclr_synthetic() {
        let (cfg, p) = synthetic(0.0);
        assert_eq!(aclr_first_adjacent(&p, &cfg).unwrap(), ACLR_CAP_DB);
        let (cfg, p) = synthetic(1.0);
        let v = aclr_first_adjacent(&p, &cfg).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
        let (cfg, p) = synthetic(1e-3);
        assert!((aclr_first_adjacent(&p, &cfg).unwrap() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn aclr_needs_oversampling() {
        let cfg = CarrierConfig::centered(512, 36, 300, 15e3, 1).unwrap();
        let w = vec![vec![c(1.0, 0.0); cfg.symbol_len()]];
        let p = psd_periodogram(&w, &cfg, 100e3).unwrap();
        assert!(matches!(aclr_first_adjacent(&p, &cfg), Err(Error::InsufficientSpan(_))));
    }

    #[test]
    fn aclr_scale_invariant() {
        let cfg = CarrierConfig::centered(512, 36, 300, 15e3, 2).unwrap();
        let ws: Vec<_> = (0..4)
            .map(|i| ofdm_modulate(&cfg, &gen_ofdm_symbol_indexed(&cfg, Constellation::Qam16, 2, i)).unwrap())
            .collect();
        let g = Complex64::from_polar(3.7, 0.4 * PI);
        let scaled: Vec<Vec<_>> = ws.iter().map(|w| w.iter().map(|x| x * g).collect()).collect();
        let a = aclr_first_adjacent(&psd_periodogram(&ws, &cfg, 100e3).unwrap(), &cfg).unwrap();
        let b = aclr_first_adjacent(&psd_periodogram(&scaled, &cfg, 100e3).unwrap(), &cfg).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(a > 20.0 && a < 50.0, "unprecoded ACLR {a}");
    }

    #[test]
    fn calibration_shift() {
        let (_, p) = synthetic(0.0);
        let q = p.clone().with_calibration(-7.0);
        for (a, b) in p.psd_dbm_per_100khz.iter().zip(&q.psd_dbm_per_100khz) {
            if *a > DB_FLOOR {
                assert!((b - a + 7.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn calibration_pins_reference_level() {
        let cfg = CarrierConfig::centered(128, 9, 60, 15e3, 2).unwrap();
        let cal = PowerCalibration::measure(&cfg, Constellation::Qam16, -21.5, 100e3, 300, 9).unwrap();
        let ws: Vec<_> = (0..300)
            .map(|i| ofdm_modulate(&cfg, &gen_ofdm_symbol_indexed(&cfg, Constellation::Qam16, 9, i)).unwrap())
            .collect();
        let p = psd_periodogram(&ws, &cfg, 100e3).unwrap().with_calibration(cal.psd_offset_db);
        assert!((p.in_band_level(&cfg) + 21.5).abs() < 1e-9);
        // For unit-energy symbols E|aᵀd|² = ‖a‖², of the order of N + N_CP on
        // the emission grid.
        let expect = (cfg.emission_fft_size() + cfg.emission_cp_len()) as f64;
        let ratio = cal.leakage_power / expect;
        assert!(ratio > 0.5 && ratio < 1.5, "{}", cal.leakage_power);
    }
}
