//! Out-of-band leakage operator and spectral emission masks.
//!
//! The emission of a rectangular-windowed CP-OFDM symbol at frequency `ν`
//! (in subcarrier spacings from DC) is a linear functional of the data,
//! `p(ν) = a(ν)ᵀ d`, whose coefficients are Dirichlet kernels centred on
//! each subcarrier. Stacking `M` such rows gives the leakage matrix `A`.

use std::fmt::Write as _;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precoders::Rank1Constraint;
use crate::signal::CarrierConfig;

/// Below this `|sin(π(ν−k)/N)|` the kernel is replaced by its analytic limit.
pub const DEGENERATE_SINE: f64 = 1e-12;

/// `sin(πy)` with the argument reduced to `[-1, 1]` first, so large `y` do
/// not lose relative accuracy near the zeros.
fn sin_pi(y: f64) -> f64 {
    let r = y - 2.0 * (y / 2.0).round();
    (std::f64::consts::PI * r).sin()
}

/// Leakage kernel of an `n`-point CP-OFDM symbol with `n_cp` prefix samples,
/// for a frequency offset `offset = ν − k` in subcarriers:
///
/// `(1/√n)·exp(jπ(offset/n)(n_cp−n+1))·sin(π(offset/n)(n+n_cp)) / sin(π·offset/n)`.
///
/// The kernel is `n`-periodic in `offset`, so the offset is first reduced to
/// `[-n/2, n/2]`; at (numerically) zero reduced offset the 0/0 ratio is
/// replaced by its limit `n + n_cp`.
pub fn dirichlet_leakage(n: usize, n_cp: usize, offset: f64) -> Complex64 {
    let nf = n as f64;
    let reduced = offset - nf * (offset / nf).round();
    let x = reduced / nf;
    let phase = Complex64::from_polar(
        1.0,
        std::f64::consts::PI * x * (n_cp as f64 - nf + 1.0),
    );
    let den = sin_pi(x);
    let ratio = if den.abs() < DEGENERATE_SINE {
        (n + n_cp) as f64
    } else {
        sin_pi(x * (n + n_cp) as f64) / den
    };
    phase * (ratio / nf.sqrt())
}

/// Coefficient `a(ν, k)` linking the data on grid subcarrier `k` to the
/// emission at `nu`.
///
/// The kernel is evaluated on the emitted sample grid (`O·N` points with
/// `O·N_CP` prefix samples, `O` the oversampling factor) using the signed
/// offset of `k`, which keeps `|a(ν)ᵀd|²` equal to the spectrum of the
/// waveform produced by [`crate::signal::ofdm_modulate`] even for `ν`
/// beyond `±N/2`. With `O = 1` this is the plain `N`-point kernel.
pub fn leakage_coefficient(cfg: &CarrierConfig, nu: f64, k: usize) -> Result<Complex64> {
    if k >= cfg.fft_size() {
        return Err(Error::SubcarrierOutOfRange {
            index: k,
            fft_size: cfg.fft_size(),
        });
    }
    if !nu.is_finite() {
        return Err(Error::config("nu", "frequency point must be finite"));
    }
    Ok(dirichlet_leakage(
        cfg.emission_fft_size(),
        cfg.emission_cp_len(),
        nu - cfg.signed_offset(k) as f64,
    ))
}

/// The `M × N_alloc` leakage operator, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    points: Vec<f64>,
    carrier: CarrierConfig,
}

impl LeakageMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn carrier(&self) -> &CarrierConfig {
        &self.carrier
    }

    pub fn get(&self, m: usize, j: usize) -> Complex64 {
        self.data[m * self.cols + j]
    }

    /// `‖a(ν_m)‖²`.
    pub fn row_norm_sqr(&self, m: usize) -> f64 {
        self.row(m).iter().map(|a| a.norm_sqr()).sum()
    }

    /// `A d`, the complex emission at every frequency point.
    pub fn apply(&self, d: &[Complex64]) -> Result<Vec<Complex64>> {
        if d.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: d.len(),
                context: "symbol length vs leakage matrix columns",
            });
        }
        Ok(self.rows().map(|row| dot(row, d)).collect())
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |m, j| self.get(m, j))
    }

    /// One rank-1 constraint `|a(ν_m)ᵀ x|² ≤ γ_m` per row.
    pub fn constraints(&self, gamma: &[f64]) -> Result<Vec<Rank1Constraint>> {
        if gamma.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: gamma.len(),
                context: "thresholds vs leakage rows",
            });
        }
        self.rows()
            .zip(gamma)
            .map(|(row, &g)| Rank1Constraint::from_leakage_row(row, g))
            .collect()
    }
}

/// `Σ a_j x_j` without conjugation.
pub(crate) fn dot(a: &[Complex64], x: &[Complex64]) -> Complex64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Builds `A[m, j] = a(ν_m, allocated[j])`. Points inside the occupied band
/// are accepted with a warning.
pub fn build_leakage_matrix(cfg: &CarrierConfig, points: &[f64]) -> Result<LeakageMatrix> {
    let (lo, hi) = cfg.occupied_range();
    for &nu in points {
        if nu > lo as f64 - 0.5 && nu < hi as f64 + 0.5 {
            warn!("frequency point {nu} lies inside the occupied band [{lo}, {hi}]");
        }
    }
    build_leakage_matrix_unchecked(cfg, points)
}

/// Same as [`build_leakage_matrix`] without the in-band warning; the power
/// calibration probes the occupied band on purpose.
pub(crate) fn build_leakage_matrix_unchecked(cfg: &CarrierConfig, points: &[f64]) -> Result<LeakageMatrix> {
    let mut data = Vec::with_capacity(points.len() * cfg.n_allocated());
    for &nu in points {
        for &k in cfg.allocated() {
            data.push(leakage_coefficient(cfg, nu, k)?);
        }
    }
    Ok(LeakageMatrix {
        rows: points.len(),
        cols: cfg.n_allocated(),
        data,
        points: points.to_vec(),
        carrier: cfg.clone(),
    })
}

/// `A d` (see [`LeakageMatrix::apply`]).
pub fn oobe_amplitudes(a: &LeakageMatrix, d: &[Complex64]) -> Result<Vec<Complex64>> {
    a.apply(d)
}

/// Linear thresholds `γ_m = cal_m · 10^((mask_m − signal_psd)/10)`.
///
/// `calibration[m]` is the power `|a(ν)ᵀd|²` observed at a single frequency
/// point when the 100 kHz PSD sits at the signal reference level.
pub fn mask_to_gamma(
    mask_dbm_per_100khz: &[f64],
    signal_psd_dbm_per_100khz: f64,
    calibration: &[f64],
) -> Result<Vec<f64>> {
    if mask_dbm_per_100khz.len() != calibration.len() {
        return Err(Error::DimensionMismatch {
            expected: mask_dbm_per_100khz.len(),
            actual: calibration.len(),
            context: "calibration vs mask levels",
        });
    }
    Ok(mask_dbm_per_100khz
        .iter()
        .zip(calibration)
        .map(|(&mask, &cal)| cal * 10f64.powf((mask - signal_psd_dbm_per_100khz) / 10.0))
        .collect())
}

/// Discrete mask: per-point linear power thresholds on `|a(ν_m)ᵀd|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    points: Vec<f64>,
    gamma: Vec<f64>,
    label: String,
}

impl MaskSpec {
    pub fn new(points: Vec<f64>, gamma: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if points.len() != gamma.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: gamma.len(),
                context: "mask thresholds vs frequency points",
            });
        }
        if let Some(nu) = points.iter().find(|nu| !nu.is_finite()) {
            return Err(Error::config("mask.points", format!("non-finite frequency {nu}")));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::config("mask.gamma", format!("threshold {g} must be positive")));
        }
        Ok(Self {
            points,
            gamma,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reorders points and thresholds together; `order` must be a
    /// permutation of `0..len`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len()
            || order
                .iter()
                .any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::config(
                "params.ordering",
                format!("must be a permutation of 0..{}", self.len()),
            ));
        }
        Ok(Self {
            points: order.iter().map(|&i| self.points[i]).collect(),
            gamma: order.iter().map(|&i| self.gamma[i]).collect(),
            label: self.label.clone(),
        })
    }
}

/// One row of a mask file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub frequency_khz: f64,
    pub mask_dbm_per_100khz: f64,
}

/// Absolute emission mask as listed in a mask file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskTable {
    pub label: String,
    pub entries: Vec<MaskEntry>,
}

const MASK_HEADER: &str = "frequency_khz,mask_dbm_per_100khz";

const SEM1_CSV: &str = include_str!("../presets/sem1.csv");
const SEM2_CSV: &str = include_str!("../presets/sem2.csv");

/// Names of the built-in masks.
pub const MASK_PRESETS: &[&str] = &["sem1", "sem2"];

impl MaskTable {
    /// Parses the CSV mask format: a `frequency_khz,mask_dbm_per_100khz`
    /// header followed by one pair per line. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(label: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.replace(' ', "") == MASK_HEADER => {}
            Some((line, h)) => {
                return Err(Error::MaskParse {
                    line,
                    reason: format!("expected header `{MASK_HEADER}`, found `{h}`"),
                })
            }
            None => {
                return Err(Error::MaskParse {
                    line: 1,
                    reason: "empty mask file".into(),
                })
            }
        }
        let mut entries = Vec::new();
        for (line, l) in lines {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::MaskParse {
                    line,
                    reason: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::MaskParse {
                        line,
                        reason: format!("{what} `{s}` is not a finite number"),
                    })
            };
            entries.push(MaskEntry {
                frequency_khz: num(fields[0], "frequency")?,
                mask_dbm_per_100khz: num(fields[1], "mask level")?,
            });
        }
        if entries.is_empty() {
            return Err(Error::MaskParse {
                line: 1,
                reason: "mask file lists no points".into(),
            });
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "sem1" => Self::parse("sem1", SEM1_CSV),
            "sem2" => Self::parse("sem2", SEM2_CSV),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(MASK_HEADER);
        s.push('\n');
        for e in &self.entries {
            let _ = writeln!(s, "{},{}", e.frequency_khz, e.mask_dbm_per_100khz);
        }
        s
    }

    /// Frequency points in subcarrier units for `cfg`.
    pub fn points(&self, cfg: &CarrierConfig) -> Vec<f64> {
        let scs_khz = cfg.subcarrier_spacing_hz() / 1e3;
        self.entries.iter().map(|e| e.frequency_khz / scs_khz).collect()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mask_dbm_per_100khz).collect()
    }

    /// Converts to linear thresholds using a single calibration constant for
    /// every point.
    pub fn to_mask_spec(
        &self,
        cfg: &CarrierConfig,
        signal_psd_dbm_per_100khz: f64,
        calibration: f64,
    ) -> Result<MaskSpec> {
        let cal = vec![calibration; self.entries.len()];
        let gamma = mask_to_gamma(&self.levels(), signal_psd_dbm_per_100khz, &cal)?;
        MaskSpec::new(self.points(cfg), gamma, self.label.clone())
    }
}
