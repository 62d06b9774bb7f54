//! OFDM signal model: carrier numerology, QAM symbol generation and
//! CP-OFDM modulation onto an oversampled time grid.
//!
//! Subcarrier `k` of an `N`-point grid sits at the signed frequency offset
//! `k` for `k < N/2` and `k - N` otherwise, in units of the subcarrier
//! spacing. Allocated subcarriers are kept in the order given by the
//! configuration; [`CarrierConfig::centered`] produces ascending frequency
//! order, which is what the per-PRB metrics assume.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OFDM numerology and subcarrier allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    fft_size: usize,
    cp_len: usize,
    allocated: Vec<usize>,
    subcarrier_spacing_hz: f64,
    oversampling: usize,
}

impl CarrierConfig {
    pub fn new(
        fft_size: usize,
        cp_len: usize,
        allocated: Vec<usize>,
        subcarrier_spacing_hz: f64,
        oversampling: usize,
    ) -> Result<Self> {
        if fft_size == 0 {
            return Err(Error::config("fft_size", "must be positive"));
        }
        if cp_len >= fft_size {
            return Err(Error::config(
                "cp_len",
                format!("{cp_len} must be smaller than fft_size {fft_size}"),
            ));
        }
        if allocated.is_empty() {
            return Err(Error::config("allocated", "at least one subcarrier is required"));
        }
        let mut seen = vec![false; fft_size];
        for &k in &allocated {
            if k >= fft_size {
                return Err(Error::SubcarrierOutOfRange { index: k, fft_size });
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::config("allocated", format!("subcarrier {k} listed twice")));
            }
        }
        if !(subcarrier_spacing_hz.is_finite() && subcarrier_spacing_hz > 0.0) {
            return Err(Error::config("subcarrier_spacing", "must be a positive number"));
        }
        if oversampling == 0 {
            return Err(Error::config("oversampling", "must be at least 1"));
        }
        Ok(Self {
            fft_size,
            cp_len,
            allocated,
            subcarrier_spacing_hz,
            oversampling,
        })
    }

    /// `n_allocated` contiguous subcarriers on signed offsets
    /// `[-n_allocated/2, n_allocated - n_allocated/2)`, DC included, listed
    /// in ascending frequency.
    pub fn centered(
        fft_size: usize,
        cp_len: usize,
        n_allocated: usize,
        subcarrier_spacing_hz: f64,
        oversampling: usize,
    ) -> Result<Self> {
        if n_allocated == 0 || n_allocated > fft_size {
            return Err(Error::config(
                "n_allocated",
                format!("must be in 1..={fft_size}, got {n_allocated}"),
            ));
        }
        let n = fft_size as i64;
        let lo = -((n_allocated / 2) as i64);
        let allocated = (lo..lo + n_allocated as i64)
            .map(|s| s.rem_euclid(n) as usize)
            .collect();
        Self::new(fft_size, cp_len, allocated, subcarrier_spacing_hz, oversampling)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn allocated(&self) -> &[usize] {
        &self.allocated
    }

    pub fn n_allocated(&self) -> usize {
        self.allocated.len()
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_hz
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// Signed frequency offset of grid index `k`, in subcarriers.
    pub fn signed_offset(&self, k: usize) -> i64 {
        let n = self.fft_size as i64;
        let k = k as i64;
        if k < (n + 1) / 2 {
            k
        } else {
            k - n
        }
    }

    /// Signed offsets of the allocated subcarriers, in allocation order.
    pub fn allocated_offsets(&self) -> Vec<i64> {
        self.allocated.iter().map(|&k| self.signed_offset(k)).collect()
    }

    /// IFFT length of the emitted (oversampled) waveform.
    pub fn emission_fft_size(&self) -> usize {
        self.oversampling * self.fft_size
    }

    /// Cyclic-prefix length on the emitted sample grid.
    pub fn emission_cp_len(&self) -> usize {
        self.oversampling * self.cp_len
    }

    /// Samples per CP-OFDM symbol on the emitted grid.
    pub fn symbol_len(&self) -> usize {
        self.oversampling * (self.fft_size + self.cp_len)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.emission_fft_size() as f64 * self.subcarrier_spacing_hz
    }

    /// Lowest and highest signed allocated offsets.
    pub fn occupied_range(&self) -> (i64, i64) {
        let offs = self.allocated_offsets();
        let lo = offs.iter().copied().min().unwrap_or(0);
        let hi = offs.iter().copied().max().unwrap_or(0);
        (lo, hi)
    }
}

/// Gray-mapped square QAM with unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Constellation {
    Qam4,
    Qam16,
    Qam64,
}

impl TryFrom<u32> for Constellation {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            4 => Ok(Self::Qam4),
            16 => Ok(Self::Qam16),
            64 => Ok(Self::Qam64),
            other => Err(Error::config(
                "constellation.order",
                format!("{other} is not one of 4, 16, 64"),
            )),
        }
    }
}

impl From<Constellation> for u32 {
    fn from(c: Constellation) -> u32 {
        c.order() as u32
    }
}

impl Constellation {
    pub fn order(self) -> usize {
        match self {
            Self::Qam4 => 4,
            Self::Qam16 => 16,
            Self::Qam64 => 64,
        }
    }

    fn bits_per_axis(self) -> u32 {
        (self.order().trailing_zeros()) / 2
    }

    /// Maps symbol index `s` (`0..order`) to its constellation point. The
    /// high bits select the in-phase level, the low bits the quadrature
    /// level, each Gray coded.
    pub fn point(self, s: usize) -> Complex64 {
        assert!(s < self.order(), "symbol index {s} out of range");
        let b = self.bits_per_axis();
        let levels = 1usize << b;
        let mask = levels - 1;
        let level = |gray: usize| {
            let mut bin = gray;
            let mut shift = gray >> 1;
            while shift != 0 {
                bin ^= shift;
                shift >>= 1;
            }
            (2 * bin) as f64 - (levels - 1) as f64
        };
        let i = level((s >> b) & mask);
        let q = level(s & mask);
        let norm = (3.0 / (2.0 * (self.order() as f64 - 1.0))).sqrt();
        Complex64::new(i * norm, q * norm)
    }

    pub fn alphabet(self) -> Vec<Complex64> {
        (0..self.order()).map(|s| self.point(s)).collect()
    }
}

/// Frequency-domain data of one OFDM symbol, one entry per allocated
/// subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol(Vec<Complex64>);

impl OfdmSymbol {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self(data)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl std::ops::Deref for OfdmSymbol {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl From<Vec<Complex64>> for OfdmSymbol {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Deterministic generator for symbol `index` of a batch seeded by `seed`.
/// Each symbol draws from its own ChaCha stream, so batches can be generated
/// in any order or in parallel.
pub fn symbol_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `n_allocated` i.i.d. uniform constellation points.
pub fn gen_ofdm_symbol(cfg: &CarrierConfig, constellation: Constellation, seed: u64) -> OfdmSymbol {
    gen_ofdm_symbol_indexed(cfg, constellation, seed, 0)
}

/// Symbol `index` of the batch identified by `seed`.
pub fn gen_ofdm_symbol_indexed(
    cfg: &CarrierConfig,
    constellation: Constellation,
    seed: u64,
    index: u64,
) -> OfdmSymbol {
    let mut rng = symbol_rng(seed, index);
    let order = constellation.order();
    OfdmSymbol(
        (0..cfg.n_allocated())
            .map(|_| constellation.point(rng.gen_range(0..order)))
            .collect(),
    )
}

/// CP-OFDM modulator with a cached inverse FFT plan.
///
/// The grid of size `O·N` carries the data at the signed offsets of the
/// allocation and zeros elsewhere. The transform is scaled by `1/√(O·N)`,
/// so the symbol body has exactly the energy of the frequency-domain data,
/// and the last `O·N_CP` body samples are prepended as the cyclic prefix.
pub struct OfdmModulator {
    cfg: CarrierConfig,
    bins: Vec<usize>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OfdmModulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModulator").field("cfg", &self.cfg).finish()
    }
}

impl OfdmModulator {
    pub fn new(cfg: &CarrierConfig) -> Self {
        let size = cfg.emission_fft_size();
        let bins = cfg
            .allocated_offsets()
            .into_iter()
            .map(|s| s.rem_euclid(size as i64) as usize)
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(size);
        Self {
            cfg: cfg.clone(),
            bins,
            ifft,
        }
    }

    pub fn carrier(&self) -> &CarrierConfig {
        &self.cfg
    }

    pub fn modulate(&self, d: &[Complex64]) -> Result<Vec<Complex64>> {
        if d.len() != self.bins.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bins.len(),
                actual: d.len(),
                context: "symbol length vs allocated subcarriers",
            });
        }
        let size = self.cfg.emission_fft_size();
        let cp = self.cfg.emission_cp_len();
        let mut body = vec![Complex64::new(0.0, 0.0); size];
        for (&bin, &x) in self.bins.iter().zip(d) {
            body[bin] = x;
        }
        self.ifft.process(&mut body);
        let scale = 1.0 / (size as f64).sqrt();
        let mut out = Vec::with_capacity(size + cp);
        out.extend(body[size - cp..].iter().map(|x| x * scale));
        out.extend(body.iter().map(|x| x * scale));
        Ok(out)
    }
}

/// One-shot convenience wrapper around [`OfdmModulator`].
pub fn ofdm_modulate(cfg: &CarrierConfig, d: &[Complex64]) -> Result<Vec<Complex64>> {
    OfdmModulator::new(cfg).modulate(d)
}
