//! Spectral precoders.
//!
//! Every mask-compliant precoder solves the same problem: find the `d̄`
//! closest to the data `d` such that `|a(ν_m)ᵀ d̄|² ≤ γ_m` for every mask
//! point. Each inequality is a rank-1 quadratic constraint
//! ([`Rank1Constraint`]) with a closed-form Euclidean projection
//! ([`project_rank1`]). The solvers differ in how they combine those
//! projections:
//!
//! * [`nsp_precode`]: closed-form projection onto the null space of `A`
//!   (hard notches, no thresholds).
//! * [`pocs_precode`]: cyclic projections; finds a feasible point.
//! * [`admm_precode`]: scaled consensus ADMM, one local copy per constraint.
//! * [`ssp_precode`]: coordinate ascent on the Lagrange multipliers with the
//!   inverse maintained by Sherman–Morrison updates.
//! * [`dykstra_oracle`]: Dykstra's corrected cyclic projections, which
//!   converges to the exact minimiser; used as the reference solution.

mod admm;
mod dykstra;
mod nsp;
mod pocs;
mod projection;
mod sherman_morrison;
mod ssp;

pub use admm::{admm_precode, admm_precode_observed, AdmmState};
pub use dykstra::{dykstra_oracle, dykstra_oracle_observed};
pub use nsp::{nsp_precode, nsp_projector};
pub use pocs::{pocs_precode, pocs_precode_observed};
pub use projection::{project_rank1, project_rank1_in_place};
pub use sherman_morrison::{sherman_morrison_apply, sherman_morrison_update, SM_MIN_DENOMINATOR};
pub use ssp::{ssp_precode, ssp_precode_with, PhaseReference, SspOptions, SspState};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor used in place of `-∞` dB (zero power).
pub const DB_FLOOR: f64 = -400.0;

/// Called after every iteration (sweep, for SSP) with the 1-based
/// iteration index and the current iterate.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &[Complex64]);

/// `{x : |uᴴx|² ≤ b}` with `u = a(ν)*`, so `uᴴx = a(ν)ᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Constraint {
    u: Vec<Complex64>,
    u_norm_sqr: f64,
    b: f64,
}

impl Rank1Constraint {
    pub fn new(u: Vec<Complex64>, b: f64) -> Result<Self> {
        let u_norm_sqr: f64 = u.iter().map(|x| x.norm_sqr()).sum();
        if !(u_norm_sqr > 0.0 && u_norm_sqr.is_finite()) {
            return Err(Error::config("constraint.u", "direction must be finite and non-zero"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::config("constraint.b", format!("threshold {b} must be positive")));
        }
        Ok(Self { u, u_norm_sqr, b })
    }

    /// Constraint `|aᵀx|² ≤ gamma` for a leakage row `a`.
    pub fn from_leakage_row(a: &[Complex64], gamma: f64) -> Result<Self> {
        Self::new(a.iter().map(|x| x.conj()).collect(), gamma)
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `‖u‖²`, the non-zero eigenvalue of `uuᴴ`.
    pub fn u_norm_sqr(&self) -> f64 {
        self.u_norm_sqr
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `uᴴx`.
    pub fn inner(&self, x: &[Complex64]) -> Complex64 {
        self.u.iter().zip(x).map(|(u, x)| u.conj() * x).sum()
    }

    /// `10·log10(|uᴴx|² / b)`; positive when violated.
    pub fn violation_db(&self, x: &[Complex64]) -> f64 {
        power_db(self.inner(x).norm_sqr() / self.b)
    }
}

pub(crate) fn power_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Largest violation over all constraints in dB, [`DB_FLOOR`] when empty.
pub fn max_violation_db(constraints: &[Rank1Constraint], x: &[Complex64]) -> f64 {
    constraints
        .iter()
        .map(|c| c.violation_db(x))
        .fold(DB_FLOOR, f64::max)
}

pub(crate) fn check_dims(constraints: &[Rank1Constraint], d: &[Complex64]) -> Result<()> {
    match constraints.iter().find(|c| c.dim() != d.len()) {
        Some(c) => Err(Error::DimensionMismatch {
            expected: d.len(),
            actual: c.dim(),
            context: "constraint dimension vs symbol length",
        }),
        None => Ok(()),
    }
}

pub(crate) fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub(crate) fn dist_sqr(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum()
}

pub(crate) fn evm_pct(d: &[Complex64], d_bar: &[Complex64]) -> f64 {
    let n = norm_sqr(d);
    if n > 0.0 {
        100.0 * (dist_sqr(d, d_bar) / n).sqrt()
    } else {
        0.0
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖d − d̄⁽ⁱ⁾‖²`.
    pub objective: f64,
    pub max_violation_db: f64,
    /// ADMM only: `max_m ‖y_m − d̄‖`.
    pub primal_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Iteration indices must strictly increase.
    pub fn push(&mut self, record: IterationRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.iteration > last.iteration,
                "trace iterations must increase ({} after {})",
                record.iteration,
                last.iteration
            );
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// First iteration from which every later recorded iterate has a max
    /// violation of at most `tol_db`; `None` if the final one is still
    /// violating.
    pub fn sustained_compliance(&self, tol_db: f64) -> Option<usize> {
        let last = self.records.last()?;
        if last.max_violation_db > tol_db {
            return None;
        }
        let start = self
            .records
            .iter()
            .rposition(|r| r.max_violation_db > tol_db)
            .map_or(0, |i| i + 1);
        Some(self.records[start].iteration)
    }
}

/// Extra information reported by some solvers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Dense matrix inversions performed (SSP falls back to one when a
    /// Sherman–Morrison denominator vanishes).
    pub dense_inversions: usize,
    /// Final Lagrange multipliers (SSP).
    pub multipliers: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// Output of a precoder run.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderResult {
    pub d_bar: Vec<Complex64>,
    pub trace: ConvergenceTrace,
    pub evm_pct: f64,
    /// `max_m 10·log10(|a(ν_m)ᵀd̄|²/γ_m)`, negative when compliant. `None`
    /// for NSP, which has no thresholds.
    pub max_violation_db: Option<f64>,
    pub iterations: usize,
    /// Whether a tolerance-based stop fired (always `true` for fixed-budget
    /// runs that complete their budget, except for the oracle, which reports
    /// whether its displacement tolerance was met).
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl PrecoderResult {
    fn finish(
        constraints: &[Rank1Constraint],
        d: &[Complex64],
        d_bar: Vec<Complex64>,
        trace: ConvergenceTrace,
        iterations: usize,
        converged: bool,
    ) -> Self {
        Self {
            evm_pct: evm_pct(d, &d_bar),
            max_violation_db: Some(max_violation_db(constraints, &d_bar)),
            d_bar,
            trace,
            iterations,
            converged,
            diagnostics: Diagnostics::default(),
        }
    }

    pub(crate) fn record(
        constraints: &[Rank1Constraint],
        d: &[Complex64],
        x: &[Complex64],
        iteration: usize,
        primal_residual: Option<f64>,
    ) -> IterationRecord {
        IterationRecord {
            iteration,
            objective: dist_sqr(d, x),
            max_violation_db: max_violation_db(constraints, x),
            primal_residual,
        }
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    /// Random constraints that are active at `d` (threshold below the
    /// current power).
    pub fn active_constraints(rng: &mut ChaCha8Rng, d: &[Complex64], m: usize) -> Vec<Rank1Constraint> {
        (0..m)
            .map(|_| {
                let u = cvec(rng, d.len());
                let c = Rank1Constraint::new(u, 1.0).unwrap();
                let p = c.inner(d).norm_sqr();
                Rank1Constraint::new(c.u().to_vec(), p * rng.gen_range(0.05..0.5)).unwrap()
            })
            .collect()
    }
}
