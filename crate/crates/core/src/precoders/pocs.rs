use log::warn;
use num_complex::Complex64;

use super::{check_dims, project_rank1_in_place, ConvergenceTrace, Observer, PrecoderResult, Rank1Constraint};
use crate::error::{Error, Result};

/// Cyclic projections starting from `d`. Each sweep projects onto every
/// constraint in order. Stops after `max_iter` sweeps or once the max
/// violation is at most `tol_db` (pass `f64::NEG_INFINITY` to always run the
/// full budget).
pub fn pocs_precode(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    max_iter: usize,
    tol_db: f64,
) -> Result<PrecoderResult> {
    pocs_precode_observed(constraints, d, max_iter, tol_db, &mut |_, _| {})
}

pub fn pocs_precode_observed(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    max_iter: usize,
    tol_db: f64,
    observer: Observer<'_>,
) -> Result<PrecoderResult> {
    if max_iter == 0 {
        return Err(Error::config("max_iter", "must be at least 1"));
    }
    check_dims(constraints, d)?;
    let mut x = d.to_vec();
    let mut trace = ConvergenceTrace::new();
    let mut prev = f64::INFINITY;
    let mut warned = false;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        for c in constraints {
            project_rank1_in_place(&mut x, c);
        }
        iterations = it;
        let rec = PrecoderResult::record(constraints, d, &x, it, None);
        if rec.max_violation_db > prev + 1e-9 && !warned {
            warn!(
                "POCS max violation rose from {prev:.4} dB to {:.4} dB at sweep {it}",
                rec.max_violation_db
            );
            warned = true;
        }
        prev = rec.max_violation_db;
        trace.push(rec);
        observer(it, &x);
        if rec.max_violation_db <= tol_db {
            converged = true;
            break;
        }
    }
    if !tol_db.is_finite() {
        converged = true;
    }
    Ok(PrecoderResult::finish(constraints, d, x, trace, iterations, converged))
}
