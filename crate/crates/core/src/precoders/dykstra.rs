use num_complex::Complex64;

use super::{check_dims, dist_sqr, norm_sqr, project_rank1_in_place, ConvergenceTrace, Observer, PrecoderResult, Rank1Constraint};
use crate::error::{Error, Result};

/// Cycles 1..=10 are always traced, then every this many.
const TRACE_STRIDE: usize = 100;

/// Dykstra's alternating projections: converges to the point of the
/// intersection nearest to `d`.
///
/// Stops when one full cycle moves the iterate by less than `tol·‖d‖`. If
/// `max_iter` cycles pass first, the result is returned with
/// `converged = false`.
pub fn dykstra_oracle(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    max_iter: usize,
    tol: f64,
) -> Result<PrecoderResult> {
    dykstra_oracle_observed(constraints, d, max_iter, tol, &mut |_, _| {})
}

pub fn dykstra_oracle_observed(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    max_iter: usize,
    tol: f64,
    observer: Observer<'_>,
) -> Result<PrecoderResult> {
    if max_iter == 0 {
        return Err(Error::config("max_iter", "must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    check_dims(constraints, d)?;
    let n = d.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut corr = vec![vec![zero; n]; constraints.len()];
    let mut x = d.to_vec();
    let mut prev = d.to_vec();
    let mut y = vec![zero; n];
    let stop = tol * norm_sqr(d).sqrt();
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        for (c, p) in constraints.iter().zip(&mut corr) {
            for ((yj, xj), pj) in y.iter_mut().zip(&x).zip(p.iter()) {
                *yj = xj + pj;
            }
            project_rank1_in_place(&mut y, c);
            for ((pj, xj), yj) in p.iter_mut().zip(x.iter_mut()).zip(&y) {
                *pj += *xj - yj;
                *xj = *yj;
            }
        }
        iterations = it;
        let moved = dist_sqr(&x, &prev).sqrt();
        converged = moved < stop || (stop == 0.0 && moved == 0.0);
        if it <= 10 || it % TRACE_STRIDE == 0 || converged || it == max_iter {
            trace.push(PrecoderResult::record(constraints, d, &x, it, None));
        }
        observer(it, &x);
        if converged {
            break;
        }
        prev.copy_from_slice(&x);
    }
    let mut out = PrecoderResult::finish(constraints, d, x, trace, iterations, converged);
    if !converged {
        out.diagnostics
            .notes
            .push(format!("budget of {max_iter} cycles exhausted before tolerance {tol:e}"));
    }
    Ok(out)
}
