use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::{dist_sqr, evm_pct, ConvergenceTrace, Diagnostics, IterationRecord, PrecoderResult};
use crate::error::{Error, Result};
use crate::leakage::LeakageMatrix;

/// Smallest accepted `λ_min/λ_max` of `AAᴴ`.
const RCOND_MIN: f64 = 1e-12;

fn gram_cholesky(a: &DMatrix<Complex64>) -> Result<Cholesky<Complex64, Dyn>> {
    let gram = a * a.adjoint();
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.max();
    let rcond = if max > 0.0 { eig.min() / max } else { 0.0 };
    if !(rcond >= RCOND_MIN) {
        return Err(Error::RankDeficient { rcond });
    }
    gram.cholesky().ok_or(Error::RankDeficient { rcond })
}

fn check_cols(a: &LeakageMatrix, n: usize) -> Result<()> {
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: a.n_cols(),
            actual: n,
            context: "NSP symbol length vs leakage matrix columns",
        });
    }
    Ok(())
}

/// Notching precoder `d̄ = d − Aᴴ(AAᴴ)⁻¹A·d`: the closest vector to `d` with
/// zero emission at every point of `A`.
pub fn nsp_precode(a: &LeakageMatrix, d: &[Complex64]) -> Result<PrecoderResult> {
    check_cols(a, d.len())?;
    let mut d_bar = d.to_vec();
    if a.n_rows() > 0 {
        let am = a.to_dmatrix();
        let chol = gram_cholesky(&am)?;
        let dv = DVector::from_column_slice(d);
        let y = chol.solve(&(&am * &dv));
        let corr = am.adjoint() * y;
        for (x, c) in d_bar.iter_mut().zip(corr.iter()) {
            *x -= c;
        }
    }
    let mut trace = ConvergenceTrace::new();
    trace.push(IterationRecord {
        iteration: 1,
        objective: dist_sqr(d, &d_bar),
        max_violation_db: super::DB_FLOOR,
        primal_residual: None,
    });
    Ok(PrecoderResult {
        evm_pct: evm_pct(d, &d_bar),
        d_bar,
        trace,
        max_violation_db: None,
        iterations: 1,
        converged: true,
        diagnostics: Diagnostics::default(),
    })
}

/// Dense `I − Aᴴ(AAᴴ)⁻¹A`. Meant for small problems and checks.
pub fn nsp_projector(a: &LeakageMatrix) -> Result<DMatrix<Complex64>> {
    let n = a.n_cols();
    let mut p = DMatrix::identity(n, n);
    if a.n_rows() > 0 {
        let am = a.to_dmatrix();
        let chol = gram_cholesky(&am)?;
        p -= am.adjoint() * chol.solve(&am);
    }
    Ok(p)
}
