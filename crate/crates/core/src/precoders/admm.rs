use num_complex::Complex64;

use super::{
    check_dims, dist_sqr, norm_sqr, project_rank1_in_place, ConvergenceTrace, Observer, PrecoderResult,
    Rank1Constraint,
};
use crate::error::{Error, Result};

/// Relative size (against `‖d‖`) of the primal residual and of the change
/// between iterates below which ADMM may stop.
const REL_STOP: f64 = 1e-6;

/// Local copies `y_m` and scaled duals `z_m` of consensus ADMM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub y: Vec<Vec<Complex64>>,
    pub z: Vec<Vec<Complex64>>,
    pub rho: f64,
}

impl AdmmState {
    /// All-zero state for `m` constraints on vectors of length `n`.
    pub fn new(m: usize, n: usize, rho: f64) -> Result<Self> {
        let zero = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        Self::from_parts(zero.clone(), zero, rho)
    }

    pub fn from_parts(y: Vec<Vec<Complex64>>, z: Vec<Vec<Complex64>>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::config("rho", format!("{rho} must be positive")));
        }
        if y.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                actual: z.len(),
                context: "ADMM duals vs local copies",
            });
        }
        if let Some(n) = y.first().map(Vec::len) {
            if let Some(bad) = y.iter().chain(&z).find(|v| v.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: bad.len(),
                    context: "ADMM state vector length",
                });
            }
        }
        Ok(Self { y, z, rho })
    }

    /// One iteration. Writes the consensus variable into `d_bar` and returns
    /// the primal residual `max_m ‖y_m − d̄‖`.
    pub fn step(&mut self, constraints: &[Rank1Constraint], d: &[Complex64], d_bar: &mut [Complex64]) -> f64 {
        let m = constraints.len();
        let scale = 1.0 / (1.0 + self.rho * m as f64);
        for (j, out) in d_bar.iter_mut().enumerate() {
            let s: Complex64 = self.y.iter().zip(&self.z).map(|(y, z)| y[j] + z[j]).sum();
            *out = (d[j] + s * self.rho) * scale;
        }
        let mut residual = 0.0f64;
        for ((c, y), z) in constraints.iter().zip(&mut self.y).zip(&mut self.z) {
            for ((yj, zj), dj) in y.iter_mut().zip(z.iter()).zip(d_bar.iter()) {
                *yj = dj - zj;
            }
            project_rank1_in_place(y, c);
            let mut r = 0.0;
            for ((zj, yj), dj) in z.iter_mut().zip(y.iter()).zip(d_bar.iter()) {
                let diff = yj - dj;
                *zj += diff;
                r += diff.norm_sqr();
            }
            residual = residual.max(r.sqrt());
        }
        residual
    }
}

/// Scaled consensus ADMM from `y = z = 0`.
///
/// Stops after `max_iter` iterations, or once the max violation is at most
/// `tol_db` while both the primal residual and the change from the previous
/// iterate are below `1e-6·‖d‖` (the first iterate is compared against `d`).
/// Pass `f64::NEG_INFINITY` as `tol_db` to always run the full budget.
pub fn admm_precode(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    rho: f64,
    max_iter: usize,
    tol_db: f64,
) -> Result<PrecoderResult> {
    admm_precode_observed(constraints, d, rho, max_iter, tol_db, &mut |_, _| {})
}

pub fn admm_precode_observed(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    rho: f64,
    max_iter: usize,
    tol_db: f64,
    observer: Observer<'_>,
) -> Result<PrecoderResult> {
    if max_iter == 0 {
        return Err(Error::config("max_iter", "must be at least 1"));
    }
    check_dims(constraints, d)?;
    let mut state = AdmmState::new(constraints.len(), d.len(), rho)?;
    let stop = REL_STOP * norm_sqr(d).sqrt();
    let mut prev = d.to_vec();
    let mut x = d.to_vec();
    let mut trace = ConvergenceTrace::new();
    let mut converged = !tol_db.is_finite();
    let mut iterations = 0;
    for it in 1..=max_iter {
        let residual = state.step(constraints, d, &mut x);
        iterations = it;
        let rec = PrecoderResult::record(constraints, d, &x, it, Some(residual));
        trace.push(rec);
        observer(it, &x);
        let change = dist_sqr(&x, &prev).sqrt();
        if rec.max_violation_db <= tol_db && residual <= stop && change <= stop {
            converged = true;
            break;
        }
        prev.copy_from_slice(&x);
    }
    Ok(PrecoderResult::finish(constraints, d, x, trace, iterations, converged))
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{active_constraints, cvec, rng};
    use super::super::{dykstra_oracle, max_violation_db};
    use super::*;

    #[test]
    fn empty_set_returns_d_at_first_iteration() {
        let mut r = rng(1);
        let d = cvec(&mut r, 8);
        let out = admm_precode(&[], &d, 10.0, 50, 0.01).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.d_bar.iter().zip(&d).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn feasible_fixed_point_is_stationary() {
        let mut r = rng(2);
        let d = cvec(&mut r, 8);
        let cs: Vec<_> = active_constraints(&mut r, &d, 3)
            .into_iter()
            .map(|c| Rank1Constraint::new(c.u().to_vec(), c.inner(&d).norm_sqr() * 1.5).unwrap())
            .collect();
        let zero = vec![vec![Complex64::new(0.0, 0.0); 8]; 3];
        let mut st = AdmmState::from_parts(vec![d.clone(); 3], zero.clone(), 10.0).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        let res = st.step(&cs, &d, &mut x);
        assert!(res < 1e-12);
        assert!(x.iter().zip(&d).all(|(a, b)| (a - b).norm() < 1e-12));
        for (y, z) in st.y.iter().zip(&st.z) {
            assert!(y.iter().zip(&d).all(|(a, b)| (a - b).norm() < 1e-12));
            assert!(z.iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn converges_to_oracle() {
        let mut r = rng(3);
        for _ in 0..5 {
            let d = cvec(&mut r, 12);
            let cs = active_constraints(&mut r, &d, 3);
            let admm = admm_precode(&cs, &d, 10.0, 50_000, 0.01).unwrap();
            let orc = dykstra_oracle(&cs, &d, 100_000, 1e-13).unwrap();
            assert!(admm.converged);
            assert!(max_violation_db(&cs, &admm.d_bar) <= 0.01);
            assert!((admm.evm_pct - orc.evm_pct).abs() <= 0.01 * orc.evm_pct);
            assert!(admm.trace.records().iter().all(|r| r.primal_residual.is_some()));
        }
    }

    #[test]
    fn bad_state_rejected() {
        assert!(AdmmState::new(2, 3, 0.0).is_err());
        let v = vec![vec![Complex64::new(0.0, 0.0); 3]];
        let w = vec![vec![Complex64::new(0.0, 0.0); 2]];
        assert!(AdmmState::from_parts(v, w, 1.0).is_err());
    }
}
