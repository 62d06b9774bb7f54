use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sherman_morrison::{rank1_correct, SM_MIN_DENOMINATOR};
use super::{check_dims, ConvergenceTrace, Diagnostics, Observer, PrecoderResult, Rank1Constraint};
use crate::error::{Error, Result};

/// How the multiplier update turns the complex `α₁ = aᵀG⁻¹d` into a real
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "phi", rename_all = "snake_case")]
pub enum PhaseReference {
    /// Use `|α₁|`, i.e. `φ = arg α₁` at every update. This is the value of
    /// the real multiplier that puts the constraint exactly on its boundary.
    #[default]
    Aligned,
    /// Use `Re{α₁·e^{−jφ}}` with a constant `φ`.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SspOptions {
    pub n_iter: usize,
    pub phase: PhaseReference,
    /// Early stop once the max violation after a sweep is at most this.
    pub tol_db: f64,
}

impl SspOptions {
    pub fn fixed(n_iter: usize) -> Self {
        Self {
            n_iter,
            phase: PhaseReference::Aligned,
            tol_db: f64::NEG_INFINITY,
        }
    }
}

/// Multipliers and the running inverse `(I + Σ μ_n u_n u_nᴴ)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct SspState {
    pub mu: Vec<f64>,
    pub g_inv: DMatrix<Complex64>,
    pub phase: PhaseReference,
    /// Dense inversions done so far.
    pub dense_inversions: usize,
}

impl SspState {
    /// Initial multipliers `max(0, (|uᴴd|·√(λ/γ) − 1)/λ)` with `λ = ‖u‖²`;
    /// the inverse is accumulated from the identity by rank-1 updates.
    pub fn new(constraints: &[Rank1Constraint], d: &[Complex64], phase: PhaseReference) -> Result<Self> {
        check_dims(constraints, d)?;
        let n = d.len();
        let mu: Vec<f64> = constraints
            .iter()
            .map(|c| {
                let lambda = c.u_norm_sqr();
                ((c.inner(d).norm() * (lambda / c.b()).sqrt() - 1.0) / lambda).max(0.0)
            })
            .collect();
        let mut st = Self {
            mu,
            g_inv: DMatrix::identity(n, n),
            phase,
            dense_inversions: 0,
        };
        for (c, &mu) in constraints.iter().zip(&st.mu) {
            if mu > 0.0 {
                let u = DVector::from_column_slice(c.u());
                let w = &st.g_inv * &u;
                rank1_correct(&mut st.g_inv, &w, u.dotc(&w).re, mu)?;
            }
        }
        Ok(st)
    }

    /// One coordinate sweep over the constraints in order.
    pub fn sweep(&mut self, constraints: &[Rank1Constraint], d: &[Complex64]) -> Result<()> {
        let dv = DVector::from_column_slice(d);
        for (m, c) in constraints.iter().enumerate() {
            let u = DVector::from_column_slice(c.u());
            let mut w = &self.g_inv * &u;
            let mut s = u.dotc(&w).re;
            let mu = self.mu[m];
            if mu > 0.0 {
                let denom = 1.0 - mu * s;
                if denom.abs() < SM_MIN_DENOMINATOR {
                    debug!("SSP downdate of constraint {m} singular ({denom:.3e}); dense rebuild");
                    self.mu[m] = 0.0;
                    self.rebuild(constraints)?;
                    w = &self.g_inv * &u;
                    s = u.dotc(&w).re;
                } else {
                    rank1_correct(&mut self.g_inv, &w, s, -mu)?;
                    // G_{\m}⁻¹u = G⁻¹u / (1 − μ·uᴴG⁻¹u)
                    w /= Complex64::new(denom, 0.0);
                    s /= denom;
                }
            }
            let alpha1 = w.dotc(&dv);
            let num = match self.phase {
                PhaseReference::Aligned => alpha1.norm(),
                PhaseReference::Fixed(phi) => (alpha1 * Complex64::from_polar(1.0, -phi)).re,
            };
            let sg = c.b().sqrt();
            let new_mu = ((num - sg) / (sg * s)).max(0.0);
            self.mu[m] = new_mu;
            if new_mu > 0.0 && rank1_correct(&mut self.g_inv, &w, s, new_mu).is_err() {
                self.rebuild(constraints)?;
            }
        }
        Ok(())
    }

    /// `d̄ = G⁻¹d`.
    pub fn d_bar(&self, d: &[Complex64]) -> Vec<Complex64> {
        (&self.g_inv * DVector::from_column_slice(d)).as_slice().to_vec()
    }

    /// `‖G⁻¹ − G⁻ᴴ‖_F`.
    pub fn hermitian_error(&self) -> f64 {
        (&self.g_inv - self.g_inv.adjoint()).norm()
    }

    fn rebuild(&mut self, constraints: &[Rank1Constraint]) -> Result<()> {
        let n = self.g_inv.nrows();
        let mut g = DMatrix::<Complex64>::identity(n, n);
        for (c, &mu) in constraints.iter().zip(&self.mu) {
            if mu > 0.0 {
                let u = DVector::from_column_slice(c.u());
                g.gerc(Complex64::new(mu, 0.0), &u, &u, Complex64::new(1.0, 0.0));
            }
        }
        self.dense_inversions += 1;
        self.g_inv = g
            .cholesky()
            .map(|ch| ch.inverse())
            .ok_or(Error::SingularUpdate { denominator: 0.0 })?;
        Ok(())
    }
}

/// Multiplier coordinate ascent for `n_iter` sweeps with the default phase
/// rule.
pub fn ssp_precode(constraints: &[Rank1Constraint], d: &[Complex64], n_iter: usize) -> Result<PrecoderResult> {
    ssp_precode_with(constraints, d, &SspOptions::fixed(n_iter), &mut |_, _| {})
}

pub fn ssp_precode_with(
    constraints: &[Rank1Constraint],
    d: &[Complex64],
    opts: &SspOptions,
    observer: Observer<'_>,
) -> Result<PrecoderResult> {
    if opts.n_iter == 0 {
        return Err(Error::config("n_iter", "must be at least 1"));
    }
    let mut st = SspState::new(constraints, d, opts.phase)?;
    let mut trace = ConvergenceTrace::new();
    let mut converged = !opts.tol_db.is_finite();
    let mut iterations = 0;
    let mut x = d.to_vec();
    for it in 1..=opts.n_iter {
        st.sweep(constraints, d)?;
        iterations = it;
        x = st.d_bar(d);
        let rec = PrecoderResult::record(constraints, d, &x, it, None);
        trace.push(rec);
        observer(it, &x);
        if rec.max_violation_db <= opts.tol_db {
            converged = true;
            break;
        }
    }
    let mut out = PrecoderResult::finish(constraints, d, x, trace, iterations, converged);
    out.diagnostics = Diagnostics {
        dense_inversions: st.dense_inversions,
        multipliers: Some(st.mu),
        notes: Vec::new(),
    };
    Ok(out)
}
