use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Updates with `|1 + δ·uᴴG⁻¹u|` below this are rejected.
pub const SM_MIN_DENOMINATOR: f64 = 1e-12;

/// `(G + δ·uuᴴ)⁻¹` from a Hermitian `G⁻¹`.
pub fn sherman_morrison_apply(
    g_inv: &DMatrix<Complex64>,
    u: &[Complex64],
    delta_mu: f64,
) -> Result<DMatrix<Complex64>> {
    let mut out = g_inv.clone();
    sherman_morrison_update(&mut out, u, delta_mu)?;
    Ok(out)
}

/// In-place [`sherman_morrison_apply`]. On error `g_inv` is untouched.
/// Returns `G⁻¹u` evaluated before the update.
pub fn sherman_morrison_update(
    g_inv: &mut DMatrix<Complex64>,
    u: &[Complex64],
    delta_mu: f64,
) -> Result<DVector<Complex64>> {
    let n = g_inv.nrows();
    if g_inv.ncols() != n || u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: u.len(),
            context: "Sherman-Morrison vector vs inverse",
        });
    }
    let u = DVector::from_column_slice(u);
    let w = &*g_inv * &u;
    if delta_mu == 0.0 {
        return Ok(w);
    }
    rank1_correct(g_inv, &w, u.dotc(&w).re, delta_mu)?;
    Ok(w)
}

/// `G⁻¹ ← G⁻¹ − δ·wwᴴ/(1 + δs)` with `w = G⁻¹u`, `s = uᴴw`.
pub(crate) fn rank1_correct(
    g_inv: &mut DMatrix<Complex64>,
    w: &DVector<Complex64>,
    s: f64,
    delta_mu: f64,
) -> Result<()> {
    let denom = 1.0 + delta_mu * s;
    if !(denom.abs() >= SM_MIN_DENOMINATOR) {
        return Err(Error::SingularUpdate { denominator: denom });
    }
    g_inv.gerc(
        Complex64::new(-delta_mu / denom, 0.0),
        w,
        w,
        Complex64::new(1.0, 0.0),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{cvec, rng};
    use super::*;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_delta_is_identity() {
        let g = DMatrix::from_fn(3, 3, |i, j| c((i + j) as f64) + if i == j { c(5.0) } else { c(0.0) });
        let u = vec![c(1.0), c(2.0), c(-1.0)];
        assert_eq!(sherman_morrison_apply(&g, &u, 0.0).unwrap(), g);
    }

    #[test]
    fn scalar_case() {
        let g = DMatrix::<Complex64>::identity(4, 4);
        let mut e1 = vec![c(0.0); 4];
        e1[0] = c(1.0);
        let out = sherman_morrison_apply(&g, &e1, 1.0).unwrap();
        let mut want = DMatrix::<Complex64>::identity(4, 4);
        want[(0, 0)] = c(0.5);
        assert!((out - want).norm() < 1e-15);
    }

    #[test]
    fn singular_update_rejected() {
        let g = DMatrix::<Complex64>::identity(2, 2);
        let u = vec![c(1.0), c(0.0)];
        let mut g2 = g.clone();
        assert!(matches!(
            sherman_morrison_update(&mut g2, &u, -1.0),
            Err(Error::SingularUpdate { .. })
        ));
        assert_eq!(g2, g);
    }

    #[test]
    fn matches_dense_inverse() {
        let mut r = rng(3);
        for _ in 0..40 {
            let n = r.gen_range(1..20);
            let b = DMatrix::from_fn(n, n, |_, _| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
            let g = &b * b.adjoint() + DMatrix::identity(n, n) * c(0.5);
            let g_inv = g.clone().try_inverse().unwrap();
            let u = cvec(&mut r, n);
            let delta = r.gen_range(0.01..10.0);
            let uv = DVector::from_column_slice(&u);
            let dense = (g + (&uv * uv.adjoint()) * c(delta)).try_inverse().unwrap();
            let sm = sherman_morrison_apply(&g_inv, &u, delta).unwrap();
            assert!((&sm - &dense).norm() / dense.norm() < 1e-9);
            assert!((&sm - sm.adjoint()).norm() < 1e-10 * sm.norm());
        }
    }
}
