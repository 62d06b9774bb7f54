use num_complex::Complex64;

use super::Rank1Constraint;

/// Euclidean projection onto `{z : |uᴴz|² ≤ b}`.
///
/// Points already inside the set are returned unchanged. Outside, the point
/// moves along `u` only:
/// `x + ((√b − |uᴴx|) / (‖u‖²·|uᴴx|))·u·(uᴴx)`, which lands exactly on the
/// boundary `|uᴴz| = √b`.
pub fn project_rank1(x: &[Complex64], c: &Rank1Constraint) -> Vec<Complex64> {
    let mut out = x.to_vec();
    project_rank1_in_place(&mut out, c);
    out
}

/// In-place [`project_rank1`]; returns whether `x` moved.
pub fn project_rank1_in_place(x: &mut [Complex64], c: &Rank1Constraint) -> bool {
    let s = c.inner(x);
    let mag = s.norm();
    if mag * mag <= c.b() {
        return false;
    }
    let coef = s * ((c.b().sqrt() - mag) / (c.u_norm_sqr() * mag));
    for (xi, ui) in x.iter_mut().zip(c.u()) {
        *xi += ui * coef;
    }
    true
}
