use std::sync::OnceLock;

use super::rt::MAX_EXACT_DEGREE;
use crate::poly::{monomials, Coeff, Poly, Rational};

/// Exactly orthogonal (unnormalized) basis of `P_p(K̂)` obtained from the
/// graded monomials, with the squared norms.
pub fn orthogonal_basis_exact(p: usize) -> Vec<(Poly<Rational>, Rational)> {
    let mut out: Vec<(Poly<Rational>, Rational)> = Vec::new();
    for (i, j) in monomials(p) {
        let m = Poly::monomial(i, j, crate::poly::rat(1, 1));
        let mut w = m.clone();
        for (u, uu) in &out {
            let c = (&m * u).integrate_ref() / uu.clone();
            w = &w - &u.scale(&c);
        }
        let ww = (&w * &w).integrate_ref();
        out.push((w, ww));
    }
    out
}

/// `L²(K̂)`-orthonormal basis of `P_p(K̂)`; the first member is the constant
/// `√2`. Cached per degree.
pub fn q_basis_f64(p: usize) -> &'static [Poly<f64>] {
    static CACHE: [OnceLock<Vec<Poly<f64>>>; 2 * MAX_EXACT_DEGREE + 3] =
        [const { OnceLock::new() }; 2 * MAX_EXACT_DEGREE + 3];
    CACHE[p].get_or_init(|| {
        orthogonal_basis_exact(p)
            .into_iter()
            .map(|(w, ww)| w.to_f64().scale(&(1.0 / ww.to_f64_lossy().sqrt())))
            .collect()
    })
}
