//! Poincaré liftings on the reference triangle: right inverses of the
//! divergence that map polynomials to polynomials, in exact arithmetic.
//!
//! For a base point `a`, `P_a u(x) = (x − a) ∫₀¹ τ u(a + τ(x − a)) dτ`. The
//! smoothed lifting averages `P_a` over `a` against a unit-mass weight `ψ`
//! supported in a ball inside `K̂`.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use faer::linalg::solvers::SolveLstsq;

use crate::exact;
use crate::poly::{monomials, rat, Poly, Rational, VecPoly};
use crate::ref_elements::{build_rt_basis, local_span, q_basis_f64, MAX_EXACT_DEGREE};
use crate::{Error, Result};

fn factorial(n: usize) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * rat(k as i64, 1))
}

fn binomial(n: usize, k: usize) -> Rational {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `∫₀¹ τ^{k+1} (1 − τ)^n dτ = (k+1)! n! / (k+n+2)!`.
fn beta_integral(k: usize, n: usize) -> Rational {
    factorial(k + 1) * factorial(n) / factorial(k + n + 2)
}

/// Radial polynomial bump `ψ(a) ∝ (R² − |a − c|²)^m` on the ball `B(c, R)`,
/// normalized to unit mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingWeight {
    #[serde(serialize_with = "ser_rat2")]
    pub center: [Rational; 2],
    #[serde(serialize_with = "ser_rat")]
    pub radius_sq: Rational,
    pub exponent: usize,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_rat2<S: serde::Serializer>(r: &[Rational; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for v in r {
        seq.serialize_element(&v.to_string())?;
    }
    seq.end()
}

impl Default for SmoothingWeight {
    /// Ball centred at `(1/4, 1/4)` with radius `1/8`, exponent 2.
    fn default() -> Self {
        Self { center: [rat(1, 4), rat(1, 4)], radius_sq: rat(1, 64), exponent: 2 }
    }
}

impl SmoothingWeight {
    pub fn new(center: [Rational; 2], radius_sq: Rational, exponent: usize) -> Result<Self> {
        let w = Self { center, radius_sq, exponent };
        w.validate()?;
        Ok(w)
    }

    /// The ball must lie strictly inside the reference triangle.
    pub fn validate(&self) -> Result<()> {
        let [cx, cy] = &self.center;
        let r2 = &self.radius_sq;
        if !r2.is_positive() {
            return Err(Error::Config("smoothing ball radius must be positive".into()));
        }
        let hyp = Rational::one() - cx - cy;
        let inside = cx.is_positive()
            && cy.is_positive()
            && hyp.is_positive()
            && &(cx * cx) > r2
            && &(cy * cy) > r2
            && &(&hyp * &hyp / rat(2, 1)) > r2;
        if inside {
            Ok(())
        } else {
            Err(Error::Config("smoothing ball is not strictly inside the reference triangle".into()))
        }
    }

    /// Unnormalized `ψ` (without the constant) at a point.
    pub fn shape_at(&self, a: [f64; 2]) -> f64 {
        let c = [crate::poly::Coeff::to_f64_lossy(&self.center[0]), crate::poly::Coeff::to_f64_lossy(&self.center[1])];
        let r2 = crate::poly::Coeff::to_f64_lossy(&self.radius_sq);
        let d = r2 - ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2));
        if d <= 0.0 {
            0.0
        } else {
            d.powi(self.exponent as i32)
        }
    }

    /// `∫_B (R² − ρ²)^m a₁^p a₂^q da / π` in exact arithmetic.
    fn raw_moment(&self, p: usize, q: usize) -> Rational {
        let m = self.exponent;
        let mut acc = Rational::zero();
        for k in 0..=p {
            for l in 0..=q {
                if k % 2 == 1 || l % 2 == 1 {
                    continue;
                }
                // (1/π)∫₀^{2π} cos^k sin^l = 2 (k−1)!! (l−1)!! / (k+l)!!
                let angular = rat(2, 1) * double_factorial(k as i64 - 1) * double_factorial(l as i64 - 1)
                    / double_factorial((k + l) as i64);
                // ∫₀^R (R² − ρ²)^m ρ^{k+l+1} dρ = R^{2m+k+l+2} m! h! / (2 (m+h+1)!), h = (k+l)/2
                let h = (k + l) / 2;
                let radial =
                    pow(&self.radius_sq, m + h + 1) * factorial(m) * factorial(h) / (rat(2, 1) * factorial(m + h + 1));
                let coeff = binomial(p, k) * binomial(q, l) * pow(&self.center[0], p - k) * pow(&self.center[1], q - l);
                acc += coeff * angular * radial;
            }
        }
        acc
    }

    /// Normalized moment `∫_B ψ(a) a₁^p a₂^q da`.
    pub fn moment(&self, p: usize, q: usize) -> Rational {
        self.raw_moment(p, q) / self.raw_moment(0, 0)
    }
}

fn double_factorial(n: i64) -> Rational {
    let mut acc = Rational::one();
    let mut k = n;
    while k > 1 {
        acc *= rat(k, 1);
        k -= 2;
    }
    acc
}

fn pow(x: &Rational, n: usize) -> Rational {
    (0..n).fold(Rational::one(), |acc, _| acc * x)
}

/// Lifting built from moments `M(p, q)` of the base-point distribution:
/// `M(p, q) = a₁^p a₂^q` for a point, weighted moments for the smoothed
/// version.
fn lift_with_moments(u: &Poly<Rational>, moment: &mut dyn FnMut(usize, usize) -> Rational) -> VecPoly<Rational> {
    let d = u.degree() + 1;
    let mut vx = Poly::zeros(d);
    let mut vy = Poly::zeros(d);
    for (i, j) in monomials(u.degree_bound()) {
        let c = u.coeff(i, j);
        if c.is_zero() {
            continue;
        }
        for r in 0..=i {
            for s in 0..=j {
                let n = (i - r) + (j - s);
                let w = &c * binomial(i, r) * binomial(j, s) * beta_integral(r + s, n);
                // times (x − a): x-monomial x^r y^s with a-monomial a^(i−r, j−s)
                vx.add_term(r + 1, s, &w * moment(i - r, j - s));
                vx.add_term(r, s, -(&w * moment(i - r + 1, j - s)));
                vy.add_term(r, s + 1, &w * moment(i - r, j - s));
                vy.add_term(r, s, -(&w * moment(i - r, j - s + 1)));
            }
        }
    }
    VecPoly::new(vx, vy)
}

/// Poincaré lifting with base point `a`.
pub fn poincare_pointed(u: &Poly<Rational>, a: [Rational; 2]) -> VecPoly<Rational> {
    lift_with_moments(u, &mut |p, q| pow(&a[0], p) * pow(&a[1], q))
}

/// Smoothed Poincaré lifting `∫_B ψ(a) P_a u da`.
pub fn poincare_smoothed(u: &Poly<Rational>, w: &SmoothingWeight) -> VecPoly<Rational> {
    let mut cache: HashMap<(usize, usize), Rational> = HashMap::new();
    lift_with_moments(u, &mut |p, q| cache.entry((p, q)).or_insert_with(|| w.moment(p, q)).clone())
}

/// Outcome of lifting one divergence.
#[derive(Clone, Debug, Serialize)]
pub struct LiftCheck {
    pub label: String,
    pub member: bool,
    /// Euclidean residual of the least-squares fit of the lifted field's
    /// coefficients by the target span (exactly 0 for members).
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub degree: usize,
    pub checks: Vec<LiftCheck>,
}

impl LiftReport {
    pub fn all_members(&self) -> bool {
        self.checks.iter().all(|c| c.member)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.residual))
    }
}

fn membership(span: &[VecPoly<Rational>], v: &VecPoly<Rational>, label: String) -> LiftCheck {
    let deg = span.iter().map(|f| f.degree()).chain([v.degree()]).max().unwrap_or(0);
    let cols: Vec<Vec<Rational>> = span.iter().map(|f| f.coeff_vector(deg)).collect();
    let target = v.coeff_vector(deg);
    if exact::express_in_span(&cols, &target).is_some() {
        return LiftCheck { label, member: true, residual: 0.0 };
    }
    let rows = target.len();
    let a = faer::Mat::<f64>::from_fn(rows, cols.len(), |i, j| crate::poly::Coeff::to_f64_lossy(&cols[j][i]));
    let b = faer::Mat::<f64>::from_fn(rows, 1, |i, _| crate::poly::Coeff::to_f64_lossy(&target[i]));
    let x = a.col_piv_qr().solve_lstsq(&b);
    let r = &a * &x - &b;
    LiftCheck { label, member: false, residual: r.norm_l2() }
}

/// Lift the divergence of every shape function of `RT_p(K̂)` with the
/// smoothed lifting and test membership in `RT_p(K̂)`.
pub fn lift_membership_check(p: usize, w: &SmoothingWeight) -> Result<LiftReport> {
    if p > MAX_EXACT_DEGREE {
        return Err(Error::Config(format!("degree {p} above the exact-arithmetic cap {MAX_EXACT_DEGREE}")));
    }
    let basis = build_rt_basis(p);
    let span: Vec<VecPoly<Rational>> = basis.shape_functions().cloned().collect();
    let checks = span
        .iter()
        .enumerate()
        .map(|(k, v)| membership(&span, &poincare_smoothed(&v.div(), w), format!("RT{p} shape {k}")))
        .collect();
    Ok(LiftReport { degree: p, checks })
}

/// Same check for the local span of a cell with degree `p_K` and edge
/// degrees `p_E`, which may exceed `p_K`.
pub fn lift_membership_check_local(
    cell_degree: usize,
    edge_degrees: [usize; 3],
    w: &SmoothingWeight,
) -> Result<LiftReport> {
    let top = edge_degrees.iter().copied().chain([cell_degree]).max().unwrap_or(0);
    if top > MAX_EXACT_DEGREE {
        return Err(Error::Config(format!("degree {top} above the exact-arithmetic cap {MAX_EXACT_DEGREE}")));
    }
    let span = local_span(cell_degree, edge_degrees);
    let checks = span
        .iter()
        .enumerate()
        .map(|(k, v)| membership(&span, &poincare_smoothed(&v.div(), w), format!("local field {k}")))
        .collect();
    Ok(LiftReport { degree: cell_degree, checks })
}

/// Largest `L²(K̂)` gain `‖P u‖ / ‖u‖` over `u ∈ P_q(K̂)`, for q = 0..=max_q.
pub fn lifting_norm_profile(max_q: usize, w: &SmoothingWeight) -> Vec<(usize, f64)> {
    (0..=max_q.min(MAX_EXACT_DEGREE))
        .map(|q| {
            let exact_basis = crate::ref_elements::orthogonal_basis_exact(q);
            let images: Vec<VecPoly<f64>> = exact_basis
                .iter()
                .map(|(b, bb)| {
                    let s = 1.0 / crate::poly::Coeff::to_f64_lossy(bb).sqrt();
                    let l = poincare_smoothed(b, w).to_f64();
                    VecPoly::new(l.x.scale(&s), l.y.scale(&s))
                })
                .collect();
            let n = images.len();
            debug_assert_eq!(n, q_basis_f64(q).len());
            let g = faer::Mat::<f64>::from_fn(n, n, |i, j| images[i].inner_ref(&images[j]));
            let ev = g.self_adjoint_eigenvalues(faer::Side::Lower).expect("symmetric eigenproblem");
            (q, ev.last().copied().unwrap_or(0.0).max(0.0).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_elements::{in_span, rt_contains};

    fn zero() -> [Rational; 2] {
        [rat(0, 1), rat(0, 1)]
    }

    #[test]
    fn pointed_examples() {
        let one = Poly::<Rational>::one();
        let l = poincare_pointed(&one, zero());
        assert_eq!(l.x.trimmed(), Poly::x().scale(&rat(1, 2)));
        assert_eq!(l.y.trimmed(), Poly::y().scale(&rat(1, 2)));
        assert_eq!(l.div().trimmed(), one);

        let x = Poly::<Rational>::x();
        let l = poincare_pointed(&x, zero());
        let expected = VecPoly::new(&x * &x.scale(&rat(1, 3)), &x * &Poly::y().scale(&rat(1, 3)));
        assert_eq!(l.x.trimmed(), expected.x.trimmed());
        assert_eq!(l.y.trimmed(), expected.y.trimmed());
        assert_eq!(l.div().trimmed(), x);

        let a = [rat(1, 4), rat(1, 4)];
        let l = poincare_pointed(&one, a.clone());
        let half = rat(1, 2);
        assert_eq!(l.x.trimmed(), (&Poly::x() - &Poly::constant(a[0].clone())).scale(&half).trimmed());
        assert_eq!(l.div().trimmed(), one);
    }

    #[test]
    fn smoothed_right_inverse_up_to_degree_six() {
        let w = SmoothingWeight::default();
        for q in 0..=6 {
            for (i, j) in monomials(q) {
                let u = Poly::monomial(i, j, rat(1, 1));
                let l = poincare_smoothed(&u, &w);
                assert!(l.degree() <= q + 1);
                assert!((&l.div() - &u).is_zero(), "x^{i} y^{j}");
            }
        }
    }

    #[test]
    fn weight_is_normalized_and_inside() {
        let w = SmoothingWeight::default();
        assert!(w.validate().is_ok());
        assert_eq!(w.moment(0, 0), rat(1, 1));
        // radial symmetry: first moments are the centre
        assert_eq!(w.moment(1, 0), rat(1, 4));
        assert_eq!(w.moment(0, 1), rat(1, 4));
        assert_eq!(w.shape_at([0.25 + 0.125, 0.25]), 0.0);
        assert!(w.shape_at([0.25, 0.25]) > 0.0);
        assert!(SmoothingWeight::new([rat(1, 2), rat(1, 2)], rat(1, 64), 2).is_err());
        assert!(SmoothingWeight::new([rat(1, 4), rat(1, 4)], rat(1, 4), 2).is_err());
    }

    #[test]
    fn moments_match_quadrature() {
        let w = SmoothingWeight { exponent: 3, ..SmoothingWeight::default() };
        let rule = crate::quadrature::GaussRule::new(12);
        let (c, r) = (0.25, 0.125);
        let mut mass = 0.0;
        let mut m21 = 0.0;
        for (s, ws) in rule.iter() {
            for (t, wt) in rule.iter() {
                let rho = r * s;
                let th = 2.0 * std::f64::consts::PI * t;
                let a = [c + rho * th.cos(), c + rho * th.sin()];
                let jac = ws * wt * r * 2.0 * std::f64::consts::PI * rho;
                let psi = w.shape_at(a);
                mass += jac * psi;
                m21 += jac * psi * a[0] * a[0] * a[1];
            }
        }
        let exact = crate::poly::Coeff::to_f64_lossy(&w.moment(2, 1));
        assert!((m21 / mass - exact).abs() < 1e-13);
    }

    #[test]
    fn linearity() {
        let w = SmoothingWeight::default();
        let u = &Poly::monomial(2, 1, rat(3, 1)) + &Poly::constant(rat(-1, 2));
        let v = &Poly::monomial(0, 3, rat(1, 1)) - &Poly::x();
        let (al, be) = (rat(2, 3), rat(-5, 7));
        let lhs = poincare_smoothed(&(&u.scale(&al) + &v.scale(&be)), &w);
        let pu = poincare_smoothed(&u, &w);
        let pv = poincare_smoothed(&v, &w);
        let rhs = &pu.scale(&al) + &pv.scale(&be);
        assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn rt_preserved_for_low_degrees() {
        let w = SmoothingWeight::default();
        for p in 0..=3 {
            let r = lift_membership_check(p, &w).unwrap();
            assert!(r.all_members(), "p = {p}");
            assert_eq!(r.max_residual(), 0.0);
        }
        for v in build_rt_basis(3).shape_functions() {
            assert!(rt_contains(3, &poincare_smoothed(&v.div(), &w)));
        }
    }

    #[test]
    fn local_span_lifting() {
        let w = SmoothingWeight::default();
        for p in 0..=3 {
            assert!(lift_membership_check_local(p, [p, p, p], &w).unwrap().all_members());
        }
        // raised edge degree: the lifts stay in RT_{p_K} but leave the span
        let raised = [3, 1, 1];
        for v in local_span(1, raised) {
            assert!(rt_contains(1, &poincare_smoothed(&v.div(), &w)));
        }
        let r = lift_membership_check_local(1, raised, &w).unwrap();
        assert!(!r.all_members() && r.max_residual() > 0.0);
        // edge generators are divergence free, so their lifts vanish
        let span = local_span(0, [2, 2, 2]);
        for v in span.iter().skip(3) {
            let l = poincare_smoothed(&v.div(), &w);
            assert!(l.is_zero());
            assert!(in_span(&span, &l));
        }
    }

    #[test]
    fn nonmember_residual_is_positive() {
        let span: Vec<VecPoly<Rational>> = build_rt_basis(0).shape_functions().cloned().collect();
        let v = VecPoly::new(Poly::monomial(2, 0, rat(1, 1)), Poly::zero());
        let c = membership(&span, &v, "x²".into());
        assert!(!c.member && c.residual > 0.0);
    }

    #[test]
    fn norm_profile_is_finite() {
        let prof = lifting_norm_profile(4, &SmoothingWeight::default());
        assert_eq!(prof.len(), 5);
        assert!(prof.iter().all(|(_, n)| n.is_finite() && *n > 0.0));
    }
}
