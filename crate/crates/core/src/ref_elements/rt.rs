use std::sync::OnceLock;

use num_traits::Zero;

use crate::exact::{self, Rref};
use crate::poly::{homogeneous_monomials, monomials, rat, Poly, Rational, VecPoly};

/// Highest degree supported by the exact constructions.
pub const MAX_EXACT_DEGREE: usize = 6;

/// Reference vertices `(0,0), (1,0), (0,1)`.
pub const REF_VERTICES: [[i64; 2]; 3] = [[0, 0], [1, 0], [0, 1]];

/// Scaled outward normal `ν_i` of local edge `i` (length equals the edge
/// length), so the flux through edge `i` is `∫₀¹ u(γ_i(s))·ν_i ds`.
pub const REF_EDGE_NORMALS: [[i64; 2]; 3] = [[1, 1], [-1, 0], [0, -1]];

/// Endpoints of local edge `i`, traversed from vertex `i+1` to vertex `i+2`.
pub fn ref_edge_endpoints(i: usize) -> [[i64; 2]; 2] {
    [REF_VERTICES[(i + 1) % 3], REF_VERTICES[(i + 2) % 3]]
}

/// Normal trace `(u·ν_i)(γ_i(s))` as coefficients of `s^k`, padded to
/// `len` entries.
pub fn normal_trace(u: &VecPoly<Rational>, edge: usize, len: usize) -> Vec<Rational> {
    let [a, b] = ref_edge_endpoints(edge);
    let nu = REF_EDGE_NORMALS[edge];
    let flux = &u.x.scale(&rat(nu[0], 1)) + &u.y.scale(&rat(nu[1], 1));
    let mut c = flux.restrict_to_segment([rat(a[0], 1), rat(a[1], 1)], [rat(b[0], 1), rat(b[1], 1)]);
    assert!(c.iter().skip(len).all(Zero::is_zero), "normal trace of degree above {}", len.saturating_sub(1));
    c.resize(len, Rational::zero());
    c
}

/// Raviart–Thomas space `RT_p(K̂) = (P_p)² ⊕ x P̃_p`, split into an edge
/// family (prescribed normal trace `s^k` on one edge, zero on the others)
/// and the interior family `RT_{p,0}(K̂)` of fields with vanishing normal
/// trace.
#[derive(Clone, Debug)]
pub struct RtBasis {
    pub degree: usize,
    /// `(edge, k, field)` with normal trace `s^k` on `edge`.
    pub edge_family: Vec<(usize, usize, VecPoly<Rational>)>,
    pub interior: Vec<VecPoly<Rational>>,
}

/// Monomial spanning set of `RT_p(K̂)`; it is linearly independent.
pub fn rt_monomial_basis(p: usize) -> Vec<VecPoly<Rational>> {
    let one = || rat(1, 1);
    let mut out = Vec::with_capacity((p + 1) * (p + 3));
    for (i, j) in monomials(p) {
        out.push(VecPoly::new(Poly::monomial(i, j, one()), Poly::zero()));
        out.push(VecPoly::new(Poly::zero(), Poly::monomial(i, j, one())));
    }
    for (i, j) in homogeneous_monomials(p) {
        out.push(VecPoly::new(Poly::monomial(i + 1, j, one()), Poly::monomial(i, j + 1, one())));
    }
    out
}

pub fn rt_dimension(p: usize) -> usize {
    (p + 1) * (p + 3)
}

pub fn build_rt_basis(p: usize) -> RtBasis {
    let span = rt_monomial_basis(p);
    let n = span.len();
    let traces: Vec<Vec<Vec<Rational>>> =
        span.iter().map(|v| (0..3).map(|e| normal_trace(v, e, p + 1)).collect()).collect();

    // rows: 3 (p+1) trace coefficients, columns: spanning functions
    let rows: Vec<Vec<Rational>> = (0..3)
        .flat_map(|e| (0..=p).map(move |k| (e, k)))
        .map(|(e, k)| traces.iter().map(|t| t[e][k].clone()).collect())
        .collect();

    let combine = |c: &[Rational]| {
        let mut acc = VecPoly::<Rational>::zero();
        for (ci, v) in c.iter().zip(&span) {
            if !ci.is_zero() {
                acc = &acc + &v.scale(ci);
            }
        }
        acc
    };

    let interior: Vec<VecPoly<Rational>> = Rref::new(rows.clone(), n).nullspace().iter().map(|c| combine(c)).collect();

    let mut edge_family = Vec::with_capacity(3 * (p + 1));
    for e in 0..3 {
        for k in 0..=p {
            let rhs: Vec<Rational> = (0..3)
                .flat_map(|ee| (0..=p).map(move |kk| (ee, kk)))
                .map(|(ee, kk)| if ee == e && kk == k { rat(1, 1) } else { Rational::zero() })
                .collect();
            let c = exact::solve(&rows, &rhs).expect("RT normal-trace map is onto");
            edge_family.push((e, k, combine(&c)));
        }
    }
    RtBasis { degree: p, edge_family, interior }
}

impl RtBasis {
    pub fn dim(&self) -> usize {
        self.edge_family.len() + self.interior.len()
    }

    pub fn shape_functions(&self) -> impl Iterator<Item = &VecPoly<Rational>> {
        self.edge_family.iter().map(|(_, _, v)| v).chain(&self.interior)
    }

    pub fn divergences(&self) -> Vec<Poly<Rational>> {
        self.shape_functions().map(VecPoly::div).collect()
    }

    /// Rank of the divergence family (exact).
    pub fn divergence_rank(&self) -> usize {
        let d = self.degree;
        let rows: Vec<Vec<Rational>> = self.divergences().iter().map(|q| q.coeff_vector(d.max(q.degree()))).collect();
        let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.resize(ncols, Rational::zero());
                r
            })
            .collect();
        exact::rank(rows, ncols)
    }

    /// Exact membership of `v` in `RT_p(K̂)`.
    pub fn contains(&self, v: &VecPoly<Rational>) -> bool {
        rt_contains(self.degree, v)
    }
}

/// Exact membership test in `RT_p(K̂)`.
pub fn rt_contains(p: usize, v: &VecPoly<Rational>) -> bool {
    if v.degree() > p + 1 {
        return false;
    }
    in_span(&rt_monomial_basis(p), v)
}

/// Exact membership of `v` in the span of `family`.
pub fn in_span(family: &[VecPoly<Rational>], v: &VecPoly<Rational>) -> bool {
    span_coefficients(family, v).is_some()
}

/// Coefficients expressing `v` in `family`, if `v` lies in its span.
pub fn span_coefficients(family: &[VecPoly<Rational>], v: &VecPoly<Rational>) -> Option<Vec<Rational>> {
    let deg = family.iter().map(VecPoly::degree).chain([v.degree()]).max().unwrap_or(0);
    let cols: Vec<Vec<Rational>> = family.iter().map(|f| f.coeff_vector(deg)).collect();
    exact::express_in_span(&cols, &v.coeff_vector(deg))
}

/// Lowest-order reference shape function with unit outward flux through
/// local edge `i`: `x̂ − v̂_i`.
pub fn rt0_reference(i: usize) -> VecPoly<Rational> {
    let [vx, vy] = REF_VERTICES[i];
    VecPoly::new(&Poly::x() - &Poly::constant(rat(vx, 1)), &Poly::y() - &Poly::constant(rat(vy, 1)))
}

fn gram_schmidt_exact(family: &[VecPoly<Rational>]) -> Vec<(VecPoly<Rational>, Rational)> {
    let mut out: Vec<(VecPoly<Rational>, Rational)> = Vec::with_capacity(family.len());
    for v in family {
        let mut w = v.clone();
        for (u, uu) in &out {
            let c = v.inner_ref(u) / uu.clone();
            w = &w - &u.scale(&c);
        }
        let ww = w.inner_ref(&w);
        out.push((w, ww));
    }
    out
}

/// `L²(K̂)`-orthonormal basis of `RT_{p,0}(K̂)` in floating point, built from
/// an exact orthogonalization and cached per degree.
pub fn interior_basis_f64(p: usize) -> &'static [VecPoly<f64>] {
    static CACHE: [OnceLock<Vec<VecPoly<f64>>>; MAX_EXACT_DEGREE + 1] =
        [const { OnceLock::new() }; MAX_EXACT_DEGREE + 1];
    assert!(p <= MAX_EXACT_DEGREE, "degree {p} above {MAX_EXACT_DEGREE}");
    CACHE[p].get_or_init(|| {
        let basis = build_rt_basis(p);
        gram_schmidt_exact(&basis.interior)
            .into_iter()
            .map(|(w, ww)| {
                let s = 1.0 / crate::poly::Coeff::to_f64_lossy(&ww).sqrt();
                let f = w.to_f64();
                VecPoly::new(f.x.scale(&s), f.y.scale(&s))
            })
            .collect()
    })
}
