use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::geometry::{cross, dot, sub, Vec3};
use crate::global_space::{HpDivSpace, ShapeTable};
use crate::mesh::{local_edge_vertices, AffineChart};
use crate::poly::{monomials, Poly, VecPoly};
use crate::quadrature::{GaussRule, TriangleRule};
use crate::ref_elements::{
    hat_power_product, interior_basis_f64, interior_bubble, interior_bubble_indices, q_basis_f64, rt0_reference,
    MAX_EXACT_DEGREE,
};
use crate::{Error, Result};

/// Quadrature settings for the projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterpolationOptions {
    /// Minimum Gauss points per direction; raised to `p + 3` where needed.
    pub points: usize,
}

impl Default for InterpolationOptions {
    fn default() -> Self {
        Self { points: 12 }
    }
}

impl InterpolationOptions {
    pub(crate) fn points_for(&self, degree: usize) -> usize {
        self.points.max(degree + 3)
    }
}

/// Degrees and orientation of one cell, enough to rebuild its local basis
/// without a mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalElement {
    pub cell_degree: usize,
    pub edge_degrees: [usize; 3],
    /// Local vertices of the lower and higher global endpoint of each edge.
    pub endpoints: [[usize; 2]; 3],
    pub active: [bool; 3],
}

impl LocalElement {
    /// Element whose orientation comes from global vertex ids.
    pub fn new(cell_degree: usize, edge_degrees: [usize; 3], vertex_ids: [usize; 3]) -> Self {
        let endpoints = [0, 1, 2].map(|i| {
            let [a, b] = local_edge_vertices(i);
            if vertex_ids[a] < vertex_ids[b] {
                [a, b]
            } else {
                [b, a]
            }
        });
        Self { cell_degree, edge_degrees, endpoints, active: [true; 3] }
    }

    pub fn from_space(space: &HpDivSpace, cell: usize) -> Self {
        let edges = space.mesh().cell_edges(cell);
        let mut el = Self::new(
            space.degrees().cell_degree[cell],
            edges.map(|e| space.degrees().edge_degree[e]),
            space.mesh().triangles()[cell],
        );
        el.active = edges.map(|e| space.is_active_edge(e));
        el
    }

    pub fn sign(&self, local: usize) -> f64 {
        if self.endpoints[local] == local_edge_vertices(local) {
            1.0
        } else {
            -1.0
        }
    }

    /// Local reference fields: per active edge the signed RT0 function and
    /// its generators, then the interior family.
    pub fn fields(&self) -> Vec<VecPoly<f64>> {
        let mut out = Vec::new();
        for local in 0..3 {
            if !self.active[local] {
                continue;
            }
            out.push(rt0_reference(local).to_f64().scale(&self.sign(local)));
            let [lo, hi] = self.endpoints[local];
            let pe = self.edge_degrees[local];
            for alpha in 1..=pe {
                out.push(VecPoly::curl_of(&hat_power_product::<f64>(lo, hi, alpha, pe + 1 - alpha)));
            }
        }
        out.extend(interior_basis_f64(self.cell_degree).iter().cloned());
        out
    }

    /// Local index of the RT0 function of each active edge.
    pub fn edge_offsets(&self) -> [Option<usize>; 3] {
        let mut next = 0;
        [0, 1, 2].map(|l| {
            if self.active[l] {
                let o = next;
                next += 1 + self.edge_degrees[l];
                Some(o)
            } else {
                None
            }
        })
    }

    pub fn interior_offset(&self) -> usize {
        (0..3).filter(|&l| self.active[l]).map(|l| 1 + self.edge_degrees[l]).sum()
    }

    pub fn len(&self) -> usize {
        self.interior_offset() + self.cell_degree * (self.cell_degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reference point at arc parameter `s` of local edge `local`.
    pub fn edge_point(&self, local: usize, s: f64) -> [f64; 2] {
        let [lo, hi] = self.endpoints[local];
        let mut lam = [0.0; 3];
        lam[lo] = 1.0 - s;
        lam[hi] = s;
        [lam[1], lam[2]]
    }
}

/// Result of interpolating on one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalInterpolant {
    pub cell: usize,
    /// Coefficients in the order of [`LocalElement::fields`].
    pub coefficients: Vec<f64>,
    /// `L²(E)` norm of the part of `|E| u·n_E` missed by the edge projection.
    pub edge_residuals: [f64; 3],
    /// Largest interior moment residual after the local solve.
    pub interior_residual: f64,
}

/// Shifted Legendre polynomials `L_0..L_n` on `[0, 1]` at `s`.
fn shifted_legendre(n: usize, s: f64, out: &mut Vec<f64>) {
    out.clear();
    let x = 2.0 * s - 1.0;
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 2..=n {
        let kf = k as f64;
        let v = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(v);
    }
}

/// `d/ds [(1−s)^α s^β]`.
fn generator_trace(alpha: usize, beta: usize, s: f64) -> f64 {
    let a = alpha as i32;
    let b = beta as i32;
    let left = if alpha > 0 { -(alpha as f64) * (1.0 - s).powi(a - 1) * s.powi(b) } else { 0.0 };
    let right = if beta > 0 { beta as f64 * (1.0 - s).powi(a) * s.powi(b - 1) } else { 0.0 };
    left + right
}

/// Inverse of `A_{kα} = ∫ L_k d/ds[(1−s)^α s^{p+1−α}]`, `k, α = 1..p`.
fn edge_matrix_inverse(p: usize) -> &'static Mat<f64> {
    static CACHE: [OnceLock<Mat<f64>>; MAX_EXACT_DEGREE + 1] = [const { OnceLock::new() }; MAX_EXACT_DEGREE + 1];
    CACHE[p].get_or_init(|| {
        let g = GaussRule::new(p + 2);
        let mut a = Mat::<f64>::zeros(p, p);
        let mut leg = Vec::new();
        for (s, w) in g.iter() {
            shifted_legendre(p, s, &mut leg);
            for k in 1..=p {
                for alpha in 1..=p {
                    a[(k - 1, alpha - 1)] += w * leg[k] * generator_trace(alpha, p + 1 - alpha, s);
                }
            }
        }
        inverse(&a)
    })
}

fn inverse(a: &Mat<f64>) -> Mat<f64> {
    a.partial_piv_lu().solve(Mat::<f64>::identity(a.nrows(), a.ncols()))
}

/// `L²(0,1)` projection of the flux density `f(s) = |E| u·n_E` onto the
/// edge trace space of degree `p`: `[c₀, c₁..c_p]` with `c₀` the flux
/// (RT0 coefficient) and `c_α` the generator coefficients.
pub fn project_edge_trace<F: Fn(f64) -> f64>(f: F, edge_degree: usize, points: usize) -> Result<(Vec<f64>, f64)> {
    let p = edge_degree;
    let g = GaussRule::new(points.max(p + 3));
    let vals: Vec<f64> = g.points.iter().map(|&s| f(s)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("edge trace".into()));
    }
    let mut leg = Vec::new();
    let mut moments = vec![0.0; p + 1];
    for ((s, w), v) in g.iter().zip(&vals) {
        shifted_legendre(p, s, &mut leg);
        for k in 0..=p {
            moments[k] += w * v * leg[k];
        }
    }
    let mut c = vec![moments[0]];
    if p > 0 {
        let inv = edge_matrix_inverse(p);
        for alpha in 0..p {
            c.push((0..p).map(|k| inv[(alpha, k)] * moments[k + 1]).sum());
        }
    }
    let residual = g
        .iter()
        .zip(&vals)
        .map(|((s, w), v)| {
            let fit = c[0] + (1..=p).map(|a| c[a] * generator_trace(a, p + 1 - a, s)).sum::<f64>();
            w * (v - fit).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    Ok((c, residual))
}

/// Interior test space `∇P_p ⊕ (x − c)^⊥ P_{p−2}`, `c` the centroid,
/// which spans `P_{p−1}²`.
pub(crate) struct InteriorMoments {
    pub tests: ShapeTable,
    /// Inverse of `∫ b̂_j · t̂_i` over the interior family.
    pub inverse: Mat<f64>,
    /// Number of gradient tests (the rest are rotated ones).
    pub gradients: usize,
    /// Inverse of `∫ curl b̂_m · t̂_r` over interior bubbles and rotated tests.
    pub bubble_inverse: Mat<f64>,
}

fn rotated_test(i: usize, j: usize) -> VecPoly<f64> {
    let third = 1.0 / 3.0;
    let m = Poly::monomial(i, j, 1.0);
    let xc = &Poly::x() - &Poly::constant(third);
    let yc = &Poly::y() - &Poly::constant(third);
    VecPoly::new((&yc * &m).scale(&-1.0), &xc * &m)
}

pub(crate) fn interior_moments(p: usize) -> &'static InteriorMoments {
    static CACHE: [OnceLock<InteriorMoments>; MAX_EXACT_DEGREE + 1] = [const { OnceLock::new() }; MAX_EXACT_DEGREE + 1];
    CACHE[p].get_or_init(|| {
        let mut tests: Vec<VecPoly<f64>> = q_basis_f64(p).iter().skip(1).map(VecPoly::grad_of).collect();
        let gradients = tests.len();
        let rotated: Vec<VecPoly<f64>> =
            if p >= 2 { monomials(p - 2).into_iter().map(|(i, j)| rotated_test(i, j)).collect() } else { Vec::new() };
        tests.extend(rotated.iter().cloned());
        let basis = interior_basis_f64(p);
        let curls: Vec<VecPoly<f64>> = interior_bubble_indices(p)
            .into_iter()
            .map(|(i, j)| VecPoly::curl_of(&interior_bubble::<f64>(i, j)))
            .collect();
        let rule = TriangleRule::for_degree(2 * p + 2);
        let gram = |rows: &[VecPoly<f64>], cols: &[VecPoly<f64>]| {
            let mut m = Mat::<f64>::zeros(rows.len(), cols.len());
            for (x, w) in rule.iter() {
                let r: Vec<[f64; 2]> = rows.iter().map(|t| t.at(x[0], x[1])).collect();
                let c: Vec<[f64; 2]> = cols.iter().map(|t| t.at(x[0], x[1])).collect();
                for (i, a) in r.iter().enumerate() {
                    for (j, b) in c.iter().enumerate() {
                        m[(i, j)] += w * (a[0] * b[0] + a[1] * b[1]);
                    }
                }
            }
            m
        };
        let moment_inverse = if basis.is_empty() { Mat::zeros(0, 0) } else { inverse(&gram(&tests, basis)) };
        let bubble_inverse = if curls.is_empty() { Mat::zeros(0, 0) } else { inverse(&gram(&rotated, &curls)) };
        InteriorMoments { tests: ShapeTable::from_fields(&tests), inverse: moment_inverse, gradients, bubble_inverse }
    })
}

/// Interior coefficients from the residual field `r̂ = û − û_edge` sampled
/// at the points of `rule`.
pub(crate) fn solve_interior(p: usize, rule: &TriangleRule, residual: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = p * (p + 1);
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let im = interior_moments(p);
    let mut rhs = vec![0.0; n];
    let (mut mono, mut vals, mut divs) = (Vec::new(), Vec::new(), Vec::new());
    for ((x, w), r) in rule.iter().zip(residual) {
        im.tests.eval(x, &mut mono, &mut vals, &mut divs);
        for (i, t) in vals.iter().enumerate() {
            rhs[i] += w * (r[0] * t[0] + r[1] * t[1]);
        }
    }
    let d: Vec<f64> = (0..n).map(|j| (0..n).map(|i| im.inverse[(j, i)] * rhs[i]).sum()).collect();
    // moment residual of the solve, relative to the right-hand side
    let basis = interior_basis_f64(p);
    let check = TriangleRule::for_degree(2 * p);
    let mut back = vec![0.0; n];
    for (x, w) in check.iter() {
        im.tests.eval(x, &mut mono, &mut vals, &mut divs);
        let mut f = [0.0; 2];
        for (b, dj) in basis.iter().zip(&d) {
            let v = b.at(x[0], x[1]);
            f[0] += dj * v[0];
            f[1] += dj * v[1];
        }
        for (i, t) in vals.iter().enumerate() {
            back[i] += w * (f[0] * t[0] + f[1] * t[1]);
        }
    }
    let scale = rhs.iter().fold(1e-300f64, |a, v| a.max(v.abs()));
    let res = back.iter().zip(&rhs).fold(0.0f64, |a, (b, r)| a.max((b - r).abs())) / scale;
    (d, res)
}

fn check_finite(v: [f64; 2], what: &str) -> Result<[f64; 2]> {
    if v[0].is_finite() && v[1].is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Interpolate with all edge coefficients known: sample the pulled-back
/// field, subtract the edge part and solve for the interior.
pub(crate) fn finish_cell<U: Fn([f64; 2]) -> [f64; 2]>(
    el: &LocalElement,
    table: &ShapeTable,
    mut coefficients: Vec<f64>,
    pulled: U,
    opts: &InterpolationOptions,
) -> Result<(Vec<f64>, f64)> {
    let p = el.cell_degree;
    let start = el.interior_offset();
    let rule = TriangleRule::new(opts.points_for(table.degree().max(p)));
    let (mut mono, mut vals, mut divs) = (Vec::new(), Vec::new(), Vec::new());
    let mut residual = Vec::with_capacity(rule.len());
    for x in &rule.points {
        let mut r = check_finite(pulled(*x), "interior field")?;
        table.eval(*x, &mut mono, &mut vals, &mut divs);
        for (c, v) in coefficients[..start].iter().zip(&vals) {
            r[0] -= c * v[0];
            r[1] -= c * v[1];
        }
        residual.push(r);
    }
    let (d, res) = solve_interior(p, &rule, &residual);
    coefficients.truncate(start);
    coefficients.extend(d);
    Ok((coefficients, res))
}

fn interpolate_local<T, U>(
    el: &LocalElement,
    trace: T,
    pulled: U,
    opts: &InterpolationOptions,
) -> Result<LocalInterpolant>
where
    T: Fn(usize, f64) -> f64,
    U: Fn([f64; 2]) -> [f64; 2],
{
    let table = ShapeTable::from_fields(&el.fields());
    let mut coefficients = vec![0.0; el.interior_offset()];
    let mut edge_residuals = [0.0; 3];
    for (local, off) in el.edge_offsets().iter().enumerate() {
        let Some(off) = *off else { continue };
        let pe = el.edge_degrees[local];
        let (c, r) = project_edge_trace(|s| trace(local, s), pe, opts.points_for(pe))?;
        coefficients[off..off + pe + 1].copy_from_slice(&c);
        edge_residuals[local] = r;
    }
    let (coefficients, interior_residual) = finish_cell(el, &table, coefficients, pulled, opts)?;
    Ok(LocalInterpolant { cell: 0, coefficients, edge_residuals, interior_residual })
}

/// Local interpolation of a field given on the reference triangle.
pub fn interpolate_reference<U>(el: &LocalElement, u_hat: U, opts: &InterpolationOptions) -> Result<LocalInterpolant>
where
    U: Fn([f64; 2]) -> [f64; 2],
{
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    interpolate_local(
        el,
        |local, s| {
            let [lo, hi] = el.endpoints[local];
            let t = [verts[hi][0] - verts[lo][0], verts[hi][1] - verts[lo][1]];
            let v = u_hat(el.edge_point(local, s));
            v[0] * t[1] - v[1] * t[0]
        },
        &u_hat,
        opts,
    )
}

/// Local interpolation of a physical tangential field on the cell of
/// `chart`; edge traces use physical normals and lengths.
pub fn interpolate_on_chart<U>(
    el: &LocalElement,
    chart: &AffineChart,
    u: U,
    opts: &InterpolationOptions,
) -> Result<LocalInterpolant>
where
    U: Fn(Vec3) -> Vec3,
{
    interpolate_local(
        el,
        |local, s| {
            let [lo, hi] = el.endpoints[local];
            let scaled_normal = cross(sub(chart.vertex(hi), chart.vertex(lo)), chart.normal);
            dot(u(chart.map(el.edge_point(local, s))), scaled_normal)
        },
        |x| chart.piola_pull(u(chart.map(x))),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_projection_reproduces_traces() {
        for p in 0..=5 {
            let c: Vec<f64> = (0..=p).map(|k| 0.3 * k as f64 - 0.7).collect();
            let f = |s: f64| c[0] + (1..=p).map(|a| c[a] * generator_trace(a, p + 1 - a, s)).sum::<f64>();
            let (back, r) = project_edge_trace(f, p, 4).unwrap();
            assert!(r < 1e-13);
            for (a, b) in c.iter().zip(&back) {
                assert!((a - b).abs() < 1e-11, "p={p} {a} {b}");
            }
        }
        assert!(project_edge_trace(|_| f64::NAN, 1, 4).is_err());
    }

    #[test]
    fn edge_projection_is_orthogonal() {
        // independent oracle: dense normal equations in the monomial basis
        let f = |s: f64| (3.0 * s).sin() + s.exp();
        let p = 3;
        let g = GaussRule::new(14);
        let (c, _) = project_edge_trace(f, p, 14).unwrap();
        let fit = |s: f64| c[0] + (1..=p).map(|a| c[a] * generator_trace(a, p + 1 - a, s)).sum::<f64>();
        let mut gram = Mat::<f64>::zeros(p + 1, p + 1);
        let mut rhs = Mat::<f64>::zeros(p + 1, 1);
        for (s, w) in g.iter() {
            for i in 0..=p {
                for j in 0..=p {
                    gram[(i, j)] += w * s.powi(i as i32) * s.powi(j as i32);
                }
                rhs[(i, 0)] += w * f(s) * s.powi(i as i32);
            }
        }
        let a = gram.partial_piv_lu().solve(&rhs);
        for s in [0.1f64, 0.45, 0.8] {
            let oracle: f64 = (0..=p).map(|i| a[(i, 0)] * s.powi(i as i32)).sum();
            assert!((oracle - fit(s)).abs() < 1e-10);
        }
    }

    #[test]
    fn interior_systems_are_well_posed() {
        for p in 1..=6 {
            let im = interior_moments(p);
            assert_eq!(im.tests.len(), p * (p + 1));
            assert!(im.inverse.norm_max().is_finite());
            assert_eq!(im.gradients, (p + 1) * (p + 2) / 2 - 1);
        }
    }
}
