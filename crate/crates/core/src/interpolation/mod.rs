//! Commuting projection-based interpolation `Π_X`, `Π_S`, `Π_Q` onto the hp
//! spaces and the error measurements built on them.
//!
//! `Π_X` is local: every active edge receives the `L²(E)` projection of its
//! flux density (the mean goes to the RT0 function, the rest to the edge
//! generators), and every cell then fixes its interior coefficients by the
//! moments against `∇P_p ⊕ (x − c)^⊥ P_{p−2}`. Both steps only see
//! Piola-invariant quantities, so they commute with the pullback, and
//! `div Π_X = Π_Q div` holds by construction. `Π_S` reuses the edge
//! projection on `dφ/ds` and the rotated moments, so `curl Π_S = Π_X curl`.

mod fields;
mod local;

pub use fields::{fd_surface_divergence, ScalarFn, SmoothFieldSpec};
pub use local::{
    interpolate_on_chart, interpolate_reference, project_edge_trace, InterpolationOptions, LocalElement,
    LocalInterpolant,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{cross, dot, sub, Vec3};
use crate::global_space::{DivSpace, HpDivSpace, HpScalarSpace, ScalarDofKind, ShapeTable};
use crate::mesh::{DegreeMap, SurfaceMesh};
use crate::poly::{Poly, VecPoly};
use crate::quadrature::{GaussRule, TriangleRule};
use crate::ref_elements::q_basis_f64;
use crate::{Error, Result};
use local::{finish_cell, interior_moments};

/// Global result of `Π_X`.
#[derive(Clone, Debug)]
pub struct XInterpolation {
    pub coefficients: Vec<f64>,
    pub locals: Vec<LocalInterpolant>,
    /// Largest flux coefficient the edge projection would assign to an
    /// inactive (screen boundary) edge; zero for compliant fields.
    pub dropped_boundary_flux: f64,
}

fn edge_scaled_normal(mesh: &SurfaceMesh, space: &HpDivSpace, e: usize, cell: usize) -> (Vec3, Vec3, Vec3) {
    let [lo, hi] = mesh.edges()[e].vertices;
    let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
    (a, b, cross(sub(b, a), space.chart(cell).normal))
}

/// `Π_X u` for a tangential field `u(cell, x)`, evaluated with the normal of
/// `cell`.
pub fn interpolate_x<U>(space: &HpDivSpace, u: U, opts: &InterpolationOptions) -> Result<XInterpolation>
where
    U: Fn(usize, Vec3) -> Vec3 + Sync,
{
    let mesh = space.mesh();
    // phase 1: edge projections (inactive edges too, for the diagnostic)
    let edge: Vec<(Vec<f64>, f64)> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let cell = mesh.edges()[e].cells[0].cell;
            let (a, b, sn) = edge_scaled_normal(mesh, space, e, cell);
            let pe = space.degrees().edge_degree[e];
            project_edge_trace(
                |s| dot(u(cell, [0, 1, 2].map(|i| (1.0 - s) * a[i] + s * b[i])), sn),
                pe,
                opts.points_for(pe),
            )
        })
        .collect::<Result<_>>()?;
    let dropped_boundary_flux = (0..mesh.num_edges())
        .filter(|&e| !space.is_active_edge(e))
        .map(|e| edge[e].0.iter().fold(0.0f64, |m, c| m.max(c.abs())))
        .fold(0.0, f64::max);

    // phase 2: interior solves
    let locals: Vec<LocalInterpolant> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let el = LocalElement::from_space(space, cell);
            let mut coefficients = vec![0.0; el.interior_offset()];
            let mut edge_residuals = [0.0; 3];
            for (local, off) in el.edge_offsets().iter().enumerate() {
                let Some(off) = *off else { continue };
                let e = mesh.cell_edges(cell)[local];
                let c = &edge[e].0;
                coefficients[off..off + c.len()].copy_from_slice(c);
                edge_residuals[local] = edge[e].1;
            }
            let chart = space.chart(cell);
            let (coefficients, interior_residual) = finish_cell(
                &el,
                &space.cell(cell).table,
                coefficients,
                |x| chart.piola_pull(u(cell, chart.map(x))),
                opts,
            )?;
            Ok(LocalInterpolant { cell, coefficients, edge_residuals, interior_residual })
        })
        .collect::<Result<_>>()?;

    let mut coefficients = vec![0.0; space.dim()];
    for l in &locals {
        for (&g, &c) in space.cell(l.cell).dofs.iter().zip(&l.coefficients) {
            coefficients[g] = c;
        }
    }
    Ok(XInterpolation { coefficients, locals, dropped_boundary_flux })
}

/// `Π_X` of a vector [`SmoothFieldSpec`].
pub fn interpolate_x_field(
    space: &HpDivSpace,
    field: &SmoothFieldSpec,
    opts: &InterpolationOptions,
) -> Result<XInterpolation> {
    if field.is_scalar() {
        return Err(Error::Config("interpolate_x needs a vector field".into()));
    }
    interpolate_x(space, |cell, x| field.vector_value(x, space.chart(cell).normal).unwrap_or([f64::NAN; 3]), opts)
}

/// `Π_X` of the surface curl of a scalar field.
pub fn interpolate_x_curl(
    space: &HpDivSpace,
    field: &SmoothFieldSpec,
    opts: &InterpolationOptions,
) -> Result<XInterpolation> {
    if !field.is_scalar() {
        return Err(Error::Config("expected a scalar field".into()));
    }
    interpolate_x(space, |cell, x| field.surface_curl(x, space.chart(cell).normal).unwrap_or([f64::NAN; 3]), opts)
}

/// Cell-wise `L²` projection onto the piecewise polynomial space; rejects
/// non-finite samples.
pub fn project_q<F>(q: &DivSpace, f: F, opts: &InterpolationOptions) -> Result<Vec<f64>>
where
    F: Fn(usize, Vec3) -> f64,
{
    let bad = std::cell::Cell::new(false);
    let out = q.project(
        |cell, _, x| {
            let v = f(cell, x);
            if !v.is_finite() {
                bad.set(true);
            }
            v
        },
        opts.points.saturating_sub(q_degree_max(q)).max(3),
    );
    if bad.get() {
        return Err(Error::NonFinite("projected scalar field".into()));
    }
    Ok(out)
}

fn q_degree_max(q: &DivSpace) -> usize {
    (0..q.num_cells()).map(|c| q.cell_degree(c)).max().unwrap_or(0)
}

/// `Π_Q div u` for a vector [`SmoothFieldSpec`].
pub fn project_q_divergence(q: &DivSpace, field: &SmoothFieldSpec, opts: &InterpolationOptions) -> Result<Vec<f64>> {
    if field.is_scalar() {
        return Err(Error::Config("divergence of a scalar field".into()));
    }
    project_q(q, |cell, x| field.surface_divergence(x, q.chart(cell).normal).unwrap_or(f64::NAN), opts)
}

/// `Π_S φ` for a scalar given as `φ(cell, x) -> (value, gradient)`.
pub fn interpolate_s<F>(space: &HpScalarSpace, phi: F, opts: &InterpolationOptions) -> Result<Vec<f64>>
where
    F: Fn(usize, Vec3) -> (f64, Vec3) + Sync,
{
    let mesh = space.mesh();
    let mut coeffs = vec![0.0; space.dim()];
    let mut vertex_cell = vec![usize::MAX; mesh.num_vertices()];
    for (c, t) in mesh.triangles().iter().enumerate() {
        for &v in t {
            if vertex_cell[v] == usize::MAX {
                vertex_cell[v] = c;
            }
        }
    }
    for v in 0..mesh.num_vertices() {
        if let Some(d) = space.vertex_dof(v) {
            let val = phi(vertex_cell[v], mesh.vertices()[v]).0;
            if !val.is_finite() {
                return Err(Error::NonFinite("scalar vertex value".into()));
            }
            coeffs[d] = val;
        }
    }
    let edge: Vec<Option<Vec<f64>>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let Some(_) = space.edge_first_dof(e) else { return Ok(None) };
            let cell = mesh.edges()[e].cells[0].cell;
            let [lo, hi] = mesh.edges()[e].vertices;
            let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
            let t = sub(b, a);
            let pe = space.degrees().edge_degree[e];
            let (c, _) = project_edge_trace(
                |s| dot(phi(cell, [0, 1, 2].map(|i| (1.0 - s) * a[i] + s * b[i])).1, t),
                pe,
                opts.points_for(pe),
            )?;
            Ok(Some(c))
        })
        .collect::<Result<_>>()?;
    for (e, c) in edge.iter().enumerate() {
        if let (Some(c), Some(first)) = (c, space.edge_first_dof(e)) {
            coeffs[first..first + c.len() - 1].copy_from_slice(&c[1..]);
        }
    }

    let interior: Vec<Vec<(usize, f64)>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| scalar_interior(space, &coeffs, cell, &phi, opts))
        .collect::<Result<_>>()?;
    for (d, v) in interior.into_iter().flatten() {
        coeffs[d] = v;
    }
    Ok(coeffs)
}

fn scalar_interior<F>(
    space: &HpScalarSpace,
    coeffs: &[f64],
    cell: usize,
    phi: &F,
    opts: &InterpolationOptions,
) -> Result<Vec<(usize, f64)>>
where
    F: Fn(usize, Vec3) -> (f64, Vec3),
{
    let p = space.degrees().cell_degree[cell];
    let dofs = space.cell_interior_dofs(cell);
    if dofs.is_empty() {
        return Ok(Vec::new());
    }
    let im = interior_moments(p);
    let basis = space.cell(cell);
    let chart = space.chart(cell);
    let rule = TriangleRule::new(opts.points_for(p + 3));
    let (mut mono, mut vals, mut grads) = (Vec::new(), Vec::new(), Vec::new());
    let (mut tv, mut td) = (Vec::new(), Vec::new());
    let n = dofs.len();
    let mut rhs = vec![0.0; n];
    for (x, w) in rule.iter() {
        let g = chart.covariant_pull(phi(cell, chart.map(x)).1);
        let mut r = [g[1], -g[0]];
        basis.table.eval(x, &mut mono, &mut vals, &mut grads);
        for (k, &d) in basis.dofs.iter().enumerate() {
            if !dofs.contains(&d) {
                r[0] -= coeffs[d] * grads[k][1];
                r[1] += coeffs[d] * grads[k][0];
            }
        }
        if !(r[0].is_finite() && r[1].is_finite()) {
            return Err(Error::NonFinite("scalar gradient".into()));
        }
        im.tests.eval(x, &mut mono, &mut tv, &mut td);
        for (i, t) in tv[im.gradients..].iter().enumerate() {
            rhs[i] += w * (r[0] * t[0] + r[1] * t[1]);
        }
    }
    Ok((0..n).map(|m| (dofs[m], (0..n).map(|i| im.bubble_inverse[(m, i)] * rhs[i]).sum())).collect())
}

/// `Π_S` of a scalar [`SmoothFieldSpec`].
pub fn interpolate_s_field(
    space: &HpScalarSpace,
    field: &SmoothFieldSpec,
    opts: &InterpolationOptions,
) -> Result<Vec<f64>> {
    if !field.is_scalar() {
        return Err(Error::Config("interpolate_s needs a scalar field".into()));
    }
    interpolate_s(
        space,
        |_, x| (field.scalar_value(x).unwrap_or(f64::NAN), field.gradient(x).unwrap_or([f64::NAN; 3])),
        opts,
    )
}

/// `L²(Γ)` distance between a tangential field and a discrete field.
pub fn l2_error<U>(space: &HpDivSpace, coeffs: &[f64], u: U, opts: &InterpolationOptions) -> Result<f64>
where
    U: Fn(usize, Vec3) -> Vec3 + Sync,
{
    if coeffs.len() != space.dim() {
        return Err(Error::Dimension { expected: space.dim(), got: coeffs.len() });
    }
    let total: f64 = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let chart = space.chart(cell);
            let b = space.cell(cell);
            let rule = TriangleRule::new(opts.points_for(b.table.degree()));
            let mut acc = 0.0;
            for (x, w) in rule.iter() {
                let (vals, _) = space.cell_values(cell, x);
                let mut v = u(cell, chart.map(x));
                for (k, &g) in b.dofs.iter().enumerate() {
                    for i in 0..3 {
                        v[i] -= coeffs[g] * vals[k][i];
                    }
                }
                acc += w * chart.jacobian * dot(v, v);
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("L2 error".into()));
    }
    Ok(total.sqrt())
}

/// Relative commuting-diagram defects of one field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutingDefects {
    /// `‖D Π_X u − Π_Q div u‖ / ‖Π_Q div u‖` (absolute when the latter is 0).
    pub divergence: f64,
    /// `Π_X` applied to its own output, relative change.
    pub idempotence: f64,
    pub dropped_boundary_flux: f64,
}

fn rel(diff: f64, base: f64) -> f64 {
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Check `div Π_X u = Π_Q div u` and `Π_X² = Π_X` for a vector field.
pub fn commuting_defects(
    space: &HpDivSpace,
    field: &SmoothFieldSpec,
    opts: &InterpolationOptions,
) -> Result<CommutingDefects> {
    let q = DivSpace::new(space);
    let d = crate::global_space::divergence_matrix(space);
    let pi = interpolate_x_field(space, field, opts)?;
    let lhs = d.mul_vec(&pi.coefficients);
    let rhs = project_q_divergence(&q, field, opts)?;
    let again = reinterpolate_x(space, &pi.coefficients, opts)?;
    Ok(CommutingDefects {
        divergence: rel(diff2(&lhs, &rhs), norm2(&rhs)),
        idempotence: rel(diff2(&again, &pi.coefficients), norm2(&pi.coefficients)),
        dropped_boundary_flux: pi.dropped_boundary_flux,
    })
}

/// `Π_X` applied to a discrete field of the same space.
pub fn reinterpolate_x(space: &HpDivSpace, coeffs: &[f64], opts: &InterpolationOptions) -> Result<Vec<f64>> {
    let u = |cell: usize, x: Vec3| {
        let p = space.chart(cell).pull_point(x);
        space.evaluate_field(coeffs, cell, clamp_reference(p)).map(|v| v.0).unwrap_or([f64::NAN; 3])
    };
    Ok(interpolate_x(space, u, opts)?.coefficients)
}

fn clamp_reference(p: [f64; 2]) -> [f64; 2] {
    // round-off from pull_point can leave the triangle by an ulp
    let x = p[0].max(0.0);
    let y = p[1].max(0.0);
    let s = x + y;
    if s > 1.0 {
        [x / s, y / s]
    } else {
        [x, y]
    }
}

/// Relative defect of `curl Π_S φ = Π_X curl φ` in coefficient space, and
/// the idempotence defect of `Π_S`. The defect is measured against
/// `max(‖Π_X curl φ‖, ‖curl φ‖_{L²})`, the latter by the centroid rule, so
/// that members where both sides vanish do not divide rounding by rounding.
pub fn curl_commuting_defect(
    xspace: &HpDivSpace,
    sspace: &HpScalarSpace,
    field: &SmoothFieldSpec,
    opts: &InterpolationOptions,
) -> Result<(f64, f64)> {
    let c = sspace.curl_matrix(xspace)?;
    let s = interpolate_s_field(sspace, field, opts)?;
    let lhs = c.mul_vec(&s);
    let rhs = interpolate_x_curl(xspace, field, opts)?.coefficients;
    let again = interpolate_s(
        sspace,
        |cell, x| {
            let p = clamp_reference(sspace.chart(cell).pull_point(x));
            sspace.evaluate_with_gradient(&s, cell, p).unwrap_or((f64::NAN, [f64::NAN; 3]))
        },
        opts,
    )?;
    let l2: f64 = (0..xspace.mesh().num_cells())
        .map(|c| {
            let ch = xspace.chart(c);
            let v = field.surface_curl(ch.map([1.0 / 3.0, 1.0 / 3.0]), ch.normal).unwrap_or([0.0; 3]);
            ch.area() * dot(v, v)
        })
        .sum();
    let scale = norm2(&rhs).max(l2.sqrt());
    Ok((rel(diff2(&lhs, &rhs), scale), rel(diff2(&again, &s), norm2(&s))))
}

/// One row of a rate table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub h_max: f64,
    pub p_min: usize,
    pub l2_error: f64,
    /// `l2_error · sqrt((p_min + 1) / h_max)`.
    pub normalized: f64,
}

/// `‖u − Π_X u‖_{L²}` over a family of meshes and degree maps.
pub fn measure_lemma41_rate(
    field: &SmoothFieldSpec,
    family: &[(SurfaceMesh, DegreeMap)],
    opts: &InterpolationOptions,
) -> Result<Vec<RateRow>> {
    family
        .iter()
        .map(|(mesh, degrees)| {
            let space = HpDivSpace::new(mesh, degrees)?;
            let pi = interpolate_x_field(&space, field, opts)?;
            let err = l2_error(
                &space,
                &pi.coefficients,
                |cell, x| field.vector_value(x, space.chart(cell).normal).unwrap_or([f64::NAN; 3]),
                opts,
            )?;
            let h = mesh.h_max();
            let p = degrees.min_cell_degree();
            Ok(RateRow { h_max: h, p_min: p, l2_error: err, normalized: err * ((p + 1) as f64 / h).sqrt() })
        })
        .collect()
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("h_max,p_min,l2_error,normalized\n");
    for r in rows {
        s.push_str(&format!("{:.6e},{},{:.6e},{:.6e}\n", r.h_max, r.p_min, r.l2_error, r.normalized));
    }
    s
}

/// Empirical orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn empirical_orders(rows: &[RateRow]) -> Vec<f64> {
    rows.windows(2).map(|w| (w[0].l2_error / w[1].l2_error).ln() / (w[0].h_max / w[1].h_max).ln()).collect()
}

/// Estimated `L²(K̂)` operator norm of the local `Π_X` on divergence-free
/// inputs `curl ψ`, `ψ` a random polynomial of degree `p + 3`, for the
/// uniform-degree reference element; one `(p, ratio)` per degree.
pub fn local_norm_profile(max_p: usize, samples: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = InterpolationOptions::default();
    let rule = TriangleRule::new(12);
    (0..=max_p)
        .map(|p| {
            let el = LocalElement::new(p, [p; 3], [0, 1, 2]);
            let table = ShapeTable::from_fields(&el.fields());
            let q = q_basis_f64(p + 3);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let psi = q.iter().fold(Poly::<f64>::zero(), |acc, b| &acc + &b.scale(&rng.random_range(-1.0..1.0)));
                let u = VecPoly::curl_of(&psi);
                let li = interpolate_reference(&el, |x| u.at(x[0], x[1]), &opts)?;
                let (mut mono, mut vals, mut divs) = (Vec::new(), Vec::new(), Vec::new());
                let (mut nu, mut npi) = (0.0, 0.0);
                for (x, w) in rule.iter() {
                    let a = u.at(x[0], x[1]);
                    table.eval(x, &mut mono, &mut vals, &mut divs);
                    let mut b = [0.0; 2];
                    for (c, v) in li.coefficients.iter().zip(&vals) {
                        b[0] += c * v[0];
                        b[1] += c * v[1];
                    }
                    nu += w * (a[0] * a[0] + a[1] * a[1]);
                    npi += w * (b[0] * b[0] + b[1] * b[1]);
                }
                worst = worst.max((npi / nu).sqrt());
            }
            Ok((p, worst))
        })
        .collect()
}

/// Exact flux `∫_E u·n_E` of a field through every edge, by a high-order
/// Gauss rule, seen from the first adjacent cell.
pub fn edge_fluxes(space: &HpDivSpace, field: &SmoothFieldSpec, points: usize) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let g = GaussRule::new(points);
    (0..mesh.num_edges())
        .map(|e| {
            let cell = mesh.edges()[e].cells[0].cell;
            let (a, b, sn) = edge_scaled_normal(mesh, space, e, cell);
            g.iter()
                .map(|(s, w)| {
                    let x = [0, 1, 2].map(|i| (1.0 - s) * a[i] + s * b[i]);
                    Ok(w * dot(field.vector_value(x, space.chart(cell).normal)?, sn))
                })
                .sum()
        })
        .collect()
}

/// Global coefficient vector of the scalar space with a given dof kind set
/// to one; used to build members of `S_N` in tests.
pub fn scalar_unit(space: &HpScalarSpace, kind: ScalarDofKind) -> Option<Vec<f64>> {
    let d = space.dof_kinds().iter().position(|k| *k == kind)?;
    let mut v = vec![0.0; space.dim()];
    v[d] = 1.0;
    Some(v)
}
