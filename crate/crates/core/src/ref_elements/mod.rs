//! Reference-triangle machinery: Raviart–Thomas spaces, the divergence-free
//! edge generators, scalar potentials, orthonormal divergence spaces and the
//! surface Piola transform.

mod edge_space;
mod qspace;
mod rt;
mod scalar;

pub use edge_space::{build_edge_space, edge_generator_indices, hat_power_product, EdgeSpaceBasis};
pub use qspace::{orthogonal_basis_exact, q_basis_f64};
pub use rt::{
    build_rt_basis, in_span, interior_basis_f64, normal_trace, ref_edge_endpoints, rt0_reference, rt_contains,
    rt_dimension, rt_monomial_basis, span_coefficients, RtBasis, MAX_EXACT_DEGREE, REF_EDGE_NORMALS, REF_VERTICES,
};
pub use scalar::{
    build_scalar_basis, interior_bubble, interior_bubble_indices, scalar_shape_poly, scalar_shapes, ScalarBasis,
    ScalarShape,
};

use crate::geometry::Vec3;
use crate::mesh::AffineChart;
use crate::poly::{Rational, VecPoly};

/// Exact local span `X_N(K̂)` of a cell with degree `p_K` and edge degrees
/// `p_E` (reference orientation): three lowest-order functions, the edge
/// generators of every local edge and the interior family of degree `p_K`.
pub fn local_span(cell_degree: usize, edge_degrees: [usize; 3]) -> Vec<VecPoly<Rational>> {
    let mut out: Vec<VecPoly<Rational>> = (0..3).map(rt0_reference).collect();
    for (e, &pe) in edge_degrees.iter().enumerate() {
        out.extend(build_edge_space(pe, e).fields().cloned());
    }
    out.extend(build_rt_basis(cell_degree).interior);
    out
}

/// Whether every `RT_{p_K}(K̂)` shape function lies in [`local_span`].
pub fn local_span_contains_rt(cell_degree: usize, edge_degrees: [usize; 3]) -> bool {
    let span = local_span(cell_degree, edge_degrees);
    build_rt_basis(cell_degree).shape_functions().all(|v| in_span(&span, v))
}

/// Reference field pushed forward to a physical cell by the Piola map:
/// `u∘Φ = J⁻¹ A û` and `(div u)∘Φ = J⁻¹ div û`.
#[derive(Clone, Debug)]
pub struct PiolaField<'a> {
    pub chart: &'a AffineChart,
    pub reference: VecPoly<f64>,
    divergence: crate::poly::Poly<f64>,
}

pub fn piola_push<'a>(chart: &'a AffineChart, reference: &VecPoly<f64>) -> PiolaField<'a> {
    PiolaField { chart, reference: reference.clone(), divergence: reference.div() }
}

impl PiolaField<'_> {
    /// Value at the image of the reference point.
    pub fn value(&self, p: [f64; 2]) -> Vec3 {
        self.chart.piola(self.reference.at(p[0], p[1]))
    }

    pub fn divergence(&self, p: [f64; 2]) -> f64 {
        self.divergence.at(p[0], p[1]) / self.chart.jacobian
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cross, dot, normalize, sub};
    use crate::quadrature::GaussRule;

    #[test]
    fn identity_chart_is_identity() {
        let c = AffineChart::from_vertices([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let f = interior_basis_f64(2)[3].clone();
        let u = piola_push(&c, &f);
        for p in [[0.1, 0.2], [0.5, 0.3]] {
            let r = f.at(p[0], p[1]);
            let v = u.value(p);
            assert!((v[0] - r[0]).abs() < 1e-15 && (v[1] - r[1]).abs() < 1e-15 && v[2] == 0.0);
        }
    }

    #[test]
    fn scaled_chart_divergence() {
        let h = 0.25;
        let c = AffineChart::from_vertices([[0.0, 0.0, 0.0], [h, 0.0, 0.0], [0.0, h, 0.0]]).unwrap();
        let f = rt0_reference(1).to_f64();
        let u = piola_push(&c, &f);
        assert!((u.divergence([0.3, 0.3]) - 2.0 / (h * h)).abs() < 1e-12);
    }

    #[test]
    fn rt0_fluxes_on_tilted_triangle() {
        let v = [[0.2, -0.1, 0.4], [1.3, 0.2, 0.9], [0.1, 0.8, 1.5]];
        let c = AffineChart::from_vertices(v).unwrap();
        let g = GaussRule::new(4);
        for i in 0..3 {
            let u = piola_push(&c, &rt0_reference(i).to_f64());
            for e in 0..3 {
                // physical outward normal of edge e: t × n
                let (a, b) = (v[(e + 1) % 3], v[(e + 2) % 3]);
                let t = sub(b, a);
                let n_out = normalize(cross(t, c.normal));
                let len = crate::geometry::norm(t);
                let [ra, rb] = ref_edge_endpoints(e);
                let flux: f64 = g
                    .iter()
                    .map(|(s, w)| {
                        let p = [ra[0] as f64 + s * (rb[0] - ra[0]) as f64, ra[1] as f64 + s * (rb[1] - ra[1]) as f64];
                        w * len * dot(u.value(p), n_out)
                    })
                    .sum();
                let expected = if i == e { 1.0 } else { 0.0 };
                assert!((flux - expected).abs() < 1e-13, "shape {i} edge {e}: {flux}");
            }
        }
    }

    #[test]
    fn local_span_and_rt_inclusion() {
        for p in 0..=3 {
            assert!(local_span_contains_rt(p, [p, p, p]));
        }
        // a raised edge degree replaces the lower generators by the top
        // homogeneous ones; the difference is an interior bubble curl of
        // degree above p_K, so the inclusion is lost
        assert!(!local_span_contains_rt(1, [3, 1, 1]));
        assert!(!local_span_contains_rt(2, [2, 3, 2]));
        // the traces and the divergences are still those of RT_{p_K}
        let span = local_span(1, [3, 1, 1]);
        let divs: Vec<Vec<Rational>> = span.iter().map(|f| f.div().coeff_vector(3)).collect();
        assert_eq!(crate::exact::rank(divs, crate::poly::mono_count(3)), 3);
    }

    #[test]
    fn local_span_dimension_uniform() {
        for p in 0..=3 {
            assert_eq!(local_span(p, [p, p, p]).len(), rt_dimension(p));
        }
    }
}
