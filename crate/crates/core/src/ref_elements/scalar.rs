use super::edge_space::{edge_generator_indices, hat_power_product};
use crate::poly::{monomials, Coeff, Poly, Rational, VecPoly};

/// Role of a hierarchical scalar shape function on the reference triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarShape {
    Vertex(usize),
    /// `ψ_a^α ψ_b^β` for local edge `edge` with `a`, `b` its endpoints in
    /// local traversal order.
    EdgeBubble {
        edge: usize,
        alpha: usize,
        beta: usize,
    },
    /// `λ₀ λ₁ λ₂ x^i y^j`.
    Interior {
        i: usize,
        j: usize,
    },
}

/// Interior bubble `λ₀ λ₁ λ₂ x^i y^j`.
pub fn interior_bubble<T: Coeff>(i: usize, j: usize) -> Poly<T> {
    let b = &(&Poly::barycentric(0) * &Poly::barycentric(1)) * &Poly::barycentric(2);
    &b * &Poly::monomial(i, j, T::one())
}

/// Interior bubble exponents for cell degree `p`: `λ₀λ₁λ₂ · P_{p−2}`.
pub fn interior_bubble_indices(cell_degree: usize) -> Vec<(usize, usize)> {
    if cell_degree < 2 {
        Vec::new()
    } else {
        monomials(cell_degree - 2)
    }
}

pub fn scalar_shape_poly<T: Coeff>(shape: ScalarShape) -> Poly<T> {
    match shape {
        ScalarShape::Vertex(v) => Poly::barycentric(v),
        ScalarShape::EdgeBubble { edge, alpha, beta } => hat_power_product((edge + 1) % 3, (edge + 2) % 3, alpha, beta),
        ScalarShape::Interior { i, j } => interior_bubble(i, j),
    }
}

/// Discrete scalar potential basis on `K̂`: three hats, `p_E` edge bubbles
/// of degree `p_E + 1` per edge and interior bubbles of degree up to
/// `p_K + 1`.
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub cell_degree: usize,
    pub edge_degrees: [usize; 3],
    pub functions: Vec<(ScalarShape, Poly<Rational>)>,
}

pub fn scalar_shapes(cell_degree: usize, edge_degrees: [usize; 3]) -> Vec<ScalarShape> {
    let mut out: Vec<ScalarShape> = (0..3).map(ScalarShape::Vertex).collect();
    for (edge, &pe) in edge_degrees.iter().enumerate() {
        for (alpha, beta) in edge_generator_indices(pe) {
            out.push(ScalarShape::EdgeBubble { edge, alpha, beta });
        }
    }
    for (i, j) in interior_bubble_indices(cell_degree) {
        out.push(ScalarShape::Interior { i, j });
    }
    out
}

pub fn build_scalar_basis(cell_degree: usize, edge_degrees: [usize; 3]) -> ScalarBasis {
    let functions = scalar_shapes(cell_degree, edge_degrees).into_iter().map(|s| (s, scalar_shape_poly(s))).collect();
    ScalarBasis { cell_degree, edge_degrees, functions }
}

impl ScalarBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn curls(&self) -> Vec<VecPoly<Rational>> {
        self.functions.iter().map(|(_, p)| VecPoly::curl_of(p)).collect()
    }

    pub fn interior_curls(&self) -> Vec<VecPoly<Rational>> {
        self.functions
            .iter()
            .filter(|(s, _)| matches!(s, ScalarShape::Interior { .. }))
            .map(|(_, p)| VecPoly::curl_of(p))
            .collect()
    }
}
