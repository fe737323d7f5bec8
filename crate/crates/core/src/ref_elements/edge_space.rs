use crate::poly::{Coeff, Poly, Rational, VecPoly};

/// `ψ_a^α ψ_b^β` with `ψ` the reference barycentric coordinates.
pub fn hat_power_product<T: Coeff>(a: usize, b: usize, alpha: usize, beta: usize) -> Poly<T> {
    &Poly::barycentric(a).pow(alpha) * &Poly::barycentric(b).pow(beta)
}

/// Index set `{(α, β) : α, β ≥ 1, α + β = p_E + 1}` in increasing `α`.
pub fn edge_generator_indices(edge_degree: usize) -> Vec<(usize, usize)> {
    (1..=edge_degree).map(|alpha| (alpha, edge_degree + 1 - alpha)).collect()
}

/// Divergence-free generators `curl(ψ₁^α ψ₂^β)` of the edge space on the
/// reference triangle, where `ψ₁`, `ψ₂` are the hats of the first and second
/// endpoint of the local edge.
#[derive(Clone, Debug)]
pub struct EdgeSpaceBasis {
    pub edge_degree: usize,
    pub local_edge: usize,
    /// `((α, β), potential ψ₁^α ψ₂^β, curl of the potential)`.
    pub generators: Vec<((usize, usize), Poly<Rational>, VecPoly<Rational>)>,
}

pub fn build_edge_space(edge_degree: usize, local_edge: usize) -> EdgeSpaceBasis {
    assert!(local_edge < 3);
    let (a, b) = ((local_edge + 1) % 3, (local_edge + 2) % 3);
    let generators = edge_generator_indices(edge_degree)
        .into_iter()
        .map(|(alpha, beta)| {
            let phi = hat_power_product::<Rational>(a, b, alpha, beta);
            let curl = VecPoly::curl_of(&phi);
            ((alpha, beta), phi, curl)
        })
        .collect();
    EdgeSpaceBasis { edge_degree, local_edge, generators }
}

impl EdgeSpaceBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn fields(&self) -> impl Iterator<Item = &VecPoly<Rational>> {
        self.generators.iter().map(|(_, _, v)| v)
    }
}
