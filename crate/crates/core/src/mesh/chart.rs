use serde::Serialize;

use crate::geometry::{add, cross, dot, norm, scale, sub, Vec3};

/// Affine map `Φ_K(x̂) = A_K x̂ + t_K` from the reference triangle onto a
/// physical cell, with the reference vertices `(0,0), (1,0), (0,1)` going to
/// the cell vertices in stored order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineChart {
    /// Columns `a₁ = v₁ − v₀`, `a₂ = v₂ − v₀`.
    pub a: [Vec3; 2],
    pub t: Vec3,
    /// `sqrt(det(AᵀA)) = 2 |K|`.
    pub jacobian: f64,
    /// `AᵀA`.
    pub gram: [[f64; 2]; 2],
    /// Unit normal `a₁ × a₂ / J`.
    pub normal: Vec3,
}

impl AffineChart {
    pub fn from_vertices(v: [Vec3; 3]) -> Option<Self> {
        let a1 = sub(v[1], v[0]);
        let a2 = sub(v[2], v[0]);
        let n = cross(a1, a2);
        let j = norm(n);
        if !(j > 0.0) || !j.is_finite() {
            return None;
        }
        let gram = [[dot(a1, a1), dot(a1, a2)], [dot(a2, a1), dot(a2, a2)]];
        Some(Self { a: [a1, a2], t: v[0], jacobian: j, gram, normal: scale(n, 1.0 / j) })
    }

    #[inline]
    pub fn map(&self, p: [f64; 2]) -> Vec3 {
        add(self.t, add(scale(self.a[0], p[0]), scale(self.a[1], p[1])))
    }

    /// `A v` for a reference vector.
    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> Vec3 {
        add(scale(self.a[0], v[0]), scale(self.a[1], v[1]))
    }

    #[inline]
    pub fn gram_inverse(&self) -> [[f64; 2]; 2] {
        let g = self.gram;
        let det = self.jacobian * self.jacobian;
        [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
    }

    /// Reference coordinates of a point in the cell plane.
    pub fn pull_point(&self, x: Vec3) -> [f64; 2] {
        let d = sub(x, self.t);
        let r = [dot(self.a[0], d), dot(self.a[1], d)];
        let gi = self.gram_inverse();
        [gi[0][0] * r[0] + gi[0][1] * r[1], gi[1][0] * r[0] + gi[1][1] * r[1]]
    }

    /// Piola push-forward of a reference vector: `A v / J`.
    #[inline]
    pub fn piola(&self, v: [f64; 2]) -> Vec3 {
        scale(self.apply(v), 1.0 / self.jacobian)
    }

    /// Inverse Piola map of a tangential vector: `J G⁻¹ Aᵀ u`.
    pub fn piola_pull(&self, u: Vec3) -> [f64; 2] {
        let r = [dot(self.a[0], u), dot(self.a[1], u)];
        let gi = self.gram_inverse();
        [self.jacobian * (gi[0][0] * r[0] + gi[0][1] * r[1]), self.jacobian * (gi[1][0] * r[0] + gi[1][1] * r[1])]
    }

    /// Surface gradient from a reference gradient: `A G⁻¹ ∇̂`.
    pub fn covariant(&self, g: [f64; 2]) -> Vec3 {
        let gi = self.gram_inverse();
        self.apply([gi[0][0] * g[0] + gi[0][1] * g[1], gi[1][0] * g[0] + gi[1][1] * g[1]])
    }

    /// Covariant pullback of a tangential vector: `Aᵀ u`.
    pub fn covariant_pull(&self, u: Vec3) -> [f64; 2] {
        [dot(self.a[0], u), dot(self.a[1], u)]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.jacobian
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        match i {
            0 => self.t,
            1 => add(self.t, self.a[0]),
            2 => add(self.t, self.a[1]),
            _ => panic!("vertex index {i}"),
        }
    }
}
