//! Galerkin panel integrals of the Helmholtz single-layer kernel
//! `G_k(x,y) = exp(ik|x−y|) / (4π|x−y|)` and dense operator assembly.
//!
//! Coincident, edge-adjacent and vertex-adjacent panel pairs use the
//! Sauter–Schwab regularizing transformations of the 4-cube; separated
//! pairs use tensor Gauss rules whose order adapts to the distance.

mod assembly;
mod rules;

pub use assembly::{
    assemble_operators, estimate_bytes, operator_matrix, operator_matrix_q, read_matrix, write_matrix, AssemblyOptions,
    OperatorMode, PanelOperator, MATRIX_MAGIC,
};
pub use rules::{Adjacency, PairClass, PanelPairRule};

use num_complex::Complex64;

use crate::geometry::{dist, dot, Vec3};
use crate::mesh::{AffineChart, SurfaceMesh};
use crate::{Error, Result};

/// Helmholtz single-layer kernel; `k = 0` is the Laplace kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub k: f64,
}

const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

impl KernelSpec {
    pub fn laplace() -> Self {
        Self { k: 0.0 }
    }

    pub fn helmholtz(k: f64) -> Self {
        Self { k }
    }

    /// `G_k` at distance `r > 0`.
    #[inline]
    pub fn at_distance(&self, r: f64) -> Complex64 {
        if self.k == 0.0 {
            Complex64::new(INV_4PI / r, 0.0)
        } else {
            let (s, c) = (self.k * r).sin_cos();
            Complex64::new(c, s) * (INV_4PI / r)
        }
    }

    pub fn eval(&self, x: Vec3, y: Vec3) -> Complex64 {
        self.at_distance(dist(x, y))
    }

    /// `∇_x G_k(x, y)`.
    pub fn gradient(&self, x: Vec3, y: Vec3) -> [Complex64; 3] {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let r = dot(d, d).sqrt();
        let g = self.at_distance(r) * Complex64::new(-1.0 / r, self.k) / r;
        d.map(|c| g * c)
    }
}

/// Classify a pair of cells by shared vertices.
pub fn classify_pair(mesh: &SurfaceMesh, a: usize, b: usize) -> Result<PairClass> {
    let n = mesh.num_cells();
    if a >= n || b >= n {
        return Err(Error::OutOfRange(format!("cell pair ({a}, {b})")));
    }
    Ok(PairClass::from_triangles(mesh.triangles()[a], mesh.triangles()[b], a == b))
}

/// `∫_a ∫_b G_k(x,y) f(x)·g(y) dS_y dS_x` for reference-coordinate
/// integrands `f` on cell `a` and `g` on cell `b` (scalars as `[v, 0, 0]`).
pub fn panel_integral<F, G>(
    rule: &PanelPairRule,
    class: &PairClass,
    kernel: &KernelSpec,
    chart_a: &AffineChart,
    chart_b: &AffineChart,
    f: F,
    g: G,
) -> Result<Complex64>
where
    F: Fn([f64; 2]) -> Vec3,
    G: Fn([f64; 2]) -> Vec3,
{
    if rule.adjacency != class.adjacency {
        return Err(Error::Config(format!("{:?} rule for a {:?} pair", rule.adjacency, class.adjacency)));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, y, w) in &rule.nodes {
        let (xa, yb) = (class.to_cell_a(x), class.to_cell_b(y));
        acc += kernel.eval(chart_a.map(xa), chart_b.map(yb)) * (w * dot(f(xa), g(yb)));
    }
    let acc = acc * (chart_a.jacobian * chart_b.jacobian);
    if !(acc.re.is_finite() && acc.im.is_finite()) {
        return Err(Error::NonFinite(format!("{:?} panel integral", class.adjacency)));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests;
