use super::{HpDivSpace, SparseMatrix};
use crate::geometry::Vec3;
use crate::mesh::AffineChart;
use crate::poly::{mono_count, monomial_values, Poly};
use crate::quadrature::TriangleRule;
use crate::ref_elements::q_basis_f64;

/// Piecewise polynomials of degree `p_K` on each cell with the basis
/// `q̂_i / sqrt(J_K)`, orthonormal in `L²(K)`.
#[derive(Clone, Debug)]
pub struct DivSpace {
    cell_degree: Vec<usize>,
    offsets: Vec<usize>,
    charts: Vec<AffineChart>,
}

impl DivSpace {
    pub fn new(space: &HpDivSpace) -> Self {
        Self::from_parts(&space.degrees().cell_degree, space.charts())
    }

    pub fn from_parts(cell_degree: &[usize], charts: &[AffineChart]) -> Self {
        let mut offsets = Vec::with_capacity(cell_degree.len() + 1);
        offsets.push(0);
        for &p in cell_degree {
            offsets.push(offsets.last().unwrap() + mono_count(p));
        }
        Self { cell_degree: cell_degree.to_vec(), offsets, charts: charts.to_vec() }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_degree.len()
    }

    pub fn cell_degree(&self, cell: usize) -> usize {
        self.cell_degree[cell]
    }

    pub fn cell_range(&self, cell: usize) -> std::ops::Range<usize> {
        self.offsets[cell]..self.offsets[cell + 1]
    }

    pub fn chart(&self, cell: usize) -> &AffineChart {
        &self.charts[cell]
    }

    pub fn reference_basis(&self, cell: usize) -> &'static [Poly<f64>] {
        q_basis_f64(self.cell_degree[cell])
    }

    /// Physical basis values on `cell` at the image of `p`.
    pub fn cell_values(&self, cell: usize, p: [f64; 2]) -> Vec<f64> {
        let s = 1.0 / self.charts[cell].jacobian.sqrt();
        let mut mono = Vec::new();
        monomial_values(p[0], p[1], self.cell_degree[cell], &mut mono);
        self.reference_basis(cell)
            .iter()
            .map(|q| q.coeffs().iter().zip(&mono).map(|(a, b)| a * b).sum::<f64>() * s)
            .collect()
    }

    pub fn evaluate(&self, coeffs: &[f64], cell: usize, p: [f64; 2]) -> f64 {
        let r = self.cell_range(cell);
        self.cell_values(cell, p).iter().zip(&coeffs[r]).map(|(a, b)| a * b).sum()
    }

    /// Cell-wise `L²` projection of `f(cell, x̂, x)` with a collapsed Gauss
    /// rule of `extra` points beyond the polynomial degree per direction.
    pub fn project<F>(&self, f: F, extra: usize) -> Vec<f64>
    where
        F: Fn(usize, [f64; 2], Vec3) -> f64,
    {
        let mut out = vec![0.0; self.dim()];
        for cell in 0..self.num_cells() {
            let rule = TriangleRule::new(self.cell_degree[cell] + extra);
            let chart = &self.charts[cell];
            let r = self.cell_range(cell);
            for (p, w) in rule.iter() {
                let v = f(cell, p, chart.map(p));
                let q = self.cell_values(cell, p);
                for (o, qi) in out[r.clone()].iter_mut().zip(q) {
                    *o += w * chart.jacobian * v * qi;
                }
            }
        }
        out
    }
}

/// Sparse matrix `D` with `div(Σ c_j u_j) = Σ_i (D c)_i q_i` exactly.
pub fn divergence_matrix(space: &HpDivSpace) -> SparseMatrix {
    let q = DivSpace::new(space);
    let mut triplets = Vec::new();
    let (mut mono, mut vals, mut divs) = (Vec::new(), Vec::new(), Vec::new());
    for cell in 0..space.mesh().num_cells() {
        let basis = space.cell(cell);
        let pk = q.cell_degree(cell);
        let rule = TriangleRule::for_degree(basis.table.degree() + pk);
        let qb = q.reference_basis(cell);
        let s = 1.0 / space.chart(cell).jacobian.sqrt();
        let r = q.cell_range(cell);
        let mut block = vec![0.0; qb.len() * basis.dofs.len()];
        for (p, w) in rule.iter() {
            basis.table.eval(p, &mut mono, &mut vals, &mut divs);
            for (i, qi) in qb.iter().enumerate() {
                let qv = qi.at(p[0], p[1]) * w * s;
                for (j, d) in divs.iter().enumerate() {
                    block[i * basis.dofs.len() + j] += qv * d;
                }
            }
        }
        for i in 0..qb.len() {
            for (j, &g) in basis.dofs.iter().enumerate() {
                let v = block[i * basis.dofs.len() + j];
                if v != 0.0 {
                    triplets.push((r.start + i, g, v));
                }
            }
        }
    }
    SparseMatrix::from_triplets(q.dim(), space.dim(), triplets)
}
