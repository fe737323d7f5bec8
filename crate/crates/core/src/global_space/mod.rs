//! Global hp boundary element spaces: the div-conforming space with its
//! RT0, edge and interior blocks, the piecewise polynomial divergence space
//! and the continuous scalar potential space.

mod coeff_io;
mod div_space;
mod scalar_space;
mod shapes;
mod sparse;

pub use coeff_io::{read_coefficients, write_coefficients, COEFF_MAGIC};
pub use div_space::{divergence_matrix, DivSpace};
pub use scalar_space::{HpScalarSpace, ScalarDofKind};
pub use shapes::{ScalarTable, ShapeTable};
pub use sparse::SparseMatrix;

use num_complex::Complex64;

use crate::geometry::{cross, normalize, scale, sub, Vec3};
use crate::mesh::{local_edge_vertices, AffineChart, DegreeMap, SurfaceKind, SurfaceMesh};
use crate::poly::{rat, Coeff, Rational, VecPoly};
use crate::ref_elements::{hat_power_product, interior_basis_f64, rt0_reference};
use crate::{Error, Result};

/// Role of a global degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DofKind {
    /// Lowest-order function with unit flux across `edge` along its normal.
    Rt0 { edge: usize },
    /// `curl(ψ_lo^α ψ_hi^β)` for the endpoint hats of `edge`.
    EdgeGenerator { edge: usize, alpha: usize, beta: usize },
    /// Member `index` of the orthonormal interior family of `cell`.
    Interior { cell: usize, index: usize },
}

/// Global functions restricted to one cell, as signed reference fields.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub dofs: Vec<usize>,
    pub fields: Vec<VecPoly<f64>>,
    pub table: ShapeTable,
}

/// The global space of variable-degree div-conforming boundary elements.
#[derive(Clone, Debug)]
pub struct HpDivSpace {
    mesh: SurfaceMesh,
    degrees: DegreeMap,
    charts: Vec<AffineChart>,
    active_edge: Vec<bool>,
    edge_first_dof: Vec<Option<usize>>,
    cell_first_dof: Vec<usize>,
    dofs: Vec<DofKind>,
    cells: Vec<CellBasis>,
}

/// Local vertex indices of the lower and higher global endpoint of local
/// edge `local`.
pub(crate) fn oriented_local_endpoints(mesh: &SurfaceMesh, cell: usize, local: usize) -> [usize; 2] {
    let [a, b] = local_edge_vertices(local);
    let t = mesh.triangles()[cell];
    if t[a] < t[b] {
        [a, b]
    } else {
        [b, a]
    }
}

fn generator_field<T: Coeff>(lo: usize, hi: usize, alpha: usize, beta: usize) -> VecPoly<T> {
    VecPoly::curl_of(&hat_power_product::<T>(lo, hi, alpha, beta))
}

impl HpDivSpace {
    /// Build the space; on screens the RT0 and edge blocks of boundary edges
    /// are left out.
    pub fn new(mesh: &SurfaceMesh, degrees: &DegreeMap) -> Result<Self> {
        if degrees.cell_degree.len() != mesh.num_cells() {
            return Err(Error::Dimension { expected: mesh.num_cells(), got: degrees.cell_degree.len() });
        }
        if degrees.edge_degree.len() != mesh.num_edges() {
            return Err(Error::Dimension { expected: mesh.num_edges(), got: degrees.edge_degree.len() });
        }
        if let Some(&p) = degrees.cell_degree.iter().chain(&degrees.edge_degree).find(|&&p| p > 6) {
            return Err(Error::Config(format!("polynomial degree {p} above the supported maximum 6")));
        }
        let charts = (0..mesh.num_cells()).map(|c| mesh.chart(c)).collect::<Result<Vec<_>>>()?;
        let screen = mesh.kind() == SurfaceKind::Screen;
        let active_edge: Vec<bool> = (0..mesh.num_edges()).map(|e| !(screen && mesh.is_boundary_edge(e))).collect();

        let mut dofs = Vec::new();
        let mut edge_first_dof = vec![None; mesh.num_edges()];
        for e in 0..mesh.num_edges() {
            if !active_edge[e] {
                continue;
            }
            edge_first_dof[e] = Some(dofs.len());
            dofs.push(DofKind::Rt0 { edge: e });
            let pe = degrees.edge_degree[e];
            for alpha in 1..=pe {
                dofs.push(DofKind::EdgeGenerator { edge: e, alpha, beta: pe + 1 - alpha });
            }
        }
        let mut cell_first_dof = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            cell_first_dof.push(dofs.len());
            let pk = degrees.cell_degree[c];
            for index in 0..pk * (pk + 1) {
                dofs.push(DofKind::Interior { cell: c, index });
            }
        }

        let mut space = Self {
            mesh: mesh.clone(),
            degrees: degrees.clone(),
            charts,
            active_edge,
            edge_first_dof,
            cell_first_dof,
            dofs,
            cells: Vec::new(),
        };
        space.cells = (0..mesh.num_cells()).map(|c| space.build_cell(c)).collect();
        Ok(space)
    }

    fn build_cell(&self, cell: usize) -> CellBasis {
        let mut dofs = Vec::new();
        let mut fields = Vec::new();
        let edges = self.mesh.cell_edges(cell);
        for (local, &e) in edges.iter().enumerate() {
            let Some(first) = self.edge_first_dof[e] else { continue };
            let sign = self.mesh.edge_sign(cell, local) as f64;
            dofs.push(first);
            fields.push(rt0_reference(local).to_f64().scale(&sign));
            let [lo, hi] = oriented_local_endpoints(&self.mesh, cell, local);
            let pe = self.degrees.edge_degree[e];
            for alpha in 1..=pe {
                dofs.push(first + alpha);
                fields.push(generator_field::<f64>(lo, hi, alpha, pe + 1 - alpha));
            }
        }
        let pk = self.degrees.cell_degree[cell];
        for (k, f) in interior_basis_f64(pk).iter().enumerate() {
            dofs.push(self.cell_first_dof[cell] + k);
            fields.push(f.clone());
        }
        let table = ShapeTable::from_fields(&fields);
        CellBasis { dofs, fields, table }
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn degrees(&self) -> &DegreeMap {
        &self.degrees
    }

    pub fn charts(&self) -> &[AffineChart] {
        &self.charts
    }

    pub fn chart(&self, cell: usize) -> &AffineChart {
        &self.charts[cell]
    }

    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn dof_kinds(&self) -> &[DofKind] {
        &self.dofs
    }

    pub fn is_active_edge(&self, e: usize) -> bool {
        self.active_edge[e]
    }

    /// Index of the RT0 function of `e`; the edge generators follow it.
    pub fn edge_first_dof(&self, e: usize) -> Option<usize> {
        self.edge_first_dof[e]
    }

    pub fn cell_interior_dofs(&self, cell: usize) -> std::ops::Range<usize> {
        let pk = self.degrees.cell_degree[cell];
        let s = self.cell_first_dof[cell];
        s..s + pk * (pk + 1)
    }

    pub fn cell(&self, cell: usize) -> &CellBasis {
        &self.cells[cell]
    }

    pub fn cells(&self) -> &[CellBasis] {
        &self.cells
    }

    /// Expected dimension from the block counts.
    pub fn dimension_formula(&self) -> usize {
        let edges: usize =
            (0..self.mesh.num_edges()).filter(|&e| self.active_edge[e]).map(|e| 1 + self.degrees.edge_degree[e]).sum();
        let cells: usize = self.degrees.cell_degree.iter().map(|p| p * (p + 1)).sum();
        edges + cells
    }

    /// Unit normal of edge `e` in the plane of `cell`: `t_E × n_K` with `t_E`
    /// running from the lower to the higher vertex. It is outward for the
    /// cell traversing the edge in that direction.
    pub fn edge_normal(&self, e: usize, cell: usize) -> Vec3 {
        let [lo, hi] = self.mesh.edges()[e].vertices;
        let v = self.mesh.vertices();
        normalize(cross(sub(v[hi], v[lo]), self.charts[cell].normal))
    }

    /// Exact signed local fields of `cell` (same order as [`CellBasis`]).
    pub fn cell_fields_exact(&self, cell: usize) -> Vec<VecPoly<Rational>> {
        let mut out = Vec::new();
        for (local, &e) in self.mesh.cell_edges(cell).iter().enumerate() {
            if self.edge_first_dof[e].is_none() {
                continue;
            }
            let sign = rat(self.mesh.edge_sign(cell, local) as i64, 1);
            out.push(rt0_reference(local).scale(&sign));
            let [lo, hi] = oriented_local_endpoints(&self.mesh, cell, local);
            let pe = self.degrees.edge_degree[e];
            for alpha in 1..=pe {
                out.push(generator_field::<Rational>(lo, hi, alpha, pe + 1 - alpha));
            }
        }
        out.extend(crate::ref_elements::build_rt_basis(self.degrees.cell_degree[cell]).interior);
        out
    }

    /// Physical values and surface divergences of the cell's local functions.
    pub fn cell_values(&self, cell: usize, p: [f64; 2]) -> (Vec<Vec3>, Vec<f64>) {
        let chart = &self.charts[cell];
        let mut mono = Vec::new();
        let mut vals = Vec::new();
        let mut divs = Vec::new();
        self.cells[cell].table.eval(p, &mut mono, &mut vals, &mut divs);
        let inv = 1.0 / chart.jacobian;
        (vals.iter().map(|v| chart.piola(*v)).collect(), divs.iter().map(|d| d * inv).collect())
    }

    fn check_point(&self, cell: usize, p: [f64; 2]) -> Result<()> {
        if cell >= self.mesh.num_cells() {
            return Err(Error::OutOfRange(format!("cell {cell}")));
        }
        let tol = 1e-12;
        if !(p[0] >= -tol && p[1] >= -tol && p[0] + p[1] <= 1.0 + tol) {
            return Err(Error::OutOfRange(format!("reference point {p:?}")));
        }
        Ok(())
    }

    /// Tangential value and surface divergence of the field with real
    /// coefficients at the image of the reference point `p` in `cell`.
    pub fn evaluate_field(&self, coeffs: &[f64], cell: usize, p: [f64; 2]) -> Result<(Vec3, f64)> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: coeffs.len() });
        }
        self.check_point(cell, p)?;
        let (vals, divs) = self.cell_values(cell, p);
        let mut u = [0.0; 3];
        let mut d = 0.0;
        for (k, &g) in self.cells[cell].dofs.iter().enumerate() {
            for i in 0..3 {
                u[i] += coeffs[g] * vals[k][i];
            }
            d += coeffs[g] * divs[k];
        }
        Ok((u, d))
    }

    /// Complex-coefficient version of [`HpDivSpace::evaluate_field`].
    pub fn evaluate_field_complex(
        &self,
        coeffs: &[Complex64],
        cell: usize,
        p: [f64; 2],
    ) -> Result<([Complex64; 3], Complex64)> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: coeffs.len() });
        }
        self.check_point(cell, p)?;
        let (vals, divs) = self.cell_values(cell, p);
        let mut u = [Complex64::new(0.0, 0.0); 3];
        let mut d = Complex64::new(0.0, 0.0);
        for (k, &g) in self.cells[cell].dofs.iter().enumerate() {
            for i in 0..3 {
                u[i] += coeffs[g] * vals[k][i];
            }
            d += coeffs[g] * divs[k];
        }
        Ok((u, d))
    }

    /// Normal trace `u·n_E` of every local function of `cell` at arc
    /// parameter `s ∈ [0,1]` of edge `e` (from its lower to its higher
    /// vertex), with the normal of [`HpDivSpace::edge_normal`].
    pub fn edge_traces(&self, e: usize, cell: usize, s: f64) -> Vec<f64> {
        let local = self.mesh.cell_edges(cell).iter().position(|&x| x == e).expect("edge belongs to cell");
        let [lo, hi] = oriented_local_endpoints(&self.mesh, cell, local);
        let mut lam = [0.0; 3];
        lam[lo] = 1.0 - s;
        lam[hi] = s;
        let (vals, _) = self.cell_values(cell, [lam[1], lam[2]]);
        let n = self.edge_normal(e, cell);
        vals.iter().map(|v| crate::geometry::dot(*v, n)).collect()
    }

    /// Largest jump of the normal component across interior edges over all
    /// global functions, sampled at `samples` points per edge.
    pub fn conformity_defect(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if edge.cells.len() != 2 {
                continue;
            }
            let (ca, cb) = (edge.cells[0].cell, edge.cells[1].cell);
            for k in 0..samples {
                let s = (k as f64 + 0.5) / samples as f64;
                let ta = self.edge_traces(e, ca, s);
                let tb = self.edge_traces(e, cb, s);
                let mut acc: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
                for (i, &g) in self.cells[ca].dofs.iter().enumerate() {
                    *acc.entry(g).or_default() += ta[i];
                }
                for (i, &g) in self.cells[cb].dofs.iter().enumerate() {
                    *acc.entry(g).or_default() -= tb[i];
                }
                for v in acc.values() {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Largest normal trace on boundary edges over all global functions.
    pub fn boundary_flux_defect(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let c = edge.cells[0].cell;
            for k in 0..samples {
                let s = (k as f64 + 0.5) / samples as f64;
                for t in self.edge_traces(e, c, s) {
                    worst = worst.max(t.abs());
                }
            }
        }
        worst
    }

    /// Scaled normal of local edge `local` in reference coordinates pushed
    /// through the chart: for tests of the Piola convention.
    pub fn physical_outward_normal(&self, cell: usize, local: usize) -> Vec3 {
        let sign = self.mesh.edge_sign(cell, local) as f64;
        let e = self.mesh.cell_edges(cell)[local];
        scale(self.edge_normal(e, cell), sign)
    }
}
