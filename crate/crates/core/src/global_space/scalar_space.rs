use super::{oriented_local_endpoints, HpDivSpace, ScalarTable, SparseMatrix};
use crate::geometry::Vec3;
use crate::mesh::{AffineChart, DegreeMap, SurfaceKind, SurfaceMesh};
use crate::poly::{Poly, VecPoly};
use crate::quadrature::TriangleRule;
use crate::ref_elements::{hat_power_product, interior_basis_f64, interior_bubble, interior_bubble_indices};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarDofKind {
    Vertex {
        vertex: usize,
    },
    /// `ψ_lo^α ψ_hi^β` on the patch of `edge`.
    EdgeBubble {
        edge: usize,
        alpha: usize,
        beta: usize,
    },
    /// `λ₀λ₁λ₂ x̂^i ŷ^j` on `cell`.
    Interior {
        cell: usize,
        i: usize,
        j: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ScalarCellBasis {
    pub dofs: Vec<usize>,
    pub potentials: Vec<Poly<f64>>,
    pub table: ScalarTable,
}

/// Continuous piecewise polynomials with edge traces of degree `p_E + 1`
/// and interior degree `p_K + 1`; on screens they vanish on the boundary.
#[derive(Clone, Debug)]
pub struct HpScalarSpace {
    mesh: SurfaceMesh,
    degrees: DegreeMap,
    charts: Vec<AffineChart>,
    vertex_dof: Vec<Option<usize>>,
    edge_first_dof: Vec<Option<usize>>,
    dofs: Vec<ScalarDofKind>,
    cells: Vec<ScalarCellBasis>,
}

impl HpScalarSpace {
    pub fn new(mesh: &SurfaceMesh, degrees: &DegreeMap) -> Result<Self> {
        if degrees.cell_degree.len() != mesh.num_cells() {
            return Err(Error::Dimension { expected: mesh.num_cells(), got: degrees.cell_degree.len() });
        }
        let screen = mesh.kind() == SurfaceKind::Screen;
        let boundary_vertex = mesh.boundary_vertices();
        let mut dofs = Vec::new();
        let mut vertex_dof = vec![None; mesh.num_vertices()];
        for v in 0..mesh.num_vertices() {
            if screen && boundary_vertex[v] {
                continue;
            }
            vertex_dof[v] = Some(dofs.len());
            dofs.push(ScalarDofKind::Vertex { vertex: v });
        }
        let mut edge_first_dof = vec![None; mesh.num_edges()];
        for e in 0..mesh.num_edges() {
            let pe = degrees.edge_degree[e];
            if (screen && mesh.is_boundary_edge(e)) || pe == 0 {
                continue;
            }
            edge_first_dof[e] = Some(dofs.len());
            for alpha in 1..=pe {
                dofs.push(ScalarDofKind::EdgeBubble { edge: e, alpha, beta: pe + 1 - alpha });
            }
        }
        let mut cells = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let mut cdofs = Vec::new();
            let mut potentials = Vec::new();
            let tri = mesh.triangles()[c];
            for (local, &v) in tri.iter().enumerate() {
                if let Some(d) = vertex_dof[v] {
                    cdofs.push(d);
                    potentials.push(Poly::<f64>::barycentric(local));
                }
            }
            for (local, &e) in mesh.cell_edges(c).iter().enumerate() {
                let Some(first) = edge_first_dof[e] else { continue };
                let [lo, hi] = oriented_local_endpoints(mesh, c, local);
                let pe = degrees.edge_degree[e];
                for alpha in 1..=pe {
                    cdofs.push(first + alpha - 1);
                    potentials.push(hat_power_product::<f64>(lo, hi, alpha, pe + 1 - alpha));
                }
            }
            for (i, j) in interior_bubble_indices(degrees.cell_degree[c]) {
                cdofs.push(dofs.len());
                dofs.push(ScalarDofKind::Interior { cell: c, i, j });
                potentials.push(interior_bubble::<f64>(i, j));
            }
            let table = ScalarTable::from_polys(&potentials);
            cells.push(ScalarCellBasis { dofs: cdofs, potentials, table });
        }
        let charts = (0..mesh.num_cells()).map(|c| mesh.chart(c)).collect::<Result<Vec<_>>>()?;
        Ok(Self { mesh: mesh.clone(), degrees: degrees.clone(), charts, vertex_dof, edge_first_dof, dofs, cells })
    }

    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn degrees(&self) -> &DegreeMap {
        &self.degrees
    }

    pub fn chart(&self, cell: usize) -> &AffineChart {
        &self.charts[cell]
    }

    pub fn dof_kinds(&self) -> &[ScalarDofKind] {
        &self.dofs
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    /// First bubble of `e`; the remaining `p_E − 1` follow.
    pub fn edge_first_dof(&self, e: usize) -> Option<usize> {
        self.edge_first_dof[e]
    }

    pub fn cell(&self, cell: usize) -> &ScalarCellBasis {
        &self.cells[cell]
    }

    /// Interior bubble DOFs of `cell` in the order of
    /// [`interior_bubble_indices`].
    pub fn cell_interior_dofs(&self, cell: usize) -> Vec<usize> {
        let b = &self.cells[cell];
        b.dofs.iter().copied().filter(|&d| matches!(self.dofs[d], ScalarDofKind::Interior { .. })).collect()
    }

    /// Value and surface curl `∇φ × n` of the function with coefficients
    /// `coeffs` at the image of `p` in `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, p: [f64; 2]) -> Result<(f64, Vec3)> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: coeffs.len() });
        }
        let b = &self.cells[cell];
        let (mut mono, mut vals, mut grads) = (Vec::new(), Vec::new(), Vec::new());
        b.table.eval(p, &mut mono, &mut vals, &mut grads);
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for (k, &d) in b.dofs.iter().enumerate() {
            v += coeffs[d] * vals[k];
            g[0] += coeffs[d] * grads[k][0];
            g[1] += coeffs[d] * grads[k][1];
        }
        Ok((v, self.charts[cell].piola([g[1], -g[0]])))
    }

    /// Value and surface gradient at the image of `p` in `cell`.
    pub fn evaluate_with_gradient(&self, coeffs: &[f64], cell: usize, p: [f64; 2]) -> Result<(f64, Vec3)> {
        let (v, curl) = self.evaluate(coeffs, cell, p)?;
        // ∇φ = n × (∇φ × n) for tangential gradients
        Ok((v, crate::geometry::cross(self.charts[cell].normal, curl)))
    }

    /// Sparse map from scalar coefficients to the div-conforming
    /// coefficients of the surface curl.
    pub fn curl_matrix(&self, xspace: &HpDivSpace) -> Result<SparseMatrix> {
        if xspace.mesh().num_cells() != self.mesh.num_cells() || xspace.degrees() != &self.degrees {
            return Err(Error::Config("curl matrix needs spaces on the same mesh and degrees".into()));
        }
        let mut t = Vec::new();
        for (d, kind) in self.dofs.iter().enumerate() {
            match *kind {
                ScalarDofKind::Vertex { vertex } => {
                    for (e, edge) in self.mesh.edges().iter().enumerate() {
                        let [lo, hi] = edge.vertices;
                        if lo != vertex && hi != vertex {
                            continue;
                        }
                        let r = xspace
                            .edge_first_dof(e)
                            .ok_or_else(|| Error::Config(format!("vertex {vertex} touches inactive edge {e}")))?;
                        t.push((r, d, if hi == vertex { 1.0 } else { -1.0 }));
                    }
                }
                ScalarDofKind::EdgeBubble { edge, alpha, .. } => {
                    let r = xspace.edge_first_dof(edge).expect("bubble edge is active");
                    t.push((r + alpha, d, 1.0));
                }
                ScalarDofKind::Interior { cell, i, j } => {
                    let curl = VecPoly::curl_of(&interior_bubble::<f64>(i, j));
                    let pk = self.degrees.cell_degree[cell];
                    let rule = TriangleRule::for_degree(2 * pk + 1);
                    let rows = xspace.cell_interior_dofs(cell);
                    for (k, b) in interior_basis_f64(pk).iter().enumerate() {
                        let c: f64 = rule
                            .iter()
                            .map(|(p, w)| {
                                let (u, v) = (curl.at(p[0], p[1]), b.at(p[0], p[1]));
                                w * (u[0] * v[0] + u[1] * v[1])
                            })
                            .sum();
                        t.push((rows.start + k, d, c));
                    }
                }
            }
        }
        Ok(SparseMatrix::from_triplets(xspace.dim(), self.dim(), t))
    }
}
