//! Conforming surface triangulations of closed polyhedra and open screens.

mod chart;
mod degree;
mod fixtures;
mod io;

pub use chart::AffineChart;
pub use degree::{derive_edge_degrees, DegreeMap};
pub use fixtures::{builtin_fixture, refine_levels, refine_uniform, Fixture};
pub use io::{load_degrees, load_mesh, parse_degrees, parse_mesh, write_mesh};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{cross, dist, norm, sub};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Closed,
    Screen,
}

impl SurfaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceKind::Closed => "closed",
            SurfaceKind::Screen => "screen",
        }
    }
}

impl std::str::FromStr for SurfaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed" => Ok(SurfaceKind::Closed),
            "screen" => Ok(SurfaceKind::Screen),
            other => Err(Error::Config(format!("unknown surface kind `{other}`"))),
        }
    }
}

/// One triangle incident to an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeIncidence {
    pub cell: usize,
    /// Local edge index in the cell; local edge `i` joins local vertices
    /// `i + 1` and `i + 2` (mod 3), i.e. it is opposite vertex `i`.
    pub local: usize,
    /// `+1` when the cell traverses the edge from its lower to its higher
    /// global vertex index.
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Global endpoints, lower index first.
    pub vertices: [usize; 2],
    pub cells: Vec<EdgeIncidence>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

/// Triangulated orientable surface with edge topology.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    kind: SurfaceKind,
}

/// Local edge `i` of a triangle as a pair of local vertex indices.
#[inline]
pub fn local_edge_vertices(i: usize) -> [usize; 2] {
    [(i + 1) % 3, (i + 2) % 3]
}

impl SurfaceMesh {
    /// Validate and index a triangulation.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>, kind: SurfaceKind) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        check_duplicate_vertices(&vertices)?;

        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::OutOfRange(format!("triangle {t} references vertex {v}")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateCell(t));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area2 = norm(cross(sub(b, a), sub(c, a)));
            let h = dist(a, b).max(dist(b, c)).max(dist(c, a));
            if !(area2 > 1e-12 * h * h) {
                return Err(Error::DegenerateCell(t));
            }
        }

        let mut map: BTreeMap<[usize; 2], Vec<EdgeIncidence>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for local in 0..3 {
                let [i, j] = local_edge_vertices(local);
                let (a, b) = (tri[i], tri[j]);
                let key = if a < b { [a, b] } else { [b, a] };
                let sign = if a < b { 1 } else { -1 };
                map.entry(key).or_default().push(EdgeIncidence { cell: t, local, sign });
            }
        }

        let mut edges = Vec::with_capacity(map.len());
        let mut cell_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (key, cells) in map {
            match cells.len() {
                1 => {}
                2 => {
                    if cells[0].sign == cells[1].sign {
                        if cells[0].cell == cells[1].cell {
                            return Err(Error::InvalidMesh(format!(
                                "triangle {} repeats edge ({}, {})",
                                cells[0].cell, key[0], key[1]
                            )));
                        }
                        return Err(Error::NonOrientable(key[0], key[1]));
                    }
                }
                _ => return Err(Error::NonManifold(key[0], key[1])),
            }
            let e = edges.len();
            for inc in &cells {
                cell_edges[inc.cell][inc.local] = e;
            }
            edges.push(Edge { vertices: key, cells });
        }
        let boundary: Vec<bool> = edges.iter().map(Edge::is_boundary).collect();

        check_hanging_vertices(&vertices, &edges, &boundary)?;

        let has_boundary = boundary.iter().any(|&b| b);
        match (kind, has_boundary) {
            (SurfaceKind::Closed, true) => {
                return Err(Error::KindMismatch(format!(
                    "closed surface requested but {} boundary edges present",
                    boundary.iter().filter(|&&b| b).count()
                )))
            }
            (SurfaceKind::Screen, false) => {
                return Err(Error::KindMismatch("screen requested but the surface has no boundary".into()))
            }
            _ => {}
        }

        Ok(Self { vertices, triangles, edges, cell_edges, boundary, kind })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edge ids of a cell, by local edge index.
    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary[e]
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Vertices on `∂Γ`.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            if self.boundary[e] {
                out[edge.vertices[0]] = true;
                out[edge.vertices[1]] = true;
            }
        }
        out
    }

    /// Orientation sign of `cell` on its local edge `local`.
    pub fn edge_sign(&self, cell: usize, local: usize) -> i8 {
        let tri = self.triangles[cell];
        let [i, j] = local_edge_vertices(local);
        if tri[i] < tri[j] {
            1
        } else {
            -1
        }
    }

    pub fn chart(&self, cell: usize) -> Result<AffineChart> {
        let tri = self.triangles.get(cell).ok_or_else(|| Error::OutOfRange(format!("cell {cell}")))?;
        AffineChart::from_vertices(tri.map(|v| self.vertices[v])).ok_or(Error::DegenerateCell(cell))
    }

    /// Charts of all cells (validated at construction, so infallible).
    pub fn charts(&self) -> Vec<AffineChart> {
        (0..self.num_cells()).map(|c| self.chart(c).expect("validated mesh")).collect()
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; 3]; 3] {
        self.triangles[cell].map(|v| self.vertices[v])
    }

    /// Longest edge of each cell.
    pub fn cell_diameters(&self) -> Vec<f64> {
        (0..self.num_cells())
            .map(|c| {
                let [a, b, cc] = self.cell_vertices(c);
                dist(a, b).max(dist(b, cc)).max(dist(cc, a))
            })
            .collect()
    }

    pub fn h_max(&self) -> f64 {
        self.cell_diameters().into_iter().fold(0.0, f64::max)
    }

    pub fn shape_regularity_report(&self) -> ShapeReport {
        let mut rho = Vec::with_capacity(self.num_cells());
        let mut h = Vec::with_capacity(self.num_cells());
        for c in 0..self.num_cells() {
            let [a, b, cc] = self.cell_vertices(c);
            let (la, lb, lc) = (dist(b, cc), dist(cc, a), dist(a, b));
            let area = 0.5 * norm(cross(sub(b, a), sub(cc, a)));
            let circumradius = la * lb * lc / (4.0 * area);
            let inradius = area / (0.5 * (la + lb + lc));
            rho.push(circumradius / inradius);
            h.push(la.max(lb).max(lc));
        }
        let rho_max = rho.iter().copied().fold(0.0, f64::max);
        let h_max = h.iter().copied().fold(0.0, f64::max);
        ShapeReport { rho, h, rho_max, h_max }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| 0.5 * self.chart(c).map(|ch| ch.jacobian).unwrap_or(0.0)).sum()
    }

    /// Euler characteristic `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    /// Orientation consistency by breadth-first traversal of the dual graph:
    /// every interior edge must be traversed in opposite directions by its
    /// two cells. Always true for meshes that passed construction.
    pub fn check_orientation(&self) -> bool {
        let mut seen = vec![false; self.num_cells()];
        let mut stack = Vec::new();
        for start in 0..self.num_cells() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            while let Some(c) = stack.pop() {
                for e in self.cell_edges(c) {
                    let edge = &self.edges[e];
                    if edge.cells.len() == 2 {
                        if edge.cells[0].sign + edge.cells[1].sign != 0 {
                            return false;
                        }
                        for inc in &edge.cells {
                            if !seen[inc.cell] {
                                seen[inc.cell] = true;
                                stack.push(inc.cell);
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Per-cell shape diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    /// Circumradius over inradius.
    pub rho: Vec<f64>,
    /// Longest edge.
    pub h: Vec<f64>,
    pub rho_max: f64,
    pub h_max: f64,
}

fn check_duplicate_vertices(vertices: &[[f64; 3]]) -> Result<()> {
    let scale = vertices.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a][0].total_cmp(&vertices[b][0]));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if vertices[b][0] - vertices[a][0] > tol {
                break;
            }
            if dist(vertices[a], vertices[b]) <= tol {
                return Err(Error::InvalidMesh(format!("duplicated vertices {a} and {b}")));
            }
        }
    }
    Ok(())
}

/// A hanging vertex of a non-conforming triangulation sits in the interior
/// of an edge that only one triangle sees.
fn check_hanging_vertices(vertices: &[[f64; 3]], edges: &[Edge], boundary: &[bool]) -> Result<()> {
    let mut on_boundary = vec![false; vertices.len()];
    for (e, edge) in edges.iter().enumerate() {
        if boundary[e] {
            on_boundary[edge.vertices[0]] = true;
            on_boundary[edge.vertices[1]] = true;
        }
    }
    let candidates: Vec<usize> = (0..vertices.len()).filter(|&v| on_boundary[v]).collect();
    for (e, edge) in edges.iter().enumerate() {
        if !boundary[e] {
            continue;
        }
        let [a, b] = edge.vertices;
        let (pa, pb) = (vertices[a], vertices[b]);
        let d = sub(pb, pa);
        let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        for &v in &candidates {
            if v == a || v == b {
                continue;
            }
            let w = sub(vertices[v], pa);
            let t = (w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) / len2;
            if t <= 1e-9 || t >= 1.0 - 1e-9 {
                continue;
            }
            let off = norm(cross(w, d)) / len2.sqrt();
            if off <= 1e-9 * len2.sqrt() {
                return Err(Error::NonConforming { vertex: v, a, b });
            }
        }
    }
    Ok(())
}
