use serde::Serialize;

use super::SurfaceMesh;
use crate::{Error, Result};

/// Per-cell polynomial degrees and the edge degrees derived from them by the
/// maximum rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeMap {
    pub cell_degree: Vec<usize>,
    pub edge_degree: Vec<usize>,
}

/// `p_E = max { p_K : E ⊂ ∂K }`.
pub fn derive_edge_degrees(mesh: &SurfaceMesh, cell_degrees: &[usize]) -> Result<DegreeMap> {
    if cell_degrees.len() != mesh.num_cells() {
        return Err(Error::Dimension { expected: mesh.num_cells(), got: cell_degrees.len() });
    }
    let edge_degree =
        mesh.edges().iter().map(|e| e.cells.iter().map(|inc| cell_degrees[inc.cell]).max().unwrap_or(0)).collect();
    Ok(DegreeMap { cell_degree: cell_degrees.to_vec(), edge_degree })
}

impl DegreeMap {
    pub fn uniform(mesh: &SurfaceMesh, p: usize) -> Self {
        derive_edge_degrees(mesh, &vec![p; mesh.num_cells()]).expect("length matches")
    }

    /// Degrees growing linearly from `p_min` far away to `p_max` at the
    /// cells touching `edge`, measured in graph distance over shared edges.
    pub fn graded_toward_edge(mesh: &SurfaceMesh, edge: usize, p_min: usize, p_max: usize) -> Result<Self> {
        if edge >= mesh.num_edges() {
            return Err(Error::OutOfRange(format!("edge {edge}")));
        }
        let mut depth = vec![usize::MAX; mesh.num_cells()];
        let mut queue = std::collections::VecDeque::new();
        for inc in &mesh.edges()[edge].cells {
            depth[inc.cell] = 0;
            queue.push_back(inc.cell);
        }
        while let Some(c) = queue.pop_front() {
            for e in mesh.cell_edges(c) {
                for inc in &mesh.edges()[e].cells {
                    if depth[inc.cell] == usize::MAX {
                        depth[inc.cell] = depth[c] + 1;
                        queue.push_back(inc.cell);
                    }
                }
            }
        }
        let cells: Vec<usize> =
            depth.iter().map(|&d| if d == usize::MAX { p_min } else { p_max.saturating_sub(d).max(p_min) }).collect();
        derive_edge_degrees(mesh, &cells)
    }

    pub fn max_degree(&self) -> usize {
        self.edge_degree.iter().chain(&self.cell_degree).copied().max().unwrap_or(0)
    }

    pub fn min_cell_degree(&self) -> usize {
        self.cell_degree.iter().copied().min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builtin_fixture, Fixture};

    #[test]
    fn max_rule_on_shared_edge() {
        let m = builtin_fixture(Fixture::SquareScreen);
        let d = derive_edge_degrees(&m, &[2, 4]).unwrap();
        let shared = (0..m.num_edges()).find(|&e| !m.is_boundary_edge(e)).unwrap();
        assert_eq!(d.edge_degree[shared], 4);
        // boundary edge of a screen takes its single neighbour's degree
        for e in 0..m.num_edges() {
            if m.is_boundary_edge(e) {
                let c = m.edges()[e].cells[0].cell;
                assert_eq!(d.edge_degree[e], [2, 4][c]);
            }
        }
    }

    #[test]
    fn uniform_distribution() {
        let m = builtin_fixture(Fixture::Cube);
        let d = DegreeMap::uniform(&m, 3);
        assert!(d.edge_degree.iter().all(|&p| p == 3));
    }

    #[test]
    fn single_cell_boundary_edge() {
        let m = crate::mesh::SurfaceMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
            crate::mesh::SurfaceKind::Screen,
        )
        .unwrap();
        assert_eq!(derive_edge_degrees(&m, &[3]).unwrap().edge_degree, vec![3, 3, 3]);
    }

    #[test]
    fn graded_policy_peaks_at_marked_edge() {
        let m = crate::mesh::refine_uniform(&builtin_fixture(Fixture::SquareScreen));
        let d = DegreeMap::graded_toward_edge(&m, 0, 1, 3).unwrap();
        for inc in &m.edges()[0].cells {
            assert_eq!(d.cell_degree[inc.cell], 3);
        }
        assert!(d.cell_degree.iter().any(|&p| p < 3));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let m = builtin_fixture(Fixture::Cube);
        assert!(derive_edge_degrees(&m, &[1, 2]).is_err());
    }
}
