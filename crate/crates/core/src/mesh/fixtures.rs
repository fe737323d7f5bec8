use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{SurfaceKind, SurfaceMesh};
use crate::geometry::{add, scale};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    Cube,
    SquareScreen,
    LScreen,
}

impl Fixture {
    pub fn kind(self) -> SurfaceKind {
        match self {
            Fixture::Cube => SurfaceKind::Closed,
            Fixture::SquareScreen | Fixture::LScreen => SurfaceKind::Screen,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fixture::Cube => "cube",
            Fixture::SquareScreen => "square-screen",
            Fixture::LScreen => "L-screen",
        }
    }
}

impl std::str::FromStr for Fixture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Fixture::Cube),
            "square-screen" => Ok(Fixture::SquareScreen),
            "L-screen" | "l-screen" => Ok(Fixture::LScreen),
            other => Err(Error::Config(format!("unknown fixture `{other}`"))),
        }
    }
}

/// Built-in meshes: the unit cube `[0,1]³` with outward orientation (12
/// triangles), the unit square in the `z = 0` plane (2 triangles) and an L
/// made of three unit squares (6 triangles).
pub fn builtin_fixture(id: Fixture) -> SurfaceMesh {
    let (v, t): (Vec<[f64; 3]>, Vec<[usize; 3]>) = match id {
        Fixture::Cube => (
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 1.0],
            ],
            vec![
                [0, 2, 1],
                [0, 3, 2],
                [4, 5, 6],
                [4, 6, 7],
                [0, 1, 5],
                [0, 5, 4],
                [1, 2, 6],
                [1, 6, 5],
                [2, 3, 7],
                [2, 7, 6],
                [3, 0, 4],
                [3, 4, 7],
            ],
        ),
        Fixture::SquareScreen => {
            (vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2], [0, 2, 3]])
        }
        Fixture::LScreen => (
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
                [2.0, 1.0, 0.0],
                [0.0, 2.0, 0.0],
                [1.0, 2.0, 0.0],
            ],
            vec![[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6]],
        ),
    };
    SurfaceMesh::new(v, t, id.kind()).expect("built-in fixture is valid")
}

/// Split every triangle into four through its edge midpoints. Midpoint
/// vertices are appended in edge order, so refinement is deterministic.
pub fn refine_uniform(mesh: &SurfaceMesh) -> SurfaceMesh {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    let mut mid: HashMap<[usize; 2], usize> = HashMap::with_capacity(mesh.num_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        vertices.push(scale(add(vertices[a], vertices[b]), 0.5));
        mid.insert([a, b], nv + e);
    }
    let m = |a: usize, b: usize| mid[&if a < b { [a, b] } else { [b, a] }];
    let mut triangles = Vec::with_capacity(4 * mesh.num_cells());
    for &[a, b, c] in mesh.triangles() {
        let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    SurfaceMesh::new(vertices, triangles, mesh.kind()).expect("refinement preserves validity")
}

/// Apply `refine_uniform` `levels` times.
pub fn refine_levels(mesh: &SurfaceMesh, levels: usize) -> SurfaceMesh {
    (0..levels).fold(mesh.clone(), |m, _| refine_uniform(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cross, dot, sub};

    #[test]
    fn cube_is_outward_oriented() {
        let m = builtin_fixture(Fixture::Cube);
        for c in 0..m.num_cells() {
            let [a, b, cc] = m.cell_vertices(c);
            let n = cross(sub(b, a), sub(cc, a));
            let centroid = scale(add(add(a, b), cc), 1.0 / 3.0);
            assert!(dot(n, sub(centroid, [0.5, 0.5, 0.5])) > 0.0, "cell {c}");
        }
    }

    #[test]
    fn square_screen_topology() {
        let m = builtin_fixture(Fixture::SquareScreen);
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_boundary_edges(), 4);
        assert_eq!(m.num_edges() - m.num_boundary_edges(), 1);
    }

    #[test]
    fn refinement_counts() {
        let cube = builtin_fixture(Fixture::Cube);
        let r = refine_uniform(&cube);
        assert_eq!(r.num_cells(), 48);
        assert_eq!(r.num_edges(), 72);
        assert_eq!(r.euler_characteristic(), 2);
        assert_eq!(r.kind(), SurfaceKind::Closed);
        assert!((r.h_max() - 0.5 * cube.h_max()).abs() < 1e-15);
        let rho0 = cube.shape_regularity_report().rho_max;
        assert!((r.shape_regularity_report().rho_max - rho0).abs() < 1e-12);

        let sq = builtin_fixture(Fixture::SquareScreen);
        let rs = refine_uniform(&sq);
        assert_eq!(rs.num_boundary_edges(), 2 * sq.num_boundary_edges());
        assert_eq!(rs.kind(), SurfaceKind::Screen);
    }

    #[test]
    fn unknown_fixture() {
        assert!("sphere".parse::<Fixture>().is_err());
        assert_eq!("L-screen".parse::<Fixture>().unwrap(), Fixture::LScreen);
    }
}
