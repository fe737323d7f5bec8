//! Line-oriented text format:
//!
//! ```text
//! hpbem-mesh 1
//! closed|screen
//! NV NT
//! x y z        (NV lines)
//! i j k        (NT lines, 0-based, counterclockwise w.r.t. the normal)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{SurfaceKind, SurfaceMesh};
use crate::{Error, Result};

const MAGIC: &str = "hpbem-mesh 1";

pub fn load_mesh(path: impl AsRef<Path>, kind: SurfaceKind) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, kind)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parse the text format; `kind` must agree with the header and with the
/// topology of the triangulation.
pub fn parse_mesh(text: &str, kind: SurfaceKind) -> Result<SurfaceMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());

    let (n, magic) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if magic != MAGIC {
        return Err(perr(n, format!("expected `{MAGIC}`, found `{magic}`")));
    }
    let (n, kind_line) = lines.next().ok_or_else(|| perr(2, "missing surface kind"))?;
    let file_kind: SurfaceKind = kind_line.parse().map_err(|_| perr(n, format!("bad kind `{kind_line}`")))?;
    if file_kind != kind {
        return Err(Error::KindMismatch(format!(
            "file declares {} but {} was requested",
            file_kind.as_str(),
            kind.as_str()
        )));
    }
    let (n, counts) = lines.next().ok_or_else(|| perr(3, "missing counts"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(n, format!("bad count `{t}`"))))
        .collect::<Result<_>>()?;
    let [nv, nt] = counts[..] else {
        return Err(perr(n, "expected `NV NT`"));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in vertices"))?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(n, format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        let [x, y, z] = v[..] else {
            return Err(perr(n, "expected three coordinates"));
        };
        vertices.push([x, y, z]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in triangles"))?;
        let t: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(n, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        let [i, j, k] = t[..] else {
            return Err(perr(n, "expected three vertex indices"));
        };
        triangles.push([i, j, k]);
    }
    if let Some((n, l)) = lines.next() {
        return Err(perr(n, format!("trailing content `{l}`")));
    }
    SurfaceMesh::new(vertices, triangles, kind)
}

pub fn write_mesh(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "{}", mesh.kind().as_str());
    let _ = writeln!(s, "{} {}", mesh.num_vertices(), mesh.num_cells());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Degree file: one integer per triangle.
pub fn parse_degrees(text: &str, num_cells: usize) -> Result<Vec<usize>> {
    let degrees: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|_| perr(i + 1, format!("bad degree `{}`", l.trim()))))
        .collect::<Result<_>>()?;
    if degrees.len() != num_cells {
        return Err(Error::Dimension { expected: num_cells, got: degrees.len() });
    }
    Ok(degrees)
}

pub fn load_degrees(path: impl AsRef<Path>, num_cells: usize) -> Result<Vec<usize>> {
    parse_degrees(&std::fs::read_to_string(path)?, num_cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builtin_fixture, Fixture};

    #[test]
    fn parse_minimal_screen() {
        let text = "hpbem-mesh 1\nscreen\n3 1\n0 0 0\n1 0 0\n0 1 0\n0 1 2\n";
        let m = parse_mesh(text, SurfaceKind::Screen).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.num_boundary_edges(), 3);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let cube = builtin_fixture(Fixture::Cube);
        let text = write_mesh(&cube);
        let back = parse_mesh(&text, SurfaceKind::Closed).unwrap();
        assert_eq!(back.vertices(), cube.vertices());
        assert_eq!(back.triangles(), cube.triangles());
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_mesh("hpbem-mesh 2\n", SurfaceKind::Screen), Err(Error::Parse { line: 1, .. })));
        let bad = "hpbem-mesh 1\nscreen\n3 1\n0 0 0\n1 0 x\n0 1 0\n0 1 2\n";
        assert!(matches!(parse_mesh(bad, SurfaceKind::Screen), Err(Error::Parse { line: 5, .. })));
        let short = "hpbem-mesh 1\nscreen\n3 1\n0 0 0\n1 0 0\n";
        assert!(matches!(parse_mesh(short, SurfaceKind::Screen), Err(Error::Parse { .. })));
        let kind = "hpbem-mesh 1\nclosed\n3 1\n0 0 0\n1 0 0\n0 1 0\n0 1 2\n";
        assert!(matches!(parse_mesh(kind, SurfaceKind::Screen), Err(Error::KindMismatch(_))));
    }

    #[test]
    fn degree_file() {
        assert_eq!(parse_degrees("1\n2\n\n3\n", 3).unwrap(), vec![1, 2, 3]);
        assert!(parse_degrees("1\n2\n", 3).is_err());
        assert!(parse_degrees("1\n-2\n3", 3).is_err());
    }
}
