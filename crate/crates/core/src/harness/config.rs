use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::efie_system::Excitation;
use crate::geometry::{sub, Vec3};
use crate::mesh::{builtin_fixture, derive_edge_degrees, load_degrees, load_mesh, Fixture};
use crate::ref_elements::MAX_EXACT_DEGREE;
use crate::{DegreeMap, Error, Result, SurfaceKind, SurfaceMesh};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshSource {
    Fixture(Fixture),
    Path(PathBuf),
}

/// How cell degrees are assigned on every member of a refinement family.
/// File and graded degrees are given on the base mesh and inherited by the
/// children of each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum DegreePolicy {
    /// One member per degree in `min..=max`.
    Uniform {
        min: usize,
        max: usize,
    },
    File {
        path: PathBuf,
    },
    Graded {
        edge: usize,
        p_min: usize,
        p_max: usize,
    },
}

impl DegreePolicy {
    pub fn uniform(p: usize) -> Self {
        DegreePolicy::Uniform { min: p, max: p }
    }

    /// `p`, `a..b` (exclusive) or `a..=b`.
    pub fn parse_range(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad degree range `{s}`"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let (min, max) = if let Some((a, b)) = s.split_once("..=") {
            (num(a)?, num(b)?)
        } else if let Some((a, b)) = s.split_once("..") {
            let b = num(b)?;
            (num(a)?, b.checked_sub(1).ok_or_else(bad)?)
        } else {
            let p = num(s)?;
            (p, p)
        };
        if min > max {
            return Err(bad());
        }
        Ok(DegreePolicy::Uniform { min, max })
    }

    pub fn max_degree(&self) -> usize {
        match *self {
            DegreePolicy::Uniform { max, .. } => max,
            DegreePolicy::Graded { p_max, .. } => p_max,
            // resolved against the mesh when the maps are built
            DegreePolicy::File { .. } => 0,
        }
    }
}

/// Every tolerance used by the suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Exact-arithmetic residuals.
    pub exact: f64,
    /// Relative commuting-diagram and idempotence defects.
    pub commuting: f64,
    /// Relative pullback defect of the local interpolant.
    pub pullback: f64,
    /// Boundary flux a compliant field loses under interpolation.
    pub boundary_flux: f64,
    /// Bound on max/min of the normalized interpolation error column.
    pub rate_spread: f64,
    /// Minimal empirical L² order of the h-family.
    pub rate_order: f64,
    pub quasi_ratio: f64,
    pub orthogonality: f64,
    pub residual: f64,
    pub symmetry: f64,
    pub two_path: f64,
    pub extinction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            exact: 0.0,
            commuting: 1e-11,
            pullback: 1e-12,
            boundary_flux: 1e-14,
            rate_spread: 2.0,
            rate_order: 0.9,
            quasi_ratio: 10.0,
            orthogonality: 1e-9,
            residual: 1e-10,
            symmetry: 1e-8,
            two_path: 1e-12,
            extinction: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub mesh: MeshSource,
    pub kind: SurfaceKind,
    pub degrees: DegreePolicy,
    /// Number of family members; member `l` is refined `l` times.
    pub levels: usize,
    pub k: f64,
    pub quad_order: usize,
    /// Defaults to an oblique plane wave, or for the extinction suite a
    /// dipole near the centre of the bounding box.
    pub excitation: Option<Excitation>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Highest degree of the exact reference-element checks and of the
    /// p-family in the rate study.
    pub p_max: usize,
    /// Seeded fields per member in the interpolation suite.
    pub samples: usize,
    /// Random charts in the pullback check.
    pub charts: usize,
    pub dump_matrix: bool,
    pub memory_limit: usize,
    pub thresholds: Thresholds,
}

impl StudyConfig {
    pub fn fixture(f: Fixture) -> Self {
        Self {
            mesh: MeshSource::Fixture(f),
            kind: f.kind(),
            degrees: DegreePolicy::Uniform { min: 0, max: 1 },
            levels: 1,
            k: 1.0,
            quad_order: 6,
            excitation: None,
            out_dir: None,
            seed: 7,
            p_max: 4,
            samples: 10,
            charts: 20,
            dump_matrix: false,
            memory_limit: 3 << 30,
            thresholds: Thresholds::default(),
        }
    }

    pub fn from_path(path: impl Into<PathBuf>, kind: SurfaceKind) -> Self {
        Self { mesh: MeshSource::Path(path.into()), kind, ..Self::fixture(Fixture::Cube) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::Config("at least one refinement level is required".into()));
        }
        match &self.mesh {
            MeshSource::Fixture(f) if f.kind() != self.kind => {
                return Err(Error::KindMismatch(format!(
                    "fixture {} is {}, not {}",
                    f.as_str(),
                    f.kind().as_str(),
                    self.kind.as_str()
                )));
            }
            MeshSource::Path(p) if !p.is_file() => {
                return Err(Error::Config(format!("mesh file {} does not exist", p.display())));
            }
            _ => {}
        }
        match &self.degrees {
            DegreePolicy::File { path } if !path.is_file() => {
                return Err(Error::Config(format!("degree file {} does not exist", path.display())));
            }
            DegreePolicy::Graded { p_min, p_max, .. } if p_min > p_max => {
                return Err(Error::Config(format!("graded degrees {p_min} > {p_max}")));
            }
            _ => {}
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {}", self.k)));
        }
        if self.quad_order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        if self.p_max > MAX_EXACT_DEGREE {
            return Err(Error::Config(format!(
                "p-max {} above the exact-arithmetic cap {MAX_EXACT_DEGREE}",
                self.p_max
            )));
        }
        if let Some(e) = &self.excitation {
            e.validate(None)?;
            if (e.k() - self.k).abs() > 1e-14 * self.k {
                return Err(Error::Config(format!("excitation wavenumber {} differs from k = {}", e.k(), self.k)));
            }
        }
        Ok(())
    }

    pub fn mesh_label(&self) -> String {
        match &self.mesh {
            MeshSource::Fixture(f) => f.as_str().to_string(),
            MeshSource::Path(p) => p.display().to_string(),
        }
    }

    pub fn base_mesh(&self) -> Result<SurfaceMesh> {
        match &self.mesh {
            MeshSource::Fixture(f) => Ok(builtin_fixture(*f)),
            MeshSource::Path(p) => load_mesh(p, self.kind),
        }
    }

    /// Degree maps of the member refined `level` times from `base`.
    pub fn degree_maps(&self, base: &SurfaceMesh, level: usize, mesh: &SurfaceMesh) -> Result<Vec<DegreeMap>> {
        let inherit = |cells: Vec<usize>| {
            let r = 4usize.pow(level as u32);
            derive_edge_degrees(mesh, &(0..mesh.num_cells()).map(|c| cells[c / r]).collect::<Vec<_>>())
        };
        match &self.degrees {
            DegreePolicy::Uniform { min, max } => Ok((*min..=*max).map(|p| DegreeMap::uniform(mesh, p)).collect()),
            DegreePolicy::File { path } => Ok(vec![inherit(load_degrees(path, base.num_cells())?)?]),
            DegreePolicy::Graded { edge, p_min, p_max } => {
                let d = DegreeMap::graded_toward_edge(base, *edge, *p_min, *p_max)?;
                Ok(vec![inherit(d.cell_degree)?])
            }
        }
    }

    pub fn plane_wave(&self) -> Excitation {
        let s = 1.0 / 3f64.sqrt();
        let t = 1.0 / 2f64.sqrt();
        Excitation::plane_wave([s, s, s], [t, -t, 0.0], self.k)
    }

    pub fn excitation_or_plane_wave(&self) -> Excitation {
        self.excitation.unwrap_or_else(|| self.plane_wave())
    }

    /// Dipole slightly off the centre of the bounding box.
    pub fn interior_dipole(&self, mesh: &SurfaceMesh) -> Excitation {
        if let Some(e @ Excitation::ElectricDipole { .. }) = self.excitation {
            return e;
        }
        let (c, ext) = bounding_box(mesh);
        Excitation::dipole([c[0] - 0.05 * ext[0], c[1] + 0.05 * ext[1], c[2]], [0.3, -0.5, 0.8], self.k)
    }
}

/// Centre and extents of the bounding box.
pub fn bounding_box(mesh: &SurfaceMesh) -> (Vec3, Vec3) {
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for x in mesh.vertices() {
        for i in 0..3 {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    ([0, 1, 2].map(|i| 0.5 * (lo[i] + hi[i])), sub(hi, lo))
}

/// Six points `c ± 1.5 L e_i` around the bounding box, `L` its largest extent.
pub fn exterior_points(mesh: &SurfaceMesh) -> Vec<Vec3> {
    let (c, ext) = bounding_box(mesh);
    let l = 1.5 * ext.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut out = Vec::new();
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut x = c;
            x[i] += s * l;
            out.push(x);
        }
    }
    out
}
