use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem_kernels::KernelSpec;
use crate::geometry::{dot, norm, point_triangle_distance, sub, Vec3};
use crate::global_space::HpDivSpace;
use crate::mesh::SurfaceMesh;
use crate::quadrature::TriangleRule;
use crate::{Error, Result};

pub type CVec3 = [Complex64; 3];

/// Incident field driving the EFIE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Excitation {
    /// `E(x) = a e exp(i k d·x)`.
    PlaneWave { direction: Vec3, polarization: Vec3, k: f64, amplitude: f64 },
    /// `E = (k² + ∇∇·)(G_k(·, x₀) m)`.
    ElectricDipole { location: Vec3, moment: Vec3, k: f64 },
}

impl Excitation {
    pub fn plane_wave(direction: Vec3, polarization: Vec3, k: f64) -> Self {
        Excitation::PlaneWave { direction, polarization, k, amplitude: 1.0 }
    }

    pub fn dipole(location: Vec3, moment: Vec3, k: f64) -> Self {
        Excitation::ElectricDipole { location, moment, k }
    }

    pub fn k(&self) -> f64 {
        match *self {
            Excitation::PlaneWave { k, .. } | Excitation::ElectricDipole { k, .. } => k,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            Excitation::PlaneWave { direction, polarization, k, amplitude } => {
                Excitation::PlaneWave { direction, polarization, k, amplitude: amplitude * s }
            }
            Excitation::ElectricDipole { location, moment, k } => {
                Excitation::ElectricDipole { location, moment: moment.map(|c| c * s), k }
            }
        }
    }

    /// Check the invariants. With a mesh, a dipole closer to the surface
    /// than a tenth of the nearest cell diameter is rejected, and one
    /// closer than a full diameter is accepted with a warning.
    pub fn validate(&self, mesh: Option<&SurfaceMesh>) -> Result<()> {
        if !(self.k().is_finite() && self.k() > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {}", self.k())));
        }
        match *self {
            Excitation::PlaneWave { direction, polarization, .. } => {
                if (norm(direction) - 1.0).abs() > 1e-12 || (norm(polarization) - 1.0).abs() > 1e-12 {
                    return Err(Error::Config("plane wave direction and polarization must be unit vectors".into()));
                }
                if dot(direction, polarization).abs() > 1e-12 {
                    return Err(Error::Config("plane wave polarization must be orthogonal to the direction".into()));
                }
            }
            Excitation::ElectricDipole { location, .. } => {
                if let Some(mesh) = mesh {
                    let mut near = false;
                    for (c, h) in mesh.cell_diameters().into_iter().enumerate() {
                        let d = point_triangle_distance(location, mesh.cell_vertices(c));
                        if d < 0.1 * h {
                            return Err(Error::TooClose(location));
                        }
                        near |= d < h;
                    }
                    if near {
                        log::warn!("dipole at {location:?} is within one cell diameter of the surface");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn field(&self, x: Vec3) -> CVec3 {
        match *self {
            Excitation::PlaneWave { direction, polarization, k, amplitude } => {
                let (s, c) = (k * dot(direction, x)).sin_cos();
                let ph = Complex64::new(c, s) * amplitude;
                polarization.map(|e| ph * e)
            }
            Excitation::ElectricDipole { location, moment, k } => dipole_field(location, moment, k, x),
        }
    }
}

/// Field of an electric dipole, `k² G m + ∇∇G m`.
pub fn dipole_field(location: Vec3, moment: Vec3, k: f64, x: Vec3) -> CVec3 {
    let r = sub(x, location);
    let rr = norm(r);
    let rh = r.map(|c| c / rr);
    let g = KernelSpec::helmholtz(k).at_distance(rr);
    let ik = Complex64::new(0.0, k);
    let radial = g * (3.0 / (rr * rr) - ik * 3.0 / rr - k * k);
    let iso = g * (k * k) + g * (ik / rr - 1.0 / (rr * rr));
    let rm = dot(rh, moment);
    [0, 1, 2].map(|i| radial * (rh[i] * rm) + iso * moment[i])
}

/// Load vector `b_n = −∫_Γ E_inc·v_n dS` with `points` Gauss points per
/// direction on each cell.
pub fn rhs_excitation(space: &HpDivSpace, exc: &Excitation, points: usize) -> Result<Vec<Complex64>> {
    exc.validate(Some(space.mesh()))?;
    let n = points.max(space.degrees().max_degree() + 2);
    let rules: Vec<Vec<([f64; 2], f64)>> = (0..=MAX_SPLITS).map(|s| composite_rule(n, s)).collect();
    let diam = space.mesh().cell_diameters();
    let local: Vec<Vec<Complex64>> = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let chart = space.chart(cell);
            // a nearby source is resolved by splitting the cell
            let splits = match *exc {
                Excitation::ElectricDipole { location, .. } => {
                    let d = point_triangle_distance(location, space.mesh().cell_vertices(cell));
                    ((2.0 * diam[cell] / d).log2().ceil().max(0.0) as usize).min(MAX_SPLITS)
                }
                Excitation::PlaneWave { .. } => 0,
            };
            let mut acc = vec![Complex64::new(0.0, 0.0); space.cell(cell).dofs.len()];
            for &(p, w) in &rules[splits] {
                let e = exc.field(chart.map(p));
                let (vals, _) = space.cell_values(cell, p);
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a -= (e[0] * v[0] + e[1] * v[1] + e[2] * v[2]) * (w * chart.jacobian);
                }
            }
            acc
        })
        .collect();
    let mut b = vec![Complex64::new(0.0, 0.0); space.dim()];
    for (cell, acc) in local.into_iter().enumerate() {
        for (&g, a) in space.cell(cell).dofs.iter().zip(acc) {
            b[g] += a;
        }
    }
    if b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    Ok(b)
}

const MAX_SPLITS: usize = 5;

/// Gauss rule on the `4^splits` congruent pieces of the reference triangle.
fn composite_rule(n: usize, splits: usize) -> Vec<([f64; 2], f64)> {
    let base = TriangleRule::new(n);
    let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
    for _ in 0..splits {
        let m = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        tris = tris
            .into_iter()
            .flat_map(|[a, b, c]: [[f64; 2]; 3]| {
                let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]
            })
            .collect();
    }
    let scale = 0.25f64.powi(splits as i32);
    let mut out = Vec::with_capacity(tris.len() * base.len());
    for [a, b, c] in tris {
        for (p, w) in base.iter() {
            let x = [0, 1].map(|i| a[i] + p[0] * (b[i] - a[i]) + p[1] * (c[i] - a[i]));
            out.push((x, w * scale));
        }
    }
    out
}
