use num_complex::Complex64;
use rayon::prelude::*;

use super::CVec3;
use crate::bem_kernels::KernelSpec;
use crate::geometry::{dist, point_triangle_distance, Vec3};
use crate::global_space::HpDivSpace;
use crate::quadrature::TriangleRule;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    /// Gauss points per direction for cells far from the evaluation point.
    pub points: usize,
    /// Points used when the evaluation point is within `2` cell diameters.
    pub near_points: usize,
    /// Minimum distance to the surface as a multiple of `h_max`.
    pub min_distance: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { points: 8, near_points: 20, min_distance: 0.1 }
    }
}

struct Density {
    y: Vec<Vec3>,
    w: Vec<f64>,
    u: Vec<CVec3>,
    div: Vec<Complex64>,
}

fn sample(space: &HpDivSpace, coeffs: &[Complex64], cell: usize, rule: &TriangleRule) -> Result<Density> {
    let chart = space.chart(cell);
    let mut d = Density { y: Vec::new(), w: Vec::new(), u: Vec::new(), div: Vec::new() };
    for (p, w) in rule.iter() {
        let (u, div) = space.evaluate_field_complex(coeffs, cell, p)?;
        d.y.push(chart.map(p));
        d.w.push(w * chart.jacobian);
        d.u.push(u);
        d.div.push(div);
    }
    Ok(d)
}

fn accumulate(kernel: &KernelSpec, x: Vec3, d: &Density, e: &mut CVec3) {
    let k2 = kernel.k * kernel.k;
    for q in 0..d.y.len() {
        let g = kernel.eval(x, d.y[q]) * d.w[q];
        let grad = kernel.gradient(x, d.y[q]);
        for i in 0..3 {
            e[i] -= g * d.u[q][i] * k2 + grad[i] * (d.div[q] * d.w[q]);
        }
    }
}

/// `E_s(x) = −(k² SL[u] + ∇ SL[div u])(x)` for the surface current with
/// coefficients `coeffs`, at points off the surface.
pub fn scattered_field(
    space: &HpDivSpace,
    coeffs: &[Complex64],
    points: &[Vec3],
    k: f64,
    opts: &FieldOptions,
) -> Result<Vec<CVec3>> {
    if coeffs.len() != space.dim() {
        return Err(Error::Dimension { expected: space.dim(), got: coeffs.len() });
    }
    let mesh = space.mesh();
    let h = mesh.h_max();
    for &x in points {
        let d = (0..mesh.num_cells())
            .map(|c| point_triangle_distance(x, mesh.cell_vertices(c)))
            .fold(f64::INFINITY, f64::min);
        if d < opts.min_distance * h {
            return Err(Error::TooClose(x));
        }
    }
    let far = TriangleRule::new(opts.points.max(space.degrees().max_degree() + 2));
    let near = TriangleRule::new(opts.near_points);
    let diam = mesh.cell_diameters();
    let centroid: Vec<Vec3> = (0..mesh.num_cells()).map(|c| space.chart(c).map([1.0 / 3.0, 1.0 / 3.0])).collect();
    let densities: Vec<Density> =
        (0..mesh.num_cells()).into_par_iter().map(|c| sample(space, coeffs, c, &far)).collect::<Result<_>>()?;
    let kernel = KernelSpec::helmholtz(k);
    let out: Vec<CVec3> = points
        .par_iter()
        .map(|&x| {
            let mut e = [Complex64::new(0.0, 0.0); 3];
            for c in 0..mesh.num_cells() {
                if dist(x, centroid[c]) < 2.0 * diam[c] {
                    let d = sample(space, coeffs, c, &near)?;
                    accumulate(&kernel, x, &d, &mut e);
                } else {
                    accumulate(&kernel, x, &densities[c], &mut e);
                }
            }
            Ok(e)
        })
        .collect::<Result<_>>()?;
    Ok(out)
}
