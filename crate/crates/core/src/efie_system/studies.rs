use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    assemble_efie, assemble_xnorm, galerkin_orthogonality, rhs_excitation, scattered_field, Excitation, FieldOptions,
    XNormGram,
};
use crate::bem_kernels::AssemblyOptions;
use crate::geometry::{dist, Vec3};
use crate::global_space::HpDivSpace;
use crate::interpolation::{interpolate_on_chart, InterpolationOptions, LocalElement};
use crate::mesh::{refine_levels, DegreeMap, SurfaceMesh};
use crate::{Error, Result};

/// Matrix `P` with `P c` the fine coefficients of the coarse field `c`,
/// for a fine mesh obtained from the coarse one by uniform refinement.
pub fn prolongation(coarse: &HpDivSpace, fine: &HpDivSpace, opts: &InterpolationOptions) -> Result<Mat<f64>> {
    let (nc, nf) = (coarse.mesh().num_cells(), fine.mesh().num_cells());
    let mut ratio = 1;
    while ratio * nc < nf {
        ratio *= 4;
    }
    if ratio * nc != nf {
        return Err(Error::Config(format!("{nf} fine cells are not a uniform refinement of {nc}")));
    }
    let tol = 1e-9 * coarse.mesh().h_max();
    let entries: Vec<Vec<(usize, usize, f64)>> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let c = f / ratio;
            let (cchart, fchart) = (coarse.chart(c), fine.chart(f));
            let mid = fchart.map([1.0 / 3.0, 1.0 / 3.0]);
            let p = cchart.pull_point(mid);
            if p[0] < -tol || p[1] < -tol || p[0] + p[1] > 1.0 + tol || dist(cchart.map(p), mid) > tol {
                return Err(Error::Config(format!("fine cell {f} does not lie in coarse cell {c}")));
            }
            let el = LocalElement::from_space(fine, f);
            let fdofs = &fine.cell(f).dofs;
            let mut out = Vec::new();
            for (k, &gc) in coarse.cell(c).dofs.iter().enumerate() {
                let u = |x: Vec3| {
                    let q = cchart.pull_point(x);
                    coarse.cell_values(c, q).0[k]
                };
                let li = interpolate_on_chart(&el, fchart, u, opts)?;
                out.extend(fdofs.iter().zip(&li.coefficients).map(|(&gf, &v)| (gf, gc, v)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut p = Mat::<f64>::zeros(fine.dim(), coarse.dim());
    for (i, j, v) in entries.into_iter().flatten() {
        p[(i, j)] = v;
    }
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct QuasiOptimalityConfig {
    pub levels: Vec<usize>,
    pub degrees: Vec<usize>,
    pub reference_level: usize,
    pub reference_degree: usize,
    pub excitation: Excitation,
    pub assembly: AssemblyOptions,
    pub interpolation: InterpolationOptions,
    pub rhs_points: usize,
    pub orthogonality_samples: usize,
    pub seed: u64,
}

impl QuasiOptimalityConfig {
    pub fn new(levels: Vec<usize>, degrees: Vec<usize>, reference: (usize, usize), excitation: Excitation) -> Self {
        Self {
            levels,
            degrees,
            reference_level: reference.0,
            reference_degree: reference.1,
            excitation,
            assembly: AssemblyOptions::default(),
            interpolation: InterpolationOptions::default(),
            rhs_points: 10,
            orthogonality_samples: 20,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiOptimalityRow {
    pub level: usize,
    pub p: usize,
    pub n: usize,
    pub h_max: f64,
    /// `‖u_ref − u_N‖` in the discrete `X`-norm.
    pub error: f64,
    /// `min ‖u_ref − v‖` over the member space.
    pub best: f64,
    /// `error / best`; absent when both vanish.
    pub ratio: Option<f64>,
    pub residual: f64,
    pub cond_estimate: f64,
    pub orthogonality: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiOptimalityReport {
    pub rows: Vec<QuasiOptimalityRow>,
    pub reference_n: usize,
    pub reference_residual: f64,
    pub warnings: Vec<String>,
}

impl QuasiOptimalityReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max)
    }

    fn by_degree(&self) -> BTreeMap<usize, Vec<&QuasiOptimalityRow>> {
        let mut m: BTreeMap<usize, Vec<&QuasiOptimalityRow>> = BTreeMap::new();
        for r in &self.rows {
            m.entry(r.p).or_default().push(r);
        }
        for v in m.values_mut() {
            v.sort_by_key(|r| r.level);
        }
        m
    }

    /// False if, for some degree with at least three levels, the ratio
    /// grows at every refinement step.
    pub fn non_exploding(&self) -> bool {
        self.by_degree().values().all(|rows| {
            let r: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
            r.len() < 3 || !r.windows(2).all(|w| w[1] > w[0])
        })
    }

    /// Best-approximation errors never increase under refinement.
    pub fn best_monotone(&self) -> bool {
        self.by_degree().values().all(|rows| rows.windows(2).all(|w| w[1].best <= w[0].best * (1.0 + 1e-10)))
    }

    pub fn max_orthogonality(&self) -> f64 {
        self.rows.iter().map(|r| r.orthogonality).fold(0.0, f64::max)
    }
}

fn space_at(base: &SurfaceMesh, level: usize, p: usize) -> Result<HpDivSpace> {
    let mesh = refine_levels(base, level);
    HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, p))
}

fn solve_member(
    space: &HpDivSpace,
    exc: &Excitation,
    cfg: &QuasiOptimalityConfig,
) -> Result<(super::EfieSolution, f64)> {
    let sys = assemble_efie(space, exc.k(), &cfg.assembly)?;
    let b = rhs_excitation(space, exc, cfg.rhs_points)?;
    let sol = sys.solve(&b)?;
    let orth = galerkin_orthogonality(&sys, &b, &sol.coefficients, cfg.orthogonality_samples, cfg.seed);
    Ok((sol, orth))
}

fn split(v: &[Complex64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 2, |i, j| if j == 0 { v[i].re } else { v[i].im })
}

fn join(m: &Mat<f64>) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| Complex64::new(m[(i, 0)], m[(i, 1)])).collect()
}

/// Galerkin errors against a reference solution and best-approximation
/// errors, both in the Laplace single-layer `X`-norm of the reference space.
pub fn quasi_optimality_report(base: &SurfaceMesh, cfg: &QuasiOptimalityConfig) -> Result<QuasiOptimalityReport> {
    for &l in &cfg.levels {
        if l > cfg.reference_level {
            return Err(Error::Config(format!("level {l} is finer than the reference level {}", cfg.reference_level)));
        }
    }
    for &p in &cfg.degrees {
        if p > cfg.reference_degree {
            return Err(Error::Config(format!("degree {p} exceeds the reference degree {}", cfg.reference_degree)));
        }
    }
    cfg.excitation.validate(Some(base))?;
    let reference = space_at(base, cfg.reference_level, cfg.reference_degree)?;
    log::info!("reference space: level {}, p {}, N = {}", cfg.reference_level, cfg.reference_degree, reference.dim());
    let gram: XNormGram = assemble_xnorm(&reference, &cfg.assembly)?;
    let (ref_sol, _) = solve_member(&reference, &cfg.excitation, cfg)?;
    let u_ref = ref_sol.coefficients;

    let mut rows = Vec::new();
    for &p in &cfg.degrees {
        for &level in &cfg.levels {
            let space = space_at(base, level, p)?;
            log::info!("member level {level}, p {p}, N = {}", space.dim());
            let (sol, orth) = solve_member(&space, &cfg.excitation, cfg)?;
            let prol = prolongation(&space, &reference, &cfg.interpolation)?;
            let lifted = join(&(&prol * split(&sol.coefficients)));
            let diff: Vec<Complex64> = u_ref.iter().zip(&lifted).map(|(a, b)| a - b).collect();
            let error = gram.norm(&diff);

            let gp = &gram.matrix * &prol;
            let normal = prol.transpose() * &gp;
            let rhs = gp.transpose() * split(&u_ref);
            let llt = normal
                .llt(Side::Lower)
                .map_err(|e| Error::NotPositiveDefinite(format!("restricted X-norm Gram ({e:?})")))?;
            let c = llt.solve(&rhs);
            let proj = join(&(&prol * c));
            let diff: Vec<Complex64> = u_ref.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let best = gram.norm(&diff);
            let scale = gram.norm(&u_ref).max(f64::MIN_POSITIVE);
            let ratio = if best <= 1e-12 * scale { None } else { Some(error / best) };
            rows.push(QuasiOptimalityRow {
                level,
                p,
                n: space.dim(),
                h_max: space.mesh().h_max(),
                error,
                best,
                ratio,
                residual: sol.residual,
                cond_estimate: sol.cond_estimate,
                orthogonality: orth,
            });
        }
    }

    let mut warnings = Vec::new();
    let mut report = QuasiOptimalityReport {
        rows,
        reference_n: reference.dim(),
        reference_residual: ref_sol.residual,
        warnings: vec![],
    };
    for (p, rows) in report.by_degree() {
        let n = rows.len();
        if n < 2 || rows[n - 1].level >= cfg.reference_level {
            continue;
        }
        let (e1, e2) = (rows[n - 2].error, rows[n - 1].error);
        let steps = (cfg.reference_level - rows[n - 1].level) as i32;
        let predicted = e2 * (e2 / e1).powi(steps);
        if e1 > 0.0 && predicted > 0.3 * e2 {
            warnings.push(format!(
                "p = {p}: extrapolated reference error {predicted:.3e} is comparable to the finest level error {e2:.3e}"
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    report.warnings = warnings;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtinctionRow {
    pub level: usize,
    pub p: usize,
    pub n: usize,
    /// `‖E_s + E_inc‖ / ‖E_inc‖` over the evaluation points.
    pub relative_error: f64,
    pub residual: f64,
}

/// Scattered field of the EFIE solution driven by an interior source,
/// compared with the negative incident field at exterior points.
pub fn extinction_study(
    base: &SurfaceMesh,
    levels: &[usize],
    p: usize,
    source: &Excitation,
    points: &[Vec3],
    assembly: &AssemblyOptions,
    rhs_points: usize,
    field: &FieldOptions,
) -> Result<Vec<ExtinctionRow>> {
    let mut rows = Vec::new();
    for &level in levels {
        let space = space_at(base, level, p)?;
        let sys = assemble_efie(&space, source.k(), assembly)?;
        let b = rhs_excitation(&space, source, rhs_points)?;
        let sol = sys.solve(&b)?;
        drop(sys);
        let es = scattered_field(&space, &sol.coefficients, points, source.k(), field)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (x, e) in points.iter().zip(&es) {
            let ei = source.field(*x);
            for i in 0..3 {
                num += (e[i] + ei[i]).norm_sqr();
                den += ei[i].norm_sqr();
            }
        }
        rows.push(ExtinctionRow {
            level,
            p,
            n: space.dim(),
            relative_error: (num / den).sqrt(),
            residual: sol.residual,
        });
    }
    Ok(rows)
}
