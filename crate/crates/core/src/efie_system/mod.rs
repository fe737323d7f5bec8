//! The discrete EFIE `a(u, v) = ⟨V_k div u, div v⟩ − k²⟨V_k u, v⟩`:
//! assembly, excitations, dense solve, a computable `X`-norm and the
//! scattered field of a surface current.

mod excitation;
mod field;
mod studies;

pub use excitation::{dipole_field, rhs_excitation, CVec3, Excitation};
pub use field::{scattered_field, FieldOptions};
pub use studies::{
    extinction_study, prolongation, quasi_optimality_report, ExtinctionRow, QuasiOptimalityConfig,
    QuasiOptimalityReport, QuasiOptimalityRow,
};

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bem_kernels::{assemble_operators, operator_matrix_q, AssemblyOptions, KernelSpec};
use crate::global_space::{divergence_matrix, DivSpace, HpDivSpace};
use crate::{Error, Result};

/// Assembled EFIE matrix `A = S_div − k² M_V`.
#[derive(Clone, Debug)]
pub struct EfieSystem {
    pub matrix: Mat<Complex64>,
    pub k: f64,
    pub quad_order: usize,
}

#[derive(Clone, Debug)]
pub struct EfieSolution {
    pub coefficients: Vec<Complex64>,
    /// `‖A u − b‖ / ‖b‖` after refinement.
    pub residual: f64,
    /// One-norm condition estimate.
    pub cond_estimate: f64,
    pub refinement_steps: usize,
}

fn check_wavenumber(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("wavenumber must be positive, got {k}")))
    }
}

/// The two blocks `(S_div, M_V)` at wavenumber `k`.
pub fn efie_blocks(space: &HpDivSpace, k: f64, opts: &AssemblyOptions) -> Result<(Mat<Complex64>, Mat<Complex64>)> {
    assemble_operators(space, &KernelSpec::helmholtz(k), opts)
}

pub fn assemble_efie(space: &HpDivSpace, k: f64, opts: &AssemblyOptions) -> Result<EfieSystem> {
    check_wavenumber(k)?;
    let (mut s, m) = efie_blocks(space, k, opts)?;
    let k2 = k * k;
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            s[(i, j)] -= m[(i, j)] * k2;
        }
    }
    Ok(EfieSystem { matrix: s, k, quad_order: opts.quad_order })
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn column(v: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// `‖A − Aᵀ‖_F / ‖A‖_F`.
pub fn symmetry_defect(m: &Mat<Complex64>) -> f64 {
    let (mut d, mut n) = (0.0, 0.0);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            d += (m[(i, j)] - m[(j, i)]).norm_sqr();
            n += m[(i, j)].norm_sqr();
        }
    }
    if n == 0.0 {
        0.0
    } else {
        (d / n).sqrt()
    }
}

impl EfieSystem {
    pub fn from_matrix(matrix: Mat<Complex64>, k: f64, quad_order: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension { expected: matrix.nrows(), got: matrix.ncols() });
        }
        Ok(Self { matrix, k, quad_order })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.matrix)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let y = &self.matrix * column(x);
        (0..self.dim()).map(|i| y[(i, 0)]).collect()
    }

    /// `a(u, v) − f(v)` for all `v`: the vector `A u − b`.
    pub fn residual_vector(&self, u: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
        self.apply(u).into_iter().zip(rhs).map(|(a, b)| a - b).collect()
    }

    /// Dense LU with iterative refinement.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<EfieSolution> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension { expected: n, got: rhs.len() });
        }
        let lu = self.matrix.partial_piv_lu();
        let bn = norm2(rhs);
        let sol = lu.solve(column(rhs));
        let mut x: Vec<Complex64> = (0..n).map(|i| sol[(i, 0)]).collect();
        let cond = condition_estimate(&self.matrix, &lu);
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) || !(cond < 0.1 / f64::EPSILON) {
            return Err(Error::Solve(format!("singular or near-singular system, condition estimate {cond:.3e}")));
        }
        if bn == 0.0 {
            return Ok(EfieSolution { coefficients: x, residual: 0.0, cond_estimate: cond, refinement_steps: 0 });
        }
        let mut residual = norm2(&self.residual_vector(&x, rhs)) / bn;
        let mut steps = 0;
        while steps < 3 && residual > 1e-14 {
            let r: Vec<Complex64> = self.residual_vector(&x, rhs).into_iter().map(|z| -z).collect();
            let d = lu.solve(column(&r));
            let trial: Vec<Complex64> = x.iter().enumerate().map(|(i, xi)| xi + d[(i, 0)]).collect();
            let tr = norm2(&self.residual_vector(&trial, rhs)) / bn;
            steps += 1;
            if tr >= residual {
                break;
            }
            x = trial;
            residual = tr;
        }
        Ok(EfieSolution { coefficients: x, residual, cond_estimate: cond, refinement_steps: steps })
    }
}

/// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`.
fn condition_estimate(a: &Mat<Complex64>, lu: &faer::linalg::solvers::PartialPivLu<Complex64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    let norm_a = (0..n).map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut x = Mat::<Complex64>::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    for it in 0..5 {
        let y = lu.solve(&x);
        let ny: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
        if it > 0 && ny <= est {
            break;
        }
        est = ny;
        let xi = Mat::<Complex64>::from_fn(n, 1, |i, _| {
            let z = y[(i, 0)];
            if z.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        });
        let z = lu.solve_adjoint(&xi);
        let (j, zj) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, -1.0), |m, c| if c.1 > m.1 { c } else { m });
        let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if it > 0 && zj <= ztx {
            break;
        }
        x = Mat::from_fn(n, 1, |i, _| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    }
    norm_a * est
}

/// Relative gap between the direct divergence block and `Dᵀ Ṽ D` built
/// from the scalar single-layer matrix on the divergence space.
pub fn two_path_defect(space: &HpDivSpace, k: f64, opts: &AssemblyOptions) -> Result<f64> {
    let kernel = KernelSpec::helmholtz(k);
    let s = crate::bem_kernels::operator_matrix(
        space,
        &kernel,
        crate::bem_kernels::OperatorMode::ScalarOnDivergences,
        opts,
    )?
    .matrix;
    let q = DivSpace::new(space);
    let v = operator_matrix_q(space.mesh(), &q, &kernel, opts)?.matrix;
    let d = divergence_matrix(space).to_dense();
    let dc = Mat::<Complex64>::from_fn(d.nrows(), d.ncols(), |i, j| Complex64::new(d[(i, j)], 0.0));
    let composed = dc.transpose() * &v * &dc;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            num += (s[(i, j)] - composed[(i, j)]).norm_sqr();
            den += s[(i, j)].norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

/// Laplace single-layer Gram matrix realizing the discrete `X`-norm.
#[derive(Clone, Debug)]
pub struct XNormGram {
    pub matrix: Mat<f64>,
}

pub fn assemble_xnorm(space: &HpDivSpace, opts: &AssemblyOptions) -> Result<XNormGram> {
    let (s, m) = assemble_operators(space, &KernelSpec::laplace(), opts)?;
    let n = s.nrows();
    let mut g = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] = 0.5 * (s[(i, j)].re + s[(j, i)].re + m[(i, j)].re + m[(j, i)].re);
        }
    }
    drop((s, m));
    g.llt(Side::Lower).map_err(|e| {
        Error::NotPositiveDefinite(format!("X-norm Gram of order {n} ({e:?}); the quadrature order may be too low"))
    })?;
    Ok(XNormGram { matrix: g })
}

impl XNormGram {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `sqrt(vᴴ G v)`.
    pub fn norm(&self, v: &[Complex64]) -> f64 {
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        let im: Vec<f64> = v.iter().map(|z| z.im).collect();
        (self.quadratic(&re) + self.quadratic(&im)).max(0.0).sqrt()
    }

    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            if v[j] == 0.0 {
                continue;
            }
            let col: f64 = (0..n).map(|i| self.matrix[(i, j)] * v[i]).sum();
            acc += col * v[j];
        }
        acc
    }
}

/// Largest `|vᵀ(A u − b)| / (‖v‖ ‖b‖)` over `samples` seeded random real
/// test vectors.
pub fn galerkin_orthogonality(
    system: &EfieSystem,
    rhs: &[Complex64],
    u: &[Complex64],
    samples: usize,
    seed: u64,
) -> f64 {
    let r = system.residual_vector(u, rhs);
    let bn = norm2(rhs).max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let v: Vec<f64> = (0..r.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s: Complex64 = v.iter().zip(&r).map(|(a, b)| b * a).sum();
            s.norm() / (vn * bn)
        })
        .fold(0.0, f64::max)
}

/// `|f_p(u_q) − f_q(u_p)| / max(|f_p(u_q)|, |f_q(u_p)|)`.
pub fn reciprocity_defect(bp: &[Complex64], bq: &[Complex64], up: &[Complex64], uq: &[Complex64]) -> f64 {
    let a: Complex64 = bp.iter().zip(uq).map(|(x, y)| x * y).sum();
    let b: Complex64 = bq.iter().zip(up).map(|(x, y)| x * y).sum();
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests;
