use std::collections::HashMap;
use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{classify_pair, Adjacency, KernelSpec, PairClass, PanelPairRule};
use crate::geometry::{dist, Vec3};
use crate::global_space::{DivSpace, HpDivSpace};
use crate::mesh::{AffineChart, SurfaceMesh};
use crate::poly::{monomial_values, Poly};
use crate::quadrature::TriangleRule;
use crate::{Error, Result};

pub const MATRIX_MAGIC: [u8; 8] = *b"HPEFMAT1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorMode {
    /// `⟨V_k div u, div v⟩`.
    ScalarOnDivergences,
    /// `⟨V_k u, v⟩` with `V_k` acting on Cartesian components.
    VectorOnFields,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    /// Gauss points per direction of the singular rules; separated pairs
    /// use between `(q+1)/2` and `q` points per triangle direction.
    pub quad_order: usize,
    /// Refuse to allocate dense matrices beyond this many bytes.
    pub memory_limit: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quad_order: 6, memory_limit: 3 << 30 }
    }
}

/// Dense Galerkin matrix with the data it was built from.
#[derive(Clone, Debug)]
pub struct PanelOperator {
    pub matrix: Mat<Complex64>,
    pub kernel: KernelSpec,
    pub quad_order: usize,
}

/// Bytes needed by `count` dense complex matrices of order `n`.
pub fn estimate_bytes(n: usize, count: usize) -> usize {
    n.saturating_mul(n).saturating_mul(16).saturating_mul(count)
}

fn guard(n: usize, count: usize, opts: &AssemblyOptions) -> Result<()> {
    let bytes = estimate_bytes(n, count);
    if bytes > opts.memory_limit {
        return Err(Error::MemoryGuard { n, bytes, limit: opts.memory_limit });
    }
    Ok(())
}

/// Local functions of one cell in the form the kernel loops need:
/// `A û` (the Jacobians cancel against the surface measure) and a scalar
/// (`div̂ û`, or `sqrt(J) q̂` for the divergence space).
enum Source<'a> {
    Div(&'a crate::global_space::ShapeTable),
    Q(&'static [Poly<f64>], f64, usize),
}

struct CellData<'a> {
    chart: AffineChart,
    centroid: Vec3,
    diam: f64,
    dofs: &'a [usize],
    source: Source<'a>,
    /// Standard-rule samples keyed by points per direction.
    samples: HashMap<usize, Samples>,
}

struct Samples {
    x: Vec<Vec3>,
    w: Vec<f64>,
    /// `[point][function]`.
    vec: Vec<Vec<Vec3>>,
    scal: Vec<Vec<f64>>,
}

impl CellData<'_> {
    fn len(&self) -> usize {
        self.dofs.len()
    }

    fn eval(&self, p: [f64; 2], mono: &mut Vec<f64>, vec: &mut Vec<Vec3>, scal: &mut Vec<f64>) {
        vec.clear();
        match &self.source {
            Source::Div(table) => {
                let mut vals = Vec::with_capacity(table.len());
                table.eval(p, mono, &mut vals, scal);
                vec.extend(vals.iter().map(|v| self.chart.apply(*v)));
            }
            Source::Q(basis, sj, degree) => {
                scal.clear();
                monomial_values(p[0], p[1], *degree, mono);
                for q in basis.iter() {
                    scal.push(sj * q.coeffs().iter().zip(mono.iter()).map(|(a, b)| a * b).sum::<f64>());
                    vec.push([0.0; 3]);
                }
            }
        }
    }

    fn sample(&mut self, n: usize) {
        if self.samples.contains_key(&n) {
            return;
        }
        let rule = TriangleRule::new(n);
        let mut s = Samples { x: Vec::new(), w: rule.weights.clone(), vec: Vec::new(), scal: Vec::new() };
        let (mut mono, mut v, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for p in &rule.points {
            s.x.push(self.chart.map(*p));
            self.eval(*p, &mut mono, &mut v, &mut d);
            s.vec.push(v.clone());
            s.scal.push(d.clone());
        }
        self.samples.insert(n, s);
    }
}

fn centroid(chart: &AffineChart) -> Vec3 {
    chart.map([1.0 / 3.0, 1.0 / 3.0])
}

fn diameter(chart: &AffineChart) -> f64 {
    let v = [chart.vertex(0), chart.vertex(1), chart.vertex(2)];
    dist(v[0], v[1]).max(dist(v[1], v[2])).max(dist(v[2], v[0]))
}

/// Points per direction for a separated pair.
fn disjoint_order(q: usize, a: &CellData, b: &CellData) -> usize {
    let eta = dist(a.centroid, b.centroid) / a.diam.max(b.diam);
    if eta >= 4.0 {
        q.div_ceil(2).max(2)
    } else if eta >= 2.0 {
        q / 2 + 1
    } else {
        q
    }
}

struct Blocks {
    scal: Vec<Complex64>,
    vec: Vec<Complex64>,
}

fn zero_blocks(ma: usize, mb: usize, scal: bool, vec: bool) -> Blocks {
    let z = Complex64::new(0.0, 0.0);
    Blocks { scal: vec![z; if scal { ma * mb } else { 0 }], vec: vec![z; if vec { ma * mb } else { 0 }] }
}

fn singular_block(
    rule: &PanelPairRule,
    class: &PairClass,
    kernel: &KernelSpec,
    a: &CellData,
    b: &CellData,
    want: (bool, bool),
) -> Blocks {
    let (ma, mb) = (a.len(), b.len());
    let mut out = zero_blocks(ma, mb, want.0, want.1);
    let (mut mono, mut va, mut sa, mut vb, mut sb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &(x, y, w) in &rule.nodes {
        let (xa, yb) = (class.to_cell_a(x), class.to_cell_b(y));
        let g = kernel.eval(a.chart.map(xa), b.chart.map(yb)) * w;
        a.eval(xa, &mut mono, &mut va, &mut sa);
        b.eval(yb, &mut mono, &mut vb, &mut sb);
        for i in 0..ma {
            if want.0 {
                let gi = g * sa[i];
                for j in 0..mb {
                    out.scal[i * mb + j] += gi * sb[j];
                }
            }
            if want.1 {
                for j in 0..mb {
                    let d = va[i][0] * vb[j][0] + va[i][1] * vb[j][1] + va[i][2] * vb[j][2];
                    out.vec[i * mb + j] += g * d;
                }
            }
        }
    }
    out
}

fn disjoint_block(kernel: &KernelSpec, sa: &Samples, sb: &Samples, ma: usize, mb: usize, want: (bool, bool)) -> Blocks {
    let mut out = zero_blocks(ma, mb, want.0, want.1);
    let z = Complex64::new(0.0, 0.0);
    let mut ts = vec![z; mb];
    let mut tv = vec![[z; 3]; mb];
    for qa in 0..sa.x.len() {
        ts.iter_mut().for_each(|t| *t = z);
        tv.iter_mut().for_each(|t| *t = [z; 3]);
        for qb in 0..sb.x.len() {
            let g = kernel.eval(sa.x[qa], sb.x[qb]) * (sa.w[qa] * sb.w[qb]);
            for j in 0..mb {
                if want.0 {
                    ts[j] += g * sb.scal[qb][j];
                }
                if want.1 {
                    let v = sb.vec[qb][j];
                    tv[j][0] += g * v[0];
                    tv[j][1] += g * v[1];
                    tv[j][2] += g * v[2];
                }
            }
        }
        for i in 0..ma {
            for j in 0..mb {
                if want.0 {
                    out.scal[i * mb + j] += ts[j] * sa.scal[qa][i];
                }
                if want.1 {
                    let v = sa.vec[qa][i];
                    out.vec[i * mb + j] += tv[j][0] * v[0] + tv[j][1] * v[1] + tv[j][2] * v[2];
                }
            }
        }
    }
    out
}

/// Rows of cells processed per parallel batch.
const BATCH: usize = 32;

fn assemble_generic(
    mesh: &SurfaceMesh,
    mut cells: Vec<CellData>,
    n: usize,
    kernel: &KernelSpec,
    opts: &AssemblyOptions,
    want: (bool, bool),
) -> Result<(Option<Mat<Complex64>>, Option<Mat<Complex64>>)> {
    guard(n, want.0 as usize + want.1 as usize, opts)?;
    let q = opts.quad_order.max(1);
    let orders: Vec<usize> = {
        let mut o = vec![q.div_ceil(2).max(2), q / 2 + 1, q];
        o.sort_unstable();
        o.dedup();
        o
    };
    cells.par_iter_mut().for_each(|c| orders.iter().for_each(|&k| c.sample(k)));
    let rules: HashMap<Adjacency, PanelPairRule> =
        [Adjacency::Identical, Adjacency::CommonEdge, Adjacency::CommonVertex]
            .into_iter()
            .map(|a| (a, PanelPairRule::new(a, q)))
            .collect();

    let mut s = want.0.then(|| Mat::<Complex64>::zeros(n, n));
    let mut v = want.1.then(|| Mat::<Complex64>::zeros(n, n));
    let nc = cells.len();
    for start in (0..nc).step_by(BATCH) {
        let end = (start + BATCH).min(nc);
        let rows: Vec<Vec<Blocks>> = (start..end)
            .into_par_iter()
            .map(|a| {
                (0..nc)
                    .map(|b| {
                        let class = classify_pair(mesh, a, b).expect("cells in range");
                        let (ca, cb) = (&cells[a], &cells[b]);
                        match class.adjacency {
                            Adjacency::Disjoint => {
                                let k = disjoint_order(q, ca, cb);
                                disjoint_block(kernel, &ca.samples[&k], &cb.samples[&k], ca.len(), cb.len(), want)
                            }
                            adj => singular_block(&rules[&adj], &class, kernel, ca, cb, want),
                        }
                    })
                    .collect()
            })
            .collect();
        for (a, row) in (start..end).zip(rows) {
            let da = cells[a].dofs;
            for (b, blk) in row.into_iter().enumerate() {
                let db = cells[b].dofs;
                let mb = db.len();
                for (i, &gi) in da.iter().enumerate() {
                    for (j, &gj) in db.iter().enumerate() {
                        if let Some(m) = s.as_mut() {
                            m[(gi, gj)] += blk.scal[i * mb + j];
                        }
                        if let Some(m) = v.as_mut() {
                            m[(gi, gj)] += blk.vec[i * mb + j];
                        }
                    }
                }
            }
        }
    }
    for m in s.iter().chain(v.iter()) {
        if m.col_iter().any(|c| c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
            return Err(Error::NonFinite("assembled operator".into()));
        }
    }
    Ok((s, v))
}

fn div_cells(space: &HpDivSpace) -> Vec<CellData<'_>> {
    (0..space.mesh().num_cells())
        .map(|c| {
            let chart = *space.chart(c);
            CellData {
                chart,
                centroid: centroid(&chart),
                diam: diameter(&chart),
                dofs: &space.cell(c).dofs,
                source: Source::Div(&space.cell(c).table),
                samples: HashMap::new(),
            }
        })
        .collect()
}

/// Both EFIE blocks at once: `(S_div, M_V)` with
/// `S_div[i][j] = ⟨V_k div u_j, div u_i⟩` and `M_V[i][j] = ⟨V_k u_j, u_i⟩`.
pub fn assemble_operators(
    space: &HpDivSpace,
    kernel: &KernelSpec,
    opts: &AssemblyOptions,
) -> Result<(Mat<Complex64>, Mat<Complex64>)> {
    let (s, v) = assemble_generic(space.mesh(), div_cells(space), space.dim(), kernel, opts, (true, true))?;
    Ok((s.expect("requested"), v.expect("requested")))
}

pub fn operator_matrix(
    space: &HpDivSpace,
    kernel: &KernelSpec,
    mode: OperatorMode,
    opts: &AssemblyOptions,
) -> Result<PanelOperator> {
    let want = match mode {
        OperatorMode::ScalarOnDivergences => (true, false),
        OperatorMode::VectorOnFields => (false, true),
    };
    let (s, v) = assemble_generic(space.mesh(), div_cells(space), space.dim(), kernel, opts, want)?;
    let matrix = s.or(v).expect("one block requested");
    Ok(PanelOperator { matrix, kernel: *kernel, quad_order: opts.quad_order })
}

/// Scalar single-layer Gram matrix on the piecewise polynomial space.
pub fn operator_matrix_q(
    mesh: &SurfaceMesh,
    q: &DivSpace,
    kernel: &KernelSpec,
    opts: &AssemblyOptions,
) -> Result<PanelOperator> {
    if q.num_cells() != mesh.num_cells() {
        return Err(Error::Dimension { expected: mesh.num_cells(), got: q.num_cells() });
    }
    let dofs: Vec<Vec<usize>> = (0..q.num_cells()).map(|c| q.cell_range(c).collect()).collect();
    let cells = (0..q.num_cells())
        .map(|c| {
            let chart = *q.chart(c);
            CellData {
                chart,
                centroid: centroid(&chart),
                diam: diameter(&chart),
                dofs: &dofs[c],
                source: Source::Q(q.reference_basis(c), chart.jacobian.sqrt(), q.cell_degree(c)),
                samples: HashMap::new(),
            }
        })
        .collect();
    let (s, _) = assemble_generic(mesh, cells, q.dim(), kernel, opts, (true, false))?;
    Ok(PanelOperator { matrix: s.expect("requested"), kernel: *kernel, quad_order: opts.quad_order })
}

/// Binary dump: magic, order as little-endian `u64`, then row-major
/// `(re, im)` pairs of little-endian `f64`.
pub fn write_matrix<W: Write>(mut w: W, m: &Mat<Complex64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
    }
    w.write_all(&MATRIX_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            buf.extend(m[(i, j)].re.to_le_bytes());
            buf.extend(m[(i, j)].im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<Mat<Complex64>> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..8] != MATRIX_MAGIC {
        return Err(Error::Parse { line: 0, msg: "bad matrix magic".into() });
    }
    let n = u64::from_le_bytes(head[8..].try_into().expect("8 bytes")) as usize;
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() != 16 * n * n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {} bytes of matrix data, got {}", 16 * n * n, data.len()),
        });
    }
    let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok(Mat::from_fn(n, n, |i, j| Complex64::new(f(2 * (i * n + j)), f(2 * (i * n + j) + 1))))
}
