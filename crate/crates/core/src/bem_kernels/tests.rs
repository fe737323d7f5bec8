use super::*;
use crate::global_space::{divergence_matrix, DivSpace, HpDivSpace};
use crate::mesh::{builtin_fixture, refine_uniform, DegreeMap, Fixture, SurfaceKind};
use crate::quadrature::TriangleRule;
use faer::Mat;
use num_complex::Complex64;

const SINGULAR: [Adjacency; 3] = [Adjacency::Identical, Adjacency::CommonEdge, Adjacency::CommonVertex];

fn chart(v: [[f64; 3]; 3]) -> AffineChart {
    AffineChart::from_vertices(v).unwrap()
}

/// Representative pair for each class, with the permutations the mesh
/// classifier would produce.
fn pair(adj: Adjacency) -> (AffineChart, AffineChart, PairClass) {
    let p = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 0.3],
        [-0.8, 0.3, -0.4],
        [3.0, 3.0, 1.0],
        [-0.2, -0.9, 0.5],
    ];
    let (ta, tb) = match adj {
        Adjacency::Identical => ([0, 1, 2], [0, 1, 2]),
        Adjacency::CommonEdge => ([0, 1, 2], [2, 1, 3]),
        Adjacency::CommonVertex => ([0, 1, 2], [4, 0, 6]),
        Adjacency::Disjoint => ([0, 1, 2], [3, 5, 4]),
    };
    let class = PairClass::from_triangles(ta, tb, adj == Adjacency::Identical);
    assert_eq!(class.adjacency, adj);
    (chart(ta.map(|i| p[i])), chart(tb.map(|i| p[i])), class)
}

fn one(_: [f64; 2]) -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn laplace_pair(adj: Adjacency, q: usize) -> f64 {
    let (a, b, class) = pair(adj);
    panel_integral(&PanelPairRule::new(adj, q), &class, &KernelSpec::laplace(), &a, &b, one, one).unwrap().re
}

#[test]
fn rule_weights_are_positive_and_sum_to_a_quarter() {
    for adj in SINGULAR.into_iter().chain([Adjacency::Disjoint]) {
        for q in 2..7 {
            let r = PanelPairRule::new(adj, q);
            assert!(r.nodes.iter().all(|n| n.2 > 0.0));
            let s: f64 = r.nodes.iter().map(|n| n.2).sum();
            assert!((s - 0.25).abs() < 1e-14, "{adj:?} q={q}: {s}");
        }
    }
}

#[test]
fn singular_rules_integrate_smooth_functions() {
    let f = |x: [f64; 2], y: [f64; 2]| (x[0] + 2.0 * x[1] - y[0] + x[0] * y[1]).exp() * (1.0 + y[1] * y[1]);
    let t = TriangleRule::new(12);
    let mut exact = 0.0;
    for (x, wx) in t.iter() {
        for (y, wy) in t.iter() {
            exact += wx * wy * f(x, y);
        }
    }
    for adj in SINGULAR {
        let (_, _, class) = pair(adj);
        let r = PanelPairRule::new(adj, 10);
        let v: f64 = r.nodes.iter().map(|&(x, y, w)| w * f(class.to_cell_a(x), class.to_cell_b(y))).sum();
        assert!((v - exact).abs() < 1e-12 * exact, "{adj:?}: {v} vs {exact}");
    }
}

#[test]
fn identical_laplace_integral_self_converges() {
    let reference = laplace_pair(Adjacency::Identical, 20);
    let v = laplace_pair(Adjacency::Identical, 12);
    assert!(((v - reference) / reference).abs() < 1e-9);
}

#[test]
fn quadrature_error_decays_geometrically() {
    for adj in SINGULAR {
        let reference = laplace_pair(adj, 24);
        let errs: Vec<f64> = (4..=8).map(|q| (laplace_pair(adj, q) - reference).abs() / reference).collect();
        for w in errs.windows(2) {
            assert!(w[1] < 1e-14 || w[0] >= 3.0 * w[1], "{adj:?}: {errs:?}");
        }
    }
}

#[test]
fn square_screen_matches_closed_form() {
    // ∫∫ |x−y|⁻¹ over the unit square, twice.
    let exact = 4.0 / 3.0 * (1.0 - 2f64.sqrt()) + 4.0 * (1.0 + 2f64.sqrt()).ln();
    let mesh = refine_uniform(&builtin_fixture(Fixture::SquareScreen));
    let space = HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, 0)).unwrap();
    let q = DivSpace::new(&space);
    let opts = AssemblyOptions { quad_order: 12, ..Default::default() };
    let v = operator_matrix_q(&mesh, &q, &KernelSpec::laplace(), &opts).unwrap().matrix;
    let sa: Vec<f64> = (0..q.num_cells()).map(|c| q.chart(c).area().sqrt()).collect();
    let mut total = 0.0;
    for i in 0..q.dim() {
        for j in 0..q.dim() {
            total += v[(i, j)].re * sa[i] * sa[j];
        }
    }
    total *= 4.0 * std::f64::consts::PI;
    assert!((total - exact).abs() < 1e-9 * exact, "{total} vs {exact}");
}

#[test]
fn disjoint_pair_matches_tensor_gauss() {
    let (a, b, class) = pair(Adjacency::Disjoint);
    let k = KernelSpec::helmholtz(1.3);
    let v = panel_integral(&PanelPairRule::new(Adjacency::Disjoint, 10), &class, &k, &a, &b, one, one).unwrap();
    let t = TriangleRule::new(10);
    let mut w = Complex64::new(0.0, 0.0);
    for (x, wx) in t.iter() {
        for (y, wy) in t.iter() {
            w += k.eval(a.map(x), b.map(y)) * (wx * wy);
        }
    }
    w *= a.jacobian * b.jacobian;
    assert!((v - w).norm() < 1e-12 * w.norm());
}

#[test]
fn mismatched_rule_is_rejected() {
    let (a, b, class) = pair(Adjacency::Disjoint);
    let rule = PanelPairRule::new(Adjacency::Identical, 3);
    assert!(panel_integral(&rule, &class, &KernelSpec::laplace(), &a, &b, one, one).is_err());
}

#[test]
fn swapped_pairs_agree() {
    let mesh = builtin_fixture(Fixture::Cube);
    let k = KernelSpec::helmholtz(2.0);
    let charts = mesh.charts();
    let f = |p: [f64; 2]| [1.0 + p[0], p[1], 0.0];
    let g = |p: [f64; 2]| [p[1] * p[1], 1.0 - p[0], 0.5];
    for a in 0..mesh.num_cells() {
        for b in 0..mesh.num_cells() {
            let (ab, ba) = (classify_pair(&mesh, a, b).unwrap(), classify_pair(&mesh, b, a).unwrap());
            assert_eq!(ab.adjacency, ba.adjacency);
            let rule = PanelPairRule::new(ab.adjacency, 5);
            let x = panel_integral(&rule, &ab, &k, &charts[a], &charts[b], f, g).unwrap();
            let y = panel_integral(&rule, &ba, &k, &charts[b], &charts[a], g, f).unwrap();
            assert!((x - y).norm() <= 1e-13 * x.norm(), "({a},{b}): {x} vs {y}");
        }
    }
}

#[test]
fn classification_on_the_cube() {
    let mesh = builtin_fixture(Fixture::Cube);
    let t = mesh.triangles();
    let mut counts = [0usize; 4];
    for a in 0..mesh.num_cells() {
        for b in 0..mesh.num_cells() {
            let c = classify_pair(&mesh, a, b).unwrap();
            let shared = t[a].iter().filter(|v| t[b].contains(v)).count();
            let expected = match (a == b, shared) {
                (true, _) => Adjacency::Identical,
                (_, 2) => Adjacency::CommonEdge,
                (_, 1) => Adjacency::CommonVertex,
                _ => Adjacency::Disjoint,
            };
            assert_eq!(c.adjacency, expected);
            counts[c.adjacency as usize] += 1;
            // shared vertices come first, in the same order on both cells
            for k in 0..shared.min(2).max(if a == b { 3 } else { 0 }) {
                assert_eq!(t[a][c.perm_a[k]], t[b][c.perm_b[k]]);
            }
        }
    }
    assert_eq!(counts[0], 12);
    assert_eq!(counts[1], 36);
    assert!(counts[3] > 0);
    assert!(classify_pair(&mesh, 0, 12).is_err());
}

fn cube_space(p: usize) -> HpDivSpace {
    let mesh = builtin_fixture(Fixture::Cube);
    HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, p)).unwrap()
}

fn rel_asymmetry(m: &Mat<Complex64>) -> f64 {
    let mut d = 0.0;
    let mut n = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            d += (m[(i, j)] - m[(j, i)]).norm_sqr();
            n += m[(i, j)].norm_sqr();
        }
    }
    (d / n).sqrt()
}

#[test]
fn single_cell_matrix_equals_panel_integrals() {
    let mesh =
        SurfaceMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.1, 0.9, 0.3]], vec![[0, 1, 2]], SurfaceKind::Screen)
            .unwrap();
    let space = HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, 1)).unwrap();
    let k = KernelSpec::helmholtz(0.7);
    let opts = AssemblyOptions::default();
    let m = operator_matrix(&space, &k, OperatorMode::VectorOnFields, &opts).unwrap().matrix;
    assert_eq!(m.nrows(), space.dim());
    let chart = *space.chart(0);
    let rule = PanelPairRule::new(Adjacency::Identical, opts.quad_order);
    let class = classify_pair(&mesh, 0, 0).unwrap();
    let cell = space.cell(0);
    for (i, &gi) in cell.dofs.iter().enumerate() {
        for (j, &gj) in cell.dofs.iter().enumerate() {
            let f = |p: [f64; 2]| {
                let v = cell.fields[i].eval(&p[0], &p[1]);
                chart.apply(v)
            };
            let g = |p: [f64; 2]| {
                let v = cell.fields[j].eval(&p[0], &p[1]);
                chart.apply(v)
            };
            let direct = panel_integral(&rule, &class, &k, &chart, &chart, f, g).unwrap() / chart.jacobian.powi(2);
            assert!((direct - m[(gi, gj)]).norm() < 1e-12 * direct.norm().max(1e-3));
        }
    }
}

#[test]
fn rt0_laplace_divergence_block_is_psd_with_divergence_free_kernel() {
    let space = cube_space(0);
    let s = operator_matrix(&space, &KernelSpec::laplace(), OperatorMode::ScalarOnDivergences, &Default::default())
        .unwrap()
        .matrix;
    let n = space.dim();
    assert!(s.col_iter().all(|c| c.iter().all(|z| z.im == 0.0)));
    let re = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (s[(i, j)].re + s[(j, i)].re));
    let eig = re.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    let top = eig.iter().cloned().fold(0.0, f64::max);
    let d = divergence_matrix(&space).to_dense();
    let rank = d.singular_values().unwrap().iter().filter(|&&s| s > 1e-10).count();
    let nullity = eig.iter().filter(|&&e| e.abs() <= 1e-10 * top).count();
    assert!(eig.iter().all(|&e| e >= -1e-10 * top), "{eig:?}");
    assert_eq!(nullity, n - rank);
    // divergence-free vectors are exactly in the kernel
    let null =
        Mat::<f64>::identity(n, n) - d.transpose() * (&d * d.transpose()).thin_svd().unwrap().pseudoinverse() * &d;
    for c in 0..n {
        let z: Vec<f64> = (0..n).map(|i| null[(i, c)]).collect();
        let sz: f64 = (0..n).map(|i| (0..n).map(|j| re[(i, j)] * z[j]).sum::<f64>().powi(2)).sum::<f64>().sqrt();
        assert!(sz <= 1e-10 * top);
    }
}

#[test]
fn matrices_are_complex_symmetric() {
    let space = cube_space(1);
    let k = KernelSpec::helmholtz(1.0);
    let (s, v) = assemble_operators(&space, &k, &AssemblyOptions { quad_order: 6, ..Default::default() }).unwrap();
    assert!(rel_asymmetry(&s) <= 1e-8);
    assert!(rel_asymmetry(&v) <= 1e-8);
    // not Hermitian
    let h: f64 = (0..v.nrows()).map(|i| v[(i, i)].im.abs()).sum();
    assert!(h > 0.0);
}

#[test]
fn negative_wavenumber_conjugates() {
    let space = cube_space(0);
    let opts = AssemblyOptions { quad_order: 4, ..Default::default() };
    let (sp, vp) = assemble_operators(&space, &KernelSpec::helmholtz(1.5), &opts).unwrap();
    let (sm, vm) = assemble_operators(&space, &KernelSpec::helmholtz(-1.5), &opts).unwrap();
    for (p, m) in [(sp, sm), (vp, vm)] {
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                assert!((p[(i, j)].conj() - m[(i, j)]).norm() <= 1e-14 * p[(i, j)].norm().max(1e-300));
            }
        }
    }
}

#[test]
fn separate_and_joint_assembly_agree() {
    let space = cube_space(1);
    let k = KernelSpec::helmholtz(0.8);
    let opts = AssemblyOptions { quad_order: 3, ..Default::default() };
    let (s, v) = assemble_operators(&space, &k, &opts).unwrap();
    let s2 = operator_matrix(&space, &k, OperatorMode::ScalarOnDivergences, &opts).unwrap().matrix;
    let v2 = operator_matrix(&space, &k, OperatorMode::VectorOnFields, &opts).unwrap().matrix;
    assert!(s == s2 && v == v2);
}

#[test]
fn laplace_vector_gram_is_positive_definite() {
    for (f, p) in [(Fixture::Cube, 1), (Fixture::SquareScreen, 2), (Fixture::LScreen, 1)] {
        let mesh = builtin_fixture(f);
        let space = HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, p)).unwrap();
        let v = operator_matrix(&space, &KernelSpec::laplace(), OperatorMode::VectorOnFields, &Default::default())
            .unwrap()
            .matrix;
        let n = v.nrows();
        let re = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (v[(i, j)].re + v[(j, i)].re));
        assert!(re.llt(faer::Side::Lower).is_ok(), "{f:?} p={p}");
    }
}

#[test]
fn memory_guard_refuses_large_matrices() {
    let space = cube_space(2);
    let opts = AssemblyOptions { memory_limit: 1000, ..Default::default() };
    let err = assemble_operators(&space, &KernelSpec::laplace(), &opts).unwrap_err();
    assert!(matches!(err, crate::Error::MemoryGuard { .. }));
    assert_eq!(estimate_bytes(10, 2), 3200);
}

#[test]
fn matrix_dump_round_trips() {
    let m = Mat::<Complex64>::from_fn(3, 3, |i, j| Complex64::new(i as f64 - 0.5, j as f64 * 1e-300));
    let mut buf = Vec::new();
    write_matrix(&mut buf, &m).unwrap();
    assert_eq!(&buf[..8], &MATRIX_MAGIC);
    assert_eq!(buf.len(), 16 + 9 * 16);
    assert!(read_matrix(&buf[..]).unwrap() == m);
    assert!(read_matrix(&buf[..buf.len() - 1]).is_err());
    buf[0] = b'X';
    assert!(read_matrix(&buf[..]).is_err());
}
