use super::*;
use crate::geometry::Vec3;
use crate::global_space::DofKind;
use crate::mesh::{builtin_fixture, refine_uniform, DegreeMap, Fixture};
use crate::quadrature::TriangleRule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(f: Fixture, level: usize, p: usize) -> HpDivSpace {
    let mesh = crate::mesh::refine_levels(&builtin_fixture(f), level);
    HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, p)).unwrap()
}

fn center_dipole() -> Excitation {
    Excitation::dipole([0.45, 0.55, 0.5], [0.3, -0.5, 0.8], 1.0)
}

fn oblique_wave() -> Excitation {
    let d = [1.0 / 3f64.sqrt(); 3];
    let e = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    Excitation::plane_wave(d, e, 1.0)
}

#[test]
fn zero_excitations_give_zero_loads() {
    let s = space(Fixture::Cube, 0, 1);
    for exc in [oblique_wave().scaled(0.0), center_dipole().scaled(0.0)] {
        assert!(rhs_excitation(&s, &exc, 8).unwrap().iter().all(|z| z.norm() == 0.0));
    }
    let b1 = rhs_excitation(&s, &oblique_wave(), 8).unwrap();
    let b2 = rhs_excitation(&s, &oblique_wave().scaled(-2.5), 8).unwrap();
    assert!(b1.iter().zip(&b2).all(|(a, b)| (a * -2.5 - b).norm() <= 1e-15 * a.norm().max(1.0)));
}

#[test]
fn normally_polarized_wave_does_not_load_a_flat_screen() {
    let s = space(Fixture::SquareScreen, 1, 2);
    let exc = Excitation::plane_wave([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 2.0);
    assert!(rhs_excitation(&s, &exc, 8).unwrap().iter().all(|z| z.norm() < 1e-16));
}

#[test]
fn invalid_excitations_are_rejected() {
    let mesh = builtin_fixture(Fixture::Cube);
    assert!(Excitation::plane_wave([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0).validate(None).is_err());
    assert!(Excitation::plane_wave([2.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0).validate(None).is_err());
    assert!(Excitation::plane_wave([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.0).validate(None).is_err());
    assert!(Excitation::dipole([0.5, 0.5, 0.01], [1.0, 0.0, 0.0], 1.0).validate(Some(&mesh)).is_err());
    assert!(center_dipole().validate(Some(&mesh)).is_ok());
}

/// Adaptive quadrature on the reference triangle by recursive 4-splitting.
fn adaptive<F: Fn([f64; 2]) -> Complex64>(f: &F, tri: [[f64; 2]; 3], depth: usize) -> Complex64 {
    let rule = TriangleRule::new(6);
    let area2 =
        ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1])).abs();
    let on = |t: [[f64; 2]; 3]| -> Complex64 {
        let a2 = ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1])).abs();
        rule.iter()
            .map(|(p, w)| {
                let x = [0, 1].map(|i| t[0][i] + p[0] * (t[1][i] - t[0][i]) + p[1] * (t[2][i] - t[0][i]));
                f(x) * (w * a2)
            })
            .sum()
    };
    let m = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let (m01, m12, m20) = (m(tri[0], tri[1]), m(tri[1], tri[2]), m(tri[2], tri[0]));
    let kids = [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m01, m12, m20]];
    let whole = on(tri);
    let parts: Complex64 = kids.iter().map(|&t| on(t)).sum();
    if depth == 0 || (whole - parts).norm() < 1e-14 * area2.max(1e-300).sqrt() {
        parts
    } else {
        kids.iter().map(|&t| adaptive(f, t, depth - 1)).sum()
    }
}

#[test]
fn dipole_loads_match_adaptive_quadrature() {
    let s = space(Fixture::Cube, 0, 1);
    let exc = center_dipole();
    let b = rhs_excitation(&s, &exc, 10).unwrap();
    let mut oracle = vec![Complex64::new(0.0, 0.0); s.dim()];
    for cell in 0..s.mesh().num_cells() {
        let chart = s.chart(cell);
        for (k, &g) in s.cell(cell).dofs.iter().enumerate() {
            let f = |p: [f64; 2]| {
                let e = exc.field(chart.map(p));
                let v = s.cell_values(cell, p).0[k];
                -(e[0] * v[0] + e[1] * v[1] + e[2] * v[2]) * chart.jacobian
            };
            oracle[g] += adaptive(&f, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 6);
        }
    }
    let scale = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (a, o) in b.iter().zip(&oracle) {
        assert!((a - o).norm() <= 1e-9 * scale, "{a} vs {o}");
    }
}

#[test]
fn dipole_field_matches_finite_differences_of_the_kernel() {
    let (x0, m, k) = ([0.1, -0.2, 0.3], [0.4, 1.0, -0.7], 1.7);
    let x = [1.2, 0.4, -0.5];
    let kern = crate::bem_kernels::KernelSpec::helmholtz(k);
    let h = 1e-3;
    // (k² + ∇∇·)(G m) with ∇·(G m) = m·∇G
    let div = |y: Vec3| {
        let g = kern.gradient(y, x0);
        g[0] * m[0] + g[1] * m[1] + g[2] * m[2]
    };
    let e = dipole_field(x0, m, k, x);
    for i in 0..3 {
        let (mut yp, mut ym) = (x, x);
        yp[i] += h;
        ym[i] -= h;
        let fd = kern.eval(x, x0) * (k * k * m[i]) + (div(yp) - div(ym)) / (2.0 * h);
        assert!((fd - e[i]).norm() < 1e-6 * e[i].norm().max(1e-3), "{fd} vs {}", e[i]);
    }
}

#[test]
fn perturbed_identity_is_solved_exactly() {
    let n = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = Mat::<Complex64>::from_fn(n, n, |i, j| {
        Complex64::new(
            if i == j { 1.0 } else { 0.0 } + 0.05 * rng.random_range(-1.0..1.0),
            0.05 * rng.random_range(-1.0..1.0),
        )
    });
    let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
    let sys = EfieSystem::from_matrix(a, 1.0, 6).unwrap();
    let b = sys.apply(&x);
    let sol = sys.solve(&b).unwrap();
    assert!(sol.residual <= 1e-14);
    assert!(sol.cond_estimate >= 1.0 && sol.cond_estimate < 10.0);
    for (u, v) in sol.coefficients.iter().zip(&x) {
        assert!((u - v).norm() <= 1e-12 * v.norm().max(1.0));
    }
    assert!(EfieSystem::from_matrix(Mat::zeros(2, 3), 1.0, 6).is_err());
    let singular = EfieSystem::from_matrix(Mat::zeros(3, 3), 1.0, 6).unwrap();
    assert!(singular.solve(&[Complex64::new(1.0, 0.0); 3]).is_err());
}

#[test]
fn condition_estimate_matches_dense_inverse() {
    let n = 25;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = Mat::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let lu = a.partial_piv_lu();
    let inv = lu.solve(Mat::<Complex64>::identity(n, n));
    let one = |m: &Mat<Complex64>| (0..n).map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let exact = one(&a) * one(&inv);
    let est = condition_estimate(&a, &lu);
    assert!(est <= exact * (1.0 + 1e-12) && est >= exact / 10.0, "{est} vs {exact}");
}

#[test]
fn cube_plane_wave_solve() {
    let s = space(Fixture::Cube, 0, 0);
    let sys = assemble_efie(&s, 1.0, &AssemblyOptions::default()).unwrap();
    let b = rhs_excitation(&s, &oblique_wave(), 10).unwrap();
    let sol = sys.solve(&b).unwrap();
    assert!(sol.residual <= 1e-10);
    assert!(galerkin_orthogonality(&sys, &b, &sol.coefficients, 20, 1) <= 1e-9);
    assert!(sys.symmetry_defect() <= 1e-8);
    assert!(assemble_efie(&s, 0.0, &AssemblyOptions::default()).is_err());
}

#[test]
fn divergence_block_factorizes() {
    for (f, p) in [(Fixture::Cube, 0), (Fixture::Cube, 2), (Fixture::LScreen, 1)] {
        let d = two_path_defect(&space(f, 0, p), 1.0, &AssemblyOptions::default()).unwrap();
        assert!(d <= 1e-12, "{f:?} p={p}: {d}");
    }
}

#[test]
fn divergence_block_vanishes_on_edge_generators() {
    let s = space(Fixture::Cube, 0, 2);
    let (sd, mv) = efie_blocks(&s, 0.5, &AssemblyOptions::default()).unwrap();
    let top = (0..s.dim()).map(|i| sd[(i, i)].norm()).fold(0.0, f64::max);
    let gens: Vec<usize> =
        (0..s.dim()).filter(|&i| matches!(s.dof_kinds()[i], DofKind::EdgeGenerator { .. })).collect();
    assert!(!gens.is_empty());
    for &i in &gens {
        for j in 0..s.dim() {
            assert!(sd[(i, j)].norm() <= 1e-13 * top);
        }
        assert!(mv[(i, i)].re > 0.0);
    }
}

#[test]
fn xnorm_gram_properties() {
    let s = space(Fixture::Cube, 0, 1);
    let g = assemble_xnorm(&s, &AssemblyOptions::default()).unwrap();
    let n = s.dim();
    assert_eq!(g.norm(&vec![Complex64::new(0.0, 0.0); n]), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let v2: Vec<Complex64> = v.iter().map(|z| z * 2.0).collect();
    assert!((g.norm(&v2).powi(2) - 4.0 * g.norm(&v).powi(2)).abs() <= 1e-12 * g.norm(&v2).powi(2));
    // divergence-free vectors only see the vector block
    let m = crate::bem_kernels::operator_matrix(
        &s,
        &crate::bem_kernels::KernelSpec::laplace(),
        crate::bem_kernels::OperatorMode::VectorOnFields,
        &AssemblyOptions::default(),
    )
    .unwrap()
    .matrix;
    let z: Vec<f64> =
        (0..n)
            .map(|i| {
                if matches!(s.dof_kinds()[i], DofKind::EdgeGenerator { .. }) {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
    let vm: f64 = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re * z[j]).sum::<f64>() * z[i]).sum();
    assert!((g.quadratic(&z) - vm).abs() <= 1e-12 * vm);
    for (f, p) in [(Fixture::SquareScreen, 2), (Fixture::LScreen, 1)] {
        assert!(assemble_xnorm(&space(f, 1, p), &AssemblyOptions::default()).is_ok());
    }
}

#[test]
fn reciprocity_holds() {
    let s = space(Fixture::Cube, 0, 1);
    let sys = assemble_efie(&s, 1.0, &AssemblyOptions::default()).unwrap();
    let (ep, eq) = (oblique_wave(), center_dipole());
    let (bp, bq) = (rhs_excitation(&s, &ep, 10).unwrap(), rhs_excitation(&s, &eq, 10).unwrap());
    let (up, uq) = (sys.solve(&bp).unwrap().coefficients, sys.solve(&bq).unwrap().coefficients);
    assert!(reciprocity_defect(&bp, &bq, &up, &uq) <= 1e-8);
}

#[test]
fn scattered_field_basics() {
    let s = space(Fixture::Cube, 0, 1);
    let n = s.dim();
    let pts = [[2.0, 0.5, 0.5], [0.5, -1.0, 0.3]];
    let zero = scattered_field(&s, &vec![Complex64::new(0.0, 0.0); n], &pts, 1.0, &FieldOptions::default()).unwrap();
    assert!(zero.iter().flatten().all(|z| z.norm() == 0.0));
    assert!(matches!(
        scattered_field(&s, &vec![Complex64::new(1.0, 0.0); n], &[[0.5, 0.5, 1.01]], 1.0, &FieldOptions::default()),
        Err(Error::TooClose(_))
    ));
    // linearity and the vector Helmholtz equation by second differences
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let k = 1.3;
    let x = [1.9, 0.2, 0.7];
    let h = 2e-2;
    let mut stencil = vec![x];
    for i in 0..3 {
        for sgn in [-1.0, 1.0, -2.0, 2.0] {
            let mut y = x;
            y[i] += sgn * h;
            stencil.push(y);
        }
    }
    let e = scattered_field(&s, &c, &stencil, k, &FieldOptions::default()).unwrap();
    let c2: Vec<Complex64> = c.iter().map(|z| z * Complex64::new(0.0, 3.0)).collect();
    let e2 = scattered_field(&s, &c2, &stencil[..1], k, &FieldOptions::default()).unwrap();
    for i in 0..3 {
        assert!((e2[0][i] - e[0][i] * Complex64::new(0.0, 3.0)).norm() <= 1e-13 * e2[0][i].norm());
        let mut lap = Complex64::new(0.0, 0.0);
        for dir in 0..3 {
            let b = 1 + 4 * dir;
            // fourth-order central second difference
            lap += (-e[b + 3][i] + e[b + 1][i] * 16.0 - e[0][i] * 30.0 + e[b][i] * 16.0 - e[b + 2][i]) / (12.0 * h * h);
        }
        let res = lap + e[0][i] * (k * k);
        assert!(res.norm() <= 1e-5 * (e[0][i] * (k * k)).norm().max(1e-3), "{res}");
    }
}

#[test]
fn prolongation_reproduces_coarse_fields() {
    for (f, p) in [(Fixture::Cube, 1), (Fixture::LScreen, 2)] {
        let coarse = space(f, 0, p);
        let fine = space(f, 2, p + 1);
        let prol = prolongation(&coarse, &fine, &Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c: Vec<f64> = (0..coarse.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fc: Vec<f64> = (0..fine.dim()).map(|i| (0..coarse.dim()).map(|j| prol[(i, j)] * c[j]).sum()).collect();
        for cell in (0..fine.mesh().num_cells()).step_by(5) {
            let pt = [0.2, 0.3];
            let x = fine.chart(cell).map(pt);
            let (uf, df) = fine.evaluate_field(&fc, cell, pt).unwrap();
            let cc = cell / 16;
            let q = coarse.chart(cc).pull_point(x);
            let (uc, dc) = coarse.evaluate_field(&c, cc, q).unwrap();
            for i in 0..3 {
                assert!((uf[i] - uc[i]).abs() < 1e-11, "{f:?}");
            }
            assert!((df - dc).abs() < 1e-10 * dc.abs().max(1.0));
        }
    }
    let bad = refine_uniform(&builtin_fixture(Fixture::SquareScreen));
    let bad = HpDivSpace::new(&bad, &DegreeMap::uniform(&bad, 0)).unwrap();
    assert!(prolongation(&space(Fixture::Cube, 0, 0), &bad, &Default::default()).is_err());
}

#[test]
fn quasi_optimality_small_family() {
    let cfg = QuasiOptimalityConfig::new(vec![0, 1], vec![0, 1], (1, 1), oblique_wave());
    let r = quasi_optimality_report(&builtin_fixture(Fixture::Cube), &cfg).unwrap();
    assert_eq!(r.rows.len(), 4);
    for row in &r.rows {
        assert!(row.orthogonality <= 1e-9);
        if (row.level, row.p) == (1, 1) {
            assert!(row.ratio.is_none() && row.error < 1e-10 && row.best < 1e-10);
        } else {
            assert!(row.best <= row.error * (1.0 + 1e-9), "{row:?}");
            assert!(row.ratio.unwrap() < 10.0);
        }
    }
    assert!(r.best_monotone());
    let bad = QuasiOptimalityConfig::new(vec![2], vec![0], (1, 1), oblique_wave());
    assert!(quasi_optimality_report(&builtin_fixture(Fixture::Cube), &bad).is_err());
}

#[test]
fn extinction_improves_with_refinement() {
    let pts: Vec<Vec3> =
        vec![[2.0, 0.5, 0.5], [-1.0, 0.5, 0.5], [0.5, 2.0, 0.5], [0.5, -1.0, 0.5], [0.5, 0.5, 2.0], [0.5, 0.5, -1.0]];
    let rows = extinction_study(
        &builtin_fixture(Fixture::Cube),
        &[0, 1],
        1,
        &center_dipole(),
        &pts,
        &AssemblyOptions::default(),
        10,
        &FieldOptions::default(),
    )
    .unwrap();
    eprintln!("{rows:?}");
    assert!(rows[1].relative_error < rows[0].relative_error);
}
