use std::io::BufWriter;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{exterior_points, DegreePolicy, MeshSource, StudyConfig};
use super::{Check, Comparison, SuiteReport};
use crate::bem_kernels::{write_matrix, AssemblyOptions};
use crate::efie_system::{
    assemble_efie, assemble_xnorm, extinction_study, quasi_optimality_report, two_path_defect, FieldOptions,
    QuasiOptimalityConfig,
};
use crate::exact;
use crate::global_space::{HpDivSpace, HpScalarSpace};
use crate::interpolation::{
    commuting_defects, curl_commuting_defect, empirical_orders, interpolate_on_chart, interpolate_reference,
    measure_lemma41_rate, InterpolationOptions, LocalElement, RateRow, ScalarFn, SmoothFieldSpec,
};
use crate::mesh::{refine_uniform, AffineChart};
use crate::poincare::{lift_membership_check, poincare_pointed, poincare_smoothed, SmoothingWeight};
use crate::poly::{mono_count, monomials, rat, Poly, Rational};
use crate::ref_elements::{build_edge_space, local_span, local_span_contains_rt, rt_contains, MAX_EXACT_DEGREE};
use crate::{DegreeMap, Error, Result, SurfaceKind, SurfaceMesh};

fn assembly(cfg: &StudyConfig) -> AssemblyOptions {
    AssemblyOptions { quad_order: cfg.quad_order, memory_limit: cfg.memory_limit }
}

/// Meshes of the family with their degree maps.
fn family(cfg: &StudyConfig, base: &SurfaceMesh) -> Result<Vec<(usize, SurfaceMesh, Vec<DegreeMap>)>> {
    let mut out = Vec::new();
    let mut mesh = base.clone();
    for level in 0..cfg.levels {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        let maps = cfg.degree_maps(base, level, &mesh)?;
        out.push((level, mesh.clone(), maps));
    }
    Ok(out)
}

fn uniform_range(cfg: &StudyConfig) -> Result<(usize, usize)> {
    match cfg.degrees {
        DegreePolicy::Uniform { min, max } => Ok((min, max)),
        _ => Err(Error::Config("this suite needs a uniform degree range".into())),
    }
}

fn cutoff(cfg: &StudyConfig, base: &SurfaceMesh) -> ScalarFn {
    match cfg.mesh {
        MeshSource::Fixture(f) => ScalarFn::boundary_cutoff(f),
        MeshSource::Path(_) => ScalarFn::vanishing_on_boundary(base),
    }
}

pub(super) fn algebraic(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    let pm = cfg.p_max;
    let (mut count, mut not_free, mut outside) = (0, 0, 0);
    for pe in 1..=pm.max(1) {
        for e in 0..3 {
            for v in build_edge_space(pe, e).fields() {
                count += 1;
                not_free += usize::from(!v.div().is_zero());
                outside += usize::from(!rt_contains(pe, v));
            }
        }
    }
    let range = format!("{count} generators, p_E = 1..={}", pm.max(1));
    report.push(Check::at_most("edge generators are divergence-free", not_free as f64, t.exact).with_detail(&range));
    report.push(
        Check::at_most("edge generators lie in RT of the edge degree", outside as f64, t.exact).with_detail(range),
    );

    let mut cases = Vec::new();
    for pk in 0..=pm {
        cases.push((pk, [pk; 3]));
        for raise in [[1, 0, 0], [2, 1, 0], [0, 2, 2]] {
            let pe = raise.map(|r| pk + r);
            if pe.iter().all(|&d| d <= MAX_EXACT_DEGREE) {
                cases.push((pk, pe));
            }
        }
    }
    let mut deficit = 0;
    let mut rows = Vec::new();
    for &(pk, pe) in &cases {
        let divs: Vec<Poly<Rational>> = local_span(pk, pe).iter().map(|v| v.div()).collect();
        let top = divs.iter().map(|d| d.degree()).chain([pk]).max().unwrap_or(0);
        let above = divs.iter().filter(|d| !d.is_zero() && d.degree() > pk).count();
        let rank = exact::rank(divs.iter().map(|d| d.coeff_vector(top)).collect(), mono_count(top));
        let d = rank.abs_diff(mono_count(pk)) + above;
        deficit += d;
        rows.push(json!({ "p_K": pk, "p_E": pe, "rank": rank, "dim_P": mono_count(pk), "above_degree": above }));
    }
    report.push(
        Check::at_most("local divergence space equals P of the cell degree", deficit as f64, t.exact)
            .with_detail(format!("{} degree patterns, including raised edge degrees", cases.len())),
    );
    let missing = (0..=pm).filter(|&p| !local_span_contains_rt(p, [p; 3])).count();
    report.push(Check::at_most("uniform local span contains RT", missing as f64, t.exact));
    report.data = json!({ "divergence_rank": rows });
    Ok(())
}

pub(super) fn poincare(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    let w = SmoothingWeight::default();
    w.validate()?;
    let a = [rat(1, 3), rat(1, 3)];
    let (mut pointed, mut smoothed): (f64, f64) = (0.0, 0.0);
    let q_max = 6;
    for (i, j) in monomials(q_max) {
        let u = Poly::monomial(i, j, Rational::one());
        pointed = pointed.max((&poincare_pointed(&u, a.clone()).div() - &u).to_f64().max_abs_coeff());
        smoothed = smoothed.max((&poincare_smoothed(&u, &w).div() - &u).to_f64().max_abs_coeff());
    }
    let detail = format!("all monomials of degree <= {q_max}");
    report.push(Check::at_most("pointed lifting is a right inverse of div", pointed, t.exact).with_detail(&detail));
    report.push(Check::at_most("smoothed lifting is a right inverse of div", smoothed, t.exact).with_detail(detail));

    let mut outside = 0;
    let mut residual: f64 = 0.0;
    let mut rows = Vec::new();
    for p in 0..=cfg.p_max {
        let r = lift_membership_check(p, &w)?;
        let bad = r.checks.iter().filter(|c| !c.member).count();
        outside += bad;
        residual = residual.max(r.max_residual());
        rows.push(json!({ "p": p, "shapes": r.checks.len(), "outside": bad, "max_residual": r.max_residual() }));
    }
    report.push(
        Check::at_most("lifted RT divergences stay in RT", residual, t.exact)
            .with_detail(format!("{outside} non-members for p <= {}", cfg.p_max)),
    );
    report.data = json!({ "weight": w, "membership": rows });
    Ok(())
}

fn random_chart(rng: &mut ChaCha8Rng) -> AffineChart {
    loop {
        let v = [0; 3].map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0)));
        if let Some(c) = AffineChart::from_vertices(v) {
            if c.jacobian > 0.1 {
                return c;
            }
        }
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    if n > 0.0 {
        (d / n).sqrt()
    } else {
        d.sqrt()
    }
}

pub(super) fn interpolation(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    let base = cfg.base_mesh()?;
    let weight = cutoff(cfg, &base);
    let opts = InterpolationOptions::default();
    let (mut div, mut curl, mut x_idem, mut s_idem, mut dropped, mut flux, mut jump) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut active = 0;
    let mut rows = Vec::new();
    for (level, mesh, maps) in family(cfg, &base)? {
        for d in maps {
            let x = HpDivSpace::new(&mesh, &d)?;
            let s = HpScalarSpace::new(&mesh, &d)?;
            let mut row = (0.0f64, 0.0f64);
            for i in 0..cfg.samples as u64 {
                let seed = cfg.seed.wrapping_mul(1000).wrapping_add(i);
                let c = commuting_defects(&x, &SmoothFieldSpec::random_rotated(seed, weight.clone()), &opts)?;
                let (cd, ci) =
                    curl_commuting_defect(&x, &s, &SmoothFieldSpec::random_scalar(seed, weight.clone()), &opts)?;
                row = (row.0.max(c.divergence), row.1.max(cd));
                x_idem = x_idem.max(c.idempotence);
                s_idem = s_idem.max(ci);
                dropped = dropped.max(c.dropped_boundary_flux);
            }
            div = div.max(row.0);
            curl = curl.max(row.1);
            flux = flux.max(x.boundary_flux_defect(6));
            active += (0..mesh.num_edges()).filter(|&e| mesh.is_boundary_edge(e) && x.is_active_edge(e)).count();
            jump = jump.max(x.conformity_defect(6));
            rows.push(json!({
                "level": level,
                "p_min": d.min_cell_degree(),
                "p_max": d.max_degree(),
                "n": x.dim(),
                "div_defect": row.0,
                "curl_defect": row.1,
            }));
        }
    }
    let detail = format!("{} seeded fields per member", cfg.samples);
    report.push(Check::at_most("div-commuting interpolation", div, t.commuting).with_detail(&detail));
    report.push(Check::at_most("curl-commuting interpolation", curl, t.commuting).with_detail(&detail));
    report.push(Check::at_most("X interpolant is a projection", x_idem, t.commuting));
    report.push(Check::at_most("S interpolant is a projection", s_idem, t.commuting));
    report.push(Check::at_most("normal continuity across interior edges", jump, t.commuting));
    if cfg.kind == SurfaceKind::Screen {
        report.push(Check::at_most("no degrees of freedom on boundary edges", active as f64, t.exact));
        report.push(Check::at_most("normal traces vanish on the boundary", flux, t.commuting));
        report.push(Check::at_most("compliant field interpolates into X_N", dropped, t.boundary_flux));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = SmoothFieldSpec::standard_tangential();
    let top = cfg.p_max.min(4);
    let mut pull: f64 = 0.0;
    for _ in 0..cfg.charts {
        let chart = random_chart(&mut rng);
        let pk = rng.random_range(0..=top);
        let pe = [0; 3].map(|_| pk + rng.random_range(0..=1));
        let mut ids = [0usize, 1, 2];
        ids.swap(0, rng.random_range(0..3));
        let el = LocalElement::new(pk, pe, ids);
        let u = |x: crate::geometry::Vec3| field.vector_value(x, chart.normal).unwrap_or([f64::NAN; 3]);
        let phys = interpolate_on_chart(&el, &chart, u, &opts)?;
        let refr = interpolate_reference(&el, |p| chart.piola_pull(u(chart.map(p))), &opts)?;
        pull = pull.max(rel_diff(&phys.coefficients, &refr.coefficients));
    }
    report.push(
        Check::at_most("interpolation commutes with the Piola pullback", pull, t.pullback)
            .with_detail(format!("{} random charts", cfg.charts)),
    );
    report.data = json!({ "members": rows });
    Ok(())
}

/// Fixed smooth tangential field; on screens it is damped to vanish on the
/// boundary so that it lies in the energy space.
fn rate_field(cfg: &StudyConfig, base: &SurfaceMesh) -> SmoothFieldSpec {
    match (SmoothFieldSpec::standard_tangential(), cfg.kind) {
        (SmoothFieldSpec::Rotated { potential, .. }, SurfaceKind::Screen) => {
            SmoothFieldSpec::Rotated { weight: cutoff(cfg, base), potential }
        }
        (f, _) => f,
    }
}

fn csv_rows(out: &mut String, family: &str, rows: &[RateRow]) {
    for r in rows {
        out.push_str(&format!("{family},{:.6e},{},{:.6e},{:.6e}\n", r.h_max, r.p_min, r.l2_error, r.normalized));
    }
}

pub(super) fn rates(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    let base = cfg.base_mesh()?;
    let field = rate_field(cfg, &base);
    let opts = InterpolationOptions::default();
    let h_family: Vec<(SurfaceMesh, DegreeMap)> = family(cfg, &base)?
        .into_iter()
        .map(|(_, m, mut maps)| {
            let d = maps.swap_remove(0);
            (m, d)
        })
        .collect();
    let p_family: Vec<(SurfaceMesh, DegreeMap)> =
        (0..=cfg.p_max).map(|p| (base.clone(), DegreeMap::uniform(&base, p))).collect();
    let h_rows = measure_lemma41_rate(&field, &h_family, &opts)?;
    let p_rows = measure_lemma41_rate(&field, &p_family, &opts)?;
    let orders = empirical_orders(&h_rows);
    // the finest pair; the coarsest screen meshes are pre-asymptotic
    if let Some(&o) = orders.last() {
        let all: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
        report.push(
            Check::new("empirical L2 order of the h-family", o, Comparison::AtLeast, t.rate_order)
                .with_detail(format!("finest of the orders [{}]", all.join(", "))),
        );
    } else {
        report.warnings.push("a single level gives no empirical order".into());
    }
    let norms: Vec<f64> = h_rows.iter().chain(&p_rows).map(|r| r.normalized).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    report.push(
        Check::at_most("normalized interpolation error is bounded", hi / lo, t.rate_spread)
            .with_detail(format!("max/min of err*sqrt((p+1)/h) over {} rows", norms.len())),
    );
    let mut csv = String::from("family,h_max,p_min,l2_error,normalized\n");
    csv_rows(&mut csv, "h", &h_rows);
    csv_rows(&mut csv, "p", &p_rows);
    report.rates_csv = Some(csv);
    report.data = json!({ "h_family": h_rows, "p_family": p_rows, "orders": orders });
    Ok(())
}

pub(super) fn efie_convergence(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    let (min, max) = uniform_range(cfg)?;
    let base = cfg.base_mesh()?;
    let opts = assembly(cfg);

    let mut structure = Vec::new();
    let (mut sym, mut two, mut eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for p in min..=max {
        let space = HpDivSpace::new(&base, &DegreeMap::uniform(&base, p))?;
        let sys = assemble_efie(&space, cfg.k, &opts)?;
        let s = sys.symmetry_defect();
        let tp = two_path_defect(&space, cfg.k, &opts)?;
        let g = assemble_xnorm(&space, &opts)?;
        let e = g.matrix.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|e| Error::Solve(format!("{e:?}")))?;
        let e = e.iter().copied().fold(f64::INFINITY, f64::min);
        sym = sym.max(s);
        two = two.max(tp);
        eig = eig.min(e);
        structure.push(json!({ "p": p, "n": space.dim(), "symmetry": s, "two_path": tp, "xnorm_min_eigenvalue": e }));
        if p == max && cfg.dump_matrix {
            if let Some(dir) = &cfg.out_dir {
                std::fs::create_dir_all(dir)?;
                write_matrix(BufWriter::new(std::fs::File::create(dir.join("matrix.bin"))?), &sys.matrix)?;
            }
        }
    }
    let detail = format!("level 0, p = {min}..={max}, quadrature order {}", cfg.quad_order);
    report.push(Check::at_most("EFIE matrix is complex symmetric", sym, t.symmetry).with_detail(&detail));
    report.push(Check::at_most("two-path assembly identity", two, t.two_path).with_detail(&detail));
    report.push(Check::new("X-norm Gram is positive definite", eig, Comparison::Above, 0.0).with_detail(detail));

    let mut qc = QuasiOptimalityConfig::new(
        (0..cfg.levels).collect(),
        (min..=max).collect(),
        (cfg.levels, max),
        cfg.excitation_or_plane_wave(),
    );
    qc.assembly = opts;
    qc.seed = cfg.seed;
    let q = quasi_optimality_report(&base, &qc)?;
    report.push(
        Check::at_most("quasi-optimality ratio", q.max_ratio(), t.quasi_ratio)
            .with_detail(format!("reference level {} p {}, N = {}", cfg.levels, max, q.reference_n)),
    );
    report.push(Check::at_most(
        "quasi-optimality ratios do not grow monotonically",
        f64::from(u8::from(!q.non_exploding())),
        0.0,
    ));
    report.push(Check::at_most("Galerkin orthogonality", q.max_orthogonality(), t.orthogonality));
    let res = q.rows.iter().map(|r| r.residual).fold(q.reference_residual, f64::max);
    report.push(Check::at_most("solver residual", res, t.residual));
    report.warnings.extend(q.warnings.iter().cloned());
    report.data = json!({ "structure": structure, "quasi_optimality": q });
    Ok(())
}

pub(super) fn extinction(cfg: &StudyConfig, report: &mut SuiteReport) -> Result<()> {
    let t = &cfg.thresholds;
    if cfg.kind != SurfaceKind::Closed {
        return Err(Error::Config("the extinction suite needs a closed surface".into()));
    }
    let (_, p) = uniform_range(cfg)?;
    let base = cfg.base_mesh()?;
    let source = cfg.interior_dipole(&base);
    let points = exterior_points(&base);
    let levels: Vec<usize> = (0..cfg.levels).collect();
    let rows = extinction_study(&base, &levels, p, &source, &points, &assembly(cfg), 10, &FieldOptions::default())?;
    let increases = rows.windows(2).filter(|w| w[1].relative_error >= w[0].relative_error).count();
    report.push(
        Check::at_most("extinction error decreases under refinement", increases as f64, 0.0)
            .with_detail(format!("{} levels at p = {p}", rows.len())),
    );
    if let Some(last) = rows.last() {
        report.push(
            Check::at_most("extinction error at the finest level", last.relative_error, t.extinction)
                .with_detail(format!("level {}, N = {}", last.level, last.n)),
        );
    }
    let res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    report.push(Check::at_most("solver residual", res, t.residual));
    report.data = json!({ "source": source, "points": points, "rows": rows });
    Ok(())
}
