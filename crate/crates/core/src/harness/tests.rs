use super::*;
use crate::interpolation::ScalarFn;
use crate::mesh::{builtin_fixture, refine_uniform, write_mesh, Fixture};
use crate::{DegreeMap, SurfaceKind};

fn small(f: Fixture) -> StudyConfig {
    StudyConfig {
        samples: 2,
        charts: 4,
        p_max: 2,
        degrees: DegreePolicy::Uniform { min: 0, max: 1 },
        ..StudyConfig::fixture(f)
    }
}

#[test]
fn degree_ranges() {
    assert_eq!(DegreePolicy::parse_range("0..2").unwrap(), DegreePolicy::Uniform { min: 0, max: 1 });
    assert_eq!(DegreePolicy::parse_range("1..=3").unwrap(), DegreePolicy::Uniform { min: 1, max: 3 });
    assert_eq!(DegreePolicy::parse_range("2").unwrap(), DegreePolicy::uniform(2));
    for bad in ["", "3..1", "0..0", "a..2", "1..=x"] {
        assert!(DegreePolicy::parse_range(bad).is_err(), "{bad}");
    }
}

#[test]
fn suite_names_round_trip() {
    for s in Suite::ALL {
        assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
    }
    assert!("nonsense".parse::<Suite>().is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small(Fixture::Cube);
    c.levels = 0;
    assert!(c.validate().is_err());
    let mut c = small(Fixture::Cube);
    c.kind = SurfaceKind::Screen;
    assert!(matches!(c.validate(), Err(crate::Error::KindMismatch(_))));
    let c = StudyConfig::from_path("/nonexistent/mesh.txt", SurfaceKind::Closed);
    assert!(c.validate().is_err());
    let mut c = small(Fixture::Cube);
    c.degrees = DegreePolicy::File { path: "/nonexistent/degrees.txt".into() };
    assert!(c.validate().is_err());
    let mut c = small(Fixture::Cube);
    c.k = 0.0;
    assert!(c.validate().is_err());
    let mut c = small(Fixture::Cube);
    c.degrees = DegreePolicy::Graded { edge: 0, p_min: 3, p_max: 1 };
    assert!(c.validate().is_err());
    assert!(run_suite(&small(Fixture::SquareScreen), Suite::Extinction).is_err());
}

#[test]
fn refined_members_inherit_file_and_graded_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deg.txt");
    std::fs::write(&path, "0\n1\n").unwrap();
    let base = builtin_fixture(Fixture::SquareScreen);
    let fine = refine_uniform(&refine_uniform(&base));
    let mut c = small(Fixture::SquareScreen);
    c.degrees = DegreePolicy::File { path };
    let d = c.degree_maps(&base, 2, &fine).unwrap().remove(0);
    assert_eq!(d.cell_degree.iter().filter(|&&p| p == 1).count(), 16);
    assert_eq!(d.cell_degree[..16], [0; 16]);

    let cube = builtin_fixture(Fixture::Cube);
    c.degrees = DegreePolicy::Graded { edge: 0, p_min: 1, p_max: 3 };
    let g = DegreeMap::graded_toward_edge(&cube, 0, 1, 3).unwrap();
    let fine = refine_uniform(&cube);
    let d = c.degree_maps(&cube, 1, &fine).unwrap().remove(0);
    for (cell, p) in d.cell_degree.iter().enumerate() {
        assert_eq!(*p, g.cell_degree[cell / 4]);
    }
}

#[test]
fn generic_cutoff_vanishes_on_screen_boundaries() {
    for f in [Fixture::SquareScreen, Fixture::LScreen] {
        let m = builtin_fixture(f);
        let w = ScalarFn::vanishing_on_boundary(&m);
        for e in m.edges() {
            let [a, b] = e.vertices.map(|v| m.vertices()[v]);
            let mid = [0, 1, 2].map(|i| 0.3 * a[i] + 0.7 * b[i]);
            if e.is_boundary() {
                assert!(w.value(mid).abs() < 1e-15, "{f:?}");
            } else if f == Fixture::SquareScreen {
                assert!(w.value(mid).abs() > 1e-6);
            }
        }
    }
    assert_eq!(ScalarFn::vanishing_on_boundary(&builtin_fixture(Fixture::Cube)), ScalarFn::Constant(1.0));
}

#[test]
fn exact_suites_pass() {
    let c = small(Fixture::Cube);
    for s in [Suite::Algebraic, Suite::Poincare] {
        let r = run_suite(&c, s).unwrap();
        assert!(r.passed, "{:?}", r.first_failure);
        assert!(r.checks.iter().all(|c| c.measured == 0.0));
    }
}

#[test]
fn interpolation_suite_on_a_loaded_screen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.mesh");
    std::fs::write(&path, write_mesh(&builtin_fixture(Fixture::LScreen))).unwrap();
    let mut c = StudyConfig::from_path(&path, SurfaceKind::Screen);
    c.samples = 2;
    c.charts = 4;
    c.degrees = DegreePolicy::Graded { edge: 0, p_min: 0, p_max: 2 };
    let r = run_suite(&c, Suite::Interpolation).unwrap();
    assert!(r.passed, "{:?}", r.first_failure);
    assert!(r.check("no degrees of freedom on boundary edges").is_some());
}

#[test]
fn reports_are_reproducible_and_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Fixture::SquareScreen);
    c.levels = 2;
    c.out_dir = Some(dir.path().to_path_buf());
    let a = run_suite(&c, Suite::Rates).unwrap();
    let first = std::fs::read(dir.path().join("report.json")).unwrap();
    run_suite(&c, Suite::Rates).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("report.json")).unwrap());
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(csv.starts_with("family,h_max,p_min,l2_error,normalized\n"));
    assert_eq!(csv.lines().count(), 1 + 2 + 3);
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["suite"], "rates");
    assert_eq!(v["checks"].as_array().unwrap().len(), a.checks.len());
}

#[test]
fn failing_check_sets_exit_code_and_names_identity() {
    let mut c = small(Fixture::Cube);
    c.degrees = DegreePolicy::uniform(0);
    c.thresholds.extinction = 1e-6;
    let r = run_suite(&c, Suite::Extinction).unwrap();
    assert!(!r.passed);
    assert_eq!(r.exit_code(), 1);
    assert!(r.first_failure.unwrap().starts_with("extinction error at the finest level"));
}

#[test]
fn efie_suite_dumps_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Fixture::SquareScreen);
    c.degrees = DegreePolicy::uniform(0);
    c.dump_matrix = true;
    c.out_dir = Some(dir.path().to_path_buf());
    let r = run_suite(&c, Suite::EfieConvergence).unwrap();
    assert!(r.check("two-path assembly identity").unwrap().passed);
    let m = crate::bem_kernels::read_matrix(std::fs::File::open(dir.path().join("matrix.bin")).unwrap()).unwrap();
    assert_eq!(m.nrows(), 1);
}
