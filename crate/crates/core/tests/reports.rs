use proptest::prelude::*;

use wfem::error_norms::{ErrorReport, ErrorSeries, LevelRow};
use wfem::experiments::{
    emit_report, format_report, parse_report, run_bonito, run_convergence_f1, run_interp_demo, ExperimentConfig,
    ExperimentKind,
};
use wfem::special::{bonito_rhs, FracParams};

fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![1e-300..1e-200f64, 1e-12..1.0f64, Just(0.0)]
}

fn series_strategy() -> impl Strategy<Value = ErrorSeries> {
    (0.05..0.95f64, 1u32..5, prop::collection::vec((positive(), positive()), 1..6)).prop_map(|(s, first, errs)| {
        let rows = errs
            .iter()
            .enumerate()
            .map(|(i, &(err_hs, err_l2))| {
                let level = first + i as u32;
                LevelRow { s, level, h: 2.0 / f64::from(1u32 << level), n_dofs: (1 << level) + 1, err_hs, err_l2 }
            })
            .collect();
        ErrorSeries::from_rows(s, rows).unwrap()
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(series in prop::collection::vec(series_strategy(), 0..4)) {
        let mut series = series;
        series.dedup_by(|a, b| a.s == b.s);
        let report = ErrorReport { series, ..ErrorReport::default() };
        let text = format_report(&report);
        prop_assert_eq!(text.lines().count(), 1 + report.rows().count());
        let parsed = parse_report(&text).unwrap();
        prop_assert_eq!(parsed.series, report.series);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        s_values: vec![0.2, 0.6],
        levels: vec![2, 3, 4],
        ..ExperimentConfig::defaults(ExperimentKind::ConvergenceF1)
    };
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        emit_report(&run_convergence_f1(&cfg).unwrap(), p).unwrap();
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn emit_reports_io_errors_with_path() {
    let err = emit_report(&ErrorReport::default(), std::path::Path::new("/nonexistent/dir/r.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/r.csv"), "{err}");
}

#[test]
fn energy_errors_shrink_under_refinement() {
    let cfg = ExperimentConfig { s_values: vec![0.4], ..ExperimentConfig::defaults(ExperimentKind::ConvergenceF1) };
    let report = run_convergence_f1(&cfg).unwrap();
    let rows = &report.series[0].rows;
    assert!(rows.windows(2).all(|w| w[1].err_hs < w[0].err_hs && w[1].err_l2 < w[0].err_l2), "{rows:?}");
}

#[test]
fn parabola_load_is_finite_on_the_shrunk_interval() {
    for s in [0.1, 0.6, 0.9] {
        let p = FracParams::new(s).unwrap();
        let edge = 1.0 - 1e-10;
        for x in [-edge, -0.5, 0.0, 0.999_999, edge] {
            assert!(bonito_rhs(x, &p).unwrap().is_finite(), "s = {s}, x = {x}");
        }
        assert!(bonito_rhs(1.0, &p).is_err());
    }
    let cfg = ExperimentConfig {
        s_values: vec![0.6],
        levels: vec![2, 3],
        ..ExperimentConfig::defaults(ExperimentKind::Bonito)
    };
    let report = run_bonito(&cfg).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
}

#[test]
fn weighted_interpolant_beats_nodal_near_the_boundary() {
    // first run gave a factor of about 1800 at s = 0.4, h = 1/8
    let cfg =
        ExperimentConfig { s_values: vec![0.1, 0.4, 0.6], ..ExperimentConfig::defaults(ExperimentKind::InterpDemo) };
    for p in run_interp_demo(&cfg).unwrap() {
        let factor = p.boundary_sup_error(&p.nodal) / p.boundary_sup_error(&p.weighted_poly4);
        assert!(factor >= 5.0, "s = {}: factor {factor}", p.s);
        if p.s == 0.4 {
            assert!(factor >= 1000.0, "regression: factor {factor}");
        }
    }
}
