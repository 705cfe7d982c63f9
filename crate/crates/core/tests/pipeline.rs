use std::fs;

use nep_core::io::{
    execute, load_config, load_split_problem, read_result, write_matrix_market, write_metadata, write_results,
    ResultRecord, RunMetadata,
};
use nep_core::probing::ProbeTable;
use nep_core::problems::{loaded_string, ScalarFunction, TermMatrix};
use nep_core::rsrr::{rsrr_solve, RsrrParams};
use nep_core::sampling::{chebyshev_points, Region};
use nep_core::ss_solver::ss_solve;
use nep_core::{DenseMatrix, C64};

fn sorted_inside(values: Vec<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().map(|z| z.re).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn config_file_to_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        r#"
algorithm = "rsrr"
N = 60

[problem]
builtin = "loaded_string"
n = 100

[region]
kind = "interval"
a = 3.0
b = 10000.0

[output]
directory = "out"
prefix = "string"
"#,
    )
    .unwrap();
    let cfg = load_config(&config).unwrap();
    let run = execute(&cfg).unwrap();
    assert!(run.result.accepted());
    assert_eq!(run.result.inside_count(), 31);
    assert!(run.result.max_inside_residual() <= 1e-8);

    let paths = cfg.output_paths();
    assert!(paths.eigenpairs_json.starts_with(dir.path()));
    let record = ResultRecord::from_result(&run.result);
    write_results(&record, &paths).unwrap();
    write_metadata(&RunMetadata::new(&cfg, &run), &paths.metadata_json).unwrap();
    let back = read_result(&paths.eigenpairs_json).unwrap();
    assert_eq!(back, record);
    let moduli: Vec<f64> = back.eigenvalues().iter().map(|z| z.norm()).collect();
    assert!(moduli.windows(2).all(|w| w[0] <= w[1]));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(&paths.metadata_json).unwrap()).unwrap();
    assert_eq!(meta["config"]["N"], 60);
}

#[test]
fn ss_ri_and_rsrr_agree() {
    let problem = loaded_string(50).unwrap();
    let region = Region::interval(3.0, 1500.0).unwrap();
    let ss_points = chebyshev_points(&region, 64).unwrap();
    let table = ProbeTable::make(&problem, &ss_points, 8, 3).unwrap();
    let ss = ss_solve(&problem, &table, &ss_points, 8, 1e3).unwrap();
    let rr = rsrr_solve(&problem, &chebyshev_points(&region, 40).unwrap(), &RsrrParams::default()).unwrap();
    let (a, b) = (sorted_inside(ss.inside_eigenvalues()), sorted_inside(rr.inside_eigenvalues()));
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-7 * y.abs(), "{x} vs {y}");
    }
}

#[test]
fn extended_table_reuses_old_samples() {
    let problem = loaded_string(30).unwrap();
    let region = Region::interval(3.0, 500.0).unwrap();
    let s = chebyshev_points(&region, 10).unwrap();
    let table = ProbeTable::make(&problem, &s, 2, 9).unwrap();
    let extra = [C64::new(100.5, 0.0), C64::new(250.25, 0.0)];
    let bigger = table.extended(&problem, &extra).unwrap();
    assert_eq!(bigger.len(), 12);
    assert_eq!(bigger.probe(), table.probe());
    for i in 0..10 {
        assert_eq!(bigger.sample(i), table.sample(i));
    }
}

#[test]
fn split_problem_from_matrix_market_files() {
    let dir = tempfile::tempdir().unwrap();
    let roots = [1.0, 2.0, 3.0, 4.0, 5.0];
    let a = dir.path().join("a.mtx");
    let b = dir.path().join("b.mtx");
    write_matrix_market(&a, &TermMatrix::Dense(DenseMatrix::diag(&roots))).unwrap();
    write_matrix_market(&b, &TermMatrix::Dense(DenseMatrix::identity(5))).unwrap();
    let problem = load_split_problem(
        "pencil",
        &[a, b],
        &[ScalarFunction::constant(-1.0), ScalarFunction::monomial(1.0, 1)],
    )
    .unwrap();
    let region = Region::interval(1.5, 4.5).unwrap();
    let r = rsrr_solve(&problem, &chebyshev_points(&region, 8).unwrap(), &RsrrParams::default()).unwrap();
    let found = sorted_inside(r.inside_eigenvalues());
    assert_eq!(found.len(), 3);
    for (x, y) in found.iter().zip([2.0, 3.0, 4.0]) {
        assert!((x - y).abs() <= 1e-12);
    }
}
