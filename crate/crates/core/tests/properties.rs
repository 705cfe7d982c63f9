use nep_core::kernels::orthonormality_error;
use nep_core::probing::ProbeTable;
use nep_core::problems::{NepProblem, ScalarFunction, Term};
use nep_core::rsrr::{build_subspace_moments, build_subspace_sampling_with, rsrr_solve, RsrrParams, DEFAULT_DELTA};
use nep_core::sampling::{chebyshev_points, Region};
use nep_core::{DenseMatrix, C64};
use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, ProptestConfig};

fn pencil(roots: &[f64]) -> NepProblem {
    NepProblem::split(
        "pencil",
        vec![
            Term::new(ScalarFunction::constant(-1.0), DenseMatrix::diag(roots)),
            Term::new(ScalarFunction::monomial(1.0, 1), DenseMatrix::identity(roots.len())),
        ],
    )
    .unwrap()
}

/// `‖(I − QQᴴ) Y‖_F / ‖Y‖_F`
fn outside_span(q: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let back = q.matmul(&q.adjoint().matmul(y).unwrap()).unwrap();
    y.sub(&back).unwrap().norm_fro() / y.norm_fro()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampling_basis_is_orthonormal_and_spans_samples(
        roots in prop::collection::vec(0.5f64..20.0, 6..30),
        n in 2usize..10,
        l in 1usize..4,
        seed in 0u64..1000,
    ) {
        let problem = pencil(&roots);
        let region = Region::interval(0.0, 21.0).unwrap();
        let s = chebyshev_points(&region, n).unwrap();
        let table = ProbeTable::make(&problem, &s, l, seed).unwrap();
        let basis = build_subspace_sampling_with(&table, DEFAULT_DELTA, true).unwrap();
        prop_assert!(basis.rank() <= (n * l).min(roots.len()));
        prop_assert!(orthonormality_error(&basis.q) <= 1e-12);
        for i in 0..n {
            prop_assert!(outside_span(&basis.q, table.sample(i).unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn column_normalization_keeps_the_span(
        roots in prop::collection::vec(0.5f64..20.0, 12..24),
        n in 2usize..6,
        seed in 0u64..1000,
    ) {
        let problem = pencil(&roots);
        let s = chebyshev_points(&Region::interval(0.0, 21.0).unwrap(), n).unwrap();
        let table = ProbeTable::make(&problem, &s, 2, seed).unwrap();
        let scaled = build_subspace_sampling_with(&table, DEFAULT_DELTA, true).unwrap();
        let raw = build_subspace_sampling_with(&table, DEFAULT_DELTA, false).unwrap();
        prop_assert_eq!(scaled.rank(), raw.rank());
        prop_assert!(outside_span(&scaled.q, &raw.q) <= 1e-8);
    }

    #[test]
    fn moment_basis_lies_in_sampling_span(
        roots in prop::collection::vec(0.5f64..20.0, 10..20),
        n in 3usize..8,
        seed in 0u64..1000,
    ) {
        let problem = pencil(&roots);
        let s = chebyshev_points(&Region::interval(0.0, 21.0).unwrap(), n).unwrap();
        let table = ProbeTable::make(&problem, &s, 1, seed).unwrap();
        let sampling = build_subspace_sampling_with(&table, DEFAULT_DELTA, true).unwrap();
        let moments = build_subspace_moments(&table, &s, n, DEFAULT_DELTA).unwrap();
        prop_assert!(moments.rank() <= sampling.rank());
        prop_assert!(outside_span(&sampling.q, &moments.q) <= 1e-8);
    }

    #[test]
    fn rsrr_recovers_pencil_roots(
        roots in prop::collection::vec(1.0f64..9.0, 3..12),
        seed in 0u64..1000,
    ) {
        let mut sorted = roots.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume_distinct(&sorted)?;
        let problem = pencil(&roots);
        let region = Region::interval(0.0, 10.0).unwrap();
        let s = chebyshev_points(&region, roots.len() + 4).unwrap();
        let params = RsrrParams { seed, ..RsrrParams::default() };
        let r = rsrr_solve(&problem, &s, &params).unwrap();
        let mut found: Vec<f64> = r.inside_eigenvalues().iter().map(|z: &C64| z.re).collect();
        found.sort_by(f64::total_cmp);
        prop_assert_eq!(found.len(), sorted.len());
        for (x, y) in found.iter().zip(&sorted) {
            prop_assert!((x - y).abs() <= 1e-9 * y);
        }
    }
}

fn prop_assume_distinct(sorted: &[f64]) -> Result<(), proptest::test_runner::TestCaseError> {
    if sorted.windows(2).any(|w| w[1] - w[0] < 1e-3) {
        Err(proptest::test_runner::TestCaseError::reject("clustered roots"))
    } else {
        Ok(())
    }
}
