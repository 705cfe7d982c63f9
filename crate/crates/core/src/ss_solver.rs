//! Block Hankel pencil extraction of eigenpairs from resolvent moments, gap
//! based eigenvalue counting and residual evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, DenseMatrix};
use crate::probing::{hankel_pair, reduced_moments_mapped, ProbeTable};
use crate::problems::NepProblem;
use crate::sampling::{Region, SamplingMode, SamplingSet};
use crate::C64;

pub const DEFAULT_TOL_GAP: f64 = 1e3;

/// Relative truncation used when no gap is found.
pub const FALLBACK_REL_TOL: f64 = 1e-12;

/// Largest problem dimension accepted by [`ss_full`] by default.
pub const DEFAULT_FULL_CAP: usize = 2000;

/// Reported value for ratios against an exactly zero singular value.
pub const RATIO_CAP: f64 = 1e300;

/// Ratios starting below this multiple of `σ₁` are rounding noise.
pub const GAP_NOISE_FLOOR: f64 = 1e-15;

/// Relative slack (times the region diameter) for flagging eigenvalues inside.
pub const INSIDE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub singular_values: Vec<f64>,
    /// Largest successive ratio `σⱼ / σⱼ₊₁`.
    pub g_max: f64,
    /// Number of singular values before the largest gap, or the fallback
    /// truncation count when the gap is not accepted.
    pub count: usize,
    pub accepted: bool,
    pub tol_gap: f64,
}

/// Picks the eigenvalue count at the largest successive singular value ratio;
/// the first index wins ties.
pub fn detect_count(sigma: &[f64], tol_gap: f64) -> Result<GapReport> {
    if sigma.len() < 2 {
        return Err(Error::invalid("gap detection needs at least two singular values"));
    }
    if !(tol_gap > 1.0) {
        return Err(Error::invalid(format!("tol_gap must exceed 1, got {tol_gap}")));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) || sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::invalid("singular values must be nonnegative and nonincreasing"));
    }
    let s1 = sigma[0];
    if s1 == 0.0 {
        return Err(Error::EmptySpectrum);
    }
    let mut g_max = 0.0f64;
    let mut argmax = 0usize;
    for j in 0..sigma.len() - 1 {
        if sigma[j] < GAP_NOISE_FLOOR * s1 {
            break;
        }
        let ratio = if sigma[j + 1] == 0.0 {
            RATIO_CAP
        } else {
            (sigma[j] / sigma[j + 1]).min(RATIO_CAP)
        };
        if ratio > g_max {
            g_max = ratio;
            argmax = j;
        }
    }
    let accepted = g_max >= tol_gap;
    let count = if accepted {
        argmax + 1
    } else {
        sigma.iter().take_while(|&&s| s > FALLBACK_REL_TOL * s1).count()
    };
    Ok(GapReport {
        singular_values: sigma.to_vec(),
        g_max,
        count,
        accepted,
        tol_gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SsRi,
    SsCi,
    SsFull,
    Rsrr,
    RsrrMoment,
    RsrrTwoStage,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::SsRi => "ss-ri",
            Algorithm::SsCi => "ss-ci",
            Algorithm::SsFull => "ss-full",
            Algorithm::Rsrr => "rsrr",
            Algorithm::RsrrMoment => "rsrr-moment",
            Algorithm::RsrrTwoStage => "rsrr-two-stage",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub n_points: usize,
    pub l: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub tol_gap: f64,
}

/// Truncation diagnostics of a Rayleigh-Ritz search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub scheme: String,
    pub rank: usize,
    pub delta: f64,
    pub normalized: bool,
    /// All singular values divided by the largest.
    pub scaled_singular_values: Vec<f64>,
    /// `σ₁/σ_last` of the raw (unnormalized) sampling matrix, when available.
    pub raw_condition: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EigResult {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm eigenvectors as columns.
    pub eigenvectors: DenseMatrix,
    /// `‖T(λ)v‖₂ / ‖v‖₂`.
    pub residuals: Vec<f64>,
    pub weighted_residuals: Option<Vec<f64>>,
    pub inside: Vec<bool>,
    pub gap: GapReport,
    pub provenance: Provenance,
    pub subspace: Option<SubspaceReport>,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn accepted(&self) -> bool {
        self.gap.accepted
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn inside_eigenvalues(&self) -> Vec<C64> {
        self.eigenvalues.iter().zip(&self.inside).filter(|(_, &i)| i).map(|(l, _)| *l).collect()
    }

    /// Largest residual over eigenvalues flagged inside; 0 if there are none.
    pub fn max_inside_residual(&self) -> f64 {
        self.residuals.iter().zip(&self.inside).filter(|(_, &i)| i).map(|(r, _)| *r).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Recomputes inside flags against another region.
    pub fn reflag(&mut self, region: &Region) {
        self.inside = self.eigenvalues.iter().map(|&l| region.contains(l, INSIDE_TOL)).collect();
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j)
    }
}

/// `‖T(λ) v‖₂ / ‖v‖₂`.
pub fn residual(problem: &NepProblem, lambda: C64, v: &[C64]) -> Result<f64> {
    let vn = kernels::vec_norm(v);
    if vn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let r = problem.apply(lambda, &DenseMatrix::from_column(v)?)?;
    Ok(r.norm_fro() / vn)
}

/// `‖T(λ) v‖₂ / (Σⱼ |fⱼ(λ)| ‖Aⱼ‖₁ ‖v‖₂)` for split forms.
pub fn weighted_residual(problem: &NepProblem, lambda: C64, v: &[C64]) -> Result<f64> {
    let scale = problem
        .weighted_scale(lambda)
        .ok_or_else(|| Error::invalid("weighted residuals need a split-form problem"))?;
    Ok(residual(problem, lambda, v)? / scale)
}

/// Residuals for each pair; `f64::MAX` where `T(λ)` cannot be evaluated.
pub(crate) fn residuals_for(problem: &NepProblem, values: &[C64], vectors: &DenseMatrix) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let pairs: Vec<(f64, Option<f64>)> = values
        .par_iter()
        .enumerate()
        .map(|(j, &l)| {
            let v = vectors.column(j);
            let r = match residual(problem, l, &v) {
                Ok(r) => r,
                Err(Error::SingularPoint { .. }) => f64::MAX,
                Err(e) => return Err(e),
            };
            let w = problem.weighted_scale(l).map(|s| if r == f64::MAX { r } else { r / s });
            Ok((r, w))
        })
        .collect::<Result<_>>()?;
    let residuals = pairs.iter().map(|p| p.0).collect();
    let weighted = if problem.is_split() {
        Some(pairs.iter().map(|p| p.1.unwrap_or(f64::MAX)).collect())
    } else {
        None
    };
    Ok((residuals, weighted))
}

/// Orders eigenpairs by ascending `|λ|`.
pub(crate) fn sort_by_modulus(values: Vec<C64>, vectors: DenseMatrix) -> (Vec<C64>, DenseMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .norm()
            .total_cmp(&values[b].norm())
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let sorted_vals = order.iter().map(|&i| values[i]).collect();
    let cols: Vec<DenseMatrix> = order.iter().map(|&i| vectors.columns(i, 1)).collect();
    let sorted_vecs = if cols.is_empty() {
        DenseMatrix::zeros(vectors.nrows(), 0)
    } else {
        DenseMatrix::hstack(&cols.iter().collect::<Vec<_>>()).expect("same height")
    };
    (sorted_vals, sorted_vecs)
}

fn normalize_columns(v: &DenseMatrix) -> DenseMatrix {
    let factors: Vec<f64> = (0..v.ncols())
        .map(|j| {
            let n = v.column_norm(j);
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    v.scale_columns(&factors)
}

/// Eigenvalues and Ritz vectors from a probe table (steps after the solves).
pub fn ss_solve(problem: &NepProblem, table: &ProbeTable, sampling: &SamplingSet, k: usize, tol_gap: f64) -> Result<EigResult> {
    let algorithm = match sampling.mode() {
        SamplingMode::ContourQuadrature => Algorithm::SsCi,
        SamplingMode::BarycentricInterpolation => Algorithm::SsRi,
    };
    ss_pipeline(problem, table, sampling, k, tol_gap, algorithm)
}

fn ss_pipeline(
    problem: &NepProblem,
    table: &ProbeTable,
    sampling: &SamplingSet,
    k: usize,
    tol_gap: f64,
    algorithm: Algorithm,
) -> Result<EigResult> {
    let map = sampling.moment_map();
    let moments = reduced_moments_mapped(table, sampling, k, map)?;
    let pencil = hankel_pair(&moments)?;
    let size = pencil.h.ncols();
    let svd = kernels::leading_svd(&pencil.h, size)?;
    let sigma = svd.all_singular_values.clone();
    let gap = if sigma.len() == 1 {
        if sigma[0] == 0.0 {
            return Err(Error::EmptySpectrum);
        }
        GapReport {
            singular_values: sigma.clone(),
            g_max: RATIO_CAP,
            count: 1,
            accepted: true,
            tol_gap,
        }
    } else {
        detect_count(&sigma, tol_gap)?
    };
    if !gap.accepted {
        log::warn!("no singular value gap above {tol_gap} (largest {:.3e}); truncating at {FALLBACK_REL_TOL:e}", gap.g_max);
    }
    let m = gap.count;
    let v0 = svd.left.columns(0, m);
    let w0 = svd.right.columns(0, m);
    let inv_sigma: Vec<f64> = sigma[..m].iter().map(|s| 1.0 / s).collect();
    let w0_scaled = w0.scale_columns(&inv_sigma);
    let reduced = v0.adjoint().matmul(&pencil.h_shift)?.matmul(&w0_scaled)?;
    let eig = kernels::dense_eig(&reduced)?;
    let values: Vec<C64> = eig.values.iter().map(|&z| map.to_global(z)).collect();
    let vectors = normalize_columns(&moments.stacked_vectors()?.matmul(&w0_scaled)?.matmul(&eig.vectors)?);
    let (values, vectors) = sort_by_modulus(values, vectors);
    let (residuals, weighted_residuals) = residuals_for(problem, &values, &vectors)?;
    let inside = match sampling.region() {
        Some(r) => values.iter().map(|&l| r.contains(l, INSIDE_TOL)).collect(),
        None => vec![true; values.len()],
    };
    Ok(EigResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        weighted_residuals,
        inside,
        gap,
        provenance: Provenance {
            algorithm,
            n_points: sampling.len(),
            l: table.width(),
            k,
            seed: Some(table.seed()),
            tol_gap,
        },
        subspace: None,
    })
}

/// Variant with `U = I`, for small problems such as projected ones.
pub fn ss_full(problem: &NepProblem, sampling: &SamplingSet, k: usize, tol_gap: f64) -> Result<EigResult> {
    ss_full_capped(problem, sampling, k, tol_gap, DEFAULT_FULL_CAP)
}

pub fn ss_full_capped(problem: &NepProblem, sampling: &SamplingSet, k: usize, tol_gap: f64, cap: usize) -> Result<EigResult> {
    let n = problem.dimension();
    if n > cap {
        return Err(Error::invalid(format!("full probing of dimension {n} exceeds cap {cap}")));
    }
    if 2 * k > sampling.len() {
        return Err(Error::OrderTooHigh {
            twice_k: 2 * k,
            n: sampling.len(),
        });
    }
    let table = ProbeTable::with_probe(problem, sampling.points(), DenseMatrix::identity(n), 0)?;
    let mut result = ss_pipeline(problem, &table, sampling, k, tol_gap, Algorithm::SsFull)?;
    result.provenance.seed = None;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{loaded_string, quadratic, ScalarFunction, Term};
    use crate::sampling::{chebyshev_points, ellipse_trapezoid, Region};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag_linear(roots: &[f64]) -> NepProblem {
        NepProblem::split(
            "diag",
            vec![
                Term::new(ScalarFunction::monomial(1.0, 1), DenseMatrix::identity(roots.len())),
                Term::new(ScalarFunction::constant(-1.0), DenseMatrix::diag(roots)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn gap_examples() {
        let g = detect_count(&[1.0, 0.5, 1e-9, 1e-10], 1e3).unwrap();
        assert_eq!(g.count, 2);
        assert!((g.g_max - 5e8).abs() < 1.0);
        assert!(g.accepted);
        let g = detect_count(&[1.0, 0.9, 0.8], 1e3).unwrap();
        assert!(!g.accepted);
        assert!((g.g_max - 0.9 / 0.8).abs() < 1e-12);
        let g = detect_count(&[1.0, 1e-4, 1e-8, 1e-9], 1e3).unwrap();
        assert_eq!(g.count, 1);
    }

    #[test]
    fn zero_tail_is_capped() {
        let g = detect_count(&[1.0, 0.5, 0.0], 1e3).unwrap();
        assert_eq!(g.count, 2);
        assert_eq!(g.g_max, RATIO_CAP);
        assert!(matches!(detect_count(&[0.0, 0.0], 1e3), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn scalar_pole_on_interval() {
        let p = diag_linear(&[3.0]);
        let s = chebyshev_points(&Region::interval(0.0, 10.0).unwrap(), 16).unwrap();
        let t = ProbeTable::make(&p, &s, 1, 1).unwrap();
        let r = ss_solve(&p, &t, &s, 1, DEFAULT_TOL_GAP).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.eigenvalues[0] - 3.0).norm() <= 1e-8);
        assert!(r.residuals[0] <= 1e-8);
        assert_eq!(r.provenance.algorithm, Algorithm::SsRi);
    }

    #[test]
    fn full_probe_on_diagonal() {
        let p = diag_linear(&[1.0, 5.0]);
        let s = chebyshev_points(&Region::interval(0.0, 10.0).unwrap(), 16).unwrap();
        let r = ss_full(&p, &s, 2, DEFAULT_TOL_GAP).unwrap();
        assert!(r.accepted());
        let got: Vec<f64> = r.inside_eigenvalues().iter().map(|z| z.re).collect();
        assert_eq!(got.len(), 2);
        assert!((got[0] - 1.0).abs() < 1e-8 && (got[1] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn weight_scaling_leaves_eigenvalues() {
        let p = quadratic(DenseMatrix::identity(3), DenseMatrix::diag(&[0.1, 0.2, 0.3]), DenseMatrix::diag(&[-1.0, -4.0, -9.0])).unwrap();
        let s = ellipse_trapezoid(&Region::ellipse(c(2.0, 0.0), 2.5, 1.0).unwrap(), 64).unwrap();
        let a = ss_full(&p, &s, 2, DEFAULT_TOL_GAP).unwrap();
        let b = ss_full(&p, &s.with_scaled_weights(c(-3.7, 2.1)).unwrap(), 2, DEFAULT_TOL_GAP).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() <= 1e-10 * x.norm());
        }
    }

    #[test]
    fn exact_pair_has_zero_residual() {
        let p = diag_linear(&[2.0, 7.0]);
        assert!(residual(&p, c(2.0, 0.0), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap() <= 1e-15);
        assert!(matches!(residual(&p, c(2.0, 0.0), &[c(0.0, 0.0); 2]), Err(Error::ZeroVector)));
    }

    #[test]
    fn rotated_vector_residual() {
        // T(λ) = diag(λ − 1, λ − 4) at λ = 1: residual of (cos θ, sin θ) is 3 sin θ.
        let p = diag_linear(&[1.0, 4.0]);
        for theta in [0.1f64, 0.5, 1.2] {
            let v = [c(theta.cos(), 0.0), c(theta.sin(), 0.0)];
            let r = residual(&p, c(1.0, 0.0), &v).unwrap();
            assert!((r - 3.0 * theta.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_residual_bound() {
        let p = diag_linear(&[1.0, 4.0]);
        let v = [c(0.6, 0.0), c(0.8, 0.0)];
        let lambda = c(2.0, 0.5);
        let r = residual(&p, lambda, &v).unwrap();
        let w = weighted_residual(&p, lambda, &v).unwrap();
        let t_norm = kernels::singular_values(&p.evaluate(lambda).unwrap()).unwrap()[0];
        assert!(w <= r / t_norm * (1.0 + 1e-14));
        assert!(weighted_residual(&p.as_black_box(), lambda, &v).is_err());
    }

    #[test]
    fn small_string_by_ss_ri() {
        let p = loaded_string(20).unwrap();
        let region = Region::interval(3.0, 1000.0).unwrap();
        let s = chebyshev_points(&region, 64).unwrap();
        let t = ProbeTable::make(&p, &s, 8, 5).unwrap();
        let r = ss_solve(&p, &t, &s, 8, DEFAULT_TOL_GAP).unwrap();
        assert!(r.accepted());
        assert!(r.inside_count() >= 1);
        assert!(r.max_inside_residual() < 1e-8, "{}", r.max_inside_residual());
        for w in r.eigenvalues.windows(2) {
            assert!(w[0].norm() <= w[1].norm());
        }
    }
}
