//! Resolvent sampling Rayleigh-Ritz: an orthonormal search space from the
//! sampled resolvent blocks, projection of the problem onto it, solution of the
//! small projected problem by full probing and lifting of the eigenvectors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, DenseMatrix};
use crate::probing::ProbeTable;
use crate::problems::{NepProblem, Term, TermMatrix};
use crate::sampling::{Region, SamplingSet};
use crate::ss_solver::{self, Algorithm, EigResult, SubspaceReport, DEFAULT_TOL_GAP, INSIDE_TOL};
use crate::C64;

pub const DEFAULT_DELTA: f64 = 1e-14;
pub const DEFAULT_INNER_POINTS: usize = 500;
pub const DEFAULT_INNER_ORDER: usize = 2;
pub const DEFAULT_INTERPOLATION_DEGREE: usize = 40;

/// Largest relative error of a projected interpolant at its validation points.
pub const INTERPOLATION_TOL: f64 = 1e-8;

/// Relative distance below which two stage-one eigenvalues are merged.
pub const DEDUP_TOL: f64 = 1e-8;

/// New points closer than this multiple of the region diameter to an existing
/// point are dropped.
pub const GUARD_RING: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Span of the raw blocks `S = [Y₀, …, Y_{N−1}]`.
    Sampling,
    /// Span of the moments `[M₀, …, M_{K−1}]`.
    Moment,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Sampling => "sampling",
            Scheme::Moment => "moment",
        }
    }
}

/// Orthonormal search space and the singular values it was truncated from.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub q: DenseMatrix,
    /// Every singular value of the (normalized) collected matrix.
    pub singular_values: Vec<f64>,
    pub delta: f64,
    pub scheme: Scheme,
    pub normalized: bool,
    /// `σ₁ / σ_last` of the collected matrix before column normalization.
    pub raw_condition: Option<f64>,
}

impl SubspaceBasis {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn scaled_singular_values(&self) -> Vec<f64> {
        let s1 = self.singular_values[0];
        self.singular_values.iter().map(|s| s / s1).collect()
    }

    /// `σ₁ / σ_last` of the matrix the basis was computed from.
    pub fn condition(&self) -> f64 {
        let last = *self.singular_values.last().expect("nonempty");
        if last == 0.0 {
            f64::INFINITY
        } else {
            self.singular_values[0] / last
        }
    }

    pub fn report(&self) -> SubspaceReport {
        SubspaceReport {
            scheme: self.scheme.name().to_string(),
            rank: self.rank(),
            delta: self.delta,
            normalized: self.normalized,
            scaled_singular_values: self.scaled_singular_values(),
            raw_condition: self.raw_condition,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn condition_of(sigma: &[f64]) -> f64 {
    match sigma.last() {
        Some(&last) if last > 0.0 => sigma[0] / last,
        _ => f64::INFINITY,
    }
}

fn orthonormal_basis(collected: DenseMatrix, delta: f64, scheme: Scheme, normalize: bool) -> Result<SubspaceBasis> {
    check_delta(delta)?;
    let (matrix, raw_condition) = if normalize {
        let raw = condition_of(&kernels::singular_values(&collected)?);
        let factors: Vec<f64> = (0..collected.ncols())
            .map(|j| {
                let n = collected.column_norm(j);
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        (collected.scale_columns(&factors), Some(raw))
    } else {
        (collected, None)
    };
    let svd = match kernels::truncated_svd(&matrix, delta) {
        Ok(s) => s,
        Err(Error::EmptySpectrum) => return Err(Error::RankCollapse),
        Err(e) => return Err(e),
    };
    if svd.rank() == 0 {
        return Err(Error::RankCollapse);
    }
    Ok(SubspaceBasis {
        q: svd.left,
        singular_values: svd.all_singular_values,
        delta,
        scheme,
        normalized: normalize,
        raw_condition,
    })
}

/// Basis of `span S` with unit-norm columns of `S` before the SVD.
pub fn build_subspace_sampling(table: &ProbeTable, delta: f64) -> Result<SubspaceBasis> {
    build_subspace_sampling_with(table, delta, true)
}

pub fn build_subspace_sampling_with(table: &ProbeTable, delta: f64, normalize: bool) -> Result<SubspaceBasis> {
    orthonormal_basis(table.stacked()?, delta, Scheme::Sampling, normalize)
}

/// `M = [M₀, …, M_{K−1}]` with `M_α = Σᵢ ωᵢ ζᵢ^α Yᵢ`, i.e. `M = S Z`.
pub fn moment_matrix(table: &ProbeTable, sampling: &SamplingSet, k: usize) -> Result<DenseMatrix> {
    if table.len() != sampling.len() {
        return Err(Error::dims(format!("{} samples", sampling.len()), format!("{} samples", table.len())));
    }
    if k == 0 || k > sampling.len() {
        return Err(Error::invalid(format!("moment count K must lie in 1..={}, got {k}", sampling.len())));
    }
    let map = sampling.moment_map();
    let l = table.width();
    let live: Vec<usize> = (0..table.len()).filter(|&i| table.sample(i).is_some()).collect();
    let z = DenseMatrix::from_fn(live.len() * l, k * l, |r, c| {
        let (i, a) = (live[r / l], r % l);
        let (alpha, b) = (c / l, c % l);
        if a == b {
            sampling.weights()[i] * map.to_local(sampling.points()[i]).powu(alpha as u32)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    table.stacked()?.matmul(&z)
}

/// Basis of `span M` through the same normalization and truncation.
pub fn build_subspace_moments(table: &ProbeTable, sampling: &SamplingSet, k: usize, delta: f64) -> Result<SubspaceBasis> {
    orthonormal_basis(moment_matrix(table, sampling, k)?, delta, Scheme::Moment, true)
}

/// Accuracy of a Chebyshev interpolant of a black-box projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub degree: usize,
    pub validation_error: f64,
}

/// `T_Q(z) = Qᴴ T(z) Q`.
#[derive(Clone, Debug)]
pub struct ProjectedNep {
    pub problem: NepProblem,
    pub interpolation: Option<InterpolationReport>,
}

impl ProjectedNep {
    pub fn dimension(&self) -> usize {
        self.problem.dimension()
    }
}

/// Projects split forms term by term; black-box problems are interpolated on
/// `degree + 1` Chebyshev points of the region's major axis.
pub fn project(problem: &NepProblem, q: &DenseMatrix, region: &Region, degree: Option<usize>) -> Result<ProjectedNep> {
    if q.nrows() != problem.dimension() {
        return Err(Error::dims(format!("{} rows", problem.dimension()), format!("{} rows", q.nrows())));
    }
    if let Some(terms) = problem.terms() {
        let projected = terms
            .iter()
            .map(|t| {
                Ok(Term {
                    functions: t.functions.clone(),
                    matrix: TermMatrix::Dense(t.matrix.project(q)?.into_real_if_exact()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(ProjectedNep {
            problem: NepProblem::split(format!("{} (projected)", problem.name()), projected)?,
            interpolation: None,
        });
    }
    interpolate_projection(problem, q, region, degree.unwrap_or(DEFAULT_INTERPOLATION_DEGREE))
}

struct ChebyshevInterpolant {
    mid: C64,
    half: C64,
    coefficients: Vec<DenseMatrix>,
}

impl ChebyshevInterpolant {
    fn eval(&self, z: C64) -> DenseMatrix {
        let t = (z - self.mid) / self.half;
        let k = self.coefficients[0].nrows();
        let mut b1 = DenseMatrix::zeros(k, k);
        let mut b2 = DenseMatrix::zeros(k, k);
        for c in self.coefficients.iter().skip(1).rev() {
            let mut b0 = c.clone();
            b0.add_scaled(2.0 * t, &b1).expect("same shape");
            b0.add_scaled(C64::new(-1.0, 0.0), &b2).expect("same shape");
            b2 = b1;
            b1 = b0;
        }
        let mut out = self.coefficients[0].clone();
        out.add_scaled(t, &b1).expect("same shape");
        out.add_scaled(C64::new(-1.0, 0.0), &b2).expect("same shape");
        out
    }
}

/// Held-out points inside the region, off the interpolation nodes.
fn validation_points(region: &Region) -> Vec<C64> {
    let (a, b) = region.major_segment();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let across = match *region {
        Region::Interval { .. } => C64::new(0.0, 0.0),
        Region::Ellipse { a: ea, b: eb, .. } => {
            if ea >= eb {
                C64::new(0.0, eb)
            } else {
                C64::new(ea, 0.0)
            }
        }
        Region::Rectangle {
            lower_left,
            upper_right,
        } => {
            let w = upper_right.re - lower_left.re;
            let h = upper_right.im - lower_left.im;
            if w >= h {
                C64::new(0.0, 0.5 * h)
            } else {
                C64::new(0.5 * w, 0.0)
            }
        }
    };
    [(-0.83, 0.3), (-0.37, -0.2), (0.11, 0.1), (0.52, -0.3), (0.91, 0.2)]
        .iter()
        .map(|&(s, r)| mid + s * half + r * across)
        .collect()
}

fn interpolate_projection(problem: &NepProblem, q: &DenseMatrix, region: &Region, degree: usize) -> Result<ProjectedNep> {
    if degree == 0 {
        return Err(Error::invalid("interpolation degree must be at least 1"));
    }
    let (a, b) = region.major_segment();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let qh = q.adjoint();
    let sample = |z: C64| -> Result<DenseMatrix> { qh.matmul(&problem.evaluate(z)?.matmul(q)?) };
    let m = degree + 1;
    let angles: Vec<f64> = (0..m).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / m as f64).collect();
    let values = angles
        .iter()
        .map(|&th| sample(mid + th.cos() * half))
        .collect::<Result<Vec<_>>>()?;
    let k = q.ncols();
    let coefficients: Vec<DenseMatrix> = (0..m)
        .map(|deg| {
            let mut c = DenseMatrix::zeros(k, k);
            let scale = if deg == 0 { 1.0 } else { 2.0 } / m as f64;
            for (v, &th) in values.iter().zip(&angles) {
                c.add_scaled(C64::new(scale * (deg as f64 * th).cos(), 0.0), v).expect("same shape");
            }
            c
        })
        .collect();
    let interpolant = ChebyshevInterpolant {
        mid,
        half,
        coefficients,
    };
    let mut worst = 0.0f64;
    for z in validation_points(region) {
        let exact = sample(z)?;
        let err = interpolant.eval(z).sub(&exact)?.norm_fro() / exact.norm_fro().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    if !(worst <= INTERPOLATION_TOL) {
        return Err(Error::InterpolationInaccurate { degree, error: worst });
    }
    let interpolant = Arc::new(interpolant);
    let problem = NepProblem::black_box(
        format!("{} (projected, degree {degree})", problem.name()),
        k,
        false,
        Vec::new(),
        move |z| Ok(interpolant.eval(z)),
        None,
    );
    Ok(ProjectedNep {
        problem,
        interpolation: Some(InterpolationReport {
            degree,
            validation_error: worst,
        }),
    })
}

/// Full-probing solve of the projected problem on a contour around the region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerParams {
    pub points: usize,
    pub order: usize,
    /// Replaces the region's default contour when set.
    #[serde(default)]
    pub contour: Option<SamplingSet>,
}

impl Default for InnerParams {
    fn default() -> Self {
        Self {
            points: DEFAULT_INNER_POINTS,
            order: DEFAULT_INNER_ORDER,
            contour: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsrrParams {
    pub l: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Moment count for the moment scheme; the number of points when unset.
    pub moment_order: Option<usize>,
    pub delta: f64,
    pub tol_gap: f64,
    pub normalize: bool,
    pub inner: InnerParams,
    pub interpolation_degree: Option<usize>,
}

impl Default for RsrrParams {
    fn default() -> Self {
        Self {
            l: 1,
            seed: 1,
            scheme: Scheme::Sampling,
            moment_order: None,
            delta: DEFAULT_DELTA,
            tol_gap: DEFAULT_TOL_GAP,
            normalize: true,
            inner: InnerParams::default(),
            interpolation_degree: None,
        }
    }
}

fn region_of(sampling: &SamplingSet) -> Result<Region> {
    sampling
        .region()
        .copied()
        .ok_or_else(|| Error::invalid("the sampling set must carry a target region"))
}

/// Probes at every sampling point, then runs [`rsrr_from_table`].
pub fn rsrr_solve(problem: &NepProblem, sampling: &SamplingSet, params: &RsrrParams) -> Result<EigResult> {
    let table = ProbeTable::make(problem, sampling, params.l, params.seed)?;
    rsrr_from_table(problem, &table, sampling, params)
}

pub fn rsrr_from_table(problem: &NepProblem, table: &ProbeTable, sampling: &SamplingSet, params: &RsrrParams) -> Result<EigResult> {
    let region = region_of(sampling)?;
    let basis = match params.scheme {
        Scheme::Sampling => build_subspace_sampling_with(table, params.delta, params.normalize)?,
        Scheme::Moment => {
            let k = params.moment_order.unwrap_or(sampling.len());
            build_subspace_moments(table, sampling, k, params.delta)?
        }
    };
    let projected = project(problem, &basis.q, &region, params.interpolation_degree)?;
    let contour = match &params.inner.contour {
        Some(c) => c.clone(),
        None => region.default_contour(params.inner.points)?,
    };
    let inner = ss_solver::ss_full(&projected.problem, &contour, params.inner.order, params.tol_gap)?;
    let lifted = basis.q.matmul(&inner.eigenvectors)?;
    let norms: Vec<f64> = (0..lifted.ncols())
        .map(|j| {
            let n = lifted.column_norm(j);
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    let vectors = lifted.scale_columns(&norms);
    let (residuals, weighted_residuals) = ss_solver::residuals_for(problem, &inner.eigenvalues, &vectors)?;
    let inside = inner.eigenvalues.iter().map(|&l| region.contains(l, INSIDE_TOL)).collect();
    let (algorithm, k) = match params.scheme {
        Scheme::Sampling => (Algorithm::Rsrr, params.inner.order),
        Scheme::Moment => (Algorithm::RsrrMoment, params.moment_order.unwrap_or(sampling.len())),
    };
    Ok(EigResult {
        eigenvalues: inner.eigenvalues,
        eigenvectors: vectors,
        residuals,
        weighted_residuals,
        inside,
        gap: inner.gap,
        provenance: ss_solver::Provenance {
            algorithm,
            n_points: sampling.len(),
            l: table.width(),
            k,
            seed: Some(table.seed()),
            tol_gap: params.tol_gap,
        },
        subspace: Some(basis.report()),
    })
}

#[derive(Clone, Debug)]
pub struct TwoStageResult {
    pub stage1: EigResult,
    pub stage2: EigResult,
    /// Stage-one eigenvalues appended as sampling points.
    pub added_points: Vec<C64>,
    pub sampling: SamplingSet,
}

/// Inside-region eigenvalues, merged within [`DEDUP_TOL`] and kept only if
/// clear of every existing point by [`GUARD_RING`] times the diameter.
pub fn refinement_points(stage1: &EigResult, existing: &[C64], region: &Region) -> Vec<C64> {
    let guard = GUARD_RING * region.diameter();
    let mut out: Vec<C64> = Vec::new();
    for &l in &stage1.inside_eigenvalues() {
        let duplicate = out.iter().any(|&p| (p - l).norm() <= DEDUP_TOL * l.norm().max(p.norm()));
        let collides = existing.iter().chain(&out).any(|&p| (p - l).norm() <= guard);
        if !duplicate && !collides {
            out.push(l);
        }
    }
    out
}

/// Solves once on `stage1`, appends the distinct inside eigenvalues as
/// sampling points and solves again, reusing the stage-one probes.
pub fn rsrr_two_stage(problem: &NepProblem, stage1: &SamplingSet, params: &RsrrParams) -> Result<TwoStageResult> {
    let region = region_of(stage1)?;
    let table = ProbeTable::make(problem, stage1, params.l, params.seed)?;
    let first = rsrr_from_table(problem, &table, stage1, params)?;
    let added = refinement_points(&first, stage1.points(), &region);
    if added.is_empty() {
        return Err(Error::Stage1Empty);
    }
    let sampling = stage1.extended(&added)?;
    let table = table.extended(problem, &added)?;
    let mut second = rsrr_from_table(problem, &table, &sampling, params)?;
    second.provenance.algorithm = Algorithm::RsrrTwoStage;
    Ok(TwoStageResult {
        stage1: first,
        stage2: second,
        added_points: added,
        sampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probing::gaussian_matrix;
    use crate::problems::{gun_form, loaded_string, quadratic, rational_damping, ScalarFunction};
    use crate::sampling::{chebyshev_points, rectangle_gauss, Capacity};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag_pencil(roots: &[f64]) -> NepProblem {
        NepProblem::split(
            "diag",
            vec![
                Term::new(ScalarFunction::constant(-1.0), DenseMatrix::diag(roots)),
                Term::new(ScalarFunction::monomial(1.0, 1), DenseMatrix::identity(roots.len())),
            ],
        )
        .unwrap()
    }

    fn symmetric(n: usize, seed: u64, shift: f64) -> DenseMatrix {
        let g = gaussian_matrix(n, n, true, seed);
        let mut s = g.matmul(&g.adjoint()).unwrap().scaled(c(1.0 / n as f64, 0.0));
        s.add_scaled(c(shift, 0.0), &DenseMatrix::identity(n)).unwrap();
        s.into_real_if_exact()
    }

    #[test]
    fn single_point_basis_is_normalized_sample() {
        let p = diag_pencil(&[1.0, 2.0, 3.0]);
        let s = SamplingSet::barycentric(vec![c(1.5, 0.0)], Capacity::Fixed(1.0), None).unwrap();
        let t = ProbeTable::make(&p, &s, 1, 3).unwrap();
        let b = build_subspace_sampling(&t, DEFAULT_DELTA).unwrap();
        assert_eq!(b.rank(), 1);
        let y = t.sample(0).unwrap();
        let overlap: C64 = (0..3).map(|i| b.q.get(i, 0).conj() * y.get(i, 0)).sum();
        assert!((overlap.norm() - y.norm_fro()).abs() <= 1e-14 * y.norm_fro());
    }

    #[test]
    fn duplicated_block_keeps_rank() {
        let p = diag_pencil(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let u = gaussian_matrix(6, 1, true, 4);
        let once = ProbeTable::with_probe(&p, &[c(0.5, 0.0), c(2.5, 0.0)], u.clone(), 4).unwrap();
        let twice = ProbeTable::with_probe(&p, &[c(0.5, 0.0), c(2.5, 0.0), c(0.5, 0.0)], u, 4).unwrap();
        let a = build_subspace_sampling(&once, 1e-12).unwrap();
        let b = build_subspace_sampling(&twice, 1e-12).unwrap();
        assert_eq!(a.rank(), b.rank());
        assert!(kernels::orthonormality_error(&b.q) <= 1e-12);
    }

    fn span_gap(q: &DenseMatrix, x: &DenseMatrix) -> f64 {
        let proj = q.matmul(&q.adjoint().matmul(x).unwrap()).unwrap();
        x.sub(&proj).unwrap().norm_fro() / x.norm_fro()
    }

    #[test]
    fn moment_span_matches_sampling_span() {
        let p = diag_pencil(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let region = Region::interval(0.0, 11.0).unwrap();
        let s = chebyshev_points(&region, 4).unwrap();
        let t = ProbeTable::make(&p, &s, 2, 9).unwrap();
        let bs = build_subspace_sampling(&t, 1e-12).unwrap();
        let bm = build_subspace_moments(&t, &s, 4, 1e-12).unwrap();
        assert_eq!(bs.rank(), bm.rank());
        assert!(span_gap(&bs.q, &bm.q) <= 1e-8);
        let m = moment_matrix(&t, &s, 2).unwrap();
        assert!(span_gap(&bs.q, &m) <= 1e-8);
        let one = build_subspace_moments(&t, &s, 1, 1e-12).unwrap();
        assert!(one.rank() <= 2);
    }

    #[test]
    fn identity_projection_reproduces_problem() {
        let p = loaded_string(6).unwrap();
        let region = Region::interval(3.0, 100.0).unwrap();
        let proj = project(&p, &DenseMatrix::identity(6), &region, None).unwrap();
        for z in [c(4.0, 0.5), c(50.0, -3.0)] {
            let d = proj.problem.evaluate(z).unwrap().max_abs_diff(&p.evaluate(z).unwrap());
            assert!(d <= 1e-12);
        }
    }

    #[test]
    fn eigenvector_projection_is_scalar_problem() {
        let p = diag_pencil(&[2.0, 5.0, 7.0]);
        let q = DenseMatrix::from_rows(&[vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        let region = Region::interval(0.0, 10.0).unwrap();
        let proj = project(&p, &q, &region, None).unwrap();
        assert_eq!(proj.dimension(), 1);
        assert!(proj.problem.evaluate(c(5.0, 0.0)).unwrap().get(0, 0).norm() <= 1e-15);
    }

    fn small_gun() -> NepProblem {
        let k = symmetric(6, 11, 2.0);
        let m = symmetric(6, 12, 1.0);
        let w1 = symmetric(6, 13, 0.0).scaled(c(0.1, 0.0));
        let w2 = symmetric(6, 14, 0.0).scaled(c(0.05, 0.0));
        gun_form(k, m, vec![w1, w2], &[0.0, 0.3]).unwrap()
    }

    #[test]
    fn split_projection_matches_pointwise() {
        let p = small_gun();
        let q = kernels::truncated_svd(&gaussian_matrix(6, 4, false, 21), 1e-12).unwrap().left;
        let region = Region::rectangle(c(0.5, 0.0), c(2.0, 0.5)).unwrap();
        let proj = project(&p, &q, &region, None).unwrap();
        let zs = gaussian_matrix(10, 1, false, 22);
        for i in 0..10 {
            let z = c(1.0, 0.2) + 0.3 * zs.get(i, 0);
            let direct = q.adjoint().matmul(&p.evaluate(z).unwrap().matmul(&q).unwrap()).unwrap();
            let d = proj.problem.evaluate(z).unwrap().max_abs_diff(&direct);
            assert!(d <= 1e-12 * direct.norm_max(), "{d}");
        }
    }

    #[test]
    fn black_box_interpolation() {
        let m = DenseMatrix::identity(4);
        let cm = DenseMatrix::diag(&[0.1, 0.2, 0.1, 0.3]);
        let k = DenseMatrix::diag(&[-1.0, -2.0, -3.0, -4.0]);
        let p = quadratic(m, cm, k).unwrap();
        let region = Region::interval(0.5, 2.5).unwrap();
        let q = kernels::truncated_svd(&gaussian_matrix(4, 3, true, 5), 1e-12).unwrap().left;
        let bb = p.as_black_box();
        let proj = project(&bb, &q, &region, Some(4)).unwrap();
        assert!(proj.interpolation.unwrap().validation_error <= 1e-12);
        let z = c(1.7, 0.3);
        let direct = q.adjoint().matmul(&p.evaluate(z).unwrap().matmul(&q).unwrap()).unwrap();
        assert!(proj.problem.evaluate(z).unwrap().max_abs_diff(&direct) <= 1e-12);
        let sqrt = small_gun().as_black_box();
        let rect = Region::rectangle(c(0.5, 0.01), c(2.0, 0.5)).unwrap();
        let err = project(&sqrt, &DenseMatrix::identity(6), &rect, Some(1)).unwrap_err();
        assert!(matches!(err, Error::InterpolationInaccurate { degree: 1, .. }));
    }

    #[test]
    fn rsrr_on_coarse_string() {
        let p = loaded_string(100).unwrap();
        let region = Region::interval(3.0, 1e4).unwrap();
        let s = chebyshev_points(&region, 60).unwrap();
        let r = rsrr_solve(&p, &s, &RsrrParams::default()).unwrap();
        assert!(r.accepted());
        assert_eq!(r.inside_count(), 31);
        assert!(r.max_inside_residual() <= 1e-8, "{}", r.max_inside_residual());
        assert!(kernels::orthonormality_error(&r.eigenvectors.columns(0, 1)) <= 1e-12);
        assert_eq!(r.subspace.as_ref().unwrap().scheme, "sampling");
    }

    #[test]
    fn eigenvalue_free_region_has_no_accepted_pairs() {
        let p = diag_pencil(&[1.0, 2.0, 3.0, 4.0]);
        let region = Region::interval(10.0, 20.0).unwrap();
        let s = chebyshev_points(&region, 12).unwrap();
        let r = rsrr_solve(&p, &s, &RsrrParams::default()).unwrap();
        assert!(!r.accepted() || r.inside_count() == 0);
    }

    #[test]
    fn dedup_and_guard_ring() {
        let p = diag_pencil(&[1.0, 2.0]);
        let region = Region::interval(0.0, 3.0).unwrap();
        let s = chebyshev_points(&region, 8).unwrap();
        let mut r = rsrr_solve(&p, &s, &RsrrParams::default()).unwrap();
        r.eigenvalues = vec![c(1.0, 0.0), c(1.0 + 1e-12, 0.0), s.points()[3]];
        r.inside = vec![true; 3];
        let pts = refinement_points(&r, s.points(), &region);
        assert_eq!(pts, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn two_stage_on_small_string() {
        let p = loaded_string(30).unwrap();
        let region = Region::interval(3.0, 3000.0).unwrap();
        let s = chebyshev_points(&region, 12).unwrap();
        let params = RsrrParams {
            l: 2,
            ..RsrrParams::default()
        };
        let r = rsrr_two_stage(&p, &s, &params).unwrap();
        assert!(!r.added_points.is_empty());
        assert_eq!(r.sampling.len(), 12 + r.added_points.len());
        assert_eq!(r.stage2.provenance.algorithm, Algorithm::RsrrTwoStage);
        assert!(r.stage2.max_inside_residual() <= r.stage1.max_inside_residual());
    }

    #[test]
    fn two_stage_improves_rational_damping() {
        let spd = |seed: u64, shift: f64, scale: f64| {
            let mut s = symmetric(8, seed, 0.0).scaled(c(scale, 0.0));
            s.add_scaled(c(shift, 0.0), &DenseMatrix::identity(8)).unwrap();
            s.into_real_if_exact()
        };
        let p = rational_damping(spd(4, 1.0, 0.5), spd(5, 1.0, 3.0), spd(6, 0.0, 1.0), 0.5, &[1.0, 0.5], &[2.0, 5.0]).unwrap();
        let region = Region::rectangle(c(-0.3, 1.2), c(0.1, 2.07)).unwrap();
        let s = rectangle_gauss(&region, 1, 1).unwrap();
        let r = rsrr_two_stage(&p, &s, &RsrrParams::default()).unwrap();
        assert!(r.stage2.inside_count() >= r.stage1.inside_count());
        assert!(
            r.stage2.max_inside_residual() < r.stage1.max_inside_residual(),
            "{} vs {}",
            r.stage2.max_inside_residual(),
            r.stage1.max_inside_residual()
        );
    }
}
