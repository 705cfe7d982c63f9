//! Resolvent probes `Yᵢ = T(zᵢ)⁻¹ U`, their weighted moments and the block
//! Hankel matrices built from them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{DenseMatrix, PivotReport};
use crate::problems::NepProblem;
use crate::sampling::{MomentMap, SamplingSet};
use crate::C64;

/// Gaussian probing matrix; real when `real` is set, otherwise with
/// independent real and imaginary parts.
pub fn gaussian_matrix(rows: usize, cols: usize, real: bool, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    if real {
        let data: Vec<f64> = (0..rows * cols).map(|_| draw()).collect();
        DenseMatrix::from_real_fn(rows, cols, |i, j| data[i + j * rows]).expect("finite samples")
    } else {
        let data: Vec<C64> = (0..rows * cols).map(|_| C64::new(draw(), draw())).collect();
        DenseMatrix::from_fn(rows, cols, |i, j| data[i + j * rows]).expect("finite samples")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub pivots: Option<PivotReport>,
    pub near_singular: bool,
    /// Error message when the solve at this point failed.
    pub failure: Option<String>,
}

/// Probing matrix `U` and the solved blocks `Yᵢ = T(zᵢ)⁻¹ U`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeTable {
    probe: DenseMatrix,
    seed: u64,
    points: Vec<C64>,
    samples: Vec<Option<DenseMatrix>>,
    diagnostics: Vec<PointDiagnostics>,
    /// `U` is the identity, so `Uᴴ Yᵢ = Yᵢ`.
    #[serde(default)]
    identity_probe: bool,
}

fn is_identity(u: &DenseMatrix) -> bool {
    u.is_square()
        && (0..u.ncols()).all(|j| {
            (0..u.nrows()).all(|i| u.get(i, j) == C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
        })
}

fn solve_points(problem: &NepProblem, points: &[C64], u: &DenseMatrix) -> Result<Vec<(Option<DenseMatrix>, PointDiagnostics)>> {
    points
        .par_iter()
        .map(|&z| match problem.solve(z, u) {
            Ok(s) => Ok((
                Some(s.solution),
                PointDiagnostics {
                    pivots: s.pivots,
                    near_singular: s.pivots.is_some_and(|p| p.near_singular()),
                    failure: None,
                },
            )),
            Err(e @ Error::SingularMatrix { .. }) => Ok((
                None,
                PointDiagnostics {
                    pivots: None,
                    near_singular: true,
                    failure: Some(e.to_string()),
                },
            )),
            Err(e) => Err(e),
        })
        .collect()
}

impl ProbeTable {
    /// Draws `U` (n × L) from `seed` and solves at every sampling point.
    pub fn make(problem: &NepProblem, sampling: &SamplingSet, l: usize, seed: u64) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("probe width L must be at least 1"));
        }
        let real = problem.is_real() && sampling.all_real();
        let u = gaussian_matrix(problem.dimension(), l, real, seed);
        Self::with_probe(problem, sampling.points(), u, seed)
    }

    /// Uses a caller-supplied probing matrix.
    pub fn with_probe(problem: &NepProblem, points: &[C64], u: DenseMatrix, seed: u64) -> Result<Self> {
        if u.nrows() != problem.dimension() || u.ncols() == 0 {
            return Err(Error::dims(
                format!("{} x L probing matrix", problem.dimension()),
                format!("{:?}", u.shape()),
            ));
        }
        for &z in points {
            problem.check_point(z)?;
        }
        let solved = solve_points(problem, points, &u)?;
        let (samples, diagnostics): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
        if samples.iter().all(Option::is_none) {
            return Err(Error::AllSolvesFailed);
        }
        for (z, d) in points.iter().zip(&diagnostics) {
            if let Some(f) = &d.failure {
                log::warn!("solve at {z} failed: {f}");
            } else if d.near_singular {
                log::warn!("near-singular solve at {z}");
            }
        }
        Ok(Self {
            identity_probe: is_identity(&u),
            probe: u,
            seed,
            points: points.to_vec(),
            samples,
            diagnostics,
        })
    }

    /// Appends solves at `extra` points with the same probing matrix.
    pub fn extended(&self, problem: &NepProblem, extra: &[C64]) -> Result<Self> {
        if problem.dimension() != self.probe.nrows() {
            return Err(Error::dims(format!("dimension {}", self.probe.nrows()), format!("dimension {}", problem.dimension())));
        }
        for &z in extra {
            problem.check_point(z)?;
        }
        let solved = solve_points(problem, extra, &self.probe)?;
        let mut out = self.clone();
        out.points.extend_from_slice(extra);
        for (s, d) in solved {
            out.samples.push(s);
            out.diagnostics.push(d);
        }
        Ok(out)
    }

    pub fn probe(&self) -> &DenseMatrix {
        &self.probe
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> usize {
        self.probe.ncols()
    }

    pub fn dimension(&self) -> usize {
        self.probe.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn sample(&self, i: usize) -> Option<&DenseMatrix> {
        self.samples[i].as_ref()
    }

    pub fn diagnostics(&self) -> &[PointDiagnostics] {
        &self.diagnostics
    }

    pub fn failed_points(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    /// Successful blocks side by side: `S = [Y₀, Y₁, …]`.
    pub fn stacked(&self) -> Result<DenseMatrix> {
        let blocks: Vec<&DenseMatrix> = self.samples.iter().flatten().collect();
        DenseMatrix::hstack(&blocks)
    }

    /// Largest `‖T(zᵢ) Yᵢ − U‖_F / ‖U‖_F` over the successful points.
    pub fn max_solve_residual(&self, problem: &NepProblem) -> Result<f64> {
        let un = self.probe.norm_fro();
        let mut worst = 0.0f64;
        for (z, y) in self.points.iter().zip(&self.samples) {
            if let Some(y) = y {
                let r = problem.apply(*z, y)?.sub(&self.probe)?;
                worst = worst.max(r.norm_fro() / un);
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: ProbeTable = serde_json::from_str(text)?;
        if t.points.len() != t.samples.len() || t.points.len() != t.diagnostics.len() {
            return Err(Error::invalid("probe table lengths disagree"));
        }
        Ok(t)
    }
}

/// Moments `A_α = Σᵢ ωᵢ ζᵢ^α Uᴴ Yᵢ` (α < 2K) and `M_α = Σᵢ ωᵢ ζᵢ^α Yᵢ` (α < K)
/// in the local variable `ζ` of `map`.
#[derive(Clone, Debug)]
pub struct MomentSet {
    pub k: usize,
    pub reduced: Vec<DenseMatrix>,
    pub vector: Vec<DenseMatrix>,
    pub map: MomentMap,
}

impl MomentSet {
    /// `[M₀, …, M_{K−1}]`.
    pub fn stacked_vectors(&self) -> Result<DenseMatrix> {
        DenseMatrix::hstack(&self.vector.iter().collect::<Vec<_>>())
    }
}

/// Moments in the raw variable `z`.
pub fn reduced_moments(table: &ProbeTable, sampling: &SamplingSet, k: usize) -> Result<MomentSet> {
    reduced_moments_mapped(table, sampling, k, MomentMap::IDENTITY)
}

/// Moments in `ζ = map.to_local(z)`, summed pairwise in a fixed order.
pub fn reduced_moments_mapped(table: &ProbeTable, sampling: &SamplingSet, k: usize, map: MomentMap) -> Result<MomentSet> {
    if table.len() != sampling.len() {
        return Err(Error::dims(format!("{} samples", sampling.len()), format!("{} samples", table.len())));
    }
    let n_points = sampling.len();
    if k == 0 {
        return Err(Error::invalid("moment order K must be at least 1"));
    }
    if 2 * k > n_points {
        return Err(Error::OrderTooHigh {
            twice_k: 2 * k,
            n: n_points,
        });
    }
    if 2 * k == n_points {
        log::warn!("2K = N = {n_points}: moment order at the admissible limit");
    }
    let uh = table.probe().adjoint();
    let zeta: Vec<C64> = sampling.points().iter().map(|&z| map.to_local(z)).collect();
    let ctx = MomentContext {
        table,
        weights: sampling.weights(),
        zeta: &zeta,
        uh: &uh,
        k,
    };
    let (reduced, vector) = match ctx.sum(0, n_points)? {
        Some(parts) => parts,
        None => {
            let l = table.width();
            (
                vec![DenseMatrix::zeros(l, l); 2 * k],
                vec![DenseMatrix::zeros(table.dimension(), l); k],
            )
        }
    };
    Ok(MomentSet { k, reduced, vector, map })
}

type Partial = (Vec<DenseMatrix>, Vec<DenseMatrix>);

struct MomentContext<'a> {
    table: &'a ProbeTable,
    weights: &'a [C64],
    zeta: &'a [C64],
    uh: &'a DenseMatrix,
    k: usize,
}

impl MomentContext<'_> {
    fn leaf(&self, i: usize) -> Result<Option<Partial>> {
        let Some(y) = self.table.sample(i) else {
            return Ok(None);
        };
        let g = if self.table.identity_probe {
            y.clone()
        } else {
            self.uh.matmul(y)?
        };
        let mut reduced = Vec::with_capacity(2 * self.k);
        let mut vector = Vec::with_capacity(self.k);
        let mut factor = self.weights[i];
        for alpha in 0..2 * self.k {
            let f = real_if_exact(factor);
            reduced.push(g.scaled(f));
            if alpha < self.k {
                vector.push(y.scaled(f));
            }
            factor *= self.zeta[i];
        }
        Ok(Some((reduced, vector)))
    }

    fn sum(&self, lo: usize, hi: usize) -> Result<Option<Partial>> {
        if hi - lo == 1 {
            return self.leaf(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (left, right) = rayon::join(|| self.sum(lo, mid), || self.sum(mid, hi));
        Ok(match (left?, right?) {
            (Some(mut a), Some(b)) => {
                for (x, y) in a.0.iter_mut().zip(&b.0) {
                    x.add_scaled(C64::new(1.0, 0.0), y)?;
                }
                for (x, y) in a.1.iter_mut().zip(&b.1) {
                    x.add_scaled(C64::new(1.0, 0.0), y)?;
                }
                Some(a)
            }
            (a, b) => a.or(b),
        })
    }
}

fn real_if_exact(z: C64) -> C64 {
    if z.im == 0.0 {
        C64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Block Hankel matrices with blocks `H[i,j] = A_{i+j}` and `H<[i,j] = A_{i+j+1}`.
#[derive(Clone, Debug)]
pub struct HankelPair {
    pub h: DenseMatrix,
    pub h_shift: DenseMatrix,
}

pub fn hankel_pair(moments: &MomentSet) -> Result<HankelPair> {
    let k = moments.k;
    if moments.reduced.len() < 2 * k {
        return Err(Error::invalid(format!(
            "Hankel pair of order {k} needs {} moments, found {}",
            2 * k,
            moments.reduced.len()
        )));
    }
    let grid = |shift: usize| -> Vec<Vec<&DenseMatrix>> {
        (0..k)
            .map(|i| (0..k).map(|j| &moments.reduced[i + j + shift]).collect())
            .collect()
    };
    Ok(HankelPair {
        h: DenseMatrix::from_blocks(&grid(0))?,
        h_shift: DenseMatrix::from_blocks(&grid(1))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{self, DenseMatrix};
    use crate::problems::{loaded_string, NepProblem, ScalarFunction, Term};
    use crate::sampling::{chebyshev_points, Region, SamplingMode};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_pole(lambda: f64) -> NepProblem {
        NepProblem::split(
            "pole",
            vec![
                Term::new(ScalarFunction::monomial(1.0, 1), DenseMatrix::identity(1)),
                Term::new(ScalarFunction::constant(-lambda), DenseMatrix::identity(1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn scalar_probe_values() {
        let p = scalar_pole(3.0);
        let t = ProbeTable::with_probe(&p, &[c(0.0, 0.0), c(1.0, 0.0)], DenseMatrix::identity(1), 0).unwrap();
        assert!((t.sample(0).unwrap().get(0, 0) - c(-1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert!((t.sample(1).unwrap().get(0, 0) - c(-0.5, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn seeded_probe_is_reproducible() {
        let a = gaussian_matrix(30, 4, false, 42);
        let b = gaussian_matrix(30, 4, false, 42);
        assert_eq!(a, b);
        assert_ne!(a, gaussian_matrix(30, 4, false, 43));
        assert!(gaussian_matrix(5, 2, true, 1).is_real());
    }

    #[test]
    fn string_probe_residuals() {
        let p = loaded_string(50).unwrap();
        let s = chebyshev_points(&Region::interval(3.0, 300.0).unwrap(), 16).unwrap();
        let t = ProbeTable::make(&p, &s, 2, 11).unwrap();
        assert!(t.probe().is_real());
        assert!(t.max_solve_residual(&p).unwrap() <= 1e-10);
    }

    #[test]
    fn failed_point_is_flagged() {
        let p = scalar_pole(3.0);
        let t = ProbeTable::with_probe(&p, &[c(3.0, 0.0), c(1.0, 0.0)], DenseMatrix::identity(1), 0).unwrap();
        assert_eq!(t.failed_points(), 1);
        assert!(t.diagnostics()[0].failure.is_some());
        assert!(matches!(
            ProbeTable::with_probe(&p, &[c(3.0, 0.0)], DenseMatrix::identity(1), 0),
            Err(Error::AllSolvesFailed)
        ));
    }

    #[test]
    fn two_point_moments() {
        let p = scalar_pole(3.0);
        let pts = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let s = SamplingSet::new(pts.clone(), vec![c(-1.0, 0.0), c(1.0, 0.0)], SamplingMode::BarycentricInterpolation, 1.0, None).unwrap();
        let u = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let t = ProbeTable::with_probe(&p, &pts, u, 0).unwrap();
        let m = reduced_moments(&t, &s, 1).unwrap();
        let y0 = t.sample(0).unwrap().get(0, 0);
        let y1 = t.sample(1).unwrap().get(0, 0);
        assert!((m.reduced[0].get(0, 0) - 2.0 * (y1 - y0)).norm() < 1e-15);
        assert!((m.reduced[1].get(0, 0) - 2.0 * y1).norm() < 1e-15);
        assert!((m.vector[0].get(0, 0) - (y1 - y0)).norm() < 1e-15);
    }

    #[test]
    fn single_pole_moment_ratio() {
        let p = scalar_pole(3.0);
        let s = chebyshev_points(&Region::interval(0.0, 10.0).unwrap(), 16).unwrap();
        let t = ProbeTable::with_probe(&p, s.points(), DenseMatrix::identity(1), 0).unwrap();
        let m = reduced_moments(&t, &s, 1).unwrap();
        let ratio = m.reduced[1].get(0, 0) / m.reduced[0].get(0, 0);
        assert!((ratio - 3.0).norm() <= 1e-8);
    }

    #[test]
    fn order_limits() {
        let p = scalar_pole(3.0);
        let s = chebyshev_points(&Region::interval(0.0, 10.0).unwrap(), 4).unwrap();
        let t = ProbeTable::with_probe(&p, s.points(), DenseMatrix::identity(1), 0).unwrap();
        assert!(matches!(reduced_moments(&t, &s, 3), Err(Error::OrderTooHigh { twice_k: 6, n: 4 })));
        assert!(reduced_moments(&t, &s, 2).is_ok());
    }

    #[test]
    fn zero_samples_give_zero_moments() {
        let s = chebyshev_points(&Region::interval(0.0, 1.0).unwrap(), 6).unwrap();
        let t = ProbeTable {
            probe: DenseMatrix::identity(2),
            seed: 0,
            points: s.points().to_vec(),
            samples: vec![Some(DenseMatrix::zeros(2, 2)); 6],
            diagnostics: vec![
                PointDiagnostics {
                    pivots: None,
                    near_singular: false,
                    failure: None
                };
                6
            ],
            identity_probe: false,
        };
        let m = reduced_moments(&t, &s, 3).unwrap();
        assert!(m.reduced.iter().chain(&m.vector).all(|a| a.norm_max() == 0.0));
    }

    fn scalar_moments(values: &[f64], k: usize) -> MomentSet {
        MomentSet {
            k,
            reduced: values.iter().map(|&v| DenseMatrix::from_rows(&[vec![v]]).unwrap()).collect(),
            vector: Vec::new(),
            map: MomentMap::IDENTITY,
        }
    }

    #[test]
    fn hankel_scalar_layout() {
        let hp = hankel_pair(&scalar_moments(&[1.0, 2.0, 3.0, 4.0], 2)).unwrap();
        let h = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let hs = DenseMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(hp.h, h);
        assert_eq!(hp.h_shift, hs);
        let hp = hankel_pair(&scalar_moments(&[5.0, 6.0], 1)).unwrap();
        assert_eq!(hp.h.get(0, 0), c(5.0, 0.0));
        assert_eq!(hp.h_shift.get(0, 0), c(6.0, 0.0));
    }

    #[test]
    fn hankel_block_index() {
        let blocks: Vec<DenseMatrix> = (0..4).map(|a| gaussian_matrix(2, 2, false, a)).collect();
        let m = MomentSet {
            k: 2,
            reduced: blocks.clone(),
            vector: Vec::new(),
            map: MomentMap::IDENTITY,
        };
        let hp = hankel_pair(&m).unwrap();
        assert_eq!(hp.h_shift.block(2, 0, 2, 2), blocks[2]);
        assert_eq!(hp.h.block(2, 2, 2, 2), blocks[2]);
    }

    #[test]
    fn moments_are_bit_stable_across_thread_counts() {
        let p = loaded_string(40).unwrap();
        let s = chebyshev_points(&Region::interval(3.0, 500.0).unwrap(), 40).unwrap();
        let t = ProbeTable::make(&p, &s, 3, 7).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| reduced_moments_mapped(&t, &s, 10, s.moment_map()).unwrap())
        };
        let a = run(1);
        let b = run(4);
        for (x, y) in a.reduced.iter().zip(&b.reduced).chain(a.vector.iter().zip(&b.vector)) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn single_pole_pencil_recovers_eigenvalue() {
        let p = scalar_pole(4.2);
        let region = Region::interval(0.0, 10.0).unwrap();
        for n in [16, 24] {
            let s = chebyshev_points(&region, n).unwrap();
            let t = ProbeTable::with_probe(&p, s.points(), DenseMatrix::identity(1), 0).unwrap();
            for k in 1..=3 {
                let m = reduced_moments_mapped(&t, &s, k, s.moment_map()).unwrap();
                let hp = hankel_pair(&m).unwrap();
                let svd = kernels::leading_svd(&hp.h, 1).unwrap();
                let a = svd.left.adjoint().matmul(&hp.h_shift).unwrap().matmul(&svd.right).unwrap();
                let lambda = m.map.to_global(a.get(0, 0) / svd.singular_values[0]);
                assert!((lambda - 4.2).norm() <= 1e-8, "n = {n}, k = {k}: {lambda}");
            }
        }
    }

    #[test]
    fn entire_samples_are_annihilated() {
        let region = Region::interval(-1.0, 1.0).unwrap();
        let mut norms = Vec::new();
        for n in [8, 16, 32] {
            let s = chebyshev_points(&region, n).unwrap();
            let t = ProbeTable {
                probe: DenseMatrix::identity(1),
                seed: 0,
                points: s.points().to_vec(),
                samples: s.points().iter().map(|z| Some(DenseMatrix::from_column(&[z.exp()]).unwrap())).collect(),
                diagnostics: vec![
                    PointDiagnostics {
                        pivots: None,
                        near_singular: false,
                        failure: None
                    };
                    n
                ],
                identity_probe: true,
            };
            norms.push(reduced_moments(&t, &s, 1).unwrap().reduced[0].norm_max());
        }
        assert!(norms[1] < 1e-6 * norms[0]);
        assert!(norms[2] < 1e-12);
    }

    #[test]
    fn moment_columns_lie_in_sample_span() {
        let p = loaded_string(30).unwrap();
        let s = chebyshev_points(&Region::interval(3.0, 200.0).unwrap(), 12).unwrap();
        let t = ProbeTable::make(&p, &s, 2, 3).unwrap();
        let m = reduced_moments_mapped(&t, &s, 4, s.moment_map()).unwrap();
        let q = kernels::truncated_svd(&t.stacked().unwrap(), 1e-15).unwrap().left;
        let mm = m.stacked_vectors().unwrap();
        let proj = q.matmul(&q.adjoint().matmul(&mm).unwrap()).unwrap();
        assert!(mm.sub(&proj).unwrap().norm_fro() <= 1e-10 * mm.norm_fro());
    }

    #[test]
    fn probe_table_json_round_trip() {
        let p = loaded_string(8).unwrap();
        let s = chebyshev_points(&Region::interval(3.0, 50.0).unwrap(), 5).unwrap();
        let t = ProbeTable::make(&p, &s, 2, 1).unwrap();
        let back = ProbeTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.probe(), t.probe());
        for i in 0..t.len() {
            assert_eq!(back.sample(i), t.sample(i));
        }
    }
}
