//! Scripted experiments on the loaded string and the small synthetic
//! problems, each returning a [`Report`] of verdicts and tables.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nep_core::io::{format_float, load_split_problem};
use nep_core::probing::ProbeTable;
use nep_core::problems::{loaded_string, FunctionFamily, NepProblem, ScalarFunction};
use nep_core::rsrr::{rsrr_from_table, rsrr_solve, rsrr_two_stage, RsrrParams, Scheme};
use nep_core::sampling::{
    annihilation_sum, chebyshev_points, ellipse_trapezoid, node_polynomial, phi_alpha_1, rectangle_gauss, Capacity,
    Region, SamplingSet,
};
use nep_core::ss_solver::{ss_solve, EigResult, DEFAULT_TOL_GAP};
use nep_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instances::{gun_case, gun_problem, gun_region, quadratic_case, rational_damping_case, string_case};
use crate::oracle::match_eigenvalues;
use crate::report::{Report, Table};
use crate::{BenchError, Result};

pub const STRING_SIZE: usize = 400;
pub const STRING_COUNT: usize = 32;
pub const SEED: u64 = 1;

pub fn string_region() -> Region {
    Region::interval(3.0, 10000.0).expect("valid interval")
}

/// Ellipse around the string interval used for the contour runs.
pub fn string_ellipse() -> Region {
    let a = 4998.5;
    Region::ellipse(C64::new(5001.5, 0.0), a, 0.5 * a).expect("valid ellipse")
}

fn f(x: f64) -> String {
    format_float(x)
}

/// Largest residual over the inside-region pairs; infinite when there are none.
pub fn worst_inside(r: &EigResult) -> f64 {
    if r.inside_count() == 0 {
        f64::INFINITY
    } else {
        r.max_inside_residual()
    }
}

fn residual_table(name: &str) -> Table {
    Table::new(name, &["run", "index", "re", "im", "residual", "inside"])
}

fn push_residuals(t: &mut Table, run: &str, r: &EigResult) {
    for (j, ((l, res), inside)) in r.eigenvalues.iter().zip(&r.residuals).zip(&r.inside).enumerate() {
        t.push(vec![run.into(), (j + 1).to_string(), f(l.re), f(l.im), f(*res), inside.to_string()]);
    }
}

fn finish(mut report: Report, start: Instant) -> Report {
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    report
}

/// Single-threaded RSRR on the string interval with N = 100 Chebyshev points
/// and L = 1: count, gap acceptance, accuracy and wall time.
pub fn run_string() -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("string");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| BenchError::Setup(e.to_string()))?;
    let (result, seconds) = pool.install(|| -> Result<(EigResult, f64)> {
        let t = Instant::now();
        let problem = loaded_string(STRING_SIZE)?;
        let sampling = chebyshev_points(&string_region(), 100)?;
        let r = rsrr_solve(&problem, &sampling, &RsrrParams::default())?;
        Ok((r, t.elapsed().as_secs_f64()))
    })?;
    report.verdict(
        "string.count",
        result.inside_count() == STRING_COUNT && result.accepted() && result.gap.g_max >= DEFAULT_TOL_GAP,
        format!("{} inside, accepted={}, g_max={:.3e}", result.inside_count(), result.accepted(), result.gap.g_max),
    );
    let worst = worst_inside(&result);
    report.verdict("string.accuracy", worst <= 1e-8, format!("max residual {worst:.3e} (limit 1e-8)"));
    report.verdict("string.runtime", seconds <= 60.0, format!("{seconds:.2} s single-threaded (limit 60 s)"));
    let mut t = residual_table("residuals");
    push_residuals(&mut t, "rsrr", &result);
    report.tables.push(t);
    Ok(finish(report, start))
}

struct SsRun {
    label: String,
    l: usize,
    k: usize,
    result: std::result::Result<EigResult, nep_core::Error>,
}

impl SsRun {
    fn worst(&self) -> f64 {
        self.result.as_ref().map(worst_inside).unwrap_or(f64::INFINITY)
    }

    fn accepted(&self) -> bool {
        self.result.as_ref().map(|r| r.accepted()).unwrap_or(false)
    }
}

/// Median over inside pairs of the residual ratio between two runs, pairing
/// eigenvalues by ascending modulus.
fn median_ratio(a: &SsRun, b: &SsRun) -> f64 {
    let sorted = |r: &SsRun| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = r
            .result
            .as_ref()
            .map(|e| {
                e.eigenvalues
                    .iter()
                    .zip(&e.residuals)
                    .zip(&e.inside)
                    .filter(|(_, &i)| i)
                    .map(|((l, &res), _)| (l.norm(), res))
                    .collect()
            })
            .unwrap_or_default();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (va, vb) = (sorted(a), sorted(b));
    if va.is_empty() || va.len() != vb.len() {
        return f64::NAN;
    }
    let mut ratios: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| x.1 / y.1).collect();
    ratios.sort_by(f64::total_cmp);
    ratios[ratios.len() / 2]
}

/// SS-RI on Chebyshev points versus SS-CI on the ellipse, N = 200, for the
/// block sizes (L, K) ∈ {(10, 10), (3, 40), (2, 60)}.
pub fn run_fig2() -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("fig2");
    let problem = loaded_string(STRING_SIZE)?;
    let sets = [
        ("chebyshev", chebyshev_points(&string_region(), 200)?),
        ("contour", ellipse_trapezoid(&string_ellipse(), 200)?),
    ];
    let mut runs = Vec::new();
    for (l, k) in [(10, 10), (3, 40), (2, 60)] {
        for (name, s) in &sets {
            let table = ProbeTable::make(&problem, s, l, SEED)?;
            runs.push(SsRun {
                label: format!("{name}_L{l}_K{k}"),
                l,
                k,
                result: ss_solve(&problem, &table, s, k, DEFAULT_TOL_GAP),
            });
        }
    }
    let get = |label: &str| runs.iter().find(|r| r.label == label).expect("configured run");
    let base = get("chebyshev_L10_K10").worst();
    let contour = get("contour_L10_K10").worst();
    report.verdict("fig2.ss_ri_accuracy", base <= 1e-8, format!("Chebyshev L=10 K=10 max residual {base:.3e} (limit 1e-8)"));
    report.verdict("fig2.ss_ci_accuracy", contour <= 1e-8, format!("contour L=10 K=10 max residual {contour:.3e} (limit 1e-8)"));
    let ratio = contour / base;
    let median = median_ratio(get("contour_L10_K10"), get("chebyshev_L10_K10"));
    report.verdict(
        "fig2.contour_agreement",
        (0.1..=10.0).contains(&ratio),
        format!("contour/Chebyshev max residual ratio {ratio:.3e} (within one order); median per-pair ratio {median:.3e}"),
    );
    let deteriorated = get("chebyshev_L3_K40").worst();
    report.verdict(
        "fig2.deterioration",
        deteriorated >= 100.0 * base,
        format!("L=3 K=40 max residual {deteriorated:.3e} vs 100 x {base:.3e}"),
    );
    let broken = get("chebyshev_L2_K60");
    report.verdict(
        "fig2.breakdown",
        !broken.accepted() || broken.worst() > 1e-2,
        format!("L=2 K=60 accepted={} max residual {:.3e}", broken.accepted(), broken.worst()),
    );
    let mut summary = Table::new("summary", &["run", "L", "K", "accepted", "inside", "g_max", "max_residual", "error"]);
    let mut residuals = residual_table("residuals");
    for run in &runs {
        match &run.result {
            Ok(r) => {
                summary.push(vec![
                    run.label.clone(),
                    run.l.to_string(),
                    run.k.to_string(),
                    r.accepted().to_string(),
                    r.inside_count().to_string(),
                    f(r.gap.g_max),
                    f(run.worst()),
                    String::new(),
                ]);
                push_residuals(&mut residuals, &run.label, r);
            }
            Err(e) => summary.push(vec![
                run.label.clone(),
                run.l.to_string(),
                run.k.to_string(),
                "false".into(),
                "0".into(),
                String::new(),
                f(f64::INFINITY),
                e.to_string(),
            ]),
        }
    }
    report.tables.push(summary);
    report.tables.push(residuals);
    Ok(finish(report, start))
}

/// Sampling versus moment scheme (K = N) on one shared probe table per L,
/// N = 100, L ∈ {1, 2}.
pub fn run_fig3() -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("fig3");
    let problem = loaded_string(STRING_SIZE)?;
    let sampling = chebyshev_points(&string_region(), 100)?;
    let mut residuals = residual_table("residuals");
    let mut sigma_columns: Vec<(String, Vec<f64>)> = Vec::new();
    for l in [1usize, 2] {
        let table = ProbeTable::make(&problem, &sampling, l, SEED)?;
        let base = RsrrParams {
            l,
            ..RsrrParams::default()
        };
        let s_run = rsrr_from_table(&problem, &table, &sampling, &base)?;
        let m_run = rsrr_from_table(
            &problem,
            &table,
            &sampling,
            &RsrrParams {
                scheme: Scheme::Moment,
                moment_order: Some(sampling.len()),
                ..base
            },
        )?;
        let sigma_s = s_run.subspace.as_ref().expect("rsrr reports its subspace").scaled_singular_values.clone();
        let sigma_m = m_run.subspace.as_ref().expect("rsrr reports its subspace").scaled_singular_values.clone();
        push_residuals(&mut residuals, &format!("sampling_L{l}"), &s_run);
        push_residuals(&mut residuals, &format!("moment_L{l}"), &m_run);
        if l == 1 {
            let (ws, wm) = (worst_inside(&s_run), worst_inside(&m_run));
            report.verdict(
                "fig3.count",
                s_run.inside_count() == STRING_COUNT && s_run.accepted(),
                format!("sampling scheme {} inside, accepted={}", s_run.inside_count(), s_run.accepted()),
            );
            report.verdict("fig3.accuracy", ws <= 1e-8, format!("sampling max residual {ws:.3e} (limit 1e-8)"));
            report.verdict(
                "fig3.scheme_gap",
                wm >= 100.0 * ws,
                format!("moment max residual {wm:.3e} vs 100 x sampling {ws:.3e}"),
            );
            let at = |v: &[f64]| v.get(STRING_COUNT - 1).copied().unwrap_or(0.0);
            let (s32, m32) = (at(&sigma_s), at(&sigma_m));
            report.verdict("fig3.sigma_moment", m32 <= 1e-11, format!("scaled sigma_32 of M {m32:.3e} (limit 1e-11)"));
            report.verdict("fig3.sigma_sampling", s32 >= 1e-10, format!("scaled sigma_32 of S {s32:.3e} (floor 1e-10)"));
        }
        sigma_columns.push((format!("S_L{l}"), sigma_s));
        sigma_columns.push((format!("M_L{l}"), sigma_m));
    }
    let mut header = vec!["index"];
    header.extend(sigma_columns.iter().map(|(n, _)| n.as_str()));
    let mut sigma = Table::new("sigma", &header);
    let rows = sigma_columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![(i + 1).to_string()];
        row.extend(sigma_columns.iter().map(|(_, v)| v.get(i).map(|&x| f(x)).unwrap_or_default()));
        sigma.push(row);
    }
    report.tables.push(residuals);
    report.tables.push(sigma);
    Ok(finish(report, start))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Params {
    pub block_sizes: Vec<usize>,
    /// Values of `N·L`; entries not divisible by `L` are skipped for that `L`.
    pub products: Vec<usize>,
    pub seeds: Vec<u64>,
    pub slack: f64,
}

impl Default for Fig4Params {
    fn default() -> Self {
        Self {
            block_sizes: vec![1, 2, 4, 8],
            products: vec![16, 32, 48, 64, 96, 128],
            seeds: (1..=5).collect(),
            slack: 3.0,
        }
    }
}

/// Mean over seeds of the largest inside residual of RSRR on `N` Chebyshev
/// points with block size `L`, swept over `N·L`.
pub fn run_fig4(params: &Fig4Params) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("fig4");
    let problem = loaded_string(STRING_SIZE)?;
    let mut curves: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut table = Table::new("curves", &["L", "N", "NL", "mean_max_residual", "failures"]);
    for &l in &params.block_sizes {
        let mut curve = Vec::new();
        for &p in &params.products {
            if p % l != 0 {
                continue;
            }
            let n = p / l;
            let sampling = chebyshev_points(&string_region(), n)?;
            let mut failures = 0;
            let values: Vec<f64> = params
                .seeds
                .iter()
                .map(|&seed| {
                    let r = rsrr_solve(
                        &problem,
                        &sampling,
                        &RsrrParams {
                            l,
                            seed,
                            ..RsrrParams::default()
                        },
                    );
                    match r {
                        Ok(r) => worst_inside(&r),
                        Err(_) => {
                            failures += 1;
                            f64::INFINITY
                        }
                    }
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            table.push(vec![l.to_string(), n.to_string(), p.to_string(), f(mean), failures.to_string()]);
            curve.push((p, mean));
        }
        curves.push((l, curve));
    }
    let value = |l: usize, p: usize| {
        curves
            .iter()
            .find(|(cl, _)| *cl == l)
            .and_then(|(_, c)| c.iter().find(|(cp, _)| *cp == p))
            .map(|&(_, v)| v)
    };
    if let (Some(a), Some(b)) = (value(1, 64), value(8, 64)) {
        report.verdict("fig4.n_over_l", a <= b, format!("N·L=64: L=1 mean {a:.3e} vs L=8 mean {b:.3e}"));
    }
    let mut violations = Vec::new();
    for (l, curve) in &curves {
        for w in curve.windows(2) {
            let ((p0, v0), (p1, v1)) = (w[0], w[1]);
            if !(v1 <= params.slack * v0) {
                violations.push(format!("L={l}: {v0:.2e} at N·L={p0} -> {v1:.2e} at N·L={p1}"));
            }
        }
    }
    report.verdict(
        "fig4.monotone",
        violations.is_empty(),
        if violations.is_empty() {
            format!("all curves nonincreasing within factor {}", params.slack)
        } else {
            violations.join("; ")
        },
    );
    if let Some((_, curve)) = curves.iter().find(|(l, _)| *l == 1) {
        if let Some(&(p, v)) = curve.iter().find(|(_, v)| *v <= 1e-9) {
            report.verdict("fig4.plateau", p <= 128, format!("L=1 reaches {v:.3e} at N·L={p}"));
        } else {
            report.verdict("fig4.plateau", false, "L=1 never reaches 1e-9".to_string());
        }
    }
    report.tables.push(table);
    Ok(finish(report, start))
}

/// RSRR on the four small problems against their independent references.
/// Any mismatch is returned as [`BenchError::OracleMismatch`].
pub fn run_oracles() -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("oracles");
    let mut table = Table::new("eigenvalues", &["case", "re", "im", "residual", "nearest_reference_re", "nearest_reference_im"]);
    let mut mismatch = None;
    for case in [string_case()?, quadratic_case()?, rational_damping_case()?, gun_case()?] {
        let region = case.region();
        let r = rsrr_solve(&case.problem, &case.sampling, &RsrrParams::default())?;
        let found = r.inside_eigenvalues();
        let m = match_eigenvalues(&found, &case.reference, &region, 1e-3, case.tolerance);
        for ((&z, res), _) in r.eigenvalues.iter().zip(&r.residuals).zip(&r.inside).filter(|(_, &inside)| inside) {
            let near = case
                .reference
                .iter()
                .copied()
                .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
                .unwrap_or(C64::new(f64::NAN, f64::NAN));
            table.push(vec![case.name.into(), f(z.re), f(z.im), f(*res), f(near.re), f(near.im)]);
        }
        let ok = m.ok(case.tolerance);
        report.verdict(
            format!("oracles.{}", case.name),
            ok,
            format!(
                "{}: {}/{} reference eigenvalues matched, worst relative {:.3e} (limit {:.0e})",
                case.name,
                m.matched, m.reference_inside, m.worst_relative, case.tolerance
            ),
        );
        if !ok && mismatch.is_none() {
            let (found, reference) = match (m.missing.first(), m.worst_pair) {
                (Some(&missing), _) => {
                    let near = found
                        .iter()
                        .copied()
                        .min_by(|a, b| (a - missing).norm().total_cmp(&(b - missing).norm()))
                        .unwrap_or(C64::new(f64::NAN, f64::NAN));
                    (near, missing)
                }
                (None, Some(pair)) => pair,
                (None, None) => (C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)),
            };
            mismatch = Some(BenchError::OracleMismatch {
                case: case.name.to_string(),
                found,
                reference,
                relative: (found - reference).norm() / reference.norm(),
            });
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    report.verdict("oracles.runtime", seconds <= 30.0, format!("{seconds:.2} s total (limit 30 s)"));
    report.tables.push(table);
    match mismatch {
        Some(e) => Err(e),
        None => Ok(finish(report, start)),
    }
}

/// Randomized checks of `φ_{α,1}(z) = −z^α / l(z)` and of the vanishing
/// weighted sums on low-degree monomials, on Chebyshev node sets with
/// `2 ≤ N ≤ 64`.
pub fn run_identities(cases: usize, seed: u64) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("identities");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("cases", &["case", "N", "alpha", "z_re", "z_im", "phi_relative", "annihilation_scaled"]);
    let (mut worst_phi, mut worst_sum) = (0.0f64, 0.0f64);
    let interval = Region::interval(-1.0, 1.0)?;
    for case in 0..cases {
        let n = rng.random_range(3..=64usize);
        let cheb = chebyshev_points(&interval, n)?;
        let bary = SamplingSet::barycentric(cheb.points().to_vec(), Capacity::Auto, None)?;
        let alpha = rng.random_range(0..n);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let z = sign * (C64::new(1.0, 0.0) + C64::from_polar(rng.random_range(0.002..0.02), rng.random_range(0.0..2.0 * PI)));
        let got = phi_alpha_1(&bary, alpha, z)?;
        let expected = -z.powu(alpha as u32) / node_polynomial(&bary, z);
        let phi_rel = (got - expected).norm() / expected.norm();
        let beta = alpha.min(n - 2);
        let scale: f64 = cheb.weights().iter().map(|w| w.norm()).sum();
        let mut sum_rel = 0.0f64;
        for d in 0..=(n - 2 - beta) {
            let v = annihilation_sum(&cheb, |x| x.powu(d as u32), beta)?;
            sum_rel = sum_rel.max(v.norm() / scale);
        }
        worst_phi = worst_phi.max(phi_rel);
        worst_sum = worst_sum.max(sum_rel);
        table.push(vec![case.to_string(), n.to_string(), alpha.to_string(), f(z.re), f(z.im), f(phi_rel), f(sum_rel)]);
    }
    report.verdict(
        "identities.phi",
        worst_phi <= 1e-9,
        format!("worst relative deviation {worst_phi:.3e} over {cases} cases (limit 1e-9)"),
    );
    report.verdict(
        "identities.annihilation",
        worst_sum <= 1e-12,
        format!("worst scaled monomial sum {worst_sum:.3e} over {cases} cases (limit 1e-12)"),
    );
    report.tables.push(table);
    Ok(finish(report, start))
}

fn push_two_stage(table: &mut Table, stage1: &EigResult, stage2: &EigResult) {
    push_residuals(table, "stage1", stage1);
    push_residuals(table, "stage2", stage2);
}

/// Two-stage refinement on the synthetic cavity model: one Gauss node per
/// rectangle side, then the inside stage-one eigenvalues as extra points.
pub fn run_two_stage() -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("two_stage");
    let problem = gun_problem()?;
    let stage1 = rectangle_gauss(&gun_region(), 1, 1)?;
    let r = rsrr_two_stage(&problem, &stage1, &RsrrParams::default())?;
    let (s1, s2) = (worst_inside(&r.stage1), worst_inside(&r.stage2));
    report.verdict(
        "two_stage.improvement",
        s2 <= s1,
        format!(
            "stage 1 ({} points) max residual {s1:.3e}, stage 2 ({} points) {s2:.3e}",
            stage1.len(),
            r.sampling.len()
        ),
    );
    let mut table = residual_table("residuals");
    push_two_stage(&mut table, &r.stage1, &r.stage2);
    report.tables.push(table);
    Ok(finish(report, start))
}

pub const GUN_FILES: [&str; 4] = ["K.mtx", "M.mtx", "W1.mtx", "W2.mtx"];
pub const GUN_KAPPA2: f64 = 108.8774;
pub const GUN_EIGENVALUES: usize = 25;

/// The full cavity model from `K.mtx, M.mtx, W1.mtx, W2.mtx` in `dir`.
pub fn load_gun(dir: &Path) -> Result<NepProblem> {
    let paths: Vec<_> = GUN_FILES.iter().map(|f| dir.join(f)).collect();
    let functions = [
        ScalarFunction::constant(1.0),
        ScalarFunction::monomial(-1.0, 2),
        ScalarFunction::new(C64::new(1.0, 0.0), FunctionFamily::SqrtBranch { kappa: 0.0 })?,
        ScalarFunction::new(C64::new(1.0, 0.0), FunctionFamily::SqrtBranch { kappa: GUN_KAPPA2 })?,
    ];
    Ok(load_split_problem("gun", &paths, &functions)?)
}

/// Two-stage run on externally supplied cavity data: 30 Gauss nodes on the
/// rectangle `[200, 360] × [0, 50]`, then the stage-one eigenvalues.
pub fn run_gun_data(dir: &Path) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("gun_data");
    let problem = load_gun(dir)?;
    let region = Region::rectangle(C64::new(200.0, 0.0), C64::new(360.0, 50.0))?;
    let stage1 = rectangle_gauss(&region, 10, 5)?;
    let params = RsrrParams {
        l: 2,
        ..RsrrParams::default()
    };
    let r = rsrr_two_stage(&problem, &stage1, &params)?;
    let weighted = |e: &EigResult| {
        e.weighted_residuals
            .as_ref()
            .map(|w| w.iter().zip(&e.inside).filter(|(_, &i)| i).map(|(&x, _)| x).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY)
    };
    let (w1, w2) = (weighted(&r.stage1), weighted(&r.stage2));
    report.verdict(
        "gun_data.count",
        r.stage2.inside_count() == GUN_EIGENVALUES,
        format!("{} eigenvalues inside after {} points", r.stage2.inside_count(), r.sampling.len()),
    );
    report.verdict("gun_data.improvement", w2 <= w1, format!("weighted residual stage 1 {w1:.3e}, stage 2 {w2:.3e}"));
    let mut table = residual_table("residuals");
    push_two_stage(&mut table, &r.stage1, &r.stage2);
    report.tables.push(table);
    Ok(finish(report, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_inside_is_infinite_without_pairs() {
        let problem = loaded_string(10).unwrap();
        let sampling = chebyshev_points(&Region::interval(3.0, 50.0).unwrap(), 12).unwrap();
        let mut r = rsrr_solve(&problem, &sampling, &RsrrParams::default()).unwrap();
        assert!(worst_inside(&r).is_finite());
        r.inside.iter_mut().for_each(|i| *i = false);
        assert_eq!(worst_inside(&r), f64::INFINITY);
    }

    #[test]
    fn identities_pass_on_a_few_cases() {
        let r = run_identities(10, 7).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r.table("cases").unwrap().rows.len(), 10);
    }

    #[test]
    fn two_stage_runner_reports_both_stages() {
        let r = run_two_stage().unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        let rows = &r.table("residuals").unwrap().rows;
        assert!(rows.iter().any(|row| row[0] == "stage1") && rows.iter().any(|row| row[0] == "stage2"));
    }

    #[test]
    fn missing_gun_data_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(run_gun_data(dir.path()).is_err());
    }
}
