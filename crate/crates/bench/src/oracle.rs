//! Reference eigenvalues computed without the library's solvers: companion
//! linearizations of matrix polynomials and determinant scans with Newton
//! refinement.

use faer::linalg::solvers::{GeneralizedEigen, PartialPivLu, Solve, Svd};
use faer::Mat;
use nep_core::sampling::Region;
use nep_core::{DenseMatrix, C64};

/// `P(z) = Σₖ zᵏ Cₖ` with square complex coefficients.
#[derive(Clone, Debug)]
pub struct MatrixPolynomial {
    pub coefficients: Vec<Mat<C64>>,
}

impl MatrixPolynomial {
    pub fn new(coefficients: Vec<Mat<C64>>) -> Self {
        assert!(coefficients.len() >= 2, "degree must be at least 1");
        let n = coefficients[0].nrows();
        assert!(coefficients.iter().all(|c| c.nrows() == n && c.ncols() == n));
        Self { coefficients }
    }

    pub fn dimension(&self) -> usize {
        self.coefficients[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: C64) -> Mat<C64> {
        let n = self.dimension();
        let mut acc = Mat::<C64>::zeros(n, n);
        for c in self.coefficients.iter().rev() {
            acc = Mat::from_fn(n, n, |i, j| acc[(i, j)] * z + c[(i, j)]);
        }
        acc
    }

    /// Finite eigenvalues of the first companion pencil `A x = z B x` with
    /// `x = [v; z v; …; z^{d−1} v]`.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let n = self.dimension();
        let d = self.degree();
        let size = n * d;
        let lead = &self.coefficients[d];
        let a = Mat::<C64>::from_fn(size, size, |i, j| {
            let (bi, ii) = (i / n, i % n);
            let (bj, jj) = (j / n, j % n);
            if bi + 1 < d {
                if bj == bi + 1 && ii == jj {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            } else {
                -self.coefficients[bj][(ii, jj)]
            }
        });
        let b = Mat::<C64>::from_fn(size, size, |i, j| {
            let (bi, ii) = (i / n, i % n);
            let (bj, jj) = (j / n, j % n);
            if bi != bj {
                C64::new(0.0, 0.0)
            } else if bi + 1 < d {
                if ii == jj {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            } else {
                lead[(ii, jj)]
            }
        });
        let gevd = GeneralizedEigen::new(a.as_ref(), b.as_ref()).expect("generalized eigenvalue iteration converged");
        let sa = gevd.S_a().column_vector();
        let sb = gevd.S_b().column_vector();
        (0..size)
            .filter_map(|i| {
                let (alpha, beta) = (sa[i], sb[i]);
                (beta.norm() > 1e-13 * alpha.norm()).then(|| alpha / beta)
            })
            .collect()
    }
}

pub fn to_mat(m: &DenseMatrix) -> Mat<C64> {
    m.complex_mat().into_owned()
}

pub fn real_mat(n: usize, f: impl Fn(usize, usize) -> f64) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| C64::new(f(i, j), 0.0))
}

fn scaled(m: &Mat<C64>, s: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

fn add(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + b[(i, j)])
}

/// Coefficients (ascending) of `∏ (z + rⱼ)`.
pub fn poly_from_shifts(shifts: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &r in shifts {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            next[k] += r * c;
            next[k + 1] += c;
        }
        p = next;
    }
    p
}

/// Loaded string matrices from the finite-element stencil:
/// `K = n·tridiag(−1, 2, −1)` with last diagonal `n`, `M = tridiag(1, 4, 1)/(6n)`
/// with last diagonal `2/(6n)` and `E = eₙeₙᵀ`.
pub fn loaded_string_matrices(n: usize) -> (Mat<C64>, Mat<C64>, Mat<C64>) {
    let nf = n as f64;
    let tri = |diag: f64, off: f64, last: f64, s: f64| {
        real_mat(n, move |i, j| {
            s * if i == j {
                if i == n - 1 {
                    last
                } else {
                    diag
                }
            } else if i.abs_diff(j) == 1 {
                off
            } else {
                0.0
            }
        })
    };
    let k = tri(2.0, -1.0, 1.0, nf);
    let m = tri(4.0, 1.0, 2.0, 1.0 / (6.0 * nf));
    let e = real_mat(n, |i, j| if i == n - 1 && j == n - 1 { 1.0 } else { 0.0 });
    (k, m, e)
}

/// `(z − 1) T(z) = −K + z (K + E + M) − z² M`; its extra roots sit at `z = 1`.
pub fn loaded_string_polynomial(n: usize) -> MatrixPolynomial {
    let (k, m, e) = loaded_string_matrices(n);
    let one = C64::new(1.0, 0.0);
    MatrixPolynomial::new(vec![scaled(&k, -one), add(&add(&k, &e), &m), scaled(&m, -one)])
}

/// `z² M + z C + K`.
pub fn quadratic_polynomial(m: &DenseMatrix, c: &DenseMatrix, k: &DenseMatrix) -> MatrixPolynomial {
    MatrixPolynomial::new(vec![to_mat(k), to_mat(c), to_mat(m)])
}

/// `q(z) T(z)` with `q = ∏ⱼ (z + bⱼ)` for
/// `T(z) = z² M + K_s + G∞ (1 + Σⱼ aⱼ z/(z + bⱼ)) K_v`, of degree `2 + J`.
pub fn rational_damping_polynomial(
    m: &DenseMatrix,
    ks: &DenseMatrix,
    kv: &DenseMatrix,
    g_inf: f64,
    a: &[f64],
    b: &[f64],
) -> MatrixPolynomial {
    let (m, ks, kv) = (to_mat(m), to_mat(ks), to_mat(kv));
    let n = m.nrows();
    let q = poly_from_shifts(b);
    let degree = 2 + b.len();
    let mut coeffs = vec![Mat::<C64>::zeros(n, n); degree + 1];
    let base = add(&ks, &scaled(&kv, C64::new(g_inf, 0.0)));
    for (k, &qk) in q.iter().enumerate() {
        coeffs[k] = add(&coeffs[k], &scaled(&base, C64::new(qk, 0.0)));
        coeffs[k + 2] = add(&coeffs[k + 2], &scaled(&m, C64::new(qk, 0.0)));
    }
    for j in 0..b.len() {
        let others: Vec<f64> = b.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
        let qj = poly_from_shifts(&others);
        for (k, &c) in qj.iter().enumerate() {
            coeffs[k + 1] = add(&coeffs[k + 1], &scaled(&kv, C64::new(g_inf * a[j] * c, 0.0)));
        }
    }
    MatrixPolynomial::new(coeffs)
}

/// Analytic matrix function with its derivative, for determinant-based root
/// finding.
pub trait AnalyticMatrix {
    fn value(&self, z: C64) -> Mat<C64>;
    fn derivative(&self, z: C64) -> Mat<C64>;
}

/// `T(z) = K − z² M + i Σⱼ √(z² − κⱼ²) Wⱼ` built from its own matrices.
pub struct GunOracle {
    pub k: Mat<C64>,
    pub m: Mat<C64>,
    pub w: Vec<Mat<C64>>,
    pub kappa: Vec<f64>,
}

impl AnalyticMatrix for GunOracle {
    fn value(&self, z: C64) -> Mat<C64> {
        let i = C64::new(0.0, 1.0);
        let mut t = add(&self.k, &scaled(&self.m, -z * z));
        for (w, &kp) in self.w.iter().zip(&self.kappa) {
            t = add(&t, &scaled(w, i * (z * z - kp * kp).sqrt()));
        }
        t
    }

    fn derivative(&self, z: C64) -> Mat<C64> {
        let i = C64::new(0.0, 1.0);
        let mut t = scaled(&self.m, -2.0 * z);
        for (w, &kp) in self.w.iter().zip(&self.kappa) {
            t = add(&t, &scaled(w, i * z / (z * z - kp * kp).sqrt()));
        }
        t
    }
}

/// `log |det T(z)|` as the sum of log singular values.
pub fn log_abs_det(t: &Mat<C64>) -> f64 {
    let svd = Svd::new_thin(t.as_ref()).expect("svd converged");
    let s = svd.S().column_vector();
    (0..s.nrows()).map(|i| s[i].re.abs().max(f64::MIN_POSITIVE).ln()).sum()
}

/// Newton on `det T` using `det'/det = tr(T⁻¹ T')`; an exactly singular
/// `T(z)` is itself a root.
pub fn newton_det(f: &impl AnalyticMatrix, mut z: C64, max_iter: usize) -> Option<C64> {
    for _ in 0..max_iter {
        let t = f.value(z);
        let lu = PartialPivLu::new(t.as_ref());
        let x = lu.solve(f.derivative(z).as_ref());
        let trace: C64 = (0..x.nrows()).map(|i| x[(i, i)]).sum();
        if !(trace.re.is_finite() && trace.im.is_finite()) {
            return Some(z);
        }
        if trace.norm() == 0.0 {
            return None;
        }
        let step = trace.inv();
        z -= step;
        if step.norm() <= 1e-14 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// Local minima of `log |det T|` on an `nx × ny` grid over a rectangle,
/// refined by Newton and deduplicated; only roots inside the rectangle are kept.
pub fn determinant_scan(f: &impl AnalyticMatrix, region: &Region, nx: usize, ny: usize) -> Vec<C64> {
    let Region::Rectangle {
        lower_left,
        upper_right,
    } = *region
    else {
        panic!("determinant scan needs a rectangle");
    };
    let point = |i: usize, j: usize| {
        C64::new(
            lower_left.re + (upper_right.re - lower_left.re) * i as f64 / (nx - 1) as f64,
            lower_left.im + (upper_right.im - lower_left.im) * j as f64 / (ny - 1) as f64,
        )
    };
    let grid: Vec<Vec<f64>> = (0..nx).map(|i| (0..ny).map(|j| log_abs_det(&f.value(point(i, j)))).collect()).collect();
    let mut roots: Vec<C64> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let v = grid[i][j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    (di == 0 && dj == 0) || a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 || grid[a as usize][b as usize] >= v
                })
            });
            if !is_min {
                continue;
            }
            if let Some(z) = newton_det(f, point(i, j), 60) {
                let scale = region.diameter();
                if region.contains(z, 0.0) && roots.iter().all(|r| (r - z).norm() > 1e-8 * scale) {
                    roots.push(z);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re));
    roots
}

/// Largest relative distance from each of `found` to its nearest `reference`
/// value, and how many `reference` values inside `region` (away from its
/// boundary by `margin` times the diameter) have a partner in `found`.
#[derive(Clone, Debug, PartialEq)]
pub struct Match {
    pub worst_relative: f64,
    /// Computed value and its nearest reference for the worst distance.
    pub worst_pair: Option<(C64, C64)>,
    pub reference_inside: usize,
    pub matched: usize,
    /// Strictly inside reference values with no partner within tolerance.
    pub missing: Vec<C64>,
}

impl Match {
    pub fn ok(&self, tol: f64) -> bool {
        self.reference_inside > 0 && self.missing.is_empty() && self.worst_relative <= tol
    }
}

/// Inside the region by at least `margin` times its diameter; interval
/// members may carry an imaginary part up to `1e-8` times the diameter.
pub fn well_inside(region: &Region, z: C64, margin: f64) -> bool {
    match *region {
        Region::Interval { a, b } => {
            let m = margin * (b - a);
            z.im.abs() <= 1e-8 * (b - a) && z.re >= a + m && z.re <= b - m
        }
        _ => region.contains(z, -margin),
    }
}

pub fn match_eigenvalues(found: &[C64], reference: &[C64], region: &Region, margin: f64, tol: f64) -> Match {
    let relative = |z: C64, r: C64| (r - z).norm() / r.norm().max(f64::MIN_POSITIVE);
    let nearest = |z: C64, set: &[C64]| {
        set.iter()
            .map(|&r| (relative(z, r), r))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    };
    let mut worst_relative = 0.0;
    let mut worst_pair = None;
    for &z in found {
        match nearest(z, reference) {
            Some((d, r)) if d >= worst_relative => {
                worst_relative = d;
                worst_pair = Some((z, r));
            }
            None => worst_relative = f64::INFINITY,
            _ => {}
        }
    }
    let strict: Vec<C64> = reference.iter().copied().filter(|&r| well_inside(region, r, margin)).collect();
    let missing: Vec<C64> = strict
        .iter()
        .copied()
        .filter(|&r| !found.iter().any(|&z| relative(z, r) <= tol))
        .collect();
    Match {
        worst_relative,
        worst_pair,
        reference_inside: strict.len(),
        matched: strict.len() - missing.len(),
        missing,
    }
}
