//! Nonlinear eigenvalue problems `T(z) v = 0` and the canonical test families.
//!
//! A problem is either in split form `T(z) = Σⱼ fⱼ(z) Aⱼ` (where one matrix
//! may carry a sum of scalar functions) or a black box that only evaluates
//! and solves.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, DenseMatrix, PivotReport};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionFamily {
    Constant,
    /// `z^p`
    Monomial { p: u32 },
    /// `z / (z − σ)`
    RationalString { sigma: f64 },
    /// `a z / (z + b)`
    RationalDamping { a: f64, b: f64 },
    /// `i √(z² − κ²)` on the principal branch.
    SqrtBranch { kappa: f64 },
}

impl FunctionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionFamily::Constant => "constant",
            FunctionFamily::Monomial { .. } => "monomial",
            FunctionFamily::RationalString { .. } => "rational_string",
            FunctionFamily::RationalDamping { .. } => "rational_damping",
            FunctionFamily::SqrtBranch { .. } => "sqrt_branch",
        }
    }
}

/// `coefficient · family(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarFunction {
    /// A number or a `[re, im]` pair; 1 when omitted.
    #[serde(default = "unit_coefficient", deserialize_with = "real_or_complex")]
    pub coefficient: C64,
    #[serde(flatten)]
    pub family: FunctionFamily,
}

fn unit_coefficient() -> C64 {
    C64::new(1.0, 0.0)
}

fn real_or_complex<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Coefficient {
        Real(f64),
        Pair(f64, f64),
    }
    Ok(match Coefficient::deserialize(d)? {
        Coefficient::Real(re) => C64::new(re, 0.0),
        Coefficient::Pair(re, im) => C64::new(re, im),
    })
}

impl ScalarFunction {
    pub fn new(coefficient: C64, family: FunctionFamily) -> Result<Self> {
        let f = Self { coefficient, family };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coefficient: C64::new(c, 0.0),
            family: FunctionFamily::Constant,
        }
    }

    pub fn monomial(c: f64, p: u32) -> Self {
        Self {
            coefficient: C64::new(c, 0.0),
            family: FunctionFamily::Monomial { p },
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        let ok = finite(self.coefficient.re)
            && finite(self.coefficient.im)
            && match self.family {
                FunctionFamily::Constant | FunctionFamily::Monomial { .. } => true,
                FunctionFamily::RationalString { sigma } => finite(sigma),
                FunctionFamily::RationalDamping { a, b } => finite(a) && finite(b),
                FunctionFamily::SqrtBranch { kappa } => finite(kappa) && kappa >= 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters for {:?}", self)))
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let base = match self.family {
            FunctionFamily::Constant => C64::new(1.0, 0.0),
            FunctionFamily::Monomial { p } => z.powu(p),
            FunctionFamily::RationalString { sigma } => z / (z - sigma),
            FunctionFamily::RationalDamping { a, b } => a * z / (z + b),
            FunctionFamily::SqrtBranch { kappa } => C64::new(0.0, 1.0) * (z * z - kappa * kappa).sqrt(),
        };
        self.coefficient * base
    }

    /// Whether `f(z̄) = conj f(z)`.
    pub fn is_real(&self) -> bool {
        self.coefficient.im == 0.0 && !matches!(self.family, FunctionFamily::SqrtBranch { .. })
    }

    /// Poles and branch points.
    pub fn singular_points(&self) -> Vec<C64> {
        match self.family {
            FunctionFamily::RationalString { sigma } => vec![C64::new(sigma, 0.0)],
            FunctionFamily::RationalDamping { b, .. } => vec![C64::new(-b, 0.0)],
            FunctionFamily::SqrtBranch { kappa } if kappa == 0.0 => vec![C64::new(0.0, 0.0)],
            FunctionFamily::SqrtBranch { kappa } => vec![C64::new(-kappa, 0.0), C64::new(kappa, 0.0)],
            _ => Vec::new(),
        }
    }
}

/// Compressed sparse column matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::dims(format!("index below {nrows}x{ncols}"), format!("({i}, {j})")));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<C64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], j, self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = Mat::<C64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        DenseMatrix::complex_unchecked(m).into_real_if_exact()
    }

    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.values[self.col_ptr[j]..self.col_ptr[j + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `A · X` for a dense `X`.
    pub fn matmul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = Mat::<C64>::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for j in 0..self.ncols {
                let xj = x.get(j, c);
                if xj == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    out[(self.row_idx[k], c)] += self.values[k] * xj;
                }
            }
        }
        DenseMatrix::complex_unchecked(out)
    }
}

#[derive(Clone, Debug)]
pub enum TermMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl TermMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            TermMatrix::Dense(m) => m.shape(),
            TermMatrix::Sparse(m) => (m.nrows(), m.ncols()),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            TermMatrix::Dense(m) => m.is_real(),
            TermMatrix::Sparse(m) => m.is_real(),
        }
    }

    pub fn norm_one(&self) -> f64 {
        match self {
            TermMatrix::Dense(m) => m.norm_one(),
            TermMatrix::Sparse(m) => m.norm_one(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            TermMatrix::Dense(m) => m.clone(),
            TermMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn matmul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            TermMatrix::Dense(m) => m.matmul(x),
            TermMatrix::Sparse(m) => {
                if m.ncols() != x.nrows() {
                    return Err(Error::dims(format!("{} rows", m.ncols()), format!("{} rows", x.nrows())));
                }
                Ok(m.matmul_dense(x))
            }
        }
    }

    /// `Qᴴ A Q`.
    pub fn project(&self, q: &DenseMatrix) -> Result<DenseMatrix> {
        q.adjoint().matmul(&self.matmul_dense(q)?)
    }
}

/// One matrix of a split form, weighted by a sum of scalar functions.
#[derive(Clone, Debug)]
pub struct Term {
    pub functions: Vec<ScalarFunction>,
    pub matrix: TermMatrix,
}

impl Term {
    pub fn new(function: ScalarFunction, matrix: DenseMatrix) -> Self {
        Self {
            functions: vec![function],
            matrix: TermMatrix::Dense(matrix),
        }
    }

    pub fn coefficient(&self, z: C64) -> C64 {
        self.functions.iter().map(|f| f.eval(z)).sum()
    }

    pub fn is_real(&self) -> bool {
        self.functions.iter().all(ScalarFunction::is_real) && self.matrix.is_real()
    }
}

type EvalFn = dyn Fn(C64) -> Result<DenseMatrix> + Send + Sync;
type SolveFn = dyn Fn(C64, &DenseMatrix) -> Result<DenseMatrix> + Send + Sync;

#[derive(Clone)]
pub struct BlackBox {
    evaluate: Arc<EvalFn>,
    solve: Option<Arc<SolveFn>>,
}

#[derive(Clone)]
enum Form {
    Split(Vec<Term>),
    BlackBox(BlackBox),
}

/// Solution of `T(z) X = B` with optional pivot diagnostics.
#[derive(Clone, Debug)]
pub struct ProblemSolve {
    pub solution: DenseMatrix,
    pub pivots: Option<PivotReport>,
}

#[derive(Clone)]
pub struct NepProblem {
    name: String,
    n: usize,
    form: Form,
    real: bool,
    singular_points: Vec<C64>,
}

impl fmt::Debug for NepProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            Form::Split(t) => format!("split({} terms)", t.len()),
            Form::BlackBox(_) => "black-box".to_string(),
        };
        f.debug_struct("NepProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("form", &form)
            .field("real", &self.real)
            .field("singular_points", &self.singular_points)
            .finish()
    }
}

impl NepProblem {
    pub fn split(name: impl Into<String>, terms: Vec<Term>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::invalid("a split problem needs at least one term"));
        };
        let n = first.matrix.shape().0;
        for t in &terms {
            if t.matrix.shape() != (n, n) {
                return Err(Error::dims(format!("{n}x{n}"), format!("{:?}", t.matrix.shape())));
            }
            if t.functions.is_empty() {
                return Err(Error::invalid("every term needs at least one scalar function"));
            }
            for f in &t.functions {
                f.validate()?;
            }
        }
        let real = terms.iter().all(Term::is_real);
        let mut singular_points: Vec<C64> = Vec::new();
        for p in terms.iter().flat_map(|t| t.functions.iter().flat_map(|f| f.singular_points())) {
            if !singular_points.contains(&p) {
                singular_points.push(p);
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            form: Form::Split(terms),
            real,
            singular_points,
        })
    }

    /// Problem known only through `evaluate` and, optionally, a custom solver.
    pub fn black_box(
        name: impl Into<String>,
        n: usize,
        real: bool,
        singular_points: Vec<C64>,
        evaluate: impl Fn(C64) -> Result<DenseMatrix> + Send + Sync + 'static,
        solve: Option<Arc<SolveFn>>,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            form: Form::BlackBox(BlackBox {
                evaluate: Arc::new(evaluate),
                solve,
            }),
            real,
            singular_points,
        }
    }

    /// The same problem seen only through its evaluation callback.
    pub fn as_black_box(&self) -> NepProblem {
        let inner = self.clone();
        NepProblem::black_box(
            format!("{} (black box)", self.name),
            self.n,
            self.real,
            self.singular_points.clone(),
            move |z| inner.evaluate(z),
            None,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn singular_points(&self) -> &[C64] {
        &self.singular_points
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.form {
            Form::Split(t) => Some(t),
            Form::BlackBox(_) => None,
        }
    }

    pub fn is_split(&self) -> bool {
        matches!(self.form, Form::Split(_))
    }

    fn has_sparse_terms(&self) -> bool {
        self.terms()
            .is_some_and(|t| t.iter().any(|t| matches!(t.matrix, TermMatrix::Sparse(_))))
    }

    pub fn check_point(&self, z: C64) -> Result<()> {
        for &p in &self.singular_points {
            if (z - p).norm() <= 4.0 * f64::EPSILON * p.norm().max(1.0) {
                return Err(Error::SingularPoint { z });
            }
        }
        Ok(())
    }

    /// `T(z)` as a dense matrix; real storage for real problems at real `z`.
    pub fn evaluate(&self, z: C64) -> Result<DenseMatrix> {
        self.check_point(z)?;
        match &self.form {
            Form::BlackBox(b) => (b.evaluate)(z),
            Form::Split(terms) => {
                let real_path = self.real && z.im == 0.0;
                let mut acc = DenseMatrix::zeros(self.n, self.n);
                for t in terms {
                    let mut c = t.coefficient(z);
                    if real_path {
                        c.im = 0.0;
                    }
                    if !(c.re.is_finite() && c.im.is_finite()) {
                        return Err(Error::SingularPoint { z });
                    }
                    match &t.matrix {
                        TermMatrix::Dense(m) => acc.add_scaled(c, m)?,
                        TermMatrix::Sparse(m) => {
                            for (i, j, v) in m.triplets() {
                                let cur = acc.get(i, j);
                                acc.set_entry(i, j, cur + c * v);
                            }
                        }
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `T(z) X`.
    pub fn apply(&self, z: C64, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrows() != self.n {
            return Err(Error::dims(format!("{} rows", self.n), format!("{} rows", x.nrows())));
        }
        match &self.form {
            Form::Split(terms) if self.has_sparse_terms() => {
                self.check_point(z)?;
                let mut acc = DenseMatrix::zeros(self.n, x.ncols());
                for t in terms {
                    acc.add_scaled(t.coefficient(z), &t.matrix.matmul_dense(x)?)?;
                }
                Ok(acc)
            }
            _ => self.evaluate(z)?.matmul(x),
        }
    }

    /// Solves `T(z) X = B`.
    pub fn solve(&self, z: C64, b: &DenseMatrix) -> Result<ProblemSolve> {
        if b.nrows() != self.n {
            return Err(Error::dims(format!("{} rows", self.n), format!("{} rows", b.nrows())));
        }
        if let Form::BlackBox(BlackBox { solve: Some(s), .. }) = &self.form {
            self.check_point(z)?;
            return Ok(ProblemSolve {
                solution: s(z, b)?,
                pivots: None,
            });
        }
        if self.has_sparse_terms() {
            return self.sparse_solve(z, b);
        }
        let t = self.evaluate(z)?;
        let r = kernels::solve_multi_report(&t, b)?;
        Ok(ProblemSolve {
            solution: r.solution,
            pivots: Some(r.pivots),
        })
    }

    fn sparse_solve(&self, z: C64, b: &DenseMatrix) -> Result<ProblemSolve> {
        self.check_point(z)?;
        let terms = self.terms().expect("split form");
        let mut triplets = Vec::new();
        for t in terms {
            let c = t.coefficient(z);
            match &t.matrix {
                TermMatrix::Sparse(m) => {
                    triplets.extend(m.triplets().map(|(i, j, v)| Triplet::new(i, j, c * v)));
                }
                TermMatrix::Dense(m) => {
                    for j in 0..self.n {
                        for i in 0..self.n {
                            let v = m.get(i, j);
                            if v != C64::new(0.0, 0.0) {
                                triplets.push(Triplet::new(i, j, c * v));
                            }
                        }
                    }
                }
            }
        }
        let a = SparseColMat::<usize, C64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::invalid(format!("sparse assembly failed: {e:?}")))?;
        let lu = a.sp_lu().map_err(|_| Error::SingularMatrix {
            pivot: 0.0,
            scale: 0.0,
        })?;
        let rhs = b.complex_mat();
        let x = lu.solve(rhs.as_ref().as_ref());
        let solution = DenseMatrix::from_complex(x).map_err(|_| Error::SingularMatrix {
            pivot: 0.0,
            scale: 0.0,
        })?;
        Ok(ProblemSolve {
            solution,
            pivots: None,
        })
    }

    /// `Σⱼ (Σ_f |f(λ)|) ‖Aⱼ‖₁` for split forms.
    pub fn weighted_scale(&self, lambda: C64) -> Option<f64> {
        self.terms().map(|terms| {
            terms
                .iter()
                .map(|t| t.functions.iter().map(|f| f.eval(lambda).norm()).sum::<f64>() * t.matrix.norm_one())
                .sum()
        })
    }
}

fn tridiagonal(n: usize, diag: f64, off: f64, last: f64, scale: f64) -> DenseMatrix {
    DenseMatrix::real_unchecked(Mat::from_fn(n, n, |i, j| {
        let v = if i == j {
            if i == n - 1 {
                last
            } else {
                diag
            }
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            0.0
        };
        scale * v
    }))
}

/// Finite-element string with a spring-loaded mass at the free end:
/// `T(z) = K + z/(z − 1) eₙeₙᵀ − z M`.
pub fn loaded_string(n: usize) -> Result<NepProblem> {
    if n < 2 {
        return Err(Error::invalid("the loaded string needs n >= 2"));
    }
    let nf = n as f64;
    let k = tridiagonal(n, 2.0, -1.0, 1.0, nf);
    let m = tridiagonal(n, 4.0, 1.0, 2.0, 1.0 / (6.0 * nf));
    let e = DenseMatrix::real_unchecked(Mat::from_fn(n, n, |i, j| if i == n - 1 && j == n - 1 { 1.0 } else { 0.0 }));
    NepProblem::split(
        format!("loaded_string({n})"),
        vec![
            Term::new(ScalarFunction::constant(1.0), k),
            Term::new(
                ScalarFunction {
                    coefficient: C64::new(1.0, 0.0),
                    family: FunctionFamily::RationalString { sigma: 1.0 },
                },
                e,
            ),
            Term::new(ScalarFunction::monomial(-1.0, 1), m),
        ],
    )
}

fn same_square(mats: &[&DenseMatrix]) -> Result<usize> {
    let n = mats[0].nrows();
    for m in mats {
        if m.shape() != (n, n) {
            return Err(Error::dims(format!("{n}x{n}"), format!("{:?}", m.shape())));
        }
    }
    Ok(n)
}

/// `T(z) = z² M + z C + K`.
pub fn quadratic(m: DenseMatrix, c: DenseMatrix, k: DenseMatrix) -> Result<NepProblem> {
    let n = same_square(&[&m, &c, &k])?;
    NepProblem::split(
        format!("quadratic({n})"),
        vec![
            Term::new(ScalarFunction::monomial(1.0, 2), m),
            Term::new(ScalarFunction::monomial(1.0, 1), c),
            Term::new(ScalarFunction::constant(1.0), k),
        ],
    )
}

/// Viscoelastic model `T(z) = z² M + K_s + G∞ (1 + Σⱼ aⱼ z/(z + bⱼ)) K_v`.
pub fn rational_damping(
    m: DenseMatrix,
    ks: DenseMatrix,
    kv: DenseMatrix,
    g_inf: f64,
    a: &[f64],
    b: &[f64],
) -> Result<NepProblem> {
    let n = same_square(&[&m, &ks, &kv])?;
    if a.len() != b.len() {
        return Err(Error::dims(format!("{} relaxation rates", a.len()), format!("{} relaxation rates", b.len())));
    }
    if let Some(bad) = b.iter().find(|&&bj| !(bj > 0.0)) {
        return Err(Error::invalid(format!("relaxation rates must be positive, got {bad}")));
    }
    let mut damping = vec![ScalarFunction::constant(g_inf)];
    for (&aj, &bj) in a.iter().zip(b) {
        damping.push(ScalarFunction {
            coefficient: C64::new(g_inf, 0.0),
            family: FunctionFamily::RationalDamping { a: aj, b: bj },
        });
    }
    NepProblem::split(
        format!("rational_damping({n})"),
        vec![
            Term::new(ScalarFunction::monomial(1.0, 2), m),
            Term::new(ScalarFunction::constant(1.0), ks),
            Term {
                functions: damping,
                matrix: TermMatrix::Dense(kv),
            },
        ],
    )
}

/// Accelerator cavity model `T(z) = K − z² M + i Σⱼ √(z² − κⱼ²) Wⱼ`.
pub fn gun_form(k: DenseMatrix, m: DenseMatrix, w: Vec<DenseMatrix>, kappa: &[f64]) -> Result<NepProblem> {
    let mut all = vec![&k, &m];
    all.extend(w.iter());
    let n = same_square(&all)?;
    if w.len() != kappa.len() {
        return Err(Error::dims(format!("{} wave numbers", w.len()), format!("{} wave numbers", kappa.len())));
    }
    if let Some(bad) = kappa.iter().find(|&&x| !(x >= 0.0)) {
        return Err(Error::invalid(format!("cutoff wave numbers must be nonnegative, got {bad}")));
    }
    let mut terms = vec![
        Term::new(ScalarFunction::constant(1.0), k),
        Term::new(ScalarFunction::monomial(-1.0, 2), m),
    ];
    for (wj, &kj) in w.into_iter().zip(kappa) {
        terms.push(Term::new(
            ScalarFunction {
                coefficient: C64::new(1.0, 0.0),
                family: FunctionFamily::SqrtBranch { kappa: kj },
            },
            wj,
        ));
    }
    NepProblem::split(format!("gun_form({n})"), terms)
}
