//! Run configuration, Matrix Market input, execution of configured runs and
//! result serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DenseMatrix;
use crate::probing::ProbeTable;
use crate::problems::{loaded_string, NepProblem, ScalarFunction, SparseMatrix, Term, TermMatrix};
use crate::rsrr::{self, InnerParams, RsrrParams, Scheme, DEFAULT_DELTA, DEFAULT_INNER_ORDER, DEFAULT_INNER_POINTS};
use crate::sampling::{chebyshev_points, tensor_chebyshev_grid, Region, SamplingSet};
use crate::ss_solver::{self, Algorithm, EigResult, GapReport, Provenance, SubspaceReport, DEFAULT_TOL_GAP};
use crate::C64;

pub const BUILTIN_PROBLEMS: &[&str] = &["loaded_string"];
pub const FUNCTION_FAMILIES: &[&str] = &["constant", "monomial", "rational_string", "rational_damping", "sqrt_branch"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Builtin {
        builtin: String,
        n: usize,
    },
    /// One matrix file per scalar function, paths relative to the config file.
    Split {
        matrices: Vec<PathBuf>,
        functions: Vec<ScalarFunction>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    /// Chebyshev points of an interval.
    Chebyshev,
    /// Quadrature points on the region's default contour.
    Contour,
    /// Tensor Chebyshev grid of a rectangle with `nx · ny = N`.
    Grid { nx: usize, ny: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerConfig {
    pub points: usize,
    pub order: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            points: DEFAULT_INNER_POINTS,
            order: DEFAULT_INNER_ORDER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("."),
            prefix: "run".to_string(),
        }
    }
}

/// Validated run description with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    #[serde(rename = "N")]
    pub n_points: usize,
    #[serde(rename = "L")]
    pub l: usize,
    /// Moment order for pencil runs and the moment scheme; unused otherwise.
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub seed: u64,
    pub delta: f64,
    pub tol_gap: f64,
    pub problem: ProblemSpec,
    pub region: Region,
    pub points: PointSpec,
    pub inner: InnerConfig,
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algorithm: Option<String>,
    #[serde(rename = "N")]
    n: Option<i64>,
    #[serde(rename = "L")]
    l: Option<i64>,
    #[serde(rename = "K")]
    k: Option<i64>,
    seed: Option<i64>,
    delta: Option<f64>,
    tol_gap: Option<f64>,
    problem: Option<toml::Table>,
    region: Option<toml::Value>,
    points: Option<toml::Value>,
    inner: Option<toml::Value>,
    output: Option<toml::Value>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn quoted_field(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn positive(field: &str, value: Option<i64>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) if v >= 1 => Ok(Some(v as usize)),
        Some(v) => Err(Error::validation(field, format!("must be a positive integer, got {v}"))),
    }
}

fn typed<T: serde::de::DeserializeOwned>(field: &str, value: toml::Value) -> Result<T> {
    value.try_into().map_err(|e: toml::de::Error| Error::validation(field, e.message().to_string()))
}

fn parse_function(index: usize, value: &toml::Value) -> Result<ScalarFunction> {
    let field = format!("problem.functions[{index}]");
    let table = value.as_table().ok_or_else(|| Error::validation(&field, "expected a table"))?;
    let family = table
        .get("family")
        .and_then(toml::Value::as_str)
        .ok_or_else(|| Error::validation(&field, "missing `family`"))?;
    if !FUNCTION_FAMILIES.contains(&family) {
        return Err(Error::UnknownFunctionFamily(family.to_string()));
    }
    let f: ScalarFunction = typed(&field, value.clone())?;
    ScalarFunction::new(f.coefficient, f.family).map_err(|e| Error::validation(&field, e.to_string()))
}

fn parse_problem(table: toml::Table) -> Result<ProblemSpec> {
    let keys: Vec<&str> = table.keys().map(String::as_str).collect();
    if let Some(name) = table.get("builtin") {
        if let Some(extra) = keys.iter().find(|k| !matches!(**k, "builtin" | "n")) {
            return Err(Error::validation(format!("problem.{extra}"), "unexpected key for a built-in problem"));
        }
        let name = name.as_str().ok_or_else(|| Error::validation("problem.builtin", "expected a string"))?;
        if !BUILTIN_PROBLEMS.contains(&name) {
            return Err(Error::validation("problem.builtin", format!("unknown problem `{name}`")));
        }
        let n = table
            .get("n")
            .and_then(toml::Value::as_integer)
            .ok_or_else(|| Error::validation("problem.n", "missing or not an integer"))?;
        if n < 2 {
            return Err(Error::validation("problem.n", format!("must be at least 2, got {n}")));
        }
        return Ok(ProblemSpec::Builtin {
            builtin: name.to_string(),
            n: n as usize,
        });
    }
    if let Some(extra) = keys.iter().find(|k| !matches!(**k, "matrices" | "functions")) {
        return Err(Error::validation(format!("problem.{extra}"), "unexpected key for a split problem"));
    }
    let matrices: Vec<PathBuf> = typed(
        "problem.matrices",
        table
            .get("matrices")
            .cloned()
            .ok_or_else(|| Error::validation("problem", "needs `builtin` or `matrices`"))?,
    )?;
    let functions = table
        .get("functions")
        .and_then(toml::Value::as_array)
        .ok_or_else(|| Error::validation("problem.functions", "missing or not an array"))?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_function(i, v))
        .collect::<Result<Vec<_>>>()?;
    if matrices.is_empty() {
        return Err(Error::validation("problem.matrices", "at least one matrix is required"));
    }
    if matrices.len() != functions.len() {
        return Err(Error::validation(
            "problem.functions",
            format!("{} functions for {} matrices", functions.len(), matrices.len()),
        ));
    }
    Ok(ProblemSpec::Split { matrices, functions })
}

impl RunConfig {
    /// Parses and validates TOML text; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            field: quoted_field(e.message()),
            message: e.message().to_string(),
        })?;
        let base_dir = base_dir.into();
        let algorithm: Algorithm = match raw.algorithm {
            Some(a) => typed("algorithm", toml::Value::String(a))?,
            None => return Err(Error::validation("algorithm", "missing")),
        };
        let n_points = positive("N", raw.n)?.ok_or_else(|| Error::validation("N", "missing"))?;
        let l = positive("L", raw.l)?.unwrap_or(1);
        let seed = match raw.seed {
            None => 1,
            Some(s) if s >= 0 => s as u64,
            Some(s) => return Err(Error::validation("seed", format!("must be nonnegative, got {s}"))),
        };
        let delta = raw.delta.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::validation("delta", format!("must lie in (0, 1), got {delta}")));
        }
        let tol_gap = raw.tol_gap.unwrap_or(DEFAULT_TOL_GAP);
        if !(tol_gap > 1.0 && tol_gap.is_finite()) {
            return Err(Error::validation("tol_gap", format!("must be a finite number above 1, got {tol_gap}")));
        }
        let k = positive("K", raw.k)?;
        let k = match algorithm {
            Algorithm::SsRi | Algorithm::SsCi | Algorithm::SsFull => {
                let k = k.unwrap_or(n_points / 4).max(1);
                if 2 * k > n_points {
                    return Err(Error::validation("K", format!("2K = {} exceeds N = {n_points}", 2 * k)));
                }
                Some(k)
            }
            Algorithm::RsrrMoment => {
                let k = k.unwrap_or(n_points);
                if k > n_points {
                    return Err(Error::validation("K", format!("K = {k} exceeds N = {n_points}")));
                }
                Some(k)
            }
            Algorithm::Rsrr | Algorithm::RsrrTwoStage => None,
        };
        let problem = parse_problem(raw.problem.ok_or_else(|| Error::validation("problem", "missing"))?)?;
        let region: Region = typed("region", raw.region.ok_or_else(|| Error::validation("region", "missing"))?)?;
        region.validate().map_err(|e| Error::validation("region", e.to_string()))?;
        let points = match raw.points {
            Some(v) => typed("points", v)?,
            None if algorithm != Algorithm::SsCi && matches!(region, Region::Interval { .. }) => PointSpec::Chebyshev,
            None => PointSpec::Contour,
        };
        match (points, &region) {
            (PointSpec::Chebyshev, Region::Interval { .. }) | (PointSpec::Contour, _) => {}
            (PointSpec::Grid { nx, ny }, Region::Rectangle { .. }) => {
                if nx * ny != n_points {
                    return Err(Error::validation("points", format!("grid {nx} x {ny} does not have N = {n_points} points")));
                }
            }
            (p, r) => return Err(Error::validation("points", format!("{p:?} points do not fit region {r:?}"))),
        }
        if algorithm == Algorithm::SsCi && points != PointSpec::Contour {
            return Err(Error::validation("points", "ss-ci needs contour points"));
        }
        let inner: InnerConfig = match raw.inner {
            Some(v) => typed("inner", v)?,
            None => InnerConfig::default(),
        };
        if inner.order == 0 || 2 * inner.order > inner.points {
            return Err(Error::validation("inner", "needs order >= 1 and 2 * order <= points"));
        }
        let output: OutputConfig = match raw.output {
            Some(v) => typed("output", v)?,
            None => OutputConfig::default(),
        };
        if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
            return Err(Error::validation("output.prefix", "must be a nonempty file name"));
        }
        let config = Self {
            algorithm,
            n_points,
            l,
            k,
            seed,
            delta,
            tol_gap,
            problem,
            region,
            points,
            inner,
            output,
            base_dir,
        };
        if let ProblemSpec::Split { matrices, .. } = &config.problem {
            for (i, m) in matrices.iter().enumerate() {
                if !config.resolve(m).is_file() {
                    return Err(Error::validation(format!("problem.matrices[{i}]"), format!("file {} not found", m.display())));
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("config serialization failed: {e}")))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn build_problem(&self) -> Result<NepProblem> {
        match &self.problem {
            ProblemSpec::Builtin { builtin, n } => match builtin.as_str() {
                "loaded_string" => loaded_string(*n),
                other => Err(Error::validation("problem.builtin", format!("unknown problem `{other}`"))),
            },
            ProblemSpec::Split { matrices, functions } => {
                let paths: Vec<PathBuf> = matrices.iter().map(|m| self.resolve(m)).collect();
                load_split_problem("split", &paths, functions)
            }
        }
    }

    pub fn build_sampling(&self) -> Result<SamplingSet> {
        match self.points {
            PointSpec::Chebyshev => chebyshev_points(&self.region, self.n_points),
            PointSpec::Contour => self.region.default_contour(self.n_points),
            PointSpec::Grid { nx, ny } => tensor_chebyshev_grid(&self.region, nx, ny),
        }
    }

    pub fn rsrr_params(&self) -> RsrrParams {
        RsrrParams {
            l: self.l,
            seed: self.seed,
            scheme: if self.algorithm == Algorithm::RsrrMoment {
                Scheme::Moment
            } else {
                Scheme::Sampling
            },
            moment_order: self.k,
            delta: self.delta,
            tol_gap: self.tol_gap,
            normalize: true,
            inner: InnerParams {
                points: self.inner.points,
                order: self.inner.order,
                contour: None,
            },
            interpolation_degree: None,
        }
    }

    pub fn output_paths(&self) -> OutputPaths {
        OutputPaths::new(self.resolve(&self.output.directory), &self.output.prefix)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    RunConfig::from_toml_str(&text, base)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

/// Reads a Matrix Market file: coordinate files become sparse, array files
/// dense. Symmetric, skew-symmetric and Hermitian storage is expanded.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<TermMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

pub fn parse_matrix_market(text: &str) -> Result<TermMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(format_err(1, format!("bad banner `{header}`")));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(format_err(1, format!("unsupported format `{other}`"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" if coordinate => Field::Pattern,
        other => return Err(format_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" if field == Field::Complex => Symmetry::Hermitian,
        other => return Err(format_err(1, format!("unsupported symmetry `{other}`"))),
    };
    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| format_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format_err(size_line, format!("bad size entry `{t}`"))))
        .collect::<Result<_>>()?;
    let expected_dims = if coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(format_err(size_line, format!("expected {expected_dims} size entries")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(format_err(size_line, "symmetric storage needs a square matrix"));
    }
    let value_count = match field {
        Field::Complex => 2,
        Field::Pattern => 0,
        _ => 1,
    };
    let parse_value = |line: usize, tokens: &[&str]| -> Result<C64> {
        let num = |t: &str| -> Result<f64> {
            let v: f64 = t.parse().map_err(|_| format_err(line, format!("bad number `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format_err(line, format!("non-finite value `{t}`")))
            }
        };
        Ok(match field {
            Field::Pattern => C64::new(1.0, 0.0),
            Field::Complex => C64::new(num(tokens[0])?, num(tokens[1])?),
            _ => C64::new(num(tokens[0])?, 0.0),
        })
    };
    let mirror = |i: usize, j: usize, v: C64| -> Option<(usize, usize, C64)> {
        if i == j {
            return None;
        }
        match symmetry {
            Symmetry::General => None,
            Symmetry::Symmetric => Some((j, i, v)),
            Symmetry::SkewSymmetric => Some((j, i, -v)),
            Symmetry::Hermitian => Some((j, i, v.conj())),
        }
    };
    if coordinate {
        let nnz = dims[2];
        let mut triplets = Vec::with_capacity(nnz * 2);
        let mut seen = 0usize;
        for (line, l) in data {
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() != 2 + value_count {
                return Err(format_err(line, format!("expected {} entries, found {}", 2 + value_count, tokens.len())));
            }
            let index = |t: &str, bound: usize| -> Result<usize> {
                match t.parse::<usize>() {
                    Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                    _ => Err(format_err(line, format!("index `{t}` outside 1..={bound}"))),
                }
            };
            let (i, j) = (index(tokens[0], rows)?, index(tokens[1], cols)?);
            if symmetry != Symmetry::General && i < j {
                return Err(format_err(line, "entry above the diagonal in symmetric storage"));
            }
            let v = parse_value(line, &tokens[2..])?;
            triplets.push((i, j, v));
            if let Some(m) = mirror(i, j, v) {
                triplets.push(m);
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(format_err(size_line, format!("declared {nnz} entries, found {seen}")));
        }
        Ok(TermMatrix::Sparse(SparseMatrix::from_triplets(rows, cols, &triplets)?))
    } else {
        let mut entries = vec![C64::new(0.0, 0.0); rows * cols];
        let positions: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| (0..rows).map(move |i| (i, j)))
            .filter(|&(i, j)| match symmetry {
                Symmetry::General => true,
                Symmetry::SkewSymmetric => i > j,
                _ => i >= j,
            })
            .collect();
        let mut next = positions.iter();
        for (line, l) in data {
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() != value_count {
                return Err(format_err(line, format!("expected {value_count} values, found {}", tokens.len())));
            }
            let &(i, j) = next.next().ok_or_else(|| format_err(line, "more values than the matrix holds"))?;
            let v = parse_value(line, &tokens)?;
            entries[i + j * rows] = v;
            if let Some((a, b, w)) = mirror(i, j, v) {
                entries[a + b * rows] = w;
            }
        }
        if next.next().is_some() {
            return Err(format_err(size_line, "fewer values than the matrix holds"));
        }
        Ok(TermMatrix::Dense(
            DenseMatrix::from_fn(rows, cols, |i, j| entries[i + j * rows])?.into_real_if_exact(),
        ))
    }
}

/// Coordinate general storage, real when every entry is real, with
/// round-trip exact numbers.
pub fn format_matrix_market(matrix: &TermMatrix) -> String {
    let (rows, cols) = matrix.shape();
    let triplets: Vec<(usize, usize, C64)> = match matrix {
        TermMatrix::Sparse(s) => s.triplets().collect(),
        TermMatrix::Dense(d) => (0..cols)
            .flat_map(|j| (0..rows).map(move |i| (i, j)))
            .map(|(i, j)| (i, j, d.get(i, j)))
            .filter(|t| t.2 != C64::new(0.0, 0.0))
            .collect(),
    };
    let real = triplets.iter().all(|t| t.2.im == 0.0);
    let mut out = format!(
        "%%MatrixMarket matrix coordinate {} general\n{rows} {cols} {}\n",
        if real { "real" } else { "complex" },
        triplets.len()
    );
    for (i, j, v) in triplets {
        if real {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v.re);
        } else {
            let _ = writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im);
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, matrix: &TermMatrix) -> Result<()> {
    fs::write(path, format_matrix_market(matrix))?;
    Ok(())
}

/// Split-form problem `Σⱼ fⱼ(z) Aⱼ` with `Aⱼ` read from `paths`.
pub fn load_split_problem(name: &str, paths: &[PathBuf], functions: &[ScalarFunction]) -> Result<NepProblem> {
    if paths.len() != functions.len() {
        return Err(Error::dims(format!("{} scalar functions", paths.len()), format!("{}", functions.len())));
    }
    let terms = paths
        .iter()
        .zip(functions)
        .map(|(p, f)| {
            let matrix = read_matrix_market(p).map_err(|e| match e {
                Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", p.display()))),
                other => other,
            })?;
            Ok(Term {
                functions: vec![*f],
                matrix,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NepProblem::split(name, terms)
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub result: EigResult,
    /// First-stage result of a two-stage run.
    pub stage1: Option<EigResult>,
    pub elapsed_seconds: f64,
}

/// Runs the configured algorithm.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let problem = config.build_problem()?;
    let sampling = config.build_sampling()?;
    let (result, stage1) = match config.algorithm {
        Algorithm::SsRi | Algorithm::SsCi => {
            let table = ProbeTable::make(&problem, &sampling, config.l, config.seed)?;
            (ss_solver::ss_solve(&problem, &table, &sampling, config.k.expect("resolved"), config.tol_gap)?, None)
        }
        Algorithm::SsFull => (ss_solver::ss_full(&problem, &sampling, config.k.expect("resolved"), config.tol_gap)?, None),
        Algorithm::Rsrr | Algorithm::RsrrMoment => (rsrr::rsrr_solve(&problem, &sampling, &config.rsrr_params())?, None),
        Algorithm::RsrrTwoStage => {
            let r = rsrr::rsrr_two_stage(&problem, &sampling, &config.rsrr_params())?;
            (r.stage2, Some(r.stage1))
        }
    };
    Ok(RunOutput {
        result,
        stage1,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Probe table of the configured sampling set.
pub fn probe_only(config: &RunConfig) -> Result<ProbeTable> {
    let problem = config.build_problem()?;
    let sampling = config.build_sampling()?;
    if config.algorithm == Algorithm::SsFull {
        let u = DenseMatrix::identity(problem.dimension());
        ProbeTable::with_probe(&problem, sampling.points(), u, config.seed)
    } else {
        ProbeTable::make(&problem, &sampling, config.l, config.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairRow {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub weighted_residual: Option<f64>,
    pub inside: bool,
}

/// Serializable summary of an [`EigResult`] without eigenvectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub accepted: bool,
    pub eigenpairs: Vec<EigenpairRow>,
    pub gap: GapReport,
    pub provenance: Provenance,
    pub subspace: Option<SubspaceReport>,
}

impl ResultRecord {
    pub fn from_result(result: &EigResult) -> Self {
        let eigenpairs = result
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, l)| EigenpairRow {
                index: i + 1,
                re: l.re,
                im: l.im,
                residual: result.residuals[i],
                weighted_residual: result.weighted_residuals.as_ref().map(|w| w[i]),
                inside: result.inside[i],
            })
            .collect();
        Self {
            accepted: result.accepted(),
            eigenpairs,
            gap: result.gap.clone(),
            provenance: result.provenance.clone(),
            subspace: result.subspace.clone(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.eigenpairs.iter().map(|r| C64::new(r.re, r.im)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub version: String,
    pub threads: usize,
    pub elapsed_seconds: f64,
    pub accepted: bool,
    pub eigenvalue_count: usize,
    pub inside_count: usize,
    pub stage1: Option<ResultRecord>,
}

impl RunMetadata {
    pub fn new(config: &RunConfig, output: &RunOutput) -> Self {
        Self {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            elapsed_seconds: output.elapsed_seconds,
            accepted: output.result.accepted(),
            eigenvalue_count: output.result.len(),
            inside_count: output.result.inside_count(),
            stage1: output.stage1.as_ref().map(ResultRecord::from_result),
        }
    }
}

/// Artifact locations `<directory>/<prefix>.<kind>`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub eigenpairs_csv: PathBuf,
    pub eigenpairs_json: PathBuf,
    pub sigma_csv: PathBuf,
    pub subspace_sigma_csv: PathBuf,
    pub metadata_json: PathBuf,
    pub probe_json: PathBuf,
}

impl OutputPaths {
    pub fn new(directory: impl AsRef<Path>, prefix: &str) -> Self {
        let d = directory.as_ref();
        let p = |kind: &str| d.join(format!("{prefix}.{kind}"));
        Self {
            eigenpairs_csv: p("eigenpairs.csv"),
            eigenpairs_json: p("eigenpairs.json"),
            sigma_csv: p("sigma.csv"),
            subspace_sigma_csv: p("subspace_sigma.csv"),
            metadata_json: p("metadata.json"),
            probe_json: p("probe.json"),
        }
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn sigma_rows(sigma: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    let s1 = sigma.first().copied().unwrap_or(1.0);
    sigma
        .iter()
        .enumerate()
        .map(move |(i, s)| vec![(i + 1).to_string(), format_float(*s), format_float(s / s1)])
}

/// Eigenpair table (CSV and JSON), Hankel singular values and, for
/// Rayleigh-Ritz runs, the scaled subspace singular values. Returns the
/// files written.
pub fn write_results(record: &ResultRecord, paths: &OutputPaths) -> Result<Vec<PathBuf>> {
    write_csv(
        &paths.eigenpairs_csv,
        &["index", "re", "im", "residual", "weighted_residual", "inside"],
        record.eigenpairs.iter().map(|r| {
            vec![
                r.index.to_string(),
                format_float(r.re),
                format_float(r.im),
                format_float(r.residual),
                r.weighted_residual.map(format_float).unwrap_or_default(),
                r.inside.to_string(),
            ]
        }),
    )?;
    ensure_parent(&paths.eigenpairs_json)?;
    fs::write(&paths.eigenpairs_json, record.to_json()?)?;
    write_csv(&paths.sigma_csv, &["index", "sigma", "scaled"], sigma_rows(&record.gap.singular_values))?;
    let mut written = vec![paths.eigenpairs_csv.clone(), paths.eigenpairs_json.clone(), paths.sigma_csv.clone()];
    if let Some(sub) = &record.subspace {
        write_csv(
            &paths.subspace_sigma_csv,
            &["index", "scaled"],
            sub.scaled_singular_values
                .iter()
                .enumerate()
                .map(|(i, s)| vec![(i + 1).to_string(), format_float(*s)]),
        )?;
        written.push(paths.subspace_sigma_csv.clone());
    }
    Ok(written)
}

pub fn write_metadata(meta: &RunMetadata, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultRecord> {
    ResultRecord::from_json(&fs::read_to_string(path)?)
}

pub fn write_probe_table(table: &ProbeTable, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, table.to_json()?)?;
    Ok(())
}

pub fn read_probe_table(path: impl AsRef<Path>) -> Result<ProbeTable> {
    ProbeTable::from_json(&fs::read_to_string(path)?)
}
