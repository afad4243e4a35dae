//! Configuration-driven experiments.
//!
//! A JSON config names an experiment kind, a master seed and kind-specific
//! inputs. [`run_experiment`] writes CSV data and a `verdict.json` listing
//! every check with its measured value, bound and signed margin.
//!
//! Output files per kind:
//!
//! | kind             | files                                                         |
//! |------------------|---------------------------------------------------------------|
//! | `lemma2-sweep`   | `lemma2_sweep.csv`                                            |
//! | `dilation-check` | `dilation_check.csv`                                          |
//! | `convergence`    | `convergence.csv`, `paths.jsonl`, `oracle.csv` (discrete)     |
//! | `parseval`       | `parseval.csv`, `parseval_paths.csv`, `paths.jsonl`, `oracle.csv` (discrete) |
//! | `fusion`         | `fusion.csv`, `operator_identity.csv`, `paths.jsonl`, `oracle.csv` |
//! | `kaczmarz`       | `kaczmarz.csv`, `equivalence.csv`                             |
//! | `coercivity`     | `coercivity.csv`                                              |
//!
//! With `"x": "basis-sweep"` the per-vector files carry an `_e{j}` suffix.
//! Every run also writes the effective `config.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{
    borel_cantelli_diagnostic, check_frame_bounds, check_mean_square_bound, compare_energies, compare_residuals,
    detect_plateau, ordered_trials, run_trials, verify_operator_identity, Check, FrameEvidence, StepwiseCheck,
    TrialPlan, TrialSummary,
};
use crate::dilation::{halmos_dilate, verify_dilation};
use crate::error::{Error, Result};
use crate::iteration::{run_path, StoppingRule};
use crate::kaczmarz::{error_process_equivalence, rate, run_rk_trials, steps_for_accuracy, LinearSystem};
use crate::linalg::{contraction_gap, Vector};
use crate::mtx::read_matrix_market_file;
use crate::oracle::{oracle_curve, steps_to_residual, TransferMap};
use crate::random::{gaussian_vector, random_positive_contraction, random_projection, random_unit_vector};
use crate::rng::RngStream;
use crate::samplers::{Sampler, SamplerSpec};

/// Delta for the exceedance diagnostic, as a fraction of `‖x‖`.
pub const DEFAULT_DELTA: f64 = 0.1;
/// Paths written to `paths.jsonl`.
pub const PATH_RECORD_LIMIT: usize = 100;
/// Seeds used for the Kaczmarz equivalence check.
pub const EQUIVALENCE_SEEDS: u32 = 10;
/// Final-error tolerance and required success fraction for Kaczmarz runs.
pub const KACZMARZ_TOL: f64 = 1e-4;
pub const KACZMARZ_SUCCESS: f64 = 0.95;

const MAX_DIM: usize = 64;
const RANDOM_X_STREAM: u64 = u64::MAX;
const RANDOM_SYSTEM_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lemma2Sweep,
    DilationCheck,
    Convergence,
    Parseval,
    Fusion,
    Kaczmarz,
    Coercivity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lemma2Sweep => "lemma2-sweep",
            ExperimentKind::DilationCheck => "dilation-check",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Parseval => "parseval",
            ExperimentKind::Fusion => "fusion",
            ExperimentKind::Kaczmarz => "kaczmarz",
            ExperimentKind::Coercivity => "coercivity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedStart {
    RandomUnit,
    BasisSweep,
}

/// Start vector: explicit entries, a seeded random unit vector, or every
/// canonical basis vector in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartVector {
    Explicit(Vec<f64>),
    Named(NamedStart),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSystem {
    pub rows: usize,
    pub cols: usize,
}

/// Linear system for the `kaczmarz` kind. Exactly one matrix source.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Matrix Market file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    /// Standard Gaussian matrix and solution drawn from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<bool>,
}

/// Parsed experiment configuration. Absent fields stay absent, so a config
/// serializes back to the JSON it was read from.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<StartVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
}

fn field<T: DeserializeOwned>(key: &str, value: Value, errors: &mut Vec<String>) -> Option<T> {
    match serde_json::from_value(value) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("field `{key}`: {e}"));
            None
        }
    }
}

/// Structural parse: JSON syntax, field names and field types. All problems
/// are collected.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| vec![format!("line {}, column {}: {e}", e.line(), e.column())])?;
    let Value::Object(map) = value else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    parse_object(map)
}

fn parse_object(map: Map<String, Value>) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let mut cfg = ExperimentConfig::default();
    let mut errors = Vec::new();
    for (key, value) in map {
        let e = &mut errors;
        match key.as_str() {
            "kind" => cfg.kind = field(&key, value, e),
            "seed" => cfg.seed = field(&key, value, e),
            "sampler" => cfg.sampler = field(&key, value, e),
            "dim" => cfg.dim = field(&key, value, e),
            "x" => cfg.x = field(&key, value, e),
            "n_steps" => cfg.n_steps = field(&key, value, e),
            "n_trials" => cfg.n_trials = field(&key, value, e),
            "delta" => cfg.delta = field(&key, value, e),
            "output_dir" => cfg.output_dir = field(&key, value, e),
            "pairs" => cfg.pairs = field(&key, value, e),
            "max_dim" => cfg.max_dim = field(&key, value, e),
            "samples" => cfg.samples = field(&key, value, e),
            "system" => cfg.system = field(&key, value, e),
            _ => errors.push(format!("unknown field `{key}`")),
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Full validation: [`parse_config`] followed by [`ExperimentConfig::problems`].
pub fn validate_config(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let cfg = parse_config(text)?;
    let problems = cfg.problems();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(problems)
    }
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Semantic problems: missing kind-specific fields, out-of-range values
    /// and invalid samplers.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.seed.is_none() {
            p.push("seed required".to_string());
        }
        let Some(kind) = self.kind else {
            p.push("kind required (one of lemma2-sweep, dilation-check, convergence, parseval, fusion, kaczmarz, coercivity)".into());
            return p;
        };
        let name = kind.name();
        let mut require = |present: bool, what: &str| {
            if !present {
                p.push(format!("{what} required for kind {name}"));
            }
        };
        match kind {
            ExperimentKind::Lemma2Sweep | ExperimentKind::DilationCheck => {
                require(self.pairs.is_some(), "pairs");
                require(self.max_dim.is_some(), "max_dim");
            }
            ExperimentKind::Convergence | ExperimentKind::Parseval | ExperimentKind::Fusion => {
                require(self.sampler.is_some(), "sampler");
                require(self.x.is_some(), "x");
                require(self.n_steps.is_some(), "n_steps");
                require(self.n_trials.is_some(), "n_trials");
            }
            ExperimentKind::Kaczmarz => {
                require(self.system.is_some(), "system");
                require(self.n_trials.is_some(), "n_trials");
            }
            ExperimentKind::Coercivity => {
                require(self.sampler.is_some(), "sampler");
                require(self.samples.is_some(), "samples");
            }
        }
        if self.pairs == Some(0) {
            p.push("pairs must be at least 1".into());
        }
        if let Some(m) = self.max_dim {
            if m == 0 || m > MAX_DIM {
                p.push(format!("max_dim must lie in 1..={MAX_DIM}"));
            }
        }
        if self.n_steps == Some(0) {
            p.push("n_steps must be at least 1".into());
        }
        if self.n_trials == Some(0) {
            p.push("n_trials must be at least 1".into());
        }
        if let Some(s) = self.samples {
            if s < 100 {
                p.push("samples must be at least 100".into());
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                p.push("delta must be positive".into());
            }
        }

        let mut dim = self.dim;
        if let Some(d) = self.dim {
            if d == 0 || d > MAX_DIM {
                p.push(format!("dim must lie in 1..={MAX_DIM}"));
            }
        }
        if let Some(spec) = &self.sampler {
            let issues = spec.issues();
            if issues.is_empty() {
                match Sampler::new(spec.clone()) {
                    Ok(s) => {
                        if let Some(d) = self.dim {
                            if d != s.dim() {
                                p.push(format!("dim {d} does not match the sampler dimension {}", s.dim()));
                            }
                        }
                        dim = Some(s.dim());
                        if kind == ExperimentKind::Parseval && !s.is_projection_valued() {
                            p.push("parseval requires a projection-valued sampler".into());
                        }
                        if kind == ExperimentKind::Fusion && !matches!(spec, SamplerSpec::FusionFrameProjection { .. }) {
                            p.push("fusion requires a fusion-frame-projection sampler".into());
                        }
                    }
                    Err(e) => p.push(format!("sampler: {e}")),
                }
            } else {
                p.extend(issues.into_iter().map(|i| format!("sampler: {i}")));
            }
        }
        if let (Some(StartVector::Explicit(x)), Some(d)) = (&self.x, dim) {
            if x.len() != d {
                p.push(format!("x has {} entries but the dimension is {d}", x.len()));
            } else if x.iter().all(|&v| v == 0.0) {
                p.push("x must be nonzero".into());
            }
        }
        if let Some(sys) = &self.system {
            p.extend(system_problems(sys));
        }
        p
    }
}

fn system_problems(sys: &SystemConfig) -> Vec<String> {
    let mut p = Vec::new();
    let sources = [sys.matrix.is_some(), sys.matrix_file.is_some(), sys.random.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if sources != 1 {
        p.push("system needs exactly one of matrix, matrix_file, random".into());
    }
    if let Some(m) = &sys.matrix {
        let cols = m.first().map_or(0, Vec::len);
        if m.is_empty() || cols == 0 || m.iter().any(|r| r.len() != cols) {
            p.push("system.matrix must be a nonempty rectangular array of rows".into());
        }
    }
    if let Some(r) = sys.random {
        if r.rows == 0 || r.cols == 0 || r.cols > MAX_DIM {
            p.push(format!("system.random needs rows >= 1 and 1 <= cols <= {MAX_DIM}"));
        }
        if sys.rhs.is_some() || sys.x_star.is_some() {
            p.push("system.random draws its own solution; drop rhs and x_star".into());
        }
    } else if sys.rhs.is_none() && sys.x_star.is_none() {
        p.push("system needs rhs or x_star".into());
    }
    p
}

/// Overrides applied on top of a config file, as from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_trials: Option<usize>,
    pub n_steps: Option<usize>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.n_trials.is_some() {
            self.n_trials = o.n_trials;
        }
        if o.n_steps.is_some() {
            self.n_steps = o.n_steps;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    /// Store term vectors in `paths.jsonl`.
    pub full_paths: bool,
    pub workers: Option<usize>,
    /// Directory that relative paths in the config are resolved against.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The claim being checked.
    pub anchor: String,
    pub measured: f64,
    pub bound: f64,
    /// Signed distance to failure; negative iff the check fails.
    pub margin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictDocument {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerdictDocument {
    pub fn failed(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

mod anchor {
    pub const GAP: &str = "‖Tx‖² + ‖x - Tx‖² ≤ ‖x‖² for every positive contraction T";
    pub const GAP_EQUALITY: &str = "equality ‖Tx‖² + ‖x - Tx‖² = ‖x‖² when T is an orthogonal projection";
    pub const DILATION: &str = "T = WᵀPW with W an isometry and P an orthogonal projection";
    pub const COERCIVITY: &str = "E‖Ψx‖² ≥ C‖x‖² for some constant 0 < C ≤ 1";
    pub const MEAN_SQUARE: &str = "E‖R_n x‖² ≤ (1 - C)ⁿ‖x‖²";
    pub const DECAY: &str = "R_n x → 0, so the mean squared residual keeps decreasing";
    pub const FRAME: &str = "C‖x‖² ≤ E Σ_k ‖t_k‖² ≤ ‖x‖²";
    pub const PATH: &str = "‖t_k‖² + ‖r_k‖² ≤ ‖r_{k-1}‖² and x = Σ t_k + r_n along every path";
    pub const TAIL: &str = "Σ_n P(‖R_n x‖ > δ) ≤ ‖x‖²/(Cδ²)";
    pub const CHEBYSHEV: &str = "P(‖R_n x‖ > δ) ≤ (1 - C)ⁿ‖x‖²/δ²";
    pub const ORACLE: &str = "Monte Carlo means agree with E‖R_n x‖² from the conditional recursion";
    pub const ORACLE_ENERGY: &str = "Monte Carlo means agree with E Σ_k ‖t_k‖² from the conditional recursion";
    pub const PARSEVAL: &str = "Σ_k ‖t_k‖² + ‖r_n‖² = ‖x‖² on every path when Ψ is projection-valued";
    pub const PARSEVAL_MEAN: &str = "E Σ_k ‖t_k‖² + E‖R_n x‖² = ‖x‖² for projection-valued Ψ";
    pub const FUSION_C: &str = "C equals the lower fusion frame bound A";
    pub const IDENTITY: &str = "Σ_k T_k e_j → e_j for every basis vector";
    pub const EXPECTED_IDENTITY: &str = "E Σ_k T_kᵀT_k = I";
    pub const KACZMARZ_RATE: &str = "C = λ_min(AᵀA)/‖A‖_F² > 0 for a full column rank system";
    pub const KACZMARZ_EQUIV: &str = "the Kaczmarz error x_k - x* is the residual process of the row-projection sampler";
    pub const KACZMARZ_MONOTONE: &str = "‖x_k - x*‖ is non-increasing along every Kaczmarz path";
    pub const KACZMARZ_ACCURACY: &str = "x_n reaches x* once (1 - C)ⁿ ≤ 1e-10";
}

fn upper(name: impl Into<String>, anchor: &str, c: Check) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        anchor: anchor.into(),
        measured: c.measured,
        bound: c.bound,
        margin: c.bound + c.slack - c.measured,
        pass: c.pass,
        step: None,
    }
}

fn lower(name: impl Into<String>, anchor: &str, c: Check) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        anchor: anchor.into(),
        measured: c.measured,
        bound: c.bound,
        margin: c.measured - (c.bound - c.slack),
        pass: c.pass,
        step: None,
    }
}

fn two_sided(name: impl Into<String>, anchor: &str, c: Check) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        anchor: anchor.into(),
        measured: c.measured,
        bound: c.bound,
        margin: c.slack - (c.measured - c.bound).abs(),
        pass: c.pass,
        step: None,
    }
}

fn stepwise(name: impl Into<String>, anchor: &str, s: &StepwiseCheck, is_two_sided: bool) -> Option<CheckRecord> {
    let worst = s.worst(is_two_sided)?;
    let mut r = if is_two_sided {
        two_sided(name, anchor, worst.check)
    } else {
        upper(name, anchor, worst.check)
    };
    r.step = Some(worst.step);
    r.pass = s.pass;
    Some(r)
}

fn coercivity_record(name: &str, anchor: &str, c: f64) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        anchor: anchor.into(),
        measured: c,
        bound: 0.0,
        margin: if c > 1.0 { 1.0 - c } else { c },
        pass: c > 0.0 && c <= 1.0,
        step: None,
    }
}

fn coercive(c: f64) -> bool {
    c > 0.0 && c <= 1.0
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Outputs { dir })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn csv<T: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.file(name)?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    opts: &'a RunOptions,
    seed: u64,
    out: Outputs,
}

impl Ctx<'_> {
    fn sampler(&self) -> Result<Sampler> {
        Sampler::new(self.cfg.sampler.clone().ok_or(Error::Empty("sampler"))?)
    }

    /// `(label, x)` pairs; the label is empty for a single start vector.
    fn starts(&self, dim: usize) -> Result<Vec<(String, Vector)>> {
        match self.cfg.x.as_ref().ok_or(Error::Empty("x"))? {
            StartVector::Explicit(v) => Ok(vec![(String::new(), Vector::new(v.clone())?)]),
            StartVector::Named(NamedStart::RandomUnit) => {
                let mut rng = RngStream::new(self.seed, RANDOM_X_STREAM).rng();
                Ok(vec![(String::new(), random_unit_vector(dim, &mut rng))])
            }
            StartVector::Named(NamedStart::BasisSweep) => {
                Ok((0..dim).map(|j| (format!("e{j}"), Vector::basis(dim, j))).collect())
            }
        }
    }

    fn n_steps(&self) -> Result<usize> {
        self.cfg.n_steps.ok_or(Error::Empty("n_steps"))
    }

    fn n_trials(&self) -> Result<usize> {
        self.cfg.n_trials.ok_or(Error::Empty("n_trials"))
    }

    fn delta(&self) -> f64 {
        self.cfg.delta.unwrap_or(DEFAULT_DELTA)
    }

    fn write_paths(&self, sampler: &Sampler, x: &Vector, plan: &TrialPlan, file: &str) -> Result<()> {
        let mut w = self.out.file(file)?;
        for trial in 0..plan.n_trials.min(PATH_RECORD_LIMIT) {
            let path = run_path(sampler, x, StoppingRule::steps(plan.n_steps), plan.stream(trial))?;
            serde_json::to_writer(&mut w, &path.record(self.opts.full_paths))?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn suffixed(base: &str, label: &str, ext: &str) -> String {
    if label.is_empty() {
        format!("{base}.{ext}")
    } else {
        format!("{base}_{label}.{ext}")
    }
}

fn tagged(name: &str, label: &str) -> String {
    if label.is_empty() {
        name.to_string()
    } else {
        format!("{name} [{label}]")
    }
}

/// Runs a validated experiment, writes its files and returns the verdict.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<VerdictDocument> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidArgument(problems.join("; ")));
    }
    let kind = cfg.kind.expect("validated");
    let seed = cfg.seed.expect("validated");
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    let ctx = Ctx {
        cfg,
        opts,
        seed,
        out: Outputs::create(dir)?,
    };
    ctx.out.json("config.json", cfg)?;
    let checks = match kind {
        ExperimentKind::Lemma2Sweep => lemma2_sweep(&ctx)?,
        ExperimentKind::DilationCheck => dilation_check(&ctx)?,
        ExperimentKind::Convergence => convergence(&ctx)?,
        ExperimentKind::Parseval => parseval(&ctx)?,
        ExperimentKind::Fusion => fusion(&ctx)?,
        ExperimentKind::Kaczmarz => kaczmarz(&ctx)?,
        ExperimentKind::Coercivity => coercivity(&ctx)?,
    };
    let verdict = VerdictDocument {
        experiment: kind,
        seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    ctx.out.json("verdict.json", &verdict)?;
    Ok(verdict)
}

/// Dimension of the `i`-th random instance in a sweep over `1..=max_dim`.
fn sweep_dim(i: usize, max_dim: usize) -> usize {
    1 + i % max_dim
}

fn lemma2_sweep(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    #[derive(Serialize)]
    struct Row {
        index: usize,
        dim: usize,
        projection: bool,
        norm_sq: f64,
        gap: f64,
        rel_gap: f64,
    }
    let pairs = ctx.cfg.pairs.expect("validated");
    let max_dim = ctx.cfg.max_dim.expect("validated");
    let seed = ctx.seed;
    let mut rows = Vec::with_capacity(pairs);
    // Every fourth instance is an orthogonal projection.
    ordered_trials(
        pairs,
        ctx.opts.workers,
        |i| -> Result<Row> {
            let mut rng = RngStream::new(seed, i as u64).rng();
            let dim = sweep_dim(i, max_dim);
            let projection = i % 4 == 3;
            let t = if projection {
                let rank = rng.random_range(1..=dim);
                random_projection(dim, rank, &mut rng)
            } else {
                random_positive_contraction(dim, &mut rng)
            };
            let x = gaussian_vector(dim, &mut rng);
            let gap = contraction_gap(&t, &x)?;
            let norm_sq = x.norm_sq();
            Ok(Row {
                index: i,
                dim,
                projection,
                norm_sq,
                gap,
                rel_gap: gap / norm_sq,
            })
        },
        |r| rows.push(r),
    )?;
    let min_gap = rows.iter().map(|r| r.rel_gap).fold(f64::INFINITY, f64::min);
    let mut checks = vec![lower("minimum relative gap", anchor::GAP, Check::at_least(min_gap, 0.0, 1e-9))];
    let proj_max = rows
        .iter()
        .filter(|r| r.projection)
        .map(|r| r.rel_gap.abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    if let Some(p) = proj_max {
        checks.push(upper("projection equality", anchor::GAP_EQUALITY, Check::at_most(p, 1e-10, 0.0)));
    }
    ctx.out.csv("lemma2_sweep.csv", rows)?;
    Ok(checks)
}

fn dilation_check(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    #[derive(Serialize)]
    struct Row {
        index: usize,
        dim: usize,
        isometry_residual: f64,
        idempotence_residual: f64,
        compression_residual: f64,
        clamp: f64,
    }
    let pairs = ctx.cfg.pairs.expect("validated");
    let max_dim = ctx.cfg.max_dim.expect("validated");
    let seed = ctx.seed;
    let mut rows = Vec::with_capacity(pairs);
    ordered_trials(
        pairs,
        ctx.opts.workers,
        |i| -> Result<Row> {
            let mut rng = RngStream::new(seed, i as u64).rng();
            let dim = sweep_dim(i, max_dim);
            let t = random_positive_contraction(dim, &mut rng);
            let dil = halmos_dilate(&t)?;
            let r = verify_dilation(&t, &dil, 1e-10);
            Ok(Row {
                index: i,
                dim,
                isometry_residual: r.isometry_residual,
                idempotence_residual: r.idempotence_residual,
                compression_residual: r.compression_residual,
                clamp: dil.clamp,
            })
        },
        |r| rows.push(r),
    )?;
    let max = |f: fn(&Row) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let checks = vec![
        upper("isometry WᵀW = I", anchor::DILATION, Check::at_most(max(|r| r.isometry_residual), 1e-12, 0.0)),
        upper("projection P² = P", anchor::DILATION, Check::at_most(max(|r| r.idempotence_residual), 1e-10, 0.0)),
        upper("compression WᵀPW = T", anchor::DILATION, Check::at_most(max(|r| r.compression_residual), 1e-10, 0.0)),
    ];
    ctx.out.csv("dilation_check.csv", rows)?;
    Ok(checks)
}

/// Checks shared by the trial-based kinds.
fn path_checks(summary: &TrialSummary, label: &str) -> CheckRecord {
    upper(tagged("path invariants", label), anchor::PATH, Check::at_most(summary.violations as f64, 0.0, 0.0))
}

fn decay_check(summary: &TrialSummary, label: &str) -> CheckRecord {
    let mean = &summary.residual_sq.mean;
    let n = summary.n_steps;
    let early = mean[n / 2];
    let late = mean[n];
    let drop = if early > 0.0 { (early - late) / early } else { 1.0 };
    let plateau = detect_plateau(summary);
    CheckRecord {
        name: tagged("no residual plateau", label),
        anchor: anchor::DECAY.into(),
        measured: drop,
        bound: 1e-9,
        margin: if plateau.is_some() { drop - 1e-9 } else { (drop - 1e-9).max(0.0) },
        pass: plateau.is_none(),
        step: plateau.map(|p| p.from_step),
    }
}

fn bound_checks(summary: &TrialSummary, c: f64, label: &str) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    out.extend(stepwise(tagged("mean-square bound", label), anchor::MEAN_SQUARE, &check_mean_square_bound(summary, c)?, false));
    let fb = check_frame_bounds(
        FrameEvidence::MonteCarlo {
            summary,
            step: summary.n_steps,
        },
        c,
    )?;
    out.push(lower(
        tagged("frame lower bound", label),
        anchor::FRAME,
        Check::at_least(fb.measured, fb.lower, fb.slack),
    ));
    out.push(upper(
        tagged("frame upper bound", label),
        anchor::FRAME,
        Check::at_most(fb.measured, fb.upper, fb.slack),
    ));
    Ok(out)
}

fn exceedance_checks(summary: &TrialSummary, delta: f64, c: f64, label: &str) -> Result<Vec<CheckRecord>> {
    let bc = borel_cantelli_diagnostic(summary, delta)?;
    let mut out = vec![upper(tagged("exceedance tail sum", label), anchor::TAIL, bc.check_tail(summary.x_norm_sq(), c)?)];
    out.extend(stepwise(
        tagged("exceedance per step", label),
        anchor::CHEBYSHEV,
        &bc.check_chebyshev(summary.x_norm_sq(), c)?,
        false,
    ));
    Ok(out)
}

fn oracle_checks(
    ctx: &Ctx,
    sampler: &Sampler,
    summary: &TrialSummary,
    label: &str,
) -> Result<(Vec<CheckRecord>, crate::oracle::OracleCurve)> {
    let curve = oracle_curve(sampler, &summary.x, summary.n_steps)?;
    curve.write_csv(ctx.out.file(&suffixed("oracle", label, "csv"))?)?;
    let res: Vec<f64> = curve.points.iter().map(|p| p.exp_residual_sq).collect();
    let energy: Vec<f64> = curve.points.iter().map(|p| p.exp_frame_energy).collect();
    let mut out = Vec::new();
    out.extend(stepwise(tagged("monte carlo residual vs oracle", label), anchor::ORACLE, &compare_residuals(summary, &res), true));
    out.extend(stepwise(
        tagged("monte carlo energy vs oracle", label),
        anchor::ORACLE_ENERGY,
        &compare_energies(summary, &energy),
        true,
    ));
    Ok((out, curve))
}

fn trial_plan(ctx: &Ctx, group: usize, x: &Vector) -> Result<TrialPlan> {
    Ok(TrialPlan::new(ctx.n_steps()?, ctx.n_trials()?, ctx.seed)
        .with_group(group as u32)
        .with_thresholds(vec![ctx.delta() * x.norm()])
        .with_workers(ctx.opts.workers))
}

fn convergence(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let sampler = ctx.sampler()?;
    let c = sampler.analytic_coercivity()?;
    let mut checks = vec![coercivity_record("coercivity constant", anchor::COERCIVITY, c)];
    for (j, (label, x)) in ctx.starts(sampler.dim())?.into_iter().enumerate() {
        let plan = trial_plan(ctx, j, &x)?;
        let summary = run_trials(&sampler, &x, &plan)?;
        let delta = plan.thresholds[0];
        summary.write_csv(
            ctx.out.file(&suffixed("convergence", &label, "csv"))?,
            coercive(c).then_some(c),
            Some(delta),
        )?;
        ctx.write_paths(&sampler, &x, &plan, &suffixed("paths", &label, "jsonl"))?;
        checks.push(path_checks(&summary, &label));
        checks.push(decay_check(&summary, &label));
        if coercive(c) {
            checks.extend(bound_checks(&summary, c, &label)?);
            checks.extend(exceedance_checks(&summary, delta, c, &label)?);
        }
        if sampler.is_discrete() {
            checks.extend(oracle_checks(ctx, &sampler, &summary, &label)?.0);
        }
    }
    Ok(checks)
}

fn parseval_defect_check(summary: &TrialSummary, label: &str) -> CheckRecord {
    upper(
        tagged("per-path parseval defect", label),
        anchor::PARSEVAL,
        Check::at_most(summary.max_parseval_defect, 1e-9 * summary.x_norm_sq(), 0.0),
    )
}

fn write_path_stats(ctx: &Ctx, summary: &TrialSummary, file: &str) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        trial: usize,
        steps: usize,
        frame_energy: f64,
        final_residual_sq: f64,
        parseval_defect: f64,
    }
    ctx.out.csv(
        file,
        summary.paths.iter().enumerate().map(|(trial, p)| Row {
            trial,
            steps: p.steps,
            frame_energy: p.frame_energy,
            final_residual_sq: p.final_residual_sq,
            parseval_defect: p.parseval_defect,
        }),
    )
}

fn oracle_parseval_check(curve: &crate::oracle::OracleCurve, label: &str) -> CheckRecord {
    let x2 = curve.x_norm_sq;
    let (step, worst) = curve
        .points
        .iter()
        .map(|p| (p.step, (p.exp_frame_energy + p.exp_residual_sq - x2).abs()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let mut r = upper(tagged("expected parseval identity", label), anchor::PARSEVAL_MEAN, Check::at_most(worst, 1e-10 * x2.max(1.0), 0.0));
    r.step = Some(step);
    r
}

fn parseval(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let sampler = ctx.sampler()?;
    let mut checks = Vec::new();
    for (j, (label, x)) in ctx.starts(sampler.dim())?.into_iter().enumerate() {
        let plan = trial_plan(ctx, j, &x)?;
        let summary = run_trials(&sampler, &x, &plan)?;
        summary.write_csv(ctx.out.file(&suffixed("parseval", &label, "csv"))?, None, Some(plan.thresholds[0]))?;
        write_path_stats(ctx, &summary, &suffixed("parseval_paths", &label, "csv"))?;
        ctx.write_paths(&sampler, &x, &plan, &suffixed("paths", &label, "jsonl"))?;
        checks.push(parseval_defect_check(&summary, &label));
        checks.push(path_checks(&summary, &label));
        if sampler.is_discrete() {
            let (oc, curve) = oracle_checks(ctx, &sampler, &summary, &label)?;
            checks.extend(oc);
            checks.push(oracle_parseval_check(&curve, &label));
        }
    }
    Ok(checks)
}

/// Steps searched for the oracle limits.
const ORACLE_HORIZON: usize = 100_000;

fn fusion(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let sampler = ctx.sampler()?;
    let (a, _b) = sampler.fusion_frame_bounds()?;
    let c = sampler.coercivity_constant()?;
    let mut checks = vec![
        coercivity_record("lower fusion frame bound", anchor::COERCIVITY, a),
        two_sided("coercivity equals lower bound", anchor::FUSION_C, Check::within(c, a, 1e-12)),
    ];
    if !coercive(c) {
        return Ok(checks);
    }

    // Expected operator identity, at the first n with ‖E[R_nᵀR_n]‖ ≤ 1e-7.
    let map = TransferMap::from_sampler(&sampler)?;
    let mut s = crate::linalg::SymOperator::identity(sampler.dim());
    let mut n = 0;
    while crate::linalg::extreme_eigenvalues(&s)?.1 > 1e-7 && n < ORACLE_HORIZON {
        s = map.apply(&s)?;
        n += 1;
    }
    let gram = map.frame_gram(n);
    let dist = (gram.matrix() - DMatrix::<f64>::identity(sampler.dim(), sampler.dim())).norm();
    let mut r = upper("expected identity Σ E[T_kᵀT_k] = I", anchor::EXPECTED_IDENTITY, Check::at_most(dist, 1e-6, 0.0));
    r.step = Some(n);
    checks.push(r);

    let identity = verify_operator_identity(&sampler, ctx.n_steps()?, ctx.n_trials()?, ctx.seed, ctx.opts.workers)?;
    ctx.out.csv("operator_identity.csv", &identity.per_basis)?;
    let worst = identity
        .per_basis
        .iter()
        .min_by(|p, q| (p.bound + p.slack - p.mean_error_sq).total_cmp(&(q.bound + q.slack - q.mean_error_sq)))
        .expect("dim >= 1");
    checks.push(CheckRecord {
        name: format!("operator identity on e{}", worst.index),
        anchor: anchor::IDENTITY.into(),
        measured: worst.mean_error_sq,
        bound: worst.bound,
        margin: worst.bound + worst.slack - worst.mean_error_sq,
        pass: identity.pass,
        step: Some(identity.n_steps),
    });

    // Start-vector trials use groups past the basis sweep.
    let offset = sampler.dim();
    for (j, (label, x)) in ctx.starts(sampler.dim())?.into_iter().enumerate() {
        let plan = trial_plan(ctx, offset + j, &x)?;
        let summary = run_trials(&sampler, &x, &plan)?;
        summary.write_csv(ctx.out.file(&suffixed("fusion", &label, "csv"))?, Some(c), Some(plan.thresholds[0]))?;
        ctx.write_paths(&sampler, &x, &plan, &suffixed("paths", &label, "jsonl"))?;
        checks.push(parseval_defect_check(&summary, &label));
        checks.push(path_checks(&summary, &label));
        checks.extend(bound_checks(&summary, c, &label)?);
        checks.extend(oracle_checks(ctx, &sampler, &summary, &label)?.0);
        if let Some((n, energy, residual)) = steps_to_residual(&sampler, &x, 1e-8 * x.norm_sq(), ORACLE_HORIZON)? {
            let fb = check_frame_bounds(
                FrameEvidence::Oracle {
                    energy,
                    residual,
                    x_norm_sq: x.norm_sq(),
                },
                c,
            )?;
            let mut lo = lower(tagged("oracle frame lower bound", &label), anchor::FRAME, Check::at_least(fb.measured, fb.lower, fb.slack));
            let mut hi = upper(tagged("oracle frame upper bound", &label), anchor::FRAME, Check::at_most(fb.measured, fb.upper, fb.slack));
            lo.step = Some(n);
            hi.step = Some(n);
            checks.push(lo);
            checks.push(hi);
        }
    }
    Ok(checks)
}

fn load_system(ctx: &Ctx, sys: &SystemConfig) -> Result<LinearSystem> {
    let uniform = sys.uniform.unwrap_or(false);
    if let Some(r) = sys.random {
        let mut rng = RngStream::new(ctx.seed, RANDOM_SYSTEM_STREAM).rng();
        let a = DMatrix::from_fn(r.rows, r.cols, |_, _| StandardNormal.sample(&mut rng));
        let xs = gaussian_vector(r.cols, &mut rng);
        let b = &a * xs.as_dvector();
        return LinearSystem::with_sampling(a, b.as_slice().to_vec(), Some(xs.as_slice().to_vec()), uniform);
    }
    let a = if let Some(rows) = &sys.matrix {
        let cols = rows[0].len();
        DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied())
    } else {
        let file = sys.matrix_file.as_ref().expect("validated");
        let path = match &ctx.opts.base_dir {
            Some(base) if file.is_relative() => base.join(file),
            _ => file.clone(),
        };
        read_matrix_market_file(path)?
    };
    let b = match (&sys.rhs, &sys.x_star) {
        (Some(b), _) => b.clone(),
        (None, Some(xs)) => {
            if xs.len() != a.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: a.ncols(),
                    found: xs.len(),
                });
            }
            (&a * DVector::from_column_slice(xs)).as_slice().to_vec()
        }
        (None, None) => unreachable!("validated"),
    };
    LinearSystem::with_sampling(a, b, sys.x_star.clone(), uniform)
}

fn kaczmarz(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    #[derive(Serialize)]
    struct EquivRow {
        seed_index: u32,
        max_deviation: f64,
    }
    let sys_cfg = ctx.cfg.system.as_ref().expect("validated");
    let sys = load_system(ctx, sys_cfg)?;
    let xs = sys
        .x_star()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("the system has no unique solution; supply x_star".into()))?;
    let x0 = match &sys_cfg.x0 {
        Some(v) => Vector::new(v.clone())?,
        None => Vector::zeros(sys.dim()),
    };
    let rate = rate(&sys)?;
    let mut checks = vec![coercivity_record("kaczmarz rate", anchor::KACZMARZ_RATE, rate.c)];
    let n_acc = coercive(rate.c).then(|| steps_for_accuracy(rate.c, 1e-10)).transpose()?;
    let steps = match (ctx.cfg.n_steps, n_acc) {
        (Some(n), _) => n,
        (None, Some(n)) => n,
        (None, None) => return Err(Error::InvalidArgument("n_steps required when the rate is zero".into())),
    };

    let e0 = (x0.as_dvector() - xs.as_dvector()).norm();
    let mut rows = Vec::new();
    for s in 0..EQUIVALENCE_SEEDS {
        let dev = error_process_equivalence(&sys, &x0, steps, RngStream::for_trial(ctx.seed, 1, s))?;
        rows.push(EquivRow {
            seed_index: s,
            max_deviation: dev,
        });
    }
    let worst = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    checks.push(upper("error process equivalence", anchor::KACZMARZ_EQUIV, Check::at_most(worst, 1e-10 * e0, 0.0)));
    ctx.out.csv("equivalence.csv", rows)?;

    let trials = run_rk_trials(&sys, &x0, steps, ctx.n_trials()?, ctx.seed, ctx.opts.workers)?;
    let summary = &trials.summary;
    summary.write_csv(ctx.out.file("kaczmarz.csv")?, coercive(rate.c).then_some(rate.c), None)?;
    checks.push(upper(
        "monotone error",
        anchor::KACZMARZ_MONOTONE,
        Check::at_most(summary.violations as f64, 0.0, 0.0),
    ));
    checks.push(parseval_defect_check(summary, ""));
    if coercive(rate.c) {
        checks.extend(stepwise("mean-square bound", anchor::MEAN_SQUARE, &check_mean_square_bound(summary, rate.c)?, false));
    }
    if let Some(n) = n_acc.filter(|&n| n <= steps) {
        let frac = trials.fraction_within(KACZMARZ_TOL);
        let mut r = lower(
            format!("fraction within {KACZMARZ_TOL:e} of x*"),
            anchor::KACZMARZ_ACCURACY,
            Check::at_least(frac, KACZMARZ_SUCCESS, 0.0),
        );
        r.step = Some(n.max(steps));
        checks.push(r);
    }
    Ok(checks)
}

fn coercivity(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    #[derive(Serialize)]
    struct Row {
        samples: usize,
        estimate: f64,
        raw: f64,
        stderr: f64,
        reference: f64,
    }
    let sampler = ctx.sampler()?;
    let samples = ctx.cfg.samples.expect("validated");
    let est = sampler.estimate_coercivity_mc(samples, RngStream::new(ctx.seed, 0))?;
    let reference = sampler.analytic_coercivity()?;
    let slack = 4.0 * est.stderr + 1e-12;
    ctx.out.csv(
        "coercivity.csv",
        [Row {
            samples,
            estimate: est.estimate,
            raw: est.raw,
            stderr: est.stderr,
            reference,
        }],
    )?;
    Ok(vec![
        coercivity_record("coercivity constant", anchor::COERCIVITY, reference),
        two_sided("monte carlo estimate", anchor::COERCIVITY, Check::within(est.estimate, reference, slack)),
    ])
}

/// Reads, validates and runs a config file; relative paths inside it resolve
/// against its directory.
pub fn run_config_file(path: &Path, overrides: &Overrides, opts: &RunOptions) -> std::result::Result<VerdictDocument, ConfigOrRunError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigOrRunError::Config(vec![format!("{}: {e}", path.display())]))?;
    let mut cfg = parse_config(&text).map_err(ConfigOrRunError::Config)?;
    cfg.apply(overrides);
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(ConfigOrRunError::Config(problems));
    }
    let mut opts = opts.clone();
    if opts.base_dir.is_none() {
        opts.base_dir = path.parent().map(Path::to_path_buf);
    }
    run_experiment(&cfg, &opts).map_err(ConfigOrRunError::Run)
}

#[derive(Debug)]
pub enum ConfigOrRunError {
    Config(Vec<String>),
    Run(Error),
}
