//! Experiment configuration files and batch orchestration.
//!
//! A batch runs every `(problem, seed)` cell of an [`ExperimentConfig`]. One
//! communication graph is drawn per cell and shared by all solver runs of
//! that cell. Results land in an output directory:
//!
//! ```text
//! out/
//!   config.toml              normalized copy of the configuration
//!   manifest.json            cells, runs, protocol constants, file hashes
//!   summary.csv              final metrics of every run
//!   graphs/<problem>_seed<s>_weights.csv, ..._spectrum.csv
//!   traces/<problem>/seed<s>/<run label>.csv
//!   profiles/{performance,data}_{metric}_{tol}.csv, profiles_long.csv
//! ```
//!
//! Nothing time- or machine-dependent is written, so reruns of the same
//! configuration reproduce every file byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{all_profiles, emit_profiles, MetricTriple, ProblemRuns, ProfileSet};
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::network::{build_mixing_matrix, generate_graph, MixingMatrix};
use crate::problems::{problem_by_name, residual_problem_names, DecentralizedProblem};
use crate::solvers::{read_trace_csv, run, Budget, Protocol, RunTrace, SolverVariant};

pub const ALPHA0_RULE: &str = "alpha0 = |x0| + 1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetKind {
    /// `100 n` local evaluations.
    Toy,
    /// `400 n m` local evaluations or 500 iterations.
    Suite,
    /// Only the explicit caps.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetRule {
    pub rule: BudgetKind,
    /// Replaces the rule's evaluation cap when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<u64>,
    /// Replaces the rule's iteration cap when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
}

impl BudgetRule {
    pub fn for_problem(&self, n: usize, m: usize) -> Budget {
        let base = match self.rule {
            BudgetKind::Toy => Budget::toy(n),
            BudgetKind::Suite => Budget::suite(n, m),
            BudgetKind::Fixed => Budget {
                max_evals: None,
                max_iters: None,
            },
        };
        Budget {
            max_evals: self.max_evals.or(base.max_evals),
            max_iters: self.max_iters.or(base.max_iters),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// `toy-<n>` or registered residual problem names.
    pub problems: Vec<String>,
    /// Solver variant ids, see [`SolverVariant::id`].
    pub solvers: Vec<String>,
    pub seeds: Vec<u64>,
    /// Penalty parameters; only the Lyapunov-decrease solvers are run once
    /// per value, every other solver runs once per cell.
    pub gammas: Vec<f64>,
    /// Convergence tolerances for the profiles.
    pub tolerances: Vec<f64>,
    pub budget: BudgetRule,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    fn all_solvers() -> Vec<String> {
        SolverVariant::ALL.iter().map(|v| v.id().to_string()).collect()
    }

    /// Toy instances `n in {5, 10, 15}`, all solvers, `gamma in {1, 10, 100}`,
    /// `100 n` evaluations per run.
    pub fn toy_sweep(seeds: Vec<u64>) -> Self {
        Self {
            name: "toy-sweep".into(),
            problems: ["toy-5", "toy-10", "toy-15"].map(String::from).to_vec(),
            solvers: Self::all_solvers(),
            seeds,
            gammas: vec![1.0, 10.0, 100.0],
            tolerances: vec![1e-3, 1e-6],
            budget: BudgetRule {
                rule: BudgetKind::Toy,
                max_evals: None,
                max_iters: None,
            },
            protocol: Protocol::default(),
            output_dir: None,
        }
    }

    /// Every registered least-squares problem, all solvers, `gamma = 1`.
    pub fn suite(seeds: Vec<u64>) -> Self {
        Self {
            name: "suite".into(),
            problems: residual_problem_names().into_iter().map(String::from).collect(),
            solvers: Self::all_solvers(),
            seeds,
            gammas: vec![1.0],
            tolerances: vec![1e-3, 1e-6],
            budget: BudgetRule {
                rule: BudgetKind::Suite,
                max_evals: None,
                max_iters: None,
            },
            protocol: Protocol::default(),
            output_dir: None,
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs always serialize")
    }

    /// Checks that every id resolves and every list is usable; errors name
    /// the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.problems.is_empty() {
            return Err(Error::config("problems", "at least one problem is required"));
        }
        if self.solvers.is_empty() {
            return Err(Error::config("solvers", "at least one solver is required"));
        }
        for (i, p) in self.problems.iter().enumerate() {
            problem_by_name(p, self.seeds[0]).map_err(|e| Error::config(format!("problems[{i}]"), e.to_string()))?;
        }
        let variants = self.variants()?;
        if variants.iter().any(|v| v.uses_gamma()) && self.gammas.is_empty() {
            return Err(Error::config("gammas", "penalty-based solvers need at least one gamma"));
        }
        for (i, g) in self.gammas.iter().enumerate() {
            if !(*g > 0.0 && g.is_finite()) {
                return Err(Error::config(format!("gammas[{i}]"), format!("must be positive, got {g}")));
            }
        }
        for (i, t) in self.tolerances.iter().enumerate() {
            if !(*t > 0.0 && *t < 1.0) {
                return Err(Error::config(format!("tolerances[{i}]"), format!("must lie in (0, 1), got {t}")));
            }
        }
        let p = &self.protocol;
        if !(p.edge_probability > 0.0 && p.edge_probability <= 1.0) {
            return Err(Error::config("protocol.edge_probability", "must lie in (0, 1]"));
        }
        if self.budget.rule == BudgetKind::Fixed && self.budget.max_evals.is_none() && self.budget.max_iters.is_none() {
            return Err(Error::config("budget", "a fixed budget needs max_evals or max_iters"));
        }
        Ok(())
    }

    fn variants(&self) -> Result<Vec<SolverVariant>> {
        self.solvers
            .iter()
            .enumerate()
            .map(|(i, s)| SolverVariant::from_id(s).map_err(|e| Error::config(format!("solvers[{i}]"), e.to_string())))
            .collect()
    }

    /// Distinct runs of one cell: penalty-based solvers once per gamma,
    /// every other solver once.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let mut out = Vec::new();
        for v in self.variants()? {
            if v.uses_gamma() {
                for &g in &self.gammas {
                    out.push(RunSpec {
                        variant: v,
                        gamma: Some(g),
                    });
                }
            } else {
                out.push(RunSpec { variant: v, gamma: None });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub variant: SolverVariant,
    pub gamma: Option<f64>,
}

impl RunSpec {
    pub fn label(&self) -> String {
        match self.gamma {
            Some(g) => format!("{}-gamma{g}", self.variant.id()),
            None => self.variant.id().to_string(),
        }
    }
}

/// Seed of the communication graph of cell `(problem, seed)`.
pub fn graph_seed(problem: &str, seed: u64) -> u64 {
    let digest = Sha256::digest(format!("{problem}/{seed}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// The problem instance and network of one cell.
pub fn cell_setup(problem: &str, seed: u64, protocol: &Protocol) -> Result<(DecentralizedProblem, MixingMatrix, u64)> {
    let p = problem_by_name(problem, seed)?;
    let gs = graph_seed(problem, seed);
    let w = build_mixing_matrix(&generate_graph(p.agents(), protocol.edge_probability, gs)?)?;
    Ok((p, w, gs))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub budget: Budget,
    pub result: std::result::Result<RunTrace, String>,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub problem: String,
    pub seed: u64,
    pub dim: usize,
    pub agents: usize,
    pub graph_seed: u64,
    pub mixing: Option<MixingMatrix>,
    pub error: Option<String>,
    pub runs: Vec<RunOutcome>,
}

impl CellOutcome {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.runs.iter().any(|r| !matches!(&r.result, Ok(t) if t.complete))
    }
}

/// Runs one cell; setup failures are recorded in the outcome.
pub fn run_cell(config: &ExperimentConfig, problem: &str, seed: u64) -> Result<CellOutcome> {
    let specs = config.runs()?;
    let mut cell = CellOutcome {
        problem: problem.to_string(),
        seed,
        dim: 0,
        agents: 0,
        graph_seed: graph_seed(problem, seed),
        mixing: None,
        error: None,
        runs: Vec::new(),
    };
    let (p, w, _) = match cell_setup(problem, seed, &config.protocol) {
        Ok(s) => s,
        Err(e) => {
            cell.error = Some(e.to_string());
            return Ok(cell);
        }
    };
    cell.dim = p.dim();
    cell.agents = p.agents();
    let budget = config.budget.for_problem(p.dim(), p.agents());
    cell.runs = specs
        .par_iter()
        .map(|spec| {
            let result = spec
                .variant
                .config_with(&config.protocol, p.x0(), spec.gamma, budget)
                .and_then(|cfg| run(&p.fresh_copy(), &w, &cfg))
                .map_err(|e| e.to_string());
            RunOutcome {
                spec: *spec,
                budget,
                result,
            }
        })
        .collect();
    cell.mixing = Some(w);
    Ok(cell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub label: String,
    pub solver: String,
    pub gamma: Option<f64>,
    pub max_evals: Option<u64>,
    pub max_iters: Option<u64>,
    pub trace: Option<String>,
    pub complete: bool,
    pub theory_compliant: bool,
    pub iterations: u64,
    pub evals: u64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub problem: String,
    pub seed: u64,
    pub dim: usize,
    pub agents: usize,
    pub graph_seed: u64,
    pub zeta: Option<f64>,
    pub error: Option<String>,
    pub runs: Vec<ManifestRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub alpha0_rule: String,
    pub notes: Vec<String>,
    pub cells: Vec<ManifestCell>,
    /// Relative path to SHA-256 hex digest, for every other emitted file.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }
}

fn manifest_notes() -> Vec<String> {
    vec![
        "evaluation counts are total solver-visible local evaluations summed over agents; metric evaluations are excluded".into(),
        "convergence threshold: metric <= opt_low + tol * (opt_start - opt_low), opt_start taken at the anchor row".into(),
        "consensus profiles anchor at the first peak of each trace; opt_low is the best post-peak value over all runs of the cell".into(),
        "budgets are checked at iteration boundaries; the last round may overshoot the evaluation cap".into(),
        "one communication graph per (problem, seed), shared by all runs of the cell".into(),
    ]
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

struct Writer {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl Writer {
    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.insert(rel.to_string(), sha256_hex(contents));
        Ok(path)
    }
}

/// What a batch produced.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub output_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
    pub profiles: Vec<ProfileSet>,
    pub manifest: Manifest,
}

impl BatchReport {
    pub fn failed_cells(&self) -> Vec<&CellOutcome> {
        self.cells.iter().filter(|c| c.failed()).collect()
    }
}

/// Runs every cell of `config` (in parallel) and writes the output tree.
pub fn run_batch(config: &ExperimentConfig, out: &Path) -> Result<BatchReport> {
    config.validate()?;
    let pairs: Vec<(&String, u64)> = config
        .problems
        .iter()
        .flat_map(|p| config.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let cells: Vec<CellOutcome> = pairs
        .par_iter()
        .map(|(p, s)| run_cell(config, p, *s))
        .collect::<Result<_>>()?;

    let mut w = Writer {
        root: out.to_path_buf(),
        files: BTreeMap::new(),
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    w.write("config.toml", config.to_toml().as_bytes())?;

    let mut summary = String::from(
        "problem,seed,run,solver,gamma,complete,theory_compliant,iterations,evals,f_iterates,f_mean,consensus\n",
    );
    let mut manifest_cells = Vec::new();
    for cell in &cells {
        if let Some(mix) = &cell.mixing {
            let base = format!("graphs/{}_seed{}", cell.problem, cell.seed);
            w.write(&format!("{base}_weights.csv"), weights_csv(mix).as_bytes())?;
            w.write(&format!("{base}_spectrum.csv"), spectrum_csv(mix).as_bytes())?;
        }
        let mut runs = Vec::new();
        for r in &cell.runs {
            let label = r.spec.label();
            let mut entry = ManifestRun {
                label: label.clone(),
                solver: r.spec.variant.id().to_string(),
                gamma: r.spec.gamma,
                max_evals: r.budget.max_evals,
                max_iters: r.budget.max_iters,
                trace: None,
                complete: false,
                theory_compliant: true,
                iterations: 0,
                evals: 0,
                failure: None,
            };
            match &r.result {
                Ok(t) => {
                    let rel = format!("traces/{}/seed{}/{label}.csv", cell.problem, cell.seed);
                    w.write(&rel, t.to_csv().as_bytes())?;
                    entry.trace = Some(rel);
                    entry.complete = t.complete;
                    entry.theory_compliant = t.theory_compliant;
                    entry.iterations = t.iterations();
                    entry.evals = t.last().cum_evals;
                    entry.failure = t.failure.clone();
                    let last = t.last();
                    let _ = writeln!(
                        summary,
                        "{},{},{label},{},{},{},{},{},{},{},{},{}",
                        cell.problem,
                        cell.seed,
                        r.spec.variant.id(),
                        r.spec.gamma.map(|g| g.to_string()).unwrap_or_default(),
                        t.complete,
                        t.theory_compliant,
                        t.iterations(),
                        last.cum_evals,
                        fmt_f64(last.f_iterates),
                        fmt_f64(last.f_mean),
                        fmt_f64(last.consensus)
                    );
                }
                Err(e) => entry.failure = Some(e.clone()),
            }
            runs.push(entry);
        }
        manifest_cells.push(ManifestCell {
            problem: cell.problem.clone(),
            seed: cell.seed,
            dim: cell.dim,
            agents: cell.agents,
            graph_seed: cell.graph_seed,
            zeta: cell.mixing.as_ref().map(MixingMatrix::zeta),
            error: cell.error.clone(),
            runs,
        });
    }
    w.write("summary.csv", summary.as_bytes())?;

    let instances = instances_from_cells(&cells);
    let labels: Vec<String> = config.runs()?.iter().map(RunSpec::label).collect();
    let profiles = if instances.is_empty() {
        Vec::new()
    } else {
        all_profiles(&instances, &labels, &config.tolerances)?
    };
    write_profiles(&mut w, &profiles)?;

    let manifest = Manifest {
        config: config.clone(),
        alpha0_rule: ALPHA0_RULE.into(),
        notes: manifest_notes(),
        cells: manifest_cells,
        files: w.files.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(BatchReport {
        output_dir: out.to_path_buf(),
        cells,
        profiles,
        manifest,
    })
}

fn instance_name(problem: &str, seed: u64) -> String {
    format!("{problem}#seed{seed}")
}

fn instances_from_cells(cells: &[CellOutcome]) -> Vec<ProblemRuns> {
    cells
        .iter()
        .filter(|c| c.error.is_none())
        .map(|c| ProblemRuns {
            problem: instance_name(&c.problem, c.seed),
            dim: c.dim,
            runs: c
                .runs
                .iter()
                .filter_map(|r| r.result.as_ref().ok().map(|t| (r.spec.label(), t.rows.clone())))
                .collect(),
        })
        .collect()
}

fn write_profiles(w: &mut Writer, profiles: &[ProfileSet]) -> Result<Vec<PathBuf>> {
    let dir = w.root.join("profiles");
    let paths = emit_profiles(profiles, &dir)?;
    for p in &paths {
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        let rel = p.strip_prefix(&w.root).expect("profile paths live under the output root");
        w.files.insert(rel.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes));
    }
    Ok(paths)
}

/// Recomputes all profiles of a finished batch from its stored traces and
/// rewrites `profiles/`.
pub fn recompute_profiles(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = Manifest::load(dir)?;
    let mut instances = Vec::new();
    for cell in manifest.cells.iter().filter(|c| c.error.is_none()) {
        let mut runs = Vec::new();
        for r in &cell.runs {
            if let Some(rel) = &r.trace {
                runs.push((r.label.clone(), read_trace_csv(&dir.join(rel))?));
            }
        }
        instances.push(ProblemRuns {
            problem: instance_name(&cell.problem, cell.seed),
            dim: cell.dim,
            runs,
        });
    }
    let labels: Vec<String> = manifest.config.runs()?.iter().map(RunSpec::label).collect();
    let profiles = if instances.is_empty() {
        Vec::new()
    } else {
        all_profiles(&instances, &labels, &manifest.config.tolerances)?
    };
    emit_profiles(&profiles, &dir.join("profiles"))
}

fn weights_csv(w: &MixingMatrix) -> String {
    let m = w.agents();
    let mut s = String::new();
    for i in 0..m {
        let row: Vec<String> = (0..m).map(|j| fmt_f64(w.weight(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn spectrum_csv(w: &MixingMatrix) -> String {
    let r = w.spectral_report();
    let mut s = String::from("index,eigenvalue\n");
    for (k, l) in r.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "{},{}", k + 1, fmt_f64(*l));
    }
    let _ = writeln!(s, "zeta,{}", fmt_f64(r.zeta));
    s
}

/// One `(problem, solver, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub problem: String,
    pub solver: String,
    pub seed: u64,
    pub gamma: Option<f64>,
    /// Defaults to the toy rule for `toy-*` problems and the suite rule
    /// otherwise.
    pub budget: Option<BudgetRule>,
    pub protocol: Protocol,
}

impl SingleRun {
    pub fn default_budget(&self) -> BudgetRule {
        let rule = if self.problem.starts_with("toy-") {
            BudgetKind::Toy
        } else {
            BudgetKind::Suite
        };
        BudgetRule {
            rule,
            max_evals: None,
            max_iters: None,
        }
    }
}

/// Runs one cell entry, writes its trace to `out` and returns the trace with
/// its final metrics and the written path.
pub fn run_single(spec: &SingleRun, out: &Path) -> Result<(RunTrace, MetricTriple, PathBuf)> {
    let variant = SolverVariant::from_id(&spec.solver)?;
    let (p, w, _) = cell_setup(&spec.problem, spec.seed, &spec.protocol)?;
    let rule = spec.budget.unwrap_or_else(|| spec.default_budget());
    let budget = rule.for_problem(p.dim(), p.agents());
    let gamma = if variant.uses_gamma() { Some(spec.gamma.unwrap_or(1.0)) } else { None };
    let cfg = variant.config_with(&spec.protocol, p.x0(), gamma, budget)?;
    let trace = run(&p, &w, &cfg)?;
    let label = RunSpec { variant, gamma }.label();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(format!("{}_{label}_seed{}.csv", spec.problem, spec.seed));
    trace.write_csv(&path)?;
    let last = trace.last();
    let mt = MetricTriple {
        f_at_iterates: last.f_iterates,
        f_at_mean: last.f_mean,
        consensus: last.consensus,
    };
    Ok((trace, mt, path))
}
