//! Command-line front end.
//!
//! Every flag may also come from a flat `key = value` file given with
//! `--config`; flags win over file entries. Settings are resolved and
//! validated into a [`RunConfig`] before any data is read, and [`dispatch`]
//! runs one command, writing its tables and a `metadata.txt` file into the
//! output folder.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{residualize, standardize, Dataset};
use crate::error::{Error, Result};
use crate::io;
use crate::meta::{run_procedure, unit_seed, CohortSet, MetaConfig, Procedure};
use crate::network::{DiagMode, WeightMatrix, WeightOptions};
use crate::refit::refit_dataset;
use crate::simulation::{evaluate, simulate_cohorts, simulate_replicate, varying_maf, SimDesign, TraitModel, WScenario};
use crate::solver::SolverConfig;
use crate::tuning::{lambda1_for_target, Ratio, TuneSpec};

#[derive(Debug, Parser)]
#[command(name = "netlasso", version, about = "Network-guided hierarchical interaction lasso")]
pub struct Cli {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for replicates, splits and cohorts (default: all cores).
    #[arg(long, global = true, env = "NETLASSO_THREADS")]
    pub threads: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw simulated datasets and their truth labels.
    Simulate(SimulateArgs),
    /// Tune, fit and refit one dataset.
    Fit(FitArgs),
    /// Run a multi-cohort meta-analysis procedure.
    Meta(MetaArgs),
    /// Score refit reports against truth labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    /// key = value design file.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct WeightArgs {
    /// GMT pathway file (needs --snpmap).
    #[arg(long)]
    pub gmt: Option<String>,
    /// SNP-to-gene map: snp_id, gene_id.
    #[arg(long)]
    pub snpmap: Option<String>,
    /// Pair list of SNP ids, or of gene ids when --snpmap is given.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Serialized weight matrix with [diag] and [pairs] sections.
    #[arg(long)]
    pub weights: Option<String>,
    /// Diagonal weights for GMT input: ones or reciprocal.
    #[arg(long)]
    pub diag_mode: Option<String>,
    /// Give every allowed pair weight 1.
    #[arg(long)]
    pub binary: Option<String>,
    /// Drop gene sets with more genes than this.
    #[arg(long)]
    pub max_set_size: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct TuneArgs {
    /// Target number of main effects.
    #[arg(long)]
    pub s: Option<String>,
    /// Accepted distance from the target count.
    #[arg(long)]
    pub slack: Option<String>,
    /// Ratio lambda2 / lambda1.
    #[arg(long)]
    pub c: Option<String>,
    /// Relative difficulty of interactions, converted to c.
    #[arg(long)]
    pub r: Option<String>,
    /// Return the closest count when the target is unreachable.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub accept_closest: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_cycles: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct FitArgs {
    #[arg(long)]
    pub geno: Option<String>,
    #[arg(long)]
    pub pheno: Option<String>,
    #[arg(long)]
    pub covar: Option<String>,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct MetaArgs {
    /// A, B, C or D.
    #[arg(long)]
    pub procedure: Option<String>,
    /// Cohorts: label, genotype path, phenotype path[, covariate path].
    #[arg(long)]
    pub cohort_list: Option<String>,
    /// Number of random splits.
    #[arg(long = "K", alias = "k")]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    /// Folder searched for report.tsv files, one per replicate.
    #[arg(long)]
    pub results: Option<String>,
    /// Truth table written by `simulate`.
    #[arg(long)]
    pub truth: Option<String>,
    /// Largest rank threshold.
    #[arg(long)]
    pub max_threshold: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

/// Where the penalty weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Gmt { gmt: PathBuf, snpmap: PathBuf, max_set_size: Option<usize>, opts: WeightOptions },
    Pairs { pairs: PathBuf, snpmap: Option<PathBuf> },
    Triplets(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub geno: PathBuf,
    pub pheno: PathBuf,
    pub covar: Option<PathBuf>,
    pub weights: WeightSource,
    pub tune: TuneSpec,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaRunConfig {
    pub procedure: Procedure,
    pub cohort_list: PathBuf,
    pub weights: WeightSource,
    pub tune: TuneSpec,
    pub solver: SolverConfig,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandConfig {
    Simulate { design: PathBuf },
    Fit(FitConfig),
    Meta(MetaRunConfig),
    Eval { results: PathBuf, truth: PathBuf, max_threshold: usize },
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

const PATH_KEYS: &[&str] =
    &["design", "geno", "pheno", "covar", "gmt", "snpmap", "pairs", "weights", "cohort_list", "results", "truth", "out"];

/// Merged settings: config file entries overridden by flags.
struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Relative paths in the file are taken from the file's folder.
    fn new(file: Option<&Path>) -> Result<Self> {
        let Some(file) = file else { return Ok(Settings(BTreeMap::new())) };
        let base = file.parent().unwrap_or(Path::new("."));
        let mut map = io::read_key_values(file)?;
        for key in PATH_KEYS {
            if let Some(v) = map.get_mut(*key) {
                if !v.is_empty() && Path::new(v.as_str()).is_relative() {
                    *v = base.join(v.as_str()).display().to_string();
                }
            }
        }
        Ok(Settings(map))
    }

    fn set(&mut self, key: &str, value: &Option<String>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.clone());
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| v.parse().map_err(|_| Error::config(key, format!("`{v}` is not {what}")))).transpose()
    }

    fn require<T: FromStr>(&self, key: &str, what: &str) -> Result<T> {
        self.parse(key, what)?.ok_or_else(|| Error::config(key, "is required"))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::config(key, format!("`{v}` is not true or false"))),
        }
    }

    /// An input file that must exist.
    fn input(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let p = PathBuf::from(v);
                if !p.exists() {
                    return Err(Error::config(key, format!("{} does not exist", p.display())));
                }
                Ok(Some(p))
            }
        }
    }

    fn require_input(&self, key: &str) -> Result<PathBuf> {
        self.input(key)?.ok_or_else(|| Error::config(key, "is required"))
    }

    fn weights(&self) -> Result<WeightSource> {
        let gmt = self.input("gmt")?;
        let pairs = self.input("pairs")?;
        let triplets = self.input("weights")?;
        let snpmap = self.input("snpmap")?;
        let given = [gmt.is_some(), pairs.is_some(), triplets.is_some()].iter().filter(|b| **b).count();
        if given != 1 {
            return Err(Error::config("weights", "give exactly one of --gmt (with --snpmap), --pairs or --weights"));
        }
        if let Some(gmt) = gmt {
            let diag_mode = match self.raw("diag_mode") {
                None | Some("ones") => DiagMode::Ones,
                Some("reciprocal") => DiagMode::Reciprocal,
                Some(v) => return Err(Error::config("diag_mode", format!("`{v}` is not ones or reciprocal"))),
            };
            let snpmap = snpmap.ok_or_else(|| Error::config("snpmap", "is required with --gmt"))?;
            let max_set_size = self.parse("max_set_size", "a count")?;
            return Ok(WeightSource::Gmt { gmt, snpmap, max_set_size, opts: WeightOptions { diag_mode, binary: self.flag("binary")? } });
        }
        if let Some(pairs) = pairs {
            return Ok(WeightSource::Pairs { pairs, snpmap });
        }
        Ok(WeightSource::Triplets(triplets.expect("one source given")))
    }

    fn tune(&self) -> Result<(TuneSpec, SolverConfig)> {
        let ratio = match (self.parse::<f64>("c", "a number")?, self.parse::<f64>("r", "a number")?) {
            (Some(c), None) => Ratio::C(c),
            (None, Some(r)) => Ratio::R(r),
            _ => return Err(Error::config("c", "give exactly one of --c or --r")),
        };
        let mut spec = TuneSpec::new(self.require("s", "a count")?, ratio);
        if let Some(slack) = self.parse("slack", "a count")? {
            spec.s_slack = slack;
        }
        spec.accept_closest = self.flag("accept_closest")?;
        spec.validate()?;
        let mut solver = SolverConfig::new(1.0, 1.0);
        if let Some(tol) = self.parse("tol", "a number")? {
            solver.tol = tol;
        }
        if let Some(mc) = self.parse("max_cycles", "a count")? {
            solver.max_cycles = mc;
        }
        solver.validate()?;
        Ok((spec, solver))
    }

    fn out(&self) -> Result<PathBuf> {
        self.raw("out").map(PathBuf::from).ok_or_else(|| Error::config("out", "is required"))
    }
}

fn set_weight_args(st: &mut Settings, w: &WeightArgs) {
    for (k, v) in [
        ("gmt", &w.gmt),
        ("snpmap", &w.snpmap),
        ("pairs", &w.pairs),
        ("weights", &w.weights),
        ("diag_mode", &w.diag_mode),
        ("binary", &w.binary),
        ("max_set_size", &w.max_set_size),
    ] {
        st.set(k, v);
    }
}

fn set_tune_args(st: &mut Settings, t: &TuneArgs) {
    for (k, v) in [
        ("s", &t.s),
        ("slack", &t.slack),
        ("c", &t.c),
        ("r", &t.r),
        ("accept_closest", &t.accept_closest),
        ("tol", &t.tol),
        ("max_cycles", &t.max_cycles),
    ] {
        st.set(k, v);
    }
}

/// Merge the config file with the flags and validate the result. Checks
/// that every input path exists; reads no data.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut st = Settings::new(cli.config.as_deref())?;
    st.set("threads", &cli.threads);
    let command = match &cli.command {
        Command::Simulate(a) => {
            st.set("design", &a.design);
            st.set("out", &a.out);
            CommandConfig::Simulate { design: st.require_input("design")? }
        }
        Command::Fit(a) => {
            for (k, v) in [("geno", &a.geno), ("pheno", &a.pheno), ("covar", &a.covar), ("out", &a.out)] {
                st.set(k, v);
            }
            set_weight_args(&mut st, &a.weights);
            set_tune_args(&mut st, &a.tune);
            let (tune, solver) = st.tune()?;
            CommandConfig::Fit(FitConfig {
                geno: st.require_input("geno")?,
                pheno: st.require_input("pheno")?,
                covar: st.input("covar")?,
                weights: st.weights()?,
                tune,
                solver,
            })
        }
        Command::Meta(a) => {
            for (k, v) in [("procedure", &a.procedure), ("cohort_list", &a.cohort_list), ("K", &a.k), ("seed", &a.seed), ("out", &a.out)] {
                st.set(k, v);
            }
            set_weight_args(&mut st, &a.weights);
            set_tune_args(&mut st, &a.tune);
            let procedure = Procedure::parse(st.raw("procedure").ok_or_else(|| Error::config("procedure", "is required"))?)?;
            let (tune, solver) = st.tune()?;
            let k: usize = st.require("K", "a count")?;
            if k == 0 {
                return Err(Error::config("K", "must be at least 1"));
            }
            CommandConfig::Meta(MetaRunConfig {
                procedure,
                cohort_list: st.require_input("cohort_list")?,
                weights: st.weights()?,
                tune,
                solver,
                k,
                seed: st.require("seed", "an integer")?,
            })
        }
        Command::Eval(a) => {
            for (k, v) in [("results", &a.results), ("truth", &a.truth), ("max_threshold", &a.max_threshold), ("out", &a.out)] {
                st.set(k, v);
            }
            let max_threshold = st.parse("max_threshold", "a count")?.unwrap_or(10);
            if max_threshold == 0 {
                return Err(Error::config("max_threshold", "must be at least 1"));
            }
            CommandConfig::Eval { results: st.require_input("results")?, truth: st.require_input("truth")?, max_threshold }
        }
    };
    let threads = st.parse("threads", "a count")?;
    if threads == Some(0) {
        return Err(Error::config("threads", "must be at least 1"));
    }
    Ok(RunConfig { command, out: st.out()?, threads })
}

/// Weights for the SNP panel `snp_ids`.
pub fn load_weights(src: &WeightSource, snp_ids: &[String]) -> Result<WeightMatrix> {
    match src {
        WeightSource::Gmt { gmt, snpmap, max_set_size, opts } => {
            io::weights_from_gmt(snp_ids, &io::read_gmt(gmt, *max_set_size)?, &io::read_two_columns(snpmap)?, *opts)
        }
        WeightSource::Pairs { pairs, snpmap } => {
            let map = snpmap.as_deref().map(io::read_two_columns).transpose()?;
            io::weights_from_pair_list(snp_ids, &io::read_two_columns(pairs)?, map.as_deref())
        }
        WeightSource::Triplets(path) => io::read_weights(path, snp_ids),
    }
}

/// Covariates, when present, are regressed out of the trait.
fn adjusted(ds: Dataset) -> Result<Dataset> {
    if ds.covariates.is_some() {
        residualize(&ds)
    } else {
        Ok(ds)
    }
}

fn entry(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// Run one validated command. Returns the entries written to
/// `metadata.txt`.
pub fn dispatch(cfg: &RunConfig) -> Result<Vec<(String, String)>> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.out)?;
    let mut meta = vec![entry("version", env!("CARGO_PKG_VERSION"))];
    match &cfg.command {
        CommandConfig::Simulate { design } => {
            meta.push(entry("command", "simulate"));
            meta.extend(run_simulate(design, &cfg.out)?);
        }
        CommandConfig::Fit(f) => {
            meta.push(entry("command", "fit"));
            meta.extend(run_fit(f, &cfg.out)?);
        }
        CommandConfig::Meta(m) => {
            meta.push(entry("command", "meta"));
            meta.extend(run_meta(m, &cfg.out)?);
        }
        CommandConfig::Eval { results, truth, max_threshold } => {
            meta.push(entry("command", "eval"));
            meta.extend(run_eval(results, truth, *max_threshold, &cfg.out)?);
        }
    }
    meta.push(entry("threads", rayon::current_num_threads()));
    meta.push(entry("elapsed_seconds", io::fmt_num(start.elapsed().as_secs_f64())));
    io::write_key_values(&cfg.out.join("metadata.txt"), &meta)?;
    Ok(meta)
}

/// Simulation design from a key = value file. Keys: n, p, model, w,
/// main_power, interaction_power, marginal_free, replicates, seed, maf
/// (a number or `varying`) and cohorts (0 for single datasets).
pub fn read_design(path: &Path) -> Result<(SimDesign, usize)> {
    let st = Settings(io::read_key_values(path)?);
    let n = st.require("n", "a count")?;
    let p = st.require("p", "a count")?;
    let model = TraitModel::parse(st.raw("model").ok_or_else(|| Error::config("model", "is required"))?)?;
    let w = WScenario::parse(st.raw("w").ok_or_else(|| Error::config("w", "is required"))?)?;
    let mut d = SimDesign::new(n, p, model, w);
    if let Some(v) = st.parse("main_power", "a number")? {
        d.main_power = v;
    }
    if let Some(v) = st.parse("interaction_power", "a number")? {
        d.interaction_power = v;
    }
    d.marginal_free = st.flag("marginal_free")?;
    if let Some(v) = st.parse("replicates", "a count")? {
        d.replicates = v;
    }
    if let Some(v) = st.parse("seed", "an integer")? {
        d.seed = v;
    }
    match st.raw("maf") {
        None => {}
        Some("varying") => d.maf = varying_maf(p, &mut ChaCha8Rng::seed_from_u64(unit_seed(d.seed, &[u64::MAX]))),
        Some(_) => d.maf = vec![st.require("maf", "a number")?; p],
    }
    d.validate()?;
    Ok((d, st.parse("cohorts", "a count")?.unwrap_or(0)))
}

fn run_simulate(design: &Path, out: &Path) -> Result<Vec<(String, String)>> {
    let (d, cohorts) = read_design(design)?;
    let snp_ids: Vec<String> = (1..=d.p).map(|j| format!("snp{j}")).collect();
    io::write_truth(&out.join("truth.tsv"), &d.truth(), &snp_ids)?;
    for r in 0..d.replicates {
        let dir = out.join(format!("rep{:03}", r + 1));
        if cohorts == 0 {
            let rep = simulate_replicate(&d, r)?;
            io::write_genotypes(&dir.join("genotypes.tsv"), &rep.dataset)?;
            io::write_phenotype(&dir.join("phenotype.tsv"), &rep.dataset)?;
            io::write_weights(&dir.join("weights.tsv"), &rep.weights, &snp_ids)?;
        } else {
            let (cs, w) = simulate_cohorts(&d, cohorts, r)?;
            let mut list = Vec::with_capacity(cohorts);
            for (c, ds) in cs.cohorts.iter().enumerate() {
                let name = format!("cohort{:02}", c + 1);
                io::write_genotypes(&dir.join(&name).join("genotypes.tsv"), ds)?;
                io::write_phenotype(&dir.join(&name).join("phenotype.tsv"), ds)?;
                list.push((name.clone(), format!("{name}/genotypes.tsv"), format!("{name}/phenotype.tsv")));
            }
            io::write_cohort_list(&dir.join("cohorts.tsv"), &list)?;
            io::write_weights(&dir.join("weights.tsv"), &w, &snp_ids)?;
        }
    }
    Ok(vec![
        entry("seed", d.seed),
        entry("n", d.n),
        entry("p", d.p),
        entry("model", d.model),
        entry("w", d.w_scenario),
        entry("marginal_free", d.marginal_free),
        entry("replicates", d.replicates),
        entry("cohorts", cohorts),
    ])
}

fn run_fit(f: &FitConfig, out: &Path) -> Result<Vec<(String, String)>> {
    let ds = adjusted(io::load_dataset(&f.geno, &f.pheno, f.covar.as_deref())?)?;
    let w = load_weights(&f.weights, &ds.snp_ids)?;
    let sd = standardize(&ds)?;
    let c = f.tune.resolve_c(&sd, &w)?;
    let tuned = lambda1_for_target(&sd, &w, &f.tune, c, &f.solver)?;
    if !tuned.within_slack {
        log::warn!("closest main-effect count {} misses the target {}", tuned.solution.main_count(), f.tune.s_target);
    }
    let terms = tuned.solution.coeffs.terms();
    let report = refit_dataset(&ds, &terms)?;
    io::write_solution(&out.join("solution.tsv"), &tuned.solution, &ds.snp_ids)?;
    io::write_fit_report(&out.join("report.tsv"), &report, &ds.snp_ids)?;
    Ok(vec![
        entry("n", ds.n()),
        entry("p", ds.p()),
        entry("allowed_pairs", w.n_pairs()),
        entry("c", io::fmt_num(c)),
        entry("lambda1", io::fmt_num(tuned.lambda1)),
        entry("lambda2", io::fmt_num(tuned.lambda2)),
        entry("main_effects", tuned.solution.main_count()),
        entry("interactions", tuned.solution.coeffs.interaction_count()),
        entry("within_slack", tuned.within_slack),
        entry("cycles", tuned.solution.cycles_used),
        entry("converged", tuned.solution.converged),
        entry("probes", tuned.probes.len()),
    ])
}

fn run_meta(m: &MetaRunConfig, out: &Path) -> Result<Vec<(String, String)>> {
    let entries = io::read_cohort_list(&m.cohort_list)?;
    let mut cohorts = Vec::with_capacity(entries.len());
    for e in &entries {
        cohorts.push(adjusted(io::load_dataset(&e.geno, &e.pheno, e.covar.as_deref())?)?);
    }
    let cs = CohortSet::new(cohorts, entries.iter().map(|e| e.label.clone()).collect())?;
    let snp_ids = cs.cohorts[0].snp_ids.clone();
    let w = load_weights(&m.weights, &snp_ids)?;
    let mcfg = MetaConfig { tune: m.tune, solver: m.solver.clone(), k: m.k, seed: m.seed };
    let res = run_procedure(m.procedure, &cs, &w, &mcfg)?;
    io::write_meta_result(&out.join("meta.tsv"), &res, &snp_ids)?;
    Ok(vec![
        entry("procedure", m.procedure),
        entry("K", m.k),
        entry("seed", m.seed),
        entry("cohorts", cs.m()),
        entry("terms", res.terms.len()),
        entry("nonzero_z", res.nonzero()),
    ])
}

/// `report.tsv` files under `dir`, sorted by path.
fn find_reports(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "report.tsv") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

fn run_eval(results: &Path, truth: &Path, max_threshold: usize, out: &Path) -> Result<Vec<(String, String)>> {
    let (truth, snp_ids) = io::read_truth(truth)?;
    let reports = find_reports(results)?;
    if reports.is_empty() {
        return Err(Error::config("results", format!("no report.tsv under {}", results.display())));
    }
    let outcomes = reports.iter().enumerate().map(|(r, p)| io::read_fit_report(p, &snp_ids, r)).collect::<Result<Vec<_>>>()?;
    let curves = evaluate(&outcomes, &truth, max_threshold)?;
    io::write_eval_curves(out, &curves)?;
    Ok(vec![entry("replicates", curves.replicates), entry("max_threshold", max_threshold)])
}

/// Machine-readable record of a failed run.
pub fn error_record(err: &Error) -> String {
    let field = match err {
        Error::Config { field, .. } => Some(field.clone()),
        Error::Parse { path, .. } => Some(path.display().to_string()),
        _ => None,
    };
    serde_json::json!({ "code": err.code(), "message": err.to_string(), "field": field }).to_string()
}

/// Validation failures exit with 2, failures during a run with 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

/// Resolve, size the worker pool and dispatch.
pub fn run(cli: &Cli) -> Result<Vec<(String, String)>> {
    let cfg = resolve(cli)?;
    if let Some(t) = cfg.threads {
        // the global pool can be sized only once per process
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            log::debug!("worker pool already initialized; keeping {} threads", rayon::current_num_threads());
        }
    }
    dispatch(&cfg)
}
