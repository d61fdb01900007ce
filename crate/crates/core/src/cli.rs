//! The `vtf` command-line tool.
//!
//! Every command reads an optional JSON [`RunConfig`] (`--config`), applies
//! the `VTF_SEED` environment variable and then command-line flags on top,
//! and writes its artifacts under `--out-dir`. Each artifact records the
//! tool version, a digest of the effective configuration and a hash of the
//! dataset.
//!
//! Exit codes: 0 success, 2 I/O or configuration problems (including usage
//! errors), 3 violated preconditions, 4 numerical failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{connection_weights, fisher_score, permutation_importance, DEFAULT_REPEATS};
use crate::cf::{cf_analysis, prefix_solutions};
use crate::data::{load_csv, split, standardize, synth_classification, synth_linear, CsvSchema, Dataset, Task, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::evaluation::{compare_methods, independent_fit, load_external_ranking, Candidate, ComparisonReport, EvalConfig, MetricKind};
use crate::nn::{train, LayeredModel, ModelSpec, TrainConfig};
use crate::plot::{comparison_chart, profile_chart};
use crate::rashomon::{explore, stability_curve, RashomonConfig, WeightMatrix};
use crate::vtf::{rvtw_scores, select_unimportant, vtf_scores, ImportanceProfile, DEFAULT_THRESHOLD};

pub const SEED_ENV: &str = "VTF_SEED";

pub const BASE_MODEL_FILE: &str = "base_model.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const STABILITY_FILE: &str = "stability.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    Vtf,
    Rvtw,
    Cf,
    Permutation,
    Cw,
    Fisher,
}

impl ExplainMethod {
    fn file_stem(self) -> &'static str {
        match self {
            ExplainMethod::Vtf => "vtf",
            ExplainMethod::Rvtw => "rvtw",
            ExplainMethod::Cf => "cf",
            ExplainMethod::Permutation => "permutation",
            ExplainMethod::Cw => "cw",
            ExplainMethod::Fisher => "fisher",
        }
    }
}

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
    SyntheticLinear {
        n: usize,
        coefficients: Vec<f64>,
        #[serde(default)]
        noise_std: f64,
    },
    SyntheticClassification {
        n: usize,
        separation: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Share of samples in the training split.
    pub split_ratio: f64,
    /// Z-score features with training-split statistics.
    pub standardize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::SyntheticLinear {
                n: 1000,
                coefficients: vec![0.1, 0.3, 0.6],
                noise_std: 0.05,
            },
            split_ratio: 0.8,
            standardize: true,
        }
    }
}

/// Everything a run needs. `seed` is the single source of randomness: it
/// drives the split, base training, every retrain and the independent
/// models, overriding the per-section seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub rashomon: RashomonConfig,
    pub evaluation: EvalConfig,
    /// Methods compared by `evaluate`.
    pub methods: Vec<ExplainMethod>,
    pub permutation_repeats: usize,
    /// VTF cut used by `select`.
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            data: DataConfig::default(),
            model: ModelSpec::Linear,
            train: TrainConfig::default(),
            rashomon: RashomonConfig::default(),
            evaluation: EvalConfig::default(),
            methods: vec![
                ExplainMethod::Vtf,
                ExplainMethod::Rvtw,
                ExplainMethod::Cf,
                ExplainMethod::Permutation,
                ExplainMethod::Cw,
            ],
            permutation_repeats: DEFAULT_REPEATS,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_at(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.data.split_ratio > 0.0 && self.data.split_ratio < 1.0) {
            return Err(Error::Config("split_ratio must lie in (0, 1)".into()));
        }
        if self.permutation_repeats < 1 {
            return Err(Error::Config("permutation_repeats must be >= 1".into()));
        }
        self.train.validate()?;
        self.rashomon.validate()?;
        self.evaluation.validate()
    }

    fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self.rashomon.base_seed = seed;
        self.evaluation.train.seed = seed;
        self
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_digest: String,
    pub dataset_hash: String,
}

impl Provenance {
    fn line(&self) -> String {
        format!(
            "tool_version={} config_digest={} dataset_hash={}",
            self.tool_version, self.config_digest, self.dataset_hash
        )
    }
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a RunConfig>,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Parser, Debug)]
#[command(name = "vtf", version, about = "Feature importance from the Rashomon set of a trained model")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory all artifacts are written to and read from.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker thread cap.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Seed for every random choice (overrides VTF_SEED and the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV dataset, replacing the configured data source.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the base model; writes base_model.json and history.csv.
    TrainBase {
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Retrain the feature model repeatedly; writes weights.json.
    Explore {
        #[arg(long)]
        n_retrains: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Compute one importance profile (JSON, CSV and SVG).
    Explain {
        #[arg(long, value_enum)]
        method: ExplainMethod,
    },
    /// One-shot selection of features with VTF above a threshold.
    Select {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Drop-and-refit comparison of importance methods.
    Evaluate {
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Option<Vec<ExplainMethod>>,
        /// `name,rank` CSV from another tool; repeatable.
        #[arg(long)]
        external: Vec<PathBuf>,
    },
    /// Summarize the artifacts present in the output directory.
    Report,
}

/// Maps an error to the documented process exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Parse { .. } | Error::Schema(_) | Error::Config(_) | Error::EmptyDataset => 2,
        Error::Shape { .. } | Error::Argument(_) | Error::InsufficientRetrains { .. } => 3,
        Error::NonFiniteGradient { .. } | Error::Diverged { .. } | Error::Exploration { .. } | Error::Normalization { .. } => 4,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if let Error::Exploration { diagnostics, .. } = &e {
                for d in diagnostics.iter().take(10) {
                    eprintln!("  {d}");
                }
            }
            exit_code(&e)
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn effective_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut seed = config.seed;
    if let Ok(v) = std::env::var(SEED_ENV) {
        seed = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
    }
    if let Some(s) = cli.seed {
        seed = s;
    }
    config = config.with_seed(seed);
    if let Some(path) = &cli.data {
        let schema = match &config.data.source {
            DataSource::Csv { schema, .. } => schema.clone(),
            _ => CsvSchema::default(),
        };
        config.data.source = DataSource::Csv { path: path.clone(), schema };
    }
    match &cli.command {
        Command::TrainBase { epochs: Some(e) } => config.train.epochs = *e,
        Command::Explore { n_retrains, max_epochs } => {
            if let Some(n) = n_retrains {
                config.rashomon.n_retrains = Some(*n);
            }
            if let Some(m) = max_epochs {
                config.rashomon.max_epochs_per_retrain = *m;
            }
        }
        Command::Select { threshold: Some(t) } => {
            if !(*t > 0.0) {
                return Err(Failure::Usage(format!("--threshold must be positive, got {t}")));
            }
            config.threshold = *t;
        }
        Command::Evaluate { methods: Some(m), .. } => config.methods = m.clone(),
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn load_dataset(config: &DataConfig, seed: u64) -> Result<Dataset> {
    match &config.source {
        DataSource::Csv { path, schema } => load_csv(path, schema),
        DataSource::SyntheticLinear { n, coefficients, noise_std } => synth_linear(*n, coefficients, *noise_std, seed),
        DataSource::SyntheticClassification { n, separation } => synth_classification(*n, separation, seed),
    }
}

struct Session {
    config: RunConfig,
    out_dir: PathBuf,
    jobs: Option<usize>,
    provenance: Provenance,
    train: Dataset,
    test: Dataset,
}

impl Session {
    fn open(cli: &Cli, config: RunConfig) -> Result<Self> {
        let full = load_dataset(&config.data, config.seed)?;
        if config.model.is_classification() != (full.task == Task::BinaryClassification) {
            return Err(Error::Config(format!(
                "model family {:?} does not match a {:?} dataset",
                config.model, full.task
            )));
        }
        let (train, test) = split(&full, config.data.split_ratio, config.seed)?;
        let (train, test) = if config.data.standardize { standardize(&train, &test)? } else { (train, test) };
        std::fs::create_dir_all(&cli.out_dir).map_err(|e| io_at(&cli.out_dir, e))?;
        Ok(Session {
            provenance: Provenance {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_digest: config.digest(),
                dataset_hash: full.content_hash(),
            },
            config,
            out_dir: cli.out_dir.clone(),
            jobs: cli.jobs.map(|j| j as usize),
            train,
            test,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| io_at(&path, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, body: &T, with_config: bool) -> Result<()> {
        let artifact = Artifact {
            provenance: &self.provenance,
            config: with_config.then_some(&self.config),
            body,
        };
        self.write(name, &(serde_json::to_string_pretty(&artifact)? + "\n"))
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<()> {
        self.write(name, &format!("# {}\n{body}", self.provenance.line()))
    }

    fn write_svg(&self, name: &str, body: &str) -> Result<()> {
        self.write(name, &format!("<!-- {} -->\n{body}", self.provenance.line()))
    }

    fn read(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        std::fs::read_to_string(&path).map_err(|e| io_at(&path, e))
    }

    fn base_model(&self) -> Result<LayeredModel> {
        LayeredModel::from_json(&self.read(BASE_MODEL_FILE)?)
    }

    fn weights(&self) -> Result<WeightMatrix> {
        WeightMatrix::from_json(&self.read(WEIGHTS_FILE)?)
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let config = effective_config(&cli)?;
    let session = Session::open(&cli, config)?;
    let work = || match &cli.command {
        Command::TrainBase { .. } => cmd_train_base(&session),
        Command::Explore { .. } => cmd_explore(&session),
        Command::Explain { method } => cmd_explain(&session, *method),
        Command::Select { .. } => cmd_select(&session),
        Command::Evaluate { external, .. } => cmd_evaluate(&session, external),
        Command::Report => cmd_report(&session),
    };
    let result = match session.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    result.map_err(Failure::Run)
}

fn cmd_train_base(s: &Session) -> Result<()> {
    let mut model = s.config.model.build(s.train.n_features(), s.config.seed)?;
    let history = train(&mut model, s.train.samples(), Some(s.test.samples()), &s.config.train)?;
    let doc = crate::nn::ModelDocument::from(&model);
    s.write_json(BASE_MODEL_FILE, &doc, false)?;
    let mut csv = String::from("epoch,train_loss,test_loss\n");
    for (k, (tr, te)) in history.train_loss.iter().zip(&history.val_loss).enumerate() {
        let _ = writeln!(csv, "{},{tr:?},{te:?}", k + 1);
    }
    s.write_csv(HISTORY_FILE, &csv)?;
    println!(
        "base model trained: {} epochs, train loss {:.6e}, test loss {:.6e}",
        history.epochs(),
        history.final_loss,
        history.val_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_explore(s: &Session) -> Result<()> {
    let base = s.base_model()?;
    let n = s.config.rashomon.retrains_for(s.train.n_features());
    let progress = |r: &crate::rashomon::RetrainRecord| {
        eprintln!(
            "retrain {}/{}: loss {:.6e} after {} epochs, {}",
            r.retrain_index + 1,
            n,
            r.final_loss,
            r.epochs_used,
            if r.accepted { "accepted" } else { "rejected" }
        );
    };
    let weights = explore(&base, &s.train, &s.config.rashomon, s.jobs, &progress)?;
    s.write_json(WEIGHTS_FILE, &weights, false)?;
    let curve = stability_curve(&weights)?;
    let mut csv = String::from("retrains");
    for name in &weights.feature_names {
        let _ = write!(csv, ",{name}");
    }
    csv.push('\n');
    for (k, row) in curve.rows().into_iter().enumerate() {
        let _ = write!(csv, "{}", k + 1);
        for v in row {
            let _ = write!(csv, ",{v:?}");
        }
        csv.push('\n');
    }
    s.write_csv(STABILITY_FILE, &csv)?;
    println!(
        "{} of {} retrains accepted (base loss {:.6e}, epsilon {:.3e})",
        weights.n_rows(),
        weights.attempted,
        weights.base_loss,
        weights.epsilon
    );
    Ok(())
}

fn compute_profile(s: &Session, method: ExplainMethod) -> Result<ImportanceProfile> {
    let names = s.train.feature_names.clone();
    match method {
        ExplainMethod::Vtf => vtf_scores(&s.weights()?),
        ExplainMethod::Rvtw => rvtw_scores(&s.weights()?),
        ExplainMethod::Cf => {
            let analysis = cf_analysis(&s.weights()?, &s.base_model()?, s.test.samples())?;
            s.write_csv("cf_system.csv", &analysis.system.to_csv())?;
            let solution: serde_json::Value = serde_json::from_str(&analysis.solution_json()?)?;
            s.write_json("cf_solution.json", &solution, false)?;
            let mut csv = String::from("equations");
            for n in &names {
                let _ = write!(csv, ",{n}");
            }
            csv.push('\n');
            for p in prefix_solutions(&analysis.system) {
                let _ = write!(csv, "{}", p.equations);
                match &p.normalized {
                    Some(v) => v.iter().for_each(|c| {
                        let _ = write!(csv, ",{c:?}");
                    }),
                    None => names.iter().for_each(|_| csv.push(',')),
                }
                csv.push('\n');
            }
            s.write_csv("cf_prefix.csv", &csv)?;
            Ok(analysis.profile)
        }
        ExplainMethod::Permutation => {
            permutation_importance(&s.base_model()?, s.test.samples(), names, s.config.permutation_repeats, s.config.seed)
        }
        ExplainMethod::Cw => connection_weights(&s.base_model()?, names),
        ExplainMethod::Fisher => fisher_score(&s.train),
    }
}

fn cmd_explain(s: &Session, method: ExplainMethod) -> Result<()> {
    let profile = compute_profile(s, method)?;
    let stem = format!("profile_{}", method.file_stem());
    s.write_json(&format!("{stem}.json"), &profile, false)?;
    s.write_csv(&format!("{stem}.csv"), &profile.to_csv())?;
    s.write_svg(&format!("{stem}.svg"), &profile_chart(&profile))?;
    println!("{} ranking (most important first):", profile.method);
    for r in crate::vtf::rank(&profile) {
        println!("  {:>3}. {:<20} {:.6}", r.rank, r.name, r.score);
    }
    for note in &profile.notes {
        println!("  note: {note}");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub threshold: f64,
    pub unimportant: Vec<String>,
    pub retained: Vec<String>,
    pub metric_kind: MetricKind,
    pub full_metric: f64,
    /// `None` when every feature was selected as unimportant.
    pub retained_metric: Option<f64>,
    pub message: String,
}

fn cmd_select(s: &Session) -> Result<()> {
    let vtf = vtf_scores(&s.weights()?)?;
    let unimportant = select_unimportant(&vtf, s.config.threshold)?;
    let retained: Vec<usize> = (0..vtf.len()).filter(|j| !unimportant.contains(j)).collect();
    let eval = &s.config.evaluation;
    let full_metric = independent_fit(&s.train, &s.test, eval)?;
    let (retained_metric, message) = if unimportant.is_empty() {
        (Some(full_metric), format!("no feature has t > {}; all features retained", s.config.threshold))
    } else if retained.is_empty() {
        (None, "every feature has t above the threshold; nothing to refit".to_string())
    } else {
        let m = independent_fit(&s.train.select_columns(&retained), &s.test.select_columns(&retained), eval)?;
        (Some(m), format!("{} of {} features selected as unimportant", unimportant.len(), vtf.len()))
    };
    let names = |idx: &[usize]| idx.iter().map(|&j| vtf.feature_names[j].clone()).collect::<Vec<_>>();
    let report = SelectionReport {
        threshold: s.config.threshold,
        unimportant: names(&unimportant),
        retained: names(&retained),
        metric_kind: MetricKind::for_task(s.test.task),
        full_metric,
        retained_metric,
        message,
    };
    s.write_json(SELECTION_FILE, &report, true)?;
    println!("{}", report.message);
    println!("unimportant: {:?}", report.unimportant);
    println!("full-feature metric {:.6}, retained-subset metric {:?}", report.full_metric, report.retained_metric);
    Ok(())
}

fn cmd_evaluate(s: &Session, external: &[PathBuf]) -> Result<()> {
    let mut candidates = Vec::new();
    for &method in &s.config.methods {
        let start = Instant::now();
        let profile = compute_profile(s, method)?;
        candidates.push(Candidate {
            profile,
            explain_time_ms: Some(start.elapsed().as_secs_f64() * 1e3),
        });
    }
    for path in external {
        let name = path.file_stem().and_then(|n| n.to_str()).unwrap_or("external");
        candidates.push(load_external_ranking(path, name, &s.train.feature_names)?.into());
    }
    let report = compare_methods(&s.train, &s.test, &candidates, &s.config.evaluation)?;
    s.write_json(EVALUATION_FILE, &report, true)?;
    s.write_csv("evaluation.csv", &report.to_csv())?;
    s.write_svg("evaluation.svg", &comparison_chart(&report))?;
    println!("baseline metric {:.6}", report.baseline);
    for m in &report.methods {
        let cells: Vec<String> = m.curve.iter().map(|p| p.metric.map_or("-".into(), |v| format!("{v:.4}"))).collect();
        println!("{:<14} {}", m.name, cells.join(" "));
    }
    if let Some(sel) = &report.vtf_selection {
        println!("VTF one-shot selection removed {:?}: metric {:?}", sel.unimportant, sel.metric);
    }
    Ok(())
}

fn cmd_report(s: &Session) -> Result<()> {
    let mut md = format!("# Feature importance report\n\n`{}`\n", s.provenance.line());
    let mut found = 0;
    if let Ok(text) = s.read(WEIGHTS_FILE) {
        let w = WeightMatrix::from_json(&text)?;
        found += 1;
        let _ = write!(
            md,
            "\n## Exploration\n\n{} of {} retrains accepted; base loss {:.6e}, epsilon {:.3e}.\n",
            w.n_rows(),
            w.attempted,
            w.base_loss,
            w.epsilon
        );
    }
    let mut profiles = Vec::new();
    for method in ExplainMethod::value_variants() {
        if let Ok(text) = s.read(&format!("profile_{}.json", method.file_stem())) {
            profiles.push(ImportanceProfile::from_json(&text)?);
        }
    }
    if !profiles.is_empty() {
        found += 1;
        md.push_str("\n## Rankings\n\nMost important first.\n\n| method | ranking |\n|---|---|\n");
        for p in &profiles {
            let order: Vec<&str> = p.ranking.iter().map(|&j| p.feature_names[j].as_str()).collect();
            let _ = writeln!(md, "| {} | {} |", p.method, order.join(", "));
        }
    }
    if let Ok(text) = s.read(SELECTION_FILE) {
        let sel: SelectionReport = serde_json::from_str(&text)?;
        found += 1;
        let _ = write!(
            md,
            "\n## Selection\n\n{}. Unimportant: {:?}. Full-feature metric {:.6}, retained-subset metric {}.\n",
            sel.message,
            sel.unimportant,
            sel.full_metric,
            sel.retained_metric.map_or("n/a".into(), |m| format!("{m:.6}"))
        );
    }
    if let Ok(text) = s.read(EVALUATION_FILE) {
        let rep = ComparisonReport::from_json(&text)?;
        found += 1;
        let fractions: Vec<String> = rep.methods[0].curve.iter().map(|p| format!("{:.0}%", p.fraction * 100.0)).collect();
        let _ = write!(md, "\n## Evaluation\n\nBaseline {:?} {:.6}.\n\n| method | {} |\n|---|{}\n", rep.metric_kind, rep.baseline, fractions.join(" | "), "---|".repeat(fractions.len()));
        for m in &rep.methods {
            let cells: Vec<String> = m.curve.iter().map(|p| p.metric.map_or("-".into(), |v| format!("{v:.4}"))).collect();
            let _ = writeln!(md, "| {} | {} |", m.name, cells.join(" | "));
        }
    }
    if found == 0 {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no artifacts to report in {}", s.out_dir.display()),
        )));
    }
    s.write(REPORT_FILE, &md)?;
    println!("wrote {}", s.path(REPORT_FILE).display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InsufficientRetrains { available: 1, required: 3 }), 3);
        assert_eq!(exit_code(&Error::Diverged { last_finite_epoch: 0 }), 4);
    }

    #[test]
    fn default_config_round_trips_and_validates() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.digest(), back.digest());
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "data": {"source": {"kind": "csv", "path": "a.csv"}}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.data.split_ratio, 0.8);
        assert!(matches!(c.data.source, DataSource::Csv { .. }));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 7}"#).is_err());
    }

    #[test]
    fn seed_reaches_every_section() {
        let c = RunConfig::default().with_seed(42);
        assert_eq!((c.train.seed, c.rashomon.base_seed, c.evaluation.train.seed), (42, 42, 42));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["vtf", "explain", "--method", "shap"]), 2);
        assert_eq!(run(["vtf", "frobnicate"]), 2);
        assert_eq!(run(["vtf", "select", "--threshold", "0"]), 2);
        assert_eq!(run(["vtf", "--jobs", "0", "report"]), 2);
    }
}
