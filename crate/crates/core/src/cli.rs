//! Command-line front end.
//!
//! Every CSV output starts with `#` lines recording the run configuration.
//! Thread count is deliberately left out of that header: outputs are
//! identical for any `--parallelism`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::batch::{attribute_dataset, explain_dataset, EcOptions};
use crate::ec::{SearchMethod, DEFAULT_SEARCH_BUDGET};
use crate::error::{Error, Result};
use crate::evaluation::{
    curve_report, default_k_grid, explanation_curve, generate_synthetic, spearman_topk,
    ExplanationCurve, SynthConfig,
};
use crate::io::{load_dataset, load_feature_names, load_model, write_dataset, write_model};
use crate::model::{FeatureId, LinearModel, SparseDataset};
use crate::ranking::{
    aggregate_ec, aggregate_shapley, rank_by_beta, rank_by_coverage, EcCredit, FeatureRanking,
    RankingMethod,
};
use crate::shapley::{ShapleyOptions, DEFAULT_EXACT_LIMIT, DEFAULT_SAMPLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sparse-explain",
    version,
    about = "Explain linear models on sparse binary data with evidence counterfactuals and Shapley values"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-instance EC or Shapley scores: instance_id, feature_id, score.
    Explain {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        method: InstanceMethod,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Global feature ranking: rank, feature_id, normalized_score, raw_score.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = parse_method)]
        method: RankingMethod,
        /// Optional `feature_id<TAB>name` sidecar.
        #[arg(long)]
        feature_names: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Explanation curves: method, k, explained_count, explained_fraction.
    Curve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "shapley,ec,beta,coverage")]
        methods: Vec<RankingMethod>,
        /// Strictly increasing list of k; defaults to 1,2,5,10,… up to the feature count.
        #[arg(long, value_parser = parse_ks)]
        ks: Option<KGrid>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pairwise Spearman matrix over the top-k features of each row method.
    Correlate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "shapley,ec,beta,coverage")]
        methods: Vec<RankingMethod>,
        #[arg(long, default_value_t = 1000)]
        top_k: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a synthetic model and dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum InstanceMethod {
    Ec,
    Shapley,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum SearchArg {
    Linear,
    Greedy,
    Complete,
}

impl From<SearchArg> for SearchMethod {
    fn from(s: SearchArg) -> Self {
        match s {
            SearchArg::Linear => SearchMethod::LinearRank,
            SearchArg::Greedy => SearchMethod::Greedy,
            SearchArg::Complete => SearchMethod::Complete,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum CreditArg {
    Membership,
    InverseSize,
}

impl From<CreditArg> for EcCredit {
    fn from(c: CreditArg) -> Self {
        match c {
            CreditArg::Membership => EcCredit::Membership,
            CreditArg::InverseSize => EcCredit::InverseSize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct KGrid(Vec<usize>);

fn parse_method(s: &str) -> std::result::Result<RankingMethod, String> {
    s.parse()
}

fn parse_ks(s: &str) -> std::result::Result<KGrid, String> {
    let ks = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid k `{t}`"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if ks.is_empty() {
        return Err("empty k list".into());
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("k values must be strictly increasing: {s}"));
    }
    Ok(KGrid(ks))
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Model TSV (`feature_id<TAB>weight`, `__intercept__` reserved).
    #[arg(long)]
    model: PathBuf,
    /// SVMLight-style binary dataset.
    #[arg(long)]
    data: PathBuf,
    /// Decision threshold in score space.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Permutations for Monte Carlo Shapley.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Largest game solved exactly.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SearchArg::Linear)]
    search: SearchArg,
    /// Largest subset tried by complete search.
    #[arg(long, default_value_t = 3)]
    max_size: usize,
    /// Subset evaluations allowed per instance in complete search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u128,
    #[arg(long, value_enum, default_value_t = CreditArg::Membership)]
    ec_credit: CreditArg,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_data: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().num_instances)]
    instances: usize,
    #[arg(long, default_value_t = SynthConfig::default().num_features)]
    features: usize,
    #[arg(long, default_value_t = SynthConfig::default().coverage_exponent)]
    coverage_exponent: f64,
    #[arg(long, default_value_t = SynthConfig::default().mean_active)]
    mean_active: f64,
    #[arg(long, default_value_t = SynthConfig::default().max_coverage)]
    max_coverage: f64,
    #[arg(long, default_value_t = SynthConfig::default().weight_mean, allow_negative_numbers = true)]
    weight_mean: f64,
    #[arg(long, default_value_t = SynthConfig::default().weight_std)]
    weight_std: f64,
    #[arg(long, default_value_t = SynthConfig::default().boosted_fraction)]
    boosted_fraction: f64,
    #[arg(long, default_value_t = SynthConfig::default().boost, allow_negative_numbers = true)]
    boost: f64,
    #[arg(long, default_value_t = SynthConfig::default().intercept, allow_negative_numbers = true)]
    intercept: f64,
    #[arg(long, default_value_t = SynthConfig::default().threshold, allow_negative_numbers = true)]
    threshold: f64,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long)]
    parallelism: Option<usize>,
}

impl SynthArgs {
    fn config(&self) -> SynthConfig {
        SynthConfig {
            num_instances: self.instances,
            num_features: self.features,
            coverage_exponent: self.coverage_exponent,
            mean_active: self.mean_active,
            max_coverage: self.max_coverage,
            weight_mean: self.weight_mean,
            weight_std: self.weight_std,
            boosted_fraction: self.boosted_fraction,
            boost: self.boost,
            intercept: self.intercept,
            threshold: self.threshold,
            seed: self.seed,
        }
    }
}

/// Resolved settings of one run; rendered into every output header.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub model_path: PathBuf,
    pub data_path: PathBuf,
    pub methods: Vec<String>,
    pub threshold: f64,
    pub samples: usize,
    pub exact_limit: usize,
    pub seed: u64,
    pub search: SearchMethod,
    pub max_size: usize,
    pub budget: u128,
    pub ec_credit: EcCredit,
    pub ks: Option<Vec<usize>>,
    pub top_k: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

impl RunConfig {
    fn new(command: &'static str, input: &InputArgs, run: &RunArgs, methods: Vec<String>) -> Self {
        RunConfig {
            command,
            model_path: input.model.clone(),
            data_path: input.data.clone(),
            methods,
            threshold: input.threshold,
            samples: run.samples,
            exact_limit: run.exact_limit,
            seed: run.seed,
            search: run.search.into(),
            max_size: run.max_size,
            budget: run.budget,
            ec_credit: run.ec_credit.into(),
            ks: None,
            top_k: None,
            output_path: run.output.clone(),
            parallelism: run.parallelism,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.model_path.as_os_str().is_empty() || self.data_path.as_os_str().is_empty() {
            return Err(Error::InvalidConfig(
                "model and data paths must be non-empty".into(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("--samples must be at least 1".into()));
        }
        if self.parallelism == Some(0) {
            return Err(Error::InvalidConfig(
                "--parallelism must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn ec_options(&self) -> EcOptions {
        EcOptions {
            search: self.search,
            max_size: self.max_size,
            budget: self.budget,
        }
    }

    fn shapley_options(&self) -> ShapleyOptions {
        ShapleyOptions {
            exact_limit: self.exact_limit,
            samples: self.samples,
            seed: self.seed,
        }
    }

    /// `#` header lines. Paths are written as given.
    pub fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(
            h,
            "# sparse-explain {} {}",
            self.command,
            env!("CARGO_PKG_VERSION")
        );
        let _ = writeln!(h, "# model={}", self.model_path.display());
        let _ = writeln!(h, "# data={}", self.data_path.display());
        let _ = writeln!(h, "# methods={}", self.methods.join(","));
        let _ = writeln!(h, "# threshold={}", self.threshold);
        let _ = writeln!(h, "# seed={}", self.seed);
        let _ = writeln!(h, "# samples={}", self.samples);
        let _ = writeln!(h, "# exact_limit={}", self.exact_limit);
        let _ = writeln!(h, "# ec_search={}", self.search.name());
        let _ = writeln!(h, "# ec_max_size={}", self.max_size);
        let _ = writeln!(h, "# ec_budget={}", self.budget);
        let _ = writeln!(h, "# ec_credit={}", self.ec_credit.name());
        if let Some(ks) = &self.ks {
            let ks: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(h, "# ks={}", ks.join(","));
        }
        if let Some(k) = self.top_k {
            let _ = writeln!(h, "# top_k={k}");
        }
        h
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn with_pool<T: Send>(
    parallelism: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallelism {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn load_inputs(cfg: &RunConfig) -> Result<(LinearModel, SparseDataset)> {
    let model = load_model(&cfg.model_path, cfg.threshold)?;
    let dataset = load_dataset(&cfg.data_path)?;
    let m = model.num_features().max(dataset.num_features());
    Ok((model.with_num_features(m)?, dataset))
}

fn emit(cfg_output: Option<&Path>, body: &str) -> Result<()> {
    match cfg_output {
        Some(path) => fs::write(path, body).map_err(|e| Error::io(path, e)),
        None => io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn compute_ranking(
    method: RankingMethod,
    model: &LinearModel,
    dataset: &SparseDataset,
    cfg: &RunConfig,
) -> Result<FeatureRanking> {
    let m = model.num_features();
    match method {
        RankingMethod::Ec => {
            let ex = explain_dataset(model, dataset, &cfg.ec_options())?;
            aggregate_ec(&ex, m, cfg.ec_credit)
        }
        RankingMethod::Shapley => {
            let at = attribute_dataset(model, dataset, &cfg.shapley_options())?;
            aggregate_shapley(&at, m)
        }
        RankingMethod::Beta => Ok(rank_by_beta(model)),
        RankingMethod::Coverage => Ok(rank_by_coverage(dataset)),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Explain { input, method, run } => {
            let name = match method {
                InstanceMethod::Ec => "ec",
                InstanceMethod::Shapley => "shapley",
            };
            let cfg = RunConfig::new("explain", &input, &run, vec![name.into()]);
            cfg.validate()?;
            let body = with_pool(cfg.parallelism, || explain_csv(&cfg, method))?;
            emit(cfg.output_path.as_deref(), &body)
        }
        Command::Rank {
            input,
            method,
            feature_names,
            run,
        } => {
            let cfg = RunConfig::new("rank", &input, &run, vec![method.name().into()]);
            cfg.validate()?;
            let names = feature_names.as_ref().map(load_feature_names).transpose()?;
            let body = with_pool(cfg.parallelism, || rank_csv(&cfg, method, names.as_ref()))?;
            emit(cfg.output_path.as_deref(), &body)
        }
        Command::Curve {
            input,
            methods,
            ks,
            run,
        } => {
            let names = methods.iter().map(|m| m.name().to_string()).collect();
            let mut cfg = RunConfig::new("curve", &input, &run, names);
            cfg.ks = ks.map(|k| k.0);
            cfg.validate()?;
            let body = with_pool(cfg.parallelism, || curve_csv(&mut cfg, &methods))?;
            emit(cfg.output_path.as_deref(), &body)
        }
        Command::Correlate {
            input,
            methods,
            top_k,
            run,
        } => {
            let names = methods.iter().map(|m| m.name().to_string()).collect();
            let mut cfg = RunConfig::new("correlate", &input, &run, names);
            cfg.top_k = Some(top_k);
            cfg.validate()?;
            let body = with_pool(cfg.parallelism, || correlate_csv(&cfg, &methods, top_k))?;
            emit(cfg.output_path.as_deref(), &body)
        }
        Command::Synth(args) => synth(&args),
    }
}

fn explain_csv(cfg: &RunConfig, method: InstanceMethod) -> Result<String> {
    let (model, dataset) = load_inputs(cfg)?;
    let mut out = cfg.header();
    out.push_str("instance_id,feature_id,score\n");
    match method {
        InstanceMethod::Ec => {
            for e in explain_dataset(&model, &dataset, &cfg.ec_options())? {
                let credit = cfg.ec_credit.credit(e.size());
                for f in &e.features {
                    let _ = writeln!(out, "{},{},{}", e.instance_id, f, credit);
                }
            }
        }
        InstanceMethod::Shapley => {
            for a in attribute_dataset(&model, &dataset, &cfg.shapley_options())? {
                for (f, phi) in &a.values {
                    let _ = writeln!(out, "{},{},{}", a.instance_id, f, phi);
                }
            }
        }
    }
    Ok(out)
}

fn rank_csv(
    cfg: &RunConfig,
    method: RankingMethod,
    names: Option<&BTreeMap<FeatureId, String>>,
) -> Result<String> {
    let (model, dataset) = load_inputs(cfg)?;
    let ranking = compute_ranking(method, &model, &dataset, cfg)?;
    let mut out = cfg.header();
    let normalization = match method {
        RankingMethod::Beta => {
            "none (raw coefficients; proportional_score = beta / sum(max(beta, 0)))"
        }
        RankingMethod::Shapley => "signed_total",
        RankingMethod::Ec | RankingMethod::Coverage => "total",
    };
    let _ = writeln!(out, "# normalization={normalization}");
    let _ = writeln!(out, "# raw_total={}", ranking.raw_total);
    out.push_str("rank,feature_id,normalized_score,raw_score");
    if method == RankingMethod::Beta {
        out.push_str(",proportional_score");
    }
    if names.is_some() {
        out.push_str(",feature_name");
    }
    out.push('\n');
    for (i, e) in ranking.entries.iter().enumerate() {
        let _ = write!(out, "{},{},{},{}", i + 1, e.feature, e.score, e.raw);
        if method == RankingMethod::Beta {
            let p = if ranking.raw_total > 0.0 {
                e.raw / ranking.raw_total
            } else {
                0.0
            };
            let _ = write!(out, ",{p}");
        }
        if let Some(names) = names {
            let _ = write!(out, ",{}", names.get(&e.feature).map_or("", String::as_str));
        }
        out.push('\n');
    }
    Ok(out)
}

fn curve_csv(cfg: &mut RunConfig, methods: &[RankingMethod]) -> Result<String> {
    let (model, dataset) = load_inputs(cfg)?;
    let ks = cfg
        .ks
        .get_or_insert_with(|| default_k_grid(model.num_features()))
        .clone();
    let curves = methods
        .iter()
        .map(|&m| {
            let r = compute_ranking(m, &model, &dataset, cfg)?;
            explanation_curve(&r, &model, &dataset, &ks)
        })
        .collect::<Result<Vec<ExplanationCurve>>>()?;
    let report = if methods.contains(&RankingMethod::Beta) {
        Some(curve_report(&curves)?)
    } else {
        None
    };

    let mut out = cfg.header();
    let baseline = curves.first().map_or(0, |c| c.baseline_positive_count);
    let _ = writeln!(out, "# positive_baseline={baseline}");
    out.push_str("method,k,explained_count,explained_fraction");
    if report.is_some() {
        out.push_str(",ratio_to_beta,doubled");
    }
    out.push('\n');
    for (ci, c) in curves.iter().enumerate() {
        for (pi, p) in c.points.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{}",
                c.method,
                p.k,
                p.explained,
                c.fraction(p)
            );
            if let Some(r) = &report {
                let row = &r.rows[pi];
                let _ = write!(out, ",{},{}", row.ratios[ci], row.doubled[ci]);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn correlate_csv(cfg: &RunConfig, methods: &[RankingMethod], top_k: usize) -> Result<String> {
    let (model, dataset) = load_inputs(cfg)?;
    let rankings = methods
        .iter()
        .map(|&m| compute_ranking(m, &model, &dataset, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut out = cfg.header();
    out.push_str(
        "# rows: top-k features of the row method; columns: their positions in the column method\n",
    );
    out.push_str("# features the column method does not rank share rank len(column)+1\n");
    out.push_str("method");
    for m in methods {
        let _ = write!(out, ",{m}");
    }
    out.push('\n');
    for row in &rankings {
        out.push_str(row.method.name());
        for col in &rankings {
            match spearman_topk(row, col, top_k) {
                Ok(rep) => {
                    let _ = write!(out, ",{}", rep.rho);
                }
                Err(Error::UndefinedCorrelation(_)) => out.push_str(",NA"),
                Err(e) => return Err(e),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn synth(args: &SynthArgs) -> Result<()> {
    if args.parallelism == Some(0) {
        return Err(Error::InvalidConfig(
            "--parallelism must be at least 1".into(),
        ));
    }
    let config = args.config();
    let (model, dataset) = with_pool(args.parallelism, || generate_synthetic(&config))?;
    let mut header = String::new();
    let _ = writeln!(
        header,
        "# sparse-explain synth {}",
        env!("CARGO_PKG_VERSION")
    );
    let _ = writeln!(header, "# {config:?}");
    let _ = writeln!(
        header,
        "# score threshold={} (pass --threshold to other commands if nonzero)",
        config.threshold
    );

    let mut buf = header.clone().into_bytes();
    write_model(&model, &mut buf).map_err(|e| Error::io(&args.out_model, e))?;
    fs::write(&args.out_model, &buf).map_err(|e| Error::io(&args.out_model, e))?;

    let mut buf = header.into_bytes();
    write_dataset(&dataset, &mut buf).map_err(|e| Error::io(&args.out_data, e))?;
    fs::write(&args.out_data, &buf).map_err(|e| Error::io(&args.out_data, e))
}
