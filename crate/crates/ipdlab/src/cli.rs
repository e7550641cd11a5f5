//! Command-line interface: batch execution, ranking tables, analysis exports.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
//! 3 insufficient data for the requested analysis.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{
    self, cluster, forest, stats, FeatureMatrix,
};
use crate::engine::{PayoffMatrix, DEFAULT_TURN_CAP};
use crate::strategies::Registry;
use crate::tournament::{median_rank_table, Protocol, RankingSummary};
use crate::trials::{
    load_manifest, load_records, run_batch, BatchConfig, OutputFormat, ParameterRanges,
    SampledParams, TrialRecord,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INSUFFICIENT: i32 = 3;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "IPDLAB_CONFIG";

#[derive(Parser)]
#[command(
    name = "ipdlab",
    version,
    about = "Iterated prisoner's dilemma laboratory: seeded tournament batches and their analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded batch of trials and persist the results.
    Run {
        /// TOML config file; defaults to $IPDLAB_CONFIG when set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inclusive seed span, e.g. 0..9.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count; 0 uses all cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Median-normalized-rank table over collected trials.
    Rank {
        /// Directory holding trials/ and manifest.json.
        #[arg(long = "in")]
        input: PathBuf,
        /// Tournament type: standard, noisy, probend, noisy_probend.
        #[arg(long = "type", default_value = "standard")]
        tournament_type: String,
        /// Conjunction of comma-separated predicates, e.g. "p_e<0.1,k>=10".
        #[arg(long)]
        filter: Option<String>,
        /// Emit only the first M rows.
        #[arg(long)]
        top: Option<usize>,
        /// Also write the table as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Feature analysis exports: correlations, importance, winners.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "type", default_value = "standard")]
        tournament_type: String,
        /// Clustering approach: 1-3 rank thresholds, 4 k-means.
        #[arg(long, default_value_t = 3)]
        approach: u8,
        /// What to export: correlations, importance, winners.
        #[arg(long)]
        what: String,
        /// Output directory for CSV exports; defaults to <in>/analysis.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the strategy registry manifest as JSON.
    Registry,
}

/// TOML batch configuration. Every field is optional; flags override.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub master_seed: u64,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub turn_cap: Option<u32>,
    pub workers: Option<usize>,
    pub format: Option<OutputFormat>,
    pub ranges: Option<ParameterRanges>,
    pub registry: Option<RegistryConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistryConfig {
    /// Restrict sampling to these strategies.
    pub subset: Vec<String>,
    /// Extra archetype strategies: kind, name, params.
    pub extra: Vec<ArchetypeEntry>,
}

#[derive(Debug, Deserialize)]
pub struct ArchetypeEntry {
    pub kind: String,
    #[serde(default)]
    pub name: String,
    #[serde(default = "empty_params")]
    pub params: toml::Value,
}

fn empty_params() -> toml::Value {
    toml::Value::Table(Default::default())
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

/// Parse an inclusive seed span `A..B`.
pub fn parse_seed_span(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("seed span `{s}` is not of the form A..B"))?;
    let start: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
    let end: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
    if start > end {
        return Err(format!("empty seed span `{s}`"));
    }
    Ok((start, end))
}

/// One conjunct of the filter language: `<param> <op> <value>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub key: String,
    pub op: FilterOp,
    pub value: f64,
}

impl Predicate {
    pub fn holds(&self, params: &SampledParams, seed: u64) -> bool {
        let lhs = match self.key.as_str() {
            "p_n" => params.p_n,
            "p_e" => params.p_e,
            "n" => f64::from(params.n),
            "N" => params.n_strategies as f64,
            "k" => f64::from(params.k),
            "seed" => seed as f64,
            _ => unreachable!("validated at parse"),
        };
        match self.op {
            FilterOp::Lt => lhs < self.value,
            FilterOp::Le => lhs <= self.value,
            FilterOp::Gt => lhs > self.value,
            FilterOp::Ge => lhs >= self.value,
            FilterOp::Eq => lhs == self.value,
        }
    }
}

/// Parse a comma-separated conjunction of predicates.
pub fn parse_filter(expr: &str) -> Result<Vec<Predicate>, String> {
    const KEYS: [&str; 6] = ["p_n", "p_e", "n", "N", "k", "seed"];
    const OPS: [(&str, FilterOp); 5] = [
        ("<=", FilterOp::Le),
        (">=", FilterOp::Ge),
        ("==", FilterOp::Eq),
        ("<", FilterOp::Lt),
        (">", FilterOp::Gt),
    ];
    let mut predicates = Vec::new();
    for part in expr.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (op_str, op) = OPS
            .iter()
            .find(|(s, _)| part.contains(s))
            .ok_or_else(|| format!("no operator in `{part}`"))?;
        let (key, value) = part.split_once(op_str).expect("operator present");
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(format!(
                "unknown filter key `{key}`; expected one of {KEYS:?}"
            ));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad value in `{part}`"))?;
        predicates.push(Predicate {
            key: key.to_string(),
            op: *op,
            value,
        });
    }
    Ok(predicates)
}

fn load_config(path: Option<&Path>) -> Result<Config, String> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(CONFIG_ENV) {
            Some(p) => PathBuf::from(p),
            None => return Ok(Config::default()),
        },
    };
    let text =
        fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn build_registry(cfg: &Config) -> Result<Registry, String> {
    let mut registry = Registry::standard();
    if let Some(rc) = &cfg.registry {
        if !rc.extra.is_empty() {
            let entries: Vec<(String, String, serde_json::Value)> = rc
                .extra
                .iter()
                .map(|e| {
                    let params = serde_json::to_value(&e.params)
                        .map_err(|err| format!("archetype params: {err}"))?;
                    Ok((e.kind.clone(), e.name.clone(), params))
                })
                .collect::<Result<_, String>>()?;
            registry
                .extend_from_config(&entries)
                .map_err(|e| e.to_string())?;
        }
        if !rc.subset.is_empty() {
            registry = registry.subset(&rc.subset).map_err(|e| e.to_string())?;
        }
    }
    Ok(registry)
}

fn with_worker_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(f))
}

fn cmd_run(
    config: Option<PathBuf>,
    seeds: Option<String>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> i32 {
    let cfg = match load_config(config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let span = seeds.or_else(|| cfg.seeds.clone());
    let (seed_start, seed_end) = match span.as_deref().map(parse_seed_span) {
        Some(Ok(span)) => span,
        Some(Err(e)) => return fail(EXIT_CONFIG, e),
        None => return fail(EXIT_CONFIG, "no seed span; pass --seeds A..B"),
    };
    let Some(out_dir) = out.or_else(|| cfg.out.clone()) else {
        return fail(EXIT_CONFIG, "no output directory; pass --out DIR");
    };
    let registry = match build_registry(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let batch = BatchConfig {
        master_seed: cfg.master_seed,
        seed_start,
        seed_end,
        ranges: cfg.ranges.unwrap_or_default(),
        turn_cap: cfg.turn_cap.unwrap_or(DEFAULT_TURN_CAP),
        format: cfg.format.unwrap_or(OutputFormat::Csv),
        resume: true,
    };
    if let Err(e) = batch.ranges.validate() {
        return fail(EXIT_CONFIG, e);
    }
    let workers = workers.or(cfg.workers).unwrap_or(0);
    let outcome = with_worker_pool(workers, || run_batch(&batch, &registry, &out_dir));
    match outcome {
        Ok(Ok(done)) => {
            println!(
                "completed {} trials into {}",
                done.len(),
                out_dir.display()
            );
            EXIT_OK
        }
        Ok(Err(e)) => fail(EXIT_RUNTIME, e),
        Err(e) => fail(EXIT_RUNTIME, e),
    }
}

fn provenance_header(input: &Path) -> String {
    match load_manifest(input) {
        Ok(Some(m)) => format!(
            "# registry_digest={}\n# tool_version={}\n",
            m.registry_digest, m.version
        ),
        _ => String::new(),
    }
}

fn selected_records(
    input: &Path,
    filter: Option<&str>,
) -> Result<Vec<TrialRecord>, (i32, String)> {
    let predicates = match filter {
        Some(expr) => parse_filter(expr).map_err(|e| (EXIT_CONFIG, e))?,
        None => Vec::new(),
    };
    let records = load_records(input).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    Ok(records
        .into_iter()
        .filter(|rec| predicates.iter().all(|p| p.holds(&rec.params, rec.seed)))
        .collect())
}

fn parse_protocol(s: &str) -> Result<Protocol, (i32, String)> {
    Protocol::parse(s).ok_or_else(|| {
        (
            EXIT_CONFIG,
            format!("unknown tournament type `{s}`; expected standard, noisy, probend or noisy_probend"),
        )
    })
}

fn ranking_csv(summary: &RankingSummary, header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("name,median_normalized_rank,tournaments\n");
    for (name, r, count) in &summary.entries {
        out.push_str(&format!("{},{},{}\n", name, r, count));
    }
    out
}

fn cmd_rank(
    input: PathBuf,
    tournament_type: String,
    filter: Option<String>,
    top: Option<usize>,
    csv: Option<PathBuf>,
) -> i32 {
    let protocol = match parse_protocol(&tournament_type) {
        Ok(p) => p,
        Err((code, e)) => return fail(code, e),
    };
    let records = match selected_records(&input, filter.as_deref()) {
        Ok(r) => r,
        Err((code, e)) => return fail(code, e),
    };
    let observations: Vec<(&str, f64)> = records
        .iter()
        .flat_map(|rec| {
            rec.results
                .get(protocol)
                .iter()
                .map(|row| (row.name.as_str(), row.normalized_rank))
        })
        .collect();
    let mut summary = match median_rank_table(observations) {
        Ok(s) => s,
        Err(_) => return fail(EXIT_INSUFFICIENT, "no tournaments matched; need at least 1"),
    };
    if let Some(top) = top {
        summary.entries.truncate(top);
    }
    println!("{:>4}  {:<28} {:>8} {:>8}", "#", "name", "r_median", "count");
    for (i, (name, r, count)) in summary.entries.iter().enumerate() {
        println!("{:>4}  {:<28} {:>8.4} {:>8}", i + 1, name, r, count);
    }
    if let Some(path) = csv {
        let text = ranking_csv(&summary, &provenance_header(&input));
        if let Err(e) = fs::write(&path, text) {
            return fail(EXIT_RUNTIME, e);
        }
    }
    EXIT_OK
}

fn correlation_exports(matrix: &FeatureMatrix, out_dir: &Path, header: &str) -> Result<(), String> {
    let cols = matrix.complete_columns(false);
    let targets = matrix.targets();
    let table = stats::correlation_table(&cols, &targets);
    let mut text = String::from(header);
    text.push_str("feature,");
    text.push_str(&table.targets.join(","));
    text.push('\n');
    for (name, coeffs) in &table.rows {
        text.push_str(name);
        for c in coeffs {
            text.push(',');
            if let Some(c) = c {
                text.push_str(&c.to_string());
            }
        }
        text.push('\n');
    }
    fs::write(out_dir.join("correlations.csv"), text).map_err(|e| e.to_string())?;

    let full = stats::correlation_matrix(&cols);
    let mut text = String::from(header);
    text.push_str("feature,");
    text.push_str(&full.features.join(","));
    text.push('\n');
    for (i, name) in full.features.iter().enumerate() {
        text.push_str(name);
        for v in &full.values[i] {
            text.push(',');
            if let Some(v) = v {
                text.push_str(&v.to_string());
            }
        }
        text.push('\n');
    }
    fs::write(out_dir.join("correlation_matrix.csv"), text).map_err(|e| e.to_string())
}

/// Cluster labels for the requested approach; also returns chosen_k for the
/// k-means approach.
fn approach_labels(
    matrix: &FeatureMatrix,
    approach: u8,
) -> Result<(Vec<usize>, Option<usize>), (i32, String)> {
    match approach {
        1 | 2 | 3 => {
            let theta = cluster::THRESHOLDS[approach as usize - 1];
            let rs: Vec<f64> = matrix.rows.iter().map(|r| r.r).collect();
            Ok((
                cluster::threshold_labels(&rs, theta)
                    .into_iter()
                    .map(usize::from)
                    .collect(),
                None,
            ))
        }
        4 => {
            let points: Vec<[f64; 2]> = matrix
                .rows
                .iter()
                .map(|r| [r.r, r.median_score])
                .collect();
            let (labels, k) = cluster::kmeans_silhouette(&points, 2..=8, 0)
                .map_err(|e| (EXIT_INSUFFICIENT, format!("{e}; need at least 8 distinct (r, median_score) points")))?;
            Ok((labels, Some(k)))
        }
        other => Err((EXIT_CONFIG, format!("unknown approach {other}; expected 1-4"))),
    }
}

fn importance_export(
    matrix: &FeatureMatrix,
    approach: u8,
    out_dir: &Path,
    header: &str,
) -> Result<(), (i32, String)> {
    let (labels, chosen_k) = approach_labels(matrix, approach)?;
    let cols = matrix.complete_columns(true);
    if cols.is_empty() || matrix.rows.len() < 10 {
        return Err((
            EXIT_INSUFFICIENT,
            format!("need at least 10 rows, got {}", matrix.rows.len()),
        ));
    }
    let x: Vec<Vec<f64>> = (0..matrix.rows.len())
        .map(|i| cols.iter().map(|(_, v)| v[i]).collect())
        .collect();
    let (train, test) = forest::train_test_split(x.len(), 0.7, 0);
    let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
    let yt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let xh: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
    let yh: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    let model = forest::forest_fit(&xt, &yt, &forest::ForestConfig::default()).map_err(|e| {
        (
            EXIT_INSUFFICIENT,
            format!("{e}; need both performance classes in the training split"),
        )
    })?;
    let holdout = forest::forest_score(&model, &xh, &yh);

    let mut text = String::from(header);
    text.push_str(&format!("# approach={approach}\n"));
    if let Some(k) = chosen_k {
        text.push_str(&format!("# chosen_k={k}\n"));
    }
    // `score` is mean accuracy, on the holdout and on out-of-bag votes.
    text.push_str(&format!("# score={holdout}\n# oob_score={}\n", model.oob_score));
    text.push_str("feature,importance\n");
    for (idx, imp) in forest::forest_importance(&model) {
        text.push_str(&format!("{},{}\n", cols[idx].0, imp));
    }
    fs::write(out_dir.join(format!("importance_approach{approach}.csv")), text)
        .map_err(|e| (EXIT_RUNTIME, e.to_string()))
}

fn winners_export(
    records: &[TrialRecord],
    protocol: Protocol,
    registry: &Registry,
    out_dir: &Path,
    header: &str,
) -> Result<(), (i32, String)> {
    let winners = analysis::winner_stats(records, protocol, registry, &PayoffMatrix::standard());
    if winners.is_empty() {
        return Err((EXIT_INSUFFICIENT, "no winner rows; need at least 1 trial".into()));
    }
    let mut text = String::from(header);
    text.push_str("seed,name,C_r,C_r/C_mean,C_r/C_median,CC_to_C,CD_to_C,DC_to_C,DD_to_C\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for w in winners {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            w.seed,
            w.name,
            w.c_r,
            opt(w.c_r_over_mean),
            opt(w.c_r_over_median),
            opt(w.cond_coop[0]),
            opt(w.cond_coop[1]),
            opt(w.cond_coop[2]),
            opt(w.cond_coop[3]),
        ));
    }
    fs::write(out_dir.join("winners.csv"), text).map_err(|e| (EXIT_RUNTIME, e.to_string()))
}

fn cmd_analyze(
    input: PathBuf,
    tournament_type: String,
    approach: u8,
    what: String,
    out: Option<PathBuf>,
) -> i32 {
    let protocol = match parse_protocol(&tournament_type) {
        Ok(p) => p,
        Err((code, e)) => return fail(code, e),
    };
    let records = match selected_records(&input, None) {
        Ok(r) => r,
        Err((code, e)) => return fail(code, e),
    };
    let out_dir = out.unwrap_or_else(|| input.join("analysis"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        return fail(EXIT_RUNTIME, e);
    }
    let header = provenance_header(&input);
    let registry = Registry::standard();
    let mut matrix =
        analysis::build_feature_matrix(&records, protocol, &registry, &PayoffMatrix::standard());
    matrix.impute();
    let outcome = match what.as_str() {
        "correlations" => {
            if matrix.rows.len() < 3 {
                Err((
                    EXIT_INSUFFICIENT,
                    format!("need at least 3 rows, got {}", matrix.rows.len()),
                ))
            } else {
                correlation_exports(&matrix, &out_dir, &header).map_err(|e| (EXIT_RUNTIME, e))
            }
        }
        "importance" => importance_export(&matrix, approach, &out_dir, &header),
        "winners" => winners_export(&records, protocol, &registry, &out_dir, &header),
        other => Err((
            EXIT_CONFIG,
            format!("unknown export `{other}`; expected correlations, importance or winners"),
        )),
    };
    match outcome {
        Ok(()) => {
            println!("wrote {}", out_dir.display());
            EXIT_OK
        }
        Err((code, e)) => fail(code, e),
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            workers,
        } => cmd_run(config, seeds, out, workers),
        Command::Rank {
            input,
            tournament_type,
            filter,
            top,
            csv,
        } => cmd_rank(input, tournament_type, filter, top, csv),
        Command::Analyze {
            input,
            tournament_type,
            approach,
            what,
            out,
        } => cmd_analyze(input, tournament_type, approach, what, out),
        Command::Registry => {
            println!("{}", Registry::standard().manifest_json());
            EXIT_OK
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_span_parses() {
        assert_eq!(parse_seed_span("0..9").unwrap(), (0, 9));
        assert_eq!(parse_seed_span(" 3 .. 3 ").unwrap(), (3, 3));
        assert!(parse_seed_span("9..0").is_err());
        assert!(parse_seed_span("7").is_err());
    }

    #[test]
    fn filter_parses_and_applies() {
        let preds = parse_filter("p_e<0.1, k>=10").unwrap();
        assert_eq!(preds.len(), 2);
        let params = SampledParams {
            n_strategies: 5,
            k: 10,
            n: 50,
            p_n: 0.2,
            p_e: 0.05,
        };
        assert!(preds.iter().all(|p| p.holds(&params, 0)));
        let excl = SampledParams { p_e: 0.3, ..params };
        assert!(!preds.iter().all(|p| p.holds(&excl, 0)));
    }

    #[test]
    fn filter_rejects_unknown_key() {
        assert!(parse_filter("bogus<1").unwrap_err().contains("bogus"));
        assert!(parse_filter("p_n~1").is_err());
    }

    #[test]
    fn filter_equality() {
        let preds = parse_filter("N==5").unwrap();
        let params = SampledParams {
            n_strategies: 5,
            k: 1,
            n: 1,
            p_n: 0.0,
            p_e: 0.5,
        };
        assert!(preds[0].holds(&params, 0));
    }
}
