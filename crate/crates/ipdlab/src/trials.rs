//! Trial collection: each seed samples tournament parameters and a roster,
//! runs the four tournament types on that shared roster, and persists the
//! result summaries.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::DEFAULT_TURN_CAP;
use crate::seeding::stream;
use crate::strategies::Registry;
use crate::tournament::{
    run_tournament, Protocol, ResultRow, TournamentConfig, TournamentError, ALL_PROTOCOLS,
    RESULT_COLUMNS,
};

const PARAMS_STREAM_TAG: u64 = 0x7061_7261_6d73; // "params"

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("invalid range for {0}: min {1} > max {2}")]
    BadRange(&'static str, f64, f64),
    #[error("registry holds {have} strategies but N_min is {need}")]
    RegistryTooSmall { have: usize, need: usize },
    #[error("p_e range has max 0; probabilistic-ending matches cannot terminate")]
    ZeroEndingProbability,
    #[error("seed {seed}, {protocol}: {source}")]
    Tournament {
        seed: u64,
        protocol: &'static str,
        source: TournamentError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Sampling bounds for trial parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRanges {
    pub n_strategies: (usize, usize),
    pub repetitions: (u32, u32),
    pub turns: (u32, u32),
    pub p_n: (f64, f64),
    pub p_e: (f64, f64),
}

impl Default for ParameterRanges {
    fn default() -> Self {
        ParameterRanges {
            n_strategies: (3, 195),
            repetitions: (10, 100),
            turns: (1, 200),
            p_n: (0.0, 1.0),
            p_e: (0.0, 1.0),
        }
    }
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<(), TrialError> {
        let check = |name, lo: f64, hi: f64| {
            if lo > hi {
                Err(TrialError::BadRange(name, lo, hi))
            } else {
                Ok(())
            }
        };
        check(
            "N",
            self.n_strategies.0 as f64,
            self.n_strategies.1 as f64,
        )?;
        check("k", self.repetitions.0.into(), self.repetitions.1.into())?;
        check("n", self.turns.0.into(), self.turns.1.into())?;
        check("p_n", self.p_n.0, self.p_n.1)?;
        check("p_e", self.p_e.0, self.p_e.1)?;
        if self.n_strategies.0 < 3 {
            return Err(TrialError::BadRange("N", self.n_strategies.0 as f64, 3.0));
        }
        if self.p_e.1 <= 0.0 {
            return Err(TrialError::ZeroEndingProbability);
        }
        Ok(())
    }
}

/// The values one trial sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledParams {
    pub n_strategies: usize,
    pub k: u32,
    pub n: u32,
    pub p_n: f64,
    pub p_e: f64,
}

/// Result sets of the four tournaments run on a shared roster.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ProtocolResults {
    pub standard: Vec<ResultRow>,
    pub noisy: Vec<ResultRow>,
    pub probend: Vec<ResultRow>,
    pub noisy_probend: Vec<ResultRow>,
}

impl ProtocolResults {
    pub fn get(&self, protocol: Protocol) -> &[ResultRow] {
        match protocol {
            Protocol::Standard => &self.standard,
            Protocol::Noisy => &self.noisy,
            Protocol::Probend => &self.probend,
            Protocol::NoisyProbend => &self.noisy_probend,
        }
    }

    fn get_mut(&mut self, protocol: Protocol) -> &mut Vec<ResultRow> {
        match protocol {
            Protocol::Standard => &mut self.standard,
            Protocol::Noisy => &mut self.noisy,
            Protocol::Probend => &mut self.probend,
            Protocol::NoisyProbend => &mut self.noisy_probend,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Protocol, &[ResultRow])> {
        ALL_PROTOCOLS.iter().map(move |&p| (p, self.get(p)))
    }
}

/// One completed trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub master_seed: u64,
    pub params: SampledParams,
    pub roster: Vec<String>,
    pub results: ProtocolResults,
    pub turn_cap: u32,
    pub cap_hits: u64,
    pub engine_version: String,
    pub registry_digest: String,
}

/// Sample trial parameters and a roster of N distinct strategies, fully
/// determined by (master seed, trial seed).
pub fn sample_trial_params(
    master_seed: u64,
    trial_seed: u64,
    ranges: &ParameterRanges,
    registry: &Registry,
) -> Result<(SampledParams, Vec<String>), TrialError> {
    ranges.validate()?;
    if registry.len() < ranges.n_strategies.0 {
        return Err(TrialError::RegistryTooSmall {
            have: registry.len(),
            need: ranges.n_strategies.0,
        });
    }
    let mut rng = stream(&[master_seed, trial_seed, PARAMS_STREAM_TAG]);
    let n_max = ranges.n_strategies.1.min(registry.len());
    let n_strategies = rng.gen_range(ranges.n_strategies.0..=n_max);
    let k = rng.gen_range(ranges.repetitions.0..=ranges.repetitions.1);
    let n = rng.gen_range(ranges.turns.0..=ranges.turns.1);
    let uniform = |rng: &mut rand_chacha::ChaCha12Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..hi)
        }
    };
    let p_n = uniform(&mut rng, ranges.p_n);
    // p_e = 0 never terminates; draws of exactly 0 are resampled.
    let p_e = loop {
        let v = uniform(&mut rng, ranges.p_e);
        if v > 0.0 {
            break v;
        }
    };

    // Partial Fisher-Yates over registry indices.
    let mut indices: Vec<usize> = (0..registry.len()).collect();
    for i in 0..n_strategies {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    let roster = indices[..n_strategies]
        .iter()
        .map(|&i| registry.specs()[i].name.clone())
        .collect();

    Ok((
        SampledParams {
            n_strategies,
            k,
            n,
            p_n,
            p_e,
        },
        roster,
    ))
}

/// Run the four tournaments of one trial on the shared roster, each with an
/// independent deterministic rng substream.
pub fn run_trial(
    master_seed: u64,
    trial_seed: u64,
    ranges: &ParameterRanges,
    registry: &Registry,
    turn_cap: u32,
) -> Result<TrialRecord, TrialError> {
    let (params, roster) = sample_trial_params(master_seed, trial_seed, ranges, registry)?;
    let mut results = ProtocolResults::default();
    let mut cap_hits = 0;
    for protocol in ALL_PROTOCOLS {
        let cfg = TournamentConfig {
            roster: roster.clone(),
            protocol,
            n: Some(params.n),
            p_n: params.p_n,
            p_e: Some(params.p_e),
            k: params.k,
            turn_cap,
            payoffs: crate::engine::PayoffMatrix::standard(),
            seed: (master_seed, trial_seed),
        };
        let (rows, stats) = run_tournament(&cfg, registry).map_err(|source| {
            TrialError::Tournament {
                seed: trial_seed,
                protocol: protocol.name(),
                source,
            }
        })?;
        cap_hits += stats.cap_hits;
        *results.get_mut(protocol) = rows;
    }
    Ok(TrialRecord {
        seed: trial_seed,
        master_seed,
        params,
        roster,
        results,
        turn_cap,
        cap_hits,
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        registry_digest: registry.digest(),
    })
}

/// Output serialization of trial files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

pub fn trial_to_csv(record: &TrialRecord) -> String {
    let mut out = String::new();
    out.push_str("# ipdlab.trial v1\n");
    out.push_str(&format!("# seed={}\n", record.seed));
    out.push_str(&format!("# master_seed={}\n", record.master_seed));
    out.push_str(&format!("# N={}\n", record.params.n_strategies));
    out.push_str(&format!("# k={}\n", record.params.k));
    out.push_str(&format!("# n={}\n", record.params.n));
    out.push_str(&format!("# p_n={}\n", record.params.p_n));
    out.push_str(&format!("# p_e={}\n", record.params.p_e));
    out.push_str(&format!("# turn_cap={}\n", record.turn_cap));
    out.push_str(&format!("# cap_hits={}\n", record.cap_hits));
    out.push_str(&format!("# engine_version={}\n", record.engine_version));
    out.push_str(&format!("# registry_digest={}\n", record.registry_digest));
    out.push_str(&format!("# roster={}\n", record.roster.join("|")));
    out.push_str("protocol,");
    out.push_str(&RESULT_COLUMNS.join(","));
    out.push('\n');
    for (protocol, rows) in record.results.iter() {
        for row in rows {
            out.push_str(protocol.name());
            out.push(',');
            out.push_str(&row.to_csv_fields());
            out.push('\n');
        }
    }
    out
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' => quoted = true,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn trial_from_csv(path_label: &str, text: &str) -> Result<TrialRecord, TrialError> {
    let err = |line: usize, reason: String| TrialError::Parse {
        path: path_label.to_string(),
        line,
        reason,
    };
    let mut header: std::collections::HashMap<String, String> = Default::default();
    let mut roster = Vec::new();
    let mut results = ProtocolResults::default();
    let mut saw_columns = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(rest) = raw.strip_prefix("# ") {
            if let Some((key, value)) = rest.split_once('=') {
                if key == "roster" {
                    roster = value.split('|').map(str::to_string).collect();
                } else {
                    header.insert(key.to_string(), value.to_string());
                }
            }
            continue;
        }
        if raw.starts_with("protocol,") {
            saw_columns = true;
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        if !saw_columns {
            return Err(err(lineno, "data row before column header".into()));
        }
        let fields = split_csv_line(raw);
        if fields.len() != 16 {
            return Err(err(lineno, format!("expected 16 fields, got {}", fields.len())));
        }
        let protocol = Protocol::parse(&fields[0])
            .ok_or_else(|| err(lineno, format!("unknown protocol `{}`", fields[0])))?;
        let f = |i: usize| -> Result<f64, TrialError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(lineno, format!("bad number in column {}", RESULT_COLUMNS[i - 1])))
        };
        let opt = |i: usize| -> Result<Option<f64>, TrialError> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let row = ResultRow {
            name: fields[1].clone(),
            rank: fields[2]
                .parse()
                .map_err(|_| err(lineno, "bad rank".into()))?,
            normalized_rank: f(3)?,
            median_score: f(4)?,
            cooperation_rating: f(5)?,
            win: f(6)?,
            initial_c: f(7)?,
            state_rates: [f(8)?, f(9)?, f(10)?, f(11)?],
            cond_coop: [opt(12)?, opt(13)?, opt(14)?, opt(15)?],
        };
        results.get_mut(protocol).push(row);
    }
    let get = |key: &str| -> Result<&String, TrialError> {
        header
            .get(key)
            .ok_or_else(|| err(0, format!("missing header `{key}`")))
    };
    let parse_u64 = |key: &str| -> Result<u64, TrialError> {
        get(key)?
            .parse()
            .map_err(|_| err(0, format!("bad header `{key}`")))
    };
    let parse_f64 = |key: &str| -> Result<f64, TrialError> {
        get(key)?
            .parse()
            .map_err(|_| err(0, format!("bad header `{key}`")))
    };
    Ok(TrialRecord {
        seed: parse_u64("seed")?,
        master_seed: parse_u64("master_seed")?,
        params: SampledParams {
            n_strategies: parse_u64("N")? as usize,
            k: parse_u64("k")? as u32,
            n: parse_u64("n")? as u32,
            p_n: parse_f64("p_n")?,
            p_e: parse_f64("p_e")?,
        },
        roster,
        results,
        turn_cap: parse_u64("turn_cap")? as u32,
        cap_hits: parse_u64("cap_hits")?,
        engine_version: get("engine_version")?.clone(),
        registry_digest: get("registry_digest")?.clone(),
    })
}

/// Write one record to `<dir>/trials/<seed>.<ext>`.
pub fn persist_record(
    record: &TrialRecord,
    dir: &Path,
    format: OutputFormat,
) -> Result<PathBuf, TrialError> {
    let trials = dir.join("trials");
    fs::create_dir_all(&trials)?;
    let path = trials.join(format!("{}.{}", record.seed, format.extension()));
    let mut file = fs::File::create(&path)?;
    match format {
        OutputFormat::Csv => file.write_all(trial_to_csv(record).as_bytes())?,
        OutputFormat::Jsonl => {
            let line = serde_json::to_string(record).expect("record serializes");
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")?;
        }
    }
    Ok(path)
}

/// Load every trial file under `<dir>/trials/`, sorted by seed.
pub fn load_records(dir: &Path) -> Result<Vec<TrialRecord>, TrialError> {
    let trials = dir.join("trials");
    let mut paths: Vec<PathBuf> = fs::read_dir(&trials)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("csv") | Some("jsonl")
            )
        })
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for path in paths {
        let label = path.display().to_string();
        let text = fs::read_to_string(&path)?;
        if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: TrialRecord =
                    serde_json::from_str(line).map_err(|e| TrialError::Parse {
                        path: label.clone(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                records.push(record);
            }
        } else {
            records.push(trial_from_csv(&label, &text)?);
        }
    }
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

/// Batch bookkeeping persisted as `manifest.json` next to `trials/`.
/// Timestamps are unix seconds and are the only non-deterministic fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    pub master_seed: u64,
    pub ranges: ParameterRanges,
    pub turn_cap: u32,
    pub output_format: OutputFormat,
    pub registry_digest: String,
    pub completed_seeds: Vec<u64>,
    pub created_unix: u64,
    pub updated_unix: u64,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn load_manifest(dir: &Path) -> Result<Option<RunManifest>, TrialError> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| TrialError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            reason: e.to_string(),
        })
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), TrialError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Batch execution plan.
#[derive(Clone, Debug)]
pub struct BatchConfig {
    pub master_seed: u64,
    pub seed_start: u64,
    pub seed_end: u64,
    pub ranges: ParameterRanges,
    pub turn_cap: u32,
    pub format: OutputFormat,
    /// Skip seeds whose output file already exists.
    pub resume: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            master_seed: 0,
            seed_start: 0,
            seed_end: 10,
            ranges: ParameterRanges::default(),
            turn_cap: DEFAULT_TURN_CAP,
            format: OutputFormat::Csv,
            resume: false,
        }
    }
}

/// Run a seed span and persist each trial. Trials are independent; output
/// bytes do not depend on worker count or completion order.
pub fn run_batch(
    cfg: &BatchConfig,
    registry: &Registry,
    out_dir: &Path,
) -> Result<Vec<u64>, TrialError> {
    cfg.ranges.validate()?;
    fs::create_dir_all(out_dir.join("trials"))?;
    let mut manifest = match load_manifest(out_dir)? {
        Some(m) if cfg.resume => m,
        _ => RunManifest {
            format: "ipdlab.run".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.master_seed,
            ranges: cfg.ranges,
            turn_cap: cfg.turn_cap,
            output_format: cfg.format,
            registry_digest: registry.digest(),
            completed_seeds: Vec::new(),
            created_unix: now_unix(),
            updated_unix: now_unix(),
        },
    };
    let seeds: Vec<u64> = (cfg.seed_start..=cfg.seed_end)
        .filter(|seed| {
            !cfg.resume
                || !out_dir
                    .join("trials")
                    .join(format!("{seed}.{}", cfg.format.extension()))
                    .exists()
        })
        .collect();
    let results: Vec<Result<u64, TrialError>> = seeds
        .par_iter()
        .map(|&seed| {
            let record = run_trial(cfg.master_seed, seed, &cfg.ranges, registry, cfg.turn_cap)?;
            persist_record(&record, out_dir, cfg.format)?;
            Ok(seed)
        })
        .collect();
    let done: Vec<u64> = results.into_iter().collect::<Result<_, _>>()?;
    manifest.completed_seeds.extend(&done);
    manifest.completed_seeds.sort_unstable();
    manifest.completed_seeds.dedup();
    manifest.updated_unix = now_unix();
    write_manifest(out_dir, &manifest)?;
    Ok(done)
}
