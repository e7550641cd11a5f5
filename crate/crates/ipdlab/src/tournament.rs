//! Round-robin tournaments: N strategies, all pairings without self-play,
//! k repetitions, summarised into one result row per strategy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, EngineError, MatchParams, MatchRecord, PayoffMatrix, DEFAULT_TURN_CAP};
use crate::seeding::{match_streams, MatchKey};
use crate::strategies::{Registry, StrategyError, StrategySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Standard,
    Noisy,
    Probend,
    NoisyProbend,
}

pub const ALL_PROTOCOLS: [Protocol; 4] = [
    Protocol::Standard,
    Protocol::Noisy,
    Protocol::Probend,
    Protocol::NoisyProbend,
];

impl Protocol {
    pub fn tag(self) -> u64 {
        match self {
            Protocol::Standard => 0,
            Protocol::Noisy => 1,
            Protocol::Probend => 2,
            Protocol::NoisyProbend => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Standard => "standard",
            Protocol::Noisy => "noisy",
            Protocol::Probend => "probend",
            Protocol::NoisyProbend => "noisy_probend",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(Protocol::Standard),
            "noisy" => Some(Protocol::Noisy),
            "probend" => Some(Protocol::Probend),
            "noisy_probend" => Some(Protocol::NoisyProbend),
            _ => None,
        }
    }

    pub fn has_noise(self) -> bool {
        matches!(self, Protocol::Noisy | Protocol::NoisyProbend)
    }

    pub fn probabilistic_ending(self) -> bool {
        matches!(self, Protocol::Probend | Protocol::NoisyProbend)
    }
}

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("tournament needs at least 3 strategies, got {0}")]
    TooFewStrategies(usize),
    #[error("tournament needs at least 1 repetition")]
    NoRepetitions,
    #[error("protocol {0} requires parameter {1}")]
    MissingParam(&'static str, &'static str),
}

#[derive(Clone, Debug)]
pub struct TournamentConfig {
    pub roster: Vec<String>,
    pub protocol: Protocol,
    pub n: Option<u32>,
    pub p_n: f64,
    pub p_e: Option<f64>,
    pub k: u32,
    pub turn_cap: u32,
    pub payoffs: PayoffMatrix,
    /// Seed path prefix: (master seed, trial seed).
    pub seed: (u64, u64),
}

impl TournamentConfig {
    pub fn new(roster: Vec<String>, protocol: Protocol) -> Self {
        TournamentConfig {
            roster,
            protocol,
            n: None,
            p_n: 0.0,
            p_e: None,
            k: 1,
            turn_cap: DEFAULT_TURN_CAP,
            payoffs: PayoffMatrix::standard(),
            seed: (0, 0),
        }
    }

    fn match_params(&self) -> Result<MatchParams, TournamentError> {
        let params = if self.protocol.probabilistic_ending() {
            let p_e = self
                .p_e
                .ok_or(TournamentError::MissingParam(self.protocol.name(), "p_e"))?;
            MatchParams::probabilistic_ending(p_e, self.effective_p_n())?
        } else {
            let n = self
                .n
                .ok_or(TournamentError::MissingParam(self.protocol.name(), "n"))?;
            MatchParams::fixed(n, self.effective_p_n())?
        };
        Ok(params.with_turn_cap(self.turn_cap))
    }

    fn effective_p_n(&self) -> f64 {
        if self.protocol.has_noise() {
            self.p_n
        } else {
            0.0
        }
    }
}

/// One row of a tournament result summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub name: String,
    pub rank: u32,
    pub normalized_rank: f64,
    pub median_score: f64,
    pub cooperation_rating: f64,
    /// Median over repetitions of the match-win count.
    pub win: f64,
    pub initial_c: f64,
    /// Occupancy fractions of the (own, opp) realized pairs CC, CD, DC, DD.
    pub state_rates: [f64; 4],
    /// P(cooperate at t+1 | state at t), absent when the state never occurs.
    pub cond_coop: [Option<f64>; 4],
}

/// Bit-exact serialization column order for result rows.
pub const RESULT_COLUMNS: [&str; 15] = [
    "name",
    "rank",
    "normalized_rank",
    "median_score",
    "cooperation_rating",
    "win",
    "initial_C",
    "rate_CC",
    "rate_CD",
    "rate_DC",
    "rate_DD",
    "CC_to_C",
    "CD_to_C",
    "DC_to_C",
    "DD_to_C",
];

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ResultRow {
    pub fn to_csv_fields(&self) -> String {
        let cond = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.name),
            self.rank,
            self.normalized_rank,
            self.median_score,
            self.cooperation_rating,
            self.win,
            self.initial_c,
            self.state_rates[0],
            self.state_rates[1],
            self.state_rates[2],
            self.state_rates[3],
            cond(self.cond_coop[0]),
            cond(self.cond_coop[1]),
            cond(self.cond_coop[2]),
            cond(self.cond_coop[3]),
        )
    }
}

/// `r = R / (N - 1)`: 0 is the winner, 1 is last place.
pub fn normalized_rank(rank: u32, size: usize) -> Result<f64, TournamentError> {
    if size < 2 {
        return Err(TournamentError::TooFewStrategies(size));
    }
    Ok(f64::from(rank) / (size as f64 - 1.0))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Behavior {
    turns: u64,
    coops: u64,
    matches: u64,
    opening_coops: u64,
    state_counts: [u64; 4],
    /// Pairs (state at t, exists t+1): total and cooperating follow-ups.
    cond_total: [u64; 4],
    cond_coop: [u64; 4],
}

impl Behavior {
    fn absorb_match(&mut self, own: &[crate::engine::Action], opp: &[crate::engine::Action]) {
        self.matches += 1;
        self.turns += own.len() as u64;
        self.coops += own.iter().filter(|a| a.is_c()).count() as u64;
        if own.first().map(|a| a.is_c()).unwrap_or(false) {
            self.opening_coops += 1;
        }
        for t in 0..own.len() {
            let s = crate::strategies::state_index(own[t], opp[t]);
            self.state_counts[s] += 1;
            if t + 1 < own.len() {
                self.cond_total[s] += 1;
                if own[t + 1].is_c() {
                    self.cond_coop[s] += 1;
                }
            }
        }
    }
}

struct MatchOutcome {
    rep: usize,
    a: usize,
    b: usize,
    record: MatchRecord,
}

/// Everything a tournament produces besides the rows themselves.
#[derive(Clone, Copy, Debug, Default)]
pub struct TournamentStats {
    pub cap_hits: u64,
}

/// Run the round robin: all N(N-1)/2 pairings, k repetitions, rows sorted by
/// rank. Ranking key: descending median score, ties broken by higher win
/// count, then name.
pub fn run_tournament(
    cfg: &TournamentConfig,
    registry: &Registry,
) -> Result<(Vec<ResultRow>, TournamentStats), TournamentError> {
    let n_players = cfg.roster.len();
    if n_players < 3 {
        return Err(TournamentError::TooFewStrategies(n_players));
    }
    if cfg.k < 1 {
        return Err(TournamentError::NoRepetitions);
    }
    let specs: Vec<&StrategySpec> = cfg
        .roster
        .iter()
        .map(|name| registry.get(name))
        .collect::<Result<_, _>>()?;
    let params = cfg.match_params()?;

    let mut jobs = Vec::new();
    for rep in 0..cfg.k as usize {
        for a in 0..n_players {
            for b in (a + 1)..n_players {
                jobs.push((rep, a, b));
            }
        }
    }

    let outcomes: Vec<MatchOutcome> = jobs
        .par_iter()
        .map(|&(rep, a, b)| {
            let key = MatchKey {
                master_seed: cfg.seed.0,
                trial_seed: cfg.seed.1,
                protocol_tag: cfg.protocol.tag(),
                repetition: rep as u64,
                pair_a: a as u64,
                pair_b: b as u64,
            };
            let (ra, rb, events) = match_streams(&key);
            let mut rng = engine::MatchRng {
                player_a: ra,
                player_b: rb,
                events,
            };
            let mut pa = specs[a].build();
            let mut pb = specs[b].build();
            let record = engine::play_match(pa.as_mut(), pb.as_mut(), &params, &cfg.payoffs, &mut rng)
                .expect("params validated");
            MatchOutcome { rep, a, b, record }
        })
        .collect();

    // Sequential reduction in job order: independent of worker count.
    let mut stats = TournamentStats::default();
    let mut per_turn_scores = vec![vec![Vec::<f64>::new(); cfg.k as usize]; n_players];
    let mut wins = vec![vec![0u32; cfg.k as usize]; n_players];
    let mut behavior = vec![Behavior::default(); n_players];
    for out in &outcomes {
        let rec = &out.record;
        stats.cap_hits += u64::from(rec.cap_hit);
        let len = rec.length() as f64;
        let (ta, tb) = (rec.total_a(), rec.total_b());
        per_turn_scores[out.a][out.rep].push(ta / len);
        per_turn_scores[out.b][out.rep].push(tb / len);
        if ta > tb {
            wins[out.a][out.rep] += 1;
        } else if tb > ta {
            wins[out.b][out.rep] += 1;
        }
        behavior[out.a].absorb_match(&rec.actions_a, &rec.actions_b);
        behavior[out.b].absorb_match(&rec.actions_b, &rec.actions_a);
    }

    let mut rows: Vec<ResultRow> = (0..n_players)
        .map(|i| {
            let rep_scores: Vec<f64> = per_turn_scores[i]
                .iter()
                .map(|ms| ms.iter().sum::<f64>() / ms.len() as f64)
                .collect();
            let rep_wins: Vec<f64> = wins[i].iter().map(|&w| f64::from(w)).collect();
            let b = &behavior[i];
            let turns = b.turns as f64;
            ResultRow {
                name: specs[i].name.clone(),
                rank: 0,
                normalized_rank: 0.0,
                median_score: median(&rep_scores),
                cooperation_rating: b.coops as f64 / turns,
                win: median(&rep_wins),
                initial_c: b.opening_coops as f64 / b.matches as f64,
                state_rates: b.state_counts.map(|c| c as f64 / turns),
                cond_coop: std::array::from_fn(|s| {
                    (b.cond_total[s] > 0).then(|| b.cond_coop[s] as f64 / b.cond_total[s] as f64)
                }),
            }
        })
        .collect();

    rows.sort_by(|x, y| {
        y.median_score
            .partial_cmp(&x.median_score)
            .expect("no NaN scores")
            .then(y.win.partial_cmp(&x.win).expect("no NaN wins"))
            .then(x.name.cmp(&y.name))
    });
    for (rank, row) in rows.iter_mut().enumerate() {
        row.rank = rank as u32;
        row.normalized_rank = normalized_rank(rank as u32, n_players)?;
    }
    Ok((rows, stats))
}

/// Median normalized rank per strategy over many tournaments.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingSummary {
    /// (name, median normalized rank, participation count), ascending by rank.
    pub entries: Vec<(String, f64, usize)>,
}

#[derive(Debug, Error)]
#[error("no tournaments matched the filter")]
pub struct EmptySelection;

/// Build the median-normalized-rank table from (strategy, r) observations,
/// typically pre-filtered by tournament parameters.
pub fn median_rank_table<'a, I>(observations: I) -> Result<RankingSummary, EmptySelection>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut by_name: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for (name, r) in observations {
        by_name.entry(name).or_default().push(r);
    }
    if by_name.is_empty() {
        return Err(EmptySelection);
    }
    let mut entries: Vec<(String, f64, usize)> = by_name
        .into_iter()
        .map(|(name, rs)| (name.to_string(), median(&rs), rs.len()))
        .collect();
    entries.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN").then(a.0.cmp(&b.0)));
    Ok(RankingSummary { entries })
}
