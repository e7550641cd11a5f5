//! Match execution for the four game protocols: fixed length, noisy,
//! probabilistic ending, and noisy probabilistic ending.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategies::{MatchContext, Player};

/// Safety bound on probabilistic-ending matches with tiny `p_e`.
pub const DEFAULT_TURN_CAP: u32 = 10_000;

/// One of the two moves available at each turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub fn flip(self) -> Self {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }

    pub fn is_c(self) -> bool {
        self == Action::C
    }

    pub fn to_char(self) -> char {
        match self {
            Action::C => 'C',
            Action::D => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'C' | 'c' => Some(Action::C),
            'D' | 'd' => Some(Action::D),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("payoff matrix violates T > R > P > S or 2R > T + S: R={r} S={s} T={t} P={p}")]
    InvalidPayoffs { r: f64, s: f64, t: f64, p: f64 },
    #[error("{name} = {value} is not a valid probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("turn count must be at least 1")]
    InvalidTurns,
    #[error("match params need a fixed turn count, an ending probability, or both")]
    MissingTermination,
}

/// The per-turn game values `(R, S, T, P)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
}

impl PayoffMatrix {
    pub fn new(r: f64, s: f64, t: f64, p: f64) -> Result<Self, EngineError> {
        if t > r && r > p && p > s && 2.0 * r > t + s {
            Ok(PayoffMatrix { r, s, t, p })
        } else {
            Err(EngineError::InvalidPayoffs { r, s, t, p })
        }
    }

    /// The conventional values R=3, S=0, T=5, P=1.
    pub fn standard() -> Self {
        PayoffMatrix {
            r: 3.0,
            s: 0.0,
            t: 5.0,
            p: 1.0,
        }
    }
}

impl Default for PayoffMatrix {
    fn default() -> Self {
        Self::standard()
    }
}

/// Per-turn scores for the focal player and the opponent. Symmetric under
/// swapping the two players.
pub fn payoff(a_self: Action, a_other: Action, m: &PayoffMatrix) -> (f64, f64) {
    match (a_self, a_other) {
        (Action::C, Action::C) => (m.r, m.r),
        (Action::C, Action::D) => (m.s, m.t),
        (Action::D, Action::C) => (m.t, m.s),
        (Action::D, Action::D) => (m.p, m.p),
    }
}

/// How one match runs and ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    /// Fixed turn count; absent for probabilistic-ending matches.
    pub turns: Option<u32>,
    /// Probability that each emitted action is flipped.
    pub p_n: f64,
    /// Probability that the match ends after each completed turn.
    pub p_e: Option<f64>,
    pub turn_cap: u32,
}

impl MatchParams {
    pub fn fixed(turns: u32, p_n: f64) -> Result<Self, EngineError> {
        if turns < 1 {
            return Err(EngineError::InvalidTurns);
        }
        check_probability("p_n", p_n, false)?;
        Ok(MatchParams {
            turns: Some(turns),
            p_n,
            p_e: None,
            turn_cap: DEFAULT_TURN_CAP,
        })
    }

    pub fn probabilistic_ending(p_e: f64, p_n: f64) -> Result<Self, EngineError> {
        check_probability("p_e", p_e, true)?;
        check_probability("p_n", p_n, false)?;
        Ok(MatchParams {
            turns: None,
            p_n,
            p_e: Some(p_e),
            turn_cap: DEFAULT_TURN_CAP,
        })
    }

    pub fn with_turn_cap(mut self, cap: u32) -> Self {
        self.turn_cap = cap.max(1);
        self
    }

    /// Revealed turn count: known only for fixed-length matches.
    pub fn revealed_turns(&self) -> Option<u32> {
        if self.p_e.is_some() {
            None
        } else {
            self.turns
        }
    }
}

fn check_probability(name: &'static str, value: f64, exclusive_zero: bool) -> Result<(), EngineError> {
    let ok = value.is_finite() && value <= 1.0 && (value > 0.0 || (!exclusive_zero && value == 0.0));
    if ok {
        Ok(())
    } else {
        Err(EngineError::InvalidProbability { name, value })
    }
}

/// Fully realized trace of one match.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchRecord {
    /// Post-noise actions, as seen by both players.
    pub actions_a: Vec<Action>,
    pub actions_b: Vec<Action>,
    /// Pre-noise actions the strategies intended.
    pub intended_a: Vec<Action>,
    pub intended_b: Vec<Action>,
    pub payoffs_a: Vec<f64>,
    pub payoffs_b: Vec<f64>,
    /// True when a probabilistic-ending match hit the turn cap.
    pub cap_hit: bool,
}

impl MatchRecord {
    pub fn length(&self) -> usize {
        self.actions_a.len()
    }

    pub fn total_a(&self) -> f64 {
        self.payoffs_a.iter().sum()
    }

    pub fn total_b(&self) -> f64 {
        self.payoffs_b.iter().sum()
    }
}

/// Rng streams consumed by one match. Player streams are only touched by
/// stochastic strategies; noise and ending draws come from `events`.
pub struct MatchRng {
    pub player_a: ChaCha12Rng,
    pub player_b: ChaCha12Rng,
    pub events: ChaCha12Rng,
}

/// Play one match under `params`. Strategies receive fresh state per match;
/// both are queried on histories up to the previous turn only, then noise is
/// applied and the realized actions enter both players' visible histories.
pub fn play_match(
    player_a: &mut dyn Player,
    player_b: &mut dyn Player,
    params: &MatchParams,
    payoffs: &PayoffMatrix,
    rng: &mut MatchRng,
) -> Result<MatchRecord, EngineError> {
    if params.turns.is_none() && params.p_e.is_none() {
        return Err(EngineError::MissingTermination);
    }
    if let Some(n) = params.turns {
        if n < 1 {
            return Err(EngineError::InvalidTurns);
        }
    }
    let revealed = params.revealed_turns();
    let cap = match params.turns {
        Some(n) => n.min(params.turn_cap.max(n)),
        None => params.turn_cap,
    };

    let mut rec = MatchRecord {
        actions_a: Vec::new(),
        actions_b: Vec::new(),
        intended_a: Vec::new(),
        intended_b: Vec::new(),
        payoffs_a: Vec::new(),
        payoffs_b: Vec::new(),
        cap_hit: false,
    };

    for turn in 0.. {
        let ctx = MatchContext {
            turns_total: revealed,
            payoffs: *payoffs,
            current_turn: turn,
        };
        let intended_a =
            player_a.next_action(&rec.actions_a, &rec.actions_b, &ctx, &mut rng.player_a);
        let intended_b =
            player_b.next_action(&rec.actions_b, &rec.actions_a, &ctx, &mut rng.player_b);

        let realized_a = apply_noise(intended_a, params.p_n, &mut rng.events);
        let realized_b = apply_noise(intended_b, params.p_n, &mut rng.events);

        let (pay_a, pay_b) = payoff(realized_a, realized_b, payoffs);
        rec.intended_a.push(intended_a);
        rec.intended_b.push(intended_b);
        rec.actions_a.push(realized_a);
        rec.actions_b.push(realized_b);
        rec.payoffs_a.push(pay_a);
        rec.payoffs_b.push(pay_b);

        let played = turn as u32 + 1;
        if let Some(n) = params.turns {
            if played >= n {
                break;
            }
        }
        if let Some(p_e) = params.p_e {
            if rng.events.gen::<f64>() < p_e {
                break;
            }
        }
        if played >= cap {
            rec.cap_hit = params.turns.is_none();
            break;
        }
    }
    Ok(rec)
}

fn apply_noise(intended: Action, p_n: f64, rng: &mut ChaCha12Rng) -> Action {
    if p_n <= 0.0 {
        intended
    } else if rng.gen::<f64>() < p_n {
        intended.flip()
    } else {
        intended
    }
}

/// Fixed-length match of exactly `n` turns.
pub fn play_match_fixed(
    player_a: &mut dyn Player,
    player_b: &mut dyn Player,
    n: u32,
    p_n: f64,
    payoffs: &PayoffMatrix,
    rng: &mut MatchRng,
) -> Result<MatchRecord, EngineError> {
    let params = MatchParams::fixed(n, p_n)?;
    play_match(player_a, player_b, &params, payoffs, rng)
}

/// Probabilistic-ending match; players are not told the length.
pub fn play_match_probend(
    player_a: &mut dyn Player,
    player_b: &mut dyn Player,
    p_e: f64,
    p_n: f64,
    payoffs: &PayoffMatrix,
    rng: &mut MatchRng,
) -> Result<MatchRecord, EngineError> {
    let params = MatchParams::probabilistic_ending(p_e, p_n)?;
    play_match(player_a, player_b, &params, payoffs, rng)
}
