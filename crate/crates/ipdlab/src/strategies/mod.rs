//! Strategy interface, classifier metadata and the named registry.

mod archetype;
mod basic;
mod fsm;
mod memory_one;
mod meta;
mod registry;
mod retaliate;

pub use archetype::{load_archetype, ArchetypeKind};
pub use fsm::{FsmPlayer, FsmTable};
pub use memory_one::{state_index, MemoryOnePlayer};
pub use meta::{MetaPlayer, MetaRule};
pub use registry::Registry;
pub use retaliate::RetaliatePlayer;

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, PayoffMatrix};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("unknown strategy: {0}")]
    Unknown(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },
    #[error("meta strategy needs a non-empty team")]
    EmptyTeam,
}

/// What a match reveals to the strategies. `turns_total` is unknown for
/// probabilistic-ending matches.
#[derive(Clone, Copy, Debug)]
pub struct MatchContext {
    pub turns_total: Option<u32>,
    pub payoffs: PayoffMatrix,
    pub current_turn: usize,
}

impl MatchContext {
    pub fn fixed(turns: u32) -> Self {
        MatchContext {
            turns_total: Some(turns),
            payoffs: PayoffMatrix::standard(),
            current_turn: 0,
        }
    }

    pub fn unknown_length() -> Self {
        MatchContext {
            turns_total: None,
            payoffs: PayoffMatrix::standard(),
            current_turn: 0,
        }
    }
}

/// Declared memory horizon of a decision rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryDepth {
    Finite(u32),
    Infinite,
}

impl fmt::Display for MemoryDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryDepth::Finite(m) => write!(f, "{m}"),
            MemoryDepth::Infinite => write!(f, "inf"),
        }
    }
}

/// Classifier metadata carried by every registered strategy.
///
/// A strategy flagged non-stochastic never consumes rng; one flagged
/// `makes_use_of_length = false` plays identically whether or not the turn
/// count is revealed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyMetadata {
    pub stochastic: bool,
    pub makes_use_of_game: bool,
    pub makes_use_of_length: bool,
    pub memory_depth: MemoryDepth,
}

impl StrategyMetadata {
    pub fn deterministic(memory_depth: MemoryDepth) -> Self {
        StrategyMetadata {
            stochastic: false,
            makes_use_of_game: false,
            makes_use_of_length: false,
            memory_depth,
        }
    }
}

/// Per-match decision state. Histories are the realized (post-noise)
/// sequences; both slices always have equal length. Implementations may keep
/// internal counters but must tolerate being handed a full history in one
/// call.
pub trait Player: Send {
    fn next_action(
        &mut self,
        own: &[Action],
        opp: &[Action],
        ctx: &MatchContext,
        rng: &mut ChaCha12Rng,
    ) -> Action;
}

type Builder = Arc<dyn Fn() -> Box<dyn Player> + Send + Sync>;

/// A registered strategy: name, parameters, metadata and a factory producing
/// fresh per-match state.
#[derive(Clone)]
pub struct StrategySpec {
    pub name: String,
    /// Machine-readable parameter record for the registry manifest.
    pub params: serde_json::Value,
    pub metadata: StrategyMetadata,
    builder: Builder,
}

impl StrategySpec {
    pub fn new(
        name: impl Into<String>,
        params: serde_json::Value,
        metadata: StrategyMetadata,
        builder: impl Fn() -> Box<dyn Player> + Send + Sync + 'static,
    ) -> Self {
        StrategySpec {
            name: name.into(),
            params,
            metadata,
            builder: Arc::new(builder),
        }
    }

    /// Fresh per-match state; no memory crosses matches.
    pub fn build(&self) -> Box<dyn Player> {
        (self.builder)()
    }
}

impl fmt::Debug for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategySpec")
            .field("name", &self.name)
            .field("metadata", &self.metadata)
            .finish()
    }
}

/// Convenience for one-off queries against a fresh instance.
pub fn next_action(
    spec: &StrategySpec,
    own: &[Action],
    opp: &[Action],
    ctx: &MatchContext,
    rng: &mut ChaCha12Rng,
) -> Action {
    spec.build().next_action(own, opp, ctx, rng)
}
