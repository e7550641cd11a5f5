//! Finite-state-machine strategies driven by a transition table loaded from
//! a tabular config.
//!
//! Table format, one transition per line, tab- or comma-separated:
//! `state, seen_action, next_state, emit_action`. Lines starting with `#` are
//! comments. The table must be total: every reachable state needs a row for
//! both C and D.

use std::collections::HashMap;

use rand_chacha::ChaCha12Rng;

use super::{MatchContext, Player, StrategyError};
use crate::engine::Action;

#[derive(Clone, Debug)]
pub struct FsmTable {
    pub initial_state: u32,
    pub initial_action: Action,
    /// (state, opponent's last action) -> (next state, action to emit).
    pub transitions: HashMap<(u32, Action), (u32, Action)>,
}

impl FsmTable {
    pub fn new(
        initial_state: u32,
        initial_action: Action,
        rows: &[(u32, Action, u32, Action)],
    ) -> Result<Self, StrategyError> {
        let mut transitions = HashMap::new();
        for &(state, seen, next, emit) in rows {
            if transitions.insert((state, seen), (next, emit)).is_some() {
                return Err(StrategyError::InvalidParam {
                    field: "transitions".into(),
                    reason: format!("duplicate row for state {state} on {}", seen.to_char()),
                });
            }
        }
        let table = FsmTable {
            initial_state,
            initial_action,
            transitions,
        };
        table.check_total()?;
        Ok(table)
    }

    fn check_total(&self) -> Result<(), StrategyError> {
        let mut states: Vec<u32> = self.transitions.keys().map(|&(s, _)| s).collect();
        states.push(self.initial_state);
        states.sort_unstable();
        states.dedup();
        for &s in &states {
            for a in [Action::C, Action::D] {
                if !self.transitions.contains_key(&(s, a)) {
                    return Err(StrategyError::InvalidParam {
                        field: "transitions".into(),
                        reason: format!("state {s} has no row for {}", a.to_char()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Parse the tabular format described in the module docs; the first
    /// non-comment line is `initial_state <sep> initial_action`.
    pub fn parse(text: &str) -> Result<Self, StrategyError> {
        let bad = |line: usize, reason: String| StrategyError::InvalidParam {
            field: format!("fsm table line {line}"),
            reason,
        };
        let mut rows = Vec::new();
        let mut header: Option<(u32, Action)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c| c == '\t' || c == ',')
                .map(str::trim)
                .collect();
            let action = |s: &str| {
                s.chars()
                    .next()
                    .and_then(Action::from_char)
                    .ok_or_else(|| bad(i + 1, format!("bad action `{s}`")))
            };
            let state = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| bad(i + 1, format!("bad state `{s}`")))
            };
            if header.is_none() {
                if fields.len() != 2 {
                    return Err(bad(i + 1, "header needs `initial_state, initial_action`".into()));
                }
                header = Some((state(fields[0])?, action(fields[1])?));
            } else {
                if fields.len() != 4 {
                    return Err(bad(i + 1, "transition needs 4 fields".into()));
                }
                rows.push((
                    state(fields[0])?,
                    action(fields[1])?,
                    state(fields[2])?,
                    action(fields[3])?,
                ));
            }
        }
        let (initial_state, initial_action) = header.ok_or_else(|| StrategyError::InvalidParam {
            field: "fsm table".into(),
            reason: "empty table".into(),
        })?;
        FsmTable::new(initial_state, initial_action, &rows)
    }
}

pub struct FsmPlayer {
    table: FsmTable,
    state: u32,
    seen: usize,
}

impl FsmPlayer {
    pub fn new(table: FsmTable) -> Self {
        let state = table.initial_state;
        FsmPlayer {
            table,
            state,
            seen: 0,
        }
    }
}

impl Player for FsmPlayer {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        if opp.is_empty() {
            return self.table.initial_action;
        }
        let mut emit = None;
        for &a in &opp[self.seen..] {
            let (next, out) = self.table.transitions[&(self.state, a)];
            self.state = next;
            emit = Some(out);
        }
        self.seen = opp.len();
        emit.expect("non-empty suffix")
    }
}

pub const FORTRESS3: &str = include_str!("../../assets/fsm/fortress3.tsv");
pub const FORTRESS4: &str = include_str!("../../assets/fsm/fortress4.tsv");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Action::{C, D};
    use crate::seeding::stream;

    #[test]
    fn fortress3_parses_and_opens_with_d() {
        let table = FsmTable::parse(FORTRESS3).unwrap();
        let mut p = FsmPlayer::new(table);
        let ctx = MatchContext::fixed(10);
        assert_eq!(p.next_action(&[], &[], &ctx, &mut stream(&[0])), D);
    }

    #[test]
    fn fortress3_locks_into_mutual_cooperation_after_handshake() {
        // Against an opponent that mirrors the fortress handshake D, D then
        // cooperates, the machine reaches its cooperative state.
        let table = FsmTable::parse(FORTRESS3).unwrap();
        let mut p = FsmPlayer::new(table);
        let ctx = MatchContext::fixed(10);
        let mut rng = stream(&[0]);
        let own = [D, D, C, C];
        let opp = [D, D, C, C];
        let mut actions = Vec::new();
        for t in 0..4 {
            actions.push(p.next_action(&own[..t], &opp[..t], &ctx, &mut rng));
        }
        assert_eq!(actions, vec![D, D, C, C]);
    }

    #[test]
    fn partial_table_is_rejected() {
        let err = FsmTable::parse("1\tC\n1\tC\t1\tD\n").unwrap_err();
        assert!(err.to_string().contains("no row for D"));
    }
}
