//! Config-loadable strategy archetypes. Each archetype validates its
//! parameters and yields a registered-style [`StrategySpec`], so rosters can
//! be extended from config files without code changes.

use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde_json::Value;

use super::basic::{CyclerPlayer, Grumpy, RatioConstant};
use super::fsm::{FsmPlayer, FsmTable};
use super::memory_one::MemoryOnePlayer;
use super::{MatchContext, MemoryDepth, Player, StrategyError, StrategyMetadata, StrategySpec};
use crate::engine::Action::{self, C, D};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchetypeKind {
    MemoryOne,
    Fsm,
    LookupTable,
    Cycler,
    MathConstant,
    ThresholdRatio,
}

impl ArchetypeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "memory_one" => Some(Self::MemoryOne),
            "fsm" => Some(Self::Fsm),
            "lookup_table" => Some(Self::LookupTable),
            "cycler" => Some(Self::Cycler),
            "math_constant" => Some(Self::MathConstant),
            "threshold_ratio" => Some(Self::ThresholdRatio),
            _ => None,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> StrategyError {
    StrategyError::InvalidParam {
        field: field.into(),
        reason: reason.into(),
    }
}

fn get_f64(params: &Value, field: &str) -> Result<f64, StrategyError> {
    params
        .get(field)
        .and_then(Value::as_f64)
        .ok_or_else(|| bad(field, "missing or not a number"))
}

fn get_str<'a>(params: &'a Value, field: &str) -> Result<&'a str, StrategyError> {
    params
        .get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| bad(field, "missing or not a string"))
}

fn parse_actions(field: &str, s: &str) -> Result<Vec<Action>, StrategyError> {
    s.chars()
        .map(|c| Action::from_char(c).ok_or_else(|| bad(field, format!("bad action `{c}`"))))
        .collect()
}

/// A deterministic lookup-table strategy: the action is read from a table
/// keyed by the last `own_depth` own actions and last `opp_depth` opponent
/// actions; a fixed opening sequence covers the first turns.
pub struct LookupPlayer {
    own_depth: usize,
    opp_depth: usize,
    opening: Vec<Action>,
    table: HashMap<String, Action>,
}

impl LookupPlayer {
    fn key(own: &[Action], opp: &[Action], own_depth: usize, opp_depth: usize) -> String {
        let mut k = String::new();
        for &a in &own[own.len() - own_depth..] {
            k.push(a.to_char());
        }
        k.push('|');
        for &a in &opp[opp.len() - opp_depth..] {
            k.push(a.to_char());
        }
        k
    }
}

impl Player for LookupPlayer {
    fn next_action(&mut self, own: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        let warmup = self.own_depth.max(self.opp_depth);
        if own.len() < warmup {
            return self.opening[own.len() % self.opening.len()];
        }
        self.table[&Self::key(own, opp, self.own_depth, self.opp_depth)]
    }
}

fn build_lookup(params: &Value) -> Result<StrategySpec, StrategyError> {
    let own_depth = get_f64(params, "own_depth")? as usize;
    let opp_depth = get_f64(params, "opp_depth")? as usize;
    if own_depth + opp_depth == 0 || own_depth + opp_depth > 8 {
        return Err(bad("own_depth", "combined depth must be in 1..=8"));
    }
    let opening = parse_actions("opening", get_str(params, "opening")?)?;
    if opening.is_empty() {
        return Err(bad("opening", "must not be empty"));
    }
    let raw = params
        .get("table")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("table", "missing or not an object"))?;
    let mut table = HashMap::new();
    for (k, v) in raw {
        let action = v
            .as_str()
            .and_then(|s| s.chars().next())
            .and_then(Action::from_char)
            .ok_or_else(|| bad("table", format!("bad action for key `{k}`")))?;
        table.insert(k.clone(), action);
    }
    // Totality: every combination of depths must be present.
    let mut combos = vec![String::new()];
    for _ in 0..own_depth + opp_depth {
        combos = combos
            .iter()
            .flat_map(|p| ["C", "D"].iter().map(move |c| format!("{p}{c}")))
            .collect();
    }
    for combo in &combos {
        let key = format!("{}|{}", &combo[..own_depth], &combo[own_depth..]);
        if !table.contains_key(&key) {
            return Err(bad("table", format!("missing entry for `{key}`")));
        }
    }
    let spec = StrategySpec::new(
        format!("Lookup {own_depth} {opp_depth}"),
        params.clone(),
        StrategyMetadata::deterministic(MemoryDepth::Finite(own_depth.max(opp_depth) as u32)),
        move || {
            Box::new(LookupPlayer {
                own_depth,
                opp_depth,
                opening: opening.clone(),
                table: table.clone(),
            })
        },
    );
    Ok(spec)
}

/// Build a strategy from archetype parameters.
///
/// Parameter schemas (JSON):
/// - `memory_one`: `{initial: "C", p_cc, p_cd, p_dc, p_dd}`
/// - `fsm`: `{table: "<tabular text>"}` (see [`FsmTable::parse`])
/// - `lookup_table`: `{own_depth, opp_depth, opening: "C..", table: {"own|opp": "C"}}`
/// - `cycler`: `{cycle: "DDC"}`
/// - `math_constant`: `{constant: 2.718...}`
/// - `threshold_ratio`: `{grumpy_threshold, nice_threshold}`
pub fn load_archetype(kind: ArchetypeKind, params: &Value) -> Result<StrategySpec, StrategyError> {
    match kind {
        ArchetypeKind::MemoryOne => {
            let initial = match get_str(params, "initial")? {
                "C" => C,
                "D" => D,
                other => return Err(bad("initial", format!("`{other}` is not C or D"))),
            };
            let p = [
                get_f64(params, "p_cc")?,
                get_f64(params, "p_cd")?,
                get_f64(params, "p_dc")?,
                get_f64(params, "p_dd")?,
            ];
            let proto = MemoryOnePlayer::new(initial, p)?;
            let metadata = proto.metadata();
            Ok(StrategySpec::new(
                format!("Memory One ({}, {}, {}, {})", p[0], p[1], p[2], p[3]),
                params.clone(),
                metadata,
                move || Box::new(proto.clone()),
            ))
        }
        ArchetypeKind::Fsm => {
            let table = Arc::new(FsmTable::parse(get_str(params, "table")?)?);
            Ok(StrategySpec::new(
                "FSM",
                params.clone(),
                StrategyMetadata::deterministic(MemoryDepth::Infinite),
                move || Box::new(FsmPlayer::new((*table).clone())),
            ))
        }
        ArchetypeKind::LookupTable => build_lookup(params),
        ArchetypeKind::Cycler => {
            let cycle = parse_actions("cycle", get_str(params, "cycle")?)?;
            if cycle.is_empty() {
                return Err(bad("cycle", "must not be empty"));
            }
            let name = format!("Cycler {}", get_str(params, "cycle")?);
            let depth = cycle.len() as u32;
            Ok(StrategySpec::new(
                name,
                params.clone(),
                StrategyMetadata::deterministic(MemoryDepth::Finite(depth)),
                move || Box::new(CyclerPlayer { cycle: cycle.clone() }),
            ))
        }
        ArchetypeKind::MathConstant => {
            let constant = get_f64(params, "constant")?;
            if !(constant.is_finite() && constant > 0.0) {
                return Err(bad("constant", "must be positive and finite"));
            }
            Ok(StrategySpec::new(
                format!("Ratio {constant}"),
                params.clone(),
                StrategyMetadata::deterministic(MemoryDepth::Infinite),
                move || Box::new(RatioConstant::new(constant)),
            ))
        }
        ArchetypeKind::ThresholdRatio => {
            let grumpy = get_f64(params, "grumpy_threshold")?;
            let nice = get_f64(params, "nice_threshold")?;
            if nice >= grumpy {
                return Err(bad("nice_threshold", "must be below grumpy_threshold"));
            }
            Ok(StrategySpec::new(
                format!("Threshold ({grumpy}, {nice})"),
                params.clone(),
                StrategyMetadata::deterministic(MemoryDepth::Infinite),
                move || Box::new(Grumpy::new(grumpy as i32, nice as i32)),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use serde_json::json;

    #[test]
    fn degenerate_memory_one_is_cooperator() {
        let spec = load_archetype(
            ArchetypeKind::MemoryOne,
            &json!({"initial": "C", "p_cc": 1.0, "p_cd": 1.0, "p_dc": 1.0, "p_dd": 1.0}),
        )
        .unwrap();
        assert!(!spec.metadata.stochastic);
        let ctx = MatchContext::fixed(5);
        let mut p = spec.build();
        assert_eq!(p.next_action(&[D], &[D], &ctx, &mut stream(&[0])), C);
    }

    #[test]
    fn cycler_ddc_sequence() {
        let spec = load_archetype(ArchetypeKind::Cycler, &json!({"cycle": "DDC"})).unwrap();
        let ctx = MatchContext::fixed(6);
        let mut p = spec.build();
        let mut rng = stream(&[0]);
        let mut own = Vec::new();
        let mut got = Vec::new();
        for _ in 0..6 {
            let a = p.next_action(&own, &own, &ctx, &mut rng);
            got.push(a);
            own.push(a);
        }
        assert_eq!(got, vec![D, D, C, D, D, C]);
    }

    #[test]
    fn malformed_params_name_the_field() {
        let err = load_archetype(
            ArchetypeKind::MemoryOne,
            &json!({"initial": "C", "p_cc": 1.0, "p_cd": 2.0, "p_dc": 1.0, "p_dd": 1.0}),
        )
        .unwrap_err();
        assert!(err.to_string().contains("p[1]"));
        let err = load_archetype(ArchetypeKind::Cycler, &json!({"cycle": ""})).unwrap_err();
        assert!(err.to_string().contains("cycle"));
    }

    #[test]
    fn lookup_table_requires_totality() {
        let err = load_archetype(
            ArchetypeKind::LookupTable,
            &json!({
                "own_depth": 0, "opp_depth": 1, "opening": "C",
                "table": {"|C": "C"}
            }),
        )
        .unwrap_err();
        assert!(err.to_string().contains("|D"));
    }

    #[test]
    fn lookup_table_tit_for_tat() {
        let spec = load_archetype(
            ArchetypeKind::LookupTable,
            &json!({
                "own_depth": 0, "opp_depth": 1, "opening": "C",
                "table": {"|C": "C", "|D": "D"}
            }),
        )
        .unwrap();
        let ctx = MatchContext::fixed(5);
        let mut p = spec.build();
        let mut rng = stream(&[0]);
        assert_eq!(p.next_action(&[], &[], &ctx, &mut rng), C);
        assert_eq!(p.next_action(&[C], &[D], &ctx, &mut rng), D);
        assert_eq!(p.next_action(&[C, D], &[D, C], &ctx, &mut rng), C);
    }
}
