//! The concrete strategy roster. Every parameter that the source
//! descriptions leave open is fixed here and emitted in the machine-readable
//! manifest, so downstream analyses are self-describing.

use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::archetype::{load_archetype, ArchetypeKind};
use super::basic::*;
use super::fsm::{FsmPlayer, FsmTable, FORTRESS3, FORTRESS4};
use super::memory_one::{self, MemoryOnePlayer};
use super::meta::{MetaPlayer, MetaRule};
use super::retaliate::RetaliatePlayer;
use super::{MemoryDepth, Player, StrategyError, StrategyMetadata, StrategySpec};
use crate::engine::Action::C;

const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

pub struct Registry {
    specs: Vec<StrategySpec>,
    index: HashMap<String, usize>,
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    params: serde_json::Value,
    metadata: StrategyMetadata,
}

#[derive(Serialize)]
struct Manifest {
    format: &'static str,
    version: &'static str,
    strategies: Vec<ManifestEntry>,
}

impl Registry {
    /// The full default roster.
    pub fn standard() -> Self {
        let mut specs = base_roster();
        let team: Arc<Vec<StrategySpec>> = Arc::new(specs.clone());
        for (name, rule, nice) in [
            ("Meta Winner", MetaRule::Winner, false),
            ("Meta Majority", MetaRule::Majority, false),
            ("Meta Minority", MetaRule::Minority, false),
            ("Nice Meta Winner", MetaRule::Winner, true),
        ] {
            let team = Arc::clone(&team);
            let team_names: Vec<&str> = team.iter().map(|s| s.name.as_str()).collect();
            specs.push(StrategySpec::new(
                name,
                json!({"rule": format!("{rule:?}"), "nice": nice, "team": team_names}),
                StrategyMetadata {
                    stochastic: true,
                    makes_use_of_game: true,
                    makes_use_of_length: true,
                    memory_depth: MemoryDepth::Infinite,
                },
                move || Box::new(MetaPlayer::new(rule, nice, &team).expect("non-empty team")),
            ));
        }
        Self::from_specs(specs)
    }

    pub fn from_specs(specs: Vec<StrategySpec>) -> Self {
        let index = specs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), i))
            .collect();
        Registry { specs, index }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[StrategySpec] {
        &self.specs
    }

    pub fn get(&self, name: &str) -> Result<&StrategySpec, StrategyError> {
        self.index
            .get(name)
            .map(|&i| &self.specs[i])
            .ok_or_else(|| StrategyError::Unknown(name.to_string()))
    }

    pub fn classify(&self, name: &str) -> Result<StrategyMetadata, StrategyError> {
        Ok(self.get(name)?.metadata)
    }

    /// Restrict to the named strategies, preserving the given order.
    pub fn subset(&self, names: &[String]) -> Result<Registry, StrategyError> {
        let specs = names
            .iter()
            .map(|n| self.get(n).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Registry::from_specs(specs))
    }

    /// Add archetype strategies loaded from config.
    pub fn extend_from_config(
        &mut self,
        entries: &[(String, String, serde_json::Value)],
    ) -> Result<(), StrategyError> {
        for (kind, name, params) in entries {
            let kind = ArchetypeKind::parse(kind).ok_or_else(|| StrategyError::InvalidParam {
                field: "kind".into(),
                reason: format!("unknown archetype `{kind}`"),
            })?;
            let mut spec = load_archetype(kind, params)?;
            if !name.is_empty() {
                spec.name = name.clone();
            }
            if self.index.contains_key(&spec.name) {
                return Err(StrategyError::InvalidParam {
                    field: "name".into(),
                    reason: format!("duplicate strategy name `{}`", spec.name),
                });
            }
            self.index.insert(spec.name.clone(), self.specs.len());
            self.specs.push(spec);
        }
        Ok(())
    }

    /// Human-readable, versioned listing of every strategy, its parameters
    /// and metadata.
    pub fn manifest_json(&self) -> String {
        let manifest = Manifest {
            format: "ipdlab.registry",
            version: env!("CARGO_PKG_VERSION"),
            strategies: self
                .specs
                .iter()
                .map(|s| ManifestEntry {
                    name: s.name.clone(),
                    params: s.params.clone(),
                    metadata: s.metadata,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&manifest).expect("manifest serializes")
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.manifest_json().as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn det(memory: MemoryDepth) -> StrategyMetadata {
    StrategyMetadata::deterministic(memory)
}

fn stoch(memory: MemoryDepth) -> StrategyMetadata {
    StrategyMetadata {
        stochastic: true,
        makes_use_of_game: false,
        makes_use_of_length: false,
        memory_depth: memory,
    }
}

fn spec(
    name: &str,
    params: serde_json::Value,
    metadata: StrategyMetadata,
    builder: impl Fn() -> Box<dyn Player> + Send + Sync + 'static,
) -> StrategySpec {
    StrategySpec::new(name, params, metadata, builder)
}

fn memory_one_spec(name: &str, proto: MemoryOnePlayer) -> StrategySpec {
    let metadata = proto.metadata();
    let params = json!({
        "initial": proto.initial.to_char().to_string(),
        "p_cc": proto.p[0], "p_cd": proto.p[1], "p_dc": proto.p[2], "p_dd": proto.p[3],
    });
    spec(name, params, metadata, move || Box::new(proto.clone()))
}

fn cycler_spec(name: &str, pattern: &str) -> StrategySpec {
    let cycle: Vec<_> = pattern
        .chars()
        .map(|c| crate::engine::Action::from_char(c).expect("valid cycle"))
        .collect();
    let depth = cycle.len() as u32;
    spec(
        name,
        json!({"cycle": pattern}),
        det(MemoryDepth::Finite(depth)),
        move || Box::new(CyclerPlayer { cycle: cycle.clone() }),
    )
}

fn retaliate_spec(name: &str, threshold: f64, limit: Option<u32>) -> StrategySpec {
    spec(
        name,
        json!({"threshold": threshold, "limit": limit}),
        det(MemoryDepth::Infinite),
        move || Box::new(RetaliatePlayer::new(threshold, limit).expect("valid threshold")),
    )
}

fn ratio_spec(name: &str, constant: f64) -> StrategySpec {
    spec(
        name,
        json!({"constant": constant, "rule": "cooperate while own #C / max(#D, 1) <= constant"}),
        det(MemoryDepth::Infinite),
        move || Box::new(RatioConstant::new(constant)),
    )
}

fn fsm_spec(name: &str, table_text: &'static str) -> StrategySpec {
    let table = Arc::new(FsmTable::parse(table_text).expect("bundled table parses"));
    spec(
        name,
        json!({"table": table_text}),
        det(MemoryDepth::Infinite),
        move || Box::new(FsmPlayer::new((*table).clone())),
    )
}

fn base_roster() -> Vec<StrategySpec> {
    let use_length = |mut m: StrategyMetadata| {
        m.makes_use_of_length = true;
        m
    };

    let mut specs = vec![
        spec("Cooperator", json!({}), det(MemoryDepth::Finite(0)), || {
            Box::new(Cooperator)
        }),
        spec("Defector", json!({}), det(MemoryDepth::Finite(0)), || {
            Box::new(Defector)
        }),
        spec(
            "Random: 0.5",
            json!({"p_c": 0.5}),
            stoch(MemoryDepth::Finite(0)),
            || Box::new(RandomPlayer { p_c: 0.5 }),
        ),
        cycler_spec("Alternator", "CD"),
        cycler_spec("Cycler CCD", "CCD"),
        cycler_spec("Cycler DC", "DC"),
        cycler_spec("Cycler DDC", "DDC"),
        cycler_spec("Cycler CCCCCD", "CCCCCD"),
        // Tit For Tat family.
        spec("Tit For Tat", json!({}), det(MemoryDepth::Finite(1)), || {
            Box::new(TitForTat)
        }),
        spec("Tit For 2 Tats", json!({}), det(MemoryDepth::Finite(2)), || {
            Box::new(TitForTwoTats)
        }),
        spec("Two Tits For Tat", json!({}), det(MemoryDepth::Finite(2)), || {
            Box::new(TwoTitsForTat)
        }),
        spec(
            "Suspicious Tit For Tat",
            json!({}),
            det(MemoryDepth::Finite(1)),
            || Box::new(SuspiciousTitForTat),
        ),
        spec(
            "Hard Tit For 2 Tats",
            json!({}),
            det(MemoryDepth::Finite(3)),
            || Box::new(HardTitForTwoTats),
        ),
        spec(
            "Spiteful Tit For Tat",
            json!({}),
            det(MemoryDepth::Infinite),
            || Box::new(SpitefulTitForTat::default()),
        ),
        // Grudgers.
        spec("Grudger", json!({}), det(MemoryDepth::Infinite), || {
            Box::new(Grudger::default())
        }),
        spec(
            "Forgetful Grudger",
            json!({"mem_length": 10}),
            det(MemoryDepth::Finite(10)),
            || Box::new(ForgetfulGrudger::new(10)),
        ),
        spec("Fool Me Once", json!({}), det(MemoryDepth::Infinite), || {
            Box::new(FoolMeOnce::default())
        }),
        spec(
            "Forgetful Fool Me Once",
            json!({"forget_after": 10}),
            det(MemoryDepth::Infinite),
            || Box::new(ForgetfulFoolMeOnce::new(10)),
        ),
        spec("EasyGo", json!({}), det(MemoryDepth::Infinite), || {
            Box::new(EasyGo::default())
        }),
        // Same decision rule as EasyGo, registered under its alias.
        spec(
            "Fool Me Forever",
            json!({"alias_of": "EasyGo"}),
            det(MemoryDepth::Infinite),
            || Box::new(EasyGo::default()),
        ),
        // End-game cheaters.
        spec(
            "BackStabber",
            json!({"forgiven_defections": 3, "end_game_defections": 2}),
            use_length(det(MemoryDepth::Infinite)),
            || Box::new(BackStabber::default()),
        ),
        spec(
            "DoubleCrosser",
            json!({"trust_window": 6, "forgiven_defections": 3, "end_game_defections": 2}),
            use_length(det(MemoryDepth::Infinite)),
            || Box::new(DoubleCrosser::default()),
        ),
        // Memory-one.
        memory_one_spec("Win-Stay Lose-Shift", memory_one::wsls()),
        memory_one_spec("GTFT", memory_one::gtft()),
        memory_one_spec(
            "Memory One Generic",
            MemoryOnePlayer::new(C, [0.8, 0.3, 0.6, 0.1]).expect("valid"),
        ),
        memory_one_spec("ZD-Extort-2", memory_one::zd_extort_2()),
        memory_one_spec("ZD-Extort-4", memory_one::zd_extort_4()),
        memory_one_spec("ZD-GTFT-2", memory_one::zd_gtft_2()),
        memory_one_spec("ZD-SET-2", memory_one::zd_set_2()),
        // Retaliators.
        retaliate_spec("Retaliate", 0.1, None),
        retaliate_spec("Retaliate 2", 0.08, None),
        retaliate_spec("Retaliate 3", 0.05, None),
        retaliate_spec("Limited Retaliate", 0.1, Some(20)),
        retaliate_spec("Limited Retaliate 2", 0.08, Some(15)),
        retaliate_spec("Limited Retaliate 3", 0.05, Some(10)),
        // Hunters.
        spec(
            "Defector Hunter",
            json!({"min_turns": 4}),
            det(MemoryDepth::Infinite),
            || Box::new(Hunter::new(HuntRule::AllDefections)),
        ),
        spec(
            "Cooperator Hunter",
            json!({"min_turns": 4}),
            det(MemoryDepth::Infinite),
            || Box::new(Hunter::new(HuntRule::AllCooperations)),
        ),
        spec(
            "Alternator Hunter",
            json!({"min_turns": 6}),
            det(MemoryDepth::Infinite),
            || Box::new(Hunter::new(HuntRule::Alternating)),
        ),
        spec(
            "Cycle Hunter",
            json!({"min_turns": 10, "max_period": 5}),
            det(MemoryDepth::Infinite),
            || Box::new(Hunter::new(HuntRule::Cyclic)),
        ),
        spec(
            "Random Hunter",
            json!({"min_turns": 15, "rate_band": [0.25, 0.75]}),
            det(MemoryDepth::Infinite),
            || Box::new(Hunter::new(HuntRule::RandomLike)),
        ),
        // Ratio players.
        spec(
            "Grumpy",
            json!({"grumpy_threshold": 10, "nice_threshold": -10}),
            det(MemoryDepth::Infinite),
            || Box::new(Grumpy::new(10, -10)),
        ),
        spec(
            "ShortMem",
            json!({"window": 10, "margin": 3}),
            det(MemoryDepth::Finite(10)),
            || Box::new(ShortMem { window: 10 }),
        ),
        ratio_spec("e", E),
        ratio_spec("pi", PI),
        ratio_spec("phi", GOLDEN_RATIO),
        // Defector-leaning.
        spec("Bully", json!({}), det(MemoryDepth::Finite(1)), || {
            Box::new(Bully)
        }),
        spec(
            "Better and Better",
            json!({"defect_probability": "(1000 - turn) / 1000"}),
            stoch(MemoryDepth::Finite(0)),
            || Box::new(BetterAndBetter),
        ),
        spec(
            "Tricky Defector",
            json!({"lure_after_defections": 3}),
            det(MemoryDepth::Infinite),
            || Box::new(TrickyDefector),
        ),
        spec(
            "Aggravater",
            json!({"opening_defections": 3}),
            det(MemoryDepth::Infinite),
            || Box::new(Aggravater::default()),
        ),
        spec(
            "Gradual Killer",
            json!({"opening": "DDDDDCC", "judge_turns": [6, 7]}),
            det(MemoryDepth::Infinite),
            || Box::new(GradualKiller),
        ),
        spec(
            "Hard Prober",
            json!({"opening": "DDCC"}),
            det(MemoryDepth::Infinite),
            || Box::new(HardProber),
        ),
        // Finite state machines.
        fsm_spec("Fortress3", FORTRESS3),
        fsm_spec("Fortress4", FORTRESS4),
    ];

    // Keep alias metadata equal by construction.
    let easygo = specs.iter().position(|s| s.name == "EasyGo").unwrap();
    let fmf = specs.iter().position(|s| s.name == "Fool Me Forever").unwrap();
    let m = specs[easygo].metadata;
    specs[fmf].metadata = m;
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_has_at_least_forty_strategies() {
        let reg = Registry::standard();
        assert!(reg.len() >= 40, "roster size {}", reg.len());
    }

    #[test]
    fn names_are_unique() {
        let reg = Registry::standard();
        assert_eq!(reg.index.len(), reg.specs.len());
    }

    #[test]
    fn classify_known_and_unknown() {
        let reg = Registry::standard();
        let meta = reg.classify("Random: 0.5").unwrap();
        assert!(meta.stochastic);
        let meta = reg.classify("DoubleCrosser").unwrap();
        assert!(meta.makes_use_of_length);
        let meta = reg.classify("Tit For Tat").unwrap();
        assert_eq!(meta.memory_depth, MemoryDepth::Finite(1));
        assert!(reg.classify("No Such Strategy").is_err());
    }

    #[test]
    fn manifest_digest_is_stable_and_input_sensitive() {
        let a = Registry::standard();
        let b = Registry::standard();
        assert_eq!(a.digest(), b.digest());
        let mut c = Registry::standard();
        c.extend_from_config(&[(
            "cycler".into(),
            "Cycler CCDD".into(),
            json!({"cycle": "CCDD"}),
        )])
        .unwrap();
        assert_ne!(a.digest(), c.digest());
        assert!(c.get("Cycler CCDD").is_ok());
    }

    #[test]
    fn meta_strategies_use_non_meta_team() {
        let reg = Registry::standard();
        let spec = reg.get("Meta Winner").unwrap();
        let team = spec.params.get("team").unwrap().as_array().unwrap();
        assert!(team.len() >= 40);
        assert!(!team.iter().any(|n| n.as_str().unwrap().contains("Meta")));
    }
}
