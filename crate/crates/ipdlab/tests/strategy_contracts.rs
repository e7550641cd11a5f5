//! Cross-cutting contracts every registry strategy must honor: declared
//! metadata matches observable behaviour, incremental and one-shot history
//! processing agree, and the two everyone-is-nice-until-you-defect aliases
//! are behaviourally identical.

use ipdlab::engine::Action;
use ipdlab::seeding::stream;
use ipdlab::strategies::{MatchContext, MemoryDepth, Registry, StrategySpec};
use rand::Rng;

/// Deterministic pseudo-random joint history of the given length.
fn random_history(len: usize, seed: u64) -> (Vec<Action>, Vec<Action>) {
    let mut rng = stream(&[0x686973, seed]);
    let mut own = Vec::with_capacity(len);
    let mut opp = Vec::with_capacity(len);
    for _ in 0..len {
        own.push(if rng.gen::<bool>() { Action::C } else { Action::D });
        opp.push(if rng.gen::<bool>() { Action::C } else { Action::D });
    }
    (own, opp)
}

/// Action after walking the history prefix by prefix.
fn walk(spec: &StrategySpec, own: &[Action], opp: &[Action], ctx: &MatchContext, rng_seed: u64) -> Action {
    let mut player = spec.build();
    let mut rng = stream(&[rng_seed]);
    let mut last = Action::C;
    for t in 0..=own.len() {
        let ctx = MatchContext {
            current_turn: t,
            ..*ctx
        };
        last = player.next_action(&own[..t], &opp[..t], &ctx, &mut rng);
    }
    last
}

/// Action from a single call carrying the full history.
fn one_shot(spec: &StrategySpec, own: &[Action], opp: &[Action], ctx: &MatchContext, rng_seed: u64) -> Action {
    let mut player = spec.build();
    let mut rng = stream(&[rng_seed]);
    let ctx = MatchContext {
        current_turn: own.len(),
        ..*ctx
    };
    player.next_action(own, opp, &ctx, &mut rng)
}

#[test]
fn deterministic_claim_is_honest() {
    // A strategy claiming determinism must answer identically under
    // differently seeded rngs on every prefix.
    let registry = Registry::standard();
    for spec in registry.specs() {
        if spec.metadata.stochastic {
            continue;
        }
        for hist_seed in 0..5 {
            let (own, opp) = random_history(12, hist_seed);
            let ctx = MatchContext::fixed(13);
            let a = walk(spec, &own, &opp, &ctx, 1);
            let b = walk(spec, &own, &opp, &ctx, 999);
            assert_eq!(a, b, "{} diverged under rng reseed", spec.name);
        }
    }
}

#[test]
fn length_blindness_is_honest() {
    // Strategies not claiming to use the match length must act identically
    // whether the length is 5, 200 or hidden.
    let registry = Registry::standard();
    for spec in registry.specs() {
        if spec.metadata.makes_use_of_length {
            continue;
        }
        for hist_seed in 0..5 {
            let (own, opp) = random_history(10, hist_seed);
            let short = walk(spec, &own, &opp, &MatchContext::fixed(15), 7);
            let long = walk(spec, &own, &opp, &MatchContext::fixed(200), 7);
            let hidden = walk(spec, &own, &opp, &MatchContext::unknown_length(), 7);
            assert_eq!(short, long, "{} peeks at the length", spec.name);
            assert_eq!(short, hidden, "{} peeks at the length", spec.name);
        }
    }
}

#[test]
fn every_strategy_survives_hidden_length() {
    // Probabilistic-ending play passes turns_total = None to everyone.
    let registry = Registry::standard();
    for spec in registry.specs() {
        for hist_seed in 0..3 {
            let (own, opp) = random_history(8, hist_seed);
            walk(spec, &own, &opp, &MatchContext::unknown_length(), 3);
        }
    }
}

#[test]
fn short_memory_claims_are_honest() {
    // For depth d <= 3, two same-length histories sharing their last d turns
    // must elicit the same action from a fresh player.
    let registry = Registry::standard();
    for spec in registry.specs() {
        let MemoryDepth::Finite(d) = spec.metadata.memory_depth else {
            continue;
        };
        if d > 3 {
            continue;
        }
        let d = d as usize;
        let len = 9;
        for hist_seed in 0..6 {
            let (own_a, opp_a) = random_history(len, hist_seed);
            let (mut own_b, mut opp_b) = random_history(len, hist_seed + 100);
            own_b[len - d..].copy_from_slice(&own_a[len - d..]);
            opp_b[len - d..].copy_from_slice(&opp_a[len - d..]);
            let ctx = MatchContext::fixed(len as u32 + 5);
            let a = one_shot(spec, &own_a, &opp_a, &ctx, 11);
            let b = one_shot(spec, &own_b, &opp_b, &ctx, 11);
            assert_eq!(
                a, b,
                "{} (depth {d}) depends on turns before its memory horizon",
                spec.name
            );
        }
    }
}

#[test]
fn incremental_and_one_shot_processing_agree() {
    let registry = Registry::standard();
    for spec in registry.specs() {
        if spec.metadata.stochastic {
            // rng consumption differs between one and many calls.
            continue;
        }
        for hist_seed in 0..5 {
            let (own, opp) = random_history(11, hist_seed);
            let ctx = MatchContext::fixed(16);
            let walked = walk(spec, &own, &opp, &ctx, 5);
            let direct = one_shot(spec, &own, &opp, &ctx, 5);
            assert_eq!(
                walked, direct,
                "{} answers differently when fed the history at once",
                spec.name
            );
        }
    }
}

#[test]
fn easy_go_aliases_agree_on_all_short_histories() {
    // Exhaustive over joint histories up to length 6.
    let registry = Registry::standard();
    let a = registry.get("EasyGo").unwrap();
    let b = registry.get("Fool Me Forever").unwrap();
    for len in 0..=6usize {
        for bits in 0..(1u32 << (2 * len)) {
            let own: Vec<Action> = (0..len)
                .map(|i| if bits >> i & 1 == 1 { Action::C } else { Action::D })
                .collect();
            let opp: Vec<Action> = (0..len)
                .map(|i| if bits >> (len + i) & 1 == 1 { Action::C } else { Action::D })
                .collect();
            let ctx = MatchContext::fixed(len as u32 + 1);
            assert_eq!(
                one_shot(a, &own, &opp, &ctx, 0),
                one_shot(b, &own, &opp, &ctx, 0),
                "alias diverges on own {own:?} opp {opp:?}"
            );
        }
    }
}

#[test]
fn roster_is_large_and_unique() {
    let registry = Registry::standard();
    assert!(registry.len() >= 40, "only {} strategies", registry.len());
    let mut names: Vec<&str> = registry.specs().iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), registry.len());
}
