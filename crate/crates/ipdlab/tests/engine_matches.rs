//! Match-level oracles and invariants for the engine.

use ipdlab::engine::{
    payoff, play_match, play_match_fixed, play_match_probend, Action, MatchParams, MatchRng,
    PayoffMatrix,
};
use ipdlab::seeding::{match_streams, MatchKey};
use ipdlab::strategies::Registry;
use proptest::prelude::*;

fn rng_for(seed: u64) -> MatchRng {
    let (player_a, player_b, events) = match_streams(&MatchKey {
        master_seed: seed,
        trial_seed: 0,
        protocol_tag: 0,
        repetition: 0,
        pair_a: 0,
        pair_b: 1,
    });
    MatchRng {
        player_a,
        player_b,
        events,
    }
}

fn build(name: &str) -> Box<dyn ipdlab::strategies::Player> {
    Registry::standard().get(name).unwrap().build()
}

fn fixed_match(a: &str, b: &str, n: u32, seed: u64) -> ipdlab::engine::MatchRecord {
    let mut pa = build(a);
    let mut pb = build(b);
    play_match_fixed(
        pa.as_mut(),
        pb.as_mut(),
        n,
        0.0,
        &PayoffMatrix::standard(),
        &mut rng_for(seed),
    )
    .unwrap()
}

#[test]
fn payoff_table_is_standard() {
    let m = PayoffMatrix::standard();
    assert_eq!(payoff(Action::C, Action::C, &m), (3.0, 3.0));
    assert_eq!(payoff(Action::C, Action::D, &m), (0.0, 5.0));
    assert_eq!(payoff(Action::D, Action::C, &m), (5.0, 0.0));
    assert_eq!(payoff(Action::D, Action::D, &m), (1.0, 1.0));
}

#[test]
fn tit_for_tat_vs_defector_hand_trace() {
    let rec = fixed_match("Tit For Tat", "Defector", 10, 0);
    assert_eq!(rec.total_a(), 9.0);
    assert_eq!(rec.total_b(), 14.0);
    assert_eq!(rec.actions_a[0], Action::C);
    assert!(rec.actions_a[1..].iter().all(|&a| a == Action::D));
}

#[test]
fn tit_for_tat_vs_alternator_hand_trace() {
    let rec = fixed_match("Tit For Tat", "Alternator", 4, 0);
    assert_eq!(rec.total_a(), 8.0);
    assert_eq!(rec.total_b(), 13.0);
}

#[test]
fn grudger_vs_alternator_hand_trace() {
    let rec = fixed_match("Grudger", "Alternator", 6, 0);
    // Grudger: C C D D D D against C D C D C D.
    assert_eq!(rec.total_a(), 15.0);
    assert_eq!(rec.total_b(), 10.0);
}

#[test]
fn noise_flips_expected_fraction() {
    // Cooperator vs Cooperator under p_n = 0.3: realized defections are
    // exactly the noise flips.
    let mut pa = build("Cooperator");
    let mut pb = build("Cooperator");
    let rec = play_match_fixed(
        pa.as_mut(),
        pb.as_mut(),
        20_000,
        0.3,
        &PayoffMatrix::standard(),
        &mut rng_for(1),
    )
    .unwrap();
    let flips = rec
        .actions_a
        .iter()
        .chain(&rec.actions_b)
        .filter(|&&a| a == Action::D)
        .count();
    let rate = flips as f64 / 40_000.0;
    assert!((rate - 0.3).abs() < 0.01, "noise rate {rate}");
    assert!(rec.intended_a.iter().all(|&a| a == Action::C));
}

#[test]
fn probend_lengths_are_geometric() {
    // Mean length of a geometric ending with parameter p_e is 1/p_e.
    for &p_e in &[0.5, 0.25, 0.1] {
        let mut total = 0usize;
        let trials = 20_000;
        for i in 0..trials {
            let mut pa = build("Cooperator");
            let mut pb = build("Cooperator");
            let rec = play_match_probend(
                pa.as_mut(),
                pb.as_mut(),
                p_e,
                0.0,
                &PayoffMatrix::standard(),
                &mut rng_for(i as u64),
            )
            .unwrap();
            total += rec.length();
        }
        let mean = total as f64 / trials as f64;
        let expect = 1.0 / p_e;
        assert!(
            (mean - expect).abs() / expect < 0.03,
            "p_e {p_e}: mean {mean} expected {expect}"
        );
    }
}

#[test]
fn probend_hides_length_fixed_reveals_it() {
    assert_eq!(MatchParams::fixed(7, 0.0).unwrap().revealed_turns(), Some(7));
    assert_eq!(
        MatchParams::probabilistic_ending(0.5, 0.0)
            .unwrap()
            .revealed_turns(),
        None
    );
}

#[test]
fn turn_cap_bounds_probend_matches() {
    let params = MatchParams::probabilistic_ending(1e-9, 0.0)
        .unwrap()
        .with_turn_cap(50);
    let mut pa = build("Cooperator");
    let mut pb = build("Cooperator");
    let rec = play_match(
        pa.as_mut(),
        pb.as_mut(),
        &params,
        &PayoffMatrix::standard(),
        &mut rng_for(2),
    )
    .unwrap();
    assert_eq!(rec.length(), 50);
    assert!(rec.cap_hit);
}

#[test]
fn invalid_parameters_rejected() {
    assert!(MatchParams::fixed(0, 0.0).is_err());
    assert!(MatchParams::fixed(10, 1.5).is_err());
    assert!(MatchParams::probabilistic_ending(0.0, 0.0).is_err());
    assert!(MatchParams::probabilistic_ending(1.5, 0.0).is_err());
    assert!(PayoffMatrix::new(3.0, 0.0, 2.0, 1.0).is_err()); // T > R violated
    assert!(PayoffMatrix::new(3.0, 2.0, 5.0, 1.0).is_err()); // 2R > T + S violated
}

#[test]
fn simultaneity_bully_vs_alternator() {
    // Both players move on the same prefix: Bully mirrors the opponent's
    // previous realized action flipped, so it lags, never anticipates.
    let rec = fixed_match("Bully", "Alternator", 6, 0);
    assert_eq!(rec.actions_a[0], Action::D);
    for t in 1..6 {
        assert_eq!(rec.actions_a[t], rec.actions_b[t - 1].flip());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_match_invariants(n in 1u32..60, seed in 0u64..500, p_n in 0.0f64..1.0) {
        let mut pa = build("Random: 0.5");
        let mut pb = build("Tit For Tat");
        let rec = play_match_fixed(
            pa.as_mut(), pb.as_mut(), n, p_n, &PayoffMatrix::standard(), &mut rng_for(seed),
        ).unwrap();
        prop_assert_eq!(rec.length(), n as usize);
        prop_assert_eq!(rec.actions_a.len(), rec.actions_b.len());
        prop_assert_eq!(rec.payoffs_a.len(), rec.length());
        // Per-turn payoffs come from the matrix only.
        for t in 0..rec.length() {
            let (pa_t, pb_t) = payoff(rec.actions_a[t], rec.actions_b[t], &PayoffMatrix::standard());
            prop_assert_eq!(rec.payoffs_a[t], pa_t);
            prop_assert_eq!(rec.payoffs_b[t], pb_t);
        }
        prop_assert!(!rec.cap_hit);
    }

    #[test]
    fn zero_noise_realizes_intentions(n in 1u32..40, seed in 0u64..200) {
        let mut pa = build("Random: 0.5");
        let mut pb = build("Alternator");
        let rec = play_match_fixed(
            pa.as_mut(), pb.as_mut(), n, 0.0, &PayoffMatrix::standard(), &mut rng_for(seed),
        ).unwrap();
        prop_assert_eq!(&rec.actions_a, &rec.intended_a);
        prop_assert_eq!(&rec.actions_b, &rec.intended_b);
    }

    #[test]
    fn full_noise_flips_everything(n in 1u32..40, seed in 0u64..200) {
        let mut pa = build("Cooperator");
        let mut pb = build("Defector");
        let rec = play_match_fixed(
            pa.as_mut(), pb.as_mut(), n, 1.0, &PayoffMatrix::standard(), &mut rng_for(seed),
        ).unwrap();
        prop_assert!(rec.actions_a.iter().all(|&a| a == Action::D));
        prop_assert!(rec.actions_b.iter().all(|&a| a == Action::C));
    }

    #[test]
    fn matches_are_deterministic(n in 1u32..40, seed in 0u64..200) {
        let run = |s| {
            let mut pa = build("Random: 0.5");
            let mut pb = build("ZD-Extort-2");
            play_match_fixed(
                pa.as_mut(), pb.as_mut(), n, 0.1, &PayoffMatrix::standard(), &mut rng_for(s),
            ).unwrap()
        };
        let a = run(seed);
        let b = run(seed);
        prop_assert_eq!(a.actions_a, b.actions_a);
        prop_assert_eq!(a.actions_b, b.actions_b);
    }
}
