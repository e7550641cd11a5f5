//! Memory-one strategies: an initial action plus conditional cooperation
//! probabilities over the four prior states (CC, CD, DC, DD), state being the
//! (own, opponent) realized pair.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{MatchContext, MemoryDepth, Player, StrategyError, StrategyMetadata};
use crate::engine::Action::{self, C, D};

#[derive(Clone, Debug)]
pub struct MemoryOnePlayer {
    pub initial: Action,
    /// Cooperation probabilities indexed by state CC, CD, DC, DD.
    pub p: [f64; 4],
}

impl MemoryOnePlayer {
    pub fn new(initial: Action, p: [f64; 4]) -> Result<Self, StrategyError> {
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(StrategyError::InvalidParam {
                    field: format!("p[{i}]"),
                    reason: format!("{v} is not a probability"),
                });
            }
        }
        Ok(MemoryOnePlayer { initial, p })
    }

    pub fn is_deterministic(&self) -> bool {
        self.p.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn metadata(&self) -> StrategyMetadata {
        StrategyMetadata {
            stochastic: !self.is_deterministic(),
            makes_use_of_game: false,
            makes_use_of_length: false,
            memory_depth: MemoryDepth::Finite(1),
        }
    }
}

pub fn state_index(own_last: Action, opp_last: Action) -> usize {
    match (own_last, opp_last) {
        (C, C) => 0,
        (C, D) => 1,
        (D, C) => 2,
        (D, D) => 3,
    }
}

impl Player for MemoryOnePlayer {
    fn next_action(&mut self, own: &[Action], opp: &[Action], _: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        let (own_last, opp_last) = match (own.last(), opp.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return self.initial,
        };
        let p = self.p[state_index(own_last, opp_last)];
        // Degenerate probabilities never touch the rng.
        if p >= 1.0 {
            C
        } else if p <= 0.0 {
            D
        } else if rng.gen::<f64>() < p {
            C
        } else {
            D
        }
    }
}

/// Win-Stay Lose-Shift: repeat after R or T, switch after S or P.
pub fn wsls() -> MemoryOnePlayer {
    MemoryOnePlayer {
        initial: C,
        p: [1.0, 0.0, 0.0, 1.0],
    }
}

/// Generous Tit For Tat with forgiveness 1/3 (the standard value for R=3,
/// S=0, T=5, P=1).
pub fn gtft() -> MemoryOnePlayer {
    let g = 1.0 / 3.0;
    MemoryOnePlayer {
        initial: C,
        p: [1.0, g, 1.0, g],
    }
}

/// Extortionate zero-determinant strategy with chi = 2.
pub fn zd_extort_2() -> MemoryOnePlayer {
    MemoryOnePlayer {
        initial: C,
        p: [8.0 / 9.0, 0.5, 1.0 / 3.0, 0.0],
    }
}

/// Extortionate zero-determinant strategy with chi = 4.
pub fn zd_extort_4() -> MemoryOnePlayer {
    MemoryOnePlayer {
        initial: C,
        p: [11.0 / 17.0, 0.0, 8.0 / 17.0, 0.0],
    }
}

/// Generous zero-determinant strategy with chi = 2.
pub fn zd_gtft_2() -> MemoryOnePlayer {
    MemoryOnePlayer {
        initial: C,
        p: [1.0, 1.0 / 8.0, 1.0, 0.25],
    }
}

/// Zero-determinant strategy pinning the opponent's score to 2.
pub fn zd_set_2() -> MemoryOnePlayer {
    MemoryOnePlayer {
        initial: C,
        p: [0.75, 0.25, 0.5, 0.25],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;

    #[test]
    fn degenerate_all_ones_is_cooperator() {
        let mut m = MemoryOnePlayer::new(C, [1.0; 4]).unwrap();
        let ctx = MatchContext::fixed(10);
        let mut rng = stream(&[0]);
        for hist in [(vec![], vec![]), (vec![D], vec![D]), (vec![C], vec![D])] {
            assert_eq!(m.next_action(&hist.0, &hist.1, &ctx, &mut rng), C);
        }
    }

    #[test]
    fn wsls_matches_rule_on_all_four_states() {
        let ctx = MatchContext::fixed(10);
        let mut rng = stream(&[1]);
        for (own, opp, expect) in [(C, C, C), (C, D, D), (D, C, D), (D, D, C)] {
            let mut m = wsls();
            assert_eq!(m.next_action(&[own], &[opp], &ctx, &mut rng), expect);
        }
    }

    #[test]
    fn rejects_invalid_probability() {
        let err = MemoryOnePlayer::new(C, [1.0, 0.5, 1.2, 0.0]).unwrap_err();
        assert!(err.to_string().contains("p[2]"));
    }
}
