//! Retaliate family: defect when the opponent has tricked (played D against
//! our C) more often than a fraction `x` of the times we have done the same.
//! Limited variants give up after a run of consecutive retaliations.

use rand_chacha::ChaCha12Rng;

use super::{MatchContext, Player, StrategyError};
use crate::engine::Action::{self, C, D};

pub struct RetaliatePlayer {
    pub threshold: f64,
    pub limit: Option<u32>,
    opp_tricks: u32,
    own_tricks: u32,
    streak: u32,
    seen: usize,
}

impl RetaliatePlayer {
    pub fn new(threshold: f64, limit: Option<u32>) -> Result<Self, StrategyError> {
        if !(0.0..1.0).contains(&threshold) || threshold <= 0.0 {
            return Err(StrategyError::InvalidParam {
                field: "threshold".into(),
                reason: format!("{threshold} must lie strictly between 0 and 1"),
            });
        }
        Ok(RetaliatePlayer {
            threshold,
            limit,
            opp_tricks: 0,
            own_tricks: 0,
            streak: 0,
            seen: 0,
        })
    }

    fn provoked(&self) -> bool {
        f64::from(self.opp_tricks) > self.threshold * f64::from(self.own_tricks)
    }

    /// Advance the streak as the decision at one past turn would have.
    fn replay_decision(&mut self) {
        if !self.provoked() {
            self.streak = 0;
        } else if self.limit.map(|l| self.streak < l).unwrap_or(true) {
            self.streak += 1;
        }
    }
}

impl Player for RetaliatePlayer {
    fn next_action(&mut self, own: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        // Replay unseen turns: each turn first decided on the counts so far,
        // then revealed one (own, opp) outcome.
        for t in self.seen..own.len() {
            self.replay_decision();
            match (own[t], opp[t]) {
                (C, D) => self.opp_tricks += 1,
                (D, C) => self.own_tricks += 1,
                _ => {}
            }
        }
        self.seen = own.len();
        if !self.provoked() {
            C
        } else if self.limit.map(|l| self.streak >= l).unwrap_or(false) {
            C
        } else {
            D
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;

    #[test]
    fn calm_start_cooperates() {
        let mut p = RetaliatePlayer::new(0.1, None).unwrap();
        let ctx = MatchContext::fixed(10);
        assert_eq!(p.next_action(&[], &[], &ctx, &mut stream(&[0])), C);
    }

    #[test]
    fn single_betrayal_triggers_retaliation() {
        let mut p = RetaliatePlayer::new(0.1, None).unwrap();
        let ctx = MatchContext::fixed(10);
        assert_eq!(p.next_action(&[C], &[D], &ctx, &mut stream(&[0])), D);
    }

    #[test]
    fn limited_variant_gives_up() {
        let mut p = RetaliatePlayer::new(0.1, Some(2)).unwrap();
        let ctx = MatchContext::fixed(10);
        let mut rng = stream(&[0]);
        let mut own = vec![C];
        let opp_first = vec![D];
        // Opponent keeps cooperating after the single betrayal; our own
        // retaliations never count as tricks because opp keeps cooperating
        // against our D.
        let mut opp = opp_first;
        let a1 = p.next_action(&own, &opp, &ctx, &mut rng);
        assert_eq!(a1, D);
        own.push(a1);
        opp.push(C);
        let a2 = p.next_action(&own, &opp, &ctx, &mut rng);
        assert_eq!(a2, D);
        own.push(a2);
        opp.push(C);
        // Two retaliations spent; limit reached; D vs C raised own_tricks
        // so the ledger also balances.
        let a3 = p.next_action(&own, &opp, &ctx, &mut rng);
        assert_eq!(a3, C);
    }

    #[test]
    fn rejects_threshold_outside_open_interval() {
        assert!(RetaliatePlayer::new(0.0, None).is_err());
        assert!(RetaliatePlayer::new(1.0, None).is_err());
    }
}
