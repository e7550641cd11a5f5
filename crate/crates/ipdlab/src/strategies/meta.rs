//! Team strategies. Each team member is simulated privately against the
//! observed (realized) opponent history; the meta plays the action of the
//! member selected by its rule.

use rand_chacha::ChaCha12Rng;

use super::{MatchContext, Player, StrategyError, StrategySpec};
use crate::engine::Action::{self, C, D};
use crate::engine::payoff;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaRule {
    /// Play the proposal of the member with the highest hypothetical score.
    Winner,
    /// Play the most common proposal.
    Majority,
    /// Play the least common proposal.
    Minority,
}

struct Member {
    player: Box<dyn Player>,
    /// The member's own private action record; it never sees noise applied
    /// to the meta's emitted action.
    own_hist: Vec<Action>,
    score: f64,
}

pub struct MetaPlayer {
    rule: MetaRule,
    /// Nice variants never defect before the opponent's first defection.
    nice: bool,
    members: Vec<Member>,
    scored: usize,
    opp_clean: bool,
}

impl MetaPlayer {
    pub fn new(rule: MetaRule, nice: bool, team: &[StrategySpec]) -> Result<Self, StrategyError> {
        if team.is_empty() {
            return Err(StrategyError::EmptyTeam);
        }
        let members = team
            .iter()
            .map(|spec| Member {
                player: spec.build(),
                own_hist: Vec::new(),
                score: 0.0,
            })
            .collect();
        Ok(MetaPlayer {
            rule,
            nice,
            members,
            scored: 0,
            opp_clean: true,
        })
    }
}

impl Player for MetaPlayer {
    fn next_action(&mut self, _: &[Action], opp: &[Action], ctx: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        // Settle hypothetical scores for turns whose opponent action is now
        // known (realized actions: the only observable data).
        for t in self.scored..opp.len() {
            for member in &mut self.members {
                member.score += payoff(member.own_hist[t], opp[t], &ctx.payoffs).0;
            }
            self.opp_clean &= opp[t] == C;
        }
        self.scored = opp.len();

        let mut proposals = Vec::with_capacity(self.members.len());
        for member in &mut self.members {
            let a = member.player.next_action(&member.own_hist, opp, ctx, rng);
            member.own_hist.push(a);
            proposals.push(a);
        }

        let chosen = match self.rule {
            MetaRule::Winner => {
                let best = self
                    .members
                    .iter()
                    .map(|m| m.score)
                    .fold(f64::NEG_INFINITY, f64::max);
                // Ties between leaders resolve towards cooperation.
                if self
                    .members
                    .iter()
                    .zip(&proposals)
                    .any(|(m, &a)| m.score == best && a == C)
                {
                    C
                } else {
                    D
                }
            }
            MetaRule::Majority => {
                let coops = proposals.iter().filter(|&&a| a == C).count();
                if 2 * coops >= proposals.len() {
                    C
                } else {
                    D
                }
            }
            MetaRule::Minority => {
                let coops = proposals.iter().filter(|&&a| a == C).count();
                if 2 * coops > proposals.len() {
                    D
                } else {
                    C
                }
            }
        };

        if self.nice && self.opp_clean {
            C
        } else {
            chosen
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PayoffMatrix;
    use crate::seeding::stream;
    use crate::strategies::{MemoryDepth, StrategyMetadata};
    use serde_json::json;

    fn spec_of(name: &str, f: impl Fn() -> Box<dyn Player> + Send + Sync + 'static) -> StrategySpec {
        StrategySpec::new(
            name,
            json!({}),
            StrategyMetadata::deterministic(MemoryDepth::Finite(0)),
            f,
        )
    }

    fn cooperator_spec() -> StrategySpec {
        spec_of("Cooperator", || Box::new(crate::strategies::basic::Cooperator))
    }

    fn defector_spec() -> StrategySpec {
        spec_of("Defector", || Box::new(crate::strategies::basic::Defector))
    }

    fn tft_spec() -> StrategySpec {
        spec_of("Tit For Tat", || Box::new(crate::strategies::basic::TitForTat))
    }

    fn ctx() -> MatchContext {
        MatchContext {
            turns_total: Some(20),
            payoffs: PayoffMatrix::standard(),
            current_turn: 0,
        }
    }

    #[test]
    fn single_member_team_mirrors_the_member() {
        let mut meta = MetaPlayer::new(MetaRule::Winner, false, &[cooperator_spec()]).unwrap();
        let mut rng = stream(&[0]);
        let mut own = Vec::new();
        let mut opp = Vec::new();
        for _ in 0..5 {
            let a = meta.next_action(&own, &opp, &ctx(), &mut rng);
            assert_eq!(a, C);
            own.push(a);
            opp.push(D);
        }
    }

    #[test]
    fn majority_vote_two_of_three() {
        let team = [cooperator_spec(), cooperator_spec(), defector_spec()];
        let mut meta = MetaPlayer::new(MetaRule::Majority, false, &team).unwrap();
        assert_eq!(meta.next_action(&[], &[], &ctx(), &mut stream(&[0])), C);
    }

    #[test]
    fn minority_plays_least_common_proposal() {
        let team = [cooperator_spec(), cooperator_spec(), defector_spec()];
        let mut meta = MetaPlayer::new(MetaRule::Minority, false, &team).unwrap();
        assert_eq!(meta.next_action(&[], &[], &ctx(), &mut stream(&[0])), D);
    }

    #[test]
    fn empty_team_is_rejected() {
        assert!(MetaPlayer::new(MetaRule::Winner, false, &[]).is_err());
    }

    /// Against an all-C opponent, Defector's hypothetical score (T per turn)
    /// overtakes Tit For Tat's (R per turn); the meta switches to D.
    #[test]
    fn winner_follows_hypothetical_score_stream() {
        let team = [tft_spec(), defector_spec()];
        let mut meta = MetaPlayer::new(MetaRule::Winner, false, &team).unwrap();
        let mut rng = stream(&[0]);
        let mut own = Vec::new();
        let mut opp = Vec::new();
        let mut actions = Vec::new();
        for _ in 0..20 {
            let a = meta.next_action(&own, &opp, &ctx(), &mut rng);
            actions.push(a);
            own.push(a);
            opp.push(C);
        }
        // Oracle: both members propose from turn 1 knowing only opp history.
        // TFT proposes C always (opp all C); Defector proposes D always.
        // Scores after t settled turns: TFT = 3t, Defector = 5t. From the
        // first settled turn Defector leads strictly, so turn 0 is C (tie,
        // nice-to-C tiebreak) and every later turn is D.
        let mut expected = vec![C];
        expected.extend(std::iter::repeat(D).take(19));
        assert_eq!(actions, expected);
    }
}
