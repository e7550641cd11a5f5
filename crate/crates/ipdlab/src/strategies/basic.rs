//! Simple deterministic and stochastic strategies: the classics, grudgers,
//! end-game cheaters, hunters and ratio players.
//!
//! Parameters the source descriptions leave open (grudge lengths, hunter
//! windows, ratio schemes) are fixed here and recorded in the registry
//! manifest.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{MatchContext, Player};
use crate::engine::Action::{self, C, D};

pub struct Cooperator;

impl Player for Cooperator {
    fn next_action(&mut self, _: &[Action], _: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        C
    }
}

pub struct Defector;

impl Player for Defector {
    fn next_action(&mut self, _: &[Action], _: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        D
    }
}

/// Cooperates with probability `p_c`, independently each turn.
pub struct RandomPlayer {
    pub p_c: f64,
}

impl Player for RandomPlayer {
    fn next_action(&mut self, _: &[Action], _: &[Action], _: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        if rng.gen::<f64>() < self.p_c {
            C
        } else {
            D
        }
    }
}

/// Repeats a fixed cycle of actions; the Alternator is the `CD` cycle.
pub struct CyclerPlayer {
    pub cycle: Vec<Action>,
}

impl Player for CyclerPlayer {
    fn next_action(&mut self, own: &[Action], _: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.cycle[own.len() % self.cycle.len()]
    }
}

pub struct TitForTat;

impl Player for TitForTat {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        opp.last().copied().unwrap_or(C)
    }
}

pub struct SuspiciousTitForTat;

impl Player for SuspiciousTitForTat {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        opp.last().copied().unwrap_or(D)
    }
}

/// Defects only after two consecutive opponent defections.
pub struct TitForTwoTats;

impl Player for TitForTwoTats {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        if opp.len() >= 2 && opp[opp.len() - 1] == D && opp[opp.len() - 2] == D {
            D
        } else {
            C
        }
    }
}

/// Defects if the opponent defected on either of the last two turns.
pub struct TwoTitsForTat;

impl Player for TwoTitsForTat {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        if opp.iter().rev().take(2).any(|&a| a == D) {
            D
        } else {
            C
        }
    }
}

/// Defects if the opponent defected at least twice within the last three turns.
pub struct HardTitForTwoTats;

impl Player for HardTitForTwoTats {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        let recent_d = opp.iter().rev().take(3).filter(|&&a| a == D).count();
        if recent_d >= 2 {
            D
        } else {
            C
        }
    }
}

/// Tit For Tat that turns into a permanent defector once the opponent defects
/// twice in a row.
#[derive(Default)]
pub struct SpitefulTitForTat {
    spiteful: bool,
    seen: usize,
}

impl Player for SpitefulTitForTat {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        let start = self.seen.saturating_sub(1);
        self.spiteful |= opp[start..].windows(2).any(|w| w == [D, D]);
        self.seen = opp.len();
        if self.spiteful {
            D
        } else {
            opp.last().copied().unwrap_or(C)
        }
    }
}

/// Cooperates until the opponent's first defection, then defects forever.
#[derive(Default)]
pub struct Grudger {
    seen: usize,
    grudged: bool,
}

impl Player for Grudger {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.grudged |= opp[self.seen..].contains(&D);
        self.seen = opp.len();
        if self.grudged {
            D
        } else {
            C
        }
    }
}

/// Grudger whose grudge lasts `mem_length` turns, after which the slate is
/// wiped clean.
pub struct ForgetfulGrudger {
    pub mem_length: u32,
    /// Grudge turns still to serve at the entry of the next unreplayed turn.
    remaining: u32,
    turns_replayed: usize,
}

impl ForgetfulGrudger {
    pub fn new(mem_length: u32) -> Self {
        ForgetfulGrudger {
            mem_length,
            remaining: 0,
            turns_replayed: 0,
        }
    }
}

impl Player for ForgetfulGrudger {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        for i in self.turns_replayed..opp.len() {
            if self.remaining > 0 {
                self.remaining -= 1;
            } else if i > 0 && opp[i - 1] == D {
                self.remaining = self.mem_length - 1;
            }
        }
        self.turns_replayed = opp.len();
        if self.remaining > 0 || opp.last() == Some(&D) {
            D
        } else {
            C
        }
    }
}

/// Tolerates a single defection; defects forever after the second.
#[derive(Default)]
pub struct FoolMeOnce {
    seen: usize,
    opp_defections: u32,
}

impl Player for FoolMeOnce {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.opp_defections += opp[self.seen..].iter().filter(|&&a| a == D).count() as u32;
        self.seen = opp.len();
        if self.opp_defections >= 2 {
            D
        } else {
            C
        }
    }
}

/// Fool Me Once with a fading memory: every `forget_after` consecutive
/// opponent cooperations erase one remembered defection.
pub struct ForgetfulFoolMeOnce {
    pub forget_after: u32,
    remembered: u32,
    coop_streak: u32,
    seen: usize,
}

impl ForgetfulFoolMeOnce {
    pub fn new(forget_after: u32) -> Self {
        ForgetfulFoolMeOnce {
            forget_after,
            remembered: 0,
            coop_streak: 0,
            seen: 0,
        }
    }
}

impl Player for ForgetfulFoolMeOnce {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        for &a in &opp[self.seen..] {
            match a {
                D => {
                    self.remembered += 1;
                    self.coop_streak = 0;
                }
                C => {
                    self.coop_streak += 1;
                    if self.coop_streak >= self.forget_after && self.remembered > 0 && self.remembered < 2 {
                        self.remembered -= 1;
                        self.coop_streak = 0;
                    }
                }
            }
        }
        self.seen = opp.len();
        if self.remembered >= 2 {
            D
        } else {
            C
        }
    }
}

/// Defects until the opponent's first defection, then cooperates forever.
/// Registered twice, as EasyGo and as Fool Me Forever.
#[derive(Default)]
pub struct EasyGo {
    seen: usize,
    provoked: bool,
}

impl Player for EasyGo {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.provoked |= opp[self.seen..].contains(&D);
        self.seen = opp.len();
        if self.provoked {
            C
        } else {
            D
        }
    }
}

/// Forgives the first three defections, defects forever after the fourth,
/// and defects unconditionally on the last two rounds when the length is
/// known.
#[derive(Default)]
pub struct BackStabber {
    seen: usize,
    opp_defections: u32,
}

impl BackStabber {
    fn update(&mut self, opp: &[Action]) {
        self.opp_defections += opp[self.seen..].iter().filter(|&&a| a == D).count() as u32;
        self.seen = opp.len();
    }

    fn end_game(own_len: usize, ctx: &MatchContext) -> bool {
        match ctx.turns_total {
            Some(n) => own_len as u32 + 2 > n,
            None => false,
        }
    }
}

impl Player for BackStabber {
    fn next_action(&mut self, own: &[Action], opp: &[Action], ctx: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.update(opp);
        if Self::end_game(own.len(), ctx) || self.opp_defections > 3 {
            D
        } else {
            C
        }
    }
}

/// BackStabber that fully trusts an opponent who kept clean for the first
/// six rounds, cooperating until the final two rounds regardless of later
/// defections.
#[derive(Default)]
pub struct DoubleCrosser {
    inner: BackStabber,
    trusted: Option<bool>,
}

impl Player for DoubleCrosser {
    fn next_action(&mut self, own: &[Action], opp: &[Action], ctx: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        if self.trusted.is_none() && opp.len() >= 6 {
            self.trusted = Some(opp[..6].iter().all(|&a| a == C));
        }
        if self.trusted == Some(true) {
            if BackStabber::end_game(own.len(), ctx) {
                D
            } else {
                C
            }
        } else {
            self.inner.next_action(own, opp, ctx, rng)
        }
    }
}

/// Plays the opposite of the opponent's last action; opens with a defection.
pub struct Bully;

impl Player for Bully {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        opp.last().map(|a| a.flip()).unwrap_or(D)
    }
}

/// Defects with probability `(1000 - turn) / 1000`, so it slowly softens.
pub struct BetterAndBetter;

impl Player for BetterAndBetter {
    fn next_action(&mut self, own: &[Action], _: &[Action], _: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        let turn = own.len() as f64 + 1.0;
        if rng.gen::<f64>() < (1000.0 - turn) / 1000.0 {
            D
        } else {
            C
        }
    }
}

/// Defects, but dangles a cooperation when the opponent has cooperated before
/// and has just defected three times in a row.
pub struct TrickyDefector;

impl Player for TrickyDefector {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        let ever_cooperated = opp.contains(&C);
        let last3_d = opp.len() >= 3 && opp[opp.len() - 3..].iter().all(|&a| a == D);
        if ever_cooperated && last3_d {
            C
        } else {
            D
        }
    }
}

/// Grudger that opens with three defections of its own.
#[derive(Default)]
pub struct Aggravater {
    inner: Grudger,
}

impl Player for Aggravater {
    fn next_action(&mut self, own: &[Action], opp: &[Action], ctx: &MatchContext, rng: &mut ChaCha12Rng) -> Action {
        if own.len() < 3 {
            // Keep the grudge counter in sync even while opening.
            let _ = self.inner.next_action(own, opp, ctx, rng);
            D
        } else {
            self.inner.next_action(own, opp, ctx, rng)
        }
    }
}

/// Defects on turns 1-5, cooperates on turns 6-7, then defects forever if the
/// opponent defected on both turn 6 and turn 7, else cooperates forever.
pub struct GradualKiller;

impl Player for GradualKiller {
    fn next_action(&mut self, own: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        match own.len() {
            0..=4 => D,
            5 | 6 => C,
            _ => {
                if opp[5] == D && opp[6] == D {
                    D
                } else {
                    C
                }
            }
        }
    }
}

/// Opens D, D, C, C; if the opponent cooperated on turns 2 and 3 it defects
/// forever (the opponent forgives too easily), otherwise plays Tit For Tat.
pub struct HardProber;

impl Player for HardProber {
    fn next_action(&mut self, own: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        const OPENING: [Action; 4] = [D, D, C, C];
        let t = own.len();
        if t < 4 {
            return OPENING[t];
        }
        if opp[1] == C && opp[2] == C {
            D
        } else {
            opp[t - 1]
        }
    }
}

/// Mood strategy: turns grumpy (all-D) when the opponent's net defection
/// count exceeds `grumpy_threshold`, and nice again below `nice_threshold`.
pub struct Grumpy {
    pub grumpy_threshold: i32,
    pub nice_threshold: i32,
    grumpy: bool,
    net: i32,
    seen: usize,
}

impl Grumpy {
    pub fn new(grumpy_threshold: i32, nice_threshold: i32) -> Self {
        Grumpy {
            grumpy_threshold,
            nice_threshold,
            grumpy: false,
            net: 0,
            seen: 0,
        }
    }
}

impl Player for Grumpy {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        for &a in &opp[self.seen..] {
            self.net += if a == D { 1 } else { -1 };
        }
        self.seen = opp.len();
        if self.grumpy && self.net < self.nice_threshold {
            self.grumpy = false;
        } else if !self.grumpy && self.net > self.grumpy_threshold {
            self.grumpy = true;
        }
        if self.grumpy {
            D
        } else {
            C
        }
    }
}

/// Judges only the last `window` opponent moves: defect when defections lead
/// by three, cooperate when cooperations lead by three, otherwise Tit For Tat.
pub struct ShortMem {
    pub window: usize,
}

impl Player for ShortMem {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        if opp.len() < self.window {
            return opp.last().copied().unwrap_or(C);
        }
        let recent = &opp[opp.len() - self.window..];
        let coops = recent.iter().filter(|&&a| a == C).count() as i32;
        let defs = self.window as i32 - coops;
        if defs - coops >= 3 {
            D
        } else if coops - defs >= 3 {
            C
        } else {
            opp.last().copied().unwrap_or(C)
        }
    }
}

/// Steers its own cooperation-to-defection ratio towards a mathematical
/// constant: cooperate while `#C / max(#D, 1)` is at most the constant.
pub struct RatioConstant {
    pub constant: f64,
    own_c: u32,
    own_d: u32,
    seen: usize,
}

impl RatioConstant {
    pub fn new(constant: f64) -> Self {
        RatioConstant {
            constant,
            own_c: 0,
            own_d: 0,
            seen: 0,
        }
    }
}

impl Player for RatioConstant {
    fn next_action(&mut self, own: &[Action], _: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        for &a in &own[self.seen..] {
            match a {
                C => self.own_c += 1,
                D => self.own_d += 1,
            }
        }
        self.seen = own.len();
        let ratio = f64::from(self.own_c) / f64::from(self.own_d.max(1));
        if ratio <= self.constant {
            C
        } else {
            D
        }
    }
}

/// What a hunter is waiting to see before defecting forever.
pub enum HuntRule {
    /// Opponent has only defected, for at least 4 turns.
    AllDefections,
    /// Opponent has only cooperated, for at least 4 turns.
    AllCooperations,
    /// Opponent has strictly alternated for at least 6 turns.
    Alternating,
    /// Opponent is periodic with period at most 5 over at least 10 turns.
    Cyclic,
    /// Opponent transition rates look random over at least 15 turns.
    RandomLike,
}

/// Cooperates until its prey is identified, then defects forever.
pub struct Hunter {
    rule: HuntRule,
    hunted: bool,
    seen: usize,
    all_c: bool,
    all_d: bool,
    /// `period_ok[p-1]`: opp history still consistent with period p.
    period_ok: [bool; 5],
    // Transition counts after an opponent C / D.
    after_c: (u32, u32),
    after_d: (u32, u32),
}

impl Hunter {
    pub fn new(rule: HuntRule) -> Self {
        Hunter {
            rule,
            hunted: false,
            seen: 0,
            all_c: true,
            all_d: true,
            period_ok: [true; 5],
            after_c: (0, 0),
            after_d: (0, 0),
        }
    }

    fn update(&mut self, opp: &[Action]) {
        for t in self.seen..opp.len() {
            let a = opp[t];
            self.all_c &= a == C;
            self.all_d &= a == D;
            for p in 1..=5usize {
                if t >= p {
                    self.period_ok[p - 1] &= opp[t] == opp[t - p];
                }
            }
            if t >= 1 {
                let counts = if opp[t - 1] == C {
                    &mut self.after_c
                } else {
                    &mut self.after_d
                };
                if a == C {
                    counts.0 += 1;
                } else {
                    counts.1 += 1;
                }
            }
            // The latch can fire at any intermediate history length.
            if !self.hunted && self.detect(t + 1) {
                self.hunted = true;
            }
        }
        self.seen = opp.len();
    }

    fn detect(&self, len: usize) -> bool {
        match self.rule {
            HuntRule::AllDefections => len >= 4 && self.all_d,
            HuntRule::AllCooperations => len >= 4 && self.all_c,
            HuntRule::Alternating => len >= 6 && self.period_ok[1] && !self.period_ok[0],
            HuntRule::Cyclic => len >= 10 && self.period_ok.iter().any(|&ok| ok),
            HuntRule::RandomLike => {
                let balanced = |(c, d): (u32, u32)| {
                    let total = c + d;
                    total >= 4 && {
                        let rate = f64::from(c) / f64::from(total);
                        (0.25..=0.75).contains(&rate)
                    }
                };
                len >= 15 && balanced(self.after_c) && balanced(self.after_d)
            }
        }
    }
}

impl Player for Hunter {
    fn next_action(&mut self, _: &[Action], opp: &[Action], _: &MatchContext, _: &mut ChaCha12Rng) -> Action {
        self.update(opp);
        if !self.hunted && self.detect(opp.len()) {
            self.hunted = true;
        }
        if self.hunted {
            D
        } else {
            C
        }
    }
}
