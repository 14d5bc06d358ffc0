//! Tabular RL over candidate edges: rewards, ε-greedy selection, the three
//! update rules and the method switcher.
//!
//! A state is the free end p2k of a move under construction, an action is the
//! city p2k+1 it links to. The reward of a step is the penalized length of the
//! edge just removed minus that of the edge just added, so the rewards of an
//! episode telescope to the move's running gain.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::QTable;
use crate::onetree::PenalizedCost;

/// Which update rules a run uses and how it alternates between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Strategy {
    /// Cycle Q-learning, Sarsa, Monte Carlo on stagnation.
    Vsr,
    QOnly,
    SarsaOnly,
    McOnly,
    /// Cycle Q-learning and Sarsa.
    Td,
    /// Initial Q-values, never updated.
    FixQ,
    /// Candidates ordered by α alone, never updated, no exploration.
    AlphaBaseline,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Vsr,
        Strategy::QOnly,
        Strategy::SarsaOnly,
        Strategy::McOnly,
        Strategy::Td,
        Strategy::FixQ,
        Strategy::AlphaBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Vsr => "vsr",
            Strategy::QOnly => "q",
            Strategy::SarsaOnly => "sarsa",
            Strategy::McOnly => "mc",
            Strategy::Td => "td",
            Strategy::FixQ => "fixq",
            Strategy::AlphaBaseline => "alpha",
        }
    }

    /// Whether the strategy ever writes Q-values.
    pub fn learns(self) -> bool {
        !matches!(self, Strategy::FixQ | Strategy::AlphaBaseline)
    }

    /// Whether selection is ε-greedy; only the α baseline walks its list greedily.
    pub fn explores(self) -> bool {
        self != Strategy::AlphaBaseline
    }

    fn initial_method(self) -> Method {
        match self {
            Strategy::SarsaOnly => Method::Sarsa,
            Strategy::McOnly => Method::MonteCarlo,
            _ => Method::QLearning,
        }
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name().to_string()
    }
}

impl TryFrom<String> for Strategy {
    type Error = UnknownStrategy;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected one of vsr, q, sarsa, mc, td, fixq, alpha)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == key)
            .or(match key.as_str() {
                "q-only" | "qlearning" | "q-learning" => Some(Strategy::QOnly),
                "mc-only" | "montecarlo" | "monte-carlo" => Some(Strategy::McOnly),
                "sarsa-only" => Some(Strategy::SarsaOnly),
                "alpha-baseline" | "lkh" => Some(Strategy::AlphaBaseline),
                _ => None,
            })
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// The active update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    QLearning = 1,
    Sarsa = 2,
    MonteCarlo = 3,
}

impl Method {
    pub fn index(self) -> u8 {
        self as u8
    }

    fn from_index(m: u8) -> Self {
        match m {
            1 => Method::QLearning,
            2 => Method::Sarsa,
            _ => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLConfig {
    /// Initial exploration rate.
    pub epsilon: f64,
    /// Per-trial decay factor of ε.
    pub beta: f64,
    /// Learning rate.
    pub lambda: f64,
    /// Discount for the TD bootstraps.
    pub gamma: f64,
    pub strategy: Strategy,
    /// Non-improving trials before switching method; `None` derives it from the trial budget.
    pub max_num: Option<usize>,
}

impl Default for RLConfig {
    fn default() -> Self {
        RLConfig { epsilon: 0.4, beta: 0.99, lambda: 0.1, gamma: 0.9, strategy: Strategy::Vsr, max_num: None }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid RL parameter {name} = {value}: {reason}")]
pub struct ConfigError {
    pub name: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

impl RLConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |name, value: f64, ok: bool, reason| if ok { Ok(()) } else { Err(ConfigError { name, value, reason }) };
        check("epsilon", self.epsilon, (0.0..=1.0).contains(&self.epsilon), "must lie in [0, 1]")?;
        check("beta", self.beta, self.beta > 0.0 && self.beta <= 1.0, "must lie in (0, 1]")?;
        check("lambda", self.lambda, self.lambda > 0.0 && self.lambda < 1.0, "must lie in (0, 1)")?;
        check("gamma", self.gamma, (0.0..=1.0).contains(&self.gamma), "must lie in [0, 1]")?;
        if self.max_num == Some(0) {
            return Err(ConfigError { name: "max_num", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    /// Switch threshold for a run of `max_trials` trials: one twentieth, at least 1.
    pub fn switch_threshold(&self, max_trials: usize) -> usize {
        self.max_num.unwrap_or(max_trials / 20).max(1)
    }

    /// ε in effect during trial `i` (1-based): ε₀·βⁱ.
    pub fn epsilon_at(&self, trial: usize) -> f64 {
        self.epsilon * self.beta.powi(trial as i32)
    }
}

/// Reward for linking `state` to `action` after arriving over the removed edge
/// (`prev`, `state`). For the first step `prev` is p1.
pub fn reward(cost: &PenalizedCost<'_>, prev: usize, state: usize, action: usize) -> f64 {
    cost.cost(prev, state) - cost.cost(state, action)
}

/// Scaled variant of [`reward`], exact in fixed point.
pub fn reward_scaled(cost: &PenalizedCost<'_>, prev: usize, state: usize, action: usize) -> i64 {
    cost.scaled(prev, state) - cost.scaled(state, action)
}

/// ε-greedy choice among the candidates of `state` not in `excluded`.
/// Greedy ties go to the smaller city index. Exploration is uniform.
pub fn select_action<R: Rng + ?Sized>(
    qt: &mut QTable,
    state: usize,
    excluded: &[usize],
    eps: f64,
    rng: &mut R,
) -> Option<usize> {
    let explore = eps > 0.0 && rng.gen::<f64>() < eps;
    let cands = qt.candidates(state);
    let open = cands.iter().filter(|c| !excluded.contains(&c.city));
    if explore {
        let count = open.clone().count();
        if count == 0 {
            return None;
        }
        let pick = rng.gen_range(0..count);
        return open.clone().nth(pick).map(|c| c.city);
    }
    // lists are in (q desc, index asc) order, so the first open entry is the argmax
    open.map(|c| c.city).next()
}

/// Q(s,a) ← (1−λ)Q(s,a) + λ(r + γ·max_a' Q(s_next,a')).
pub fn update_q_learning(qt: &mut QTable, s: usize, a: usize, r: f64, s_next: usize, cfg: &RLConfig) {
    let Some(q) = qt.lookup(s, a) else {
        qt.record_miss();
        return;
    };
    let target = r + cfg.gamma * qt.max_q(s_next);
    qt.set_q(s, a, (1.0 - cfg.lambda) * q + cfg.lambda * target);
}

/// Q(s,a) ← (1−λ)Q(s,a) + λ(r + γ·Q(s_next,a_next)); `None` for a terminal step.
pub fn update_sarsa(qt: &mut QTable, s: usize, a: usize, r: f64, next: Option<(usize, usize)>, cfg: &RLConfig) {
    let Some(q) = qt.lookup(s, a) else {
        qt.record_miss();
        return;
    };
    let bootstrap = next.and_then(|(sn, an)| qt.lookup(sn, an)).unwrap_or(0.0);
    let target = r + cfg.gamma * bootstrap;
    qt.set_q(s, a, (1.0 - cfg.lambda) * q + cfg.lambda * target);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// The (state, action, reward) steps of one k-opt attempt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn push(&mut self, state: usize, action: usize, reward: f64) {
        self.steps.push(Step { state, action, reward });
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Undiscounted reward-to-go of every step.
    pub fn returns(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = 0.0;
        for (i, s) in self.steps.iter().enumerate().rev() {
            acc += s.reward;
            out[i] = acc;
        }
        out
    }
}

/// Replaces each visited Q(s_t,a_t) by the undiscounted return from step t.
pub fn update_monte_carlo(qt: &mut QTable, episode: &Episode) {
    for (step, g) in episode.steps.iter().zip(episode.returns()) {
        qt.set_q(step.state, step.action, g);
    }
}

/// Current update rule and the count of trials since the last improvement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyState {
    pub method: Method,
    pub num: usize,
}

impl StrategyState {
    pub fn new(strategy: Strategy) -> Self {
        StrategyState { method: strategy.initial_method(), num: 0 }
    }

    /// Called once per trial with whether the best tour improved in it.
    pub fn step(self, improved: bool, strategy: Strategy, max_num: usize) -> Self {
        if improved {
            return StrategyState { num: 0, ..self };
        }
        let num = self.num + 1;
        if num < max_num {
            return StrategyState { num, ..self };
        }
        let method = match strategy {
            Strategy::Vsr => Method::from_index(self.method.index() % 3 + 1),
            Strategy::Td => match self.method {
                Method::QLearning => Method::Sarsa,
                _ => Method::QLearning,
            },
            _ => self.method,
        };
        StrategyState { method, num: 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::Candidate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qt() -> QTable {
        let c = |city, q| Candidate { city, q };
        QTable::from_lists(vec![
            vec![c(1, 5.0), c(2, 1.0)],
            vec![c(0, 4.0), c(2, 1.0)],
            vec![c(0, 1.0), c(1, 1.0), c(3, 0.5), c(4, 0.25), c(5, 0.0)],
            vec![],
            vec![],
            vec![],
        ])
    }

    fn cfg() -> RLConfig {
        RLConfig { lambda: 0.1, gamma: 0.9, ..RLConfig::default() }
    }

    #[test]
    fn q_learning_identity() {
        let mut t = qt();
        update_q_learning(&mut t, 0, 1, 2.0, 1, &cfg());
        assert!((t.lookup(0, 1).unwrap() - 5.06).abs() < 1e-12);
    }

    #[test]
    fn sarsa_identity() {
        let mut t = qt();
        update_sarsa(&mut t, 0, 1, 2.0, Some((1, 2)), &cfg());
        assert!((t.lookup(0, 1).unwrap() - 4.79).abs() < 1e-12);
    }

    #[test]
    fn sarsa_terminal_and_argmax_cases() {
        let mut t = qt();
        update_sarsa(&mut t, 0, 1, 2.0, None, &cfg());
        assert!((t.lookup(0, 1).unwrap() - (0.9 * 5.0 + 0.2)).abs() < 1e-12);
        let mut a = qt();
        let mut b = qt();
        update_sarsa(&mut a, 0, 1, 2.0, Some((1, 0)), &cfg());
        update_q_learning(&mut b, 0, 1, 2.0, 1, &cfg());
        assert_eq!(a.lookup(0, 1), b.lookup(0, 1));
    }

    #[test]
    fn q_learning_fixed_point() {
        let mut t = qt();
        // Q(0,2) = 1 = r + 0.9 * 4 with r = -2.6
        update_q_learning(&mut t, 0, 2, -2.6, 1, &cfg());
        assert!((t.lookup(0, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_pair_is_a_counted_noop() {
        let mut t = qt();
        update_q_learning(&mut t, 0, 4, 1.0, 1, &cfg());
        update_sarsa(&mut t, 3, 0, 1.0, None, &cfg());
        assert_eq!(t.missed_writes(), 2);
        assert_eq!(t.lookup(0, 4), None);
    }

    #[test]
    fn monte_carlo_suffix_sums() {
        let mut t = qt();
        let mut ep = Episode::default();
        ep.push(0, 1, 2.0);
        ep.push(1, 2, -1.0);
        ep.push(2, 3, 3.0);
        update_monte_carlo(&mut t, &ep);
        assert_eq!(t.lookup(0, 1), Some(4.0));
        assert_eq!(t.lookup(1, 2), Some(2.0));
        assert_eq!(t.lookup(2, 3), Some(3.0));
        let mut one = Episode::default();
        one.push(0, 2, -7.5);
        update_monte_carlo(&mut t, &one);
        assert_eq!(t.lookup(0, 2), Some(-7.5));
    }

    #[test]
    fn greedy_and_exhausted_selection() {
        let mut t = qt();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_action(&mut t, 2, &[], 0.0, &mut rng), Some(0));
        assert_eq!(select_action(&mut t, 2, &[0], 0.0, &mut rng), Some(1));
        assert_eq!(select_action(&mut t, 2, &[0, 1, 3, 4, 5], 0.5, &mut rng), None);
        assert_eq!(select_action(&mut t, 3, &[], 1.0, &mut rng), None);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut t = qt();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 6];
        let draws = 10_000;
        for _ in 0..draws {
            counts[select_action(&mut t, 2, &[], 1.0, &mut rng).unwrap()] += 1;
        }
        let expected = draws as f64 / 5.0;
        let chi2: f64 = [0, 1, 3, 4, 5].iter().map(|&c| (counts[c] as f64 - expected).powi(2) / expected).sum();
        // 4 degrees of freedom, 99.9th percentile
        assert!(chi2 < 18.47, "chi2 = {chi2}, counts = {counts:?}");
        assert_eq!(counts[2], 0);
    }

    #[test]
    fn strategy_cycles() {
        let st = StrategyState { method: Method::MonteCarlo, num: 2 };
        assert_eq!(st.step(false, Strategy::Vsr, 3), StrategyState { method: Method::QLearning, num: 0 });
        let td = StrategyState { method: Method::Sarsa, num: 0 };
        assert_eq!(td.step(false, Strategy::Td, 1).method, Method::QLearning);
        let mut s = StrategyState::new(Strategy::Vsr);
        for _ in 0..100 {
            s = s.step(true, Strategy::Vsr, 1);
        }
        assert_eq!(s, StrategyState { method: Method::QLearning, num: 0 });
        let pinned = StrategyState::new(Strategy::SarsaOnly).step(false, Strategy::SarsaOnly, 1);
        assert_eq!(pinned.method, Method::Sarsa);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("dqn".parse::<Strategy>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RLConfig::default().validate().is_ok());
        assert!(RLConfig { lambda: 1.0, ..RLConfig::default() }.validate().is_err());
        assert!(RLConfig { epsilon: 1.5, ..RLConfig::default() }.validate().is_err());
        assert_eq!(RLConfig::default().switch_threshold(52), 2);
        assert_eq!(RLConfig::default().switch_threshold(10), 1);
    }
}
