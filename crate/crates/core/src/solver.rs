//! The trial loop: build a tour from the learned candidate values, improve it
//! with reinforced k-opt episodes until no episode finds a gain, keep the best.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{alpha_ranked, init_q, QTable, DEFAULT_CANDIDATES, DEFAULT_DENOMINATOR_FLOOR};
use crate::kopt::{apply_move, MoveState, Tour, MAX_DEPTH};
use crate::onetree::{
    alpha_values, minimum_one_tree, subgradient_ascent, AlphaTable, AscentConfig, PenalizedCost, Penalties,
    PI_SCALE,
};
use crate::policy::{
    reward, select_action, update_monte_carlo, update_q_learning, update_sarsa, Episode, Method, RLConfig,
    Strategy, StrategyState,
};
use crate::tsplib::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Trials per run; `None` means one per city.
    pub max_trials: Option<usize>,
    pub rl: RLConfig,
    pub seed: u64,
    /// Wall-clock budget in seconds, checked between episodes.
    pub time_limit: Option<f64>,
    /// Stop as soon as the instance's known optimum is reached.
    pub stop_at_optimum: bool,
    /// Candidates kept per city.
    pub candidates: usize,
    /// Nearest cities per row of the α table.
    pub neighborhood: usize,
    /// Deepest move (2..=5).
    pub max_depth: usize,
    pub ascent: AscentConfig,
    /// Run exactly one improvement pass per trial instead of looping to a local optimum.
    pub single_pass: bool,
    /// How the tour neighbour p2k+2 of a chosen city is picked.
    pub closing: ClosingRule,
    /// Lower bound on the α + d denominator of the initial Q-value.
    pub denominator_floor: f64,
    /// Re-verify tour validity and exact gains after every applied move.
    pub audit: bool,
    pub initial_tour: InitialTour,
}

/// Rule for choosing the removed edge (p2k+1, p2k+2) once p2k+1 is fixed.
/// At the deepest level every rule requires that the move can close into a tour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosingRule {
    /// Either tour neighbour not yet in the move, in random order.
    Free,
    /// A neighbour that lets the move close into a tour, else either neighbour.
    PreferClosable,
    /// Only neighbours that let the move close into a tour.
    Strict,
}

/// How each trial's starting tour is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialTour {
    /// Best-valued unvisited candidate, else the nearest unvisited city.
    Greedy,
    /// As `Greedy`, but an unvisited candidate joined to the current city in both
    /// the best and the previous best tour is taken first (at random if there are two).
    BestTourWalk,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_trials: None,
            rl: RLConfig::default(),
            seed: 1,
            time_limit: None,
            stop_at_optimum: true,
            candidates: DEFAULT_CANDIDATES,
            neighborhood: 20,
            max_depth: MAX_DEPTH,
            ascent: AscentConfig::default(),
            single_pass: false,
            closing: ClosingRule::Free,
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
            audit: false,
            initial_tour: InitialTour::BestTourWalk,
        }
    }
}

/// Per-instance work shared by every run: penalties and α-values.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub penalties: Penalties,
    pub alpha: AlphaTable,
    pub seconds: f64,
}

pub fn preprocess(inst: &Instance, cfg: &SolverConfig) -> Preprocessed {
    let start = Instant::now();
    let penalties = subgradient_ascent(inst, &cfg.ascent);
    let tree = minimum_one_tree(inst, &penalties);
    let alpha = alpha_values(inst, &penalties, &tree, cfg.neighborhood);
    Preprocessed { penalties, alpha, seconds: start.elapsed().as_secs_f64() }
}

/// The candidate table a run starts from under `cfg`'s strategy.
pub fn initial_table(inst: &Instance, pre: &Preprocessed, cfg: &SolverConfig) -> QTable {
    match cfg.rl.strategy {
        Strategy::AlphaBaseline => alpha_ranked(&pre.alpha, cfg.candidates),
        _ => init_q(inst, &pre.alpha, &pre.penalties, cfg.candidates, cfg.denominator_floor),
    }
}

/// Counters collected during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub episodes: u64,
    pub moves: u64,
    pub selections: u64,
    pub q_learning_updates: u64,
    pub sarsa_updates: u64,
    pub monte_carlo_updates: u64,
    pub missed_writes: u64,
    pub deepest_move: usize,
    /// Applied moves that failed re-verification (audit mode only).
    pub audit_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Local optimum reached in this trial.
    pub length: i64,
    /// Best length after this trial.
    pub best_length: i64,
    pub epsilon: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_tour: Vec<usize>,
    pub best_length: i64,
    pub trials_used: usize,
    pub wall_time: f64,
    pub reached_optimum: bool,
    pub timed_out: bool,
    pub trials: Vec<TrialRecord>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassOutcome {
    /// A move was applied; carries the drop in tour length.
    Improved(i64),
    /// Every directed tour edge was tried without success.
    Exhausted,
    TimedOut,
}

/// Mutable state of one run: the learned table, the random stream, ε and the
/// active update rule.
pub struct Search<'a> {
    inst: &'a Instance,
    cost: PenalizedCost<'a>,
    qt: QTable,
    rng: ChaCha8Rng,
    rl: RLConfig,
    eps: f64,
    strategy: StrategyState,
    max_depth: usize,
    closing: ClosingRule,
    audit: bool,
    deadline: Option<Instant>,
    stats: SearchStats,
    edges: Vec<(usize, usize)>,
    excluded: Vec<usize>,
}

impl<'a> Search<'a> {
    pub fn new(inst: &'a Instance, pen: &'a Penalties, qt: QTable, cfg: &SolverConfig) -> Self {
        assert!((2..=MAX_DEPTH).contains(&cfg.max_depth), "max_depth must lie in 2..={MAX_DEPTH}");
        Search {
            inst,
            cost: PenalizedCost::new(inst, pen),
            qt,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            eps: if cfg.rl.strategy.explores() { cfg.rl.epsilon } else { 0.0 },
            strategy: StrategyState::new(cfg.rl.strategy),
            rl: cfg.rl.clone(),
            max_depth: cfg.max_depth,
            closing: cfg.closing,
            audit: cfg.audit,
            deadline: cfg.time_limit.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))),
            stats: SearchStats::default(),
            edges: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn table(&self) -> &QTable {
        &self.qt
    }

    pub fn into_table(self) -> QTable {
        self.qt
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn set_epsilon(&mut self, eps: f64) {
        self.eps = eps;
    }

    pub fn strategy_state(&self) -> StrategyState {
        self.strategy
    }

    pub fn stats(&self) -> SearchStats {
        SearchStats { missed_writes: self.qt.missed_writes(), ..self.stats.clone() }
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Greedy construction from a random city: follow a candidate edge shared by
    /// all `guides`, else the best-valued unvisited candidate, else the nearest
    /// unvisited city.
    pub fn choose_initial_tour(&mut self, guides: &[&Tour]) -> Tour {
        let n = self.inst.dimension();
        let mut visited = vec![false; n];
        let mut cur = self.rng.gen_range(0..n);
        let mut order = Vec::with_capacity(n);
        visited[cur] = true;
        order.push(cur);
        while order.len() < n {
            let kept = guides.first().and_then(|g| {
                let (a, b) = g.neighbors(cur);
                let open: Vec<usize> = [a, b]
                    .into_iter()
                    .filter(|&c| {
                        !visited[c] && self.qt.contains(cur, c) && guides[1..].iter().all(|o| o.adjacent(cur, c))
                    })
                    .collect();
                match open.len() {
                    0 => None,
                    1 => Some(open[0]),
                    _ => Some(open[self.rng.gen_range(0..2)]),
                }
            });
            let next = kept.or_else(|| self.qt.candidates(cur).iter().map(|c| c.city).find(|&c| !visited[c])).unwrap_or_else(|| {
                (0..n).filter(|&c| !visited[c]).min_by_key(|&c| (self.inst.distance(cur, c), c)).unwrap()
            });
            visited[next] = true;
            order.push(next);
            cur = next;
        }
        Tour::new(order).expect("construction visits every city once")
    }

    /// Tries an episode from each directed tour edge in random order and
    /// applies the first improving move found.
    pub fn improvement_pass(&mut self, tour: &mut Tour) -> PassOutcome {
        let n = tour.len();
        self.edges.clear();
        for i in 0..n {
            let (a, b) = (tour.order()[i], tour.order()[(i + 1) % n]);
            self.edges.push((a, b));
            self.edges.push((b, a));
        }
        let mut edges = std::mem::take(&mut self.edges);
        edges.shuffle(&mut self.rng);
        let mut outcome = PassOutcome::Exhausted;
        for &(p1, p2) in &edges {
            if self.timed_out() {
                outcome = PassOutcome::TimedOut;
                break;
            }
            if let Some(ms) = self.episode(tour, p1, p2) {
                outcome = PassOutcome::Improved(self.apply(tour, &ms));
                break;
            }
        }
        self.edges = edges;
        outcome
    }

    fn apply(&mut self, tour: &mut Tour, ms: &MoveState) -> i64 {
        let gain = ms.close_gain(&self.cost);
        let before = if self.audit { tour.length(self.inst) } else { 0 };
        apply_move(tour, ms);
        self.stats.moves += 1;
        self.stats.deepest_move = self.stats.deepest_move.max(ms.depth());
        let drop = gain / PI_SCALE;
        if self.audit {
            let after = tour.length(self.inst);
            let exact = gain % PI_SCALE == 0 && before - after == drop;
            if !tour.is_valid() || !exact || drop <= 0 || ms.depth() > self.max_depth {
                self.stats.audit_failures += 1;
            }
        }
        drop
    }

    /// One reinforced k-opt attempt starting by removing tour edge (p1, p2).
    /// Returns a closed, improving move if one is found.
    pub fn episode(&mut self, tour: &Tour, p1: usize, p2: usize) -> Option<MoveState> {
        self.stats.episodes += 1;
        let learns = self.rl.strategy.learns();
        let method = self.strategy.method;
        let cost = self.cost;
        let mut ms = MoveState::start(p1, p2);
        let mut trajectory = Episode::default();
        let mut pending: Option<(usize, usize, f64)> = None;
        let mut found = None;
        loop {
            let k = ms.depth();
            if k >= 2 && ms.close_gain(&cost) > 0 && ms.is_feasible_close(tour) {
                found = Some(ms.clone());
                break;
            }
            if k >= self.max_depth {
                break;
            }
            let s = ms.last();
            let open = ms.open_gain(&cost);
            let last_level = k + 1 == self.max_depth;
            self.excluded.clear();
            let mut choice = None;
            while let Some(a) = select_action(&mut self.qt, s, &self.excluded, self.eps, &mut self.rng) {
                self.stats.selections += 1;
                if ms.touches(a) || tour.adjacent(s, a) || open - cost.scaled(s, a) <= 0 {
                    self.excluded.push(a);
                    continue;
                }
                let (x, y) = tour.neighbors(a);
                let pair = if self.rng.gen::<bool>() { [x, y] } else { [y, x] };
                let open = |b: usize| !ms.touches(b);
                let closable = |b: usize| open(b) && ms.is_feasible_with(tour, a, b);
                let picked = match self.closing {
                    _ if last_level => pair.into_iter().find(|&b| closable(b)),
                    ClosingRule::Free => pair.into_iter().find(|&b| open(b)),
                    ClosingRule::PreferClosable => {
                        pair.into_iter().find(|&b| closable(b)).or_else(|| pair.into_iter().find(|&b| open(b)))
                    }
                    ClosingRule::Strict => pair.into_iter().find(|&b| closable(b)),
                };
                if let Some(b) = picked {
                    choice = Some((a, b));
                    break;
                }
                self.excluded.push(a);
            }
            let Some((a, b)) = choice else { break };
            let points = ms.points();
            let r = reward(&cost, points[points.len() - 2], s, a);
            ms.extend(a, b, &cost);
            if learns {
                match method {
                    Method::QLearning => {
                        update_q_learning(&mut self.qt, s, a, r, b, &self.rl);
                        self.stats.q_learning_updates += 1;
                    }
                    Method::Sarsa => {
                        if let Some((ps, pa, pr)) = pending.take() {
                            update_sarsa(&mut self.qt, ps, pa, pr, Some((s, a)), &self.rl);
                            self.stats.sarsa_updates += 1;
                        }
                        pending = Some((s, a, r));
                    }
                    Method::MonteCarlo => trajectory.push(s, a, r),
                }
            }
        }
        if let Some((ps, pa, pr)) = pending {
            update_sarsa(&mut self.qt, ps, pa, pr, None, &self.rl);
            self.stats.sarsa_updates += 1;
        }
        if !trajectory.steps.is_empty() {
            update_monte_carlo(&mut self.qt, &trajectory);
            self.stats.monte_carlo_updates += trajectory.steps.len() as u64;
        }
        found
    }

    /// Builds a tour and improves it until a pass fails (or once, in single-pass
    /// mode). Stops early at `target` length. Returns the tour, its length and
    /// whether the deadline cut it short.
    pub fn run_trial(&mut self, guides: &[&Tour], single_pass: bool, target: Option<i64>) -> (Tour, i64, bool) {
        let mut tour = self.choose_initial_tour(guides);
        let mut length = tour.length(self.inst);
        loop {
            if target.is_some_and(|t| length <= t) {
                return (tour, length, false);
            }
            match self.improvement_pass(&mut tour) {
                PassOutcome::Improved(drop) => {
                    length -= drop;
                    if single_pass {
                        return (tour, length, false);
                    }
                }
                PassOutcome::Exhausted => return (tour, length, false),
                PassOutcome::TimedOut => return (tour, length, true),
            }
        }
    }

    /// Advances ε and the update rule by one trial.
    fn begin_trial(&mut self) {
        self.eps *= self.rl.beta;
    }

    fn end_trial(&mut self, improved: bool, max_num: usize) {
        if self.rl.strategy.learns() {
            self.strategy = self.strategy.step(improved, self.rl.strategy, max_num);
        }
    }
}

/// Runs the whole pipeline, preprocessing included.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> RunResult {
    let pre = preprocess(inst, cfg);
    solve_with(inst, &pre, cfg)
}

/// One seeded run on already preprocessed data.
pub fn solve_with(inst: &Instance, pre: &Preprocessed, cfg: &SolverConfig) -> RunResult {
    solve_with_table(inst, pre, cfg).0
}

/// As [`solve_with`], also returning the candidate table the run ended with.
pub fn solve_with_table(inst: &Instance, pre: &Preprocessed, cfg: &SolverConfig) -> (RunResult, QTable) {
    let start = Instant::now();
    let n = inst.dimension();
    let max_trials = cfg.max_trials.unwrap_or(n).max(1);
    let max_num = cfg.rl.switch_threshold(max_trials);
    let target = if cfg.stop_at_optimum { inst.known_optimum } else { None };
    let mut search = Search::new(inst, &pre.penalties, initial_table(inst, pre, cfg), cfg);

    let mut best: Option<(Tour, i64)> = None;
    let mut runner_up: Option<Tour> = None;
    let mut trials = Vec::with_capacity(max_trials);
    let mut timed_out = false;
    for _ in 0..max_trials {
        search.begin_trial();
        let eps = search.epsilon();
        let method = search.strategy_state().method;
        let guides: Vec<&Tour> = match cfg.initial_tour {
            InitialTour::BestTourWalk => best.iter().map(|b| &b.0).chain(runner_up.as_ref()).collect(),
            InitialTour::Greedy => Vec::new(),
        };
        let (tour, length, cut) = search.run_trial(&guides, cfg.single_pass, target);
        let improved = best.as_ref().is_none_or(|(_, b)| length < *b);
        if improved {
            runner_up = best.replace((tour, length)).map(|b| b.0);
        }
        let best_length = best.as_ref().map(|b| b.1).unwrap();
        trials.push(TrialRecord { length, best_length, epsilon: eps, method });
        search.end_trial(improved, max_num);
        if cut {
            timed_out = true;
            break;
        }
        if target.is_some_and(|t| best_length <= t) {
            break;
        }
    }
    let (tour, best_length) = best.expect("at least one trial");
    let result = RunResult {
        best_tour: tour.into_order(),
        best_length,
        trials_used: trials.len(),
        wall_time: start.elapsed().as_secs_f64(),
        reached_optimum: inst.known_optimum == Some(best_length),
        timed_out,
        trials,
        stats: search.stats(),
    };
    (result, search.into_table())
}
