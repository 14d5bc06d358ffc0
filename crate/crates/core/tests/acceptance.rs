//! Acceptance run: prints one PASS/FAIL line per criterion.
//!
//! Instances are looked up in `$TSPLIB_DIR` first, then in the bundled data
//! directory. A criterion whose instances cannot be found is reported as FAIL
//! with the missing names; it does not fail the process, since that outcome
//! says nothing about the code. Any other FAIL exits nonzero.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_optimum, data_dir, forced_alpha, random_instance};
use rlkopt::bench::{run_suite, SuiteConfig};
use rlkopt::policy::{reward_scaled, update_monte_carlo, update_q_learning, update_sarsa, Episode, Method};
use rlkopt::solver::{initial_table, PassOutcome};
use rlkopt::{
    alpha_values, load_instance, minimum_one_tree, preprocess, solve, subgradient_ascent, AscentConfig, Candidate,
    Instance, KnownOptima, MoveState, PenalizedCost, Penalties, QTable, RLConfig, Search, SolverConfig, Strategy,
    StrategyState, Tour, PI_SCALE,
};

enum Verdict {
    Pass,
    Fail,
    /// Required instances are not available offline.
    Unavailable,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail, notes: Vec::new() }
    }
}

fn search_dirs() -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os("TSPLIB_DIR") {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(data_dir());
    dirs
}

fn find(name: &str) -> Option<Instance> {
    let optima = KnownOptima::bundled();
    search_dirs().iter().map(|d| d.join(format!("{name}.tsp"))).find(|p| p.exists()).map(|p| {
        let mut inst = load_instance(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        optima.annotate(&mut inst);
        inst
    })
}

/// Loads every named instance, or returns the names that are missing.
fn find_all(names: &[&str]) -> Result<Vec<Instance>, Vec<String>> {
    let found: Vec<_> = names.iter().map(|n| (n, find(n))).collect();
    let missing: Vec<String> = found.iter().filter(|(_, i)| i.is_none()).map(|(n, _)| n.to_string()).collect();
    if missing.is_empty() {
        Ok(found.into_iter().map(|(_, i)| i.unwrap()).collect())
    } else {
        Err(missing)
    }
}

fn unavailable(missing: Vec<String>, notes: Vec<String>) -> Outcome {
    Outcome { verdict: Verdict::Unavailable, detail: format!("instances not available: {}", missing.join(", ")), notes }
}

fn suite(strategies: &[Strategy]) -> SuiteConfig {
    SuiteConfig { strategies: strategies.to_vec(), runs: 10, base_seed: 1, ..SuiteConfig::default() }
}

fn small_instance_optimality() -> Outcome {
    let expected = [("eil51", 426), ("berlin52", 7542), ("st70", 675), ("eil76", 538), ("pr76", 108159)];
    let mut notes = Vec::new();
    let mut missing = Vec::new();
    let mut all_ok = true;
    for (name, opt) in expected {
        let Some(mut inst) = find(name) else {
            missing.push(name.to_string());
            continue;
        };
        inst.known_optimum = Some(opt);
        let r = &run_suite(std::slice::from_ref(&inst), &suite(&[Strategy::Vsr])).reports[0];
        let ok = r.success == 10;
        all_ok &= ok;
        notes.push(format!("{name}: {}/10 reached {opt} (best {}, worst {}, {:.2}s/run)", r.success, r.best, r.worst, r.mean_time));
    }
    if !all_ok {
        return Outcome { verdict: Verdict::Fail, detail: "not every run reached the optimum".into(), notes };
    }
    if !missing.is_empty() {
        return unavailable(missing, notes);
    }
    Outcome { verdict: Verdict::Pass, detail: "all runs optimal on all five instances".into(), notes }
}

fn medium_instance_quality() -> Outcome {
    let instances = match find_all(&["kroB150", "d493"]) {
        Ok(v) => v,
        Err(missing) => return unavailable(missing, Vec::new()),
    };
    let result = run_suite(&instances, &suite(&[Strategy::Vsr]));
    let (kro, d) = (&result.reports[0], &result.reports[1]);
    let kro_ok = kro.best == 26130 && kro.success >= 5;
    let d_ok = d.average == 35002.0 && d.success + 3 >= 10;
    Outcome::check(
        kro_ok && d_ok,
        format!(
            "kroB150 best {} ({}/10), d493 average {:.1} ({}/10)",
            kro.best, kro.success, d.average, d.success
        ),
    )
}

/// Sum over instances of the mean gap, per strategy, in the order given.
fn cumulative_gaps(instances: &[Instance], strategies: &[Strategy]) -> Vec<f64> {
    let result = run_suite(instances, &suite(strategies));
    strategies
        .iter()
        .map(|s| result.reports.iter().filter(|r| r.strategy == *s).map(|r| r.gap.unwrap_or(f64::NAN)).sum())
        .collect()
}

fn ordering_holds(g: &[f64]) -> bool {
    // g = [vsr, q-only, fixq, alpha]
    g[0] <= g[1] && g[1] <= g[3] && g[2] <= g[3]
}

fn describe(g: &[f64]) -> String {
    format!("vsr {:.4}%, q {:.4}%, fixq {:.4}%, alpha {:.4}%", 100.0 * g[0], 100.0 * g[1], 100.0 * g[2], 100.0 * g[3])
}

fn ablation_ordering() -> Outcome {
    let strategies = [Strategy::Vsr, Strategy::QOnly, Strategy::FixQ, Strategy::AlphaBaseline];
    match find_all(&["kroB150", "rat195", "pr299", "d493", "att532", "rat575"]) {
        Ok(instances) => {
            let g = cumulative_gaps(&instances, &strategies);
            Outcome::check(ordering_holds(&g), format!("cumulative gap {}", describe(&g)))
        }
        Err(missing) => {
            // same comparison on the medium instances that are bundled, reported for information only
            let bundled = find_all(&["pcb442", "att532"]).expect("bundled instances");
            let g = cumulative_gaps(&bundled, &strategies);
            let note = format!(
                "substitute suite {{pcb442, att532}}: {} -> ordering {}",
                describe(&g),
                if ordering_holds(&g) { "holds" } else { "does not hold" }
            );
            unavailable(missing, vec![note])
        }
    }
}

fn brute_force_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    let mut notes = Vec::new();
    for case in 0..50 {
        let n = rng.gen_range(5..=9);
        let inst = random_instance(&mut rng, n, 1000);
        let opt = brute_force_optimum(&inst);
        let pre = preprocess(&inst, &SolverConfig::default());
        let best = (1..=10)
            .map(|seed| rlkopt::solve_with(&inst, &pre, &SolverConfig { seed, ..SolverConfig::default() }).best_length)
            .min()
            .unwrap();
        if best == opt {
            agree += 1;
        } else {
            notes.push(format!("case {case} (n={n}): solver {best}, optimum {opt}"));
        }
    }
    Outcome { notes, ..Outcome::check(agree == 50, format!("{agree}/50 random instances solved to the exhaustive optimum")) }
}

fn lower_bound_soundness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut count = 0;
    let mut dirs = search_dirs();
    dirs.dedup();
    let mut seen = std::collections::BTreeSet::new();
    for dir in dirs {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths.into_iter().filter(|p| p.extension().is_some_and(|x| x == "tsp")) {
            let Ok(mut inst) = load_instance(&p) else { continue };
            KnownOptima::bundled().annotate(&mut inst);
            let Some(opt) = inst.known_optimum else { continue };
            if !seen.insert(inst.name.clone()) {
                continue;
            }
            let w = subgradient_ascent(&inst, &AscentConfig::default());
            let w0 = Penalties::zero(&inst);
            let good = w.w_scaled() <= opt * PI_SCALE && w.w_scaled() >= w0.w_scaled();
            ok &= good;
            count += 1;
            notes.push(format!("{}: w(0) {:.1} <= w(pi) {:.1} <= {opt}: {good}", inst.name, w0.w(), w.w()));
        }
    }
    Outcome { notes, ..Outcome::check(ok && count > 0, format!("{count} instances with known optima")) }
}

fn alpha_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..50 {
        let n = rng.gen_range(3..=10);
        let inst = random_instance(&mut rng, n, 500);
        let pen = subgradient_ascent(&inst, &AscentConfig::default());
        let tree = minimum_one_tree(&inst, &pen);
        let alpha = alpha_values(&inst, &pen, &tree, 20);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                checked += 1;
                if alpha.get_scaled(i, j) != Some(forced_alpha(&inst, pen.pi_scaled(), tree.special(), i, j)) {
                    mismatches += 1;
                }
            }
        }
    }
    Outcome::check(mismatches == 0, format!("{checked} α values, {mismatches} mismatches"))
}

fn update_identities() -> Outcome {
    let cfg = RLConfig::default();
    let table = || {
        QTable::from_lists(vec![
            vec![Candidate { city: 1, q: 5.0 }],
            vec![Candidate { city: 2, q: 4.0 }, Candidate { city: 0, q: 1.0 }],
            vec![Candidate { city: 0, q: 0.0 }],
        ])
    };
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let mut q = table();
    update_q_learning(&mut q, 0, 1, 2.0, 1, &cfg);
    let ql = q.lookup(0, 1).unwrap();
    let mut s = table();
    update_sarsa(&mut s, 0, 1, 2.0, Some((1, 0)), &cfg);
    let sa = s.lookup(0, 1).unwrap();
    let mut m = table();
    let mut ep = Episode::default();
    ep.push(0, 1, 2.0);
    ep.push(1, 2, -1.0);
    ep.push(2, 0, 3.0);
    update_monte_carlo(&mut m, &ep);
    let mc = [m.lookup(0, 1).unwrap(), m.lookup(1, 2).unwrap(), m.lookup(2, 0).unwrap()];

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut telescoping = 0;
    for _ in 0..500 {
        let n = rng.gen_range(8..40);
        let inst = random_instance(&mut rng, n, 300);
        let pi = (0..n).map(|_| rng.gen_range(-5000..5000)).collect();
        let pen = Penalties::from_scaled(&inst, pi);
        let cost = PenalizedCost::new(&inst, &pen);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let tour = Tour::new(order).unwrap();
        let mut ms = MoveState::start(0, tour.next(0));
        let mut sum = 0;
        while ms.depth() < 5 {
            let open: Vec<usize> = (0..n).filter(|&a| !ms.touches(a) && !tour.adjacent(ms.last(), a)).collect();
            let Some(&a) = open.choose(&mut rng) else { break };
            let b = tour.prev(a);
            if ms.touches(b) {
                break;
            }
            let p = ms.points();
            sum += reward_scaled(&cost, p[p.len() - 2], ms.last(), a);
            ms.extend(a, b, &cost);
        }
        telescoping += (sum == ms.gain_sum()) as usize;
    }
    let ok = close(ql, 5.06) && close(sa, 4.79) && mc == [4.0, 2.0, 3.0] && telescoping == 500;
    Outcome::check(
        ok,
        format!("q-learning {ql}, sarsa {sa}, monte carlo {mc:?}, telescoping {telescoping}/500 episodes"),
    )
}

fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut violations = Vec::new();
    let mut moves = 0;
    for case in 0..60 {
        let n = rng.gen_range(6..120);
        let inst = random_instance(&mut rng, n, 2000);
        let strategy = Strategy::ALL[case % Strategy::ALL.len()];
        let cfg = SolverConfig {
            seed: rng.gen(),
            max_trials: Some(12),
            stop_at_optimum: false,
            audit: true,
            rl: RLConfig { strategy, ..RLConfig::default() },
            ..SolverConfig::default()
        };

        let pre = preprocess(&inst, &cfg);
        let mut search = Search::new(&inst, &pre.penalties, initial_table(&inst, &pre, &cfg), &cfg);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut tour = Tour::new(order).unwrap();
        let mut len = tour.length(&inst);
        while let PassOutcome::Improved(drop) = search.improvement_pass(&mut tour) {
            moves += 1;
            let now = tour.length(&inst);
            if !tour.is_valid() || drop <= 0 || len - now != drop {
                violations.push(format!("case {case}: move of gain {drop} took {len} to {now}"));
            }
            len = now;
        }
        if search.stats().deepest_move > 5 || search.stats().audit_failures > 0 {
            violations.push(format!("case {case}: {:?}", search.stats()));
        }

        let a = solve(&inst, &cfg);
        let b = solve(&inst, &cfg);
        if a.best_tour != b.best_tour || a.trials != b.trials {
            violations.push(format!("case {case}: same seed, different runs"));
        }
        for (i, t) in a.trials.iter().enumerate() {
            let expected = if strategy.explores() { cfg.rl.epsilon * cfg.rl.beta.powi(i as i32 + 1) } else { 0.0 };
            if (t.epsilon - expected).abs() > 1e-12 {
                violations.push(format!("case {case}: trial {i} epsilon {}", t.epsilon));
            }
        }
        if a.stats.audit_failures > 0 || inst.tour_length(&a.best_tour) != a.best_length {
            violations.push(format!("case {case}: audited run inconsistent"));
        }
    }
    let mut st = StrategyState::new(Strategy::Vsr);
    let mut cycle = vec![st.method];
    for _ in 0..9 {
        st = st.step(false, Strategy::Vsr, 1);
        cycle.push(st.method);
    }
    let expected: Vec<Method> =
        [Method::QLearning, Method::Sarsa, Method::MonteCarlo].into_iter().cycle().take(10).collect();
    if cycle != expected {
        violations.push(format!("strategy cycle {cycle:?}"));
    }
    Outcome {
        notes: violations.iter().take(5).cloned().collect(),
        ..Outcome::check(violations.is_empty(), format!("60 randomized workloads, {moves} audited moves, {} violations", violations.len()))
    }
}

fn large_instance_smoke() -> Outcome {
    let Some(inst) = find("pr2392") else { return unavailable(vec!["pr2392".into()], Vec::new()) };
    let cfg = SolverConfig { time_limit: Some(10.0), ..SolverConfig::default() };
    let r = solve(&inst, &cfg);
    let valid = Tour::new(r.best_tour.clone()).is_ok() && inst.tour_length(&r.best_tour) == r.best_length;
    let monotone = r.trials.windows(2).all(|w| w[1].best_length <= w[0].best_length);
    Outcome::check(
        valid && monotone,
        format!(
            "pr2392 under a 10s limit: best {} after {} trials (optimum {}), valid tour {valid}, nonincreasing best {monotone}",
            r.best_length,
            r.trials_used,
            inst.known_optimum.map_or("-".into(), |o| o.to_string())
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 small-instance optimality", small_instance_optimality),
        ("2 medium hard-instance quality", medium_instance_quality),
        ("3 ablation ordering", ablation_ordering),
        ("4 brute-force oracle equivalence", brute_force_equivalence),
        ("5 lower-bound soundness", lower_bound_soundness),
        ("6 alpha-oracle equivalence", alpha_oracle),
        ("7 update-rule identities", update_identities),
        ("8 invariant suite", invariant_suite),
        ("- large-instance smoke test", large_instance_smoke),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = match out.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Unavailable => "FAIL",
        };
        println!("{tag} {name}: {} [{secs:.1}s]", out.detail);
        for note in out.notes {
            println!("       {note}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed on available data");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
