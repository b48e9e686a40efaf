use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::cost::total_cost;
use crate::difftree::lift;
use crate::fixtures;
use crate::sql::parse_log;
use crate::widgets::{build_widget_tree, AssignmentSpace, Screen};

fn quick(iterations: u64, seed: u64) -> SearchConfig {
    SearchConfig {
        iterations: Some(iterations),
        seed,
        max_walk_steps: 20,
        ..SearchConfig::default()
    }
}

#[test]
fn uct_examples() {
    assert_eq!(uct(2.0, 1, 1.0, 0.0), 2.0);
    let e4 = 4f64.exp();
    assert!((uct(0.0, 4, e4, 1.0) - 1.0).abs() < 1e-12);
    assert!(uct(1.0, 1, 10.0, 1.4) > uct(0.9, 9, 10.0, 1.4));
    assert_eq!(uct(0.0, 0, 10.0, 1.4), f64::INFINITY);
}

#[test]
fn config_validation() {
    assert!(SearchConfig::default().validate().is_ok());
    for bad in [
        SearchConfig { k: 0, ..Default::default() },
        SearchConfig { c: -1.0, ..Default::default() },
        SearchConfig { max_walk_steps: 0, ..Default::default() },
        SearchConfig { budget_secs: 0.0, ..Default::default() },
        SearchConfig { iterations: Some(0), ..Default::default() },
    ] {
        assert!(matches!(bad.validate(), Err(SearchError::Config(_))), "{bad:?}");
    }
    // a fixed iteration count needs no time budget
    let it = SearchConfig { budget_secs: 0.0, iterations: Some(5), ..Default::default() };
    assert!(it.validate().is_ok());
}

#[test]
fn reward_examples() {
    let m = CostModel::default();
    let one = parse_log("select a from t").unwrap();
    let t = initial_difftree(&one);
    assert_eq!(evaluate_reward(&t, &one, &m, 3, 0, -1000.0).unwrap(), 0.0);

    let log = fixtures::fig1_log();
    let init = initial_difftree(&log);
    let fig5 = fixtures::fig5_tree();
    let r5 = evaluate_reward(&fig5, &log, &m, 10, 7, -1000.0).unwrap();
    assert!(r5.is_finite() && r5 < 0.0);
    // a sample of k can only do as well as the optimum
    let mut ctx = CostContext::new(fig5.clone(), &log, &m, m.screen).unwrap();
    let best5 = optimize_exhaustive(&mut ctx);
    assert!(-r5 >= best5 - 1e-9);
    let mut ctx0 = CostContext::new(init, &log, &m, m.screen).unwrap();
    assert!(best5 < optimize_exhaustive(&mut ctx0));

    let tiny = m.clone().with_screen(Screen { width: 1, height: 1 });
    assert_eq!(evaluate_reward(&fig5, &log, &tiny, 10, 7, -1000.0).unwrap(), -1000.0);
}

#[test]
fn conservation_after_every_iteration() {
    let mut s = Search::new(fixtures::fig1_log(), CostModel::default(), quick(50, 3)).unwrap();
    s.check_conservation().unwrap();
    for _ in 0..50 {
        s.step();
        s.check_conservation().unwrap();
    }
    assert_eq!(s.root_stats().n, s.rollouts());
    assert_eq!(s.trace().len(), 50);
}

#[test]
fn best_cost_never_increases() {
    let mut s = Search::new(fixtures::fig1_log(), CostModel::default(), quick(60, 11)).unwrap();
    s.run();
    let costs: Vec<f64> = s.trace().iter().filter_map(|t| t.best_cost).collect();
    assert!(!costs.is_empty());
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn identical_seeds_give_identical_traces() {
    let run = |seed| {
        let r = run_search(&fixtures::fig1_log(), &CostModel::default(), &quick(40, seed)).unwrap();
        let lines: Vec<String> = r.trace.iter().map(|t| serde_json::to_string(t).unwrap()).collect();
        (lines.join("\n"), r.spec.digest())
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).0, run(6).0);
}

#[test]
fn result_spec_is_valid_and_matches_breakdown() {
    let log = fixtures::fig1_log();
    let m = CostModel::default();
    let r = run_search(&log, &m, &quick(30, 1)).unwrap();
    r.spec.validate().unwrap();
    let full = total_cost(&r.spec, &log, &m).unwrap();
    assert!((full.total.value() - r.breakdown.total.value()).abs() < 1e-9);
    if let Some(s) = r.sampled_cost {
        assert!(r.breakdown.total.value() <= s + 1e-9);
    }
}

#[test]
fn dead_end_state_is_still_evaluated() {
    // a single query admits no rewrites
    let log = parse_log("select a from t").unwrap();
    let mut s = Search::new(log, CostModel::default(), quick(5, 0)).unwrap();
    s.run();
    s.check_conservation().unwrap();
    assert_eq!(s.rollouts(), 6);
    let r = s.finish().unwrap();
    assert_eq!(r.breakdown.total.value(), 0.0);
    assert!(r.spec.widget_tree.is_none());
}

#[test]
fn rollout_seeds_differ() {
    let a = rollout_seed(1, 0, 0);
    assert_ne!(a, rollout_seed(1, 0, 1));
    assert_ne!(a, rollout_seed(1, 1, 0));
    assert_ne!(a, rollout_seed(2, 0, 0));
}

fn small_tree(seed: u64) -> (QueryLog, Arc<DiffNode>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=3);
    let log = fixtures::random_log(&mut rng, n);
    let steps = rng.random_range(0..8);
    let t = RuleSet::default().random_walk(&initial_difftree(&log), steps, &mut rng);
    (log, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exhaustive_is_the_true_minimum(seed in any::<u64>()) {
        let (log, t) = small_tree(seed);
        let m = CostModel::default().with_screen(Screen { width: 60, height: 30 });
        let space = AssignmentSpace::of(&t);
        prop_assume!(space.size() <= 3000);
        let mut ctx = CostContext::new(t.clone(), &log, &m, m.screen).unwrap();
        let best = optimize_exhaustive(&mut ctx);
        let brute = (0..space.size())
            .map(|i| {
                let a = space.nth(i);
                let spec = InterfaceSpec::new(t.clone(), build_widget_tree(&t, &a), m.screen, &log.queries()[0]).unwrap();
                total_cost(&spec, &log, &m).unwrap().total.value()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((best - brute).abs() < 1e-9 || (best.is_infinite() && brute.is_infinite()));
        prop_assert!((ctx.total() - best).abs() < 1e-9 || best.is_infinite());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(s) = sample_assignments(&mut ctx, 10, &mut rng) {
            prop_assert!(best <= s.cost);
            let d = optimize_descent(&mut ctx, &s.assignment);
            prop_assert!(best <= d && d <= s.cost);
        }
    }
}

#[test]
fn choice_free_tree_optimizes_to_nothing() {
    let log = parse_log("select a from t").unwrap();
    let t = lift(&log.queries()[0]);
    let m = CostModel::default();
    let mut ctx = CostContext::new(t, &log, &m, m.screen).unwrap();
    assert_eq!(optimize_exhaustive(&mut ctx), 0.0);
}
