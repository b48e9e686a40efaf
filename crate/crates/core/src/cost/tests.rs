use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::difftree::{initial_difftree, instantiate, static_path, ChoiceAssignment};
use crate::fixtures;
use crate::rules::RuleSet;
use crate::sql::Label;
use crate::widgets::{
    build_widget_tree, AssignmentSpace, WidgetAssignment, WidgetChoice,
};

const WIDE: Screen = Screen {
    width: 100,
    height: 40,
};

fn node(kind: WidgetKind, vtype: ValueType, domain: Vec<String>) -> WidgetNode {
    WidgetNode {
        kind,
        size_class: Some(SizeClass::Large),
        binding_path: Some(vec![]),
        domain,
        value_type: Some(vtype),
        extent: Extent::default(),
        children: Vec::new(),
    }
}

fn items(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn fig2b() -> WidgetAssignment {
    fixtures::fig2b_assignment()
}

fn spec_for(tree: &Arc<DiffNode>, a: &WidgetAssignment, screen: Screen, start: &Ast) -> InterfaceSpec {
    InterfaceSpec::new(tree.clone(), build_widget_tree(tree, a), screen, start).unwrap()
}

#[test]
fn shipped_model_is_valid() {
    let m = CostModel::default();
    assert_eq!(m.screen, WIDE);
    assert_eq!(m.lambda, 1.0);
    let back = CostModel::from_toml_str(&m.to_toml_string()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn broken_models_are_rejected() {
    let base = DEFAULT_COST_MODEL_TOML;
    let no_slider = base.replace("[m_table.slider]", "[m_table.unused]");
    assert!(CostModel::from_toml_str(&no_slider).is_err());
    let negative = base.replace("edge_cost = 0.5", "edge_cost = -0.5");
    assert!(matches!(
        CostModel::from_toml_str(&negative),
        Err(ConfigError::Negative { .. })
    ));
    let mut m = CostModel::default();
    m.interact_cost.remove(&WidgetKind::Toggle);
    assert_eq!(
        m.validate(),
        Err(ConfigError::Missing {
            table: "interact_cost",
            kind: WidgetKind::Toggle
        })
    );
    let mut m = CostModel::default();
    m.length_penalty.penalties.pop();
    assert!(matches!(m.validate(), Err(ConfigError::Inconsistent(_))));
    assert!(matches!(
        CostModel::from_toml_str("edge_cost = ["),
        Err(ConfigError::Parse(_))
    ));
}

#[test]
fn buckets() {
    let b: Vec<usize> = [0, 3, 4, 7, 8, 15, 16, 40].iter().map(|&n| bucket(n)).collect();
    assert_eq!(b, [0, 0, 1, 1, 2, 2, 3, 3]);
}

#[test]
fn appropriateness_orderings() {
    let m = CostModel::default();
    let radio3 = appropriateness(&node(WidgetKind::RadioButtons, ValueType::Subtree, items(3)), &m).unwrap();
    let radio40 = appropriateness(&node(WidgetKind::RadioButtons, ValueType::Subtree, items(40)), &m).unwrap();
    assert!(radio3 < radio40);

    let tops: Vec<String> = ["10", "100", "1000"].iter().map(|s| s.to_string()).collect();
    let slider = appropriateness(&node(WidgetKind::Slider, ValueType::Numeric, tops.clone()), &m).unwrap();
    let buttons = appropriateness(&node(WidgetKind::Buttons, ValueType::Subtree, tops), &m).unwrap();
    assert!(slider < buttons);

    let label = appropriateness(&node(WidgetKind::Label, ValueType::String, items(1)), &m).unwrap();
    assert_eq!(label, 0.0);

    // sliders suit numeric domains more as they grow, radio buttons less
    let s = |n| appropriateness(&node(WidgetKind::Slider, ValueType::Numeric, items(n)), &m).unwrap();
    let r = |n| appropriateness(&node(WidgetKind::RadioButtons, ValueType::Numeric, items(n)), &m).unwrap();
    assert!(s(20) < s(3) && r(3) < r(20));

    let layout = node(WidgetKind::Vertical, ValueType::Subtree, vec![]);
    assert_eq!(appropriateness(&layout, &m), Err(CostError::NotPriced(WidgetKind::Vertical)));
}

#[test]
fn smaller_widgets_cost_more() {
    let m = CostModel::default();
    let mut w = node(WidgetKind::Dropdown, ValueType::String, items(2));
    let mut scores = Vec::new();
    for s in SizeClass::ALL {
        w.size_class = Some(s);
        scores.push(appropriateness(&w, &m).unwrap());
    }
    assert!(scores[0] > scores[1] && scores[1] > scores[2]);
}

#[test]
fn usefulness_examples() {
    let m = CostModel::default();
    let [q1, q2, q3] = fixtures::fig1_queries();
    let t = fixtures::fig5_tree();
    let spec = spec_for(&t, &fig2b(), WIDE, &q1);
    assert_eq!(usefulness(&q1, &q1, &spec, &m).unwrap(), 0.0);
    assert_eq!(usefulness(&q2, &q3, &spec, &m).unwrap(), m.interact(WidgetKind::Toggle));
    // two dropdowns, joined through the root layout and the WHERE group
    let u12 = usefulness(&q1, &q2, &spec, &m).unwrap();
    assert_eq!(u12, 2.0 * m.interact(WidgetKind::Dropdown) + 3.0 * m.edge_cost);
    let other = crate::sql::parse("select sales from product where country = 'JPN'").unwrap();
    assert!(matches!(
        usefulness(&q1, &other, &spec, &m),
        Err(CostError::Inexpressible(_))
    ));
}

// Every full assignment of the Fig 5 tree, by brute force.
fn all_assignments_for(q: &Ast) -> Vec<ChoiceAssignment> {
    let t = fixtures::fig5_tree();
    let mut out = Vec::new();
    for col in 0..2 {
        for on in [true, false] {
            for s in 0..2 {
                let mut c = ChoiceAssignment::new();
                c.set(vec![0, 0], crate::difftree::Selection::Any(col));
                c.set(vec![2], crate::difftree::Selection::Opt(on));
                if on {
                    c.set(vec![2, 0, 0, 2], crate::difftree::Selection::Any(s));
                }
                if instantiate(&t, &c).ok().as_ref() == Some(q) && !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

#[test]
fn q1_to_q2_changes_both_dropdowns() {
    let [q1, q2, _] = fixtures::fig1_queries();
    let t = fixtures::fig5_tree();
    let a = all_assignments_for(&q1);
    let b = all_assignments_for(&q2);
    assert_eq!((a.len(), b.len()), (1, 1));
    let changed: Vec<Path> = a[0]
        .iter()
        .filter(|(p, s)| b[0].get(p) != Some(**s))
        .map(|(p, _)| p.clone())
        .collect();
    assert_eq!(changed, [vec![0, 0], vec![2, 0, 0, 2]]);
    let spec = spec_for(&t, &fig2b(), WIDE, &q1);
    let b = total_cost(&spec, &fixtures::fig1_log(), &CostModel::default()).unwrap();
    assert_eq!(b.u_terms[0].changed, changed);
    assert_eq!(b.u_terms[0].edges, 3);
    assert_eq!(b.u_terms[1].changed, [vec![2]]);
    assert_eq!(b.u_terms[1].edges, 0);
}

#[test]
fn fig2b_breakdown() {
    let m = CostModel::default();
    let [q1, ..] = fixtures::fig1_queries();
    let t = fixtures::fig5_tree();
    let log = fixtures::fig1_log();
    let b = total_cost(&spec_for(&t, &fig2b(), WIDE, &q1), &log, &m).unwrap();
    assert!(b.valid);
    assert_eq!(b.m_terms.len(), 3);
    assert_eq!(b.u_terms.len(), 2);
    assert_eq!(b.total, Total::Finite(b.m_sum() + b.u_sum()));

    let tiny = Screen { width: 1, height: 1 };
    let b = total_cost(&spec_for(&t, &fig2b(), tiny, &q1), &log, &m).unwrap();
    assert!(!b.valid);
    assert_eq!(b.total, Total::Invalid);
    let json = serde_json::to_value(&b).unwrap();
    assert_eq!(json["total"], "INVALID");
    let back: CostBreakdown = serde_json::from_value(json).unwrap();
    assert_eq!(back, b);
}

// Cheapest valid total over every assignment of a tree, from scratch.
fn best_total(tree: &Arc<DiffNode>, log: &QueryLog, m: &CostModel) -> f64 {
    let space = AssignmentSpace::of(tree);
    (0..space.size())
        .map(|i| {
            let s = spec_for(tree, &space.nth(i), m.screen, &log.queries()[0]);
            total_cost(&s, log, m).unwrap().total.value()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn factored_interface_beats_per_query_buttons() {
    let m = CostModel::default();
    let log = fixtures::fig1_log();
    let [q1, ..] = fixtures::fig1_queries();
    let init = initial_difftree(&log);
    let per_query = SizeClass::ALL
        .iter()
        .map(|&s| {
            let mut a = WidgetAssignment::default();
            a.widgets.insert(
                vec![],
                WidgetChoice {
                    kind: WidgetKind::Buttons,
                    size: Some(s),
                },
            );
            total_cost(&spec_for(&init, &a, WIDE, &q1), &log, &m).unwrap().total.value()
        })
        .fold(f64::INFINITY, f64::min);
    let fig2b_total = total_cost(&spec_for(&fixtures::fig5_tree(), &fig2b(), WIDE, &q1), &log, &m)
        .unwrap()
        .total
        .value();
    assert!(fig2b_total < per_query, "{fig2b_total} vs {per_query}");
    assert!(best_total(&fixtures::fig5_tree(), &log, &m) < best_total(&init, &log, &m));
}

#[test]
fn steiner_edges_on_a_path() {
    // root -> a -> b, root -> c
    let ix = WidgetIndex {
        parent: vec![usize::MAX, 0, 1, 0],
        by_binding: Default::default(),
    };
    assert_eq!(ix.steiner_edges(&[]), 0);
    assert_eq!(ix.steiner_edges(&[2]), 0);
    assert_eq!(ix.steiner_edges(&[2, 2]), 0);
    assert_eq!(ix.steiner_edges(&[2, 3]), 3);
    assert_eq!(ix.steiner_edges(&[1, 2]), 1);
    assert_eq!(ix.steiner_edges(&[0, 2, 3]), 3);
}

#[test]
fn context_matches_fig2b() {
    let m = CostModel::default();
    let log = fixtures::fig1_log();
    let t = fixtures::fig5_tree();
    let mut ctx = CostContext::new(t.clone(), &log, &m, WIDE).unwrap();
    ctx.set_assignment(&fig2b());
    let full = total_cost(&spec_for(&t, &fig2b(), WIDE, &log.queries()[0]), &log, &m).unwrap();
    assert_eq!(ctx.breakdown(), full);
}

fn random_state(seed: u64) -> (QueryLog, Arc<DiffNode>, WidgetAssignment, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let log = fixtures::random_log(&mut rng, n);
    let steps = rng.random_range(0..12);
    let t = RuleSet::default().random_walk(&initial_difftree(&log), steps, &mut rng);
    let a = AssignmentSpace::of(&t).random(&mut rng);
    (log, t, a, rng)
}

const HUGE: Screen = Screen {
    width: 100_000,
    height: 100_000,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn self_transition_is_free(seed in any::<u64>()) {
        let (log, t, a, mut rng) = random_state(seed);
        let q = &log.queries()[rng.random_range(0..log.len())];
        let spec = spec_for(&t, &a, HUGE, q);
        prop_assert_eq!(usefulness(q, q, &spec, &CostModel::default()).unwrap(), 0.0);
    }

    #[test]
    fn usefulness_is_symmetric(seed in any::<u64>()) {
        let (log, t, a, mut rng) = random_state(seed);
        let m = CostModel::default();
        let qa = &log.queries()[rng.random_range(0..log.len())];
        let qb = &log.queries()[rng.random_range(0..log.len())];
        let spec = spec_for(&t, &a, HUGE, qa);
        prop_assert_eq!(usefulness(qa, qb, &spec, &m).unwrap(), usefulness(qb, qa, &spec, &m).unwrap());
        let wa = query_witnesses(&t, qa, m.witness_cap).unwrap();
        let wb = query_witnesses(&t, qb, m.witness_cap).unwrap();
        for x in &wa {
            for y in &wb {
                let f: Vec<Path> = change_set(&t, x, y).into_iter().map(|c| c.instance).collect();
                let g: Vec<Path> = change_set(&t, y, x).into_iter().map(|c| c.instance).collect();
                prop_assert_eq!(f, g);
            }
        }
    }

    #[test]
    fn invalid_iff_layout_exceeds_screen(seed in any::<u64>(), w in 1u32..160, h in 1u32..60) {
        let (log, t, a, _) = random_state(seed);
        let screen = Screen { width: w, height: h };
        let spec = spec_for(&t, &a, screen, &log.queries()[0]);
        let b = total_cost(&spec, &log, &CostModel::default()).unwrap();
        let e = spec.extent();
        let exceeds = e.width > w || e.height > h;
        prop_assert_eq!(b.total == Total::Invalid, exceeds);
        prop_assert_eq!(b.valid, !exceeds);
        if let Total::Finite(v) = b.total {
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn incremental_matches_full(seed in any::<u64>()) {
        let (log, t, a, mut rng) = random_state(seed);
        let m = CostModel::default();
        let screen = Screen { width: 120, height: 40 };
        let mut ctx = CostContext::new(t.clone(), &log, &m, screen).unwrap();
        ctx.set_assignment(&a);
        let slots = ctx.space().slots.clone();
        if slots.is_empty() {
            return Ok(());
        }
        let mut a = a;
        for _ in 0..3 {
            let (p, cands) = &slots[rng.random_range(0..slots.len())];
            let c = cands[rng.random_range(0..cands.len())];
            ctx.set_widget(p, c).unwrap();
            a.widgets.insert(p.clone(), c);
            let full = total_cost(&spec_for(&t, &a, screen, &log.queries()[0]), &log, &m).unwrap();
            let inc = ctx.breakdown();
            prop_assert_eq!(inc.valid, full.valid);
            prop_assert_eq!(&inc.m_terms, &full.m_terms);
            prop_assert_eq!(inc.u_terms.len(), full.u_terms.len());
            for (x, y) in inc.u_terms.iter().zip(&full.u_terms) {
                prop_assert!((x.score - y.score).abs() < 1e-9);
            }
            prop_assert!((ctx.total() - full.total.value()).abs() < 1e-9 || (ctx.total().is_infinite() && full.total == Total::Invalid));
        }
    }

    #[test]
    fn every_change_maps_to_a_bound_widget(seed in any::<u64>()) {
        let (log, t, a, _) = random_state(seed);
        let spec = spec_for(&t, &a, HUGE, &log.queries()[0]);
        let b = total_cost(&spec, &log, &CostModel::default()).unwrap();
        let w = spec.widget_tree.as_ref();
        for u in &b.u_terms {
            for p in &u.changed {
                let sp = static_path(&t, p).unwrap();
                prop_assert!(w.and_then(|w| w.find_binding(&sp)).is_some());
            }
        }
    }
}

#[test]
fn unchanging_choice_adds_cost() {
    let m = CostModel::default();
    let log = crate::sql::parse_log("select a from t\nselect b from t").unwrap();
    let stamp = |label| vec![crate::difftree::Stamp { label, value: None }];
    let from = |table| DiffNode::all(stamp(Label::From), vec![table]);
    let project = DiffNode::all(
        stamp(Label::Project),
        vec![DiffNode::any(vec![
            DiffNode::leaf(Label::ColExpr, "a"),
            DiffNode::leaf(Label::ColExpr, "b"),
        ])],
    );
    let plain = DiffNode::all(
        stamp(Label::Select),
        vec![project.clone(), from(DiffNode::leaf(Label::Table, "t"))],
    );
    // the same tree with a table choice the log never changes
    let extra = DiffNode::all(
        stamp(Label::Select),
        vec![
            project,
            from(DiffNode::any(vec![
                DiffNode::leaf(Label::Table, "t"),
                DiffNode::leaf(Label::Table, "u"),
            ])),
        ],
    );
    let space = AssignmentSpace::of(&extra);
    for i in 0..space.size() {
        let a = space.nth(i);
        let with = total_cost(&spec_for(&extra, &a, HUGE, &log.queries()[0]), &log, &m).unwrap();
        let without = total_cost(&spec_for(&plain, &a, HUGE, &log.queries()[0]), &log, &m).unwrap();
        assert!(with.total.value() >= without.total.value());
        assert_eq!(with.u_sum(), without.u_sum());
    }
}
