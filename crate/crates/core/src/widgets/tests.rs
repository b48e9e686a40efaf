use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::difftree::{
    expressible, initial_difftree, instantiate, lift, reachable_choices, static_path, Selection,
};
use crate::fixtures;
use crate::rules::RuleSet;
use crate::sql::{parse, to_sql};

const WIDE: Screen = Screen {
    width: 100,
    height: 40,
};

fn kinds(n: &DiffNode) -> Vec<WidgetKind> {
    let mut k: Vec<WidgetKind> = candidate_widgets(n).unwrap().iter().map(|c| c.kind).collect();
    k.dedup();
    k
}

fn choice(kind: WidgetKind, size: SizeClass) -> WidgetChoice {
    WidgetChoice {
        kind,
        size: Some(size),
    }
}

fn fig2b_assignment() -> WidgetAssignment {
    fixtures::fig2b_assignment()
}

fn fig2b_spec(start: &crate::sql::Ast) -> InterfaceSpec {
    fixtures::fig2b_spec(start)
}

#[test]
fn candidates_follow_domain() {
    let cols = DiffNode::any(vec![
        DiffNode::leaf(crate::sql::Label::ColExpr, "sales"),
        DiffNode::leaf(crate::sql::Label::ColExpr, "costs"),
    ]);
    let k = kinds(&cols);
    for want in [WidgetKind::Dropdown, WidgetKind::RadioButtons, WidgetKind::Buttons] {
        assert!(k.contains(&want));
    }
    assert!(!k.contains(&WidgetKind::Slider));

    let fig5 = fixtures::fig5_tree();
    let k = kinds(&fig5.children()[2]);
    assert!(k.contains(&WidgetKind::Toggle) && k.contains(&WidgetKind::Checkboxes));

    let tops = DiffNode::any(
        ["10", "100", "1000"]
            .iter()
            .map(|v| DiffNode::leaf(crate::sql::Label::NumExpr, *v))
            .collect(),
    );
    let k = kinds(&tops);
    for want in [WidgetKind::Dropdown, WidgetKind::RadioButtons, WidgetKind::Slider] {
        assert!(k.contains(&want));
    }
    assert_eq!(domain_of(&tops).vtype, ValueType::Numeric);
    assert_eq!(domain_of(&tops).items, ["10", "100", "1000"]);

    let multi = DiffNode::multi(lift(&parse("select a from t").unwrap()));
    assert_eq!(kinds(&multi), [WidgetKind::Adder]);
    assert!(candidate_widgets(&lift(&parse("select a from t").unwrap())).is_err());
}

#[test]
fn fig2b_and_fig2c_widget_trees() {
    let t = fixtures::fig5_tree();
    let w = build_widget_tree(&t, &fig2b_assignment()).unwrap();
    assert_eq!(w.kind, WidgetKind::Vertical);
    assert_eq!(w.children[0].kind, WidgetKind::Dropdown);
    assert_eq!(w.children[0].domain, ["sales", "costs"]);
    let group = &w.children[1];
    assert_eq!(group.kind, WidgetKind::Vertical);
    assert_eq!(group.children[0].kind, WidgetKind::Toggle);
    assert_eq!(group.children[1].kind, WidgetKind::Dropdown);
    assert_eq!(group.children[1].domain, ["USA", "EUR"]);

    let mut c = fig2b_assignment();
    c.widgets.insert(vec![0, 0], choice(WidgetKind::Buttons, SizeClass::Small));
    let w = build_widget_tree(&t, &c).unwrap();
    assert_eq!(w.children[0].kind, WidgetKind::Buttons);
    assert_eq!(w.children[0].binding_path, Some(vec![0, 0]));
}

#[test]
fn choice_free_tree_has_no_widgets() {
    let t = lift(&parse("select a from t").unwrap());
    assert!(build_widget_tree(&t, &WidgetAssignment::default()).is_none());
    assert_eq!(AssignmentSpace::of(&t).size(), 1);
}

#[test]
fn fig2a_selector_over_queries() {
    let log = fixtures::fig1_log();
    let t = initial_difftree(&log);
    let space = AssignmentSpace::of(&t);
    let w = build_widget_tree(&t, &space.nth(0)).unwrap();
    assert_eq!(w.domain.len(), 3);
    assert_eq!(w.value_type, Some(ValueType::Subtree));
    let [q1, q2, _] = fixtures::fig1_queries();
    let spec = InterfaceSpec::new(t, Some(w.clone()), WIDE, &q1).unwrap();
    let s2 = apply_widget(&spec, &[], &w.domain[1]).unwrap();
    assert_eq!(s2.current_query_ast, q2);
}

#[test]
fn layout_arithmetic() {
    let leaf = |w: u32, h: u32| WidgetNode {
        kind: WidgetKind::Label,
        size_class: None,
        binding_path: None,
        domain: vec!["x".repeat(w as usize)],
        value_type: None,
        extent: Extent::new(w, h),
        children: Vec::new(),
    };
    let mut v = WidgetNode {
        kind: WidgetKind::Vertical,
        size_class: None,
        binding_path: None,
        domain: Vec::new(),
        value_type: None,
        extent: Extent::default(),
        children: vec![leaf(4, 1), leaf(6, 1)],
    };
    assert_eq!(layout_extent(&v), Extent::new(6, 2));
    v.kind = WidgetKind::Horizontal;
    assert_eq!(layout_extent(&v), Extent::new(10, 1));
    v.kind = WidgetKind::Tabs;
    assert_eq!(layout_extent(&v), Extent::new(6, 2));
}

#[test]
fn vertical_stacking_example() {
    // two widgets of extent (4,1) and (6,2)
    let a = interaction_extent(WidgetKind::Dropdown, Some(SizeClass::Small), &["".into()]);
    let b = interaction_extent(WidgetKind::Slider, Some(SizeClass::Small), &[]);
    assert_eq!((a.width, a.height), (4, 1));
    assert_eq!(b.height, 2);
    let mk = |kind, domain: Vec<String>| WidgetNode {
        kind,
        size_class: Some(SizeClass::Small),
        binding_path: None,
        domain,
        value_type: None,
        extent: Extent::default(),
        children: Vec::new(),
    };
    let v = WidgetNode {
        children: vec![mk(WidgetKind::Dropdown, vec!["".into()]), mk(WidgetKind::Slider, vec![])],
        ..mk(WidgetKind::Vertical, vec![])
    };
    assert_eq!(layout_extent(&v), Extent::new(b.width.max(4), 3));
}

#[test]
fn enumerated_widgets_grow_with_domain() {
    let two: Vec<String> = vec!["ab".into(), "cd".into()];
    let ten: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
    let w2 = interaction_extent(WidgetKind::Buttons, Some(SizeClass::Small), &two);
    let w10 = interaction_extent(WidgetKind::Buttons, Some(SizeClass::Small), &ten);
    assert_eq!(w10.width, 5 * w2.width);
    let short = interaction_extent(WidgetKind::Buttons, Some(SizeClass::Small), &["a".into()]);
    let long = interaction_extent(WidgetKind::Buttons, Some(SizeClass::Small), &["abcdefghij".into()]);
    assert!(long.width > short.width);
    let s = interaction_extent(WidgetKind::Dropdown, Some(SizeClass::Small), &two);
    let l = interaction_extent(WidgetKind::Dropdown, Some(SizeClass::Large), &two);
    assert_eq!(l.width, 2 * s.width);
}

#[test]
fn apply_widget_examples() {
    let [q1, q2, q3] = fixtures::fig1_queries();
    let spec = fig2b_spec(&q1);
    spec.validate().unwrap();
    let s = apply_widget(&spec, &[0, 0], "Costs").unwrap();
    assert_eq!(s.current_query_sql, "select costs from product where country = 'USA'");
    // the input spec is unchanged
    assert_eq!(spec.current_query_ast, q1);

    let s = apply_widget(&spec, &[2], "off").unwrap();
    assert_eq!(s.current_query_sql, "select sales from product");
    // the string dropdown is now disabled
    assert_eq!(
        apply_widget(&s, &[2, 0, 0, 2], "EUR"),
        Err(InteractError::PathInvalid(vec![2, 0, 0, 2]))
    );
    let st = widget_states(&s);
    let str_state = st.iter().find(|w| w.binding_path == [2, 0, 0, 2]).unwrap();
    assert!(!str_state.enabled);

    let s2 = fig2b_spec(&q2);
    assert_eq!(apply_widget(&s2, &[2], "off").unwrap().current_query_ast, q3);

    match apply_widget(&spec, &[0, 0], "Profit") {
        Err(InteractError::OutOfDomain { domain, .. }) => assert_eq!(domain, ["sales", "costs"]),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        apply_widget(&spec, &[2], "maybe"),
        Err(InteractError::OutOfDomain { .. })
    ));
}

#[test]
fn adder_adds_and_removes_copies() {
    let log = fixtures::listing1_log();
    let q = &log.queries()[0];
    let t = lift(q);
    let app = crate::rules::enumerate_applications(&t)
        .into_iter()
        .find(|a| a.rule == crate::rules::RuleId::Multi)
        .unwrap();
    let t = crate::rules::apply(&t, &app).unwrap();
    let space = AssignmentSpace::of(&t);
    let w = build_widget_tree(&t, &space.nth(0)).unwrap();
    let spec = InterfaceSpec::new(t.clone(), Some(w), Screen { width: 400, height: 100 }, q).unwrap();
    let multi_path = t.choice_paths()[0].clone();
    assert_eq!(spec.current_choices.get(&multi_path), Some(Selection::Multi(4)));
    let s = apply_widget(&spec, &multi_path, "remove").unwrap();
    assert_eq!(s.current_query_sql.matches("between").count(), 3);
    let s = apply_widget(&s, &multi_path, "add").unwrap();
    assert_eq!(s.current_query_sql.matches("between").count(), 4);
    let mut s = s;
    for _ in 0..4 {
        s = match apply_widget(&s, &multi_path, "remove") {
            Ok(n) => n,
            Err(e) => {
                // an empty AND is not a valid query
                assert!(matches!(e, InteractError::InvalidQuery(_)), "{e:?}");
                break;
            }
        };
    }
}

#[test]
fn spec_json_contract() {
    let [q1, ..] = fixtures::fig1_queries();
    let spec = fig2b_spec(&q1);
    let v = serde_json::to_value(&spec).unwrap();
    for key in [
        "screen",
        "widget_tree",
        "difftree",
        "current_choices",
        "current_query_sql",
        "current_query_ast",
        "visualization",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let w = &v["widget_tree"]["children"][0];
    assert_eq!(w["kind"], "dropdown");
    assert_eq!(w["size_class"], "large");
    assert_eq!(w["binding_path"], serde_json::json!([0, 0]));
    assert_eq!(w["domain"], serde_json::json!(["sales", "costs"]));
    let back: InterfaceSpec = serde_json::from_value(v).unwrap();
    assert_eq!(back, spec);
    assert_eq!(back.digest(), spec.digest());
}

#[test]
fn tampered_spec_fails_validation() {
    let [q1, ..] = fixtures::fig1_queries();
    let mut spec = fig2b_spec(&q1);
    spec.widget_tree.as_mut().unwrap().children[0].binding_path = Some(vec![7, 7]);
    assert!(matches!(spec.validate(), Err(SpecError::UnknownBinding(_))));
    let mut spec = fig2b_spec(&q1);
    spec.screen = Screen { width: 1, height: 1 };
    assert!(matches!(spec.validate(), Err(SpecError::DoesNotFit { .. })));
}

#[test]
fn screen_parses() {
    assert_eq!("100x40".parse::<Screen>().unwrap(), WIDE);
    assert!("100".parse::<Screen>().is_err());
}

fn random_state(seed: u64) -> (crate::sql::QueryLog, Arc<DiffNode>, WidgetAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let log = fixtures::random_log(&mut rng, n);
    let steps = rng.random_range(0..15);
    let t = RuleSet::default().random_walk(&initial_difftree(&log), steps, &mut rng);
    let a = AssignmentSpace::of(&t).random(&mut rng);
    (log, t, a)
}

const HUGE: Screen = Screen {
    width: 100_000,
    height: 100_000,
};

// Drive the interface from its current state to `q` by replaying the
// witness selections through widgets, outermost first.
fn drive(mut spec: InterfaceSpec, q: &crate::sql::Ast) -> InterfaceSpec {
    let target = expressible(&spec.difftree, q).unwrap();
    for _ in 0..64 {
        if &spec.current_query_ast == q {
            break;
        }
        let candidates: Vec<_> = reachable_choices(&spec.difftree, &spec.current_choices)
            .into_iter()
            .filter(|p| target.get(p).is_some() && target.get(p) != spec.current_choices.get(p))
            .collect();
        assert!(!candidates.is_empty(), "some reachable choice differs");
        // an intermediate query may be invalid; take the first step that is not
        spec = candidates
            .iter()
            .find_map(|next| {
                let sel = target.get(next).unwrap();
                let sp = static_path(&spec.difftree, next).unwrap();
                let w = spec.widget_tree.as_ref().unwrap().find_binding(&sp).unwrap();
                let u = match (sel, spec.current_choices.get(next)) {
                    (Selection::Any(i), _) => w.domain[i].clone(),
                    (Selection::Opt(b), _) => if b { "on" } else { "off" }.to_string(),
                    (Selection::Multi(m), Some(Selection::Multi(c))) if m > c => "add".into(),
                    (Selection::Multi(_), _) => "remove".into(),
                };
                apply_widget(&spec, next, &u).ok()
            })
            .unwrap_or_else(|| panic!("stuck at {}", spec.current_query_sql));
    }
    spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_choice_bound_exactly_once(seed in any::<u64>()) {
        let (log, t, a) = random_state(seed);
        let w = build_widget_tree(&t, &a);
        let spec = InterfaceSpec::new(t.clone(), w, HUGE, &log.queries()[0]).unwrap();
        spec.validate().unwrap();
        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for w in spec.bound_widgets() {
            *seen.entry(w.binding_path.clone().unwrap()).or_default() += 1;
        }
        prop_assert_eq!(seen.len(), t.choice_count());
        prop_assert!(seen.values().all(|&c| c == 1));
    }

    #[test]
    fn every_log_query_reachable_through_widgets(seed in any::<u64>()) {
        let (log, t, a) = random_state(seed);
        let w = build_widget_tree(&t, &a);
        let mut spec = InterfaceSpec::new(t, w, HUGE, &log.queries()[0]).unwrap();
        for q in log.iter() {
            spec = drive(spec, q);
            prop_assert_eq!(&spec.current_query_ast, q);
        }
    }

    #[test]
    fn interactions_keep_query_parseable(seed in any::<u64>()) {
        let (log, t, a) = random_state(seed);
        let w = build_widget_tree(&t, &a);
        let mut spec = InterfaceSpec::new(t, w, HUGE, &log.queries()[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..30 {
            let paths = reachable_choices(&spec.difftree, &spec.current_choices);
            if paths.is_empty() {
                break;
            }
            let p = &paths[rng.random_range(0..paths.len())];
            let sp = static_path(&spec.difftree, p).unwrap();
            let w = spec.widget_tree.as_ref().unwrap().find_binding(&sp).unwrap();
            let u = w.domain[rng.random_range(0..w.domain.len())].clone();
            match apply_widget(&spec, p, &u) {
                Ok(next) => spec = next,
                Err(InteractError::InvalidQuery(_)) => continue,
                Err(e) => prop_assert!(false, "{e:?}"),
            }
            let sql = to_sql(&spec.current_query_ast).unwrap();
            prop_assert_eq!(parse(&sql).unwrap(), spec.current_query_ast.clone());
            prop_assert_eq!(instantiate(&spec.difftree, &spec.current_choices).unwrap(), spec.current_query_ast.clone());
        }
    }

    #[test]
    fn skeleton_extent_matches_built_tree(seed in any::<u64>()) {
        let (_, t, a) = random_state(seed);
        let space = AssignmentSpace::of(&t);
        let sk = LayoutSkeleton::new(&t, &space);
        let (sel, orient) = space.indices_of(&a);
        prop_assert_eq!(&space.assignment_from(&sel, &orient), &a);
        let built = build_widget_tree(&t, &a).map(|w| w.extent).unwrap_or_default();
        prop_assert_eq!(sk.extent(&sel, &orient), built);
    }

    #[test]
    fn enumerated_extent_monotone_in_cardinality(n in 1usize..30, len in 1usize..25, k in 0usize..3) {
        let size = SizeClass::ALL[k];
        let dom = |m: usize| (0..m).map(|i| format!("{i:0>len$}")).collect::<Vec<_>>();
        for kind in [WidgetKind::Buttons, WidgetKind::RadioButtons, WidgetKind::Checkboxes] {
            let a = interaction_extent(kind, Some(size), &dom(n));
            let b = interaction_extent(kind, Some(size), &dom(n + 1));
            prop_assert!(b.width >= a.width && b.height >= a.height);
        }
    }
}
