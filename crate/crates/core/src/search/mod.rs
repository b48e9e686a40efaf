//! Monte Carlo tree search over DiffTree states.
//!
//! Each iteration selects a frontier state by UCT from the initial tree,
//! expands all of its neighbor states, runs one random rule walk from every
//! new neighbor and backpropagates the rewards along the selected path. The
//! reward of a state is the negated lowest cost over `k` random widget
//! assignments. When the budget is spent, the best states seen get a final
//! widget optimization: exhaustive when the assignment space is small enough,
//! coordinate descent from the best sample otherwise.

mod optimize;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{CostBreakdown, CostContext, CostError, CostModel};
use crate::difftree::{initial_difftree, DiffNode, Digest};
use crate::par;
use crate::rules::{RuleApplication, RuleSet};
use crate::sql::QueryLog;
use crate::widgets::{InterfaceSpec, SpecError, WidgetAssignment};

pub use optimize::{optimize_descent, optimize_exhaustive, sample_assignments, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// UCT exploration constant.
    pub c: f64,
    /// Random widget assignments per reward evaluation.
    pub k: usize,
    /// Rollout walks take a uniform number of steps in `0..=max_walk_steps`.
    pub max_walk_steps: usize,
    /// Wall-clock budget in seconds, checked between iterations.
    pub budget_secs: f64,
    /// Fixed iteration count; overrides the budget.
    pub iterations: Option<u64>,
    pub seed: u64,
    /// Largest assignment space enumerated exhaustively at the end.
    pub exhaustive_bound: u64,
    /// Reward of a state whose k assignments all exceed the screen.
    pub reward_floor: f64,
    /// Number of best states that get the final widget optimization.
    pub final_candidates: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c: 1.4,
            k: 10,
            max_walk_steps: 200,
            budget_secs: 60.0,
            iterations: None,
            seed: 0,
            exhaustive_bound: 1_000_000,
            reward_floor: -1000.0,
            final_candidates: 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.into()));
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad("c must be non-negative");
        }
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if self.max_walk_steps < 1 {
            return bad("max_walk_steps must be at least 1");
        }
        let budget_ok = self.budget_secs > 0.0;
        if self.iterations.is_none() && !budget_ok {
            return bad("budget must be positive");
        }
        if self.iterations == Some(0) {
            return bad("iterations must be positive");
        }
        if self.final_candidates < 1 {
            return bad("final_candidates must be at least 1");
        }
        if !self.reward_floor.is_finite() {
            return bad("reward_floor must be finite");
        }
        Ok(())
    }
}

/// `w/n + c·sqrt(ln N / n)`; unvisited nodes score +∞.
pub fn uct(w: f64, n: u64, parent_visits: f64, c: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    w / n + c * (parent_visits.ln().max(0.0) / n).sqrt()
}

/// Negated lowest cost over `k` random assignments of `tree`, or `floor`
/// when none fits the screen.
pub fn evaluate_reward(
    tree: &Arc<DiffNode>,
    log: &QueryLog,
    model: &CostModel,
    k: usize,
    seed: u64,
    floor: f64,
) -> Result<f64, CostError> {
    let mut ctx = CostContext::new(tree.clone(), log, model, model.screen)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_assignments(&mut ctx, k, &mut rng).map_or(floor, |s| -s.cost))
}

/// One line of the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    /// Hex digest of the state selected for expansion.
    pub selected_digest: String,
    /// Rule application leading to the selected state; `None` at the root.
    pub applied_rule: Option<RuleApplication>,
    /// Rule-walk steps taken by this iteration's rollouts.
    pub rollout_len: usize,
    pub rollouts: usize,
    /// Best reward among this iteration's rollouts.
    pub reward: f64,
    /// Lowest sampled cost so far; `None` while nothing fits the screen.
    pub best_cost: Option<f64>,
}

#[derive(Debug, Clone)]
struct Edge {
    app: RuleApplication,
    child: usize,
    n: u64,
}

#[derive(Debug, Clone)]
struct Node {
    tree: Arc<DiffNode>,
    digest: Digest,
    w: f64,
    n: u64,
    /// Rollouts that started at this node.
    own: u64,
    /// `None` until expanded.
    edges: Option<Vec<Edge>>,
}

/// Visit statistics of one search state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub w: f64,
    pub n: u64,
    pub own: u64,
    pub edge_visits: u64,
    pub expanded: bool,
}

#[derive(Debug, Clone)]
struct StateRecord {
    tree: Arc<DiffNode>,
    reward: f64,
    sample: Option<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalMethod {
    Exhaustive,
    Descent,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub tree: Arc<DiffNode>,
    pub assignment: WidgetAssignment,
    pub spec: InterfaceSpec,
    pub breakdown: CostBreakdown,
    /// Best sampled cost of the returned state before final optimization.
    pub sampled_cost: Option<f64>,
    pub final_method: FinalMethod,
    pub iterations: u64,
    pub rollouts: u64,
    pub states: usize,
    pub trace: Vec<TraceRecord>,
    pub elapsed_secs: f64,
}

struct Rollout {
    reward: f64,
    steps: usize,
    evaluated: Vec<(Arc<DiffNode>, f64, Option<Sample>)>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of rollout `j` in iteration `iter`.
pub fn rollout_seed(seed: u64, iter: u64, j: usize) -> u64 {
    mix(mix(mix(seed) ^ iter) ^ j as u64)
}

/// An MCTS run in progress.
pub struct Search {
    log: QueryLog,
    model: CostModel,
    cfg: SearchConfig,
    rules: RuleSet,
    nodes: Vec<Node>,
    by_digest: HashMap<Digest, usize>,
    states: HashMap<Digest, StateRecord>,
    iter: u64,
    rollouts: u64,
    best_cost: Option<f64>,
    reward_range: Option<(f64, f64)>,
    trace: Vec<TraceRecord>,
    started: Instant,
}

impl Search {
    pub fn new(log: QueryLog, model: CostModel, cfg: SearchConfig) -> Result<Self, SearchError> {
        Self::with_rules(log, model, cfg, RuleSet::default())
    }

    pub fn with_rules(
        log: QueryLog,
        model: CostModel,
        cfg: SearchConfig,
        rules: RuleSet,
    ) -> Result<Self, SearchError> {
        cfg.validate()?;
        model
            .validate()
            .map_err(|e| SearchError::Config(e.to_string()))?;
        let root = initial_difftree(&log);
        let mut s = Search {
            log,
            model,
            cfg,
            rules,
            nodes: Vec::new(),
            by_digest: HashMap::new(),
            states: HashMap::new(),
            iter: 0,
            rollouts: 0,
            best_cost: None,
            reward_range: None,
            trace: Vec::new(),
            started: Instant::now(),
        };
        // the root's own evaluation counts as its first rollout
        let r = s.rollout_from(&root, rollout_seed(s.cfg.seed, u64::MAX, 0), false);
        let root_ix = s.add_node(root);
        s.backprop(&[root_ix], &[], &r);
        Ok(s)
    }

    fn add_node(&mut self, tree: Arc<DiffNode>) -> usize {
        let i = self.nodes.len();
        let digest = tree.digest();
        self.nodes.push(Node {
            tree,
            digest,
            w: 0.0,
            n: 0,
            own: 0,
            edges: None,
        });
        self.by_digest.insert(digest, i);
        i
    }

    fn evaluate(&self, tree: &Arc<DiffNode>, rng: &mut ChaCha8Rng) -> (f64, Option<Sample>) {
        match CostContext::new(tree.clone(), &self.log, &self.model, self.model.screen) {
            Ok(mut ctx) => match sample_assignments(&mut ctx, self.cfg.k, rng) {
                Some(s) => (-s.cost, Some(s)),
                None => (self.cfg.reward_floor, None),
            },
            Err(e) => {
                debug_assert!(false, "search state lost a log query: {e}");
                (self.cfg.reward_floor, None)
            }
        }
    }

    /// Evaluate `tree` and the end of a random walk from it; the reward is
    /// the better of the two.
    fn rollout_from(&self, tree: &Arc<DiffNode>, seed: u64, walk: bool) -> Rollout {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r0, s0) = self.evaluate(tree, &mut rng);
        let mut out = Rollout {
            reward: r0,
            steps: 0,
            evaluated: vec![(tree.clone(), r0, s0)],
        };
        if !walk {
            return out;
        }
        let len = rng.random_range(0..=self.cfg.max_walk_steps);
        let mut cur = tree.clone();
        for _ in 0..len {
            let apps = self.rules.enumerate(&cur);
            if apps.is_empty() {
                break;
            }
            let app = &apps[rng.random_range(0..apps.len())];
            cur = self.rules.apply(&cur, app).expect("fresh application applies");
            out.steps += 1;
        }
        if out.steps > 0 {
            let (r1, s1) = self.evaluate(&cur, &mut rng);
            out.reward = out.reward.max(r1);
            out.evaluated.push((cur, r1, s1));
        }
        out
    }

    fn record(&mut self, r: &Rollout) {
        for (tree, reward, sample) in &r.evaluated {
            if let Some(s) = sample {
                if self.best_cost.is_none_or(|b| s.cost < b) {
                    self.best_cost = Some(s.cost);
                }
            }
            if *reward > self.cfg.reward_floor {
                self.reward_range = Some(match self.reward_range {
                    None => (*reward, *reward),
                    Some((lo, hi)) => (lo.min(*reward), hi.max(*reward)),
                });
            }
            let d = tree.digest();
            let better = self.states.get(&d).is_none_or(|old| *reward > old.reward);
            if better {
                self.states.insert(
                    d,
                    StateRecord {
                        tree: tree.clone(),
                        reward: *reward,
                        sample: sample.clone(),
                    },
                );
            }
        }
    }

    // Credit one rollout ending at the last node of `path`.
    fn backprop(&mut self, path: &[usize], edges: &[(usize, usize)], r: &Rollout) {
        for &v in path {
            self.nodes[v].n += 1;
            self.nodes[v].w += r.reward;
        }
        for &(v, e) in edges {
            self.nodes[v].edges.as_mut().expect("expanded")[e].n += 1;
        }
        let last = *path.last().expect("non-empty path");
        self.nodes[last].own += 1;
        self.rollouts += 1;
        self.record(r);
    }

    fn score(&self, child: usize, parent_n: u64) -> f64 {
        let c = &self.nodes[child];
        let mean = c.w / c.n.max(1) as f64;
        let q = match self.reward_range {
            Some((lo, hi)) if hi > lo => ((mean - lo) / (hi - lo)).clamp(0.0, 1.0),
            _ => 0.5,
        };
        uct(q * c.n as f64, c.n, parent_n as f64, self.cfg.c)
    }

    /// Run one iteration and return its trace record.
    pub fn step(&mut self) -> &TraceRecord {
        let iter = self.iter;
        let mut path = vec![0usize];
        let mut edge_path: Vec<(usize, usize)> = Vec::new();
        loop {
            let v = *path.last().unwrap();
            let Some(edges) = &self.nodes[v].edges else { break };
            let parent_n = self.nodes[v].n;
            let mut best: Option<(usize, f64)> = None;
            for (ei, e) in edges.iter().enumerate() {
                if path.contains(&e.child) {
                    continue;
                }
                let s = self.score(e.child, parent_n);
                let better = match best {
                    None => true,
                    Some((bi, bs)) => {
                        s > bs
                            || (s == bs
                                && self.nodes[e.child].digest < self.nodes[edges[bi].child].digest)
                    }
                };
                if better {
                    best = Some((ei, s));
                }
            }
            let Some((ei, _)) = best else { break };
            edge_path.push((v, ei));
            path.push(edges[ei].child);
        }
        let f = *path.last().unwrap();

        let mut fresh: Vec<(usize, usize)> = Vec::new();
        if self.nodes[f].edges.is_none() {
            let tree = self.nodes[f].tree.clone();
            let mut edges: Vec<Edge> = Vec::new();
            for app in self.rules.enumerate(&tree) {
                let t = self.rules.apply(&tree, &app).expect("fresh application applies");
                let child = match self.by_digest.get(&t.digest()) {
                    Some(&i) => i,
                    None => {
                        let i = self.add_node(t);
                        fresh.push((i, edges.len()));
                        i
                    }
                };
                if child == f || edges.iter().any(|e| e.child == child) {
                    continue;
                }
                edges.push(Edge { app, child, n: 0 });
            }
            self.nodes[f].edges = Some(edges);
        }

        let jobs: Vec<(usize, Option<usize>, Arc<DiffNode>, u64)> = if fresh.is_empty() {
            vec![(f, None, self.nodes[f].tree.clone(), rollout_seed(self.cfg.seed, iter, 0))]
        } else {
            fresh
                .iter()
                .enumerate()
                .map(|(j, &(i, e))| {
                    (i, Some(e), self.nodes[i].tree.clone(), rollout_seed(self.cfg.seed, iter, j))
                })
                .collect()
        };
        let outs: Vec<Rollout> = {
            let this = &*self;
            par::map(&jobs, |(_, _, t, seed)| this.rollout_from(t, *seed, true))
        };

        let mut steps = 0;
        let mut reward = f64::NEG_INFINITY;
        for ((node, edge, _, _), out) in jobs.iter().zip(&outs) {
            steps += out.steps;
            reward = reward.max(out.reward);
            match edge {
                None => self.backprop(&path, &edge_path, out),
                Some(e) => {
                    let mut p = path.clone();
                    p.push(*node);
                    let mut ep = edge_path.clone();
                    ep.push((f, *e));
                    self.backprop(&p, &ep, out);
                }
            }
        }

        let applied_rule = edge_path
            .last()
            .map(|&(v, e)| self.nodes[v].edges.as_ref().unwrap()[e].app.clone());
        self.trace.push(TraceRecord {
            iter,
            selected_digest: self.nodes[f].digest.to_hex(),
            applied_rule,
            rollout_len: steps,
            rollouts: outs.len(),
            reward,
            best_cost: self.best_cost,
        });
        self.iter += 1;
        self.trace.last().unwrap()
    }

    pub fn iterations(&self) -> u64 {
        self.iter
    }

    pub fn rollouts(&self) -> u64 {
        self.rollouts
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn best_cost(&self) -> Option<f64> {
        self.best_cost
    }

    pub fn root_stats(&self) -> NodeStats {
        self.stats(0)
    }

    fn stats(&self, i: usize) -> NodeStats {
        let n = &self.nodes[i];
        NodeStats {
            w: n.w,
            n: n.n,
            own: n.own,
            edge_visits: n.edges.iter().flatten().map(|e| e.n).sum(),
            expanded: n.edges.is_some(),
        }
    }

    pub fn node_stats(&self) -> Vec<(Digest, NodeStats)> {
        (0..self.nodes.len())
            .map(|i| (self.nodes[i].digest, self.stats(i)))
            .collect()
    }

    /// Every node's visits equal its own rollouts plus the visits of its
    /// outgoing edges, and the root has seen every rollout.
    pub fn check_conservation(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            let s = self.stats(i);
            if n.n != s.own + s.edge_visits {
                return Err(format!(
                    "node {} has n={} but own={} and edge visits {}",
                    n.digest.short(),
                    n.n,
                    s.own,
                    s.edge_visits
                ));
            }
        }
        if self.nodes[0].n != self.rollouts {
            return Err(format!(
                "root n={} but {} rollouts completed",
                self.nodes[0].n, self.rollouts
            ));
        }
        Ok(())
    }

    fn done(&self) -> bool {
        match self.cfg.iterations {
            Some(n) => self.iter >= n,
            None => self.started.elapsed().as_secs_f64() >= self.cfg.budget_secs,
        }
    }

    /// Iterate until the budget or iteration count is spent.
    pub fn run(&mut self) {
        while !self.done() {
            self.step();
        }
    }

    /// States ranked by best reward seen, ties by digest.
    fn ranked(&self) -> Vec<(&Digest, &StateRecord)> {
        let mut v: Vec<_> = self.states.iter().collect();
        v.sort_by(|a, b| b.1.reward.total_cmp(&a.1.reward).then(a.0.cmp(b.0)));
        v
    }

    /// Final widget optimization over the best states.
    pub fn finish(self) -> Result<SearchResult, SearchError> {
        let mut best: Option<(f64, &StateRecord, CostContext, FinalMethod)> = None;
        for (_, rec) in self.ranked().into_iter().take(self.cfg.final_candidates) {
            let mut ctx = CostContext::new(rec.tree.clone(), &self.log, &self.model, self.model.screen)?;
            let (cost, method) = if ctx.space().size() <= self.cfg.exhaustive_bound as u128 {
                (optimize_exhaustive(&mut ctx), FinalMethod::Exhaustive)
            } else {
                let start = rec.sample.as_ref().map(|s| s.assignment.clone()).unwrap_or_default();
                (optimize_descent(&mut ctx, &start), FinalMethod::Descent)
            };
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, rec, ctx, method));
            }
        }
        let (_, rec, ctx, method) = best.expect("the root state is always recorded");
        let assignment = ctx.assignment();
        let breakdown = ctx.breakdown();
        let spec = InterfaceSpec::new(
            rec.tree.clone(),
            ctx.widget_tree(),
            self.model.screen,
            &self.log.queries()[0],
        )?;
        Ok(SearchResult {
            tree: rec.tree.clone(),
            assignment,
            spec,
            breakdown,
            sampled_cost: rec.sample.as_ref().map(|s| s.cost),
            final_method: method,
            iterations: self.iter,
            rollouts: self.rollouts,
            states: self.nodes.len(),
            trace: self.trace.clone(),
            elapsed_secs: self.started.elapsed().as_secs_f64(),
        })
    }
}

/// Search for the lowest-cost interface for `log`.
pub fn run_search(log: &QueryLog, model: &CostModel, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    let mut s = Search::new(log.clone(), model.clone(), cfg.clone())?;
    s.run();
    s.finish()
}

#[cfg(test)]
mod tests;
