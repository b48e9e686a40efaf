//! Rewrite rules over DiffTrees.
//!
//! Rules are pluggable: a [`RuleSet`] is an ordered list of [`Rule`] objects,
//! and the default set holds the seven built-in rules. Every rule except
//! `Multi` has an inverse in the set.

mod align;
mod catalog;

use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rand::seq::IndexedRandom;
use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::difftree::{expressible, replace_at, DiffNode, Digest, NodeKind, Path};
use crate::sql::QueryLog;

pub use catalog::{All2Any, Any2All, Any2Opt, AnyPull, AnyPush, Multi, Opt2Any};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    All2Any,
    Any2All,
    Any2Opt,
    AnyPull,
    AnyPush,
    Multi,
    Opt2Any,
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::All2Any,
        RuleId::Any2All,
        RuleId::Any2Opt,
        RuleId::AnyPull,
        RuleId::AnyPush,
        RuleId::Multi,
        RuleId::Opt2Any,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::All2Any => "All2Any",
            RuleId::Any2All => "Any2All",
            RuleId::Any2Opt => "Any2Opt",
            RuleId::AnyPull => "AnyPull",
            RuleId::AnyPush => "AnyPush",
            RuleId::Multi => "Multi",
            RuleId::Opt2Any => "Opt2Any",
        }
    }

    pub fn inverse(self) -> Option<RuleId> {
        match self {
            RuleId::All2Any => Some(RuleId::Any2All),
            RuleId::Any2All => Some(RuleId::All2Any),
            RuleId::Any2Opt => Some(RuleId::Opt2Any),
            RuleId::Opt2Any => Some(RuleId::Any2Opt),
            RuleId::AnyPull => Some(RuleId::AnyPush),
            RuleId::AnyPush => Some(RuleId::AnyPull),
            RuleId::Multi => None,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The subtrees a rule matched at its site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Bindings {
    /// The whole site node.
    None,
    /// One child of an ALL site (All2Any).
    Slot(usize),
    /// One nested ANY child of an ANY site (AnyPull).
    Child(usize),
    /// Ascending child indices of an ANY site (AnyPush).
    Group(Vec<usize>),
    /// Consecutive children of an ALL site (Multi).
    Run { start: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: RuleId,
    pub site: Path,
    pub bindings: Bindings,
}

/// Trace record of one applied rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedRule {
    pub rule: RuleId,
    pub site_path: Path,
    pub before_digest: Digest,
    pub after_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("stale application: {rule} no longer matches at {site:?}")]
    Stale { rule: RuleId, site: Path },
    #[error("rule {0} is not in this rule set")]
    UnknownRule(RuleId),
}

/// A rewrite rule. `matches` lists the bindings to enumerate at a node;
/// `accepts` is the full pattern check used before applying, and may accept
/// bindings that are not enumerated.
pub trait Rule: Send + Sync {
    fn id(&self) -> RuleId;
    fn matches(&self, node: &DiffNode) -> Vec<Bindings>;
    fn accepts(&self, node: &DiffNode, bindings: &Bindings) -> bool;
    /// Rewrite a node that `accepts` the bindings.
    fn rewrite(&self, node: &DiffNode, bindings: &Bindings) -> Arc<DiffNode>;
}

pub struct RuleSet {
    rules: Vec<Box<dyn Rule>>,
    /// Matches per node. Matching only looks at the node itself, so walks
    /// that rewrite one site at a time reuse almost every entry.
    memo: RwLock<FxHashMap<MemoKey, Arc<[Local]>>>,
}

struct Local {
    rule: RuleId,
    bindings: Bindings,
    /// Digest of the rewritten node, computed when first needed.
    rewritten: OnceLock<Digest>,
}

/// Node digest plus child digests in order: bindings name child indices, and
/// the digest alone does not fix the order of ANY children.
type MemoKey = (Digest, Vec<Digest>);

/// Memo entries kept before the table is cleared.
const MEMO_CAP: usize = 1 << 16;

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::new(vec![
            Box::new(All2Any),
            Box::new(Any2All),
            Box::new(Any2Opt),
            Box::new(AnyPull),
            Box::new(AnyPush),
            Box::new(Multi),
            Box::new(Opt2Any),
        ])
    }
}

impl RuleSet {
    /// Rules are kept in name order so enumeration is deterministic.
    pub fn new(mut rules: Vec<Box<dyn Rule>>) -> Self {
        rules.sort_by_key(|r| r.id());
        RuleSet {
            rules,
            memo: RwLock::default(),
        }
    }

    pub fn without(mut self, id: RuleId) -> Self {
        self.rules.retain(|r| r.id() != id);
        self.memo = RwLock::default();
        self
    }

    pub fn ids(&self) -> Vec<RuleId> {
        self.rules.iter().map(|r| r.id()).collect()
    }

    fn rule(&self, id: RuleId) -> Option<&dyn Rule> {
        self.rules.iter().find(|r| r.id() == id).map(|r| &**r)
    }

    /// All applicable (rule, site) pairs: sites in pre-order, rules in name
    /// order at each site.
    pub fn enumerate(&self, tree: &DiffNode) -> Vec<RuleApplication> {
        let mut out = Vec::new();
        tree.walk(&mut |p, n| {
            for l in self.local(n).iter() {
                if !p.is_empty() {
                    let d = *l.rewritten.get_or_init(|| {
                        let r = self.rule(l.rule).expect("memo holds own rules");
                        r.rewrite(n, &l.bindings).digest()
                    });
                    if merges_with_sibling(tree, p, d) {
                        continue;
                    }
                }
                out.push(RuleApplication {
                    rule: l.rule,
                    site: p.to_vec(),
                    bindings: l.bindings.clone(),
                });
            }
        });
        out
    }

    fn local(&self, n: &DiffNode) -> Arc<[Local]> {
        let key = (n.digest(), n.children().iter().map(|c| c.digest()).collect());
        if let Some(v) = self.memo.read().expect("memo lock").get(&key) {
            return v.clone();
        }
        let v: Arc<[Local]> = self
            .rules
            .iter()
            .flat_map(|r| {
                r.matches(n).into_iter().map(|b| Local {
                    rule: r.id(),
                    bindings: b,
                    rewritten: OnceLock::new(),
                })
            })
            .collect();
        let mut memo = self.memo.write().expect("memo lock");
        if memo.len() >= MEMO_CAP {
            memo.clear();
        }
        memo.entry(key).or_insert(v).clone()
    }

    pub fn apply(
        &self,
        tree: &Arc<DiffNode>,
        app: &RuleApplication,
    ) -> Result<Arc<DiffNode>, RuleError> {
        let rule = self.rule(app.rule).ok_or(RuleError::UnknownRule(app.rule))?;
        let stale = || RuleError::Stale {
            rule: app.rule,
            site: app.site.clone(),
        };
        let node = tree.get(&app.site).ok_or_else(stale)?;
        if !rule.accepts(node, &app.bindings) {
            return Err(stale());
        }
        let new = rule.rewrite(node, &app.bindings);
        if merges_with_sibling(tree, &app.site, new.digest()) {
            return Err(stale());
        }
        replace_at(tree, &app.site, new).ok_or_else(stale)
    }

    /// Apply and record the trace entry.
    pub fn apply_traced(
        &self,
        tree: &Arc<DiffNode>,
        app: &RuleApplication,
    ) -> Result<(Arc<DiffNode>, AppliedRule), RuleError> {
        let after = self.apply(tree, app)?;
        let rec = AppliedRule {
            rule: app.rule,
            site_path: app.site.clone(),
            before_digest: tree.digest(),
            after_digest: after.digest(),
        };
        Ok((after, rec))
    }

    /// Up to `steps` uniformly random applications. Stops early at a tree
    /// with no applicable rule.
    pub fn random_walk<R: Rng>(
        &self,
        tree: &Arc<DiffNode>,
        steps: usize,
        rng: &mut R,
    ) -> Arc<DiffNode> {
        let mut cur = tree.clone();
        for _ in 0..steps {
            let apps = self.enumerate(&cur);
            let Some(app) = apps.choose(rng) else { break };
            cur = self.apply(&cur, app).expect("fresh application applies");
        }
        cur
    }
}

// A rewrite under an ANY that equals one of its siblings would be deduplicated
// away, losing an alternative's identity and making the step irreversible.
/// True if putting a node of digest `d` at `site` would make some subtree
/// on the path equal to a sibling under an ANY ancestor, which the ANY would
/// then merge away.
fn merges_with_sibling(tree: &DiffNode, site: &[usize], d: Digest) -> bool {
    let mut node = tree;
    for (k, &idx) in site.iter().enumerate() {
        if node.kind() == NodeKind::Any {
            let c = &node.children()[idx];
            let hit = node
                .children()
                .iter()
                .enumerate()
                .any(|(i, sib)| i != idx && same_after(sib, c, &site[k + 1..], d));
            if hit {
                return true;
            }
        }
        node = &node.children()[idx];
    }
    false
}

/// Whether `s` equals `c` with the node at `rest` replaced by one of digest
/// `d`. Ordered children must agree position by position; ANY children are
/// compared as sets, which is how their digest treats them.
fn same_after(s: &DiffNode, c: &DiffNode, rest: &[usize], d: Digest) -> bool {
    let Some((&j, below)) = rest.split_first() else {
        return s.digest() == d;
    };
    if s.kind() != c.kind() || s.payload() != c.payload() || s.children().len() != c.children().len() {
        return false;
    }
    if c.kind() == NodeKind::Any {
        let kept = |x: &Arc<DiffNode>| {
            c.children()
                .iter()
                .enumerate()
                .any(|(i, y)| i != j && y.digest() == x.digest())
        };
        let mut left = s.children().iter().filter(|x| !kept(x));
        return match (left.next(), left.next()) {
            (Some(x), None) => same_after(x, &c.children()[j], below, d),
            _ => false,
        };
    }
    let others = s
        .children()
        .iter()
        .zip(c.children())
        .enumerate()
        .all(|(i, (x, y))| i == j || x.digest() == y.digest());
    others && same_after(&s.children()[j], &c.children()[j], below, d)
}

/// Enumerate with the default rule set.
pub fn enumerate_applications(tree: &DiffNode) -> Vec<RuleApplication> {
    RuleSet::default().enumerate(tree)
}

/// Apply with the default rule set.
pub fn apply(tree: &Arc<DiffNode>, app: &RuleApplication) -> Result<Arc<DiffNode>, RuleError> {
    RuleSet::default().apply(tree, app)
}

/// The application of `app.rule`'s inverse at the same site that undoes
/// `app`, given the trees before and after it. `None` for Multi.
///
/// For Any2All the slot to expand is the first ANY slot of the factored node;
/// the round trip restores the original only when factoring lost nothing.
pub fn inverse_application(
    before: &DiffNode,
    after: &DiffNode,
    app: &RuleApplication,
) -> Option<RuleApplication> {
    let inv = app.rule.inverse()?;
    let bindings = match (&app.rule, &app.bindings) {
        (RuleId::Any2All, _) => {
            let j = after
                .get(&app.site)?
                .children()
                .iter()
                .position(|c| c.kind() == NodeKind::Any)?;
            Bindings::Slot(j)
        }
        (RuleId::AnyPull, Bindings::Child(j)) => {
            // the pulled grandchildren sit at j.. in the flattened node
            let pulled = before.get(&app.site)?.children().get(*j)?.children().len();
            Bindings::Group((*j..*j + pulled).collect())
        }
        (RuleId::AnyPush, Bindings::Group(g)) => Bindings::Child(g[0]),
        _ => Bindings::None,
    };
    Some(RuleApplication {
        rule: inv,
        site: app.site.clone(),
        bindings,
    })
}

/// True iff every log query expressible by `before` is expressible by `after`.
pub fn check_preserves_log(before: &DiffNode, after: &DiffNode, log: &QueryLog) -> bool {
    log.iter()
        .all(|q| expressible(before, q).is_none() || expressible(after, q).is_some())
}
