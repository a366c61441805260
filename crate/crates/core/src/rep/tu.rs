use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{domain_size, VarRef};
use crate::model::{ActionModel, ConstraintKind, Scope};

/// Reasons the discrete relaxation may be inexact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Feature shared by several K-hot constraints.
    A1 { feature: usize, constraints: Vec<usize> },
    /// Linkage component joining several K-hot features.
    A2 { component: Vec<usize>, k_hot_features: Vec<usize> },
    /// Cycle in the implication graph, listed as a feature path.
    A3 { cycle: Vec<usize> },
    /// Constraint outside the linear-recourse classes.
    NonLrc { constraint: usize, kind: ConstraintKind },
}

impl Violation {
    pub fn tag(&self) -> &'static str {
        match self {
            Violation::A1 { .. } => "A1",
            Violation::A2 { .. } => "A2",
            Violation::A3 { .. } => "A3",
            Violation::NonLrc { .. } => "non_lrc",
        }
    }

    pub fn message(&self, m: &ActionModel) -> String {
        let names = |fs: &[usize]| fs.iter().map(|f| m.features[*f].name.as_str()).collect::<Vec<_>>().join(", ");
        match self {
            Violation::A1 { feature, constraints } => format!(
                "feature {} appears in K-hot constraints {:?}",
                m.features[*feature].name, constraints
            ),
            Violation::A2 { k_hot_features, .. } => {
                format!("linkages connect K-hot features {}", names(k_hot_features))
            }
            Violation::A3 { cycle } => format!("implication cycle through {}", names(cycle)),
            Violation::NonLrc { constraint, kind } => {
                format!("constraint {constraint} ({kind:?}) is not a linear recourse constraint")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuReport {
    pub passes: bool,
    pub violations: Vec<Violation>,
    /// Variables whose fixing turns every non-linear-recourse constraint into bounds.
    pub suggested_restrictions: Vec<VarRef>,
}

fn is_fixed(m: &ActionModel, fixed: &BTreeSet<VarRef>, v: VarRef) -> bool {
    if fixed.contains(&v) || domain_size(m, v) <= 1 {
        return true;
    }
    v.scope == Scope::XPlusA
        && domain_size(m, VarRef::new(Scope::X, v.feature)) <= 1
        && domain_size(m, VarRef::new(Scope::A, v.feature)) <= 1
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = v;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
}

/// Assumption violations once the given variables (and all singleton domains) are fixed.
///
/// Constraints are re-read after fixing: no free operand is trivial, one free
/// unit operand is a bound, two free unit operands form a linkage edge, and
/// K-hot constraints keep only their free operands.
pub fn analyze_with_fixings(m: &ActionModel, fixed: &BTreeSet<VarRef>) -> Vec<Violation> {
    let d = m.dim();
    let mut violations = Vec::new();
    let mut k_hot_members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    for (ci, c) in m.constraints.iter().enumerate() {
        let free: Vec<_> = c
            .operands
            .iter()
            .filter(|o| !is_fixed(m, fixed, VarRef::new(c.scope, o.feature)))
            .collect();
        let all_unit = free.iter().all(|o| o.coef.abs() == 1);
        match c.kind {
            ConstraintKind::IntegerBound => {}
            ConstraintKind::KHot | ConstraintKind::OneHot => {
                if free.len() >= 2 {
                    for o in &free {
                        k_hot_members.entry(o.feature).or_default().push(ci);
                    }
                }
            }
            ConstraintKind::DirectionalLinkage | ConstraintKind::ScaledLinkage | ConstraintKind::Thermometer => {
                match free.len() {
                    0 => {}
                    1 if all_unit => {}
                    2 if all_unit && c.kind != ConstraintKind::Thermometer => {
                        edges.push((free[0].feature, free[1].feature))
                    }
                    _ if c.kind == ConstraintKind::Thermometer && all_unit => {
                        edges.extend(free.windows(2).map(|w| (w[0].feature, w[1].feature)))
                    }
                    _ => violations.push(Violation::NonLrc {
                        constraint: ci,
                        kind: c.kind,
                    }),
                }
            }
            ConstraintKind::IfThen => {
                let ant_fixed = is_fixed(m, fixed, VarRef::new(c.scope, c.operands[0].feature));
                let cons = c.operands[1];
                let cons_ok = cons.coef.abs() == 1 || is_fixed(m, fixed, VarRef::new(c.scope, cons.feature));
                if !(ant_fixed && cons_ok) {
                    violations.push(Violation::NonLrc {
                        constraint: ci,
                        kind: c.kind,
                    });
                }
            }
        }
    }

    for (feature, cs) in &k_hot_members {
        if cs.len() > 1 {
            violations.push(Violation::A1 {
                feature: *feature,
                constraints: cs.clone(),
            });
        }
    }

    let mut uf = UnionFind((0..d).collect());
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); d];
    for &(u, v) in &edges {
        let (ru, rv) = (uf.find(u), uf.find(v));
        if ru == rv {
            let mut cycle = path(&adjacency, u, v);
            if cycle.is_empty() {
                cycle = vec![u];
            }
            violations.push(Violation::A3 { cycle });
        } else {
            uf.0[ru] = rv;
        }
        adjacency[u].push(v);
        adjacency[v].push(u);
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for j in 0..d {
        let r = uf.find(j);
        components.entry(r).or_default().push(j);
    }
    for comp in components.values() {
        if comp.len() < 2 {
            continue;
        }
        let k_hot: Vec<usize> = comp.iter().copied().filter(|j| k_hot_members.contains_key(j)).collect();
        if k_hot.len() >= 2 {
            violations.push(Violation::A2 {
                component: comp.clone(),
                k_hot_features: k_hot,
            });
        }
    }
    violations
}

/// Vertex path from `from` to `to` in the current forest, both ends included.
fn path(adjacency: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    if from == to {
        return vec![from];
    }
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &w in &adjacency[v] {
            if prev[w] == usize::MAX {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    if prev[to] == usize::MAX {
        return Vec::new();
    }
    let mut out = vec![to];
    let mut c = to;
    while c != from {
        c = prev[c];
        out.push(c);
    }
    out.reverse();
    out
}

/// Greedy choice of variables to fix so every non-linear-recourse constraint
/// reduces to bounds: if-then constraints fix their antecedent, scaled linkages
/// fix their smallest-domain free operand until one unit operand remains.
fn suggest(m: &ActionModel, violations: &[Violation]) -> Vec<VarRef> {
    let mut fixed: BTreeSet<VarRef> = BTreeSet::new();
    let mut order = Vec::new();
    for v in violations {
        let Violation::NonLrc { constraint, .. } = v else { continue };
        let c = &m.constraints[*constraint];
        if c.kind == ConstraintKind::IfThen {
            let ant = VarRef::new(c.scope, c.operands[0].feature);
            if !is_fixed(m, &fixed, ant) {
                fixed.insert(ant);
                order.push(ant);
            }
            let cons = c.operands[1];
            let cv = VarRef::new(c.scope, cons.feature);
            if cons.coef.abs() != 1 && !is_fixed(m, &fixed, cv) {
                fixed.insert(cv);
                order.push(cv);
            }
            continue;
        }
        loop {
            let free: Vec<_> = c
                .operands
                .iter()
                .filter(|o| !is_fixed(m, &fixed, VarRef::new(c.scope, o.feature)))
                .collect();
            if free.is_empty() || (free.len() == 1 && free[0].coef.abs() == 1) {
                break;
            }
            let pick = free
                .iter()
                .map(|o| VarRef::new(c.scope, o.feature))
                .min_by_key(|v| (domain_size(m, *v), v.feature))
                .expect("nonempty");
            fixed.insert(pick);
            order.push(pick);
        }
    }
    order
}

pub fn check_tu_assumptions(m: &ActionModel) -> TuReport {
    let violations = analyze_with_fixings(m, &BTreeSet::new());
    let suggested_restrictions = suggest(m, &violations);
    TuReport {
        passes: violations.is_empty(),
        violations,
        suggested_restrictions,
    }
}
