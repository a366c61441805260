//! Best-first branch and bound over integer boxes.
//!
//! A node's bound is its own size: confinement is inherited by sub-boxes, and
//! every proper sub-box is strictly smaller. Nodes are ordered by size, then by
//! the lexicographically smallest `(l, u)`, so the first confined node that is
//! not beaten by anything left in the queue is the optimum.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rayon::prelude::*;

use super::confine::{Checker, CertificateBundle};
use super::{VerifyError, VerifyOptions};
use crate::model::{box_size, ActionModel, IntBox, LinearClassifier};
use crate::rational::{self, Rational};
use crate::rep::RestrictionSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoundBox {
    pub bx: IntBox,
    pub size: Rational,
    pub certificates: CertificateBundle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    size: Rational,
    bx: IntBox,
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| other.bx.l.cmp(&self.bx.l))
            .then_with(|| other.bx.u.cmp(&self.bx.u))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maximal sub-boxes of `b` that avoid the closed box `[lo, hi]`, where
/// `lo`/`hi` are already rounded inward to integers.
fn split_around(b: &IntBox, below: &[i64], above: &[i64]) -> Vec<IntBox> {
    let mut out = Vec::new();
    // features with the widest remaining range first
    let mut order: Vec<usize> = (0..b.dim()).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(b.u[j] - b.l[j]), j));
    for j in order {
        if below[j] >= b.l[j] {
            let mut c = b.clone();
            c.u[j] = below[j];
            out.push(c);
        }
        if above[j] <= b.u[j] {
            let mut c = b.clone();
            c.l[j] = above[j];
            out.push(c);
        }
    }
    out
}

/// Children excluding a (possibly fractional) witness point.
fn split_point(b: &IntBox, x: &[Rational]) -> Vec<IntBox> {
    let below: Vec<i64> = x.iter().map(|v| rational::ceil_i64(v).unwrap_or(i64::MAX) - 1).collect();
    let above: Vec<i64> = x.iter().map(|v| rational::floor_i64(v).unwrap_or(i64::MIN) + 1).collect();
    split_around(b, &below, &above)
}

/// Children strictly outside the exclusion `e` along one axis.
fn split_exclusion(b: &IntBox, e: &IntBox) -> Vec<IntBox> {
    let below: Vec<i64> = e.l.iter().map(|v| v - 1).collect();
    let above: Vec<i64> = e.u.iter().map(|v| v + 1).collect();
    split_around(b, &below, &above)
}

pub(crate) struct Search<'c, 'a> {
    pub checker: &'c Checker<'a>,
    pub nodes: usize,
}

impl<'c, 'a> Search<'c, 'a> {
    pub fn new(checker: &'c Checker<'a>) -> Self {
        Search { checker, nodes: 0 }
    }

    pub fn largest(&mut self, exclusions: &[IntBox]) -> Result<Option<FoundBox>, VerifyError> {
        let m = self.checker.m;
        let opts = self.checker.opts;
        let batch = opts.batch_size();
        let mut heap = BinaryHeap::new();
        let mut seen: HashSet<IntBox> = HashSet::new();
        let root = m.full_box();
        seen.insert(root.clone());
        heap.push(Node {
            size: box_size(&root, m),
            bx: root,
        });
        let mut best: Option<(Node, CertificateBundle)> = None;

        loop {
            let mut pending: Vec<Node> = Vec::with_capacity(batch);
            while pending.len() < batch {
                let Some(top) = heap.peek() else { break };
                if let Some((b, _)) = &best {
                    if top <= b {
                        break;
                    }
                }
                let node = heap.pop().expect("peeked");
                if let Some(e) = exclusions.iter().find(|e| !node.bx.is_disjoint(e)) {
                    for c in split_exclusion(&node.bx, e) {
                        if seen.insert(c.clone()) {
                            heap.push(Node {
                                size: box_size(&c, m),
                                bx: c,
                            });
                        }
                    }
                    continue;
                }
                pending.push(node);
            }
            if pending.is_empty() {
                break;
            }
            if self.nodes + pending.len() > opts.node_cap {
                return Err(VerifyError::Inconclusive {
                    nodes: self.nodes,
                    node_cap: opts.node_cap,
                });
            }
            self.nodes += pending.len();
            let checker = self.checker;
            let results: Vec<_> = if pending.len() > 1 {
                pending.par_iter().map(|n| checker.check(&n.bx)).collect()
            } else {
                pending.iter().map(|n| checker.check(&n.bx)).collect()
            };
            for (node, result) in pending.into_iter().zip(results) {
                let result = result?;
                if result.is_confined() {
                    let better = best.as_ref().is_none_or(|(b, _)| node > *b);
                    if better {
                        let bundle = result.certificates.clone().expect("confined carries certificates");
                        best = Some((node, bundle));
                    }
                    continue;
                }
                let x = &result.witness.as_ref().expect("witness").x;
                for c in split_point(&node.bx, x) {
                    if seen.insert(c.clone()) {
                        heap.push(Node {
                            size: box_size(&c, m),
                            bx: c,
                        });
                    }
                }
            }
        }
        Ok(best.map(|(n, certificates)| FoundBox {
            bx: n.bx,
            size: n.size,
            certificates,
        }))
    }
}

/// Largest confined box disjoint from every exclusion.
pub fn find_largest_confined_box(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    exclusions: &[IntBox],
    opts: &VerifyOptions,
) -> Result<Option<FoundBox>, VerifyError> {
    let checker = Checker::new(m, f, rs, *opts)?;
    opts.run(|| Search::new(&checker).largest(exclusions))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub boxes: Vec<FoundBox>,
    /// The search ran out of confined boxes before reaching `max_boxes`.
    pub exhausted: bool,
    pub nodes: usize,
}

/// Repeated searches, each excluding all earlier boxes.
pub fn enumerate_confined_boxes(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    max_boxes: usize,
    opts: &VerifyOptions,
) -> Result<Enumeration, VerifyError> {
    let checker = Checker::new(m, f, rs, *opts)?;
    opts.run(|| {
        let mut search = Search::new(&checker);
        let mut boxes: Vec<FoundBox> = Vec::new();
        let mut exhausted = false;
        while boxes.len() < max_boxes.max(1) {
            let exclusions: Vec<IntBox> = boxes.iter().map(|b| b.bx.clone()).collect();
            match search.largest(&exclusions)? {
                Some(found) => boxes.push(found),
                None => {
                    exhausted = true;
                    break;
                }
            }
        }
        Ok(Enumeration {
            boxes,
            exhausted,
            nodes: search.nodes,
        })
    })
}
