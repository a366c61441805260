//! Confinement checks, largest-box search, enumeration, verdicts and model export.

mod confine;
mod export;
mod search;

use crate::lp::{LpError, SolveOptions};
use crate::model::{box_size, ActionModel, LinearClassifier};
use crate::rep::{Guarantee, RepError, RestrictionSet};

pub use confine::{
    certificate_value, is_box_confined, CertificateBundle, Checker, ConfinementResult, ConfinementStatus, Witness,
};
pub use export::{export_fcp_model, import_solution, ExportFormat, ExportOptions, ImportedSolution, SolutionCheck};
pub use search::{enumerate_confined_boxes, find_largest_confined_box, Enumeration, FoundBox};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("inconclusive: node cap of {node_cap} reached after {nodes} nodes")]
    Inconclusive { nodes: usize, node_cap: usize },
    #[error("{0}")]
    Export(String),
}

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub lp: SolveOptions,
    pub node_cap: usize,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            lp: SolveOptions::default(),
            node_cap: DEFAULT_NODE_CAP,
            workers: None,
        }
    }
}

impl VerifyOptions {
    fn batch_size(&self) -> usize {
        self.workers.unwrap_or_else(rayon::current_num_threads).max(1)
    }

    pub(crate) fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> T {
        match self.workers {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                Ok(pool) => pool.install(job),
                Err(_) => job(),
            },
            None => job(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictState {
    Responsive,
    Confined,
    Neither,
    Inconclusive,
}

impl VerdictState {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictState::Responsive => "responsive",
            VerdictState::Confined => "confined",
            VerdictState::Neither => "neither",
            VerdictState::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub state: VerdictState,
    pub largest_box: Option<FoundBox>,
    pub guarantee: Guarantee,
    /// Why the verdict is inconclusive, when it is.
    pub reason: Option<String>,
    /// Status of the full region box.
    pub region_status: Option<ConfinementStatus>,
}

/// Responsive, confined or neither for the whole region.
pub fn verify_region(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    opts: &VerifyOptions,
) -> Result<Verdict, VerifyError> {
    let checker = Checker::new(m, f, rs, *opts)?;
    let guarantee = rs.guarantee();
    let full = m.full_box();
    let root = checker.check(&full)?;
    if root.is_confined() {
        return Ok(Verdict {
            state: VerdictState::Confined,
            largest_box: Some(FoundBox {
                size: box_size(&full, m),
                bx: full,
                certificates: root.certificates.clone().expect("certificates"),
            }),
            guarantee,
            reason: None,
            region_status: Some(root.status),
        });
    }
    let found = opts.run(|| search::Search::new(&checker).largest(&[]));
    match found {
        Err(VerifyError::Inconclusive { nodes, node_cap }) => Ok(Verdict {
            state: VerdictState::Inconclusive,
            largest_box: None,
            guarantee,
            reason: Some(format!("node cap of {node_cap} reached after {nodes} nodes")),
            region_status: Some(root.status),
        }),
        Err(e) => Err(e),
        Ok(None) if guarantee == Guarantee::RelaxedSound => Ok(Verdict {
            state: VerdictState::Inconclusive,
            largest_box: None,
            guarantee,
            reason: Some("no confined box certified, but the relaxation cannot prove responsiveness".into()),
            region_status: Some(root.status),
        }),
        Ok(None) => Ok(Verdict {
            state: VerdictState::Responsive,
            largest_box: None,
            guarantee,
            reason: None,
            region_status: Some(root.status),
        }),
        Ok(Some(b)) => Ok(Verdict {
            state: VerdictState::Neither,
            largest_box: Some(b),
            guarantee,
            reason: None,
            region_status: Some(root.status),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_problem, IntBox, Problem};
    use crate::rational::{int, ratio};
    use crate::rep::{check_tu_assumptions, select_restrictions, Policy, DEFAULT_RESTRICTION_CAP};

    const ONE_D: &str = r#"{"classifier": {"weights": [1], "intercept": -6},
        "features": [{"name": "x", "lower": 0, "upper": 10, "actionability": "immutable"}]}"#;

    const COUNTER: &str = r#"{"classifier": {"weights": [1, 0], "intercept": "-0.5"},
        "features": [
          {"name": "x1", "lower": 0, "upper": 1, "actionability": "free"},
          {"name": "x2", "lower": 0, "upper": 10, "actionability": "free"}],
        "constraints": [{"kind": "scaled_linkage", "scope": "a",
          "operands": [{"feature": "x2", "scale": 1}, {"feature": "x1", "scale": 11}], "sense": "eq", "bound": 0}],
        "region": {"fixed": {"x1": 0}, "bounds": {"x2": [5, 10]}}}"#;

    fn load(text: &str, policy: Policy) -> (Problem, RestrictionSet) {
        let p = parse_problem(text).unwrap().lowered().unwrap();
        let rs = select_restrictions(&p.model, &check_tu_assumptions(&p.model), policy, DEFAULT_RESTRICTION_CAP).unwrap();
        (p, rs)
    }

    #[test]
    fn one_d_box_checks() {
        let (p, rs) = load(ONE_D, Policy::Exact);
        let opts = VerifyOptions::default();
        let r = is_box_confined(&p.model, &p.classifier, &rs, &IntBox::new(vec![0], vec![5]), &opts).unwrap();
        assert!(r.is_confined());
        let bundle = r.certificates.unwrap();
        assert_eq!(bundle.per_restriction.len(), 1);
        assert!(bundle.validate(&p.model, &p.classifier).unwrap());

        let r = is_box_confined(&p.model, &p.classifier, &rs, &IntBox::new(vec![0], vec![6]), &opts).unwrap();
        assert_eq!(r.status, ConfinementStatus::NotConfined);
        assert_eq!(r.witness.unwrap().x, vec![int(6)]);
    }

    #[test]
    fn one_d_search_and_enumeration() {
        let (p, rs) = load(ONE_D, Policy::Exact);
        let opts = VerifyOptions::default();
        let best = find_largest_confined_box(&p.model, &p.classifier, &rs, &[], &opts)
            .unwrap()
            .unwrap();
        assert_eq!(best.bx, IntBox::new(vec![0], vec![5]));
        assert_eq!(best.size, ratio(1, 2));
        let none = find_largest_confined_box(&p.model, &p.classifier, &rs, std::slice::from_ref(&best.bx), &opts).unwrap();
        assert!(none.is_none());

        let e = enumerate_confined_boxes(&p.model, &p.classifier, &rs, 10, &opts).unwrap();
        assert_eq!(e.boxes.len(), 1);
        assert!(e.exhausted);

        let v = verify_region(&p.model, &p.classifier, &rs, &opts).unwrap();
        assert_eq!(v.state, VerdictState::Neither);
        assert_eq!(v.largest_box.unwrap().bx, IntBox::new(vec![0], vec![5]));
    }

    #[test]
    fn trivial_verdicts() {
        let (p, rs) = load(
            r#"{"classifier": {"weights": [1, 1], "intercept": -100},
                "features": [{"name": "a", "lower": 0, "upper": 10, "actionability": "immutable"},
                             {"name": "b", "lower": 0, "upper": 10, "actionability": "immutable"}]}"#,
            Policy::Exact,
        );
        let v = verify_region(&p.model, &p.classifier, &rs, &VerifyOptions::default()).unwrap();
        assert_eq!(v.state, VerdictState::Confined);
        assert_eq!(v.largest_box.unwrap().size, int(2));

        let (p, rs) = load(
            r#"{"classifier": {"weights": [1], "intercept": 1000},
                "features": [{"name": "x", "lower": 0, "upper": 10, "actionability": "free"}]}"#,
            Policy::Exact,
        );
        let v = verify_region(&p.model, &p.classifier, &rs, &VerifyOptions::default()).unwrap();
        assert_eq!(v.state, VerdictState::Responsive);
        assert!(v.largest_box.is_none());
    }

    #[test]
    fn counterexample_exact_and_relaxed() {
        let opts = VerifyOptions::default();
        let (p, rs) = load(COUNTER, Policy::Exact);
        assert_eq!(rs.len(), 2);
        assert_eq!(rs.guarantee(), Guarantee::Exact);
        let full = p.model.full_box();
        let r = is_box_confined(&p.model, &p.classifier, &rs, &full, &opts).unwrap();
        assert!(r.is_confined());

        let (p, rs) = load(COUNTER, Policy::Relaxed);
        assert_eq!(rs.guarantee(), Guarantee::RelaxedSound);
        let r = is_box_confined(&p.model, &p.classifier, &rs, &full, &opts).unwrap();
        assert_eq!(r.status, ConfinementStatus::UnknownNotConfined);
        let w = r.witness.unwrap();
        assert!(w.a[0] >= ratio(1, 2));
        let v = verify_region(&p.model, &p.classifier, &rs, &opts).unwrap();
        assert_ne!(v.state, VerdictState::Responsive);
    }

    #[test]
    fn node_cap_is_inconclusive() {
        let (p, rs) = load(ONE_D, Policy::Exact);
        let opts = VerifyOptions {
            node_cap: 1,
            ..VerifyOptions::default()
        };
        let v = verify_region(&p.model, &p.classifier, &rs, &opts).unwrap();
        assert_eq!(v.state, VerdictState::Inconclusive);
        assert!(v.reason.is_some());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (p, rs) = load(
            r#"{"classifier": {"weights": [2, -1, 1], "intercept": -9},
                "features": [{"name": "a", "lower": 0, "upper": 4, "actionability": "immutable"},
                             {"name": "b", "lower": 0, "upper": 4, "actionability": "monotone_increase", "step": {"upper": 1}},
                             {"name": "c", "lower": 0, "upper": 3, "actionability": "free", "step": {"lower": -1, "upper": 1}}]}"#,
            Policy::Exact,
        );
        let run = |w| {
            let opts = VerifyOptions {
                workers: Some(w),
                ..VerifyOptions::default()
            };
            enumerate_confined_boxes(&p.model, &p.classifier, &rs, 5, &opts)
                .unwrap()
                .boxes
                .into_iter()
                .map(|b| b.bx)
                .collect::<Vec<_>>()
        };
        let one = run(1);
        assert!(!one.is_empty());
        assert_eq!(one, run(4));
        for (i, a) in one.iter().enumerate() {
            for b in &one[i + 1..] {
                assert!(a.is_disjoint(b));
            }
        }
    }

    #[test]
    fn export_one_d() {
        let (p, rs) = load(ONE_D, Policy::Exact);
        let opts = ExportOptions::default();
        let lp = export_fcp_model(&p.model, &p.classifier, &rs, &[], &opts).unwrap();
        assert_eq!(lp, export_fcp_model(&p.model, &p.classifier, &rs, &[], &opts).unwrap());
        assert!(lp.contains(" obj: 0.1 u1 - 0.1 l1\n"));
        for y in ["y1", "y5"] {
            assert!(lp.contains(y));
        }
        assert!(!lp.contains("y6"));
        assert_eq!(lp.matches('[').count(), 1);

        let ex = export_fcp_model(&p.model, &p.classifier, &rs, &[IntBox::new(vec![0], vec![5])], &opts).unwrap();
        assert!(ex.contains("Binaries\n zu1_1 zl1_1\n"));
        for row in ["exu1_1:", "exl1_1:", "exz1:"] {
            assert!(ex.contains(row));
        }

        let mps = export_fcp_model(
            &p.model,
            &p.classifier,
            &rs,
            &[],
            &ExportOptions {
                format: ExportFormat::Mps,
                ..ExportOptions::default()
            },
        )
        .unwrap();
        assert!(mps.contains("QCMATRIX"));
        assert!(mps.ends_with("ENDATA\n"));
    }

    #[test]
    fn solution_round_trip() {
        let (p, rs) = load(ONE_D, Policy::Exact);
        let r = is_box_confined(&p.model, &p.classifier, &rs, &IntBox::new(vec![0], vec![5]), &VerifyOptions::default())
            .unwrap();
        let y = &r.certificates.unwrap().per_restriction[0].1.y;
        let mut text = String::from("u1 = 5\nl1 = 0\n");
        for (i, v) in y.iter().enumerate() {
            text.push_str(&format!("y{} = {}\n", i + 1, crate::rational::to_string(v)));
        }
        let (sol, check) = import_solution(&text, &p.model, &p.classifier, &rs, &[]).unwrap();
        assert!(check.is_valid(), "{:?}", check.problems);
        assert_eq!(sol.bx, IntBox::new(vec![0], vec![5]));

        let bad = text.replace("u1 = 5", "u1 = 6");
        let (_, check) = import_solution(&bad, &p.model, &p.classifier, &rs, &[]).unwrap();
        assert!(!check.is_valid());
    }
}
