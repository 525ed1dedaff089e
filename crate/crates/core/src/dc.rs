//! Dimension coupling: reduces learning `h* ∈ S^{d−1}` to `d − 1` calls of
//! the two-dimensional learner, one per join node of an [`AggregationTree`].
//!
//! Each join replaces its two children (basis vectors or earlier estimates)
//! by the learner's estimate inside their span. The children span disjoint
//! subspaces, so the working set stays orthonormal and the root holds the
//! final estimate.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dc2::dc2;
use crate::error::{HdcError, Result};
use crate::linalg::{check_orthonormal, gram_schmidt, UnitVector};
use crate::oracle::{check_rho, SignOracle};
use crate::schedule::{compute_rounds, split_budget};
use crate::tree::{AggregationTree, TreeNode};

/// Largest per-call accuracy for which the aggregation error bound holds.
pub const MAX_CALL_EPS: f64 = 5.0 / 18.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcMode {
    /// Per-call rounds from the accuracy/confidence targets of the whole run.
    Schedule { eps_total: f64, delta_total: f64 },
    /// A fixed number of queries shared as evenly as possible by all calls.
    Budget { total_queries: usize },
}

#[derive(Debug, Clone)]
pub struct DcConfig {
    pub rho: f64,
    pub mode: DcMode,
    pub tree: AggregationTree,
}

impl DcConfig {
    /// Accuracy and confidence handed to each two-dimensional call:
    /// `ε̃ / (5(d−1))` and `δ̃ / (d−1)`.
    pub fn per_call_targets(eps_total: f64, delta_total: f64, d: usize) -> (f64, f64) {
        let calls = (d - 1) as f64;
        (eps_total / (5.0 * calls), delta_total / calls)
    }

    /// Rounds for each join, indexed by post-order position.
    pub fn rounds_per_call(&self) -> Result<Vec<usize>> {
        check_rho(self.rho)?;
        let calls = self.tree.leaf_count() - 1;
        match self.mode {
            DcMode::Schedule {
                eps_total,
                delta_total,
            } => {
                if !(eps_total > 0.0 && eps_total.is_finite()) {
                    return Err(HdcError::param("eps", format!("must be positive, got {eps_total}")));
                }
                if !(delta_total > 0.0 && delta_total < 1.0) {
                    return Err(HdcError::param(
                        "delta",
                        format!("must lie in (0, 1), got {delta_total}"),
                    ));
                }
                let (eps, delta) =
                    Self::per_call_targets(eps_total, delta_total, self.tree.leaf_count());
                if eps > MAX_CALL_EPS {
                    return Err(HdcError::param(
                        "eps",
                        format!("per-call accuracy {eps} exceeds 5/18"),
                    ));
                }
                Ok(vec![compute_rounds(eps, delta, self.rho)?; calls])
            }
            DcMode::Budget { total_queries } => split_budget(total_queries, calls),
        }
    }
}

/// State after one join, handed to observers.
pub struct DcStep<'a> {
    /// Post-order index of the join.
    pub call: usize,
    pub rounds: usize,
    pub estimate: &'a UnitVector,
    working: &'a [Option<UnitVector>],
}

impl DcStep<'_> {
    /// The current working set: untouched basis vectors plus the estimates
    /// that have not been consumed by a parent yet.
    pub fn working_set(&self) -> impl Iterator<Item = &UnitVector> + '_ {
        self.working.iter().flatten()
    }
}

pub fn dc<O: SignOracle + ?Sized>(
    basis: &[UnitVector],
    config: &DcConfig,
    oracle: &mut O,
) -> Result<UnitVector> {
    dc_observed(basis, config, oracle, |_| {})
}

/// [`dc`] with a callback after every join.
pub fn dc_observed<O, F>(
    basis: &[UnitVector],
    config: &DcConfig,
    oracle: &mut O,
    mut observe: F,
) -> Result<UnitVector>
where
    O: SignOracle + ?Sized,
    F: FnMut(&DcStep<'_>),
{
    let tree = &config.tree;
    let d = tree.leaf_count();
    if basis.len() != d {
        return Err(HdcError::param(
            "basis",
            format!("tree has {d} leaves but the basis has {} vectors", basis.len()),
        ));
    }
    if let Some(bad) = basis.iter().find(|e| e.dim() != basis[0].dim()) {
        return Err(HdcError::DimensionMismatch {
            expected: basis[0].dim(),
            actual: bad.dim(),
        });
    }
    let refs: Vec<&UnitVector> = basis.iter().collect();
    check_orthonormal(&refs, 1e-9)?;
    let rounds = config.rounds_per_call()?;

    let mut working: Vec<Option<UnitVector>> = tree
        .nodes()
        .iter()
        .map(|node| match *node {
            TreeNode::Leaf(label) => Some(basis[label].clone()),
            TreeNode::Join(..) => None,
        })
        .collect();

    for (call, (&id, &r)) in tree.post_order_joins().iter().zip(&rounds).enumerate() {
        let TreeNode::Join(l, r_child) = tree.nodes()[id] else {
            unreachable!("post-order yields join nodes only");
        };
        let left = working[l].take().expect("left child is computed first");
        let right = working[r_child].take().expect("right child is computed first");
        let out = dc2(&left, &right, r, config.rho, oracle)?;
        working[id] = Some(out.estimate);
        observe(&DcStep {
            call,
            rounds: r,
            estimate: working[id].as_ref().expect("just stored"),
            working: &working,
        });
    }
    Ok(working[tree.root()].take().expect("root is the last join"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    #[default]
    Standard,
    Random,
}

impl FromStr for BasisKind {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(BasisKind::Standard),
            "random" => Ok(BasisKind::Random),
            other => Err(HdcError::param("basis", format!("unknown basis `{other}`"))),
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Standard => "standard",
            BasisKind::Random => "random",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub h_star: UnitVector,
    pub basis: Vec<UnitVector>,
}

/// Synthetic instance: `h*` is a normalized Gaussian vector; the basis is
/// either the standard one or an orthonormalized Gaussian matrix.
pub fn random_problem(d: usize, seed: u64, basis: BasisKind) -> Result<Problem> {
    if d < 2 {
        return Err(HdcError::param("d", format!("need at least 2 dimensions, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |n: usize| -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    let h_star = UnitVector::normalize(gaussian(d))?;
    let basis = match basis {
        BasisKind::Standard => (0..d)
            .map(|i| UnitVector::basis(d, i))
            .collect::<Result<Vec<_>>>()?,
        BasisKind::Random => {
            let rows: Vec<Vec<f64>> = (0..d).map(|_| gaussian(d)).collect();
            gram_schmidt(&rows)?
        }
    };
    Ok(Problem { h_star, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::estimation_error;
    use crate::oracle::{NoisyOracle, TruthOracle};
    use crate::tree::TreeKind;

    fn config(d: usize, rho: f64, mode: DcMode, kind: TreeKind) -> DcConfig {
        DcConfig {
            rho,
            mode,
            tree: kind.build(d).unwrap(),
        }
    }

    #[test]
    fn four_dims_three_calls() {
        for kind in [TreeKind::Balanced, TreeKind::Chain] {
            let p = random_problem(4, 1, BasisKind::Standard).unwrap();
            let mut oracle = TruthOracle::new(&p.h_star);
            let cfg = config(4, 0.0, DcMode::Budget { total_queries: 30 }, kind);
            let mut calls = 0;
            dc_observed(&p.basis, &cfg, &mut oracle, |_| calls += 1).unwrap();
            assert_eq!(calls, 3);
            assert_eq!(oracle.queries_used(), 30);
        }
    }

    #[test]
    fn per_call_split_of_tolerance() {
        let (eps, delta) = DcConfig::per_call_targets(0.1, 0.05, 25);
        assert!((eps - 0.1 / 120.0).abs() < 1e-18);
        assert!((eps - 8.333e-4).abs() < 1e-7);
        assert!((delta - 0.05 / 24.0).abs() < 1e-18);
    }

    #[test]
    fn noiseless_schedule_d25() {
        let d = 25;
        let per_call = (std::f64::consts::PI * 5.0 * 24.0 / 1e-3).log2().ceil() as u64;
        for seed in 0..20 {
            for kind in [TreeKind::Balanced, TreeKind::Chain] {
                let p = random_problem(d, seed, BasisKind::Standard).unwrap();
                let mut oracle = TruthOracle::new(&p.h_star);
                let cfg = config(
                    d,
                    0.0,
                    DcMode::Schedule {
                        eps_total: 1e-3,
                        delta_total: 0.1,
                    },
                    kind,
                );
                let h = dc(&p.basis, &cfg, &mut oracle).unwrap();
                assert!(estimation_error(&h, &p.h_star).unwrap() <= 1e-3);
                assert_eq!(oracle.queries_used(), 24 * per_call);
                assert!((h.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_basis_noiseless() {
        let d = 8;
        let p = random_problem(d, 42, BasisKind::Random).unwrap();
        let mut oracle = TruthOracle::new(&p.h_star);
        let cfg = config(
            d,
            0.0,
            DcMode::Schedule {
                eps_total: 1e-4,
                delta_total: 0.1,
            },
            TreeKind::Balanced,
        );
        let h = dc(&p.basis, &cfg, &mut oracle).unwrap();
        assert!(estimation_error(&h, &p.h_star).unwrap() <= 1e-4);
    }

    #[test]
    fn budget_mode_is_exact_under_noise() {
        let d = 10;
        let p = random_problem(d, 5, BasisKind::Standard).unwrap();
        let mut oracle = NoisyOracle::new(TruthOracle::new(&p.h_star), 0.2, 9).unwrap();
        let cfg = config(d, 0.2, DcMode::Budget { total_queries: 257 }, TreeKind::Chain);
        let mut seen = Vec::new();
        dc_observed(&p.basis, &cfg, &mut oracle, |s| seen.push(s.rounds)).unwrap();
        assert_eq!(oracle.queries_used(), 257);
        assert_eq!(seen, split_budget(257, 9).unwrap());
    }

    #[test]
    fn working_set_stays_orthonormal() {
        let d = 12;
        let p = random_problem(d, 3, BasisKind::Random).unwrap();
        let mut oracle = NoisyOracle::new(TruthOracle::new(&p.h_star), 0.1, 1).unwrap();
        let cfg = config(d, 0.1, DcMode::Budget { total_queries: 200 }, TreeKind::Balanced);
        dc_observed(&p.basis, &cfg, &mut oracle, |s| {
            let set: Vec<&UnitVector> = s.working_set().collect();
            assert_eq!(set.len(), d - 1 - s.call);
            check_orthonormal(&set, 1e-9).unwrap();
        })
        .unwrap();
    }

    #[test]
    fn config_errors() {
        let p = random_problem(4, 0, BasisKind::Standard).unwrap();
        let mut oracle = TruthOracle::new(&p.h_star);
        // budget below d − 1
        let cfg = config(4, 0.0, DcMode::Budget { total_queries: 2 }, TreeKind::Balanced);
        assert!(dc(&p.basis, &cfg, &mut oracle).is_err());
        // per-call eps above 5/18
        let cfg = config(
            4,
            0.0,
            DcMode::Schedule {
                eps_total: 5.0,
                delta_total: 0.1,
            },
            TreeKind::Balanced,
        );
        assert!(dc(&p.basis, &cfg, &mut oracle).is_err());
        // tree / basis size mismatch
        let cfg = config(5, 0.0, DcMode::Budget { total_queries: 20 }, TreeKind::Balanced);
        assert!(dc(&p.basis, &cfg, &mut oracle).is_err());
        // non-orthonormal basis
        let mut skew = p.basis.clone();
        skew[1] = UnitVector::normalize(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let cfg = config(4, 0.0, DcMode::Budget { total_queries: 20 }, TreeKind::Balanced);
        assert!(dc(&skew, &cfg, &mut oracle).is_err());
        assert_eq!(oracle.queries_used(), 0);
    }

    #[test]
    fn random_problem_properties() {
        let p = random_problem(3, 17, BasisKind::Random).unwrap();
        assert!((p.h_star.norm() - 1.0).abs() < 1e-12);
        let refs: Vec<&UnitVector> = p.basis.iter().collect();
        check_orthonormal(&refs, 1e-9).unwrap();
        let again = random_problem(3, 17, BasisKind::Random).unwrap();
        assert_eq!(p.h_star, again.h_star);
        assert_eq!(p.basis, again.basis);
        assert_ne!(p.h_star, random_problem(3, 18, BasisKind::Random).unwrap().h_star);
        assert!(random_problem(1, 0, BasisKind::Standard).is_err());
    }

    #[test]
    fn large_problem_is_cheap() {
        let start = std::time::Instant::now();
        let p = random_problem(1000, 1, BasisKind::Standard).unwrap();
        assert_eq!(p.basis.len(), 1000);
        // smoke check only; generous for unoptimized builds
        assert!(start.elapsed().as_millis() < 500);
    }
}
