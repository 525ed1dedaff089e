//! Repetitive-DC: noiseless dimension coupling on top of a majority-vote
//! oracle. Each logical query is asked `R` times and the majority answer is
//! treated as exact.

use crate::dc::{dc, DcConfig, DcMode, MAX_CALL_EPS};
use crate::error::{HdcError, Result};
use crate::linalg::UnitVector;
use crate::oracle::{check_rho, MajorityOracle, SignOracle};
use crate::schedule::{compute_repetitions, noiseless_rounds, split_budget};
use crate::tree::AggregationTree;

/// Confidence used to size `R` when only a query budget is given.
pub const DEFAULT_REPETITION_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepetitiveMode {
    /// Physical query budget; `R` is sized for `delta` over the logical
    /// queries the budget affords.
    Budget { total_queries: usize, delta: f64 },
    /// Noiseless bisection schedule for `eps_total`, with `R` sized so that
    /// all of its logical queries are right with probability `1 − delta_total`.
    Schedule { eps_total: f64, delta_total: f64 },
}

#[derive(Debug, Clone)]
pub struct RepetitiveConfig {
    pub rho: f64,
    pub mode: RepetitiveMode,
    pub tree: AggregationTree,
    /// Overrides the computed repetition count (must be odd).
    pub repetitions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionPlan {
    pub repetitions: usize,
    /// Logical rounds per two-dimensional call, post-order.
    pub logical_rounds: Vec<usize>,
}

impl RepetitionPlan {
    pub fn total_logical(&self) -> usize {
        self.logical_rounds.iter().sum()
    }

    pub fn total_physical(&self) -> usize {
        self.total_logical() * self.repetitions
    }
}

impl RepetitiveConfig {
    pub fn plan(&self) -> Result<RepetitionPlan> {
        check_rho(self.rho)?;
        let calls = self.tree.leaf_count() - 1;
        if let Some(r) = self.repetitions {
            if r == 0 || r % 2 == 0 {
                return Err(HdcError::param(
                    "repetitions",
                    format!("must be a positive odd count, got {r}"),
                ));
            }
        }
        match self.mode {
            RepetitiveMode::Budget {
                total_queries,
                delta,
            } => {
                if total_queries < calls {
                    return Err(HdcError::param(
                        "budget",
                        format!("budget {total_queries} is below the {calls} calls needed"),
                    ));
                }
                let repetitions = match self.repetitions {
                    Some(r) => r,
                    None => budget_repetitions(total_queries, calls, delta, self.rho)?,
                };
                let logical = total_queries / repetitions;
                if logical < calls {
                    return Err(HdcError::param(
                        "budget",
                        format!(
                            "{repetitions} repetitions leave {logical} logical queries for {calls} calls"
                        ),
                    ));
                }
                Ok(RepetitionPlan {
                    repetitions,
                    logical_rounds: split_budget(logical, calls)?,
                })
            }
            RepetitiveMode::Schedule {
                eps_total,
                delta_total,
            } => {
                if !(delta_total > 0.0 && delta_total < 1.0) {
                    return Err(HdcError::param(
                        "delta",
                        format!("must lie in (0, 1), got {delta_total}"),
                    ));
                }
                if !(eps_total > 0.0 && eps_total.is_finite()) {
                    return Err(HdcError::param("eps", format!("must be positive, got {eps_total}")));
                }
                let (eps, _) = DcConfig::per_call_targets(eps_total, delta_total, calls + 1);
                if eps > MAX_CALL_EPS {
                    return Err(HdcError::param(
                        "eps",
                        format!("per-call accuracy {eps} exceeds 5/18"),
                    ));
                }
                let per_call = noiseless_rounds(eps)?;
                let n0 = per_call * calls;
                let repetitions = match self.repetitions {
                    Some(r) => r,
                    None => compute_repetitions(n0, delta_total, self.rho)?,
                };
                Ok(RepetitionPlan {
                    repetitions,
                    logical_rounds: vec![per_call; calls],
                })
            }
        }
    }
}

/// Smallest odd `R` that covers the logical queries a budget affords,
/// `R ≥ compute_repetitions(⌊B/R⌋, δ, ρ)`, clipped so every call keeps at
/// least one logical query.
fn budget_repetitions(budget: usize, calls: usize, delta: f64, rho: f64) -> Result<usize> {
    let mut cap = budget / calls;
    if cap.is_multiple_of(2) {
        cap -= 1;
    }
    let mut r = 1;
    while r < cap {
        if r >= compute_repetitions(budget / r, delta, rho)? {
            return Ok(r);
        }
        r += 2;
    }
    Ok(cap)
}

#[derive(Debug, Clone)]
pub struct RepetitiveOutcome {
    pub estimate: UnitVector,
    pub plan: RepetitionPlan,
}

pub fn repetitive_dc<O: SignOracle + ?Sized>(
    basis: &[UnitVector],
    config: &RepetitiveConfig,
    oracle: &mut O,
) -> Result<RepetitiveOutcome> {
    let plan = config.plan()?;
    let mut majority = MajorityOracle::new(oracle, plan.repetitions)?;
    let inner = DcConfig {
        rho: 0.0,
        mode: DcMode::Budget {
            total_queries: plan.total_logical(),
        },
        tree: config.tree.clone(),
    };
    let estimate = dc(basis, &inner, &mut majority)?;
    Ok(RepetitiveOutcome { estimate, plan })
}
