//! Round counts for the two-dimensional learner, repetition counts for
//! majority voting, and budget splitting.
//!
//! All logarithms are natural except the explicit `log₂` of the noiseless
//! bisection count.

use std::f64::consts::PI;

use crate::error::{HdcError, Result};
use crate::oracle::check_rho;

/// Terms of the noisy round bound `T = M + ⌈max{T0, T1, T2, T3}⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub eps: f64,
    pub delta: f64,
    pub rho: f64,
    pub m: usize,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub rounds: usize,
}

fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(HdcError::param("eps", format!("must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HdcError::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Bisection rounds that shrink the noiseless support below `eps`:
/// `⌈log₂(π/ε)⌉`, at least 1.
pub fn noiseless_rounds(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(HdcError::param("eps", format!("must be positive, got {eps}")));
    }
    Ok((PI / eps).log2().ceil().max(1.0) as usize)
}

/// Evaluates every term of the noisy bound. Requires `ρ > 0`.
pub fn schedule_params(eps: f64, delta: f64, rho: f64) -> Result<ScheduleParams> {
    check_eps_delta(eps, delta)?;
    check_rho(rho)?;
    if rho == 0.0 {
        return Err(HdcError::param(
            "rho",
            "the noisy bound diverges at rho = 0; use noiseless_rounds",
        ));
    }
    let gain = (2.0 * (1.0 - rho)).ln();
    let m = (2.0 * (2.0 / delta).ln() / -(4.0 * rho * (1.0 - rho)).ln()).ceil() as usize;
    let mf = m as f64;
    let t0 = 8.0 * (2.0 / delta).ln() / gain;
    let t1 = 8.0 * (1.0 / (8.0 * PI * eps)).ln() / gain;
    let t2 = 8.0 / gain * ((2.0 * mf).ln() + (4.0 / gain).ln());
    let t3 = 24.0 * rho * ((1.0 - rho) / rho).ln().powi(2) / gain.powi(2)
        * (mf.ln() + (4.0 / delta).ln());
    let tail = t0.max(t1).max(t2).max(t3).ceil();
    let rounds = (m as f64 + tail).max(1.0) as usize;
    Ok(ScheduleParams {
        eps,
        delta,
        rho,
        m,
        t0,
        t1,
        t2,
        t3,
        rounds,
    })
}

/// Rounds sufficient for the two-dimensional learner to land within `eps` of
/// the target with probability at least `1 − delta`.
pub fn compute_rounds(eps: f64, delta: f64, rho: f64) -> Result<usize> {
    check_eps_delta(eps, delta)?;
    check_rho(rho)?;
    if rho == 0.0 {
        noiseless_rounds(eps)
    } else {
        schedule_params(eps, delta, rho).map(|p| p.rounds)
    }
}

/// Majority-vote repetitions so that `n0` logical queries are all answered
/// correctly with probability at least `1 − delta`: `⌈ln(n0/δ) / (2(1/2−ρ)²)⌉`
/// rounded up to the next odd count.
pub fn compute_repetitions(n0: usize, delta: f64, rho: f64) -> Result<usize> {
    if n0 == 0 {
        return Err(HdcError::param("n0", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HdcError::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    check_rho(rho)?;
    let margin = 0.5 - rho;
    let r = ((n0 as f64 / delta).ln() / (2.0 * margin * margin)).ceil().max(1.0) as usize;
    Ok(if r.is_multiple_of(2) { r + 1 } else { r })
}

/// Splits `total` into `calls` near-equal parts, larger parts first.
pub fn split_budget(total: usize, calls: usize) -> Result<Vec<usize>> {
    if calls == 0 {
        return Err(HdcError::param("calls", "must be at least 1"));
    }
    if total < calls {
        return Err(HdcError::param(
            "budget",
            format!("budget {total} cannot give each of {calls} calls a query"),
        ));
    }
    let base = total / calls;
    let extra = total % calls;
    Ok((0..calls).map(|k| base + usize::from(k < extra)).collect())
}
