//! Sign-query oracles.
//!
//! [`TruthOracle`] answers `sign⟨h*, x⟩` exactly. [`NoisyOracle`] flips each
//! answer of an inner oracle independently with probability `ρ`, drawing
//! fresh randomness on every call (so repeating a point gives independent
//! answers). [`MajorityOracle`] turns one logical query into `R` inner
//! queries and reports the majority.
//!
//! `queries_used` always counts physical queries against the ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HdcError, Result};
use crate::linalg::UnitVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// `+1` iff `t > 0`. Zero maps to `Negative`: the halfspace is the
    /// strict set `{x : ⟨h*, x⟩ > 0}`.
    pub fn of(t: f64) -> Sign {
        if t > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

pub trait SignOracle {
    fn query(&mut self, x: &UnitVector) -> Result<Sign>;

    /// Physical queries issued so far. Nondecreasing.
    fn queries_used(&self) -> u64;
}

impl<O: SignOracle + ?Sized> SignOracle for &mut O {
    fn query(&mut self, x: &UnitVector) -> Result<Sign> {
        (**self).query(x)
    }

    fn queries_used(&self) -> u64 {
        (**self).queries_used()
    }
}

impl<O: SignOracle + ?Sized> SignOracle for Box<O> {
    fn query(&mut self, x: &UnitVector) -> Result<Sign> {
        (**self).query(x)
    }

    fn queries_used(&self) -> u64 {
        (**self).queries_used()
    }
}

#[derive(Debug, Clone)]
pub struct TruthOracle {
    h_star: Vec<f64>,
    used: u64,
}

impl TruthOracle {
    pub fn new(h_star: &UnitVector) -> Self {
        TruthOracle {
            h_star: h_star.to_dense(),
            used: 0,
        }
    }
}

impl SignOracle for TruthOracle {
    fn query(&mut self, x: &UnitVector) -> Result<Sign> {
        let t = x
            .dot_dense(&self.h_star)
            .map_err(|e| HdcError::Oracle(e.to_string()))?;
        self.used += 1;
        Ok(Sign::of(t))
    }

    fn queries_used(&self) -> u64 {
        self.used
    }
}

#[derive(Debug, Clone)]
pub struct NoisyOracle<O> {
    inner: O,
    rho: f64,
    rng: ChaCha8Rng,
}

impl<O: SignOracle> NoisyOracle<O> {
    pub fn new(inner: O, rho: f64, seed: u64) -> Result<Self> {
        check_rho(rho)?;
        Ok(NoisyOracle {
            inner,
            rho,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: SignOracle> SignOracle for NoisyOracle<O> {
    fn query(&mut self, x: &UnitVector) -> Result<Sign> {
        let truth = self.inner.query(x)?;
        // one uniform draw per query keeps the stream aligned whatever rho is
        let u: f64 = self.rng.random();
        Ok(if u < self.rho { truth.flipped() } else { truth })
    }

    fn queries_used(&self) -> u64 {
        self.inner.queries_used()
    }
}

#[derive(Debug, Clone)]
pub struct MajorityOracle<O> {
    inner: O,
    repetitions: usize,
    logical: u64,
}

impl<O: SignOracle> MajorityOracle<O> {
    /// `repetitions` must be odd so that the vote never ties.
    pub fn new(inner: O, repetitions: usize) -> Result<Self> {
        if repetitions == 0 || repetitions.is_multiple_of(2) {
            return Err(HdcError::param(
                "repetitions",
                format!("must be a positive odd count, got {repetitions}"),
            ));
        }
        Ok(MajorityOracle {
            inner,
            repetitions,
            logical: 0,
        })
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn logical_queries(&self) -> u64 {
        self.logical
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: SignOracle> SignOracle for MajorityOracle<O> {
    fn query(&mut self, x: &UnitVector) -> Result<Sign> {
        let mut positive = 0usize;
        for _ in 0..self.repetitions {
            if self.inner.query(x)? == Sign::Positive {
                positive += 1;
            }
        }
        self.logical += 1;
        Ok(if 2 * positive > self.repetitions {
            Sign::Positive
        } else {
            Sign::Negative
        })
    }

    fn queries_used(&self) -> u64 {
        self.inner.queries_used()
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..0.5).contains(&rho) {
        return Err(HdcError::param(
            "rho",
            format!("flip probability must lie in [0, 1/2), got {rho}"),
        ));
    }
    Ok(())
}
