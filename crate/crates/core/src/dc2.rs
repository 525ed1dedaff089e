//! Two-dimensional learner: recovers the normalized projection of the hidden
//! normal onto `span{e1, e2}` by Bayesian bisection on the circle.

use crate::circle::{Angle, CirclePosterior};
use crate::error::{HdcError, Result};
use crate::linalg::{check_orthonormal, UnitVector};
use crate::oracle::{check_rho, SignOracle};

#[derive(Debug, Clone)]
pub struct Dc2Result {
    pub estimate: UnitVector,
    pub rounds_used: usize,
    pub posterior: CirclePosterior,
}

/// `cos θ · e1 + sin θ · e2`.
pub fn embed(theta: Angle, e1: &UnitVector, e2: &UnitVector) -> Result<UnitVector> {
    check_orthonormal(&[e1, e2], 1e-9)?;
    embed_unchecked(theta, e1, e2)
}

fn embed_unchecked(theta: Angle, e1: &UnitVector, e2: &UnitVector) -> Result<UnitVector> {
    let (c, s) = theta.coords();
    UnitVector::combine(c, e1, s, e2)
}

/// Runs `rounds` query/update steps against `oracle` and returns the MAP
/// direction embedded back into `R^d`. Exactly `rounds` logical queries are
/// issued.
pub fn dc2<O: SignOracle + ?Sized>(
    e1: &UnitVector,
    e2: &UnitVector,
    rounds: usize,
    rho: f64,
    oracle: &mut O,
) -> Result<Dc2Result> {
    check_orthonormal(&[e1, e2], 1e-9)?;
    check_rho(rho)?;
    if rounds == 0 {
        return Err(HdcError::param("rounds", "must be at least 1"));
    }
    let mut posterior = CirclePosterior::uniform();
    for _ in 0..rounds {
        let theta = posterior.find_halving_query();
        let x = embed_unchecked(theta, e1, e2)?;
        let y = oracle.query(&x)?;
        posterior = posterior.bayes_update(theta, y, rho)?;
    }
    let estimate = embed_unchecked(posterior.map_estimate(), e1, e2)?;
    Ok(Dc2Result {
        estimate,
        rounds_used: rounds,
        posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{estimation_error, project_normalized};
    use crate::oracle::{NoisyOracle, TruthOracle};
    use crate::schedule::compute_rounds;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn axes(d: usize, i: usize, j: usize) -> (UnitVector, UnitVector) {
        (UnitVector::basis(d, i).unwrap(), UnitVector::basis(d, j).unwrap())
    }

    #[test]
    fn embed_examples() {
        let (e1, e2) = axes(3, 0, 2);
        let v = embed(Angle::new(0.0), &e1, &e2).unwrap();
        assert_eq!(v.to_dense(), vec![1.0, 0.0, 0.0]);
        let v = embed(Angle::new(FRAC_PI_2), &e1, &e2).unwrap();
        assert!(estimation_error(&v, &e2).unwrap() < 1e-15);
        let v = embed(Angle::new(FRAC_PI_4), &e1, &e2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.get(0) - s).abs() < 1e-15 && (v.get(2) - s).abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_rejects_non_orthonormal() {
        let e1 = UnitVector::basis(2, 0).unwrap();
        let e2 = UnitVector::normalize(vec![1.0, 1.0]).unwrap();
        assert!(embed(Angle::new(0.3), &e1, &e2).is_err());
    }

    #[test]
    fn noiseless_twelve_rounds() {
        let rounds = compute_rounds(1e-3, 0.5, 0.0).unwrap();
        assert_eq!(rounds, 12);
        let (e1, e2) = axes(2, 0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let phi: f64 = rng.random_range(0.0..TAU);
            let h = UnitVector::normalize(vec![phi.cos(), phi.sin()]).unwrap();
            let mut oracle = TruthOracle::new(&h);
            let out = dc2(&e1, &e2, rounds, 0.0, &mut oracle).unwrap();
            let err = estimation_error(&out.estimate, &h).unwrap();
            assert!(err <= 1e-3, "phi {phi}: err {err}");
            assert!(err <= PI / 2f64.powi(rounds as i32));
            assert_eq!(oracle.queries_used(), rounds as u64);
        }
    }

    #[test]
    fn learns_projection_in_higher_dimension() {
        let d = 5;
        let (e1, e3) = axes(d, 0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = UnitVector::normalize(raw.clone()).unwrap();
            // projection by direct normalization of the two coordinates
            let n = raw[0].hypot(raw[2]);
            let mut direct = vec![0.0; d];
            direct[0] = raw[0] / n;
            direct[2] = raw[2] / n;
            let target = UnitVector::normalize(direct).unwrap();
            assert!(estimation_error(&target, &project_normalized(&h, &e1, &e3).unwrap()).unwrap() < 1e-12);

            let mut oracle = TruthOracle::new(&h);
            let out = dc2(&e1, &e3, 30, 0.0, &mut oracle).unwrap();
            assert!(estimation_error(&out.estimate, &target).unwrap() <= PI / 2f64.powi(30));
            let dense = out.estimate.to_dense();
            assert_eq!(dense[1], 0.0);
            assert_eq!(dense[3], 0.0);
            assert_eq!(dense[4], 0.0);
            assert!((out.estimate.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_success_rate() {
        let (eps, delta, rho) = (0.05, 0.05, 0.1);
        let rounds = compute_rounds(eps, delta, rho).unwrap();
        let (e1, e2) = axes(2, 0, 1);
        let trials = 300;
        let mut ok = 0;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + t);
            let phi: f64 = rng.random_range(0.0..TAU);
            let h = UnitVector::normalize(vec![phi.cos(), phi.sin()]).unwrap();
            let mut oracle = NoisyOracle::new(TruthOracle::new(&h), rho, t).unwrap();
            let out = dc2(&e1, &e2, rounds, rho, &mut oracle).unwrap();
            assert_eq!(oracle.queries_used(), rounds as u64);
            if estimation_error(&out.estimate, &h).unwrap() < eps {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 1.0 - delta, "{ok}/{trials}");
    }

    #[test]
    fn rejects_zero_rounds_and_bad_rho() {
        let (e1, e2) = axes(2, 0, 1);
        let mut oracle = TruthOracle::new(&e1);
        assert!(dc2(&e1, &e2, 0, 0.0, &mut oracle).is_err());
        assert!(dc2(&e1, &e2, 3, 0.5, &mut oracle).is_err());
        assert_eq!(oracle.queries_used(), 0);
    }

    #[test]
    fn orthogonal_target_still_returns_unit_vector() {
        let d = 3;
        let (e1, e2) = axes(d, 0, 1);
        let h = UnitVector::basis(d, 2).unwrap();
        let mut oracle = TruthOracle::new(&h);
        let out = dc2(&e1, &e2, 10, 0.0, &mut oracle).unwrap();
        assert!((out.estimate.norm() - 1.0).abs() < 1e-12);
        assert_eq!(out.estimate.get(2), 0.0);
    }
}
