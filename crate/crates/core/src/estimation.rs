//! Private k-ary distribution estimation: per-coordinate Laplace noise on
//! the empirical distribution followed by Euclidean projection onto the
//! simplex. One substitution moves the empirical vector by at most `2/n`
//! in l1, so noise of scale `2/(n eps)` per coordinate gives eps-DP.

use crate::constants::CalibratedConstants;
use crate::dist::{divergence, project_to_simplex, DiscreteDistribution, Divergence, SampleSet};
use crate::error::{Error, Result};
use crate::mech::{laplace_noise, PrivacyBudget};
use rand::Rng;

/// Error metric selector for the sample-complexity formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMetric {
    Tv,
    L2,
}

/// Private estimate of the full distribution.
pub fn estimate_kary_private<R: Rng + ?Sized>(
    samples: &SampleSet,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<DiscreteDistribution> {
    let n = samples.n();
    if n == 0 {
        return Err(Error::InsufficientSamples(
            "need at least one sample".into(),
        ));
    }
    let epsilon = budget.noise_epsilon()?;
    let hist = samples.histogram();
    let scale = 2.0 / (n as f64 * epsilon);
    let noised: Vec<f64> = hist
        .counts()
        .iter()
        .map(|&c| c as f64 / n as f64 + laplace_noise(scale, rng))
        .collect();
    project_to_simplex(&noised)
}

/// Evaluation of a private estimate against a known ground truth.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub estimate: DiscreteDistribution,
    pub tv_error: f64,
    pub l2_error: f64,
    pub n: usize,
    pub budget: PrivacyBudget,
}

pub fn evaluate_estimate(
    estimate: DiscreteDistribution,
    truth: &DiscreteDistribution,
    n: usize,
    budget: PrivacyBudget,
) -> Result<EstimationReport> {
    let tv_error = divergence(&estimate, truth, Divergence::Tv)?;
    let l2_error = divergence(&estimate, truth, Divergence::L2)?;
    Ok(EstimationReport {
        estimate,
        tv_error,
        l2_error,
        n,
        budget,
    })
}

/// Sample-complexity formula evaluation. The `upper_bound_only` flag marks
/// the l2 branch at `alpha > 1/sqrt(k)`, where only the upper-bound form
/// `ln(k)/(alpha^2 eps)` is known to be achievable.
#[derive(Debug, Clone, Copy)]
pub struct SampleComplexityEstimate {
    pub n: usize,
    pub upper_bound_only: bool,
}

pub fn estimation_sample_complexity(
    k: usize,
    alpha: f64,
    budget: PrivacyBudget,
    metric: EstimationMetric,
    constants: &CalibratedConstants,
) -> Result<SampleComplexityEstimate> {
    if k == 0 || !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(
            "need k >= 1 and alpha in (0, 1)".into(),
        ));
    }
    let eps = match budget {
        PrivacyBudget::EpsDelta { epsilon, delta } => {
            if epsilon <= 0.0 || delta < 0.0 {
                return Err(Error::InvalidBudget("epsilon must be positive".into()));
            }
            epsilon + delta
        }
        PrivacyBudget::Zcdp { .. } => {
            return Err(Error::InvalidBudget(
                "sample complexity is defined for (eps, delta) budgets".into(),
            ))
        }
    };
    let kf = k as f64;
    let priv_term = |num: f64| if eps.is_infinite() { 0.0 } else { num / eps };
    match metric {
        EstimationMetric::Tv => {
            let n = constants.kary_error_c * (kf / (alpha * alpha) + priv_term(kf / alpha));
            Ok(SampleComplexityEstimate {
                n: n.ceil() as usize,
                upper_bound_only: false,
            })
        }
        EstimationMetric::L2 => {
            if alpha < 1.0 / kf.sqrt() {
                let n =
                    constants.kary_error_c * (1.0 / (alpha * alpha) + priv_term(kf.sqrt() / alpha));
                Ok(SampleComplexityEstimate {
                    n: n.ceil() as usize,
                    upper_bound_only: false,
                })
            } else {
                let n = constants.kary_error_c
                    * (1.0 / (alpha * alpha) + priv_term(kf.ln() / (alpha * alpha)));
                Ok(SampleComplexityEstimate {
                    n: n.ceil() as usize,
                    upper_bound_only: true,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample, uniform, zipf};
    use crate::seed;
    use crate::stats::kahan_sum;

    #[test]
    fn output_is_on_simplex() {
        let mut rng = seed::root(1);
        let p = zipf(30, 1.0).unwrap();
        for &eps in &[0.01, 0.5, 10.0] {
            let s = sample(&p, 50, &mut rng);
            let est = estimate_kary_private(&s, PrivacyBudget::pure(eps), &mut rng).unwrap();
            assert!(est.probs().iter().all(|&x| x >= 0.0));
            assert!((kahan_sum(est.probs().iter().copied()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_budget_equals_empirical_seedwise() {
        let p = zipf(12, 0.7).unwrap();
        let s = sample(&p, 500, &mut seed::root(2));
        let emp = s.histogram().empirical().unwrap();
        let est = estimate_kary_private(&s, PrivacyBudget::pure(f64::INFINITY), &mut seed::root(3))
            .unwrap();
        for (a, b) in est.probs().iter().zip(emp.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_symbol_alphabet() {
        let s = SampleSet::new(vec![0, 0, 0], 1).unwrap();
        let mut rng = seed::root(4);
        let est = estimate_kary_private(&s, PrivacyBudget::pure(0.1), &mut rng).unwrap();
        assert_eq!(est.probs(), &[1.0]);
    }

    #[test]
    fn expected_tv_error_within_calibrated_bound() {
        let (k, n, eps, trials) = (100usize, 10_000usize, 1.0f64, 100);
        let u = uniform(k).unwrap();
        let consts = CalibratedConstants::default();
        let mut rng = seed::root(5);
        let mut errs = Vec::with_capacity(trials);
        for _ in 0..trials {
            let s = sample(&u, n, &mut rng);
            let est = estimate_kary_private(&s, PrivacyBudget::pure(eps), &mut rng).unwrap();
            errs.push(crate::dist::divergence(&est, &u, crate::dist::Divergence::Tv).unwrap());
        }
        let mean = kahan_sum(errs.iter().copied()) / trials as f64;
        let bound =
            consts.kary_error_c * ((k as f64 / n as f64).sqrt() + k as f64 / (n as f64 * eps));
        assert!(mean <= bound, "mean TV {mean} bound {bound}");
        // sanity direction: privacy cannot make the error smaller on
        // average than the empirical estimator's own error, up to noise
        let mut emp_errs = Vec::with_capacity(trials);
        for _ in 0..trials {
            let s = sample(&u, n, &mut rng);
            let emp = s.histogram().empirical().unwrap();
            emp_errs.push(crate::dist::divergence(&emp, &u, crate::dist::Divergence::Tv).unwrap());
        }
        let emp_mean = kahan_sum(emp_errs.iter().copied()) / trials as f64;
        let noise_term = k as f64 / (n as f64 * eps);
        assert!(mean >= emp_mean - noise_term, "{mean} vs {emp_mean}");
    }

    #[test]
    fn formula_properties() {
        let consts = CalibratedConstants::default();
        let inf = PrivacyBudget::pure(f64::INFINITY);
        let tv =
            estimation_sample_complexity(100, 0.1, inf, EstimationMetric::Tv, &consts).unwrap();
        let expect = (consts.kary_error_c * 100.0 / 0.01).ceil() as i64;
        assert!((tv.n as i64 - expect).abs() <= 1);
        assert!(!tv.upper_bound_only);
        // l2 below the 1/sqrt(k) knee
        let k = 100usize;
        let alpha = 1.0 / (2.0 * (k as f64).sqrt());
        let eps = 0.7;
        let l2 = estimation_sample_complexity(
            k,
            alpha,
            PrivacyBudget::pure(eps),
            EstimationMetric::L2,
            &consts,
        )
        .unwrap();
        let expect =
            consts.kary_error_c * (1.0 / (alpha * alpha) + (k as f64).sqrt() / (alpha * eps));
        assert!((l2.n as i64 - expect.ceil() as i64).abs() <= 1);
        assert!(!l2.upper_bound_only);
        // above the knee the result is flagged
        let l2hi = estimation_sample_complexity(
            k,
            0.5,
            PrivacyBudget::pure(eps),
            EstimationMetric::L2,
            &consts,
        )
        .unwrap();
        assert!(l2hi.upper_bound_only);
        // monotone non-increasing in eps
        let mut prev = usize::MAX;
        for &eps in &[0.01, 0.1, 1.0, 10.0] {
            let n = estimation_sample_complexity(
                50,
                0.2,
                PrivacyBudget::pure(eps),
                EstimationMetric::Tv,
                &consts,
            )
            .unwrap()
            .n;
            assert!(n <= prev);
            prev = n;
        }
    }
}
