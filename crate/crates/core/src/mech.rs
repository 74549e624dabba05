//! Privacy primitives: the Laplace mechanism, randomized response, the
//! sigmoid bit release, an exhaustive sensitivity oracle, and a statistical
//! audit of the group-privacy ratio bound.

use crate::error::{Error, Result};
use crate::stats::sigmoid;
use rand::Rng;

/// Privacy accounting for a randomized release. Exactly one flavor is
/// active: `(epsilon, delta)` or zero-concentrated `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacyBudget {
    EpsDelta { epsilon: f64, delta: f64 },
    Zcdp { rho: f64 },
}

impl PrivacyBudget {
    pub fn pure(epsilon: f64) -> Self {
        PrivacyBudget::EpsDelta {
            epsilon,
            delta: 0.0,
        }
    }

    pub fn approx(epsilon: f64, delta: f64) -> Self {
        PrivacyBudget::EpsDelta { epsilon, delta }
    }

    pub fn zcdp(rho: f64) -> Self {
        PrivacyBudget::Zcdp { rho }
    }

    /// Epsilon used as a pure-DP noise divisor. Requires delta = 0.
    pub fn noise_epsilon(&self) -> Result<f64> {
        match *self {
            PrivacyBudget::EpsDelta { epsilon, delta } => {
                if delta != 0.0 {
                    Err(Error::InvalidBudget(
                        "pure-DP mechanism requires delta = 0".into(),
                    ))
                } else if epsilon <= 0.0 {
                    Err(Error::InvalidBudget("epsilon must be positive".into()))
                } else {
                    Ok(epsilon)
                }
            }
            PrivacyBudget::Zcdp { .. } => Err(Error::InvalidBudget(
                "pure-DP mechanism cannot consume a zCDP budget".into(),
            )),
        }
    }

    /// Effective epsilon for the testers: (eps, delta) callers substitute
    /// eps + delta, which loses at most constant factors.
    pub fn testing_epsilon(&self) -> Result<f64> {
        match *self {
            PrivacyBudget::EpsDelta { epsilon, delta } => {
                if epsilon <= 0.0 || !(0.0..1.0).contains(&delta) {
                    Err(Error::InvalidBudget(format!(
                        "need epsilon > 0 and delta in [0,1), got ({epsilon}, {delta})"
                    )))
                } else {
                    Ok(epsilon + delta)
                }
            }
            PrivacyBudget::Zcdp { .. } => Err(Error::InvalidBudget(
                "testers accept only (epsilon, delta) budgets".into(),
            )),
        }
    }
}

/// A bound on how much a statistic can move under one substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityBound {
    pub delta_f: f64,
    pub n: usize,
}

impl SensitivityBound {
    pub fn new(delta_f: f64, n: usize) -> Self {
        assert!(delta_f >= 0.0, "sensitivity must be non-negative");
        Self { delta_f, n }
    }
}

/// A Laplace draw of scale `b` by inverse CDF, so a seeded stream fully
/// determines the noise.
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random::<f64>() - 0.5;
    // u = -0.5 would take ln(0); clamp to the smallest positive double.
    let arg = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    -scale * u.signum() * arg.ln()
}

/// `value + Laplace(delta_f / epsilon)`.
pub fn laplace_mechanism<R: Rng + ?Sized>(
    value: f64,
    sens: SensitivityBound,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<f64> {
    let epsilon = budget.noise_epsilon()?;
    Ok(value + laplace_noise(sens.delta_f / epsilon, rng))
}

/// Keep the input bit with probability `e^eps / (1 + e^eps)`.
pub fn randomized_response<R: Rng + ?Sized>(bit: bool, epsilon: f64, rng: &mut R) -> bool {
    let keep = sigmoid(epsilon);
    if rng.random::<f64>() < keep {
        bit
    } else {
        !bit
    }
}

/// Unbiased inversion of randomized response applied to a mean of outputs.
pub fn rr_debias(mean_of_outputs: f64, epsilon: f64) -> f64 {
    let e = epsilon.exp();
    if e.is_infinite() {
        // no flipping happened
        return mean_of_outputs;
    }
    (e + 1.0) / (e - 1.0) * (mean_of_outputs - 1.0 / (e + 1.0))
}

/// Probability that the sigmoid release emits 1 on statistic value `z`.
pub fn sigmoid_release_prob(z: f64, epsilon: f64) -> f64 {
    sigmoid(epsilon * z)
}

/// Release `Bernoulli(sigma(eps * z))`. For statistics with sensitivity at
/// most 1 this bit is eps-DP.
pub fn sigmoid_release<R: Rng + ?Sized>(z: f64, epsilon: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < sigmoid_release_prob(z, epsilon)
}

/// Exact sensitivity of a statistic by enumerating every dataset in
/// `[k]^n` and every single-coordinate substitution.
pub fn sensitivity_exhaustive<F>(f: F, k: usize, n: usize) -> Result<SensitivityBound>
where
    F: Fn(&[usize]) -> f64,
{
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter("need k >= 1 and n >= 1".into()));
    }
    let total = (k as f64).powi(n as i32);
    if total > 1e6 {
        return Err(Error::TooLarge(format!(
            "k^n = {total} exceeds the desk-scale limit 1e6"
        )));
    }
    let mut dataset = vec![0usize; n];
    let mut max_gap = 0.0f64;
    loop {
        let base = f(&dataset);
        let mut mutated = dataset.clone();
        for i in 0..n {
            let orig = mutated[i];
            for s in 0..k {
                if s == orig {
                    continue;
                }
                mutated[i] = s;
                let gap = (f(&mutated) - base).abs();
                if gap > max_gap {
                    max_gap = gap;
                }
            }
            mutated[i] = orig;
        }
        // odometer increment over [k]^n
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(SensitivityBound::new(max_gap, n));
            }
            dataset[pos] += 1;
            if dataset[pos] < k {
                break;
            }
            dataset[pos] = 0;
            pos += 1;
        }
    }
}

/// Verdict of [`dp_ratio_audit`]: a statistical check can refute a privacy
/// claim but never certify it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditVerdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Monte-Carlo audit of the group-privacy bound
/// `P(A(x) = o) <= e^(t eps) P(A(y) = o) + delta t e^(eps (t-1))`
/// for datasets at Hamming distance `t`, checked in both directions.
/// "Fail" requires a violation exceeding five standard errors.
pub fn dp_ratio_audit<M, R>(
    mut mech: M,
    x: &[usize],
    y: &[usize],
    budget: PrivacyBudget,
    trials: usize,
    rng: &mut R,
) -> Result<AuditVerdict>
where
    M: FnMut(&[usize], &mut R) -> usize,
    R: Rng + ?Sized,
{
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "dataset lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let (epsilon, delta) = match budget {
        PrivacyBudget::EpsDelta { epsilon, delta } => (epsilon, delta),
        PrivacyBudget::Zcdp { .. } => {
            return Err(Error::InvalidBudget(
                "audit requires an (eps, delta) budget".into(),
            ))
        }
    };
    let t = x.iter().zip(y).filter(|(a, b)| a != b).count() as f64;
    let mut counts_x: Vec<u64> = Vec::new();
    let mut counts_y: Vec<u64> = Vec::new();
    let bump = |counts: &mut Vec<u64>, o: usize| {
        if o >= counts.len() {
            counts.resize(o + 1, 0);
        }
        counts[o] += 1;
    };
    for _ in 0..trials {
        let ox = mech(x, rng);
        bump(&mut counts_x, ox);
        let oy = mech(y, rng);
        bump(&mut counts_y, oy);
    }
    let width = counts_x.len().max(counts_y.len());
    counts_x.resize(width, 0);
    counts_y.resize(width, 0);
    let ratio = (t * epsilon).exp();
    let slack = if t > 0.0 {
        delta * t * (epsilon * (t - 1.0)).exp()
    } else {
        0.0
    };
    let tn = trials as f64;
    let mut verdict = AuditVerdict::Pass;
    for (a, b) in [(&counts_x, &counts_y), (&counts_y, &counts_x)] {
        for o in 0..width {
            let pa = a[o] as f64 / tn;
            let pb = b[o] as f64 / tn;
            let violation = pa - (ratio * pb + slack);
            let var = pa * (1.0 - pa) / tn + ratio * ratio * pb * (1.0 - pb) / tn;
            let sigma = var.sqrt().max(1e-12);
            if violation > 5.0 * sigma {
                return Ok(AuditVerdict::Fail);
            }
            if violation > 0.0 {
                verdict = AuditVerdict::Inconclusive;
            }
        }
    }
    Ok(verdict)
}
