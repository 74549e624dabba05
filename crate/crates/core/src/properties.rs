//! Private estimators for entropy, support coverage, and support size.
//!
//! Everything follows one pattern: a non-private core estimator whose
//! sensitivity is understood, plus Laplace noise scaled to that
//! sensitivity. Entropy comes in an empirical flavor (sensitivity
//! `2 max(1, ln n)/n`) and a best-polynomial-approximation flavor
//! (sensitivity `n^lambda / n`). Coverage extrapolates with the smoothed
//! Good-Toulmin series or averages per-batch distinct counts; support size
//! rides on coverage in the sparse regime and thresholds counts in the
//! dense regime.

use crate::dist::{Histogram, Profile, SampleSet};
use crate::error::{Error, Result};
use crate::mech::{laplace_noise, PrivacyBudget, SensitivityBound};
use crate::stats::{kahan_sum, poisson_upper_tail};
use rand::Rng;

/// Which estimator branch produced a [`PropertyEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    EntropyEmpirical,
    EntropyPoly,
    CoverageBatch,
    CoverageSgt,
    SupportSparse,
    SupportSparseDirect,
    SupportDense,
}

/// A private release: the value, the Laplace scale that was added, and the
/// branch that produced it.
#[derive(Debug, Clone, Copy)]
pub struct PropertyEstimate {
    pub value: f64,
    pub noise_scale: f64,
    pub regime: Regime,
}

/// Entropy of the empirical distribution, in nats.
pub fn entropy_empirical(hist: &Histogram) -> Result<f64> {
    Ok(hist.empirical()?.entropy())
}

/// Sensitivity of the empirical entropy: `2 max(1, ln n) / n`.
pub fn entropy_sensitivity(n: usize) -> Result<SensitivityBound> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let nf = n as f64;
    Ok(SensitivityBound::new(2.0 * nf.ln().max(1.0) / nf, n))
}

/// Empirical entropy plus Laplace noise at its sensitivity.
pub fn entropy_private_empirical<R: Rng + ?Sized>(
    samples: &SampleSet,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<PropertyEstimate> {
    let hist = samples.histogram();
    let value = entropy_empirical(&hist)?;
    let sens = entropy_sensitivity(samples.n())?;
    let epsilon = budget.noise_epsilon()?;
    let scale = sens.delta_f / epsilon;
    Ok(PropertyEstimate {
        value: value + laplace_noise(scale, rng),
        noise_scale: scale,
        regime: Regime::EntropyEmpirical,
    })
}

/// Median-of-three boosting: three disjoint thirds, each privatized with
/// the full budget (parallel composition over disjoint data), median taken.
pub fn entropy_private_empirical_boosted<R: Rng + ?Sized>(
    samples: &SampleSet,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<PropertyEstimate> {
    let n = samples.n();
    if n < 3 {
        return Err(Error::InsufficientSamples(
            "median boosting needs at least 3 samples".into(),
        ));
    }
    let third = n / 3;
    let mut estimates = Vec::with_capacity(3);
    let mut scale = 0.0f64;
    for j in 0..3 {
        let lo = j * third;
        let hi = if j == 2 { n } else { lo + third };
        let part = SampleSet::new(samples.symbols()[lo..hi].to_vec(), samples.k())?;
        let est = entropy_private_empirical(&part, budget, rng)?;
        scale = scale.max(est.noise_scale);
        estimates.push(est.value);
    }
    estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PropertyEstimate {
        value: estimates[1],
        noise_scale: scale,
        regime: Regime::EntropyEmpirical,
    })
}

/// Default polynomial degree for the poly entropy estimator.
pub fn default_poly_degree(k: usize) -> usize {
    ((1.2 * (k as f64).ln()).floor() as usize).max(1)
}

/// Monomial coefficients of the Chebyshev interpolant of
/// `g(x) = x ln(1/x)` of the given degree on `[0, b]`.
fn cheb_coeffs_xlog(degree: usize, b: f64) -> Vec<f64> {
    let g = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    let m = degree + 1;
    // Chebyshev nodes on [-1, 1] and their images on [0, b]
    let nodes: Vec<f64> = (0..m)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&t| g(b * (t + 1.0) / 2.0)).collect();
    let mut cheb = vec![0.0; m];
    for (i, c) in cheb.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &t) in nodes.iter().enumerate() {
            acc += values[j] * (i as f64 * t.acos()).cos();
        }
        *c = 2.0 * acc / m as f64;
    }
    cheb[0] /= 2.0;
    // expand sum_i cheb[i] T_i(2x/b - 1) into monomials of x
    let alpha = 2.0 / b;
    let beta = -1.0;
    let mut t_prev = vec![1.0];
    let mut t_curr = vec![beta, alpha];
    let mut out = vec![0.0; m];
    out[0] += cheb[0];
    if degree >= 1 {
        for (i, &c) in t_curr.iter().enumerate() {
            out[i] += cheb[1] * c;
        }
    }
    for &coef in cheb.iter().skip(2) {
        // T_i = 2(alpha x + beta) T_{i-1} - T_{i-2}
        let mut next = vec![0.0; t_curr.len() + 1];
        for (d, &c) in t_curr.iter().enumerate() {
            next[d] += 2.0 * beta * c;
            next[d + 1] += 2.0 * alpha * c;
        }
        for (d, &c) in t_prev.iter().enumerate() {
            next[d] -= c;
        }
        for (d, &c) in next.iter().enumerate() {
            out[d] += coef * c;
        }
        t_prev = t_curr;
        t_curr = next;
    }
    out
}

/// Non-private best-polynomial-approximation entropy estimate.
///
/// Counts up to the degree go through the unbiased polynomial estimator of
/// `-p ln p` on `[0, degree/n]`; larger counts use the bias-corrected
/// plug-in `(c/n) ln(n/c) + 1/(2n)`. The result is clipped to `[0, ln k]`.
pub fn entropy_poly(hist: &Histogram, degree: usize) -> Result<f64> {
    let n = hist.n();
    if n == 0 {
        return Err(Error::EmptyHistogram);
    }
    let k = hist.k();
    let nf = n as f64;
    let b = degree as f64 / nf;
    let coeffs = cheb_coeffs_xlog(degree, b);
    // unbiased estimate of p^m from a count c: falling factorials
    let estimate_small = |c: u64| -> f64 {
        let mut acc = coeffs[0];
        let mut falling = 1.0;
        for (m, &a) in coeffs.iter().enumerate().skip(1) {
            falling *= (c as f64 - (m as f64 - 1.0)) / (nf - (m as f64 - 1.0));
            if falling == 0.0 {
                break;
            }
            acc += a * falling;
        }
        acc
    };
    let mut total = 0.0;
    for &c in hist.counts() {
        if c == 0 {
            total += coeffs[0];
        } else if c <= degree as u64 {
            total += estimate_small(c);
        } else {
            let phat = c as f64 / nf;
            total += -phat * phat.ln() + 1.0 / (2.0 * nf);
        }
    }
    Ok(total.clamp(0.0, (k as f64).ln()))
}

/// Poly entropy plus Laplace noise of scale `n^lambda / (n eps)`.
pub fn entropy_private_poly<R: Rng + ?Sized>(
    samples: &SampleSet,
    budget: PrivacyBudget,
    lambda: f64,
    degree: Option<usize>,
    rng: &mut R,
) -> Result<PropertyEstimate> {
    if !(0.01..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(
            "lambda must lie in [0.01, 1]".into(),
        ));
    }
    let hist = samples.histogram();
    let n = samples.n();
    if n == 0 {
        return Err(Error::EmptyHistogram);
    }
    let degree = degree.unwrap_or_else(|| default_poly_degree(samples.k()));
    let value = entropy_poly(&hist, degree)?;
    let epsilon = budget.noise_epsilon()?;
    let scale = (n as f64).powf(lambda) / (n as f64 * epsilon);
    Ok(PropertyEstimate {
        value: value + laplace_noise(scale, rng),
        noise_scale: scale,
        regime: Regime::EntropyPoly,
    })
}

/// Coefficient of `Phi_i` in the smoothed Good-Toulmin estimator:
/// `1 - (-t)^i P(Poisson(r) >= i)`.
pub fn sgt_coefficient(i: u64, t: f64, r: f64) -> f64 {
    1.0 - neg_t_pow_times_tail(i, t, r)
}

// (-t)^i P(Z >= i) for t >= 0, in log space so large powers cannot
// overflow before the tail damps them
fn neg_t_pow_times_tail(i: u64, t: f64, r: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    if t == 0.0 {
        return 0.0;
    }
    let tail = poisson_upper_tail(r, i);
    if tail == 0.0 {
        return 0.0;
    }
    let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (i as f64 * t.ln() + tail.ln()).exp()
}

/// Smoothed Good-Toulmin extrapolation of the coverage at `m >= n` draws,
/// smoothed by a Poisson(r) truncation. The alternating series is summed
/// with compensation.
pub fn coverage_sgt(profile: &Profile, n: usize, m: usize, r: f64) -> Result<f64> {
    if m < n {
        return Err(Error::InvalidParameter(
            "extrapolation needs m >= n; use the batch estimator otherwise".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InsufficientSamples(
            "need at least one sample".into(),
        ));
    }
    if r < 0.0 {
        return Err(Error::InvalidParameter("r must be non-negative".into()));
    }
    let t = (m - n) as f64 / n as f64;
    Ok(kahan_sum(
        profile
            .iter()
            .map(|(i, count)| count as f64 * sgt_coefficient(i, t, r)),
    ))
}

/// Batch estimator of the coverage at `m <= n` draws: split the sample
/// into `floor(n/m)` batches of size `m` (the remainder is dropped) and
/// average the per-batch distinct counts.
pub fn coverage_batch(samples: &SampleSet, m: usize) -> Result<f64> {
    let n = samples.n();
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    if n < m {
        return Err(Error::InsufficientSamples(format!(
            "need n >= m, got n = {n}, m = {m}"
        )));
    }
    let batches = n / m;
    let mut seen = vec![u32::MAX; samples.k()];
    let mut total_distinct = 0u64;
    for j in 0..batches {
        for &s in &samples.symbols()[j * m..(j + 1) * m] {
            if seen[s] != j as u32 {
                seen[s] = j as u32;
                total_distinct += 1;
            }
        }
    }
    Ok(total_distinct as f64 / batches as f64)
}

/// How the SGT smoothing rate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgtRate {
    /// `r = ln(3/alpha)`.
    Theory,
    /// `r = ln(n (t+1)^2 / (t-1)) / (2t)`, the data-driven choice used in
    /// experiments. Falls back to `Theory` when `t <= 1`.
    Experiment,
}

pub fn sgt_rate(mode: SgtRate, alpha: f64, n: usize, t: f64) -> f64 {
    match mode {
        SgtRate::Theory => (3.0 / alpha).ln(),
        SgtRate::Experiment => {
            if t <= 1.0 {
                (3.0 / alpha).ln()
            } else {
                ((n as f64) * (t + 1.0) * (t + 1.0) / (t - 1.0)).ln() / (2.0 * t)
            }
        }
    }
}

/// Private support-coverage estimate at `m` future draws with target error
/// `alpha * m`. Small `m` uses the batch estimator (sensitivity `2m/n'`),
/// large `m` the SGT series (sensitivity `2(1 + e^(r(t-1)))`).
pub fn coverage_private<R: Rng + ?Sized>(
    samples: &SampleSet,
    m: usize,
    alpha: f64,
    budget: PrivacyBudget,
    rate_mode: SgtRate,
    rng: &mut R,
) -> Result<PropertyEstimate> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
    }
    let epsilon = budget.noise_epsilon()?;
    let n = samples.n();
    if n == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    if (m as f64) <= 1.0 / (alpha * epsilon) && m <= n {
        // batch regime: plentiful data relative to the horizon
        let value = coverage_batch(samples, m)?;
        let n_used = (n / m) * m;
        let scale = 2.0 * m as f64 / n_used as f64 / epsilon;
        Ok(PropertyEstimate {
            value: value + laplace_noise(scale, rng),
            noise_scale: scale,
            regime: Regime::CoverageBatch,
        })
    } else {
        let m_eff = m.max(n);
        let t = (m_eff - n) as f64 / n as f64;
        let r = sgt_rate(rate_mode, alpha, n, t);
        let value = coverage_sgt(&samples.histogram().profile(), n, m_eff, r)?;
        let scale = 2.0 * (1.0 + (r * (t - 1.0)).exp()) / epsilon;
        Ok(PropertyEstimate {
            value: value + laplace_noise(scale, rng),
            noise_scale: scale,
            regime: Regime::CoverageSgt,
        })
    }
}

/// Private support-size estimate for distributions whose non-zero masses
/// are at least `1/k`.
///
/// Sparse regime (`k >= 1/(alpha eps)`): estimate the coverage at
/// `m = k ln(3/alpha)` draws, which sits within `alpha k / 3` of the true
/// support size; with ample data the observed distinct count is released
/// directly. Dense regime: sum of `min(1, N_x/(n/3k))`, sensitivity `3k/n`.
pub fn support_size_private<R: Rng + ?Sized>(
    samples: &SampleSet,
    alpha: f64,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<PropertyEstimate> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
    }
    let epsilon = budget.noise_epsilon()?;
    let n = samples.n();
    if n == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let k = samples.k();
    let kf = k as f64;
    if kf >= 1.0 / (alpha * epsilon) {
        let r = (3.0 / alpha).ln();
        let m = (kf * r).ceil() as usize;
        if 2 * n >= m {
            // enough data to see everything: noise the distinct count
            let distinct = samples.histogram().distinct() as f64;
            let scale = 1.0 / epsilon;
            return Ok(PropertyEstimate {
                value: distinct + laplace_noise(scale, rng),
                noise_scale: scale,
                regime: Regime::SupportSparseDirect,
            });
        }
        let t = (m - n) as f64 / n as f64;
        let value = coverage_sgt(&samples.histogram().profile(), n, m, r)?;
        let scale = 2.0 * (1.0 + (r * (t - 1.0)).exp()) / epsilon;
        Ok(PropertyEstimate {
            value: value + laplace_noise(scale, rng),
            noise_scale: scale,
            regime: Regime::SupportSparse,
        })
    } else {
        let value = dense_support_statistic(&samples.histogram(), n);
        let scale = 3.0 * kf / (n as f64 * epsilon);
        Ok(PropertyEstimate {
            value: value + laplace_noise(scale, rng),
            noise_scale: scale,
            regime: Regime::SupportDense,
        })
    }
}

/// `sum_x min(1, N_x / (n/3k))`, the thresholded dense-regime statistic.
pub fn dense_support_statistic(hist: &Histogram, n: usize) -> f64 {
    let threshold = n as f64 / (3.0 * hist.k() as f64);
    kahan_sum(
        hist.counts()
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| (c as f64 / threshold).min(1.0)),
    )
}
