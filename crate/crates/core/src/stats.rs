//! Small numeric helpers shared across modules: compensated summation,
//! stable sigmoid, Poisson tails, binomial weights, and a chi-square
//! goodness-of-fit test used to verify sampler marginals.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kahan-compensated sum. Keeps the error near machine precision
/// independently of the number of terms.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Upper tail P(Z >= i) of a Poisson(r) variable.
///
/// For i <= r the complement of the forward CDF sum is accurate; past the
/// mode the tail is summed directly from its leading term, which avoids the
/// cancellation of the subtractive recurrence.
pub fn poisson_upper_tail(r: f64, i: u64) -> f64 {
    assert!(r >= 0.0);
    if i == 0 {
        return 1.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    if (i as f64) <= r {
        // 1 - P(Z <= i-1), forward accumulation of the pmf.
        let mut pmf = (-r).exp();
        let mut cdf = pmf;
        for j in 1..i {
            pmf *= r / j as f64;
            cdf += pmf;
        }
        (1.0 - cdf).max(0.0)
    } else {
        // pmf(i) * (1 + r/(i+1) + r^2/((i+1)(i+2)) + ...)
        let ln_pmf = -r + (i as f64) * r.ln() - ln_factorial(i);
        let lead = ln_pmf.exp();
        let mut term = 1.0;
        let mut series = 1.0;
        let mut j = i + 1;
        while term > 1e-18 * series {
            term *= r / j as f64;
            series += term;
            j += 1;
        }
        lead * series
    }
}

/// ln(n!) via Stirling's series for large n, exact products below.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        let mut acc = 0.0f64;
        for j in 2..=n {
            acc += (j as f64).ln();
        }
        return acc;
    }
    let x = n as f64 + 1.0;
    ln_gamma(x)
}

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial pmf P(Bin(n, p) = k).
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + (k as f64) * p.ln() + ((n - k) as f64) * (1.0 - p).ln()).exp()
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected counts.
///
/// Cells with expected count below `min_expected` are pooled into their
/// predecessor so the asymptotic chi-square approximation stays valid.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], min_expected: f64) -> GofResult {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o as f64;
        acc_e += e;
        if acc_e >= min_expected {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            cells.push((acc_o, acc_e));
        }
    }
    let stat: f64 = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
    };
    GofResult {
        statistic: stat,
        dof,
        p_value,
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = kahan_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Quantile by linear interpolation on the sorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    }
}
