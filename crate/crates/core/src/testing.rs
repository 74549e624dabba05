//! Differentially private uniformity, identity, and closeness testers.
//!
//! The statistic for uniformity is the total variation distance between the
//! empirical distribution and uniform, recentred and rescaled so that one
//! substitution moves it by at most one; the private decision is a single
//! Bernoulli release through a sigmoid. Closeness uses the four-histogram
//! statistic with sensitivity two. Identity reduces to uniformity over an
//! alphabet six times larger at a third of the radius.

use crate::constants::CalibratedConstants;
use crate::dist::{DiscreteDistribution, Histogram, SampleSet};
use crate::error::{Error, Result};
use crate::mech::{sigmoid_release, PrivacyBudget};
use crate::seed;
use rand::Rng;
use rand_distr::{Binomial, Distribution as _, Poisson};
use std::collections::HashMap;
use std::sync::Mutex;

/// Parameters of a testing run.
#[derive(Debug, Clone)]
pub struct TesterConfig {
    pub k: usize,
    pub alpha: f64,
    pub budget: PrivacyBudget,
    pub constants: CalibratedConstants,
    pub use_poisson: bool,
}

impl TesterConfig {
    pub fn new(k: usize, alpha: f64, budget: PrivacyBudget) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
        }
        Ok(TesterConfig {
            k,
            alpha,
            budget,
            constants: CalibratedConstants::default(),
            use_poisson: false,
        })
    }

    pub fn with_constants(mut self, constants: CalibratedConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_poisson(mut self, use_poisson: bool) -> Self {
        self.use_poisson = use_poisson;
        self
    }
}

/// Verdict of a private tester.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    NullAccepted,
    Alternative,
}

/// Outcome of one tester run. The decision is a function of the released
/// bit alone; the raw statistic is kept for diagnostics and is not private.
#[derive(Debug, Clone, Copy)]
pub struct TestOutcome {
    pub decision: Decision,
    pub statistic_value: f64,
    pub released_bit: bool,
}

impl TestOutcome {
    fn from_bit(bit: bool, statistic_value: f64) -> Self {
        TestOutcome {
            decision: if bit {
                Decision::Alternative
            } else {
                Decision::NullAccepted
            },
            statistic_value,
            released_bit: bit,
        }
    }
}

/// `S(X^n) = 1/2 sum_x |M_x/n - 1/k|`, the TV distance of the empirical
/// distribution from uniform. Equals `Phi_0 / k` whenever `n <= k`.
///
/// Computed as the exact integer `sum_x |M_x k - n|` over `2nk`, so the
/// only rounding is the final division.
pub fn unif_statistic_s(hist: &Histogram) -> f64 {
    let n = hist.n();
    let k = hist.k() as u64;
    if n == 0 {
        // empty sample: the empirical distribution carries no mass
        return 0.5;
    }
    unif_statistic_s_scaled(hist) as f64 / (2 * n * k) as f64
}

/// The exact integer numerator `sum_x |M_x k - n| = 2nk S(X^n)`.
pub fn unif_statistic_s_scaled(hist: &Histogram) -> u64 {
    let n = hist.n();
    let k = hist.k() as u64;
    hist.counts().iter().map(|&c| (c * k).abs_diff(n)).sum()
}

/// `E[S]` under the uniform distribution. Closed form `(1 - 1/k)^n` for
/// fixed-length samples with `n <= k`; otherwise a cached Monte-Carlo value
/// over 10^5 trials with a fixed internal seed.
pub fn mu_uniform(k: usize, n: usize, use_poisson: bool) -> f64 {
    if !use_poisson && n <= k {
        return (1.0 - 1.0 / k as f64).powi(n as i32);
    }
    type MuCache = HashMap<(usize, usize, bool), f64>;
    static CACHE: Mutex<Option<MuCache>> = Mutex::new(None);
    let mut guard = CACHE.lock().unwrap();
    let cache = guard.get_or_insert_with(HashMap::new);
    if let Some(&v) = cache.get(&(k, n, use_poisson)) {
        return v;
    }
    let mut rng = seed::substream(
        0x6d75_5f75_6e69_666f,
        (use_poisson as u64) << 63 | (k as u64) << 32 | n as u64,
    );
    let trials = 100_000;
    let mut acc = 0.0;
    let mut counts = vec![0u64; k];
    for _ in 0..trials {
        uniform_counts(k, n, use_poisson, &mut counts, &mut rng);
        let total: u64 = counts.iter().sum();
        acc += s_from_counts(&counts, total);
    }
    let mu = acc / trials as f64;
    cache.insert((k, n, use_poisson), mu);
    mu
}

fn s_from_counts(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let k = counts.len() as u64;
    let num: u64 = counts.iter().map(|&c| (c * k).abs_diff(n)).sum();
    num as f64 / (2 * n * k) as f64
}

/// Exact multinomial (or Poissonized) counts under the uniform law.
fn uniform_counts<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    poisson: bool,
    counts: &mut [u64],
    rng: &mut R,
) {
    if n == 0 {
        counts.fill(0);
    } else if poisson {
        let per = Poisson::new(n as f64 / k as f64).expect("positive rate");
        for c in counts.iter_mut() {
            *c = per.sample(rng) as u64;
        }
    } else {
        let mut remaining = n as u64;
        for (i, c) in counts.iter_mut().enumerate() {
            let cells_left = (k - i) as f64;
            if remaining == 0 {
                *c = 0;
                continue;
            }
            if i + 1 == k {
                *c = remaining;
                break;
            }
            let draw = Binomial::new(remaining, 1.0 / cells_left)
                .expect("valid binomial")
                .sample(rng);
            *c = draw;
            remaining -= draw;
        }
    }
}

/// The normalized uniformity statistic with sensitivity at most one.
pub fn unif_statistic_z(samples: &SampleSet, cfg: &TesterConfig) -> Result<f64> {
    if cfg.k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2".into()));
    }
    if samples.k() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "samples over [{}], config expects [{}]",
            samples.k(),
            cfg.k
        )));
    }
    let n = samples.n();
    let k = cfg.k as f64;
    let s = unif_statistic_s(&samples.histogram());
    let mu = mu_uniform(cfg.k, n, cfg.use_poisson);
    let (c, alpha, nf) = (cfg.constants.c, cfg.alpha, n as f64);
    let z = if nf <= k {
        k * (s - mu - 0.5 * c * alpha * alpha * nf * nf / (k * k))
    } else if nf <= k / (alpha * alpha) {
        nf * (s - mu - 0.5 * c * alpha * alpha * (nf / k).sqrt())
    } else {
        nf * (s - mu - 0.5 * c * alpha)
    };
    Ok(z)
}

/// The private uniformity tester: release `Bernoulli(sigma(eps Z))`; a zero
/// bit accepts uniformity.
pub fn uniformity_test<R: Rng + ?Sized>(
    samples: &SampleSet,
    cfg: &TesterConfig,
    rng: &mut R,
) -> Result<TestOutcome> {
    let epsilon = cfg.budget.testing_epsilon()?;
    let z = unif_statistic_z(samples, cfg)?;
    let bit = sigmoid_release(z, epsilon, rng);
    Ok(TestOutcome::from_bit(bit, z))
}

/// The randomized per-coordinate map taking `q`-distributed symbols to
/// uniform ones over `6k` buckets.
///
/// The reference distribution is first smoothed, `q' = q/2 + u/2`, so every
/// mass is at least `1/(2k)`. Symbol `x` owns `floor(6k q'(x))` buckets; a
/// smoothed symbol lands uniformly in its own buckets with probability
/// `m_x / (6k q'(x))` and otherwise falls through to the shared slack
/// region, which tops the law up to exactly uniform.
#[derive(Debug, Clone)]
pub struct IdentityReduction {
    k: usize,
    bucket_start: Vec<usize>,
    bucket_len: Vec<usize>,
    own_prob: Vec<f64>,
    slack_start: usize,
    smoothed: Vec<f64>,
}

impl IdentityReduction {
    pub fn new(q: &DiscreteDistribution) -> Self {
        let k = q.k();
        let m = 6 * k;
        let smoothed: Vec<f64> = q
            .probs()
            .iter()
            .map(|&p| 0.5 * p + 0.5 / k as f64)
            .collect();
        let mut bucket_start = Vec::with_capacity(k);
        let mut bucket_len = Vec::with_capacity(k);
        let mut own_prob = Vec::with_capacity(k);
        let mut next = 0usize;
        for &qx in &smoothed {
            let target = m as f64 * qx;
            let buckets = target.floor() as usize;
            bucket_start.push(next);
            bucket_len.push(buckets);
            own_prob.push(buckets as f64 / target);
            next += buckets;
        }
        IdentityReduction {
            k,
            bucket_start,
            bucket_len,
            own_prob,
            slack_start: next,
            smoothed,
        }
    }

    pub fn output_alphabet(&self) -> usize {
        6 * self.k
    }

    /// Buckets owned by symbol `x`.
    pub fn bucket_range(&self, x: usize) -> std::ops::Range<usize> {
        self.bucket_start[x]..self.bucket_start[x] + self.bucket_len[x]
    }

    /// Apply the map independently to one symbol.
    pub fn apply<R: Rng + ?Sized>(&self, symbol: usize, rng: &mut R) -> usize {
        let m = self.output_alphabet();
        let x = if rng.random::<f64>() < 0.5 {
            symbol
        } else {
            rng.random_range(0..self.k)
        };
        let slack = m - self.slack_start;
        if slack == 0 || rng.random::<f64>() < self.own_prob[x] {
            self.bucket_start[x] + rng.random_range(0..self.bucket_len[x])
        } else {
            self.slack_start + rng.random_range(0..slack)
        }
    }

    /// Exact output law when the input symbols follow `p`.
    pub fn pushforward(&self, p: &DiscreteDistribution) -> Result<DiscreteDistribution> {
        if p.k() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "input over [{}], reduction built for [{}]",
                p.k(),
                self.k
            )));
        }
        let m = self.output_alphabet();
        let mut out = vec![0.0; m];
        let mut leftover = 0.0;
        for x in 0..self.k {
            let px = 0.5 * p.prob(x) + 0.5 / self.k as f64;
            let own = px * self.own_prob[x];
            for b in self.bucket_range(x) {
                out[b] = own / self.bucket_len[x] as f64;
            }
            leftover += px - own;
        }
        let slack = m - self.slack_start;
        if slack > 0 {
            for slot in out.iter_mut().skip(self.slack_start) {
                *slot = leftover / slack as f64;
            }
        }
        DiscreteDistribution::new(out)
    }

    /// The smoothed reference mass `q'(x)`.
    pub fn smoothed_mass(&self, x: usize) -> f64 {
        self.smoothed[x]
    }
}

/// Map a sample set through `F_q`, coordinate by coordinate.
pub fn identity_reduce<R: Rng + ?Sized>(
    q: &DiscreteDistribution,
    samples: &SampleSet,
    rng: &mut R,
) -> Result<SampleSet> {
    if samples.k() != q.k() {
        return Err(Error::DimensionMismatch(format!(
            "samples over [{}], q over [{}]",
            samples.k(),
            q.k()
        )));
    }
    let reduction = IdentityReduction::new(q);
    let mapped: Vec<usize> = samples
        .symbols()
        .iter()
        .map(|&s| reduction.apply(s, rng))
        .collect();
    SampleSet::new(mapped, reduction.output_alphabet())
}

/// Identity testing against a known `q` by reduction to uniformity over
/// `[6k]` at radius `alpha/3`. Privacy carries over because the reduction
/// acts on each coordinate independently.
pub fn identity_test<R: Rng + ?Sized>(
    q: &DiscreteDistribution,
    samples: &SampleSet,
    cfg: &TesterConfig,
    rng: &mut R,
) -> Result<TestOutcome> {
    if q.k() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "q over [{}], config expects [{}]",
            q.k(),
            cfg.k
        )));
    }
    if cfg.k == 1 {
        // a single-symbol alphabet holds only one distribution
        return Ok(TestOutcome::from_bit(false, 0.0));
    }
    let reduced = identity_reduce(q, samples, rng)?;
    let mut inner = cfg.clone();
    inner.k = 6 * cfg.k;
    inner.alpha = cfg.alpha / 3.0;
    uniformity_test(&reduced, &inner, rng)
}

/// The four-histogram closeness statistic
/// `1/2 sum_i (|X_i - Y_i| + |X~_i - Y~_i| - |X_i - X~_i| - |Y_i - Y~_i|)`.
///
/// Every count appears in two absolute-difference terms, so a substitution
/// (which moves two counts of one histogram) shifts the raw four-term sum
/// by up to four; the leading half brings the sensitivity down to two.
pub fn closeness_statistic_z(
    x: &Histogram,
    x_tilde: &Histogram,
    y: &Histogram,
    y_tilde: &Histogram,
) -> Result<f64> {
    let k = x.k();
    if [x_tilde.k(), y.k(), y_tilde.k()].iter().any(|&kk| kk != k) {
        return Err(Error::DimensionMismatch(
            "all four histograms must share one alphabet".into(),
        ));
    }
    let mut z: i64 = 0;
    for i in 0..k {
        let (a, at) = (x.counts()[i] as i64, x_tilde.counts()[i] as i64);
        let (b, bt) = (y.counts()[i] as i64, y_tilde.counts()[i] as i64);
        z += (a - b).abs() + (at - bt).abs() - (a - at).abs() - (b - bt).abs();
    }
    Ok(z as f64 / 2.0)
}

/// The private closeness tester: split each source in half, form the
/// statistic, shift by `C1 sqrt(n) + C2/eps`, halve so the sensitivity is
/// one, and release the sigmoid bit. A zero bit accepts `p = q`.
pub fn closeness_test<R: Rng + ?Sized>(
    samples_p: &SampleSet,
    samples_q: &SampleSet,
    cfg: &TesterConfig,
    rng: &mut R,
) -> Result<TestOutcome> {
    if samples_p.k() != samples_q.k() {
        return Err(Error::DimensionMismatch(
            "sources must share one alphabet".into(),
        ));
    }
    if samples_p.n() < 2 || samples_q.n() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 samples per source".into(),
        ));
    }
    let epsilon = cfg.budget.testing_epsilon()?;
    let (x, x_tilde) = samples_p.split_halves(cfg.use_poisson, rng);
    let (y, y_tilde) = samples_q.split_halves(cfg.use_poisson, rng);
    let z = closeness_statistic_z(
        &x.histogram(),
        &x_tilde.histogram(),
        &y.histogram(),
        &y_tilde.histogram(),
    )?;
    let n_half = (samples_p.n() + samples_q.n()) as f64 / 4.0;
    let z_shifted = (z - cfg.constants.c1 * n_half.sqrt() - cfg.constants.c2 / epsilon) / 2.0;
    let bit = sigmoid_release(z_shifted, epsilon, rng);
    Ok(TestOutcome::from_bit(bit, z_shifted))
}

/// Testing task selector for [`sample_complexity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Uniformity,
    Identity,
    Closeness,
}

/// Calibrated sample-complexity formulas. An `(eps, delta)` budget enters
/// the formulas through `eps + delta`.
pub fn sample_complexity(
    task: Task,
    k: usize,
    alpha: f64,
    budget: PrivacyBudget,
    constants: &CalibratedConstants,
) -> Result<usize> {
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
    let value = match task {
        Task::Uniformity => constants.ut_multiplier * ut_formula(k as f64, alpha, eps),
        Task::Identity => constants.ut_multiplier * ut_formula(6.0 * k as f64, alpha / 3.0, eps),
        Task::Closeness => {
            let k = k as f64;
            constants.ct_multiplier
                * (k.sqrt() / (alpha * alpha)
                    + k.powf(2.0 / 3.0) / alpha.powf(4.0 / 3.0)
                    + privacy_terms(k, alpha, eps).iter().sum::<f64>())
        }
    };
    Ok(value.ceil() as usize)
}

fn ut_formula(k: f64, alpha: f64, eps: f64) -> f64 {
    let max_term = privacy_terms(k, alpha, eps)
        .into_iter()
        .fold(0.0f64, f64::max);
    k.sqrt() / (alpha * alpha) + max_term
}

/// The three privacy-driven terms of the testing sample complexities.
pub fn privacy_terms(k: f64, alpha: f64, eps: f64) -> [f64; 3] {
    if eps.is_infinite() {
        return [0.0, 0.0, 0.0];
    }
    [
        k.sqrt() / (alpha * eps.sqrt()),
        k.cbrt() / (alpha.powf(4.0 / 3.0) * eps.powf(2.0 / 3.0)),
        1.0 / (alpha * eps),
    ]
}
