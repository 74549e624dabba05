//! Discrete distributions over `[k]` (symbols `0..k`), sample sets,
//! histograms, profiles, distance measures, sampling, and the Euclidean
//! simplex projection.

use crate::error::{Error, Result};
use crate::stats::kahan_sum;
use rand::Rng;
use rand_distr::{Distribution as _, Poisson};
use std::collections::BTreeMap;

const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over the alphabet `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates non-negativity and unit mass (within 1e-12).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("alphabet must be non-empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        kahan_sum(
            self.probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln()),
        )
    }

    /// Mass assigned to a set of symbols.
    pub fn mass_of<'a, I: IntoIterator<Item = &'a usize>>(&self, symbols: I) -> f64 {
        kahan_sum(symbols.into_iter().map(|&x| self.probs[x]))
    }

    /// Cumulative vector for inverse-CDF sampling.
    fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.probs.len());
        for &p in &self.probs {
            acc += p;
            out.push(acc);
        }
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }
}

/// A sequence of symbols in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    symbols: Vec<usize>,
    k: usize,
}

impl SampleSet {
    pub fn new(symbols: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s >= k) {
            return Err(Error::InvalidParameter(format!(
                "symbol {bad} out of range for alphabet size {k}"
            )));
        }
        Ok(Self { symbols, k })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn histogram(&self) -> Histogram {
        let mut counts = vec![0u64; self.k];
        for &s in &self.symbols {
            counts[s] += 1;
        }
        Histogram {
            counts,
            n: self.symbols.len() as u64,
        }
    }

    /// Split into two halves, even count each; an odd trailing sample is
    /// dropped. With `random`, each sample is routed independently with
    /// probability 1/2, which preserves Poissonization of the source.
    pub fn split_halves<R: Rng + ?Sized>(
        &self,
        random: bool,
        rng: &mut R,
    ) -> (SampleSet, SampleSet) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        if random {
            for &s in &self.symbols {
                if rng.random::<bool>() {
                    a.push(s);
                } else {
                    b.push(s);
                }
            }
        } else {
            let half = self.symbols.len() / 2;
            a.extend_from_slice(&self.symbols[..half]);
            b.extend_from_slice(&self.symbols[half..2 * half]);
        }
        (
            SampleSet {
                symbols: a,
                k: self.k,
            },
            SampleSet {
                symbols: b,
                k: self.k,
            },
        )
    }
}

/// Per-symbol multiplicities of a sample set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    n: u64,
}

impl Histogram {
    pub fn new(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn distinct(&self) -> u64 {
        self.counts.iter().filter(|&&c| c > 0).count() as u64
    }

    /// Empirical distribution; errors when the histogram is empty.
    pub fn empirical(&self) -> Result<DiscreteDistribution> {
        if self.n == 0 {
            return Err(Error::EmptyHistogram);
        }
        DiscreteDistribution::new(
            self.counts
                .iter()
                .map(|&c| c as f64 / self.n as f64)
                .collect(),
        )
    }

    pub fn profile(&self) -> Profile {
        let mut phi: BTreeMap<u64, u64> = BTreeMap::new();
        for &c in &self.counts {
            if c > 0 {
                *phi.entry(c).or_insert(0) += 1;
            }
        }
        let distinct = self.distinct();
        Profile {
            phi,
            phi0: self.counts.len() as u64 - distinct,
            n: self.n,
        }
    }
}

/// Counts of counts: `phi(i)` is the number of symbols appearing exactly
/// `i` times; `phi0` counts unseen symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    phi: BTreeMap<u64, u64>,
    phi0: u64,
    n: u64,
}

impl Profile {
    pub fn phi(&self, i: u64) -> u64 {
        if i == 0 {
            self.phi0
        } else {
            self.phi.get(&i).copied().unwrap_or(0)
        }
    }

    /// Multiplicities with non-zero counts, ascending, excluding zero.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.phi.iter().map(|(&i, &c)| (i, c))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn distinct(&self) -> u64 {
        self.phi.values().sum()
    }
}

/// Distance measure selector for [`divergence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    /// Total variation, half the l1 distance.
    Tv,
    /// Kullback-Leibler divergence in nats.
    Kl,
    /// Chi-square divergence.
    Chi2,
    /// Euclidean distance of the probability vectors.
    L2,
}

/// Exact divergence between two distributions on the same alphabet.
pub fn divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    kind: Divergence,
) -> Result<f64> {
    if p.k() != q.k() {
        return Err(Error::DimensionMismatch(format!(
            "alphabet sizes {} vs {}",
            p.k(),
            q.k()
        )));
    }
    let pq = p.probs.iter().zip(q.probs.iter());
    match kind {
        Divergence::Tv => Ok(0.5 * kahan_sum(pq.map(|(a, b)| (a - b).abs()))),
        Divergence::L2 => Ok(kahan_sum(pq.map(|(a, b)| (a - b) * (a - b))).sqrt()),
        Divergence::Kl => {
            check_absolute_continuity(p, q)?;
            Ok(kahan_sum(pq.filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln())).max(0.0))
        }
        Divergence::Chi2 => {
            check_absolute_continuity(p, q)?;
            Ok(kahan_sum(
                pq.filter(|(_, b)| **b > 0.0)
                    .map(|(a, b)| (a - b) * (a - b) / b),
            ))
        }
    }
}

fn check_absolute_continuity(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    for (x, (&a, &b)) in p.probs.iter().zip(q.probs.iter()).enumerate() {
        if b == 0.0 && a > 0.0 {
            return Err(Error::AbsoluteContinuityViolation { symbol: x, mass: a });
        }
    }
    Ok(())
}

/// Number of coordinates where the two sample sets differ.
pub fn hamming(x: &SampleSet, y: &SampleSet) -> Result<u64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch(format!(
            "sample lengths {} vs {}",
            x.n(),
            y.n()
        )));
    }
    Ok(x.symbols
        .iter()
        .zip(y.symbols.iter())
        .filter(|(a, b)| a != b)
        .count() as u64)
}

/// `n` i.i.d. draws from `p` by inverse-CDF lookup.
pub fn sample<R: Rng + ?Sized>(p: &DiscreteDistribution, n: usize, rng: &mut R) -> SampleSet {
    let cdf = p.cdf();
    let symbols = (0..n).map(|_| draw_from_cdf(&cdf, rng)).collect();
    SampleSet { symbols, k: p.k() }
}

/// Draw `N ~ Poisson(rate)` then `N` i.i.d. samples, making per-symbol
/// counts independent Poisson variables.
pub fn poissonized_sample<R: Rng + ?Sized>(
    p: &DiscreteDistribution,
    rate: f64,
    rng: &mut R,
) -> SampleSet {
    assert!(rate >= 0.0, "rate must be non-negative");
    let n = if rate == 0.0 {
        0
    } else {
        Poisson::new(rate).expect("valid rate").sample(rng) as usize
    };
    sample(p, n, rng)
}

fn draw_from_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) => (i + 1).min(cdf.len() - 1),
        Err(i) => i.min(cdf.len() - 1),
    }
}

/// Euclidean projection onto the probability simplex by sort-and-threshold.
pub fn project_to_simplex(v: &[f64]) -> Result<DiscreteDistribution> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("entries must be finite".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let candidate = (cum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut probs: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // Renormalize away the residual rounding of the threshold pass.
    let total = kahan_sum(probs.iter().copied());
    for p in &mut probs {
        *p /= total;
    }
    DiscreteDistribution::new(probs)
}

/// Uniform distribution over `k` symbols.
pub fn uniform(k: usize) -> Result<DiscreteDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    DiscreteDistribution::new(vec![1.0 / k as f64; k])
}

/// Power-law distribution: mass proportional to `(i+1)^-s`.
pub fn zipf(k: usize, s: f64) -> Result<DiscreteDistribution> {
    if k == 0 || !s.is_finite() {
        return Err(Error::InvalidParameter(
            "zipf requires k >= 1, finite s".into(),
        ));
    }
    let weights: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
    let total = kahan_sum(weights.iter().copied());
    DiscreteDistribution::new(weights.into_iter().map(|w| w / total).collect())
}

/// Two-level distribution: the first half of the alphabet carries 1/4 of
/// the mass, the second half carries 3/4.
pub fn two_step(k: usize) -> Result<DiscreteDistribution> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "two_step requires even k >= 2".into(),
        ));
    }
    let half = k / 2;
    let lo = 0.5 / k as f64;
    let hi = 1.5 / k as f64;
    let mut probs = vec![lo; half];
    probs.extend(std::iter::repeat_n(hi, half));
    DiscreteDistribution::new(probs)
}

/// A draw from the symmetric Dirichlet with concentration `conc`.
pub fn dirichlet_draw<R: Rng + ?Sized>(
    k: usize,
    conc: f64,
    rng: &mut R,
) -> Result<DiscreteDistribution> {
    if k == 0 || conc <= 0.0 {
        return Err(Error::InvalidParameter(
            "dirichlet requires k >= 1 and conc > 0".into(),
        ));
    }
    let gamma =
        rand_distr::Gamma::new(conc, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut weights: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total = kahan_sum(weights.iter().copied());
    if total <= 0.0 {
        // All draws underflowed; fall back to the uniform point of the simplex.
        return uniform(k);
    }
    for w in &mut weights {
        *w /= total;
    }
    DiscreteDistribution::new(weights)
}

/// The perturbed-pairs distribution: pair `i` splits its mass `2/k` as
/// `(1 ± 2a·z_i)/k`. Its total variation distance to uniform is exactly `a`.
pub fn paninski(k: usize, alpha: f64, z: &[bool]) -> Result<DiscreteDistribution> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "k must be even and positive".into(),
        ));
    }
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::InvalidParameter("alpha must be in [0, 1/2)".into()));
    }
    if z.len() != k / 2 {
        return Err(Error::InvalidParameter(format!(
            "z must have length k/2 = {}",
            k / 2
        )));
    }
    let mut probs = Vec::with_capacity(k);
    for &zi in z {
        let sign = if zi { 1.0 } else { -1.0 };
        probs.push((1.0 + sign * 2.0 * alpha) / k as f64);
        probs.push((1.0 - sign * 2.0 * alpha) / k as f64);
    }
    DiscreteDistribution::new(probs)
}

/// The entropy lower-bound pair: `p(0) = 2/3`, `q(0) = (2-eta)/3`, with the
/// remainder spread uniformly. `TV(p, q) = eta/3`.
pub fn entropy_lb_pair(k: usize, eta: f64) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter("eta must be in [0, 1]".into()));
    }
    let rest = (k - 1) as f64;
    let mut p = vec![(1.0 / 3.0) / rest; k];
    p[0] = 2.0 / 3.0;
    let mut q = vec![((1.0 + eta) / 3.0) / rest; k];
    q[0] = (2.0 - eta) / 3.0;
    Ok((DiscreteDistribution::new(p)?, DiscreteDistribution::new(q)?))
}

/// The support-coverage lower-bound pair on the alphabet `[m(1+a)] + 1`:
/// `u1` uniform over the first `m(1+a)` symbols; `u2` uniform on the first
/// `m` with the leftover mass `a/(1+a)` on the extra symbol. Requires `m*a`
/// to be a positive integer.
pub fn coverage_lb_pair(
    m: usize,
    alpha: f64,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    if m == 0 || alpha <= 0.0 {
        return Err(Error::InvalidParameter(
            "m >= 1 and alpha > 0 required".into(),
        ));
    }
    let extra = m as f64 * alpha;
    if (extra - extra.round()).abs() > 1e-9 || extra.round() < 1.0 {
        return Err(Error::InvalidParameter(
            "m * alpha must be a positive integer".into(),
        ));
    }
    let big = m + extra.round() as usize;
    let k = big + 1;
    let mut u1 = vec![1.0 / big as f64; big];
    u1.push(0.0);
    let mut u2 = vec![0.0; k];
    for slot in u2.iter_mut().take(m) {
        *slot = 1.0 / big as f64;
    }
    u2[k - 1] = extra.round() / big as f64;
    Ok((
        DiscreteDistribution::new(u1)?,
        DiscreteDistribution::new(u2)?,
    ))
}

/// Expected number of distinct symbols in `m` fresh draws from `p`.
pub fn support_coverage(p: &DiscreteDistribution, m: u64) -> f64 {
    kahan_sum(
        p.probs()
            .iter()
            .map(|&px| 1.0 - (1.0 - px).powi(m.min(i32::MAX as u64) as i32)),
    )
}
