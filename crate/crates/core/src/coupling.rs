//! Executable couplings with verifiable expected-Hamming bounds, the exact
//! binomial mixture TV computation, stochastic-dominance couplings of
//! max-counts, a greedy constant-weight code construction, and the
//! coupling-based privacy lower-bound calculators.

use crate::dist::{divergence, DiscreteDistribution, Divergence, SampleSet};
use crate::error::{Error, Result};
use crate::stats::{kahan_sum, ln_choose, mean_stderr};
use rand::Rng;
use std::collections::HashMap;

/// A joint sampler over pairs of length-`n` sample sets with prescribed
/// marginal laws and a declared bound on the expected Hamming distance.
pub trait Coupling {
    fn n(&self) -> usize;
    fn hamming_bound(&self) -> f64;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SampleSet, SampleSet);
}

/// Monotone coupling of two Bernoulli product laws: `Y_i = 1` whenever
/// `X_i = 1`, and a zero is promoted with probability `(b2-b1)/(1-b1)`.
#[derive(Debug, Clone)]
pub struct CoinCoupling {
    b1: f64,
    b2: f64,
    n: usize,
}

impl CoinCoupling {
    pub fn new(b1: f64, b2: f64, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&b1) || !(0.0..=1.0).contains(&b2) || b1 > b2 {
            return Err(Error::InvalidParameter("need 0 <= b1 <= b2 <= 1".into()));
        }
        Ok(CoinCoupling { b1, b2, n })
    }
}

impl Coupling for CoinCoupling {
    fn n(&self) -> usize {
        self.n
    }

    fn hamming_bound(&self) -> f64 {
        self.n as f64 * (self.b2 - self.b1)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SampleSet, SampleSet) {
        let promote = if self.b1 < 1.0 {
            (self.b2 - self.b1) / (1.0 - self.b1)
        } else {
            0.0
        };
        let mut x = Vec::with_capacity(self.n);
        let mut y = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let xi = rng.random::<f64>() < self.b1;
            let yi = xi || rng.random::<f64>() < promote;
            x.push(xi as usize);
            y.push(yi as usize);
        }
        (
            SampleSet::new(x, 2).expect("bits"),
            SampleSet::new(y, 2).expect("bits"),
        )
    }
}

/// Per-coordinate maximal coupling of two laws on the same alphabet: the
/// coordinates agree with probability exactly `1 - TV(p, q)`, otherwise
/// they are drawn from the disjoint residuals.
#[derive(Debug, Clone)]
pub struct MaximalCoupling {
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    n: usize,
    tv: f64,
    overlap_cdf: Vec<f64>,
    res_p_cdf: Vec<f64>,
    res_q_cdf: Vec<f64>,
}

impl MaximalCoupling {
    pub fn new(p: DiscreteDistribution, q: DiscreteDistribution, n: usize) -> Result<Self> {
        let tv = divergence(&p, &q, Divergence::Tv)?;
        let k = p.k();
        let mins: Vec<f64> = (0..k).map(|x| p.prob(x).min(q.prob(x))).collect();
        let overlap_mass = kahan_sum(mins.iter().copied());
        let normalize_cdf = |w: &[f64], mass: f64| -> Vec<f64> {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(w.len());
            for &v in w {
                acc += if mass > 0.0 { v / mass } else { 0.0 };
                out.push(acc);
            }
            if let Some(last) = out.last_mut() {
                *last = 1.0;
            }
            out
        };
        let res_p: Vec<f64> = (0..k).map(|x| p.prob(x) - mins[x]).collect();
        let res_q: Vec<f64> = (0..k).map(|x| q.prob(x) - mins[x]).collect();
        Ok(MaximalCoupling {
            n,
            tv,
            overlap_cdf: normalize_cdf(&mins, overlap_mass),
            res_p_cdf: normalize_cdf(&res_p, tv),
            res_q_cdf: normalize_cdf(&res_q, tv),
            p,
            q,
        })
    }

    pub fn tv(&self) -> f64 {
        self.tv
    }

    pub fn marginals(&self) -> (&DiscreteDistribution, &DiscreteDistribution) {
        (&self.p, &self.q)
    }
}

fn inv_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) => (i + 1).min(cdf.len() - 1),
        Err(i) => i.min(cdf.len() - 1),
    }
}

impl Coupling for MaximalCoupling {
    fn n(&self) -> usize {
        self.n
    }

    fn hamming_bound(&self) -> f64 {
        self.n as f64 * self.tv
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SampleSet, SampleSet) {
        let k = self.p.k();
        let mut x = Vec::with_capacity(self.n);
        let mut y = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            if rng.random::<f64>() < 1.0 - self.tv {
                let s = inv_cdf(&self.overlap_cdf, rng);
                x.push(s);
                y.push(s);
            } else {
                x.push(inv_cdf(&self.res_p_cdf, rng));
                y.push(inv_cdf(&self.res_q_cdf, rng));
            }
        }
        (
            SampleSet::new(x, k).expect("in range"),
            SampleSet::new(y, k).expect("in range"),
        )
    }
}

/// Weight distribution of `Bin(t, 1/2)`.
fn weight_law_fair(t: usize) -> Vec<f64> {
    (0..=t)
        .map(|w| (ln_choose(t as u64, w as u64) - t as f64 * 2f64.ln()).exp())
        .collect()
}

/// Weight distribution of the symmetric mixture
/// `1/2 Bin(t, 1/2 + a) + 1/2 Bin(t, 1/2 - a)`.
fn weight_law_mixture(t: usize, alpha: f64) -> Vec<f64> {
    if alpha == 0.0 {
        return weight_law_fair(t);
    }
    let (hi, lo) = (0.5 + alpha, 0.5 - alpha);
    (0..=t)
        .map(|w| {
            let lc = ln_choose(t as u64, w as u64);
            let a = lc + w as f64 * hi.ln() + (t - w) as f64 * lo.ln();
            let b = lc + w as f64 * lo.ln() + (t - w) as f64 * hi.ln();
            0.5 * (a.exp() + b.exp())
        })
        .collect()
}

/// Exact TV between `Bern(1/2)^t` and the mixture of `Bern(1/2 +- a)^t`,
/// by collapsing the `2^t` sequences into `t + 1` weight classes.
pub fn binomial_tv(t: usize, alpha: f64) -> Result<f64> {
    if t > 30 {
        return Err(Error::TooLarge(
            "binomial_tv enumerates up to t = 30".into(),
        ));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1/2]".into()));
    }
    let p1 = weight_law_fair(t);
    let p2 = weight_law_mixture(t, alpha);
    Ok(0.5 * kahan_sum(p1.iter().zip(&p2).map(|(a, b)| (a - b).abs())))
}

/// Distribution of `max(N, t - N)`: CDF over `z = 0..=t` (zero below
/// `ceil(t/2)`), computed from a weight law.
fn max_count_cdf(weights: &[f64]) -> Vec<f64> {
    let t = weights.len() - 1;
    let mut cdf = vec![0.0; t + 1];
    let mut acc = 0.0;
    for z in 0..=t {
        // P(max = z) = P(N = z) + P(N = t - z) for z > t/2; at z = t-z only once
        let lo = t - z;
        if z * 2 < t {
            cdf[z] = 0.0;
            continue;
        }
        let mut mass = weights[z];
        if lo != z {
            mass += weights[lo];
        }
        acc += mass;
        cdf[z] = acc;
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

/// Exact CDFs of the fair and mixture max-counts, for dominance checks.
pub fn max_count_cdfs(t: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    (
        max_count_cdf(&weight_law_fair(t)),
        max_count_cdf(&weight_law_mixture(t, alpha)),
    )
}

/// Quantile (inverse-CDF) coupling of the fair max-count `Z1` and the
/// mixture max-count `Z2`. Stochastic dominance of `Z2` over `Z1` makes the
/// coupling monotone: `Z2 >= Z1` on every draw.
#[derive(Debug, Clone)]
pub struct MonotoneBinomialCoupling {
    t: usize,
    alpha: f64,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl MonotoneBinomialCoupling {
    pub fn new(t: usize, alpha: f64) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("t must be positive".into()));
        }
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1/2]".into()));
        }
        let (f1, f2) = max_count_cdfs(t, alpha);
        Ok(MonotoneBinomialCoupling { t, alpha, f1, f2 })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, u64) {
        let u: f64 = rng.random();
        (invert(&self.f1, u), invert(&self.f2, u))
    }

    /// `E[Z2 - Z1] <= 64 (a^2 t^{3/2} + a^4 t^{5/2} + a^5 t^3)`.
    pub fn gap_bound(&self) -> f64 {
        let t = self.t as f64;
        let a = self.alpha;
        64.0 * (a * a * t.powf(1.5) + a.powi(4) * t.powf(2.5) + a.powi(5) * t.powi(3))
    }
}

fn invert(cdf: &[f64], u: f64) -> u64 {
    for (z, &c) in cdf.iter().enumerate() {
        if c >= u {
            return z as u64;
        }
    }
    (cdf.len() - 1) as u64
}

/// Per-pair coupling data reused across the pairs of one draw.
enum PairLaw {
    /// Weight-class maximal coupling: (tv, agree cdf, residual-1 cdf,
    /// residual-2 cdf).
    Maximal(f64, Vec<f64>, Vec<f64>, Vec<f64>),
    /// Monotone max-count coupling: (F1, F2).
    Monotone(Vec<f64>, Vec<f64>),
}

fn cdf_from_weights(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(w.len());
    for &v in w {
        acc += v;
        out.push(acc);
    }
    if let Some(last) = out.last_mut() {
        *last = last.max(1.0);
    }
    out
}

fn pair_law(r: usize, alpha: f64, monotone_path: bool) -> PairLaw {
    let p1 = weight_law_fair(r);
    let p2 = weight_law_mixture(r, alpha);
    if monotone_path {
        return PairLaw::Monotone(max_count_cdf(&p1), max_count_cdf(&p2));
    }
    let mins: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a.min(*b)).collect();
    let overlap = kahan_sum(mins.iter().copied());
    let tv = 1.0 - overlap;
    let norm = |v: Vec<f64>, mass: f64| -> Vec<f64> {
        if mass <= 0.0 {
            return cdf_from_weights(&v);
        }
        cdf_from_weights(&v.iter().map(|x| x / mass).collect::<Vec<_>>())
    };
    let res1: Vec<f64> = p1.iter().zip(&mins).map(|(a, m)| a - m).collect();
    let res2: Vec<f64> = p2.iter().zip(&mins).map(|(a, m)| a - m).collect();
    PairLaw::Maximal(tv, norm(mins, overlap), norm(res1, tv), norm(res2, tv))
}

/// Coupling between `n` uniform draws over `[k]` and `n` draws from the
/// perturbed-pairs mixture (uniform sign pattern, then i.i.d. samples).
///
/// Coordinates are grouped by pair; within a pair with occupancy `R` the
/// two conditional laws over `{2j, 2j+1}^R` are coupled either maximally
/// over weight classes (the `n <= k` path) or through the monotone
/// quantile coupling of max-counts followed by uniformly chosen flips.
#[derive(Debug, Clone)]
pub struct PaninskiCoupling {
    k: usize,
    alpha: f64,
    n: usize,
    big_c: f64,
}

impl PaninskiCoupling {
    pub fn new(k: usize, alpha: f64, n: usize) -> Result<Self> {
        if k == 0 || !k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "k must be even and positive".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1/2)".into()));
        }
        Ok(PaninskiCoupling {
            k,
            alpha,
            n,
            big_c: 64.0,
        })
    }

    /// Override the moment constant of the large-`n` bound.
    pub fn with_moment_constant(mut self, big_c: f64) -> Self {
        self.big_c = big_c;
        self
    }

    fn monotone_path(&self) -> bool {
        self.n > self.k
    }
}

impl Coupling for PaninskiCoupling {
    fn n(&self) -> usize {
        self.n
    }

    /// `8 a^2 n^2 / k` on the `n <= k` path; the assembled (non-canonical)
    /// `96 C a^2 k (n/k)^{3/2}` constant path otherwise.
    fn hamming_bound(&self) -> f64 {
        let (nf, kf, a) = (self.n as f64, self.k as f64, self.alpha);
        if !self.monotone_path() {
            8.0 * a * a * nf * nf / kf
        } else {
            96.0 * self.big_c * a * a * kf * (nf / kf).powf(1.5)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SampleSet, SampleSet) {
        let pairs = self.k / 2;
        let mut positions: Vec<Vec<usize>> = vec![Vec::new(); pairs];
        for i in 0..self.n {
            positions[rng.random_range(0..pairs)].push(i);
        }
        let mut x = vec![0usize; self.n];
        let mut y = vec![0usize; self.n];
        let mut laws: HashMap<usize, PairLaw> = HashMap::new();
        let monotone = self.monotone_path();
        for (j, occ) in positions.iter().enumerate() {
            let r = occ.len();
            if r == 0 {
                continue;
            }
            let law = laws
                .entry(r)
                .or_insert_with(|| pair_law(r, self.alpha, monotone));
            let (lo_sym, hi_sym) = (2 * j, 2 * j + 1);
            match law {
                PairLaw::Maximal(tv, agree, res1, res2) => {
                    let (w1, w2) = if rng.random::<f64>() < 1.0 - *tv {
                        let w = inv_cdf(agree, rng);
                        (w, w)
                    } else {
                        (inv_cdf(res1, rng), inv_cdf(res2, rng))
                    };
                    if w1 == w2 {
                        let ones = sample_subset(r, w1, rng);
                        scatter(&mut x, &mut y, occ, &ones, &ones, lo_sym, hi_sym);
                    } else {
                        let ones_x = sample_subset(r, w1, rng);
                        let ones_y = sample_subset(r, w2, rng);
                        scatter(&mut x, &mut y, occ, &ones_x, &ones_y, lo_sym, hi_sym);
                    }
                }
                PairLaw::Monotone(f1, f2) => {
                    // draw X fair, read off Z1, then the conditional
                    // quantile for Z2, then flip minority coordinates
                    let mut bits = vec![false; r];
                    let mut n1 = 0usize;
                    for b in bits.iter_mut() {
                        *b = rng.random::<bool>();
                        n1 += *b as usize;
                    }
                    let z1 = n1.max(r - n1);
                    let lo = if z1 == 0 { 0.0 } else { f1[z1 - 1] };
                    let v = lo + rng.random::<f64>() * (f1[z1] - lo);
                    let z2 = invert(f2, v) as usize;
                    let majority_ones = if n1 * 2 == r {
                        rng.random::<bool>()
                    } else {
                        n1 * 2 > r
                    };
                    let mut ybits = bits.clone();
                    let flips = z2 - z1;
                    if flips > 0 {
                        let minority_positions: Vec<usize> =
                            (0..r).filter(|&i| bits[i] != majority_ones).collect();
                        for &pos in
                            choose_without_replacement(&minority_positions, flips, rng).iter()
                        {
                            ybits[pos] = majority_ones;
                        }
                    }
                    for (slot, (&i, (&bx, &by))) in
                        occ.iter().zip(bits.iter().zip(&ybits)).enumerate()
                    {
                        let _ = slot;
                        x[i] = if bx { hi_sym } else { lo_sym };
                        y[i] = if by { hi_sym } else { lo_sym };
                    }
                }
            }
        }
        (
            SampleSet::new(x, self.k).expect("in range"),
            SampleSet::new(y, self.k).expect("in range"),
        )
    }
}

/// Uniformly random w-subset of `0..r` as a boolean mask.
fn sample_subset<R: Rng + ?Sized>(r: usize, w: usize, rng: &mut R) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..r).collect();
    for i in 0..w.min(r) {
        let j = rng.random_range(i..r);
        idx.swap(i, j);
    }
    let mut mask = vec![false; r];
    for &i in idx.iter().take(w) {
        mask[i] = true;
    }
    mask
}

fn choose_without_replacement<R: Rng + ?Sized>(
    pool: &[usize],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut pool = pool.to_vec();
    for i in 0..count.min(pool.len()) {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

fn scatter(
    x: &mut [usize],
    y: &mut [usize],
    occ: &[usize],
    ones_x: &[bool],
    ones_y: &[bool],
    lo_sym: usize,
    hi_sym: usize,
) {
    for (slot, &i) in occ.iter().enumerate() {
        x[i] = if ones_x[slot] { hi_sym } else { lo_sym };
        y[i] = if ones_y[slot] { hi_sym } else { lo_sym };
    }
}

/// Monte-Carlo verification of a coupling's expected Hamming distance.
#[derive(Debug, Clone, Copy)]
pub struct HammingMcReport {
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    /// Set when `mean - 5 stderr > bound`.
    pub violated: bool,
}

pub fn expected_hamming_mc<C: Coupling, R: Rng + ?Sized>(
    coupling: &C,
    trials: usize,
    rng: &mut R,
) -> HammingMcReport {
    let mut dists = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (x, y) = coupling.draw(rng);
        dists.push(crate::dist::hamming(&x, &y).expect("equal lengths") as f64);
    }
    let (mean, stderr) = mean_stderr(&dists);
    let bound = coupling.hamming_bound();
    HammingMcReport {
        mean,
        stderr,
        bound,
        violated: mean - 5.0 * stderr > bound,
    }
}

/// A constant-weight binary code: every codeword has the same weight and
/// all pairwise Hamming distances clear the declared minimum.
#[derive(Debug, Clone)]
pub struct Codebook {
    words: Vec<u128>,
    k: usize,
    weight: u32,
    min_dist: u32,
}

impl Codebook {
    pub fn words(&self) -> &[u128] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn min_dist(&self) -> u32 {
        self.min_dist
    }

    /// Re-check the weight and pairwise-distance invariants.
    pub fn verify(&self) -> bool {
        self.words.iter().all(|w| w.count_ones() == self.weight)
            && self.words.iter().enumerate().all(|(i, a)| {
                self.words[i + 1..]
                    .iter()
                    .all(|b| (a ^ b).count_ones() >= self.min_dist)
            })
    }

    pub fn word_bits(&self, idx: usize) -> Vec<bool> {
        (0..self.k).map(|b| self.words[idx] >> b & 1 == 1).collect()
    }
}

/// Greedy lexicographic constant-weight code construction. Any certificate
/// meeting the weight and distance invariants is acceptable; greedy over
/// the ordered weight-`w` words meets the Gilbert-Varshamov floor at the
/// scales this crate enumerates.
pub fn gv_constant_weight_code(k: usize, weight: u32, min_dist: u32) -> Result<Codebook> {
    if k == 0 || k > 128 {
        return Err(Error::TooLarge("alphabet length must be in 1..=128".into()));
    }
    if weight == 0 || weight as usize > k {
        return Err(Error::InvalidParameter("weight must lie in 1..=k".into()));
    }
    if min_dist == 0 {
        return Err(Error::InvalidParameter(
            "minimum distance must be positive".into(),
        ));
    }
    if ln_choose(k as u64, weight as u64) > (2e7f64).ln() {
        return Err(Error::TooLarge(
            "choose(k, weight) exceeds the enumeration limit".into(),
        ));
    }
    let mut words: Vec<u128> = Vec::new();
    let mut current: u128 = (1u128 << weight) - 1;
    let limit: u128 = if k == 128 {
        u128::MAX
    } else {
        (1u128 << k) - 1
    };
    loop {
        if words
            .iter()
            .all(|&w| (w ^ current).count_ones() >= min_dist)
        {
            words.push(current);
        }
        // Gosper's hack: next integer with the same popcount; the add
        // overflows exactly when the word was the last combination
        let c = current & current.wrapping_neg();
        let r = match current.checked_add(c) {
            Some(r) if r <= limit => r,
            _ => break,
        };
        current = r | ((current ^ r) >> (c.trailing_zeros() + 2));
        if current > limit {
            break;
        }
    }
    let book = Codebook {
        words,
        k,
        weight,
        min_dist,
    };
    debug_assert!(book.verify());
    Ok(book)
}

/// GV floor `(k / (2^{7/8} l))^{7l/8}` on the size of a weight-`l`,
/// distance-`l/4` code.
pub fn gv_size_floor(k: usize, weight: u32) -> f64 {
    let l = weight as f64;
    (k as f64 / (2f64.powf(7.0 / 8.0) * l)).powf(7.0 * l / 8.0)
}

/// The coupling lower bound: any private tester distinguishing two laws
/// joined by a coupling of expected Hamming distance `D` with both error
/// probabilities at most 0.1 must have `eps + delta >= c / D`.
pub fn lebound_from_coupling(d: f64, c: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::InvalidParameter("D must be positive".into()));
    }
    Ok(c / d)
}

/// Entropy-estimation instantiation: `n >= c ln(k) / (alpha eps)`.
pub fn entropy_lb_samples(k: usize, alpha: f64, eps: f64, c: f64) -> f64 {
    c * (k as f64).ln() / (alpha * eps)
}

/// Support-coverage instantiation: `n >= c / (eps alpha)`.
pub fn coverage_lb_samples(alpha: f64, eps: f64, c: f64) -> f64 {
    c / (eps * alpha)
}

/// Support-size instantiation: `c/(alpha eps)` when `k >= 1/alpha`, else
/// the exact-recovery regime `c k / eps`.
pub fn support_size_lb_samples(k: usize, alpha: f64, eps: f64, c: f64) -> f64 {
    if (k as f64) >= 1.0 / alpha {
        c / (alpha * eps)
    } else {
        c * k as f64 / eps
    }
}
