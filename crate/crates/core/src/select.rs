//! Parallel approximate maximum selection under adversarial comparators,
//! Scheffe tests, flattening, and locally private hypothesis selection.
//!
//! A comparator answers truthfully whenever the two hidden values differ by
//! more than one and arbitrarily otherwise. Tournaments submit whole rounds
//! of comparisons at once, so no query can depend on an answer from its own
//! round.

use crate::dist::{DiscreteDistribution, SampleSet};
use crate::error::{Error, Result};
use crate::mech::{randomized_response, rr_debias};
use crate::stats::kahan_sum;
use rand::Rng;

/// Answers batches of same-round comparisons between item indices.
pub trait Comparator {
    /// For each query `(i, j)` return the declared winner's index. All
    /// answers of one call are computed against pre-round state.
    fn compare_round(&mut self, queries: &[(usize, usize)]) -> Vec<usize>;
}

/// Adversary behavior on close pairs (`|x_i - x_j| <= 1`).
#[derive(Debug, Clone)]
pub enum AdversaryPolicy {
    /// Always answer with the true maximum (ties to the lower index).
    Honest,
    /// Uniformly random winner on close pairs.
    Randomized,
    /// Declare the item with fewer recorded wins the winner, starving the
    /// current leader.
    GreedyDemote,
    /// Answers for close pairs are read off a script; `true` means the
    /// first item of the query wins. Used to enumerate all adversaries.
    Scripted(Vec<bool>),
}

/// A comparison oracle over hidden item values with query accounting.
pub struct ValueComparator<R: Rng> {
    values: Vec<f64>,
    policy: AdversaryPolicy,
    rng: R,
    wins: Vec<u64>,
    script_cursor: usize,
    query_log: Vec<(usize, usize, usize)>,
    round_sizes: Vec<usize>,
}

impl<R: Rng> ValueComparator<R> {
    pub fn new(values: Vec<f64>, policy: AdversaryPolicy, rng: R) -> Self {
        let k = values.len();
        ValueComparator {
            values,
            policy,
            rng,
            wins: vec![0; k],
            script_cursor: 0,
            query_log: Vec::new(),
            round_sizes: Vec::new(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn query_log(&self) -> &[(usize, usize, usize)] {
        &self.query_log
    }

    pub fn round_sizes(&self) -> &[usize] {
        &self.round_sizes
    }

    pub fn total_queries(&self) -> usize {
        self.query_log.len()
    }
}

impl<R: Rng> Comparator for ValueComparator<R> {
    fn compare_round(&mut self, queries: &[(usize, usize)]) -> Vec<usize> {
        // wins are frozen at round start so close-pair answers cannot
        // depend on other answers from the same round
        let wins_snapshot = self.wins.clone();
        let mut answers = Vec::with_capacity(queries.len());
        for &(i, j) in queries {
            let (vi, vj) = (self.values[i], self.values[j]);
            let winner = if (vi - vj).abs() > 1.0 {
                if vi > vj {
                    i
                } else {
                    j
                }
            } else {
                match &self.policy {
                    AdversaryPolicy::Honest => {
                        if vj > vi {
                            j
                        } else {
                            i
                        }
                    }
                    AdversaryPolicy::Randomized => {
                        if self.rng.random::<bool>() {
                            i
                        } else {
                            j
                        }
                    }
                    AdversaryPolicy::GreedyDemote => {
                        // starve whichever item leads; break ties toward
                        // declaring the lower value the winner
                        match wins_snapshot[i].cmp(&wins_snapshot[j]) {
                            std::cmp::Ordering::Greater => j,
                            std::cmp::Ordering::Less => i,
                            std::cmp::Ordering::Equal => {
                                if vi <= vj {
                                    i
                                } else {
                                    j
                                }
                            }
                        }
                    }
                    AdversaryPolicy::Scripted(script) => {
                        let bit = script.get(self.script_cursor).copied().unwrap_or(false);
                        self.script_cursor += 1;
                        if bit {
                            i
                        } else {
                            j
                        }
                    }
                }
            };
            answers.push(winner);
        }
        for (&(i, j), &w) in queries.iter().zip(&answers) {
            self.wins[w] += 1;
            self.query_log.push((i, j, w));
        }
        self.round_sizes.push(queries.len());
        answers
    }
}

/// Record of one tournament run.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub winner: usize,
    pub per_round_queries: Vec<usize>,
}

impl Transcript {
    pub fn rounds(&self) -> usize {
        self.per_round_queries.len()
    }

    pub fn total_queries(&self) -> usize {
        self.per_round_queries.iter().sum()
    }
}

/// Round-robin on a set of item ids in one round; ties by lowest id.
fn round_robin_on<C: Comparator + ?Sized>(ids: &[usize], cmp: &mut C) -> (usize, usize) {
    if ids.len() == 1 {
        return (ids[0], 0);
    }
    let mut queries = Vec::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            queries.push((ids[a], ids[b]));
        }
    }
    let answers = cmp.compare_round(&queries);
    let mut wins: std::collections::HashMap<usize, u64> = std::collections::HashMap::new();
    for &w in &answers {
        *wins.entry(w).or_insert(0) += 1;
    }
    let winner = ids
        .iter()
        .copied()
        .max_by_key(|id| (wins.get(id).copied().unwrap_or(0), std::cmp::Reverse(*id)))
        .expect("non-empty");
    (winner, queries.len())
}

/// All-pairs tournament: a 2-approximation of the maximum in one round.
pub fn round_robin<C: Comparator + ?Sized>(k: usize, cmp: &mut C) -> Result<Transcript> {
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    let ids: Vec<usize> = (0..k).collect();
    if k == 1 {
        return Ok(Transcript {
            winner: 0,
            per_round_queries: vec![],
        });
    }
    let (winner, queries) = round_robin_on(&ids, cmp);
    Ok(Transcript {
        winner,
        per_round_queries: vec![queries],
    })
}

fn eta_group_size(k: usize, t: usize) -> usize {
    let eta = 1.0 / (2f64.powi(t as i32) - 1.0);
    let raw = (k as f64).powf(eta);
    // snap to the exact root at perfect powers, where powf may land an
    // ulp on either side; otherwise take the ceiling
    let snapped = raw.round();
    if (raw - snapped).abs() < 1e-9 {
        snapped as usize
    } else {
        raw.ceil() as usize
    }
}

/// One partition round: round-robin inside every group, all groups in the
/// same round. Returns the winners.
fn partition_round<C: Comparator + ?Sized>(
    ids: &[usize],
    group: usize,
    cmp: &mut C,
) -> (Vec<usize>, usize) {
    let mut queries = Vec::new();
    let mut group_slices = Vec::new();
    for chunk in ids.chunks(group) {
        group_slices.push(chunk);
        for a in 0..chunk.len() {
            for b in a + 1..chunk.len() {
                queries.push((chunk[a], chunk[b]));
            }
        }
    }
    let answers = cmp.compare_round(&queries);
    let mut wins: std::collections::HashMap<usize, u64> = std::collections::HashMap::new();
    for &w in &answers {
        *wins.entry(w).or_insert(0) += 1;
    }
    let winners = group_slices
        .iter()
        .map(|chunk| {
            chunk
                .iter()
                .copied()
                .max_by_key(|id| (wins.get(id).copied().unwrap_or(0), std::cmp::Reverse(*id)))
                .expect("non-empty chunk")
        })
        .collect();
    (winners, queries.len())
}

fn multi_round_on<C: Comparator + ?Sized>(
    ids: Vec<usize>,
    t: usize,
    cmp: &mut C,
    per_round: &mut Vec<usize>,
) -> usize {
    if t == 1 || ids.len() == 1 {
        let (winner, q) = round_robin_on(&ids, cmp);
        if !ids.is_empty() {
            per_round.push(q);
        }
        return winner;
    }
    let group = eta_group_size(ids.len(), t);
    let (winners, q) = partition_round(&ids, group, cmp);
    per_round.push(q);
    multi_round_on(winners, t - 1, cmp, per_round)
}

/// The recursive `t`-round tournament: partition into `k^(1 - eta_t)`
/// groups of `k^(eta_t)` with `eta_t = 1/(2^t - 1)`, round-robin each
/// group, recurse on the winners with one round fewer. Achieves a
/// `2t`-approximation.
pub fn multi_round<C: Comparator + ?Sized>(k: usize, t: usize, cmp: &mut C) -> Result<Transcript> {
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let mut per_round = Vec::new();
    let winner = multi_round_on((0..k).collect(), t, cmp, &mut per_round);
    if k == 1 {
        per_round.clear();
    }
    Ok(Transcript {
        winner,
        per_round_queries: per_round,
    })
}

fn multi_round_survivors<C: Comparator + ?Sized>(
    ids: Vec<usize>,
    t: usize,
    cmp: &mut C,
    per_round: &mut Vec<usize>,
) -> Vec<usize> {
    if t == 1 || ids.len() <= 1 {
        return ids;
    }
    let group = eta_group_size(ids.len(), t);
    let (winners, q) = partition_round(&ids, group, cmp);
    per_round.push(q);
    multi_round_survivors(winners, t - 1, cmp, per_round)
}

/// Survivor count entering the final round: `k^(2^(t-1) / (2^t - 1))` at
/// perfect powers.
pub fn survivor_count(k: usize, t: usize) -> f64 {
    (k as f64).powf(2f64.powi(t as i32 - 1) / (2f64.powi(t as i32) - 1.0))
}

/// Size of the random backup set `H` in the 3-approximation tournament.
pub fn backup_set_size(k: usize, t: usize) -> usize {
    ((100.0 * survivor_count(k, t)).ceil() as usize).min(k)
}

/// The 3-approximation `t`-round tournament: run the recursive tournament
/// on a random permutation but halt before its last round, union the
/// survivors with a random backup set of `100 k^(2^(t-1)/(2^t-1))` items,
/// and round-robin the union.
pub fn better_multi_round<C: Comparator + ?Sized, R: Rng + ?Sized>(
    k: usize,
    t: usize,
    cmp: &mut C,
    rng: &mut R,
) -> Result<Transcript> {
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    if k == 1 {
        return Ok(Transcript {
            winner: 0,
            per_round_queries: vec![],
        });
    }
    let mut ids: Vec<usize> = (0..k).collect();
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let mut per_round = Vec::new();
    let survivors = multi_round_survivors(ids, t, cmp, &mut per_round);
    let mut pool: Vec<usize> = survivors;
    let h_size = backup_set_size(k, t);
    let mut available: Vec<usize> = (0..k).collect();
    for i in 0..h_size {
        let j = rng.random_range(i..k);
        available.swap(i, j);
    }
    pool.extend_from_slice(&available[..h_size]);
    pool.sort_unstable();
    pool.dedup();
    let (winner, q) = round_robin_on(&pool, cmp);
    per_round.push(q);
    Ok(Transcript {
        winner,
        per_round_queries: per_round,
    })
}

/// Exact query count and survivor count of the halted recursive
/// tournament, by replaying the partition arithmetic.
pub fn multi_round_query_recursion(k: usize, t: usize) -> (usize, usize) {
    if k <= 1 {
        return (0, k);
    }
    if t == 1 {
        return (k * (k - 1) / 2, 1);
    }
    let group = eta_group_size(k, t);
    let full = k / group;
    let rem = k % group;
    let mut queries = full * group * (group - 1) / 2;
    if rem > 0 {
        queries += rem * (rem - 1) / 2;
    }
    let winners = full + (rem > 0) as usize;
    let (sub, final_winner) = multi_round_query_recursion(winners, t - 1);
    (queries + sub, final_winner)
}

/// Upper bound on the comparisons of [`better_multi_round`].
pub fn better_multi_round_query_bound(k: usize, t: usize) -> usize {
    let (halted, survivors) = halted_recursion(k, t);
    let pool = survivors + backup_set_size(k, t);
    halted + pool * (pool - 1) / 2
}

/// Number of items entering the final round of the recursive tournament,
/// by replaying its partition arithmetic. Equals
/// `k^(2^(t-1)/(2^t-1))` at perfect powers.
pub fn multi_round_survivor_recursion(k: usize, t: usize) -> usize {
    halted_recursion(k, t).1
}

fn halted_recursion(k: usize, t: usize) -> (usize, usize) {
    if t == 1 || k <= 1 {
        return (0, k);
    }
    let group = eta_group_size(k, t);
    let full = k / group;
    let rem = k % group;
    let mut queries = full * group * (group - 1) / 2;
    if rem > 0 {
        queries += rem * (rem - 1) / 2;
    }
    let winners = full + (rem > 0) as usize;
    let (sub, survivors) = halted_recursion(winners, t - 1);
    (queries + sub, survivors)
}

/// The set `{x : q1(x) > q2(x)}` of a Scheffe test.
pub fn scheffe_set(q1: &DiscreteDistribution, q2: &DiscreteDistribution) -> Vec<usize> {
    (0..q1.k()).filter(|&x| q1.prob(x) > q2.prob(x)).collect()
}

/// The Scheffe test: pick the hypothesis whose mass on the witness set is
/// closer to the empirical mass. Returns 0 or 1; ties go to the first.
pub fn scheffe(
    samples: &SampleSet,
    q1: &DiscreteDistribution,
    q2: &DiscreteDistribution,
) -> Result<usize> {
    if q1.k() != q2.k() || samples.k() != q1.k() {
        return Err(Error::DimensionMismatch(
            "hypotheses and samples must share one alphabet".into(),
        ));
    }
    if samples.n() == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let set = scheffe_set(q1, q2);
    let mass1 = q1.mass_of(&set);
    let mass2 = q2.mass_of(&set);
    let hits = samples
        .symbols()
        .iter()
        .filter(|s| set.binary_search(s).is_ok())
        .count();
    let emp = hits as f64 / samples.n() as f64;
    Ok(if (mass1 - emp).abs() <= (mass2 - emp).abs() {
        0
    } else {
        1
    })
}

/// Locally private Scheffe test: every user releases their witness-set
/// membership bit through randomized response, exactly one message each.
pub fn ldp_scheffe<R: Rng + ?Sized>(
    user_samples: &SampleSet,
    q1: &DiscreteDistribution,
    q2: &DiscreteDistribution,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if q1.k() != q2.k() || user_samples.k() != q1.k() {
        return Err(Error::DimensionMismatch(
            "hypotheses and samples must share one alphabet".into(),
        ));
    }
    if user_samples.n() == 0 {
        return Err(Error::InsufficientSamples("no users".into()));
    }
    let set = scheffe_set(q1, q2);
    let mut sum = 0.0;
    for &x in user_samples.symbols() {
        let bit = set.binary_search(&x).is_ok();
        sum += randomized_response(bit, epsilon, rng) as u64 as f64;
    }
    let emp = rr_debias(sum / user_samples.n() as f64, epsilon);
    let mass1 = q1.mass_of(&set);
    let mass2 = q2.mass_of(&set);
    Ok(if (mass1 - emp).abs() <= (mass2 - emp).abs() {
        0
    } else {
        1
    })
}

/// The flattening map: expand the domain so every hypothesis becomes
/// near-uniform while pairwise TV distances exactly halve.
#[derive(Debug, Clone)]
pub struct Flattening {
    bucket_start: Vec<usize>,
    bucket_len: Vec<usize>,
    n_input: usize,
    n_prime: usize,
    pushforwards: Vec<DiscreteDistribution>,
}

impl Flattening {
    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    /// The flattened hypotheses, in input order.
    pub fn pushforwards(&self) -> &[DiscreteDistribution] {
        &self.pushforwards
    }

    /// Apply the randomized map to one symbol.
    pub fn apply<R: Rng + ?Sized>(&self, symbol: usize, rng: &mut R) -> usize {
        if self.bucket_len[symbol] > 0 && rng.random::<f64>() < 0.5 {
            self.bucket_start[symbol] + rng.random_range(0..self.bucket_len[symbol])
        } else {
            rng.random_range(0..self.n_prime)
        }
    }

    /// Map an entire sample set onto the expanded domain.
    pub fn apply_samples<R: Rng + ?Sized>(
        &self,
        samples: &SampleSet,
        rng: &mut R,
    ) -> Result<SampleSet> {
        if samples.k() != self.n_input {
            return Err(Error::DimensionMismatch(format!(
                "samples over [{}], map over [{}]",
                samples.k(),
                self.n_input
            )));
        }
        let mapped = samples
            .symbols()
            .iter()
            .map(|&s| self.apply(s, rng))
            .collect();
        SampleSet::new(mapped, self.n_prime)
    }

    /// Largest log-ratio `|ln(u(a) / q_i(a))|` of the uniform reference
    /// against any flattened hypothesis; the Laplace sensitivity of the
    /// log-likelihood messages.
    pub fn log_ratio_bound(&self) -> f64 {
        let gamma = 1.0 / self.n_prime as f64;
        self.pushforwards
            .iter()
            .flat_map(|q| q.probs().iter().map(move |&p| (gamma / p).ln().abs()))
            .fold(0.0f64, f64::max)
    }
}

/// Build the flattening of a hypothesis family over a common alphabet.
pub fn flatten(hypotheses: &[DiscreteDistribution]) -> Result<Flattening> {
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_input = hypotheses[0].k();
    if hypotheses.iter().any(|q| q.k() != n_input) {
        return Err(Error::DimensionMismatch(
            "hypotheses must share one alphabet".into(),
        ));
    }
    let mut bucket_start = Vec::with_capacity(n_input);
    let mut bucket_len = Vec::with_capacity(n_input);
    let mut next = 0usize;
    for a in 0..n_input {
        let peak = hypotheses.iter().map(|q| q.prob(a)).fold(0.0f64, f64::max);
        let len = (peak * n_input as f64).ceil() as usize;
        bucket_start.push(next);
        bucket_len.push(len);
        next += len;
    }
    let n_prime = next;
    let pushforwards = hypotheses
        .iter()
        .map(|q| {
            let mut probs = vec![0.5 / n_prime as f64; n_prime];
            for a in 0..n_input {
                if bucket_len[a] > 0 {
                    let share = 0.5 * q.prob(a) / bucket_len[a] as f64;
                    for slot in probs[bucket_start[a]..bucket_start[a] + bucket_len[a]].iter_mut() {
                        *slot += share;
                    }
                }
            }
            DiscreteDistribution::new(probs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Flattening {
        bucket_start,
        bucket_len,
        n_input,
        n_prime,
        pushforwards,
    })
}

/// Accounting record of a locally private protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolAudit {
    pub rounds: usize,
    pub users_contacted: usize,
    pub max_messages_per_user: u32,
    pub comparisons: usize,
}

/// Non-interactive selection: users are split into one group per
/// hypothesis; each user in group `i` sends one noised log-likelihood
/// message `ln(u(x)/q_i(x)) + Lap(L/eps)`, and the curator returns the
/// group with the smallest mean.
pub fn ldp_loglik_select<R: Rng + ?Sized>(
    flat: &Flattening,
    samples: &SampleSet,
    epsilon: f64,
    rng: &mut R,
) -> Result<(usize, ProtocolAudit)> {
    let hypotheses = flat.pushforwards();
    let k = hypotheses.len();
    let n = samples.n();
    if samples.k() != flat.n_prime() {
        return Err(Error::DimensionMismatch(
            "samples must live on the flattened domain".into(),
        ));
    }
    let group = n / k;
    if group == 0 {
        return Err(Error::GroupTooSmall(format!("{n} users for {k} groups")));
    }
    let l_bound = flat.log_ratio_bound();
    let gamma = 1.0 / flat.n_prime() as f64;
    let scale = if epsilon.is_infinite() {
        0.0
    } else {
        l_bound / epsilon
    };
    let mut best = (f64::INFINITY, 0usize);
    for (i, q) in hypotheses.iter().enumerate() {
        let users = &samples.symbols()[i * group..(i + 1) * group];
        let mean = kahan_sum(
            users
                .iter()
                .map(|&x| (gamma / q.prob(x)).ln() + crate::mech::laplace_noise(scale, rng)),
        ) / group as f64;
        if mean < best.0 {
            best = (mean, i);
        }
    }
    Ok((
        best.1,
        ProtocolAudit {
            rounds: 1,
            users_contacted: group * k,
            max_messages_per_user: 1,
            comparisons: 0,
        },
    ))
}

/// Comparator that implements each comparison as an LDP Scheffe test on a
/// fresh block of users.
struct LdpScheffeComparator<'a, R: Rng> {
    flat: &'a Flattening,
    samples: &'a SampleSet,
    epsilon: f64,
    group: usize,
    cursor: usize,
    rng: R,
    usage: Vec<u32>,
    comparisons: usize,
}

impl<R: Rng> Comparator for LdpScheffeComparator<'_, R> {
    fn compare_round(&mut self, queries: &[(usize, usize)]) -> Vec<usize> {
        let mut answers = Vec::with_capacity(queries.len());
        for &(i, j) in queries {
            let lo = self.cursor;
            let hi = lo + self.group;
            self.cursor = hi;
            let block = SampleSet::new(self.samples.symbols()[lo..hi].to_vec(), self.samples.k())
                .expect("in range");
            for slot in &mut self.usage[lo..hi] {
                *slot += 1;
            }
            self.comparisons += 1;
            let choice = ldp_scheffe(
                &block,
                &self.flat.pushforwards()[i],
                &self.flat.pushforwards()[j],
                self.epsilon,
                &mut self.rng,
            )
            .expect("validated inputs");
            answers.push(if choice == 0 { i } else { j });
        }
        answers
    }
}

/// Sequentially interactive selection: drive the 3-approximation
/// tournament with every comparison performed by an LDP Scheffe test on a
/// disjoint group of users.
pub fn ldp_select_tournament<R: Rng + ?Sized>(
    flat: &Flattening,
    samples: &SampleSet,
    epsilon: f64,
    t: usize,
    rng: &mut R,
) -> Result<(usize, ProtocolAudit)> {
    let k = flat.pushforwards().len();
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    if samples.k() != flat.n_prime() {
        return Err(Error::DimensionMismatch(
            "samples must live on the flattened domain".into(),
        ));
    }
    let budget = better_multi_round_query_bound(k, t);
    let group = samples.n() / budget.max(1);
    if group == 0 {
        return Err(Error::GroupTooSmall(format!(
            "{} users cannot cover {budget} comparisons",
            samples.n()
        )));
    }
    let sub_seed: u64 = rng.random();
    let mut cmp = LdpScheffeComparator {
        flat,
        samples,
        epsilon,
        group,
        cursor: 0,
        rng: crate::seed::substream(sub_seed, 1),
        usage: vec![0; samples.n()],
        comparisons: 0,
    };
    let mut shuffle_rng = crate::seed::substream(sub_seed, 2);
    let transcript = better_multi_round(k, t, &mut cmp, &mut shuffle_rng)?;
    let audit = ProtocolAudit {
        rounds: transcript.rounds(),
        users_contacted: cmp.cursor,
        max_messages_per_user: cmp.usage.iter().copied().max().unwrap_or(0),
        comparisons: cmp.comparisons,
    };
    Ok((transcript.winner, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{divergence, sample, uniform, Divergence};
    use crate::seed;

    fn honest(values: Vec<f64>) -> ValueComparator<crate::seed::Stream> {
        ValueComparator::new(values, AdversaryPolicy::Honest, seed::root(0))
    }

    #[test]
    fn round_robin_counts_and_winner() {
        let mut cmp = honest(vec![5.0, 9.0, 1.0, 3.0, 7.0, 2.0, 8.0, 4.0]);
        let t = round_robin(8, &mut cmp).unwrap();
        assert_eq!(t.total_queries(), 28);
        assert_eq!(t.rounds(), 1);
        assert_eq!(t.winner, 1);
        let mut single = honest(vec![4.0]);
        let t = round_robin(1, &mut single).unwrap();
        assert_eq!(t.total_queries(), 0);
        assert_eq!(t.winner, 0);
    }

    #[test]
    fn honest_comparator_finds_exact_max_when_gaps_large() {
        // gaps all exceed one: every tournament is exact
        let values: Vec<f64> = (0..27).map(|i| (i as f64) * 2.0).collect();
        for t in 1..=3 {
            let mut cmp = honest(values.clone());
            let tr = multi_round(27, t, &mut cmp).unwrap();
            assert_eq!(tr.winner, 26, "t={t}");
        }
    }

    #[test]
    fn multi_round_matches_recursion_at_perfect_powers() {
        for &(k, t) in &[
            (8usize, 2usize),
            (27, 2),
            (64, 2),
            (4096, 2),
            (128, 3),
            (2187, 3),
            (1, 4),
        ] {
            let values: Vec<f64> = (0..k).map(|i| i as f64 * 2.0).collect();
            let mut cmp = honest(values);
            let tr = multi_round(k, t, &mut cmp).unwrap();
            let (expected, _) = multi_round_query_recursion(k, t);
            assert_eq!(tr.total_queries(), expected, "k={k} t={t}");
            if k > 1 {
                assert_eq!(tr.rounds(), t, "k={k} t={t}");
            }
        }
        // t = 2, k = 64: 16 groups of 4 then round robin of 16
        let (q, _) = multi_round_query_recursion(64, 2);
        assert_eq!(q, 16 * 6 + 120);
    }

    #[test]
    fn survivor_counts_at_perfect_powers() {
        assert_eq!(survivor_count(64, 2).round() as usize, 16);
        assert_eq!(survivor_count(128, 3).round() as usize, 16);
        let (_, survivors) = halted_recursion(64, 2);
        assert_eq!(survivors, 16);
        let (_, survivors) = halted_recursion(128, 3);
        assert_eq!(survivors, 16);
    }

    #[test]
    fn tournaments_reject_degenerate_inputs() {
        let mut cmp = honest(vec![]);
        assert!(matches!(round_robin(0, &mut cmp), Err(Error::EmptyInput)));
        assert!(matches!(
            multi_round(0, 2, &mut cmp),
            Err(Error::EmptyInput)
        ));
        let mut cmp = honest(vec![1.0, 2.0]);
        assert!(matches!(
            multi_round(2, 0, &mut cmp),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            better_multi_round(2, 0, &mut cmp, &mut seed::root(0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn multi_round_t1_equals_round_robin() {
        let values = vec![1.0, 5.0, 3.0];
        let mut a = honest(values.clone());
        let mut b = honest(values);
        let ta = multi_round(3, 1, &mut a).unwrap();
        let tb = round_robin(3, &mut b).unwrap();
        assert_eq!(ta.winner, tb.winner);
        assert_eq!(ta.total_queries(), tb.total_queries());
    }

    #[test]
    fn round_robin_two_approx_under_all_adversaries() {
        // exhaustive adversary enumeration at k <= 6 on a grid of values
        let grids: Vec<Vec<f64>> = vec![
            vec![0.0, 0.5, 1.0, 1.5, 2.0],
            vec![0.0, 1.0, 1.0, 2.0, 2.0],
            vec![0.0, 0.9, 1.8, 2.7, 3.6, 4.5],
        ];
        for values in grids {
            let k = values.len();
            let close_pairs = {
                let mut c = 0;
                for a in 0..k {
                    for b in a + 1..k {
                        if (values[a] - values[b]).abs() <= 1.0 {
                            c += 1;
                        }
                    }
                }
                c
            };
            let max = values.iter().cloned().fold(f64::MIN, f64::max);
            for script_bits in 0u32..(1 << close_pairs) {
                let script: Vec<bool> = (0..close_pairs)
                    .map(|b| script_bits >> b & 1 == 1)
                    .collect();
                let mut cmp = ValueComparator::new(
                    values.clone(),
                    AdversaryPolicy::Scripted(script),
                    seed::root(0),
                );
                let tr = round_robin(k, &mut cmp).unwrap();
                assert!(
                    values[tr.winner] >= max - 2.0 - 1e-12,
                    "values {values:?} script {script_bits:b} winner {}",
                    tr.winner
                );
            }
        }
    }

    #[test]
    fn better_multi_round_t1_covers_everything() {
        let values = vec![1.0, 7.0, 3.0, 5.0];
        let mut cmp = honest(values);
        let tr = better_multi_round(4, 1, &mut cmp, &mut seed::root(4)).unwrap();
        assert_eq!(tr.rounds(), 1);
        assert_eq!(tr.total_queries(), 6);
        assert_eq!(tr.winner, 1);
    }

    #[test]
    fn better_multi_round_three_approx_rate() {
        // adversary randomizes all close comparisons; values packed so
        // close pairs abound
        let k = 256;
        let t = 3;
        let values: Vec<f64> = (0..k)
            .map(|i| (i as f64) * 8.0 / (k as f64 - 1.0))
            .collect();
        let max = 8.0;
        let trials = 400;
        let mut ok = 0;
        let bound = better_multi_round_query_bound(k, t);
        for trial in 0..trials {
            let mut cmp = ValueComparator::new(
                values.clone(),
                AdversaryPolicy::Randomized,
                seed::substream(99, trial as u64),
            );
            let mut rng = seed::substream(100, trial as u64);
            let tr = better_multi_round(k, t, &mut cmp, &mut rng).unwrap();
            assert_eq!(tr.rounds(), t);
            assert!(tr.total_queries() <= bound);
            if values[tr.winner] >= max - 3.0 - 1e-12 {
                ok += 1;
            }
        }
        let rate = ok as f64 / trials as f64;
        assert!(rate >= 0.85, "success rate {rate}");
    }

    #[test]
    fn query_bound_formula_scaling() {
        // t = ceil(lg lg k) keeps the budget within a constant times
        // k ln ln k
        for &k in &[64usize, 256, 1024, 4096] {
            let lglgk = (k as f64).log2().log2().ceil() as usize;
            let bound = better_multi_round_query_bound(k, lglgk);
            let target = k as f64 * (k as f64).ln().ln();
            assert!(
                (bound as f64) <= 2e4 * target,
                "k={k} bound {bound} target {target}"
            );
        }
    }

    #[test]
    fn scheffe_by_hand_and_realizable() {
        let q1 = DiscreteDistribution::new(vec![0.6, 0.3, 0.1]).unwrap();
        let q2 = DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(scheffe_set(&q1, &q2), vec![0]);
        // ties are deterministic
        let same = scheffe(&SampleSet::new(vec![0, 1, 2], 3).unwrap(), &q1, &q1).unwrap();
        assert_eq!(same, 0);
        let mut rng = seed::root(3);
        let mut hits = 0;
        let trials = 200;
        for _ in 0..trials {
            let s = sample(&q1, 500, &mut rng);
            hits += (scheffe(&s, &q1, &q2).unwrap() == 0) as u32;
        }
        assert!(hits as f64 / trials as f64 >= 0.95);
    }

    #[test]
    fn ldp_scheffe_matches_plain_in_the_high_budget_limit() {
        let q1 = DiscreteDistribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        let q2 = DiscreteDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let s = sample(&q1, 2000, &mut seed::root(5));
        let plain = scheffe(&s, &q1, &q2).unwrap();
        let private = ldp_scheffe(&s, &q1, &q2, f64::INFINITY, &mut seed::root(6)).unwrap();
        assert_eq!(plain, private);
        // moderate budget still mostly correct
        let mut rng = seed::root(7);
        let mut hits = 0;
        for _ in 0..100 {
            let s = sample(&q1, 5000, &mut rng);
            hits += (ldp_scheffe(&s, &q1, &q2, 1.0, &mut rng).unwrap() == 0) as u32;
        }
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn flatten_postconditions_exact() {
        let mut rng = seed::root(11);
        for trial in 0..100 {
            let k = 2 + (trial % 7);
            let dom = 2 + (trial % 9);
            let hyps: Vec<DiscreteDistribution> = (0..k)
                .map(|_| crate::dist::dirichlet_draw(dom, 0.8, &mut rng).unwrap())
                .collect();
            let flat = flatten(&hyps).unwrap();
            let n = dom;
            let npr = flat.n_prime();
            assert!(npr >= n && npr <= (k + 1) * n, "N' = {npr}");
            for q in flat.pushforwards() {
                for &mass in q.probs() {
                    assert!(mass >= 1.0 / (2.0 * npr as f64) - 1e-15);
                    assert!(mass <= 1.0 / n as f64 + 1e-15);
                }
            }
            for i in 0..k {
                for j in i + 1..k {
                    let before = divergence(&hyps[i], &hyps[j], Divergence::Tv).unwrap();
                    let after = divergence(
                        &flat.pushforwards()[i],
                        &flat.pushforwards()[j],
                        Divergence::Tv,
                    )
                    .unwrap();
                    assert!((after - before / 2.0).abs() < 1e-10, "{before} vs {after}");
                }
            }
        }
    }

    #[test]
    fn flatten_uniform_family() {
        let u = uniform(5).unwrap();
        let flat = flatten(&[u.clone(), u.clone()]).unwrap();
        assert_eq!(flat.n_prime(), 5);
        for q in flat.pushforwards() {
            for &mass in q.probs() {
                assert!((mass - 0.2).abs() < 1e-12);
            }
        }
    }

    fn spread_hypotheses(k: usize, dom: usize, gap: f64) -> Vec<DiscreteDistribution> {
        // point-mass mixtures with pairwise TV >= gap
        (0..k)
            .map(|i| {
                let mut probs = vec![(1.0 - gap) / dom as f64; dom];
                probs[i % dom] += gap;
                DiscreteDistribution::new(probs).unwrap()
            })
            .collect()
    }

    #[test]
    fn loglik_select_recovers_realizable_truth() {
        let hyps = spread_hypotheses(8, 8, 0.62);
        for i in 0..hyps.len() {
            for j in i + 1..hyps.len() {
                assert!(divergence(&hyps[i], &hyps[j], Divergence::Tv).unwrap() >= 0.3);
            }
        }
        let flat = flatten(&hyps).unwrap();
        let truth = 3usize;
        let mut rng = seed::root(21);
        let mut hits = 0;
        let trials = 40;
        for _ in 0..trials {
            let raw = sample(&flat.pushforwards()[truth], 8 * 50_000, &mut rng);
            let (chosen, audit) = ldp_loglik_select(&flat, &raw, 1.0, &mut rng).unwrap();
            assert_eq!(audit.rounds, 1);
            assert_eq!(audit.max_messages_per_user, 1);
            hits += (chosen == truth) as u32;
        }
        assert!(hits as f64 / trials as f64 >= 0.9, "{hits}/{trials}");
    }

    #[test]
    fn loglik_with_two_hypotheses_is_a_likelihood_ratio_test() {
        // with k = 2 and no noise, argmin of the group means of
        // ln(u/q_i) is exactly the likelihood-ratio decision between the
        // two groups' data
        let q0 = DiscreteDistribution::new(vec![0.8, 0.1, 0.1]).unwrap();
        let q1 = DiscreteDistribution::new(vec![0.1, 0.1, 0.8]).unwrap();
        let flat = flatten(&[q0, q1]).unwrap();
        let mut rng = seed::root(77);
        let raw = sample(&flat.pushforwards()[1], 2000, &mut rng);
        let (choice, _) = ldp_loglik_select(&flat, &raw, f64::INFINITY, &mut rng).unwrap();
        // direct argmin over the two group means
        let gamma = 1.0 / flat.n_prime() as f64;
        let half = raw.n() / 2;
        let mean = |lo: usize, hi: usize, q: &DiscreteDistribution| {
            raw.symbols()[lo..hi]
                .iter()
                .map(|&x| (gamma / q.prob(x)).ln())
                .sum::<f64>()
                / (hi - lo) as f64
        };
        let c0 = mean(0, half, &flat.pushforwards()[0]);
        let c1 = mean(half, 2 * half, &flat.pushforwards()[1]);
        assert_eq!(choice, (c1 < c0) as usize);
    }

    #[test]
    fn tournament_select_recovers_realizable_truth() {
        let hyps = spread_hypotheses(16, 16, 0.62);
        let flat = flatten(&hyps).unwrap();
        let truth = 11usize;
        let t = 2;
        let budget = better_multi_round_query_bound(16, t);
        let group = 4000;
        let mut rng = seed::root(31);
        let mut hits = 0;
        let trials = 40;
        for _ in 0..trials {
            let raw = sample(&flat.pushforwards()[truth], budget * group, &mut rng);
            let (chosen, audit) = ldp_select_tournament(&flat, &raw, 1.0, t, &mut rng).unwrap();
            assert!(audit.rounds <= t);
            assert_eq!(audit.max_messages_per_user, 1);
            assert!(audit.users_contacted <= budget * group);
            hits += (chosen == truth) as u32;
        }
        assert!(hits as f64 / trials as f64 >= 0.85, "{hits}/{trials}");
    }

    #[test]
    fn tournament_select_rejects_thin_pools() {
        let hyps = spread_hypotheses(4, 4, 0.5);
        let flat = flatten(&hyps).unwrap();
        let raw = sample(&flat.pushforwards()[0], 3, &mut seed::root(1));
        assert!(matches!(
            ldp_select_tournament(&flat, &raw, 1.0, 1, &mut seed::root(2)),
            Err(Error::GroupTooSmall(_))
        ));
    }
}
