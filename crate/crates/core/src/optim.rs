//! Private Frank-Wolfe over the l1 ball for sparse logistic regression,
//! Gibbs sampling from Ising models, and per-node private estimation of
//! Ising weight matrices.

use crate::error::{Error, Result};
use crate::mech::{laplace_noise, PrivacyBudget};
use crate::stats::{kahan_sum, log1p_exp, sigmoid};
use rand::Rng;

/// Binary-labeled features with `max |x_ij| <= 1`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
}

impl LabeledDataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 || y.is_empty() || x.len() != y.len() * p {
            return Err(Error::EmptyDataset);
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(
                "features must satisfy |x| <= 1".into(),
            ));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidParameter("labels must be +-1".into()));
        }
        let n = y.len();
        Ok(LabeledDataset { x, y, n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.x[m * self.p..(m + 1) * self.p]
    }

    pub fn label(&self, m: usize) -> f64 {
        self.y[m]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean logistic loss `1/n sum ln(1 + exp(-y <w, x>))`.
pub fn logistic_loss(w: &[f64], data: &LabeledDataset) -> Result<f64> {
    if w.len() != data.p {
        return Err(Error::DimensionMismatch(format!(
            "weights of length {}, features of width {}",
            w.len(),
            data.p
        )));
    }
    Ok(
        kahan_sum((0..data.n).map(|m| log1p_exp(-data.label(m) * dot(w, data.row(m)))))
            / data.n as f64,
    )
}

/// Gradient of the mean logistic loss.
pub fn logistic_grad(w: &[f64], data: &LabeledDataset, out: &mut [f64]) -> Result<()> {
    if w.len() != data.p || out.len() != data.p {
        return Err(Error::DimensionMismatch("weight/gradient width".into()));
    }
    out.fill(0.0);
    for m in 0..data.n {
        let row = data.row(m);
        let y = data.label(m);
        let coef = -y * sigmoid(-y * dot(w, row));
        for (o, &xj) in out.iter_mut().zip(row) {
            *o += coef * xj;
        }
    }
    for o in out.iter_mut() {
        *o /= data.n as f64;
    }
    Ok(())
}

/// The l1 ball of a given radius; its vertices are `+- radius e_j`.
#[derive(Debug, Clone, Copy)]
pub struct L1Constraint {
    pub radius: f64,
}

impl L1Constraint {
    pub fn new(radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        Ok(L1Constraint { radius })
    }

    pub fn vertex_count(&self, p: usize) -> usize {
        2 * p
    }
}

/// l1-Lipschitz constant of the logistic loss with labels in {-1, +1} and
/// features bounded by one in sup norm.
const LOGISTIC_L1_LIPSCHITZ: f64 = 2.0;

/// Per-round Laplace scale for the vertex scores.
fn fw_noise_scale(
    constraint: L1Constraint,
    budget: PrivacyBudget,
    n: usize,
    t_iters: usize,
) -> Result<f64> {
    let width = LOGISTIC_L1_LIPSCHITZ * constraint.radius;
    match budget {
        PrivacyBudget::EpsDelta { epsilon, delta } => {
            if epsilon <= 0.0 {
                return Err(Error::InvalidBudget("epsilon must be positive".into()));
            }
            if epsilon.is_infinite() {
                return Ok(0.0);
            }
            if !(0.0 < delta && delta < 1.0) {
                return Err(Error::InvalidBudget(
                    "the (eps, delta) noise calibration needs delta in (0, 1)".into(),
                ));
            }
            Ok(width * (8.0 * t_iters as f64 * (1.0 / delta).ln()).sqrt() / (n as f64 * epsilon))
        }
        PrivacyBudget::Zcdp { rho } => {
            if rho <= 0.0 {
                return Err(Error::InvalidBudget("rho must be positive".into()));
            }
            if rho.is_infinite() {
                return Ok(0.0);
            }
            Ok(width * (t_iters as f64).sqrt() / (n as f64 * rho.sqrt()))
        }
    }
}

/// Default iteration count `lambda^{2/3} (n eps)^{2/3}` keyed to the
/// active budget flavor (`n sqrt(rho)` under zCDP).
pub fn default_fw_iters(radius: f64, n: usize, budget: PrivacyBudget) -> Result<usize> {
    let scale = match budget {
        PrivacyBudget::EpsDelta { epsilon, .. } => {
            if !epsilon.is_finite() {
                return Err(Error::InvalidBudget(
                    "supply an explicit iteration count for infinite budgets".into(),
                ));
            }
            n as f64 * epsilon
        }
        PrivacyBudget::Zcdp { rho } => {
            if !rho.is_finite() {
                return Err(Error::InvalidBudget(
                    "supply an explicit iteration count for infinite budgets".into(),
                ));
            }
            n as f64 * rho.sqrt()
        }
    };
    Ok((radius.powf(2.0 / 3.0) * scale.powf(2.0 / 3.0))
        .ceil()
        .max(1.0) as usize)
}

/// Private Frank-Wolfe for sparse logistic regression over the l1 ball.
///
/// Each round perturbs every vertex score with Laplace noise calibrated to
/// the budget, moves toward the best vertex with step `2/(t+2)`, and stays
/// inside the ball by construction. Returns the final iterate.
pub fn private_frank_wolfe<R: Rng + ?Sized>(
    data: &LabeledDataset,
    constraint: L1Constraint,
    budget: PrivacyBudget,
    t_iters: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(private_frank_wolfe_traced(data, constraint, budget, t_iters, rng)?.0)
}

/// As [`private_frank_wolfe`], additionally returning the empirical risk
/// after every round.
pub fn private_frank_wolfe_traced<R: Rng + ?Sized>(
    data: &LabeledDataset,
    constraint: L1Constraint,
    budget: PrivacyBudget,
    t_iters: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if t_iters == 0 {
        return Err(Error::InvalidParameter("need at least one round".into()));
    }
    let p = data.p;
    let scale = fw_noise_scale(constraint, budget, data.n, t_iters)?;
    let mut w = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut risks = Vec::with_capacity(t_iters);
    for t in 1..t_iters {
        logistic_grad(&w, data, &mut grad)?;
        let mut best_score = f64::INFINITY;
        let mut best_vertex = (0usize, 1.0f64);
        for (j, &g) in grad.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let score = sign * constraint.radius * g + laplace_noise(scale, rng);
                if score < best_score {
                    best_score = score;
                    best_vertex = (j, sign);
                }
            }
        }
        let mu = 2.0 / (t as f64 + 2.0);
        for x in w.iter_mut() {
            *x *= 1.0 - mu;
        }
        w[best_vertex.0] += mu * best_vertex.1 * constraint.radius;
        debug_assert!(
            w.iter().map(|x| x.abs()).sum::<f64>() <= constraint.radius + 1e-9,
            "iterate escaped the l1 ball"
        );
        risks.push(logistic_loss(&w, data)?);
    }
    if risks.is_empty() {
        risks.push(logistic_loss(&w, data)?);
    }
    Ok((w, risks))
}

/// An Ising model: symmetric zero-diagonal pairwise weights and external
/// fields, with `P(z) ~ exp(sum_{i<j} A_ij z_i z_j + sum_i theta_i z_i)`.
#[derive(Debug, Clone)]
pub struct IsingModel {
    a: Vec<f64>,
    theta: Vec<f64>,
    p: usize,
}

impl IsingModel {
    pub fn new(a: Vec<f64>, theta: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 || a.len() != p * p || theta.len() != p {
            return Err(Error::DimensionMismatch("A must be p x p".into()));
        }
        for i in 0..p {
            if a[i * p + i] != 0.0 {
                return Err(Error::InvalidParameter("diagonal of A must be zero".into()));
            }
            for j in 0..p {
                if (a[i * p + j] - a[j * p + i]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("A must be symmetric".into()));
                }
            }
        }
        Ok(IsingModel { a, theta, p })
    }

    /// Disjoint matched pairs (0,1), (2,3), ... each with coupling
    /// `eta / 2`, no external field. `P(Z_i = Z_j = 1)` for a pair equals
    /// `e^eta / (2 (e^eta + 1))`.
    pub fn matched_pairs(p: usize, eta: f64) -> Result<Self> {
        if !p.is_multiple_of(2) {
            return Err(Error::InvalidParameter("p must be even".into()));
        }
        let mut a = vec![0.0; p * p];
        for pair in 0..p / 2 {
            let (i, j) = (2 * pair, 2 * pair + 1);
            a[i * p + j] = eta / 2.0;
            a[j * p + i] = eta / 2.0;
        }
        IsingModel::new(a, vec![0.0; p], p)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.p + j]
    }

    pub fn field(&self, i: usize) -> f64 {
        self.theta[i]
    }

    /// `max_i sum_j |A_ij| + |theta_i|`.
    pub fn width(&self) -> f64 {
        (0..self.p)
            .map(|i| {
                (0..self.p).map(|j| self.weight(i, j).abs()).sum::<f64>() + self.theta[i].abs()
            })
            .fold(0.0f64, f64::max)
    }

    fn conditional_plus(&self, state: &[i8], i: usize) -> f64 {
        let mut field = 2.0 * self.theta[i];
        for (j, &zj) in state.iter().enumerate() {
            if j != i {
                field += 2.0 * self.weight(i, j) * zj as f64;
            }
        }
        sigmoid(field)
    }

    /// Exact Boltzmann probabilities over all `2^p` states (for testing
    /// small models). State bits map `1 -> +1`.
    pub fn exact_law(&self) -> Result<Vec<f64>> {
        if self.p > 20 {
            return Err(Error::TooLarge("exact law enumerates up to p = 20".into()));
        }
        let states = 1usize << self.p;
        let mut weights = Vec::with_capacity(states);
        for s in 0..states {
            let z: Vec<f64> = (0..self.p)
                .map(|i| if s >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            let mut energy = 0.0;
            for i in 0..self.p {
                for j in i + 1..self.p {
                    energy += self.weight(i, j) * z[i] * z[j];
                }
                energy += self.theta[i] * z[i];
            }
            weights.push(energy.exp());
        }
        let total = kahan_sum(weights.iter().copied());
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

/// Spin configurations produced by the Gibbs sampler: `n` rows of `p`
/// values in {-1, +1}.
#[derive(Debug, Clone)]
pub struct SpinSamples {
    data: Vec<i8>,
    n: usize,
    p: usize,
}

impl SpinSamples {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn state(&self, m: usize) -> &[i8] {
        &self.data[m * self.p..(m + 1) * self.p]
    }

    /// Index of a state in the `2^p` enumeration used by
    /// [`IsingModel::exact_law`].
    pub fn state_index(&self, m: usize) -> usize {
        self.state(m)
            .iter()
            .enumerate()
            .map(|(i, &z)| ((z > 0) as usize) << i)
            .sum()
    }
}

/// Single-site Gibbs sampler: each site is resampled from its conditional
/// sigmoid law; a sweep updates every site once in order.
pub fn ising_gibbs<R: Rng + ?Sized>(
    model: &IsingModel,
    n: usize,
    burnin_sweeps: usize,
    thin_sweeps: usize,
    rng: &mut R,
) -> SpinSamples {
    let p = model.p();
    let mut state: Vec<i8> = (0..p)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let sweep = |state: &mut Vec<i8>, rng: &mut R| {
        for i in 0..p {
            let prob = model.conditional_plus(state, i);
            state[i] = if rng.random::<f64>() < prob { 1 } else { -1 };
        }
    };
    for _ in 0..burnin_sweeps {
        sweep(&mut state, rng);
    }
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        for _ in 0..thin_sweeps.max(1) {
            sweep(&mut state, rng);
        }
        data.extend_from_slice(&state);
    }
    SpinSamples { data, n, p }
}

/// Default burn-in: 100 sweeps per site.
pub fn default_burnin(p: usize) -> usize {
    100 * p
}

/// Result of private Ising parameter learning.
#[derive(Debug, Clone)]
pub struct IsingFit {
    /// Row-wise estimates; not symmetrized unless requested.
    pub a_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub p: usize,
    /// Budget charged to each per-node regression.
    pub per_node_budget: Vec<PrivacyBudget>,
}

impl IsingFit {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.a_hat[i * self.p + j]
    }

    pub fn max_abs_error(&self, truth: &IsingModel) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.p {
            for j in 0..self.p {
                worst = worst.max((self.weight(i, j) - truth.weight(i, j)).abs());
            }
        }
        worst
    }
}

/// Per-node private logistic regression: node `i` is regressed on
/// `[z_{-i}, 1]` over the ball `|w|_1 <= 2 lambda` with the per-node share
/// of the budget (`rho/p` under zCDP, `(eps/sqrt(2 p ln(p/delta)), delta/p)`
/// under approximate DP), and `A_hat[i][j]` reads off half the weight.
pub fn learn_ising_private<R: Rng + ?Sized>(
    samples: &SpinSamples,
    lambda_bound: f64,
    budget: PrivacyBudget,
    t_iters: Option<usize>,
    symmetrize: bool,
    rng: &mut R,
) -> Result<IsingFit> {
    let (n, p) = (samples.n(), samples.p());
    if n == 0 || p < 2 {
        return Err(Error::EmptyDataset);
    }
    if lambda_bound.is_nan() || lambda_bound <= 0.0 {
        return Err(Error::InvalidParameter(
            "lambda bound must be positive".into(),
        ));
    }
    let per_node = match budget {
        PrivacyBudget::Zcdp { rho } => PrivacyBudget::zcdp(rho / p as f64),
        PrivacyBudget::EpsDelta { epsilon, delta } => {
            if delta > 0.0 && delta < 1.0 {
                let eps_i = epsilon / ((2.0 * p as f64).sqrt() * (p as f64 / delta).ln());
                PrivacyBudget::approx(eps_i, delta / p as f64)
            } else {
                PrivacyBudget::approx(epsilon, delta)
            }
        }
    };
    let constraint = L1Constraint::new(2.0 * lambda_bound)?;
    let mut a_hat = vec![0.0; p * p];
    let mut theta_hat = vec![0.0; p];
    let mut per_node_budget = Vec::with_capacity(p);
    for i in 0..p {
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for m in 0..n {
            let state = samples.state(m);
            for (j, &zj) in state.iter().enumerate() {
                if j != i {
                    x.push(zj as f64);
                }
            }
            x.push(1.0);
            y.push(state[i] as f64);
        }
        let data = LabeledDataset::new(x, y, p)?;
        let iters = match t_iters {
            Some(t) => t,
            None => default_fw_iters(2.0 * lambda_bound, n, per_node)?,
        };
        let w = private_frank_wolfe(&data, constraint, per_node, iters, rng)?;
        for j in 0..p {
            if j != i {
                let jj = if j < i { j } else { j - 1 };
                a_hat[i * p + j] = 0.5 * w[jj];
            }
        }
        theta_hat[i] = 0.5 * w[p - 1];
        per_node_budget.push(per_node);
    }
    if symmetrize {
        for i in 0..p {
            for j in i + 1..p {
                let avg = 0.5 * (a_hat[i * p + j] + a_hat[j * p + i]);
                a_hat[i * p + j] = avg;
                a_hat[j * p + i] = avg;
            }
        }
    }
    Ok(IsingFit {
        a_hat,
        theta_hat,
        p,
        per_node_budget,
    })
}
