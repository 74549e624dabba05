//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Every tolerance is pinned here.

use privstat::coupling::{
    binomial_tv, max_count_cdfs, CoinCoupling, Coupling, MaximalCoupling, MonotoneBinomialCoupling,
    PaninskiCoupling,
};
use privstat::dist::{
    dirichlet_draw, paninski, sample, support_coverage, uniform, zipf, DiscreteDistribution,
    Histogram, SampleSet,
};
use privstat::mech::{laplace_mechanism, sensitivity_exhaustive, PrivacyBudget, SensitivityBound};
use privstat::optim::{
    default_burnin, ising_gibbs, learn_ising_private, logistic_grad, logistic_loss,
    private_frank_wolfe_traced, IsingModel, L1Constraint, LabeledDataset,
};
use privstat::properties::{
    coverage_batch, coverage_sgt, dense_support_statistic, entropy_empirical, sgt_coefficient,
};
use privstat::select::{
    better_multi_round, better_multi_round_query_bound, flatten, ldp_loglik_select,
    ldp_select_tournament, multi_round, multi_round_query_recursion,
    multi_round_survivor_recursion, round_robin, survivor_count, AdversaryPolicy, ValueComparator,
};
use privstat::stats::{binomial_pmf, chi_square_gof, mean_stderr, sigmoid};
use privstat::testing::{
    closeness_statistic_z, closeness_test, sample_complexity, unif_statistic_s,
    unif_statistic_s_scaled, unif_statistic_z, uniformity_test, Decision, Task, TesterConfig,
};
use privstat::{divergence, estimation, seed, CalibratedConstants, Divergence};
use rand::Rng;
use std::collections::HashMap;

fn pass(criterion: u32, summary: &str) {
    println!("[criterion {criterion:02}] PASS: {summary}");
}

fn statistic_of_histogram<F: Fn(&Histogram) -> f64>(k: usize, f: F) -> impl Fn(&[usize]) -> f64 {
    move |xs: &[usize]| {
        let mut counts = vec![0u64; k];
        for &s in xs {
            counts[s] += 1;
        }
        f(&Histogram::new(counts))
    }
}

#[test]
fn criterion_01_sensitivity_audits() {
    // The bounds on S, Z, batch coverage, and the dense support statistic
    // are achieved with equality, so those audits run on exactly
    // representable rescalings (integer numerators) and the comparisons
    // are exact. The entropy bound is strict with real margin, so plain
    // f64 suffices there.

    // Delta(S) <= 1/n, audited as Delta(sum |ck - n|) <= 2k
    for &(k, n) in &[(2usize, 10usize), (3, 6), (4, 5), (5, 4), (10, 3)] {
        let b = sensitivity_exhaustive(
            statistic_of_histogram(k, |h| unif_statistic_s_scaled(h) as f64),
            k,
            n,
        )
        .unwrap();
        assert!(
            b.delta_f <= (2 * k) as f64,
            "S at k={k} n={n}: {}",
            b.delta_f
        );
        // and the f64 statistic itself is the scaled integer over 2nk
        let check = statistic_of_histogram(k, unif_statistic_s);
        let scaled = statistic_of_histogram(k, |h| unif_statistic_s_scaled(h) as f64);
        let probe = vec![0usize; n];
        assert_eq!(check(&probe), scaled(&probe) / (2 * n * k) as f64);
    }
    // Delta(Z) <= 1: Z rescales S by k (n <= k) or n (n > k), so the
    // exact audit bounds the integer numerator by 2n resp. 2k.
    for &(k, n) in &[(2usize, 10usize), (3, 6), (4, 5), (6, 4)] {
        let cfg = TesterConfig::new(k, 0.3, PrivacyBudget::pure(1.0)).unwrap();
        let b = sensitivity_exhaustive(
            statistic_of_histogram(k, |h| unif_statistic_s_scaled(h) as f64),
            k,
            n,
        )
        .unwrap();
        let bound = if n <= k { 2 * n } else { 2 * k } as f64;
        assert!(b.delta_f <= bound, "Z at k={k} n={n}: {}", b.delta_f);
        // the f64-level statistic stays within one part in 1e12 of the bound
        let b_f64 = sensitivity_exhaustive(
            |xs| {
                let s = SampleSet::new(xs.to_vec(), k).unwrap();
                unif_statistic_z(&s, &cfg).unwrap()
            },
            k,
            n,
        )
        .unwrap();
        assert!(b_f64.delta_f <= 1.0 + 1e-12, "Z f64 at k={k} n={n}");
    }
    // Delta(closeness Z) <= 2 over the joint four-block dataset
    for &(k, n_per) in &[(2usize, 4usize), (3, 2)] {
        let b = sensitivity_exhaustive(
            |xs| {
                let mk = |chunk: &[usize]| {
                    let mut counts = vec![0u64; k];
                    for &s in chunk {
                        counts[s] += 1;
                    }
                    Histogram::new(counts)
                };
                closeness_statistic_z(
                    &mk(&xs[0..n_per]),
                    &mk(&xs[n_per..2 * n_per]),
                    &mk(&xs[2 * n_per..3 * n_per]),
                    &mk(&xs[3 * n_per..4 * n_per]),
                )
                .unwrap()
            },
            k,
            4 * n_per,
        )
        .unwrap();
        assert!(
            b.delta_f <= 2.0,
            "closeness at k={k} n={n_per}: {}",
            b.delta_f
        );
    }
    // Delta(empirical entropy) <= 2 max(1, ln n)/n
    for &(k, n) in &[(4usize, 5usize), (3, 8), (2, 12)] {
        let b = sensitivity_exhaustive(
            statistic_of_histogram(k, |h| entropy_empirical(h).unwrap()),
            k,
            n,
        )
        .unwrap();
        let bound = 2.0 * (n as f64).ln().max(1.0) / n as f64;
        assert!(b.delta_f <= bound, "entropy at k={k} n={n}: {}", b.delta_f);
    }
    // Delta(batch coverage) <= 2m/n: the estimator is (total distinct
    // over batches)/B, so the exact audit bounds the integer total by
    // 2mB/n = 2 (the grid has m | n).
    for &(k, n, m) in &[(3usize, 4usize, 2usize), (2, 8, 4), (4, 4, 2)] {
        let batches = n / m;
        let b = sensitivity_exhaustive(
            |xs| {
                let s = SampleSet::new(xs.to_vec(), k).unwrap();
                coverage_batch(&s, m).unwrap() * batches as f64
            },
            k,
            n,
        )
        .unwrap();
        assert!(
            b.delta_f <= 2.0 * (m * batches) as f64 / n as f64,
            "batch at k={k} n={n} m={m}: {}",
            b.delta_f
        );
    }
    // Delta(dense support) <= 3k/n, audited as
    // Delta(sum min(n, 3 k c_x)) <= 3k over exact integers
    for &(k, n) in &[(3usize, 6usize), (2, 10), (4, 4)] {
        let b = sensitivity_exhaustive(
            statistic_of_histogram(k, move |h| {
                h.counts()
                    .iter()
                    .map(|&c| (3 * k as u64 * c).min(n as u64))
                    .sum::<u64>() as f64
            }),
            k,
            n,
        )
        .unwrap();
        assert!(
            b.delta_f <= (3 * k) as f64,
            "dense support at k={k} n={n}: {}",
            b.delta_f
        );
        // f64-level statistic agrees with the scaled integer
        let probe: Vec<usize> = (0..n).map(|i| i % k).collect();
        let hist = SampleSet::new(probe, k).unwrap().histogram();
        let scaled: u64 = hist
            .counts()
            .iter()
            .map(|&c| (3 * k as u64 * c).min(n as u64))
            .sum();
        assert!((dense_support_statistic(&hist, n) - scaled as f64 / n as f64).abs() < 1e-12);
    }
    pass(
        1,
        "all exhaustive sensitivity audits within their stated bounds",
    );
}

fn enumerate_histograms(k: usize, n: u64, f: &mut impl FnMut(&[u64])) {
    fn rec(counts: &mut Vec<u64>, idx: usize, left: u64, f: &mut impl FnMut(&[u64])) {
        if idx + 1 == counts.len() {
            counts[idx] = left;
            f(counts);
            counts[idx] = 0;
            return;
        }
        for c in 0..=left {
            counts[idx] = c;
            rec(counts, idx + 1, left - c, f);
        }
        counts[idx] = 0;
    }
    let mut counts = vec![0u64; k];
    rec(&mut counts, 0, n, f);
}

#[test]
fn criterion_02_statistic_phi0_identity() {
    let mut checked = 0u64;
    for k in 1..=8usize {
        for n in 1..=k as u64 {
            enumerate_histograms(k, n, &mut |counts| {
                let hist = Histogram::new(counts.to_vec());
                let s = unif_statistic_s(&hist);
                let phi0 = hist.profile().phi(0) as f64;
                // exact: both sides are the correctly rounded quotient of
                // the same rational number
                assert_eq!(s, phi0 / k as f64, "k={k} n={n} counts={counts:?}");
                checked += 1;
            });
        }
    }
    pass(
        2,
        &format!("S = Phi0/k on all {checked} histograms with n <= k"),
    );
}

#[test]
fn criterion_03_dp_ratios_analytic() {
    let tol = 1e-12;
    // randomized response: output ratio is exactly e^eps
    for &eps in &[0.25f64, 1.0, 3.0] {
        let keep = sigmoid(eps);
        let ratio = keep / (1.0 - keep);
        assert!((ratio - eps.exp()).abs() <= tol * eps.exp(), "eps={eps}");
    }
    // sigmoid release: ratios below e^eps for |dz| <= 1 on a grid; the
    // complement of the release probability is sigma(-x)
    for &eps in &[0.5f64, 1.0, 2.0] {
        for step in 0..=4000 {
            let z = -20.0 + step as f64 * 0.01;
            for dz in [1.0, 0.5, -0.5, -1.0] {
                let d = (eps * dz).abs();
                let p1 = sigmoid(eps * (z + dz));
                let p0 = sigmoid(eps * z);
                assert!(p1 / p0 <= d.exp() * (1.0 + tol), "z={z} dz={dz}");
                let q1 = sigmoid(-eps * (z + dz));
                let q0 = sigmoid(-eps * z);
                assert!(q1 / q0 <= d.exp() * (1.0 + tol), "z={z} dz={dz}");
            }
        }
    }
    // Laplace density ratio <= e^eps for shifts up to the sensitivity
    let (delta_f, eps) = (1.7f64, 1.3f64);
    let b = delta_f / eps;
    let density = |x: f64, center: f64| (-(x - center).abs() / b).exp() / (2.0 * b);
    for i in 0..10_000 {
        let x = -12.0 + 24.0 * i as f64 / 9_999.0;
        for shift in [delta_f, delta_f / 2.0] {
            let ratio = density(x, 0.0) / density(x, shift);
            assert!(ratio <= eps.exp() * (1.0 + tol), "x={x} shift={shift}");
            assert!(1.0 / ratio <= eps.exp() * (1.0 + tol));
        }
    }
    pass(
        3,
        "randomized response, sigmoid release, and Laplace ratios within e^eps",
    );
}

#[test]
fn criterion_04_coupling_marginals_and_bounds() {
    let draws = 100_000;
    // coin coupling
    let coin = CoinCoupling::new(0.5, 0.6, 100).unwrap();
    let mut rng = seed::root(1001);
    let mut ones = [0u64; 2];
    let mut dists = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (x, y) = coin.draw(&mut rng);
        ones[0] += x.symbols().iter().filter(|&&s| s == 1).count() as u64;
        ones[1] += y.symbols().iter().filter(|&&s| s == 1).count() as u64;
        dists.push(privstat::hamming(&x, &y).unwrap() as f64);
    }
    let total = (draws * 100) as f64;
    for (side, bias) in [(0usize, 0.5f64), (1, 0.6)] {
        let observed = [total as u64 - ones[side], ones[side]];
        let expected = [total * (1.0 - bias), total * bias];
        let gof = chi_square_gof(&observed, &expected, 5.0);
        assert!(gof.p_value >= 1e-4, "coin side {side}: p {}", gof.p_value);
    }
    let (mean, se) = mean_stderr(&dists);
    assert!((mean - 10.0).abs() <= 3.0 * se, "coin mean {mean}");
    assert!(mean <= coin.hamming_bound() + 5.0 * se);

    // maximal coupling on a fixed random pair
    let mut build_rng = seed::root(1002);
    let p = dirichlet_draw(5, 1.0, &mut build_rng).unwrap();
    let q = dirichlet_draw(5, 1.0, &mut build_rng).unwrap();
    let maximal = MaximalCoupling::new(p.clone(), q.clone(), 20).unwrap();
    let mut counts = [[0u64; 5]; 2];
    let mut dists = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (x, y) = maximal.draw(&mut rng);
        for &s in x.symbols() {
            counts[0][s] += 1;
        }
        for &s in y.symbols() {
            counts[1][s] += 1;
        }
        dists.push(privstat::hamming(&x, &y).unwrap() as f64);
    }
    let total = (draws * 20) as f64;
    for (side, law) in [(0usize, &p), (1, &q)] {
        let expected: Vec<f64> = law.probs().iter().map(|&v| v * total).collect();
        let gof = chi_square_gof(&counts[side], &expected, 5.0);
        assert!(
            gof.p_value >= 1e-4,
            "maximal side {side}: p {}",
            gof.p_value
        );
    }
    let (mean, se) = mean_stderr(&dists);
    assert!(mean <= maximal.hamming_bound() + 5.0 * se);

    // perturbed-pairs coupling, n <= k path
    let (k, n, alpha) = (50usize, 30usize, 0.2f64);
    let paninski_coupling = PaninskiCoupling::new(k, alpha, n).unwrap();
    let mut x_counts = vec![0u64; k];
    let mut totals = vec![0u64; n + 1];
    let mut splits: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut dists = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (x, y) = paninski_coupling.draw(&mut rng);
        for &s in x.symbols() {
            x_counts[s] += 1;
        }
        let mut per_pair = vec![(0usize, 0usize); k / 2];
        for &s in y.symbols() {
            if s % 2 == 1 {
                per_pair[s / 2].1 += 1;
            } else {
                per_pair[s / 2].0 += 1;
            }
        }
        for &(lo, hi) in &per_pair {
            let r = lo + hi;
            totals[r] += 1;
            if r > 0 && r <= 8 {
                splits.entry(r).or_insert_with(|| vec![0; r + 1])[hi] += 1;
            }
        }
        dists.push(privstat::hamming(&x, &y).unwrap() as f64);
    }
    let expected = vec![(draws * n) as f64 / k as f64; k];
    let gof = chi_square_gof(&x_counts, &expected, 5.0);
    assert!(
        gof.p_value >= 1e-4,
        "paninski X marginal: p {}",
        gof.p_value
    );
    let n_pairs = (draws * k / 2) as f64;
    let expected: Vec<f64> = (0..=n)
        .map(|r| n_pairs * binomial_pmf(n as u64, 2.0 / k as f64, r as u64))
        .collect();
    let gof = chi_square_gof(&totals, &expected, 5.0);
    assert!(gof.p_value >= 1e-4, "pair totals: p {}", gof.p_value);
    for (r, obs) in &splits {
        let total: u64 = obs.iter().sum();
        if total < 200 {
            continue;
        }
        let expected: Vec<f64> = (0..=*r)
            .map(|w| {
                let lc = privstat::stats::ln_choose(*r as u64, w as u64);
                let (hi, lo) = (0.5 + alpha, 0.5 - alpha);
                let a = lc + w as f64 * hi.ln() + (*r - w) as f64 * lo.ln();
                let b = lc + w as f64 * lo.ln() + (*r - w) as f64 * hi.ln();
                total as f64 * 0.5 * (a.exp() + b.exp())
            })
            .collect();
        let gof = chi_square_gof(obs, &expected, 5.0);
        assert!(gof.p_value >= 1e-4, "split at r={r}: p {}", gof.p_value);
    }
    let (mean, se) = mean_stderr(&dists);
    let bound = 8.0 * alpha * alpha * (n * n) as f64 / k as f64;
    assert!(
        mean <= bound + 5.0 * se,
        "paninski mean {mean} bound {bound}"
    );
    pass(
        4,
        "coin/maximal/perturbed-pairs marginals fit and Hamming bounds hold",
    );
}

#[test]
fn criterion_05_exact_binomial_tv() {
    assert_eq!(binomial_tv(1, 0.1).unwrap(), 0.0);
    for &alpha in &[0.05f64, 0.1, 0.15, 0.2, 0.25] {
        let tv2 = binomial_tv(2, alpha).unwrap();
        assert!(
            (tv2 - 2.0 * alpha * alpha).abs() <= 1e-12,
            "t=2 alpha={alpha}"
        );
        for t in 1..=12usize {
            let tv = binomial_tv(t, alpha).unwrap();
            assert!(
                tv <= 2.0 * t as f64 * alpha * alpha + 1e-12,
                "t={t} alpha={alpha}: {tv}"
            );
        }
    }
    pass(
        5,
        "exact mixture TV equals 0 at t=1, 2a^2 at t=2, and stays below 2ta^2",
    );
}

#[test]
fn criterion_06_stochastic_dominance() {
    for t in 1..=20usize {
        for &alpha in &[0.05f64, 0.1, 0.15, 0.2, 0.25] {
            let (f1, f2) = max_count_cdfs(t, alpha);
            for z in 0..=t {
                assert!(f2[z] <= f1[z] + 1e-12, "t={t} alpha={alpha} z={z}");
            }
        }
    }
    let coupling = MonotoneBinomialCoupling::new(20, 0.1).unwrap();
    let mut rng = seed::root(1006);
    for _ in 0..1_000_000 {
        let (z1, z2) = coupling.draw(&mut rng);
        assert!(z2 >= z1, "quantile coupling inverted");
    }
    pass(6, "exact CDF dominance at t <= 20 and 10^6 monotone draws");
}

#[test]
fn criterion_07_tester_power() {
    let constants = CalibratedConstants::default();
    let trials = 200;
    for (gi, &(k, alpha, eps)) in [(100usize, 0.25f64, 1.0f64), (1000, 0.3, 0.5)]
        .iter()
        .enumerate()
    {
        let budget = PrivacyBudget::pure(eps);
        let n = sample_complexity(Task::Uniformity, k, alpha, budget, &constants).unwrap();
        let cfg = TesterConfig::new(k, alpha, budget)
            .unwrap()
            .with_constants(constants);
        let mut rng = seed::substream(1007, gi as u64);
        let u = uniform(k).unwrap();
        let mut null_err = 0;
        let mut alt_err = 0;
        for _ in 0..trials {
            let s = sample(&u, n, &mut rng);
            if uniformity_test(&s, &cfg, &mut rng).unwrap().decision != Decision::NullAccepted {
                null_err += 1;
            }
            let z: Vec<bool> = (0..k / 2).map(|_| rng.random()).collect();
            let p = paninski(k, alpha, &z).unwrap();
            let s = sample(&p, n, &mut rng);
            if uniformity_test(&s, &cfg, &mut rng).unwrap().decision != Decision::Alternative {
                alt_err += 1;
            }
        }
        assert!(
            null_err as f64 / trials as f64 <= 0.1,
            "UT null error {null_err}/{trials} at k={k}"
        );
        assert!(
            alt_err as f64 / trials as f64 <= 0.1,
            "UT alt error {alt_err}/{trials} at k={k}"
        );
    }
    let (k, alpha, eps) = (100usize, 0.3f64, 1.0f64);
    let budget = PrivacyBudget::pure(eps);
    let n = sample_complexity(Task::Closeness, k, alpha, budget, &constants).unwrap();
    let cfg = TesterConfig::new(k, alpha, budget)
        .unwrap()
        .with_constants(constants);
    let mut rng = seed::substream(1007, 9);
    let u = uniform(k).unwrap();
    let mut null_err = 0;
    let mut alt_err = 0;
    for _ in 0..trials {
        let sp = sample(&u, n, &mut rng);
        let sq = sample(&u, n, &mut rng);
        if closeness_test(&sp, &sq, &cfg, &mut rng).unwrap().decision != Decision::NullAccepted {
            null_err += 1;
        }
        let z: Vec<bool> = (0..k / 2).map(|_| rng.random()).collect();
        let q = paninski(k, alpha, &z).unwrap();
        let sp = sample(&u, n, &mut rng);
        let sq = sample(&q, n, &mut rng);
        if closeness_test(&sp, &sq, &cfg, &mut rng).unwrap().decision != Decision::Alternative {
            alt_err += 1;
        }
    }
    assert!(
        null_err as f64 / trials as f64 <= 0.1,
        "CT null {null_err}/{trials}"
    );
    assert!(
        alt_err as f64 / trials as f64 <= 0.1,
        "CT alt {alt_err}/{trials}"
    );
    pass(
        7,
        "uniformity and closeness testers reach 0.9 power at calibrated n",
    );
}

#[test]
fn criterion_08_coverage_estimator() {
    // batch estimator is unbiased against the closed form
    let (k, m, n, trials) = (20usize, 10usize, 200usize, 10_000usize);
    let u = uniform(k).unwrap();
    let truth = k as f64 * (1.0 - (1.0 - 1.0 / k as f64).powi(m as i32));
    let mut rng = seed::root(1008);
    let mut vals = Vec::with_capacity(trials);
    for _ in 0..trials {
        let s = sample(&u, n, &mut rng);
        vals.push(coverage_batch(&s, m).unwrap());
    }
    let (mean, se) = mean_stderr(&vals);
    assert!(
        (mean - truth).abs() <= 3.0 * se,
        "batch mean {mean} truth {truth}"
    );

    // coefficient bound on the full grid
    let mut r = 0.5f64;
    while r <= 3.0 + 1e-9 {
        for ti in 1..=10 {
            let t = ti as f64;
            let bound = 1.0 + (r * (t - 1.0)).exp();
            for i in 0..=200u64 {
                assert!(
                    sgt_coefficient(i, t, r).abs() <= bound * (1.0 + 1e-12),
                    "r={r} t={t} i={i}"
                );
            }
        }
        r += 0.25;
    }

    // bias bound in MC on a uniform
    let (k, n, m, r) = (100usize, 60usize, 180usize, 1.5f64);
    let u = uniform(k).unwrap();
    let t = (m - n) as f64 / n as f64;
    let truth = support_coverage(&u, m as u64);
    let mut vals = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        let s = sample(&u, n, &mut rng);
        vals.push(coverage_sgt(&s.histogram().profile(), n, m, r).unwrap());
    }
    let (mean, se) = mean_stderr(&vals);
    let bound = 2.0 + 2.0 * (r * (t - 1.0)).exp() + (m.min(k) as f64) * (-r).exp();
    assert!(
        (mean - truth).abs() <= bound + 3.0 * se,
        "bias {} bound {bound}",
        (mean - truth).abs()
    );
    pass(
        8,
        "batch unbiasedness, SGT coefficient bound, and SGT bias bound hold",
    );
}

#[test]
fn criterion_09_flattening_lemma() {
    let mut rng = seed::root(1009);
    for trial in 0..100 {
        let k = 2 + trial % 7;
        let dom = 2 + trial % 9;
        let hyps: Vec<DiscreteDistribution> = (0..k)
            .map(|_| dirichlet_draw(dom, 0.8, &mut rng).unwrap())
            .collect();
        let flat = flatten(&hyps).unwrap();
        let npr = flat.n_prime();
        assert!(npr >= dom && npr <= (k + 1) * dom);
        for q in flat.pushforwards() {
            for &mass in q.probs() {
                assert!(mass >= 1.0 / (2.0 * npr as f64) - 1e-15);
                assert!(mass <= 1.0 / dom as f64 + 1e-15);
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
                assert!((after - before / 2.0).abs() < 1e-10);
            }
        }
    }
    pass(
        9,
        "mass range, domain growth, and exact TV halving on 100 random families",
    );
}

#[test]
fn criterion_10_tournament_identities() {
    // round robin query count
    for k in [1usize, 2, 8, 33] {
        let mut cmp = ValueComparator::new(
            (0..k).map(|i| i as f64 * 2.0).collect(),
            AdversaryPolicy::Honest,
            seed::root(0),
        );
        let tr = round_robin(k, &mut cmp).unwrap();
        assert_eq!(tr.total_queries(), k * (k - 1) / 2);
    }
    // recursion counts and survivor law at perfect powers
    for &(k, t) in &[
        (8usize, 2usize),
        (27, 2),
        (64, 2),
        (4096, 2),
        (128, 3),
        (2187, 3),
        (1, 4),
    ] {
        let mut cmp = ValueComparator::new(
            (0..k).map(|i| i as f64 * 2.0).collect(),
            AdversaryPolicy::Honest,
            seed::root(0),
        );
        let tr = multi_round(k, t, &mut cmp).unwrap();
        let (expected, _) = multi_round_query_recursion(k, t);
        assert_eq!(tr.total_queries(), expected, "k={k} t={t}");
    }
    // the halted tournament's survivor count matches the closed form at
    // perfect powers
    for &(k, t) in &[(64usize, 2usize), (4096, 2), (128, 3), (2187, 3)] {
        assert_eq!(
            multi_round_survivor_recursion(k, t),
            survivor_count(k, t).round() as usize,
            "k={k} t={t}"
        );
    }
    assert_eq!(survivor_count(64, 2).round() as usize, 16);
    assert_eq!(survivor_count(128, 3).round() as usize, 16);
    assert_eq!(survivor_count(2187, 3).round() as usize, 81);

    // exhaustive adversaries at k <= 6: round robin is a 2-approximation
    let grids: [Vec<f64>; 3] = [
        vec![0.0, 0.5, 1.0, 1.5, 2.0],
        vec![0.0, 1.0, 1.0, 2.0, 2.0],
        vec![0.0, 0.9, 1.8, 2.7, 3.6, 4.5],
    ];
    for values in grids {
        let k = values.len();
        let close_pairs = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .filter(|&(a, b)| (values[a] - values[b]).abs() <= 1.0)
            .count();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        for bits in 0u32..(1 << close_pairs) {
            let script: Vec<bool> = (0..close_pairs).map(|b| bits >> b & 1 == 1).collect();
            let mut cmp = ValueComparator::new(
                values.clone(),
                AdversaryPolicy::Scripted(script),
                seed::root(0),
            );
            let tr = round_robin(k, &mut cmp).unwrap();
            assert!(values[tr.winner] >= max - 2.0 - 1e-12);
        }
    }

    // 3-approximation success rate under the randomized adversary
    let (k, t, trials) = (256usize, 3usize, 400usize);
    let values: Vec<f64> = (0..k).map(|i| i as f64 * 8.0 / (k as f64 - 1.0)).collect();
    let mut ok = 0;
    for trial in 0..trials {
        let mut cmp = ValueComparator::new(
            values.clone(),
            AdversaryPolicy::Randomized,
            seed::substream(1010, trial as u64),
        );
        let mut rng = seed::substream(1011, trial as u64);
        let tr = better_multi_round(k, t, &mut cmp, &mut rng).unwrap();
        assert_eq!(tr.rounds(), t);
        if values[tr.winner] >= 8.0 - 3.0 - 1e-12 {
            ok += 1;
        }
    }
    assert!(
        ok as f64 / trials as f64 >= 0.85,
        "3-approx rate {ok}/{trials}"
    );
    pass(
        10,
        "query counts, survivor law, exhaustive 2-approx, and 3-approx rate",
    );
}

#[test]
fn criterion_11_ldp_selection() {
    let spread = |k: usize, dom: usize| -> Vec<DiscreteDistribution> {
        (0..k)
            .map(|i| {
                let gap = 0.62;
                let mut probs = vec![(1.0 - gap) / dom as f64; dom];
                probs[i % dom] += gap;
                DiscreteDistribution::new(probs).unwrap()
            })
            .collect()
    };
    // non-interactive at k = 8, 5e4 users per group
    let hyps = spread(8, 8);
    for i in 0..8 {
        for j in i + 1..8 {
            assert!(divergence(&hyps[i], &hyps[j], Divergence::Tv).unwrap() >= 0.3);
        }
    }
    let flat = flatten(&hyps).unwrap();
    let mut rng = seed::root(1012);
    let trials = 40;
    let mut hits = 0;
    for trial in 0..trials {
        let truth = trial % 8;
        let raw = sample(&flat.pushforwards()[truth], 8 * 50_000, &mut rng);
        let (chosen, audit) = ldp_loglik_select(&flat, &raw, 1.0, &mut rng).unwrap();
        assert_eq!(audit.rounds, 1, "non-interactive protocol");
        assert_eq!(audit.max_messages_per_user, 1, "single use per user");
        hits += (chosen == truth) as usize;
    }
    assert!(
        hits as f64 / trials as f64 >= 0.85,
        "loglik {hits}/{trials}"
    );

    // tournament at k = 16
    let hyps = spread(16, 16);
    let flat = flatten(&hyps).unwrap();
    let t = 2usize;
    let budget = better_multi_round_query_bound(16, t);
    let mut hits = 0;
    for trial in 0..trials {
        let truth = (3 + trial) % 16;
        let raw = sample(&flat.pushforwards()[truth], budget * 4000, &mut rng);
        let (chosen, audit) = ldp_select_tournament(&flat, &raw, 1.0, t, &mut rng).unwrap();
        assert!(audit.rounds <= t, "round budget respected");
        assert_eq!(audit.max_messages_per_user, 1, "single use per user");
        hits += (chosen == truth) as usize;
    }
    assert!(
        hits as f64 / trials as f64 >= 0.85,
        "tournament {hits}/{trials}"
    );
    pass(
        11,
        "LDP selection recovers the truth with clean protocol audits",
    );
}

#[test]
fn criterion_12_private_optimization() {
    // gradient against central finite differences
    let mut rng = seed::root(1013);
    let p = 5usize;
    let n = 80usize;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let row: Vec<f64> = (0..p)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        y.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        x.extend_from_slice(&row);
    }
    let data = LabeledDataset::new(x, y, p).unwrap();
    for _ in 0..3 {
        let w: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut grad = vec![0.0; p];
        logistic_grad(&w, &data, &mut grad).unwrap();
        for j in 0..p {
            let h = 1e-5;
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fd = (logistic_loss(&wp, &data).unwrap() - logistic_loss(&wm, &data).unwrap())
                / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-6, "coord {j}");
        }
    }

    // noiseless Frank-Wolfe convergence on a convex toy problem
    let data = {
        let mut rng = seed::root(1014);
        let (n, p) = (2000usize, 6usize);
        let w_true = [0.8, -0.4, 0.0, 0.0, 0.0, 0.0];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..p)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let margin: f64 = row.iter().zip(&w_true).map(|(a, b)| a * b).sum();
            y.push(if rng.random::<f64>() < sigmoid(margin) {
                1.0
            } else {
                -1.0
            });
            x.extend_from_slice(&row);
        }
        LabeledDataset::new(x, y, p).unwrap()
    };
    let radius = 1.0;
    let constraint = L1Constraint::new(radius).unwrap();
    let noiseless = PrivacyBudget::zcdp(f64::INFINITY);
    let (_, long) =
        private_frank_wolfe_traced(&data, constraint, noiseless, 20_000, &mut seed::root(0))
            .unwrap();
    let l_star = *long.last().unwrap();
    let gap = |t: usize| {
        let (w, risks) =
            private_frank_wolfe_traced(&data, constraint, noiseless, t, &mut seed::root(0))
                .unwrap();
        assert!(w.iter().map(|v| v.abs()).sum::<f64>() <= radius + 1e-9);
        *risks.last().unwrap() - l_star
    };
    let (g20, g200) = (gap(20), gap(200));
    assert!(g200 < g20, "risk gap must shrink: {g200} vs {g20}");
    assert!(g200 <= 8.0 * radius * radius / 202.0 * 1.5, "gap {g200}");

    // Gibbs chain against the exact law, including the pair probability
    let eta = 0.8f64;
    let pair = IsingModel::matched_pairs(2, eta).unwrap();
    let mut rng = seed::root(1015);
    let s = ising_gibbs(&pair, 150_000, default_burnin(2), 1, &mut rng);
    let hits = (0..s.n()).filter(|&m| s.state(m) == [1, 1]).count() as f64 / s.n() as f64;
    let expect = eta.exp() / (2.0 * (eta.exp() + 1.0));
    assert!(
        (hits - expect).abs() <= 0.01,
        "pair prob {hits} vs {expect}"
    );
    for p_sites in 3..=4usize {
        let model = if p_sites == 3 {
            let mut a = vec![0.0; 9];
            a[1] = 0.35;
            a[3] = 0.35;
            a[5] = -0.2;
            a[7] = -0.2;
            IsingModel::new(a, vec![0.1, 0.0, -0.3], 3).unwrap()
        } else {
            IsingModel::matched_pairs(4, 0.6).unwrap()
        };
        let law = model.exact_law().unwrap();
        let s = ising_gibbs(&model, 300_000, default_burnin(p_sites), 1, &mut rng);
        let mut counts = vec![0u64; 1 << p_sites];
        for m in 0..s.n() {
            counts[s.state_index(m)] += 1;
        }
        let tv: f64 = 0.5
            * law
                .iter()
                .enumerate()
                .map(|(i, &x)| (x - counts[i] as f64 / s.n() as f64).abs())
                .sum::<f64>();
        assert!(tv <= 0.02, "p={p_sites}: TV {tv}");
    }

    // noiseless Ising recovery over seeds
    let truth = IsingModel::matched_pairs(4, 0.4).unwrap();
    let mut successes = 0;
    for trial in 0..10u64 {
        let mut rng = seed::substream(1016, trial);
        let s = ising_gibbs(&truth, 200_000, default_burnin(4), 1, &mut rng);
        let fit = learn_ising_private(
            &s,
            truth.width(),
            PrivacyBudget::zcdp(f64::INFINITY),
            Some(400),
            false,
            &mut rng,
        )
        .unwrap();
        successes += (fit.max_abs_error(&truth) <= 0.1) as u32;
    }
    assert!(successes >= 9, "recovery {successes}/10");
    pass(
        12,
        "gradient check, FW convergence, Gibbs fidelity, Ising recovery",
    );
}

#[test]
fn criterion_13_kary_estimation() {
    let constants = CalibratedConstants::default();
    let (k, n, eps, trials) = (100usize, 10_000usize, 1.0f64, 100usize);
    let u = uniform(k).unwrap();
    let mut rng = seed::root(1017);
    let mut errs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let s = sample(&u, n, &mut rng);
        let est =
            estimation::estimate_kary_private(&s, PrivacyBudget::pure(eps), &mut rng).unwrap();
        // exact simplex membership
        assert!(est.probs().iter().all(|&x| x >= 0.0));
        let total = privstat::stats::kahan_sum(est.probs().iter().copied());
        assert!((total - 1.0).abs() <= 1e-12);
        errs.push(divergence(&est, &u, Divergence::Tv).unwrap());
    }
    let mean = privstat::stats::kahan_sum(errs.iter().copied()) / trials as f64;
    let bound =
        constants.kary_error_c * ((k as f64 / n as f64).sqrt() + k as f64 / (n as f64 * eps));
    assert!(mean <= bound, "mean TV {mean} bound {bound}");

    // infinite budget equals the empirical estimator seedwise
    let p = zipf(20, 1.0).unwrap();
    let s = sample(&p, 400, &mut seed::root(1018));
    let emp = s.histogram().empirical().unwrap();
    let est = estimation::estimate_kary_private(
        &s,
        PrivacyBudget::pure(f64::INFINITY),
        &mut seed::root(1019),
    )
    .unwrap();
    for (a, b) in est.probs().iter().zip(emp.probs()) {
        assert!((a - b).abs() <= 1e-12);
    }
    // Laplace mechanism with zero sensitivity stays exact along the way
    let exact = laplace_mechanism(
        1.5,
        SensitivityBound::new(0.0, 1),
        PrivacyBudget::pure(1.0),
        &mut seed::root(0),
    )
    .unwrap();
    assert_eq!(exact, 1.5);
    pass(
        13,
        "simplex invariants, calibrated TV bound, and exact eps -> inf limit",
    );
}
