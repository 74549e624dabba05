//! Textual distribution recipes for configs and flags.
//!
//! Accepted forms: `uniform`, `zipf:<s>`, `two_step`, `dirichlet:<conc>`,
//! `paninski:<alpha>` (random sign pattern from the stream), and
//! `file:<path>` for newline-delimited symbols turned into an empirical
//! distribution.

use anyhow::{bail, Context, Result};
use privstat::dist::{self, DiscreteDistribution};
use privstat::Stream;
use rand::Rng;

#[derive(Debug, Clone)]
pub enum DistSpec {
    Uniform,
    Zipf(f64),
    TwoStep,
    Dirichlet(f64),
    Paninski(f64),
    File(String),
}

impl DistSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |what: &str| -> Result<f64> {
            arg.with_context(|| format!("{name} needs :{what}"))?
                .parse::<f64>()
                .with_context(|| format!("bad {what} in '{s}'"))
        };
        Ok(match name {
            "uniform" => DistSpec::Uniform,
            "zipf" => DistSpec::Zipf(num("s")?),
            "two_step" | "two-step" => DistSpec::TwoStep,
            "dirichlet" => DistSpec::Dirichlet(num("concentration")?),
            "paninski" => DistSpec::Paninski(num("alpha")?),
            "file" => DistSpec::File(arg.context("file needs :path")?.to_string()),
            other => bail!("unknown distribution '{other}'"),
        })
    }

    /// Materialize over alphabet size `k`. Randomized recipes draw from
    /// the supplied stream.
    pub fn build(&self, k: usize, rng: &mut Stream) -> Result<DiscreteDistribution> {
        Ok(match self {
            DistSpec::Uniform => dist::uniform(k)?,
            DistSpec::Zipf(s) => dist::zipf(k, *s)?,
            DistSpec::TwoStep => dist::two_step(k)?,
            DistSpec::Dirichlet(conc) => dist::dirichlet_draw(k, *conc, rng)?,
            DistSpec::Paninski(alpha) => {
                let z: Vec<bool> = (0..k / 2).map(|_| rng.random()).collect();
                dist::paninski(k, *alpha, &z)?
            }
            DistSpec::File(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
                let symbols: Vec<usize> = text
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| l.trim().parse::<usize>().context("bad symbol"))
                    .collect::<Result<_>>()?;
                let kmax = symbols.iter().copied().max().map(|m| m + 1).unwrap_or(1);
                let set = privstat::SampleSet::new(symbols, kmax.max(k))?;
                set.histogram().empirical()?
            }
        })
    }
}

/// Move exactly `alpha` of TV mass: drain the heaviest symbols and pile
/// the mass onto the lightest one.
pub fn tv_shifted(p: &DiscreteDistribution, alpha: f64) -> Result<DiscreteDistribution> {
    let k = p.k();
    if k < 2 {
        bail!("need at least two symbols to shift mass");
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p.prob(b).partial_cmp(&p.prob(a)).unwrap());
    let receiver = *order.last().unwrap();
    let mut probs = p.probs().to_vec();
    let mut remaining = alpha;
    for &donor in &order {
        if donor == receiver || remaining <= 0.0 {
            break;
        }
        let take = probs[donor].min(remaining);
        probs[donor] -= take;
        remaining -= take;
    }
    if remaining > 1e-12 {
        bail!("cannot shift {alpha} mass within this distribution");
    }
    probs[receiver] += alpha - remaining;
    Ok(DiscreteDistribution::new(probs)?)
}
