//! CSV output in a fixed schema, all floats at 12 significant digits.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "task,k,n,alpha,epsilon,delta,rho,trial_count,metric,mean,stderr,seed";

/// One result row of the standard schema.
#[derive(Debug, Clone)]
pub struct Row {
    pub task: String,
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub rho: f64,
    pub trial_count: usize,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// 12 significant digits (scientific notation).
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.11e}", x)
}

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.task,
            self.k,
            self.n,
            sig12(self.alpha),
            sig12(self.epsilon),
            sig12(self.delta),
            sig12(self.rho),
            self.trial_count,
            self.metric,
            sig12(self.mean),
            sig12(self.stderr),
            self.seed
        )
    }
}

pub fn write_rows(path: Option<&Path>, rows: &[Row]) -> Result<()> {
    let mut body = String::from(CSV_HEADER);
    body.push('\n');
    for r in rows {
        body.push_str(&r.to_csv());
        body.push('\n');
    }
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))?;
            f.write_all(body.as_bytes())?;
            eprintln!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}
