use anyhow::{bail, Context, Result};
use clap::Args;
use kamreduce_core::diophantine::{check_admissible, DivisorOptions};
use rayon::prelude::*;

use crate::io::{load_problem, out_path, write_csv};
use crate::{Global, Status};

pub const MAX_POINTS: usize = 1_000_000;

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Axis grid `lo:hi:N` (cell midpoints, endpoints excluded). Give one per
    /// frequency component, or a single one shared by all.
    #[arg(long = "grid", required = true)]
    pub grid: Vec<String>,
    /// Truncation order K (default: the first step's K, capped by limits.kmax_cap).
    #[arg(long)]
    pub kmax: Option<i64>,
    /// Threshold γ (default: schedule.gamma0).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Exponent τ (default: the schedule's τ).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Skip the quadruple-combination family.
    #[arg(long)]
    pub no_quad_combo: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("grid axis '{s}' is not of the form lo:hi:N");
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .with_context(|| format!("grid lower bound in '{s}'"))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .with_context(|| format!("grid upper bound in '{s}'"))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .with_context(|| format!("grid size in '{s}'"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || n == 0 {
            bail!("grid axis '{s}' needs finite lo < hi and N >= 1");
        }
        Ok(Axis { lo, hi, n })
    }

    pub fn at(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.n as f64
    }
}

pub fn run(g: &Global, a: &ScanArgs) -> Result<Status> {
    let problem = load_problem(g)?;
    let n = problem.config.n;
    let mut axes = a
        .grid
        .iter()
        .map(|s| Axis::parse(s))
        .collect::<Result<Vec<_>>>()?;
    if axes.len() == 1 && n > 1 {
        axes = vec![axes[0]; n];
    }
    if axes.len() != n {
        bail!("{} grid axes given for n = {n} frequencies", axes.len());
    }
    let total = axes
        .iter()
        .try_fold(1usize, |acc, ax| acc.checked_mul(ax.n))
        .filter(|&t| t <= MAX_POINTS);
    let Some(total) = total else {
        bail!("grid exceeds {MAX_POINTS} points");
    };

    let sched = &problem.schedule;
    let cap = problem.config.limits.kmax_cap.unwrap_or(i64::MAX);
    let kmax = a.kmax.unwrap_or_else(|| sched.kmax(0).min(cap));
    let gamma = a.gamma.unwrap_or(problem.config.schedule.gamma0);
    let tau = a.tau.unwrap_or(sched.tau);
    if kmax < 0 || gamma.is_nan() || gamma < 0.0 || !tau.is_finite() {
        bail!("need K >= 0, gamma >= 0 and finite tau");
    }
    let opts = DivisorOptions {
        quad_combo: !a.no_quad_combo,
        single_and_sum: true,
        v0: Some(problem.v0()),
    };
    let eigs = &problem.config.v;

    let rows: Vec<Vec<String>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let omega: Vec<f64> = axes
                .iter()
                .rev()
                .map(|ax| {
                    let i = rem % ax.n;
                    rem /= ax.n;
                    ax.at(i)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            let rep = check_admissible(&omega, eigs, kmax, gamma, tau, &opts);
            let mut row: Vec<String> = omega.iter().map(|w| format!("{w:e}")).collect();
            match rep {
                Ok(r) => {
                    let k: Vec<String> = r.worst_k.iter().map(|x| x.to_string()).collect();
                    row.extend([
                        r.admissible.to_string(),
                        format!("{:e}", r.min_margin),
                        k.join(" "),
                        r.worst_family.to_string(),
                    ]);
                }
                // only a zero frequency vector lands here
                Err(e) => row.extend(["false".into(), "0".into(), String::new(), e.to_string()]),
            }
            row
        })
        .collect();

    let inadmissible = rows.iter().filter(|r| r[n] == "false").count();
    let mut header: Vec<String> = (1..=n).map(|j| format!("omega_{j}")).collect();
    header.extend(["admissible", "min_margin", "worst_k", "family"].map(String::from));
    write_csv(
        &out_path(g, "scan.csv")?,
        std::iter::once(header).chain(rows),
    )?;
    println!(
        "{total} points, {inadmissible} inadmissible ({:.4}); K = {kmax}, gamma = {gamma:e}, tau = {tau}",
        inadmissible as f64 / total as f64
    );
    Ok(Status::Ok)
}
