use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use kamreduce_core::random::{random_cvec, seeded};
use kamreduce_core::verifier::conjugacy_defect;

use crate::io::{load_problem, load_report, out_path, write_csv, write_json};
use crate::{Global, Status};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Report written by `reduce`.
    #[arg(long)]
    pub report: PathBuf,
    /// Integration horizon.
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// RK4 step of the reference integration.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

pub fn run(g: &Global, a: &VerifyArgs) -> Result<Status> {
    let problem = load_problem(g)?;
    let report = load_report(&a.report)?;
    let cfg = &problem.config;
    if report.omega != cfg.omega || report.v != cfg.v || report.eps0 != cfg.schedule.eps0 {
        bail!("report was produced for a different problem (omega, v or eps0 differ)");
    }
    if !(a.t_end > 0.0 && a.dt > 0.0 && a.dt <= a.t_end) {
        bail!("need 0 < dt <= t_end");
    }
    if !report.converged {
        eprintln!(
            "report did not converge ({}); nothing to verify",
            report.stop_reason
        );
        return Ok(Status::Failed);
    }

    // unit initial state drawn from the seed
    let mut rng = seeded(cfg.seed);
    let z = random_cvec::<f64, _>(&mut rng, cfg.d);
    let norm = z.norm();
    let z = z.map(|c| c / norm);
    let conj =
        conjugacy_defect(&report, &problem, z.as_slice(), a.t_end, a.dt).map_err(|e| anyhow!(e))?;

    write_json(&out_path(g, "conjugacy.json")?, &conj)?;
    let rows = std::iter::once(vec!["t".to_string(), "defect".to_string()]).chain(
        conj.times
            .iter()
            .zip(&conj.defect_series)
            .map(|(t, e)| vec![format!("{t:e}"), format!("{e:e}")]),
    );
    write_csv(&out_path(g, "defect.csv")?, rows)?;

    let b = &conj.bound_checks;
    for (name, c) in [
        ("energy", &b.energy),
        ("frequencies", &b.frequencies),
        ("map", &b.map),
    ] {
        println!(
            "{name:12} {:.3e} <= {:.3e}  {}",
            c.value,
            c.bound,
            if c.holds { "ok" } else { "VIOLATED" }
        );
    }
    let within = conj.sup_defect <= g.tolerance;
    println!(
        "sup defect   {:.3e} <= {:.3e}  {}  (integrator error {:.1e})",
        conj.sup_defect,
        g.tolerance,
        if within { "ok" } else { "EXCEEDED" },
        conj.integrator_error
    );
    Ok(if within && b.all_hold() {
        Status::Ok
    } else {
        Status::Failed
    })
}
