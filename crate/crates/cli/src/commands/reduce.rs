use anyhow::{anyhow, Result};
use kamreduce_core::run as run_reduction;
use log::info;

use crate::io::{load_problem, out_path, write_csv, write_json};
use crate::{Global, Status};

pub fn run(g: &Global) -> Result<Status> {
    let problem = load_problem(g)?;
    let report = run_reduction(&problem).map_err(|e| anyhow!(e))?;
    let report_path = out_path(g, "report.json")?;
    write_json(&report_path, &report)?;
    write_csv(&out_path(g, "steps.csv")?, report.diagnostics_csv_rows())?;
    info!("wrote {}", report_path.display());

    if report.converged {
        println!(
            "converged in {} steps ({}); v_inf = {:?}",
            report.steps, report.stop_reason, report.v_inf
        );
        return Ok(Status::Ok);
    }
    match &report.failure {
        Some(f) => {
            eprintln!("step {} failed ({}): {}", f.step, f.kind, f.message);
            if let (Some(k), Some(fam), Some(m)) = (&f.worst_k, &f.family, f.margin) {
                eprintln!("worst divisor: k = {k:?}, family {fam}, margin {m:.3e}");
            }
        }
        None => eprintln!(
            "not converged after {} steps: {}",
            report.steps, report.stop_reason
        ),
    }
    Ok(Status::Failed)
}
