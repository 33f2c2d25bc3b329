use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;

use super::scan::MAX_POINTS;
use crate::io::{load_report, out_path, write_csv};
use crate::{Global, Status};

#[derive(Args, Debug)]
pub struct DumpMapArgs {
    /// Report written by `reduce`.
    #[arg(long)]
    pub report: PathBuf,
    /// Samples per torus axis.
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Write complex (z, z̄) coordinates instead of real (x, ξ).
    #[arg(long)]
    pub complex: bool,
}

pub fn run(g: &Global, a: &DumpMapArgs) -> Result<Status> {
    let report = load_report(&a.report)?;
    let map = report.map().map_err(|e| anyhow!(e))?;
    let (n, d2) = (map.n(), 2 * map.d());
    let total = (a.points as u128).pow(n as u32);
    if a.points == 0 || total > MAX_POINTS as u128 {
        bail!("need 1 <= points and points^n <= {MAX_POINTS}");
    }
    let total = total as usize;

    let mut header: Vec<String> = (1..=n).map(|j| format!("theta_{j}")).collect();
    let parts: &[&str] = if a.complex { &["re", "im"] } else { &["re"] };
    for i in 0..d2 {
        for j in 0..d2 {
            header.extend(parts.iter().map(|p| format!("M_{i}_{j}_{p}")));
        }
    }
    for i in 0..d2 {
        header.extend(parts.iter().map(|p| format!("c_{i}_{p}")));
    }

    let mut rows = vec![header];
    for idx in 0..total {
        let mut rem = idx;
        let mut theta = vec![0.0; n];
        for t in theta.iter_mut().rev() {
            *t = TAU * (rem % a.points) as f64 / a.points as f64;
            rem /= a.points;
        }
        let (m, c) = if a.complex {
            map.evaluate(&theta)
        } else {
            map.real_at(&theta)
        };
        let mut row: Vec<String> = theta.iter().map(|t| format!("{t:e}")).collect();
        let mut push = |z: &kamreduce_core::scalar::C<f64>| {
            row.push(format!("{:e}", z.re));
            if a.complex {
                row.push(format!("{:e}", z.im));
            }
        };
        for i in 0..d2 {
            for j in 0..d2 {
                push(&m[(i, j)]);
            }
        }
        for i in 0..d2 {
            push(&c[i]);
        }
        rows.push(row);
    }
    write_csv(&out_path(g, "map.csv")?, rows)?;
    println!("{total} samples of a {d2}x{d2} map over T^{n}");
    Ok(Status::Ok)
}
