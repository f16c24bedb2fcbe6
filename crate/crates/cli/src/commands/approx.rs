//! `approx`: discrete-set approximations to a target temperature as a
//! fastest-first table.

use qtherm_core::sds;
use serde_json::{json, Value};

use crate::record::{fmt_sig, num, RunRecord};
use crate::{ApproxArgs, CliError, Format};

pub const TABLE_CSV_HEADER: &str = "l,n,beta_eg,rel_error_percent,tau_tilde";

struct Row {
    l: u32,
    n: u32,
    beta_eg: f64,
    rel_error_percent: f64,
    tau_tilde: f64,
}

pub fn run(args: &ApproxArgs) -> Result<i32, CliError> {
    let beta_eg = args.target.beta()?;
    let front = sds::approx_search(beta_eg, args.rel_tol, args.tau_max)?;
    let rows: Vec<Row> = front
        .iter()
        .map(|idx| {
            let p = sds::sds_params(*idx);
            Row {
                l: idx.l,
                n: idx.n,
                beta_eg: p.beta_eg,
                rel_error_percent: (p.beta_eg - beta_eg).abs() / beta_eg * 100.0,
                tau_tilde: p.tau,
            }
        })
        .collect();

    match args.format {
        Some(Format::Record) => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "l": r.l,
                        "n": r.n,
                        "beta_eg": num(r.beta_eg),
                        "rel_error_percent": num(r.rel_error_percent),
                        "tau_tilde": num(r.tau_tilde),
                    })
                })
                .collect();
            let mut record = RunRecord::new("approx")
                .param("beta_eg", num(beta_eg))
                .param("rel_tol", num(args.rel_tol));
            if let Some(tau_max) = args.tau_max {
                record = record.param("tau_max", num(tau_max));
            }
            println!("{}", record.outputs(json!({ "rows": rows })).to_json());
        }
        Some(Format::Csv) => {
            println!("{TABLE_CSV_HEADER}");
            for r in &rows {
                println!(
                    "{},{},{},{},{}",
                    r.l, r.n, r.beta_eg, r.rel_error_percent, r.tau_tilde
                );
            }
        }
        None => {
            println!(
                "approximations to beta_eg = {} within {}%, fastest first",
                fmt_sig(beta_eg),
                fmt_sig(args.rel_tol * 100.0)
            );
            println!("{:>5} {:>5} {:>12} {:>10} {:>12}", "l", "n", "beta_eg", "rel_err_%", "tau_tilde");
            for r in &rows {
                println!(
                    "{:>5} {:>5} {:>12} {:>10.2} {:>12}",
                    r.l,
                    r.n,
                    fmt_sig(r.beta_eg),
                    r.rel_error_percent,
                    fmt_sig(r.tau_tilde)
                );
            }
            if rows.is_empty() {
                println!("  (no set member within tolerance; widen --rel-tol)");
            }
        }
    }
    Ok(0)
}
