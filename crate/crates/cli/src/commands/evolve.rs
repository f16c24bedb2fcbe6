//! `evolve`: simulate one quench stage (plus optional free tail) from
//! the ground state and emit the trajectory.

use std::io::Write;

use qtherm_core::dynamics::{self, Schedule, TrajectorySample};
use qtherm_core::SdsIndex;
use serde_json::json;

use crate::record::{num, RunRecord};
use crate::{CliError, EvolveArgs, Format};

use super::{
    csv_row, final_state_value, open_sink, stage_for_index, stage_from_params, BASE_OMEGA,
    CSV_HEADER,
};

pub fn write_csv(sink: &mut dyn Write, samples: &[TrajectorySample]) -> Result<(), CliError> {
    writeln!(sink, "{CSV_HEADER}")?;
    for s in samples {
        writeln!(sink, "{}", csv_row(s)?)?;
    }
    Ok(())
}

pub fn run(args: &EvolveArgs, tol: f64) -> Result<i32, CliError> {
    let stage = match (args.index, args.params) {
        (Some((l, n)), None) => stage_for_index(SdsIndex::new(l, n))?,
        (None, Some((w, k, tau))) => stage_from_params(w, k, tau)?,
        _ => unreachable!("clap enforces exactly one of --index/--params"),
    };
    let schedule = Schedule::new(vec![stage], BASE_OMEGA)?;
    let samples = dynamics::evolve_schedule(&schedule, args.samples, args.tail)?;

    match args.format {
        Format::Csv => {
            let mut sink = open_sink(args.out.as_deref())?;
            write_csv(&mut sink, &samples)?;
            sink.flush()?;
        }
        Format::Record => {
            if let Some(path) = args.out.as_deref() {
                let mut sink = open_sink(Some(path))?;
                write_csv(&mut sink, &samples)?;
                sink.flush()?;
            }
            let final_sample = samples.last().expect("trajectory is never empty");
            let mut record = RunRecord::new("evolve")
                .param("samples", json!(args.samples))
                .param("tail", num(args.tail))
                .param("thermality_tol", num(tol));
            if let Some((l, n)) = args.index {
                record = record.param("index", json!({ "l": l, "n": n }));
            }
            if let Some((w, k, tau)) = args.params {
                record = record.param(
                    "params",
                    json!({
                        "omega_prime": num(w),
                        "coupling": num(k),
                        "tau_tilde": num(tau),
                    }),
                );
            }
            if let Some(path) = &args.out {
                record = record.param("out", json!(path.display().to_string()));
            }
            let record = record.outputs(json!({
                "rows": samples.len(),
                "final": final_state_value(final_sample, tol)?,
            }));
            println!("{}", record.to_json());
        }
    }
    Ok(0)
}
