use anyhow::anyhow;
use clap::Args;

use mntris_core::validation::{run_checks, Check, CheckReport, ValidationOptions};

use crate::error::{CliError, CliResult, Code};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run only these checks (woodbury, gradient, neumann, variance,
    /// linearity).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<Check>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Print the reports as JSON.
    #[arg(long)]
    pub json: bool,
    /// Negate the flip correction to confirm the flip check catches it.
    #[arg(long, hide = true)]
    pub inject_flip_fault: bool,
}

fn print_report(r: &CheckReport) {
    println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.check);
    for m in &r.measurements {
        println!(
            "    {:<4} {}: observed {:e}, required {}",
            if m.passed { "ok" } else { "FAIL" },
            m.label,
            m.observed,
            m.bound
        );
    }
    if let Some(e) = &r.error {
        println!("    error: {e}");
    }
}

pub fn run(args: ValidateArgs) -> CliResult {
    let checks = if args.only.is_empty() {
        Check::ALL.to_vec()
    } else {
        args.only.clone()
    };
    let opts = ValidationOptions {
        seed: args.seed,
        inject_flip_fault: args.inject_flip_fault,
    };
    let reports = run_checks(&checks, &opts);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&reports).map_err(CliError::config)?
        );
    } else {
        reports.iter().for_each(print_report);
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.check.name()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            Code::ValidationFailed,
            anyhow!("failed checks: {}", failed.join(", ")),
        ))
    }
}
