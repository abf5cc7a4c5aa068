//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use lienard_cli::acceptance::{run_all, Context};

fn main() -> ExitCode {
    let results = run_all(&Context::default());
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: {}/{} criteria passed", results.len(), results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
