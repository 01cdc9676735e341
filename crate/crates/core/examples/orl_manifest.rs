//! Writes a manifest for an AT&T/ORL face directory.
//!
//! Usage: `cargo run --example orl_manifest -- <orl-root> <out.csv> [gallery-per-subject]`

use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: orl_manifest <orl-root> <out.csv> [gallery-per-subject (default 5)]");
        return ExitCode::from(2);
    }
    let per_subject = match args.get(2).map(|s| s.parse::<u32>()) {
        None => 5,
        Some(Ok(k)) => k,
        Some(Err(e)) => {
            eprintln!("bad gallery-per-subject: {e}");
            return ExitCode::from(2);
        }
    };
    let result = lbdface::gallery::orl_manifest(&args[0], per_subject)
        .and_then(|rows| lbdface::gallery::write_manifest(&rows, &args[1]).map(|_| rows.len()));
    match result {
        Ok(n) => {
            println!("wrote {n} rows to {}", args[1]);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
