//! Command-line front end: fits, tradeoff curves and model files.

pub mod artifact;
pub mod config;
pub mod error;
pub mod run;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use artifact::ModelArtifact;
pub use config::RunConfig;
pub use error::CliError;
pub use run::run;

/// Parses `args`, runs the command and returns the process exit status:
/// 0 on success, 2 for an invalid configuration, 1 for a failed computation.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let rendered = e.to_string();
                    let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    eprintln!("eerm: {}", first.trim_start_matches("error: "));
                    2
                }
            };
        }
    };
    match run(&cfg) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("eerm: {}", run::one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
