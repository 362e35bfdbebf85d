//! Command-line front end: configuration merging, command dispatch and
//! report output.

pub mod config;
pub mod run;

use clap::Parser;

use config::{Cli, RunConfig};
use run::{execute, write_output, EXIT_CONFIG};

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let env_threads = std::env::var("BERGMAN_LAB_THREADS").ok();
    let cfg = match RunConfig::resolve(cli.command.name(), cli.command.flags(), env_threads) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("bergman-lab: configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = bergman_lab::par::init_threads(t) {
            log::warn!("cannot set thread count to {t}: {e}");
        }
    }
    match execute(&cfg).and_then(|out| write_output(&cfg, &out.bytes).map(|_| out.status)) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("bergman-lab {}: {e}", cfg.command);
            e.exit_code()
        }
    }
}
