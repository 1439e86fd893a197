use std::process::ExitCode;

use clap::Parser;
use rmaddpg::cli::{run, Cli};

// Replay keeps many small long-lived buffers alive while updates churn
// through large temporaries; glibc malloc fragments badly on that mix.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
