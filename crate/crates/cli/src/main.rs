mod args;
mod commands;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Study;
use error::{CliError, CliResult};

fn dispatch(cli: &Cli) -> CliResult<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = cli.out.as_path();
    match &cli.command {
        Command::Train(a) => commands::train_cmd(a, out),
        Command::Eval(a) => commands::eval_cmd(a, out),
        Command::Extract(a) => commands::extract_cmd(a, out),
        Command::Score(a) => commands::score_cmd(a, out),
        Command::StudyUsage(a) => commands::study_cmd(Study::Usage, a, out),
        Command::StudyEngagement(a) => commands::study_cmd(Study::Engagement, a, out),
        Command::StudyWordlevel(a) => commands::study_cmd(Study::WordLevel, a, out),
        Command::Report(a) => commands::study_cmd(Study::All, a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "path": e.path().map(|p| p.display().to_string()),
            });
            eprintln!("error: {e}");
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
