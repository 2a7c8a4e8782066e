mod cli;
mod commands;
mod report;
mod svg;
mod theory;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use report::Envelope;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let cap = cli.cap;
    let (name, outcome) = match &cli.command {
        Command::Closure(a) => ("closure", commands::closure(a, cap)),
        Command::Orbit(a) => ("orbit", commands::orbit(a)),
        Command::Commute(a) => ("commute", commands::commute(a)),
        Command::Secrecy(a) => ("secrecy", commands::secrecy(a, cap)),
        Command::ExtendedSecrecy(a) => ("extended-secrecy", commands::extended_secrecy(a, cap)),
        Command::Robustness(a) => ("robustness", commands::robustness(a, cap)),
        Command::Terminality(a) => ("terminality", commands::terminality(a)),
        Command::Derive(a) => ("derive", commands::derive(a, cap)),
        Command::PerceivedCommute(a) => ("perceived-commute", commands::perceived_commute(a, cap)),
        Command::GptCheck(a) => ("gpt-check", commands::gpt_check(a)),
        Command::NsEquivalence(a) => ("ns-equivalence", commands::ns_equivalence(a)),
        Command::SignalTime(a) => ("signal-time", commands::signal_time(a, cap)),
        Command::Localize(a) => ("localize", commands::localize(a, cap)),
    };
    let envelope = Envelope::build(name, outcome, !cli.no_timestamp);
    let text = if cli.compact { serde_json::to_string(&envelope) } else { serde_json::to_string_pretty(&envelope) }
        .expect("reports serialize");
    println!("{text}");
    ExitCode::from(envelope.exit_code())
}
