mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::Cli;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

fn error_json(kind: &str, message: &str, extra: serde_json::Value) -> String {
    let mut body = json!({ "kind": kind, "message": message });
    if let (Some(obj), serde_json::Value::Object(more)) = (body.as_object_mut(), extra) {
        obj.extend(more);
    }
    json!({ "error": body }).to_string()
}

fn core_error_json(e: &fxeq::Error) -> String {
    let extra = match e {
        fxeq::Error::Parse(p) => json!({ "position": p.position, "expected": p.expected }),
        _ => json!({}),
    };
    error_json(e.kind(), &e.to_string(), extra)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", error_json("usage", first, json!({})));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (outcome, common) = match commands::run(&cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}", core_error_json(&e));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match commands::emit(&outcome, common) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = out.write_all(b"\n");
            }
        }
        Err(e) => {
            eprintln!("{}", core_error_json(&e));
            return ExitCode::from(EXIT_USAGE);
        }
    }
    if outcome.all_converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}
