use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use athena_cli::{check, chat, exit, run_batch, BatchScript, RunError};
use athena_core::codegen::export_project;
use athena_core::llm::load_provider;
use athena_core::plan::EngineOptions;
use athena_server::{SessionService, Store};

#[derive(Parser)]
#[command(name = "athena", about = "Chat-driven SwiftUI app construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Initial prompt, change prompts, code generation, export and check.
    Run {
        #[arg(long)]
        script: PathBuf,
        /// providers.json; overrides the script's.
        #[arg(long)]
        providers: Option<PathBuf>,
        /// Provider name in the providers file.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Navigation check of a SwiftUI project against a storyboard.
    Check {
        project_dir: PathBuf,
        #[arg(long)]
        storyboard: PathBuf,
        #[arg(long)]
        compile_log: Option<PathBuf>,
        /// Also write report.json here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Interactive session; lines are chat messages, `/help` lists commands.
    Chat {
        #[arg(long)]
        providers: PathBuf,
        #[arg(long)]
        provider: Option<String>,
        #[arg(long, default_value = "athena-data")]
        data_dir: PathBuf,
        /// Resume this session instead of creating one.
        #[arg(long)]
        session: Option<String>,
        #[arg(long)]
        app: Option<String>,
    },
    /// Write a stored session's generated code to a directory.
    Export {
        #[arg(long, default_value = "athena-data")]
        data_dir: PathBuf,
        #[arg(long)]
        session: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("athena: {message}");
    ExitCode::from(code)
}

fn run(script: PathBuf, providers: Option<PathBuf>, provider: Option<String>, out: Option<PathBuf>, json: bool) -> ExitCode {
    let result = (|| {
        let mut script = BatchScript::load(&script)?;
        if providers.is_some() {
            script.providers = providers;
        }
        let p = script.provider(provider.as_deref())?;
        let out = out
            .or_else(|| script.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("athena-out"));
        run_batch(&script, &*p, &out).map(|o| (o, out))
    })();
    match result {
        Ok((outcome, out)) => {
            if json {
                let summary = json!({
                    "status": if outcome.report.navigation.total > 0 { "findings" } else { "ok" },
                    "metrics": outcome.metrics,
                    "navigation": outcome.report.navigation.total,
                    "outDir": out,
                    "archive": outcome.archive,
                });
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary"));
            } else {
                println!(
                    "views: {}  lines of code: {}  navigation findings: {}",
                    outcome.metrics.views, outcome.metrics.lines_of_code, outcome.report.navigation.total
                );
                print!("{}", check::render(&outcome.report));
                println!("wrote {}", out.display());
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            if json {
                let stage = match &e {
                    RunError::Pipeline { stage, .. } => Some(stage.clone()),
                    _ => None,
                };
                println!("{}", json!({"status": "failed", "stage": stage, "error": e.to_string()}));
            }
            fail(e.exit_code(), e)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::BAD_INPUT),
            };
        }
    };
    match cli.command {
        Command::Run { script, providers, provider, out, json } => run(script, providers, provider, out, json),
        Command::Check { project_dir, storyboard, compile_log, report, json } => {
            let result = check::check_project(&project_dir, &storyboard, compile_log.as_deref());
            let report_data = match result {
                Ok(r) => r,
                Err(e) => return fail(exit::BAD_INPUT, e),
            };
            if let Some(path) = report {
                if let Err(e) = std::fs::write(&path, report_data.to_json()) {
                    return fail(exit::BAD_INPUT, format!("{}: {e}", path.display()));
                }
            }
            if json {
                print!("{}", report_data.to_json());
            } else {
                print!("{}", check::render(&report_data));
            }
            ExitCode::from(if report_data.navigation.total > 0 { exit::FINDINGS } else { exit::OK })
        }
        Command::Chat { providers, provider, data_dir, session, app } => {
            let p = match load_provider(&providers, provider.as_deref()) {
                Ok(p) => p,
                Err(e) => return fail(exit::BAD_INPUT, e),
            };
            let store = match Store::open(&data_dir) {
                Ok(s) => s,
                Err(e) => return fail(exit::BAD_INPUT, e),
            };
            let svc = SessionService::new(store, Arc::clone(&p), EngineOptions::default());
            let id = match session {
                Some(id) => match svc.get(&id) {
                    Ok(_) => id,
                    Err(e) => return fail(exit::BAD_INPUT, e),
                },
                None => match svc.create(app.as_deref()) {
                    Ok(s) => s.id,
                    Err(e) => return fail(exit::PIPELINE, e),
                },
            };
            match chat::repl(&svc, &id, io::stdin().lock(), io::stdout().lock()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(exit::PIPELINE, e),
            }
        }
        Command::Export { data_dir, session, out } => {
            let loaded = Store::open(&data_dir).and_then(|s| s.load(&session));
            let s = match loaded {
                Ok(Some(s)) => s,
                Ok(None) => return fail(exit::BAD_INPUT, format!("unknown session '{session}'")),
                Err(e) => return fail(exit::BAD_INPUT, e),
            };
            let Some(gp) = &s.generated else {
                return fail(exit::BAD_INPUT, "the session has no generated code");
            };
            match export_project(gp, &s.project.data_model, &s.app_name, &out) {
                Ok(m) => {
                    println!("exported {} files to {}", m.files.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit::PIPELINE, e),
            }
        }
    }
}

