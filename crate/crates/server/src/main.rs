use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use athena_core::llm::load_provider;
use athena_core::plan::EngineOptions;
use athena_server::{serve, SessionService, Store};

#[derive(Parser)]
#[command(name = "athena-server", about = "Serve design sessions over HTTP")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, default_value = "athena-data")]
    data_dir: PathBuf,
    /// providers.json
    #[arg(long)]
    providers: PathBuf,
    /// Provider name; the file's default when omitted.
    #[arg(long)]
    provider: Option<String>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let provider = match load_provider(&args.providers, args.provider.as_deref()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("athena-server: {e}");
            return ExitCode::from(3);
        }
    };
    let store = match Store::open(&args.data_dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("athena-server: {e}");
            return ExitCode::from(3);
        }
    };
    let service = Arc::new(SessionService::new(store, provider, EngineOptions::default()));
    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("athena-server: cannot listen on {}: {e}", args.listen);
            return ExitCode::from(1);
        }
    };
    eprintln!("athena-server: listening on {}", args.listen);
    tokio::select! {
        res = serve(listener, service) => {
            if let Err(e) = res {
                eprintln!("athena-server: {e}");
                return ExitCode::from(1);
            }
        }
        _ = tokio::signal::ctrl_c() => {}
    }
    ExitCode::SUCCESS
}
