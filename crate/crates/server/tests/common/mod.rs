#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use athena_core::llm::{Provider, Script, ScriptedProvider};
use athena_core::plan::EngineOptions;
use athena_server::{SessionService, Store};

pub const FINANCE: &str =
    "I want to build a finance management app tailored specifically for informal community savings groups.";

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(rel)
}

pub fn finance_script() -> Script {
    Script::load(&fixture_path("finance/script.json")).unwrap()
}

/// The finance script with the first response held back by `delay_ms`.
pub fn finance_provider(delay_ms: u64) -> Arc<dyn Provider> {
    let mut script = finance_script();
    script.responses[0].delay_ms = delay_ms;
    Arc::new(ScriptedProvider::from_script(script).unwrap())
}

pub fn service(dir: &Path, provider: Arc<dyn Provider>) -> SessionService {
    SessionService::new(Store::open(dir).unwrap(), provider, EngineOptions::default())
}
