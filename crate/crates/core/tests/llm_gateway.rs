mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use athena_core::ir::{ir_from_value, Storyboard};
use athena_core::llm::{
    complete_json, extract_json, load_provider, ChatMessage, CompletionRequest, HttpChatProvider, LlmError,
    Provider, ProviderError, ProviderLimits, ScriptedProvider, ScriptedResponse, TemplateId,
};
use athena_core::plan::{Engine, PlanError};
use athena_core::ValidationReport;
use common::*;

fn request(template: TemplateId) -> CompletionRequest {
    CompletionRequest::new(template, vec![ChatMessage::user("produce the storyboard")])
}

fn storyboard(value: serde_json::Value) -> Result<Storyboard, ValidationReport> {
    ir_from_value(value).map_err(|e| e.to_report())
}

#[test]
fn fenced_wireframe_parses() {
    let body = format!("Here it is:\n```json\n{}```\nLet me know.", fixture("appendix/wireframe.json"));
    let provider = ScriptedProvider::new(vec![ScriptedResponse::any(body)]).unwrap();
    let out = complete_json(&provider, request(TemplateId::InitialStoryboard), storyboard).unwrap();
    assert_eq!(out.value.nodes.len(), 2);
    assert_eq!(out.transcript.call_ids, vec!["scripted-0".to_string()]);
}

#[test]
fn prose_gets_one_retry_then_fails() {
    let provider = ScriptedProvider::new(vec![
        ScriptedResponse::any("Sure! Here is the plan:"),
        ScriptedResponse::any("Sure! Here is the plan:"),
        ScriptedResponse::any("{\"unused\": true}"),
    ])
    .unwrap()
    .with_retries(1);
    let err = complete_json(&provider, request(TemplateId::Plan), storyboard).unwrap_err();
    assert_eq!(err.code(), "schema_error_after_retries");
    match &err {
        LlmError::SchemaAfterRetries { attempts, report } => {
            assert_eq!(*attempts, 2);
            assert!(report.has_code("invalid_json"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let calls = provider.calls();
    assert_eq!(calls.len(), 2);
    // The re-prompt carries the failed answer and the reason.
    let last = &calls[1].messages;
    assert_eq!(last[last.len() - 2].content, "Sure! Here is the plan:");
    assert!(last[last.len() - 1].content.contains("invalid_json"));
}

#[test]
fn trailing_comma_is_repaired_into_strict_json() {
    let raw = "{\"storyboard\": {\"nodes\": [{\"id\": 1, \"name\": \"Home\", \"swiftUIViewName\": \"HomeView\", \"outgoingEdges\": [],},],},}";
    assert!(serde_json::from_str::<serde_json::Value>(raw).is_err());
    let extracted = extract_json(raw).unwrap();
    assert!(extracted.repaired);
    let strict: serde_json::Value = serde_json::from_str(&extracted.text).expect("repaired text is strict JSON");
    assert_eq!(strict, extracted.value);

    let provider = ScriptedProvider::new(vec![ScriptedResponse::any(raw)]).unwrap();
    let out = complete_json(&provider, request(TemplateId::InitialStoryboard), storyboard).unwrap();
    assert_eq!(out.value.nodes[0].swift_ui_view_name, "HomeView");
}

#[test]
fn scripted_replay_is_deterministic() {
    let script = vec![
        ScriptedResponse::for_target(TemplateId::SkeletonMod, "BView", "{\"b\": 1}"),
        ScriptedResponse::for_target(TemplateId::SkeletonMod, "AView", "{\"a\": 1}"),
        ScriptedResponse::for_template(TemplateId::Plan, "{\"p\": 1}"),
    ];
    let run = || {
        let provider = ScriptedProvider::new(script.clone()).unwrap();
        let order = [
            request(TemplateId::Plan),
            request(TemplateId::SkeletonMod).with_target("AView"),
            request(TemplateId::SkeletonMod).with_target("BView"),
        ];
        order
            .iter()
            .map(|r| {
                let c = provider.complete(r).unwrap();
                (c.call_id, c.text)
            })
            .collect::<Vec<_>>()
    };
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first[1], ("scripted-1".to_string(), "{\"a\": 1}".to_string()));

    let provider = ScriptedProvider::new(script).unwrap();
    let err = provider.complete(&request(TemplateId::CodeGen)).unwrap_err();
    assert!(matches!(err, ProviderError::ScriptExhausted { .. }));
}

/// One canned HTTP exchange per connection. Each request's head and body are
/// sent back over the channel.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            tx.send((head, String::from_utf8(payload).unwrap())).unwrap();
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/v1/chat/completions"), rx)
}

#[test]
fn http_provider_round_trip_keeps_the_credential_out() {
    const VAR: &str = "ATHENA_TEST_CREDENTIAL_A";
    const SECRET: &str = "sk-test-7f3a9c2e";
    std::env::set_var(VAR, SECRET);

    let ok = serde_json::json!({
        "id": "chatcmpl-1",
        "choices": [{"message": {"role": "assistant", "content": fixture("appendix/wireframe.json")}}]
    });
    let (endpoint, rx) = serve(vec![
        (200, ok.to_string()),
        (401, format!("{{\"error\": \"bad key Bearer {SECRET}\"}}")),
    ]);
    let provider = HttpChatProvider::new("test-model", &endpoint, VAR, ProviderLimits::default()).unwrap();

    let out = complete_json(&provider, request(TemplateId::InitialStoryboard), storyboard).unwrap();
    assert_eq!(out.value.nodes.len(), 2);
    assert_eq!(out.transcript.last_call_id(), Some("chatcmpl-1"));
    let (head, body) = rx.recv().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions"));
    assert!(head.to_ascii_lowercase().contains(&format!("authorization: bearer {}", SECRET.to_ascii_lowercase())));
    let wire: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(wire["model"], "test-model");
    assert_eq!(wire["messages"][0]["role"], "user");

    let err = provider.complete(&request(TemplateId::Plan)).unwrap_err();
    assert_eq!(err.status(), Some(401));

    // Nothing a caller can log carries the secret.
    let visible = [
        format!("{err}"),
        format!("{err:?}"),
        format!("{provider:?}"),
        format!("{:?}", out.transcript),
    ];
    for text in visible {
        assert!(!text.contains(SECRET), "leaked: {text}");
    }
}

#[test]
fn http_status_failure_surfaces_as_provider_error_in_the_engine() {
    const VAR: &str = "ATHENA_TEST_CREDENTIAL_B";
    const SECRET: &str = "sk-test-b81d";
    std::env::set_var(VAR, SECRET);
    let (endpoint, _rx) = serve(vec![(503, format!("overloaded {SECRET}"))]);
    let provider = HttpChatProvider::new("m", &endpoint, VAR, ProviderLimits::default()).unwrap();
    let err = Engine::new(&provider).initial_generate("a podcast app").map(|_| ()).unwrap_err();
    assert_eq!(err.code(), "provider_error");
    assert!(matches!(err, PlanError::Provider { .. }));
    assert!(!err.to_string().contains(SECRET));
}

#[test]
fn missing_credential_is_a_config_error() {
    let provider =
        HttpChatProvider::new("m", "http://127.0.0.1:9/none", "ATHENA_TEST_UNSET_VAR", ProviderLimits::default()).unwrap();
    let err = provider.complete(&request(TemplateId::Plan)).unwrap_err();
    assert!(matches!(err, ProviderError::Config(_)), "{err}");
}

#[test]
fn providers_file_builds_scripted_and_checks_http_fields() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("script.json"),
        serde_json::json!([{"template": "plan", "body": {"technicalDescription": {"summary": "noop"}}}]).to_string(),
    )
    .unwrap();
    let providers = serde_json::json!({
        "default": "replay",
        "providers": {
            "replay": {"kind": "scripted", "script": "script.json", "limits": {"retries": 1}},
            "remote": {"kind": "http_chat", "modelName": "m", "authRef": "SOME_VAR"}
        }
    });
    let path = dir.path().join("providers.json");
    std::fs::write(&path, providers.to_string()).unwrap();

    let provider = load_provider(&path, None).unwrap();
    assert_eq!(provider.limits().retries, 1);
    let c = provider.complete(&request(TemplateId::Plan)).unwrap();
    assert!(c.text.contains("noop"));

    let err = load_provider(&path, Some("remote")).err().expect("missing endpoint");
    assert!(err.to_string().contains("endpoint"), "{err}");
    let err = load_provider(&path, Some("absent")).err().expect("unknown name");
    assert!(err.to_string().contains("unknown provider"), "{err}");
}
