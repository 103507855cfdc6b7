mod support;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};
use support::{project, Server};

struct Api {
    server: Server,
    client: Client,
}

impl Api {
    fn start(data: &std::path::Path) -> Api {
        Api {
            server: Server::start(data),
            client: Client::new(),
        }
    }

    fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(self.server.url(path)).send().unwrap();
        let status = r.status();
        (status, r.json().unwrap())
    }

    fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.client.post(self.server.url(path)).json(&body).send().unwrap();
        let status = r.status();
        (status, r.json().unwrap())
    }

    fn post_empty(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.post(self.server.url(path)).send().unwrap();
        let status = r.status();
        (status, r.json().unwrap())
    }

    fn event_count(&self, id: &str) -> usize {
        self.get(&format!("/sessions/{id}/events")).1.as_array().unwrap().len()
    }

    fn create(&self, config: &codehinter_core::ProjectConfig) -> String {
        let (status, body) = self.post("/sessions", json!({ "config": config }));
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

#[test]
fn health_and_basic_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(tmp.path());
    let (status, body) = api.get("/healthz");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], codehinter_cli::VERSION);
    assert!(api.server.base.starts_with("http://127.0.0.1:"));

    let (status, body) = api.get("/sessions/00000000-0000-4000-8000-000000000000");
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");

    let (status, body) = api.post("/sessions", json!({ "nonsense": true }));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");

    let (_p, config) = project("running_sum", None);
    let mut broken = config.clone();
    broken.subject_files.clear();
    let (status, body) = api.post("/sessions", json!({ "config": broken }));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "config_invalid");

    let (status, body) = api.post("/sessions", json!({ "project": config.root }));
    assert_eq!(status, StatusCode::CREATED, "{body}");
}

#[test]
fn scripted_session_over_http() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(&tmp.path().join("data"));
    let (_p, config) = project("roman_numerals", Some("add_smaller"));
    let id = api.create(&config);
    let s = |tail: &str| format!("/sessions/{id}{tail}");

    let (status, view) = api.get(&s(""));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["phase"], "CREATED");

    // Helpers need a run first.
    let (status, body) = api.post_empty(&s("/helpers/locate"));
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "illegal_transition");

    let (status, report) = api.post_empty(&s("/e2e"));
    assert_eq!(status, StatusCode::OK, "{report}");
    assert!(report["failed"].as_u64().unwrap() > 0);
    assert_eq!(api.get(&s("")).1["phase"], "TESTS_FAILED");

    let (status, body) = api.post_empty(&s("/solution"));
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["code"], "reveal_gated");
    assert_eq!(body["details"]["runs"], 1);

    let (status, located) = api.post_empty(&s("/helpers/locate"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(located["formula"], "ochiai");
    assert_eq!(located["lines"].as_array().unwrap().len(), 3);

    let (status, card) = api.post_empty(&s("/helpers/quiz"));
    assert_eq!(status, StatusCode::OK, "{card}");
    assert_eq!(card["options"].as_array().unwrap().len(), 3);
    assert!(card.get("correct_index").is_none());
    assert!(card.get("validation").is_none());
    assert!(api.get(&s("")).1["quiz"].get("correct_index").is_none());

    let (status, body) = api.post(&s("/quiz/answer"), json!({ "choice": 9 }));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "index_out_of_range");
    let (status, answer) = api.post(&s("/quiz/answer"), json!({ "choice": 0 }));
    assert_eq!(status, StatusCode::OK);
    assert!(answer["is_correct"].is_boolean());
    assert!(answer["explanation"].is_string());

    // Reads change nothing.
    let before = api.event_count(&id);
    let (status, pseudo) = api.get(&s("/pseudocode"));
    assert_eq!(status, StatusCode::OK, "{pseudo}");
    let (status, viz) = api.get(&s("/visualizer-url"));
    assert_eq!(status, StatusCode::OK);
    assert!(viz["url"].as_str().unwrap().starts_with("http"));
    api.get(&s(""));
    api.get(&s("/report/usage"));
    assert_eq!(api.event_count(&id), before);

    // Every mutation appends.
    let mutations: Vec<(&str, Value)> = vec![
        ("/helpers/prints", Value::Null),
        ("/helpers/prints/run", Value::Null),
        ("/helpers/pseudocode", Value::Null),
        ("/helpers/visualizer", json!({})),
        ("/chat", json!({ "text": "why does my loop stop early?" })),
    ];
    for (path, body) in mutations {
        let n = api.event_count(&id);
        let (status, resp) = if body.is_null() { api.post_empty(&s(path)) } else { api.post(&s(path), body) };
        assert_eq!(status, StatusCode::OK, "{path}: {resp}");
        assert!(api.event_count(&id) > n, "{path} appended nothing");
    }

    let (status, solution) = api.post_empty(&s("/solution"));
    assert_eq!(status, StatusCode::OK, "{solution}");
    assert_eq!(solution["origin"], "solution");

    let (status, body) = api.post(&s("/patch"), json!({ "proposal_id": "solution", "proposal": solution }));
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = api.post(&s("/patch"), json!({ "proposal_id": "quiz-7" }));
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_proposal");
    let (status, body) = api.post(&s("/patch"), json!({ "proposal_id": "solution" }));
    assert_eq!(status, StatusCode::OK, "{body}");
    assert!(body["diff"].as_str().unwrap().contains("@@"));

    let (status, report) = api.post_empty(&s("/e2e"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["failed"], 0);
    let (_, view) = api.get(&s(""));
    assert_eq!(view["phase"], "TESTS_PASSED");
    assert_eq!(view["revealed"], solution);

    let (_, usage) = api.get(&s("/report/usage"));
    assert_eq!(usage["counts"]["run_e2e"], 2);
    assert_eq!(usage["counts"]["solution_revealed"], 1);
    assert_eq!(usage["quiz_answered"], 1);

    // A restarted service replays the log and answers identically.
    let events = api.get(&s("/events")).1;
    let data = tmp.path().join("data");
    drop(api);
    let api = Api::start(&data);
    assert_eq!(api.get(&s("")).1, view);
    assert_eq!(api.get(&s("/events")).1, events);
    assert_eq!(api.get(&s("/report/usage")).1, usage);
}

#[test]
fn concurrent_runs_on_one_session_do_not_interleave() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(tmp.path());
    let (_p, config) = project("move_zeroes", Some("swap_half"));
    let id = api.create(&config);
    let url = api.server.url(&format!("/sessions/{id}/e2e"));
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let url = url.clone();
            std::thread::spawn(move || Client::new().post(url).send().unwrap().status())
        })
        .collect();
    for h in handles {
        let status = h.join().unwrap();
        assert!(status == StatusCode::OK || status == StatusCode::CONFLICT, "{status}");
    }
    let events = api.get(&format!("/sessions/{id}/events")).1;
    let seqs: Vec<u64> = events.as_array().unwrap().iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    let expected: Vec<u64> = (1..=seqs.len() as u64).collect();
    assert_eq!(seqs, expected);
    assert_eq!(api.get(&format!("/sessions/{id}")).1["runs"], seqs.len());
}

#[test]
fn unknown_routes_use_the_error_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let api = Api::start(tmp.path());
    let (status, body) = api.get("/nope");
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
}
