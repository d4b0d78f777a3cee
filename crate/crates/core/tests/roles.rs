mod common;

use std::sync::{Arc, Mutex};
use std::thread;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use slideloop::model::*;
use slideloop::perturb::{perturb, PerturbConfig};
use slideloop::roles::heuristic::{diagnose, Finding};
use slideloop::roles::*;

fn card(id: &str, x: i64, y: i64, w: i64, h: i64, text: &str) -> Element {
    Element::auto_shape(id, ShapeName::rectangle(), Geometry::new(x, y, w, h))
        .with_fill(Fill::solid(Color::from_rgb(32, 64, 128)))
        .with_text(TextFrame::single(TextRun::new(text, "Lato", 20.0, Color::white())))
}

/// Three left-aligned cards and a header sharing the same left edge.
fn aligned_slide() -> SlideDoc {
    let mut d = SlideDoc::new("aligned", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
    d.elements.push(card("header", 600_000, 300_000, 9_000_000, 800_000, "Plan"));
    for (i, y) in [1_400_000, 2_700_000, 4_000_000].into_iter().enumerate() {
        d.elements.push(card(&format!("card{i}"), 600_000, y, 3_000_000, 1_000_000, &format!("Step {i}")));
    }
    d
}

#[test]
fn clean_corpus_raises_no_flags() {
    let reviewer = HeuristicReviewer::default();
    for slide in common::corpus() {
        let labeled = review(&reviewer, &slide).unwrap();
        assert!(labeled.tentative_ids().is_empty(), "{}: {:?}", slide.source_id, labeled.tentative_ids());
    }
    assert!(review(&reviewer, &aligned_slide()).unwrap().tentative_ids().is_empty());
}

#[test]
fn small_shift_off_a_shared_edge_is_flagged() {
    let mut d = aligned_slide();
    let shift = d.elements[2].position.width * 3 / 100;
    d.elements[2].position.x += shift;
    let diags = diagnose(&d, &HeuristicConfig::default());
    assert_eq!(diags.len(), 1, "{diags:?}");
    assert_eq!(diags[0].id, "card1");
    assert!(diags[0].findings.iter().any(|f| matches!(f, Finding::Misaligned { .. })));

    let fixed = contribute(&HeuristicContributor::default(), &review(&HeuristicReviewer::default(), &d).unwrap()).unwrap();
    assert_eq!(fixed.element("card1").unwrap().position.x, 600_000);
    assert_eq!(touched_ids(&d, &fixed), vec!["card1".to_string()]);
}

#[test]
fn far_shift_is_a_deliberate_layout_not_a_flaw() {
    let mut d = aligned_slide();
    d.elements[2].position.x += 2_000_000;
    assert!(diagnose(&d, &HeuristicConfig::default()).is_empty());
}

#[test]
fn default_font_among_styled_text_is_flagged_and_restyled() {
    let mut d = aligned_slide();
    d.elements[3].text.as_mut().unwrap().runs[0].font_name = "Calibri".into();
    let labeled = review(&HeuristicReviewer::default(), &d).unwrap();
    assert_eq!(labeled.tentative_ids().into_iter().collect::<Vec<_>>(), vec!["card2".to_string()]);
    let fixed = contribute(&HeuristicContributor::default(), &labeled).unwrap();
    assert_eq!(fixed.element("card2").unwrap().text.as_ref().unwrap().runs[0].font_name, "Lato");
}

#[test]
fn oracle_pair_restores_the_original() {
    for (i, slide) in common::corpus().iter().enumerate() {
        let original = slide.with_status(Status::Final);
        let (draft, log) = perturb(&original, &PerturbConfig::new(i as u64, 0.5)).unwrap();
        let labeled = review(&OracleReviewer::new(log.clone()), &draft).unwrap();
        assert_eq!(labeled.tentative_ids(), log.flawed_ids());
        let restored = contribute(&OracleContributor::from_log(&draft, &log).unwrap(), &draft.with_status(Status::Tentative)).unwrap();
        assert_eq!(restored, original);
    }
}

// ------------------------------------------------------------ remote

#[derive(Default)]
struct Mock {
    /// Replies served in order; the last one repeats.
    replies: Vec<(u16, String)>,
    requests: Vec<Value>,
    auth: Vec<Option<String>>,
}

fn completion(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

async fn chat(State(mock): State<Arc<Mutex<Mock>>>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, String) {
    let mut m = mock.lock().unwrap();
    let i = m.requests.len().min(m.replies.len() - 1);
    m.requests.push(body);
    m.auth.push(headers.get("authorization").map(|v| v.to_str().unwrap().to_string()));
    let (status, text) = m.replies[i].clone();
    (StatusCode::from_u16(status).unwrap(), text)
}

/// Starts a chat-completions mock and returns its endpoint.
fn serve_mock(mock: Arc<Mutex<Mock>>) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/v1/chat/completions", post(chat)).with_state(mock);
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}/v1/chat/completions", rx.recv().unwrap())
}

fn client(endpoint: String, key: Option<&str>) -> Arc<RemoteClient> {
    RemoteClient::new(RemoteModelConfig {
        endpoint,
        api_key: key.map(str::to_string),
        timeout_secs: 10,
        ..RemoteModelConfig::default()
    })
    .unwrap()
}

#[test]
fn remote_reviewer_keeps_only_statuses_and_repairs_chatty_replies() {
    let d = aligned_slide();
    let mut reply = d.with_flags([&"card0".to_string()]);
    reply.elements[1].position.x = 1;
    let chatty = format!("Here is the labeled slide:\n```json\n{}\n```\nDone.", to_json(&reply).unwrap());
    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(200, completion(&chatty))],
        ..Mock::default()
    }));
    let reviewer = RemoteReviewer(client(serve_mock(mock.clone()), Some("sk-test")));
    let labeled = review(&reviewer, &d).unwrap();
    assert_eq!(labeled, d.with_flags([&"card0".to_string()]));

    let m = mock.lock().unwrap();
    assert_eq!(m.auth[0].as_deref(), Some("Bearer sk-test"));
    let messages = m.requests[0]["messages"].as_array().unwrap();
    assert_eq!(messages.len(), 2);
    assert_eq!(messages[1]["content"], to_json(&d).unwrap());
    assert_eq!(m.requests[0]["max_tokens"], 2048);
}

#[test]
fn remote_retries_unparseable_replies_then_gives_up_with_raw_text() {
    let d = aligned_slide().with_flags([&"card2".to_string()]);
    let fixed = d.with_status(Status::Final);
    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(200, completion("I cannot comply")), (200, completion(&to_json(&fixed).unwrap()))],
        ..Mock::default()
    }));
    let contributor = RemoteContributor(client(serve_mock(mock.clone()), None));
    assert_eq!(contribute(&contributor, &d).unwrap(), fixed);
    assert_eq!(mock.lock().unwrap().requests.len(), 2);
    assert_eq!(mock.lock().unwrap().auth[0], None);

    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(200, completion("{\"broken\": "))],
        ..Mock::default()
    }));
    let contributor = RemoteContributor(client(serve_mock(mock.clone()), None));
    let err = contribute(&contributor, &d).unwrap_err();
    assert!(matches!(err, RoleError::Irreparable { .. }), "{err:?}");
    assert_eq!(err.raw(), Some("{\"broken\": "));
    assert_eq!(mock.lock().unwrap().requests.len(), 3);
}

#[test]
fn remote_http_failure_carries_the_body() {
    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(503, "overloaded".into())],
        ..Mock::default()
    }));
    let reviewer = RemoteReviewer(client(serve_mock(mock), None));
    let err = review(&reviewer, &aligned_slide()).unwrap_err();
    assert!(matches!(err, RoleError::Transport { .. }));
    assert_eq!(err.raw(), Some("overloaded"));
}

#[test]
fn branch_variants_send_a_seed() {
    let d = aligned_slide().with_status(Status::Tentative);
    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(200, completion(&to_json(&aligned_slide()).unwrap()))],
        ..Mock::default()
    }));
    let contributor = RemoteContributor(client(serve_mock(mock.clone()), None));
    contribute_variant(&contributor, &d, 0).unwrap();
    contribute_variant(&contributor, &d, 17).unwrap();
    let m = mock.lock().unwrap();
    assert!(m.requests[0].get("seed").is_none());
    assert_eq!(m.requests[1]["seed"], 17);
    assert!(m.requests[1]["temperature"].as_f64().unwrap() > 0.0);
}

#[test]
fn over_budget_slide_is_refused_before_any_request() {
    let mut d = SlideDoc::new("big", DEFAULT_CANVAS.0, DEFAULT_CANVAS.1);
    d.elements.push(card("e0", 0, 0, 1000, 1000, &"x".repeat(10_000)));
    let mock = Arc::new(Mutex::new(Mock {
        replies: vec![(200, completion("{}"))],
        ..Mock::default()
    }));
    let reviewer = RemoteReviewer(client(serve_mock(mock.clone()), None));
    assert!(matches!(review(&reviewer, &d), Err(RoleError::Budget { .. })));
    assert!(mock.lock().unwrap().requests.is_empty());
}
