use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use ohc_topics::annotation::{AnnotationStore, GoldEntry, GoldSet, ManualClock};
use ohc_topics::corpus::{Corpus, Post};
use ohc_topics::LabelSet;
use ohc_topics::Topic;
use ohc_topics_cli::server::router;

fn corpus() -> Arc<Corpus> {
    let t0 = "2011-04-01T09:00:00Z".parse().unwrap();
    let posts = (0..3)
        .map(|i| Post {
            post_id: format!("p{i}"),
            thread_id: "t".into(),
            forum_id: "f".into(),
            author_id: format!("a{i}"),
            created_at: t0,
            text: "Started chemo today. Feeling tired.".into(),
            signature: None,
        })
        .collect();
    Arc::new(Corpus::from_posts(posts))
}

fn gold() -> GoldSet {
    let entry = |id: &str, topics: &[Topic]| GoldEntry {
        sentence_id: id.into(),
        text: None,
        labels: LabelSet::from_topics(topics.iter().copied()),
    };
    GoldSet::new(vec![
        entry("g0", &[Topic::Trea]),
        entry("g1", &[Topic::Diag]),
        entry("g2", &[Topic::Pers]),
        entry("g3", &[Topic::Trea, Topic::Pers]),
    ])
}

fn app(with_gold: bool) -> Router {
    let clock = Arc::new(ManualClock::new("2012-01-01T00:00:00Z".parse().unwrap()));
    router(AnnotationStore::in_memory(
        corpus(),
        with_gold.then(gold),
        clock,
    ))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

async fn annotate(
    app: &Router,
    coder: &str,
    sentence: &str,
    labels: &[&str],
) -> (StatusCode, Value) {
    post(
        app,
        "/annotations",
        json!({"coder": coder, "sentence": sentence, "labels": labels}),
    )
    .await
}

#[tokio::test]
async fn schema_lists_the_eleven_codes_in_order() {
    let (status, body) = get(&app(false), "/schema").await;
    assert_eq!(status, StatusCode::OK);
    let codes: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["code"].as_str().unwrap())
        .collect();
    assert_eq!(
        codes,
        ["ALTR", "DAIL", "DIAG", "FIND", "HSYS", "MISC", "NUTR", "PERS", "RSRC", "TEST", "TREA"]
    );
    assert!(body[0]["description"].as_str().is_some());
}

#[tokio::test]
async fn posts_expose_their_sentences() {
    let app = app(false);
    let (status, body) = get(&app, "/posts/p1").await;
    assert_eq!(status, StatusCode::OK);
    let sentences = body["sentences"].as_array().unwrap();
    assert_eq!(sentences.len(), 2);
    assert_eq!(sentences[0]["sentence_id"], "p1:0");
    let (status, body) = get(&app, "/posts/nope").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
}

#[tokio::test]
async fn malformed_requests_get_json_errors() {
    let app = app(false);
    let (status, body) = get(&app, "/batches/next").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");
    let (status, body) = post(&app, "/annotations", json!({"coder": "ann"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");
    get(&app, "/batches/next?coder=ann").await;
    let (status, body) = annotate(&app, "ann", "p0:0", &["BOGUS"]).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_labels");
}

#[tokio::test]
async fn training_gate_blocks_until_passed() {
    let app = app(true);
    let (status, body) = get(&app, "/batches/next?coder=ann").await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["code"], "gate_not_passed");

    for (s, labels) in [
        ("g0", vec!["TREA"]),
        ("g1", vec!["DIAG"]),
        ("g2", vec!["PERS"]),
    ] {
        let (status, ack) = annotate(&app, "ann", s, &labels).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ack["training"], true);
    }
    let (_, st) = get(&app, "/coders/ann/status").await;
    assert_eq!(st["passed"], false);
    assert_eq!(st["training_done"], 3);
    assert_eq!(st["training_total"], 4);

    annotate(&app, "ann", "g3", &["TREA", "PERS"]).await;
    let (status, st) = get(&app, "/coders/ann/status").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(st["passed"], true);
    assert_eq!(st["training_kappa"]["average"], 1.0);
    let (status, batch) = get(&app, "/batches/next?coder=ann").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(batch["post_ids"], json!(["p0", "p1", "p2"]));
}

#[tokio::test]
async fn full_annotation_and_adjudication_round_trip() {
    let app = app(false);
    assert_eq!(get(&app, "/adjudication/queue").await.1, json!([]));

    let (_, b1) = get(&app, "/batches/next?coder=ann").await;
    let (_, b2) = get(&app, "/batches/next?coder=bob").await;
    assert_eq!(b1["batch_id"], b2["batch_id"]);
    assert_eq!(b2["coders"], json!(["ann", "bob"]));
    let (status, body) = get(&app, "/batches/next?coder=cat").await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "exhausted");

    let (status, body) = annotate(&app, "cat", "p0:0", &["TREA"]).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["code"], "not_assigned");
    let (status, body) = annotate(&app, "ann", "p0:0", &[]).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(
        body,
        json!({"code": "labels_required", "message": "labels required"})
    );

    let sentences: Vec<String> = (0..3)
        .flat_map(|p| (0..2).map(move |s| format!("p{p}:{s}")))
        .collect();
    for s in &sentences {
        annotate(&app, "ann", s, &["TREA"]).await;
    }
    // replace one record
    let (_, ack) = annotate(&app, "ann", "p0:1", &["PERS"]).await;
    assert_eq!(ack["replaced"], true);
    let mut last = Value::Null;
    for s in &sentences {
        let labels: &[&str] = if s == "p1:0" {
            &["TREA", "HSYS"]
        } else if s == "p0:1" {
            &["PERS"]
        } else {
            &["TREA"]
        };
        last = annotate(&app, "bob", s, labels).await.1;
    }
    assert_eq!(last["batch_status"], "complete");

    let (_, queue) = get(&app, "/adjudication/queue").await;
    let queue = queue.as_array().unwrap();
    assert_eq!(queue.len(), 6);
    assert_eq!(queue[0]["sentence_id"], "p1:0");
    assert_eq!(queue[0]["disagreement"], true);
    assert_eq!(queue[0]["delta"], json!(["HSYS"]));
    assert_eq!(queue[0]["coder_a"], json!(["TREA"]));
    assert!(queue[1..].iter().all(|q| q["disagreement"] == false));
    assert!(queue.iter().all(|q| q.get("coder_id").is_none()));

    let (_, agreement) = get(&app, &format!("/agreement?batch={}", b1["batch_id"])).await;
    assert_eq!(agreement["n_sentences"], 6);
    assert_eq!(agreement["status"], "complete");
    let hsys = agreement["kappa"]["per_label"][Topic::Hsys.index()]
        .as_f64()
        .unwrap();
    assert_eq!(hsys, 0.0);
    let (_, pairs) = get(&app, "/agreement").await;
    assert_eq!(pairs[0]["pair"], "ann vs bob");
    assert_eq!(pairs[0]["kappa"], agreement["kappa"]);

    for s in &sentences {
        let (status, adj) = post(
            &app,
            "/adjudication",
            json!({"sentence": s, "labels": ["TREA"], "adjudicator": "judge"}),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{adj}");
        assert_eq!(adj["labels"], json!(["TREA"]));
    }
    assert_eq!(get(&app, "/adjudication/queue").await.1, json!([]));
    let (_, agreement) = get(&app, "/agreement?batch=0").await;
    assert_eq!(agreement["status"], "adjudicated");

    let (status, body) = get(&app, "/agreement?batch=9").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
}

#[tokio::test]
async fn adjudication_needs_both_coders() {
    let app = app(false);
    get(&app, "/batches/next?coder=ann").await;
    annotate(&app, "ann", "p0:0", &["TREA"]).await;
    let (status, body) = post(
        &app,
        "/adjudication",
        json!({"sentence": "p0:0", "labels": ["TREA"], "adjudicator": "judge"}),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "missing_coder_records");
}
