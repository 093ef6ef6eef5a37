//! In-process HTTP client and a simulated crowd driving the API.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use bwsrank_core::simulate::simulate_vote;
use bwsrank_core::{formats, Item, LatentWorld, SyntheticAnnotator};
use bwsrank_service::{router, Registry};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

pub struct TestApp {
    pub dir: TempDir,
    pub registry: Arc<Registry>,
    pub app: Router,
}

impl TestApp {
    pub fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let registry = Arc::new(Registry::open(dir.path()).unwrap());
        let app = router(registry.clone(), None);
        TestApp { dir, registry, app }
    }

    pub async fn raw(
        &self,
        method: &str,
        uri: &str,
        body: Option<&Value>,
    ) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json");
        let req = match body {
            Some(v) => req.body(Body::from(serde_json::to_vec(v).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (
            status,
            to_bytes(resp.into_body(), usize::MAX)
                .await
                .unwrap()
                .to_vec(),
        )
    }

    pub async fn call(&self, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.raw(method, uri, body).await;
        (
            status,
            serde_json::from_slice(&bytes).unwrap_or(Value::Null),
        )
    }
}

pub fn items(n: usize) -> Vec<Item> {
    (0..n)
        .map(|i| Item {
            definition: format!("meaning {i}"),
            ..Item::new(format!("e{i:02}"), format!("expression {i}"))
        })
        .collect()
}

pub fn items_tsv(items: &[Item]) -> String {
    let mut out = Vec::new();
    formats::write_items_tsv(items, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[derive(Debug, Default)]
pub struct CrowdOutcome {
    /// Tasks served to each annotator, in order.
    pub served: Vec<Vec<usize>>,
    pub accepted: usize,
    pub duplicate_rejections: usize,
    pub other_failures: Vec<String>,
}

impl CrowdOutcome {
    pub fn repeated_serves(&self) -> usize {
        self.served
            .iter()
            .map(|s| s.len() - s.iter().collect::<BTreeSet<_>>().len())
            .sum()
    }
}

/// Registers `people` annotators and lets them all work the project at once.
/// Every vote is posted twice concurrently to probe at-most-once intake.
pub async fn run_crowd(
    app: &Arc<TestApp>,
    project: &str,
    people: usize,
    world: &LatentWorld,
) -> CrowdOutcome {
    let world = Arc::new(world.clone());
    let mut handles = Vec::new();
    for p in 0..people {
        let app = app.clone();
        let world = world.clone();
        let project = project.to_string();
        handles.push(tokio::spawn(async move {
            let (status, body) = app.call("POST", &format!("/projects/{project}/annotators"), Some(&json!({}))).await;
            assert_eq!(status, StatusCode::CREATED);
            let id = body["annotator_id"].as_str().unwrap().to_string();
            let persona = SyntheticAnnotator::new(id.clone(), 0.25 * world.range(), "crowd").unwrap();
            let mut served = Vec::new();
            let (mut accepted, mut dups, mut failures) = (0, 0, Vec::new());
            loop {
                let (status, next) =
                    app.call("GET", &format!("/projects/{project}/tasks/next?annotator={id}"), None).await;
                assert_eq!(status, StatusCode::OK);
                if next["status"] == "none_remaining" {
                    break;
                }
                if next["status"] == "all_reserved" {
                    tokio::time::sleep(std::time::Duration::from_millis(2)).await;
                    continue;
                }
                let t = next["task"]["task_index"].as_u64().unwrap() as usize;
                served.push(t);
                let ids: Vec<String> =
                    next["task"]["items"].as_array().unwrap().iter().map(|i| i["id"].as_str().unwrap().into()).collect();
                let v = simulate_vote(&world, &persona, t, &ids, (p as u64) << 32 | t as u64).unwrap();
                let body = json!({"annotator_id": id, "task_index": t, "best": v.best, "worst": v.worst,
                                  "elapsed_seconds": v.elapsed_seconds});
                let uri = format!("/projects/{project}/votes");
                let (a, b) = tokio::join!(app.call("POST", &uri, Some(&body)), app.call("POST", &uri, Some(&body)));
                for (status, resp) in [a, b] {
                    match (status, resp["code"].as_str()) {
                        (StatusCode::CREATED, _) => accepted += 1,
                        (StatusCode::CONFLICT, Some("DUPLICATE_SUBMISSION")) => dups += 1,
                        _ => failures.push(format!("{status} {resp}")),
                    }
                }
            }
            (served, accepted, dups, failures)
        }));
    }
    let mut out = CrowdOutcome::default();
    for h in handles {
        let (served, accepted, dups, failures) = h.await.unwrap();
        out.served.push(served);
        out.accepted += accepted;
        out.duplicate_rejections += dups;
        out.other_failures.extend(failures);
    }
    out
}

/// (annotator, task) pairs in the on-disk vote log, with multiplicity.
pub fn logged_pairs(app: &TestApp, project: &str) -> BTreeMap<(String, usize), usize> {
    let text = std::fs::read_to_string(app.dir.path().join(project).join("votes.ndjson")).unwrap();
    let mut pairs = BTreeMap::new();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let key = (
            v["annotator_id"].as_str().unwrap().to_string(),
            v["task_index"].as_u64().unwrap() as usize,
        );
        *pairs.entry(key).or_insert(0) += 1;
    }
    pairs
}
