//! Evaluation of manifests against chat-completions endpoints, with a
//! content-addressed response cache, bounded concurrency, and synthetic
//! oracle responders for offline runs.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ForgeError, Result};
use crate::game::{standard_winner, GameState, Provenance, Target};
use crate::manifest::{Manifest, ManifestRow};
use crate::prompt::{
    assemble_message, full_prompt_text, AliasSpec, MessagePart, PromptFamily, ResponseVariant,
};
use crate::render::{ascii_board, RenderedAsset};

pub const MAX_HTTP_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; `None`
    /// sends no Authorization header (local servers).
    pub auth_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub concurrency: usize,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// Set when temperature/max_tokens were overridden away from the
    /// canonical 0 / 1024; such results are not comparable.
    pub non_canonical: bool,
}

impl EndpointConfig {
    pub fn new(base_url: &str, model: &str) -> EndpointConfig {
        EndpointConfig {
            base_url: base_url.to_string(),
            model: model.to_string(),
            auth_env: Some("FORGE_API_KEY".to_string()),
            temperature: 0.0,
            max_tokens: 1024,
            timeout_secs: 120,
            concurrency: 8,
            max_attempts: MAX_HTTP_ATTEMPTS,
            backoff_base_ms: 500,
            non_canonical: false,
        }
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(
            format!(
                "{}|{}|{}|{}",
                self.base_url, self.model, self.temperature, self.max_tokens
            )
            .as_bytes(),
        );
        let d = h.finalize();
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub example_id: String,
    pub raw_text: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub endpoint_digest: String,
    pub manifest_digest: String,
    pub timestamp_ms: u64,
    /// Present when all attempts failed; such records score invalid.
    pub error: Option<String>,
}

/// Anything that can answer one manifest row.
pub trait Responder: Sync {
    /// Stable identity used in cache keys.
    fn digest(&self) -> String;
    fn respond(&self, row: &ManifestRow, parts: &[MessagePart]) -> std::result::Result<String, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Perfect,
    Fixated,
    UniformRandom(u64),
}

impl OracleKind {
    pub fn parse(s: &str) -> Result<OracleKind> {
        if s == "perfect" {
            Ok(OracleKind::Perfect)
        } else if s == "fixated" {
            Ok(OracleKind::Fixated)
        } else if let Some(seed) = s.strip_prefix("random:") {
            let seed = seed
                .parse()
                .map_err(|_| ForgeError::InvalidArgument(format!("bad random seed in {s:?}")))?;
            Ok(OracleKind::UniformRandom(seed))
        } else {
            Err(ForgeError::InvalidArgument(format!(
                "unknown oracle {s:?}; expected perfect, fixated, or random:SEED"
            )))
        }
    }
}

/// Synthetic endpoint answering from board state instead of a model.
pub struct OracleResponder {
    pub kind: OracleKind,
}

pub fn oracle_responder(kind: OracleKind) -> OracleResponder {
    OracleResponder { kind }
}

fn format_answer(variant: ResponseVariant, label: &str) -> String {
    match variant {
        ResponseVariant::Direct => label.to_string(),
        ResponseVariant::Cot => format!(
            "The rules determine the outcome directly from the final board. \\boxed{{{label}}}"
        ),
    }
}

impl Responder for OracleResponder {
    fn digest(&self) -> String {
        match self.kind {
            OracleKind::Perfect => "oracle:perfect".to_string(),
            OracleKind::Fixated => "oracle:fixated".to_string(),
            OracleKind::UniformRandom(seed) => format!("oracle:random:{seed}"),
        }
    }

    fn respond(&self, row: &ManifestRow, _parts: &[MessagePart]) -> std::result::Result<String, String> {
        let label = match self.kind {
            OracleKind::Perfect => row.spec.ground_truth.as_str().to_string(),
            OracleKind::Fixated => {
                // Applies standard-rule board semantics regardless of the
                // stated rule: the named target resolves against the
                // standard outcome.
                let cells = GameState::cells_from_text(row.spec.game, &row.cells)
                    .map_err(|e| e.to_string())?;
                let state = GameState {
                    game: row.spec.game,
                    cells,
                    provenance: Provenance::Assignment,
                    state_id: row.spec.state_id.clone(),
                };
                let std_win = standard_winner(&state).map_err(|e| e.to_string())?;
                let player = match row.spec.target {
                    Target::Winner => std_win,
                    Target::Loser => std_win.other(),
                };
                row.spec.game.label_for(player).as_str().to_string()
            }
            OracleKind::UniformRandom(seed) => {
                // Per-example hash keeps the pick independent of scheduling.
                let mut h = Sha256::new();
                h.update(seed.to_le_bytes());
                h.update(row.spec.example_id.as_bytes());
                let d = h.finalize();
                let (a, b) = row.spec.labels;
                if d[0] & 1 == 0 { a.as_str().to_string() } else { b.as_str().to_string() }
            }
        };
        Ok(format_answer(row.spec.variant, &label))
    }
}

/// OpenAI-compatible chat-completions responder.
pub struct HttpResponder {
    pub config: EndpointConfig,
    client: reqwest::blocking::Client,
    auth: Option<String>,
}

impl HttpResponder {
    pub fn new(config: EndpointConfig) -> Result<HttpResponder> {
        let auth = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ForgeError::Config(format!("auth environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ForgeError::Endpoint(e.to_string()))?;
        Ok(HttpResponder { config, client, auth })
    }

    fn request_body(&self, parts: &[MessagePart]) -> serde_json::Value {
        let content: Vec<serde_json::Value> = parts
            .iter()
            .map(|p| match p {
                MessagePart::Text(t) => serde_json::json!({"type": "text", "text": t}),
                MessagePart::Image(png) => {
                    let b64 = base64::engine::general_purpose::STANDARD.encode(png);
                    serde_json::json!({
                        "type": "image_url",
                        "image_url": {"url": format!("data:image/png;base64,{b64}")}
                    })
                }
            })
            .collect();
        serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "messages": [{"role": "user", "content": content}],
        })
    }
}

impl Responder for HttpResponder {
    fn digest(&self) -> String {
        self.config.digest()
    }

    fn respond(&self, _row: &ManifestRow, parts: &[MessagePart]) -> std::result::Result<String, String> {
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let body = self.request_body(parts);
        let mut last_err = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(
                    self.config.backoff_base_ms << (attempt - 1),
                ));
            }
            let mut req = self.client.post(&url).json(&body);
            if let Some(token) = &self.auth {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let v: serde_json::Value = match resp.json() {
                        Ok(v) => v,
                        Err(e) => {
                            last_err = format!("bad json: {e}");
                            continue;
                        }
                    };
                    match v["choices"][0]["message"]["content"].as_str() {
                        Some(text) => return Ok(text.to_string()),
                        None => {
                            last_err = "missing choices[0].message.content".to_string();
                            continue;
                        }
                    }
                }
                Ok(resp) => last_err = format!("http {}", resp.status()),
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(last_err)
    }
}

/// Build the ordered message parts for one row. Image bytes come from
/// `assets_root` when given; otherwise image parts carry empty bytes, which
/// oracle responders never read.
pub fn build_parts(
    row: &ManifestRow,
    alias: &AliasSpec,
    assets_root: Option<&Path>,
) -> Result<Vec<MessagePart>> {
    let ascii = if row.spec.family == PromptFamily::TextOnly {
        let cells = GameState::cells_from_text(row.spec.game, &row.cells)?;
        let state = GameState {
            game: row.spec.game,
            cells,
            provenance: Provenance::Assignment,
            state_id: row.spec.state_id.clone(),
        };
        Some(ascii_board(&state))
    } else {
        None
    };
    let text = full_prompt_text(&row.spec, alias, ascii.as_deref())?;
    if row.spec.family == PromptFamily::TextOnly {
        return assemble_message(&row.spec, text, None);
    }
    let png = match (&row.asset_path, assets_root) {
        (Some(rel), Some(root)) => std::fs::read(root.join(rel))?,
        _ => Vec::new(),
    };
    let asset = RenderedAsset {
        state_id: row.spec.state_id.clone(),
        style: row.spec.style,
        px: 0,
        png,
        content_hash: String::new(),
    };
    assemble_message(&row.spec, text, Some(&asset))
}

fn record_path(run_dir: &Path, example_id: &str) -> PathBuf {
    run_dir.join("records").join(format!("{example_id}.json"))
}

fn load_cached(
    run_dir: &Path,
    example_id: &str,
    endpoint_digest: &str,
    manifest_digest: &str,
) -> Option<EvalRecord> {
    let path = record_path(run_dir, example_id);
    let bytes = std::fs::read(&path).ok()?;
    let rec: EvalRecord = serde_json::from_slice(&bytes).ok()?;
    (rec.endpoint_digest == endpoint_digest && rec.manifest_digest == manifest_digest)
        .then_some(rec)
}

fn store_record(run_dir: &Path, rec: &EvalRecord) -> Result<()> {
    let path = record_path(run_dir, &rec.example_id);
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(rec)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

pub struct RunReport {
    pub records: Vec<EvalRecord>,
    pub cache_hits: usize,
    pub network_calls: usize,
}

/// Evaluate every manifest row, reading completed answers from the cache
/// and fanning the rest out over a bounded worker pool. The returned
/// records follow manifest order.
pub fn run_manifest(
    manifest: &Manifest,
    responder: &dyn Responder,
    run_dir: &Path,
    assets_root: Option<&Path>,
    concurrency: usize,
) -> Result<RunReport> {
    std::fs::create_dir_all(run_dir.join("records"))?;
    let alias = AliasSpec::default_for(manifest.header.game);
    let endpoint_digest = responder.digest();
    let manifest_digest = manifest.digest().to_string();

    let mut records: Vec<Option<EvalRecord>> = vec![None; manifest.rows.len()];
    let mut pending: VecDeque<usize> = VecDeque::new();
    let mut cache_hits = 0;
    for (i, row) in manifest.rows.iter().enumerate() {
        match load_cached(run_dir, &row.spec.example_id, &endpoint_digest, &manifest_digest) {
            Some(rec) => {
                records[i] = Some(rec);
                cache_hits += 1;
            }
            None => pending.push_back(i),
        }
    }

    let network_calls = pending.len();
    let queue = Mutex::new(pending);
    let results: Mutex<Vec<(usize, EvalRecord)>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<ForgeError>> = Mutex::new(None);
    let workers = concurrency.max(1).min(manifest.rows.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = match queue.lock().unwrap().pop_front() {
                    Some(i) => i,
                    None => break,
                };
                let row = &manifest.rows[idx];
                let start = Instant::now();
                let outcome = build_parts(row, &alias, assets_root)
                    .map_err(|e| e.to_string())
                    .and_then(|parts| responder.respond(row, &parts));
                let latency_ms = start.elapsed().as_millis() as u64;
                let timestamp_ms = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0);
                let rec = match outcome {
                    Ok(text) => EvalRecord {
                        example_id: row.spec.example_id.clone(),
                        raw_text: text,
                        latency_ms,
                        attempts: 1,
                        endpoint_digest: endpoint_digest.clone(),
                        manifest_digest: manifest_digest.clone(),
                        timestamp_ms,
                        error: None,
                    },
                    Err(msg) => EvalRecord {
                        example_id: row.spec.example_id.clone(),
                        raw_text: String::new(),
                        latency_ms,
                        attempts: MAX_HTTP_ATTEMPTS,
                        endpoint_digest: endpoint_digest.clone(),
                        manifest_digest: manifest_digest.clone(),
                        timestamp_ms,
                        error: Some(msg),
                    },
                };
                if let Err(e) = store_record(run_dir, &rec) {
                    *failure.lock().unwrap() = Some(e);
                    break;
                }
                results.lock().unwrap().push((idx, rec));
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    for (idx, rec) in results.into_inner().unwrap() {
        records[idx] = Some(rec);
    }

    let records: Vec<EvalRecord> = records.into_iter().map(|r| r.unwrap()).collect();
    append_index(run_dir, &records)?;
    Ok(RunReport { records, cache_hits, network_calls })
}

/// Append-only index of completed example ids, for quick resume inspection.
fn append_index(run_dir: &Path, records: &[EvalRecord]) -> Result<()> {
    use std::io::Write;
    let mut seen = std::collections::BTreeSet::new();
    let index_path = run_dir.join("index.txt");
    if let Ok(text) = std::fs::read_to_string(&index_path) {
        seen.extend(text.lines().map(|l| l.to_string()));
    }
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&index_path)?;
    for rec in records {
        if !seen.contains(&rec.example_id) {
            writeln!(f, "{}", rec.example_id)?;
        }
    }
    Ok(())
}

/// Load all records for a finished run, erroring with the missing ids if the
/// run is partial over the manifest.
pub fn load_run(run_dir: &Path, manifest: &Manifest) -> Result<Vec<EvalRecord>> {
    let mut records = Vec::with_capacity(manifest.rows.len());
    let mut missing = Vec::new();
    for row in &manifest.rows {
        let path = record_path(run_dir, &row.spec.example_id);
        match std::fs::read(&path) {
            Ok(bytes) => records.push(serde_json::from_slice(&bytes)?),
            Err(_) => missing.push(row.spec.example_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(ForgeError::PartialRun {
            missing: missing.len(),
            first: missing[0].clone(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Game;
    use crate::manifest::{expand, Config};
    use crate::render::RenderStyle;
    use crate::sampler::{sample_game, SamplerConfig};
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

    fn pool(game: Game) -> crate::sampler::StatePool {
        let cfg = SamplerConfig { seed: 5, n_states: 12, ttt_quotas: Some([4, 4, 2, 2]) };
        sample_game(game, &cfg).unwrap()
    }

    fn base_manifest(game: Game, variant: ResponseVariant) -> Manifest {
        expand(
            &pool(game),
            Config { family: PromptFamily::Base, style: RenderStyle::Base },
            variant,
        )
        .unwrap()
    }

    #[test]
    fn oracle_runs_are_deterministic_and_cached() {
        let m = base_manifest(Game::TicTacToe, ResponseVariant::Direct);
        let dir = tempfile::tempdir().unwrap();
        let resp = oracle_responder(OracleKind::Fixated);
        let a = run_manifest(&m, &resp, dir.path(), None, 4).unwrap();
        assert_eq!(a.records.len(), m.rows.len());
        assert_eq!(a.cache_hits, 0);
        // Re-running a completed manifest touches only the cache.
        let b = run_manifest(&m, &resp, dir.path(), None, 4).unwrap();
        assert_eq!(b.network_calls, 0);
        assert_eq!(b.cache_hits, m.rows.len());
        let texts = |r: &RunReport| -> Vec<(String, String)> {
            r.records
                .iter()
                .map(|x| (x.example_id.clone(), x.raw_text.clone()))
                .collect()
        };
        assert_eq!(texts(&a), texts(&b));
        // A fresh run directory reproduces the same answer set.
        let dir2 = tempfile::tempdir().unwrap();
        let c = run_manifest(&m, &resp, dir2.path(), None, 1).unwrap();
        assert_eq!(texts(&a), texts(&c));
    }

    #[test]
    fn resume_completes_partial_runs() {
        let m = base_manifest(Game::Reversi, ResponseVariant::Direct);
        let dir = tempfile::tempdir().unwrap();
        let resp = oracle_responder(OracleKind::Perfect);
        run_manifest(&m, &resp, dir.path(), None, 2).unwrap();
        // Simulate an interruption by deleting some cached records.
        for row in m.rows.iter().step_by(3) {
            std::fs::remove_file(record_path(dir.path(), &row.spec.example_id)).unwrap();
        }
        assert!(load_run(dir.path(), &m).is_err());
        let r = run_manifest(&m, &resp, dir.path(), None, 2).unwrap();
        assert_eq!(r.records.len(), m.rows.len());
        assert!(r.network_calls > 0 && r.cache_hits > 0);
        let loaded = load_run(dir.path(), &m).unwrap();
        assert_eq!(loaded.len(), m.rows.len());
    }

    #[test]
    fn perfect_oracle_answers_ground_truth() {
        for variant in ResponseVariant::BOTH {
            let m = base_manifest(Game::ConnectFour, variant);
            let dir = tempfile::tempdir().unwrap();
            let r = run_manifest(&m, &oracle_responder(OracleKind::Perfect), dir.path(), None, 4)
                .unwrap();
            for (rec, row) in r.records.iter().zip(&m.rows) {
                assert_eq!(rec.example_id, row.spec.example_id);
                assert!(rec.raw_text.contains(row.spec.ground_truth.as_str()));
                if variant == ResponseVariant::Cot {
                    assert!(rec.raw_text.contains("\\boxed{"));
                }
            }
        }
    }

    #[test]
    fn fixated_oracle_is_right_on_standard_wrong_on_inverse() {
        let m = base_manifest(Game::DotsAndBoxes, ResponseVariant::Direct);
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(&m, &oracle_responder(OracleKind::Fixated), dir.path(), None, 4)
            .unwrap();
        for (rec, row) in r.records.iter().zip(&m.rows) {
            let correct = rec.raw_text == row.spec.ground_truth.as_str();
            match row.spec.rule {
                crate::game::RuleCondition::Standard => assert!(correct),
                crate::game::RuleCondition::Inverse => assert!(!correct),
            }
        }
    }

    struct InstrumentedResponder {
        current: AtomicUsize,
        max_seen: AtomicUsize,
    }

    impl Responder for InstrumentedResponder {
        fn digest(&self) -> String {
            "instrumented".to_string()
        }
        fn respond(&self, row: &ManifestRow, _parts: &[MessagePart]) -> std::result::Result<String, String> {
            let now = self.current.fetch_add(1, AtomicOrdering::SeqCst) + 1;
            self.max_seen.fetch_max(now, AtomicOrdering::SeqCst);
            std::thread::sleep(Duration::from_millis(3));
            self.current.fetch_sub(1, AtomicOrdering::SeqCst);
            Ok(row.spec.labels.0.as_str().to_string())
        }
    }

    #[test]
    fn concurrency_is_bounded() {
        let m = base_manifest(Game::TicTacToe, ResponseVariant::Direct);
        let resp = InstrumentedResponder {
            current: AtomicUsize::new(0),
            max_seen: AtomicUsize::new(0),
        };
        let dir = tempfile::tempdir().unwrap();
        run_manifest(&m, &resp, dir.path(), None, 3).unwrap();
        let max = resp.max_seen.load(AtomicOrdering::SeqCst);
        assert!(max <= 3, "saw {max} in-flight requests with limit 3");
        assert!(max >= 2, "pool never ran concurrently");
    }

    #[test]
    fn http_responder_round_trip_and_error_marker() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            // Serve exactly two requests: one success, one failure.
            for i in 0..2 {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut tmp = [0u8; 4096];
                let body_len;
                loop {
                    let n = stream.read(&mut tmp).unwrap();
                    buf.extend_from_slice(&tmp[..n]);
                    if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        let head = String::from_utf8_lossy(&buf[..pos]).to_string();
                        let cl = head
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        while buf.len() < pos + 4 + cl {
                            let n = stream.read(&mut tmp).unwrap();
                            buf.extend_from_slice(&tmp[..n]);
                        }
                        body_len = cl;
                        let body: serde_json::Value =
                            serde_json::from_slice(&buf[pos + 4..pos + 4 + cl]).unwrap();
                        assert_eq!(body["temperature"], 0.0);
                        assert_eq!(body["max_tokens"], 1024);
                        let content = &body["messages"][0]["content"];
                        assert!(content.as_array().unwrap().iter().any(|p| p["type"] == "text"));
                        break;
                    }
                }
                let _ = body_len;
                let resp_body = if i == 0 {
                    serde_json::json!({
                        "choices": [{"message": {"role": "assistant", "content": "X"}}]
                    })
                    .to_string()
                } else {
                    String::new()
                };
                let status = if i == 0 { "200 OK" } else { "500 Internal Server Error" };
                let resp = format!(
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{resp_body}",
                    resp_body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });

        let mut cfg = EndpointConfig::new(&format!("http://{addr}/v1"), "test-model");
        cfg.auth_env = None;
        cfg.max_attempts = 1;
        cfg.backoff_base_ms = 1;
        let resp = HttpResponder::new(cfg).unwrap();
        let m = base_manifest(Game::TicTacToe, ResponseVariant::Direct);
        let row = &m.rows[0];
        let alias = AliasSpec::default_for(Game::TicTacToe);
        let parts = build_parts(row, &alias, None).unwrap();
        assert_eq!(resp.respond(row, &parts).unwrap(), "X");
        let err = resp.respond(row, &parts).unwrap_err();
        assert!(err.contains("500"), "unexpected error: {err}");
        handle.join().unwrap();
    }

    #[test]
    fn auth_env_missing_is_startup_error() {
        let cfg = EndpointConfig {
            auth_env: Some("FORGE_TEST_SURELY_UNSET_VAR".to_string()),
            ..EndpointConfig::new("http://localhost:1", "m")
        };
        assert!(matches!(HttpResponder::new(cfg), Err(ForgeError::Config(_))));
    }

    #[test]
    fn random_oracle_is_near_half_accuracy() {
        let cfg = SamplerConfig { seed: 5, n_states: 150, ttt_quotas: Some([50, 50, 25, 25]) };
        let pool = sample_game(Game::TicTacToe, &cfg).unwrap();
        let m = expand(
            &pool,
            Config { family: PromptFamily::Base, style: RenderStyle::Base },
            ResponseVariant::Direct,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(
            &m,
            &oracle_responder(OracleKind::UniformRandom(9)),
            dir.path(),
            None,
            8,
        )
        .unwrap();
        let n = m.rows.len() as f64;
        let correct = r
            .records
            .iter()
            .zip(&m.rows)
            .filter(|(rec, row)| rec.raw_text == row.spec.ground_truth.as_str())
            .count() as f64;
        let acc = correct / n;
        let sigma = 0.5 / n.sqrt();
        assert!((acc - 0.5).abs() < 3.0 * sigma, "accuracy {acc} outside 3 sigma");
    }
}
