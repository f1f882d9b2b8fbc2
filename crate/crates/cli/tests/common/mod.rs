//! Helpers shared by the CLI test targets: a scripted chat-completions
//! server, synthetic samples and a runner for the binary.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};

use mergebench_core::extract::{render_conflict_text, MergeSample, Provenance};
use mergebench_core::llm::build_prompt;
use mergebench_core::Language;

pub fn strings(lines: &[&str]) -> Vec<String> {
    lines.iter().map(|s| s.to_string()).collect()
}

/// A small Java-like sample whose lines all carry `tag`.
pub fn sample(tag: usize, language: Language) -> MergeSample {
    let pre = vec![format!("class C{tag} {{"), format!("  int keep{tag} = {tag};")];
    let left = vec![format!("  int v{tag} = 1;")];
    let base = vec![format!("  int v{tag} = 0;")];
    let right = vec![format!("  int v{tag} = 2;"), format!("  int w{tag} = 2;")];
    let post = vec!["}".to_string()];
    MergeSample {
        id: format!("s{tag:05}"),
        language,
        conflict_text: render_conflict_text(&pre, &left, &base, &right, &post),
        ground_truth: vec![format!("  int v{tag} = 3;"), format!("  int w{tag} = 2;")],
        left,
        base,
        right,
        pre_context: pre,
        post_context: post,
        provenance: Provenance {
            repo_id: "synthetic".into(),
            merge_commit: format!("{tag:040x}"),
            path: format!("C{tag}.java"),
        },
    }
}

/// Model answer that reproduces the developer resolution with its context.
pub fn resolved_answer(s: &MergeSample) -> String {
    let body: Vec<&str> = s
        .pre_context
        .iter()
        .chain(&s.ground_truth)
        .chain(&s.post_context)
        .map(String::as_str)
        .collect();
    format!("```{}\n{}\n```", s.language.id(), body.join("\n"))
}

pub fn conflict_answer(s: &MergeSample) -> String {
    format!("```{}\n{}\n```", s.language.id(), s.conflict_text)
}

pub const PROSE_ANSWER: &str = "Both sides look reasonable; I would keep the newer value.";

/// Chat-completions server answering from a fixed prompt -> content table.
/// Every `fail_every`-th distinct prompt gets a 503 the first time it is
/// seen, so retries are exercised.
pub struct MockServer {
    pub base_url: String,
    pub hits: Arc<Mutex<usize>>,
}

pub fn spawn_mock(answers: HashMap<String, String>, fail_every: usize) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
    let answers = Arc::new(answers);
    let seen = Arc::new(Mutex::new(HashSet::new()));
    let hits = Arc::new(Mutex::new(0));
    let hits_out = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let (answers, seen, hits) = (answers.clone(), seen.clone(), hits.clone());
            std::thread::spawn(move || serve(stream, &answers, &seen, &hits, fail_every));
        }
    });
    MockServer { base_url, hits: hits_out }
}

fn serve(stream: TcpStream, answers: &HashMap<String, String>, seen: &Mutex<HashSet<String>>, hits: &Mutex<usize>, fail_every: usize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    *hits.lock().unwrap() += 1;
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap();
    let user = request["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str()).unwrap_or("").to_string();
    let (status, reply) = match answers.get(&user) {
        None => ("400 Bad Request", r#"{"error":"unknown prompt"}"#.to_string()),
        Some(content) => {
            let first_time = {
                let mut seen = seen.lock().unwrap();
                let n = seen.len();
                seen.insert(user.clone()).then_some(n)
            };
            match first_time {
                Some(n) if fail_every > 0 && n % fail_every == 0 => ("503 Service Unavailable", "{}".to_string()),
                _ => ("200 OK", serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()),
            }
        }
    };
    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
}

/// Prompt text the client sends for `s` with no system prompt.
pub fn prompt_of(s: &MergeSample) -> String {
    build_prompt(s, "").user_text
}

/// A base URL nothing listens on.
pub fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    format!("http://{}/v1", listener.local_addr().unwrap())
}

pub fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_merge-bench"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MERGEBENCH_CACHE_DIR")
        .env_remove("MERGEBENCH_API_KEY")
        .output()
        .expect("binary runs")
}
