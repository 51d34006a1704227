//! Starts the session API on an ephemeral port, runs a short audit against
//! it over HTTP, and shuts down.

use std::sync::Arc;

use diffsum::service::serve;
use diffsum::session::SessionStore;
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;

// Just enough HTTP/1.1 for a demo; real clients should use a library.
async fn request(
    addr: std::net::SocketAddr,
    method: &str,
    path: &str,
    body: Option<Value>,
) -> std::io::Result<(u16, Value)> {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let mut stream = TcpStream::connect(addr).await?;
    let head = format!(
        "{method} {path} HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).await?;
    stream.write_all(body.as_bytes()).await?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await?;
    let status = raw[9..12].parse().unwrap_or(0);
    let payload = raw.split_once("\r\n\r\n").map_or("", |(_, b)| b);
    Ok((status, serde_json::from_str(payload).unwrap_or(Value::Null)))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    let store = Arc::new(SessionStore::open(&dir)?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, store, None, async {
        let _ = stopped.await;
    }));

    let manifest: String = std::iter::once("ballot_id".into())
        .chain((0..50_000).map(|i| format!("b{i}")))
        .collect::<Vec<String>>()
        .join("\n");
    let (status, created) = request(
        addr,
        "POST",
        "/sessions",
        Some(json!({"n": 50000, "candidates": ["A", "B"], "delta": 2, "seed": 2024, "manifest_csv": manifest})),
    )
    .await?;
    println!("POST /sessions -> {status}, c = {}, risk {}", created["c"], created["risk_bound"]);
    let id = created["session_id"].as_str().ok_or("no session id")?.to_string();

    for (i, ballot) in created["planned_draws"].as_array().ok_or("no draws")?.iter().enumerate() {
        let label = if i < 4 { "B" } else { "A" };
        let (status, r) = request(
            addr,
            "POST",
            &format!("/sessions/{id}/interpretations"),
            Some(json!({"ballot_id": ballot, "interpretation": label})),
        )
        .await?;
        if i >= 20 {
            println!("{ballot} {label} -> {status} {}/{} {}", r["statistic"], r["threshold"], r["decision"]);
        }
    }
    let (_, view) = request(addr, "GET", &format!("/sessions/{id}"), None).await?;
    println!("status {} decision {}", view["status"], view["decision"]);

    let _ = stop.send(());
    server.await??;
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("diffsum-http-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
