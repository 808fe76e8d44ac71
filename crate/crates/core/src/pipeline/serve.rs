//! Read-only HTTP host for the UI bundle and the generated report JSONs.
//!
//! Routes:
//! - `GET /reports/` lists the `*.json` files of the reports directory.
//! - `GET /reports/<name>.json` returns one of them.
//! - any other `GET` path is served from the UI directory (`/` → `index.html`).

use std::fs;
use std::path::{Component, Path, PathBuf};
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Response, Server};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    fn text(status: u16, msg: &str) -> Self {
        Self {
            status,
            content_type: "text/plain; charset=utf-8",
            body: msg.as_bytes().to_vec(),
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" | "csv" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Joins a URL path under `root`, refusing anything that could escape it.
fn safe_join(root: &Path, url_path: &str) -> Option<PathBuf> {
    let rel = Path::new(url_path.trim_start_matches('/'));
    let mut out = root.to_path_buf();
    for c in rel.components() {
        match c {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(out)
}

fn read_file(path: &Path) -> Reply {
    match fs::read(path) {
        Ok(body) => Reply {
            status: 200,
            content_type: content_type(path),
            body,
        },
        Err(_) => Reply::text(404, "not found"),
    }
}

fn list_reports(dir: &Path) -> Reply {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|n| n.ends_with(".json"))
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    Reply {
        status: 200,
        content_type: "application/json",
        body: serde_json::to_vec(&names).expect("string list serializes"),
    }
}

/// Answers one request without touching the network.
pub fn respond(method: &str, url: &str, ui_dir: &Path, reports_dir: &Path) -> Reply {
    if method != "GET" && method != "HEAD" {
        return Reply::text(405, "method not allowed");
    }
    let path = url.split(['?', '#']).next().unwrap_or("/");
    if path.contains('\\') || path.contains('\0') {
        return Reply::text(400, "bad path");
    }
    if path == "/reports" || path == "/reports/" {
        return list_reports(reports_dir);
    }
    if let Some(name) = path.strip_prefix("/reports/") {
        if name.contains('/') || !name.ends_with(".json") {
            return Reply::text(404, "not found");
        }
        return match safe_join(reports_dir, name) {
            Some(p) => read_file(&p),
            None => Reply::text(400, "bad path"),
        };
    }
    let Some(mut target) = safe_join(ui_dir, path) else {
        return Reply::text(400, "bad path");
    };
    if path.ends_with('/') || target.is_dir() {
        target.push("index.html");
    }
    read_file(&target)
}

/// A running server; dropping the handle does not stop it, call `shutdown`.
pub struct ServeHandle {
    server: std::sync::Arc<Server>,
    thread: Option<JoinHandle<()>>,
    pub addr: std::net::SocketAddr,
}

impl ServeHandle {
    pub fn shutdown(mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the server thread exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `host:port` (port 0 picks a free one) and serves on a background thread.
pub fn start(host: &str, port: u16, ui_dir: &Path, reports_dir: &Path) -> Result<ServeHandle> {
    let server = Server::http((host, port))
        .map_err(|e| Error::InvalidArgument(format!("cannot bind {host}:{port}: {e}")))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::InvalidArgument("server is not bound to an IP address".into()))?;
    let server = std::sync::Arc::new(server);
    let (ui, reports) = (ui_dir.to_path_buf(), reports_dir.to_path_buf());
    let worker = server.clone();
    let thread = std::thread::spawn(move || {
        for request in worker.incoming_requests() {
            let method = match request.method() {
                Method::Get => "GET",
                Method::Head => "HEAD",
                _ => "OTHER",
            };
            let reply = respond(method, request.url(), &ui, &reports);
            log::debug!("{method} {} -> {}", request.url(), reply.status);
            let header = Header::from_bytes("Content-Type", reply.content_type).expect("static header");
            let response = Response::from_data(reply.body)
                .with_status_code(reply.status)
                .with_header(header);
            if let Err(e) = request.respond(response) {
                log::warn!("failed to send response: {e}");
            }
        }
    });
    Ok(ServeHandle {
        server,
        thread: Some(thread),
        addr,
    })
}
