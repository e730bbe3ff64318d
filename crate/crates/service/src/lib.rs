//! Network front end for teleoperation sessions.
//!
//! Every connection owns one [`Session`] ticking at the configured session
//! rate. Clients speak line-delimited JSON, either over a raw TCP socket or as
//! WebSocket text messages on `/ws`; the HTTP listener also serves a static
//! asset directory for browser clients.
//!
//! Client input is forwarded to the session task over a channel, and frames
//! leave through a bounded queue. When a client reads too slowly the queue
//! fills and new frames are dropped rather than delaying the tick, so the
//! ticks a client sees are increasing but may skip.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use nalgebra::Vector3;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{self, error::TrySendError};
use tokio::time::MissedTickBehavior;
use tower_http::services::ServeDir;

use softhaptic_core::teleop::{ClientMessage, ServerMessage, Session};
use softhaptic_core::Config;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] softhaptic_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Settings shared by every connection.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub config: Config,
    /// Seed for each session's plant noise; equal seeds give equal streams.
    pub seed: u64,
    /// Outgoing frames buffered per client before new ones are dropped.
    pub frame_buffer: usize,
}

impl ServiceConfig {
    pub fn new(config: Config, seed: u64) -> Self {
        Self {
            config,
            seed,
            frame_buffer: 32,
        }
    }
}

/// Counters reported when a session ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub ticks: u64,
    pub frames_sent: u64,
    pub frames_dropped: u64,
}

fn error_message(message: impl Into<String>) -> ServerMessage {
    ServerMessage::Error {
        message: message.into(),
    }
}

/// Ticks a session in real time until `incoming` closes or the client side of
/// `outgoing` goes away. The latest cursor position is held between ticks.
pub async fn run_session(
    config: &Config,
    seed: u64,
    mut incoming: mpsc::Receiver<ClientMessage>,
    outgoing: mpsc::Sender<ServerMessage>,
) -> Result<SessionStats, ServiceError> {
    let mut session = Session::from_config(config, seed)?;
    let mut cursor = session.state().cursor;
    let mut interval = tokio::time::interval(Duration::from_secs_f64(session.tick_period()));
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut stats = SessionStats::default();
    loop {
        tokio::select! {
            biased;
            msg = incoming.recv() => {
                let reply = match msg {
                    None => break,
                    Some(ClientMessage::Cursor { pos }) if pos.iter().all(|v| v.is_finite()) => {
                        cursor = Vector3::from(pos);
                        None
                    }
                    Some(ClientMessage::Cursor { .. }) => Some(error_message("cursor must be finite")),
                    Some(ClientMessage::Reset) => session.reset().err().map(|e| error_message(e.to_string())),
                    Some(ClientMessage::Config { scene }) => {
                        session.set_scene(scene).err().map(|e| error_message(e.to_string()))
                    }
                };
                if let Some(reply) = reply {
                    if let Err(TrySendError::Closed(_)) = outgoing.try_send(reply) {
                        break;
                    }
                }
            }
            _ = interval.tick() => {
                session.tick(cursor)?;
                stats.ticks += 1;
                match outgoing.try_send(ServerMessage::State(session.frame())) {
                    Ok(()) => stats.frames_sent += 1,
                    Err(TrySendError::Full(_)) => stats.frames_dropped += 1,
                    Err(TrySendError::Closed(_)) => break,
                }
            }
        }
    }
    Ok(stats)
}

/// Parses one input line, forwarding messages to the session and parse
/// errors back to the client. Returns false once the session has gone.
async fn dispatch_line(
    line: &str,
    to_session: &mpsc::Sender<ClientMessage>,
    to_client: &mpsc::Sender<ServerMessage>,
) -> bool {
    if line.trim().is_empty() {
        return true;
    }
    match ClientMessage::parse(line) {
        Ok(msg) => to_session.send(msg).await.is_ok(),
        Err(e) => {
            let _ = to_client.try_send(error_message(format!("bad message: {e}")));
            true
        }
    }
}

fn spawn_session(
    svc: &ServiceConfig,
) -> (
    mpsc::Sender<ClientMessage>,
    mpsc::Sender<ServerMessage>,
    mpsc::Receiver<ServerMessage>,
) {
    let (in_tx, in_rx) = mpsc::channel(64);
    let (out_tx, out_rx) = mpsc::channel(svc.frame_buffer.max(1));
    let config = svc.config.clone();
    let seed = svc.seed;
    let session_out = out_tx.clone();
    tokio::spawn(async move {
        match run_session(&config, seed, in_rx, session_out).await {
            Ok(stats) => tracing::debug!(?stats, "session closed"),
            Err(e) => tracing::warn!(error = %e, "session failed"),
        }
    });
    (in_tx, out_tx, out_rx)
}

async fn handle_tcp(stream: TcpStream, svc: Arc<ServiceConfig>) {
    let (read, mut write) = stream.into_split();
    let (in_tx, out_tx, mut out_rx) = spawn_session(&svc);
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let Ok(mut line) = serde_json::to_string(&msg) else {
                continue;
            };
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        if !dispatch_line(&line, &in_tx, &out_tx).await {
            break;
        }
    }
    drop(in_tx);
    drop(out_tx);
    let _ = writer.await;
}

/// Accepts line-delimited JSON clients until the listener fails.
pub async fn serve_tcp(listener: TcpListener, svc: Arc<ServiceConfig>) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        tracing::info!(%peer, "tcp client connected");
        let _ = stream.set_nodelay(true);
        tokio::spawn(handle_tcp(stream, svc.clone()));
    }
}

async fn handle_ws(socket: WebSocket, svc: Arc<ServiceConfig>) {
    let (mut sink, mut stream) = socket.split();
    let (in_tx, out_tx, mut out_rx) = spawn_session(&svc);
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let Ok(text) = serde_json::to_string(&msg) else {
                continue;
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    'recv: while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => {
                for line in text.as_str().lines() {
                    if !dispatch_line(line, &in_tx, &out_tx).await {
                        break 'recv;
                    }
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    drop(in_tx);
    drop(out_tx);
    let _ = writer.await;
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(svc): State<Arc<ServiceConfig>>) -> Response {
    ws.on_upgrade(move |socket| handle_ws(socket, svc))
}

/// `/ws` for sessions, `/health` for probes, and `assets` (when given) for
/// everything else.
pub fn router(svc: Arc<ServiceConfig>, assets: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(svc);
    match assets {
        Some(dir) => router.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => router,
    }
}

pub async fn serve_http(
    listener: TcpListener,
    svc: Arc<ServiceConfig>,
    assets: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(svc, assets)).await
}

/// Binds both listeners; the returned addresses reflect any port 0 request.
pub struct Listeners {
    pub http: TcpListener,
    pub tcp: TcpListener,
}

impl Listeners {
    pub async fn bind(http: SocketAddr, tcp: SocketAddr) -> std::io::Result<Self> {
        Ok(Self {
            http: TcpListener::bind(http).await?,
            tcp: TcpListener::bind(tcp).await?,
        })
    }

    pub fn local_addrs(&self) -> std::io::Result<(SocketAddr, SocketAddr)> {
        Ok((self.http.local_addr()?, self.tcp.local_addr()?))
    }
}

/// Runs the HTTP/WebSocket and TCP front ends until either fails.
pub async fn serve(
    listeners: Listeners,
    svc: ServiceConfig,
    assets: Option<PathBuf>,
) -> Result<(), ServiceError> {
    let svc = Arc::new(svc);
    tokio::try_join!(
        serve_http(listeners.http, svc.clone(), assets),
        serve_tcp(listeners.tcp, svc),
    )?;
    Ok(())
}
