//! WebSocket service: `GET /session/{id}` upgrades to the JSON protocol.
//!
//! Each session lives on its own task that owns the [`Session`]. Client
//! messages reach it through an ordered queue and are applied between ticks;
//! frames fan out through a broadcast channel.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use demoforge_core::env::TaskConfig;
use futures::{SinkExt, StreamExt};
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::config::{ConfigError, ServerConfig};
use crate::protocol::{parse_client, ClientMessage, ServerMessage};
use crate::session::Session;

const BROADCAST_CAPACITY: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

enum Command {
    Join {
        reply: oneshot::Sender<(Vec<String>, broadcast::Receiver<Arc<str>>)>,
    },
    Message {
        msg: ClientMessage,
        reply: mpsc::UnboundedSender<String>,
    },
}

#[derive(Clone)]
struct AppState {
    cfg: ServerConfig,
    task: TaskConfig,
    sessions: Arc<Mutex<HashMap<String, mpsc::UnboundedSender<Command>>>>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<mpsc::UnboundedSender<Command>, String> {
        let mut sessions = self.sessions.lock().expect("session map lock");
        if let Some(tx) = sessions.get(id) {
            if !tx.is_closed() {
                return Ok(tx.clone());
            }
        }
        let session = Session::new(
            id,
            self.cfg.task,
            self.cfg.clone(),
            self.task.dt,
            self.task.temperature,
            self.task.gamma,
        )
        .map_err(|e| e.to_string())?;
        let (tx, rx) = mpsc::unbounded_channel();
        tokio::spawn(run_session(session, rx));
        sessions.insert(id.to_string(), tx.clone());
        Ok(tx)
    }
}

async fn run_session(mut session: Session, mut rx: mpsc::UnboundedReceiver<Command>) {
    let (frames, _) = broadcast::channel::<Arc<str>>(BROADCAST_CAPACITY);
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(session.tick_ms() / 1000.0));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let send_all = |msgs: Vec<ServerMessage>| {
        for m in msgs {
            // no subscribers is fine
            let _ = frames.send(Arc::from(m.to_json()));
        }
    };
    loop {
        tokio::select! {
            // queued commands go first so they land before the next integrator step
            biased;
            cmd = rx.recv() => match cmd {
                None => break,
                Some(Command::Join { reply }) => {
                    let greeting = session.greeting().iter().map(ServerMessage::to_json).collect();
                    let _ = reply.send((greeting, frames.subscribe()));
                }
                Some(Command::Message { msg, reply }) => {
                    let out = session.handle(msg);
                    for m in out.reply {
                        let _ = reply.send(m.to_json());
                    }
                    send_all(out.broadcast);
                }
            },
            _ = ticker.tick() => send_all(session.tick()),
        }
    }
}

async fn ws_handler(
    ws: WebSocketUpgrade,
    Path(id): Path<String>,
    State(state): State<AppState>,
) -> Response {
    ws.on_upgrade(move |socket| client(socket, id, state))
}

async fn client(socket: WebSocket, id: String, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let session = match state.session(&id) {
        Ok(tx) => tx,
        Err(e) => {
            let _ = sink
                .send(Message::Text(
                    ServerMessage::error("session_error", e).to_json().into(),
                ))
                .await;
            return;
        }
    };
    let (join_tx, join_rx) = oneshot::channel();
    if session.send(Command::Join { reply: join_tx }).is_err() {
        return;
    }
    let Ok((greeting, mut frames)) = join_rx.await else {
        return;
    };
    for g in greeting {
        if sink.send(Message::Text(g.into())).await.is_err() {
            return;
        }
    }
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<String>();
    loop {
        let outgoing: String = tokio::select! {
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => match parse_client(&text) {
                    Ok(msg) => {
                        if session.send(Command::Message { msg, reply: reply_tx.clone() }).is_err() {
                            return;
                        }
                        continue;
                    }
                    Err(err) => err.to_json(),
                },
                Some(Ok(Message::Binary(_))) => {
                    ServerMessage::error(crate::protocol::codes::BAD_MESSAGE, "binary messages are not supported").to_json()
                }
                Some(Ok(_)) => continue,
                Some(Err(_)) | None => return,
            },
            reply = reply_rx.recv() => match reply {
                Some(r) => r,
                None => return,
            },
            frame = frames.recv() => match frame {
                Ok(f) => f.to_string(),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return,
            },
        };
        if sink.send(Message::Text(outgoing.into())).await.is_err() {
            return;
        }
    }
}

pub fn router(cfg: ServerConfig, task: TaskConfig) -> Router {
    let state = AppState {
        cfg,
        task,
        sessions: Arc::default(),
    };
    Router::new()
        .route("/session/{id}", get(ws_handler))
        .with_state(state)
}

/// A bound server; dropping the handle does not stop it.
pub struct Server {
    pub addr: SocketAddr,
    listener: tokio::net::TcpListener,
    app: Router,
}

impl Server {
    pub async fn bind(cfg: ServerConfig, task: TaskConfig) -> Result<Self, ServeError> {
        cfg.validate()?;
        let addr = format!("{}:{}", cfg.host, cfg.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|source| ServeError::Bind {
                addr: addr.clone(),
                source,
            })?;
        Ok(Server {
            addr: listener.local_addr()?,
            listener,
            app: router(cfg, task),
        })
    }

    pub async fn run(self) -> Result<(), ServeError> {
        axum::serve(self.listener, self.app).await?;
        Ok(())
    }
}
