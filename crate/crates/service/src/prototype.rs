//! TCP listener for prototype clients.
//!
//! Each connection gets a bounded frame queue drained by its own writer task.
//! Broadcasting only enqueues, so a stalled client never blocks a session; a
//! client whose queue is full, or whose write exceeds the timeout, is dropped.
//! Clients may send `ack` lines; end-of-stream from the client counts as a
//! disconnect.

use std::io;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use woz_core::protocol::{ClientId, ClientRegistry, FrameSink};
use woz_core::WireMessage;

const QUEUE_DEPTH: usize = 256;

pub struct ChannelSink {
    tx: mpsc::Sender<Arc<[u8]>>,
}

impl ChannelSink {
    pub fn new(tx: mpsc::Sender<Arc<[u8]>>) -> Self {
        Self { tx }
    }
}

impl FrameSink for ChannelSink {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        self.tx.try_send(Arc::from(frame)).map_err(|e| match e {
            mpsc::error::TrySendError::Full(_) => io::Error::new(io::ErrorKind::TimedOut, "client queue full"),
            mpsc::error::TrySendError::Closed(_) => io::Error::new(io::ErrorKind::BrokenPipe, "client disconnected"),
        })
    }
}

pub type PrototypeRegistry = Arc<Mutex<ClientRegistry<ChannelSink>>>;

pub async fn accept_loop(listener: TcpListener, registry: PrototypeRegistry, write_timeout: Duration) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                stream.set_nodelay(true).ok();
                let (tx, rx) = mpsc::channel(QUEUE_DEPTH);
                let id = registry.lock().expect("registry lock").add(ChannelSink::new(tx));
                tracing::info!(%peer, client = id.0, "prototype connected");
                tokio::spawn(serve_client(stream, rx, id, registry.clone(), write_timeout));
            }
            Err(e) => {
                tracing::warn!(error = %e, "prototype accept failed");
                tokio::time::sleep(Duration::from_millis(50)).await;
            }
        }
    }
}

async fn serve_client(
    stream: TcpStream,
    mut rx: mpsc::Receiver<Arc<[u8]>>,
    id: ClientId,
    registry: PrototypeRegistry,
    write_timeout: Duration,
) {
    let (read_half, mut write_half) = stream.into_split();
    // Reading ends when the client hangs up, which also ends the writer.
    let reader = async move {
        let mut lines = BufReader::new(read_half).lines();
        while let Ok(Some(line)) = lines.next_line().await {
            match WireMessage::decode(line.as_bytes()) {
                Ok(WireMessage::Ack { seq }) => tracing::debug!(client = id.0, seq, "ack"),
                Ok(other) => tracing::warn!(
                    client = id.0,
                    kind = other.type_name(),
                    "unexpected frame from prototype"
                ),
                Err(e) => tracing::warn!(client = id.0, error = %e, "bad frame from prototype"),
            }
        }
    };
    let writer = async move {
        while let Some(frame) = rx.recv().await {
            match tokio::time::timeout(write_timeout, write_half.write_all(&frame)).await {
                Ok(Ok(())) => {}
                Ok(Err(e)) => {
                    tracing::info!(client = id.0, error = %e, "prototype write failed");
                    break;
                }
                Err(_) => {
                    tracing::info!(client = id.0, "prototype write timed out");
                    break;
                }
            }
        }
    };
    tokio::select! {
        _ = reader => {}
        _ = writer => {}
    }
    registry.lock().expect("registry lock").remove(id);
    tracing::info!(client = id.0, "prototype disconnected");
}
