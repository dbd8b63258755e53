//! TCP listener, per-connection frame readers and lock-serialized writers.
//!
//! Every accepted connection gets one reader thread. Each complete frame it
//! reads is wrapped in an [`OutMessageStream`], which pairs the request with
//! the connection's write side, and handed to the [`MessageSink`] in arrival
//! order. Responses go back through [`OutMessageStream::respond`], which
//! writes one whole frame while holding the connection's write lock.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use tracing::{debug, warn};

use crate::codec::{Codec, CodecError, Envelope, FrameDecoder};

const READ_CHUNK: usize = 64 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("failed to bind {addr}: {source}")]
    BindFailure { addr: String, source: io::Error },
    #[error("connection closed")]
    ConnectionClosed,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Identifies one accepted connection. Never reused while the server runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConnectionId(pub u64);

impl fmt::Display for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conn-{}", self.0)
    }
}

/// The write side of one connection. The mutex around the sink is the
/// connection's write lock: it is held for exactly one frame.
pub struct ConnectionWriter {
    id: ConnectionId,
    codec: Codec,
    out: Mutex<Box<dyn Write + Send>>,
    closed: AtomicBool,
}

impl fmt::Debug for ConnectionWriter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionWriter")
            .field("id", &self.id)
            .field("closed", &self.closed.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

impl ConnectionWriter {
    pub fn new(id: ConnectionId, codec: Codec, out: impl Write + Send + 'static) -> Arc<Self> {
        Arc::new(ConnectionWriter {
            id,
            codec,
            out: Mutex::new(Box::new(out)),
            closed: AtomicBool::new(false),
        })
    }

    pub fn id(&self) -> ConnectionId {
        self.id
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }

    pub(crate) fn mark_closed(&self) {
        self.closed.store(true, Ordering::Release);
    }

    /// Encodes `response` and writes it as one uninterrupted frame.
    pub fn write_envelope(&self, response: &Envelope) -> Result<(), TransportError> {
        let frame = self.codec.encode(response)?;
        if self.is_closed() {
            return Err(TransportError::ConnectionClosed);
        }
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        let written = out.write_all(&frame).and_then(|_| out.flush());
        if let Err(e) = written {
            debug!(connection = %self.id, error = %e, "write failed, marking connection closed");
            self.mark_closed();
            return Err(TransportError::ConnectionClosed);
        }
        Ok(())
    }
}

/// A received request together with the write side of the connection it
/// arrived on.
#[derive(Debug, Clone)]
pub struct OutMessageStream {
    writer: Arc<ConnectionWriter>,
    message: Envelope,
}

impl OutMessageStream {
    pub fn new(writer: Arc<ConnectionWriter>, message: Envelope) -> Self {
        OutMessageStream { writer, message }
    }

    pub fn connection(&self) -> ConnectionId {
        self.writer.id()
    }

    pub fn message(&self) -> &Envelope {
        &self.message
    }

    pub fn into_message(self) -> Envelope {
        self.message
    }

    pub fn writer(&self) -> &Arc<ConnectionWriter> {
        &self.writer
    }

    /// Writes `response` back to the originating connection.
    pub fn respond(&self, response: &Envelope) -> Result<(), TransportError> {
        self.writer.write_envelope(response)
    }
}

/// Receives every complete frame read by the server.
///
/// Called concurrently from all connection reader threads.
pub trait MessageSink: Send + Sync + 'static {
    fn consume(&self, stream: OutMessageStream);

    fn connection_closed(&self, _connection: ConnectionId) {}
}

impl<F> MessageSink for F
where
    F: Fn(OutMessageStream) + Send + Sync + 'static,
{
    fn consume(&self, stream: OutMessageStream) {
        self(stream)
    }
}

struct Connection {
    socket: TcpStream,
    reader: Option<JoinHandle<()>>,
}

struct Shared {
    codec: Codec,
    sink: Arc<dyn MessageSink>,
    shutdown: AtomicBool,
    next_id: AtomicU64,
    connections: Mutex<HashMap<ConnectionId, Connection>>,
}

/// A running listener. Dropping it shuts it down.
pub struct ServerHandle {
    local_addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Mutex<Option<JoinHandle<()>>>,
}

impl fmt::Debug for ServerHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServerHandle")
            .field("local_addr", &self.local_addr)
            .field("shutdown", &self.shared.shutdown.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

/// Binds `addr` and starts accepting connections.
pub fn listen(
    addr: impl ToSocketAddrs + fmt::Debug,
    codec: Codec,
    sink: Arc<dyn MessageSink>,
) -> Result<ServerHandle, TransportError> {
    let shown = format!("{addr:?}");
    let listener = TcpListener::bind(addr).map_err(|source| TransportError::BindFailure { addr: shown.clone(), source })?;
    let local_addr = listener
        .local_addr()
        .map_err(|source| TransportError::BindFailure { addr: shown, source })?;
    let shared = Arc::new(Shared {
        codec,
        sink,
        shutdown: AtomicBool::new(false),
        next_id: AtomicU64::new(1),
        connections: Mutex::new(HashMap::new()),
    });
    let accept = {
        let shared = shared.clone();
        thread::Builder::new()
            .name("polldesk-accept".into())
            .spawn(move || accept_loop(listener, shared))?
    };
    Ok(ServerHandle {
        local_addr,
        shared,
        accept: Mutex::new(Some(accept)),
    })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    for incoming in listener.incoming() {
        if shared.shutdown.load(Ordering::Acquire) {
            break;
        }
        let socket = match incoming {
            Ok(socket) => socket,
            Err(e) => {
                warn!(error = %e, "accept failed");
                continue;
            }
        };
        if let Err(e) = register(&shared, socket) {
            warn!(error = %e, "could not set up accepted connection");
        }
    }
    debug!("accept loop stopped");
}

fn register(shared: &Arc<Shared>, socket: TcpStream) -> io::Result<()> {
    socket.set_nodelay(true)?;
    let id = ConnectionId(shared.next_id.fetch_add(1, Ordering::Relaxed));
    let writer = ConnectionWriter::new(id, shared.codec.clone(), socket.try_clone()?);
    let read_half = socket.try_clone()?;
    let mut connections = shared.connections.lock().unwrap();
    // shutdown may have drained the table between accept and here
    if shared.shutdown.load(Ordering::Acquire) {
        let _ = socket.shutdown(Shutdown::Both);
        return Ok(());
    }
    let reader = {
        let shared = shared.clone();
        thread::Builder::new()
            .name(format!("polldesk-{id}"))
            .spawn(move || read_loop(shared, id, read_half, writer))?
    };
    connections.insert(id, Connection { socket, reader: Some(reader) });
    Ok(())
}

fn read_loop(shared: Arc<Shared>, id: ConnectionId, mut socket: TcpStream, writer: Arc<ConnectionWriter>) {
    let mut decoder = FrameDecoder::new(shared.codec.max_payload());
    let mut chunk = vec![0u8; READ_CHUNK];
    'read: loop {
        let n = match socket.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => {
                debug!(connection = %id, error = %e, "read failed");
                break;
            }
        };
        decoder.extend(&chunk[..n]);
        loop {
            match decoder.next_frame() {
                Ok(Some(envelope)) => {
                    if shared.shutdown.load(Ordering::Acquire) {
                        break 'read;
                    }
                    shared.sink.consume(OutMessageStream::new(writer.clone(), envelope));
                }
                Ok(None) => break,
                Err(e) => {
                    warn!(connection = %id, error = %e, "protocol error, closing connection");
                    break 'read;
                }
            }
        }
    }
    writer.mark_closed();
    let _ = socket.shutdown(Shutdown::Both);
    if !shared.shutdown.load(Ordering::Acquire) {
        shared.connections.lock().unwrap().remove(&id);
    }
    shared.sink.connection_closed(id);
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn connection_count(&self) -> usize {
        self.shared.connections.lock().unwrap().len()
    }

    pub fn is_shut_down(&self) -> bool {
        self.shared.shutdown.load(Ordering::Acquire)
    }

    /// Stops accepting, closes every connection and joins all reader threads.
    /// Idempotent; a concurrent second call waits for the first to finish.
    pub fn shutdown(&self) {
        let mut accept = self.accept.lock().unwrap();
        let Some(handle) = accept.take() else {
            return;
        };
        self.shared.shutdown.store(true, Ordering::Release);
        // unblock accept()
        let _ = TcpStream::connect(wake_addr(self.local_addr));
        let _ = handle.join();
        let connections: Vec<Connection> = {
            let mut table = self.shared.connections.lock().unwrap();
            table.drain().map(|(_, c)| c).collect()
        };
        for conn in &connections {
            let _ = conn.socket.shutdown(Shutdown::Both);
        }
        for mut conn in connections {
            if let Some(reader) = conn.reader.take() {
                let _ = reader.join();
            }
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn wake_addr(addr: SocketAddr) -> SocketAddr {
    let ip = match addr.ip() {
        IpAddr::V4(ip) if ip.is_unspecified() => IpAddr::V4(Ipv4Addr::LOCALHOST),
        IpAddr::V6(ip) if ip.is_unspecified() => IpAddr::V6(Ipv6Addr::LOCALHOST),
        ip => ip,
    };
    SocketAddr::new(ip, addr.port())
}
