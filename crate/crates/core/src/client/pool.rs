use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use chrono::Local;
use tracing::{debug, warn};

use super::NodeKey;
use crate::codec::{
    Codec, CodecError, Envelope, FrameDecoder, Payload, TypeCode, INIT_READ_FEEDBACK_NOTIFICATION,
    INIT_READ_NOTIFICATION, NODE_KEY_NOTIFICATION, REGISTER_CLIENT_NOTIFICATION,
};
use crate::dispatch::{receipt_line, ReceiptLog};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {addr}: {source}")]
    ConnectFailure { addr: SocketAddr, source: io::Error },
    #[error("no handshake reply within the read timeout")]
    HandshakeTimeout,
    #[error("handshake expected type {expected}, got {found}")]
    UnexpectedReply { expected: TypeCode, found: TypeCode },
    #[error("no response within the read timeout")]
    ReadTimeout,
    #[error("connection closed by peer")]
    ConnectionClosed,
    #[error("reader pool is not initialized")]
    NotReady,
    #[error("reader pool is disposed")]
    Disposed,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteReaderConfig {
    pub max_connections: usize,
    pub read_timeout: Duration,
}

impl Default for RemoteReaderConfig {
    fn default() -> Self {
        RemoteReaderConfig {
            max_connections: 8,
            read_timeout: Duration::from_millis(10_000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolStats {
    pub idle: usize,
    pub checked_out: usize,
    pub opened: u64,
    pub discarded: u64,
}

impl PoolStats {
    pub fn open(&self) -> usize {
        self.idle + self.checked_out
    }
}

struct Connection {
    stream: TcpStream,
    decoder: FrameDecoder,
    buf: Vec<u8>,
}

impl Connection {
    fn open(addr: SocketAddr, timeout: Duration, max_payload: usize) -> Result<Self, ClientError> {
        let stream =
            TcpStream::connect_timeout(&addr, timeout).map_err(|source| ClientError::ConnectFailure { addr, source })?;
        let _ = stream.set_nodelay(true);
        Ok(Connection {
            stream,
            decoder: FrameDecoder::new(max_payload),
            buf: vec![0; 64 * 1024],
        })
    }

    fn send(&mut self, codec: &Codec, envelope: &Envelope) -> Result<(), ClientError> {
        let bytes = codec.encode(envelope)?;
        self.stream.write_all(&bytes).map_err(|_| ClientError::ConnectionClosed)
    }

    /// Blocks until one whole frame has arrived or `deadline` passes.
    fn receive(&mut self, deadline: Instant) -> Result<Envelope, ClientError> {
        loop {
            if let Some(envelope) = self.decoder.next_frame()? {
                return Ok(envelope);
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(ClientError::ReadTimeout);
            }
            self.stream.set_read_timeout(Some(left)).map_err(|_| ClientError::ConnectionClosed)?;
            match self.stream.read(&mut self.buf) {
                Ok(0) => return Err(ClientError::ConnectionClosed),
                Ok(n) => self.decoder.extend(&self.buf[..n]),
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut | io::ErrorKind::Interrupted) => {}
                Err(_) => return Err(ClientError::ConnectionClosed),
            }
        }
    }

    fn close(self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Ready,
    Disposed,
}

struct State {
    phase: Phase,
    node_key: Option<NodeKey>,
    idle: Vec<Connection>,
    checked_out: usize,
    next_ticket: u64,
    serving: u64,
    opened: u64,
    discarded: u64,
}

/// Pool of exclusive connections to one server. Each `read` holds a
/// connection for exactly one request/response cycle, so the response on a
/// connection always belongs to the request just written on it.
pub struct RemoteReaderPool {
    target: SocketAddr,
    codec: Codec,
    config: RemoteReaderConfig,
    receipts: ReceiptLog,
    state: Mutex<State>,
    changed: Condvar,
    // held for the whole handshake so init and dispose never interleave
    lifecycle: Mutex<()>,
}

impl RemoteReaderPool {
    pub fn new(target: SocketAddr, codec: Codec, config: RemoteReaderConfig, receipts: ReceiptLog) -> Self {
        assert!(config.max_connections > 0, "max_connections must be positive");
        RemoteReaderPool {
            target,
            codec,
            config,
            receipts,
            state: Mutex::new(State {
                phase: Phase::Fresh,
                node_key: None,
                idle: Vec::new(),
                checked_out: 0,
                next_ticket: 0,
                serving: 0,
                opened: 0,
                discarded: 0,
            }),
            changed: Condvar::new(),
            lifecycle: Mutex::new(()),
        }
    }

    pub fn target(&self) -> SocketAddr {
        self.target
    }

    pub fn config(&self) -> &RemoteReaderConfig {
        &self.config
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn is_ready(&self) -> bool {
        self.state.lock().unwrap().phase == Phase::Ready
    }

    pub fn node_key(&self) -> Option<NodeKey> {
        self.state.lock().unwrap().node_key.clone()
    }

    pub fn stats(&self) -> PoolStats {
        let st = self.state.lock().unwrap();
        PoolStats {
            idle: st.idle.len(),
            checked_out: st.checked_out,
            opened: st.opened,
            discarded: st.discarded,
        }
    }

    /// Registers this node with the server over the first connection. A
    /// second call on a ready pool does nothing.
    pub fn init_session(&self, key: &NodeKey) -> Result<(), ClientError> {
        let _lifecycle = self.lifecycle.lock().unwrap();
        match self.state.lock().unwrap().phase {
            Phase::Ready => return Ok(()),
            Phase::Disposed => return Err(ClientError::Disposed),
            Phase::Fresh => {}
        }
        let mut conn = Connection::open(self.target, self.config.read_timeout, self.codec.max_payload())?;
        let handshake = [
            (REGISTER_CLIENT_NOTIFICATION, NODE_KEY_NOTIFICATION),
            (INIT_READ_NOTIFICATION, INIT_READ_FEEDBACK_NOTIFICATION),
        ];
        for (send, expect) in handshake {
            let outcome = conn
                .send(&self.codec, &Envelope::new(send, Payload::new().with("node_key", key.as_str())))
                .and_then(|_| conn.receive(Instant::now() + self.config.read_timeout));
            let reply = match outcome {
                Ok(reply) => reply,
                Err(ClientError::ReadTimeout) => {
                    conn.close();
                    return Err(ClientError::HandshakeTimeout);
                }
                Err(e) => {
                    conn.close();
                    return Err(e);
                }
            };
            if reply.type_code != expect {
                conn.close();
                return Err(ClientError::UnexpectedReply {
                    expected: expect,
                    found: reply.type_code,
                });
            }
            self.receipts
                .emit(&receipt_line(&self.codec.type_name(reply.type_code), &Local::now()));
        }
        let mut st = self.state.lock().unwrap();
        st.opened += 1;
        st.idle.push(conn);
        st.node_key = Some(key.clone());
        st.phase = Phase::Ready;
        drop(st);
        self.changed.notify_all();
        Ok(())
    }

    /// Sends `request` and blocks until its response arrives. Waiters for a
    /// connection are served in arrival order.
    pub fn read(&self, request: &Envelope) -> Result<Envelope, ClientError> {
        let mut conn = self.checkout()?;
        let outcome = conn
            .send(&self.codec, request)
            .and_then(|_| conn.receive(Instant::now() + self.config.read_timeout));
        match outcome {
            Ok(response) => {
                self.checkin(Some(conn));
                Ok(response)
            }
            Err(e) => {
                debug!(error = %e, "discarding connection after failed read");
                conn.close();
                self.checkin(None);
                Err(e)
            }
        }
    }

    /// Sends a notification over a pooled connection without waiting for
    /// any reply.
    pub fn notify(&self, notification: &Envelope) -> Result<(), ClientError> {
        let mut conn = self.checkout()?;
        match conn.send(&self.codec, notification) {
            Ok(()) => {
                self.checkin(Some(conn));
                Ok(())
            }
            Err(e) => {
                conn.close();
                self.checkin(None);
                Err(e)
            }
        }
    }

    /// Like [`read`](Self::read), but any failure is logged and replaced by
    /// a copy of `sentinel`.
    pub fn read_or_sentinel(&self, request: &Envelope, sentinel: &Envelope) -> Envelope {
        match self.read(request) {
            Ok(response) => response,
            Err(e) => {
                warn!(error = %e, request = %self.codec.type_name(request.type_code), "read failed");
                sentinel.clone()
            }
        }
    }

    /// Closes idle connections and waits, at most one read timeout, for
    /// in-flight reads to hand theirs back. Idempotent.
    pub fn dispose(&self) {
        let _lifecycle = self.lifecycle.lock().unwrap();
        let mut st = self.state.lock().unwrap();
        if st.phase == Phase::Disposed {
            return;
        }
        st.phase = Phase::Disposed;
        for conn in st.idle.drain(..) {
            conn.close();
        }
        self.changed.notify_all();
        let deadline = Instant::now() + self.config.read_timeout;
        while st.checked_out > 0 {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                warn!(in_flight = st.checked_out, "reader pool disposed with reads still in flight");
                break;
            }
            st = self.changed.wait_timeout(st, left).unwrap().0;
        }
    }

    fn checkout(&self) -> Result<Connection, ClientError> {
        let mut st = self.state.lock().unwrap();
        check_phase(&st)?;
        let ticket = st.next_ticket;
        st.next_ticket += 1;
        loop {
            if st.phase != Phase::Ready {
                // leave the queue so later tickets are not stuck behind us
                self.skip_ticket(&mut st, ticket);
                // only a dispose can end the Ready phase
                return Err(ClientError::Disposed);
            }
            if st.serving == ticket {
                if let Some(conn) = st.idle.pop() {
                    st.serving += 1;
                    st.checked_out += 1;
                    drop(st);
                    self.changed.notify_all();
                    return Ok(conn);
                }
                if st.checked_out + st.idle.len() < self.config.max_connections {
                    st.serving += 1;
                    st.checked_out += 1;
                    drop(st);
                    self.changed.notify_all();
                    return match Connection::open(self.target, self.config.read_timeout, self.codec.max_payload()) {
                        Ok(conn) => {
                            self.state.lock().unwrap().opened += 1;
                            Ok(conn)
                        }
                        Err(e) => {
                            self.checkin(None);
                            Err(e)
                        }
                    };
                }
            }
            st = self.changed.wait(st).unwrap();
        }
    }

    fn skip_ticket(&self, st: &mut MutexGuard<'_, State>, ticket: u64) {
        if st.serving == ticket {
            st.serving += 1;
        }
        self.changed.notify_all();
    }

    fn checkin(&self, conn: Option<Connection>) {
        let mut st = self.state.lock().unwrap();
        st.checked_out -= 1;
        match conn {
            Some(conn) if st.phase == Phase::Ready => st.idle.push(conn),
            Some(conn) => conn.close(),
            None => st.discarded += 1,
        }
        drop(st);
        self.changed.notify_all();
    }
}

impl Drop for RemoteReaderPool {
    fn drop(&mut self) {
        let st = self.state.get_mut().unwrap();
        for conn in st.idle.drain(..) {
            conn.close();
        }
    }
}

fn check_phase(st: &State) -> Result<(), ClientError> {
    match st.phase {
        Phase::Fresh => Err(ClientError::NotReady),
        Phase::Ready => Ok(()),
        Phase::Disposed => Err(ClientError::Disposed),
    }
}
