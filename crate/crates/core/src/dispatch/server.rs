use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, Local, SecondsFormat, TimeZone};
use tracing::{debug, error, warn};

use super::executor::{ExecutionPool, Scheduler};
use super::request::{RequestDispatcher, RequestDispatcherConfig};
use super::DispatchError;
use crate::codec::{
    Envelope, Payload, Registry, TypeCode, INIT_READ_FEEDBACK_NOTIFICATION, INIT_READ_NOTIFICATION,
    NODE_KEY_NOTIFICATION, REGISTER_CLIENT_NOTIFICATION,
};
use crate::transport::{ConnectionId, MessageSink, OutMessageStream};
use crate::worker::ThreadCreator;

/// Sizes of the server's execution pool (distribution loops) and scheduler
/// pool (notification handlers and idle checks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerDispatcherConfig {
    pub thread_pool_size: usize,
    pub thread_keep_alive: Duration,
    pub scheduler_pool_size: usize,
    pub scheduler_keep_alive: Duration,
}

impl Default for ServerDispatcherConfig {
    fn default() -> Self {
        ServerDispatcherConfig {
            thread_pool_size: 100,
            thread_keep_alive: Duration::from_millis(30_000),
            scheduler_pool_size: 10,
            scheduler_keep_alive: Duration::from_millis(30_000),
        }
    }
}

impl ServerDispatcherConfig {
    pub fn validate(&self) -> Result<(), DispatchError> {
        if self.thread_pool_size == 0 || self.scheduler_pool_size == 0 {
            return Err(DispatchError::InvalidConfig("pool sizes must be positive".into()));
        }
        if self.thread_keep_alive.is_zero() || self.scheduler_keep_alive.is_zero() {
            return Err(DispatchError::InvalidConfig("keep-alive times must be positive".into()));
        }
        Ok(())
    }
}

pub type NotificationHandler = Arc<dyn Fn(&OutMessageStream) + Send + Sync>;

/// Destination of the `<TYPE_NAME> received @<timestamp>` lines.
#[derive(Clone)]
pub struct ReceiptLog(Arc<dyn Fn(&str) + Send + Sync>);

impl ReceiptLog {
    pub fn new(f: impl Fn(&str) + Send + Sync + 'static) -> Self {
        ReceiptLog(Arc::new(f))
    }

    pub fn stdout() -> Self {
        ReceiptLog::new(|line| {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{line}");
            let _ = out.flush();
        })
    }

    pub fn silent() -> Self {
        ReceiptLog::new(|_| {})
    }

    pub fn emit(&self, line: &str) {
        (self.0)(line)
    }
}

impl fmt::Debug for ReceiptLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ReceiptLog")
    }
}

pub fn receipt_line<Tz: TimeZone>(type_name: &str, at: &DateTime<Tz>) -> String
where
    Tz::Offset: fmt::Display,
{
    format!("{type_name} received @{}", at.to_rfc3339_opts(SecondsFormat::Secs, false))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServerStats {
    pub unknown_routes: u64,
    pub receipts: u64,
    pub notifications_handled: u64,
    pub responses_written: u64,
}

enum Route {
    Request(Arc<RequestDispatcher>),
    Notification(NotificationHandler),
}

/// The top-level message switch of a server.
pub struct ServerDispatcher {
    registry: Arc<Registry>,
    routes: RwLock<HashMap<TypeCode, Route>>,
    exec: ExecutionPool,
    scheduler: Scheduler,
    receipts: ReceiptLog,
    shutting_down: AtomicBool,
    shutdown_lock: Mutex<bool>,
    sessions: Arc<Mutex<HashMap<ConnectionId, String>>>,
    unknown_routes: AtomicU64,
    receipt_count: AtomicU64,
    notifications_handled: Arc<AtomicU64>,
}

impl fmt::Debug for ServerDispatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServerDispatcher")
            .field("routes", &self.routes.read().unwrap().len())
            .field("shutting_down", &self.shutting_down.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

impl ServerDispatcher {
    pub fn new(
        config: ServerDispatcherConfig,
        registry: Arc<Registry>,
        receipts: ReceiptLog,
    ) -> Result<Arc<Self>, DispatchError> {
        config.validate()?;
        Ok(Arc::new(ServerDispatcher {
            registry,
            routes: RwLock::new(HashMap::new()),
            exec: ExecutionPool::new("polldesk-exec", config.thread_pool_size, config.thread_keep_alive),
            scheduler: Scheduler::new(config.scheduler_pool_size, config.scheduler_keep_alive),
            receipts,
            shutting_down: AtomicBool::new(false),
            shutdown_lock: Mutex::new(false),
            sessions: Arc::new(Mutex::new(HashMap::new())),
            unknown_routes: AtomicU64::new(0),
            receipt_count: AtomicU64::new(0),
            notifications_handled: Arc::new(AtomicU64::new(0)),
        }))
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    fn type_name(&self, code: TypeCode) -> String {
        match self.registry.name_of(code) {
            Some(name) => name.to_owned(),
            None => format!("TYPE_{code}"),
        }
    }

    fn insert_route(&self, code: TypeCode, route: Route) -> Result<(), DispatchError> {
        let mut routes = self.routes.write().unwrap();
        if self.shutting_down.load(Ordering::Acquire) {
            return Err(DispatchError::Rejected);
        }
        if routes.contains_key(&code) {
            return Err(DispatchError::DuplicateRoute(code));
        }
        routes.insert(code, route);
        Ok(())
    }

    /// Adds a request dispatcher for `code`. It starts with no workers and
    /// not running; its idle check is scheduled right away.
    pub fn register_request_route(
        &self,
        code: TypeCode,
        config: RequestDispatcherConfig,
        creator: impl ThreadCreator,
    ) -> Result<Arc<RequestDispatcher>, DispatchError> {
        if self.shutting_down.load(Ordering::Acquire) {
            return Err(DispatchError::Rejected);
        }
        if self.routes.read().unwrap().contains_key(&code) {
            return Err(DispatchError::DuplicateRoute(code));
        }
        let dispatcher = RequestDispatcher::new(self.type_name(code), config, creator)?;
        self.insert_route(code, Route::Request(dispatcher.clone()))?;
        if let Err(e) = dispatcher.schedule_idle_check(&self.scheduler) {
            self.routes.write().unwrap().remove(&code);
            return Err(e);
        }
        Ok(dispatcher)
    }

    pub fn register_notification_route<F>(&self, code: TypeCode, handler: F) -> Result<(), DispatchError>
    where
        F: Fn(&OutMessageStream) + Send + Sync + 'static,
    {
        self.insert_route(code, Route::Notification(Arc::new(handler)))
    }

    /// Routes the client handshake: a register notification is answered with
    /// the node key, an init-read notification with the init-read feedback.
    pub fn register_handshake_routes(&self) -> Result<(), DispatchError> {
        let sessions = self.sessions.clone();
        self.register_notification_route(REGISTER_CLIENT_NOTIFICATION, move |stream| {
            let key = node_key_of(stream);
            sessions.lock().unwrap().insert(stream.connection(), key.clone());
            reply(stream, NODE_KEY_NOTIFICATION, key);
        })?;
        self.register_notification_route(INIT_READ_NOTIFICATION, |stream| {
            reply(stream, INIT_READ_FEEDBACK_NOTIFICATION, node_key_of(stream));
        })
    }

    pub fn node_key(&self, connection: ConnectionId) -> Option<String> {
        self.sessions.lock().unwrap().get(&connection).cloned()
    }

    pub fn request_dispatcher(&self, code: TypeCode) -> Option<Arc<RequestDispatcher>> {
        match self.routes.read().unwrap().get(&code) {
            Some(Route::Request(d)) => Some(d.clone()),
            _ => None,
        }
    }

    /// Routes one received message by its type code. Notification handlers
    /// run on the scheduler pool; the caller waits for them to finish.
    pub fn consume(&self, stream: OutMessageStream) {
        if self.shutting_down.load(Ordering::Acquire) {
            debug!(connection = %stream.connection(), "message dropped during shutdown");
            return;
        }
        let code = stream.message().type_code;
        let routes = self.routes.read().unwrap();
        let Some(route) = routes.get(&code) else {
            drop(routes);
            let unknown = self.unknown_routes.fetch_add(1, Ordering::Relaxed) + 1;
            warn!(code = code.0, connection = %stream.connection(), unknown, "no route for message type, dropped");
            return;
        };
        self.receipt_count.fetch_add(1, Ordering::Relaxed);
        self.receipts.emit(&receipt_line(&self.type_name(code), &Local::now()));
        match route {
            Route::Request(dispatcher) => {
                let dispatcher = dispatcher.clone();
                drop(routes);
                if dispatcher.submit(stream, &self.exec).is_err() {
                    debug!(dispatcher = dispatcher.name(), "request dropped, dispatcher disposed");
                }
            }
            Route::Notification(handler) => {
                let handler = handler.clone();
                drop(routes);
                let handled = self.notifications_handled.clone();
                let (done, finished) = mpsc::sync_channel(1);
                let submitted = self.scheduler.execute(move || {
                    if panic::catch_unwind(AssertUnwindSafe(|| handler(&stream))).is_err() {
                        error!(code = code.0, "notification handler panicked");
                    }
                    handled.fetch_add(1, Ordering::Relaxed);
                    let _ = done.send(());
                });
                match submitted {
                    // later messages on this connection wait for the handler,
                    // so a notification is applied before anything sent after it
                    Ok(()) => {
                        let _ = finished.recv();
                    }
                    Err(_) => debug!(code = code.0, "notification dropped, scheduler stopped"),
                }
            }
        }
    }

    pub fn stats(&self) -> ServerStats {
        let responses_written = self
            .routes
            .read()
            .unwrap()
            .values()
            .filter_map(|r| match r {
                Route::Request(d) => Some(d.stats().responses_written),
                Route::Notification(_) => None,
            })
            .sum();
        ServerStats {
            unknown_routes: self.unknown_routes.load(Ordering::Relaxed),
            receipts: self.receipt_count.load(Ordering::Relaxed),
            notifications_handled: self.notifications_handled.load(Ordering::Relaxed),
            responses_written,
        }
    }

    pub fn is_shut_down(&self) -> bool {
        self.shutting_down.load(Ordering::Acquire)
    }

    /// Disposes every request dispatcher (draining queued work), then stops
    /// the execution and scheduler pools. Idempotent and blocking.
    pub fn shutdown(&self) {
        let mut done = self.shutdown_lock.lock().unwrap();
        if *done {
            return;
        }
        self.shutting_down.store(true, Ordering::Release);
        let dispatchers: Vec<Arc<RequestDispatcher>> = {
            let routes = self.routes.read().unwrap();
            let mut ds: Vec<_> = routes
                .iter()
                .filter_map(|(code, r)| match r {
                    Route::Request(d) => Some((*code, d.clone())),
                    Route::Notification(_) => None,
                })
                .collect();
            ds.sort_by_key(|(code, _)| *code);
            ds.into_iter().map(|(_, d)| d).collect()
        };
        for dispatcher in &dispatchers {
            dispatcher.dispose();
        }
        self.scheduler.shutdown();
        self.exec.shutdown();
        *done = true;
    }
}

impl MessageSink for ServerDispatcher {
    fn consume(&self, stream: OutMessageStream) {
        ServerDispatcher::consume(self, stream)
    }

    fn connection_closed(&self, connection: ConnectionId) {
        self.sessions.lock().unwrap().remove(&connection);
    }
}

fn node_key_of(stream: &OutMessageStream) -> String {
    stream.message().payload.string("node_key").unwrap_or_default().to_owned()
}

fn reply(stream: &OutMessageStream, code: TypeCode, node_key: String) {
    let response = Envelope::new(code, Payload::new().with("node_key", node_key));
    if let Err(e) = stream.respond(&response) {
        warn!(connection = %stream.connection(), error = %e, "handshake reply failed");
    }
}
