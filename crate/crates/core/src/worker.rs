//! Request workers: one thread per worker draining a bounded FIFO.
//!
//! A worker runs the double-while loop: the outer loop runs until shutdown,
//! the inner loop drains the queue, and between bursts the worker holds on
//! (a timed condition wait) until new work or the timeout arrives.
//!
//! ```text
//! while !queue.is_shutdown() {
//!     while let Some(request) = queue.get_request() {
//!         let response = handle(request.message());
//!         queue.respond(&request, &response);
//!         queue.dispose_message(request);
//!     }
//!     queue.hold_on();
//! }
//! ```

use std::collections::VecDeque;
use std::fmt;
use std::io;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tracing::{error, warn};

use crate::codec::Envelope;
use crate::transport::{OutMessageStream, TransportError};

pub const DEFAULT_REQUEST_THREAD_WAIT_TIME: Duration = Duration::from_millis(2000);

/// Position of a worker within its dispatcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorkerId(pub usize);

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "worker-{}", self.0)
    }
}

/// Returned by [`RequestQueue::enqueue`] when the worker is shutting down.
/// Carries the stream back so the caller can reassign it.
#[derive(Debug)]
pub struct Rejected(pub OutMessageStream);

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("worker is shut down")
    }
}

impl std::error::Error for Rejected {}

struct QueueState {
    queue: VecDeque<OutMessageStream>,
    shutdown: bool,
    busy: bool,
    last_active: Instant,
}

/// The queue, run state and wake signal of one worker.
pub struct RequestQueue {
    id: WorkerId,
    max_task_size: usize,
    wait_time: Duration,
    state: Mutex<QueueState>,
    wake: Condvar,
    responses: Arc<AtomicU64>,
}

impl fmt::Debug for RequestQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.lock();
        f.debug_struct("RequestQueue")
            .field("id", &self.id)
            .field("len", &st.queue.len())
            .field("shutdown", &st.shutdown)
            .field("busy", &st.busy)
            .finish()
    }
}

impl RequestQueue {
    pub fn new(id: WorkerId, max_task_size: usize, wait_time: Duration) -> Self {
        Self::with_counter(id, max_task_size, wait_time, Arc::new(AtomicU64::new(0)))
    }

    pub(crate) fn with_counter(
        id: WorkerId,
        max_task_size: usize,
        wait_time: Duration,
        responses: Arc<AtomicU64>,
    ) -> Self {
        RequestQueue {
            id,
            max_task_size,
            wait_time,
            state: Mutex::new(QueueState {
                queue: VecDeque::new(),
                shutdown: false,
                busy: false,
                last_active: Instant::now(),
            }),
            wake: Condvar::new(),
            responses,
        }
    }

    fn lock(&self) -> MutexGuard<'_, QueueState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn id(&self) -> WorkerId {
        self.id
    }

    pub fn max_task_size(&self) -> usize {
        self.max_task_size
    }

    pub fn len(&self) -> usize {
        self.lock().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lock().queue.is_empty()
    }

    /// Requests held by this worker: queued ones plus the one in flight.
    pub fn load(&self) -> usize {
        let st = self.lock();
        st.queue.len() + usize::from(st.busy)
    }

    pub fn last_active(&self) -> Instant {
        self.lock().last_active
    }

    /// True once shutdown was requested and nothing is left to drain.
    pub fn is_shutdown(&self) -> bool {
        let st = self.lock();
        st.shutdown && st.queue.is_empty()
    }

    /// Appends `stream` and wakes the worker.
    pub fn enqueue(&self, stream: OutMessageStream) -> Result<(), Rejected> {
        let mut st = self.lock();
        if st.shutdown {
            return Err(Rejected(stream));
        }
        st.queue.push_back(stream);
        drop(st);
        self.wake.notify_one();
        Ok(())
    }

    /// Dequeues the next request and marks the worker busy until
    /// [`dispose_message`](Self::dispose_message).
    pub fn get_request(&self) -> Option<OutMessageStream> {
        let mut st = self.lock();
        let next = st.queue.pop_front();
        if next.is_some() {
            st.busy = true;
            st.last_active = Instant::now();
        }
        next
    }

    /// Writes `response` on the request's connection and counts it.
    pub fn respond(&self, request: &OutMessageStream, response: &Envelope) -> Result<(), TransportError> {
        request.respond(response)?;
        self.responses.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Releases the per-request working state.
    pub fn dispose_message(&self, request: OutMessageStream) {
        drop(request);
        let mut st = self.lock();
        st.busy = false;
        st.last_active = Instant::now();
    }

    /// Blocks until work arrives, shutdown is requested or the configured
    /// wait time elapses.
    pub fn hold_on(&self) {
        self.hold_on_for(self.wait_time);
    }

    pub fn hold_on_for(&self, timeout: Duration) {
        let st = self.lock();
        let _ = self
            .wake
            .wait_timeout_while(st, timeout, |st| st.queue.is_empty() && !st.shutdown)
            .unwrap_or_else(|e| e.into_inner());
    }

    /// Requests shutdown. Queued requests are still drained.
    pub fn shut_down(&self) {
        self.lock().shutdown = true;
        self.wake.notify_all();
    }

    /// Shuts the worker down if it is idle past `keep_alive` at `now`.
    /// Checked and applied under the queue lock so no enqueue can slip in.
    fn reclaim_if_idle(&self, keep_alive: Duration, now: Instant) -> bool {
        let mut st = self.lock();
        let idle = st.queue.is_empty() && !st.busy && now.saturating_duration_since(st.last_active) > keep_alive;
        if idle {
            st.shutdown = true;
            drop(st);
            self.wake.notify_all();
        }
        idle
    }
}

/// The body of a worker thread.
pub trait RequestThread: Send + 'static {
    fn run(&mut self, queue: &RequestQueue);
}

/// Produces fresh workers for a dispatcher whose existing workers are saturated.
pub trait ThreadCreator: Send + Sync + 'static {
    fn create_request_thread_instance(&self, task_size: usize) -> RequestWorker;
}

/// A worker that has been created but not started.
pub struct RequestWorker {
    max_task_size: usize,
    body: Box<dyn RequestThread>,
}

impl fmt::Debug for RequestWorker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RequestWorker").field("max_task_size", &self.max_task_size).finish_non_exhaustive()
    }
}

impl RequestWorker {
    pub fn new(max_task_size: usize, body: impl RequestThread) -> Self {
        RequestWorker {
            max_task_size,
            body: Box::new(body),
        }
    }

    pub fn max_task_size(&self) -> usize {
        self.max_task_size
    }

    /// Spawns the worker thread.
    pub fn start(self, id: WorkerId, wait_time: Duration, responses: Arc<AtomicU64>) -> io::Result<WorkerHandle> {
        let queue = Arc::new(RequestQueue::with_counter(id, self.max_task_size, wait_time, responses));
        let mut body = self.body;
        let thread = {
            let queue = queue.clone();
            thread::Builder::new().name(format!("polldesk-{id}")).spawn(move || {
                if panic::catch_unwind(AssertUnwindSafe(|| body.run(&queue))).is_err() {
                    error!(worker = %queue.id(), "worker body panicked, worker stopped");
                    queue.shut_down();
                }
            })?
        };
        Ok(WorkerHandle { queue, thread: Some(thread) })
    }
}

/// A running worker owned by a dispatcher.
#[derive(Debug)]
pub struct WorkerHandle {
    queue: Arc<RequestQueue>,
    thread: Option<JoinHandle<()>>,
}

impl WorkerHandle {
    pub fn id(&self) -> WorkerId {
        self.queue.id()
    }

    pub fn queue(&self) -> &Arc<RequestQueue> {
        &self.queue
    }

    pub fn enqueue(&self, stream: OutMessageStream) -> Result<(), Rejected> {
        self.queue.enqueue(stream)
    }

    pub fn is_finished(&self) -> bool {
        self.thread.as_ref().is_none_or(|t| t.is_finished())
    }

    /// Requests shutdown and waits for the queue to drain and the thread to exit.
    pub fn shut_down_and_join(mut self) {
        self.queue.shut_down();
        self.join();
    }

    fn join(&mut self) {
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

/// Shuts down and removes every worker whose queue is empty, which is not
/// mid-request, and whose last activity is more than `keep_alive` before
/// `now`. Returns the ids of the reclaimed workers.
pub fn reclaim_idle(workers: &mut Vec<WorkerHandle>, keep_alive: Duration, now: Instant) -> Vec<WorkerId> {
    let mut reclaimed = Vec::new();
    let mut kept = Vec::with_capacity(workers.len());
    for mut worker in workers.drain(..) {
        if worker.queue.reclaim_if_idle(keep_alive, now) {
            worker.join();
            reclaimed.push(worker.id());
        } else {
            kept.push(worker);
        }
    }
    *workers = kept;
    reclaimed
}

pub type HandlerError = Box<dyn std::error::Error + Send + Sync>;

/// Request-processing function: request envelope in, response envelope out.
pub type Handler = Arc<dyn Fn(&Envelope) -> Result<Envelope, HandlerError> + Send + Sync>;

/// Worker body that applies a [`Handler`] to every request.
///
/// A handler error or panic drops that request without a response; the
/// worker keeps going.
pub struct HandlerThread {
    handler: Handler,
}

impl HandlerThread {
    pub fn new(handler: Handler) -> Self {
        HandlerThread { handler }
    }

    fn process(&self, queue: &RequestQueue, request: &OutMessageStream) {
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| (self.handler)(request.message())));
        match outcome {
            Ok(Ok(response)) => {
                if let Err(e) = queue.respond(request, &response) {
                    warn!(worker = %queue.id(), connection = %request.connection(), error = %e, "response dropped");
                }
            }
            Ok(Err(e)) => {
                warn!(worker = %queue.id(), key = %request.message().message_key, error = %e, "handler failed, request dropped");
            }
            Err(_) => {
                error!(worker = %queue.id(), key = %request.message().message_key, "handler panicked, request dropped");
            }
        }
    }
}

impl RequestThread for HandlerThread {
    fn run(&mut self, queue: &RequestQueue) {
        while !queue.is_shutdown() {
            while let Some(request) = queue.get_request() {
                self.process(queue, &request);
                queue.dispose_message(request);
            }
            queue.hold_on();
        }
    }
}

/// Creates [`HandlerThread`] workers sharing one handler.
#[derive(Clone)]
pub struct HandlerThreadCreator {
    handler: Handler,
}

impl HandlerThreadCreator {
    pub fn new<F>(handler: F) -> Self
    where
        F: Fn(&Envelope) -> Result<Envelope, HandlerError> + Send + Sync + 'static,
    {
        HandlerThreadCreator { handler: Arc::new(handler) }
    }
}

impl ThreadCreator for HandlerThreadCreator {
    fn create_request_thread_instance(&self, task_size: usize) -> RequestWorker {
        RequestWorker::new(task_size, HandlerThread::new(self.handler.clone()))
    }
}
