use std::collections::VecDeque;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use tracing::{debug, error};

use super::executor::{ExecutionPool, ScheduledTask, Scheduler};
use super::DispatchError;
use crate::transport::OutMessageStream;
use crate::worker::{reclaim_idle, Rejected, ThreadCreator, WorkerHandle, WorkerId, DEFAULT_REQUEST_THREAD_WAIT_TIME};

/// Elasticity and idle-reclamation knobs of one request dispatcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestDispatcherConfig {
    /// Maximum number of workers.
    pub pool_size: usize,
    /// How long a worker may sit idle before the idle check reclaims it.
    pub keep_alive: Duration,
    /// Requests one worker may hold (queued plus in flight) before the
    /// distributor looks elsewhere.
    pub max_task_size: usize,
    /// Sleep between retries when every worker is saturated, and the length of
    /// one quiet-inbox wait.
    pub dispatcher_wait_time: Duration,
    /// Retries before a forced assignment, and quiet waits before the
    /// distribution loop exits.
    pub wait_round: usize,
    pub idle_check_delay: Duration,
    pub idle_check_period: Duration,
    /// Hold-on timeout of each worker between bursts.
    pub request_thread_wait_time: Duration,
}

impl Default for RequestDispatcherConfig {
    fn default() -> Self {
        RequestDispatcherConfig {
            pool_size: 100,
            keep_alive: Duration::from_millis(30_000),
            max_task_size: 200,
            dispatcher_wait_time: Duration::from_millis(500),
            wait_round: 5,
            idle_check_delay: Duration::from_millis(3_000),
            idle_check_period: Duration::from_millis(6_000),
            request_thread_wait_time: DEFAULT_REQUEST_THREAD_WAIT_TIME,
        }
    }
}

impl RequestDispatcherConfig {
    pub fn validate(&self) -> Result<(), DispatchError> {
        let checks: [(&str, bool); 8] = [
            ("pool_size", self.pool_size > 0),
            ("keep_alive", !self.keep_alive.is_zero()),
            ("max_task_size", self.max_task_size > 0),
            ("dispatcher_wait_time", !self.dispatcher_wait_time.is_zero()),
            ("wait_round", self.wait_round > 0),
            ("idle_check_delay", !self.idle_check_delay.is_zero()),
            ("idle_check_period", !self.idle_check_period.is_zero()),
            ("request_thread_wait_time", !self.request_thread_wait_time.is_zero()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((field, _)) => Err(DispatchError::InvalidConfig(format!("{field} must be positive"))),
            None => Ok(()),
        }
    }
}

/// Counters exposed for tests and diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestDispatcherStats {
    pub workers: usize,
    pub workers_created: u64,
    pub peak_workers: usize,
    pub workers_reclaimed: u64,
    pub assigned: u64,
    pub forced_assignments: u64,
    pub responses_written: u64,
    pub inbox: usize,
}

struct Inbox {
    queue: VecDeque<OutMessageStream>,
    ready: bool,
    closed: bool,
}

struct Pool {
    workers: Vec<WorkerHandle>,
    next_id: usize,
}

/// Routes requests of one type into an elastic pool of workers.
///
/// Requests land in an unbounded inbox. A distribution loop, started on the
/// server's execution pool whenever the dispatcher is not already running,
/// moves them onto workers: the least-loaded worker whose load (queued plus
/// in-flight requests) is below `max_task_size` wins (lowest id on ties); if none has room a worker is
/// created while the pool is below `pool_size`; otherwise the loop sleeps
/// `dispatcher_wait_time` and retries, and after `wait_round` retries forces
/// the request onto the least-loaded worker.
pub struct RequestDispatcher {
    name: String,
    config: RequestDispatcherConfig,
    creator: Box<dyn ThreadCreator>,
    inbox: Mutex<Inbox>,
    inbox_changed: Condvar,
    ready: AtomicBool,
    pool: Mutex<Pool>,
    idle_check: Mutex<Option<ScheduledTask>>,
    dispose_lock: Mutex<bool>,
    responses: Arc<AtomicU64>,
    workers_created: AtomicU64,
    peak_workers: AtomicUsize,
    workers_reclaimed: AtomicU64,
    assigned: AtomicU64,
    forced_assignments: AtomicU64,
}

impl fmt::Debug for RequestDispatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RequestDispatcher")
            .field("name", &self.name)
            .field("config", &self.config)
            .field("ready", &self.is_ready())
            .finish_non_exhaustive()
    }
}

impl RequestDispatcher {
    pub fn new(
        name: impl Into<String>,
        config: RequestDispatcherConfig,
        creator: impl ThreadCreator,
    ) -> Result<Arc<Self>, DispatchError> {
        let name = name.into();
        config.validate()?;
        Ok(Arc::new(RequestDispatcher {
            name,
            config,
            creator: Box::new(creator),
            inbox: Mutex::new(Inbox {
                queue: VecDeque::new(),
                ready: false,
                closed: false,
            }),
            inbox_changed: Condvar::new(),
            ready: AtomicBool::new(false),
            pool: Mutex::new(Pool {
                workers: Vec::new(),
                next_id: 0,
            }),
            idle_check: Mutex::new(None),
            dispose_lock: Mutex::new(false),
            responses: Arc::new(AtomicU64::new(0)),
            workers_created: AtomicU64::new(0),
            peak_workers: AtomicUsize::new(0),
            workers_reclaimed: AtomicU64::new(0),
            assigned: AtomicU64::new(0),
            forced_assignments: AtomicU64::new(0),
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &RequestDispatcherConfig {
        &self.config
    }

    /// True while the distribution loop is running (or has been submitted).
    pub fn is_ready(&self) -> bool {
        self.ready.load(Ordering::Acquire)
    }

    pub fn worker_count(&self) -> usize {
        self.lock_pool().workers.len()
    }

    /// Load of every live worker, in worker-id order.
    pub fn worker_loads(&self) -> Vec<usize> {
        self.lock_pool().workers.iter().map(|w| w.queue().load()).collect()
    }

    pub fn stats(&self) -> RequestDispatcherStats {
        RequestDispatcherStats {
            workers: self.worker_count(),
            workers_created: self.workers_created.load(Ordering::Relaxed),
            peak_workers: self.peak_workers.load(Ordering::Relaxed),
            workers_reclaimed: self.workers_reclaimed.load(Ordering::Relaxed),
            assigned: self.assigned.load(Ordering::Relaxed),
            forced_assignments: self.forced_assignments.load(Ordering::Relaxed),
            responses_written: self.responses.load(Ordering::Relaxed),
            inbox: self.lock_inbox().queue.len(),
        }
    }

    fn lock_inbox(&self) -> MutexGuard<'_, Inbox> {
        self.inbox.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn lock_pool(&self) -> MutexGuard<'_, Pool> {
        self.pool.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Schedules the periodic idle check on `scheduler`.
    pub fn schedule_idle_check(self: &Arc<Self>, scheduler: &Scheduler) -> Result<(), DispatchError> {
        let weak = Arc::downgrade(self);
        let task = scheduler
            .schedule_at_fixed_rate(self.config.idle_check_delay, self.config.idle_check_period, move || {
                if let Some(dispatcher) = weak.upgrade() {
                    dispatcher.check_idle(Instant::now());
                }
            })
            .map_err(|_| DispatchError::Rejected)?;
        *self.idle_check.lock().unwrap() = Some(task);
        Ok(())
    }

    /// Reclaims workers idle for longer than `keep_alive` at `now`.
    pub fn check_idle(&self, now: Instant) -> Vec<WorkerId> {
        let mut pool = self.lock_pool();
        let reclaimed = reclaim_idle(&mut pool.workers, self.config.keep_alive, now);
        if !reclaimed.is_empty() {
            self.workers_reclaimed.fetch_add(reclaimed.len() as u64, Ordering::Relaxed);
            debug!(dispatcher = %self.name, reclaimed = reclaimed.len(), remaining = pool.workers.len(), "idle workers reclaimed");
        }
        reclaimed
    }

    /// Queues `stream` and starts the distribution loop on `exec` unless it is
    /// already running. The ready check and the enqueue happen under one lock
    /// so a loop that is just exiting cannot strand the new request.
    pub fn submit(self: &Arc<Self>, stream: OutMessageStream, exec: &ExecutionPool) -> Result<(), Rejected> {
        let start = {
            let mut inbox = self.lock_inbox();
            if inbox.closed {
                return Err(Rejected(stream));
            }
            let start = !inbox.ready;
            if start {
                inbox.ready = true;
                self.ready.store(true, Ordering::Release);
            }
            inbox.queue.push_back(stream);
            start
        };
        self.inbox_changed.notify_all();
        if start {
            let me = self.clone();
            if exec.execute(move || me.distribute()).is_err() {
                let me = self.clone();
                thread::spawn(move || me.distribute());
            }
        }
        Ok(())
    }

    /// The distribution loop. Returns after the inbox stays empty for
    /// `wait_round` consecutive waits, or once the dispatcher is closed and
    /// drained.
    pub fn distribute(&self) {
        let mut quiet_rounds = 0;
        loop {
            let next = {
                let mut inbox = self.lock_inbox();
                loop {
                    if let Some(stream) = inbox.queue.pop_front() {
                        break Some(stream);
                    }
                    if inbox.closed || quiet_rounds >= self.config.wait_round {
                        inbox.ready = false;
                        self.ready.store(false, Ordering::Release);
                        break None;
                    }
                    let (guard, waited) = self
                        .inbox_changed
                        .wait_timeout(inbox, self.config.dispatcher_wait_time)
                        .unwrap_or_else(|e| e.into_inner());
                    inbox = guard;
                    if waited.timed_out() && inbox.queue.is_empty() {
                        quiet_rounds += 1;
                    }
                }
            };
            let Some(stream) = next else {
                self.inbox_changed.notify_all();
                return;
            };
            quiet_rounds = 0;
            if !self.assign(stream) {
                self.fail();
                return;
            }
        }
    }

    /// Places one stream on a worker. Returns false when the creator failed.
    fn assign(&self, mut stream: OutMessageStream) -> bool {
        let max_task_size = self.config.max_task_size;
        let mut retries = 0;
        loop {
            let mut pool = self.lock_pool();
            let target = pool
                .workers
                .iter()
                .map(|w| (w.queue().load(), w.id(), w))
                .filter(|(len, _, _)| *len < max_task_size)
                .min_by_key(|(len, id, _)| (*len, *id))
                .map(|(_, _, w)| w);
            if let Some(worker) = target {
                match worker.enqueue(stream) {
                    Ok(()) => {
                        self.assigned.fetch_add(1, Ordering::Relaxed);
                        return true;
                    }
                    Err(Rejected(back)) => {
                        stream = back;
                        pool.workers.retain(|w| !w.is_finished());
                        continue;
                    }
                }
            }
            if pool.workers.len() < self.config.pool_size {
                let id = WorkerId(pool.next_id);
                let worker = self.creator.create_request_thread_instance(max_task_size);
                let started = worker.start(id, self.config.request_thread_wait_time, self.responses.clone());
                let handle = match started {
                    Ok(handle) => handle,
                    Err(e) => {
                        error!(dispatcher = %self.name, error = %e, "worker creation failed");
                        return false;
                    }
                };
                pool.next_id += 1;
                self.workers_created.fetch_add(1, Ordering::Relaxed);
                pool.workers.push(handle);
                self.peak_workers.fetch_max(pool.workers.len(), Ordering::Relaxed);
                debug!(dispatcher = %self.name, worker = %id, workers = pool.workers.len(), "worker created");
                continue;
            }
            if retries < self.config.wait_round {
                drop(pool);
                retries += 1;
                thread::sleep(self.config.dispatcher_wait_time);
                continue;
            }
            let least_loaded = pool
                .workers
                .iter()
                .min_by_key(|w| (w.queue().load(), w.id()))
                .expect("a full pool has workers");
            match least_loaded.enqueue(stream) {
                Ok(()) => {
                    self.assigned.fetch_add(1, Ordering::Relaxed);
                    self.forced_assignments.fetch_add(1, Ordering::Relaxed);
                    return true;
                }
                Err(Rejected(back)) => {
                    stream = back;
                    pool.workers.retain(|w| !w.is_finished());
                }
            }
        }
    }

    fn fail(&self) {
        let dropped = {
            let mut inbox = self.lock_inbox();
            inbox.closed = true;
            inbox.ready = false;
            self.ready.store(false, Ordering::Release);
            std::mem::take(&mut inbox.queue).len()
        };
        self.inbox_changed.notify_all();
        error!(dispatcher = %self.name, dropped, "dispatcher stopped after creator failure");
    }

    /// Stops accepting requests, hands every queued request to a worker, lets
    /// the workers drain their queues, and joins them. Idempotent.
    pub fn dispose(&self) {
        let mut disposed = self.dispose_lock.lock().unwrap_or_else(|e| e.into_inner());
        if *disposed {
            return;
        }
        if let Some(task) = self.idle_check.lock().unwrap().take() {
            task.cancel();
        }
        let run_inline = {
            let mut inbox = self.lock_inbox();
            inbox.closed = true;
            let run_inline = !inbox.ready && !inbox.queue.is_empty();
            if run_inline {
                inbox.ready = true;
                self.ready.store(true, Ordering::Release);
            }
            run_inline
        };
        self.inbox_changed.notify_all();
        if run_inline {
            self.distribute();
        } else {
            let inbox = self.lock_inbox();
            let _idle = self
                .inbox_changed
                .wait_while(inbox, |inbox| inbox.ready)
                .unwrap_or_else(|e| e.into_inner());
        }
        let workers = std::mem::take(&mut self.lock_pool().workers);
        for worker in &workers {
            worker.queue().shut_down();
        }
        for worker in workers {
            worker.shut_down_and_join();
        }
        *disposed = true;
        debug!(dispatcher = %self.name, "disposed");
    }

    pub fn is_disposed(&self) -> bool {
        *self.dispose_lock.lock().unwrap_or_else(|e| e.into_inner())
    }
}
