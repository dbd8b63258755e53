//! Execution pool and scheduler used by the server dispatcher.
//!
//! Both are elastic `rusty_pool` pools (no core threads, idle threads retire
//! after their keep-alive). The scheduler adds a single timer thread that
//! hands delayed and periodic tasks to its pool when they come due.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use rusty_pool::ThreadPool;

/// The pool refused a task because it has been shut down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("pool is shut down")]
pub struct PoolClosed;

pub struct ExecutionPool {
    pool: Mutex<Option<ThreadPool>>,
}

impl ExecutionPool {
    pub fn new(name: &str, max_threads: usize, keep_alive: Duration) -> Self {
        let pool = rusty_pool::Builder::new()
            .name(name.to_owned())
            .core_size(0)
            .max_size(max_threads.max(1))
            .keep_alive(keep_alive)
            .build();
        ExecutionPool {
            pool: Mutex::new(Some(pool)),
        }
    }

    pub fn execute<F>(&self, task: F) -> Result<(), PoolClosed>
    where
        F: FnOnce() + Send + 'static,
    {
        match &*self.pool.lock().unwrap() {
            Some(pool) => pool.try_execute(task).map_err(|_| PoolClosed),
            None => Err(PoolClosed),
        }
    }

    pub fn thread_count(&self) -> usize {
        self.pool.lock().unwrap().as_ref().map_or(0, |p| p.get_current_worker_count())
    }

    /// Stops accepting tasks and waits for queued ones to finish.
    pub fn shutdown(&self) {
        let pool = self.pool.lock().unwrap().take();
        if let Some(pool) = pool {
            pool.shutdown_join();
        }
    }
}

type Task = Arc<dyn Fn() + Send + Sync>;

struct Entry {
    task: Task,
    period: Option<Duration>,
}

#[derive(Default)]
struct TimerState {
    due: BinaryHeap<Reverse<(Instant, u64)>>,
    entries: HashMap<u64, Entry>,
    shutdown: bool,
}

struct TimerShared {
    state: Mutex<TimerState>,
    changed: Condvar,
    next_id: AtomicU64,
}

/// Cancels a scheduled task. Dropping the handle does not cancel.
#[derive(Debug, Clone)]
pub struct ScheduledTask {
    id: u64,
    timer: Weak<TimerShared>,
}

impl ScheduledTask {
    pub fn cancel(&self) {
        if let Some(timer) = self.timer.upgrade() {
            timer.state.lock().unwrap().entries.remove(&self.id);
            timer.changed.notify_all();
        }
    }
}

pub struct Scheduler {
    pool: Arc<ExecutionPool>,
    timer: Arc<TimerShared>,
    thread: Mutex<Option<JoinHandle<()>>>,
}

impl Scheduler {
    pub fn new(max_threads: usize, keep_alive: Duration) -> Self {
        let pool = Arc::new(ExecutionPool::new("polldesk-scheduler", max_threads, keep_alive));
        let timer = Arc::new(TimerShared {
            state: Mutex::new(TimerState::default()),
            changed: Condvar::new(),
            next_id: AtomicU64::new(1),
        });
        let thread = {
            let pool = pool.clone();
            let timer = timer.clone();
            thread::Builder::new()
                .name("polldesk-timer".into())
                .spawn(move || timer_loop(&timer, &pool))
                .expect("spawn timer thread")
        };
        Scheduler {
            pool,
            timer,
            thread: Mutex::new(Some(thread)),
        }
    }

    pub fn execute<F>(&self, task: F) -> Result<(), PoolClosed>
    where
        F: FnOnce() + Send + 'static,
    {
        self.pool.execute(task)
    }

    /// Runs `task` after `delay`, then every `period`.
    pub fn schedule_at_fixed_rate<F>(&self, delay: Duration, period: Duration, task: F) -> Result<ScheduledTask, PoolClosed>
    where
        F: Fn() + Send + Sync + 'static,
    {
        self.schedule(delay, Some(period), Arc::new(task))
    }

    pub fn schedule_once<F>(&self, delay: Duration, task: F) -> Result<ScheduledTask, PoolClosed>
    where
        F: Fn() + Send + Sync + 'static,
    {
        self.schedule(delay, None, Arc::new(task))
    }

    fn schedule(&self, delay: Duration, period: Option<Duration>, task: Task) -> Result<ScheduledTask, PoolClosed> {
        let id = self.timer.next_id.fetch_add(1, Ordering::Relaxed);
        let mut st = self.timer.state.lock().unwrap();
        if st.shutdown {
            return Err(PoolClosed);
        }
        st.entries.insert(id, Entry { task, period });
        st.due.push(Reverse((Instant::now() + delay, id)));
        drop(st);
        self.timer.changed.notify_all();
        Ok(ScheduledTask {
            id,
            timer: Arc::downgrade(&self.timer),
        })
    }

    pub fn pending(&self) -> usize {
        self.timer.state.lock().unwrap().entries.len()
    }

    /// Cancels all timers, stops the timer thread and drains the pool.
    pub fn shutdown(&self) {
        {
            let mut st = self.timer.state.lock().unwrap();
            st.shutdown = true;
            st.entries.clear();
        }
        self.timer.changed.notify_all();
        if let Some(thread) = self.thread.lock().unwrap().take() {
            let _ = thread.join();
        }
        self.pool.shutdown();
    }
}

fn timer_loop(timer: &TimerShared, pool: &ExecutionPool) {
    let mut st = timer.state.lock().unwrap();
    loop {
        if st.shutdown {
            return;
        }
        let Some(&Reverse((deadline, id))) = st.due.peek() else {
            st = timer.changed.wait(st).unwrap();
            continue;
        };
        if !st.entries.contains_key(&id) {
            st.due.pop();
            continue;
        }
        let now = Instant::now();
        if deadline > now {
            st = timer.changed.wait_timeout(st, deadline - now).unwrap().0;
            continue;
        }
        st.due.pop();
        let entry = &st.entries[&id];
        let task = entry.task.clone();
        match entry.period {
            Some(period) => st.due.push(Reverse(((deadline + period).max(now), id))),
            None => {
                st.entries.remove(&id);
            }
        }
        drop(st);
        let _ = pool.execute(move || task());
        st = timer.state.lock().unwrap();
    }
}
