//! Type-code routing on the server side.
//!
//! [`ServerDispatcher`] switches on the type code of each received message.
//! Request types go to their own [`RequestDispatcher`] and its elastic worker
//! pool; notification types run a handler on the scheduler pool; anything
//! else is counted and dropped.

mod executor;
mod request;
mod server;

pub use executor::{ExecutionPool, PoolClosed, ScheduledTask, Scheduler};
pub use request::{RequestDispatcher, RequestDispatcherConfig, RequestDispatcherStats};
pub use server::{
    receipt_line, NotificationHandler, ReceiptLog, ServerDispatcher, ServerDispatcherConfig, ServerStats,
};

use crate::codec::TypeCode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DispatchError {
    #[error("type code {0} already has a route")]
    DuplicateRoute(TypeCode),
    #[error("server dispatcher is shut down")]
    Rejected,
    #[error("invalid dispatcher config: {0}")]
    InvalidConfig(String),
}
