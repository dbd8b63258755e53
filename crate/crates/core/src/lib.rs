//! Request/response polling middleware.
//!
//! A client sends a typed request and blocks until the response arrives on
//! the same connection. The server routes each message by its type code to a
//! per-type request dispatcher, which spreads work over an elastic pool of
//! worker threads.

pub mod client;
pub mod codec;
pub mod dispatch;
pub mod transport;
pub mod worker;
