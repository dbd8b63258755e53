//! Sample application: a weather/test polling server and a menu-driven
//! client.
//!
//! Each request/response pair is wired through the same set of sites: the
//! message types, a stream wrapper, a worker thread and its creator, a
//! request dispatcher in [`server_dispatcher`], an accessor in
//! [`client_reader`] and an absent-response sentinel in [`message_config`].
//! Lines marked `scaffold:` are the insertion points `polldesk scaffold` uses
//! to add a new pair.

pub mod client;
pub mod client_reader;
pub mod client_ui;
pub mod config;
pub mod message_config;
pub mod message_type;
pub mod messages;
pub mod server;
pub mod server_dispatcher;
pub mod streams;
pub mod threads;
pub mod weather;
