//! Client side of distributed polling: node identity, the init handshake
//! and the blocking read over a pool of exclusive connections.

mod node_key;
mod pool;

pub use node_key::{NodeKey, NodeKeyError};
pub use pool::{ClientError, PoolStats, RemoteReaderConfig, RemoteReaderPool};
