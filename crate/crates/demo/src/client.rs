//! Demo client setup: resolve the server, load or create the node key and
//! run the handshake.

use std::net::{SocketAddr, ToSocketAddrs};
use std::sync::Arc;

use polldesk_core::client::{ClientError, NodeKey, NodeKeyError, RemoteReaderPool};
use polldesk_core::codec::Codec;
use polldesk_core::dispatch::ReceiptLog;

use crate::client_reader::ClientReader;
use crate::config::DemoConfig;
use crate::message_type;

#[derive(Debug, thiserror::Error)]
pub enum ConnectError {
    #[error("cannot resolve {0}")]
    Resolve(String),
    #[error(transparent)]
    NodeKey(#[from] NodeKeyError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

pub fn resolve(config: &DemoConfig) -> Result<SocketAddr, ConnectError> {
    let address = config.address();
    address
        .to_socket_addrs()
        .ok()
        .and_then(|mut addrs| addrs.next())
        .ok_or(ConnectError::Resolve(address))
}

/// Returns a ready client; the handshake receipt lines go to `receipts`.
pub fn connect(config: &DemoConfig, receipts: ReceiptLog) -> Result<ClientReader, ConnectError> {
    let target = resolve(config)?;
    let key = match &config.node_key_file {
        Some(path) => NodeKey::load_or_create(path)?,
        None => NodeKey::generate(),
    };
    let codec = Codec::new(Arc::new(message_type::registry()));
    let reader = ClientReader::new(RemoteReaderPool::new(target, codec, config.reader.clone(), receipts));
    reader.init(&key)?;
    Ok(reader)
}
