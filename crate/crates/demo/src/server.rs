//! Demo server lifecycle: build the routes, bind, serve, shut down.

use std::net::SocketAddr;
use std::sync::Arc;

use polldesk_core::codec::Codec;
use polldesk_core::dispatch::{DispatchError, ReceiptLog};
use polldesk_core::transport::{listen, ServerHandle, TransportError};

use crate::config::DemoConfig;
use crate::message_type;
use crate::server_dispatcher::MyServerDispatcher;
use crate::weather::WeatherStore;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

pub struct RunningServer {
    handle: ServerHandle,
    dispatcher: MyServerDispatcher,
    store: Arc<WeatherStore>,
}

/// Prints the two startup lines through `console` and starts serving.
pub fn start(config: &DemoConfig, receipts: ReceiptLog, console: &ReceiptLog) -> Result<RunningServer, ServerError> {
    console.emit("Server starting up ...");
    let store = Arc::new(WeatherStore::new());
    let dispatcher = MyServerDispatcher::new(config, store.clone(), receipts)?;
    let codec = Codec::new(Arc::new(message_type::registry()));
    let handle = match listen(config.address(), codec, dispatcher.inner().clone()) {
        Ok(handle) => handle,
        Err(e) => {
            dispatcher.shutdown();
            return Err(e.into());
        }
    };
    console.emit("Server started ...");
    Ok(RunningServer {
        handle,
        dispatcher,
        store,
    })
}

impl RunningServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.handle.local_addr()
    }

    pub fn store(&self) -> &Arc<WeatherStore> {
        &self.store
    }

    pub fn dispatcher(&self) -> &MyServerDispatcher {
        &self.dispatcher
    }

    /// Drains the dispatchers before closing connections so queued
    /// responses still go out. Idempotent.
    pub fn stop(&self) {
        self.dispatcher.shutdown();
        self.handle.shutdown();
    }
}
