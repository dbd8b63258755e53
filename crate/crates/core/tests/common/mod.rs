#![allow(dead_code)]

use std::sync::{Arc, Mutex};
use std::time::Duration;

use polldesk_core::codec::{Codec, Envelope, Payload, Registry, TypeCode};
use polldesk_core::dispatch::{ReceiptLog, RequestDispatcherConfig, ServerDispatcher, ServerDispatcherConfig};
use polldesk_core::transport::{listen, ServerHandle};
use polldesk_core::worker::{HandlerError, HandlerThreadCreator};

pub const TEST_REQUEST: TypeCode = TypeCode(100);
pub const TEST_RESPONSE: TypeCode = TypeCode(101);

pub fn registry() -> Arc<Registry> {
    let mut registry = Registry::new();
    registry.register_message_type("TEST_REQUEST", 100).unwrap();
    registry.register_message_type("TEST_RESPONSE", 101).unwrap();
    Arc::new(registry)
}

pub fn codec() -> Codec {
    Codec::new(registry())
}

/// Replies TEST_RESPONSE{response:"response", echo:<request key hex>}.
pub fn echo(request: &Envelope) -> Result<Envelope, HandlerError> {
    Ok(Envelope::new(
        TEST_RESPONSE,
        Payload::new()
            .with("response", "response")
            .with("echo", request.message_key.to_hex()),
    ))
}

#[derive(Clone, Default)]
pub struct Lines(Arc<Mutex<Vec<String>>>);

impl Lines {
    pub fn log(&self) -> ReceiptLog {
        let lines = self.0.clone();
        ReceiptLog::new(move |line| lines.lock().unwrap().push(line.to_owned()))
    }

    pub fn snapshot(&self) -> Vec<String> {
        self.0.lock().unwrap().clone()
    }
}

pub struct TestServer {
    pub handle: ServerHandle,
    pub dispatcher: Arc<ServerDispatcher>,
    pub receipts: Lines,
}

impl TestServer {
    pub fn start<F>(config: RequestDispatcherConfig, handler: F) -> Self
    where
        F: Fn(&Envelope) -> Result<Envelope, HandlerError> + Send + Sync + 'static,
    {
        let receipts = Lines::default();
        let dispatcher = ServerDispatcher::new(ServerDispatcherConfig::default(), registry(), receipts.log()).unwrap();
        dispatcher.register_handshake_routes().unwrap();
        dispatcher
            .register_request_route(TEST_REQUEST, config, HandlerThreadCreator::new(handler))
            .unwrap();
        let handle = listen("127.0.0.1:0", codec(), dispatcher.clone()).unwrap();
        TestServer { handle, dispatcher, receipts }
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.handle.local_addr()
    }

    /// Drains the dispatchers first so queued responses still go out.
    pub fn stop(&self) {
        self.dispatcher.shutdown();
        self.handle.shutdown();
    }
}

pub fn fast_config() -> RequestDispatcherConfig {
    RequestDispatcherConfig {
        dispatcher_wait_time: Duration::from_millis(20),
        request_thread_wait_time: Duration::from_millis(50),
        ..RequestDispatcherConfig::default()
    }
}
