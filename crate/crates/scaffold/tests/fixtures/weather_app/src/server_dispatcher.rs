//! Routes of the demo server: one request dispatcher per request type, the
//! notification handlers and the built-in handshake.

use std::sync::Arc;

use polldesk_core::codec::{ServerMessage, TypeCode};
use polldesk_core::dispatch::{DispatchError, ReceiptLog, RequestDispatcher, ServerDispatcher};
use polldesk_core::transport::OutMessageStream;
use tracing::{info, warn};

use crate::config::DemoConfig;
use crate::message_type;
use crate::messages;
use crate::threads;
use crate::weather::WeatherStore;

pub struct MyServerDispatcher {
    inner: Arc<ServerDispatcher>,
    weather_request_dispatcher: Arc<RequestDispatcher>,
    // scaffold:dispatcher-fields
}

impl MyServerDispatcher {
    pub fn new(config: &DemoConfig, store: Arc<WeatherStore>, receipts: ReceiptLog) -> Result<Self, DispatchError> {
        let inner = ServerDispatcher::new(
            config.server.clone(),
            Arc::new(message_type::registry()),
            receipts,
        )?;
        inner.register_handshake_routes()?;

        let weather_request_dispatcher = inner.register_request_route(
            message_type::WEATHER_REQUEST,
            config.request.clone(),
            threads::WeatherRequestThreadCreator::new(store.clone()),
        )?;
        // scaffold:dispatch-routes

        inner.register_notification_route(message_type::SET_WEATHER_NOTIFICATION, move |stream| {
            if let Some(n) = decode::<messages::SetWeatherNotification>(stream) {
                store.set(n.into_weather());
            }
        })?;
        inner.register_notification_route(message_type::SIGN_UP_NOTIFICATION, |stream| {
            if let Some(n) = decode::<messages::SignUpNotification>(stream) {
                info!(username = %n.username, node_key = %n.node_key, "signed up");
            }
        })?;

        Ok(MyServerDispatcher {
            inner,
            weather_request_dispatcher,
            // scaffold:dispatcher-init
        })
    }

    pub fn inner(&self) -> &Arc<ServerDispatcher> {
        &self.inner
    }

    pub fn request_dispatcher(&self, code: TypeCode) -> Option<Arc<RequestDispatcher>> {
        self.inner.request_dispatcher(code)
    }

    /// Disposes every request dispatcher, letting queued requests finish,
    /// then stops the server pools.
    pub fn shutdown(&self) {
        self.weather_request_dispatcher.dispose();
        // scaffold:dispatcher-dispose
        self.inner.shutdown();
    }
}

fn decode<M: ServerMessage>(stream: &OutMessageStream) -> Option<M> {
    match M::from_envelope(stream.message()) {
        Ok(m) => Some(m),
        Err(e) => {
            warn!(error = %e, connection = %stream.connection(), "malformed notification dropped");
            None
        }
    }
}
