use std::sync::Arc;

use polldesk_core::codec::ServerMessage;
use polldesk_core::worker::{RequestQueue, RequestThread};
use tracing::warn;

use crate::messages::WeatherResponse;
use crate::streams::WeatherStream;
use crate::weather::WeatherStore;

pub struct WeatherRequestThread {
    store: Arc<WeatherStore>,
}

impl WeatherRequestThread {
    pub fn new(store: Arc<WeatherStore>) -> Self {
        WeatherRequestThread { store }
    }
}

impl RequestThread for WeatherRequestThread {
    fn run(&mut self, queue: &RequestQueue) {
        while !queue.is_shutdown() {
            while let Some(request) = queue.get_request() {
                let request = WeatherStream::new(request);
                match request.message() {
                    Ok(_message) => {
                        let response = WeatherResponse::new(self.store.get());
                        if let Err(e) = queue.respond(request.out(), &response.to_envelope()) {
                            warn!(error = %e, "WeatherResponse not delivered");
                        }
                    }
                    Err(e) => warn!(error = %e, "malformed WeatherRequest dropped"),
                }
                queue.dispose_message(request.into_out());
            }
            queue.hold_on();
        }
    }
}
