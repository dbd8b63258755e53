use polldesk_core::codec::{MessageError, ServerMessage};
use polldesk_core::transport::OutMessageStream;

use crate::messages::WeatherRequest;

pub struct WeatherStream {
    stream: OutMessageStream,
}

impl WeatherStream {
    pub fn new(stream: OutMessageStream) -> Self {
        WeatherStream { stream }
    }

    pub fn message(&self) -> Result<WeatherRequest, MessageError> {
        WeatherRequest::from_envelope(self.stream.message())
    }

    pub fn out(&self) -> &OutMessageStream {
        &self.stream
    }

    pub fn into_out(self) -> OutMessageStream {
        self.stream
    }
}
