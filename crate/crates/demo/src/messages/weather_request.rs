use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;

/// Asks for the server's current weather.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherRequest;

impl WeatherRequest {
    pub fn new() -> Self {
        WeatherRequest
    }
}

impl ServerMessage for WeatherRequest {
    const TYPE: TypeCode = message_type::WEATHER_REQUEST;

    fn to_payload(&self) -> Payload {
        Payload::new()
    }

    fn from_payload(_payload: &Payload) -> Result<Self, FieldError> {
        Ok(WeatherRequest)
    }
}
