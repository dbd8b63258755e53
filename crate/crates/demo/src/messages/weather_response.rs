use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;
use crate::weather::Weather;

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherResponse {
    weather: Weather,
}

impl WeatherResponse {
    pub fn new(weather: Weather) -> Self {
        WeatherResponse { weather }
    }

    pub fn weather(&self) -> &Weather {
        &self.weather
    }
}

impl ServerMessage for WeatherResponse {
    const TYPE: TypeCode = message_type::WEATHER_RESPONSE;

    fn to_payload(&self) -> Payload {
        Payload::new().with("weather", self.weather.to_payload())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(WeatherResponse {
            weather: Weather::from_payload(payload.map("weather")?)?,
        })
    }
}
