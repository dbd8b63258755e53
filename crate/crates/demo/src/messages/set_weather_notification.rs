use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;
use crate::weather::Weather;

/// Replaces the server's weather. No reply.
#[derive(Debug, Clone, PartialEq)]
pub struct SetWeatherNotification {
    weather: Weather,
}

impl SetWeatherNotification {
    pub fn new(weather: Weather) -> Self {
        SetWeatherNotification { weather }
    }

    pub fn weather(&self) -> &Weather {
        &self.weather
    }

    pub fn into_weather(self) -> Weather {
        self.weather
    }
}

impl ServerMessage for SetWeatherNotification {
    const TYPE: TypeCode = message_type::SET_WEATHER_NOTIFICATION;

    fn to_payload(&self) -> Payload {
        Payload::new().with("weather", self.weather.to_payload())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(SetWeatherNotification {
            weather: Weather::from_payload(payload.map("weather")?)?,
        })
    }
}
