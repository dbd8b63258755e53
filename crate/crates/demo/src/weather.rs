use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use polldesk_core::codec::{FieldError, Payload};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeatherError {
    #[error("how much rain must not be negative, got {0}")]
    NegativeRain(f64),
    #[error("how much rain must be 0 when it does not rain, got {0}")]
    RainWithoutRain(f64),
    #[error("timestamp {0} ms is out of range")]
    BadTime(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weather {
    temperature: f64,
    forecast: String,
    rain: bool,
    how_much_rain: f64,
    time: DateTime<Utc>,
}

impl Weather {
    pub fn new(
        temperature: f64,
        forecast: impl Into<String>,
        rain: bool,
        how_much_rain: f64,
        time: DateTime<Utc>,
    ) -> Result<Self, WeatherError> {
        if how_much_rain < 0.0 || how_much_rain.is_nan() {
            return Err(WeatherError::NegativeRain(how_much_rain));
        }
        if !rain && how_much_rain != 0.0 {
            return Err(WeatherError::RainWithoutRain(how_much_rain));
        }
        Ok(Weather {
            temperature,
            forecast: forecast.into(),
            rain,
            how_much_rain,
            time,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn forecast(&self) -> &str {
        &self.forecast
    }

    pub fn is_rain(&self) -> bool {
        self.rain
    }

    pub fn how_much_rain(&self) -> f64 {
        self.how_much_rain
    }

    pub fn time(&self) -> DateTime<Utc> {
        self.time
    }

    pub fn time_text(&self) -> String {
        self.time.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn to_payload(&self) -> Payload {
        Payload::new()
            .with("temperature", self.temperature)
            .with("forecast", self.forecast.as_str())
            .with("rain", self.rain)
            .with("how_much_rain", self.how_much_rain)
            .with("time", self.time.timestamp_millis())
    }

    pub fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        let invalid = |field: &str, reason: String| FieldError::Invalid {
            field: field.to_owned(),
            reason,
        };
        let millis = payload.int("time")?;
        let time = Utc
            .timestamp_millis_opt(millis)
            .single()
            .ok_or_else(|| invalid("time", WeatherError::BadTime(millis).to_string()))?;
        Weather::new(
            payload.float("temperature")?,
            payload.string("forecast")?,
            payload.boolean("rain")?,
            payload.float("how_much_rain")?,
            time,
        )
        .map_err(|e| invalid("how_much_rain", e.to_string()))
    }
}

impl Default for Weather {
    fn default() -> Self {
        Weather {
            temperature: 0.0,
            forecast: "unknown".into(),
            rain: false,
            how_much_rain: 0.0,
            time: DateTime::UNIX_EPOCH,
        }
    }
}

/// The server's current weather.
#[derive(Debug, Default)]
pub struct WeatherStore(Mutex<Weather>);

impl WeatherStore {
    pub fn new() -> Self {
        WeatherStore::default()
    }

    pub fn get(&self) -> Weather {
        self.0.lock().unwrap().clone()
    }

    pub fn set(&self, weather: Weather) {
        *self.0.lock().unwrap() = weather;
    }
}
