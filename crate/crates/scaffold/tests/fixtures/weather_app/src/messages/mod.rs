//! Application messages. Requests and responses come in pairs; the
//! notifications carry no reply.

mod set_weather_notification;
mod sign_up_notification;
mod weather_request;
mod weather_response;
// scaffold:modules

pub use set_weather_notification::SetWeatherNotification;
pub use sign_up_notification::SignUpNotification;
pub use weather_request::WeatherRequest;
pub use weather_response::WeatherResponse;
// scaffold:exports
