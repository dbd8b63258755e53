//! Application messages. Requests and responses come in pairs; the
//! notifications carry no reply.

mod set_weather_notification;
mod sign_up_notification;
mod test_notification;
mod test_request;
mod test_response;
mod weather_request;
mod weather_response;
// scaffold:modules

pub use set_weather_notification::SetWeatherNotification;
pub use sign_up_notification::SignUpNotification;
pub use test_notification::TestNotification;
pub use test_request::TestRequest;
pub use test_response::TestResponse;
pub use weather_request::WeatherRequest;
pub use weather_response::WeatherResponse;
// scaffold:exports
