//! Typed views of received requests, each paired with the connection the
//! response goes back on.

mod weather_stream;
// scaffold:modules

pub use weather_stream::WeatherStream;
// scaffold:exports
