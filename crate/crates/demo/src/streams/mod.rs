//! Typed views of received requests, each paired with the connection the
//! response goes back on.

mod test_stream;
mod weather_stream;
// scaffold:modules

pub use test_stream::TestStream;
pub use weather_stream::WeatherStream;
// scaffold:exports
