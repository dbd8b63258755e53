//! Request workers and the creators the dispatchers use to spawn them.
//!
//! Every worker body has the same double-while shape: drain the queue, then
//! hold on until more work arrives, until the queue is shut down and empty.

mod test_request_thread;
mod test_request_thread_creator;
mod weather_request_thread;
mod weather_request_thread_creator;
// scaffold:modules

pub use test_request_thread::TestRequestThread;
pub use test_request_thread_creator::TestRequestThreadCreator;
pub use weather_request_thread::WeatherRequestThread;
pub use weather_request_thread_creator::WeatherRequestThreadCreator;
// scaffold:exports
