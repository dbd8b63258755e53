//! Application-facing client: one accessor per request type, plus the
//! notifications the menu can send.

use polldesk_core::client::{ClientError, NodeKey, RemoteReaderPool};
use polldesk_core::codec::ServerMessage;

use crate::message_config;
use crate::messages::{
    SetWeatherNotification, SignUpNotification, TestNotification, TestRequest, TestResponse, WeatherRequest,
    WeatherResponse,
};
use crate::weather::Weather;

pub struct ClientReader {
    pool: RemoteReaderPool,
}

impl ClientReader {
    pub fn new(pool: RemoteReaderPool) -> Self {
        ClientReader { pool }
    }

    pub fn init(&self, key: &NodeKey) -> Result<(), ClientError> {
        self.pool.init_session(key)
    }

    pub fn pool(&self) -> &RemoteReaderPool {
        &self.pool
    }

    /// `None` when the read failed and the sentinel came back.
    pub fn get_weather(&self) -> Option<WeatherResponse> {
        let response = self
            .pool
            .read_or_sentinel(&WeatherRequest::new().to_envelope(), &message_config::NO_WEATHER_RESPONSE);
        WeatherResponse::from_envelope(&response).ok()
    }

    pub fn get_response(&self, request: &str) -> Option<TestResponse> {
        let response = self.pool.read_or_sentinel(
            &TestRequest::new(request.to_owned()).to_envelope(),
            &message_config::NO_TEST_RESPONSE,
        );
        TestResponse::from_envelope(&response).ok()
    }

    // scaffold:reader-accessors

    pub fn set_weather(&self, weather: Weather) -> Result<(), ClientError> {
        self.pool.notify(&SetWeatherNotification::new(weather).to_envelope())
    }

    pub fn sign_up(&self, username: &str) -> Result<(), ClientError> {
        let node_key = self.pool.node_key().ok_or(ClientError::NotReady)?;
        self.pool
            .notify(&SignUpNotification::new(node_key.as_str().to_owned(), username.to_owned()).to_envelope())
    }

    pub fn notify_test(&self, notification: &str) -> Result<(), ClientError> {
        self.pool.notify(&TestNotification::new(notification.to_owned()).to_envelope())
    }

    pub fn dispose(&self) {
        self.pool.dispose();
    }
}
