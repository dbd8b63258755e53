//! Flat `key=value` configuration shared by the demo server and client.
//!
//! Blank lines and lines starting with `#` are ignored. Durations are in
//! milliseconds. Unknown keys are an error so typos do not go unnoticed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use polldesk_core::client::RemoteReaderConfig;
use polldesk_core::dispatch::{RequestDispatcherConfig, ServerDispatcherConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value:?}")]
    BadValue { key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub server_ip: String,
    pub server_port: u16,
    pub server: ServerDispatcherConfig,
    pub request: RequestDispatcherConfig,
    pub reader: RemoteReaderConfig,
    pub node_key_file: Option<PathBuf>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            server_ip: "127.0.0.1".into(),
            server_port: 8944,
            server: ServerDispatcherConfig::default(),
            request: RequestDispatcherConfig::default(),
            reader: RemoteReaderConfig::default(),
            node_key_file: None,
        }
    }
}

impl DemoConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = DemoConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Sets one key; also used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
        };
        let count = || value.parse::<usize>().map_err(|_| bad());
        let millis = || value.parse::<u64>().map(Duration::from_millis).map_err(|_| bad());
        match key {
            "server_ip" => self.server_ip = value.to_owned(),
            "server_port" => self.server_port = value.parse().map_err(|_| bad())?,
            "thread_pool_size" => self.server.thread_pool_size = count()?,
            "thread_keep_alive" => self.server.thread_keep_alive = millis()?,
            "scheduler_pool_size" => self.server.scheduler_pool_size = count()?,
            "scheduler_keep_alive" => self.server.scheduler_keep_alive = millis()?,
            "request_dispatcher_pool_size" => self.request.pool_size = count()?,
            "request_dispatcher_keep_alive" => self.request.keep_alive = millis()?,
            "max_request_task_size" => self.request.max_task_size = count()?,
            "request_dispatcher_wait_time" => self.request.dispatcher_wait_time = millis()?,
            "request_dispatcher_wait_round" => self.request.wait_round = count()?,
            "request_dispatcher_idle_check_delay" => self.request.idle_check_delay = millis()?,
            "request_dispatcher_idle_check_period" => self.request.idle_check_period = millis()?,
            "request_thread_wait_time" => self.request.request_thread_wait_time = millis()?,
            "max_connections" => self.reader.max_connections = count()?,
            "read_timeout" => self.reader.read_timeout = millis()?,
            "node_key_file" => self.node_key_file = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.server.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.request.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.reader.max_connections == 0 {
            return Err(ConfigError::Invalid("max_connections must be positive".into()));
        }
        if self.reader.read_timeout.is_zero() {
            return Err(ConfigError::Invalid("read_timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn address(&self) -> String {
        format!("{}:{}", self.server_ip, self.server_port)
    }
}
