use std::sync::Arc;

use polldesk_core::worker::{RequestWorker, ThreadCreator};

use super::WeatherRequestThread;
use crate::weather::WeatherStore;

pub struct WeatherRequestThreadCreator {
    store: Arc<WeatherStore>,
}

impl WeatherRequestThreadCreator {
    pub fn new(store: Arc<WeatherStore>) -> Self {
        WeatherRequestThreadCreator { store }
    }
}

impl ThreadCreator for WeatherRequestThreadCreator {
    fn create_request_thread_instance(&self, task_size: usize) -> RequestWorker {
        RequestWorker::new(task_size, WeatherRequestThread::new(self.store.clone()))
    }
}
