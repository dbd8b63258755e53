use polldesk_core::worker::{RequestWorker, ThreadCreator};

use super::TestRequestThread;

pub struct TestRequestThreadCreator;

impl ThreadCreator for TestRequestThreadCreator {
    fn create_request_thread_instance(&self, task_size: usize) -> RequestWorker {
        RequestWorker::new(task_size, TestRequestThread)
    }
}
