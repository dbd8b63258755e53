use polldesk_core::codec::ServerMessage;
use polldesk_core::worker::{RequestQueue, RequestThread};
use tracing::warn;

use crate::messages::TestResponse;
use crate::streams::TestStream;

pub struct TestRequestThread;

impl RequestThread for TestRequestThread {
    fn run(&mut self, queue: &RequestQueue) {
        while !queue.is_shutdown() {
            while let Some(request) = queue.get_request() {
                let request = TestStream::new(request);
                match request.message() {
                    Ok(_message) => {
                        let response = TestResponse::new(String::new());
                        if let Err(e) = queue.respond(request.out(), &response.to_envelope()) {
                            warn!(error = %e, "TestResponse not delivered");
                        }
                    }
                    Err(e) => warn!(error = %e, "malformed TestRequest dropped"),
                }
                queue.dispose_message(request.into_out());
            }
            queue.hold_on();
        }
    }
}
