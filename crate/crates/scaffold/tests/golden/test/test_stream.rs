use polldesk_core::codec::{MessageError, ServerMessage};
use polldesk_core::transport::OutMessageStream;

use crate::messages::TestRequest;

pub struct TestStream {
    stream: OutMessageStream,
}

impl TestStream {
    pub fn new(stream: OutMessageStream) -> Self {
        TestStream { stream }
    }

    pub fn message(&self) -> Result<TestRequest, MessageError> {
        TestRequest::from_envelope(self.stream.message())
    }

    pub fn out(&self) -> &OutMessageStream {
        &self.stream
    }

    pub fn into_out(self) -> OutMessageStream {
        self.stream
    }
}
