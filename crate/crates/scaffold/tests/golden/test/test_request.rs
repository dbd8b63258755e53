use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;

#[derive(Debug, Clone, PartialEq)]
pub struct TestRequest {
    pub request: String,
}

impl TestRequest {
    pub fn new(request: String) -> Self {
        TestRequest { request }
    }
}

impl ServerMessage for TestRequest {
    const TYPE: TypeCode = message_type::TEST_REQUEST;

    fn to_payload(&self) -> Payload {
        Payload::new()
            .with("request", self.request.clone())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(TestRequest {
            request: payload.string("request")?.to_owned(),
        })
    }
}
