use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;

#[derive(Debug, Clone, PartialEq)]
pub struct TestResponse {
    pub response: String,
}

impl TestResponse {
    pub fn new(response: String) -> Self {
        TestResponse { response }
    }
}

impl ServerMessage for TestResponse {
    const TYPE: TypeCode = message_type::TEST_RESPONSE;

    fn to_payload(&self) -> Payload {
        Payload::new()
            .with("response", self.response.clone())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(TestResponse {
            response: payload.string("response")?.to_owned(),
        })
    }
}
