use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;

#[derive(Debug, Clone, PartialEq)]
pub struct TestNotification {
    pub notification: String,
}

impl TestNotification {
    pub fn new(notification: String) -> Self {
        TestNotification { notification }
    }
}

impl ServerMessage for TestNotification {
    const TYPE: TypeCode = message_type::TEST_NOTIFICATION;

    fn to_payload(&self) -> Payload {
        Payload::new().with("notification", self.notification.clone())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(TestNotification {
            notification: payload.string("notification")?.to_owned(),
        })
    }
}
