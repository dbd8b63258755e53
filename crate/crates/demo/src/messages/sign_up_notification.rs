use polldesk_core::codec::{FieldError, Payload, ServerMessage, TypeCode};

use crate::message_type;

#[derive(Debug, Clone, PartialEq)]
pub struct SignUpNotification {
    pub node_key: String,
    pub username: String,
}

impl SignUpNotification {
    pub fn new(node_key: String, username: String) -> Self {
        SignUpNotification { node_key, username }
    }
}

impl ServerMessage for SignUpNotification {
    const TYPE: TypeCode = message_type::SIGN_UP_NOTIFICATION;

    fn to_payload(&self) -> Payload {
        Payload::new()
            .with("node_key", self.node_key.clone())
            .with("username", self.username.clone())
    }

    fn from_payload(payload: &Payload) -> Result<Self, FieldError> {
        Ok(SignUpNotification {
            node_key: payload.string("node_key")?.to_owned(),
            username: payload.string("username")?.to_owned(),
        })
    }
}
