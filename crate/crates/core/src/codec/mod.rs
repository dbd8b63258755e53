//! Message model and the canonical wire format.
//!
//! A frame on the wire is laid out as
//!
//! ```text
//! 0x47 0x46 | 0x01 | type code (u32 BE) | message key (16) | payload len (u32 BE) | payload
//! ```
//!
//! The payload is an encoded [`Payload`] map (see [`value`] for the value
//! grammar). Encoding is deterministic, and decoding a frame then re-encoding
//! it reproduces the original bytes.

mod frame;
mod registry;
pub mod value;

pub use frame::{
    decode_frame, encode_frame, Codec, Decoded, Envelope, FrameDecoder, MessageKey, DEFAULT_MAX_PAYLOAD,
    HEADER_LEN, MAGIC, SENTINEL_FIELD, VERSION,
};
pub use registry::{
    MessageType, Registry, RegistryError, TypeCode, FIRST_APPLICATION_CODE, FIRST_USER_CODE,
    INIT_READ_FEEDBACK_NOTIFICATION, INIT_READ_NOTIFICATION, NODE_KEY_NOTIFICATION,
    REGISTER_CLIENT_NOTIFICATION,
};
pub use value::{FieldError, FieldValue, Payload};

/// Decode/encode failures. Every decode error is fatal for the connection
/// that produced the bytes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("bad frame magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported frame version {0}")]
    BadVersion(u8),
    #[error("payload of {len} bytes exceeds the {max} byte cap")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("type code {0} is not registered")]
    UnregisteredType(u32),
}

/// Conversion failure between an envelope and a typed message.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessageError {
    #[error("expected type code {expected}, got {found}")]
    WrongType { expected: TypeCode, found: TypeCode },
    #[error("envelope is an absent-response sentinel")]
    Sentinel,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A typed application message with a fixed type code.
pub trait ServerMessage: Sized {
    const TYPE: TypeCode;

    fn to_payload(&self) -> Payload;

    fn from_payload(payload: &Payload) -> Result<Self, FieldError>;

    fn to_envelope(&self) -> Envelope {
        Envelope::new(Self::TYPE, self.to_payload())
    }

    fn from_envelope(envelope: &Envelope) -> Result<Self, MessageError> {
        if envelope.type_code != Self::TYPE {
            return Err(MessageError::WrongType {
                expected: Self::TYPE,
                found: envelope.type_code,
            });
        }
        if envelope.is_sentinel() {
            return Err(MessageError::Sentinel);
        }
        Ok(Self::from_payload(&envelope.payload)?)
    }
}
