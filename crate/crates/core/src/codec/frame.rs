use std::fmt;
use std::sync::Arc;

use super::registry::{Registry, TypeCode};
use super::value::Payload;
use super::CodecError;

pub const MAGIC: [u8; 2] = [0x47, 0x46];
pub const VERSION: u8 = 0x01;
/// magic(2) + version(1) + type code(4) + message key(16) + payload length(4)
pub const HEADER_LEN: usize = 27;
pub const DEFAULT_MAX_PAYLOAD: usize = 16 * 1024 * 1024;

/// Payload key reserved for locally built "absent response" sentinels. It
/// never crosses the wire.
pub const SENTINEL_FIELD: &str = "__sentinel";

/// Random per-message identifier, carried for tracing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MessageKey(pub [u8; 16]);

impl MessageKey {
    pub fn random() -> Self {
        MessageKey(rand::random())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for MessageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for MessageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MessageKey({})", self.to_hex())
    }
}

/// One message: a type code, a key and a field-structured payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub type_code: TypeCode,
    pub message_key: MessageKey,
    pub payload: Payload,
}

impl Envelope {
    /// A new envelope with a fresh random key.
    pub fn new(type_code: impl Into<TypeCode>, payload: Payload) -> Self {
        Self::with_key(type_code, MessageKey::random(), payload)
    }

    pub fn with_key(type_code: impl Into<TypeCode>, message_key: MessageKey, payload: Payload) -> Self {
        Envelope {
            type_code: type_code.into(),
            message_key,
            payload,
        }
    }

    /// The designated "absent" response of a type.
    pub fn sentinel(type_code: impl Into<TypeCode>) -> Self {
        Self::with_key(type_code, MessageKey::default(), Payload::new().with(SENTINEL_FIELD, true))
    }

    pub fn is_sentinel(&self) -> bool {
        self.payload.contains_key(SENTINEL_FIELD)
    }
}

/// Outcome of decoding the front of a byte buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Frame { envelope: Envelope, consumed: usize },
    /// The buffer holds a valid but incomplete prefix; at least this many more
    /// bytes are required.
    NeedMoreBytes(usize),
}

/// Encodes without consulting a registry.
pub fn encode_frame(envelope: &Envelope, max_payload: usize) -> Result<Vec<u8>, CodecError> {
    if envelope.is_sentinel() {
        return Err(CodecError::MalformedPayload(format!(
            "`{SENTINEL_FIELD}` is reserved for local sentinels"
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 64);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&envelope.type_code.0.to_be_bytes());
    out.extend_from_slice(&envelope.message_key.0);
    out.extend_from_slice(&[0; 4]);
    envelope.payload.encode_into(&mut out);
    let payload_len = out.len() - HEADER_LEN;
    if payload_len > max_payload {
        return Err(CodecError::PayloadTooLarge { len: payload_len, max: max_payload });
    }
    out[HEADER_LEN - 4..HEADER_LEN].copy_from_slice(&(payload_len as u32).to_be_bytes());
    Ok(out)
}

/// Decodes one frame from the front of `bytes`.
///
/// Header fields are validated as soon as they are available, so a bad magic
/// or an oversized length is reported before the rest of the frame arrives.
pub fn decode_frame(bytes: &[u8], max_payload: usize) -> Result<Decoded, CodecError> {
    let magic_seen = bytes.len().min(MAGIC.len());
    if bytes[..magic_seen] != MAGIC[..magic_seen] {
        return Err(CodecError::BadMagic([
            bytes[0],
            bytes.get(1).copied().unwrap_or(0),
        ]));
    }
    if let Some(&version) = bytes.get(2) {
        if version != VERSION {
            return Err(CodecError::BadVersion(version));
        }
    }
    if bytes.len() < HEADER_LEN {
        return Ok(Decoded::NeedMoreBytes(HEADER_LEN - bytes.len()));
    }
    let payload_len = u32::from_be_bytes(bytes[23..27].try_into().unwrap()) as usize;
    if payload_len > max_payload {
        return Err(CodecError::PayloadTooLarge { len: payload_len, max: max_payload });
    }
    let total = HEADER_LEN + payload_len;
    if bytes.len() < total {
        return Ok(Decoded::NeedMoreBytes(total - bytes.len()));
    }
    let type_code = TypeCode(u32::from_be_bytes(bytes[3..7].try_into().unwrap()));
    let message_key = MessageKey(bytes[7..23].try_into().unwrap());
    let payload = Payload::from_bytes(&bytes[HEADER_LEN..total])?;
    let envelope = Envelope { type_code, message_key, payload };
    if envelope.is_sentinel() {
        return Err(CodecError::MalformedPayload(format!(
            "`{SENTINEL_FIELD}` is reserved for local sentinels"
        )));
    }
    Ok(Decoded::Frame { envelope, consumed: total })
}

/// Registry-aware encoder/decoder with a payload cap.
#[derive(Debug, Clone)]
pub struct Codec {
    registry: Arc<Registry>,
    max_payload: usize,
}

impl Codec {
    pub fn new(registry: Arc<Registry>) -> Self {
        Self::with_max_payload(registry, DEFAULT_MAX_PAYLOAD)
    }

    pub fn with_max_payload(registry: Arc<Registry>, max_payload: usize) -> Self {
        Codec { registry, max_payload }
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn max_payload(&self) -> usize {
        self.max_payload
    }

    pub fn encode(&self, envelope: &Envelope) -> Result<Vec<u8>, CodecError> {
        if !self.registry.contains(envelope.type_code) {
            return Err(CodecError::UnregisteredType(envelope.type_code.0));
        }
        encode_frame(envelope, self.max_payload)
    }

    /// Decoding accepts unregistered codes; routing decides what to do with them.
    pub fn decode(&self, bytes: &[u8]) -> Result<Decoded, CodecError> {
        decode_frame(bytes, self.max_payload)
    }

    pub fn type_name(&self, code: TypeCode) -> String {
        match self.registry.name_of(code) {
            Some(name) => name.to_owned(),
            None => format!("UNKNOWN({code})"),
        }
    }
}

/// Reassembles frames from arbitrarily chunked input.
#[derive(Debug)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    max_payload: usize,
}

impl FrameDecoder {
    pub fn new(max_payload: usize) -> Self {
        FrameDecoder { buf: Vec::new(), max_payload }
    }

    pub fn extend(&mut self, chunk: &[u8]) {
        self.buf.extend_from_slice(chunk);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Pops the next complete frame. `Ok(None)` means more input is needed.
    pub fn next_frame(&mut self) -> Result<Option<Envelope>, CodecError> {
        if self.buf.is_empty() {
            return Ok(None);
        }
        match decode_frame(&self.buf, self.max_payload)? {
            Decoded::Frame { envelope, consumed } => {
                self.buf.drain(..consumed);
                Ok(Some(envelope))
            }
            Decoded::NeedMoreBytes(_) => Ok(None),
        }
    }

    /// How many more bytes the frame at the front still needs (0 when a
    /// complete frame is already buffered).
    pub fn missing(&self) -> Result<usize, CodecError> {
        if self.buf.is_empty() {
            return Ok(HEADER_LEN);
        }
        match decode_frame(&self.buf, self.max_payload)? {
            Decoded::Frame { .. } => Ok(0),
            Decoded::NeedMoreBytes(n) => Ok(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_request() -> Envelope {
        Envelope::with_key(100, MessageKey([0xAB; 16]), Payload::new().with("request", "request"))
    }

    #[test]
    fn header_layout() {
        let bytes = encode_frame(&test_request(), DEFAULT_MAX_PAYLOAD).unwrap();
        assert_eq!(&bytes[..3], &[0x47, 0x46, 0x01]);
        assert_eq!(&bytes[3..7], &[0, 0, 0, 100]);
        assert_eq!(&bytes[7..23], &[0xAB; 16]);
        assert_eq!(u32::from_be_bytes(bytes[23..27].try_into().unwrap()) as usize, bytes.len() - HEADER_LEN);
    }

    #[test]
    fn empty_payload_length() {
        let env = Envelope::with_key(100, MessageKey::default(), Payload::new());
        let bytes = encode_frame(&env, DEFAULT_MAX_PAYLOAD).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + Payload::new().to_bytes().len());
        assert_eq!(&bytes[23..27], &[0, 0, 0, 5]);
    }

    #[test]
    fn truncated_reports_missing_bytes() {
        let bytes = encode_frame(&test_request(), DEFAULT_MAX_PAYLOAD).unwrap();
        let cut = &bytes[..bytes.len() - 1];
        assert_eq!(decode_frame(cut, DEFAULT_MAX_PAYLOAD).unwrap(), Decoded::NeedMoreBytes(1));
        assert_eq!(decode_frame(&bytes[..1], DEFAULT_MAX_PAYLOAD).unwrap(), Decoded::NeedMoreBytes(26));
    }

    #[test]
    fn bad_magic_detected_on_first_byte() {
        assert!(matches!(decode_frame(&[0x00], DEFAULT_MAX_PAYLOAD), Err(CodecError::BadMagic(_))));
    }

    #[test]
    fn bad_version() {
        let mut bytes = encode_frame(&test_request(), DEFAULT_MAX_PAYLOAD).unwrap();
        bytes[2] = 2;
        assert_eq!(decode_frame(&bytes, DEFAULT_MAX_PAYLOAD), Err(CodecError::BadVersion(2)));
    }

    #[test]
    fn oversized_length_rejected_from_header_alone() {
        let mut bytes = encode_frame(&test_request(), DEFAULT_MAX_PAYLOAD).unwrap();
        bytes.truncate(HEADER_LEN);
        bytes[23..27].copy_from_slice(&(1024u32).to_be_bytes());
        assert_eq!(
            decode_frame(&bytes, 1000),
            Err(CodecError::PayloadTooLarge { len: 1024, max: 1000 })
        );
    }

    #[test]
    fn encode_respects_cap() {
        let env = Envelope::new(100, Payload::new().with("blob", vec![0u8; 100]));
        assert!(matches!(encode_frame(&env, 50), Err(CodecError::PayloadTooLarge { .. })));
    }

    #[test]
    fn unregistered_type_refused() {
        let codec = Codec::new(Arc::new(Registry::new()));
        assert_eq!(codec.encode(&test_request()), Err(CodecError::UnregisteredType(100)));
    }

    #[test]
    fn sentinel_never_encodes() {
        assert!(encode_frame(&Envelope::sentinel(101), DEFAULT_MAX_PAYLOAD).is_err());
        assert!(Envelope::sentinel(101).is_sentinel());
        assert!(!test_request().is_sentinel());
    }

    #[test]
    fn decoder_handles_byte_by_byte_input() {
        let a = test_request();
        let b = Envelope::new(7, Payload::new().with("x", 1i64));
        let mut stream = encode_frame(&a, DEFAULT_MAX_PAYLOAD).unwrap();
        stream.extend(encode_frame(&b, DEFAULT_MAX_PAYLOAD).unwrap());
        let mut decoder = FrameDecoder::new(DEFAULT_MAX_PAYLOAD);
        let mut out = Vec::new();
        for byte in stream {
            decoder.extend(&[byte]);
            while let Some(env) = decoder.next_frame().unwrap() {
                out.push(env);
            }
        }
        assert_eq!(out, vec![a, b]);
        assert_eq!(decoder.buffered(), 0);
    }
}
