//! Field-structured payload values and their canonical binary encoding.
//!
//! Every value is a one-byte tag followed by a tag-specific body. All integers
//! are big-endian; strings, byte arrays, lists and maps carry a `u32` length or
//! element count. Map entries keep insertion order on the wire.

use indexmap::IndexMap;

use super::CodecError;

const TAG_UNIT: u8 = 0x00;
const TAG_BOOL: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_FLOAT: u8 = 0x03;
const TAG_STR: u8 = 0x04;
const TAG_BYTES: u8 = 0x05;
const TAG_LIST: u8 = 0x06;
const TAG_MAP: u8 = 0x07;

/// Nesting limit for lists and maps. Corrupt input cannot recurse past it.
pub const MAX_NESTING: usize = 64;

/// One payload value.
///
/// Equality on floats compares bit patterns, so `NaN == NaN` and
/// `0.0 != -0.0`. That matches the wire: two values are equal exactly when
/// they encode to the same bytes.
#[derive(Debug, Clone)]
pub enum FieldValue {
    Unit,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Bytes(Vec<u8>),
    List(Vec<FieldValue>),
    Map(Payload),
}

impl PartialEq for FieldValue {
    fn eq(&self, other: &Self) -> bool {
        use FieldValue::*;
        match (self, other) {
            (Unit, Unit) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Str(a), Str(b)) => a == b,
            (Bytes(a), Bytes(b)) => a == b,
            (List(a), List(b)) => a == b,
            (Map(a), Map(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for FieldValue {}

impl FieldValue {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldValue::Unit => "unit",
            FieldValue::Bool(_) => "bool",
            FieldValue::Int(_) => "int",
            FieldValue::Float(_) => "float",
            FieldValue::Str(_) => "string",
            FieldValue::Bytes(_) => "bytes",
            FieldValue::List(_) => "list",
            FieldValue::Map(_) => "map",
        }
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            FieldValue::Unit => out.push(TAG_UNIT),
            FieldValue::Bool(b) => {
                out.push(TAG_BOOL);
                out.push(u8::from(*b));
            }
            FieldValue::Int(i) => {
                out.push(TAG_INT);
                out.extend_from_slice(&i.to_be_bytes());
            }
            FieldValue::Float(f) => {
                out.push(TAG_FLOAT);
                out.extend_from_slice(&f.to_bits().to_be_bytes());
            }
            FieldValue::Str(s) => {
                out.push(TAG_STR);
                put_len_prefixed(out, s.as_bytes());
            }
            FieldValue::Bytes(b) => {
                out.push(TAG_BYTES);
                put_len_prefixed(out, b);
            }
            FieldValue::List(items) => {
                out.push(TAG_LIST);
                put_u32(out, items.len());
                for item in items {
                    item.encode_into(out);
                }
            }
            FieldValue::Map(map) => map.encode_into(out),
        }
    }

    fn decode_from(reader: &mut Reader<'_>, depth: usize) -> Result<Self, CodecError> {
        let tag = reader.u8()?;
        let value = match tag {
            TAG_UNIT => FieldValue::Unit,
            TAG_BOOL => match reader.u8()? {
                0 => FieldValue::Bool(false),
                1 => FieldValue::Bool(true),
                other => return Err(malformed(format!("boolean byte {other:#04x}"))),
            },
            TAG_INT => FieldValue::Int(i64::from_be_bytes(reader.array()?)),
            TAG_FLOAT => FieldValue::Float(f64::from_bits(u64::from_be_bytes(reader.array()?))),
            TAG_STR => FieldValue::Str(reader.string()?),
            TAG_BYTES => {
                let len = reader.u32()? as usize;
                FieldValue::Bytes(reader.take(len)?.to_vec())
            }
            TAG_LIST => {
                let depth = nested(depth)?;
                let count = reader.u32()? as usize;
                // every element takes at least one byte
                if count > reader.remaining() {
                    return Err(malformed(format!("list of {count} items overruns payload")));
                }
                let mut items = Vec::with_capacity(count);
                for _ in 0..count {
                    items.push(FieldValue::decode_from(reader, depth)?);
                }
                FieldValue::List(items)
            }
            TAG_MAP => FieldValue::Map(Payload::decode_entries(reader, nested(depth)?)?),
            other => return Err(malformed(format!("unknown value tag {other:#04x}"))),
        };
        Ok(value)
    }
}

impl From<bool> for FieldValue {
    fn from(v: bool) -> Self {
        FieldValue::Bool(v)
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Int(v)
    }
}

impl From<f64> for FieldValue {
    fn from(v: f64) -> Self {
        FieldValue::Float(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Str(v.to_owned())
    }
}

impl From<String> for FieldValue {
    fn from(v: String) -> Self {
        FieldValue::Str(v)
    }
}

impl From<Vec<u8>> for FieldValue {
    fn from(v: Vec<u8>) -> Self {
        FieldValue::Bytes(v)
    }
}

impl From<Payload> for FieldValue {
    fn from(v: Payload) -> Self {
        FieldValue::Map(v)
    }
}

/// An ordered string-keyed map of values. Used both as an envelope payload and
/// as the nested map variant of [`FieldValue`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Payload(IndexMap<String, FieldValue>);

impl Payload {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, keeping the original position if the key already exists.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<FieldValue>) -> &mut Self {
        self.0.insert(key.into(), value.into());
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<FieldValue>) -> Self {
        self.insert(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&FieldValue> {
        self.0.get(key)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FieldValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn field(&self, key: &str) -> Result<&FieldValue, FieldError> {
        self.0.get(key).ok_or_else(|| FieldError::Missing(key.to_owned()))
    }

    fn mismatch(key: &str, expected: &'static str, found: &FieldValue) -> FieldError {
        FieldError::WrongKind {
            field: key.to_owned(),
            expected,
            found: found.kind(),
        }
    }

    pub fn string(&self, key: &str) -> Result<&str, FieldError> {
        match self.field(key)? {
            FieldValue::Str(s) => Ok(s),
            other => Err(Self::mismatch(key, "string", other)),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<bool, FieldError> {
        match self.field(key)? {
            FieldValue::Bool(b) => Ok(*b),
            other => Err(Self::mismatch(key, "bool", other)),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64, FieldError> {
        match self.field(key)? {
            FieldValue::Int(i) => Ok(*i),
            other => Err(Self::mismatch(key, "int", other)),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64, FieldError> {
        match self.field(key)? {
            FieldValue::Float(f) => Ok(*f),
            other => Err(Self::mismatch(key, "float", other)),
        }
    }

    pub fn bytes(&self, key: &str) -> Result<&[u8], FieldError> {
        match self.field(key)? {
            FieldValue::Bytes(b) => Ok(b),
            other => Err(Self::mismatch(key, "bytes", other)),
        }
    }

    pub fn list(&self, key: &str) -> Result<&[FieldValue], FieldError> {
        match self.field(key)? {
            FieldValue::List(items) => Ok(items),
            other => Err(Self::mismatch(key, "list", other)),
        }
    }

    pub fn map(&self, key: &str) -> Result<&Payload, FieldError> {
        match self.field(key)? {
            FieldValue::Map(map) => Ok(map),
            other => Err(Self::mismatch(key, "map", other)),
        }
    }

    /// Canonical encoding of this map as a standalone value (tag included).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    /// Decodes a payload that must span `bytes` exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut reader = Reader::new(bytes);
        let value = FieldValue::decode_from(&mut reader, 0)?;
        if reader.remaining() != 0 {
            return Err(malformed(format!("{} trailing bytes after payload", reader.remaining())));
        }
        match value {
            FieldValue::Map(map) => Ok(map),
            other => Err(malformed(format!("payload must be a map, found {}", other.kind()))),
        }
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(TAG_MAP);
        put_u32(out, self.0.len());
        for (key, value) in &self.0 {
            put_len_prefixed(out, key.as_bytes());
            value.encode_into(out);
        }
    }

    fn decode_entries(reader: &mut Reader<'_>, depth: usize) -> Result<Self, CodecError> {
        let count = reader.u32()? as usize;
        // a key length prefix plus a value tag is at least five bytes
        if count > reader.remaining() / 5 {
            return Err(malformed(format!("map of {count} entries overruns payload")));
        }
        let mut map = IndexMap::with_capacity(count);
        for _ in 0..count {
            let key = reader.string()?;
            let value = FieldValue::decode_from(reader, depth)?;
            if map.insert(key.clone(), value).is_some() {
                return Err(malformed(format!("duplicate map key {key:?}")));
            }
        }
        Ok(Payload(map))
    }
}

impl<K: Into<String>, V: Into<FieldValue>> FromIterator<(K, V)> for Payload {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut payload = Payload::new();
        for (k, v) in iter {
            payload.insert(k, v);
        }
        payload
    }
}

/// Typed field access failure, raised when converting a payload into an
/// application message.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("missing field `{0}`")]
    Missing(String),
    #[error("field `{field}` is {found}, expected {expected}")]
    WrongKind {
        field: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("field `{field}` is invalid: {reason}")]
    Invalid { field: String, reason: String },
}

fn malformed(reason: String) -> CodecError {
    CodecError::MalformedPayload(reason)
}

fn nested(depth: usize) -> Result<usize, CodecError> {
    if depth >= MAX_NESTING {
        Err(malformed(format!("nesting deeper than {MAX_NESTING}")))
    } else {
        Ok(depth + 1)
    }
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("length exceeds u32");
    out.extend_from_slice(&n.to_be_bytes());
}

fn put_len_prefixed(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(out, bytes.len());
    out.extend_from_slice(bytes);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if n > self.remaining() {
            return Err(malformed(format!(
                "need {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("slice length checked"))
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, CodecError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| malformed("string is not valid UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_is_five_bytes() {
        assert_eq!(Payload::new().to_bytes(), vec![TAG_MAP, 0, 0, 0, 0]);
    }

    #[test]
    fn string_field_layout() {
        let p = Payload::new().with("a", "bc");
        assert_eq!(
            p.to_bytes(),
            vec![0x07, 0, 0, 0, 1, 0, 0, 0, 1, b'a', 0x04, 0, 0, 0, 2, b'b', b'c']
        );
    }

    #[test]
    fn insertion_order_is_kept() {
        let p = Payload::new().with("z", 1i64).with("a", 2i64);
        let keys: Vec<_> = Payload::from_bytes(&p.to_bytes()).unwrap().iter().map(|(k, _)| k.to_owned()).collect();
        assert_eq!(keys, ["z", "a"]);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let mut bytes = vec![0x07, 0, 0, 0, 2];
        for _ in 0..2 {
            bytes.extend_from_slice(&[0, 0, 0, 1, b'k', 0x00]);
        }
        assert!(matches!(Payload::from_bytes(&bytes), Err(CodecError::MalformedPayload(_))));
    }

    #[test]
    fn non_canonical_bool_is_rejected() {
        let bytes = [0x07, 0, 0, 0, 1, 0, 0, 0, 1, b'b', 0x01, 0x02];
        assert!(Payload::from_bytes(&bytes).is_err());
    }

    #[test]
    fn deep_nesting_is_rejected() {
        let mut bytes = vec![0x07, 0, 0, 0, 1, 0, 0, 0, 1, b'x'];
        for _ in 0..100 {
            bytes.extend_from_slice(&[TAG_LIST, 0, 0, 0, 1]);
        }
        bytes.push(TAG_UNIT);
        assert!(matches!(Payload::from_bytes(&bytes), Err(CodecError::MalformedPayload(_))));
    }

    #[test]
    fn huge_counts_do_not_allocate() {
        let bytes = [0x07, 0xff, 0xff, 0xff, 0xff];
        assert!(Payload::from_bytes(&bytes).is_err());
    }

    #[test]
    fn nan_equals_itself_bitwise() {
        assert_eq!(FieldValue::Float(f64::NAN), FieldValue::Float(f64::NAN));
        assert_ne!(FieldValue::Float(0.0), FieldValue::Float(-0.0));
    }

    #[test]
    fn typed_accessors_report_kind() {
        let p = Payload::new().with("n", 3i64);
        assert_eq!(p.int("n"), Ok(3));
        assert_eq!(p.string("missing"), Err(FieldError::Missing("missing".into())));
        assert_eq!(
            p.string("n"),
            Err(FieldError::WrongKind { field: "n".into(), expected: "string", found: "int" })
        );
    }
}
