use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Wire value identifying a message type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeCode(pub u32);

impl fmt::Display for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TypeCode {
    fn from(code: u32) -> Self {
        TypeCode(code)
    }
}

/// Codes below this value belong to the built-in handshake and control messages.
pub const FIRST_USER_CODE: u32 = 16;

/// First code handed out to application messages by convention.
pub const FIRST_APPLICATION_CODE: u32 = 100;

pub const REGISTER_CLIENT_NOTIFICATION: TypeCode = TypeCode(1);
pub const NODE_KEY_NOTIFICATION: TypeCode = TypeCode(2);
pub const INIT_READ_NOTIFICATION: TypeCode = TypeCode(3);
pub const INIT_READ_FEEDBACK_NOTIFICATION: TypeCode = TypeCode(4);

const BUILTINS: [(&str, TypeCode); 4] = [
    ("REGISTER_CLIENT_NOTIFICATION", REGISTER_CLIENT_NOTIFICATION),
    ("NODE_KEY_NOTIFICATION", NODE_KEY_NOTIFICATION),
    ("INIT_READ_NOTIFICATION", INIT_READ_NOTIFICATION),
    ("INIT_READ_FEEDBACK_NOTIFICATION", INIT_READ_FEEDBACK_NOTIFICATION),
];

/// A registered (name, code) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageType {
    pub code: TypeCode,
    pub name: Arc<str>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("message type name must not be empty")]
    EmptyName,
    #[error("type code {0} is already registered")]
    DuplicateCode(u32),
    #[error("message type `{0}` is already registered")]
    DuplicateName(String),
    #[error("type code {0} is reserved for built-in messages (0..{FIRST_USER_CODE})")]
    ReservedCode(u32),
}

/// Bijective name/code table.
///
/// Populated once at startup and then shared read-only behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Registry {
    by_code: HashMap<TypeCode, Arc<str>>,
    by_name: HashMap<Arc<str>, TypeCode>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl Registry {
    /// A registry holding only the built-in handshake messages.
    pub fn new() -> Self {
        let mut registry = Registry {
            by_code: HashMap::new(),
            by_name: HashMap::new(),
        };
        for (name, code) in BUILTINS {
            registry.insert(name, code);
        }
        registry
    }

    pub fn register_message_type(&mut self, name: &str, code: u32) -> Result<MessageType, RegistryError> {
        if name.is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if self.by_name.contains_key(name) {
            return Err(RegistryError::DuplicateName(name.to_owned()));
        }
        if self.by_code.contains_key(&TypeCode(code)) {
            return Err(RegistryError::DuplicateCode(code));
        }
        if code < FIRST_USER_CODE {
            return Err(RegistryError::ReservedCode(code));
        }
        Ok(self.insert(name, TypeCode(code)))
    }

    fn insert(&mut self, name: &str, code: TypeCode) -> MessageType {
        let name: Arc<str> = Arc::from(name);
        self.by_code.insert(code, name.clone());
        self.by_name.insert(name.clone(), code);
        MessageType { code, name }
    }

    pub fn name_of(&self, code: TypeCode) -> Option<&str> {
        self.by_code.get(&code).map(|n| &**n)
    }

    pub fn code_of(&self, name: &str) -> Option<TypeCode> {
        self.by_name.get(name).copied()
    }

    pub fn contains(&self, code: TypeCode) -> bool {
        self.by_code.contains_key(&code)
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    /// All registered types ordered by code.
    pub fn types(&self) -> Vec<MessageType> {
        let mut types: Vec<_> = self
            .by_code
            .iter()
            .map(|(code, name)| MessageType { code: *code, name: name.clone() })
            .collect();
        types.sort_by_key(|t| t.code);
        types
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_preloaded() {
        let r = Registry::new();
        assert_eq!(r.code_of("INIT_READ_FEEDBACK_NOTIFICATION"), Some(TypeCode(4)));
        assert_eq!(r.name_of(TypeCode(1)), Some("REGISTER_CLIENT_NOTIFICATION"));
    }

    #[test]
    fn register_and_lookup_both_ways() {
        let mut r = Registry::new();
        let t = r.register_message_type("TEST_REQUEST", 100).unwrap();
        assert_eq!(t.code, TypeCode(100));
        assert_eq!(r.name_of(TypeCode(100)), Some("TEST_REQUEST"));
        assert_eq!(r.code_of("TEST_REQUEST"), Some(TypeCode(100)));
    }

    #[test]
    fn duplicate_name() {
        let mut r = Registry::new();
        r.register_message_type("TEST_REQUEST", 100).unwrap();
        assert_eq!(
            r.register_message_type("TEST_REQUEST", 100),
            Err(RegistryError::DuplicateName("TEST_REQUEST".into()))
        );
    }

    #[test]
    fn duplicate_code() {
        let mut r = Registry::new();
        r.register_message_type("A", 200).unwrap();
        assert_eq!(r.register_message_type("B", 200), Err(RegistryError::DuplicateCode(200)));
    }

    #[test]
    fn reserved_range() {
        let mut r = Registry::new();
        assert_eq!(r.register_message_type("X", 5), Err(RegistryError::ReservedCode(5)));
        assert_eq!(r.register_message_type("Y", 1), Err(RegistryError::DuplicateCode(1)));
        assert_eq!(r.register_message_type("Z", 0), Err(RegistryError::ReservedCode(0)));
        assert!(r.register_message_type("W", 16).is_ok());
    }

    #[test]
    fn empty_name() {
        assert_eq!(Registry::new().register_message_type("", 300), Err(RegistryError::EmptyName));
    }
}
