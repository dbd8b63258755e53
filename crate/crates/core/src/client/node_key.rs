use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum NodeKeyError {
    #[error("node key state file: {0}")]
    Io(#[from] io::Error),
    #[error("malformed node key {0:?}: expected 32 hex characters")]
    Malformed(String),
}

/// Identity of a client node: 16 random bytes, hex encoded.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeKey(String);

impl NodeKey {
    pub const LEN: usize = 32;

    pub fn generate() -> Self {
        NodeKey(hex::encode(rand::random::<[u8; 16]>()))
    }

    pub fn parse(s: &str) -> Result<Self, NodeKeyError> {
        let s = s.trim();
        if s.len() != Self::LEN || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(NodeKeyError::Malformed(s.to_owned()));
        }
        Ok(NodeKey(s.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Reads the key from `path`, or generates one and writes it there
    /// (single newline-terminated line) if the file does not exist yet.
    pub fn load_or_create(path: &Path) -> Result<Self, NodeKeyError> {
        match fs::read_to_string(path) {
            Ok(contents) => NodeKey::parse(&contents),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let key = NodeKey::generate();
                key.persist(path)?;
                Ok(key)
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn persist(&self, path: &Path) -> Result<(), NodeKeyError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, format!("{}\n", self.0))?;
        Ok(())
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeKey({})", self.0)
    }
}
