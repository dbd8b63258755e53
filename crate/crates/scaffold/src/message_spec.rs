use std::fmt;
use std::str::FromStr;

use crate::ScaffoldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    String,
    Int,
    Float,
    Bool,
    Bytes,
}

impl FieldKind {
    pub fn rust_type(self) -> &'static str {
        match self {
            FieldKind::String => "String",
            FieldKind::Int => "i64",
            FieldKind::Float => "f64",
            FieldKind::Bool => "bool",
            FieldKind::Bytes => "Vec<u8>",
        }
    }

    /// Payload getter that reads this kind.
    pub(crate) fn getter(self) -> &'static str {
        match self {
            FieldKind::String => "string",
            FieldKind::Int => "int",
            FieldKind::Float => "float",
            FieldKind::Bool => "boolean",
            FieldKind::Bytes => "bytes",
        }
    }

    /// Turns the borrowed getter result into the owned field type.
    pub(crate) fn to_owned_suffix(self) -> &'static str {
        match self {
            FieldKind::String => ".to_owned()",
            FieldKind::Bytes => ".to_vec()",
            _ => "",
        }
    }

    pub(crate) fn is_copy(self) -> bool {
        !matches!(self, FieldKind::String | FieldKind::Bytes)
    }

    pub(crate) fn default_expr(self) -> &'static str {
        match self {
            FieldKind::String => "String::new()",
            FieldKind::Int => "0",
            FieldKind::Float => "0.0",
            FieldKind::Bool => "false",
            FieldKind::Bytes => "Vec::new()",
        }
    }

    pub(crate) fn sample_expr(self) -> &'static str {
        match self {
            FieldKind::String => "\"sample\".to_owned()",
            FieldKind::Int => "7",
            FieldKind::Float => "1.5",
            FieldKind::Bool => "true",
            FieldKind::Bytes => "vec![1, 2, 3]",
        }
    }
}

impl FromStr for FieldKind {
    type Err = ScaffoldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "string" | "str" => Ok(FieldKind::String),
            "int" | "i64" => Ok(FieldKind::Int),
            "float" | "f64" => Ok(FieldKind::Float),
            "bool" => Ok(FieldKind::Bool),
            "bytes" => Ok(FieldKind::Bytes),
            _ => Err(ScaffoldError::InvalidSpec(format!(
                "unknown field kind `{s}` (expected string, int, float, bool or bytes)"
            ))),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::String => "string",
            FieldKind::Int => "int",
            FieldKind::Float => "float",
            FieldKind::Bool => "bool",
            FieldKind::Bytes => "bytes",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub kind: FieldKind,
}

/// What the user asks for: a base name and the fields of each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSpec {
    pub base_name: String,
    pub request_fields: Vec<Field>,
    pub response_fields: Vec<Field>,
}

const KEYWORDS: &[&str] = &[
    "as", "async", "await", "break", "const", "continue", "crate", "dyn", "else", "enum", "extern", "false", "fn",
    "for", "if", "impl", "in", "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "static",
    "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while", "abstract", "become", "box", "do",
    "final", "gen", "macro", "override", "priv", "try", "typeof", "unsized", "virtual", "yield",
];

impl MessageSpec {
    /// `request` and `response` use the command-line form `name:kind,...`.
    pub fn parse(base_name: &str, request: &str, response: &str) -> Result<Self, ScaffoldError> {
        let spec = MessageSpec {
            base_name: base_name.to_owned(),
            request_fields: parse_fields(request)?,
            response_fields: parse_fields(response)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScaffoldError> {
        let base = &self.base_name;
        let mut chars = base.chars();
        let camel = chars.next().is_some_and(|c| c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphanumeric());
        if !camel {
            return Err(ScaffoldError::InvalidSpec(format!(
                "base name `{base}` must be UpperCamelCase ASCII, e.g. Echo"
            )));
        }
        for (side, fields) in [("request", &self.request_fields), ("response", &self.response_fields)] {
            if fields.is_empty() {
                return Err(ScaffoldError::InvalidSpec(format!("the {side} needs at least one field")));
            }
            for (i, field) in fields.iter().enumerate() {
                validate_field_name(&field.name)?;
                if fields[..i].iter().any(|f| f.name == field.name) {
                    return Err(ScaffoldError::InvalidSpec(format!(
                        "duplicate {side} field `{}`",
                        field.name
                    )));
                }
            }
        }
        Ok(())
    }
}

fn validate_field_name(name: &str) -> Result<(), ScaffoldError> {
    let mut chars = name.chars();
    let ident = chars.next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if !ident || name == "_" || name.starts_with("__") || KEYWORDS.contains(&name) {
        return Err(ScaffoldError::InvalidSpec(format!(
            "field name `{name}` must be a snake_case identifier"
        )));
    }
    Ok(())
}

pub fn parse_fields(text: &str) -> Result<Vec<Field>, ScaffoldError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, kind) = item
                .split_once(':')
                .ok_or_else(|| ScaffoldError::InvalidSpec(format!("expected name:kind, got `{item}`")))?;
            Ok(Field {
                name: name.trim().to_owned(),
                kind: kind.trim().parse()?,
            })
        })
        .collect()
}

/// Every identifier derived from the base name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Names {
    pub base: String,
    pub snake: String,
    pub upper: String,
    pub request: String,
    pub response: String,
    pub stream: String,
    pub request_thread: String,
    pub request_thread_creator: String,
    pub request_dispatcher: String,
    pub accessor: String,
    pub sentinel: String,
    pub request_code: String,
    pub response_code: String,
}

impl Names {
    pub fn new(base: &str) -> Self {
        let snake = snake_case(base);
        let upper = snake.to_ascii_uppercase();
        Names {
            base: base.to_owned(),
            request: format!("{base}Request"),
            response: format!("{base}Response"),
            stream: format!("{base}Stream"),
            request_thread: format!("{base}RequestThread"),
            request_thread_creator: format!("{base}RequestThreadCreator"),
            request_dispatcher: format!("{snake}_request_dispatcher"),
            accessor: format!("get_{snake}"),
            sentinel: format!("NO_{upper}_RESPONSE"),
            request_code: format!("{upper}_REQUEST"),
            response_code: format!("{upper}_RESPONSE"),
            snake,
            upper,
        }
    }
}

pub fn snake_case(camel: &str) -> String {
    let mut out = String::new();
    let chars: Vec<char> = camel.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_ascii_uppercase() {
            let prev_lower = i > 0 && (chars[i - 1].is_ascii_lowercase() || chars[i - 1].is_ascii_digit());
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_ascii_lowercase());
            if i > 0 && (prev_lower || (next_lower && chars[i - 1].is_ascii_uppercase())) {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}
