//! Template rendering: plain `${placeholder}` text substitution.

use crate::message_spec::{Field, MessageSpec, Names};

const MESSAGE: &str = include_str!("../templates/message.rs.tmpl");
const STREAM: &str = include_str!("../templates/stream.rs.tmpl");
const REQUEST_THREAD: &str = include_str!("../templates/request_thread.rs.tmpl");
const REQUEST_THREAD_CREATOR: &str = include_str!("../templates/request_thread_creator.rs.tmpl");
const LOOPBACK: &str = include_str!("../templates/loopback.rs.tmpl");
const ACCESSOR: &str = include_str!("../templates/accessor.rs.tmpl");

pub fn substitute(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_owned();
    for (key, value) in vars {
        out = out.replace(&format!("${{{key}}}"), value);
    }
    debug_assert!(!out.contains("${"), "unsubstituted placeholder in:\n{out}");
    out
}

fn base_vars(names: &Names) -> Vec<(&'static str, String)> {
    vec![
        ("Name", names.base.clone()),
        ("NAME", names.upper.clone()),
        ("snake", names.snake.clone()),
    ]
}

pub fn message(type_name: &str, type_code: &str, fields: &[Field]) -> String {
    let struct_fields = fields
        .iter()
        .map(|f| format!("    pub {}: {},", f.name, f.kind.rust_type()))
        .collect::<Vec<_>>()
        .join("\n");
    let new_params = fields
        .iter()
        .map(|f| format!("{}: {}", f.name, f.kind.rust_type()))
        .collect::<Vec<_>>()
        .join(", ");
    let field_list = fields.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(", ");
    let with_chain = fields
        .iter()
        .map(|f| {
            let value = if f.kind.is_copy() {
                format!("self.{}", f.name)
            } else {
                format!("self.{}.clone()", f.name)
            };
            format!("            .with(\"{}\", {value})", f.name)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let read_fields = fields
        .iter()
        .map(|f| {
            format!(
                "            {0}: payload.{1}(\"{0}\")?{2},",
                f.name,
                f.kind.getter(),
                f.kind.to_owned_suffix()
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    substitute(
        MESSAGE,
        &[
            ("Type", type_name.to_owned()),
            ("TYPE_CODE", type_code.to_owned()),
            ("struct_fields", struct_fields),
            ("new_params", new_params),
            ("field_list", field_list),
            ("with_chain", with_chain),
            ("read_fields", read_fields),
        ],
    )
}

pub fn stream(names: &Names) -> String {
    substitute(STREAM, &base_vars(names))
}

/// A response field is copied from the request when a request field has the
/// same name and kind; otherwise it gets the kind's default.
fn copied(spec: &MessageSpec, response_field: &Field) -> bool {
    spec.request_fields.contains(response_field)
}

pub fn request_thread(spec: &MessageSpec, names: &Names) -> String {
    let any_copied = spec.response_fields.iter().any(|f| copied(spec, f));
    let response_args = spec
        .response_fields
        .iter()
        .map(|f| {
            if copied(spec, f) {
                format!("message.{}", f.name)
            } else {
                f.kind.default_expr().to_owned()
            }
        })
        .collect::<Vec<_>>()
        .join(", ");
    let mut vars = base_vars(names);
    vars.push(("message_binding", if any_copied { "message" } else { "_message" }.to_owned()));
    vars.push(("response_args", response_args));
    substitute(REQUEST_THREAD, &vars)
}

pub fn request_thread_creator(names: &Names) -> String {
    substitute(REQUEST_THREAD_CREATOR, &base_vars(names))
}

pub fn loopback(spec: &MessageSpec, names: &Names, crate_ident: &str) -> String {
    let sample_args = spec
        .request_fields
        .iter()
        .map(|f| f.kind.sample_expr())
        .collect::<Vec<_>>()
        .join(", ");
    let expected_args = spec
        .response_fields
        .iter()
        .map(|f| {
            if copied(spec, f) {
                f.kind.sample_expr()
            } else {
                f.kind.default_expr()
            }
        })
        .collect::<Vec<_>>()
        .join(", ");
    let mut vars = base_vars(names);
    vars.push(("crate", crate_ident.to_owned()));
    vars.push(("sample_args", sample_args));
    vars.push(("expected_args", expected_args));
    substitute(LOOPBACK, &vars)
}

pub fn accessor(spec: &MessageSpec, names: &Names) -> String {
    let accessor_params: String = spec
        .request_fields
        .iter()
        .map(|f| format!(", {}: {}", f.name, f.kind.rust_type()))
        .collect();
    let accessor_args = spec
        .request_fields
        .iter()
        .map(|f| f.name.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let mut vars = base_vars(names);
    vars.push(("accessor_params", accessor_params));
    vars.push(("accessor_args", accessor_args));
    substitute(ACCESSOR, &vars)
}
