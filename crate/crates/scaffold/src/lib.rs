//! Adds a request/response pair to a polldesk application by copying the
//! sample pair's code sites and replacing names and fields.
//!
//! [`plan`] works out everything that would change: new source files
//! rendered from the templates, and snippets to insert at the
//! `// scaffold:<site>` anchor comments of existing sources. [`generate`]
//! writes them, or only reports them on a dry run. A snippet whose anchor is
//! missing is printed for manual insertion instead.

mod message_spec;
mod render;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub use message_spec::{parse_fields, snake_case, Field, FieldKind, MessageSpec, Names};

/// Application type codes start here; lower codes are built in.
pub const FIRST_APPLICATION_CODE: u32 = 100;

#[derive(Debug, thiserror::Error)]
pub enum ScaffoldError {
    #[error("invalid message spec: {0}")]
    InvalidSpec(String),
    #[error("`{0}` is already used in this project")]
    NameCollision(String),
    #[error("{root} is not a polldesk project: {reason}")]
    UnrecognizedProject { root: PathBuf, reason: String },
    #[error("cannot write {path}: {source}")]
    WriteFailure { path: PathBuf, source: io::Error },
}

/// The kinds of site a new pair touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteCategory {
    Request,
    Response,
    Stream,
    Worker,
    Factory,
    LoopbackTest,
    TypeCodeRegistration,
    ModuleDeclaration,
    DispatcherRegistration,
    ClientAccessor,
    Sentinel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewFile {
    pub category: SiteCategory,
    /// Relative to the project root.
    pub path: PathBuf,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub category: SiteCategory,
    pub path: PathBuf,
    /// Marker text after `// `, e.g. `scaffold:dispatch-routes`.
    pub anchor: String,
    /// Unindented; takes the anchor line's indentation when inserted.
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationPlan {
    pub root: PathBuf,
    pub spec: MessageSpec,
    pub names: Names,
    pub request_code: u32,
    pub response_code: u32,
    pub files: Vec<NewFile>,
    pub patches: Vec<Patch>,
}

impl GenerationPlan {
    pub fn categories(&self) -> Vec<SiteCategory> {
        let mut c: Vec<_> = self
            .files
            .iter()
            .map(|f| f.category)
            .chain(self.patches.iter().map(|p| p.category))
            .collect();
        c.sort();
        c.dedup();
        c
    }

    /// All patches as one text block, in plan order.
    pub fn patch_listing(&self) -> String {
        let mut out = String::new();
        for p in &self.patches {
            out.push_str(&format!("--- {} @ {}\n{}", p.path.display(), p.anchor, p.snippet));
            if !p.snippet.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }
}

const MESSAGE_TYPE: &str = "src/message_type.rs";
const MESSAGES_MOD: &str = "src/messages/mod.rs";
const STREAMS_MOD: &str = "src/streams/mod.rs";
const THREADS_MOD: &str = "src/threads/mod.rs";
const SERVER_DISPATCHER: &str = "src/server_dispatcher.rs";
const CLIENT_READER: &str = "src/client_reader.rs";
const MESSAGE_CONFIG: &str = "src/message_config.rs";

const PROJECT_FILES: &[&str] = &[
    "Cargo.toml",
    MESSAGE_TYPE,
    MESSAGES_MOD,
    STREAMS_MOD,
    THREADS_MOD,
    SERVER_DISPATCHER,
    CLIENT_READER,
    MESSAGE_CONFIG,
];

fn read(root: &Path, rel: &str) -> Result<String, ScaffoldError> {
    fs::read_to_string(root.join(rel)).map_err(|e| ScaffoldError::UnrecognizedProject {
        root: root.to_owned(),
        reason: format!("cannot read {rel}: {e}"),
    })
}

fn crate_ident(root: &Path) -> Result<String, ScaffoldError> {
    let manifest: toml::Table = read(root, "Cargo.toml")?
        .parse()
        .map_err(|e| ScaffoldError::UnrecognizedProject {
            root: root.to_owned(),
            reason: format!("bad Cargo.toml: {e}"),
        })?;
    manifest
        .get("package")
        .and_then(|p| p.get("name"))
        .and_then(|n| n.as_str())
        .map(|n| n.replace('-', "_"))
        .ok_or_else(|| ScaffoldError::UnrecognizedProject {
            root: root.to_owned(),
            reason: "Cargo.toml has no package name".into(),
        })
}

/// Highest application code assigned in the type-code source.
fn max_application_code(source: &str) -> Option<u32> {
    let re = regex::Regex::new(r"TypeCode\((\d+)\)").expect("valid regex");
    re.captures_iter(source)
        .filter_map(|c| c[1].parse::<u32>().ok())
        .filter(|&c| c >= FIRST_APPLICATION_CODE)
        .max()
}

fn planned_paths(names: &Names) -> [(SiteCategory, String); 6] {
    let s = &names.snake;
    [
        (SiteCategory::Request, format!("src/messages/{s}_request.rs")),
        (SiteCategory::Response, format!("src/messages/{s}_response.rs")),
        (SiteCategory::Stream, format!("src/streams/{s}_stream.rs")),
        (SiteCategory::Worker, format!("src/threads/{s}_request_thread.rs")),
        (SiteCategory::Factory, format!("src/threads/{s}_request_thread_creator.rs")),
        (SiteCategory::LoopbackTest, format!("tests/{s}_loopback.rs")),
    ]
}

fn collision(root: &Path, names: &Names, type_source: &str) -> bool {
    let declared = |ident: &str| {
        let re = regex::Regex::new(&format!(r"\b{ident}\b")).expect("valid regex");
        re.is_match(type_source)
    };
    declared(&names.request_code)
        || declared(&names.response_code)
        || planned_paths(names).iter().any(|(_, p)| root.join(p).exists())
}

/// Works out every file and snippet for `spec` without touching the disk.
/// Deterministic for a given spec and project state.
pub fn plan(spec: &MessageSpec, root: &Path) -> Result<GenerationPlan, ScaffoldError> {
    spec.validate()?;
    if let Some(missing) = PROJECT_FILES.iter().find(|f| !root.join(f).is_file()) {
        return Err(ScaffoldError::UnrecognizedProject {
            root: root.to_owned(),
            reason: format!("{missing} not found"),
        });
    }
    let crate_ident = crate_ident(root)?;
    let type_source = read(root, MESSAGE_TYPE)?;
    let names = Names::new(&spec.base_name);
    if collision(root, &names, &type_source) {
        return Err(ScaffoldError::NameCollision(spec.base_name.clone()));
    }
    let request_code = max_application_code(&type_source).map_or(FIRST_APPLICATION_CODE, |c| c + 1);
    let response_code = request_code + 1;

    let contents = [
        render::message(&names.request, &names.request_code, &spec.request_fields),
        render::message(&names.response, &names.response_code, &spec.response_fields),
        render::stream(&names),
        render::request_thread(spec, &names),
        render::request_thread_creator(&names),
        render::loopback(spec, &names, &crate_ident),
    ];
    let files = planned_paths(&names)
        .into_iter()
        .zip(contents)
        .map(|((category, path), contents)| NewFile {
            category,
            path: path.into(),
            contents,
        })
        .collect();

    let n = &names;
    let s = &n.snake;
    let patch = |category, path: &str, anchor: &str, snippet: String| Patch {
        category,
        path: path.into(),
        anchor: format!("scaffold:{anchor}"),
        snippet,
    };
    use SiteCategory::*;
    let patches = vec![
        patch(
            TypeCodeRegistration,
            MESSAGE_TYPE,
            "type-codes",
            format!(
                "pub const {}: TypeCode = TypeCode({request_code});\npub const {}: TypeCode = TypeCode({response_code});\n",
                n.request_code, n.response_code
            ),
        ),
        patch(
            TypeCodeRegistration,
            MESSAGE_TYPE,
            "type-registrations",
            format!(
                "(\"{0}\", {0}),\n(\"{1}\", {1}),\n",
                n.request_code, n.response_code
            ),
        ),
        patch(
            ModuleDeclaration,
            MESSAGES_MOD,
            "modules",
            format!("mod {s}_request;\nmod {s}_response;\n"),
        ),
        patch(
            ModuleDeclaration,
            MESSAGES_MOD,
            "exports",
            format!("pub use {s}_request::{};\npub use {s}_response::{};\n", n.request, n.response),
        ),
        patch(ModuleDeclaration, STREAMS_MOD, "modules", format!("mod {s}_stream;\n")),
        patch(
            ModuleDeclaration,
            STREAMS_MOD,
            "exports",
            format!("pub use {s}_stream::{};\n", n.stream),
        ),
        patch(
            ModuleDeclaration,
            THREADS_MOD,
            "modules",
            format!("mod {s}_request_thread;\nmod {s}_request_thread_creator;\n"),
        ),
        patch(
            ModuleDeclaration,
            THREADS_MOD,
            "exports",
            format!(
                "pub use {s}_request_thread::{};\npub use {s}_request_thread_creator::{};\n",
                n.request_thread, n.request_thread_creator
            ),
        ),
        patch(
            DispatcherRegistration,
            SERVER_DISPATCHER,
            "dispatcher-fields",
            format!("{}: Arc<RequestDispatcher>,\n", n.request_dispatcher),
        ),
        patch(
            DispatcherRegistration,
            SERVER_DISPATCHER,
            "dispatch-routes",
            format!(
                "let {} = inner.register_request_route(\n    message_type::{},\n    config.request.clone(),\n    threads::{},\n)?;\n",
                n.request_dispatcher, n.request_code, n.request_thread_creator
            ),
        ),
        patch(
            DispatcherRegistration,
            SERVER_DISPATCHER,
            "dispatcher-init",
            format!("{},\n", n.request_dispatcher),
        ),
        patch(
            DispatcherRegistration,
            SERVER_DISPATCHER,
            "dispatcher-dispose",
            format!("self.{}.dispose();\n", n.request_dispatcher),
        ),
        patch(ClientAccessor, CLIENT_READER, "reader-accessors", format!("{}\n", render::accessor(spec, n))),
        patch(
            Sentinel,
            MESSAGE_CONFIG,
            "sentinels",
            format!(
                "pub static {}: LazyLock<Envelope> = LazyLock::new(|| Envelope::sentinel(message_type::{}));\n",
                n.sentinel, n.response_code
            ),
        ),
    ];

    Ok(GenerationPlan {
        root: root.to_owned(),
        spec: spec.clone(),
        request_code,
        response_code,
        names,
        files,
        patches,
    })
}

/// Inserts `snippet` above the anchor line, indented like it. `None` when
/// the anchor is absent.
pub fn insert_at_anchor(source: &str, anchor: &str, snippet: &str) -> Option<String> {
    let marker = format!("// {anchor}");
    let mut out = String::with_capacity(source.len() + snippet.len());
    let mut found = false;
    for line in source.split_inclusive('\n') {
        if !found && line.trim() == marker {
            found = true;
            let indent = &line[..line.len() - line.trim_start().len()];
            for s in snippet.lines() {
                if !s.is_empty() {
                    out.push_str(indent);
                    out.push_str(s);
                }
                out.push('\n');
            }
        }
        out.push_str(line);
    }
    found.then_some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatchOutcome {
    Applied,
    /// Dry run with the anchor present.
    WouldApply,
    /// Anchor not found; the snippet has to be inserted by hand.
    AnchorMissing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub applied: bool,
    pub created: Vec<PathBuf>,
    pub patches: Vec<(Patch, PatchOutcome)>,
}

impl Report {
    pub fn anchors_missing(&self) -> usize {
        self.patches
            .iter()
            .filter(|(_, o)| *o == PatchOutcome::AnchorMissing)
            .count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.applied {
            writeln!(f, "dry run, nothing written")?;
        }
        let verb = if self.applied { "created" } else { "would create" };
        for path in &self.created {
            writeln!(f, "{verb} {}", path.display())?;
        }
        for (patch, outcome) in &self.patches {
            let target = format!("{} @ {}", patch.path.display(), patch.anchor);
            match outcome {
                PatchOutcome::Applied => writeln!(f, "patched {target}")?,
                PatchOutcome::WouldApply => writeln!(f, "would patch {target}")?,
                PatchOutcome::AnchorMissing => {
                    writeln!(f, "anchor missing, insert by hand at {target}:")?;
                    for line in patch.snippet.lines() {
                        writeln!(f, "    {line}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Writes the plan when `apply` is set; otherwise only reports it. New
/// files and patched sources are all computed before anything is written.
pub fn generate(plan: &GenerationPlan, apply: bool) -> Result<Report, ScaffoldError> {
    let root = &plan.root;
    if plan.files.iter().any(|f| root.join(&f.path).exists()) {
        return Err(ScaffoldError::NameCollision(plan.spec.base_name.clone()));
    }
    let mut sources: Vec<(PathBuf, String)> = Vec::new();
    let mut outcomes = Vec::new();
    for patch in &plan.patches {
        let i = match sources.iter().position(|(p, _)| *p == patch.path) {
            Some(i) => i,
            None => {
                let path = root.join(&patch.path);
                let text = fs::read_to_string(&path).map_err(|source| ScaffoldError::WriteFailure { path, source })?;
                sources.push((patch.path.clone(), text));
                sources.len() - 1
            }
        };
        let outcome = match insert_at_anchor(&sources[i].1, &patch.anchor, &patch.snippet) {
            Some(patched) => {
                sources[i].1 = patched;
                if apply {
                    PatchOutcome::Applied
                } else {
                    PatchOutcome::WouldApply
                }
            }
            None => PatchOutcome::AnchorMissing,
        };
        outcomes.push((patch.clone(), outcome));
    }

    if apply {
        for file in &plan.files {
            write(&root.join(&file.path), &file.contents)?;
        }
        for (rel, text) in &sources {
            write(&root.join(rel), text)?;
        }
    }
    Ok(Report {
        applied: apply,
        created: plan.files.iter().map(|f| f.path.clone()).collect(),
        patches: outcomes,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), ScaffoldError> {
    let failure = |source| ScaffoldError::WriteFailure {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(failure)?;
    }
    fs::write(path, contents).map_err(failure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_insertion_keeps_indent_and_anchor() {
        let src = "a\n    // scaffold:x\nb\n";
        assert_eq!(
            insert_at_anchor(src, "scaffold:x", "one\n\ntwo\n").unwrap(),
            "a\n    one\n\n    two\n    // scaffold:x\nb\n"
        );
        assert_eq!(insert_at_anchor(src, "scaffold:y", "one"), None);
    }

    #[test]
    fn code_scan() {
        let src = "pub const A: TypeCode = TypeCode(100);\npub const B: TypeCode = TypeCode(104);\nTypeCode(3)";
        assert_eq!(max_application_code(src), Some(104));
        assert_eq!(max_application_code("TypeCode(2)"), None);
    }
}
