use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use polldesk_scaffold::{generate, plan, MessageSpec, PatchOutcome, ScaffoldError, SiteCategory};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/weather_app")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/test")
}

fn test_spec() -> MessageSpec {
    MessageSpec::parse("Test", "request:string", "response:string").unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_owned(), fs::read_to_string(&path).unwrap());
            }
        }
    }
    out
}

fn scratch_project() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    dir
}

/// Set UPDATE_GOLDEN=1 to rewrite the golden files after an intended change.
#[test]
fn test_spec_matches_golden_files() {
    let plan = plan(&test_spec(), &fixture()).unwrap();
    let mut outputs: Vec<(String, String)> = plan
        .files
        .iter()
        .map(|f| (f.path.file_name().unwrap().to_string_lossy().into_owned(), f.contents.clone()))
        .collect();
    outputs.push(("patches.txt".into(), plan.patch_listing()));
    let dir = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(&dir).unwrap();
        for (name, contents) in &outputs {
            fs::write(dir.join(name), contents).unwrap();
        }
    }
    for (name, contents) in &outputs {
        let golden = fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("golden {name}: {e}"));
        assert!(golden.as_bytes() == contents.as_bytes(), "{name} differs from golden:\n{contents}");
    }
    assert_eq!(fs::read_dir(&dir).unwrap().count(), outputs.len());
}

#[test]
fn test_spec_names_every_counterpart() {
    let plan = plan(&test_spec(), &fixture()).unwrap();
    let n = &plan.names;
    assert_eq!(n.request, "TestRequest");
    assert_eq!(n.response, "TestResponse");
    assert_eq!(n.stream, "TestStream");
    assert_eq!(n.request_thread, "TestRequestThread");
    assert_eq!(n.request_thread_creator, "TestRequestThreadCreator");
    assert_eq!(n.request_dispatcher, "test_request_dispatcher");
    assert_eq!(n.sentinel, "NO_TEST_RESPONSE");
    // fixture's highest application code is 105
    assert_eq!((plan.request_code, plan.response_code), (106, 107));
    let listing = plan.patch_listing();
    for needle in [
        "let test_request_dispatcher = inner.register_request_route(",
        "pub static NO_TEST_RESPONSE",
        "pub fn get_test(&self, request: String) -> Option<crate::messages::TestResponse>",
        "pub const TEST_REQUEST: TypeCode = TypeCode(106);",
    ] {
        assert!(listing.contains(needle), "missing {needle}");
    }
}

#[test]
fn generated_worker_has_the_double_while_shape() {
    let plan = plan(&test_spec(), &fixture()).unwrap();
    let worker = &plan.files.iter().find(|f| f.category == SiteCategory::Worker).unwrap().contents;
    let outer = worker.find("while !queue.is_shutdown() {").unwrap();
    let inner = worker.find("while let Some(request) = queue.get_request() {").unwrap();
    let hold = worker.find("queue.hold_on();").unwrap();
    assert!(outer < inner && inner < hold);
}

#[test]
fn every_site_category_is_covered() {
    for (base, req, resp) in [("Test", "request:string", "response:string"), ("Sum", "a:int,b:int", "total:int,ok:bool")] {
        let spec = MessageSpec::parse(base, req, resp).unwrap();
        let plan = plan(&spec, &fixture()).unwrap();
        use SiteCategory::*;
        assert_eq!(
            plan.categories(),
            [
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
            ]
        );
    }
}

#[test]
fn plan_is_deterministic() {
    assert_eq!(plan(&test_spec(), &fixture()).unwrap(), plan(&test_spec(), &fixture()).unwrap());
}

#[test]
fn existing_name_collides() {
    let spec = MessageSpec::parse("Weather", "city:string", "temperature:float").unwrap();
    assert!(matches!(plan(&spec, &fixture()), Err(ScaffoldError::NameCollision(n)) if n == "Weather"));
}

#[test]
fn unknown_layout_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("Cargo.toml"), "[package]\nname = \"x\"\n").unwrap();
    assert!(matches!(plan(&test_spec(), dir.path()), Err(ScaffoldError::UnrecognizedProject { .. })));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = scratch_project();
    let before = snapshot(dir.path());
    let plan = plan(&test_spec(), dir.path()).unwrap();
    let report = generate(&plan, false).unwrap();
    assert_eq!(snapshot(dir.path()), before);
    assert!(!report.applied);
    assert_eq!(report.created.len(), plan.files.len());
    assert!(report.patches.iter().all(|(_, o)| *o == PatchOutcome::WouldApply));
    assert!(report.to_string().starts_with("dry run, nothing written\n"));
}

#[test]
fn apply_writes_files_patches_anchors_and_refuses_a_repeat() {
    let dir = scratch_project();
    let plan = plan(&test_spec(), dir.path()).unwrap();
    let report = generate(&plan, true).unwrap();
    assert_eq!(report.anchors_missing(), 0);
    for f in &plan.files {
        assert_eq!(fs::read_to_string(dir.path().join(&f.path)).unwrap(), f.contents);
    }
    let types = fs::read_to_string(dir.path().join("src/message_type.rs")).unwrap();
    assert!(types.contains(
        "pub const TEST_RESPONSE: TypeCode = TypeCode(107);\n// scaffold:type-codes\n"
    ));
    assert!(types.contains("        (\"TEST_REQUEST\", TEST_REQUEST),\n"));
    let dispatcher = fs::read_to_string(dir.path().join("src/server_dispatcher.rs")).unwrap();
    assert!(dispatcher.contains("        self.test_request_dispatcher.dispose();\n        // scaffold:dispatcher-dispose"));

    assert!(matches!(plan_again(dir.path()), Err(ScaffoldError::NameCollision(_))));
    assert!(matches!(generate(&plan, true), Err(ScaffoldError::NameCollision(_))));
}

fn plan_again(root: &Path) -> Result<polldesk_scaffold::GenerationPlan, ScaffoldError> {
    plan(&test_spec(), root)
}

#[test]
fn missing_anchor_falls_back_to_printing() {
    let dir = scratch_project();
    let path = dir.path().join("src/message_config.rs");
    let text = fs::read_to_string(&path).unwrap().replace("// scaffold:sentinels\n", "");
    fs::write(&path, &text).unwrap();
    let plan = plan(&test_spec(), dir.path()).unwrap();
    let report = generate(&plan, true).unwrap();
    assert_eq!(report.anchors_missing(), 1);
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
    let shown = report.to_string();
    assert!(shown.contains("anchor missing, insert by hand at src/message_config.rs @ scaffold:sentinels:"));
    assert!(shown.contains("    pub static NO_TEST_RESPONSE"));
}
