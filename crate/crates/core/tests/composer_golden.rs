mod common;

use std::fs;

use common::{golden_dir, golden_renders};

#[test]
fn ablation_renders_match_golden_files() {
    let renders = golden_renders();
    assert_eq!(renders.len(), 45);
    let bless = std::env::var_os("FQN_PROBE_BLESS").is_some();
    let mut mismatched = Vec::new();
    for (rel, text) in &renders {
        let path = golden_dir().join(rel);
        if bless {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, text).unwrap();
            continue;
        }
        let expected =
            fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if &expected != text {
            mismatched.push(rel.clone());
        }
    }
    assert!(mismatched.is_empty(), "differs from golden: {mismatched:?}");
}

#[test]
fn golden_tree_has_no_strays() {
    let expected: std::collections::BTreeSet<String> =
        golden_renders().into_iter().map(|(r, _)| r).collect();
    let mut found = std::collections::BTreeSet::new();
    for dir in fs::read_dir(golden_dir()).unwrap() {
        let dir = dir.unwrap();
        for file in fs::read_dir(dir.path()).unwrap() {
            let file = file.unwrap();
            found.insert(format!(
                "{}/{}",
                dir.file_name().to_string_lossy(),
                file.file_name().to_string_lossy()
            ));
        }
    }
    assert_eq!(found, expected);
}
