//! The generated header must compile as C and as C++.

use std::path::Path;
use std::process::Command;

fn compiles(compiler: &str, lang: &str) -> Option<bool> {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sgspline.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join(format!("probe.{lang}"));
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ SgSpace *s = 0; return sg_space_new(2, 3, &s) == SG_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let status = Command::new(compiler).arg("-fsyntax-only").arg(&src).status().ok()?;
    Some(status.success())
}

#[test]
fn header_is_valid_c_and_cpp() {
    for (cc, lang) in [("cc", "c"), ("c++", "cpp")] {
        match compiles(cc, lang) {
            Some(ok) => assert!(ok, "{cc} rejected the header"),
            None => eprintln!("{cc} not available, skipped"),
        }
    }
}
