"""Reversible splicing, span arithmetic, and build validation."""

import pytest

from conftest import tree_hash
from generators import make_crate
from safelift.errors import OverlappingEdits, SpanOutOfDate
from safelift.source_model import SourceSpan
from safelift.splice import (
    BackupToken,
    SpliceSet,
    _add_imports,
    apply_edit_to_span,
    file_hash,
    revert,
    snapshot_hashes,
    splice,
)
from safelift.validate import COMPILE_ERROR, PASS, TEST_FAILURE, TIMEOUT, validate

SRC = (
    "use std::os::raw::c_int;\n"
    "\n"
    "fn f(x: c_int) -> c_int {\n"
    "    x + 1\n"
    "}\n"
    "\n"
    "fn main() {\n"
    "    let y = f(1);\n"
    "    println!(\"{}\", y);\n"
    "}\n"
)


def _crate(tmp_path):
    root = tmp_path / "c"
    make_crate(root, {"src/main.rs": SRC})
    return root


def test_splice_and_revert_byte_exact(tmp_path):
    root = _crate(tmp_path)
    before = tree_hash(root)
    s = SpliceSet(
        edits=[(SourceSpan("src/main.rs", 3, 5), "fn f(x: i32) -> i32 {\n    x + 2\n}")],
        expected_hashes=snapshot_hashes(root, ["src/main.rs"]),
    )
    token = splice(root, s)
    text = (root / "src/main.rs").read_text()
    assert "x + 2" in text and "x + 1" not in text
    assert tree_hash(root) != before
    revert(root, token)
    assert tree_hash(root) == before


def test_multiple_edits_same_file_keep_coordinates(tmp_path):
    root = _crate(tmp_path)
    s = SpliceSet(
        edits=[
            # function body grows by two lines; the later edit must still land
            (SourceSpan("src/main.rs", 3, 5), "fn f(x: i32) -> i32 {\n    let t = x;\n    let u = t;\n    u + 2\n}"),
            (SourceSpan("src/main.rs", 8, 8), "    let y = f(1i32);"),
        ]
    )
    splice(root, s)
    lines = (root / "src/main.rs").read_text().split("\n")
    assert lines[9].strip() == "let y = f(1i32);"
    assert "let y = f(1);" not in "\n".join(lines)


def test_overlapping_edits_rejected_before_touching_files(tmp_path):
    root = _crate(tmp_path)
    before = tree_hash(root)
    s = SpliceSet(
        edits=[
            (SourceSpan("src/main.rs", 3, 5), "a"),
            (SourceSpan("src/main.rs", 5, 6), "b"),
        ]
    )
    with pytest.raises(OverlappingEdits):
        splice(root, s)
    assert tree_hash(root) == before


def test_stale_hash_rejected(tmp_path):
    root = _crate(tmp_path)
    hashes = snapshot_hashes(root, ["src/main.rs"])
    (root / "src/main.rs").write_text(SRC + "// drift\n")
    s = SpliceSet(edits=[(SourceSpan("src/main.rs", 3, 5), "x")], expected_hashes=hashes)
    with pytest.raises(SpanOutOfDate):
        splice(root, s)


def test_span_past_eof_rejected(tmp_path):
    root = _crate(tmp_path)
    s = SpliceSet(edits=[(SourceSpan("src/main.rs", 9, 99), "x")])
    with pytest.raises(SpanOutOfDate):
        splice(root, s)


def test_import_insertion_and_dedup(tmp_path):
    root = _crate(tmp_path)
    s = SpliceSet(
        import_additions={
            "src/main.rs": ["use std::mem;", "use std::os::raw::c_int;", "use std::mem;"]
        }
    )
    token = splice(root, s)
    lines = (root / "src/main.rs").read_text().split("\n")
    # lands right after the existing use line; duplicates dropped
    assert lines[0] == "use std::os::raw::c_int;"
    assert lines[1] == "use std::mem;"
    assert lines.count("use std::mem;") == 1
    assert lines.count("use std::os::raw::c_int;") == 1
    assert token.import_landings["src/main.rs"] == (1, 1)


def test_import_into_file_without_uses():
    text = "// top comment\n\nfn g() {}\n"
    out, at, added = _add_imports(text, ["use std::mem;"])
    assert out.split("\n")[2] == "use std::mem;"
    assert (at, added) == (2, 1)


def test_import_noop_returns_zero_landing(tmp_path):
    root = _crate(tmp_path)
    s = SpliceSet(import_additions={"src/main.rs": ["use std::os::raw::c_int;"]})
    token = splice(root, s)
    assert token.import_landings == {}
    assert (root / "src/main.rs").read_text() == SRC


def test_backup_token_covers_import_only_files(tmp_path):
    root = _crate(tmp_path)
    before = tree_hash(root)
    token = splice(root, SpliceSet(import_additions={"src/main.rs": ["use std::mem;"]}))
    assert "use std::mem;" in (root / "src/main.rs").read_text()
    revert(root, token)
    assert tree_hash(root) == before


def test_apply_edit_to_span_cases():
    f = "src/main.rs"
    edit = SourceSpan(f, 10, 14)  # 5 lines
    # strictly after the edit: shifts by delta
    assert apply_edit_to_span(SourceSpan(f, 20, 25), edit, 2) == SourceSpan(f, 17, 22)
    # strictly before: untouched
    assert apply_edit_to_span(SourceSpan(f, 2, 9), edit, 2) == SourceSpan(f, 2, 9)
    # other file: untouched
    other = SourceSpan("src/lib.rs", 10, 14)
    assert apply_edit_to_span(other, edit, 2) == other
    # exact match: resized in place
    assert apply_edit_to_span(SourceSpan(f, 10, 14), edit, 3) == SourceSpan(f, 10, 12)
    assert apply_edit_to_span(SourceSpan(f, 10, 14), edit, 0) is None
    # span contains the edit: end stretches by delta
    assert apply_edit_to_span(SourceSpan(f, 8, 20), edit, 8) == SourceSpan(f, 8, 23)
    # edit swallows the span
    assert apply_edit_to_span(SourceSpan(f, 11, 12), edit, 2) is None
    # partial overlap: span no longer meaningful
    assert apply_edit_to_span(SourceSpan(f, 12, 20), edit, 2) is None


def test_file_hash_is_text_sha256():
    import hashlib

    assert file_hash("abc") == hashlib.sha256(b"abc").hexdigest()


# --- validation --------------------------------------------------------------


def test_validate_pass(minicrate):
    out = validate(minicrate, test_cmds=["cargo run -q"])
    assert out.ok and out.status == PASS


def test_validate_compile_error(minicrate):
    path = minicrate / "src/main.rs"
    path.write_text(path.read_text().replace("fn main()", "fn main(", 1))
    out = validate(minicrate)
    assert out.status == COMPILE_ERROR
    assert "error" in out.log


def test_validate_test_failure_names_command(minicrate):
    out = validate(minicrate, test_cmds=["cargo run -q", "false"])
    assert out.status == TEST_FAILURE
    assert out.failed == ["false"]


def test_validate_timeout(minicrate):
    out = validate(minicrate, build_cmd="sleep 5", timeout=0.3)
    assert out.status == TIMEOUT
    assert "timed out" in out.log
