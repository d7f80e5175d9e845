"""Applying parsed translations to the working tree, reversibly.

A SpliceSet gathers every edit of one translation attempt: the unit body
replacement, any call-site rewrites, and new imports. It is applied
atomically; the returned backup token restores every touched file
byte-for-byte. Edits within a file are applied bottom-up so earlier
line numbers survive; imports are appended after the file's last
existing use line, deduplicated against lines already present.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OverlappingEdits, SpanOutOfDate
from .source_model import SourceSpan


@dataclass
class SpliceSet:
    # (span, replacement); replacement is full-line text without a trailing newline
    edits: list[tuple[SourceSpan, str]] = field(default_factory=list)
    import_additions: dict[str, list[str]] = field(default_factory=dict)
    # sha256 of each touched file's text as of the parse the spans came from
    expected_hashes: dict[str, str] = field(default_factory=dict)

    def files(self) -> set[str]:
        return {sp.file for sp, _ in self.edits} | set(self.import_additions)


@dataclass
class BackupToken:
    originals: dict[str, str] = field(default_factory=dict)  # rel path -> text
    # rel path -> (0-based line index where imports landed, lines added),
    # in post-edit coordinates; only files that actually gained lines
    import_landings: dict[str, tuple[int, int]] = field(default_factory=dict)


def file_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def snapshot_hashes(crate_dir: Path, files) -> dict[str, str]:
    return {f: file_hash((crate_dir / f).read_text()) for f in files}


def _check_overlaps(edits: list[tuple[SourceSpan, str]]):
    by_file: dict[str, list[SourceSpan]] = {}
    for sp, _ in edits:
        by_file.setdefault(sp.file, []).append(sp)
    for f, spans in by_file.items():
        spans.sort(key=lambda s: s.start_line)
        for a, b in zip(spans, spans[1:]):
            if b.start_line <= a.end_line:
                raise OverlappingEdits(
                    f"{f}: lines {a.start_line}-{a.end_line} and {b.start_line}-{b.end_line}"
                )


def splice(crate_dir: Path, s: SpliceSet) -> BackupToken:
    """Apply a splice set; the token restores the prior state exactly.

    Raises OverlappingEdits for colliding spans and SpanOutOfDate when a
    touched file no longer matches its recorded hash.
    """
    _check_overlaps(s.edits)
    token = BackupToken()
    texts: dict[str, str] = {}
    for f in sorted(s.files()):
        path = crate_dir / f
        text = path.read_text()
        expected = s.expected_hashes.get(f)
        if expected is not None and file_hash(text) != expected:
            raise SpanOutOfDate(f"{f} changed since its spans were computed")
        token.originals[f] = text
        texts[f] = text

    by_file: dict[str, list[tuple[SourceSpan, str]]] = {}
    for sp, repl in s.edits:
        by_file.setdefault(sp.file, []).append((sp, repl))
    for f, edits in by_file.items():
        lines = texts[f].split("\n")
        for sp, repl in sorted(edits, key=lambda e: e[0].start_line, reverse=True):
            if sp.end_line > len(lines):
                raise SpanOutOfDate(f"{f}: span {sp.start_line}-{sp.end_line} exceeds file")
            lines[sp.start_line - 1 : sp.end_line] = repl.split("\n") if repl else []
        texts[f] = "\n".join(lines)

    for f, imports in s.import_additions.items():
        texts[f], at, added = _add_imports(texts.get(f, (crate_dir / f).read_text()), imports)
        if added:
            token.import_landings[f] = (at, added)

    for f, text in texts.items():
        (crate_dir / f).write_text(text)
    return token


def revert(crate_dir: Path, token: BackupToken):
    for f, text in token.originals.items():
        (crate_dir / f).write_text(text)


def _add_imports(text: str, imports: list[str]) -> tuple[str, int, int]:
    """Append new imports after the last existing top-level use line.

    Returns (new text, 0-based insertion index, lines added) so callers
    can shift any line positions they are tracking below the insertion.
    """
    lines = text.split("\n")
    existing = {ln.strip() for ln in lines}
    fresh = []
    for imp in imports:
        imp = imp.strip()
        if imp and imp not in existing and imp not in fresh:
            fresh.append(imp)
    if not fresh:
        return text, 0, 0
    last_use = -1
    for i, ln in enumerate(lines):
        st = ln.strip()
        if st.startswith("use ") or st.startswith("pub use "):
            last_use = i
    if last_use >= 0:
        insert_at = last_use + 1
    else:
        # after leading inner attributes and file comments
        insert_at = 0
        while insert_at < len(lines):
            st = lines[insert_at].strip()
            if st.startswith("#!") or st.startswith("//") or not st:
                insert_at += 1
            else:
                break
    lines[insert_at:insert_at] = fresh
    return "\n".join(lines), insert_at, len(fresh)


def apply_edit_to_span(span: SourceSpan, edit: SourceSpan, new_len: int):
    """New coordinates of `span` after `edit` lines were replaced by
    new_len lines. Returns None when the edit swallowed the span."""
    if span.file != edit.file:
        return span
    old_len = edit.end_line - edit.start_line + 1
    delta = new_len - old_len
    if edit.start_line > span.end_line:
        return span
    if edit.end_line < span.start_line:
        return SourceSpan(span.file, span.start_line + delta, span.end_line + delta)
    if edit.start_line == span.start_line and edit.end_line == span.end_line:
        if new_len == 0:
            return None
        return SourceSpan(span.file, span.start_line, span.start_line + new_len - 1)
    if span.start_line <= edit.start_line and edit.end_line <= span.end_line:
        if span.end_line + delta < span.start_line:
            return None
        return SourceSpan(span.file, span.start_line, span.end_line + delta)
    # edit strictly covers the span, or they partially overlap: span is gone
    return None
