"""Crate index: files, functions, globals, imports, and call resolution.

Parsing is purely syntactic and line-accurate. The subset understood is
the one C-to-Rust transpilers emit: free functions (often `unsafe extern
"C"`), statics, extern blocks, structs, flat modules. Attributes above an
item are recorded but excluded from its span, so a body splice leaves
them in place.

A "line" is a raw source line, blanks and comments included; spans are
1-based and inclusive at both ends.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingManifest, ParseError
from .lexer import LexError, Token, match_delims, tokenize
from .syntax import BlockNode, parse_body


@dataclass(frozen=True)
class SourceSpan:
    file: str  # path relative to the crate root, posix style
    start_line: int
    end_line: int

    def __post_init__(self):
        if self.start_line < 1 or self.end_line < self.start_line:
            raise ValueError(f"bad span {self.start_line}..{self.end_line}")

    def contains(self, other: "SourceSpan") -> bool:
        return (
            self.file == other.file
            and self.start_line <= other.start_line
            and other.end_line <= self.end_line
        )

    def to_dict(self) -> dict:
        return {"file": self.file, "start": self.start_line, "end": self.end_line}

    @staticmethod
    def from_dict(d: dict) -> "SourceSpan":
        return SourceSpan(d["file"], d["start"], d["end"])


def line_count(span: SourceSpan, crate: "CrateModel | None" = None) -> int:
    """Lines covered by a span, blanks and comments included."""
    if crate is not None:
        f = crate.files.get(span.file)
        if f is None or span.end_line > len(f.lines):
            raise ValueError(f"span outside crate: {span}")
    return span.end_line - span.start_line + 1


@dataclass
class ImportRecord:
    text: str  # full `use ...;` text
    span: SourceSpan


@dataclass
class GlobalRecord:
    name: str  # qualified
    mutable: bool
    decl_text: str
    type_text: str
    span: SourceSpan


@dataclass
class ExternDecl:
    name: str
    params: list[tuple[str, str]]
    return_type: str | None
    file: str = ""


@dataclass
class FunctionRecord:
    name: str  # qualified, unique in the crate index
    simple_name: str
    file: str
    span: SourceSpan  # signature through closing brace, attributes excluded
    qualifiers: list[str]  # pub / unsafe / extern "C" / const ...
    params: list[tuple[str, str]]  # (name, type text)
    return_type: str | None
    signature_text: str
    body: BlockNode | None  # None only for parse-degraded functions
    body_open_tok: int
    module: tuple[str, ...]
    is_test_covered: bool = True


@dataclass
class SourceFileModel:
    path: str
    text: str
    lines: list[str]
    tokens: list[Token]
    pairs: dict[int, int]
    imports: list[ImportRecord] = field(default_factory=list)
    globals: list[GlobalRecord] = field(default_factory=list)
    struct_fields: list[tuple[str, str, SourceSpan]] = field(default_factory=list)


@dataclass
class CrateModel:
    root: Path
    files: dict[str, SourceFileModel]
    functions: dict[str, FunctionRecord]
    externs: dict[str, ExternDecl]
    warnings: list[str] = field(default_factory=list)

    def function_at(self, file: str, line: int) -> FunctionRecord | None:
        for fn in self.functions.values():
            if fn.file == file and fn.span.start_line <= line <= fn.span.end_line:
                return fn
        return None

    def global_names(self) -> dict[str, GlobalRecord]:
        out: dict[str, GlobalRecord] = {}
        for f in self.files.values():
            for g in f.globals:
                out[g.name.split("::")[-1]] = g
        return out


@dataclass
class CallSite:
    caller: str
    callee: str  # qualified for in-crate, raw path text for external
    span: SourceSpan
    text: str


@dataclass
class CallGraph:
    nodes: set[str]
    edges: list[CallSite]  # in-crate calls only
    externals: list[CallSite]

    def edge_pairs(self) -> set[tuple[str, str]]:
        return {(e.caller, e.callee) for e in self.edges}


_SKIP_DIRS = {"target", ".git"}


def parse_crate(root: Path | str, lenient: bool = False) -> CrateModel:
    """Index every .rs file under the crate root.

    Raises MissingManifest when no Cargo.toml is present and ParseError
    on source the lexer or item scanner cannot recover from; with
    lenient=True a bad file is skipped and recorded as a warning instead
    (used by the metrics pass, which must survive odd files).
    """
    root = Path(root)
    if not (root / "Cargo.toml").is_file():
        raise MissingManifest(f"no Cargo.toml under {root}")
    model = CrateModel(root=root, files={}, functions={}, externs={})
    rs_files = sorted(
        p
        for p in root.rglob("*.rs")
        if not any(part in _SKIP_DIRS or part.startswith(".") for part in p.relative_to(root).parts)
    )
    for path in rs_files:
        rel = path.relative_to(root).as_posix()
        text = path.read_text()
        try:
            tokens = tokenize(text)
            pairs = match_delims(tokens)
        except LexError as e:
            if lenient:
                model.warnings.append(f"{rel}:{e.line}: skipped, {e}")
                continue
            raise ParseError(rel, e.line, str(e)) from e
        fmodel = SourceFileModel(
            path=rel,
            text=text,
            lines=text.split("\n"),
            tokens=tokens,
            pairs=pairs,
        )
        try:
            _scan_items(model, fmodel, _module_of(rel), 0, len(tokens), impl_type=None, in_extern=False)
        except ParseError as e:
            if not lenient:
                raise
            model.warnings.append(f"{rel}: skipped, {e}")
            # drop any half-registered definitions from the bad file
            model.functions = {k: v for k, v in model.functions.items() if v.file != rel}
            model.externs = {k: x for k, x in model.externs.items() if x.file != rel}
            continue
        model.files[rel] = fmodel
    return model


def emit_crate(model: CrateModel, dest: Path | str) -> None:
    """Write the crate's files unmodified under dest (round-trip support)."""
    dest = Path(dest)
    for rel, f in model.files.items():
        out = dest / rel
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(f.text)
    manifest = model.root / "Cargo.toml"
    if manifest.is_file():
        (dest / "Cargo.toml").write_text(manifest.read_text())


def _module_of(rel: str) -> tuple[str, ...]:
    parts = rel.split("/")
    if parts and parts[0] == "src":
        parts = parts[1:]
    if not parts:
        return ()
    stem = parts[-1][:-3] if parts[-1].endswith(".rs") else parts[-1]
    parts = parts[:-1] + ([stem] if stem not in {"main", "lib", "mod"} else [])
    return tuple(parts)


def _qualify(module: tuple[str, ...], impl_type: str | None, name: str) -> str:
    bits = list(module)
    if impl_type:
        bits.append(impl_type)
    bits.append(name)
    return "::".join(bits)


_QUALIFIER_KWS = {"pub", "unsafe", "const", "async"}


def _scan_items(
    model: CrateModel,
    f: SourceFileModel,
    module: tuple[str, ...],
    lo: int,
    hi: int,
    impl_type: str | None,
    in_extern: bool,
) -> None:
    toks = f.tokens
    pairs = f.pairs
    i = lo
    while i < hi:
        t = toks[i]
        # attributes: #[...] and #![...]
        if t.text == "#":
            j = i + 1
            if j < hi and toks[j].text == "!":
                j += 1
            if j < hi and toks[j].text == "[":
                i = pairs[j] + 1
                continue
            i += 1
            continue
        if t.kind != "ident":
            model.warnings.append(f"{f.path}:{t.line}: stray token {t.text!r} at item level")
            i += 1
            continue

        item_start = i
        quals: list[str] = []
        while i < hi and toks[i].kind == "ident" and toks[i].text in _QUALIFIER_KWS:
            quals.append(toks[i].text)
            i += 1
            if quals[-1] == "pub" and i < hi and toks[i].text == "(":
                i = pairs[i] + 1
        if i < hi and toks[i].is_kw("extern") and i + 1 < hi and toks[i + 1].kind == "str":
            if i + 2 < hi and toks[i + 2].text == "{":
                # extern block: scan fn declarations inside
                body_open = i + 2
                _scan_items(model, f, module, body_open + 1, pairs[body_open], impl_type, in_extern=True)
                i = pairs[body_open] + 1
                continue
            quals.append(f"extern {toks[i + 1].text}")
            i += 2

        if i >= hi:
            break
        kw = toks[i]

        if kw.is_kw("use"):
            i = _consume_semi(toks, pairs, i, hi)
            f.imports.append(
                ImportRecord(
                    text=f.text[toks[item_start].pos : toks[i - 1].end],
                    span=SourceSpan(f.path, toks[item_start].line, toks[i - 1].line),
                )
            )
            continue

        if kw.is_kw("extern") and i + 1 < hi and toks[i + 1].is_kw("crate"):
            i = _consume_semi(toks, pairs, i, hi)
            continue

        if kw.is_kw("mod"):
            name = toks[i + 1].text if i + 1 < hi else "?"
            j = i + 2
            if j < hi and toks[j].text == "{":
                _scan_items(model, f, module + (name,), j + 1, pairs[j], impl_type, in_extern)
                i = pairs[j] + 1
            else:
                i = _consume_semi(toks, pairs, i, hi)
            continue

        if kw.is_kw("static") or (kw.is_kw("const") and not quals):
            i = _scan_global(model, f, module, toks, pairs, item_start, i, hi, kw.text == "static")
            continue

        if kw.is_kw("fn"):
            i = _scan_fn(model, f, module, impl_type, in_extern, toks, pairs, item_start, quals, i, hi)
            continue

        if kw.is_kw("struct") or kw.is_kw("union"):
            i = _scan_struct(model, f, module, toks, pairs, i, hi)
            continue

        if kw.is_kw("enum") or kw.is_kw("trait"):
            i = _skip_to_brace_or_semi(toks, pairs, i, hi)
            continue

        if kw.is_kw("impl"):
            j = i + 1
            type_name = None
            while j < hi and toks[j].text != "{":
                if toks[j].kind == "ident" and toks[j].text not in {"for", "where"}:
                    type_name = toks[j].text
                j += 1
            if j < hi:
                _scan_items(model, f, module, j + 1, pairs[j], type_name, in_extern)
                i = pairs[j] + 1
            else:
                i = hi
            continue

        if kw.is_kw("type"):
            i = _consume_semi(toks, pairs, i, hi)
            continue

        if kw.kind == "ident" and kw.text == "macro_rules":
            i = _skip_to_brace_or_semi(toks, pairs, i, hi)
            continue

        model.warnings.append(f"{f.path}:{kw.line}: skipping unrecognized item {kw.text!r}")
        i = _skip_to_brace_or_semi(toks, pairs, i, hi)
    return


def _consume_semi(toks: list[Token], pairs: dict[int, int], i: int, hi: int) -> int:
    while i < hi:
        t = toks[i]
        if t.kind == "punct":
            if t.text == ";":
                return i + 1
            if t.text in "([{":
                i = pairs[i] + 1
                continue
        i += 1
    return hi


def _skip_to_brace_or_semi(toks: list[Token], pairs: dict[int, int], i: int, hi: int) -> int:
    while i < hi:
        t = toks[i]
        if t.kind == "punct":
            if t.text == ";":
                return i + 1
            if t.text in "([":
                i = pairs[i] + 1
                continue
            if t.text == "{":
                return pairs[i] + 1
        i += 1
    return hi


def _scan_global(model, f, module, toks, pairs, item_start, i, hi, mutable_kw) -> int:
    name_idx = i + 1
    mutable = False
    if name_idx < hi and toks[name_idx].is_kw("mut"):
        mutable = True
        name_idx += 1
    name = toks[name_idx].text if name_idx < hi else "?"
    type_text = ""
    j = name_idx + 1
    if j < hi and toks[j].text == ":":
        k = j + 1
        while k < hi and toks[k].text not in {"=", ";"}:
            if toks[k].text in "([{":
                k = pairs[k] + 1
                continue
            k += 1
        type_text = f.text[toks[j + 1].pos : toks[k - 1].end] if k > j + 1 else ""
        j = k
    end = _consume_semi(toks, pairs, j, hi)
    f.globals.append(
        GlobalRecord(
            name=_qualify(module, None, name),
            mutable=mutable and mutable_kw,
            decl_text=f.text[toks[item_start].pos : toks[end - 1].end],
            type_text=type_text,
            span=SourceSpan(f.path, toks[item_start].line, toks[end - 1].line),
        )
    )
    return end


def _scan_struct(model, f, module, toks, pairs, i, hi) -> int:
    name = toks[i + 1].text if i + 1 < hi else "?"
    j = i + 2
    while j < hi and toks[j].text not in {"{", "(", ";"}:
        j += 1
    if j >= hi:
        return hi
    if toks[j].text == ";":
        return j + 1
    if toks[j].text == "(":
        return _consume_semi(toks, pairs, pairs[j] + 1, hi)
    close = pairs[j]
    k = j + 1
    while k < close:
        # field: [pub] name : TYPE ,
        while k < close and not (toks[k].kind == "ident" and toks[k].text not in {"pub"}):
            if toks[k].text == "(":
                k = pairs[k] + 1
                continue
            k += 1
        if k >= close:
            break
        fname = toks[k].text
        k += 1
        if k < close and toks[k].text == ":":
            start = k + 1
            depth_end = start
            while depth_end < close and toks[depth_end].text != ",":
                if toks[depth_end].text in "([{<" and toks[depth_end].text != "<":
                    depth_end = pairs[depth_end] + 1
                    continue
                depth_end += 1
            ttext = f.text[toks[start].pos : toks[depth_end - 1].end]
            f.struct_fields.append((f"{name}.{fname}", ttext, SourceSpan(f.path, toks[start].line, toks[depth_end - 1].line)))
            k = depth_end + 1
        else:
            k += 1
    return close + 1


def _scan_fn(model, f, module, impl_type, in_extern, toks, pairs, item_start, quals, i, hi) -> int:
    name_idx = i + 1
    simple = toks[name_idx].text
    j = name_idx + 1
    if j < hi and toks[j].text == "<":  # generics: tolerant angle skip
        depth = 0
        while j < hi:
            if toks[j].text == "<":
                depth += 1
            elif toks[j].text == ">":
                depth -= 1
                if depth == 0:
                    j += 1
                    break
            elif toks[j].text == ">>":
                depth -= 2
                if depth <= 0:
                    j += 1
                    break
            j += 1
    if j >= hi or toks[j].text != "(":
        raise ParseError(f.path, toks[name_idx].line, f"malformed fn {simple}")
    paren_close = pairs[j]
    params = _parse_params(f, toks, pairs, j + 1, paren_close)
    k = paren_close + 1
    return_type = None
    if k < hi and toks[k].text == "->":
        start = k + 1
        while k + 1 < hi and toks[k + 1].text not in {"{", ";"} and not toks[k + 1].is_kw("where"):
            k += 1
        return_type = f.text[toks[start].pos : toks[k].end]
        k += 1
    while k < hi and toks[k].text not in {"{", ";"}:
        k += 1  # where clauses
    if k >= hi:
        raise ParseError(f.path, toks[name_idx].line, f"unterminated fn {simple}")

    if toks[k].text == ";":
        if in_extern:
            model.externs[simple] = ExternDecl(simple, params, return_type, f.path)
        return k + 1

    body_open = k
    body_close = pairs[body_open]
    body = parse_body(toks, pairs, body_open)
    qualified = _qualify(module, impl_type, simple)
    if qualified in model.functions:
        n = 2
        while f"{qualified}#{n}" in model.functions:
            n += 1
        model.warnings.append(f"{f.path}: duplicate function name {qualified}, indexing as {qualified}#{n}")
        qualified = f"{qualified}#{n}"
    sig_quals = quals + (["extern"] if in_extern else [])
    record = FunctionRecord(
        name=qualified,
        simple_name=simple,
        file=f.path,
        span=SourceSpan(f.path, toks[item_start].line, toks[body_close].line),
        qualifiers=sig_quals,
        params=params,
        return_type=return_type,
        signature_text=f.text[toks[item_start].pos : toks[body_open - 1].end].strip(),
        body=body,
        body_open_tok=body_open,
        module=module,
    )
    model.functions[qualified] = record
    return body_close + 1


def _parse_params(f: SourceFileModel, toks, pairs, lo, hi) -> list[tuple[str, str]]:
    params: list[tuple[str, str]] = []
    i = lo
    while i < hi:
        # one param up to a top-level comma
        j = i
        colon = None
        while j < hi and toks[j].text != ",":
            if toks[j].text in "([{":
                j = pairs[j] + 1
                continue
            if toks[j].text == ":" and colon is None:
                colon = j
            j += 1
        seg = [k for k in range(i, j)]
        if seg:
            name = None
            for k in seg:
                if toks[k].kind == "ident" and toks[k].text not in {"mut", "ref", "self"}:
                    name = toks[k].text
                    break
                if colon is not None and k >= colon:
                    break
            ttext = f.text[toks[colon + 1].pos : toks[j - 1].end] if colon is not None and colon + 1 < j else ""
            if name:
                params.append((name, ttext))
        i = j + 1
    return params


# ---------------------------------------------------------------------------
# call resolution


def resolve_calls(model: CrateModel) -> CallGraph:
    """Name-based call graph over function bodies.

    Each syntactic call `path::name(...)` inside a function body yields
    one edge. The call-site span is the innermost enclosing statement
    (header lines only when the call sits in a control-statement
    header), so splicing a rewritten call replaces local lines. Method
    calls (`x.f()`) and macro invocations are not calls. Unresolvable or
    ambiguous names go to the externals list or a warning.
    """
    by_simple: dict[str, list[str]] = {}
    for qn, fn in model.functions.items():
        by_simple.setdefault(fn.simple_name, []).append(qn)

    graph = CallGraph(nodes=set(model.functions), edges=[], externals=[])
    for qn, fn in sorted(model.functions.items()):
        if fn.body is None:
            continue
        f = model.files[fn.file]
        toks = f.tokens
        lo, hi = fn.body.open_tok, fn.body.close_tok
        i = lo + 1
        while i < hi:
            t = toks[i]
            if (
                t.kind == "ident"
                and t.text not in _CALL_EXCLUDE
                and i + 1 < hi
                and toks[i + 1].text == "("
                and not (i > 0 and toks[i - 1].text in {".", "fn"})
            ):
                path = _call_path(toks, i)
                site_span, site_text = _enclosing_stmt_span(model, f, fn, i)
                callee = _resolve_name(model, by_simple, fn, path)
                site = CallSite(caller=qn, callee=callee or "::".join(path), span=site_span, text=site_text)
                if callee is not None:
                    graph.edges.append(site)
                else:
                    graph.externals.append(site)
            i += 1
    return graph


_CALL_EXCLUDE = frozenset(
    {"if", "while", "for", "match", "return", "let", "loop", "as", "in", "mut", "unsafe", "fn", "break", "move"}
)


def _call_path(toks: list[Token], i: int) -> list[str]:
    path = [toks[i].text]
    j = i - 1
    while j > 0 and toks[j].text == "::" and toks[j - 1].kind == "ident":
        path.insert(0, toks[j - 1].text)
        j -= 2
    return path


def _resolve_name(model: CrateModel, by_simple: dict[str, list[str]], fn: FunctionRecord, path: list[str]) -> str | None:
    bits = [b for b in path if b not in {"crate", "self"}]
    simple = bits[-1]
    cands = by_simple.get(simple, [])
    if not cands:
        return None
    if len(bits) > 1:
        suffix = "::".join(bits)
        exact = [c for c in cands if c == suffix or c.endswith("::" + suffix)]
        return exact[0] if len(exact) == 1 else None
    same_mod = [c for c in cands if model.functions[c].module == fn.module]
    if len(same_mod) == 1:
        return same_mod[0]
    if len(cands) == 1:
        return cands[0]
    model.warnings.append(f"ambiguous call to {simple} from {fn.name}")
    return None


def _enclosing_stmt_span(model: CrateModel, f: SourceFileModel, fn: FunctionRecord, tok_idx: int) -> tuple[SourceSpan, str]:
    """Innermost statement containing the token; header lines for control."""
    node = fn.body
    stmt = None
    while node is not None:
        found = None
        for s in node.statements:
            if s.start_tok <= tok_idx < s.end_tok:
                found = s
                break
        if found is None:
            break
        stmt = found
        inner = None
        for b in found.blocks:
            if b.open_tok < tok_idx < b.close_tok:
                inner = b
                break
        if inner is None:
            break
        node = inner
    if stmt is None:
        span = SourceSpan(f.path, f.tokens[tok_idx].line, f.tokens[tok_idx].line)
    else:
        start, end = stmt.start_line, stmt.end_line
        if stmt.blocks:
            first_open = stmt.blocks[0].open_tok
            if tok_idx < first_open:
                end = f.tokens[first_open].line  # header lines, brace included
        span = SourceSpan(f.path, start, end)
    text = "\n".join(f.lines[span.start_line - 1 : span.end_line])
    return span, text
