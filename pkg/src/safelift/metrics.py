"""The five crate-level safety counters and their before/after deltas.

Counting rules (documented here because every one has sharp edges):

raw_ptr_decls   Variable bindings whose type is a raw pointer: function
                parameters, struct fields, statics, and let bindings
                (annotated, or inferred raw-pointer initializer).
                Parameters of extern-block declarations are excluded -
                those signatures belong to foreign code.
raw_ptr_derefs  `*expr` dereferences where the operand is raw-pointer-
                typed per a flow-insensitive, per-function typing pass.
                For a chain `**p` on a pointer of depth d, min(chain
                length, d) dereferences are counted. Stars whose operand
                cannot be typed go to a diagnostic tally, not the count.
raw/unsafe_lines  Non-blank lines strictly inside the braces of unsafe
                regions; a single-line region counts as one line. Unsafe
                fn bodies are regions too; overlapping regions count
                each line once.
unsafe_calls    Call expressions (identifier, path, or method followed
                by `(`; macros excluded) lexically inside unsafe regions.
unsafe_casts    `as` casts inside unsafe regions whose source or target
                type is a raw pointer.

Percent deltas are 100*(before-after)/before, defined as 0 when before
is 0, rounded half away from zero for display.
"""

import math
from dataclasses import dataclass
from pathlib import Path

from .lexer import KEYWORDS, Token
from .source_model import CrateModel, FunctionRecord, parse_crate

_PRESERVE_METHODS = {
    "offset", "add", "sub", "wrapping_add", "wrapping_sub", "wrapping_offset",
    "byte_add", "byte_sub", "byte_offset",
}
_TO_PTR_METHODS = {"as_ptr", "as_mut_ptr"}


@dataclass(frozen=True)
class SafetyMetrics:
    raw_ptr_decls: int = 0
    raw_ptr_derefs: int = 0
    unsafe_lines: int = 0
    unsafe_calls: int = 0
    unsafe_casts: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "raw_ptr_decls": self.raw_ptr_decls,
            "raw_ptr_derefs": self.raw_ptr_derefs,
            "unsafe_lines": self.unsafe_lines,
            "unsafe_calls": self.unsafe_calls,
            "unsafe_casts": self.unsafe_casts,
        }


METRIC_NAMES = list(SafetyMetrics().as_dict())


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass
class MetricsDelta:
    before: SafetyMetrics
    after: SafetyMetrics

    def pct_exact(self) -> dict[str, float]:
        b, a = self.before.as_dict(), self.after.as_dict()
        return {k: (100.0 * (b[k] - a[k]) / b[k]) if b[k] else 0.0 for k in b}

    def pct(self) -> dict[str, int]:
        return {k: round_half_away(v) for k, v in self.pct_exact().items()}


def type_ptr_depth(type_text: str | None) -> int:
    """Number of leading raw-pointer layers in a type's text."""
    if not type_text:
        return 0
    s = type_text.strip()
    depth = 0
    while s.startswith("*"):
        rest = s[1:].lstrip()
        if rest.startswith("const") and (len(rest) == 5 or not rest[5].isalnum() and rest[5] != "_"):
            s = rest[5:].lstrip()
        elif rest.startswith("mut") and (len(rest) == 3 or not rest[3].isalnum() and rest[3] != "_"):
            s = rest[3:].lstrip()
        else:
            break
        depth += 1
    return depth


class _CrateIndex:
    """Crate-wide name indexes the per-function pass consults."""

    def __init__(self, model: CrateModel):
        self.global_depth: dict[str, int] = {}
        self.field_depth: dict[str, int | None] = {}  # None = conflicting defs
        self.fn_return_depth: dict[str, int] = {}
        for f in model.files.values():
            for g in f.globals:
                simple = g.name.rsplit("::", 1)[-1]
                self.global_depth[simple] = type_ptr_depth(g.type_text)
            for qual_name, type_text, _span in f.struct_fields:
                fname = qual_name.rsplit(".", 1)[-1]
                d = type_ptr_depth(type_text)
                if fname in self.field_depth and self.field_depth[fname] != d:
                    self.field_depth[fname] = None
                else:
                    self.field_depth[fname] = d
        for fn in model.functions.values():
            self.fn_return_depth[fn.simple_name] = type_ptr_depth(fn.return_type)
        for ext in model.externs.values():
            self.fn_return_depth.setdefault(ext.name, type_ptr_depth(ext.return_type))


def _is_type_star(tokens: list[Token], i: int) -> bool:
    nxt = tokens[i + 1] if i + 1 < len(tokens) else None
    return nxt is not None and (nxt.is_kw("const") or nxt.is_kw("mut"))


def _classify_stars(tokens: list[Token], lo: int, hi: int) -> dict[int, bool]:
    """star token index -> True when it is a dereference (not mul/type)."""
    out: dict[int, bool] = {}
    operand_enders = {")", "]", "}"}
    for i in range(lo, hi):
        t = tokens[i]
        if t.kind != "punct" or t.text != "*":
            continue
        if _is_type_star(tokens, i):
            out[i] = False
            continue
        prev = tokens[i - 1] if i > lo else None
        if prev is None:
            out[i] = True
        elif prev.kind == "punct":
            if prev.text == "*":
                # after another star: unary (deref chain, or deref after mul)
                out[i] = True
            else:
                out[i] = prev.text not in operand_enders
        elif prev.kind in ("num", "str", "char"):
            out[i] = False
        elif prev.kind == "ident":
            out[i] = prev.text in KEYWORDS
        else:
            out[i] = True
    return out


class _FnTyping:
    """Flow-insensitive raw-pointer depths for one function's names."""

    def __init__(self, model: CrateModel, fn: FunctionRecord, index: _CrateIndex):
        self.model = model
        self.fn = fn
        self.index = index
        f = model.files[fn.file]
        self.tokens = f.tokens
        self.pairs = f.pairs
        self.lo = fn.body.open_tok if fn.body else 0
        self.hi = fn.body.close_tok + 1 if fn.body else 0
        self.stars = _classify_stars(self.tokens, self.lo, self.hi)
        self.var_depth: dict[str, int] = {}
        self.unclassified = 0
        for name, ttext in fn.params:
            self.var_depth[name] = type_ptr_depth(ttext)
        self._collect_lets()

    def _collect_lets(self):
        toks, i = self.tokens, self.lo
        deferred: list[tuple[str, int]] = []  # (name, rhs start) for un-annotated lets
        while i < self.hi:
            if toks[i].is_kw("let"):
                j = i + 1
                if j < self.hi and toks[j].is_kw("mut"):
                    j += 1
                if j < self.hi and toks[j].kind == "ident" and toks[j].text not in KEYWORDS:
                    name = toks[j].text
                    k = j + 1
                    if k < self.hi and toks[k].text == ":":
                        # annotated: type runs to top-level = or ;
                        start, depth = k + 1, 0
                        while k < self.hi:
                            tt = toks[k].text
                            if tt in "([<":
                                depth += 1
                            elif tt in ")]>":
                                depth -= 1
                            elif depth <= 0 and tt in {"=", ";"}:
                                break
                            k += 1
                        src = self.model.files[self.fn.file].text
                        self.var_depth[name] = type_ptr_depth(src[toks[start].pos : toks[k - 1].end])
                    elif k < self.hi and toks[k].text == "=":
                        deferred.append((name, k + 1))
            i += 1
        for name, rhs in deferred:
            if name not in self.var_depth:
                d = self.eval_expr(rhs)
                self.var_depth[name] = d if d is not None else 0

    # -- expression depth evaluation ------------------------------------
    def eval_expr(self, i: int) -> int | None:
        """Raw-pointer depth of the expression starting at token i, or
        None when it cannot be classified. Stops at binary operators,
        except `as` casts which override the depth."""
        toks = self.tokens
        nstars = 0
        while i < self.hi and toks[i].text == "*" and self.stars.get(i, False):
            nstars += 1
            i += 1
        while i < self.hi and toks[i].text == "&":
            # a reference is not a raw pointer; &expr as *const T is
            # caught by the cast override below
            i += 1
            if i < self.hi and toks[i].is_kw("mut"):
                i += 1
            nstars = 0
        depth, i = self._eval_postfix(i)
        # top-level `as` binds looser than postfix: scan for it
        j = i
        while j < self.hi:
            t = toks[j]
            if t.text in "([{":
                j = self.pairs.get(j, j) + 1
                continue
            if t.text in {";", ",", ")", "]", "}"} or t.text in {"==", "&&", "||", "+", "-", "/", "%", "<", ">", "<=", ">="}:
                break
            if t.is_kw("as"):
                d = self._type_depth_at(j + 1)
                depth = d
                j += 1
                continue
            j += 1
        if depth is None:
            return None
        return max(depth - nstars, 0)

    def _eval_postfix(self, i: int) -> tuple[int | None, int]:
        """Depth of the primary-plus-postfix expression at i; returns
        (depth or None, index just past the consumed tokens)."""
        toks, pairs = self.tokens, self.pairs
        if i >= self.hi:
            return None, i
        t = toks[i]
        if t.kind in ("num", "str", "char"):
            depth: int | None = 0
            i += 1
        elif t.text == "(":
            close = pairs.get(i)
            depth = self.eval_expr(i + 1)
            i = (close if close is not None else i) + 1
        elif t.kind == "ident" and t.text not in KEYWORDS:
            name = t.text
            # swallow a path prefix: a::b::c; depth comes from the last segment
            while i + 1 < self.hi and toks[i + 1].text == "::" and i + 2 < self.hi and toks[i + 2].kind == "ident":
                i += 2
                name = toks[i].text
            if i + 1 < self.hi and toks[i + 1].text == "(":
                depth = self.index.fn_return_depth.get(name)
                i = pairs.get(i + 1, i + 1) + 1
            else:
                if name in self.var_depth:
                    depth = self.var_depth[name]
                elif name in self.index.global_depth:
                    depth = self.index.global_depth[name]
                else:
                    depth = None
                i += 1
        else:
            return None, i + 1
        # postfix chain
        while i < self.hi:
            t = toks[i]
            if t.text == "." and i + 1 < self.hi and toks[i + 1].kind == "ident":
                mname = toks[i + 1].text
                if i + 2 < self.hi and toks[i + 2].text == "(":
                    if mname in _TO_PTR_METHODS:
                        depth = 1
                    elif mname in _PRESERVE_METHODS:
                        pass  # pointer arithmetic keeps the depth
                    else:
                        depth = None
                    i = pairs.get(i + 2, i + 2) + 1
                else:
                    depth = self.index.field_depth.get(mname)
                    i += 2
            elif t.text == "[":
                depth = None
                i = pairs.get(i, i) + 1
            else:
                break
        return depth, i

    def _type_depth_at(self, i: int) -> int:
        """Depth of the type text starting at token i (after `as`)."""
        toks = self.tokens
        depth = 0
        while i < self.hi and toks[i].text == "*":
            if i + 1 < self.hi and (toks[i + 1].is_kw("const") or toks[i + 1].is_kw("mut")):
                depth += 1
                i += 2
            else:
                break
        return depth

    # -- the three token-level counters ----------------------------------
    def count_derefs(self) -> int:
        toks = self.tokens
        counted = 0
        i = self.lo
        while i < self.hi:
            if self.stars.get(i, False):
                # head of a deref chain: previous token is not a deref star
                if i > self.lo and self.stars.get(i - 1, False):
                    i += 1
                    continue
                n = 0
                j = i
                while j < self.hi and self.stars.get(j, False):
                    n += 1
                    j += 1
                d = self._operand_depth(j)
                if d is None:
                    self.unclassified += n
                else:
                    counted += min(n, d)
                i = j
            else:
                i += 1
        return counted

    def _operand_depth(self, i: int) -> int | None:
        depth, _ = self._eval_postfix(i)
        return depth

    def source_depth_before(self, as_idx: int) -> int | None:
        """Depth of the expression that ends just before an `as` token."""
        toks, pairs = self.tokens, self.pairs
        j = as_idx - 1
        if j < self.lo:
            return None
        t = toks[j]
        if t.kind in ("num", "str", "char"):
            return 0
        if t.kind == "ident" and t.text not in KEYWORDS:
            prev = toks[j - 1] if j - 1 >= self.lo else None
            if prev is not None and prev.text == ".":
                return self.index.field_depth.get(t.text)
            base = self.var_depth.get(t.text, self.index.global_depth.get(t.text))
            if base is None:
                return None
            # prefix deref stars immediately before the identifier
            k = j - 1
            stars = 0
            while k >= self.lo and self.stars.get(k, False):
                stars += 1
                k -= 1
            return max(base - stars, 0)
        if t.text == ")":
            open_idx = pairs.get(j)
            if open_idx is None:
                return None
            before = toks[open_idx - 1] if open_idx - 1 >= self.lo else None
            if before is not None and before.kind == "ident" and before.text not in KEYWORDS:
                callee = before.text
                pb = toks[open_idx - 2] if open_idx - 2 >= self.lo else None
                if pb is not None and pb.text == ".":
                    if callee in _TO_PTR_METHODS:
                        return 1
                    return None  # receiver typing out of scope backward
                return self.index.fn_return_depth.get(callee)
            return self.eval_expr(open_idx + 1)
        return None


def _unsafe_regions(model: CrateModel, file: str) -> list[tuple[int, int]]:
    """Token index ranges (open brace, close brace) of unsafe regions."""
    f = model.files[file]
    regions: list[tuple[int, int]] = []
    for fn in model.functions.values():
        if fn.file == file and fn.body is not None and "unsafe" in fn.qualifiers:
            regions.append((fn.body.open_tok, fn.body.close_tok))
    toks = f.tokens
    for i, t in enumerate(toks):
        if t.is_kw("unsafe") and i + 1 < len(toks) and toks[i + 1].text == "{":
            close = f.pairs.get(i + 1)
            if close is not None:
                regions.append((i + 1, close))
    return regions


def _region_lines(f, open_tok: int, close_tok: int) -> set[int]:
    a, b = f.tokens[open_tok].line, f.tokens[close_tok].line
    if a == b:
        return {a}
    return {ln for ln in range(a + 1, b) if f.lines[ln - 1].strip()}


def compute_metrics(crate, collect: dict | None = None) -> SafetyMetrics:
    """Count the five metrics over a crate directory or parsed model.

    `collect`, when given, receives diagnostics: unclassified deref
    stars and parser warnings for skipped files.
    """
    model = crate if isinstance(crate, CrateModel) else parse_crate(Path(crate), lenient=True)
    index = _CrateIndex(model)
    decls = derefs = lines = calls = casts = 0
    unclassified = 0
    # slot order matches SafetyMetrics field order
    per_file: dict[str, list[int]] = {rel: [0, 0, 0, 0, 0] for rel in model.files}

    for rel, f in model.files.items():
        for _name, ttext, _span in f.struct_fields:
            if type_ptr_depth(ttext) > 0:
                decls += 1
                per_file[rel][0] += 1
        for g in f.globals:
            if type_ptr_depth(g.type_text) > 0:
                decls += 1
                per_file[rel][0] += 1

    typings: dict[str, _FnTyping] = {}
    for fn in model.functions.values():
        for _n, ttext in fn.params:
            if type_ptr_depth(ttext) > 0:
                decls += 1
                per_file[fn.file][0] += 1
        if fn.body is None:
            continue
        ty = _FnTyping(model, fn, index)
        typings[fn.name] = ty
        f = model.files[fn.file]
        src = f.text
        # let bindings: annotated or inferred raw-pointer depth
        toks = f.tokens
        i = fn.body.open_tok
        while i <= fn.body.close_tok:
            if toks[i].is_kw("let"):
                j = i + 1
                if toks[j].is_kw("mut"):
                    j += 1
                if toks[j].kind == "ident" and toks[j].text not in KEYWORDS:
                    if ty.var_depth.get(toks[j].text, 0) > 0:
                        decls += 1
                        per_file[fn.file][0] += 1
            i += 1
        fn_derefs = ty.count_derefs()
        derefs += fn_derefs
        per_file[fn.file][1] += fn_derefs
        unclassified += ty.unclassified

    for rel, f in model.files.items():
        regions = _unsafe_regions(model, rel)
        counted: set[int] = set()
        in_region: set[int] = set()
        for o, c in regions:
            counted |= _region_lines(f, o, c)
            in_region.update(range(o + 1, c))
        lines += len(counted)
        per_file[rel][2] += len(counted)
        toks = f.tokens
        fn_typing_at = _typing_locator(model, typings, rel)
        for i in sorted(in_region):
            t = toks[i]
            if t.kind == "ident" and t.text not in KEYWORDS and i + 1 < len(toks) and toks[i + 1].text == "(":
                prev = toks[i - 1] if i > 0 else None
                if prev is not None and (prev.is_kw("fn") or prev.text == "!"):
                    continue
                calls += 1
                per_file[rel][3] += 1
            elif t.is_kw("as"):
                ty = fn_typing_at(i)
                if ty is None:
                    continue
                tgt = ty._type_depth_at(i + 1)
                if tgt > 0:
                    casts += 1
                    per_file[rel][4] += 1
                else:
                    srcd = ty.source_depth_before(i)
                    if srcd is not None and srcd > 0:
                        casts += 1
                        per_file[rel][4] += 1

    if collect is not None:
        collect["unclassified_derefs"] = unclassified
        collect["warnings"] = list(model.warnings)
        collect["per_file"] = {rel: SafetyMetrics(*v).as_dict() for rel, v in sorted(per_file.items())}
    return SafetyMetrics(decls, derefs, lines, calls, casts)


def _typing_locator(model: CrateModel, typings: dict[str, "_FnTyping"], rel: str):
    spans = [
        (fn.body.open_tok, fn.body.close_tok, typings[fn.name])
        for fn in model.functions.values()
        if fn.file == rel and fn.name in typings
    ]
    spans.sort()

    def locate(tok_idx: int):
        for lo, hi, ty in spans:
            if lo <= tok_idx <= hi:
                return ty
        return None

    return locate


def report_delta(delta: MetricsDelta) -> str:
    """Fixed-width before/after/Δ% table over the five metrics."""
    rows = [("metric", "before", "after", "delta%")]
    b, a, p = delta.before.as_dict(), delta.after.as_dict(), delta.pct()
    for k in METRIC_NAMES:
        rows.append((k, str(b[k]), str(a[k]), str(p[k])))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    out = []
    for r in rows:
        out.append("  ".join(v.ljust(widths[c]) for c, v in enumerate(r)).rstrip())
    return "\n".join(out) + "\n"
