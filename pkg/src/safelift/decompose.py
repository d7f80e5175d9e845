"""Function decomposition into bounded translation units.

A function at most L lines long becomes a single Root unit. Longer
functions are traversed in DFS post-order; each block reached through an
oversize statement has its sibling statements greedily grouped left to
right, a group being emitted as an Inner unit exactly when adding the
next statement would push the group past L lines. Emitted units are
pruned, so ancestors measure their length with pruned spans subtracted.
The Root unit, covering the whole function, is emitted last.

Line lengths count raw source lines. A single statement still longer
than L after all pruning is emitted anyway and flagged oversized rather
than looping forever or failing the whole function.
"""

from dataclasses import dataclass, field

from .source_model import CrateModel, FunctionRecord, SourceSpan, line_count
from .syntax import BlockNode, StmtNode


@dataclass
class DecompositionConfig:
    max_unit_lines: int = 150


@dataclass
class TranslationUnit:
    unit_id: str
    function: str
    kind: str  # "root" | "inner"
    span: SourceSpan
    parent: str | None = None
    children: list[str] = field(default_factory=list)
    placeholder_text: str = ""
    oversized: bool = False

    def to_dict(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "function": self.function,
            "kind": self.kind,
            "span": self.span.to_dict(),
            "parent": self.parent,
            "children": list(self.children),
            "placeholder_text": self.placeholder_text,
            "oversized": self.oversized,
        }

    @staticmethod
    def from_dict(d: dict) -> "TranslationUnit":
        return TranslationUnit(
            unit_id=d["unit_id"],
            function=d["function"],
            kind=d["kind"],
            span=SourceSpan.from_dict(d["span"]),
            parent=d["parent"],
            children=list(d["children"]),
            placeholder_text=d["placeholder_text"],
            oversized=d["oversized"],
        )


@dataclass
class UnitForest:
    units: dict[str, TranslationUnit] = field(default_factory=dict)
    by_function: dict[str, list[str]] = field(default_factory=dict)  # emission order, root last
    errors: list[str] = field(default_factory=list)


def placeholder_line(unit_id: str, span: SourceSpan) -> str:
    return f"// [[unit {unit_id}]] nested code pruned (lines {span.start_line}-{span.end_line})"


class _FnDecomposer:
    def __init__(self, fn: FunctionRecord, limit: int, ids: "_IdAlloc"):
        self.fn = fn
        self.limit = limit
        self.ids = ids
        self.emitted: list[TranslationUnit] = []

    def run(self) -> list[TranslationUnit]:
        fn_span = self.fn.span
        if fn_span.end_line - fn_span.start_line + 1 > self.limit and self.fn.body is not None:
            self._visit_block(self.fn.body)
        self._make_unit(fn_span.start_line, fn_span.end_line, kind="root")
        return list(self.emitted)

    # --- traversal -------------------------------------------------------

    def _walk_subtree(self, stmt: StmtNode) -> None:
        for block in stmt.blocks:
            self._visit_block(block)

    def _visit_block(self, block: BlockNode) -> None:
        stmts = block.statements
        for s in stmts:
            if self._eff(s.start_line, s.end_line) > self.limit:
                self._walk_subtree(s)

        n = len(stmts)
        lower = 0
        upper = 0
        while upper < n:
            glen = self._eff(stmts[lower].start_line, stmts[upper].end_line)
            if glen > self.limit:
                if upper == lower:
                    # indivisible statement: emit alone, flagged
                    self._emit(stmts, lower, lower)
                    lower = upper + 1
                    upper = lower
                    continue
                cut = upper - 1
                if stmts[upper].start_line == stmts[cut].end_line:
                    # the spilling statement shares the boundary line;
                    # folding it in keeps unit spans non-overlapping
                    cut = upper
                self._emit(stmts, lower, cut)
                lower = cut + 1
                upper = lower
                continue
            upper += 1
        if lower < n:
            self._emit(stmts, lower, n - 1)

    # --- bookkeeping -----------------------------------------------------

    def _eff(self, start: int, end: int) -> int:
        raw = end - start + 1
        inner = [u for u in self.emitted if start <= u.span.start_line and u.span.end_line <= end]
        pruned = 0
        for u in inner:
            if any(v is not u and v.span.contains(u.span) for v in inner):
                continue
            # the pruned child still costs one placeholder line
            pruned += u.span.end_line - u.span.start_line
        return raw - pruned

    def _emit(self, stmts: list[StmtNode], i: int, j: int) -> TranslationUnit:
        return self._make_unit(stmts[i].start_line, stmts[j].end_line, kind="inner")

    def _make_unit(self, start: int, end: int, kind: str) -> TranslationUnit:
        span = SourceSpan(self.fn.file, start, end)
        unit = TranslationUnit(
            unit_id=self.ids.next(),
            function=self.fn.name,
            kind=kind,
            span=span,
            oversized=kind == "inner" and self._eff(start, end) > self.limit,
        )
        unit.placeholder_text = placeholder_line(unit.unit_id, span)
        # adopt emitted units directly inside this span that have no parent
        for u in self.emitted:
            if u.parent is None and span.contains(u.span):
                u.parent = unit.unit_id
                unit.children.append(u.unit_id)
        unit.children.sort(key=lambda uid: self._span_of(uid).start_line)
        self.emitted.append(unit)
        return unit

    def _span_of(self, uid: str) -> SourceSpan:
        for u in self.emitted:
            if u.unit_id == uid:
                return u.span
        raise KeyError(uid)


class _IdAlloc:
    def __init__(self):
        self.n = 0

    def next(self) -> str:
        self.n += 1
        return f"u{self.n}"


def decompose_function(fn: FunctionRecord, config: DecompositionConfig, ids: _IdAlloc | None = None) -> list[TranslationUnit]:
    """Units for one function, in emission order, Root last."""
    return _FnDecomposer(fn, config.max_unit_lines, ids or _IdAlloc()).run()


def decompose_crate(model: CrateModel, config: DecompositionConfig) -> UnitForest:
    """Units for every function in the crate.

    Ids are assigned in (file, start line) function order, then emission
    order inside each function, so identical input yields identical ids.
    Functions whose bodies could not be modeled are recorded in errors.
    """
    forest = UnitForest()
    ids = _IdAlloc()
    ordered = sorted(model.functions.values(), key=lambda f: (f.file, f.span.start_line))
    for fn in ordered:
        if fn.body is None and line_count(fn.span) > config.max_unit_lines:
            forest.errors.append(f"{fn.name}: body not modeled; cannot decompose")
            continue
        units = decompose_function(fn, config, ids)
        forest.by_function[fn.name] = [u.unit_id for u in units]
        for u in units:
            forest.units[u.unit_id] = u
    return forest


def dump_forest(forest: UnitForest, model: CrateModel) -> dict[str, str]:
    """Stable per-function text listing of units, spans, kinds, nesting."""
    out: dict[str, str] = {}
    for fn_name in sorted(forest.by_function):
        fn = model.functions[fn_name]
        lines = [f"function {fn_name} ({fn.file}:{fn.span.start_line}-{fn.span.end_line})"]
        for uid in forest.by_function[fn_name]:
            u = forest.units[uid]
            kids = ",".join(u.children) if u.children else "-"
            flags = " oversized" if u.oversized else ""
            lines.append(
                f"  {u.unit_id} {u.kind} lines {u.span.start_line}-{u.span.end_line}"
                f" parent={u.parent or '-'} children={kids}{flags}"
            )
        out[fn_name] = "\n".join(lines) + "\n"
    return out
