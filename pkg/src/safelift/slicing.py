"""Context slices: what a unit's prompt needs beyond its own text.

Root units carry every in-crate call site of their function, the globals
the function touches, and the file's imports. Inner units instead carry
the variables live at their boundaries, computed by a backward may-
liveness fixpoint over the statement CFG: the unit's live-in is the
live-in of the block holding its first statement; its live-out is the
union of live-out over blocks whose successors leave the unit (one block
in the common straight-line case).

Slices are computed against the crate's current text, so earlier
accepted edits are reflected. When the CFG cannot be built for an inner
unit, SliceUnavailable is raised; callers fall back to an empty, flagged
liveness annotation.
"""

from dataclasses import dataclass, field

from .cfg import StatementCfg, block_at_line, build_cfg
from .decompose import TranslationUnit, UnitForest
from .errors import SliceUnavailable, UnsupportedConstruct
from .source_model import CallGraph, CallSite, CrateModel, FunctionRecord, SourceSpan


@dataclass
class LivenessFact:
    name: str
    declared_type: str | None
    live_in: bool
    live_out: bool


@dataclass
class ContextSlice:
    unit_id: str
    kind: str  # root | inner
    function: str
    unit_source: str
    imports: list[str] = field(default_factory=list)
    globals: list[str] = field(default_factory=list)
    call_sites: list[CallSite] = field(default_factory=list)
    liveness: list[LivenessFact] = field(default_factory=list)
    flagged: bool = False


def liveness(cfg: StatementCfg) -> dict[int, tuple[set[str], set[str]]]:
    """Per-block (live_in, live_out) by backward worklist iteration.

    live_out(b) is the union of successors' live_in; live_in(b) is
    use(b) | (live_out(b) - def(b)). Terminates because sets only grow.
    """
    live_in: dict[int, set[str]] = {b: set() for b in cfg.blocks}
    live_out: dict[int, set[str]] = {b: set() for b in cfg.blocks}
    work = list(cfg.blocks)
    preds = {b: cfg.predecessors(b) for b in cfg.blocks}
    succs = {b: cfg.successors(b) for b in cfg.blocks}
    while work:
        b = work.pop()
        out = set()
        for s in succs[b]:
            out |= live_in[s]
        new_in = cfg.blocks[b].uses | (out - cfg.blocks[b].defs)
        if out != live_out[b] or new_in != live_in[b]:
            live_out[b] = out
            live_in[b] = new_in
            for p in preds[b]:
                if p not in work:
                    work.append(p)
    return {b: (live_in[b], live_out[b]) for b in cfg.blocks}


def boundary_liveness(
    cfg: StatementCfg,
    facts: dict[int, tuple[set[str], set[str]]],
    span: SourceSpan,
) -> tuple[set[str], set[str]]:
    """(live-in, live-out) at a unit's line boundaries."""
    first = block_at_line(cfg, span.start_line, last=False)
    if first is None:
        raise SliceUnavailable(f"no statement maps into span {span.start_line}-{span.end_line}")
    unit_bids = {
        bid
        for bid, blk in cfg.blocks.items()
        if any(span.start_line <= lo and hi <= span.end_line for lo, hi in blk.stmt_spans)
    }
    live_in = set(facts[first][0])
    out: set[str] = set()
    for bid in unit_bids:
        leaves = bid in cfg.exits or any(s not in unit_bids for s in cfg.successors(bid))
        if leaves:
            out |= facts[bid][1]
    if not unit_bids:
        last = block_at_line(cfg, span.end_line, last=True)
        if last is not None:
            out = set(facts[last][1])
    return live_in, out


def declared_types(model: CrateModel, fn: FunctionRecord) -> dict[str, str]:
    """Declared type text per variable: params plus annotated lets."""
    types: dict[str, str] = {name: t for name, t in fn.params if t}
    if fn.body is None:
        return types
    f = model.files[fn.file]
    toks = f.tokens
    i = fn.body.open_tok
    while i < fn.body.close_tok:
        if toks[i].is_kw("let"):
            j = i + 1
            if j < len(toks) and toks[j].is_kw("mut"):
                j += 1
            if j + 1 < len(toks) and toks[j].kind == "ident" and toks[j + 1].text == ":":
                name = toks[j].text
                k = j + 2
                depth = 0
                while k < fn.body.close_tok:
                    t = toks[k].text
                    if t in "([<":
                        depth += 1
                    elif t in ")]>":
                        depth -= 1
                    elif depth <= 0 and t in {"=", ";"}:
                        break
                    k += 1
                if k > j + 2:
                    types.setdefault(name, f.text[toks[j + 2].pos : toks[k - 1].end])
        i += 1
    return types


def render_unit_source(
    model: CrateModel,
    unit: TranslationUnit,
    forest: UnitForest,
    current_spans: dict[str, SourceSpan],
    child_summaries: dict[str, str] | None = None,
) -> str:
    """Unit text from the current file, direct children replaced by their
    placeholder comment lines (optionally annotated with liveness)."""
    span = current_spans[unit.unit_id]
    f = model.files[span.file]
    lines = f.lines[span.start_line - 1 : span.end_line]
    offset = span.start_line  # line number of lines[0]
    for child_id in sorted(unit.children, key=lambda c: current_spans[c].start_line, reverse=True):
        c_span = current_spans[child_id]
        lo = c_span.start_line - offset
        hi = c_span.end_line - offset
        if lo < 0 or hi >= len(lines):
            raise SliceUnavailable(f"child {child_id} span escaped parent {unit.unit_id}")
        indent = lines[lo][: len(lines[lo]) - len(lines[lo].lstrip())] if lines[lo].strip() else "    "
        text = forest.units[child_id].placeholder_text
        if child_summaries and child_id in child_summaries:
            text = f"{text} {child_summaries[child_id]}"
        lines[lo : hi + 1] = [indent + text]
    return "\n".join(lines)


def _globals_in_range(model: CrateModel, file: str, lo_tok: int, hi_tok: int) -> list[str]:
    gmap = model.global_names()
    if not gmap:
        return []
    f = model.files[file]
    seen: list[str] = []
    for t in f.tokens[lo_tok:hi_tok]:
        if t.kind == "ident" and t.text in gmap:
            decl = gmap[t.text].decl_text
            if decl not in seen:
                seen.append(decl)
    return seen


def _tokens_for_lines(model: CrateModel, file: str, start_line: int, end_line: int) -> tuple[int, int]:
    toks = model.files[file].tokens
    lo = 0
    while lo < len(toks) and toks[lo].line < start_line:
        lo += 1
    hi = lo
    while hi < len(toks) and toks[hi].line <= end_line:
        hi += 1
    return lo, hi


def slice_unit(
    unit: TranslationUnit,
    model: CrateModel,
    forest: UnitForest,
    graph: CallGraph | None = None,
    current_spans: dict[str, SourceSpan] | None = None,
) -> ContextSlice:
    """Slice for one unit against the crate's current state.

    Raises SliceUnavailable when an inner unit's CFG cannot be built or
    its boundaries cannot be mapped to blocks.
    """
    spans = current_spans or {uid: u.span for uid, u in forest.units.items()}
    fn = model.functions.get(unit.function)
    if fn is None:
        raise SliceUnavailable(f"function {unit.function} missing from current parse")
    f = model.files[fn.file]
    imports = [imp.text for imp in f.imports]

    cfg = None
    facts = None
    if fn.body is not None:
        try:
            cfg = build_cfg(fn.name, f.tokens, fn.body)
            facts = liveness(cfg)
        except (UnsupportedConstruct, KeyError):
            cfg = None

    summaries: dict[str, str] = {}
    if cfg is not None and facts is not None:
        for child_id in unit.children:
            try:
                cin, cout = boundary_liveness(cfg, facts, spans[child_id])
                summaries[child_id] = _summary(cin, cout)
            except SliceUnavailable:
                continue
    source = render_unit_source(model, unit, forest, spans, summaries)

    if unit.kind == "root":
        sites: list[CallSite] = []
        if graph is not None:
            spans_seen: set[tuple[str, int, int]] = set()
            # self-recursive sites live inside the span being replaced;
            # the rewritten body already covers them
            for e in sorted(
                (e for e in graph.edges if e.callee == unit.function and e.caller != unit.function),
                key=lambda e: (e.span.file, e.span.start_line),
            ):
                key = (e.span.file, e.span.start_line, e.span.end_line)
                if key not in spans_seen:
                    spans_seen.add(key)
                    sites.append(e)
        span = spans[unit.unit_id]
        lo_tok, hi_tok = _tokens_for_lines(model, fn.file, span.start_line, span.end_line)
        return ContextSlice(
            unit_id=unit.unit_id,
            kind="root",
            function=unit.function,
            unit_source=source,
            imports=imports,
            globals=_globals_in_range(model, fn.file, lo_tok, hi_tok),
            call_sites=sites,
        )

    # inner unit: boundary liveness
    if cfg is None or facts is None:
        raise SliceUnavailable(f"no CFG for {fn.name}")
    span = spans[unit.unit_id]
    live_in, live_out = boundary_liveness(cfg, facts, span)
    types = declared_types(model, fn)
    names = sorted(live_in | live_out)
    facts_list = [
        LivenessFact(
            name=n,
            declared_type=types.get(n),
            live_in=n in live_in,
            live_out=n in live_out,
        )
        for n in names
    ]
    lo_tok, hi_tok = _tokens_for_lines(model, fn.file, span.start_line, span.end_line)
    return ContextSlice(
        unit_id=unit.unit_id,
        kind="inner",
        function=unit.function,
        unit_source=source,
        imports=imports,
        globals=_globals_in_range(model, fn.file, lo_tok, hi_tok),
        liveness=facts_list,
    )


def empty_inner_slice(
    unit: TranslationUnit,
    model: CrateModel,
    forest: UnitForest,
    current_spans: dict[str, SourceSpan] | None = None,
) -> ContextSlice:
    """Fallback slice when liveness is unavailable: empty lists, flagged."""
    spans = current_spans or {uid: u.span for uid, u in forest.units.items()}
    fn = model.functions.get(unit.function)
    imports = [imp.text for imp in model.files[fn.file].imports] if fn else []
    source = render_unit_source(model, unit, forest, spans)
    return ContextSlice(
        unit_id=unit.unit_id,
        kind="inner",
        function=unit.function,
        unit_source=source,
        imports=imports,
        flagged=True,
    )


def _summary(live_in: set[str], live_out: set[str]) -> str:
    def fmt(s: set[str]) -> str:
        return ", ".join(sorted(s)) if s else "(none)"

    return f"live_in: {fmt(live_in)}; live_out: {fmt(live_out)}"
