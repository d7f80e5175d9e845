"""The end-to-end run: decompose, order, translate unit by unit.

A run starts by checking the crate builds and passes its own tests
(anything else is BaselineFailed; there is no way to tell a bad
translation from a bad baseline). It then decomposes every function,
orders the units callee-first, and gives each one a repair session.
Accepted splices stay; everything else is restored byte-exactly, so the
tree passes its tests after every single unit.

Unit spans are tracked across splices rather than re-derived: once a
function has been rewritten its original decomposition no longer exists
in the source, so each accepted edit shifts the recorded spans of every
unit below it, and the children of an accepted root are re-pinned to
where the expansion landed them.

State is persisted after every unit; `resume` picks up from the first
pending unit, rolling back a half-finished session from its backup if
the process died mid-unit.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig, build_config, config_hash, dumps_config, load_covered, parse_config_text
from .decompose import DecompositionConfig, UnitForest, decompose_crate
from .errors import BaselineFailed, ConfigError, ConfigMismatch, CorruptState, SliceUnavailable
from .llm import CompletionClient
from .metrics import MetricsDelta, SafetyMetrics, compute_metrics
from .ordering import order_units
from .repair import ACCEPTED as SESSION_ACCEPTED
from .repair import RepairConfig, RepairSession, repair_loop
from .slicing import ContextSlice, empty_inner_slice, slice_unit
from .source_model import CrateModel, SourceSpan, parse_crate, resolve_calls
from .splice import apply_edit_to_span
from .state import ACCEPTED, RESTORED, SKIPPED, RunState, StateStore, UnitStatus
from .validate import validate


@dataclass
class UnitResult:
    unit_id: str
    function: str
    kind: str
    status: str
    attempts: int = 0
    stages: list[str] = field(default_factory=list)
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "function": self.function,
            "kind": self.kind,
            "status": self.status,
            "attempts": self.attempts,
            "stages": list(self.stages),
            "reason": self.reason,
        }


@dataclass
class RunReport:
    config_hash: str
    crate_dir: str
    units: list[UnitResult]
    before: SafetyMetrics
    after: SafetyMetrics
    wall_clock: float
    final_status: str
    cyclic_components: list[list[str]] = field(default_factory=list)
    skipped_functions: list[str] = field(default_factory=list)
    oversized_units: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def delta(self) -> MetricsDelta:
        return MetricsDelta(self.before, self.after)

    def tally(self) -> dict[str, int]:
        out = {ACCEPTED: 0, RESTORED: 0, SKIPPED: 0}
        for u in self.units:
            out[u.status] = out.get(u.status, 0) + 1
        return out

    def attempts_histogram(self) -> dict[int, int]:
        """Attempts used by accepted units, echoing the repair-count plot."""
        hist: dict[int, int] = {}
        for u in self.units:
            if u.status == ACCEPTED:
                hist[u.attempts] = hist.get(u.attempts, 0) + 1
        return dict(sorted(hist.items()))

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "crate_dir": self.crate_dir,
            "units": [u.to_dict() for u in self.units],
            "before": self.before.as_dict(),
            "after": self.after.as_dict(),
            "delta_pct": self.delta.pct(),
            "tally": self.tally(),
            "attempts_histogram": {str(k): v for k, v in self.attempts_histogram().items()},
            "wall_clock": self.wall_clock,
            "final_status": self.final_status,
            "cyclic_components": [list(c) for c in self.cyclic_components],
            "skipped_functions": list(self.skipped_functions),
            "oversized_units": list(self.oversized_units),
            "warnings": list(self.warnings),
        }


def run(cfg: RunConfig) -> RunReport:
    """Fresh run. The crate must pass its own tests before anything moves."""
    store = StateStore(cfg.state_dir)
    if store.exists():
        raise ConfigError(
            f"{cfg.state_dir} already holds a run; resume it or point state_dir somewhere fresh"
        )

    outcome = validate(cfg.crate_dir, cfg.build_cmd, cfg.test_cmds, cfg.command_timeout)
    if not outcome.ok:
        raise BaselineFailed(
            f"crate fails {outcome.failed or 'validation'} before any translation:\n"
            + outcome.log[-2000:]
        )

    model = parse_crate(cfg.crate_dir)
    before = compute_metrics(model)
    forest = decompose_crate(model, DecompositionConfig(max_unit_lines=cfg.max_unit_lines))
    graph = resolve_calls(model)
    order = order_units(graph, forest)

    st = RunState(
        config_hash=config_hash(cfg),
        unit_order=list(order.unit_sequence),
        statuses={u: UnitStatus() for u in order.unit_sequence},
        forest=forest,
        current_spans={u: forest.units[u].span for u in forest.units},
        baseline_metrics=before.as_dict(),
        cyclic_components=order.cyclic_components,
        skipped_functions=order.skipped_functions,
    )
    store.initialize(dumps_config(cfg), st)
    return _drive(cfg, store, st)


def resume(state_dir: Path | str, overrides: dict | None = None) -> RunReport:
    """Continue a persisted run; the effective config hash must match."""
    store = StateStore(Path(state_dir))
    if not store.exists():
        raise CorruptState(f"no run snapshot under {state_dir}")
    values = parse_config_text(store.load_config_text(), source=str(store.config_path))
    cfg = build_config(values, overrides)
    cfg.state_dir = Path(state_dir)
    st = store.load_snapshot()
    if config_hash(cfg) != st.config_hash:
        raise ConfigMismatch(
            "the run under {} was started with a different configuration".format(state_dir)
        )

    interrupted = store.interrupted_unit()
    if interrupted is not None:
        restored = store.restore_backup(cfg.crate_dir)
        store.end_unit()
        store.append_event({"event": "rollback", "unit": interrupted, "files": restored})
    return _drive(cfg, store, st)


# ---------------------------------------------------------------------------
# the drive loop


def _drive(cfg: RunConfig, store: StateStore, st: RunState) -> RunReport:
    t0 = time.monotonic()
    base_elapsed = st.elapsed
    covered = load_covered(cfg.covered_fns_file) if cfg.covered_only else None
    client = CompletionClient(cfg.backend)
    rcfg = RepairConfig(
        max_attempts=cfg.max_attempts,
        build_cmd=cfg.build_cmd,
        test_cmds=cfg.test_cmds,
        timeout=cfg.command_timeout,
    )
    skipped_fns = set(st.skipped_functions)

    while st.position < len(st.unit_order):
        uid = st.unit_order[st.position]
        unit = st.forest.units[uid]
        model = sl = None

        reason = _skip_reason(st, unit, covered, skipped_fns)
        if reason is None:
            model, graph, parse_err = _parse_current(cfg.crate_dir)
            if model is None:
                reason = f"crate no longer parses: {parse_err}"
        if reason is None:
            spans = {u: sp for u, sp in st.current_spans.items() if sp is not None}
            sl, reason = _slice(unit, model, st.forest, graph, spans)

        if reason is not None:
            st.mark(uid, SKIPPED, reason=reason)
            store.append_event({"event": "unit", "unit": uid, "status": SKIPPED, "reason": reason})
            st.elapsed = base_elapsed + (time.monotonic() - t0)
            store.write_snapshot(st)
            continue

        store.begin_unit(uid, {f: fm.text for f, fm in model.files.items()})
        session = repair_loop(unit, sl, model, spans, client, rcfg)
        if session.final == SESSION_ACCEPTED:
            _update_spans(st, unit, sl, session)
            st.mark(uid, ACCEPTED, attempts=len(session.attempts), stages=[a.stage for a in session.attempts])
        else:
            st.mark(uid, RESTORED, attempts=len(session.attempts), stages=[a.stage for a in session.attempts])
        store.append_event(
            {
                "event": "unit",
                "unit": uid,
                "status": st.statuses[uid].status,
                "attempts": st.statuses[uid].attempts,
                "stages": st.statuses[uid].stages,
            }
        )
        st.elapsed = base_elapsed + (time.monotonic() - t0)
        store.write_snapshot(st)
        store.end_unit()

    if not st.complete:
        outcome = validate(cfg.crate_dir, cfg.build_cmd, cfg.test_cmds, cfg.command_timeout)
        st.final_status = outcome.status
        st.complete = True
        st.elapsed = base_elapsed + (time.monotonic() - t0)
        store.append_event({"event": "finish", "final_status": st.final_status})
        store.write_snapshot(st)

    return _report(cfg, st)


def _skip_reason(st: RunState, unit, covered, skipped_fns) -> str | None:
    if covered is not None and unit.function not in covered:
        return "function not covered by tests"
    if unit.function in skipped_fns:
        return "function left out of the translation order"
    if st.current_spans.get(unit.unit_id) is None:
        return "unit span lost to an earlier splice"
    for child in unit.children:
        if st.current_spans.get(child) is None:
            return f"child unit {child} span lost to an earlier splice"
    return None


def _parse_current(crate_dir: Path):
    """Re-read the tree as it stands; never let a parse problem kill the run."""
    try:
        model = parse_crate(crate_dir, lenient=True)
        return model, resolve_calls(model), None
    except Exception as e:
        return None, None, str(e)


def _slice(unit, model: CrateModel, forest: UnitForest, graph, spans) -> tuple[ContextSlice | None, str | None]:
    try:
        return slice_unit(unit, model, forest, graph, spans), None
    except SliceUnavailable as e:
        if unit.kind == "inner":
            try:
                return empty_inner_slice(unit, model, forest, spans), None
            except Exception:
                return None, str(e)
        return None, str(e)
    except KeyError as e:
        return None, f"stale reference while slicing: {e}"


def _descendants(forest: UnitForest, unit_id: str) -> set[str]:
    out: set[str] = set()
    work = list(forest.units[unit_id].children)
    while work:
        c = work.pop()
        out.add(c)
        work.extend(forest.units[c].children)
    return out


def _update_spans(st: RunState, unit, sl: ContextSlice, session: RepairSession):
    """Re-pin every tracked span after an accepted splice.

    Mirrors the splice exactly: line edits first (descending, so each
    edit's original coordinates stay valid), then import insertions in
    post-edit coordinates. Descendants of the spliced unit are placed
    from the recorded expansion landings instead, since the splice moved
    them as blocks.
    """
    old = dict(st.current_spans)
    root_old = old[unit.unit_id]
    edits: list[tuple[SourceSpan, int]] = [(root_old, session.accepted_lines)]
    resp = session.accepted_response
    for site, text in zip(sl.call_sites, resp.call_site_texts):
        edits.append((site.span, len(text.split("\n"))))
    edits.sort(key=lambda e: (e[0].file, -e[0].start_line))
    skip = _descendants(st.forest, unit.unit_id)

    new: dict[str, SourceSpan | None] = {}
    for uid, sp in old.items():
        if sp is None or uid in skip:
            new[uid] = sp
            continue
        cur = sp
        for esp, n_lines in edits:
            cur = apply_edit_to_span(cur, esp, n_lines)
            if cur is None:
                break
        new[uid] = cur

    for f, (at, added) in session.import_landings.items():
        first_new = at + 1  # 1-based line number of the first inserted line
        for uid, sp in new.items():
            if sp is None or uid in skip or sp.file != f:
                continue
            if sp.start_line >= first_new:
                new[uid] = SourceSpan(f, sp.start_line + added, sp.end_line + added)
            elif sp.end_line >= first_new:
                new[uid] = SourceSpan(f, sp.start_line, sp.end_line + added)

    root_new = new[unit.unit_id]
    for child_id, (offset, count) in session.child_landings.items():
        c_old = old[child_id]
        c_new = SourceSpan(root_new.file, root_new.start_line + offset, root_new.start_line + offset + count - 1)
        new[child_id] = c_new
        delta = c_new.start_line - c_old.start_line
        for d in _descendants(st.forest, child_id):
            dsp = old[d]
            if dsp is not None:
                new[d] = SourceSpan(dsp.file, dsp.start_line + delta, dsp.end_line + delta)
    st.current_spans = new


def _report(cfg: RunConfig, st: RunState) -> RunReport:
    before = SafetyMetrics(**st.baseline_metrics)
    diag: dict = {}
    after = compute_metrics(cfg.crate_dir, collect=diag)
    units = [
        UnitResult(
            unit_id=u,
            function=st.forest.units[u].function,
            kind=st.forest.units[u].kind,
            status=st.statuses[u].status,
            attempts=st.statuses[u].attempts,
            stages=list(st.statuses[u].stages),
            reason=st.statuses[u].reason,
        )
        for u in st.unit_order
    ]
    return RunReport(
        config_hash=st.config_hash,
        crate_dir=str(cfg.crate_dir),
        units=units,
        before=before,
        after=after,
        wall_clock=st.elapsed,
        final_status=st.final_status,
        cyclic_components=st.cyclic_components,
        skipped_functions=st.skipped_functions,
        oversized_units=sorted(u for u, t in st.forest.units.items() if t.oversized),
        warnings=list(diag.get("warnings", [])),
    )
