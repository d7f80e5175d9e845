"""The per-unit translate/splice/validate/repair session.

Each unit gets up to N attempts. An attempt completes the prompt,
parses the tagged response, splices it in (function body, call sites,
imports; atomically), and validates the tree. Pass keeps the edits;
anything else reverts them byte-exactly, appends the failure as a
feedback turn, and tries again. Backend errors, unparseable responses,
and validation timeouts all burn an attempt. After N failures the crate
is left exactly as the session found it.

Root translations carry their children inside: the model keeps each
child's placeholder line, and assembly re-expands every marker with the
child's current code before splicing, recording where each child landed
so its span can be tracked afterwards.
"""

from dataclasses import dataclass, field
from pathlib import Path

from .decompose import TranslationUnit, UnitForest
from .errors import BackendError, MalformedResponse, OverlappingEdits, SpanOutOfDate
from .llm import CompletionClient, ModelResponse, PromptRecord, build_prompt, parse_response
from .slicing import ContextSlice
from .source_model import CrateModel, SourceSpan
from .splice import SpliceSet, file_hash, revert, splice
from .validate import PASS, ValidationOutcome, validate

ACCEPTED = "accepted"
RESTORED = "restored"

RETRY_INSTRUCTION = (
    "That attempt failed. Regenerate the complete response in the same tagged "
    "format: the whole function body{calls} and any imports it needs."
)


@dataclass
class RepairConfig:
    max_attempts: int = 5
    feedback_bytes: int = 8192
    build_cmd: str = "cargo build"
    test_cmds: list[str] = field(default_factory=list)
    timeout: float = 300.0


@dataclass
class AttemptRecord:
    index: int
    stage: str  # accepted | backend_error | parse_error | splice_error |
    #             compile_error | test_failure | timeout
    detail: str = ""


@dataclass
class RepairSession:
    unit: str
    attempts: list[AttemptRecord] = field(default_factory=list)
    final: str = RESTORED
    conversation: list[tuple[str, str]] = field(default_factory=list)
    accepted_response: ModelResponse | None = None
    # child unit id -> (line offset within the spliced function text, line count)
    child_landings: dict[str, tuple[int, int]] = field(default_factory=dict)
    accepted_lines: int = 0  # line count of the spliced function text
    # file -> (0-based insertion index, lines added) for accepted imports
    import_landings: dict[str, tuple[int, int]] = field(default_factory=dict)


def _marker_index(lines: list[str], unit_id: str) -> list[int]:
    needle = f"// [[unit {unit_id}]]"
    return [i for i, ln in enumerate(lines) if ln.strip().startswith(needle)]


def expand_placeholders(
    function_text: str,
    unit: TranslationUnit,
    model: CrateModel,
    current_spans: dict[str, SourceSpan],
) -> tuple[str, dict[str, tuple[int, int]]]:
    """Replace each direct child's marker line with the child's current
    code; returns the expanded text and each child's landing offsets.

    Raises MalformedResponse when a marker is missing or duplicated -
    dropping one would silently delete already-translated code.
    """
    lines = function_text.split("\n")
    marker_of: dict[int, str] = {}
    for child_id in unit.children:
        hits = _marker_index(lines, child_id)
        if len(hits) != 1:
            state = "missing" if not hits else "duplicated"
            raise MalformedResponse(f"placeholder line for unit {child_id} is {state}")
        marker_of[hits[0]] = child_id
    out: list[str] = []
    landings: dict[str, tuple[int, int]] = {}
    for i, ln in enumerate(lines):
        child_id = marker_of.get(i)
        if child_id is None:
            out.append(ln)
            continue
        span = current_spans[child_id]
        child_lines = model.files[span.file].lines[span.start_line - 1 : span.end_line]
        landings[child_id] = (len(out), len(child_lines))
        out.extend(child_lines)
    return "\n".join(out), landings


def assemble_splice(
    unit: TranslationUnit,
    sl: ContextSlice,
    resp: ModelResponse,
    model: CrateModel,
    current_spans: dict[str, SourceSpan],
) -> tuple[SpliceSet, dict[str, tuple[int, int]], int]:
    """SpliceSet for one parsed response, plus child landings and the
    final line count of the function replacement."""
    span = current_spans[unit.unit_id]
    text, landings = expand_placeholders(resp.function_text, unit, model, current_spans)
    edits: list[tuple[SourceSpan, str]] = [(span, text)]
    for site, new_text in zip(sl.call_sites, resp.call_site_texts):
        edits.append((site.span, new_text))
    s = SpliceSet(edits=edits)
    if resp.new_imports:
        s.import_additions[span.file] = list(resp.new_imports)
    for f in s.files():
        s.expected_hashes[f] = file_hash(model.files[f].text)
    return s, landings, len(text.split("\n"))


def _feedback(sl: ContextSlice, detail: str, budget: int) -> str:
    calls = ", all call sites," if sl.call_sites else ""
    line = RETRY_INSTRUCTION.replace("{calls}", calls)
    tail = detail[-budget:] if len(detail) > budget else detail
    return f"{line}\n{tail}" if tail else line


def repair_loop(
    unit: TranslationUnit,
    sl: ContextSlice,
    model: CrateModel,
    current_spans: dict[str, SourceSpan],
    client: CompletionClient,
    cfg: RepairConfig,
) -> RepairSession:
    """Run one unit's session; the crate ends either improved or untouched."""
    session = RepairSession(unit=unit.unit_id)
    crate_dir = model.root
    pre_hashes = {f: file_hash(fm.text) for f, fm in model.files.items()}
    feedback: str | None = None

    for k in range(cfg.max_attempts):
        prompt = build_prompt(sl)
        if feedback is not None:
            prompt = PromptRecord(unit=prompt.unit, text=feedback, conversation=list(session.conversation))
        raw = None
        try:
            raw = client.complete(prompt, attempt=k)
            resp = parse_response(raw, expected_call_sites=len(sl.call_sites))
            s, landings, n_lines = assemble_splice(unit, sl, resp, model, current_spans)
        except BackendError as e:
            session.attempts.append(AttemptRecord(k, "backend_error", str(e)))
            session.conversation.append((prompt.text, raw or ""))
            feedback = _feedback(sl, f"backend error: {e}", cfg.feedback_bytes)
            continue
        except MalformedResponse as e:
            session.attempts.append(AttemptRecord(k, "parse_error", str(e)))
            session.conversation.append((prompt.text, raw or ""))
            feedback = _feedback(sl, f"your response could not be parsed: {e}", cfg.feedback_bytes)
            continue

        try:
            token = splice(crate_dir, s)
        except (OverlappingEdits, SpanOutOfDate) as e:
            session.attempts.append(AttemptRecord(k, "splice_error", str(e)))
            session.conversation.append((prompt.text, raw))
            feedback = _feedback(sl, f"the edit could not be applied: {e}", cfg.feedback_bytes)
            continue

        outcome = validate(crate_dir, cfg.build_cmd, cfg.test_cmds, cfg.timeout)
        if outcome.status == PASS:
            session.attempts.append(AttemptRecord(k, ACCEPTED))
            session.conversation.append((prompt.text, raw))
            session.final = ACCEPTED
            session.accepted_response = resp
            session.child_landings = landings
            session.accepted_lines = n_lines
            session.import_landings = dict(token.import_landings)
            return session

        revert(crate_dir, token)
        session.attempts.append(AttemptRecord(k, outcome.status, _tail(outcome.log, 400)))
        session.conversation.append((prompt.text, raw))
        feedback = _feedback(sl, outcome.log, cfg.feedback_bytes)

    session.final = RESTORED
    for f, h in pre_hashes.items():
        now = file_hash((crate_dir / f).read_text())
        if now != h:
            # belt and braces: a reverted session must leave no trace
            (crate_dir / f).write_text(model.files[f].text)
    return session


def _tail(text: str, n: int) -> str:
    return text[-n:] if len(text) > n else text
