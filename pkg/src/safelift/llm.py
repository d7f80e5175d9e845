"""Prompt construction, tagged-response parsing, and completion backends.

Responses use three tag pairs: <FUNC> for the unit translation, <CALL>
(one per call site, same order as the prompt) for call-site rewrites,
and <IMPORTS> for new use statements. Only the first FUNC and IMPORTS
pairs are honored; anything after the last close tag is ignored.

The root prompt template follows the shape of the upstream tool's
published prompt; the inner-unit template is this project's own
interpolation, since no reference wording exists for that case.

Backends are selected by endpoint scheme:
  mock:<dir>    canned files `<unit-id>.attempt<k>.txt`, for tests
  identity:     echoes the code blocks found in the prompt (no-op edit)
  garbage:      well-tagged response whose function body cannot compile
  http(s)://    JSON chat-completion request with retry on 429/5xx
Every exchange is appended to a line-delimited audit log when one is
configured.
"""

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BackendError, BackendHttpError, BackendTimeout, MalformedResponse, MockResponseMissing
from .slicing import ContextSlice

PLACEHOLDER_NOTE = (
    "Some lines look like `// [[unit ...]] ...`. These are placeholders for code "
    "that is translated separately. Keep every such line exactly as it is, in place."
)


@dataclass
class PromptRecord:
    unit: str
    text: str
    # prior (prompt, response) turns of this unit's repair conversation
    conversation: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ModelResponse:
    function_text: str
    call_site_texts: list[str] = field(default_factory=list)
    new_imports: list[str] = field(default_factory=list)
    raw: str = ""


@dataclass
class BackendConfig:
    endpoint: str = "mock:./responses"
    model_name: str = "local"
    temperature: float = 0.0
    timeout: float = 120.0
    max_retries: int = 3
    audit_log: str | None = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("backend timeout must be positive")


def _fenced(code: str) -> str:
    return f"```rust\n{code}\n```"


def build_prompt(sl: ContextSlice) -> PromptRecord:
    """Compose the translation prompt for one unit's context slice."""
    if sl.kind == "root":
        text = _root_prompt(sl)
    else:
        text = _inner_prompt(sl)
    return PromptRecord(unit=sl.unit_id, text=text)


def _root_prompt(sl: ContextSlice) -> str:
    parts = ["Here is a function:", _fenced(sl.unit_source)]
    if sl.call_sites:
        parts.append("Here are its call sites")
        for i, site in enumerate(sl.call_sites, start=1):
            parts.append(f"Call site {i}:")
            parts.append(_fenced(site.text))
    if sl.globals:
        parts.append("The function uses the following global variables:")
        parts.append(_fenced("\n".join(sl.globals)))
    if sl.imports:
        parts.append("The file contains the following imports:")
        parts.append(_fenced("\n".join(sl.imports)))
    parts.append(
        "Rewrite the function as idiomatic Rust: avoid unsafe blocks, raw pointers, "
        "and C-style APIs wherever a safe equivalent exists. Do not change the "
        "function's name."
    )
    call_clause = ""
    if sl.call_sites:
        call_clause = (
            " If the signature changed, every call site must be updated to match. "
            "Place each call site translation, in the same order as listed above, "
            "between <CALL> and </CALL>. A call site translation may span several "
            "statements (for example to declare helper variables or convert types "
            "before or after the call), but it must leave the surrounding code "
            "unaffected."
        )
    parts.append(
        "Output format: place the function translation between the tags <FUNC> and "
        "</FUNC>." + call_clause
    )
    parts.append(PLACEHOLDER_NOTE)
    parts.append(
        "Functions or variables that have no definition here are defined elsewhere "
        "in the crate. Do not redefine them and do not import them."
    )
    parts.append(
        "If the translation needs new imports, place them between <IMPORTS> and "
        "</IMPORTS>. List only new imports, never ones the file already has."
    )
    parts.append('Do not include markdown fences like "```" or "```rust" anywhere in your output.')
    return "\n".join(parts)


def _inner_prompt(sl: ContextSlice) -> str:
    live_in = [f.name for f in sl.liveness if f.live_in]
    live_out = [f.name for f in sl.liveness if f.live_out]
    typed = {f.name: f.declared_type for f in sl.liveness if f.declared_type}

    def fmt(names: list[str]) -> str:
        if not names:
            return "(none)"
        return ", ".join(f"{n}: {typed[n]}" if n in typed else n for n in names)

    parts = [
        "Here is a fragment from the middle of a larger function:",
        _fenced(sl.unit_source),
        f"Variables live at the start of the fragment: {fmt(live_in)}",
        f"Variables live at the end of the fragment: {fmt(live_out)}",
    ]
    if sl.flagged:
        parts.append(
            "Liveness information is unavailable for this fragment; assume every "
            "variable it touches is needed afterwards."
        )
    if sl.globals:
        parts.append("The enclosing function uses the following global variables:")
        parts.append(_fenced("\n".join(sl.globals)))
    if sl.imports:
        parts.append("The file contains the following imports:")
        parts.append(_fenced("\n".join(sl.imports)))
    parts.append(
        "Rewrite the fragment as idiomatic Rust: avoid unsafe blocks, raw pointers, "
        "and C-style APIs wherever a safe equivalent exists. The fragment is spliced "
        "back verbatim, so it must still make sense in place: the variables listed "
        "as live at the start must be consumed with their current names and types, "
        "and the variables listed as live at the end must hold the same values they "
        "would have held before your change. Do not rename or drop them."
    )
    parts.append(PLACEHOLDER_NOTE)
    parts.append("Output format: place the rewritten fragment between the tags <FUNC> and </FUNC>.")
    parts.append(
        "Functions or variables that have no definition here are defined elsewhere "
        "in the crate. Do not redefine them and do not import them."
    )
    parts.append(
        "If the translation needs new imports, place them between <IMPORTS> and "
        "</IMPORTS>. List only new imports, never ones the file already has."
    )
    parts.append('Do not include markdown fences like "```" or "```rust" anywhere in your output.')
    return "\n".join(parts)


def _strip_block(block: str) -> str:
    """Drop markdown fence lines and the newlines that hug the tags."""
    if block.startswith("\n"):
        block = block[1:]
    if block.endswith("\n"):
        block = block[:-1]
    lines = [ln for ln in block.split("\n") if not ln.strip().startswith("```")]
    return "\n".join(lines)


def _first_block(raw: str, tag: str) -> str | None:
    open_t, close_t = f"<{tag}>", f"</{tag}>"
    start = raw.find(open_t)
    if start < 0:
        return None
    end = raw.find(close_t, start + len(open_t))
    if end < 0:
        raise MalformedResponse(f"unbalanced {open_t} tag")
    return raw[start + len(open_t) : end]


def _all_blocks(raw: str, tag: str) -> list[str]:
    open_t, close_t = f"<{tag}>", f"</{tag}>"
    out = []
    pos = 0
    while True:
        start = raw.find(open_t, pos)
        if start < 0:
            break
        end = raw.find(close_t, start + len(open_t))
        if end < 0:
            raise MalformedResponse(f"unbalanced {open_t} tag")
        out.append(raw[start + len(open_t) : end])
        pos = end + len(close_t)
    return out


def parse_response(raw: str, expected_call_sites: int) -> ModelResponse:
    """Extract FUNC/CALL/IMPORTS blocks; MalformedResponse on any defect."""
    func = _first_block(raw, "FUNC")
    if func is None:
        raise MalformedResponse("missing <FUNC> tag")
    calls = _all_blocks(raw, "CALL")
    if len(calls) != expected_call_sites:
        raise MalformedResponse(
            f"expected {expected_call_sites} <CALL> blocks, found {len(calls)}"
        )
    imports_block = _first_block(raw, "IMPORTS")
    new_imports: list[str] = []
    if imports_block is not None:
        new_imports = [ln.strip() for ln in _strip_block(imports_block).split("\n") if ln.strip()]
    return ModelResponse(
        function_text=_strip_block(func),
        call_site_texts=[_strip_block(c) for c in calls],
        new_imports=new_imports,
        raw=raw,
    )


def render_response(m: ModelResponse) -> str:
    """Inverse of parse_response for well-formed responses."""
    parts = [f"<FUNC>\n{m.function_text}\n</FUNC>"]
    for c in m.call_site_texts:
        parts.append(f"<CALL>\n{c}\n</CALL>")
    if m.new_imports:
        parts.append("<IMPORTS>\n" + "\n".join(m.new_imports) + "\n</IMPORTS>")
    return "\n".join(parts)


def _prompt_code_blocks(prompt: str) -> tuple[str | None, list[str]]:
    """(function block, call-site blocks) as they appear in a prompt."""
    lines = prompt.split("\n")
    blocks: list[tuple[str, str]] = []  # (preceding header line, code)
    i = 0
    header = ""
    while i < len(lines):
        if lines[i].startswith("```"):
            j = i + 1
            body = []
            while j < len(lines) and not lines[j].startswith("```"):
                body.append(lines[j])
                j += 1
            blocks.append((header, "\n".join(body)))
            i = j + 1
        else:
            if lines[i].strip():
                header = lines[i]
            i += 1
    func = None
    calls = []
    for head, code in blocks:
        if head.startswith("Here is a function") or head.startswith("Here is a fragment"):
            func = code
        elif head.startswith("Call site"):
            calls.append(code)
    return func, calls


class CompletionClient:
    """Routes completion requests to the configured backend."""

    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg

    def complete(self, prompt: PromptRecord, attempt: int = 0) -> str:
        ep = self.cfg.endpoint
        try:
            if ep.startswith("mock:"):
                raw = self._mock(ep[len("mock:") :], prompt.unit, attempt)
            elif ep.startswith("identity:"):
                raw = self._identity(prompt)
            elif ep.startswith("garbage:"):
                raw = self._garbage(prompt)
            elif ep.startswith("http://") or ep.startswith("https://"):
                raw = self._http(prompt)
            else:
                raise BackendError(f"unknown backend endpoint: {ep}")
        except BackendError:
            self._audit(prompt, attempt, None)
            raise
        self._audit(prompt, attempt, raw)
        return raw

    def _mock(self, directory: str, unit: str, attempt: int) -> str:
        path = Path(directory) / f"{unit}.attempt{attempt}.txt"
        if not path.is_file():
            raise MockResponseMissing(f"no canned response at {path}")
        return path.read_text()

    def _base_blocks(self, prompt: PromptRecord) -> tuple[str | None, list[str]]:
        # feedback turns carry no code blocks; fall back to the opening turn
        func, calls = _prompt_code_blocks(prompt.text)
        if func is None and prompt.conversation:
            func, calls = _prompt_code_blocks(prompt.conversation[0][0])
        return func, calls

    def _identity(self, prompt: PromptRecord) -> str:
        func, calls = self._base_blocks(prompt)
        if func is None:
            raise BackendError("identity backend found no code block in prompt")
        return render_response(ModelResponse(function_text=func, call_site_texts=calls))

    def _garbage(self, prompt: PromptRecord) -> str:
        _, calls = self._base_blocks(prompt)
        broken = "fn __does_not_compile(x: NoSuchType) -> {\n    let = ;\n}"
        return render_response(ModelResponse(function_text=broken, call_site_texts=calls))

    def _http(self, prompt: PromptRecord) -> str:
        messages = []
        for user, assistant in prompt.conversation:
            messages.append({"role": "user", "content": user})
            messages.append({"role": "assistant", "content": assistant})
        messages.append({"role": "user", "content": prompt.text})
        body = json.dumps(
            {
                "model": self.cfg.model_name,
                "messages": messages,
                "temperature": self.cfg.temperature,
            }
        ).encode()
        last_exc: Exception | None = None
        for retry in range(self.cfg.max_retries + 1):
            if retry:
                time.sleep(min(0.1 * retry, 2.0))
            req = urllib.request.Request(
                self.cfg.endpoint,
                data=body,
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=self.cfg.timeout) as resp:
                    payload = json.loads(resp.read().decode())
                return payload["choices"][0]["message"]["content"]
            except urllib.error.HTTPError as e:
                if e.code == 429 or e.code >= 500:
                    last_exc = BackendHttpError(e.code)
                    continue
                raise BackendHttpError(e.code) from e
            except TimeoutError as e:
                last_exc = BackendTimeout(f"no reply within {self.cfg.timeout}s")
                continue
            except urllib.error.URLError as e:
                if isinstance(e.reason, TimeoutError):
                    last_exc = BackendTimeout(f"no reply within {self.cfg.timeout}s")
                else:
                    last_exc = BackendError(f"request failed: {e.reason}")
                continue
            except (KeyError, IndexError, json.JSONDecodeError) as e:
                raise BackendError(f"malformed backend reply: {e}") from e
        assert last_exc is not None
        raise last_exc

    def _audit(self, prompt: PromptRecord, attempt: int, raw: str | None):
        if not self.cfg.audit_log:
            return
        record = {
            "ts": time.time(),
            "unit": prompt.unit,
            "attempt": attempt,
            "endpoint": self.cfg.endpoint.split(":", 1)[0],
            "prompt": prompt.text,
            "response": raw,
        }
        with open(self.cfg.audit_log, "a") as fh:
            fh.write(json.dumps(record) + "\n")
