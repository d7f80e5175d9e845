"""Build-and-test validation of the working tree.

The build command and each test command run as shell subprocesses in
the crate directory, each under its own wall-clock budget. A nonzero
build exit is a CompileError; a nonzero test exit is a TestFailure
naming the command; exceeding the budget is a Timeout. Logs are the
combined stdout+stderr of the failing step (or of the whole run on
success), which downstream feeds back to the model.
"""

import subprocess
from dataclasses import dataclass, field
from pathlib import Path

PASS = "pass"
COMPILE_ERROR = "compile_error"
TEST_FAILURE = "test_failure"
TIMEOUT = "timeout"


@dataclass
class ValidationOutcome:
    status: str  # pass | compile_error | test_failure | timeout
    log: str = ""
    failed: list[str] = field(default_factory=list)  # failing test commands

    @property
    def ok(self) -> bool:
        return self.status == PASS


def _run(cmd: str, cwd: Path, timeout: float) -> tuple[int | None, str]:
    """(exit code, combined output); exit code None means timed out."""
    try:
        proc = subprocess.run(
            cmd,
            shell=True,
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as e:
        out = (e.stdout or b"") if isinstance(e.stdout, bytes) else (e.stdout or "")
        if isinstance(out, bytes):
            out = out.decode(errors="replace")
        return None, out + f"\n[timed out after {timeout:.0f}s: {cmd}]"
    return proc.returncode, proc.stdout + proc.stderr


def validate(
    crate_dir: Path,
    build_cmd: str = "cargo build",
    test_cmds: list[str] | None = None,
    timeout: float = 300.0,
) -> ValidationOutcome:
    """Build the crate, then run each end-to-end test command."""
    code, log = _run(build_cmd, crate_dir, timeout)
    if code is None:
        return ValidationOutcome(TIMEOUT, log, [build_cmd])
    if code != 0:
        return ValidationOutcome(COMPILE_ERROR, log)
    logs = [log]
    for cmd in test_cmds or []:
        code, out = _run(cmd, crate_dir, timeout)
        logs.append(out)
        if code is None:
            return ValidationOutcome(TIMEOUT, "\n".join(logs), [cmd])
        if code != 0:
            return ValidationOutcome(TEST_FAILURE, "\n".join(logs), [cmd])
    return ValidationOutcome(PASS, "\n".join(logs))
