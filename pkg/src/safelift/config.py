"""Run configuration.

Config files are flat `key = value` text. `#` starts a comment, blank
lines are skipped, and `test_cmd` may repeat to build the command list.
Every key has a matching CLI flag and the flag wins. A run's identity
is the sha256 of the canonical dump minus the keys that only say where
output goes (state_dir, audit_log); resuming checks that hash.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .llm import BackendConfig


@dataclass
class RunConfig:
    crate_dir: Path = Path(".")
    max_unit_lines: int = 150
    max_attempts: int = 5
    build_cmd: str = "cargo build"
    test_cmds: list[str] = field(default_factory=list)
    backend: BackendConfig = field(default_factory=BackendConfig)
    state_dir: Path | None = None  # default: <crate_dir>/.safelift
    command_timeout: float = 300.0
    covered_only: bool = False
    covered_fns_file: Path | None = None

    def __post_init__(self):
        self.crate_dir = Path(self.crate_dir)
        if self.max_unit_lines < 1:
            raise ConfigError("max_unit_lines must be at least 1")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be at least 1")
        if not self.build_cmd.strip():
            raise ConfigError("build_cmd must not be empty")
        if self.command_timeout <= 0:
            raise ConfigError("command_timeout must be positive")
        if self.covered_only and self.covered_fns_file is None:
            raise ConfigError("covered_only needs covered_fns_file")
        if self.state_dir is None:
            self.state_dir = self.crate_dir / ".safelift"
        else:
            self.state_dir = Path(self.state_dir)
        if self.covered_fns_file is not None:
            self.covered_fns_file = Path(self.covered_fns_file)


# config-file key -> (target, attribute, parser); "test_cmd" handled apart
_KEYS = {
    "crate_dir": ("run", "crate_dir", Path),
    "max_unit_lines": ("run", "max_unit_lines", int),
    "max_attempts": ("run", "max_attempts", int),
    "build_cmd": ("run", "build_cmd", str),
    "state_dir": ("run", "state_dir", Path),
    "command_timeout": ("run", "command_timeout", float),
    "covered_only": ("run", "covered_only", None),  # bool, parsed below
    "covered_fns_file": ("run", "covered_fns_file", Path),
    "backend_endpoint": ("backend", "endpoint", str),
    "backend_model": ("backend", "model_name", str),
    "backend_temperature": ("backend", "temperature", float),
    "backend_timeout": ("backend", "timeout", float),
    "backend_max_retries": ("backend", "max_retries", int),
    "audit_log": ("backend", "audit_log", str),
}

_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_bool(raw: str, key: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected true/false, got {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat key=value text -> {key: str value, 'test_cmd': [list]}."""
    out: dict = {"test_cmd": []}
    for n, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{n}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key == "test_cmd":
            if raw:
                out["test_cmd"].append(raw)
            continue
        if key not in _KEYS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        out[key] = raw
    return out


def build_config(values: dict, overrides: dict | None = None) -> RunConfig:
    """Assemble a RunConfig from parsed file values plus CLI overrides.

    `overrides` uses the same keys as the file; an override replaces
    the file value, and an override list for test_cmd replaces the
    whole list.
    """
    merged = dict(values)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        merged[k] = v

    run_kwargs: dict = {}
    backend_kwargs: dict = {}
    for key, raw in merged.items():
        if key == "test_cmd":
            run_kwargs["test_cmds"] = [str(c) for c in raw]
            continue
        target, attr, conv = _KEYS[key]
        if key == "covered_only":
            val = raw if isinstance(raw, bool) else _parse_bool(str(raw), key)
        elif isinstance(raw, str) and conv is not None:
            try:
                val = conv(raw)
            except ValueError:
                raise ConfigError(f"{key}: bad value {raw!r}") from None
        else:
            val = raw
        if target == "run":
            run_kwargs[attr] = val
        else:
            backend_kwargs[attr] = val
    try:
        backend = BackendConfig(**backend_kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return RunConfig(backend=backend, **run_kwargs)


def load_config(path: Path | str, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = parse_config_text(path.read_text(), source=str(path))
    return build_config(values, overrides)


def dumps_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config_text reads it back."""
    lines = [
        f"crate_dir = {cfg.crate_dir}",
        f"max_unit_lines = {cfg.max_unit_lines}",
        f"max_attempts = {cfg.max_attempts}",
        f"build_cmd = {cfg.build_cmd}",
    ]
    for cmd in cfg.test_cmds:
        lines.append(f"test_cmd = {cmd}")
    lines += [
        f"command_timeout = {cfg.command_timeout}",
        f"covered_only = {str(cfg.covered_only).lower()}",
        f"backend_endpoint = {cfg.backend.endpoint}",
        f"backend_model = {cfg.backend.model_name}",
        f"backend_temperature = {cfg.backend.temperature}",
        f"backend_timeout = {cfg.backend.timeout}",
        f"backend_max_retries = {cfg.backend.max_retries}",
    ]
    if cfg.covered_fns_file is not None:
        lines.append(f"covered_fns_file = {cfg.covered_fns_file}")
    lines.append(f"state_dir = {cfg.state_dir}")
    if cfg.backend.audit_log:
        lines.append(f"audit_log = {cfg.backend.audit_log}")
    return "\n".join(lines) + "\n"


# keys that do not change what a run computes, only where records land
_UNHASHED = ("state_dir = ", "audit_log = ")


def config_hash(cfg: RunConfig) -> str:
    text = "\n".join(
        ln for ln in dumps_config(cfg).split("\n") if ln and not ln.startswith(_UNHASHED)
    )
    return hashlib.sha256(text.encode()).hexdigest()


def load_covered(path: Path) -> set[str]:
    """Covered-function list: one qualified name per line, # comments."""
    if not path.is_file():
        raise ConfigError(f"covered_fns_file not found: {path}")
    names = set()
    for line in path.read_text().split("\n"):
        s = line.strip()
        if s and not s.startswith("#"):
            names.add(s)
    return names
