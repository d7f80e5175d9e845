"""Persisted run state.

A state directory holds everything needed to pick a run back up:

    config.txt       canonical config the run started with
    state.jsonl      append-only event log (start, one line per unit, finish)
    snapshot.json    full state, rewritten atomically after every unit
    INPROGRESS       marker naming the unit currently being translated
    session-backup/  byte-exact copies of every source file, taken before
                     the in-progress unit touched anything

The snapshot is the load source; the jsonl log is the audit trail. The
marker plus backup exist only while a unit session is running, so their
presence on load means the process died mid-unit: the backup is restored
before resuming and the unit runs again from scratch.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .decompose import TranslationUnit, UnitForest
from .errors import CorruptState
from .source_model import SourceSpan

PENDING = "pending"
ACCEPTED = "accepted"
RESTORED = "restored"
SKIPPED = "skipped"

_FINAL = {ACCEPTED, RESTORED, SKIPPED}


@dataclass
class UnitStatus:
    status: str = PENDING
    attempts: int = 0
    reason: str = ""
    stages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "attempts": self.attempts,
            "reason": self.reason,
            "stages": list(self.stages),
        }

    @staticmethod
    def from_dict(d: dict) -> "UnitStatus":
        return UnitStatus(d["status"], d["attempts"], d.get("reason", ""), list(d.get("stages", [])))


@dataclass
class RunState:
    config_hash: str
    unit_order: list[str]
    statuses: dict[str, UnitStatus]
    forest: UnitForest
    current_spans: dict[str, SourceSpan | None]
    baseline_metrics: dict[str, int]
    position: int = 0
    elapsed: float = 0.0
    cyclic_components: list[list[str]] = field(default_factory=list)
    skipped_functions: list[str] = field(default_factory=list)
    complete: bool = False
    final_status: str = ""

    @property
    def pending(self) -> list[str]:
        return self.unit_order[self.position :]

    def mark(self, unit_id: str, status: str, attempts: int = 0, reason: str = "", stages=None):
        if status not in _FINAL:
            raise ValueError(f"bad unit status {status}")
        st = self.statuses[unit_id]
        if st.status != PENDING:
            raise ValueError(f"unit {unit_id} already {st.status}")
        st.status = status
        st.attempts = attempts
        st.reason = reason
        st.stages = list(stages or [])
        self.position += 1

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "unit_order": list(self.unit_order),
            "statuses": {u: s.to_dict() for u, s in self.statuses.items()},
            "forest": {
                "units": {u: t.to_dict() for u, t in self.forest.units.items()},
                "by_function": {f: list(v) for f, v in self.forest.by_function.items()},
                "errors": list(self.forest.errors),
            },
            "current_spans": {
                u: (sp.to_dict() if sp is not None else None) for u, sp in self.current_spans.items()
            },
            "baseline_metrics": dict(self.baseline_metrics),
            "position": self.position,
            "elapsed": self.elapsed,
            "cyclic_components": [list(c) for c in self.cyclic_components],
            "skipped_functions": list(self.skipped_functions),
            "complete": self.complete,
            "final_status": self.final_status,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunState":
        forest = UnitForest(
            units={u: TranslationUnit.from_dict(t) for u, t in d["forest"]["units"].items()},
            by_function={f: list(v) for f, v in d["forest"]["by_function"].items()},
            errors=list(d["forest"].get("errors", [])),
        )
        return RunState(
            config_hash=d["config_hash"],
            unit_order=list(d["unit_order"]),
            statuses={u: UnitStatus.from_dict(s) for u, s in d["statuses"].items()},
            forest=forest,
            current_spans={
                u: (SourceSpan.from_dict(sp) if sp is not None else None)
                for u, sp in d["current_spans"].items()
            },
            baseline_metrics=dict(d["baseline_metrics"]),
            position=d["position"],
            elapsed=d["elapsed"],
            cyclic_components=[list(c) for c in d.get("cyclic_components", [])],
            skipped_functions=list(d.get("skipped_functions", [])),
            complete=d["complete"],
            final_status=d.get("final_status", ""),
        )


class StateStore:
    """Owns one state directory; all writes go through here."""

    def __init__(self, state_dir: Path):
        self.dir = Path(state_dir)
        self.config_path = self.dir / "config.txt"
        self.log_path = self.dir / "state.jsonl"
        self.snapshot_path = self.dir / "snapshot.json"
        self.marker_path = self.dir / "INPROGRESS"
        self.backup_dir = self.dir / "session-backup"

    def exists(self) -> bool:
        return self.snapshot_path.is_file()

    # -- writing ----------------------------------------------------------

    def initialize(self, config_text: str, st: RunState):
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config_path.write_text(config_text)
        self.log_path.write_text("")
        self.append_event(
            {"event": "start", "config_hash": st.config_hash, "units": list(st.unit_order)}
        )
        self.write_snapshot(st)

    def append_event(self, record: dict):
        record = dict(record)
        record.setdefault("ts", time.time())
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def write_snapshot(self, st: RunState):
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(st.to_dict(), sort_keys=True, indent=1))
        tmp.replace(self.snapshot_path)

    def begin_unit(self, unit_id: str, files: dict[str, str]):
        """Crash fence: snapshot the tree, then plant the marker."""
        if self.backup_dir.is_dir():
            for p in sorted(self.backup_dir.rglob("*"), reverse=True):
                p.unlink() if p.is_file() else p.rmdir()
        for rel, text in files.items():
            dest = self.backup_dir / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text)
        self.marker_path.write_text(json.dumps({"unit": unit_id, "ts": time.time()}))

    def end_unit(self):
        if self.marker_path.is_file():
            self.marker_path.unlink()

    def interrupted_unit(self) -> str | None:
        if not self.marker_path.is_file():
            return None
        try:
            return json.loads(self.marker_path.read_text())["unit"]
        except (ValueError, KeyError) as e:
            raise CorruptState(f"unreadable INPROGRESS marker: {e}") from None

    def restore_backup(self, crate_dir: Path) -> list[str]:
        """Put every backed-up file back; returns the restored paths."""
        restored = []
        for p in sorted(self.backup_dir.rglob("*")):
            if p.is_file():
                rel = p.relative_to(self.backup_dir).as_posix()
                (crate_dir / rel).write_text(p.read_text())
                restored.append(rel)
        return restored

    # -- reading ----------------------------------------------------------

    def load_config_text(self) -> str:
        if not self.config_path.is_file():
            raise CorruptState(f"missing {self.config_path}")
        return self.config_path.read_text()

    def load_snapshot(self) -> RunState:
        if not self.snapshot_path.is_file():
            raise CorruptState(f"no snapshot under {self.dir}")
        try:
            st = RunState.from_dict(json.loads(self.snapshot_path.read_text()))
        except (ValueError, KeyError, TypeError) as e:
            raise CorruptState(f"unreadable snapshot: {e}") from None
        if st.position > len(st.unit_order):
            raise CorruptState("snapshot position past the unit order")
        missing = [u for u in st.unit_order if u not in st.statuses]
        if missing:
            raise CorruptState(f"snapshot lacks statuses for {missing[:3]}")
        for u in st.unit_order[: st.position]:
            if st.statuses[u].status == PENDING:
                raise CorruptState(f"processed unit {u} still pending")
        return st
