"""Rendering for finished runs: a human table or machine JSON.

The JSON form is the report's own to_dict() and reads back with
load_report(), so downstream tooling round-trips losslessly.
"""

import json

from .metrics import report_delta
from .pipeline import RunReport
from .state import ACCEPTED, RESTORED, SKIPPED


def render_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def load_report(text: str) -> dict:
    """Parse a rendered JSON report back into its dict form."""
    data = json.loads(text)
    for key in ("config_hash", "units", "before", "after", "tally"):
        if key not in data:
            raise ValueError(f"not a run report: missing {key}")
    return data


def render_table(report: RunReport) -> str:
    out = []
    out.append(f"crate: {report.crate_dir}")
    out.append(f"config: {report.config_hash[:12]}")
    out.append(f"wall clock: {report.wall_clock:.1f}s")
    out.append(f"final validation: {report.final_status}")
    out.append("")
    out.append(report_delta(report.delta))
    out.append("")

    tally = report.tally()
    out.append(
        "units: {} total | {} accepted | {} restored | {} skipped".format(
            len(report.units), tally[ACCEPTED], tally[RESTORED], tally[SKIPPED]
        )
    )
    hist = report.attempts_histogram()
    if hist:
        parts = ", ".join(f"{n} attempt{'s' if n != 1 else ''}: {c}" for n, c in hist.items())
        out.append(f"attempts to acceptance: {parts}")
    out.append("")

    if report.units:
        wid_unit = max(len(u.unit_id) for u in report.units)
        wid_fn = max(len(u.function) for u in report.units)
        header = f"{'unit':<{wid_unit}}  {'function':<{wid_fn}}  {'kind':<5}  {'status':<8}  att  detail"
        out.append(header)
        out.append("-" * len(header))
        for u in report.units:
            detail = u.reason if u.status == SKIPPED else " ".join(u.stages)
            out.append(
                f"{u.unit_id:<{wid_unit}}  {u.function:<{wid_fn}}  {u.kind:<5}  "
                f"{u.status:<8}  {u.attempts:>3}  {detail}"
            )
    else:
        out.append("no translation units")

    extras = []
    if report.cyclic_components:
        cycles = "; ".join(", ".join(c) for c in report.cyclic_components)
        extras.append(f"cyclic call groups (DFS fallback order): {cycles}")
    if report.skipped_functions:
        extras.append("functions left unordered: " + ", ".join(report.skipped_functions))
    if report.oversized_units:
        extras.append("oversized units (indivisible statements): " + ", ".join(report.oversized_units))
    for w in report.warnings:
        extras.append(f"warning: {w}")
    if extras:
        out.append("")
        out.extend(extras)
    return "\n".join(out) + "\n"


def render(report: RunReport, fmt: str = "table") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "table":
        return render_table(report)
    raise ValueError(f"unknown report format {fmt!r}")
