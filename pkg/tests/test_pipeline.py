"""End-to-end pipeline runs, persistence, and the CLI entry point."""

import json

import pytest

from conftest import FIXTURES, tree_hash
from generators import make_crate
from safelift import cli, pipeline
from safelift.config import RunConfig
from safelift.errors import ConfigError, ConfigMismatch, CorruptState
from safelift.llm import BackendConfig
from safelift.metrics import METRIC_NAMES, SafetyMetrics, compute_metrics

IMPROVE = FIXTURES / "replays" / "improve"


def _cfg(crate, tmp_path, endpoint="identity:", **kw):
    base = dict(
        crate_dir=crate,
        backend=BackendConfig(endpoint=endpoint),
        test_cmds=["cargo run -q"],
        state_dir=tmp_path / "state",
        max_unit_lines=150,
    )
    base.update(kw)
    return RunConfig(**base)


def _events(state_dir):
    path = state_dir / "state.jsonl"
    return [json.loads(ln) for ln in path.read_text().splitlines()]


def test_identity_run_accepts_everything(minicrate, tmp_path):
    before = tree_hash(minicrate)
    rep = pipeline.run(_cfg(minicrate, tmp_path, max_unit_lines=20))
    assert rep.final_status == "pass"
    assert all(u.status == "accepted" for u in rep.units)
    assert {u.kind for u in rep.units} == {"root", "inner"}  # placeholders exercised
    assert rep.delta.pct() == {k: 0 for k in METRIC_NAMES}
    assert tree_hash(minicrate) == before
    st = tmp_path / "state"
    assert (st / "config.txt").is_file()
    assert (st / "snapshot.json").is_file()
    assert not (st / "INPROGRESS").exists()
    assert rep.tally() == {"accepted": len(rep.units), "restored": 0, "skipped": 0}


def test_garbage_run_restores_everything(minicrate, tmp_path):
    before = tree_hash(minicrate)
    rep = pipeline.run(_cfg(minicrate, tmp_path, endpoint="garbage:", max_attempts=2))
    assert rep.final_status == "pass"
    assert all(u.status == "restored" for u in rep.units)
    assert all(u.attempts == 2 for u in rep.units)
    assert tree_hash(minicrate) == before
    assert rep.delta.pct() == {k: 0 for k in METRIC_NAMES}


def test_improvement_replay(minicrate, tmp_path):
    rep = pipeline.run(_cfg(minicrate, tmp_path, endpoint=f"mock:{IMPROVE}"))
    assert rep.final_status == "pass"
    assert all(u.status == "accepted" for u in rep.units)
    after = compute_metrics(minicrate)
    assert after == SafetyMetrics(1, 2, 9, 2, 1)
    assert rep.before.raw_ptr_decls > rep.after.raw_ptr_decls
    text = (minicrate / "src/main.rs").read_text()
    # the signature change and both call sites landed together
    assert "fn bump(p: &mut c_int, by: c_int)" in text
    assert "bump(&mut *p, 1 as c_int);" in text
    assert "bump(&mut v, 5 as c_int);" in text
    assert "bump(p, 1 as c_int);" not in text


def test_kill_and_resume_matches_uninterrupted(tmp_path, monkeypatch):
    from conftest import copy_crate
    import safelift.repair as repair_mod

    # reference: uninterrupted replay
    plain = copy_crate("minicrate", tmp_path / "plain")
    rep_a = pipeline.run(_cfg(plain, tmp_path / "sa", endpoint=f"mock:{IMPROVE}"))

    # interrupted: die inside unit 2's validate, after its splice landed
    victim = copy_crate("minicrate", tmp_path / "victim")
    real_validate = repair_mod.validate
    calls = {"n": 0}

    def flaky(crate_dir, build_cmd="cargo build", test_cmds=None, timeout=300.0):
        calls["n"] += 1
        if calls["n"] == 2:
            raise KeyboardInterrupt
        return real_validate(crate_dir, build_cmd, test_cmds, timeout)

    monkeypatch.setattr(repair_mod, "validate", flaky)
    with pytest.raises(KeyboardInterrupt):
        pipeline.run(_cfg(victim, tmp_path / "sv", endpoint=f"mock:{IMPROVE}"))
    monkeypatch.setattr(repair_mod, "validate", real_validate)

    state = tmp_path / "sv" / "state"
    assert (state / "INPROGRESS").exists()  # crash fence armed
    dirty = tree_hash(victim)
    rep_b = pipeline.resume(state)
    assert tree_hash(victim) != dirty or dirty == tree_hash(plain)

    assert tree_hash(victim) == tree_hash(plain)
    assert rep_b.final_status == rep_a.final_status == "pass"
    assert [(u.unit_id, u.status) for u in rep_b.units] == [
        (u.unit_id, u.status) for u in rep_a.units
    ]
    events = _events(state)
    assert any(e.get("event") == "rollback" for e in events)
    assert not (state / "INPROGRESS").exists()


def test_resume_after_complete_is_immediate(minicrate, tmp_path, monkeypatch):
    rep = pipeline.run(_cfg(minicrate, tmp_path))
    assert rep.final_status == "pass"

    import safelift.pipeline as pipeline_mod

    def no_validate(*a, **kw):
        raise AssertionError("a completed run must not re-validate")

    monkeypatch.setattr(pipeline_mod, "validate", no_validate)
    monkeypatch.setattr(pipeline_mod, "repair_loop", no_validate)
    rep2 = pipeline.resume(tmp_path / "state")
    assert rep2.final_status == "pass"
    assert [u.unit_id for u in rep2.units] == [u.unit_id for u in rep.units]


def test_run_refuses_existing_state_dir(minicrate, tmp_path):
    pipeline.run(_cfg(minicrate, tmp_path))
    with pytest.raises(ConfigError, match="already holds a run"):
        pipeline.run(_cfg(minicrate, tmp_path))


def test_resume_rejects_changed_config(minicrate, tmp_path):
    pipeline.run(_cfg(minicrate, tmp_path, max_unit_lines=20))
    with pytest.raises(ConfigMismatch):
        pipeline.resume(tmp_path / "state", {"max_unit_lines": 50})
    # output-only keys do not participate in the identity
    rep = pipeline.resume(tmp_path / "state", {"audit_log": str(tmp_path / "a.jsonl")})
    assert rep.final_status == "pass"


def test_resume_missing_or_corrupt_state(tmp_path, minicrate):
    with pytest.raises(CorruptState):
        pipeline.resume(tmp_path / "nowhere")
    pipeline.run(_cfg(minicrate, tmp_path))
    (tmp_path / "state" / "snapshot.json").write_text("{not json")
    with pytest.raises(CorruptState):
        pipeline.resume(tmp_path / "state")


def test_covered_only_skips_unlisted_functions(minicrate, tmp_path):
    listing = tmp_path / "covered.txt"
    listing.write_text("bump\ntally\n")
    rep = pipeline.run(
        _cfg(minicrate, tmp_path, covered_only=True, covered_fns_file=listing)
    )
    by_fn = {}
    for u in rep.units:
        by_fn.setdefault(u.function, set()).add(u.status)
    assert by_fn["bump"] == {"accepted"} and by_fn["tally"] == {"accepted"}
    assert by_fn["scale"] == {"skipped"} and by_fn["main"] == {"skipped"}
    skipped = [u for u in rep.units if u.status == "skipped"]
    assert all(u.reason == "function not covered by tests" for u in skipped)


def test_crate_without_functions_completes(tmp_path):
    crate = make_crate(
        tmp_path / "lonely", {"src/lib.rs": "pub struct S {\n    pub a: i32,\n}\n"}
    )
    rep = pipeline.run(_cfg(crate, tmp_path, test_cmds=[]))
    assert rep.final_status == "pass"
    assert rep.units == []


def test_report_json_round_trip(minicrate, tmp_path):
    from safelift import report as report_mod

    rep = pipeline.run(_cfg(minicrate, tmp_path))
    blob = report_mod.render_json(rep)
    loaded = json.loads(blob)
    assert loaded["final_status"] == "pass"
    assert loaded["tally"]["accepted"] == len(rep.units)
    assert report_mod.load_report(blob)["config_hash"] == rep.config_hash
    table = report_mod.render_table(rep)
    assert "units:" in table and "accepted" in table


# --- CLI ---------------------------------------------------------------------


def _write_config(path, crate, state, extra=""):
    path.write_text(
        f"crate_dir = {crate}\n"
        "backend_endpoint = identity:\n"
        "test_cmd = cargo run -q\n"
        f"state_dir = {state}\n" + extra
    )
    return path


def test_cli_run_success_exit_zero(minicrate, tmp_path, capsys):
    cfgfile = _write_config(tmp_path / "run.conf", minicrate, tmp_path / "st")
    assert cli.main(["run", str(cfgfile)]) == 0
    out = capsys.readouterr().out
    assert "units:" in out


def test_cli_run_baseline_failure_exit_two(minicrate, tmp_path, capsys):
    cfgfile = _write_config(
        tmp_path / "run.conf", minicrate, tmp_path / "st", extra="test_cmd = false\n"
    )
    assert cli.main(["run", str(cfgfile)]) == 2
    assert "baseline failure" in capsys.readouterr().err


def test_cli_config_error_exit_three(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("no_such_key = 1\n")
    assert cli.main(["run", str(bad)]) == 3
    assert "config error" in capsys.readouterr().err


def test_cli_resume_missing_state_exit_one(tmp_path, capsys):
    assert cli.main(["resume", str(tmp_path / "missing")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_metrics_json(capsys):
    assert cli.main(["metrics", str(FIXTURES / "metrics_hand"), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["raw_ptr_decls"] == 3
    assert payload["unsafe_lines"] == 7
    assert "src/main.rs" in payload["per_file"]
    assert payload["unclassified_derefs"] == 0


def test_cli_decompose_and_order(capsys):
    assert cli.main(["decompose", str(FIXTURES / "handtrace")]) == 0
    out = capsys.readouterr().out
    assert "== big ==" in out and "u1" in out
    assert cli.main(["order", str(FIXTURES / "minicrate")]) == 0
    out = capsys.readouterr().out
    assert "bump" in out and "main" in out
