"""Acceptance suite: one test per release criterion, at full size.

Each test carries its runtime budget as an assertion, so `pytest -v`
yields exactly one pass/fail line per criterion. Topic modules hold
smaller smoke versions of the same properties; the full-size runs live
only here.
"""

import random
import time

import pytest

from conftest import FIXTURES, copy_crate, tree_hash
from generators import (
    check_component_order,
    check_forest,
    gen_cfg,
    gen_dag,
    gen_digraph,
    gen_function_batch,
    make_callgraph,
    make_crate,
    make_stub_forest,
    oracle_liveness,
)
from safelift import pipeline
from safelift.config import RunConfig
from safelift.decompose import DecompositionConfig, decompose_crate
from safelift.errors import MalformedResponse
from safelift.llm import BackendConfig, ModelResponse, parse_response, render_response
from safelift.metrics import METRIC_NAMES, MetricsDelta, SafetyMetrics, compute_metrics
from safelift.ordering import order_functions, order_units, weakly_connected_components
from safelift.slicing import liveness, render_unit_source
from safelift.source_model import parse_crate, resolve_calls

IMPROVE = FIXTURES / "replays" / "improve"


def _cfg(crate, state, endpoint, **kw):
    base = dict(
        crate_dir=crate,
        backend=BackendConfig(endpoint=endpoint),
        test_cmds=["cargo run -q"],
        state_dir=state,
        max_unit_lines=150,
    )
    base.update(kw)
    return RunConfig(**base)


def test_c01_decomposition_properties(tmp_path):
    """>=1000 random functions, every unit within L after pruning, <60s."""
    t0 = time.monotonic()
    rng = random.Random(20260816)
    total = 0
    for limit in (10, 50, 150):
        for batch in range(7):
            crate = tmp_path / f"gen{limit}_{batch}"
            make_crate(crate, {"src/main.rs": gen_function_batch(rng, 50)})
            model = parse_crate(crate)
            forest = decompose_crate(model, DecompositionConfig(max_unit_lines=limit))
            for fn in model.functions:
                if fn == "frob":
                    continue
                check_forest(model, forest, fn, limit, render_unit_source)
                total += 1
    elapsed = time.monotonic() - t0
    assert total >= 1000, total
    assert elapsed < 60.0, f"decomposition suite took {elapsed:.1f}s"


def test_c02_hand_trace_byte_exact(handtrace_crate):
    """The 10x30-line function yields two 150-line inner units plus a root,
    matching the committed trace byte for byte."""
    from test_decompose import build_trace

    model = parse_crate(handtrace_crate)
    forest = decompose_crate(model, DecompositionConfig(max_unit_lines=150))
    units = [forest.units[u] for u in forest.by_function["big"]]
    inner = [u for u in units if u.kind == "inner"]
    assert len(inner) == 2 and len(units) == 3
    for u in inner:
        assert u.span.end_line - u.span.start_line + 1 == 150
    golden = (FIXTURES / "handtrace" / "golden_forest.txt").read_text()
    assert build_trace(model, forest, "big") == golden


def test_c03_ordering_suites(tmp_path):
    """>=500 DAGs callee-first, >=100 cyclic DFS post-order, contiguity, <30s."""
    t0 = time.monotonic()
    rng = random.Random(42)
    for _ in range(500):
        nodes, pairs = gen_dag(rng)
        order, cyclic = order_functions(make_callgraph(nodes, pairs))
        assert not cyclic and sorted(order) == sorted(nodes)
        pos = {f: i for i, f in enumerate(order)}
        for caller, callee in pairs:
            assert pos[callee] < pos[caller]
        forest = make_stub_forest(nodes)
        result = order_units(make_callgraph(nodes, pairs), forest)
        pos_by_fn: dict = {}
        for i, uid in enumerate(result.unit_sequence):
            pos_by_fn.setdefault(forest.units[uid].function, []).append(i)
        for fn, positions in pos_by_fn.items():
            lo, hi = result.function_ranges[fn]
            assert positions == list(range(lo, hi + 1))
    for _ in range(100):
        nodes, pairs = gen_digraph(rng)
        order, cyclic = order_functions(make_callgraph(nodes, pairs))
        assert cyclic and sorted(order) == sorted(nodes)
        for comp in weakly_connected_components(set(nodes), pairs):
            sub = [f for f in order if f in set(comp)]
            check_component_order(comp, sub, pairs)
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"ordering suites took {elapsed:.1f}s"


def test_c04_liveness_oracle_equivalence():
    """>=1000 random acyclic CFGs match path-enumeration liveness, <60s."""
    t0 = time.monotonic()
    rng = random.Random(7)
    for i in range(1000):
        cfg = gen_cfg(rng)
        assert liveness(cfg) == oracle_liveness(cfg), f"case {i}"
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"liveness suite took {elapsed:.1f}s"


def test_c05_metrics_fixture_exactness():
    """Both metric fixtures match their hand-counted ground truth exactly."""
    assert compute_metrics(FIXTURES / "metrics_hand") == SafetyMetrics(3, 2, 7, 2, 1)
    # qsort ground truth: 4 decls / 10 derefs / 32 unsafe lines / 11 calls /
    # 12 casts (no blank-counting adjustment needed; the counts match as is)
    assert compute_metrics(FIXTURES / "qsort") == SafetyMetrics(4, 10, 32, 11, 12)


def test_c06_delta_arithmetic():
    """192->120 renders 38%; 38->40 renders -5%."""
    d = MetricsDelta(SafetyMetrics(192, 38, 0, 0, 0), SafetyMetrics(120, 40, 0, 0, 0))
    pct = d.pct()
    assert pct["raw_ptr_decls"] == 38
    assert pct["raw_ptr_derefs"] == -5


def test_c07_identity_end_to_end(qsort_crate, tmp_path):
    """Identity backend: every unit accepted, tests pass, zero delta, <5min."""
    t0 = time.monotonic()
    before = tree_hash(qsort_crate)
    cfg = _cfg(
        qsort_crate,
        tmp_path / "state",
        "identity:",
        test_cmds=["sh tests/e2e.sh"],
        max_unit_lines=20,
    )
    rep = pipeline.run(cfg)
    elapsed = time.monotonic() - t0
    assert all(u.status == "accepted" for u in rep.units) and rep.units
    assert rep.final_status == "pass"
    assert rep.delta.pct() == {k: 0 for k in METRIC_NAMES}
    assert tree_hash(qsort_crate) == before
    assert elapsed < 300.0, f"identity flow took {elapsed:.1f}s"


def test_c08_restore_end_to_end(minicrate, tmp_path):
    """Garbage backend for all 5 attempts: every unit restored, tree unchanged."""
    before = tree_hash(minicrate)
    rep = pipeline.run(_cfg(minicrate, tmp_path / "state", "garbage:", max_attempts=5))
    assert all(u.status == "restored" and u.attempts == 5 for u in rep.units)
    assert rep.units
    assert tree_hash(minicrate) == before
    assert rep.final_status == "pass"


def test_c09_improvement_end_to_end(minicrate, tmp_path):
    """Curated replay: raw_ptr_decls strictly decreases; root splice is atomic."""
    rep = pipeline.run(_cfg(minicrate, tmp_path / "state", f"mock:{IMPROVE}"))
    assert rep.final_status == "pass"
    assert rep.after.raw_ptr_decls < rep.before.raw_ptr_decls
    text = (minicrate / "src/main.rs").read_text()
    # the rewritten function landed together with both of its call sites
    assert "fn bump(p: &mut c_int, by: c_int)" in text
    assert "bump(&mut *p, 1 as c_int);" in text
    assert "bump(&mut v, 5 as c_int);" in text
    assert "bump(p, 1 as c_int);" not in text


def test_c10_resumption_equivalence(tmp_path, monkeypatch):
    """Kill after unit k; resume; final tree byte-identical to uninterrupted."""
    import safelift.repair as repair_mod

    plain = copy_crate("minicrate", tmp_path / "plain")
    pipeline.run(_cfg(plain, tmp_path / "sa", f"mock:{IMPROVE}"))

    victim = copy_crate("minicrate", tmp_path / "victim")
    real_validate = repair_mod.validate
    calls = {"n": 0}

    def flaky(crate_dir, build_cmd="cargo build", test_cmds=None, timeout=300.0):
        calls["n"] += 1
        if calls["n"] == 3:
            raise KeyboardInterrupt
        return real_validate(crate_dir, build_cmd, test_cmds, timeout)

    monkeypatch.setattr(repair_mod, "validate", flaky)
    with pytest.raises(KeyboardInterrupt):
        pipeline.run(_cfg(victim, tmp_path / "sv", f"mock:{IMPROVE}"))
    monkeypatch.setattr(repair_mod, "validate", real_validate)

    rep = pipeline.resume(tmp_path / "sv")
    assert rep.final_status == "pass"
    assert tree_hash(victim) == tree_hash(plain)


def test_c11_response_parser_duality(minicrate, tmp_path):
    """parse(render(r)) == r on well-formed responses; malformed input raises
    MalformedResponse and never reaches the splice."""
    from test_llm import _rand_code

    rng = random.Random(2024)
    for _ in range(500):
        n = rng.randrange(0, 4)
        m = ModelResponse(
            function_text=_rand_code(rng),
            call_site_texts=[_rand_code(rng, 3) for _ in range(n)],
            new_imports=[f"use m{rng.randrange(999)}::x;" for _ in range(rng.randrange(0, 3))],
        )
        back = parse_response(render_response(m), expected_call_sites=n)
        assert (back.function_text, back.call_site_texts, back.new_imports) == (
            m.function_text,
            m.call_site_texts,
            m.new_imports,
        )

    for bad, n in [
        ("no tags at all", 0),
        ("<FUNC>\nfn f() {}\n</FUNC>", 1),  # call-count mismatch
        ("<FUNC>\nfn f() {}", 0),  # unbalanced
        ("<CALL>\nf();\n</CALL>", 1),  # missing FUNC
    ]:
        with pytest.raises(MalformedResponse):
            parse_response(bad, expected_call_sites=n)
    # stray fences are stripped, not fatal
    ok = parse_response("<FUNC>\n```rust\nfn f() {}\n```\n</FUNC>", 0)
    assert ok.function_text == "fn f() {}"

    # a malformed reply burns an attempt without touching the tree
    canned = tmp_path / "canned"
    canned.mkdir()
    model = parse_crate(minicrate)
    forest = decompose_crate(model, DecompositionConfig(max_unit_lines=150))
    graph = resolve_calls(model)
    unit = next(u for u in forest.units.values() if u.function == "bump")
    from safelift.llm import CompletionClient
    from safelift.repair import RepairConfig, repair_loop
    from safelift.slicing import slice_unit

    (canned / f"{unit.unit_id}.attempt0.txt").write_text("<FUNC>\nfn broken(")
    sl = slice_unit(unit, model, forest, graph)
    spans = {uid: u.span for uid, u in forest.units.items()}
    before = tree_hash(minicrate)
    session = repair_loop(
        unit,
        sl,
        model,
        spans,
        CompletionClient(BackendConfig(endpoint=f"mock:{canned}")),
        RepairConfig(max_attempts=1, test_cmds=["cargo run -q"]),
    )
    assert session.final == "restored"
    assert [a.stage for a in session.attempts] == ["parse_error"]
    assert tree_hash(minicrate) == before
