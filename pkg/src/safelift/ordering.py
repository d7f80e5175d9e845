"""Callee-first translation order over the call graph.

Functions are grouped into weakly connected components. An acyclic
component is ordered callee-before-caller (reverse topological order);
a component with any directed cycle, self-recursion included, falls back
to a depth-first post-order traversal. Every arbitrary choice (component
order, ready-set ties, DFS start and neighbor order) is fixed to the
lexicographic order of qualified function names, so the result is a pure
function of the graph.

Within one function, Inner units come before the Root unit, innermost
first, matching their emission order; a function's units are contiguous
in the final sequence.
"""

import heapq
from dataclasses import dataclass, field

from .decompose import UnitForest
from .source_model import CallGraph


@dataclass
class TranslationOrder:
    functions: list[str]
    unit_sequence: list[str]
    function_ranges: dict[str, tuple[int, int]]  # name -> (start, end) inclusive
    cyclic_components: list[list[str]] = field(default_factory=list)
    skipped_functions: list[str] = field(default_factory=list)


def weakly_connected_components(nodes: set[str], pairs: set[tuple[str, str]]) -> list[list[str]]:
    """Components of the undirected view, each sorted, ordered by their
    smallest member."""
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in pairs:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    seen: set[str] = set()
    comps: list[list[str]] = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            n = stack.pop()
            comp.append(n)
            for m in sorted(adj[n]):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def _reverse_topo(comp: list[str], callees: dict[str, set[str]]) -> list[str] | None:
    """Callee-first order of one component, or None if it has a cycle.
    Ties broken lexicographically."""
    members = set(comp)
    remaining: dict[str, set[str]] = {n: {c for c in callees.get(n, set()) if c in members} for n in comp}
    callers: dict[str, set[str]] = {n: set() for n in comp}
    for n, cs in remaining.items():
        for c in cs:
            callers[c].add(n)
    ready = [n for n in comp if not remaining[n]]
    heapq.heapify(ready)
    out: list[str] = []
    while ready:
        n = heapq.heappop(ready)
        out.append(n)
        for caller in sorted(callers[n]):
            remaining[caller].discard(n)
            if not remaining[caller]:
                heapq.heappush(ready, caller)
    return out if len(out) == len(comp) else None


def _dfs_postorder(comp: list[str], callees: dict[str, set[str]]) -> list[str]:
    """Post-order over call edges from the smallest node, neighbors in
    lexicographic order, restarting at the smallest unvisited node when
    the component is not reachable from one start."""
    members = set(comp)
    visited: set[str] = set()
    out: list[str] = []

    def visit(n: str) -> None:
        visited.add(n)
        for m in sorted(callees.get(n, set())):
            if m in members and m not in visited:
                visit(m)
        out.append(n)

    for start in comp:  # comp is sorted
        if start not in visited:
            visit(start)
    return out


def order_functions(graph: CallGraph) -> tuple[list[str], list[list[str]]]:
    """Global callee-first function order plus the components that
    required the cyclic fallback."""
    pairs = graph.edge_pairs()
    pairs = {(a, b) for a, b in pairs}  # multi-edges collapse in a set
    callees: dict[str, set[str]] = {}
    for a, b in pairs:
        callees.setdefault(a, set()).add(b)
    order: list[str] = []
    cyclic: list[list[str]] = []
    for comp in weakly_connected_components(graph.nodes, pairs):
        acyclic = _reverse_topo(comp, callees)
        if acyclic is None:
            cyclic.append(comp)
            order.extend(_dfs_postorder(comp, callees))
        else:
            order.extend(acyclic)
    return order, cyclic


def order_units(graph: CallGraph, forest: UnitForest) -> TranslationOrder:
    """Full unit sequence: functions callee-first, units of one function
    contiguous with Root last. Functions without units are skipped and
    reported."""
    fn_order, cyclic = order_functions(graph)
    sequence: list[str] = []
    ranges: dict[str, tuple[int, int]] = {}
    skipped: list[str] = []
    ordered_fns: list[str] = []
    for fn in fn_order:
        uids = forest.by_function.get(fn)
        if not uids:
            skipped.append(fn)
            continue
        ordered_fns.append(fn)
        start = len(sequence)
        sequence.extend(uids)  # emission order: inner first, root last
        ranges[fn] = (start, len(sequence) - 1)
    return TranslationOrder(
        functions=ordered_fns,
        unit_sequence=sequence,
        function_ranges=ranges,
        cyclic_components=cyclic,
        skipped_functions=skipped,
    )


def dump_order(graph: CallGraph, order: TranslationOrder) -> str:
    """Line-oriented call graph and ordering listing for inspection."""
    lines = ["call graph:"]
    for a, b in sorted(graph.edge_pairs()):
        lines.append(f"  {a} -> {b}")
    if order.cyclic_components:
        for comp in order.cyclic_components:
            lines.append("cyclic component: " + ", ".join(comp))
    lines.append("function order:")
    for i, fn in enumerate(order.functions):
        lo, hi = order.function_ranges[fn]
        lines.append(f"  {i + 1}. {fn} units {lo}-{hi}")
    lines.append("unit sequence: " + " ".join(order.unit_sequence))
    for fn in order.skipped_functions:
        lines.append(f"skipped (no units): {fn}")
    return "\n".join(lines) + "\n"
