"""Statement-level control flow graphs over function bodies.

Basic blocks are maximal straight-line statement runs. Control statements
contribute their header reads (conditions, scrutinees, patterns) to the
block they end; header spans cover only the lines up to the opening
brace, so arm statements keep their own spans. `unsafe { .. }` and bare
blocks are transparent. def/use sets hold only source variable names;
block use-sets are upward-exposed.

Approximations, safe for liveness (they can only lengthen live ranges):
  - chained `else if` conditions evaluate in the branch head block
  - statements after return/break/continue stay connected through a
    fall-through edge instead of becoming unreachable (warned)
  - a loop that never breaks keeps an exit edge if code follows it
"""

from dataclasses import dataclass, field

from .errors import UnsupportedConstruct
from .lexer import Token
from .syntax import BlockNode, StmtNode, stmt_defuse


@dataclass
class BasicBlock:
    bid: int
    stmt_spans: list[tuple[int, int]] = field(default_factory=list)
    defs: set[str] = field(default_factory=set)
    uses: set[str] = field(default_factory=set)


@dataclass
class StatementCfg:
    function: str
    blocks: dict[int, BasicBlock]
    edges: set[tuple[int, int]]
    entry: int
    exits: set[int]
    warnings: list[str] = field(default_factory=list)

    def successors(self, bid: int) -> list[int]:
        return sorted(b for (a, b) in self.edges if a == bid)

    def predecessors(self, bid: int) -> list[int]:
        return sorted(a for (a, b) in self.edges if b == bid)


class _Builder:
    def __init__(self, tokens: list[Token], function: str):
        self.tokens = tokens
        self.cfg = StatementCfg(function=function, blocks={}, edges=set(), entry=0, exits=set())
        self.loops: list[tuple[int, int, str | None]] = []  # (header, after, label)
        self._next = 0
        self._seen_defs: dict[int, set[str]] = {}
        self._diverged_from: int | None = None

    def new_block(self) -> int:
        bid = self._next
        self._next += 1
        self.cfg.blocks[bid] = BasicBlock(bid=bid)
        self._seen_defs[bid] = set()
        return bid

    def drop_block(self, bid: int) -> None:
        del self.cfg.blocks[bid]
        del self._seen_defs[bid]
        self.cfg.edges = {(a, b) for (a, b) in self.cfg.edges if a != bid and b != bid}

    def edge(self, a: int, b: int) -> None:
        self.cfg.edges.add((a, b))

    def add_stmt(self, bid: int, span: tuple[int, int], defs: set[str], uses: set[str]) -> None:
        blk = self.cfg.blocks[bid]
        blk.stmt_spans.append(span)
        blk.uses |= uses - self._seen_defs[bid]
        blk.defs |= defs
        self._seen_defs[bid] |= defs

    def region(self, block: BlockNode, cur: int) -> int:
        """Lay out a syntactic block starting in CFG block cur. Returns
        the block where control continues, or -1 when flow diverged."""
        for stmt in block.statements:
            if cur == -1:
                cur = self.new_block()
                if self._diverged_from is not None:
                    self.edge(self._diverged_from, cur)
                self.cfg.warnings.append(
                    f"unreachable statement at line {stmt.start_line}; keeping fall-through edge"
                )
            cur = self.stmt(stmt, cur)
        return cur

    def _header_span(self, s: StmtNode) -> tuple[int, int]:
        if s.blocks:
            return (s.start_line, self.tokens[s.blocks[0].open_tok].line)
        return s.span

    def stmt(self, s: StmtNode, cur: int) -> int:
        head = s.head
        defs, uses = stmt_defuse(self.tokens, s)

        if head in {"unsafe", "block"}:
            return self.region(s.blocks[0], cur) if s.blocks else cur

        if head == "if":
            self.add_stmt(cur, self._header_span(s), defs, uses)
            join = self.new_block()
            for b in s.blocks:
                arm = self.new_block()
                self.edge(cur, arm)
                out = self.region(b, arm)
                if out != -1:
                    self.edge(out, join)
            if not s.has_else:
                self.edge(cur, join)
            return self._seal_join(cur, join)

        if head in {"while", "for"}:
            header = self.new_block()
            self.edge(cur, header)
            self.add_stmt(header, self._header_span(s), defs, uses)
            after = self.new_block()
            self.edge(header, after)
            if s.blocks:
                body = self.new_block()
                self.edge(header, body)
                self.loops.append((header, after, s.label))
                out = self.region(s.blocks[0], body)
                self.loops.pop()
                if out != -1:
                    self.edge(out, header)
            return after

        if head == "loop":
            header = self.new_block()
            self.edge(cur, header)
            after = self.new_block()
            if s.blocks:
                body = self.new_block()
                self.edge(header, body)
                self.loops.append((header, after, s.label))
                out = self.region(s.blocks[0], body)
                self.loops.pop()
                if out != -1:
                    self.edge(out, header)
            if not self.cfg.predecessors(after):
                # no break: after is unreachable; keep it linked in case
                # statements follow, else it is pruned at the end
                self._diverged_from = header
                self.drop_block(after)
                return -1
            return after

        if head == "match":
            self.add_stmt(cur, self._header_span(s), defs, uses)
            join = self.new_block()
            container = s.blocks[0] if s.blocks else None
            if container is None or not container.statements:
                self.edge(cur, join)
                return join
            for arm in container.statements:
                arm_defs, arm_uses = stmt_defuse(self.tokens, arm)
                ab = self.new_block()
                self.edge(cur, ab)
                self.add_stmt(ab, self._header_span(arm), arm_defs, arm_uses)
                out = ab
                for blk in arm.blocks:
                    out = self.region(blk, out)
                    if out == -1:
                        break
                if out != -1:
                    self.edge(out, join)
            return self._seal_join(cur, join)

        if head == "return":
            self.add_stmt(cur, s.span, defs, uses)
            self.cfg.exits.add(cur)
            self._diverged_from = cur
            return -1

        if head in {"break", "continue"}:
            self.add_stmt(cur, s.span, defs, uses)
            target = self._loop_target(s)
            if target is None:
                raise UnsupportedConstruct(f"{head} outside loop at line {s.start_line}")
            header, after, _ = target
            self.edge(cur, after if head == "break" else header)
            self._diverged_from = cur
            return -1

        # let / assign / expr / macro / item: straight-line
        self.add_stmt(cur, s.span, defs, uses)
        return cur

    def _seal_join(self, cur: int, join: int) -> int:
        if not self.cfg.predecessors(join):
            self.drop_block(join)
            self._diverged_from = None
            return -1
        return join

    def _loop_target(self, s: StmtNode):
        if not self.loops:
            return None
        label = None
        for t in self.tokens[s.start_tok + 1 : min(s.end_tok, s.start_tok + 3)]:
            if t.kind == "lifetime":
                label = t.text
                break
        if label is None:
            return self.loops[-1]
        for entry in reversed(self.loops):
            if entry[2] == label:
                return entry
        return self.loops[-1]


def build_cfg(fn_name: str, tokens: list[Token], body: BlockNode) -> StatementCfg:
    """CFG for one function body. Raises UnsupportedConstruct on
    constructs the builder cannot model (e.g. break outside a loop)."""
    b = _Builder(tokens, fn_name)
    entry = b.new_block()
    out = b.region(body, entry)
    if out != -1:
        b.cfg.exits.add(out)
    if not b.cfg.exits:
        b.cfg.exits.add(max(b.cfg.blocks))
    _prune_empty_leaves(b.cfg)
    return b.cfg


def _prune_empty_leaves(cfg: StatementCfg) -> None:
    """Drop empty non-entry, non-exit blocks with no successors; they
    arise from loop-after slots when a loop sits at the body end."""
    changed = True
    while changed:
        changed = False
        for bid in list(cfg.blocks):
            blk = cfg.blocks[bid]
            if bid == cfg.entry or bid in cfg.exits or blk.stmt_spans:
                continue
            if not cfg.successors(bid):
                del cfg.blocks[bid]
                cfg.edges = {(a, b) for (a, b) in cfg.edges if a != bid and b != bid}
                changed = True


def block_at_line(cfg: StatementCfg, line: int, last: bool = False) -> int | None:
    """Block owning the statement nearest a line.

    With last=False: the block holding the earliest statement whose span
    starts at or after the line. With last=True: the block holding the
    latest statement whose span ends at or before the line. Brace-only
    and blank lines thus resolve to the adjacent statement's block.
    """
    for bid, blk in cfg.blocks.items():
        for lo, hi in blk.stmt_spans:
            if lo <= line <= hi:
                return bid
    best: tuple[int, int] | None = None
    for bid, blk in cfg.blocks.items():
        for lo, hi in blk.stmt_spans:
            if not last and lo >= line and (best is None or lo < best[0]):
                best = (lo, bid)
            if last and hi <= line and (best is None or hi > best[0]):
                best = (hi, bid)
    return best[1] if best is not None else None
