"""Statement and block structure of function bodies.

Builds a nested tree of statements and code blocks from the token stream.
The tree drives unit decomposition (grouping sibling statements) and the
statement CFG (control flow and def/use sets).

Modeling choices, tuned to transpiler output:
  - every `{...}` in code position is a block node; struct literals and
    macro bodies are opaque token runs inside their statement
  - match arms are the "statements" of a match body block
  - statements are line-spanned: a span runs from the first to the last
    token line, inclusive
  - nested items (fn inside fn) are opaque single statements
"""

from dataclasses import dataclass, field

from .lexer import KEYWORDS, Token

# keywords that force the next top-level `{` to be a code block
_CTRL_KWS = frozenset({"if", "else", "while", "for", "loop", "match", "unsafe"})
_ITEM_KWS = frozenset({"fn", "struct", "enum", "union", "impl", "trait", "mod", "type", "macro_rules"})

_ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "^=", "&=", "|=", "<<=", ">>="})

# token texts that, when directly before `{`, mean "block expression"
_BLOCK_BEFORE = frozenset({"=", "=>", ",", "(", "[", ";", "|", "||", "&&", "&", "+", "-", "*", "/", "%", "^", "<", ">", "<=", ">=", "==", "!=", "return", "break", "in", "else", "unsafe", "move", "async", "{", "}"})


@dataclass
class StmtNode:
    head: str  # let | assign | expr | if | while | loop | for | match | unsafe | block | return | break | continue | macro | item | arm
    start_tok: int
    end_tok: int  # exclusive
    start_line: int
    end_line: int
    blocks: list["BlockNode"] = field(default_factory=list)
    has_else: bool = False
    label: str | None = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start_line, self.end_line)


@dataclass
class BlockNode:
    open_tok: int
    close_tok: int
    start_line: int
    end_line: int
    statements: list[StmtNode] = field(default_factory=list)
    is_match_body: bool = False

    @property
    def span(self) -> tuple[int, int]:
        return (self.start_line, self.end_line)


def parse_body(tokens: list[Token], pairs: dict[int, int], open_idx: int) -> BlockNode:
    """Parse the `{...}` starting at token open_idx into a block tree."""
    return _parse_block(tokens, pairs, open_idx, is_match=False)


def _parse_block(tokens: list[Token], pairs: dict[int, int], open_idx: int, is_match: bool) -> BlockNode:
    close = pairs[open_idx]
    node = BlockNode(
        open_tok=open_idx,
        close_tok=close,
        start_line=tokens[open_idx].line,
        end_line=tokens[close].line,
        is_match_body=is_match,
    )
    i = open_idx + 1
    while i < close:
        if tokens[i].kind == "punct" and tokens[i].text == ";":
            i += 1  # stray empty statement
            continue
        if is_match:
            stmt, i = _scan_arm(tokens, pairs, i, close)
        else:
            stmt, i = _scan_stmt(tokens, pairs, i, close)
        node.statements.append(stmt)
    return node


def _scan_stmt(tokens: list[Token], pairs: dict[int, int], start: int, limit: int) -> tuple[StmtNode, int]:
    """Scan one statement in [start, limit). Returns (node, next index)."""
    i = start
    label = None

    # leading attributes #[...]
    while i < limit and tokens[i].text == "#" and i + 1 < limit and tokens[i + 1].text == "[":
        i = pairs[i + 1] + 1

    # loop label 'name:
    if i + 1 < limit and tokens[i].kind == "lifetime" and tokens[i + 1].text == ":":
        label = tokens[i].text
        i += 2

    head = _stmt_head(tokens, i, limit)
    node = StmtNode(head=head, start_tok=start, end_tok=start, start_line=tokens[start].line, end_line=tokens[start].line, label=label)

    if head == "item":
        i = _skip_item(tokens, pairs, i, limit)
        return _finish(node, tokens, i), i

    pending: str | None = "ctrl" if head in _CTRL_KWS else None
    head_is_ctrl = head in _CTRL_KWS
    pending_match = head == "match"
    after_ctrl_block = False  # just closed the head control's block

    while i < limit:
        t = tokens[i]

        if after_ctrl_block:
            # a block-ended statement extends only via ; else . ?
            if t.text == ";":
                i += 1
                break
            if t.is_kw("else"):
                pending = "ctrl"
                pending_match = False
                after_ctrl_block = False
                i += 1
                if i < limit and tokens[i].is_kw("if"):
                    i += 1
                elif i < limit and tokens[i].text == "{":
                    node.has_else = True
                continue
            if t.kind == "punct" and t.text in {".", "?"}:
                # expression continues (e.g. `match x {..}.len();`)
                after_ctrl_block = False
                head_is_ctrl = False
                i += 1
                continue
            break  # statement ended at the block close

        if t.kind == "punct":
            if t.text == ";":
                i += 1
                break
            if t.text in "([":
                i = pairs[i] + 1
                continue
            if t.text == "{":
                opaque = False
                if pending is None:
                    prev = tokens[i - 1] if i - 1 >= start else None
                    opaque = not _block_position(prev)
                if opaque:
                    i = pairs[i] + 1
                    continue
                child = _parse_block(tokens, pairs, i, is_match=pending_match)
                node.blocks.append(child)
                i = pairs[i] + 1
                pending = None
                pending_match = False
                if head_is_ctrl:
                    after_ctrl_block = True
                continue
            i += 1
            continue

        # idents: control keywords mid-statement arm the next brace
        if t.kind == "ident":
            if t.text in _CTRL_KWS and t.text != "else":
                pending = "ctrl"
                pending_match = t.text == "match"
            elif t.text == "else":
                pending = "ctrl"
                pending_match = False
                if i + 1 < limit and tokens[i + 1].text == "{":
                    node.has_else = True
            elif t.text == "fn":
                # nested item appearing mid-statement: swallow as opaque
                i = _skip_item(tokens, pairs, i, limit)
                continue
        i += 1

    return _finish(node, tokens, i), i


def _scan_arm(tokens: list[Token], pairs: dict[int, int], start: int, limit: int) -> tuple[StmtNode, int]:
    """Scan one match arm: pattern [guard] => body [,]."""
    node = StmtNode(head="arm", start_tok=start, end_tok=start, start_line=tokens[start].line, end_line=tokens[start].line)
    i = start
    # pattern and optional guard, up to `=>`
    while i < limit:
        t = tokens[i]
        if t.kind == "punct":
            if t.text == "=>":
                i += 1
                break
            if t.text in "([":
                i = pairs[i] + 1
                continue
            if t.text == "{":  # struct pattern
                i = pairs[i] + 1
                continue
        i += 1
    # body: block or expression up to a top-level comma
    if i < limit and tokens[i].text == "{":
        child = _parse_block(tokens, pairs, i, is_match=False)
        node.blocks.append(child)
        i = pairs[i] + 1
        if i < limit and tokens[i].text == ",":
            i += 1
        return _finish(node, tokens, i), i
    pending: str | None = None
    pending_match = False
    while i < limit:
        t = tokens[i]
        if t.kind == "punct":
            if t.text == ",":
                i += 1
                break
            if t.text in "([":
                i = pairs[i] + 1
                continue
            if t.text == "{":
                opaque = False
                if pending is None:
                    prev = tokens[i - 1] if i - 1 >= start else None
                    opaque = not _block_position(prev)
                if opaque:
                    i = pairs[i] + 1
                else:
                    node.blocks.append(_parse_block(tokens, pairs, i, is_match=pending_match))
                    i = pairs[i] + 1
                    pending = None
                    pending_match = False
                continue
            i += 1
            continue
        if t.kind == "ident" and t.text in _CTRL_KWS:
            pending = "ctrl"
            pending_match = t.text == "match"
        i += 1
    return _finish(node, tokens, i), i


def _finish(node: StmtNode, tokens: list[Token], end: int) -> StmtNode:
    node.end_tok = end
    last = max(node.start_tok, end - 1)
    node.end_line = tokens[last].line
    node.start_line = tokens[node.start_tok].line
    return node


def _stmt_head(tokens: list[Token], i: int, limit: int) -> str:
    t = tokens[i]
    if t.kind == "punct" and t.text == "{":
        return "block"
    if t.kind != "ident":
        return "expr"
    w = t.text
    if w in {"let", "if", "while", "loop", "for", "match", "return", "break", "continue"}:
        return w
    if w == "unsafe":
        nxt = tokens[i + 1] if i + 1 < limit else None
        if nxt is not None and nxt.text == "{":
            return "unsafe"
        return "item"  # unsafe fn nested item
    if w in _ITEM_KWS or w in {"pub", "use", "static", "const", "extern"}:
        # `const` could begin a const block expr; transpiled code uses items
        return "item"
    if i + 1 < limit and tokens[i + 1].text == "!":
        return "macro"
    # assignment detection happens later in def/use; head is expr-ish
    return "expr"


def _block_position(prev: Token | None) -> bool:
    """True if a `{` after token prev opens a code block, not a literal."""
    if prev is None:
        return True
    if prev.kind == "ident":
        return prev.text in _BLOCK_BEFORE
    if prev.kind == "punct":
        if prev.text == "!":
            return False  # macro body braces are opaque
        return prev.text in _BLOCK_BEFORE or prev.text not in {")", "]"}
    return False  # literal / lifetime before brace: struct-literal-ish


def _skip_item(tokens: list[Token], pairs: dict[int, int], i: int, limit: int) -> int:
    """Skip a nested item: ends at `;` or after its top-level brace body."""
    while i < limit:
        t = tokens[i]
        if t.kind == "punct":
            if t.text == ";":
                return i + 1
            if t.text in "([":
                i = pairs[i] + 1
                continue
            if t.text == "{":
                return pairs[i] + 1
        i += 1
    return limit


# ---------------------------------------------------------------------------
# def/use extraction


def header_indices(stmt: StmtNode) -> list[int]:
    """Token indices of a statement excluding its child code blocks."""
    out = []
    skip: list[tuple[int, int]] = [(b.open_tok, b.close_tok) for b in stmt.blocks]
    i = stmt.start_tok
    while i < stmt.end_tok:
        for lo, hi in skip:
            if i == lo:
                i = hi + 1
                break
        else:
            out.append(i)
            i += 1
    return out


_TYPEISH = frozenset({"mut", "const", "dyn", "*", "&", "::", "[", "]", "<", ">", "'"})


def scan_uses(tokens: list[Token], indices: list[int]) -> set[str]:
    """Variable names read within the given token positions.

    Skips call names, macro names, path segments, field/method names,
    struct-literal type and field names, and type tokens after `as` or `:`.
    """
    uses: set[str] = set()
    k = 0
    n = len(indices)
    while k < n:
        i = indices[k]
        t = tokens[i]
        if t.kind == "ident" and t.text == "as":
            # skip the cast's type tokens
            k += 1
            while k < n:
                nt = tokens[indices[k]]
                if nt.kind in {"ident", "num", "lifetime"} or (nt.kind == "punct" and nt.text in _TYPEISH):
                    k += 1
                    continue
                break
            continue
        if t.kind != "ident" or t.text in KEYWORDS:
            k += 1
            continue
        nxt = tokens[i + 1] if k + 1 < n and indices[k + 1] == i + 1 else None
        prev = tokens[i - 1] if k > 0 and indices[k - 1] == i - 1 else None
        if nxt is not None and nxt.kind == "punct" and nxt.text in {"(", "::", "!"}:
            k += 1
            continue
        if nxt is not None and nxt.kind == "punct" and nxt.text == ":":
            k += 1  # struct field name or ascription
            continue
        if prev is not None and prev.kind == "punct" and prev.text in {".", "::"}:
            k += 1
            continue
        if nxt is not None and nxt.text == "{" and t.text[:1].isupper():
            k += 1  # struct literal type name
            continue
        uses.add(t.text)
        k += 1
    return uses


def pattern_defs(tokens: list[Token], indices: list[int]) -> set[str]:
    """Names bound by a pattern (let/for/arm). Constructors are skipped."""
    defs: set[str] = set()
    n = len(indices)
    for k, i in enumerate(indices):
        t = tokens[i]
        if t.kind != "ident" or t.text in KEYWORDS:
            continue
        nxt = tokens[indices[k + 1]] if k + 1 < n else None
        prev = tokens[indices[k - 1]] if k > 0 else None
        if nxt is not None and nxt.kind == "punct" and nxt.text in {"(", "::", "!", "{"}:
            continue  # Some(...), path::Variant, Struct { .. }
        if prev is not None and prev.kind == "punct" and prev.text in {".", "::"}:
            continue
        if nxt is not None and nxt.kind == "punct" and nxt.text == ":":
            continue  # field name in a struct pattern
        defs.add(t.text)
    return defs


def _split_at(tokens: list[Token], indices: list[int], texts: set[str]) -> tuple[list[int], Token | None, list[int]]:
    """Split indices at the first token whose text is in texts."""
    for k, i in enumerate(indices):
        t = tokens[i]
        if t.kind == "punct" and t.text in texts:
            return indices[:k], t, indices[k + 1 :]
    return indices, None, []


def stmt_defuse(tokens: list[Token], stmt: StmtNode) -> tuple[set[str], set[str]]:
    """(defs, uses) contributed by a statement's own code.

    For control statements this covers only the header (conditions,
    patterns, scrutinees); their blocks are separate CFG regions. For
    plain statements it covers all tokens including nested block
    expressions, with block-local lets treated as local.
    """
    hdr = header_indices(stmt)
    head = stmt.head

    if head == "let":
        body = hdr[1:]  # drop `let`
        pat, colon_or_eq, rest = _split_at(tokens, body, {":", "="})
        defs = pattern_defs(tokens, pat)
        if colon_or_eq is not None and colon_or_eq.text == ":":
            _, _eq, rest = _split_at(tokens, rest, {"="})
        uses = scan_uses(tokens, rest)
        uses |= _inner_uses(tokens, stmt)
        return defs, uses

    if head in {"if", "while"}:
        body = hdr[1:]
        if body and tokens[body[0]].is_kw("let"):
            pat, _eq, rest = _split_at(tokens, body[1:], {"="})
            return pattern_defs(tokens, pat), scan_uses(tokens, rest)
        return set(), scan_uses(tokens, body)

    if head == "for":
        body = hdr[1:]
        for k, i in enumerate(body):
            if tokens[i].is_kw("in"):
                return pattern_defs(tokens, body[:k]), scan_uses(tokens, body[k + 1 :])
        return set(), scan_uses(tokens, body)

    if head in {"match", "return", "break", "continue"}:
        return set(), scan_uses(tokens, hdr[1:])

    if head in {"loop", "unsafe", "block"}:
        return set(), set()

    if head == "arm":
        pat, _arrow, rest = _split_at(tokens, hdr, {"=>"})
        guard_uses: set[str] = set()
        for k, i in enumerate(pat):
            if tokens[i].is_kw("if"):
                guard_uses = scan_uses(tokens, pat[k + 1 :])
                pat = pat[:k]
                break
        return pattern_defs(tokens, pat), guard_uses | scan_uses(tokens, rest) | _inner_uses(tokens, stmt)

    # expr / assign / macro: find a top-level assignment operator
    depth_ok = hdr
    for k, i in enumerate(depth_ok):
        t = tokens[i]
        if t.kind == "punct" and t.text in _ASSIGN_OPS:
            lhs, rhs = depth_ok[:k], depth_ok[k + 1 :]
            lhs_idents = [j for j in lhs if tokens[j].kind == "ident" and tokens[j].text not in KEYWORDS]
            rhs_uses = scan_uses(tokens, rhs) | _inner_uses(tokens, stmt)
            if len(lhs) == 1 and len(lhs_idents) == 1:
                name = tokens[lhs_idents[0]].text
                defs = {name}
                uses = rhs_uses | ({name} if t.text != "=" else set())
                return defs, uses
            # compound lvalue (*p = .., a[i] = .., s.f = ..): reads only
            return set(), scan_uses(tokens, lhs) | rhs_uses
    return set(), scan_uses(tokens, hdr) | _inner_uses(tokens, stmt)


def _inner_uses(tokens: list[Token], stmt: StmtNode) -> set[str]:
    """Upward-exposed variable reads inside a plain statement's nested blocks.

    Block-local `let` bindings shadow; anything read before a local
    definition escapes as a use of the enclosing scope.
    """
    uses: set[str] = set()
    for block in stmt.blocks:
        local: set[str] = set()
        for inner in block.statements:
            d, u = stmt_defuse(tokens, inner)
            uses |= u - local
            local |= d
    return uses
