"""Tokenizer for the Rust subset emitted by C-to-Rust transpilers.

Produces a flat token stream with 1-based line numbers. Comments and
whitespace are consumed but not emitted; string/char literals are single
tokens so that braces and semicolons inside them never confuse the
structural passes. Block comments nest, raw strings honor their hash
count, and lifetimes are distinguished from char literals.
"""

from dataclasses import dataclass

KEYWORDS = frozenset(
    """
    as async await break const continue crate dyn else enum extern false fn
    for if impl in let loop match mod move mut pub ref return self Self
    static struct super trait true type union unsafe use where while
    """.split()
)

# Longest-match punctuation. Three-char first, then two, then one.
PUNCTS_3 = ("<<=", ">>=", "..=", "...")
PUNCTS_2 = (
    "::", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=",
    "/=", "%=", "^=", "&=", "|=", "<<", ">>", "..",
)


@dataclass
class Token:
    kind: str  # ident | punct | str | char | num | lifetime
    text: str
    line: int
    pos: int = 0  # byte offset of first char
    end: int = 0  # byte offset one past last char

    def is_kw(self, word: str) -> bool:
        return self.kind == "ident" and self.text == word


class LexError(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[Token]:
    """Tokenize source text. Raises LexError on unterminated literals."""
    toks: list[Token] = []
    i = 0
    n = len(text)
    line = 1

    def bump_lines(chunk: str) -> None:
        nonlocal line
        line += chunk.count("\n")

    while i < n:
        c = text[i]

        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            continue

        # Comments.
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            depth = 1
            j = i + 2
            while j < n and depth:
                if text.startswith("/*", j):
                    depth += 1
                    j += 2
                elif text.startswith("*/", j):
                    depth -= 1
                    j += 2
                else:
                    j += 1
            if depth:
                raise LexError(line, "unterminated block comment")
            bump_lines(text[i:j])
            i = j
            continue

        # Raw and byte string prefixes.
        if c in "rb" and _raw_or_byte_string(text, i):
            j, kind = _scan_string_like(text, i, line)
            toks.append(Token(kind, text[i:j], line, i, j))
            bump_lines(text[i:j])
            i = j
            continue

        if c == '"':
            j = _scan_quoted(text, i, line, '"')
            toks.append(Token("str", text[i:j], line, i, j))
            bump_lines(text[i:j])
            i = j
            continue

        if c == "'":
            j, kind = _scan_tick(text, i, line)
            toks.append(Token(kind, text[i:j], line, i, j))
            i = j
            continue

        if _is_ident_start(c):
            # r#ident raw identifiers.
            if c == "r" and text.startswith("r#", i) and i + 2 < n and _is_ident_start(text[i + 2]):
                j = i + 2
                while j < n and _is_ident_char(text[j]):
                    j += 1
                toks.append(Token("ident", text[i + 2 : j], line, i, j))
                i = j
                continue
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            toks.append(Token("ident", text[i:j], line, i, j))
            i = j
            continue

        if c.isdigit():
            j = _scan_number(text, i)
            toks.append(Token("num", text[i:j], line, i, j))
            i = j
            continue

        matched = False
        for group in (PUNCTS_3, PUNCTS_2):
            for p in group:
                if text.startswith(p, i):
                    toks.append(Token("punct", p, line, i, i + len(p)))
                    i += len(p)
                    matched = True
                    break
            if matched:
                break
        if matched:
            continue

        toks.append(Token("punct", c, line, i, i + 1))
        i += 1

    return toks


def _raw_or_byte_string(text: str, i: int) -> bool:
    """True if position i starts r"...", r#"..."#, b"...", br"...", b'...'."""
    n = len(text)
    c = text[i]
    if c == "r":
        j = i + 1
        while j < n and text[j] == "#":
            j += 1
        return j < n and text[j] == '"'
    if c == "b":
        if i + 1 < n and text[i + 1] in "\"'":
            return True
        if text.startswith("br", i):
            j = i + 2
            while j < n and text[j] == "#":
                j += 1
            return j < n and text[j] == '"'
    return False


def _scan_string_like(text: str, i: int, line: int) -> tuple[int, str]:
    """Scan raw/byte string or byte char starting at i. Returns (end, kind)."""
    n = len(text)
    j = i
    if text[j] == "b":
        j += 1
    if j < n and text[j] == "'":
        return _scan_quoted(text, j, line, "'"), "char"
    raw = j < n and text[j] == "r"
    if raw:
        j += 1
        hashes = 0
        while j < n and text[j] == "#":
            hashes += 1
            j += 1
        if j >= n or text[j] != '"':
            raise LexError(line, "malformed raw string")
        close = '"' + "#" * hashes
        k = text.find(close, j + 1)
        if k < 0:
            raise LexError(line, "unterminated raw string")
        return k + len(close), "str"
    return _scan_quoted(text, j, line, '"'), "str"


def _scan_quoted(text: str, i: int, line: int, quote: str) -> int:
    """Scan a quoted literal with escapes; i points at the opening quote."""
    n = len(text)
    j = i + 1
    while j < n:
        c = text[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        j += 1
    raise LexError(line, f"unterminated {quote}-literal")


def _scan_tick(text: str, i: int, line: int) -> tuple[int, str]:
    """Disambiguate lifetimes from char literals at a single quote."""
    n = len(text)
    j = i + 1
    if j < n and _is_ident_start(text[j]):
        k = j
        while k < n and _is_ident_char(text[k]):
            k += 1
        if k < n and text[k] == "'" and k == j + 1:
            return k + 1, "char"  # 'a'
        if k < n and text[k] == "'":
            # multi-char like 'abc' is invalid Rust; treat as char literal
            return k + 1, "char"
        return k, "lifetime"  # 'a as in labels and lifetimes
    return _scan_quoted(text, i, line, "'"), "char"


def _scan_number(text: str, i: int) -> int:
    n = len(text)
    j = i
    if text.startswith(("0x", "0o", "0b"), i):
        j = i + 2
        while j < n and (text[j].isalnum() or text[j] == "_"):
            j += 1
        return j
    while j < n and (text[j].isdigit() or text[j] == "_"):
        j += 1
    # fractional part, but not the start of a `..` range or method call
    if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
        j += 1
        while j < n and (text[j].isdigit() or text[j] == "_"):
            j += 1
    # exponent and type suffixes (1e3, 3.5f64, 7i32, 0usize)
    while j < n and (text[j].isalnum() or text[j] == "_"):
        if text[j] in "eE" and j + 1 < n and text[j + 1] in "+-":
            j += 2
            continue
        j += 1
    return j


def match_delims(tokens: list[Token], file: str = "<input>") -> dict[int, int]:
    """Map each opening (, [, { token index to its closing index and back.

    Raises ParseError-compatible LexError on imbalance.
    """
    pairs: dict[int, int] = {}
    stack: list[tuple[str, int]] = []
    closers = {")": "(", "]": "[", "}": "{"}
    for idx, t in enumerate(tokens):
        if t.kind != "punct":
            continue
        if t.text in "([{":
            stack.append((t.text, idx))
        elif t.text in closers:
            if not stack or stack[-1][0] != closers[t.text]:
                raise LexError(t.line, f"unbalanced '{t.text}'")
            _, open_idx = stack.pop()
            pairs[open_idx] = idx
            pairs[idx] = open_idx
    if stack:
        raise LexError(tokens[stack[-1][1]].line, f"unclosed '{stack[-1][0]}'")
    return pairs
