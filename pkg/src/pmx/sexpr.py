"""Runtime values plus a reader and printer for S-expression text.

Value representation:

    number        int (arbitrary precision) or float; never bool
    symbol        Symbol, interned
    string        str
    boolean       bool
    empty list    NIL
    pair          Pair
    struct        StructInstance
    callable      any Procedure subclass (see evaluator)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .errors import BadToken, SourceSpan, UnbalancedDelimiter, Unprintable


class Symbol:
    __slots__ = ("name",)
    _table: dict[str, Symbol] = {}

    def __new__(cls, name: str) -> Symbol:
        try:
            return cls._table[name]
        except KeyError:
            s = super().__new__(cls)
            s.name = name
            cls._table[name] = s
            return s

    def __repr__(self):
        return f"Symbol({self.name!r})"

    def __str__(self):
        return self.name

    def __reduce__(self):
        return (Symbol, (self.name,))


def sym(name: str) -> Symbol:
    return Symbol(name)


class EmptyList:
    __slots__ = ()
    _instance: EmptyList | None = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NIL"

    def __iter__(self):
        return iter(())

    def __reduce__(self):
        return (EmptyList, ())


NIL = EmptyList()


@dataclass(frozen=True, eq=False)
class Pair:
    head: Any
    tail: Any
    # Set by the reader on the first pair of a parenthesized form.
    span: SourceSpan | None = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, Pair):
            return NotImplemented
        return values_equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"<list {display_text(self)}>"

    def __iter__(self) -> Iterator[Any]:
        """Iterate the elements of a proper list; raises on an improper tail."""
        node: Any = self
        while isinstance(node, Pair):
            yield node.head
            node = node.tail
        if node is not NIL:
            raise ValueError("improper list")


@dataclass(frozen=True)
class StructTag:
    name: str
    arity: int

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class StructInstance:
    tag: StructTag
    fields: tuple

    def __post_init__(self):
        if len(self.fields) != self.tag.arity:
            raise ValueError(
                f"struct {self.tag.name} takes {self.tag.arity} fields, got {len(self.fields)}"
            )

    def __eq__(self, other):
        if not isinstance(other, StructInstance):
            return NotImplemented
        return values_equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"<struct {display_text(self)}>"


class Procedure:
    """Marker base for callable values; equality is identity."""

    name = "procedure"


# ---------------------------------------------------------------------------
# list helpers


def make_list(items: Iterable[Any], tail: Any = NIL) -> Any:
    items = list(items)
    out = tail
    for item in reversed(items):
        out = Pair(item, out)
    return out


def list_length(v: Any) -> int | None:
    """Length of a proper list, or None if ``v`` is not one."""
    n = 0
    while isinstance(v, Pair):
        n += 1
        v = v.tail
    return n if v is NIL else None


def to_pylist(v: Any) -> list:
    out = []
    while isinstance(v, Pair):
        out.append(v.head)
        v = v.tail
    if v is not NIL:
        raise ValueError("improper list")
    return out


def is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def is_list(v: Any) -> bool:
    return list_length(v) is not None


# ---------------------------------------------------------------------------
# equality


def _num_equal(a, b) -> bool:
    # exactness matters, as with equal? on 1 and 1.0
    if type(a) is not type(b):
        return False
    if isinstance(a, float) and math.isnan(a):
        return math.isnan(b)
    return a == b


def values_equal(a: Any, b: Any) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if is_number(x):
            if not (is_number(y) and _num_equal(x, y)):
                return False
        elif isinstance(x, Pair):
            if not isinstance(y, Pair):
                return False
            # walk the spine here so long lists don't grow the stack unboundedly
            while isinstance(x, Pair) and isinstance(y, Pair):
                stack.append((x.head, y.head))
                x, y = x.tail, y.tail
            stack.append((x, y))
        elif isinstance(x, StructInstance):
            if not isinstance(y, StructInstance) or x.tag != y.tag:
                return False
            stack.extend(zip(x.fields, y.fields))
        elif isinstance(x, (str, bool)):
            if type(x) is not type(y) or x != y:
                return False
        else:
            # symbols, NIL and procedures: identity only
            return False
    return True


# ---------------------------------------------------------------------------
# printer

_FLOAT_SPECIAL = {math.inf: "+inf.0", -math.inf: "-inf.0"}
_STRING_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_DELIMS = set('()[]";\'|`,')


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "+nan.0"
    if x in _FLOAT_SPECIAL:
        return _FLOAT_SPECIAL[x]
    text = repr(x)
    if not any(c in text for c in ".e"):
        text += ".0"
    return text


def _format_symbol(name: str) -> str:
    plain = (
        name
        and name != "."
        and not name.startswith("#")
        and not any(c.isspace() or c in _DELIMS for c in name)
        and _parse_number(name) is None
    )
    if plain:
        return name
    return "|" + name.replace("\\", "\\\\").replace("|", "\\|") + "|"


def _format_string(s: str) -> str:
    return '"' + "".join(_STRING_ESCAPES.get(c, c) for c in s) + '"'


def print_value(v: Any) -> str:
    out: list[str] = []
    _emit(v, out, strict=True)
    return "".join(out)


def _emit(v: Any, out: list[str], strict: bool) -> None:
    if isinstance(v, bool):
        out.append("#t" if v else "#f")
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        out.append(_format_float(v))
    elif isinstance(v, str):
        out.append(_format_string(v))
    elif isinstance(v, Symbol):
        out.append(_format_symbol(v.name))
    elif v is NIL:
        out.append("()")
    elif isinstance(v, Pair):
        out.append("(")
        _emit(v.head, out, strict)
        v = v.tail
        while isinstance(v, Pair):
            out.append(" ")
            _emit(v.head, out, strict)
            v = v.tail
        if v is not NIL:
            out.append(" . ")
            _emit(v, out, strict)
        out.append(")")
    elif isinstance(v, StructInstance):
        out.append("#(struct ")
        out.append(_format_symbol(v.tag.name))
        for f in v.fields:
            out.append(" ")
            _emit(f, out, strict)
        out.append(")")
    elif isinstance(v, Procedure):
        if strict:
            raise Unprintable(f"cannot print procedure {v.name}")
        out.append(f"#<procedure:{v.name}>")
    else:
        raise Unprintable(f"not a value: {v!r}")


def display_text(v: Any) -> str:
    """Like print_value, but strings and symbols contribute their bare text."""
    if isinstance(v, str):
        return v
    if isinstance(v, Symbol):
        return v.name
    out: list[str] = []
    _emit(v, out, strict=False)
    return "".join(out)


# ---------------------------------------------------------------------------
# reader

_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+(?=[eE]))([eE][+-]?\d+)?\Z")
_SPECIAL_FLOATS = {"+inf.0": math.inf, "-inf.0": -math.inf, "+nan.0": math.nan, "-nan.0": math.nan}
_BOOLEANS = {"#t": True, "#true": True, "#f": False, "#false": False}
_OPENERS = {"(": ")", "[": "]"}
_CLOSERS = {")", "]"}
_ATOM_END = re.compile(r"[\s()\[\]\";'|]")
_READ_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "|": "|"}


def _parse_number(token: str):
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(token):
        return float(token)
    if token in _SPECIAL_FLOATS:
        return _SPECIAL_FLOATS[token]
    return None


@dataclass
class Syntax:
    """A read datum together with its source span and the spans of its parts."""

    value: Any
    span: SourceSpan
    children: list[Syntax] = field(default_factory=list)

    def walk(self) -> Iterator[Syntax]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


_DOT = object()


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, cls, msg, start, end=None):
        return cls(msg, SourceSpan(start, self.pos if end is None else end))

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n:
            c = text[self.pos]
            if c.isspace():
                self.pos += 1
            elif c == ";":
                nl = text.find("\n", self.pos)
                self.pos = n if nl < 0 else nl + 1
            else:
                break

    def read_toplevel(self) -> list[Syntax]:
        out = []
        while True:
            self.skip_ws()
            if self.pos >= len(self.text):
                return out
            item = self.read()
            if item is _DOT:
                raise self.error(BadToken, "unexpected '.'", self.pos - 1)
            out.append(item)

    def read(self):
        self.skip_ws()
        text = self.text
        start = self.pos
        if start >= len(text):
            raise self.error(UnbalancedDelimiter, "unexpected end of input", start)
        c = text[start]
        if c in _OPENERS:
            self.pos += 1
            return self.read_list(start, _OPENERS[c])
        if c in _CLOSERS:
            self.pos += 1
            raise self.error(UnbalancedDelimiter, f"unexpected '{c}'", start)
        if c == "'":
            self.pos += 1
            self.skip_ws()
            if self.pos >= len(text):
                raise self.error(UnbalancedDelimiter, "quote at end of input", start)
            inner = self.read()
            if inner is _DOT:
                raise self.error(BadToken, "cannot quote '.'", start)
            span = SourceSpan(start, self.pos)
            quote = Syntax(sym("quote"), SourceSpan(start, start + 1))
            value = Pair(sym("quote"), Pair(inner.value, NIL), span)
            return Syntax(value, span, [quote, inner])
        if c == '"':
            return self.read_string(start)
        if c == "|":
            self.pos += 1
            name = self.read_delimited("|", start)
            return Syntax(sym(name), SourceSpan(start, self.pos))
        if text.startswith("#(", start):
            return self.read_struct(start)
        return self.read_atom(start)

    def read_list(self, start: int, closer: str) -> Syntax:
        items: list[Syntax] = []
        tail: Syntax | None = None
        while True:
            self.skip_ws()
            if self.pos >= len(self.text):
                raise self.error(UnbalancedDelimiter, f"missing '{closer}'", start)
            c = self.text[self.pos]
            if c in _CLOSERS:
                if c != closer:
                    raise self.error(
                        UnbalancedDelimiter, f"expected '{closer}' but found '{c}'", start, self.pos + 1
                    )
                self.pos += 1
                break
            item = self.read()
            if item is _DOT:
                if not items or tail is not None:
                    raise self.error(BadToken, "misplaced '.'", self.pos - 1)
                tail = self.read()
                if tail is _DOT:
                    raise self.error(BadToken, "misplaced '.'", self.pos - 1)
                self.skip_ws()
                if self.pos >= len(self.text) or self.text[self.pos] not in _CLOSERS:
                    raise self.error(BadToken, "expected one datum after '.'", start)
                continue
            items.append(item)
        span = SourceSpan(start, self.pos)
        value: Any = tail.value if tail is not None else NIL
        for i, item in enumerate(reversed(items)):
            value = Pair(item.value, value, span if i == len(items) - 1 else None)
        children = items + ([tail] if tail is not None else [])
        return Syntax(value, span, children)

    def read_struct(self, start: int) -> Syntax:
        self.pos = start + 2
        body = self.read_list(start, ")")
        try:
            parts = to_pylist(body.value)
        except ValueError:
            parts = []
        if len(parts) < 2 or parts[0] is not sym("struct") or not isinstance(parts[1], Symbol):
            raise BadToken("expected #(struct name field ...)", body.span)
        fields = tuple(parts[2:])
        value = StructInstance(StructTag(parts[1].name, len(fields)), fields)
        return Syntax(value, body.span, body.children)

    def read_string(self, start: int) -> Syntax:
        self.pos += 1
        value = self.read_delimited('"', start)
        return Syntax(value, SourceSpan(start, self.pos))

    def read_delimited(self, close: str, start: int) -> str:
        text = self.text
        chars = []
        while True:
            if self.pos >= len(text):
                raise self.error(UnbalancedDelimiter, f"unterminated {close}", start)
            c = text[self.pos]
            self.pos += 1
            if c == close:
                return "".join(chars)
            if c == "\\":
                if self.pos >= len(text):
                    raise self.error(UnbalancedDelimiter, f"unterminated {close}", start)
                esc = text[self.pos]
                self.pos += 1
                if esc not in _READ_ESCAPES:
                    raise self.error(BadToken, f"unknown escape \\{esc}", self.pos - 2)
                chars.append(_READ_ESCAPES[esc])
            else:
                chars.append(c)

    def read_atom(self, start: int):
        m = _ATOM_END.search(self.text, start)
        end = m.start() if m else len(self.text)
        token = self.text[start:end]
        self.pos = end
        span = SourceSpan(start, end)
        if token == ".":
            return _DOT
        if token in _BOOLEANS:
            return Syntax(_BOOLEANS[token], span)
        if token.startswith("#"):
            raise BadToken(f"bad token {token!r}", span)
        number = _parse_number(token)
        if number is not None:
            return Syntax(number, span)
        return Syntax(sym(token), span)


def read_spanned(text: str) -> list[Syntax]:
    return _Reader(text).read_toplevel()


def read_all(text: str) -> list[Any]:
    return [s.value for s in read_spanned(text)]


def read_one(text: str) -> Any:
    data = read_all(text)
    if len(data) != 1:
        raise BadToken(f"expected one datum, found {len(data)}", SourceSpan(0, len(text)))
    return data[0]
