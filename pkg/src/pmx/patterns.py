"""Pattern syntax: parsing, expander expansion, desugaring and static registries.

Surface patterns are parsed straight into a small core:

    (list p ...)        -> chain of ConsPat ending in NullPat
    (list q ... p ... r ...)  -> ConsPat prefix over a SeqPat
    (? e p ...)         -> AndPat(PredPat e, p, ...)
    (name p ...)        -> StructPat when ``name`` is a registered struct
    (name ...)          -> rewritten by the expander bound to ``name``, then re-parsed
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

from . import templates
from .errors import (
    DuplicateDefinition,
    DuplicateVariable,
    EvalTypeError,
    FuelExhausted,
    MalformedPattern,
    NoRuleMatches,
    OrBindingMismatch,
    SourceSpan,
    StructArityError,
    UnknownPatternHead,
)
from .evaluator import DEFAULT_FUEL, Builtin, Env, Expr, parse_expr
from .sexpr import (
    NIL,
    Pair,
    StructInstance,
    StructTag,
    Symbol,
    display_text,
    print_value,
    sym,
    to_pylist,
)

KEYWORDS = frozenset(["list", "cons", "and", "or", "app", "quote", "_", "?", "..."])

ELLIPSIS = sym("...")


# ---------------------------------------------------------------------------
# pattern AST


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class VarPat(Pattern):
    name: str


@dataclass(frozen=True)
class WildcardPat(Pattern):
    pass


@dataclass(frozen=True)
class LiteralPat(Pattern):
    value: Any


@dataclass(frozen=True)
class PredPat(Pattern):
    expr: Expr
    source: Any = field(default=None, compare=False)
    eid: int = -1


@dataclass(frozen=True)
class AndPat(Pattern):
    parts: tuple[Pattern, ...]


@dataclass(frozen=True)
class OrPat(Pattern):
    parts: tuple[Pattern, ...]


@dataclass(frozen=True)
class ConsPat(Pattern):
    head: Pattern
    tail: Pattern


@dataclass(frozen=True)
class NullPat(Pattern):
    pass


@dataclass(frozen=True)
class AppPat(Pattern):
    expr: Expr
    pat: Pattern
    source: Any = field(default=None, compare=False)
    eid: int = -1


@dataclass(frozen=True)
class SeqPat(Pattern):
    """``elem ...`` followed by fixed patterns matching the last elements."""

    elem: Pattern
    tail: tuple[Pattern, ...] = ()


@dataclass(frozen=True)
class StructPat(Pattern):
    info: StructInfo
    fields: tuple[Pattern, ...]


def list_pattern(parts: Sequence[Pattern], end: Pattern | None = None) -> Pattern:
    out = NullPat() if end is None else end
    for p in reversed(parts):
        out = ConsPat(p, out)
    return out


def show_pattern(p: Pattern) -> str:
    """Render a core pattern back to concrete syntax (for messages and dumps)."""
    match p:
        case VarPat(name):
            return name
        case WildcardPat():
            return "_"
        case LiteralPat(value):
            text = print_value(value)
            return text if isinstance(value, (int, float, str, bool)) else "'" + text
        case PredPat(source=source):
            return f"(? {display_text(source)})"
        case AndPat(parts):
            return "(and" + "".join(" " + show_pattern(q) for q in parts) + ")"
        case OrPat(parts):
            return "(or" + "".join(" " + show_pattern(q) for q in parts) + ")"
        case ConsPat(head, tail):
            return f"(cons {show_pattern(head)} {show_pattern(tail)})"
        case NullPat():
            return "(list)"
        case AppPat(pat=pat, source=source):
            return f"(app {display_text(source)} {show_pattern(pat)})"
        case SeqPat(elem, tail):
            return "(list " + " ".join([show_pattern(elem), "..."] + [show_pattern(t) for t in tail]) + ")"
        case StructPat(info, fields):
            return "(" + " ".join([info.name] + [show_pattern(f) for f in fields]) + ")"
    raise TypeError(f"not a pattern: {p!r}")


# ---------------------------------------------------------------------------
# static environment


@dataclass(frozen=True, eq=False)
class StructInfo:
    name: str
    field_names: tuple[str, ...]
    tag: StructTag
    constructor: Builtin
    predicate: Builtin
    accessors: tuple[Builtin, ...]


@dataclass(frozen=True, eq=False)
class ExpanderDef:
    """Rules are (use-pattern, template) data pairs tried in order.

    ``transformer`` is an alternative to rules: a host function from the
    pattern datum to a new pattern datum.
    """

    name: str
    rules: tuple[tuple[Any, Any], ...] = ()
    transformer: Callable[[Any], Any] | None = None

    def __post_init__(self):
        if self.transformer is None:
            for use, template in self.rules:
                templates.check_rule(use, template)


@dataclass(frozen=True)
class StaticEnv:
    structs: Mapping[str, StructInfo] = field(default_factory=lambda: MappingProxyType({}))
    expanders: Mapping[str, ExpanderDef] = field(default_factory=lambda: MappingProxyType({}))

    def _check_fresh(self, name: str) -> None:
        if name in KEYWORDS:
            raise DuplicateDefinition(f"{name} is a pattern keyword")
        if name in self.structs or name in self.expanders:
            raise DuplicateDefinition(f"{name} is already defined")


def _make_struct_procs(name: str, fields: tuple[str, ...], tag: StructTag):
    def construct(*args):
        return StructInstance(tag, tuple(args))

    constructor = Builtin(f"make-{name}", construct, len(fields), len(fields))
    predicate = Builtin(
        f"{name}?", lambda v: isinstance(v, StructInstance) and v.tag == tag, 1, 1
    )

    def accessor(i: int, fname: str) -> Builtin:
        def get(v):
            if not (isinstance(v, StructInstance) and v.tag == tag):
                raise EvalTypeError(f"{name}-{fname}: expected a {name}, got {display_text(v)}")
            return v.fields[i]

        return Builtin(f"{name}-{fname}", get, 1, 1)

    accessors = tuple(accessor(i, f) for i, f in enumerate(fields))
    return constructor, predicate, accessors


def register_struct(
    name: str, fields: Sequence[str], env: StaticEnv, runtime_env: Env | None = None
) -> StaticEnv:
    """Record ``name`` as a struct; with ``runtime_env``, also define its procedures there."""
    env._check_fresh(name)
    fields = tuple(fields)
    if len(set(fields)) != len(fields):
        raise DuplicateDefinition(f"struct {name}: duplicate field name")
    tag = StructTag(name, len(fields))
    constructor, predicate, accessors = _make_struct_procs(name, fields, tag)
    info = StructInfo(name, fields, tag, constructor, predicate, accessors)
    if runtime_env is not None:
        for proc in (constructor, predicate, *accessors):
            runtime_env.define(proc.name, proc)
    structs = dict(env.structs)
    structs[name] = info
    return StaticEnv(MappingProxyType(structs), env.expanders)


def register_expander(definition: ExpanderDef, env: StaticEnv) -> StaticEnv:
    env._check_fresh(definition.name)
    expanders = dict(env.expanders)
    expanders[definition.name] = definition
    return StaticEnv(env.structs, MappingProxyType(expanders))


def expander_from_rules(name: str, rules: Sequence[tuple[Any, Any]]) -> ExpanderDef:
    return ExpanderDef(name, tuple(rules))


# ---------------------------------------------------------------------------
# expansion


def expand_once(datum: Any, definition: ExpanderDef) -> Any:
    if definition.transformer is not None:
        return definition.transformer(datum)
    for use, template in definition.rules:
        bindings = templates.match_template(Pair(templates.UNDERSCORE, use.tail), datum)
        if bindings is not None:
            return templates.instantiate(template, bindings)
    raise NoRuleMatches(
        f"no rule of {definition.name} matches {display_text(datum)}",
        datum.span if isinstance(datum, Pair) else None,
    )


# ---------------------------------------------------------------------------
# parsing


def _span_of(datum, fallback):
    return datum.span if isinstance(datum, Pair) and datum.span is not None else fallback


def parse_pattern(datum: Any, env: StaticEnv | None = None, fuel: int = DEFAULT_FUEL) -> Pattern:
    if env is None:
        env = StaticEnv()
    pattern = _Parser(env).parse(datum, fuel, None)
    try:
        check_bindings(pattern)
    except (DuplicateVariable, OrBindingMismatch) as err:
        if err.span is None:
            err.span = _span_of(datum, None)
        raise
    return pattern


class _Parser:
    def __init__(self, env: StaticEnv):
        self.env = env

    def parse(self, d: Any, fuel: int, span: SourceSpan | None) -> Pattern:
        span = _span_of(d, span)
        if isinstance(d, Symbol):
            if d.name == "_":
                return WildcardPat()
            if d is ELLIPSIS:
                raise MalformedPattern("ellipsis outside a list pattern", span)
            return VarPat(d.name)
        if isinstance(d, (int, float, str, bool, StructInstance)):
            return LiteralPat(d)
        if d is NIL:
            raise MalformedPattern("() is not a pattern; use '() or (list)", span)
        if not isinstance(d, Pair):
            raise MalformedPattern(f"not a pattern: {d!r}", span)
        try:
            items = to_pylist(d)
        except ValueError:
            raise MalformedPattern(f"improper pattern {display_text(d)}", span) from None

        head, args = items[0], items[1:]
        if not isinstance(head, Symbol):
            raise UnknownPatternHead(f"pattern head must be an identifier: {display_text(d)}", span)
        name = head.name

        if name in self.env.expanders:
            if fuel <= 0:
                raise FuelExhausted(f"expansion of {name} did not terminate", span)
            rewritten = expand_once(d, self.env.expanders[name])
            return self.parse(rewritten, fuel - 1, span)

        sub = lambda x: self.parse(x, fuel, span)  # noqa: E731

        if name == "quote":
            if len(args) != 1:
                raise MalformedPattern("quote takes one datum", span)
            return NullPat() if args[0] is NIL else LiteralPat(args[0])
        if name == "?":
            if not args:
                raise MalformedPattern("(? expr pat ...) needs an expression", span)
            pred = PredPat(parse_expr(args[0], self.env, fuel), args[0])
            if len(args) == 1:
                return pred
            return AndPat((pred, *(sub(a) for a in args[1:])))
        if name == "and":
            return AndPat(tuple(sub(a) for a in args))
        if name == "or":
            return OrPat(tuple(sub(a) for a in args))
        if name == "cons":
            if len(args) != 2:
                raise MalformedPattern("cons takes two patterns", span)
            return ConsPat(sub(args[0]), sub(args[1]))
        if name == "list":
            return self.parse_list(args, sub, span)
        if name == "app":
            if len(args) != 2:
                raise MalformedPattern("app takes an expression and a pattern", span)
            return AppPat(parse_expr(args[0], self.env, fuel), sub(args[1]), args[0])
        if name in ("_", "..."):
            raise MalformedPattern(f"{name} cannot head a pattern", span)
        if name in self.env.structs:
            info = self.env.structs[name]
            if len(args) != len(info.field_names):
                raise StructArityError(
                    f"{name} has {len(info.field_names)} fields, pattern gives {len(args)}", span
                )
            return StructPat(info, tuple(sub(a) for a in args))
        raise UnknownPatternHead(f"unknown pattern form {name}", span)

    def parse_list(self, args, sub, span) -> Pattern:
        marks = [i for i, a in enumerate(args) if a is ELLIPSIS]
        if not marks:
            return list_pattern([sub(a) for a in args])
        if len(marks) > 1:
            raise MalformedPattern("at most one ... per list pattern", span)
        k = marks[0]
        if k == 0:
            raise MalformedPattern("... must follow a pattern", span)
        prefix = [sub(a) for a in args[: k - 1]]
        seq = SeqPat(sub(args[k - 1]), tuple(sub(a) for a in args[k + 1 :]))
        return list_pattern(prefix, seq)


# ---------------------------------------------------------------------------
# variables


def bound_vars(p: Pattern) -> list[str]:
    """Variables bound by ``p``, in left-to-right order of first occurrence."""
    out: list[str] = []
    seen: set[str] = set()

    def walk(q: Pattern) -> None:
        match q:
            case VarPat(name):
                if name not in seen:
                    seen.add(name)
                    out.append(name)
            case AndPat(parts) | OrPat(parts):
                for part in parts:
                    walk(part)
            case ConsPat(head, tail):
                walk(head)
                walk(tail)
            case AppPat(pat=pat):
                walk(pat)
            case SeqPat(elem, tail):
                walk(elem)
                for t in tail:
                    walk(t)
            case StructPat(fields=fields):
                for f in fields:
                    walk(f)

    walk(p)
    return out


def check_bindings(p: Pattern) -> list[str]:
    """Enforce linearity and the Or discipline; return the bound names."""
    match p:
        case VarPat(name):
            return [name]
        case OrPat(parts):
            if not parts:
                return []
            branches = [check_bindings(q) for q in parts]
            first = set(branches[0])
            for other in branches[1:]:
                if set(other) != first:
                    raise OrBindingMismatch(
                        f"or branches bind different variables: "
                        f"{sorted(first)} vs {sorted(set(other))} in {show_pattern(p)}"
                    )
            return branches[0]
        case AndPat(parts):
            children = list(parts)
        case ConsPat(head, tail):
            children = [head, tail]
        case AppPat(pat=pat):
            children = [pat]
        case SeqPat(elem, tail):
            children = [elem, *tail]
        case StructPat(fields=fields):
            children = list(fields)
        case _:
            return []
    names: list[str] = []
    for child in children:
        for name in check_bindings(child):
            if name in names:
                raise DuplicateVariable(f"variable {name} bound twice in {show_pattern(p)}")
            names.append(name)
    return names
