"""Expression language for right-hand sides, ``?`` predicates and ``app`` transformers.

A small call-by-value evaluator over lexical environments. ``match`` forms are
parsed by the pattern frontend and compiled on the spot; evaluating one runs
the compiled automaton.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import (
    ArityError,
    EvalTypeError,
    MalformedExpr,
    NotCallable,
    SourceSpan,
    UnboundVariable,
    UserError,
)
from .sexpr import (
    NIL,
    Pair,
    Procedure,
    StructInstance,
    Symbol,
    display_text,
    is_number,
    list_length,
    make_list,
    sym,
    to_pylist,
    values_equal,
)

DEFAULT_FUEL = 64


# ---------------------------------------------------------------------------
# expressions


class Expr:
    span: SourceSpan | None = None


@dataclass(frozen=True, eq=False)
class Literal(Expr):
    value: Any


@dataclass(frozen=True, eq=False)
class Quote(Expr):
    value: Any


@dataclass(frozen=True, eq=False)
class VarRef(Expr):
    name: str
    span: SourceSpan | None = None


@dataclass(frozen=True, eq=False)
class Lambda(Expr):
    params: tuple[str, ...]
    body: Expr
    rest: str | None = None
    name: str = "lambda"


@dataclass(frozen=True, eq=False)
class Application(Expr):
    fn: Expr
    args: tuple[Expr, ...]
    span: SourceSpan | None = None


@dataclass(frozen=True, eq=False)
class Let(Expr):
    bindings: tuple[tuple[str, Expr], ...]
    body: Expr


@dataclass(frozen=True, eq=False)
class If(Expr):
    test: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True, eq=False)
class MatchExpr(Expr):
    scrutinee: Expr
    compiled: Any  # match_compiler.CompiledMatch
    span: SourceSpan | None = None


# ---------------------------------------------------------------------------
# environments


class Env:
    """A chain of frames, innermost first."""

    __slots__ = ("frame", "parent")

    def __init__(self, frame: dict[str, Any] | None = None, parent: Env | None = None):
        self.frame = frame if frame is not None else {}
        self.parent = parent

    def lookup(self, name: str, span: SourceSpan | None = None) -> Any:
        env: Env | None = self
        while env is not None:
            if name in env.frame:
                return env.frame[name]
            env = env.parent
        raise UnboundVariable(f"{name} is not bound", span)

    def __contains__(self, name: str) -> bool:
        env: Env | None = self
        while env is not None:
            if name in env.frame:
                return True
            env = env.parent
        return False

    def extend(self, bindings: dict[str, Any]) -> Env:
        return Env(dict(bindings), self)

    def define(self, name: str, value: Any) -> None:
        # toplevel definitions only; everything else extends
        self.frame[name] = value


# ---------------------------------------------------------------------------
# procedures


class Builtin(Procedure):
    def __init__(self, name: str, fn: Callable, min_args: int, max_args: int | None):
        self.name = name
        self.fn = fn
        self.min_args = min_args
        self.max_args = max_args

    def __repr__(self):
        return f"<builtin {self.name}>"


class Closure(Procedure):
    def __init__(self, lam: Lambda, env: Env):
        self.lam = lam
        self.env = env
        self.name = lam.name

    def __repr__(self):
        return f"<closure {self.name}/{len(self.lam.params)}>"


def _check_arity(name, n, lo, hi):
    if n < lo or (hi is not None and n > hi):
        if hi == lo:
            want = str(lo)
        elif hi is None:
            want = f"at least {lo}"
        else:
            want = f"{lo} to {hi}"
        raise ArityError(f"{name}: expected {want} arguments, got {n}")


def apply_value(fn: Any, args: Sequence[Any]) -> Any:
    if isinstance(fn, Builtin):
        _check_arity(fn.name, len(args), fn.min_args, fn.max_args)
        return fn.fn(*args)
    if isinstance(fn, Closure):
        lam = fn.lam
        nparams = len(lam.params)
        _check_arity(fn.name, len(args), nparams, None if lam.rest else nparams)
        frame = dict(zip(lam.params, args))
        if lam.rest is not None:
            frame[lam.rest] = make_list(args[nparams:])
        return evaluate(lam.body, Env(frame, fn.env))
    raise NotCallable(f"not a procedure: {display_text(fn)}")


def truthy(v: Any) -> bool:
    return v is not False


# ---------------------------------------------------------------------------
# parsing

_gensym_counter = itertools.count()

_SELF_EVALUATING = (int, float, str, bool)


def _span(datum) -> SourceSpan | None:
    return datum.span if isinstance(datum, Pair) else None


def _items(datum, what: str) -> list:
    try:
        return to_pylist(datum)
    except ValueError:
        raise MalformedExpr(f"{what}: improper list", _span(datum)) from None


def _name(datum, span, what: str) -> str:
    if not isinstance(datum, Symbol):
        raise MalformedExpr(f"{what}: expected an identifier, got {display_text(datum)}", span)
    return datum.name


def parse_expr(datum: Any, static=None, fuel: int = DEFAULT_FUEL) -> Expr:
    """Parse reader output into an Expr.

    ``static`` is the pattern frontend's StaticEnv, needed only when the
    expression contains ``match`` forms.
    """
    if isinstance(datum, Symbol):
        return VarRef(datum.name)
    if isinstance(datum, _SELF_EVALUATING):
        return Literal(datum)
    if datum is NIL:
        raise MalformedExpr("empty application ()")
    if isinstance(datum, StructInstance):
        return Literal(datum)
    if not isinstance(datum, Pair):
        raise MalformedExpr(f"cannot parse {datum!r}")

    span = datum.span
    head = datum.head
    items = _items(datum, "expression")
    rec = lambda d: parse_expr(d, static, fuel)  # noqa: E731

    if isinstance(head, Symbol):
        form = head.name
        if form == "quote":
            if len(items) != 2:
                raise MalformedExpr("quote: expected one datum", span)
            return Quote(items[1])
        if form in ("lambda", "λ"):
            if len(items) != 3:
                raise MalformedExpr(f"{form}: expected (lambda (param ...) body)", span)
            params, rest = _parse_params(items[1], span)
            return Lambda(params, rec(items[2]), rest)
        if form == "let":
            return _parse_let(items, span, rec)
        if form == "if":
            if len(items) != 4:
                raise MalformedExpr("if: expected (if test then else)", span)
            return If(rec(items[1]), rec(items[2]), rec(items[3]))
        if form == "cond":
            return _parse_cond(items[1:], span, rec)
        if form == "and":
            return _parse_and(items[1:], rec)
        if form == "or":
            return _parse_or(items[1:], rec)
        if form == "match":
            from .match_compiler import parse_match_form

            return parse_match_form(items, span, static, fuel)

    fn = rec(head)
    return Application(fn, tuple(rec(a) for a in items[1:]), span)


def _parse_params(datum, span) -> tuple[tuple[str, ...], str | None]:
    params = []
    while isinstance(datum, Pair):
        params.append(_name(datum.head, span, "lambda"))
        datum = datum.tail
    rest = None
    if datum is not NIL:
        rest = _name(datum, span, "lambda")
    if len(set(params) | ({rest} if rest else set())) != len(params) + (1 if rest else 0):
        raise MalformedExpr("lambda: duplicate parameter", span)
    return tuple(params), rest


def _parse_let(items, span, rec) -> Let:
    if len(items) != 3:
        raise MalformedExpr("let: expected (let ([x e] ...) body)", span)
    bindings = []
    for b in _items(items[1], "let"):
        parts = _items(b, "let binding") if isinstance(b, Pair) else None
        if not parts or len(parts) != 2:
            raise MalformedExpr("let: each binding must be [name expr]", span)
        bindings.append((_name(parts[0], span, "let"), rec(parts[1])))
    names = [n for n, _ in bindings]
    if len(set(names)) != len(names):
        raise MalformedExpr("let: duplicate binding", span)
    return Let(tuple(bindings), rec(items[2]))


def _parse_cond(clauses, span, rec) -> Expr:
    # a cond with no matching clause and no else yields #f
    out: Expr = Literal(False)
    for i, clause in reversed(list(enumerate(clauses))):
        parts = _items(clause, "cond clause") if isinstance(clause, Pair) else []
        if len(parts) != 2:
            raise MalformedExpr("cond: each clause must be [test expr]", span)
        test, body = parts
        if test is sym("else"):
            if i != len(clauses) - 1:
                raise MalformedExpr("cond: else must be the last clause", span)
            out = rec(body)
        else:
            out = If(rec(test), rec(body), out)
    return out


def _parse_and(args, rec) -> Expr:
    if not args:
        return Literal(True)
    out = rec(args[-1])
    for a in reversed(args[:-1]):
        out = If(rec(a), out, Literal(False))
    return out


def _parse_or(args, rec) -> Expr:
    if not args:
        return Literal(False)
    out = rec(args[-1])
    for a in reversed(args[:-1]):
        tmp = f"or-tmp{next(_gensym_counter)}"
        out = Let(((tmp, rec(a)),), If(VarRef(tmp), VarRef(tmp), out))
    return out


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expr, env: Env) -> Any:
    while True:
        match e:
            case Literal(value) | Quote(value):
                return value
            case VarRef(name, span):
                return env.lookup(name, span)
            case Lambda():
                return Closure(e, env)
            case If(test, then, else_):
                e = then if truthy(evaluate(test, env)) else else_
            case Let(bindings, body):
                env = env.extend({name: evaluate(rhs, env) for name, rhs in bindings})
                e = body
            case Application(fn_expr, arg_exprs):
                fn = evaluate(fn_expr, env)
                args = [evaluate(a, env) for a in arg_exprs]
                if isinstance(fn, Closure):
                    # closure bodies loop here instead of recursing
                    lam = fn.lam
                    nparams = len(lam.params)
                    _check_arity(fn.name, len(args), nparams, None if lam.rest else nparams)
                    frame = dict(zip(lam.params, args))
                    if lam.rest is not None:
                        frame[lam.rest] = make_list(args[nparams:])
                    env = Env(frame, fn.env)
                    e = lam.body
                else:
                    return apply_value(fn, args)
            case MatchExpr():
                from .match_runtime import execute_match

                e, env = execute_match(e, env)
            case _:
                raise MalformedExpr(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# builtins

BUILTINS: dict[str, Builtin] = {}


def builtin(name: str, min_args: int = 0, max_args: int | None = -1):
    """Register ``fn`` under ``name``. ``max_args=-1`` means exactly ``min_args``."""

    def register(fn):
        hi = min_args if max_args == -1 else max_args
        BUILTINS[name] = Builtin(name, fn, min_args, hi)
        return fn

    return register


def _num(who: str, x: Any):
    if not is_number(x):
        raise EvalTypeError(f"{who}: expected a number, got {display_text(x)}")
    return x


def _int(who: str, x: Any) -> int:
    if not (is_number(x) and isinstance(x, int)):
        raise EvalTypeError(f"{who}: expected an integer, got {display_text(x)}")
    return x


def _list(who: str, x: Any) -> list:
    if list_length(x) is None:
        raise EvalTypeError(f"{who}: expected a list, got {display_text(x)}")
    return to_pylist(x)


def _pair(who: str, x: Any) -> Pair:
    if not isinstance(x, Pair):
        raise EvalTypeError(f"{who}: expected a non-empty list, got {display_text(x)}")
    return x


@builtin("+", 0, None)
def _add(*xs):
    return sum((_num("+", x) for x in xs), 0)


@builtin("*", 0, None)
def _mul(*xs):
    out = 1
    for x in xs:
        out *= _num("*", x)
    return out


@builtin("-", 1, None)
def _sub(x, *xs):
    _num("-", x)
    if not xs:
        return -x
    for y in xs:
        x -= _num("-", y)
    return x


def _divide(x, y):
    if y == 0:
        raise EvalTypeError("/: division by zero")
    if isinstance(x, int) and isinstance(y, int) and x % y == 0:
        return x // y
    return x / y


@builtin("/", 1, None)
def _div(x, *ys):
    _num("/", x)
    if not ys:
        return _divide(1, x)
    for y in ys:
        x = _divide(x, _num("/", y))
    return x


def _compare(name, op):
    @builtin(name, 1, None)
    def compare(*xs):
        for x in xs:
            _num(name, x)
        return all(op(a, b) for a, b in zip(xs, xs[1:]))

    return compare


_compare("=", lambda a, b: a == b)
_compare("<", lambda a, b: a < b)
_compare(">", lambda a, b: a > b)
_compare("<=", lambda a, b: a <= b)
_compare(">=", lambda a, b: a >= b)


@builtin("sqrt", 1)
def _sqrt(x):
    _num("sqrt", x)
    if x < 0:
        raise EvalTypeError(f"sqrt: negative argument {x}")
    if isinstance(x, int):
        root = math.isqrt(x)
        if root * root == x:
            return root
    return math.sqrt(x)


@builtin("sqr", 1)
def _sqr(x):
    return _num("sqr", x) * x


@builtin("add1", 1)
def _add1(x):
    return _num("add1", x) + 1


@builtin("sub1", 1)
def _sub1(x):
    return _num("sub1", x) - 1


@builtin("abs", 1)
def _abs(x):
    return abs(_num("abs", x))


@builtin("atan", 1, 2)
def _atan(y, x=None):
    if x is None:
        return math.atan(_num("atan", y))
    return math.atan2(_num("atan", y), _num("atan", x))


@builtin("number?", 1)
def _numberp(x):
    return is_number(x)


@builtin("real?", 1)
def _realp(x):
    return is_number(x)


@builtin("integer?", 1)
def _integerp(x):
    if isinstance(x, float):
        return math.isfinite(x) and x.is_integer()
    return is_number(x)


@builtin("even?", 1)
def _evenp(x):
    x = _num("even?", x)
    if isinstance(x, float) and not x.is_integer():
        raise EvalTypeError(f"even?: expected an integer, got {x}")
    return x % 2 == 0


@builtin("odd?", 1)
def _oddp(x):
    return not _evenp(x)


@builtin("zero?", 1)
def _zerop(x):
    return _num("zero?", x) == 0


@builtin("string?", 1)
def _stringp(x):
    return isinstance(x, str)


@builtin("symbol?", 1)
def _symbolp(x):
    return isinstance(x, Symbol)


@builtin("boolean?", 1)
def _booleanp(x):
    return isinstance(x, bool)


@builtin("pair?", 1)
def _pairp(x):
    return isinstance(x, Pair)


@builtin("null?", 1)
def _nullp(x):
    return x is NIL


BUILTINS["empty?"] = BUILTINS["null?"]


@builtin("list?", 1)
def _listp(x):
    return list_length(x) is not None


@builtin("procedure?", 1)
def _procedurep(x):
    return isinstance(x, Procedure)


@builtin("not", 1)
def _not(x):
    return x is False


@builtin("equal?", 2)
def _equalp(a, b):
    return values_equal(a, b)


@builtin("eq?", 2)
def _eqp(a, b):
    if isinstance(a, (Pair, StructInstance, Procedure)):
        return a is b
    return values_equal(a, b)


@builtin("cons", 2)
def _cons(a, b):
    return Pair(a, b)


@builtin("list", 0, None)
def _list_fn(*xs):
    return make_list(xs)


@builtin("first", 1)
def _first(x):
    return _pair("first", x).head


@builtin("rest", 1)
def _rest(x):
    return _pair("rest", x).tail


@builtin("second", 1)
def _second(x):
    return _pair("second", _pair("second", x).tail).head


@builtin("third", 1)
def _third(x):
    return _pair("third", _pair("third", _pair("third", x).tail).tail).head


@builtin("length", 1)
def _length(x):
    return len(_list("length", x))


@builtin("reverse", 1)
def _reverse(x):
    return make_list(reversed(_list("reverse", x)))


@builtin("append", 0, None)
def _append(*xs):
    if not xs:
        return NIL
    items = []
    for x in xs[:-1]:
        items.extend(_list("append", x))
    return make_list(items, xs[-1])


@builtin("apply", 2, None)
def _apply(fn, *args):
    spread = _list("apply", args[-1])
    return apply_value(fn, list(args[:-1]) + spread)


@builtin("map", 2, None)
def _map(fn, *lists):
    columns = [_list("map", lst) for lst in lists]
    if len({len(c) for c in columns}) != 1:
        raise EvalTypeError("map: all lists must have the same length")
    return make_list(apply_value(fn, list(args)) for args in zip(*columns))


@builtin("curry", 1, None)
def _curry(fn, *early):
    if not isinstance(fn, Procedure):
        raise NotCallable(f"curry: not a procedure: {display_text(fn)}")
    return Builtin(f"curried:{fn.name}", lambda *late: apply_value(fn, early + late), 0, None)


@builtin("string-append", 0, None)
def _string_append(*xs):
    for x in xs:
        if not isinstance(x, str):
            raise EvalTypeError(f"string-append: expected a string, got {display_text(x)}")
    return "".join(xs)


@builtin("format", 1, None)
def _format(template, *args):
    if not isinstance(template, str):
        raise EvalTypeError("format: template must be a string")
    out = []
    remaining = list(args)
    i = 0
    while i < len(template):
        c = template[i]
        if c == "~" and i + 1 < len(template):
            directive = template[i + 1]
            if directive == "a":
                if not remaining:
                    raise EvalTypeError("format: not enough arguments")
                out.append(display_text(remaining.pop(0)))
            elif directive == "n":
                out.append("\n")
            else:
                raise EvalTypeError(f"format: unsupported directive ~{directive}")
            i += 2
        else:
            out.append(c)
            i += 1
    if remaining:
        raise EvalTypeError("format: too many arguments")
    return "".join(out)


@builtin("error", 1)
def _error(message):
    if not isinstance(message, str):
        raise EvalTypeError("error: expected a string message")
    raise UserError(message)


def base_env() -> Env:
    """A fresh toplevel environment holding the builtins."""
    return Env(dict(BUILTINS))
