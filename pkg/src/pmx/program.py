"""Loading and running program files: definitions, structs, expanders, checks."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import MalformedExpr, PmxError, RecursionLimit, SourceSpan, Unprintable
from .evaluator import (
    DEFAULT_FUEL,
    Application,
    Env,
    Expr,
    If,
    Lambda,
    Let,
    MatchExpr,
    base_env,
    evaluate,
    parse_expr,
)
from .match_compiler import dump_automaton
from .match_runtime import TRACE_SINK
from .patterns import StaticEnv, expander_from_rules, register_expander, register_struct
from .sexpr import NIL, Pair, Symbol, display_text, print_value, read_all, to_pylist, values_equal


@dataclass
class CheckResult:
    passed: bool
    actual: Any
    expected: Any
    span: SourceSpan | None = None


@dataclass
class RunReport:
    outputs: list[str] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    error: PmxError | None = None

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return self.error.exit_code
        return 0 if all(c.passed for c in self.checks) else 1


# toplevel forms


@dataclass(frozen=True)
class Define:
    name: str
    expr: Expr


@dataclass(frozen=True)
class StructDef:
    name: str
    fields: tuple[str, ...]


@dataclass(frozen=True)
class ExpanderForm:
    name: str
    rules: tuple[tuple[Any, Any], ...]


@dataclass(frozen=True)
class CheckEqual:
    actual: Expr
    expected: Expr
    span: SourceSpan | None


@dataclass(frozen=True)
class Expression:
    expr: Expr


def show(v: Any) -> str:
    try:
        return print_value(v)
    except Unprintable:
        return display_text(v)


def match_exprs(e: Expr) -> Iterator[MatchExpr]:
    """Every match expression inside ``e``, in source order where spans allow."""
    found: list[MatchExpr] = []
    stack = [e]
    while stack:
        node = stack.pop()
        match node:
            case MatchExpr(scrutinee, cm):
                found.append(node)
                stack.append(scrutinee)
                stack.extend(cm.clauses)
                stack.extend(cm.pred_exprs.values())
                stack.extend(cm.app_exprs.values())
            case Lambda(body=body):
                stack.append(body)
            case Application(fn, args):
                stack.append(fn)
                stack.extend(args)
            case Let(bindings, body):
                stack.extend(x for _, x in bindings)
                stack.append(body)
            case If(test, then, else_):
                stack.extend((test, then, else_))
    found.sort(key=lambda m: m.span.start if m.span else -1)
    return iter(found)


def form_exprs(form) -> list[Expr]:
    match form:
        case Define(_, expr) | Expression(expr):
            return [expr]
        case CheckEqual(actual, expected, _):
            return [actual, expected]
    return []


class Session:
    """Processes toplevel forms in order; registries persist across forms."""

    def __init__(self, fuel: int = DEFAULT_FUEL, emit: Callable[[str], None] | None = None):
        self.fuel = fuel
        self.static = StaticEnv()
        self.env: Env = base_env()
        self.emit = emit or (lambda line: None)

    def parse_form(self, datum: Any):
        """Parse one toplevel datum, registering structs and expanders as a side effect."""
        head = datum.head if isinstance(datum, Pair) else None
        span = datum.span if isinstance(datum, Pair) else None
        name = head.name if isinstance(head, Symbol) else None
        if name == "define":
            return self._parse_define(datum, span)
        if name == "struct":
            items = _items(datum, span)
            if len(items) != 3 or not isinstance(items[1], Symbol):
                raise MalformedExpr("struct: expected (struct name (field ...))", span)
            fields = _symbols(items[2], "struct field", span)
            self.static = register_struct(items[1].name, fields, self.static, self.env)
            return StructDef(items[1].name, tuple(fields))
        if name == "define-match-expander":
            items = _items(datum, span)
            if len(items) < 3 or not isinstance(items[1], Symbol):
                raise MalformedExpr("define-match-expander: expected (define-match-expander name [use template] ...)", span)
            rules = []
            for rule in items[2:]:
                parts = _items(rule, span)
                if len(parts) != 2:
                    raise MalformedExpr("expander rule must be [use-pattern template]", span)
                rules.append((parts[0], parts[1]))
            definition = expander_from_rules(items[1].name, rules)
            self.static = register_expander(definition, self.static)
            return ExpanderForm(definition.name, tuple(rules))
        if name == "check-equal?":
            items = _items(datum, span)
            if len(items) != 3:
                raise MalformedExpr("check-equal?: expected (check-equal? actual expected)", span)
            return CheckEqual(self._expr(items[1]), self._expr(items[2]), span)
        return Expression(self._expr(datum))

    def _expr(self, datum: Any) -> Expr:
        return parse_expr(datum, self.static, self.fuel)

    def _parse_define(self, datum: Pair, span):
        items = _items(datum, span)
        if len(items) != 3:
            raise MalformedExpr("define: expected (define name expr) or (define (f x ...) body)", span)
        target = items[1]
        if isinstance(target, Symbol):
            return Define(target.name, self._expr(items[2]))
        if isinstance(target, Pair) and isinstance(target.head, Symbol):
            lam = self._expr(Pair(Symbol("lambda"), Pair(target.tail, Pair(items[2], NIL)), span))
            return Define(target.head.name, dataclasses.replace(lam, name=target.head.name))
        raise MalformedExpr("define: bad definition target", span)

    def execute(self, form, report: RunReport) -> None:
        match form:
            case Define(name, expr):
                self.env.define(name, evaluate(expr, self.env))
            case CheckEqual(actual, expected, span):
                a = evaluate(actual, self.env)
                b = evaluate(expected, self.env)
                result = CheckResult(values_equal(a, b), a, b, span)
                report.checks.append(result)
                if not result.passed:
                    where = f" at {span}" if span else ""
                    print(f"check-equal? failed{where}: actual {show(a)}, expected {show(b)}", file=sys.stderr)
            case Expression(expr):
                self._out(report, show(evaluate(expr, self.env)))

    def _out(self, report: RunReport, line: str) -> None:
        report.outputs.append(line)
        self.emit(line)

    def run_datum(self, datum: Any, report: RunReport, dump_ir: bool = False) -> None:
        form = self.parse_form(datum)
        if dump_ir:
            for expr in form_exprs(form):
                for m in match_exprs(expr):
                    for line in dump_automaton(m.compiled).splitlines():
                        self._out(report, line)
        self.execute(form, report)

    def run_text(self, text: str, dump_ir: bool = False, trace: bool = False) -> RunReport:
        report = RunReport()
        sink = None
        if trace:
            sink = lambda event: self._out(report, str(event))  # noqa: E731
        token = TRACE_SINK.set(sink)
        try:
            for datum in read_all(text):
                self.run_datum(datum, report, dump_ir)
        except PmxError as err:
            report.error = err
        except RecursionError:
            report.error = RecursionLimit("recursion too deep")
        finally:
            TRACE_SINK.reset(token)
        return report


def _items(datum: Any, span) -> list:
    try:
        return to_pylist(datum)
    except ValueError:
        raise MalformedExpr("expected a proper list", span) from None


def _symbols(datum: Any, what: str, span) -> list[str]:
    items = _items(datum, span)
    if not all(isinstance(x, Symbol) for x in items):
        raise MalformedExpr(f"{what} names must be symbols", span)
    return [x.name for x in items]


def run_program(path: str | Path, dump_ir: bool = False, trace: bool = False,
                fuel: int = DEFAULT_FUEL, emit: Callable[[str], None] | None = None) -> RunReport:
    text = Path(path).read_text(encoding="utf-8")
    return Session(fuel, emit).run_text(text, dump_ir=dump_ir, trace=trace)


def dump_ir(path: str | Path, match_index: int | None = None, fuel: int = DEFAULT_FUEL) -> str:
    """IR dumps for the match forms of a file, loaded statically and never run."""
    session = Session(fuel)
    found: list[MatchExpr] = []
    for datum in read_all(Path(path).read_text(encoding="utf-8")):
        for expr in form_exprs(session.parse_form(datum)):
            found.extend(match_exprs(expr))
    if match_index is not None:
        if not 0 <= match_index < len(found):
            raise IndexError(f"no match form {match_index}; the file has {len(found)}")
        return dump_automaton(found[match_index].compiled)
    chunks = []
    for i, m in enumerate(found):
        chunks.append(f"; match {i}\n{dump_automaton(m.compiled)}")
    return "".join(chunks)
