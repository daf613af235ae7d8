"""Running compiled matches, plus the naive reference matcher used as an oracle."""

from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import InternalInvariantViolation, MatchFailure
from .evaluator import Env, Expr, MatchExpr, apply_value, evaluate
from .match_compiler import (
    AppTransform,
    Bind,
    CompiledMatch,
    Failure,
    Join,
    Node,
    Occ,
    SeqLoop,
    Success,
    TestLiteral,
    TestPred,
    TestType,
)
from .patterns import (
    AndPat,
    AppPat,
    ConsPat,
    LiteralPat,
    NullPat,
    OrPat,
    Pattern,
    PredPat,
    SeqPat,
    StructPat,
    VarPat,
    WildcardPat,
    bound_vars,
)
from .sexpr import NIL, Pair, StructInstance, display_text, list_length, make_list, print_value, to_pylist, values_equal


@dataclass(frozen=True)
class Matched:
    rhs: int
    bindings: dict[str, Any]


class _NoMatch:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "NO_MATCH"


NO_MATCH = _NoMatch()


@dataclass(frozen=True)
class TraceEvent:
    step: int
    kind: str
    occ: str
    detail: str
    node: int | None = None
    passed: bool | None = None
    eid: int | None = None

    def __str__(self):
        return f"{self.step} {self.kind} @{self.occ} {self.detail}"


class Trace(list):
    """A trace sink that keeps every event."""

    def __call__(self, event: TraceEvent) -> None:
        self.append(event)

    def text(self) -> str:
        return "".join(f"{e}\n" for e in self)


# Active trace sink for matches run by the evaluator (set by the CLI's --trace).
TRACE_SINK: ContextVar[Callable[[TraceEvent], None] | None] = ContextVar("pmx_trace", default=None)


class PredCache:
    """Per-execution table of evaluated ``?``/``app`` expressions.

    Each expression is evaluated on first use only, and never if unused.
    """

    def __init__(self, cm: CompiledMatch, env: Env):
        self.cm = cm
        self.env = env
        self.values: dict[int, Any] = {}
        self.evaluations = 0

    def get(self, eid: int) -> Any:
        try:
            return self.values[eid]
        except KeyError:
            expr = self.cm.pred_exprs.get(eid) or self.cm.app_exprs[eid]
            value = evaluate(expr, self.env)
            self.evaluations += 1
            self.values[eid] = value
            return value


def occ_value(store: dict[str, Any], occ: Occ) -> Any:
    v = store[occ.root]
    for step in occ.path:
        if step == "h" or step == "t":
            if not isinstance(v, Pair):
                raise InternalInvariantViolation(f"access {occ} on a non-pair")
            v = v.head if step == "h" else v.tail
        else:
            if not isinstance(v, StructInstance):
                raise InternalInvariantViolation(f"access {occ} on a non-struct")
            v = v.fields[step]
    return v


class _Run:
    def __init__(self, cm: CompiledMatch, env: Env, trace: Callable[[TraceEvent], None] | None):
        self.cm = cm
        self.cache = PredCache(cm, env)
        self.trace = trace
        self.step = 0
        self.ids: dict[int, int] = {}
        if trace is not None:
            self.ids = {id(n): i for i, n in enumerate(cm.automaton.nodes())}

    def emit(self, kind: str, node: Node, occ: Any, detail: str, passed=None, eid=None) -> None:
        nid = self.ids[id(node)]
        self.trace(TraceEvent(self.step, kind, str(occ), f"#{nid} {detail}", nid, passed, eid))
        self.step += 1

    def walk(self, entry: Node, store: dict[str, Any]) -> Matched | None:
        node = entry
        bindings: dict[str, Any] = {}
        tracing = self.trace is not None
        while True:
            if isinstance(node, TestType):
                v = occ_value(store, node.occ)
                if node.kind == "pair":
                    ok = isinstance(v, Pair)
                elif node.kind == "null":
                    ok = v is NIL
                else:
                    ok = isinstance(v, StructInstance) and v.tag == node.tag
                if tracing:
                    what = node.tag.name if node.tag else node.kind
                    self.emit("type-test", node, node.occ, f"{what} {'pass' if ok else 'fail'}", ok)
                node = node.on_pass if ok else node.on_fail
            elif isinstance(node, TestLiteral):
                ok = values_equal(occ_value(store, node.occ), node.value)
                if tracing:
                    self.emit("literal-test", node, node.occ,
                              f"{print_value(node.value)} {'pass' if ok else 'fail'}", ok)
                node = node.on_pass if ok else node.on_fail
            elif isinstance(node, TestPred):
                fn = self.cache.get(node.eid)
                ok = apply_value(fn, [occ_value(store, node.occ)]) is not False
                if tracing:
                    self.emit("pred-apply", node, node.occ,
                              f"e{node.eid} {'pass' if ok else 'fail'}", ok, node.eid)
                node = node.on_pass if ok else node.on_fail
            elif isinstance(node, AppTransform):
                fn = self.cache.get(node.eid)
                store[node.result.root] = apply_value(fn, [occ_value(store, node.occ)])
                if tracing:
                    self.emit("app-apply", node, node.occ, f"e{node.eid} -> {node.result}", None, node.eid)
                node = node.next
            elif isinstance(node, Bind):
                bindings[node.name] = value = occ_value(store, node.occ)
                if tracing:
                    self.emit("bind", node, node.occ, f"{node.name} = {display_text(value)}")
                node = node.next
            elif isinstance(node, SeqLoop):
                node = self.loop(node, store)
            elif isinstance(node, Join):
                if tracing:
                    self.emit("failure-jump", node, "-", f"-> #{self.ids[id(node.target)]}")
                node = node.target
            elif isinstance(node, Success):
                if tracing:
                    self.emit("success", node, "-", f"rhs={node.rhs}", True)
                return Matched(node.rhs, bindings)
            elif isinstance(node, Failure):
                if tracing:
                    self.emit("failure-jump", node, "-", "no-match", False)
                return None
            else:
                raise InternalInvariantViolation(f"unknown node {node!r}")

    def loop(self, node: SeqLoop, store: dict[str, Any]) -> Node:
        tracing = self.trace is not None
        v = occ_value(store, node.occ)
        n = list_length(v)
        if n is None or n < node.min_tail:
            if tracing:
                self.emit("loop-iter", node, node.occ, "enter fail", False)
            return node.on_fail
        if tracing:
            self.emit("loop-iter", node, node.occ, f"enter n={n}", True)
        items = to_pylist(v)
        count = n - node.min_tail
        collected: dict[str, list] = {name: [] for name, _ in node.accumulated}
        for i in range(count):
            if tracing:
                self.emit("loop-iter", node, node.elem_root, f"elem {i}")
            result = self.walk(node.body, {node.elem_root.root: items[i]})
            if result is None:
                if tracing:
                    self.emit("loop-iter", node, node.occ, "exit fail", False)
                return node.on_fail
            for name in collected:
                collected[name].append(result.bindings[name])
        for name, occ in node.accumulated:
            store[occ.root] = make_list(collected[name])
        for occ, item in zip(node.tail_occs, items[count:]):
            store[occ.root] = item
        if tracing:
            self.emit("loop-iter", node, node.occ, "exit pass", True)
        return node.next


def run_match(cm: CompiledMatch, scrutinee: Any, env: Env, trace=None, cache_out: list | None = None):
    """Run the automaton on ``scrutinee``; returns Matched or NO_MATCH.

    ``cache_out``, if given, receives the PredCache used for this execution.
    """
    run = _Run(cm, env, trace)
    if cache_out is not None:
        cache_out.append(run.cache)
    result = run.walk(cm.automaton.entry, {"x": scrutinee})
    return NO_MATCH if result is None else result


def run_clause_rhs(outcome, cm: CompiledMatch, env: Env) -> Any:
    if not isinstance(outcome, Matched):
        raise MatchFailure("no clause matched")
    return evaluate(cm.clauses[outcome.rhs], env.extend(outcome.bindings))


def execute_match(expr: MatchExpr, env: Env) -> tuple[Expr, Env]:
    """Evaluate a match expression up to its selected right-hand side."""
    cm = expr.compiled
    value = evaluate(expr.scrutinee, env)
    outcome = run_match(cm, value, env, TRACE_SINK.get())
    if not isinstance(outcome, Matched):
        raise MatchFailure(f"no clause matched {display_text(value)}", expr.span)
    return cm.clauses[outcome.rhs], env.extend(outcome.bindings)


def replay_trace(cm: CompiledMatch, events: Sequence[TraceEvent]):
    """Re-walk the automaton using only the recorded decisions.

    Returns the clause index reached, or None for no match.
    """
    nodes = cm.automaton.nodes()
    ids = {id(n): i for i, n in enumerate(nodes)}
    it = iter(events)

    def take(node: Node) -> TraceEvent:
        event = next(it)
        if event.node != ids[id(node)]:
            raise ValueError(f"trace diverges at step {event.step}")
        return event

    def walk(node: Node):
        while True:
            if isinstance(node, (TestType, TestLiteral, TestPred)):
                node = node.on_pass if take(node).passed else node.on_fail
            elif isinstance(node, (AppTransform, Bind)):
                take(node)
                node = node.next
            elif isinstance(node, Join):
                take(node)
                node = node.target
            elif isinstance(node, Success):
                take(node)
                return node.rhs
            elif isinstance(node, Failure):
                take(node)
                return None
            elif isinstance(node, SeqLoop):
                if not take(node).passed:
                    node = node.on_fail
                    continue
                while True:
                    event = take(node)
                    if event.detail.endswith(("exit pass", "exit fail")):
                        node = node.next if event.passed else node.on_fail
                        break
                    walk(node.body)
            else:
                raise InternalInvariantViolation(f"unknown node {node!r}")

    return walk(cm.automaton.entry)


# ---------------------------------------------------------------------------
# naive reference matcher


def naive_match(p: Pattern, v: Any, env: Env) -> dict[str, Any] | None:
    """Direct structural matching; expressions are re-evaluated at every use."""
    match p:
        case VarPat(name):
            return {name: v}
        case WildcardPat():
            return {}
        case LiteralPat(value):
            return {} if values_equal(v, value) else None
        case PredPat(expr=expr):
            return {} if apply_value(evaluate(expr, env), [v]) is not False else None
        case AndPat(parts):
            out: dict[str, Any] = {}
            for q in parts:
                b = naive_match(q, v, env)
                if b is None:
                    return None
                out.update(b)
            return out
        case OrPat(parts):
            for q in parts:
                b = naive_match(q, v, env)
                if b is not None:
                    return b
            return None
        case ConsPat(head, tail):
            if not isinstance(v, Pair):
                return None
            h = naive_match(head, v.head, env)
            if h is None:
                return None
            t = naive_match(tail, v.tail, env)
            if t is None:
                return None
            return {**h, **t}
        case NullPat():
            return {} if v is NIL else None
        case AppPat(expr=expr, pat=pat):
            return naive_match(pat, apply_value(evaluate(expr, env), [v]), env)
        case SeqPat(elem, tail):
            n = list_length(v)
            if n is None or n < len(tail):
                return None
            items = to_pylist(v)
            count = n - len(tail)
            names = bound_vars(elem)
            lists: dict[str, list] = {name: [] for name in names}
            for item in items[:count]:
                b = naive_match(elem, item, env)
                if b is None:
                    return None
                for name in names:
                    lists[name].append(b[name])
            out = {name: make_list(vals) for name, vals in lists.items()}
            for q, item in zip(tail, items[count:]):
                b = naive_match(q, item, env)
                if b is None:
                    return None
                out.update(b)
            return out
        case StructPat(info, fields):
            if not (isinstance(v, StructInstance) and v.tag == info.tag):
                return None
            out = {}
            for q, item in zip(fields, v.fields):
                b = naive_match(q, item, env)
                if b is None:
                    return None
                out.update(b)
            return out
    raise TypeError(f"not a pattern: {p!r}")


def naive_first_match(patterns: Sequence[Pattern], v: Any, env: Env):
    """First-match semantics over ``patterns``; Matched or NO_MATCH."""
    for i, p in enumerate(patterns):
        b = naive_match(p, v, env)
        if b is not None:
            return Matched(i, b)
    return NO_MATCH
