"""Clause-matrix compilation of match expressions to a backtracking automaton.

Rows are clause alternatives, columns are occurrences (access paths into the
scrutinee). Each cell holds the ordered list of refutable patterns still to be
checked at that occurrence; variables and wildcards are absorbed into the
row's bindings as soon as they surface, ``and`` is flattened in place and
``or`` splits its row into consecutive rows with the same right-hand side.

Compilation repeatedly picks a column, cuts the rows into runs that share the
head constructor in that column, and chains the runs through shared failure
continuations (``Join`` nodes), so no sub-automaton is ever duplicated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Sequence

from .errors import EmptyMatch, InternalInvariantViolation, MalformedExpr, SourceSpan
from .evaluator import DEFAULT_FUEL, Expr, MatchExpr, parse_expr
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
    StaticEnv,
    StructPat,
    VarPat,
    WildcardPat,
    bound_vars,
    parse_pattern,
)
from .sexpr import NIL, Pair, StructTag, display_text, print_value, to_pylist, values_equal


# ---------------------------------------------------------------------------
# occurrences


@dataclass(frozen=True)
class Occ:
    """Access path: a root slot plus head/tail/field steps."""

    root: str
    path: tuple = ()

    def head(self) -> Occ:
        return Occ(self.root, self.path + ("h",))

    def tail(self) -> Occ:
        return Occ(self.root, self.path + ("t",))

    def field(self, i: int) -> Occ:
        return Occ(self.root, self.path + (i,))

    def __str__(self):
        return ".".join([self.root, *(s if isinstance(s, str) else f"f{s}" for s in self.path)])


ROOT = Occ("x")


# ---------------------------------------------------------------------------
# automaton nodes


class Node:
    __slots__ = ()


@dataclass(eq=False)
class TestType(Node):
    occ: Occ
    kind: str  # "pair", "null" or "struct"
    tag: StructTag | None
    on_pass: Node
    on_fail: Node


@dataclass(eq=False)
class TestLiteral(Node):
    occ: Occ
    value: Any
    on_pass: Node
    on_fail: Node


@dataclass(eq=False)
class TestPred(Node):
    eid: int
    occ: Occ
    on_pass: Node
    on_fail: Node


@dataclass(eq=False)
class Bind(Node):
    name: str
    occ: Occ
    next: Node


@dataclass(eq=False)
class AppTransform(Node):
    eid: int
    occ: Occ
    result: Occ
    next: Node


@dataclass(eq=False)
class SeqLoop(Node):
    occ: Occ
    body: Node
    elem_root: Occ
    accumulated: tuple[tuple[str, Occ], ...]
    min_tail: int
    tail_occs: tuple[Occ, ...]
    next: Node
    on_fail: Node


@dataclass(eq=False)
class Success(Node):
    rhs: int


@dataclass(eq=False)
class Failure(Node):
    pass


@dataclass(eq=False)
class Join(Node):
    target: Node


def successors(node: Node) -> list[Node]:
    match node:
        case TestType() | TestLiteral() | TestPred():
            return [node.on_pass, node.on_fail]
        case Bind() | AppTransform():
            return [node.next]
        case SeqLoop():
            return [node.body, node.next, node.on_fail]
        case Join(target):
            return [target]
    return []


@dataclass
class Automaton:
    entry: Node

    def nodes(self) -> list[Node]:
        """Reachable nodes in a fixed depth-first order (pass edge before fail edge)."""
        order: list[Node] = []
        seen: set[int] = set()
        stack = [self.entry]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            order.append(node)
            stack.extend(reversed(successors(node)))
        return order

    def census(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for node in self.nodes():
            counts[type(node).__name__] = counts.get(type(node).__name__, 0) + 1
        return counts


@dataclass
class CompiledMatch:
    scrutinee: Expr | None
    automaton: Automaton
    clauses: tuple[Expr, ...]
    pred_exprs: dict[int, Expr]
    app_exprs: dict[int, Expr]
    var_layout: tuple[tuple[str, ...], ...]
    sources: dict[int, Any] = field(default_factory=dict)
    patterns: tuple[Pattern, ...] = ()


# ---------------------------------------------------------------------------
# clause matrix


@dataclass(frozen=True)
class Row:
    cells: dict[Occ, tuple[Pattern, ...]]
    rhs: int
    bindings: tuple[tuple[str, Occ], ...] = ()

    def cell(self, occ: Occ) -> tuple[Pattern, ...]:
        return self.cells.get(occ, ())

    def is_irrefutable(self) -> bool:
        return not any(self.cells.values())


@dataclass
class ClauseMatrix:
    rows: list[Row]
    columns: list[Occ]

    def width(self) -> int:
        return len(self.columns)


def normalize_row(cells: dict[Occ, tuple[Pattern, ...]], rhs: int, bindings=()) -> list[Row]:
    """Flatten and/var/wildcard in every cell and split the row on ``or``."""
    binds = list(bindings)
    flat: dict[Occ, tuple[Pattern, ...]] = {}
    items = list(cells.items())
    for idx, (occ, pats) in enumerate(items):
        out: list[Pattern] = []
        work = list(reversed(pats))
        while work:
            p = work.pop()
            match p:
                case AndPat(parts):
                    work.extend(reversed(parts))
                case VarPat(name):
                    binds.append((name, occ))
                case WildcardPat():
                    pass
                case LiteralPat(value) if value is NIL:
                    out.append(NullPat())
                case OrPat(parts):
                    rest = tuple(reversed(work))
                    rows: list[Row] = []
                    for branch in parts:
                        split = dict(flat)
                        split[occ] = (*out, branch, *rest)
                        split.update(items[idx + 1 :])
                        rows.extend(normalize_row(split, rhs, tuple(binds)))
                    return rows
                case _:
                    out.append(p)
        flat[occ] = tuple(out)
    return [Row({o: ps for o, ps in flat.items() if ps}, rhs, tuple(binds))]


def build_matrix(clauses: Sequence[tuple[Pattern, int]]) -> ClauseMatrix:
    rows: list[Row] = []
    for pattern, rhs in clauses:
        rows.extend(normalize_row({ROOT: (pattern,)}, rhs))
    return ClauseMatrix(rows, [ROOT])


def _trivial(row: Row, occ: Occ) -> bool:
    return not row.cell(occ)


def column_score(m: ClauseMatrix, col: int) -> int:
    """Length of the run of rows, from row 0, needing a test in column ``col``."""
    occ = m.columns[col]
    n = 0
    for row in m.rows:
        if _trivial(row, occ):
            break
        n += 1
    return n


def select_column(m: ClauseMatrix) -> int:
    best, best_score = 0, -1
    for i in range(m.width()):
        score = column_score(m, i)
        if score > best_score:
            best, best_score = i, score
    return best


def head_key(p: Pattern | None):
    """Constructor identity used for coalescing; None never coalesces."""
    match p:
        case None:
            return ("any",)
        case LiteralPat(value):
            return ("lit", value)
        case NullPat():
            return ("null",)
        case ConsPat():
            return ("pair",)
        case StructPat(info=info):
            return ("struct", info.tag)
    return None


def _same_key(a, b) -> bool:
    if a is None or b is None or a[0] != b[0]:
        return False
    if a[0] == "lit":
        return values_equal(a[1], b[1]) and type(a[1]) is type(b[1])
    return a == b


def coalesce_rows(m: ClauseMatrix, col: int) -> list[list[int]]:
    """Maximal runs of adjacent rows with the same head constructor at ``col``."""
    occ = m.columns[col]
    groups: list[list[int]] = []
    prev = None
    for i, row in enumerate(m.rows):
        cell = row.cell(occ)
        key = head_key(cell[0] if cell else None)
        if groups and _same_key(prev, key):
            groups[-1].append(i)
        else:
            groups.append([i])
        prev = key
    return groups


# ---------------------------------------------------------------------------
# compilation


class _Compiler:
    def __init__(self):
        self.fresh = itertools.count()

    def compile(self, rows: list[Row], columns: list[Occ], fail: Node, facts: frozenset) -> Node:
        if not rows:
            return fail
        first = rows[0]
        if first.is_irrefutable():
            node: Node = Success(first.rhs)
            for name, occ in reversed(first.bindings):
                node = Bind(name, occ, node)
            return node
        columns = [c for c in columns if any(r.cell(c) for r in rows)]
        m = ClauseMatrix(rows, columns)
        col = select_column(m)
        occ = columns[col]
        groups = coalesce_rows(m, col)
        next_fail = fail
        for group in reversed(groups[1:]):
            entry = self.compile_group([rows[i] for i in group], columns, col, next_fail, facts)
            next_fail = Join(entry)
        return self.compile_group([rows[i] for i in groups[0]], columns, col, next_fail, facts)

    def compile_group(self, rows, columns, col, fail, facts) -> Node:
        occ = columns[col]
        cell = rows[0].cell(occ)
        if not cell:
            return self.compile(rows, columns, fail, facts)
        head = cell[0]

        def rest_rows(expand=None) -> list[Row]:
            out: list[Row] = []
            for row in rows:
                cells = dict(row.cells)
                pats = cells.pop(occ)
                if pats[1:]:
                    cells[occ] = pats[1:]
                if expand is not None:
                    for sub_occ, sub_pat in expand(pats[0]):
                        cells[sub_occ] = cells.get(sub_occ, ()) + (sub_pat,)
                out.extend(normalize_row(cells, row.rhs, row.bindings))
            return out

        def widen(new: Sequence[Occ]) -> list[Occ]:
            out = list(columns[: col + 1])
            out.extend(o for o in new if o not in columns)
            out.extend(columns[col + 1 :])
            return out

        match head:
            case LiteralPat(value):
                on_pass = self.compile(rest_rows(), columns, fail, facts)
                return TestLiteral(occ, value, on_pass, fail)
            case NullPat():
                on_pass = self.compile(rest_rows(), columns, fail, facts | {(occ, "null")})
                if (occ, "null") in facts:
                    return on_pass
                return TestType(occ, "null", None, on_pass, fail)
            case ConsPat():
                subs = (occ.head(), occ.tail())
                new_rows = rest_rows(lambda p: ((subs[0], p.head), (subs[1], p.tail)))
                on_pass = self.compile(new_rows, widen(subs), fail, facts | {(occ, "pair")})
                if (occ, "pair") in facts:
                    return on_pass
                return TestType(occ, "pair", None, on_pass, fail)
            case StructPat(info=info):
                subs = tuple(occ.field(i) for i in range(len(info.field_names)))
                new_rows = rest_rows(lambda p: tuple(zip(subs, p.fields)))
                fact = (occ, ("struct", info.tag))
                on_pass = self.compile(new_rows, widen(subs), fail, facts | {fact})
                if fact in facts:
                    return on_pass
                return TestType(occ, "struct", info.tag, on_pass, fail)
            case PredPat(eid=eid):
                self._single(rows, head)
                on_pass = self.compile(rest_rows(), columns, fail, facts)
                return TestPred(eid, occ, on_pass, fail)
            case AppPat(eid=eid):
                self._single(rows, head)
                result = Occ(f"a{next(self.fresh)}")
                new_rows = rest_rows(lambda p: ((result, p.pat),))
                nxt = self.compile(new_rows, widen((result,)), fail, facts)
                return AppTransform(eid, occ, result, nxt)
            case SeqPat():
                self._single(rows, head)
                return self.compile_seq(rows[0], occ, head, columns, col, fail, facts, widen)
        raise InternalInvariantViolation(f"unexpected pattern in matrix: {head!r}")

    @staticmethod
    def _single(rows, head):
        if len(rows) != 1:
            raise InternalInvariantViolation(f"opaque pattern coalesced: {head!r}")

    def compile_seq(self, row, occ, seq: SeqPat, columns, col, fail, facts, widen) -> Node:
        n = next(self.fresh)
        elem_root = Occ(f"i{n}")
        body_rows = normalize_row({elem_root: (seq.elem,)}, 0)
        body = self.compile(body_rows, [elem_root], Failure(), frozenset())
        accumulated = tuple((name, Occ(f"v{n}:{name}")) for name in bound_vars(seq.elem))
        tail_occs = tuple(Occ(f"s{n}:{i}") for i in range(len(seq.tail)))

        cells = dict(row.cells)
        pats = cells.pop(occ)
        if pats[1:]:
            cells[occ] = pats[1:]
        for t_occ, t_pat in zip(tail_occs, seq.tail):
            cells[t_occ] = (t_pat,)
        new_rows = normalize_row(cells, row.rhs, row.bindings + accumulated)
        nxt = self.compile(new_rows, widen(tail_occs), fail, facts)
        return SeqLoop(occ, body, elem_root, accumulated, len(seq.tail), tail_occs, nxt, fail)


def compile_matrix(m: ClauseMatrix) -> Automaton:
    return Automaton(_Compiler().compile(list(m.rows), list(m.columns), Failure(), frozenset()))


# ---------------------------------------------------------------------------
# whole match expressions


def number_exprs(p: Pattern, counter: Iterator[int], preds: dict, apps: dict, sources: dict) -> Pattern:
    """Give every ``?`` and ``app`` expression a unique id, recording it in the tables."""
    rec = lambda q: number_exprs(q, counter, preds, apps, sources)  # noqa: E731
    match p:
        case PredPat(expr=expr, source=source):
            eid = next(counter)
            preds[eid] = expr
            sources[eid] = source
            return replace(p, eid=eid)
        case AppPat(expr=expr, pat=pat, source=source):
            eid = next(counter)
            apps[eid] = expr
            sources[eid] = source
            return replace(p, pat=rec(pat), eid=eid)
        case AndPat(parts):
            return AndPat(tuple(rec(q) for q in parts))
        case OrPat(parts):
            return OrPat(tuple(rec(q) for q in parts))
        case ConsPat(head, tail):
            return ConsPat(rec(head), rec(tail))
        case SeqPat(elem, tail):
            return SeqPat(rec(elem), tuple(rec(t) for t in tail))
        case StructPat(info, fields):
            return StructPat(info, tuple(rec(f) for f in fields))
    return p


def compile_match(scrutinee: Expr | None, clauses: Sequence[tuple[Pattern, Expr]]) -> CompiledMatch:
    if not clauses:
        raise EmptyMatch("match needs at least one clause")
    counter = itertools.count()
    preds: dict[int, Expr] = {}
    apps: dict[int, Expr] = {}
    sources: dict[int, Any] = {}
    numbered = [number_exprs(p, counter, preds, apps, sources) for p, _ in clauses]
    matrix = build_matrix([(p, i) for i, p in enumerate(numbered)])
    return CompiledMatch(
        scrutinee=scrutinee,
        automaton=compile_matrix(matrix),
        clauses=tuple(rhs for _, rhs in clauses),
        pred_exprs=preds,
        app_exprs=apps,
        var_layout=tuple(tuple(bound_vars(p)) for p in numbered),
        sources=sources,
        patterns=tuple(numbered),
    )


def parse_match_form(items: list, span: SourceSpan | None, static: StaticEnv | None, fuel: int = DEFAULT_FUEL) -> MatchExpr:
    """Parse ``(match expr [pat rhs] ...)`` given as a list of its parts."""
    if static is None:
        static = StaticEnv()
    if len(items) < 2:
        raise MalformedExpr("match: missing scrutinee", span)
    scrutinee = parse_expr(items[1], static, fuel)
    clauses = []
    for clause in items[2:]:
        parts = to_pylist(clause) if isinstance(clause, Pair) else []
        if len(parts) != 2:
            raise MalformedExpr("match: each clause must be [pattern expr]", span)
        pattern = parse_pattern(parts[0], static, fuel)
        clauses.append((pattern, parse_expr(parts[1], static, fuel)))
    if not clauses:
        raise EmptyMatch("match needs at least one clause", span)
    return MatchExpr(scrutinee, compile_match(scrutinee, clauses), span)


# ---------------------------------------------------------------------------
# IR dump


def dump_automaton(cm: CompiledMatch) -> str:
    nodes = cm.automaton.nodes()
    ids = {id(node): i for i, node in enumerate(nodes)}
    ref = lambda node: str(ids[id(node)])  # noqa: E731
    lines = []
    for node in nodes:
        head = f"#{ids[id(node)]} {type(node).__name__}"
        match node:
            case TestType(occ, kind, tag, on_pass, on_fail):
                what = f"struct:{tag.name}/{tag.arity}" if kind == "struct" else kind
                lines.append(f"{head} {occ} {what} => pass:{ref(on_pass)} fail:{ref(on_fail)}")
            case TestLiteral(occ, value, on_pass, on_fail):
                lines.append(f"{head} {occ} {print_value(value)} => pass:{ref(on_pass)} fail:{ref(on_fail)}")
            case TestPred(eid, occ, on_pass, on_fail):
                src = display_text(cm.sources.get(eid))
                lines.append(f"{head} {occ} e{eid}:{src} => pass:{ref(on_pass)} fail:{ref(on_fail)}")
            case Bind(name, occ, nxt):
                lines.append(f"{head} {name} {occ} => pass:{ref(nxt)}")
            case AppTransform(eid, occ, result, nxt):
                src = display_text(cm.sources.get(eid))
                lines.append(f"{head} {occ} e{eid}:{src} -> {result} => pass:{ref(nxt)}")
            case SeqLoop():
                acc = " ".join(f"{name}={o}" for name, o in node.accumulated)
                tails = " ".join(str(o) for o in node.tail_occs)
                lines.append(
                    f"{head} {node.occ} body:{ref(node.body)} elem:{node.elem_root} "
                    f"vars:[{acc}] tail:{node.min_tail} [{tails}] "
                    f"=> pass:{ref(node.next)} fail:{ref(node.on_fail)}"
                )
            case Success(rhs):
                lines.append(f"{head} {rhs}")
            case Failure():
                lines.append(head)
            case Join(target):
                lines.append(f"{head} => pass:{ref(target)}")
    return "\n".join(lines) + "\n"
