"""Random patterns and values for differential tests.

Patterns are produced as surface text so the reader and the frontend are
exercised too. Every predicate and transformer here is total and pure.
"""

from __future__ import annotations

import random
from typing import Any

from pmx.evaluator import Env, base_env
from pmx.patterns import (
    AndPat,
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
    parse_pattern,
    register_struct,
)
from pmx.sexpr import NIL, Pair, StructInstance, make_list, read_one, sym

LITERALS = ["0", "1", "2", "-3", "1.5", "1.0", "'a", "'b", '"s"', "#t", "#f", "'()", "'(1 a)"]
PREDICATES = [
    "number?",
    "symbol?",
    "string?",
    "pair?",
    "null?",
    "boolean?",
    "(lambda (v) (equal? v 1))",
    "(curry equal? 'a)",
]
TRANSFORMERS = [
    "(lambda (v) (cons v 1))",
    "list",
    "number?",
    "(lambda (v) (if (pair? v) (first v) v))",
]
ATOMS: list[Any] = [0, 1, 2, -3, 1.5, 1.0, sym("a"), sym("b"), "s", True, False, NIL]


def make_env() -> tuple[StaticEnv, Env]:
    env = base_env()
    static = register_struct("pt", ["a", "b"], StaticEnv(), env)
    return static, env


class PatternGen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"x{self.counter}"

    def pattern(self, depth: int) -> tuple[str, list[str]]:
        """Surface text of a random linear pattern and the names it binds."""
        rng = self.rng
        if depth <= 0:
            kind = rng.choice(["var", "wild", "lit", "lit", "pred"])
        else:
            kind = rng.choice(
                ["var", "wild", "lit", "pred", "predsub", "and", "or", "cons",
                 "list", "list", "seq", "seq", "app", "struct"]
            )
        if kind == "var":
            name = self.fresh()
            return name, [name]
        if kind == "wild":
            return "_", []
        if kind == "lit":
            return rng.choice(LITERALS), []
        if kind == "pred":
            return f"(? {rng.choice(PREDICATES)})", []
        if kind == "predsub":
            sub, names = self.pattern(depth - 1)
            return f"(? {rng.choice(PREDICATES)} {sub})", names
        if kind == "and":
            a, na = self.pattern(depth - 1)
            b, nb = self.pattern(depth - 1)
            return f"(and {a} {b})", na + nb
        if kind == "or":
            a, na = self.pattern(depth - 1)
            b, nb = self.pattern(depth - 1)
            # pad each branch so both bind the union
            left = f"(and {' '.join(nb)} {a})" if nb else a
            right = f"(and {' '.join(na)} {b})" if na else b
            return f"(or {left} {right})", na + nb
        if kind == "cons":
            a, na = self.pattern(depth - 1)
            b, nb = self.pattern(depth - 1)
            return f"(cons {a} {b})", na + nb
        if kind == "list":
            parts = [self.pattern(depth - 1) for _ in range(rng.randint(0, 3))]
            return "(list" + "".join(" " + p for p, _ in parts) + ")", [n for _, ns in parts for n in ns]
        if kind == "seq":
            before = [self.pattern(depth - 1) for _ in range(rng.randint(0, 1))]
            elem = self.pattern(depth - 1)
            after = [self.pattern(depth - 1) for _ in range(rng.randint(0, 2))]
            parts = [*before, elem]
            text = "(list" + "".join(" " + p for p, _ in parts) + " ..." + "".join(" " + p for p, _ in after) + ")"
            return text, [n for _, ns in [*parts, *after] for n in ns]
        if kind == "app":
            sub, names = self.pattern(depth - 1)
            return f"(app {rng.choice(TRANSFORMERS)} {sub})", names
        a, na = self.pattern(depth - 1)
        b, nb = self.pattern(depth - 1)
        return f"(pt {a} {b})", na + nb


def random_value(rng: random.Random, depth: int, static: StaticEnv) -> Any:
    if depth <= 0 or rng.random() < 0.35:
        return rng.choice(ATOMS)
    roll = rng.random()
    if roll < 0.6:
        return make_list(random_value(rng, depth - 1, static) for _ in range(rng.randint(0, 4)))
    if roll < 0.75:
        return Pair(random_value(rng, depth - 1, static), rng.choice(ATOMS[:-1]))
    info = static.structs["pt"]
    return StructInstance(info.tag, (random_value(rng, depth - 1, static), random_value(rng, depth - 1, static)))


def witness(p: Pattern, rng: random.Random, static: StaticEnv, depth: int = 6) -> Any:
    """A value shaped like ``p``; it often, but not always, matches."""
    match p:
        case LiteralPat(value):
            return value
        case NullPat():
            return NIL
        case AndPat(parts):
            concrete = [q for q in parts if not isinstance(q, (VarPat, WildcardPat, PredPat))]
            return witness(rng.choice(concrete or list(parts)), rng, static, depth)
        case OrPat(parts):
            return witness(rng.choice(parts), rng, static, depth)
        case ConsPat(head, tail):
            return Pair(witness(head, rng, static, depth - 1), witness(tail, rng, static, depth - 1))
        case SeqPat(elem, tail):
            items = [witness(elem, rng, static, depth - 1) for _ in range(rng.randint(0, 4))]
            items += [witness(q, rng, static, depth - 1) for q in tail]
            return make_list(items)
        case StructPat(info, fields):
            return StructInstance(info.tag, tuple(witness(q, rng, static, depth - 1) for q in fields))
    return random_value(rng, min(depth, 2), static)


def random_clauses(rng: random.Random, static: StaticEnv, max_depth: int = 5) -> tuple[list[str], list[Pattern]]:
    texts: list[str] = []
    patterns: list[Pattern] = []
    for _ in range(rng.randint(1, 4)):
        text, _ = PatternGen(rng).pattern(rng.randint(0, max_depth))
        texts.append(text)
        patterns.append(parse_pattern(read_one(text), static))
    return texts, patterns


def random_values(rng: random.Random, patterns: list[Pattern], static: StaticEnv, count: int) -> list[Any]:
    out = []
    for _ in range(count):
        if rng.random() < 0.6:
            out.append(witness(rng.choice(patterns), rng, static))
        else:
            out.append(random_value(rng, 6, static))
    return out
