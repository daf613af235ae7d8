"""Macro-by-example matching and instantiation over S-expression data.

Used by rule-based match expanders. A use-pattern is a datum in which
symbols are pattern variables (``_`` matches anything), ``x ...`` matches
zero or more elements, and other atoms match themselves. The head of the
use-pattern is ignored, as with ``syntax-rules``.
"""

from __future__ import annotations

from typing import Any

from .errors import MalformedExpander
from .sexpr import NIL, Pair, Symbol, sym, values_equal

ELLIPSIS = sym("...")
UNDERSCORE = sym("_")


class Seq(list):
    """Bindings of a variable under one level of ellipsis."""


def _split(datum) -> tuple[list, Any]:
    items = []
    while isinstance(datum, Pair):
        items.append(datum.head)
        datum = datum.tail
    return items, datum


def pattern_vars(pattern, depth: int = 0, out: dict[str, int] | None = None) -> dict[str, int]:
    """Map each pattern variable to its ellipsis depth."""
    if out is None:
        out = {}
    if isinstance(pattern, Symbol):
        if pattern not in (ELLIPSIS, UNDERSCORE):
            if pattern.name in out:
                raise MalformedExpander(f"pattern variable {pattern.name} used twice")
            out[pattern.name] = depth
        return out
    if isinstance(pattern, Pair):
        items, tail = _split(pattern)
        for i, item in enumerate(items):
            if item is ELLIPSIS:
                continue
            followed = i + 1 < len(items) and items[i + 1] is ELLIPSIS
            pattern_vars(item, depth + followed, out)
        pattern_vars(tail, depth, out)
    return out


def check_rule(use, template) -> None:
    """Reject rules whose template uses a variable at a shallower depth than bound."""
    if not isinstance(use, Pair):
        raise MalformedExpander("use pattern must be a list")
    _check_ellipses(use)
    if isinstance(use.tail, Pair) and use.tail.head is ELLIPSIS:
        raise MalformedExpander("misplaced ellipsis in use pattern")
    bound = pattern_vars(Pair(UNDERSCORE, use.tail))
    _check_template(template, bound, 0)


def _check_ellipses(pattern):
    if isinstance(pattern, Pair):
        items, tail = _split(pattern)
        count = sum(1 for x in items if x is ELLIPSIS)
        if count > 1:
            raise MalformedExpander("at most one ellipsis per list in a use pattern")
        if count and (items[0] is ELLIPSIS or tail is not NIL):
            raise MalformedExpander("misplaced ellipsis in use pattern")
        for item in items:
            _check_ellipses(item)


def _check_template(template, bound: dict[str, int], depth: int) -> None:
    if isinstance(template, Symbol):
        need = bound.get(template.name)
        if need is not None and need > depth:
            raise MalformedExpander(
                f"{template.name} is bound under {need} ellipses but used under {depth}"
            )
        return
    if isinstance(template, Pair):
        items, tail = _split(template)
        i = 0
        while i < len(items):
            j = i + 1
            while j < len(items) and items[j] is ELLIPSIS:
                j += 1
            if items[i] is not ELLIPSIS:
                _check_template(items[i], bound, depth + (j - i - 1))
            i = j
        _check_template(tail, bound, depth)


def match_template(pattern, datum, bindings: dict[str, Any] | None = None) -> dict[str, Any] | None:
    """Match ``datum`` against a use pattern; None on failure."""
    if bindings is None:
        bindings = {}
    if isinstance(pattern, Symbol):
        if pattern is not UNDERSCORE:
            bindings[pattern.name] = datum
        return bindings
    if isinstance(pattern, Pair):
        p_items, p_tail = _split(pattern)
        d_items, d_tail = _split(datum)
        if ELLIPSIS in p_items:
            k = p_items.index(ELLIPSIS)
            before, repeated, after = p_items[: k - 1], p_items[k - 1], p_items[k + 1 :]
            if d_tail is not NIL or len(d_items) < len(before) + len(after):
                return None
            for p, d in zip(before, d_items):
                if match_template(p, d, bindings) is None:
                    return None
            n_rep = len(d_items) - len(before) - len(after)
            reps = d_items[len(before) : len(before) + n_rep]
            names = pattern_vars(repeated)
            collected = {name: Seq() for name in names}
            for d in reps:
                sub = match_template(repeated, d, {})
                if sub is None:
                    return None
                for name in names:
                    collected[name].append(sub[name])
            bindings.update(collected)
            for p, d in zip(after, d_items[len(before) + n_rep :]):
                if match_template(p, d, bindings) is None:
                    return None
            return bindings
        if len(d_items) < len(p_items):
            return None
        for p, d in zip(p_items, d_items):
            if match_template(p, d, bindings) is None:
                return None
        rest = d_items[len(p_items) :]
        if p_tail is NIL:
            return bindings if not rest and d_tail is NIL else None
        remainder = d_tail
        for item in reversed(rest):
            remainder = Pair(item, remainder)
        return match_template(p_tail, remainder, bindings)
    if pattern is NIL:
        return bindings if datum is NIL else None
    return bindings if values_equal(pattern, datum) else None


def _vars_in(template, bindings) -> list[str]:
    found: list[str] = []
    stack = [template]
    while stack:
        t = stack.pop()
        if isinstance(t, Symbol):
            if t.name in bindings and t.name not in found:
                found.append(t.name)
        elif isinstance(t, Pair):
            stack.append(t.head)
            stack.append(t.tail)
    return found


def instantiate(template, bindings: dict[str, Any]) -> Any:
    if isinstance(template, Symbol):
        if template.name in bindings:
            value = bindings[template.name]
            if isinstance(value, Seq):
                raise MalformedExpander(f"{template.name} needs an ellipsis in the template")
            return value
        return template
    if not isinstance(template, Pair):
        return template
    items, tail = _split(template)
    out: list[Any] = []
    i = 0
    while i < len(items):
        j = i + 1
        while j < len(items) and items[j] is ELLIPSIS:
            j += 1
        depth = j - i - 1
        if depth == 0:
            out.append(instantiate(items[i], bindings))
        else:
            out.extend(_expand_repeated(items[i], bindings, depth))
        i = j
    result = instantiate(tail, bindings)
    for item in reversed(out):
        result = Pair(item, result)
    return result


def _expand_repeated(template, bindings, depth: int) -> list[Any]:
    drivers = [n for n in _vars_in(template, bindings) if isinstance(bindings[n], Seq)]
    if not drivers:
        raise MalformedExpander("ellipsis in template follows no repeated variable")
    lengths = {len(bindings[n]) for n in drivers}
    if len(lengths) != 1:
        raise MalformedExpander("repeated variables have different lengths: " + ", ".join(drivers))
    out: list[Any] = []
    for k in range(lengths.pop()):
        local = dict(bindings)
        for n in drivers:
            local[n] = bindings[n][k]
        # An ellipsis written at the use site is carried through, so a rule like
        # (_ r pats ...) applied to (polar r theta ...) keeps the caller's ellipsis.
        if any(local[n] is ELLIPSIS for n in drivers):
            out.append(ELLIPSIS)
            continue
        if depth == 1:
            out.append(instantiate(template, local))
        else:
            out.extend(_expand_repeated(template, local, depth - 1))
    return out
