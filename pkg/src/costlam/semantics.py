"""Small-step semantics for every stage, with label traces.

Each calculus has a step function returning either ``Stepped(label,
term)`` — where ``label`` is None for silent steps — or ``Stuck()``.
Evaluation contexts are never materialised: a single left-to-right
descent finds the redex and rebuilds the term around the contractum.

``eval_trace`` iterates a step function under a fuel bound and collects
the emitted labels.  Running out of fuel is reported as data (status
FUEL), distinct from genuine stuckness; the partial trace is retained.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import terms as tm
from .names import HALT, NameSupply

DEFAULT_FUEL = 100_000


@dataclass(frozen=True)
class Stepped:
    label: Optional[str]
    term: tm.Term


@dataclass(frozen=True)
class Stuck:
    reason: str = ""


StepResult = Stepped | Stuck


class Status(enum.Enum):
    VALUE = "VALUE"
    STUCK = "STUCK"
    FUEL = "FUEL"


@dataclass(frozen=True)
class LabelTrace:
    labels: tuple[str, ...]
    terminated: bool  # False exactly when fuel ran out


@dataclass
class EvalResult:
    labels: tuple[str, ...]
    steps: int
    status: Status
    final: tm.Term
    stuck_reason: str = ""
    # per-step emissions (label or None), kept only when recording
    emissions: Optional[tuple[Optional[str], ...]] = None

    @property
    def trace(self) -> LabelTrace:
        return LabelTrace(self.labels, self.status is not Status.FUEL)

    def doc(self) -> dict:
        return {
            "labels": list(self.labels),
            "steps": self.steps,
            "status": self.status.value,
        }


# ---------------------------------------------------------------------------
# Source calculus
# ---------------------------------------------------------------------------


def step_source(t: tm.Term, plus: Optional[Callable] = None) -> StepResult:
    """One step of the labelled source calculus.

    The redex is the leftmost-innermost one, per the evaluation-context
    grammar: applications, lets, tuples and projections evaluate their
    subterms left to right; a pre-label is itself a redex (emitting its
    label); a post-labelled term evaluates inside first, then emits.

    `plus` supplies the cost-monoid addition for instrumented programs;
    plain programs never reach that rule.
    """
    r = _descend(t, plus)
    if r is None:
        return Stuck("value" if tm.is_value(t) else "no applicable rule")
    return r


def _descend(t: tm.Term, plus) -> Optional[Stepped]:
    if isinstance(t, (tm.Var, tm.Lam, tm.CostLit)):
        return None
    if isinstance(t, tm.App):
        parts = (t.fn,) + t.args
        for i, p in enumerate(parts):
            if not tm.is_value(p):
                r = _descend(p, plus)
                return None if r is None else Stepped(r.label, tm._replace_child(t, i, r.term))
        if isinstance(t.fn, tm.Lam) and len(t.fn.params) == len(t.args):
            return Stepped(None, tm.subst(t.fn.body, dict(zip(t.fn.params, t.args))))
        return None
    if isinstance(t, tm.Let):
        if not tm.is_value(t.bound):
            r = _descend(t.bound, plus)
            return None if r is None else Stepped(r.label, tm.Let(t.var, r.term, t.body))
        return Stepped(None, tm.subst(t.body, {t.var: t.bound}))
    if isinstance(t, tm.Tuple):
        for i, p in enumerate(t.items):
            if not tm.is_value(p):
                r = _descend(p, plus)
                return None if r is None else Stepped(r.label, tm._replace_child(t, i, r.term))
        return None  # a tuple of values is a value
    if isinstance(t, tm.Proj):
        if not tm.is_value(t.term):
            r = _descend(t.term, plus)
            return None if r is None else Stepped(r.label, tm.Proj(t.index, r.term))
        v = t.term
        if isinstance(v, tm.Tuple) and 1 <= t.index <= len(v.items):
            return Stepped(None, v.items[t.index - 1])
        return None
    if isinstance(t, tm.PreLabel):
        return Stepped(t.label, t.term)
    if isinstance(t, tm.PostLabel):
        if tm.is_value(t.term):
            return Stepped(t.label, t.term)
        r = _descend(t.term, plus)
        return None if r is None else Stepped(r.label, tm.PostLabel(r.term, t.label))
    if isinstance(t, tm.CostPlus):
        for i, p in enumerate((t.left, t.right)):
            if not tm.is_value(p):
                r = _descend(p, plus)
                return None if r is None else Stepped(r.label, tm._replace_child(t, i, r.term))
        if plus is not None and isinstance(t.left, tm.CostLit) and isinstance(t.right, tm.CostLit):
            return Stepped(None, tm.CostLit(plus(t.left.value, t.right.value)))
        return None
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Continuation-passing calculus
# ---------------------------------------------------------------------------


def step_cps(t: tm.Term) -> StepResult:
    """One step of the continuation-passing calculus.

    The whole term is the redex: function application, a projection
    fused into its let (so terms stay closed under reduction), or label
    emission.
    """
    if isinstance(t, tm.App):
        if isinstance(t.fn, tm.Lam) and len(t.fn.params) == len(t.args):
            return Stepped(None, tm.subst(t.fn.body, dict(zip(t.fn.params, t.args))))
        return Stuck("application head is not a function of matching arity")
    if isinstance(t, tm.Let) and isinstance(t.bound, tm.Proj):
        src = t.bound.term
        if isinstance(src, tm.Tuple) and 1 <= t.bound.index <= len(src.items):
            return Stepped(None, tm.subst(t.body, {t.var: src.items[t.bound.index - 1]}))
        return Stuck("projection from a non-tuple or out of range")
    if isinstance(t, tm.PreLabel):
        return Stepped(t.label, t.term)
    return Stuck("no applicable rule")


# ---------------------------------------------------------------------------
# Value-named calculus
# ---------------------------------------------------------------------------


def _vn_lookup(entries: list[tuple[str, tm.Term]], name: str) -> Optional[tuple[tm.Term, int]]:
    """Innermost-first lookup in a let prefix; returns (value, index)."""
    for i in range(len(entries) - 1, -1, -1):
        if entries[i][0] == name:
            return entries[i][1], i
    return None


def step_vn(t: tm.Term) -> StepResult:
    """One step of the value-named calculus.

    The term is a prefix of value lets around a redex; variables are
    resolved by looking the name up in the prefix.  Copied function
    bodies have their binders freshened so that all binders stay
    pairwise distinct (the lookup semantics relies on it).
    """
    entries: list[tuple[str, tm.Term]] = []
    rebuild: list[tuple[str, tm.Term]] = []
    cur = t
    while True:
        if isinstance(cur, tm.Let) and isinstance(cur.bound, (tm.Lam, tm.Tuple)):
            if isinstance(cur.bound, tm.Tuple) and not all(isinstance(x, tm.Var) for x in cur.bound.items):
                return Stuck("ill-formed value-named tuple")
            entries.append((cur.var, cur.bound))
            rebuild.append((cur.var, cur.bound))
            cur = cur.body
            continue
        break

    def wrap(tail: tm.Term) -> tm.Term:
        for var, val in reversed(rebuild):
            tail = tm.Let(var, val, tail)
        return tail

    if isinstance(cur, tm.PreLabel):
        return Stepped(cur.label, wrap(cur.term))
    if isinstance(cur, tm.App):
        if not isinstance(cur.fn, tm.Var):
            return Stuck("application head must be a name")
        hit = _vn_lookup(entries, cur.fn.name)
        if hit is None:
            return Stuck(f"unbound name {cur.fn.name}")
        fn, _ = hit
        if not isinstance(fn, tm.Lam) or len(fn.params) != len(cur.args):
            return Stuck("application head is not a function of matching arity")
        supply = _supply_avoiding(t)
        body = tm.rename_bound(fn.body, supply)
        tail = tm.subst(body, dict(zip(fn.params, cur.args)))
        return Stepped(None, wrap(tail))
    if isinstance(cur, tm.Let) and isinstance(cur.bound, tm.Proj):
        src = cur.bound.term
        if not isinstance(src, tm.Var):
            return Stuck("projection source must be a name")
        hit = _vn_lookup(entries, src.name)
        if hit is None:
            return Stuck(f"unbound name {src.name}")
        val, _ = hit
        if not isinstance(val, tm.Tuple) or not 1 <= cur.bound.index <= len(val.items):
            return Stuck("projection from a non-tuple or out of range")
        comp = val.items[cur.bound.index - 1]
        tail = tm.subst(cur.body, {cur.var: comp})
        return Stepped(None, wrap(tail))
    return Stuck("no applicable rule")


def _supply_avoiding(t: tm.Term) -> NameSupply:
    """A supply whose names cannot collide with names in `t`."""
    taken = tm.all_names(t)
    start = 0
    for n in taken:
        if n.startswith("_k") and n[2:].isdigit():
            start = max(start, int(n[2:]) + 1)
    return NameSupply("_k", start)


# ---------------------------------------------------------------------------
# Iterated evaluation
# ---------------------------------------------------------------------------

_STEPPERS: dict[str, Callable[[tm.Term], StepResult]] = {
    "source": step_source,
    "cps": step_cps,
    "vn": step_vn,
}


def eval_trace(
    t: tm.Term,
    calculus: str = "source",
    fuel: int = DEFAULT_FUEL,
    step: Optional[Callable[[tm.Term], StepResult]] = None,
    record: bool = False,
) -> EvalResult:
    """Run `t` to a stop or out of fuel, collecting emitted labels.

    The value-named runner first renames all binders apart, which the
    lookup semantics requires of its inputs.  With ``record=True`` the
    result keeps a per-step emission list for detailed rendering.
    """
    if step is None:
        step = _STEPPERS[calculus]
    if calculus == "vn":
        t = tm.rename_bound(t, _supply_avoiding(t))
    labels: list[str] = []
    emissions: list[Optional[str]] = []
    steps = 0
    while steps < fuel:
        r = step(t)
        if isinstance(r, Stuck):
            status = Status.VALUE if tm.is_value(t) else Status.STUCK
            return EvalResult(
                tuple(labels), steps, status, t, r.reason,
                tuple(emissions) if record else None,
            )
        if r.label is not None:
            labels.append(r.label)
        if record:
            emissions.append(r.label)
        t = r.term
        steps += 1
    return EvalResult(
        tuple(labels), steps, Status.FUEL, t, "",
        tuple(emissions) if record else None,
    )


def is_halt_state(t: tm.Term) -> bool:
    """Whether a term is the conventional final state of compiled code:
    blocked on the reserved free continuation `halt`, under a prefix of
    value lets.  Two blocked shapes arise.  Code that keeps `halt` as a
    bare function calls it directly (`halt @ (v, ...)`); code that treats
    it like every other closure first projects the code pointer out of it
    (`let c = proj 1 halt in ...`) and blocks on that projection."""
    while isinstance(t, tm.Let) and isinstance(t.bound, (tm.Lam, tm.Tuple)):
        t = t.body
    if (
        isinstance(t, tm.Let)
        and isinstance(t.bound, tm.Proj)
        and isinstance(t.bound.term, tm.Var)
        and t.bound.term.name == HALT
    ):
        return True
    return (
        isinstance(t, tm.App)
        and isinstance(t.fn, tm.Var)
        and t.fn.name == HALT
        and all(tm.is_value(a) for a in t.args)
    )


def trace_lines(result: EvalResult) -> list[str]:
    """Line-oriented rendering of a run: one line per step carrying the
    label emitted at that step (or '.' when silent), then the status."""
    if result.emissions is not None:
        lines = [f"{i} {lbl if lbl is not None else '.'}" for i, lbl in enumerate(result.emissions)]
    else:
        lines = [f"{i} {lbl}" for i, lbl in enumerate(result.labels)]
    lines.append(f"status {result.status.value}")
    return lines
