"""Cost monoids, source-level instrumentation, the register-transfer
form of hoisted programs, and the label-cost analysis connecting them.

The pipeline: a labelled source term compiles to a program of routines;
each label lands at the head of its own routine, so the static cost of
running that routine once is the cost of the label.  Those per-label
costs feed an instrumentation of the source term which then monitors
its own execution cost, and the three ways of counting — summing the
table over the source trace, running the instrumented term, summing the
table over the compiled run's trace — must agree.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Optional, Union

from . import semantics as sem
from . import terms as tm
from . import transform as tr
from .names import HALT, NameSupply
from .terms import App, CostLit, CostPlus, HoistProgram, Lam, Let, PreLabel, PostLabel, Proj, Term, Tuple, Var

__all__ = [
    "CostMonoid", "NAT", "WORDS", "CostTable", "MissingCost", "costof",
    "instrument", "psi_value", "InstrumentedRun", "eval_instrumented",
    "MakeTuple", "ProjReg", "EmitLabel", "Call", "Routine", "RtlProgram",
    "emit_rtl", "UnsoundLabelling", "costof_table",
    "check_sound", "check_precise", "SoundReport", "PreciseReport",
    "certify_cost", "CertifyReport", "Verdict",
]


# ---------------------------------------------------------------------------
# Cost monoids and tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostMonoid:
    """A commutative monoid of costs: a zero element and an associative,
    commutative binary operation."""

    zero: Any
    plus: Callable[[Any, Any], Any]
    name: str = "monoid"

    def fold(self, parts: Iterable[Any]) -> Any:
        out = self.zero
        for p in parts:
            out = self.plus(out, p)
        return out


NAT = CostMonoid(0, operator.add, "nat")

# multisets of instruction kinds, as sorted tuples — a second monoid for
# exercising monoid-polymorphism in tests
WORDS = CostMonoid((), lambda a, b: tuple(sorted(a + b)), "words")


class MissingCost(KeyError):
    """A label has no entry in the cost table."""


@dataclass(frozen=True)
class CostTable:
    """Finite map from labels to monoid elements."""

    costs: dict[str, Any]

    def __getitem__(self, label: str) -> Any:
        try:
            return self.costs[label]
        except KeyError:
            raise MissingCost(label) from None

    def __contains__(self, label: str) -> bool:
        return label in self.costs

    @staticmethod
    def constant(labels: Iterable[str], value: Any) -> "CostTable":
        return CostTable({l: value for l in labels})


def costof(labels: Iterable[str], table: CostTable, monoid: CostMonoid = NAT) -> Any:
    """Total cost of a label trace: the monoid sum of the per-label costs."""
    return monoid.fold(table[l] for l in labels)


# ---------------------------------------------------------------------------
# Instrumentation
# ---------------------------------------------------------------------------


def _pair_let(supply: NameSupply, pair: Term, k: Callable[[Term, Term], Term]) -> Term:
    """let (m, x) = pair in k(m, x), desugared through projections."""
    p, m, x = supply.fresh_many(3)
    return Let(p, pair, Let(m, Proj(1, Var(p)), Let(x, Proj(2, Var(p)), k(Var(m), Var(x)))))


def instrument(
    t: Term,
    table: CostTable,
    monoid: CostMonoid = NAT,
    supply: Optional[NameSupply] = None,
) -> Term:
    """Turn a labelled term into an unlabelled one computing a pair of
    its own cost and its value.  Every label is replaced by the addition
    of its cost as given by the table."""
    tm.check_plain(t, allow_cost=False)
    if supply is None:
        supply = NameSupply("_i")

    def oplus(parts: list[Term]) -> Term:
        out = parts[0]
        for p in parts[1:]:
            out = CostPlus(out, p)
        return out

    def pair(m: Term, x: Term) -> Term:
        return Tuple((m, x))

    def psi(v: Term) -> Term:
        if isinstance(v, Var):
            return v
        if isinstance(v, Lam):
            return Lam(v.params, go(v.body), v.param_types)
        if isinstance(v, Tuple):
            return Tuple(tuple(psi(x) for x in v.items), v.pack_type)
        raise ValueError(f"not a value: {v!r}")

    def chain(parts: list[Term], k: Callable[[list[Term], list[Term]], Term]) -> Term:
        """let (m_i, x_i) = [[part_i]] in k(ms, xs), left to right."""
        ms: list[Term] = []
        xs: list[Term] = []

        def rec(i: int) -> Term:
            if i == len(parts):
                return k(ms, xs)
            def cont(m: Term, x: Term) -> Term:
                ms.append(m)
                xs.append(x)
                return rec(i + 1)
            return _pair_let(supply, go(parts[i]), cont)

        return rec(0)

    def go(t: Term) -> Term:
        if tm.is_value(t):
            return pair(CostLit(monoid.zero), psi(t))
        if isinstance(t, App):
            def finish(ms: list[Term], xs: list[Term]) -> Term:
                def cont(m_last: Term, x_last: Term) -> Term:
                    return pair(oplus(ms + [m_last]), x_last)
                return _pair_let(supply, App(xs[0], tuple(xs[1:])), cont)
            return chain([t.fn, *t.args], finish)
        if isinstance(t, Tuple):
            return chain(
                list(t.items),
                lambda ms, xs: pair(oplus(ms), Tuple(tuple(xs), t.pack_type)),
            )
        if isinstance(t, Proj):
            return _pair_let(supply, go(t.term), lambda m, x: pair(m, Proj(t.index, x)))
        if isinstance(t, Let):
            # the value part is bound to the original variable
            p, m1 = supply.fresh_many(2)
            inner = _pair_let(
                supply, go(t.body),
                lambda m2, x2: pair(CostPlus(Var(m1), m2), x2),
            )
            return Let(
                p, go(t.bound),
                Let(m1, Proj(1, Var(p)), Let(t.var, Proj(2, Var(p)), inner)),
            )
        if isinstance(t, PreLabel):
            return _pair_let(
                supply, go(t.term),
                lambda m, x: pair(CostPlus(CostLit(table[t.label]), m), x),
            )
        if isinstance(t, PostLabel):
            return _pair_let(
                supply, go(t.term),
                lambda m, x: pair(CostPlus(m, CostLit(table[t.label])), x),
            )
        raise ValueError(f"cannot instrument {t!r}")

    return go(t)


def psi_value(v: Term, table: CostTable, monoid: CostMonoid = NAT) -> Term:
    """The value translation of the instrumentation (function bodies are
    instrumented, labels inside them priced by the table)."""
    inst = instrument(v, table, monoid)
    assert isinstance(inst, Tuple) and len(inst.items) == 2
    return inst.items[1]


@dataclass(frozen=True)
class InstrumentedRun:
    cost: Any
    value: Optional[Term]
    steps: int
    status: sem.Status


def eval_instrumented(
    t: Term,
    monoid: CostMonoid = NAT,
    fuel: int = sem.DEFAULT_FUEL,
) -> InstrumentedRun:
    """Run an instrumented term; on termination the result is a pair of
    the monitored cost and the value."""
    r = sem.eval_trace(t, fuel=fuel, step=lambda u: sem.step_source(u, plus=monoid.plus))
    if r.status is not sem.Status.VALUE:
        return InstrumentedRun(None, None, r.steps, r.status)
    out = r.final
    if not (isinstance(out, Tuple) and len(out.items) == 2 and isinstance(out.items[0], CostLit)):
        raise ValueError("instrumented run did not produce a cost/value pair")
    return InstrumentedRun(out.items[0].value, out.items[1], r.steps, r.status)


# ---------------------------------------------------------------------------
# Register-transfer form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MakeTuple:
    dest: str
    srcs: tuple[str, ...]

    def render(self) -> str:
        return f"{self.dest} <- ({', '.join(self.srcs)})"


@dataclass(frozen=True)
class ProjReg:
    dest: str
    index: int
    src: str

    def render(self) -> str:
        return f"{self.dest} <- proj {self.index} {self.src}"


@dataclass(frozen=True)
class EmitLabel:
    label: str

    def render(self) -> str:
        return f"{self.label}:"


Instr = Union[MakeTuple, ProjReg, EmitLabel]


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"call {self.fn} ({', '.join(self.args)})"


@dataclass(frozen=True)
class Routine:
    name: str
    params: tuple[str, ...]
    body: tuple[Instr, ...]
    call: Call

    def render(self) -> list[str]:
        head = f"routine {self.name} ({', '.join(self.params)})"
        lines = [head]
        for i in self.body:
            pad = "" if isinstance(i, EmitLabel) else "  "
            lines.append(f"{pad}{i.render()}")
        lines.append(f"  {self.call.render()}")
        return lines


MAIN = "_main"


@dataclass(frozen=True)
class RtlProgram:
    """A set of routines; execution starts at the parameterless entry
    routine.  `externals` are names that may be referenced without being
    defined anywhere (the reserved continuation, free variables of the
    source)."""

    routines: tuple[Routine, ...]
    externals: frozenset[str] = frozenset()

    def routine(self, name: str) -> Routine:
        for r in self.routines:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> frozenset[str]:
        return frozenset(r.name for r in self.routines)

    def labels(self) -> tuple[str, ...]:
        out = []
        for r in self.routines:
            for i in r.body:
                if isinstance(i, EmitLabel):
                    out.append(i.label)
        return tuple(out)

    def render(self) -> str:
        lines: list[str] = []
        for r in self.routines:
            lines.extend(r.render())
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"

    def validate(self) -> None:
        known = self.names() | self.externals
        for r in self.routines:
            defined = set(r.params) | known
            for i in r.body:
                if isinstance(i, MakeTuple):
                    missing = [s for s in i.srcs if s not in defined]
                    if missing:
                        raise ValueError(f"{r.name}: undefined register {missing[0]}")
                    defined.add(i.dest)
                elif isinstance(i, ProjReg):
                    if i.src not in defined:
                        raise ValueError(f"{r.name}: undefined register {i.src}")
                    defined.add(i.dest)
            for s in (r.call.fn,) + r.call.args:
                if s not in defined:
                    raise ValueError(f"{r.name}: undefined register {s}")


def _flatten_body(t: Term, where: str) -> tuple[tuple[Instr, ...], Call]:
    instrs: list[Instr] = []
    while True:
        if isinstance(t, PreLabel):
            instrs.append(EmitLabel(t.label))
            t = t.term
        elif isinstance(t, Let):
            b = t.bound
            if isinstance(b, Tuple):
                assert all(isinstance(x, Var) for x in b.items)
                instrs.append(MakeTuple(t.var, tuple(x.name for x in b.items)))
            elif isinstance(b, Proj):
                assert isinstance(b.term, Var)
                instrs.append(ProjReg(t.var, b.index, b.term.name))
            else:
                raise tm.FragmentError(f"{where}: function definition below the top")
            t = t.body
        elif isinstance(t, App):
            assert isinstance(t.fn, Var) and all(isinstance(a, Var) for a in t.args)
            return tuple(instrs), Call(t.fn.name, tuple(a.name for a in t.args))
        else:
            raise tm.FragmentError(f"{where}: not a routine body")


def _normalize_head_label(body: tuple[Instr, ...]) -> tuple[Instr, ...]:
    """When a routine body carries exactly one label, emit it on entry.

    Compiled labelled code places each label after the lets that open
    its routine; emitting it first instead produces the same label
    sequence (no other label intervenes) and lets the whole routine be
    priced on the label.
    """
    lbls = [i for i, x in enumerate(body) if isinstance(x, EmitLabel)]
    if len(lbls) == 1 and lbls[0] > 0:
        i = lbls[0]
        return (body[i],) + body[:i] + body[i + 1 :]
    return body


def emit_rtl(p: HoistProgram) -> RtlProgram:
    """Lower a hoisted program to routines over pseudo-registers.

    The entry routine holds the main term.  A routine body whose single
    label sits after its opening lets is normalized to emit the label on
    entry.
    """
    p.validate()
    main_body, main_call = _flatten_body(p.main, MAIN)
    routines = [Routine(MAIN, (), _normalize_head_label(main_body), main_call)]
    for name, lam in p.defs:
        body, call = _flatten_body(lam.body, name)
        routines.append(Routine(name, lam.params, _normalize_head_label(body), call))
    prog = RtlProgram(tuple(routines), frozenset(tm.free_vars(p.to_term())) | {HALT})
    prog.validate()
    return prog


# ---------------------------------------------------------------------------
# Cost analysis over the control flow graph
# ---------------------------------------------------------------------------


class UnsoundLabelling(ValueError):
    """The control flow graph has a loop that crosses no label, so no
    finite per-label cost covers all executions."""

    def __init__(self, cycle: tuple[str, ...]):
        super().__init__(" -> ".join(cycle))
        self.cycle = cycle


def _successors(prog: RtlProgram, r: Routine) -> list[Routine]:
    """Conservative call targets: a direct call to a routine name goes
    there; a call through a register may reach any routine of matching
    arity; a call to an external name terminates."""
    fn = r.call.fn
    if fn in prog.names():
        return [prog.routine(fn)]
    if fn in r.params or _defined_in_body(r, fn):
        return [s for s in prog.routines if len(s.params) == len(r.call.args)]
    return []


def _defined_in_body(r: Routine, name: str) -> bool:
    return any(
        isinstance(i, (MakeTuple, ProjReg)) and i.dest == name for i in r.body
    )


_COST_PER_INSTR = 1
_COST_PER_CALL = 1


def _segment(prog: RtlProgram, r: Routine, start: int):
    """Instructions executed from position `start` until the next label
    or the terminal call.  Returns (cost, next_label_or_None, succs)
    where succs are (routine, 0) entry points when the call continues."""
    cost = 0
    for i in range(start, len(r.body)):
        instr = r.body[i]
        if isinstance(instr, EmitLabel):
            return cost, instr.label, ()
        cost += _COST_PER_INSTR
    cost += _COST_PER_CALL
    return cost, None, tuple(_successors(prog, r))


def _paths_from(prog: RtlProgram, r: Routine, start: int) -> tuple[int, int]:
    """Longest and shortest instruction count from a position to the
    next label emission or termination, over all CFG paths.  Raises
    UnsoundLabelling on a label-free cycle."""
    memo: dict[tuple[str, int], tuple[int, int]] = {}
    on_stack: list[tuple[str, int]] = []

    def go(r: Routine, start: int) -> tuple[int, int]:
        key = (r.name, start)
        if key in memo:
            return memo[key]
        if key in on_stack:
            i = on_stack.index(key)
            raise UnsoundLabelling(tuple(n for n, _ in on_stack[i:]) + (r.name,))
        on_stack.append(key)
        try:
            cost, label, succs = _segment(prog, r, start)
            if label is not None or not succs:
                out = (cost, cost)
            else:
                folded = [go(s, 0) for s in succs]
                out = (cost + max(h for h, _ in folded), cost + min(l for _, l in folded))
        finally:
            on_stack.pop()
        memo[key] = out
        return out

    return go(r, start)


def costof_table(prog: RtlProgram) -> CostTable:
    """Price every label at the longest instruction path from its
    emission to the next label or termination (a sound upper bound; for
    compiled labelled code it is also exact)."""
    costs: dict[str, int] = {}
    for r in prog.routines:
        for i, instr in enumerate(r.body):
            if isinstance(instr, EmitLabel):
                hi, _ = _paths_from(prog, r, i + 1)
                costs[instr.label] = max(hi, costs.get(instr.label, 0))
    return CostTable(costs)


@dataclass(frozen=True)
class SoundReport:
    ok: bool
    cycle: Optional[tuple[str, ...]] = None

    def doc(self) -> dict:
        return {"sound": self.ok, **({"cycle": list(self.cycle)} if self.cycle else {})}


def check_sound(prog: RtlProgram) -> SoundReport:
    """A labelling is sound when every control loop crosses a label, so
    per-label costs cover all executions."""
    for r in prog.routines:
        starts = [0] + [i + 1 for i, x in enumerate(r.body) if isinstance(x, EmitLabel)]
        for s in starts:
            try:
                _paths_from(prog, r, s)
            except UnsoundLabelling as e:
                return SoundReport(False, e.cycle)
    return SoundReport(True)


@dataclass(frozen=True)
class PreciseReport:
    ok: bool
    label: Optional[str] = None
    longest: Optional[int] = None
    shortest: Optional[int] = None

    def doc(self) -> dict:
        if self.ok:
            return {"precise": True}
        return {
            "precise": False, "label": self.label,
            "longest": self.longest, "shortest": self.shortest,
        }


def check_precise(prog: RtlProgram) -> PreciseReport:
    """A sound labelling is precise when all paths from a label have the
    same cost, so the table is exact rather than an upper bound."""
    seen: dict[str, tuple[int, int]] = {}
    for r in prog.routines:
        for i, instr in enumerate(r.body):
            if isinstance(instr, EmitLabel):
                hi, lo = _paths_from(prog, r, i + 1)
                if instr.label in seen:
                    ph, pl = seen[instr.label]
                    hi, lo = max(hi, ph), min(lo, pl)
                seen[instr.label] = (hi, lo)
    for label, (hi, lo) in seen.items():
        if hi != lo:
            return PreciseReport(False, label, hi, lo)
    return PreciseReport(True)


# ---------------------------------------------------------------------------
# End-to-end certification
# ---------------------------------------------------------------------------


class Verdict(Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class CertifyReport:
    verdict: Verdict
    source_cost: Optional[int]
    monitored_cost: Optional[int]
    compiled_cost: Optional[int]
    sound: SoundReport
    precise: PreciseReport
    table: CostTable
    trace: tuple[str, ...]
    compiled_trace: tuple[str, ...]
    detail: str = ""

    def doc(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "source_cost": self.source_cost,
            "monitored_cost": self.monitored_cost,
            "compiled_cost": self.compiled_cost,
            "sound": self.sound.doc(),
            "precise": self.precise.doc(),
            "table": dict(sorted(self.table.costs.items())),
            "trace": list(self.trace),
            "compiled_trace": list(self.compiled_trace),
            **({"detail": self.detail} if self.detail else {}),
        }


def certify_cost(t: Term, fuel: int = sem.DEFAULT_FUEL) -> CertifyReport:
    """Label an unlabelled term, compile it, price the labels from the
    compiled routines, and certify that the monitored source-level cost
    agrees with the cost of the compiled run.

    PASS requires the three counts to agree and the labelling to check
    sound and precise; a run that exhausts fuel is INCONCLUSIVE.
    """
    labelled = tr.label_init(t)
    chain = tr.compile_term(labelled)
    rtl = emit_rtl(chain.hoisted)
    sound = check_sound(rtl)
    if not sound.ok:
        # the precision walk presupposes soundness (label-free cycles
        # would make its path costs unbounded)
        return CertifyReport(
            Verdict.FAIL, None, None, None, sound, PreciseReport(False),
            CostTable({}), (), (), "labelling unsound",
        )
    precise = check_precise(rtl)
    table = costof_table(rtl)
    # a label whose code the compiler dropped as dead cannot be reached
    # by any run; it is priced at zero so the monitor can still be built
    # (were it ever emitted after all, the trace comparison would fail)
    dead = {lbl: NAT.zero for lbl in tm.labels_of(labelled) if lbl not in table}
    if dead:
        table = CostTable({**dead, **table.costs})

    src = sem.eval_trace(labelled, "source", fuel=fuel)
    comp = sem.eval_trace(chain.hoisted.to_term(), "vn", fuel=fuel)
    inst = eval_instrumented(instrument(labelled, table), fuel=4 * fuel)

    if src.status is sem.Status.FUEL or comp.status is sem.Status.FUEL or inst.status is sem.Status.FUEL:
        return CertifyReport(
            Verdict.INCONCLUSIVE, None, None, None, sound, precise, table,
            src.labels, comp.labels, "ran out of fuel",
        )

    source_cost = costof(src.labels, table)
    compiled_cost = costof(comp.labels, table)
    problems = []
    if src.status is sem.Status.STUCK:
        problems.append("source run stuck")
    if not (comp.status is sem.Status.VALUE or sem.is_halt_state(comp.final)):
        problems.append("compiled run stuck outside the final call")
    if inst.status is not sem.Status.VALUE:
        problems.append("instrumented run stuck")
    if comp.labels != src.labels:
        problems.append("compiled trace differs from source trace")
    if not (source_cost == inst.cost == compiled_cost):
        problems.append("cost counts disagree")
    if not sound.ok:
        problems.append("labelling unsound")
    if not precise.ok:
        problems.append("labelling imprecise")
    verdict = Verdict.PASS if not problems else Verdict.FAIL
    return CertifyReport(
        verdict, source_cost, inst.cost, compiled_cost, sound, precise, table,
        src.labels, comp.labels, "; ".join(problems),
    )
