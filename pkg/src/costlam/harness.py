"""Property suites over randomly generated well-typed terms.

Each suite checks one family of guarantees across the compilation
chain — commutation with label erasure, simulation of label traces,
cost certification, type preservation, region safety, structural shape
of compiled code, and the cost-monoid laws.  A suite runs a fixed,
seeded corpus and returns a report listing any failures, each with a
shrunken witness.
"""

from __future__ import annotations

import gc
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import cost as co
from . import printer as pr
from . import regions as rg
from . import semantics as sem
from . import terms as tm
from . import testgen as tg
from . import transform as tr
from . import typesys as ty
from .names import HALT

__all__ = [
    "Failure", "SuiteReport", "SUITES", "run_suite",
    "suite_commutation", "suite_simulation", "suite_cost", "suite_types",
    "suite_regions", "suite_structural", "suite_monoid",
]

DEFAULT_FUEL = 4000


@dataclass
class Failure:
    index: int
    prop: str
    detail: str
    term: str = ""
    shrunk: str = ""

    def doc(self) -> dict:
        out = {"index": self.index, "property": self.prop, "detail": self.detail}
        if self.term:
            out["term"] = self.term
        if self.shrunk:
            out["shrunk"] = self.shrunk
        return out


@dataclass
class SuiteReport:
    name: str
    total: int
    failures: list[Failure]
    elapsed: float

    @property
    def ok(self) -> bool:
        return not self.failures

    def doc(self) -> dict:
        return {
            "suite": self.name,
            "total": self.total,
            "ok": self.ok,
            "failures": [f.doc() for f in self.failures],
            "elapsed_s": round(self.elapsed, 3),
        }


def _typechecks(ctx: dict[str, ty.Type]) -> Callable[[tm.Term], bool]:
    def accept(u: tm.Term) -> bool:
        try:
            ty.typecheck_source(ctx, u)
            return True
        except ty.TypingError:
            return False

    return accept


def _run_corpus(
    name: str,
    count: int,
    seed: int,
    max_size: int,
    check: Callable[[int, tm.Term], "Optional[tuple[str, str] | Failure]"],
    shrink_check: Optional[Callable[[tm.Term], bool]] = None,
    max_failures: int = 5,
) -> SuiteReport:
    """Drive `check` over a generated corpus; shrink the first failures.

    `check` reports a problem as a (property, detail) pair — or a full
    Failure when it carries its own shrunken witness."""
    t0 = time.perf_counter()
    failures: list[Failure] = []
    cfg = tg.GenConfig(seed=seed, max_size=max_size)
    # Terms, types and reports form no reference cycles, so reference
    # counting reclaims everything; the cycle collector only adds long
    # pauses rescanning the memo-pinned heap.  Pause it for the run.
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for i, (term, _) in enumerate(tg.gen_terms(cfg, count)):
            try:
                bad = check(i, term)
            except Exception as e:  # a crash is a failure too
                bad = (type(e).__name__, str(e)[:300])
            if bad is None:
                continue
            if isinstance(bad, Failure):
                bad.index = i
                f = bad
            else:
                prop, detail = bad
                f = Failure(i, prop, detail, pr.show_term(term))
                if shrink_check is not None:
                    small = tg.minimize(
                        term, shrink_check, accept=_typechecks(tg.DEFAULT_CTX)
                    )
                    f.shrunk = pr.show_term(small)
            failures.append(f)
            if len(failures) >= max_failures:
                break
    finally:
        if gc_was_on:
            gc.enable()
    return SuiteReport(name, count, failures, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Commutation with label erasure
# ---------------------------------------------------------------------------


def _commutation_problem(s: tm.Term) -> Optional[tuple[str, str]]:
    """`s` is a well-labelled term; check every erasure square."""
    n1 = tr.cps(s)
    e1 = tr.cps(tm.erase(s))
    if not tm.alpha_eq(tm.erase(n1), e1):
        return ("erase-cps", "erasing after the translation differs from before")
    n2 = tr.to_value_named(n1)
    if not tm.alpha_eq(tr.readback(n2), n1):
        return ("readback", "reading the named form back does not restore the term")
    if not tm.alpha_eq(tm.erase(n2), tr.to_value_named(tm.erase(n1))):
        return ("erase-vn", "naming and erasure do not commute")
    n3 = tr.closure_convert(n2)
    if not tm.alpha_eq(tm.erase(n3), tr.closure_convert(tm.erase(n2))):
        return ("erase-cc", "closure conversion and erasure do not commute")
    p = tr.hoist(n3)
    pe = tr.hoist(tm.erase(n3))
    if not tm.alpha_eq(tm.erase(p.to_term()), pe.to_term()):
        return ("erase-hoist", "hoisting and erasure do not commute")
    return None


def suite_commutation(count: int = 1000, seed: int = 0, max_size: int = 30) -> SuiteReport:
    g = tg.Gen(tg.GenConfig(seed=seed + 991))

    def keeps_discipline(u: tm.Term) -> bool:
        return tr.well_labelled(u) is not tr.WellLabelled.NOT

    def check(i: int, t: tm.Term) -> "Optional[tuple[str, str] | Failure]":
        s = g.sprinkle(t)
        bad = _commutation_problem(s)
        if bad is not None:
            # shrink the labelled witness itself, staying well-labelled
            small = tg.minimize(
                s, lambda u: _commutation_problem(u) is not None, accept=keeps_discipline
            )
            return Failure(i, bad[0], bad[1], pr.show_term(s), pr.show_term(small))
        # the automatic labelling: erasing the compiled labelled program
        # must give the compilation of the bare term
        lab = tr.label_init(t)
        if not tm.alpha_eq(tm.erase(lab), t):
            return ("label-erase", "erasing the labelling does not restore the term")
        a = tr.compile_term(lab).hoisted.to_term()
        b = tr.compile_term(t).hoisted.to_term()
        if not tm.alpha_eq(tm.erase(a), b):
            return (
                "erase-compile",
                "erasing the compiled labelled program differs from compiling the bare term",
            )
        return None

    return _run_corpus("commutation", count, seed, max_size, check)


# ---------------------------------------------------------------------------
# Simulation of label traces
# ---------------------------------------------------------------------------


def _gap_profile(emissions) -> tuple[tuple[str, ...], list[int]]:
    """Split a per-step emission record into (labels, silent-gap lengths);
    the gap list has one more entry than the labels."""
    labels: list[str] = []
    gaps: list[int] = []
    run = 0
    for e in emissions:
        if e is None:
            run += 1
        else:
            labels.append(e)
            gaps.append(run)
            run = 0
    gaps.append(run)
    return tuple(labels), gaps


def _check_cps_weak(s: tm.Term, fuel: int = DEFAULT_FUEL) -> Optional[str]:
    """Source steps of `s` against the translated term's steps: same
    labels in order, no extra silent work, and the final halt call is
    the translation of the final source value."""
    src = sem.eval_trace(s, calculus="source", fuel=fuel, record=True)
    if src.status is not sem.Status.VALUE:
        return f"source run ended {src.status.name}"
    n1 = tr.cps(s)
    run = sem.eval_trace(n1, calculus="cps", fuel=fuel, record=True)
    if not (run.status is sem.Status.STUCK and sem.is_halt_state(run.final)):
        return f"translated run ended {run.status.name} away from the halt call"
    la, ga = _gap_profile(src.emissions)
    lb, gb = _gap_profile(run.emissions)
    if la != lb:
        return f"label traces differ: {la} vs {lb}"
    # Silent work stays linear: each source step pays for at most two
    # translated steps (the call itself and the continuation return), so
    # the running totals compared at every label event stay within 2x+2.
    ca = cb = 0
    for i, (x, y) in enumerate(zip(ga, gb)):
        ca, cb = ca + x, cb + y
        if cb > 2 * ca + 2:
            return f"by label event {i} the translation took {cb} silent steps against {ca}"
    expected = tr.cps(src.final)
    if not tm.alpha_eq(run.final, expected):
        return "final halt call is not the translation of the final value"
    return None


def _check_vn_lockstep(n1: tm.Term, fuel: int = DEFAULT_FUEL) -> Optional[str]:
    """Every step of the value-named machine reads back to exactly one
    step of the translated term, emitting the same label."""
    n2 = tr.to_value_named(n1)
    t = tm.rename_bound(n2, sem._supply_avoiding(n2))
    prev = tr.readback(t)
    if not tm.alpha_eq(prev, n1):
        return "readback of the named form differs from its origin"
    for i in range(fuel):
        r = sem.step_vn(t)
        if isinstance(r, sem.Stuck):
            return None
        nxt = tr.readback(r.term)
        c = sem.step_cps(prev)
        if isinstance(c, sem.Stuck):
            return f"step {i}: the named machine moves but the read-back term is stuck"
        if c.label != r.label:
            return f"step {i}: labels differ ({r.label} vs {c.label})"
        if not tm.alpha_eq(c.term, nxt):
            return f"step {i}: readback does not track the step"
        t, prev = r.term, nxt
    return "fuel exhausted"


def _max_env(t: tm.Term) -> int:
    """Largest number of free variables over any function subterm — the
    size of the biggest environment closure conversion will build."""
    out = 0
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, tm.Lam):
            out = max(out, len(tm.fv_ordered(u)))
        stack.extend(tm.children(u))
    return out


def _check_cc_weak(n2: tm.Term, fuel: int = DEFAULT_FUEL) -> Optional[str]:
    """Closure-converted code emits the same labels, with bounded extra
    silent steps for environment packing and unpacking."""
    a = sem.eval_trace(n2, calculus="vn", fuel=fuel, record=True)
    n3 = tr.closure_convert(n2)
    b = sem.eval_trace(n3, calculus="vn", fuel=fuel, record=True)
    if a.status is sem.Status.FUEL or b.status is sem.Status.FUEL:
        return "fuel exhausted"
    if not sem.is_halt_state(a.final):
        return f"named run ended {a.status.name} away from the halt call"
    if not sem.is_halt_state(b.final):
        return f"converted run ended {b.status.name} away from the halt call"
    la, ga = _gap_profile(a.emissions)
    lb, gb = _gap_profile(b.emissions)
    if la != lb:
        return f"label traces differ: {la} vs {lb}"
    # Each call costs two extra projections (code and environment) plus
    # one projection per captured variable on entry, so the silent totals
    # stay within a linear envelope sized by the largest environment.
    env = _max_env(n2)
    ca = cb = 0
    for i, (x, y) in enumerate(zip(ga, gb)):
        ca, cb = ca + x, cb + y
        if cb > (3 + env) * ca + 6:
            return (
                f"by label event {i} the converted run took {cb} silent steps "
                f"against {ca} (largest environment {env})"
            )
    return None


def suite_simulation(count: int = 1000, seed: int = 0, max_size: int = 30) -> SuiteReport:
    g = tg.Gen(tg.GenConfig(seed=seed + 992))

    def check(i: int, t: tm.Term) -> Optional[tuple[str, str]]:
        s = g.sprinkle(t)
        bad = _check_cps_weak(s)
        if bad is not None:
            return ("cps-simulation", bad)
        n1 = tr.cps(s)
        bad = _check_vn_lockstep(n1)
        if bad is not None:
            return ("vn-lockstep", bad)
        bad = _check_cc_weak(tr.to_value_named(n1))
        if bad is not None:
            return ("cc-simulation", bad)
        # end to end: the labelled source run and the compiled run agree
        lab = tr.label_init(t)
        src = sem.eval_trace(lab, calculus="source", fuel=DEFAULT_FUEL)
        if src.status is not sem.Status.VALUE:
            return ("end-to-end", f"source run ended {src.status.name}")
        p = tr.compile_term(lab).hoisted
        comp = sem.eval_trace(p.to_term(), calculus="vn", fuel=DEFAULT_FUEL)
        if comp.status is sem.Status.FUEL:
            return ("end-to-end", "compiled run exhausted fuel")
        if not sem.is_halt_state(comp.final):
            return ("end-to-end", "compiled run stuck away from the halt call")
        if src.labels != comp.labels:
            return ("end-to-end", f"traces differ: {src.labels} vs {comp.labels}")
        return None

    return _run_corpus("simulation", count, seed, max_size, check)


# ---------------------------------------------------------------------------
# Cost certification
# ---------------------------------------------------------------------------


def suite_cost(count: int = 500, seed: int = 0, max_size: int = 30) -> SuiteReport:
    def check(i: int, t: tm.Term) -> Optional[tuple[str, str]]:
        rep = co.certify_cost(t, fuel=DEFAULT_FUEL)
        if rep.verdict is not co.Verdict.PASS:
            return ("certify", f"{rep.verdict.name}: {rep.detail}")
        lab = tr.label_init(t)
        prog = co.emit_rtl(tr.compile_term(lab).hoisted)
        sound = co.check_sound(prog)
        if not sound.ok:
            return ("sound", f"label-free cycle through {sound.cycle}")
        precise = co.check_precise(prog)
        if not precise.ok:
            return (
                "precise",
                f"label {precise.label} spans {precise.shortest}..{precise.longest}",
            )
        return None

    def shrink_check(u: tm.Term) -> bool:
        return co.certify_cost(u, fuel=DEFAULT_FUEL).verdict is not co.Verdict.PASS

    return _run_corpus("cost", count, seed, max_size, check, shrink_check)


# ---------------------------------------------------------------------------
# Type preservation and subject reduction
# ---------------------------------------------------------------------------


def suite_types(
    count: int = 500, seed: int = 0, max_size: int = 30, sr_steps: int = 32
) -> SuiteReport:
    ctx = tg.DEFAULT_CTX

    def check(i: int, t: tm.Term) -> Optional[tuple[str, str]]:
        lab = tr.label_init(t)
        reps = {}
        for opt_halt in (False, True):
            rep = ty.check_type_preservation(ctx, lab, opt_halt=opt_halt)
            if not rep.ok:
                cfg = "bare-halt" if opt_halt else "packed-halt"
                return ("preservation", f"[{cfg}] stage {rep.stage}: {rep.detail[:200]}")
            reps[opt_halt] = rep
        # subject reduction at every stage, reusing the checked pipelines
        sr = ty.check_subject_reduction(ctx, lab, "source", max_steps=sr_steps)
        if not sr.ok:
            return ("subject-reduction", f"source: {sr.detail[:200]}")
        ctx1, n1 = reps[False].stages["cps"]
        sr = ty.check_subject_reduction(ctx1, n1, "cps", max_steps=sr_steps)
        if not sr.ok:
            return ("subject-reduction", f"cps: {sr.detail[:200]}")
        _, n2 = reps[False].stages["vn"]
        sr = ty.check_subject_reduction(ctx1, n2, "vn", max_steps=sr_steps)
        if not sr.ok:
            return ("subject-reduction", f"vn: {sr.detail[:200]}")
        for opt_halt in (False, True):
            cfg = "bare-halt" if opt_halt else "packed-halt"
            ctx3, n3 = reps[opt_halt].stages["cc"]
            sr = ty.check_subject_reduction(ctx3, n3, "vn", max_steps=sr_steps)
            if not sr.ok:
                return ("subject-reduction", f"cc[{cfg}]: {sr.detail[:200]}")
            _, p = reps[opt_halt].stages["hoist"]
            sr = ty.check_subject_reduction(ctx3, p.to_term(), "vn", max_steps=sr_steps)
            if not sr.ok:
                return ("subject-reduction", f"hoist[{cfg}]: {sr.detail[:200]}")
        return None

    def shrink_check(u: tm.Term) -> bool:
        lab = tr.label_init(u)
        return not (
            ty.check_type_preservation(ctx, lab, opt_halt=False).ok
            and ty.check_type_preservation(ctx, lab, opt_halt=True).ok
        )

    return _run_corpus("types", count, seed, max_size, check, shrink_check)


# ---------------------------------------------------------------------------
# Region safety
# ---------------------------------------------------------------------------


def _region_context(a: ty.Type) -> dict[str, ty.Type]:
    halt_ty = ty.neg(ty.cmp_type(a))
    return rg.region_enrich_ctx({**tg.DEFAULT_CTX, HALT: halt_ty})


def suite_regions(count: int = 300, seed: int = 0, max_size: int = 30) -> SuiteReport:
    ctx = tg.DEFAULT_CTX

    def check(i: int, t: tm.Term) -> Optional[tuple[str, str]]:
        lab = tr.label_init(t)
        a = ty.typecheck_source(ctx, lab)
        hp = tr.compile_term(lab, ctx=ctx, typed=True, opt_halt=True).hoisted
        p = rg.region_enrich(hp)
        rctx = _region_context(a)
        try:
            rg.effect_check_program(p, rctx)
        except ty.TypingError as e:
            return ("enrich-types", str(e)[:300])
        # erasing the regions recovers the program exactly
        if not tm.alpha_eq(rg.region_erase_program(p).to_term(), hp.to_term()):
            return ("erase-enrich", "region erasure does not undo the enrichment")
        # the enriched program runs without memory faults to completion,
        # with the same label trace as the region-free program
        whole = p.to_term()
        run = rg.reval_trace(whole, fuel=DEFAULT_FUEL)
        if run.status is not rg.RegionStatus.TERMINAL:
            extra = f" ({run.fault.kind.name} on {run.fault.region})" if run.fault else ""
            return ("region-run", f"ended {run.status.name}{extra}")
        plain = sem.eval_trace(hp.to_term(), calculus="vn", fuel=DEFAULT_FUEL)
        if run.labels != plain.labels:
            return ("region-trace", f"traces differ: {run.labels} vs {plain.labels}")
        # the effect judgement survives every step
        state = rg.rrename_bound(whole, rg._vsupply(whole))
        prev_eff = None
        for n in range(DEFAULT_FUEL):
            try:
                eff = rg.effect_check(state, rctx)
            except ty.TypingError as e:
                return ("effect-sr", f"step {n}: {str(e)[:200]}")
            if prev_eff is not None and not eff <= prev_eff:
                return ("effect-sr", f"step {n}: effect grew from {prev_eff} to {eff}")
            prev_eff = eff
            r = rg.step_region(state)
            if isinstance(r, rg.RFault):
                return ("effect-sr", f"step {n}: fault {r.kind.name} on {r.region}")
            if isinstance(r, rg.RStuck):
                break
            state = r.term
        return None

    return _run_corpus("regions", count, seed, max_size, check)


# ---------------------------------------------------------------------------
# Structural checks on compiled code
# ---------------------------------------------------------------------------


def _rewrite_positions(t: tm.Term) -> list[tm.Term]:
    """Every term reachable from `t` by one hoisting rewrite anywhere."""
    out: list[tm.Term] = []

    def go(u: tm.Term, rebuild: Callable[[tm.Term], tm.Term]) -> None:
        m = tr._match_rewrite(u)
        if m is not None:
            out.append(rebuild(m[1]))
        for i, k in enumerate(tm.children(u)):
            go(k, lambda nk, i=i, u=u, rebuild=rebuild: rebuild(tm._replace_child(u, i, nk)))

    go(t, lambda x: x)
    return out


def _random_order_hoist(t: tm.Term, rng: random.Random, fuel: int = 4000) -> tm.Term:
    u = tm.rename_bound(t, tr._hoist_supply(t))
    for _ in range(fuel):
        cands = _rewrite_positions(u)
        if not cands:
            return u
        u = rng.choice(cands)
    raise tr.HoistBlocked("random-order hoisting did not terminate")


def suite_structural(count: int = 1000, seed: int = 0, max_size: int = 30) -> SuiteReport:
    def check(i: int, t: tm.Term) -> Optional[tuple[str, str]]:
        lab = tr.label_init(t)
        n3 = tr.compile_term(lab).cc
        # the size measure strictly decreases along every rewrite
        steps = list(tr.hoist_steps(n3, debug=False))
        for a, b in zip(steps, steps[1:]):
            if not tr.size_measure(b) < tr.size_measure(a):
                return ("measure", "a hoisting step did not decrease the size measure")
        final = steps[-1]
        if _rewrite_positions(final):
            return ("normal-form", "a hoisting redex survives in the normal form")
        # the one-pass normaliser lands on the very same normal form
        if tr.hoist(n3).to_term() != final:
            return ("one-pass", "direct normalisation disagrees with stepping")
        p = tm.HoistProgram.from_term(final)
        if not tr.matches_labelled_program(p):
            return ("shape", "compiled labelled code is off the program grammar")
        # spot-check confluence: random rewrite order, same normal form
        if i % 25 == 0:
            rng = random.Random(seed * 100003 + i)
            alt = _random_order_hoist(n3, rng)
            if not tm.alpha_eq(alt, final):
                return ("confluence", "rewrite orders disagree on the normal form")
        return None

    return _run_corpus("structural", count, seed, max_size, check)


# ---------------------------------------------------------------------------
# Monoid laws and trace additivity
# ---------------------------------------------------------------------------


def suite_monoid(count: int = 10_000, seed: int = 0) -> SuiteReport:
    t0 = time.perf_counter()
    rng = random.Random(seed + 998)
    failures: list[Failure] = []

    def fail(i: int, prop: str, detail: str) -> bool:
        failures.append(Failure(i, prop, detail))
        return len(failures) >= 5

    labels = [f"l{k}" for k in range(8)]
    for i in range(count):
        m = co.NAT
        a, b, c = (rng.randint(0, 10**6) for _ in range(3))
        if m.plus(a, m.plus(b, c)) != m.plus(m.plus(a, b), c):
            if fail(i, "assoc", f"{a},{b},{c}"):
                break
        if m.plus(m.zero, a) != a or m.plus(a, m.zero) != a:
            if fail(i, "identity", str(a)):
                break
        if m.plus(a, b) != m.plus(b, a):
            if fail(i, "comm", f"{a},{b}"):
                break
        # trace additivity: the cost of a concatenated trace is the sum
        table = co.CostTable({lbl: rng.randint(0, 99) for lbl in labels})
        xs = rng.choices(labels, k=rng.randint(0, 6))
        ys = rng.choices(labels, k=rng.randint(0, 6))
        whole = co.costof(xs + ys, table, m)
        split = m.plus(co.costof(xs, table, m), co.costof(ys, table, m))
        if whole != split:
            if fail(i, "additivity", f"{xs}+{ys}: {whole} vs {split}"):
                break
    # the word monoid keeps the same laws (spot check)
    for i in range(500):
        m = co.WORDS
        ws = [tuple(sorted(rng.choices("uvw", k=rng.randint(0, 3)))) for _ in range(3)]
        a, b, c = ws
        if m.plus(a, m.plus(b, c)) != m.plus(m.plus(a, b), c):
            if fail(i, "words-assoc", f"{a},{b},{c}"):
                break
        if m.plus(m.zero, a) != a or m.plus(a, m.zero) != a:
            if fail(i, "words-identity", str(a)):
                break
    return SuiteReport("monoid", count, failures, time.perf_counter() - t0)


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "commutation": suite_commutation,
    "simulation": suite_simulation,
    "cost": suite_cost,
    "types": suite_types,
    "regions": suite_regions,
    "structural": suite_structural,
    "monoid": suite_monoid,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    return SUITES[name](**kwargs)
