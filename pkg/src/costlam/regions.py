"""A region-enriched variant of the value-named program calculus.

Programs allocate regions, store tuples into them, read them back, and
dispose regions explicitly.  The heap is never materialised: the prefix
of value definitions, allocations, and disposals *is* the heap, and
every reduction step checks that this prefix is coherent (allocations
and disposals only touch live regions) and that a projected tuple's
region has not been disposed in the meantime.  Incoherent prefixes stop
execution with a memory fault.

A type and effect system rejects the faulting programs: the effect of a
term over-approximates the regions it may touch, and a region may be
disposed only when the rest of the computation has no effect on it.

`region_enrich` injects a plain program into the enriched calculus by
allocating a single region up front, sharing it with every function,
and never disposing it; `region_erase` is its left inverse.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

from . import semantics as sem
from . import terms as tm
from . import typesys as ty
from .names import NameSupply

__all__ = [
    "RUnit", "RTupleAt", "RProj", "RLam", "RApp", "RLet",
    "RPreLabel", "RNewReg", "RDispose", "RTerm", "RegionProgram",
    "rfree_vars", "rfree_regions", "rsubst_vars", "rsubst_regions",
    "rrename_bound", "ralpha_eq",
    "FaultKind", "RFault", "RStepped", "RStuck", "step_region",
    "RegionStatus", "REvalResult", "reval_trace",
    "coherent", "not_disposed",
    "EffectError", "effect_check", "effect_check_program",
    "region_erase", "region_erase_type", "region_erase_program",
    "region_enrich", "region_enrich_type", "region_enrich_ctx",
]


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RUnit:
    """The empty tuple; stored locally, not in any region."""


@dataclass(frozen=True)
class RTupleAt:
    """A non-empty tuple of names allocated into a region.  With a
    `pack_type` the tuple is unary and hides part of the type."""

    items: tuple[str, ...]
    region: str
    pack_type: Optional[ty.Type] = None

    def __post_init__(self):
        if not self.items:
            raise ValueError("a region-allocated tuple needs at least one component")
        if self.pack_type is not None:
            if len(self.items) != 1:
                raise ValueError("a package holds exactly one tuple")
            if not isinstance(self.pack_type, ty.ExistsAt):
                raise ValueError("a package type must be existential")


@dataclass(frozen=True)
class RProj:
    index: int
    src: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("projection indices start at 1")


@dataclass(frozen=True)
class RLam:
    """A function parametric in regions and values; only ever appears
    let-bound in a program prefix."""

    regions: tuple[str, ...]
    params: tuple[str, ...]
    body: "RTerm"
    param_types: Optional[tuple[ty.Type, ...]] = None

    def __post_init__(self):
        if not self.params:
            raise ValueError("functions take at least one value parameter")
        seen = self.regions + self.params
        if len(set(seen)) != len(seen):
            raise ValueError("parameters must be pairwise distinct")
        if self.param_types is not None and len(self.param_types) != len(self.params):
            raise ValueError("one annotation per value parameter")


@dataclass(frozen=True)
class RApp:
    fn: str
    regions: tuple[str, ...]
    args: tuple[str, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("applications take at least one value argument")


@dataclass(frozen=True)
class RLet:
    var: str
    bound: Union[RUnit, RTupleAt, RProj, RLam]
    body: "RTerm"


@dataclass(frozen=True)
class RPreLabel:
    label: str
    term: "RTerm"


@dataclass(frozen=True)
class RNewReg:
    region: str
    term: "RTerm"


@dataclass(frozen=True)
class RDispose:
    """Disposal is not a binder: the region name refers to an enclosing
    allocation."""

    region: str
    term: "RTerm"


RTerm = Union[RApp, RLet, RPreLabel, RNewReg, RDispose]
RValue = Union[RUnit, RTupleAt, RLam]


@dataclass(frozen=True)
class RegionProgram:
    """Function definitions (with region parameters) around a main term."""

    defs: tuple[tuple[str, RLam], ...]
    main: RTerm

    def to_term(self) -> RTerm:
        t = self.main
        for name, lam in reversed(self.defs):
            t = RLet(name, lam, t)
        return t

    @staticmethod
    def from_term(t: RTerm) -> "RegionProgram":
        defs = []
        while isinstance(t, RLet) and isinstance(t.bound, RLam):
            defs.append((t.var, t.bound))
            t = t.body
        p = RegionProgram(tuple(defs), t)
        p.validate()
        return p

    def validate(self) -> None:
        def no_fun(t: RTerm, where: str) -> None:
            while True:
                if isinstance(t, RLet):
                    if isinstance(t.bound, RLam):
                        raise tm.FragmentError(f"{where}: function definition below the top")
                    t = t.body
                elif isinstance(t, (RPreLabel, RNewReg, RDispose)):
                    t = t.term
                elif isinstance(t, RApp):
                    return
                else:
                    raise tm.FragmentError(f"{where}: not a restricted term")

        for name, lam in self.defs:
            no_fun(lam.body, name)
        no_fun(self.main, "main")


# ---------------------------------------------------------------------------
# Generic operations
# ---------------------------------------------------------------------------


def rfree_vars(t: Union[RTerm, RValue, RProj]) -> frozenset[str]:
    if isinstance(t, RUnit):
        return frozenset()
    if isinstance(t, RTupleAt):
        return frozenset(t.items)
    if isinstance(t, RProj):
        return frozenset({t.src})
    if isinstance(t, RLam):
        return rfree_vars(t.body) - frozenset(t.params)
    if isinstance(t, RApp):
        return frozenset({t.fn, *t.args})
    if isinstance(t, RLet):
        return rfree_vars(t.bound) | (rfree_vars(t.body) - {t.var})
    if isinstance(t, (RPreLabel, RNewReg, RDispose)):
        return rfree_vars(t.term)
    raise TypeError(f"not a region term: {t!r}")


def rfree_regions(t: Union[RTerm, RValue, RProj]) -> frozenset[str]:
    if isinstance(t, (RUnit, RProj)):
        return frozenset()
    if isinstance(t, RTupleAt):
        out = frozenset({t.region})
        if t.pack_type is not None:
            out |= ty.frv(t.pack_type)
        return out
    if isinstance(t, RLam):
        out = rfree_regions(t.body)
        if t.param_types is not None:
            for a in t.param_types:
                out |= ty.frv(a)
        return out - frozenset(t.regions)
    if isinstance(t, RApp):
        return frozenset(t.regions)
    if isinstance(t, RLet):
        return rfree_regions(t.bound) | rfree_regions(t.body)
    if isinstance(t, RPreLabel):
        return rfree_regions(t.term)
    if isinstance(t, RNewReg):
        return rfree_regions(t.term) - {t.region}
    if isinstance(t, RDispose):
        return rfree_regions(t.term) | {t.region}
    raise TypeError(f"not a region term: {t!r}")


def rsubst_vars(t, mapping: dict[str, str]):
    """Identifier-for-identifier substitution.  Callers maintain the
    invariant that binders are distinct from everything substituted."""

    def go(t, mapping):
        if not mapping:
            return t
        name = lambda x: mapping.get(x, x)
        if isinstance(t, RUnit):
            return t
        if isinstance(t, RTupleAt):
            return RTupleAt(tuple(name(x) for x in t.items), t.region, t.pack_type)
        if isinstance(t, RProj):
            return RProj(t.index, name(t.src))
        if isinstance(t, RLam):
            inner = {k: v for k, v in mapping.items() if k not in t.params}
            return RLam(t.regions, t.params, go(t.body, inner), t.param_types)
        if isinstance(t, RApp):
            return RApp(name(t.fn), t.regions, tuple(name(a) for a in t.args))
        if isinstance(t, RLet):
            inner = {k: v for k, v in mapping.items() if k != t.var}
            return RLet(t.var, go(t.bound, mapping), go(t.body, inner))
        if isinstance(t, RPreLabel):
            return RPreLabel(t.label, go(t.term, mapping))
        if isinstance(t, RNewReg):
            return RNewReg(t.region, go(t.term, mapping))
        if isinstance(t, RDispose):
            return RDispose(t.region, go(t.term, mapping))
        raise TypeError(f"not a region term: {t!r}")

    return go(t, dict(mapping))


def rsubst_regions(t, mapping: dict[str, str]):
    """Region-for-region substitution in terms and their annotations.
    Callers maintain the invariant that region binders are distinct from
    everything substituted."""

    def sub_ty(a: Optional[ty.Type], mapping) -> Optional[ty.Type]:
        return None if a is None else ty.subst_regions_type(a, mapping)

    def go(t, mapping):
        if not mapping:
            return t
        reg = lambda r: mapping.get(r, r)
        if isinstance(t, RUnit):
            return t
        if isinstance(t, RTupleAt):
            return RTupleAt(t.items, reg(t.region), sub_ty(t.pack_type, mapping))
        if isinstance(t, RProj):
            return t
        if isinstance(t, RLam):
            inner = {k: v for k, v in mapping.items() if k not in t.regions}
            ann = None
            if t.param_types is not None:
                ann = tuple(sub_ty(a, inner) for a in t.param_types)
            return RLam(t.regions, t.params, go(t.body, inner), ann)
        if isinstance(t, RApp):
            return RApp(t.fn, tuple(reg(r) for r in t.regions), t.args)
        if isinstance(t, RLet):
            return RLet(t.var, go(t.bound, mapping), go(t.body, mapping))
        if isinstance(t, RPreLabel):
            return RPreLabel(t.label, go(t.term, mapping))
        if isinstance(t, RNewReg):
            inner = {k: v for k, v in mapping.items() if k != t.region}
            return RNewReg(t.region, go(t.term, inner))
        if isinstance(t, RDispose):
            return RDispose(reg(t.region), go(t.term, mapping))
        raise TypeError(f"not a region term: {t!r}")

    return go(t, dict(mapping))


def rrename_bound(t, vsupply: NameSupply, rsupply: Optional[NameSupply] = None):
    """Freshen every value binder — and every region binder too when a
    region supply is given.  The reduction rules themselves tolerate
    shadowed names (lookup is innermost-first and non-disposal treats a
    shadowing allocation as a fresh start), and the single-region
    enrichment leans on the fixed region name, so region binders are
    left alone by default."""

    def go(t, vmap: dict[str, str], rmap: dict[str, str]):
        reg = lambda r: rmap.get(r, r)
        name = lambda x: vmap.get(x, x)
        if isinstance(t, RUnit):
            return t
        if isinstance(t, RTupleAt):
            pt = None if t.pack_type is None else ty.subst_regions_type(t.pack_type, rmap)
            return RTupleAt(tuple(name(x) for x in t.items), reg(t.region), pt)
        if isinstance(t, RProj):
            return RProj(t.index, name(t.src))
        if isinstance(t, RLam):
            if rsupply is None:
                rmap2 = {k: v for k, v in rmap.items() if k not in t.regions}
                rmap2 = {**rmap2, **{r: r for r in t.regions}}
            else:
                rmap2 = {**rmap, **{r: rsupply.fresh() for r in t.regions}}
            vmap2 = {**vmap, **{p: vsupply.fresh() for p in t.params}}
            ann = None
            if t.param_types is not None:
                ann = tuple(ty.subst_regions_type(a, rmap2) for a in t.param_types)
            return RLam(
                tuple(rmap2[r] for r in t.regions),
                tuple(vmap2[p] for p in t.params),
                go(t.body, vmap2, rmap2), ann,
            )
        if isinstance(t, RApp):
            return RApp(name(t.fn), tuple(reg(r) for r in t.regions), tuple(name(a) for a in t.args))
        if isinstance(t, RLet):
            vmap2 = {**vmap, t.var: vsupply.fresh()}
            return RLet(vmap2[t.var], go(t.bound, vmap, rmap), go(t.body, vmap2, rmap))
        if isinstance(t, RPreLabel):
            return RPreLabel(t.label, go(t.term, vmap, rmap))
        if isinstance(t, RNewReg):
            if rsupply is None:
                rmap2 = {k: v for k, v in rmap.items() if k != t.region}
                return RNewReg(t.region, go(t.term, vmap, rmap2))
            rmap2 = {**rmap, t.region: rsupply.fresh()}
            return RNewReg(rmap2[t.region], go(t.term, vmap, rmap2))
        if isinstance(t, RDispose):
            return RDispose(reg(t.region), go(t.term, vmap, rmap))
        raise TypeError(f"not a region term: {t!r}")

    return go(t, {}, {})


def ralpha_eq(a, b) -> bool:
    """Alpha-equivalence over both value and region binders; package
    annotations are ignored, labels compared by name."""

    def go(a, b, va, vb, ra, rb) -> bool:
        if type(a) is not type(b):
            return False
        v = lambda env, x: env.get(x, ("f", x))
        r = lambda env, x: env.get(x, ("f", x))
        if isinstance(a, RUnit):
            return True
        if isinstance(a, RTupleAt):
            return (
                len(a.items) == len(b.items)
                and all(v(va, x) == v(vb, y) for x, y in zip(a.items, b.items))
                and r(ra, a.region) == r(rb, b.region)
            )
        if isinstance(a, RProj):
            return a.index == b.index and v(va, a.src) == v(vb, b.src)
        if isinstance(a, RLam):
            if len(a.regions) != len(b.regions) or len(a.params) != len(b.params):
                return False
            n = len(ra)
            ra2 = {**ra, **{x: ("b", n + i) for i, x in enumerate(a.regions)}}
            rb2 = {**rb, **{x: ("b", n + i) for i, x in enumerate(b.regions)}}
            m = len(va)
            va2 = {**va, **{x: ("b", m + i) for i, x in enumerate(a.params)}}
            vb2 = {**vb, **{x: ("b", m + i) for i, x in enumerate(b.params)}}
            return go(a.body, b.body, va2, vb2, ra2, rb2)
        if isinstance(a, RApp):
            return (
                v(va, a.fn) == v(vb, b.fn)
                and len(a.regions) == len(b.regions)
                and len(a.args) == len(b.args)
                and all(r(ra, x) == r(rb, y) for x, y in zip(a.regions, b.regions))
                and all(v(va, x) == v(vb, y) for x, y in zip(a.args, b.args))
            )
        if isinstance(a, RLet):
            if not go(a.bound, b.bound, va, vb, ra, rb):
                return False
            m = len(va)
            return go(
                a.body, b.body,
                {**va, a.var: ("b", m)}, {**vb, b.var: ("b", m)}, ra, rb,
            )
        if isinstance(a, RPreLabel):
            return a.label == b.label and go(a.term, b.term, va, vb, ra, rb)
        if isinstance(a, RNewReg):
            n = len(ra)
            return go(
                a.term, b.term, va, vb,
                {**ra, a.region: ("b", n)}, {**rb, b.region: ("b", n)},
            )
        if isinstance(a, RDispose):
            return r(ra, a.region) == r(rb, b.region) and go(a.term, b.term, va, vb, ra, rb)
        raise TypeError(f"not a region term: {a!r}")

    return go(a, b, {}, {}, {}, {})


# ---------------------------------------------------------------------------
# Heap coherence
# ---------------------------------------------------------------------------

# One heap-context entry: a value binding, an allocation, or a disposal,
# in syntactic (outermost-first) order.
_HEntry = Union[RLet, RNewReg, RDispose]


class FaultKind(enum.Enum):
    WRITE_DISPOSED = "write into a dead region"
    ACCESS_DISPOSED = "read from a disposed region"
    DOUBLE_DISPOSE = "disposal of a dead region"


@dataclass(frozen=True)
class RFault:
    kind: FaultKind
    region: str


def coherent(entries: list[_HEntry]) -> Optional[RFault]:
    """Check the heap prefix against the live-region discipline: every
    allocation and every disposal must touch a live region.  Returns the
    first fault or None."""
    live: set[str] = set()
    for e in entries:
        if isinstance(e, RNewReg):
            live.add(e.region)
        elif isinstance(e, RDispose):
            if e.region not in live:
                return RFault(FaultKind.DOUBLE_DISPOSE, e.region)
            live.discard(e.region)
        elif isinstance(e, RLet) and isinstance(e.bound, RTupleAt):
            if e.bound.region not in live:
                return RFault(FaultKind.WRITE_DISPOSED, e.bound.region)
    return None


def not_disposed(region: str, explored: list[_HEntry]) -> bool:
    """Whether `region` survives the part of the heap explored after the
    binding of interest.  A fresh allocation of the same name shadows
    it, so deeper disposals cannot touch the original."""
    for e in explored:
        if isinstance(e, RNewReg) and e.region == region:
            return True
        if isinstance(e, RDispose) and e.region == region:
            return False
    return True


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RStepped:
    label: Optional[str]
    term: RTerm


@dataclass(frozen=True)
class RStuck:
    reason: str = ""


RStepResult = Union[RStepped, RStuck, RFault]


def _decompose(t: RTerm):
    """Split a program into its binding prefix and the innermost term.
    Returns (entries, redex) where entries are RLet-of-value, RNewReg,
    RDispose nodes in syntactic order."""
    entries: list[_HEntry] = []
    while True:
        if isinstance(t, RLet) and isinstance(t.bound, (RUnit, RTupleAt, RLam)):
            entries.append(t)
            t = t.body
        elif isinstance(t, (RNewReg, RDispose)):
            entries.append(t)
            t = t.term
        else:
            return entries, t


def _rebuild(entries: list[_HEntry], tail: RTerm) -> RTerm:
    for e in reversed(entries):
        if isinstance(e, RLet):
            tail = RLet(e.var, e.bound, tail)
        elif isinstance(e, RNewReg):
            tail = RNewReg(e.region, tail)
        else:
            tail = RDispose(e.region, tail)
    return tail


def _lookup(entries: list[_HEntry], name: str):
    """Innermost-first search for a value binding; returns the value and
    the entries explored after it (syntactic order), or None."""
    for i in range(len(entries) - 1, -1, -1):
        e = entries[i]
        if isinstance(e, RLet) and e.var == name:
            return e.bound, entries[i + 1 :]
    return None


def step_region(t: RTerm) -> RStepResult:
    """One step of the region-enriched calculus.  Every rule requires
    the heap prefix to be coherent; projections additionally require the
    tuple's region to be alive at the point of use."""
    entries, redex = _decompose(t)
    fault = coherent(entries)
    if fault is not None:
        return fault

    if isinstance(redex, RPreLabel):
        return RStepped(redex.label, _rebuild(entries, redex.term))

    if isinstance(redex, RApp):
        hit = _lookup(entries, redex.fn)
        if hit is None:
            return RStuck(f"unbound name {redex.fn}")
        fn, _ = hit
        if not isinstance(fn, RLam):
            return RStuck("application head is not a function")
        if len(fn.regions) != len(redex.regions) or len(fn.params) != len(redex.args):
            return RStuck("application arity mismatch")
        body = rrename_bound(fn.body, _vsupply(t))
        body = rsubst_regions(body, dict(zip(fn.regions, redex.regions)))
        body = rsubst_vars(body, dict(zip(fn.params, redex.args)))
        return RStepped(None, _rebuild(entries, body))

    if isinstance(redex, RLet) and isinstance(redex.bound, RProj):
        hit = _lookup(entries, redex.bound.src)
        if hit is None:
            return RStuck(f"unbound name {redex.bound.src}")
        val, explored = hit
        if not isinstance(val, RTupleAt):
            return RStuck("projection from a non-tuple")
        if not 1 <= redex.bound.index <= len(val.items):
            return RStuck("projection out of range")
        if not not_disposed(val.region, explored):
            return RFault(FaultKind.ACCESS_DISPOSED, val.region)
        comp = val.items[redex.bound.index - 1]
        body = rsubst_vars(redex.body, {redex.var: comp})
        return RStepped(None, _rebuild(entries, body))

    return RStuck("no applicable rule")


def _vsupply(t: RTerm) -> NameSupply:
    return _supply_over(_all_rnames(t)[0], "_k")


def _rsupply(t: RTerm) -> NameSupply:
    return _supply_over(_all_rnames(t)[1], "_r")


def _supply_over(taken: Iterable[str], prefix: str) -> NameSupply:
    start = 0
    n = len(prefix)
    for x in taken:
        if x.startswith(prefix) and x[n:].isdigit():
            start = max(start, int(x[n:]) + 1)
    return NameSupply(prefix, start)


def _all_rnames(t) -> tuple[frozenset[str], frozenset[str]]:
    """All identifiers and all region names occurring anywhere."""
    vs: set[str] = set()
    rs: set[str] = set()

    def go(t) -> None:
        if isinstance(t, RUnit):
            return
        if isinstance(t, RTupleAt):
            vs.update(t.items)
            rs.add(t.region)
        elif isinstance(t, RProj):
            vs.add(t.src)
        elif isinstance(t, RLam):
            vs.update(t.params)
            rs.update(t.regions)
            go(t.body)
        elif isinstance(t, RApp):
            vs.add(t.fn)
            vs.update(t.args)
            rs.update(t.regions)
        elif isinstance(t, RLet):
            vs.add(t.var)
            go(t.bound)
            go(t.body)
        elif isinstance(t, RPreLabel):
            go(t.term)
        elif isinstance(t, (RNewReg, RDispose)):
            rs.add(t.region)
            go(t.term)
        else:
            raise TypeError(f"not a region term: {t!r}")

    go(t)
    return frozenset(vs), frozenset(rs)


class RegionStatus(enum.Enum):
    TERMINAL = "TERMINAL"  # blocked on a free name (normal completion)
    STUCK = "STUCK"
    FAULT = "FAULT"
    FUEL = "FUEL"


@dataclass(frozen=True)
class REvalResult:
    labels: tuple[str, ...]
    steps: int
    status: RegionStatus
    final: RTerm
    fault: Optional[RFault] = None
    reason: str = ""

    def doc(self) -> dict:
        out = {"labels": list(self.labels), "steps": self.steps, "status": self.status.value}
        if self.fault is not None:
            out["fault"] = {"kind": self.fault.kind.name, "region": self.fault.region}
        return out


def reval_trace(t: RTerm, fuel: int = sem.DEFAULT_FUEL) -> REvalResult:
    """Run a region program, collecting labels.  A run that blocks on a
    name bound nowhere in the program (the reserved continuation, a free
    parameter) has terminated normally."""
    t = rrename_bound(t, _vsupply(t))
    labels: list[str] = []
    steps = 0
    while steps < fuel:
        r = step_region(t)
        if isinstance(r, RFault):
            return REvalResult(tuple(labels), steps, RegionStatus.FAULT, t, r)
        if isinstance(r, RStuck):
            status = RegionStatus.TERMINAL if _blocked_on_free(t) else RegionStatus.STUCK
            return REvalResult(tuple(labels), steps, status, t, None, r.reason)
        if r.label is not None:
            labels.append(r.label)
        t = r.term
        steps += 1
    return REvalResult(tuple(labels), steps, RegionStatus.FUEL, t)


def _blocked_on_free(t: RTerm) -> bool:
    entries, redex = _decompose(t)
    if isinstance(redex, RApp):
        name = redex.fn
    elif isinstance(redex, RLet) and isinstance(redex.bound, RProj):
        name = redex.bound.src
    else:
        return False
    return _lookup(entries, name) is None


# ---------------------------------------------------------------------------
# Effects
# ---------------------------------------------------------------------------


class EffectError(ty.TypingError):
    """A region is disposed while the rest of the computation still
    needs it, or region parameters are used non-injectively."""


def _value_type(v: RValue, ctx: dict[str, ty.Type], path: str) -> ty.Type:
    if isinstance(v, RUnit):
        return ty.Product(())
    if isinstance(v, RTupleAt):
        item_types = tuple(_lookup_ctx(ctx, x, path) for x in v.items)
        if v.pack_type is None:
            return ty.ProductAt(item_types, v.region)
        pt = v.pack_type
        assert isinstance(pt, ty.ExistsAt)
        if pt.region != v.region:
            raise ty.TypingError(path, "a package allocated in its type's region", v.region)
        witness = ty.match_existential(pt.body, pt.var, item_types[0])
        if witness is None:
            raise ty.TypingError(path, f"a component matching {pt}", item_types[0])
        return pt
    if isinstance(v, RLam):
        if v.param_types is None:
            raise ty.TypingError(path, "annotated parameters", v.params)
        inner = {**ctx, **dict(zip(v.params, v.param_types))}
        eff = _effect(v.body, inner, path + ".body")
        for r in v.regions:
            if r in ty.frv_ctx(ctx):
                raise ty.TypingError(path, f"region parameter {r} not free in the context", r)
        out = ty.ForallArrow(v.regions, v.param_types, frozenset(eff))
        if ty.frv(out) or rfree_regions(v):
            raise ty.TypingError(path, "a region-closed function", v)
        return out
    raise ty.TypingError(path, "a value", v)


def _lookup_ctx(ctx: dict[str, ty.Type], x: str, path: str) -> ty.Type:
    if x not in ctx:
        raise ty.TypingError(path, f"a binding for {x}", "nothing")
    return ctx[x]


def _effect(t: RTerm, ctx: dict[str, ty.Type], path: str) -> frozenset[str]:
    if isinstance(t, RApp):
        b = _lookup_ctx(ctx, t.fn, path)
        if not isinstance(b, ty.ForallArrow):
            raise ty.TypingError(path, "a function type", b)
        if ty.frv(b):
            raise ty.TypingError(path, "a region-closed function type", b)
        if len(t.regions) != len(b.regions) or len(t.args) != len(b.domain):
            raise ty.TypingError(path, "matching arities", t)
        if len(set(t.regions)) != len(t.regions):
            raise EffectError(path, "distinct region arguments", t.regions)
        rsub = dict(zip(b.regions, t.regions))
        for i, (arg, want) in enumerate(zip(t.args, b.domain)):
            got = _lookup_ctx(ctx, arg, path)
            want_i = ty.subst_regions_type(want, rsub)
            if not ty.type_alpha_eq(got, want_i):
                raise ty.TypingError(f"{path}.arg{i}", want_i, got)
        return frozenset(rsub.get(r, r) for r in b.effect)
    if isinstance(t, RLet):
        b = t.bound
        if isinstance(b, RProj):
            src = _lookup_ctx(ctx, b.src, path)
            if isinstance(src, ty.ProductAt):
                if not 1 <= b.index <= len(src.items):
                    raise ty.TypingError(path, "a projection in range", b.index)
                inner = {**ctx, t.var: src.items[b.index - 1]}
                return _effect(t.body, inner, path + ".body") | {src.region}
            if isinstance(src, ty.ExistsAt):
                if b.index != 1:
                    raise ty.TypingError(path, "opening a package via its first slot", b.index)
                if src.var in ty.ftv_ctx(ctx):
                    raise ty.EscapeError(path, f"hidden type {src.var} not free in the context", src)
                inner = {**ctx, t.var: src.body}
                return _effect(t.body, inner, path + ".body") | {src.region}
            raise ty.TypingError(path, "a region tuple or package", src)
        a = _value_type(b, ctx, path + ".bound")
        eff = _effect(t.body, {**ctx, t.var: a}, path + ".body")
        if isinstance(b, RTupleAt):
            eff = eff | {b.region}
        return eff
    if isinstance(t, RPreLabel):
        return _effect(t.term, ctx, path)
    if isinstance(t, RNewReg):
        if t.region in ty.frv_ctx(ctx):
            raise ty.TypingError(path, "a region name not free in the context", t.region)
        return _effect(t.term, ctx, path + ".body") - {t.region}
    if isinstance(t, RDispose):
        eff = _effect(t.term, ctx, path + ".body")
        if t.region in eff:
            raise EffectError(
                path, f"to dispose {t.region} only after its last use", sorted(eff)
            )
        return eff | {t.region}
    raise ty.TypingError(path, "a restricted term", t)


def effect_check(t: RTerm, ctx: dict[str, ty.Type]) -> frozenset[str]:
    """Infer the minimal effect of a term; raise if it is untypable.
    Any superset of the result is admissible."""
    return _effect(t, dict(ctx), "")


def effect_check_program(p: RegionProgram, ctx: dict[str, ty.Type]) -> frozenset[str]:
    env = dict(ctx)
    for name, lam in p.defs:
        env[name] = _value_type(lam, env, name)
    return _effect(p.main, env, "main")


# ---------------------------------------------------------------------------
# Erasure and enrichment
# ---------------------------------------------------------------------------


def region_erase_type(a: ty.Type) -> ty.Type:
    if isinstance(a, ty.TVar):
        return a
    if isinstance(a, ty.ForallArrow):
        return ty.Arrow(tuple(region_erase_type(x) for x in a.domain), ty.R())
    if isinstance(a, ty.ProductAt):
        return ty.Product(tuple(region_erase_type(x) for x in a.items))
    if isinstance(a, ty.ExistsAt):
        return ty.Exists(a.var, region_erase_type(a.body))
    if isinstance(a, ty.Product) and not a.items:
        return a
    raise ValueError(f"not a region type: {a!r}")


def region_erase(t) -> tm.Term:
    """Strip regions from a term: allocation sites become plain tuples,
    region arguments and parameters vanish, and the region management
    operations disappear around their continuations."""
    if isinstance(t, RUnit):
        return tm.Tuple(())
    if isinstance(t, RTupleAt):
        pt = None if t.pack_type is None else region_erase_type(t.pack_type)
        return tm.Tuple(tuple(tm.Var(x) for x in t.items), pt)
    if isinstance(t, RLam):
        ann = None
        if t.param_types is not None:
            ann = tuple(region_erase_type(a) for a in t.param_types)
        return tm.Lam(t.params, region_erase(t.body), ann)
    if isinstance(t, RApp):
        return tm.App(tm.Var(t.fn), tuple(tm.Var(a) for a in t.args))
    if isinstance(t, RLet):
        if isinstance(t.bound, RProj):
            bound: tm.Term = tm.Proj(t.bound.index, tm.Var(t.bound.src))
        else:
            bound = region_erase(t.bound)
        return tm.Let(t.var, bound, region_erase(t.body))
    if isinstance(t, RPreLabel):
        return tm.PreLabel(t.label, region_erase(t.term))
    if isinstance(t, (RNewReg, RDispose)):
        return region_erase(t.term)
    raise TypeError(f"not a region term: {t!r}")


def region_erase_program(p: RegionProgram) -> tm.HoistProgram:
    defs = tuple((name, region_erase(lam)) for name, lam in p.defs)
    return tm.HoistProgram(defs, region_erase(p.main))


DEFAULT_REGION = "r"


def region_enrich_type(a: ty.Type, region: str = DEFAULT_REGION) -> ty.Type:
    if isinstance(a, ty.TVar):
        return a
    if isinstance(a, ty.Arrow):
        if not isinstance(a.codomain, ty.R):
            raise ValueError("only continuation-style arrows can be enriched")
        return ty.ForallArrow(
            (region,),
            tuple(region_enrich_type(x, region) for x in a.domain),
            frozenset({region}),
        )
    if isinstance(a, ty.Product):
        if not a.items:
            return a
        return ty.ProductAt(tuple(region_enrich_type(x, region) for x in a.items), region)
    if isinstance(a, ty.Exists):
        return ty.ExistsAt(a.var, region_enrich_type(a.body, region), region)
    raise ValueError(f"cannot enrich type {a!r}")


def region_enrich_ctx(ctx: dict[str, ty.Type], region: str = DEFAULT_REGION) -> dict[str, ty.Type]:
    return {x: region_enrich_type(a, region) for x, a in ctx.items()}


def region_enrich(p: tm.HoistProgram, region: str = DEFAULT_REGION) -> RegionProgram:
    """Inject a hoisted program into the region calculus with the
    one-region strategy: a single region allocated on entry, passed to
    every function, never disposed.  Erasing it gives back the input."""

    def enrich_term(t: tm.Term) -> RTerm:
        if isinstance(t, tm.App):
            assert isinstance(t.fn, tm.Var)
            return RApp(t.fn.name, (region,), tuple(_name(a) for a in t.args))
        if isinstance(t, tm.Let):
            return RLet(t.var, enrich_bindable(t.bound), enrich_term(t.body))
        if isinstance(t, tm.PreLabel):
            return RPreLabel(t.label, enrich_term(t.term))
        raise tm.FragmentError(f"not a restricted term: {t!r}")

    def enrich_bindable(b: tm.Term):
        if isinstance(b, tm.Tuple):
            if not b.items:
                return RUnit()
            pt = None if b.pack_type is None else region_enrich_type(b.pack_type, region)
            if pt is not None and not isinstance(pt, ty.ExistsAt):
                raise ValueError("package annotation did not enrich to a package type")
            return RTupleAt(tuple(_name(x) for x in b.items), region, pt)
        if isinstance(b, tm.Proj):
            return RProj(b.index, _name(b.term))
        raise tm.FragmentError(f"not bindable in a restricted term: {b!r}")

    def _name(v: tm.Term) -> str:
        assert isinstance(v, tm.Var)
        return v.name

    def enrich_def(lam: tm.Lam) -> RLam:
        ann = None
        if lam.param_types is not None:
            ann = tuple(region_enrich_type(a, region) for a in lam.param_types)
        return RLam((region,), lam.params, enrich_term(lam.body), ann)

    p.validate()
    defs = tuple((name, enrich_def(lam)) for name, lam in p.defs)
    return RegionProgram(defs, RNewReg(region, enrich_term(p.main)))
