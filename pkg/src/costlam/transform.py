"""The compilation chain: labelling, CPS, value naming, closure
conversion, hoisting, and their composition.

Every transformation draws fresh names from a counter threaded through
a left-to-right traversal, so outputs are deterministic.  Labels and
binders invented here use the reserved underscore namespace and cannot
collide with parsed user names.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from . import terms as tm
from . import typesys as ty
from .names import HALT, NameSupply
from .terms import (
    App, HoistProgram, Lam, Let, PostLabel, PreLabel, Proj, Term, Tuple, Var,
)

__all__ = [
    "label_init", "Labelling", "well_labelled", "WellLabelled", "erase",
    "cps", "to_value_named", "readback", "closure_convert",
    "hoist", "hoist_steps", "HoistBlocked", "size_measure",
    "compile_term", "CompileResult",
]

erase = tm.erase


# ---------------------------------------------------------------------------
# Initial labelling
# ---------------------------------------------------------------------------


class Labelling(Enum):
    """The two entry modes of the initial labelling: mode 1 is used
    directly under a binder (whose body already starts with a fresh
    label), mode 0 everywhere else."""

    L0 = 0
    L1 = 1


def label_init(t: Term, supply: Optional[NameSupply] = None, mode: Labelling = Labelling.L0) -> Term:
    """Insert a label before every function body and after every
    application that is not already guarded by one.

    The input must be unlabelled; the output is well-labelled (class
    W0 for mode L0, W1 for mode L1) and erases back to the input.
    """
    if tm.labels_of(t):
        raise ValueError("the input of the initial labelling must carry no labels")
    if supply is None:
        supply = NameSupply("_l")

    def go(t: Term, i: Labelling) -> Term:
        if isinstance(t, Var):
            return t
        if isinstance(t, Lam):
            lbl = supply.fresh()
            return Lam(t.params, PreLabel(lbl, go(t.body, Labelling.L1)), t.param_types)
        if isinstance(t, App):
            out = App(go(t.fn, Labelling.L0), tuple(go(a, Labelling.L0) for a in t.args))
            if i is Labelling.L0:
                return PostLabel(out, supply.fresh())
            return out
        if isinstance(t, Let):
            return Let(t.var, go(t.bound, Labelling.L0), go(t.body, i))
        if isinstance(t, Tuple):
            return Tuple(tuple(go(x, Labelling.L0) for x in t.items), t.pack_type)
        if isinstance(t, Proj):
            return Proj(t.index, go(t.term, Labelling.L0))
        raise ValueError(f"cannot label {t!r}")

    return go(t, mode)


# ---------------------------------------------------------------------------
# Well-labelling
# ---------------------------------------------------------------------------


class WellLabelled(Enum):
    NOT = 0
    W0 = 1
    W1 = 2


def well_labelled(t: Term) -> WellLabelled:
    """Classify a labelled term.

    W1 terms guarantee that evaluation never ends on a pending
    post-label; W1 is closed under useful operations and contained in
    W0.  Terms outside W0 may lose the commutation of erasure with the
    continuation-passing translation.
    """

    def go(t: Term) -> WellLabelled:
        if isinstance(t, Var):
            return WellLabelled.W1
        if isinstance(t, Lam):
            return WellLabelled.W1 if go(t.body) is WellLabelled.W1 else WellLabelled.NOT
        if isinstance(t, PostLabel):
            return WellLabelled.W0 if go(t.term) is not WellLabelled.NOT else WellLabelled.NOT
        if isinstance(t, PreLabel):
            return go(t.term)
        if isinstance(t, Let):
            if go(t.bound) is WellLabelled.NOT:
                return WellLabelled.NOT
            return go(t.body)
        if isinstance(t, (App, Tuple)):
            parts = tm.children(t)
            if all(go(p) is not WellLabelled.NOT for p in parts):
                return WellLabelled.W1
            return WellLabelled.NOT
        if isinstance(t, Proj):
            return WellLabelled.W1 if go(t.term) is not WellLabelled.NOT else WellLabelled.NOT
        raise ValueError(f"cannot classify {t!r}")

    return go(t)


def require_well_labelled(t: Term) -> None:
    if well_labelled(t) is WellLabelled.NOT:
        raise ValueError("term is not well-labelled")


# ---------------------------------------------------------------------------
# Continuation-passing translation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ContVar:
    name: str


@dataclass(frozen=True)
class _ContAbs:
    var: str
    var_type: Optional[ty.Type]
    body: Term


_Cont = Union[_ContVar, _ContAbs]


def cps(t: Term, ctx: Optional[dict[str, ty.Type]] = None, supply: Optional[NameSupply] = None) -> Term:
    """Continuation-passing translation with administrative redexes
    pre-computed: translating a value against a known continuation
    substitutes immediately instead of building a beta-redex.

    With a typing context the output carries parameter annotations
    (continuation binders receive the translated type of the term they
    name), enabling the value-named checkers downstream.
    """
    if supply is None:
        supply = NameSupply("_k")
    typed = ctx is not None

    def type_of(m: Term, env) -> Optional[ty.Type]:
        if not typed:
            return None
        return ty.typecheck_source(env, m)

    def psi(v: Term, env) -> Term:
        if isinstance(v, Var):
            return v
        if isinstance(v, Lam):
            k = supply.fresh()
            if typed:
                env2 = {**env, **dict(zip(v.params, v.param_types))}
                cod = type_of(v.body, env2)
                ptypes = tuple(ty.cps_type(a) for a in v.param_types) + (ty.neg(ty.cps_type(cod)),)
            else:
                env2 = env
                ptypes = None
            return Lam(v.params + (k,), colon(v.body, _ContVar(k), env2), ptypes)
        if isinstance(v, Tuple):
            return Tuple(tuple(psi(x, env) for x in v.items), v.pack_type)
        raise ValueError(f"not a value: {v!r}")

    def apply_cont(v: Term, k: _Cont) -> Term:
        # `v` is already translated
        if isinstance(k, _ContVar):
            return App(Var(k.name), (v,))
        return tm.subst(k.body, {k.var: v})

    def reify(k: _Cont) -> Term:
        if isinstance(k, _ContVar):
            return Var(k.name)
        ann = (k.var_type,) if k.var_type is not None else None
        return Lam((k.var,), k.body, ann)

    def colon(m: Term, k: _Cont, env) -> Term:
        if tm.is_value(m):
            return apply_cont(psi(m, env), k)
        if isinstance(m, App):
            parts = (m.fn,) + m.args
            xs = supply.fresh_many(len(parts))
            out = App(Var(xs[0]), tuple(Var(x) for x in xs[1:]) + (reify(k),))
            for x, p in zip(reversed(xs), reversed(parts)):
                out = colon(p, _ContAbs(x, _cps_ann(type_of(p, env)), out), env)
            return out
        if isinstance(m, Let):
            body = colon(m.body, k, {**env, m.var: type_of(m.bound, env)} if typed else env)
            return colon(m.bound, _ContAbs(m.var, _cps_ann(type_of(m.bound, env)), body), env)
        if isinstance(m, Tuple):
            xs = supply.fresh_many(len(m.items))
            out = apply_cont(Tuple(tuple(Var(x) for x in xs), m.pack_type), k)
            for x, p in zip(reversed(xs), reversed(m.items)):
                out = colon(p, _ContAbs(x, _cps_ann(type_of(p, env)), out), env)
            return out
        if isinstance(m, Proj):
            x = supply.fresh()
            y = supply.fresh()
            inner = Let(y, Proj(m.index, Var(x)), apply_cont(Var(y), k))
            return colon(m.term, _ContAbs(x, _cps_ann(type_of(m.term, env)), inner), env)
        if isinstance(m, PreLabel):
            return PreLabel(m.label, colon(m.term, k, env))
        if isinstance(m, PostLabel):
            x = supply.fresh()
            inner = PreLabel(m.label, apply_cont(Var(x), k))
            return colon(m.term, _ContAbs(x, _cps_ann(type_of(m.term, env)), inner), env)
        raise ValueError(f"cannot translate {m!r}")

    env0 = dict(ctx) if typed else None
    x0 = supply.fresh()
    k0 = _ContAbs(x0, _cps_ann(type_of(t, env0)) if typed else None, App(Var(HALT), (Var(x0),)))
    return colon(t, k0, env0)


def _cps_ann(a: Optional[ty.Type]) -> Optional[ty.Type]:
    return None if a is None else ty.cps_type(a)


# ---------------------------------------------------------------------------
# Value naming and readback
# ---------------------------------------------------------------------------


def to_value_named(t: Term, supply: Optional[NameSupply] = None) -> Term:
    """Name every non-variable value occurring in argument position,
    hoisting it to an enclosing let.  Left-to-right, innermost values
    first within each named value."""
    if supply is None:
        supply = NameSupply("_x")

    def name_value(v: Term, y: str, hole: Term) -> Term:
        # E(V, y)[hole]: lets binding y to the named form of V
        if isinstance(v, Lam):
            return Let(y, Lam(v.params, go(v.body), v.param_types), hole)
        if isinstance(v, Tuple):
            for i, item in enumerate(v.items):
                if not isinstance(item, Var):
                    z = supply.fresh()
                    rest = Tuple(v.items[:i] + (Var(z),) + v.items[i + 1 :], v.pack_type)
                    return name_value(item, z, name_value(rest, y, hole))
            return Let(y, v, hole)
        raise ValueError(f"not nameable: {v!r}")

    def go(t: Term) -> Term:
        if isinstance(t, App):
            parts = (t.fn,) + t.args
            for i, p in enumerate(parts):
                if not isinstance(p, Var):
                    y = supply.fresh()
                    return name_value(p, y, go(tm._replace_child(t, i, Var(y))))
            return t
        if isinstance(t, Let):
            assert isinstance(t.bound, Proj)
            if not isinstance(t.bound.term, Var):
                y = supply.fresh()
                return name_value(
                    t.bound.term, y, Let(t.var, Proj(t.bound.index, Var(y)), go(t.body))
                )
            return Let(t.var, t.bound, go(t.body))
        if isinstance(t, PreLabel):
            return PreLabel(t.label, go(t.term))
        raise ValueError(f"not a continuation-passing term: {t!r}")

    tm.check_cps(t)
    return go(t)


def readback(t: Term) -> Term:
    """Inverse of value naming: inline each named value back into its
    use sites.  Projection lets are kept (they are computations)."""
    if isinstance(t, App):
        return t
    if isinstance(t, Let):
        if isinstance(t.bound, Proj):
            return Let(t.var, t.bound, readback(t.body))
        if isinstance(t.bound, Lam):
            v: Term = Lam(t.bound.params, readback_body(t.bound), t.bound.param_types)
        elif isinstance(t.bound, Tuple):
            v = t.bound
        else:
            raise ValueError(f"not a value-named term: {t!r}")
        return tm.subst(readback(t.body), {t.var: v})
    if isinstance(t, PreLabel):
        return PreLabel(t.label, readback(t.term))
    raise ValueError(f"not a value-named term: {t!r}")


def readback_body(lam: Lam) -> Term:
    return readback(lam.body)


# ---------------------------------------------------------------------------
# Closure conversion
# ---------------------------------------------------------------------------


def closure_convert(
    t: Term,
    typed: bool = False,
    opt_halt: bool = False,
    supply: Optional[NameSupply] = None,
    env_types: Optional[dict[str, ty.Type]] = None,
    tvar_supply: Optional[NameSupply] = None,
) -> Term:
    """Represent each function as a pair of closed code and an
    environment tuple holding its free variables.

    In typed mode the pair is additionally wrapped in a unary package
    (an existential hiding the environment type) and every call site
    unwraps it first; parameter annotations are translated and the
    package carries its existential type.  With ``opt_halt`` a call to
    the reserved continuation `halt` is left untouched (it then keeps a
    plain arrow type instead of a packaged one).

    ``env_types`` supplies the types of free variables in typed mode;
    annotations on binders provide the rest.
    """
    if supply is None:
        supply = NameSupply("_c")
    if tvar_supply is None:
        tvar_supply = NameSupply("_t")
    tm.check_vn(t)

    def go(t: Term, env: dict[str, ty.Type]) -> Term:
        if isinstance(t, App):
            assert isinstance(t.fn, Var)
            if typed and opt_halt and t.fn.name == HALT:
                return t
            c, e = supply.fresh(), supply.fresh()
            inner = App(Var(c), (Var(e),) + t.args)
            if typed:
                x1 = supply.fresh()
                return Let(
                    x1, Proj(1, t.fn),
                    Let(c, Proj(1, Var(x1)), Let(e, Proj(2, Var(x1)), inner)),
                )
            return Let(c, Proj(1, t.fn), Let(e, Proj(2, t.fn), inner))
        if isinstance(t, PreLabel):
            return PreLabel(t.label, go(t.term, env))
        if isinstance(t, Let):
            b = t.bound
            if isinstance(b, Lam):
                zs = tm.fv_ordered(b)
                if typed and opt_halt:
                    # halt keeps its functional type, so it is referenced
                    # globally instead of being captured in environments
                    zs = tuple(z for z in zs if z != HALT)
                c, e = supply.fresh(), supply.fresh()
                if typed:
                    if b.param_types is None:
                        raise ty.TypingError("", "annotated parameters", b.params)
                    z_types = tuple(_lookup_type(env, z) for z in zs)
                    env_ty = ty.Product(tuple(ty.cc_type(a, tvar_supply) for a in z_types))
                    code_ptypes: Optional[tuple] = (env_ty,) + tuple(
                        ty.cc_type(a, tvar_supply) for a in b.param_types
                    )
                else:
                    code_ptypes = None
                inner_env = {**env, **(dict(zip(b.params, b.param_types)) if typed and b.param_types else {})}
                code_body = go(b.body, inner_env)
                for i in range(len(zs) - 1, -1, -1):
                    code_body = Let(zs[i], Proj(i + 1, Var(e)), code_body)
                code = Lam((e,) + b.params, code_body, code_ptypes)
                rest_env = {**env, t.var: ty.Arrow(b.param_types, ty.R())} if typed and b.param_types else env
                rest = go(t.body, rest_env)
                if typed:
                    pair = supply.fresh()
                    fn_ty = ty.Arrow(b.param_types, ty.R())
                    pack_ty = ty.cc_type(fn_ty, tvar_supply)
                    return Let(
                        c, code,
                        Let(e, Tuple(tuple(Var(z) for z in zs)),
                            Let(pair, Tuple((Var(c), Var(e))),
                                Let(t.var, Tuple((Var(pair),), pack_ty), rest))),
                    )
                return Let(
                    c, code,
                    Let(e, Tuple(tuple(Var(z) for z in zs)),
                        Let(t.var, Tuple((Var(c), Var(e))), rest)),
                )
            # non-function bindables pass through
            bound = b
            new_env = env
            if typed:
                if isinstance(b, Tuple):
                    if b.pack_type is not None:
                        raise ty.TypingError("", "packages are introduced here, not before", b)
                    new_env = {**env, t.var: ty.Product(tuple(_lookup_type(env, v.name) for v in b.items))}
                elif isinstance(b, Proj):
                    src = _lookup_type(env, b.term.name)
                    if isinstance(src, ty.Product) and 1 <= b.index <= len(src.items):
                        new_env = {**env, t.var: src.items[b.index - 1]}
                    else:
                        new_env = {**env, t.var: src}
            return Let(t.var, bound, go(t.body, new_env))
        raise ValueError(f"not a value-named term: {t!r}")

    def _lookup_type(env: dict[str, ty.Type], name: str) -> ty.Type:
        if typed and name not in env:
            raise ty.TypingError("", "a type for " + name, "nothing")
        return env.get(name)  # type: ignore[return-value]

    return go(t, dict(env_types or {}))


# ---------------------------------------------------------------------------
# Hoisting
# ---------------------------------------------------------------------------


class HoistBlocked(ValueError):
    """No rewrite applies but the term is not yet in program form
    (a non-closed function blocks hoisting)."""


def size_measure(t: Term) -> int:
    """Termination measure for hoisting: strictly decreases at every
    rewrite.  Function bodies count double so that moving a definition
    out of a function or past a let shrinks the measure."""
    if isinstance(t, App):
        return 1
    if isinstance(t, Let):
        if isinstance(t.bound, Lam):
            return 2 * size_measure(t.bound.body) + size_measure(t.body)
        return 2 * size_measure(t.body)
    if isinstance(t, PreLabel):
        return 2 * size_measure(t.term)
    raise ValueError(f"no size measure for {t!r}")


def _is_simple_fun(lam: Lam) -> bool:
    return not tm.has_fundefs(lam.body)


def _match_rewrite(t: Term) -> Optional[tuple[str, Term]]:
    """If a hoisting rewrite applies at the root of `t`, return its name
    and the rewritten term."""
    # moving a simple function definition above a non-function let
    if (
        isinstance(t, Let)
        and not isinstance(t.bound, Lam)
        and isinstance(t.body, Let)
        and isinstance(t.body.bound, Lam)
        and _is_simple_fun(t.body.bound)
        and t.var not in tm.free_vars(t.body.bound)
    ):
        inner = t.body
        return "h1", Let(inner.var, inner.bound, Let(t.var, t.bound, inner.body))
    # moving a simple function definition out of an enclosing function
    if (
        isinstance(t, Let)
        and isinstance(t.bound, Lam)
        and isinstance(t.bound.body, Let)
        and isinstance(t.bound.body.bound, Lam)
        and _is_simple_fun(t.bound.body.bound)
        and not (set(t.bound.params) & tm.free_vars(t.bound.body.bound))
    ):
        outer, inner = t.bound, t.bound.body
        return "h2", Let(
            inner.var, inner.bound,
            Let(t.var, Lam(outer.params, inner.body, outer.param_types), t.body),
        )
    # moving a simple function definition above a label
    if (
        isinstance(t, PreLabel)
        and isinstance(t.term, Let)
        and isinstance(t.term.bound, Lam)
        and _is_simple_fun(t.term.bound)
    ):
        inner = t.term
        return "h3", Let(inner.var, inner.bound, PreLabel(t.label, inner.body))
    return None


def _find_rewrite(t: Term) -> Optional[tuple[str, Term]]:
    """Leftmost-outermost search through hoisting contexts: at each
    node try a root rewrite, then descend into a let-bound function
    body, then the let body, then under a label."""
    hit = _match_rewrite(t)
    if hit is not None:
        return hit
    if isinstance(t, Let):
        if isinstance(t.bound, Lam):
            sub = _find_rewrite(t.bound.body)
            if sub is not None:
                name, new = sub
                return name, Let(t.var, Lam(t.bound.params, new, t.bound.param_types), t.body)
        sub = _find_rewrite(t.body)
        if sub is not None:
            name, new = sub
            return name, Let(t.var, t.bound, new)
        return None
    if isinstance(t, PreLabel):
        sub = _find_rewrite(t.term)
        if sub is not None:
            name, new = sub
            return name, PreLabel(t.label, new)
        return None
    return None


def hoist_steps(t: Term, debug: bool = False):
    """Iterate the hoisting rewrites to their normal form, yielding each
    intermediate term.  In debug mode asserts the size measure strictly
    decreases at every step."""
    tm.check_vn(t)
    t = tm.rename_bound(t, _hoist_supply(t))
    yield t
    while True:
        hit = _find_rewrite(t)
        if hit is None:
            return
        name, new = hit
        if debug:
            before, after = size_measure(t), size_measure(new)
            assert after < before, f"{name} did not decrease the measure ({before} -> {after})"
        t = new
        yield t


def _hoist_supply(t: Term) -> NameSupply:
    taken = tm.all_names(t)
    start = 0
    for n in taken:
        if n.startswith("_h") and n[2:].isdigit():
            start = max(start, int(n[2:]) + 1)
    return NameSupply("_h", start)


def _wrap_defs(defs, tail: Term) -> Term:
    for name, lam in reversed(defs):
        tail = Let(name, lam, tail)
    return tail


def _normalize_defs(t: Term) -> tuple[list[tuple[str, Lam]], Term]:
    """One-pass normal form of the hoisting rewrites.

    Returns the stack of definitions that reach the top of `t` (top
    first) over the remaining tail.  A definition crosses a non-function
    let only when the let's variable is not free in it, crosses a label
    freely, and leaves a function body only when no parameter is free in
    it; in every case it must itself be free of inner definitions.  A
    definition that cannot move blocks everything beneath it, since no
    rewrite reorders two definitions.  The rewrites are confluent, so
    this produces the same term as iterating them one step at a time.
    """
    if isinstance(t, App):
        return [], t
    if isinstance(t, PreLabel):
        stack, tail = _normalize_defs(t.term)
        k = 0
        for _, lam in stack:
            if tm.has_fundefs(lam.body):
                break
            k += 1
        return stack[:k], _wrap_defs(stack[k:], PreLabel(t.label, tail))
    if isinstance(t, Let):
        if isinstance(t.bound, Lam):
            fn = t.bound
            bstack, btail = _normalize_defs(fn.body)
            ps = set(fn.params)
            k = 0
            for _, lam in bstack:
                if tm.has_fundefs(lam.body) or ps & tm.free_vars(lam):
                    break
                k += 1
            new_fn = Lam(fn.params, _wrap_defs(bstack[k:], btail), fn.param_types)
            mstack, mtail = _normalize_defs(t.body)
            return list(bstack[:k]) + [(t.var, new_fn)] + mstack, mtail
        stack, tail = _normalize_defs(t.body)
        k = 0
        for _, lam in stack:
            if tm.has_fundefs(lam.body) or t.var in tm.free_vars(lam):
                break
            k += 1
        return stack[:k], Let(t.var, t.bound, _wrap_defs(stack[k:], tail))
    raise ValueError(f"not a value-named term: {t!r}")


def hoist(t: Term, debug: bool = False) -> HoistProgram:
    """Move all function definitions to the top, producing a program.

    Binders are first renamed apart so the rewrites cannot capture.
    Raises HoistBlocked if the rewrites stop short of program form,
    which can only happen when some function is not closed.  With
    ``debug`` the normal form is found by iterating single rewrites
    (asserting the size measure falls each step) instead of in one pass.
    """
    if debug:
        last = t
        for last in hoist_steps(t, debug=True):
            pass
    else:
        tm.check_vn(t)
        u = tm.rename_bound(t, _hoist_supply(t))
        defs, tail = _normalize_defs(u)
        last = _wrap_defs(defs, tail)
    try:
        return HoistProgram.from_term(last)
    except tm.FragmentError as e:
        raise HoistBlocked(f"hoisting blocked: {e}") from e


# ---------------------------------------------------------------------------
# The composed chain
# ---------------------------------------------------------------------------


@dataclass
class CompileResult:
    """All intermediate forms of one run of the chain."""

    source: Term
    cps: Term
    vn: Term
    cc: Term
    hoisted: HoistProgram

    def stage(self, name: str) -> Union[Term, HoistProgram]:
        return {
            "cps": self.cps, "vn": self.vn, "cc": self.cc, "hoist": self.hoisted,
        }[name]


def compile_term(
    t: Term,
    ctx: Optional[dict[str, ty.Type]] = None,
    typed: bool = False,
    opt_halt: bool = False,
) -> CompileResult:
    """Run the whole chain on `t`, keeping every intermediate form.

    A term that is labelled but not well-labelled still compiles (the
    commutation with erasure is then not guaranteed); a warning is
    issued.
    """
    if tm.labels_of(t) and well_labelled(t) is WellLabelled.NOT:
        warnings.warn("compiling a term that is not well-labelled", stacklevel=2)
    if typed and ctx is None:
        ctx = {}
    n1 = cps(t, ctx=ctx if typed else None)
    n2 = to_value_named(n1)
    env_types = None
    if typed:
        ctx1 = {**ty.cps_ctx(ctx), HALT: ty.neg(ty.cps_type(ty.typecheck_source(ctx, t)))}
        env_types = ctx1
    n3 = closure_convert(n2, typed=typed, opt_halt=opt_halt, env_types=env_types)
    p = hoist(n3)
    return CompileResult(t, n1, n2, n3, p)


# ---------------------------------------------------------------------------
# Shape of compiled labelled programs
# ---------------------------------------------------------------------------


def _is_plain_tail(t: tm.Term) -> bool:
    """A label-free restricted body: value lets over a tail call."""
    while isinstance(t, tm.Let) and not isinstance(t.bound, tm.Lam):
        if tm.labels_of(t.bound):
            return False
        t = t.body
    return (
        isinstance(t, tm.App)
        and isinstance(t.fn, tm.Var)
        and all(isinstance(a, tm.Var) for a in t.args)
    )


def _is_labelled_tail(t: tm.Term) -> bool:
    """Value lets, then exactly one label, then a label-free tail."""
    while isinstance(t, tm.Let) and not isinstance(t.bound, tm.Lam):
        if tm.labels_of(t.bound):
            return False
        t = t.body
    return isinstance(t, tm.PreLabel) and _is_plain_tail(t.term)


def matches_labelled_program(p: tm.HoistProgram) -> bool:
    """Shape of fully compiled, labelled code: every routine body is
    value lets, then exactly one label, then a label-free tail call (so
    every call cycle crosses a label and each label prices one routine);
    the main term is a label-free tail."""
    return all(_is_labelled_tail(lam.body) for _, lam in p.defs) and _is_plain_tail(
        p.main
    )
