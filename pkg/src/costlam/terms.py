"""Abstract syntax for the compilation chain, with the generic term operations.

A single node set covers the source calculus and every intermediate
form: each compilation stage produces terms in a successively smaller
fragment of the same grammar.  Writing the grammar once lets the
generic operations (free variables, substitution, alpha-equivalence,
label erasure) be defined uniformly for every stage; fragment
membership is checked separately by the ``check_*`` / ``is_*``
predicates at the bottom of this module.

Node summary:

    Var(x)                 variable
    Lam(params, body)      n-ary function (optionally type-annotated params)
    App(fn, args)          n-ary application
    Let(x, bound, body)    local definition (not recursive)
    Tuple(items)           tuple of n >= 0 components (optionally a pack)
    Proj(i, term)          1-based tuple projection
    PreLabel(l, term)      emit label l, then run term
    PostLabel(term, l)     run term to a value, then emit label l
    CostLit(m)             cost-monoid element (instrumented programs only)
    CostPlus(a, b)         cost-monoid addition (instrumented programs only)

Labels are global constants: unlike variables they are never bound and
alpha-equivalence compares them by name.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Union

from .names import NameSupply, freshen

# Type annotations on binders are represented by objects from
# costlam.typesys; this module treats them as opaque values.
TypeAnn = Any


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    params: tuple[str, ...]
    body: "Term"
    param_types: Optional[tuple[TypeAnn, ...]] = None

    def __post_init__(self):
        if not self.params:
            raise ValueError("functions take at least one parameter")
        if len(set(self.params)) != len(self.params):
            raise ValueError(f"duplicate parameter in {self.params}")
        if self.param_types is not None and len(self.param_types) != len(self.params):
            raise ValueError("parameter annotation arity mismatch")


@dataclass(frozen=True)
class App:
    fn: "Term"
    args: tuple["Term", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("applications take at least one argument")


@dataclass(frozen=True)
class Let:
    var: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class Tuple:
    items: tuple["Term", ...]
    # When set, this tuple introduces an existential package and the
    # annotation records the existential type.  Plain tuples have None.
    pack_type: Optional[TypeAnn] = None


@dataclass(frozen=True)
class Proj:
    index: int
    term: "Term"

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("projection indices are 1-based")


@dataclass(frozen=True)
class PreLabel:
    label: str
    term: "Term"


@dataclass(frozen=True)
class PostLabel:
    term: "Term"
    label: str


@dataclass(frozen=True)
class CostLit:
    value: Any


@dataclass(frozen=True)
class CostPlus:
    left: "Term"
    right: "Term"


Term = Union[Var, Lam, App, Let, Tuple, Proj, PreLabel, PostLabel, CostLit, CostPlus]


def is_value(t: Term) -> bool:
    """Values: variables, functions, cost literals, tuples of values."""
    if isinstance(t, (Var, Lam, CostLit)):
        return True
    if isinstance(t, Tuple):
        return all(is_value(x) for x in t.items)
    return False


# ---------------------------------------------------------------------------
# Generic traversal helpers
# ---------------------------------------------------------------------------


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Var) or isinstance(t, CostLit):
        return ()
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn,) + t.args
    if isinstance(t, Let):
        return (t.bound, t.body)
    if isinstance(t, Tuple):
        return t.items
    if isinstance(t, Proj):
        return (t.term,)
    if isinstance(t, PreLabel):
        return (t.term,)
    if isinstance(t, PostLabel):
        return (t.term,)
    if isinstance(t, CostPlus):
        return (t.left, t.right)
    raise TypeError(f"not a term: {t!r}")


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order iteration over all subterms, including `t` itself."""
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(children(cur)))


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


# Memoised by object identity (the entry pins the key object so its id
# stays valid); rewrites rebuild only the spine above a redex, so the
# untouched subtrees hit the cache on the next query.  Cleared wholesale
# when oversized.
_FV_MEMO: dict[int, tuple["Term", frozenset[str]]] = {}


def free_vars(t: Term) -> frozenset[str]:
    hit = _FV_MEMO.get(id(t))
    if hit is not None and hit[0] is t:
        return hit[1]
    if isinstance(t, Var):
        out = frozenset((t.name,))
    elif isinstance(t, Lam):
        out = free_vars(t.body) - frozenset(t.params)
    elif isinstance(t, Let):
        out = free_vars(t.bound) | (free_vars(t.body) - frozenset((t.var,)))
    else:
        out = frozenset()
        for c in children(t):
            out |= free_vars(c)
    if len(_FV_MEMO) > 1_000_000:
        _FV_MEMO.clear()
    _FV_MEMO[id(t)] = (t, out)
    return out


def fv_ordered(t: Term) -> tuple[str, ...]:
    """Free variables in first-occurrence (left-to-right) order.

    Transformations that materialise a free-variable set into a tuple
    (e.g. building a closure environment) use this order so that output
    terms are deterministic.
    """
    seen: dict[str, None] = {}

    def go(t: Term, bound: frozenset[str]) -> None:
        if isinstance(t, Var):
            if t.name not in bound:
                seen.setdefault(t.name)
        elif isinstance(t, Lam):
            go(t.body, bound | frozenset(t.params))
        elif isinstance(t, Let):
            go(t.bound, bound)
            go(t.body, bound | frozenset((t.var,)))
        else:
            for c in children(t):
                go(c, bound)

    go(t, frozenset())
    return tuple(seen)


def labels_of(t: Term) -> tuple[str, ...]:
    """All label occurrences, in pre-order, duplicates included."""
    out = []
    for s in subterms(t):
        if isinstance(s, PreLabel):
            out.append(s.label)
        elif isinstance(s, PostLabel):
            out.append(s.label)
    return tuple(out)


def all_names(t: Term) -> frozenset[str]:
    """Every variable name occurring in `t`, free or bound."""
    out: set[str] = set()
    for s in subterms(t):
        if isinstance(s, Var):
            out.add(s.name)
        elif isinstance(s, Lam):
            out.update(s.params)
        elif isinstance(s, Let):
            out.add(s.var)
    return frozenset(out)


def _replace_child(t: Term, i: int, new: Term) -> Term:
    """Rebuild `t` with its i-th child (in `children` order) replaced."""
    if isinstance(t, Lam):
        return Lam(t.params, new, t.param_types)
    if isinstance(t, App):
        if i == 0:
            return App(new, t.args)
        return App(t.fn, t.args[: i - 1] + (new,) + t.args[i:])
    if isinstance(t, Let):
        return Let(t.var, new, t.body) if i == 0 else Let(t.var, t.bound, new)
    if isinstance(t, Tuple):
        return Tuple(t.items[:i] + (new,) + t.items[i + 1 :], t.pack_type)
    if isinstance(t, Proj):
        return Proj(t.index, new)
    if isinstance(t, PreLabel):
        return PreLabel(t.label, new)
    if isinstance(t, PostLabel):
        return PostLabel(new, t.label)
    if isinstance(t, CostPlus):
        return CostPlus(new, t.right) if i == 0 else CostPlus(t.left, new)
    raise TypeError(f"no children: {t!r}")


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


def subst(t: Term, mapping: dict[str, Term]) -> Term:
    """Capture-avoiding simultaneous substitution of terms for variables.

    Binders that would capture a free variable of an inserted term are
    renamed on the way down (deterministically, via `freshen`).
    """
    if not mapping:
        return t
    return _subst(t, dict(mapping))


def _subst(t: Term, m: dict[str, Term]) -> Term:
    if not m:
        return t
    if isinstance(t, Var):
        return m.get(t.name, t)
    if isinstance(t, (CostLit,)):
        return t
    if isinstance(t, Lam):
        params, body, m2 = _enter_binders(t.params, t.body, m)
        if not m2 and params == t.params:
            return t
        return Lam(params, _subst(body, m2), t.param_types)
    if isinstance(t, Let):
        bound = _subst(t.bound, m)
        (var,), body, m2 = _enter_binders((t.var,), t.body, m)
        return Let(var, bound, _subst(body, m2))
    if isinstance(t, App):
        return App(_subst(t.fn, m), tuple(_subst(a, m) for a in t.args))
    if isinstance(t, Tuple):
        return Tuple(tuple(_subst(x, m) for x in t.items), t.pack_type)
    if isinstance(t, Proj):
        return Proj(t.index, _subst(t.term, m))
    if isinstance(t, PreLabel):
        return PreLabel(t.label, _subst(t.term, m))
    if isinstance(t, PostLabel):
        return PostLabel(_subst(t.term, m), t.label)
    if isinstance(t, CostPlus):
        return CostPlus(_subst(t.left, m), _subst(t.right, m))
    raise TypeError(f"not a term: {t!r}")


def _enter_binders(
    binders: tuple[str, ...], body: Term, m: dict[str, Term]
) -> tuple[tuple[str, ...], Term, dict[str, Term]]:
    """Adjust a substitution for descent under `binders`.

    Returns possibly-renamed binders, the body with binder renaming
    applied, and the pruned substitution.
    """
    m2 = {k: v for k, v in m.items() if k not in binders}
    live = {k for k in m2 if k in free_vars(body)}
    if not live:
        return binders, body, {}
    m2 = {k: m2[k] for k in m2 if k in live}
    inserted_fv: set[str] = set()
    for v in m2.values():
        inserted_fv |= free_vars(v)
    clashing = [b for b in binders if b in inserted_fv]
    if not clashing:
        return binders, body, m2
    avoid = set(inserted_fv) | set(all_names(body)) | set(m2) | set(binders)
    renaming: dict[str, Term] = {}
    new_binders = []
    for b in binders:
        if b in clashing:
            nb = freshen(b, avoid)
            avoid.add(nb)
            renaming[b] = Var(nb)
            new_binders.append(nb)
        else:
            new_binders.append(b)
    return tuple(new_binders), _subst(body, renaming), m2


def rename_bound(t: Term, supply: NameSupply) -> Term:
    """Alpha-rename every binder in `t` to a fresh name from `supply`.

    Establishes the convention that all binders are pairwise distinct
    and distinct from the free variables (assuming `supply` draws names
    not occurring in `t`).
    """
    def go(t: Term, env: dict[str, str]) -> Term:
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, CostLit):
            return t
        if isinstance(t, Lam):
            new = supply.fresh_many(len(t.params))
            env2 = {**env, **dict(zip(t.params, new))}
            return Lam(tuple(new), go(t.body, env2), t.param_types)
        if isinstance(t, Let):
            bound = go(t.bound, env)
            nv = supply.fresh()
            return Let(nv, bound, go(t.body, {**env, t.var: nv}))
        if isinstance(t, App):
            return App(go(t.fn, env), tuple(go(a, env) for a in t.args))
        if isinstance(t, Tuple):
            return Tuple(tuple(go(x, env) for x in t.items), t.pack_type)
        if isinstance(t, Proj):
            return Proj(t.index, go(t.term, env))
        if isinstance(t, PreLabel):
            return PreLabel(t.label, go(t.term, env))
        if isinstance(t, PostLabel):
            return PostLabel(go(t.term, env), t.label)
        if isinstance(t, CostPlus):
            return CostPlus(go(t.left, env), go(t.right, env))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


# ---------------------------------------------------------------------------
# Alpha-equivalence
# ---------------------------------------------------------------------------


def alpha_eq(a: Term, b: Term, *, label_bijection: bool = False) -> bool:
    """Alpha-equivalence via locally canonical renaming.

    Bound variables are compared positionally; free variables and
    labels by name.  With ``label_bijection=True`` labels are instead
    required to correspond one-to-one, which is the right comparison
    for terms whose labels were drawn from independent supplies.
    Binder type annotations are ignored: equivalence is about the
    underlying terms.
    """
    lmap: dict[str, str] = {}
    rmap: dict[str, str] = {}

    def labels_ok(la: str, lb: str) -> bool:
        if not label_bijection:
            return la == lb
        if lmap.get(la, lb) != lb or rmap.get(lb, la) != la:
            return False
        lmap[la] = lb
        rmap[lb] = la
        return True

    def go(a: Term, b: Term, ea: dict[str, int], eb: dict[str, int], depth: int) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, Var):
            ia, ib = ea.get(a.name), eb.get(b.name)
            if ia is None and ib is None:
                return a.name == b.name
            return ia == ib
        if isinstance(a, CostLit):
            return a.value == b.value
        if isinstance(a, Lam):
            if len(a.params) != len(b.params):
                return False
            ea2, eb2 = dict(ea), dict(eb)
            d = depth
            for pa, pb in zip(a.params, b.params):
                ea2[pa] = d
                eb2[pb] = d
                d += 1
            return go(a.body, b.body, ea2, eb2, d)
        if isinstance(a, Let):
            if not go(a.bound, b.bound, ea, eb, depth):
                return False
            ea2 = {**ea, a.var: depth}
            eb2 = {**eb, b.var: depth}
            return go(a.body, b.body, ea2, eb2, depth + 1)
        if isinstance(a, App):
            if len(a.args) != len(b.args):
                return False
            if not go(a.fn, b.fn, ea, eb, depth):
                return False
            return all(go(x, y, ea, eb, depth) for x, y in zip(a.args, b.args))
        if isinstance(a, Tuple):
            if len(a.items) != len(b.items):
                return False
            return all(go(x, y, ea, eb, depth) for x, y in zip(a.items, b.items))
        if isinstance(a, Proj):
            return a.index == b.index and go(a.term, b.term, ea, eb, depth)
        if isinstance(a, PreLabel):
            return labels_ok(a.label, b.label) and go(a.term, b.term, ea, eb, depth)
        if isinstance(a, PostLabel):
            return labels_ok(a.label, b.label) and go(a.term, b.term, ea, eb, depth)
        if isinstance(a, CostPlus):
            return go(a.left, b.left, ea, eb, depth) and go(a.right, b.right, ea, eb, depth)
        raise TypeError(f"not a term: {a!r}")

    return go(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Label erasure
# ---------------------------------------------------------------------------


def erase(t: Term) -> Term:
    """Remove every label, uniformly for all stages of the chain."""
    if isinstance(t, (Var, CostLit)):
        return t
    if isinstance(t, PreLabel):
        return erase(t.term)
    if isinstance(t, PostLabel):
        return erase(t.term)
    if isinstance(t, Lam):
        return Lam(t.params, erase(t.body), t.param_types)
    if isinstance(t, App):
        return App(erase(t.fn), tuple(erase(a) for a in t.args))
    if isinstance(t, Let):
        return Let(t.var, erase(t.bound), erase(t.body))
    if isinstance(t, Tuple):
        return Tuple(tuple(erase(x) for x in t.items), t.pack_type)
    if isinstance(t, Proj):
        return Proj(t.index, erase(t.term))
    if isinstance(t, CostPlus):
        return CostPlus(erase(t.left), erase(t.right))
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Fragment membership
# ---------------------------------------------------------------------------


class FragmentError(ValueError):
    """A term falls outside the expected intermediate-form fragment."""


def check_plain(t: Term, *, allow_cost: bool = False) -> None:
    """Check that `t` is a term of the source-level grammar.

    With allow_cost=False, rejects the instrumented-only nodes.
    """
    for s in subterms(t):
        if not allow_cost and isinstance(s, (CostLit, CostPlus)):
            raise FragmentError("cost nodes outside an instrumented program")


def check_cps_value(v: Term) -> None:
    if isinstance(v, Var):
        return
    if isinstance(v, Lam):
        check_cps(v.body)
        return
    if isinstance(v, Tuple):
        for x in v.items:
            check_cps_value(x)
        return
    raise FragmentError(f"not a continuation-passing value: {v!r}")


def check_cps(t: Term) -> None:
    """Continuation-passing fragment: applications of values, projection
    lets over values, and labelled terms; no post-labels."""
    if isinstance(t, App):
        check_cps_value(t.fn)
        for a in t.args:
            check_cps_value(a)
        return
    if isinstance(t, Let):
        if not isinstance(t.bound, Proj):
            raise FragmentError(f"let may only bind a projection here: {t.bound!r}")
        check_cps_value(t.bound.term)
        check_cps(t.body)
        return
    if isinstance(t, PreLabel):
        check_cps(t.term)
        return
    raise FragmentError(f"not a continuation-passing term: {t!r}")


def is_cps(t: Term) -> bool:
    try:
        check_cps(t)
        return True
    except FragmentError:
        return False


def check_vn_bindable(b: Term) -> None:
    if isinstance(b, Lam):
        check_vn(b.body)
        return
    if isinstance(b, Tuple):
        for x in b.items:
            if not isinstance(x, Var):
                raise FragmentError(f"tuple components must be names: {x!r}")
        return
    if isinstance(b, Proj):
        if not isinstance(b.term, Var):
            raise FragmentError(f"projection source must be a name: {b.term!r}")
        return
    raise FragmentError(f"not bindable in value-named form: {b!r}")


def check_vn(t: Term) -> None:
    """Value-named fragment: all values occurring in a term are names,
    except those bound by a let."""
    if isinstance(t, App):
        if not isinstance(t.fn, Var):
            raise FragmentError(f"application head must be a name: {t.fn!r}")
        for a in t.args:
            if not isinstance(a, Var):
                raise FragmentError(f"application argument must be a name: {a!r}")
        return
    if isinstance(t, Let):
        check_vn_bindable(t.bound)
        check_vn(t.body)
        return
    if isinstance(t, PreLabel):
        check_vn(t.term)
        return
    raise FragmentError(f"not a value-named term: {t!r}")


def is_vn(t: Term) -> bool:
    try:
        check_vn(t)
        return True
    except FragmentError:
        return False


_FUNDEF_MEMO: dict[int, tuple[Term, bool]] = {}


def has_fundefs(t: Term) -> bool:
    """Does `t` contain a function definition (a let binding a function)?"""
    hit = _FUNDEF_MEMO.get(id(t))
    if hit is not None and hit[0] is t:
        return hit[1]
    if isinstance(t, Let) and isinstance(t.bound, Lam):
        out = True
    else:
        out = any(has_fundefs(c) for c in children(t))
    if len(_FUNDEF_MEMO) > 1_000_000:
        _FUNDEF_MEMO.clear()
    _FUNDEF_MEMO[id(t)] = (t, out)
    return out


def check_restricted(t: Term) -> None:
    """Function-free value-named terms: the bodies and the main term of
    a hoisted program."""
    check_vn(t)
    if has_fundefs(t):
        raise FragmentError("function definition in restricted term")
    for s in subterms(t):
        if isinstance(s, Lam):
            raise FragmentError("function value in restricted term")


# ---------------------------------------------------------------------------
# Hoisted programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoistProgram:
    """Output of hoisting: a list of function definitions and a main term.

    Every function body and the main term are restricted (they contain
    no function definitions).
    """

    defs: tuple[tuple[str, Lam], ...]
    main: Term

    def validate(self) -> None:
        for name, lam in self.defs:
            if not isinstance(lam, Lam):
                raise FragmentError(f"definition {name} is not a function")
            check_restricted(lam.body)
        check_restricted(self.main)

    def to_term(self) -> Term:
        """The program as a plain value-named term (definitions as lets)."""
        t = self.main
        for name, lam in reversed(self.defs):
            t = Let(name, lam, t)
        return t

    @staticmethod
    def from_term(t: Term) -> "HoistProgram":
        """Split a term of program shape into definitions and main."""
        defs = []
        while isinstance(t, Let) and isinstance(t.bound, Lam):
            defs.append((t.var, t.bound))
            t = t.body
        p = HoistProgram(tuple(defs), t)
        p.validate()
        return p
