"""Simple types for the whole chain, and the per-stage type checkers.

Four families share the node set below:

* source types:       type variables, n-ary arrows, products
* continuation types: arrows always end in the result type R
* value-named types:  additionally existentials (closure environments)
* region types:       arrows quantify over regions and carry an effect,
                      non-empty products and existentials live at a region

Checking is syntax-directed: function parameters must carry
annotations, everything else is synthesised.  All checkers compare
types up to alpha-equivalence (existential binders and region
quantifiers rename).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import terms as tm
from .names import HALT, NameSupply


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class R:
    """The type of results: the codomain of every continuation arrow."""


@dataclass(frozen=True)
class Arrow:
    domain: tuple["Type", ...]
    codomain: "Type"

    def __post_init__(self):
        if not self.domain:
            raise ValueError("arrows take at least one argument")


@dataclass(frozen=True)
class Product:
    items: tuple["Type", ...]


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Type"


# Region types.  The unit product ×() carries no region; other products
# and existentials are allocated at one.
@dataclass(frozen=True)
class ForallArrow:
    regions: tuple[str, ...]
    domain: tuple["Type", ...]
    effect: frozenset[str]

    def __post_init__(self):
        if not self.domain:
            raise ValueError("arrows take at least one argument")


@dataclass(frozen=True)
class ProductAt:
    items: tuple["Type", ...]
    region: str

    def __post_init__(self):
        if not self.items:
            raise ValueError("the empty tuple is not allocated at a region")


@dataclass(frozen=True)
class ExistsAt:
    var: str
    body: "Type"
    region: str


Type = Union[TVar, R, Arrow, Product, Exists, ForallArrow, ProductAt, ExistsAt]


def _render_path(p) -> str:
    """Paths are threaded through the checkers as nested tuples
    ``(parent, part, ...)`` so the happy path never builds strings;
    flatten one into its printed form."""
    parts: list[str] = []
    while isinstance(p, tuple):
        parts.append("".join(str(x) for x in p[1:]))
        p = p[0]
    parts.append(p or "")
    return "".join(reversed(parts))


class TypingError(Exception):
    """A term does not check: carries a path into the term, what was
    expected there and what was found."""

    def __init__(self, path, expected, found):
        if not isinstance(path, str):
            path = _render_path(path)
        self.path = path
        self.expected = expected
        self.found = found
        super().__init__(f"at {path or '<top>'}: expected {expected}, found {found}")


class EscapeError(TypingError):
    """An existential witness would escape its scope: the bound type
    variable already occurs free in the context at the unpack site."""


# ---------------------------------------------------------------------------
# Operations on types
# ---------------------------------------------------------------------------


_FTV_MEMO: dict[int, tuple[Type, frozenset[str]]] = {}


def ftv(a: Type) -> frozenset[str]:
    # memoised by object identity: deep structural hashing of type trees
    # is far more expensive than the traversal itself, and the same type
    # objects recur throughout a checking run; keeping the key object in
    # the entry pins its id
    hit = _FTV_MEMO.get(id(a))
    if hit is not None and hit[0] is a:
        return hit[1]
    out = _ftv(a)
    if len(_FTV_MEMO) > 1_000_000:
        _FTV_MEMO.clear()
    _FTV_MEMO[id(a)] = (a, out)
    return out


def _ftv(a: Type) -> frozenset[str]:
    if isinstance(a, TVar):
        return frozenset((a.name,))
    if isinstance(a, R):
        return frozenset()
    if isinstance(a, Arrow):
        out = ftv(a.codomain)
        for d in a.domain:
            out |= ftv(d)
        return out
    if isinstance(a, (Product, ProductAt)):
        out = frozenset()
        for d in a.items:
            out |= ftv(d)
        return out
    if isinstance(a, (Exists, ExistsAt)):
        return ftv(a.body) - frozenset((a.var,))
    if isinstance(a, ForallArrow):
        out = frozenset()
        for d in a.domain:
            out |= ftv(d)
        return out
    raise TypeError(f"not a type: {a!r}")


_FRV_MEMO: dict[int, tuple[Type, frozenset[str]]] = {}


def frv(a: Type) -> frozenset[str]:
    """Free region names of a type."""
    hit = _FRV_MEMO.get(id(a))
    if hit is not None and hit[0] is a:
        return hit[1]
    out = _frv(a)
    if len(_FRV_MEMO) > 1_000_000:
        _FRV_MEMO.clear()
    _FRV_MEMO[id(a)] = (a, out)
    return out


def _frv(a: Type) -> frozenset[str]:
    if isinstance(a, (TVar, R, Product)):
        out: frozenset[str] = frozenset()
        if isinstance(a, Product):
            for d in a.items:
                out |= frv(d)
        return out
    if isinstance(a, Arrow):
        out = frv(a.codomain)
        for d in a.domain:
            out |= frv(d)
        return out
    if isinstance(a, Exists):
        return frv(a.body)
    if isinstance(a, ForallArrow):
        out = frozenset(a.effect)
        for d in a.domain:
            out |= frv(d)
        return out - frozenset(a.regions)
    if isinstance(a, ProductAt):
        out = frozenset((a.region,))
        for d in a.items:
            out |= frv(d)
        return out
    if isinstance(a, ExistsAt):
        return frv(a.body) | frozenset((a.region,))
    raise TypeError(f"not a type: {a!r}")


def ftv_ctx(ctx: dict[str, Type]) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for a in ctx.values():
        out |= ftv(a)
    return out


def frv_ctx(ctx: dict[str, Type]) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for a in ctx.values():
        out |= frv(a)
    return out


def type_alpha_eq(a: Type, b: Type) -> bool:
    """Type equality up to renaming of existential and region binders."""
    if a is b:
        return True

    def go(a, b, ea: dict, eb: dict, er_a: dict, er_b: dict, depth: int) -> bool:
        if a is b and not ea and not eb and not er_a and not er_b:
            return True
        if type(a) is not type(b):
            return False
        if isinstance(a, TVar):
            ia, ib = ea.get(a.name), eb.get(b.name)
            if ia is None and ib is None:
                return a.name == b.name
            return ia == ib
        if isinstance(a, R):
            return True
        if isinstance(a, Arrow):
            return (
                len(a.domain) == len(b.domain)
                and all(go(x, y, ea, eb, er_a, er_b, depth) for x, y in zip(a.domain, b.domain))
                and go(a.codomain, b.codomain, ea, eb, er_a, er_b, depth)
            )
        if isinstance(a, Product):
            return len(a.items) == len(b.items) and all(
                go(x, y, ea, eb, er_a, er_b, depth) for x, y in zip(a.items, b.items)
            )
        if isinstance(a, Exists):
            ea2 = {**ea, a.var: depth}
            eb2 = {**eb, b.var: depth}
            return go(a.body, b.body, ea2, eb2, er_a, er_b, depth + 1)
        if isinstance(a, ForallArrow):
            if len(a.regions) != len(b.regions) or len(a.domain) != len(b.domain):
                return False
            ra, rb = dict(er_a), dict(er_b)
            d = depth
            for x, y in zip(a.regions, b.regions):
                ra[x] = d
                rb[y] = d
                d += 1
            if not all(go(x, y, ea, eb, ra, rb, d) for x, y in zip(a.domain, b.domain)):
                return False
            # effects: compare as sets under the binder renaming
            ea_eff = {_canon(r, ra) for r in a.effect}
            eb_eff = {_canon(r, rb) for r in b.effect}
            return ea_eff == eb_eff
        if isinstance(a, ProductAt):
            if not _region_eq(a.region, b.region, er_a, er_b):
                return False
            return len(a.items) == len(b.items) and all(
                go(x, y, ea, eb, er_a, er_b, depth) for x, y in zip(a.items, b.items)
            )
        if isinstance(a, ExistsAt):
            if not _region_eq(a.region, b.region, er_a, er_b):
                return False
            ea2 = {**ea, a.var: depth}
            eb2 = {**eb, b.var: depth}
            return go(a.body, b.body, ea2, eb2, er_a, er_b, depth + 1)
        raise TypeError(f"not a type: {a!r}")

    def _canon(r, env):
        i = env.get(r)
        return ("b", i) if i is not None else ("f", r)

    def _region_eq(r1, r2, ra, rb):
        i1, i2 = ra.get(r1), rb.get(r2)
        if i1 is None and i2 is None:
            return r1 == r2
        return i1 == i2

    return go(a, b, {}, {}, {}, {}, 0)


def subst_tvar(a: Type, mapping: dict[str, Type]) -> Type:
    """Substitute types for type variables (capture naive: callers only
    substitute closed types or use fresh binders)."""
    if not mapping:
        return a
    if isinstance(a, TVar):
        return mapping.get(a.name, a)
    if isinstance(a, R):
        return a
    if isinstance(a, Arrow):
        return Arrow(tuple(subst_tvar(d, mapping) for d in a.domain), subst_tvar(a.codomain, mapping))
    if isinstance(a, Product):
        return Product(tuple(subst_tvar(d, mapping) for d in a.items))
    if isinstance(a, Exists):
        m2 = {k: v for k, v in mapping.items() if k != a.var}
        return Exists(a.var, subst_tvar(a.body, m2))
    if isinstance(a, ForallArrow):
        return ForallArrow(a.regions, tuple(subst_tvar(d, mapping) for d in a.domain), a.effect)
    if isinstance(a, ProductAt):
        return ProductAt(tuple(subst_tvar(d, mapping) for d in a.items), a.region)
    if isinstance(a, ExistsAt):
        m2 = {k: v for k, v in mapping.items() if k != a.var}
        return ExistsAt(a.var, subst_tvar(a.body, m2), a.region)
    raise TypeError(f"not a type: {a!r}")


def subst_regions_type(a: Type, mapping: dict[str, str]) -> Type:
    """Substitute regions for region names inside a type (effects included)."""
    if not mapping:
        return a
    if isinstance(a, (TVar, R)):
        return a
    if isinstance(a, Arrow):
        return Arrow(
            tuple(subst_regions_type(d, mapping) for d in a.domain),
            subst_regions_type(a.codomain, mapping),
        )
    if isinstance(a, Product):
        return Product(tuple(subst_regions_type(d, mapping) for d in a.items))
    if isinstance(a, Exists):
        return Exists(a.var, subst_regions_type(a.body, mapping))
    if isinstance(a, ForallArrow):
        m2 = {k: v for k, v in mapping.items() if k not in a.regions}
        return ForallArrow(
            a.regions,
            tuple(subst_regions_type(d, m2) for d in a.domain),
            frozenset(m2.get(r, r) for r in a.effect),
        )
    if isinstance(a, ProductAt):
        return ProductAt(
            tuple(subst_regions_type(d, mapping) for d in a.items),
            mapping.get(a.region, a.region),
        )
    if isinstance(a, ExistsAt):
        return ExistsAt(a.var, subst_regions_type(a.body, mapping), mapping.get(a.region, a.region))
    raise TypeError(f"not a type: {a!r}")


# ---------------------------------------------------------------------------
# Type compilation
# ---------------------------------------------------------------------------


def neg(a: Type) -> Type:
    """The continuation type over `a`."""
    return Arrow((a,), R())


def cps_type(a: Type) -> Type:
    """Continuation-passing translation of source types: an n-ary arrow
    gains a continuation argument and returns a result."""
    if isinstance(a, TVar):
        return a
    if isinstance(a, Product):
        return Product(tuple(cps_type(x) for x in a.items))
    if isinstance(a, Arrow):
        dom = tuple(cps_type(x) for x in a.domain)
        return Arrow(dom + (neg(cps_type(a.codomain)),), R())
    raise TypingError("", "a source type", a)


def cc_type(a: Type, supply: Optional[NameSupply] = None) -> Type:
    """Closure-converted types: an arrow becomes an existentially
    quantified pair of a code pointer and its environment."""
    if supply is None:
        supply = NameSupply("_t")
    if isinstance(a, TVar) or isinstance(a, R):
        return a
    if isinstance(a, Product):
        return Product(tuple(cc_type(x, supply) for x in a.items))
    if isinstance(a, Arrow):
        if not isinstance(a.codomain, R):
            raise TypingError("", "a continuation arrow (codomain R)", a)
        t = supply.fresh()
        dom = tuple(cc_type(x, supply) for x in a.domain)
        code = Arrow((TVar(t),) + dom, R())
        return Exists(t, Product((code, TVar(t))))
    if isinstance(a, Exists):
        return Exists(a.var, cc_type(a.body, supply))
    raise TypingError("", "a continuation-passing type", a)


def cmp_type(a: Type, supply: Optional[NameSupply] = None) -> Type:
    """Composite type compilation for the whole chain."""
    return cc_type(cps_type(a), supply)


def cps_ctx(ctx: dict[str, Type]) -> dict[str, Type]:
    return {x: cps_type(a) for x, a in ctx.items()}


def cc_ctx(ctx: dict[str, Type], supply: Optional[NameSupply] = None) -> dict[str, Type]:
    if supply is None:
        supply = NameSupply("_t")
    return {x: cc_type(a, supply) for x, a in ctx.items()}


# ---------------------------------------------------------------------------
# Checker for the source and continuation-passing calculi
# ---------------------------------------------------------------------------


def typecheck_source(ctx: dict[str, Type], t: tm.Term, path: str = "") -> Type:
    """Synthesise the type of `t` under `ctx`.

    Works for the source calculus and, unchanged, for the
    continuation-passing fragment (whose terms then have type R).
    Labels are transparent.
    """
    env = dict(ctx)

    def bind(name: str, a: Type) -> tuple[str, Optional[Type]]:
        old = env.get(name)
        env[name] = a
        return (name, old)

    def unbind(save: tuple[str, Optional[Type]]) -> None:
        name, old = save
        if old is None:
            del env[name]
        else:
            env[name] = old

    def go(t: tm.Term, path) -> Type:
        if type(t) is tm.Var:
            if t.name not in env:
                raise TypingError(path, "a bound variable", t.name)
            return env[t.name]
        if type(t) is tm.Lam:
            if t.param_types is None:
                raise TypingError(path, "annotated parameters", t.params)
            saves = [bind(p, a) for p, a in zip(t.params, t.param_types)]
            cod = go(t.body, (path, ".body"))
            for s in reversed(saves):
                unbind(s)
            return Arrow(t.param_types, cod)
        if type(t) is tm.App:
            fn_ty = go(t.fn, (path, ".fn"))
            if type(fn_ty) is not Arrow:
                raise TypingError((path, ".fn"), "a function type", fn_ty)
            if len(fn_ty.domain) != len(t.args):
                raise TypingError(path, f"{len(fn_ty.domain)} arguments", len(t.args))
            for i, (a, d) in enumerate(zip(t.args, fn_ty.domain)):
                found = go(a, (path, ".arg", i))
                if found is not d and not type_alpha_eq(found, d):
                    raise TypingError((path, ".arg", i), d, found)
            return fn_ty.codomain
        if type(t) is tm.Let:
            bound = go(t.bound, (path, ".bound"))
            save = bind(t.var, bound)
            out = go(t.body, (path, ".body"))
            unbind(save)
            return out
        if type(t) is tm.Tuple:
            items = tuple(go(x, (path, ".", i)) for i, x in enumerate(t.items))
            return Product(items)
        if type(t) is tm.Proj:
            src = go(t.term, (path, ".src"))
            if type(src) is not Product:
                raise TypingError(path, "a product type", src)
            if not 1 <= t.index <= len(src.items):
                raise TypingError(path, f"index within 1..{len(src.items)}", t.index)
            return src.items[t.index - 1]
        if type(t) is tm.PreLabel:
            return go(t.term, path)
        if type(t) is tm.PostLabel:
            return go(t.term, path)
        raise TypingError(path, "a typeable term", t)

    return go(t, path)


# ---------------------------------------------------------------------------
# Checker for the value-named calculi (with existentials)
# ---------------------------------------------------------------------------


# Structurally equal types get the same small integer, assigned on first
# sight; the per-object id memo makes repeat lookups O(1) without deep
# hashing.  Region and binder names enter the shape literally.
_CANON_IDS: dict[tuple, int] = {}
_CANON_MEMO: dict[int, tuple[Type, int]] = {}


def _canon_id(a: Type) -> int:
    hit = _CANON_MEMO.get(id(a))
    if hit is not None and hit[0] is a:
        return hit[1]
    if isinstance(a, TVar):
        shape: tuple = ("v", a.name)
    elif isinstance(a, R):
        shape = ("r",)
    elif isinstance(a, Arrow):
        shape = ("a", tuple(_canon_id(d) for d in a.domain), _canon_id(a.codomain))
    elif isinstance(a, Product):
        shape = ("p", tuple(_canon_id(d) for d in a.items))
    elif isinstance(a, Exists):
        shape = ("e", a.var, _canon_id(a.body))
    elif isinstance(a, ForallArrow):
        shape = ("f", a.regions, tuple(_canon_id(d) for d in a.domain), tuple(sorted(a.effect)))
    elif isinstance(a, ProductAt):
        shape = ("pa", a.region, tuple(_canon_id(d) for d in a.items))
    elif isinstance(a, ExistsAt):
        shape = ("ea", a.var, a.region, _canon_id(a.body))
    else:
        raise TypeError(f"not a type: {a!r}")
    n = _CANON_IDS.setdefault(shape, len(_CANON_IDS))
    if len(_CANON_MEMO) > 1_000_000:
        _CANON_MEMO.clear()
    _CANON_MEMO[id(a)] = (a, n)
    return n


_MATCH_MEMO: dict[tuple[int, str, int], Optional[Type]] = {}


def match_existential(pattern: Type, tvar: str, target: Type) -> Optional[Type]:
    """First-order matching: find B with [B/tvar]pattern == target.

    Returns a witness type, or None if no witness exists.  When `tvar`
    does not occur in `pattern` any witness works; the unit product is
    returned.
    """
    key = (_canon_id(pattern), tvar, _canon_id(target))
    if key in _MATCH_MEMO:
        return _MATCH_MEMO[key]
    out = _match_existential(pattern, tvar, target)
    _MATCH_MEMO[key] = out
    return out


def _match_existential(pattern: Type, tvar: str, target: Type) -> Optional[Type]:
    found: list[Type] = []

    def go(p: Type, s: Type) -> bool:
        if isinstance(p, TVar) and p.name == tvar:
            found.append(s)
            return True
        if type(p) is not type(s):
            return False
        if isinstance(p, TVar):
            return p.name == s.name
        if isinstance(p, R):
            return True
        if isinstance(p, Arrow):
            return (
                len(p.domain) == len(s.domain)
                and all(go(x, y) for x, y in zip(p.domain, s.domain))
                and go(p.codomain, s.codomain)
            )
        if isinstance(p, Product):
            return len(p.items) == len(s.items) and all(
                go(x, y) for x, y in zip(p.items, s.items)
            )
        if isinstance(p, (Exists, ExistsAt)):
            if isinstance(p, ExistsAt) and p.region != s.region:
                return False
            if p.var == tvar:
                return type_alpha_eq(p, s)
            # compare bodies under a common fresh binder name
            fresh = TVar("_match_binder")
            pb = subst_tvar(p.body, {p.var: fresh})
            sb = subst_tvar(s.body, {s.var: fresh})
            return go(pb, sb)
        if isinstance(p, ProductAt):
            return (
                p.region == s.region
                and len(p.items) == len(s.items)
                and all(go(x, y) for x, y in zip(p.items, s.items))
            )
        if isinstance(p, ForallArrow):
            # Region names are compared literally: the enrichment pass uses
            # one global region name throughout, so a witness type may
            # mention that name both free and under a quantifier binding
            # the same name.  Renaming either side would tear those
            # occurrences apart.
            if p.regions != s.regions or len(p.domain) != len(s.domain):
                return False
            if p.effect != s.effect:
                return False
            return all(go(x, y) for x, y in zip(p.domain, s.domain))
        return type_alpha_eq(p, s)

    if not go(pattern, target):
        return None
    if not found:
        return Product(())
    first = found[0]
    if all(type_alpha_eq(first, other) for other in found[1:]):
        return first
    return None


def typecheck_vn(ctx: dict[str, Type], t: tm.Term, path: str = "") -> None:
    """Check a value-named term (type always R, left implicit).

    A unary tuple with a pack annotation introduces an existential; a
    first projection from a variable of existential type eliminates
    one.  The eliminated binder must not occur free in the context,
    otherwise the witness would escape (EscapeError).
    """

    def synth_value(v: tm.Term, where: str) -> Type:
        if type(v) is tm.Var:
            if v.name not in env:
                raise TypingError(where, "a bound variable", v.name)
            return env[v.name]
        raise TypingError(where, "a name", v)

    env: dict[str, Type] = dict(ctx)
    # how many context entries mention each type variable, kept in sync
    # with `env` so the escape check below is a single lookup
    occ: dict[str, int] = {}
    occ_get = occ.get
    for _a in env.values():
        for _v in ftv(_a):
            occ[_v] = occ_get(_v, 0) + 1

    def bind(name: str, a: Type) -> tuple[str, Optional[Type]]:
        old = env.get(name)
        if old is not None:
            for v in ftv(old):
                occ[v] -= 1
        env[name] = a
        for v in ftv(a):
            occ[v] = occ_get(v, 0) + 1
        return (name, old)

    def unbind(save: tuple[str, Optional[Type]]) -> None:
        name, old = save
        for v in ftv(env[name]):
            occ[v] -= 1
        if old is None:
            del env[name]
        else:
            env[name] = old
            for v in ftv(old):
                occ[v] = occ_get(v, 0) + 1

    def go(t: tm.Term, path) -> None:
        if type(t) is tm.App:
            fn_ty = synth_value(t.fn, (path, ".fn"))
            if type(fn_ty) is not Arrow or type(fn_ty.codomain) is not R:
                raise TypingError((path, ".fn"), "a continuation arrow", fn_ty)
            if len(fn_ty.domain) != len(t.args):
                raise TypingError(path, f"{len(fn_ty.domain)} arguments", len(t.args))
            for i, (a, d) in enumerate(zip(t.args, fn_ty.domain)):
                found = synth_value(a, (path, ".arg", i))
                if found is not d and not type_alpha_eq(found, d):
                    raise TypingError((path, ".arg", i), d, found)
            return
        if type(t) is tm.PreLabel:
            go(t.term, path)
            return
        if type(t) is tm.Let:
            b = t.bound
            if type(b) is tm.Lam:
                if b.param_types is None:
                    raise TypingError((path, ".bound"), "annotated parameters", b.params)
                saves = [bind(p, a) for p, a in zip(b.params, b.param_types)]
                go(b.body, (path, ".bound.body"))
                for s in reversed(saves):
                    unbind(s)
                bound_ty: Type = Arrow(b.param_types, R())
            elif type(b) is tm.Tuple:
                item_tys = tuple(synth_value(x, (path, ".bound.", i)) for i, x in enumerate(b.items))
                if b.pack_type is not None:
                    ex = b.pack_type
                    if not isinstance(ex, Exists):
                        raise TypingError((path, ".bound"), "an existential annotation", ex)
                    if len(item_tys) != 1:
                        raise TypingError((path, ".bound"), "a unary package", b.items)
                    witness = match_existential(ex.body, ex.var, item_tys[0])
                    if witness is None:
                        raise TypingError((path, ".bound"), ex, item_tys[0])
                    bound_ty = ex
                else:
                    bound_ty = Product(item_tys)
            elif type(b) is tm.Proj:
                src_ty = synth_value(b.term, (path, ".bound.src"))
                if type(src_ty) is Exists:
                    if b.index != 1:
                        raise TypingError((path, ".bound"), "a first projection", b.index)
                    if occ_get(src_ty.var, 0) > 0:
                        raise EscapeError((path, ".bound"), f"{src_ty.var} fresh for the context", src_ty.var)
                    bound_ty = src_ty.body
                elif type(src_ty) is Product:
                    if not 1 <= b.index <= len(src_ty.items):
                        raise TypingError((path, ".bound"), f"index within 1..{len(src_ty.items)}", b.index)
                    bound_ty = src_ty.items[b.index - 1]
                else:
                    raise TypingError((path, ".bound"), "a product or existential", src_ty)
            else:
                raise TypingError((path, ".bound"), "a bindable value or projection", b)
            save = bind(t.var, bound_ty)
            go(t.body, (path, ".body"))
            unbind(save)
            return
        raise TypingError(path, "a value-named term", t)

    go(t, path)


def typecheck_hoist(ctx: dict[str, Type], p: tm.HoistProgram) -> None:
    """Check a hoisted program by checking its term form."""
    typecheck_vn(ctx, p.to_term())


# ---------------------------------------------------------------------------
# Subject reduction and chain-wide preservation harnesses
# ---------------------------------------------------------------------------


@dataclass
class SubjectReductionReport:
    steps: int
    ok: bool
    detail: str = ""


def check_subject_reduction(
    ctx: dict[str, Type],
    t: tm.Term,
    calculus: str = "source",
    max_steps: int = 1000,
) -> SubjectReductionReport:
    """Step `t` and retypecheck after every step, at an unchanging type."""
    from . import semantics

    step = {
        "source": semantics.step_source,
        "cps": semantics.step_cps,
        "vn": semantics.step_vn,
    }[calculus]
    if calculus == "vn":
        typecheck_vn(ctx, t)
        ty: Optional[Type] = None
    else:
        ty = typecheck_source(ctx, t)
    n = 0
    while n < max_steps:
        res = step(t)
        if not isinstance(res, semantics.Stepped):
            break
        t = res.term
        n += 1
        try:
            if calculus == "vn":
                typecheck_vn(ctx, t)
            else:
                ty2 = typecheck_source(ctx, t)
                if not type_alpha_eq(ty, ty2):
                    return SubjectReductionReport(n, False, f"type changed: {ty} vs {ty2}")
        except TypingError as e:
            return SubjectReductionReport(n, False, str(e))
    return SubjectReductionReport(n, True)


@dataclass
class PreservationReport:
    source_type: Type
    ok: bool
    stage: str = ""
    detail: str = ""
    # the checked stage terms and contexts, for callers that go on to
    # exercise the same pipeline (kept out of equality/printing noise)
    stages: Optional[dict] = None


def check_type_preservation(
    ctx: dict[str, Type], t: tm.Term, *, opt_halt: bool = False
) -> PreservationReport:
    """Check the four judgements along the chain for one term.

    The compiled stages are checked under the translated context with
    `halt` given either its packed closure type or, with ``opt_halt``,
    the bare arrow type into results.
    """
    from . import transform

    a = typecheck_source(ctx, t)
    stage = "cps"
    try:
        n1 = transform.cps(t, ctx=ctx)
        ctx1 = {**cps_ctx(ctx), HALT: neg(cps_type(a))}
        r1 = typecheck_source(ctx1, n1)
        if not isinstance(r1, R):
            return PreservationReport(a, False, stage, f"result type {r1}")
        stage = "vn"
        n2 = transform.to_value_named(n1)
        typecheck_vn(ctx1, n2)
        stage = "cc"
        n3 = transform.closure_convert(n2, typed=True, opt_halt=opt_halt, env_types=ctx1)
        supply = NameSupply("_t", 1000)
        halt_ty = neg(cmp_type(a, supply)) if opt_halt else cc_type(neg(cps_type(a)), supply)
        ctx3 = {**cc_ctx(ctx, supply), HALT: halt_ty}
        typecheck_vn(ctx3, n3)
        stage = "hoist"
        p = transform.hoist(n3)
        typecheck_hoist(ctx3, p)
    except TypingError as e:
        return PreservationReport(a, False, stage, str(e))
    stages = {"cps": (ctx1, n1), "vn": (ctx1, n2), "cc": (ctx3, n3), "hoist": (ctx3, p)}
    return PreservationReport(a, True, stages=stages)


# The contract name for checker failures.
TypeError = TypingError  # noqa: A001
