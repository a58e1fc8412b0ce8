"""Random generation of well-typed source terms, for property testing.

Terms are built type-directed, so every generated term typechecks by
construction; since the source language has no recursion, every
well-typed term also terminates under the call-by-value rules.  The
default context supplies a few opaque base-type constants so that base
types are inhabited.

`sprinkle` decorates a generated term with observation labels while
keeping it well-labelled (the class-0 discipline), so labelled terms
can be fed straight to the continuation-passing translation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import terms as tm
from . import typesys as ty

__all__ = [
    "GenConfig", "DEFAULT_CTX", "Gen", "gen_terms", "sprinkle", "minimize",
]


DEFAULT_CTX: dict[str, ty.Type] = {
    "a": ty.TVar("t1"),
    "b": ty.TVar("t2"),
    "c": ty.TVar("t1"),
}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 24
    max_width: int = 3
    max_type_depth: int = 2
    app_bias: float = 0.4
    base_types: tuple[str, ...] = ("t1", "t2")


class Gen:
    """A deterministic stream of well-typed terms."""

    def __init__(self, config: GenConfig = GenConfig(), ctx: dict[str, ty.Type] | None = None):
        self.config = config
        self.rng = random.Random(config.seed)
        self.ctx = dict(DEFAULT_CTX if ctx is None else ctx)
        self._var_counter = 0
        self._label_counter = 0

    # -- types ---------------------------------------------------------

    def type(self, depth: int | None = None) -> ty.Type:
        if depth is None:
            depth = self.config.max_type_depth
        kinds = ["base"]
        if depth > 0:
            kinds += ["arrow", "product"]
        kind = self.rng.choice(kinds)
        if kind == "base":
            return ty.TVar(self.rng.choice(self.config.base_types))
        if kind == "arrow":
            n = self.rng.randint(1, 2)
            return ty.Arrow(
                tuple(self.type(depth - 1) for _ in range(n)),
                self.type(depth - 1),
            )
        n = self.rng.randint(0, self.config.max_width)
        return ty.Product(tuple(self.type(depth - 1) for _ in range(n)))

    # -- helpers ---------------------------------------------------------

    def _fresh_var(self) -> str:
        self._var_counter += 1
        return f"x{self._var_counter}"

    def _fresh_label(self) -> str:
        self._label_counter += 1
        return f"s{self._label_counter}"

    def _vars_of(self, ctx: dict[str, ty.Type], target: ty.Type) -> list[str]:
        return sorted(x for x, a in ctx.items() if ty.type_alpha_eq(a, target))

    def canonical(self, target: ty.Type, ctx: dict[str, ty.Type]) -> tm.Term:
        """The cheapest inhabitant of a type, used as a base case and by
        the shrinker."""
        xs = self._vars_of(ctx, target)
        if xs:
            return tm.Var(xs[0])
        if isinstance(target, ty.Product):
            return tm.Tuple(tuple(self.canonical(a, ctx) for a in target.items))
        if isinstance(target, ty.Arrow):
            params = tuple(self._fresh_var() for _ in target.domain)
            inner = {**ctx, **dict(zip(params, target.domain))}
            return tm.Lam(params, self.canonical(target.codomain, inner), target.domain)
        raise ValueError(f"uninhabited type {target}")

    # -- terms ---------------------------------------------------------

    def term_of(self, target: ty.Type, ctx: dict[str, ty.Type], budget: int) -> tm.Term:
        r = self.rng
        if budget <= 1:
            return self.canonical(target, ctx)
        options: list[tuple[str, float]] = [("let", 0.15), ("app", self.config.app_bias), ("proj", 0.1)]
        if self._vars_of(ctx, target):
            options.append(("var", 0.15))
        if isinstance(target, ty.Arrow):
            options.append(("lam", 0.5))
        if isinstance(target, ty.Product):
            options.append(("tuple", 0.5))
        names = [o for o, _ in options]
        weights = [w for _, w in options]
        kind = r.choices(names, weights)[0]

        if kind == "var":
            return tm.Var(r.choice(self._vars_of(ctx, target)))
        if kind == "lam":
            assert isinstance(target, ty.Arrow)
            params = tuple(self._fresh_var() for _ in target.domain)
            inner = {**ctx, **dict(zip(params, target.domain))}
            body = self.term_of(target.codomain, inner, budget - 1)
            return tm.Lam(params, body, target.domain)
        if kind == "tuple":
            assert isinstance(target, ty.Product)
            if not target.items:
                return tm.Tuple(())
            share = max(1, (budget - 1) // len(target.items))
            return tm.Tuple(tuple(self.term_of(a, ctx, share) for a in target.items))
        if kind == "let":
            bound_ty = self.type()
            x = self._fresh_var()
            bound = self.term_of(bound_ty, ctx, (budget - 1) // 2)
            body = self.term_of(target, {**ctx, x: bound_ty}, (budget - 1) // 2)
            return tm.Let(x, bound, body)
        if kind == "proj":
            width = r.randint(1, self.config.max_width)
            i = r.randint(1, width)
            items = tuple(
                target if j == i else self.type(0) for j in range(1, width + 1)
            )
            src = self.term_of(ty.Product(items), ctx, budget - 1)
            return tm.Proj(i, src)
        # application: build a function of the right shape and call it
        n = r.randint(1, 2)
        arg_types = tuple(self.type(self.config.max_type_depth - 1) for _ in range(n))
        fn_ty = ty.Arrow(arg_types, target)
        share = max(1, (budget - 1) // (n + 1))
        fn = self.term_of(fn_ty, ctx, share)
        args = tuple(self.term_of(a, ctx, share) for a in arg_types)
        return tm.App(fn, args)

    def term(self) -> tuple[tm.Term, ty.Type]:
        """One term together with its type, in the generator's context."""
        target = self.type()
        t = self.term_of(target, self.ctx, self.config.max_size)
        return t, target

    # -- labels ---------------------------------------------------------

    def sprinkle(self, t: tm.Term, rate: float = 0.25) -> tm.Term:
        """Decorate with labels, preserving well-labelledness.

        A prefix label is fine on any subterm; a suffix label keeps only
        class 0, so it is added only where the surrounding position does
        not demand class 1 (that is, anywhere except the spine of a
        function body).
        """
        r = self.rng

        def go(u: tm.Term, need_w1: bool) -> tm.Term:
            if isinstance(u, tm.Lam):
                out: tm.Term = tm.Lam(u.params, go(u.body, True), u.param_types)
            elif isinstance(u, tm.App):
                out = tm.App(go(u.fn, False), tuple(go(a, False) for a in u.args))
            elif isinstance(u, tm.Tuple):
                out = tm.Tuple(tuple(go(a, False) for a in u.items), u.pack_type)
            elif isinstance(u, tm.Proj):
                out = tm.Proj(u.index, go(u.term, False))
            elif isinstance(u, tm.Let):
                out = tm.Let(u.var, go(u.bound, False), go(u.body, need_w1))
            else:
                out = u
            if not need_w1 and not tm.is_value(out) and r.random() < rate:
                out = tm.PostLabel(out, self._fresh_label())
            if r.random() < rate:
                out = tm.PreLabel(self._fresh_label(), out)
            return out

        return go(t, False)


def gen_terms(config: GenConfig = GenConfig(), count: int = 100,
              ctx: dict[str, ty.Type] | None = None):
    """Yield `count` deterministic (term, type) pairs."""
    g = Gen(config, ctx)
    for _ in range(count):
        yield g.term()


# ---------------------------------------------------------------------------
# Shrinking
# ---------------------------------------------------------------------------


def _shrink_candidates(t: tm.Term) -> list[tm.Term]:
    """Structurally smaller variants to try while a property still fails.
    Type preservation is not guaranteed here; the caller re-checks."""
    out: list[tm.Term] = []
    if isinstance(t, tm.PreLabel):
        out.append(t.term)
    if isinstance(t, tm.PostLabel):
        out.append(t.term)
    if isinstance(t, tm.Let):
        out.append(t.body)
        if tm.is_value(t.bound):
            out.append(tm.subst(t.body, {t.var: t.bound}))
    if isinstance(t, tm.Proj):
        out.append(t.term)
    if isinstance(t, tm.App):
        out.extend([t.fn, *t.args])
    if isinstance(t, tm.Tuple):
        out.extend(t.items)
    if isinstance(t, tm.Lam):
        out.append(t.body)
    # one rebuilt child at a time
    kids = tm.children(t)
    for i, k in enumerate(kids):
        for k2 in _shrink_candidates(k):
            out.append(tm._replace_child(t, i, k2))
    return out


def minimize(t: tm.Term, failing, accept=None, rounds: int = 200) -> tm.Term:
    """Greedy shrink: keep replacing `t` with a smaller candidate for
    which `failing` still holds (and `accept`, when given, also holds).

    `failing` must be a pure predicate; exceptions count as failure of
    the candidate, not of the property.
    """
    def still_fails(u: tm.Term) -> bool:
        try:
            if accept is not None and not accept(u):
                return False
            return bool(failing(u))
        except Exception:
            return False

    current = t
    for _ in range(rounds):
        better = None
        for cand in _shrink_candidates(current):
            if tm.size(cand) < tm.size(current) and still_fails(cand):
                better = cand
                break
        if better is None:
            return current
        current = better
    return current
