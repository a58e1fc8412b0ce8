"""Concrete syntax rendering for terms, types, region terms, and
programs.

The grammar (shared by the parser):

    term    ::=  \\x y. M   |  \\(x : A) (y : B). M   |  let x = M in N
              |  l> M  |  M + M  |  M @ (M, ...)  |  M >l
              |  proj i M  |  x  |  ()  |  (M,)  |  (M, N)  |  #n
              |  pack[A] (M)  |  (M)

    region  ::=  as above, plus  \\[r s] x. T  |  f @ [r] (x)
              |  (x, y) @ r  |  newreg r in T  |  dispose r in T

    type    ::=  t  |  R  |  (A, B) -> R  |  *()  |  *(A, B)  |  ?t. A
              |  forall r. (A) -{r}-> R  |  *(A) @ r  |  (?t. A) @ r

A pre-label glues to its angle bracket (`l0> M`) and a post-label glues
on the other side (`M >l0`); that adjacency is what distinguishes them.
"""

from __future__ import annotations

from . import regions as rg
from . import terms as tm
from . import typesys as ty

__all__ = [
    "show_term", "pretty_term", "show_type", "show_program",
    "show_region_term", "pretty_region_term", "show_region_program",
]

# Precedence levels, loosest first: binders and lets extend right (0),
# cost sums (1), postfix application and labels (2), projections (3),
# atoms (4).
_BIND, _SUM, _POST, _PROJ, _ATOM = 0, 1, 2, 3, 4


def _wrap(s: str, have: int, want: int) -> str:
    return f"({s})" if have < want else s


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


def show_type(a: ty.Type) -> str:
    if isinstance(a, ty.TVar):
        return a.name
    if isinstance(a, ty.R):
        return "R"
    if isinstance(a, ty.Arrow):
        dom = ", ".join(show_type(d) for d in a.domain)
        return f"({dom}) -> {show_type(a.codomain)}"
    if isinstance(a, ty.Product):
        return "*(" + ", ".join(show_type(d) for d in a.items) + ")"
    if isinstance(a, ty.Exists):
        return f"?{a.var}. {show_type(a.body)}"
    if isinstance(a, ty.ForallArrow):
        dom = ", ".join(show_type(d) for d in a.domain)
        eff = ", ".join(sorted(a.effect))
        head = f"forall {' '.join(a.regions)}. " if a.regions else ""
        return f"{head}({dom}) -{{{eff}}}-> R"
    if isinstance(a, ty.ProductAt):
        return "*(" + ", ".join(show_type(d) for d in a.items) + f") @ {a.region}"
    if isinstance(a, ty.ExistsAt):
        return f"(?{a.var}. {show_type(a.body)}) @ {a.region}"
    raise TypeError(f"not a type: {a!r}")


# ---------------------------------------------------------------------------
# Plain terms
# ---------------------------------------------------------------------------


def _params(params, param_types) -> str:
    if param_types is None:
        return " ".join(params)
    return " ".join(f"({p} : {show_type(a)})" for p, a in zip(params, param_types))


def _show(t: tm.Term, want: int) -> str:
    if isinstance(t, tm.Var):
        return t.name
    if isinstance(t, tm.Lam):
        s = f"\\{_params(t.params, t.param_types)}. {_show(t.body, _BIND)}"
        return _wrap(s, _BIND, want)
    if isinstance(t, tm.Let):
        s = f"let {t.var} = {_show(t.bound, _BIND)} in {_show(t.body, _BIND)}"
        return _wrap(s, _BIND, want)
    if isinstance(t, tm.PreLabel):
        return _wrap(f"{t.label}> {_show(t.term, _BIND)}", _BIND, want)
    if isinstance(t, tm.PostLabel):
        return _wrap(f"{_show(t.term, _POST)} >{t.label}", _POST, want)
    if isinstance(t, tm.CostPlus):
        s = f"{_show(t.left, _SUM)} + {_show(t.right, _POST)}"
        return _wrap(s, _SUM, want)
    if isinstance(t, tm.App):
        args = ", ".join(_show(a, _BIND) for a in t.args)
        return _wrap(f"{_show(t.fn, _POST)} @ ({args})", _POST, want)
    if isinstance(t, tm.Proj):
        s = f"proj {t.index} {_show(t.term, _ATOM)}"
        return _wrap(s, _PROJ, want)
    if isinstance(t, tm.Tuple):
        inner = ", ".join(_show(x, _BIND) for x in t.items)
        if len(t.items) == 1:
            inner += ","
        if t.pack_type is not None:
            return f"pack[{show_type(t.pack_type)}] ({inner})"
        return f"({inner})"
    if isinstance(t, tm.CostLit):
        if not isinstance(t.value, int):
            raise ValueError("only numeric costs have a written form")
        return f"#{t.value}"
    raise TypeError(f"not a term: {t!r}")


def show_term(t: tm.Term) -> str:
    """Single-line rendering; `parse_term` inverts it."""
    return _show(t, _BIND)


def pretty_term(t: tm.Term, indent: int = 0) -> str:
    """Multi-line rendering: chains of lets are broken one binding per
    line, label prefixes stay with their line."""
    pad = "  " * indent
    if isinstance(t, tm.Let):
        bound = (
            pretty_term(t.bound, indent + 1).lstrip()
            if isinstance(t.bound, (tm.Lam, tm.Let))
            else _show(t.bound, _BIND)
        )
        rest = pretty_term(t.body, indent)
        return f"{pad}let {t.var} = {bound} in\n{rest}"
    if isinstance(t, tm.Lam):
        body = pretty_term(t.body, indent + 1)
        return f"{pad}\\{_params(t.params, t.param_types)}.\n{body}"
    if isinstance(t, tm.PreLabel):
        inner = pretty_term(t.term, indent).lstrip()
        return f"{pad}{t.label}> {inner}"
    return pad + _show(t, _BIND)


def show_program(p: tm.HoistProgram) -> str:
    lines = []
    for name, lam in p.defs:
        lines.append(f"let {name} = {show_term(lam)} in")
    lines.append(show_term(p.main))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Region terms
# ---------------------------------------------------------------------------


def _rshow(t, want: int) -> str:
    if isinstance(t, rg.RUnit):
        return "()"
    if isinstance(t, rg.RTupleAt):
        inner = ", ".join(t.items)
        if len(t.items) == 1:
            inner += ","
        if t.pack_type is not None:
            return f"pack[{show_type(t.pack_type)}] ({inner})"
        return _wrap(f"({inner}) @ {t.region}", _POST, want)
    if isinstance(t, rg.RProj):
        return _wrap(f"proj {t.index} {t.src}", _PROJ, want)
    if isinstance(t, rg.RLam):
        regions = f"[{' '.join(t.regions)}] " if t.regions else ""
        s = f"\\{regions}{_params(t.params, t.param_types)}. {_rshow(t.body, _BIND)}"
        return _wrap(s, _BIND, want)
    if isinstance(t, rg.RApp):
        regions = f"[{' '.join(t.regions)}] " if t.regions else ""
        args = ", ".join(t.args)
        return _wrap(f"{t.fn} @ {regions}({args})", _POST, want)
    if isinstance(t, rg.RLet):
        s = f"let {t.var} = {_rshow(t.bound, _BIND)} in {_rshow(t.body, _BIND)}"
        return _wrap(s, _BIND, want)
    if isinstance(t, rg.RPreLabel):
        return _wrap(f"{t.label}> {_rshow(t.term, _BIND)}", _BIND, want)
    if isinstance(t, rg.RNewReg):
        return _wrap(f"newreg {t.region} in {_rshow(t.term, _BIND)}", _BIND, want)
    if isinstance(t, rg.RDispose):
        return _wrap(f"dispose {t.region} in {_rshow(t.term, _BIND)}", _BIND, want)
    raise TypeError(f"not a region term: {t!r}")


def show_region_term(t) -> str:
    return _rshow(t, _BIND)


def pretty_region_term(t, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(t, rg.RLet):
        bound = (
            pretty_region_term(t.bound, indent + 1).lstrip()
            if isinstance(t.bound, rg.RLam)
            else _rshow(t.bound, _BIND)
        )
        return f"{pad}let {t.var} = {bound} in\n{pretty_region_term(t.body, indent)}"
    if isinstance(t, rg.RLam):
        regions = f"[{' '.join(t.regions)}] " if t.regions else ""
        body = pretty_region_term(t.body, indent + 1)
        return f"{pad}\\{regions}{_params(t.params, t.param_types)}.\n{body}"
    if isinstance(t, rg.RPreLabel):
        return f"{pad}{t.label}> {pretty_region_term(t.term, indent).lstrip()}"
    if isinstance(t, rg.RNewReg):
        return f"{pad}newreg {t.region} in\n{pretty_region_term(t.term, indent)}"
    if isinstance(t, rg.RDispose):
        return f"{pad}dispose {t.region} in\n{pretty_region_term(t.term, indent)}"
    return pad + _rshow(t, _BIND)


def show_region_program(p: rg.RegionProgram) -> str:
    lines = []
    for name, lam in p.defs:
        lines.append(f"let {name} = {show_region_term(lam)} in")
    lines.append(show_region_term(p.main))
    return "\n".join(lines)
