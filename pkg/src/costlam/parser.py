"""Parser for the concrete syntax produced by the printer.

One token stream serves terms, region terms, and types.  A label
prefix is an identifier glued to a following ``>`` (``l0> M``) and a
label suffix is a ``>`` glued to a following identifier (``M >l0``);
when both readings are possible the left gluing wins, which is the
form the printer emits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import regions as rg
from . import terms as tm
from . import typesys as ty

__all__ = [
    "ParseError", "parse_term", "parse_type", "parse_program",
    "parse_region_term", "parse_region_program", "parse_context",
]


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at offset {pos})")
        self.pos = pos


_KEYWORDS = {"let", "in", "proj", "pack", "newreg", "dispose", "forall", "R"}

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>--[^\n]*)"
    r"|(?P<effarrow>-\{)"
    r"|(?P<effclose>\}->)"
    r"|(?P<arrow>->)"
    r"|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym>[\\()\[\]{},.=@>+#?*:])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'ident', 'num', 'prelab', 'postlab', or a literal symbol
    text: str
    pos: int


def _lex(src: str) -> list[_Tok]:
    raw: list[_Tok] = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            raise ParseError(f"unexpected character {src[i]!r}", i)
        i = m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        if kind == "sym":
            raw.append(_Tok(m.group(), m.group(), m.start()))
        else:
            raw.append(_Tok(kind, m.group(), m.start()))
    out: list[_Tok] = []
    k = 0
    while k < len(raw):
        t = raw[k]
        nxt = raw[k + 1] if k + 1 < len(raw) else None
        if (
            t.kind == "ident"
            and nxt is not None
            and nxt.kind == ">"
            and nxt.pos == t.pos + len(t.text)
        ):
            out.append(_Tok("prelab", t.text, t.pos))
            k += 2
            continue
        if (
            t.kind == ">"
            and nxt is not None
            and nxt.kind == "ident"
            and nxt.pos == t.pos + 1
        ):
            out.append(_Tok("postlab", nxt.text, t.pos))
            k += 2
            continue
        if t.kind == ">":
            raise ParseError("stray '>' (labels glue to their bracket)", t.pos)
        out.append(t)
        k += 1
    return out


class _Parser:
    def __init__(self, src: str, region_mode: bool = False):
        self.toks = _lex(src)
        self.i = 0
        self.region_mode = region_mode

    # -- token plumbing ----------------------------------------------------

    def peek(self, kind: Optional[str] = None) -> Optional[_Tok]:
        if self.i >= len(self.toks):
            return None
        t = self.toks[self.i]
        if kind is not None and t.kind != kind:
            return None
        return t

    def peek_word(self, word: str) -> bool:
        t = self.peek("ident")
        return t is not None and t.text == word

    def take(self, kind: str) -> _Tok:
        t = self.peek()
        if t is None:
            raise ParseError(f"expected {kind!r}, found end of input", len(self.toks))
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text!r}", t.pos)
        self.i += 1
        return t

    def take_word(self, word: str) -> None:
        t = self.take("ident")
        if t.text != word:
            raise ParseError(f"expected {word!r}, found {t.text!r}", t.pos)

    def at_word(self, word: str) -> bool:
        return self.peek_word(word)

    def eat(self, kind: str) -> bool:
        if self.peek(kind) is not None:
            self.i += 1
            return True
        return False

    def done(self) -> None:
        t = self.peek()
        if t is not None:
            raise ParseError(f"trailing input {t.text!r}", t.pos)

    def name(self) -> str:
        t = self.take("ident")
        if t.text in _KEYWORDS:
            raise ParseError(f"{t.text!r} is a keyword", t.pos)
        return t.text

    # -- types --------------------------------------------------------------

    def type_(self) -> ty.Type:
        if self.at_word("forall"):
            self.take("ident")
            regions = [self.name()]
            while self.peek("ident"):
                regions.append(self.name())
            self.take(".")
            arrow = self.type_()
            if isinstance(arrow, ty.ForallArrow) and not arrow.regions:
                return ty.ForallArrow(tuple(regions), arrow.domain, arrow.effect)
            raise ParseError("expected an effect arrow after 'forall'", self._pos())
        if self.eat("?"):
            var = self.name()
            self.take(".")
            return ty.Exists(var, self.type_())
        return self._type_atom()

    def _type_atom(self) -> ty.Type:
        t = self.peek()
        if t is None:
            raise ParseError("expected a type", self._pos())
        if t.kind == "ident":
            if t.text == "R":
                self.i += 1
                return ty.R()
            return ty.TVar(self.name())
        if t.kind == "*":
            self.i += 1
            self.take("(")
            items: list[ty.Type] = []
            if not self.eat(")"):
                items.append(self.type_())
                while self.eat(","):
                    items.append(self.type_())
                self.take(")")
            if items and self.eat("@"):
                return ty.ProductAt(tuple(items), self.name())
            return ty.Product(tuple(items))
        if t.kind == "(":
            self.i += 1
            if self.eat("?"):
                var = self.name()
                self.take(".")
                body = self.type_()
                self.take(")")
                if self.eat("@"):
                    return ty.ExistsAt(var, body, self.name())
                return ty.Exists(var, body)
            items = [self.type_()]
            while self.eat(","):
                items.append(self.type_())
            self.take(")")
            if self.peek("arrow") or self.peek("effarrow"):
                return self._arrow_tail(tuple(items))
            if len(items) == 1:
                return items[0]
            raise ParseError("a bare type list needs an arrow after it", self._pos())
        raise ParseError(f"unexpected {t.text!r} in a type", t.pos)

    def _arrow_tail(self, domain: tuple[ty.Type, ...]) -> ty.Type:
        if self.eat("arrow"):
            return ty.Arrow(domain, self.type_())
        self.take("effarrow")
        effects: list[str] = []
        if not self.peek("effclose"):
            effects.append(self.name())
            while self.eat(","):
                effects.append(self.name())
        self.take("effclose")
        self.take_word("R")
        return ty.ForallArrow((), domain, frozenset(effects))

    def _pos(self) -> int:
        t = self.peek()
        return t.pos if t else len(self.toks)

    # -- plain terms ----------------------------------------------------------

    def term(self) -> tm.Term:
        t = self.peek()
        if t is None:
            raise ParseError("expected a term", self._pos())
        if t.kind == "\\":
            return self._lambda()
        if t.kind == "prelab":
            self.i += 1
            return tm.PreLabel(t.text, self.term())
        if t.kind == "ident" and t.text == "let":
            self.i += 1
            var = self.name()
            self.take("=")
            bound = self.term()
            self.take_word("in")
            return tm.Let(var, bound, self.term())
        return self._sum()

    def _lambda(self) -> tm.Term:
        self.take("\\")
        params: list[str] = []
        types: list[ty.Type] = []
        annotated: Optional[bool] = None
        while True:
            if self.peek("ident"):
                if annotated is True:
                    raise ParseError("mixing annotated and bare parameters", self._pos())
                annotated = False
                params.append(self.name())
            elif self.peek("("):
                if annotated is False:
                    raise ParseError("mixing annotated and bare parameters", self._pos())
                annotated = True
                self.take("(")
                params.append(self.name())
                self.take(":")
                types.append(self.type_())
                self.take(")")
            else:
                break
        if not params:
            raise ParseError("a function needs parameters", self._pos())
        self.take(".")
        body = self.term()
        return tm.Lam(tuple(params), body, tuple(types) if annotated else None)

    def _sum(self) -> tm.Term:
        out = self._postfix()
        while self.eat("+"):
            out = tm.CostPlus(out, self._postfix())
        return out

    def _postfix(self) -> tm.Term:
        out = self._proj()
        while True:
            t = self.peek()
            if t is None:
                return out
            if t.kind == "@":
                self.i += 1
                self.take("(")
                args = [self.term()]
                while self.eat(","):
                    args.append(self.term())
                self.take(")")
                out = tm.App(out, tuple(args))
            elif t.kind == "postlab":
                self.i += 1
                out = tm.PostLabel(out, t.text)
            else:
                return out

    def _proj(self) -> tm.Term:
        if self.at_word("proj"):
            self.take("ident")
            idx = int(self.take("num").text)
            return tm.Proj(idx, self._atom())
        return self._atom()

    def _atom(self) -> tm.Term:
        t = self.peek()
        if t is None:
            raise ParseError("expected a term", self._pos())
        if t.kind == "ident":
            if t.text == "pack":
                self.i += 1
                self.take("[")
                ann = self.type_()
                self.take("]")
                self.take("(")
                items = [self.term()]
                while self.eat(","):
                    if self.peek(")"):
                        break
                    items.append(self.term())
                self.take(")")
                return tm.Tuple(tuple(items), ann)
            if t.text in _KEYWORDS:
                raise ParseError(f"{t.text!r} is a keyword", t.pos)
            self.i += 1
            return tm.Var(t.text)
        if t.kind == "#":
            self.i += 1
            return tm.CostLit(int(self.take("num").text))
        if t.kind == "(":
            self.i += 1
            if self.eat(")"):
                return tm.Tuple(())
            first = self.term()
            if self.eat(","):
                items = [first]
                while not self.peek(")"):
                    items.append(self.term())
                    if not self.eat(","):
                        break
                self.take(")")
                return tm.Tuple(tuple(items))
            self.take(")")
            return first
        if t.kind == "\\" or t.kind == "prelab":
            return self.term()
        raise ParseError(f"unexpected {t.text!r}", t.pos)

    # -- region terms -----------------------------------------------------

    def rterm(self):
        t = self.peek()
        if t is None:
            raise ParseError("expected a term", self._pos())
        if t.kind == "prelab":
            self.i += 1
            return rg.RPreLabel(t.text, self.rterm())
        if t.kind == "ident" and t.text == "newreg":
            self.i += 1
            r = self.name()
            self.take_word("in")
            return rg.RNewReg(r, self.rterm())
        if t.kind == "ident" and t.text == "dispose":
            self.i += 1
            r = self.name()
            self.take_word("in")
            return rg.RDispose(r, self.rterm())
        if t.kind == "ident" and t.text == "let":
            self.i += 1
            var = self.name()
            self.take("=")
            bound = self._rbindable()
            self.take_word("in")
            return rg.RLet(var, bound, self.rterm())
        return self._rapp()

    def _rbindable(self):
        t = self.peek()
        if t is None:
            raise ParseError("expected a definition", self._pos())
        if t.kind == "\\":
            return self._rlambda()
        if t.kind == "ident" and t.text == "proj":
            self.i += 1
            idx = int(self.take("num").text)
            return rg.RProj(idx, self.name())
        if t.kind == "ident" and t.text == "pack":
            self.i += 1
            self.take("[")
            ann = self.type_()
            self.take("]")
            if not isinstance(ann, ty.ExistsAt):
                raise ParseError("a package type must name its region", t.pos)
            self.take("(")
            item = self.name()
            self.eat(",")
            self.take(")")
            return rg.RTupleAt((item,), ann.region, ann)
        if t.kind == "(":
            self.i += 1
            if self.eat(")"):
                return rg.RUnit()
            items = [self.name()]
            while self.eat(","):
                if self.peek(")"):
                    break
                items.append(self.name())
            self.take(")")
            self.take("@")
            return rg.RTupleAt(tuple(items), self.name())
        raise ParseError(f"unexpected {t.text!r} in a definition", t.pos)

    def _rlambda(self) -> rg.RLam:
        self.take("\\")
        regions: list[str] = []
        if self.eat("["):
            while not self.peek("]"):
                regions.append(self.name())
            self.take("]")
        params: list[str] = []
        types: list[ty.Type] = []
        annotated: Optional[bool] = None
        while True:
            if self.peek("ident"):
                if annotated is True:
                    raise ParseError("mixing annotated and bare parameters", self._pos())
                annotated = False
                params.append(self.name())
            elif self.peek("("):
                if annotated is False:
                    raise ParseError("mixing annotated and bare parameters", self._pos())
                annotated = True
                self.take("(")
                params.append(self.name())
                self.take(":")
                types.append(self.type_())
                self.take(")")
            else:
                break
        if not params:
            raise ParseError("a function needs parameters", self._pos())
        self.take(".")
        body = self.rterm()
        return rg.RLam(tuple(regions), tuple(params), body, tuple(types) if annotated else None)

    def _rapp(self):
        fn = self.name()
        self.take("@")
        regions: list[str] = []
        if self.eat("["):
            while not self.peek("]"):
                regions.append(self.name())
            self.take("]")
        self.take("(")
        args = [self.name()]
        while self.eat(","):
            args.append(self.name())
        self.take(")")
        return rg.RApp(fn, tuple(regions), tuple(args))


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_term(src: str) -> tm.Term:
    p = _Parser(src)
    out = p.term()
    p.done()
    return out


def parse_type(src: str) -> ty.Type:
    p = _Parser(src)
    out = p.type_()
    p.done()
    return out


def parse_program(src: str) -> tm.HoistProgram:
    return tm.HoistProgram.from_term(parse_term(src))


def parse_region_term(src: str):
    p = _Parser(src, region_mode=True)
    out = p.rterm()
    p.done()
    return out


def parse_region_program(src: str) -> rg.RegionProgram:
    return rg.RegionProgram.from_term(parse_region_term(src))


def parse_context(src: str) -> dict[str, ty.Type]:
    """Parse a typing context written `x : A, y : B`."""
    p = _Parser(src)
    out: dict[str, ty.Type] = {}
    if p.peek() is None:
        return out
    while True:
        x = p.name()
        p.take(":")
        out[x] = p.type_()
        if not p.eat(","):
            break
    p.done()
    return out
