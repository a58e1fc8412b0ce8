"""Identifier handling: reserved names and deterministic fresh-name supplies.

All identifiers, labels, type variables and region names are plain
strings.  Machine-generated names start with an underscore; the
concrete-syntax parser rejects such names in user input, so a fresh
name can never collide with a name appearing in a parsed term.
"""

from __future__ import annotations

RESERVED_PREFIX = "_"

# `halt` is the distinguished continuation introduced by the CPS
# translation.  It may occur free but can never be bound.
HALT = "halt"


def is_reserved(name: str) -> bool:
    return name.startswith(RESERVED_PREFIX)


class NameSupply:
    """Deterministic counter-based source of fresh names.

    Draws ``<prefix><n>`` for n = 0, 1, 2, ...  Every transformation
    that invents names threads one of these through its traversal, so
    a given input always yields the same output names.
    """

    def __init__(self, prefix: str = "_k", start: int = 0):
        self.prefix = prefix
        self.counter = start

    def fresh(self) -> str:
        name = f"{self.prefix}{self.counter}"
        self.counter += 1
        return name

    def fresh_many(self, n: int) -> list[str]:
        return [self.fresh() for _ in range(n)]

    def __repr__(self) -> str:  # pragma: no cover
        return f"NameSupply(prefix={self.prefix!r}, counter={self.counter})"


def freshen(base: str, avoid: set[str] | frozenset[str]) -> str:
    """Pick a name not in `avoid`, deterministically.

    Used by capture-avoiding substitution when a binder must be
    renamed.  The result keeps the stem of `base` for readability.
    """
    stem = base.lstrip("_") or "x"
    stem = stem.rstrip("0123456789") or stem
    i = 0
    while True:
        cand = f"_{stem}{i}"
        if cand not in avoid:
            return cand
        i += 1
