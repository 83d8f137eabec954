"""Decorated operator-chain expressions and their algebra.

An expression is a chain of operator levels applied to a tuple of ground
arguments.  The head level is ``sig``, followed by ``tau``, then ``phi``;
products of chains extend the sequence with synthetic ``op<n>`` tiers.
Symbols carry a lift order (rendered ``^(k)``) and, when several symbols of
one kind share a level, a 1-based index (``tau1, tau2``).

Values are immutable; every operation is a pure function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class GroveError(Exception):
    """Base error for expression construction and algebra."""


class GroveParseError(GroveError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class CompositionError(GroveError):
    """Raised when two chains cannot be multiplied."""


_BASE_TIER_NAMES = ("sig", "tau", "phi")
ARG_POINT = "m"
ARG_MAP = "phi"


def tier_name(tier: int) -> str:
    if tier < 0:
        raise ValueError(f"operator tier must be >= 0, got {tier}")
    if tier < len(_BASE_TIER_NAMES):
        return _BASE_TIER_NAMES[tier]
    return f"op{tier}"


def name_tier(name: str) -> int:
    if name in _BASE_TIER_NAMES:
        return _BASE_TIER_NAMES.index(name)
    m = re.fullmatch(r"op(\d+)", name)
    if m:
        return int(m.group(1))
    raise ValueError(f"unknown operator name {name!r}")


@dataclass(frozen=True, order=True)
class DecoratedSymbol:
    """One symbol of an expression: an operator tier or a ground argument.

    ``kind`` is an operator name (``sig``/``tau``/``phi``/``op<n>``), the
    point-argument kind ``m``, or ``phi`` in argument position for the
    map-substitution form.  ``lift`` is the superscript order; lift 0
    renders with no superscript.
    """

    kind: str
    index: int = 1
    lift: int = 0

    def __post_init__(self):
        if self.index < 1:
            raise GroveError(f"symbol index must be >= 1, got {self.index}")
        if self.lift < 0:
            raise GroveError(f"symbol lift must be >= 0, got {self.lift}")


def op(tier: int, index: int = 1, lift: int = 0) -> DecoratedSymbol:
    return DecoratedSymbol(tier_name(tier), index, lift)


def arg(index: int = 1, lift: int = 0, *, map_subst: bool = False) -> DecoratedSymbol:
    return DecoratedSymbol(ARG_MAP if map_subst else ARG_POINT, index, lift)


@dataclass(frozen=True)
class TopologyExpr:
    """A decorated operator chain over a tuple of ground arguments.

    ``levels`` is ordered head-outward: ``levels[0]`` is the ``sig`` level.
    Level ``i`` may contain symbols of tier ``i`` plus inserted symbols of
    tier ``i + 1`` (the ``(tau, phi)`` forms).  The empty chain is the
    multiplicative unit :data:`TRIVIAL`.
    """

    levels: tuple[tuple[DecoratedSymbol, ...], ...]
    args: tuple[DecoratedSymbol, ...]

    def __post_init__(self):
        if not self.levels and not self.args:
            return  # the trivial tree
        if not self.levels:
            raise GroveError("non-trivial expression needs at least one level")
        if not self.args:
            raise GroveError("non-trivial expression needs at least one argument")
        for i, level in enumerate(self.levels):
            if not level:
                raise GroveError(f"level {i} is empty")
            tiers = [name_tier(s.kind) for s in level]
            if min(tiers) != i:
                raise GroveError(
                    f"level {i} has base tier {min(tiers)}; expected {i}"
                )
            if any(t not in (i, i + 1) for t in tiers):
                raise GroveError(f"level {i} mixes tiers {sorted(set(tiers))}")
        kinds = {s.kind for s in self.args}
        if not kinds <= {ARG_POINT, ARG_MAP}:
            raise GroveError(f"bad argument kinds {sorted(kinds)}")
        if ARG_MAP in kinds and len(self.args) != 1:
            raise GroveError("map-substitution argument must stand alone")

    @property
    def is_trivial(self) -> bool:
        return not self.levels

    @property
    def depth(self) -> int:
        """Number of operator levels minus one (-1 for the trivial tree)."""
        return len(self.levels) - 1

    def render(self) -> str:
        return render(self)

    def __str__(self) -> str:
        return render(self)


TRIVIAL = TopologyExpr((), ())


def base_chain(depth: int) -> TopologyExpr:
    """Undecorated chain: ``sig(m1)``, ``sig tau(m1)``, ..."""
    if depth < 0:
        raise GroveError("depth must be >= 0")
    return TopologyExpr(tuple((op(t),) for t in range(depth + 1)), (arg(),))


# ---------------------------------------------------------------------------
# rendering and parsing
# ---------------------------------------------------------------------------

def _render_symbol(sym: DecoratedSymbol, show_index: bool) -> str:
    text = sym.kind
    if show_index and sym.kind not in (ARG_MAP,):
        text += str(sym.index)
    if sym.lift:
        text += f"^({sym.lift})"
    return text


def render(expr: TopologyExpr) -> str:
    """Canonical text form; inverse of :func:`parse` on canonical input."""
    if expr.is_trivial:
        return "1"
    parts = []
    for level in expr.levels:
        per_kind: dict[str, int] = {}
        for s in level:
            per_kind[s.kind] = per_kind.get(s.kind, 0) + 1
        texts = [_render_symbol(s, per_kind[s.kind] > 1) for s in level]
        parts.append(texts[0] if len(texts) == 1 else "(" + ", ".join(texts) + ")")
    args = ", ".join(_render_symbol(a, a.kind == ARG_POINT) for a in expr.args)
    return " ".join(parts) + "(" + args + ")"


_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[a-z]+)(?P<idx>\d+)?|(?P<punct>[(),])|(?P<lift>\^\(\d+\)))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == m.start():
            raise GroveParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group("name"):
            tokens.append(("name", m.group("name") + (m.group("idx") or ""), m.start()))
        elif m.group("punct"):
            tokens.append((m.group("punct"), m.group("punct"), m.start()))
        else:
            tokens.append(("lift", m.group("lift")[2:-1], m.start()))
        pos = m.end()
    return tokens


_NAME_RE = re.compile(r"([a-z]+)(\d+)?")


def _split_name(name: str, pos: int) -> tuple[str, int]:
    m = _NAME_RE.fullmatch(name)
    base, idx = m.group(1), m.group(2)
    if base == "op":
        # synthetic tier from a product; indexless in the text grammar
        if idx is None:
            raise GroveParseError("op tier needs a number", pos)
        return f"op{idx}", 1
    if base not in ("sig", "tau", "phi", "m"):
        raise GroveParseError(f"unknown symbol kind {base!r}", pos)
    return base, int(idx) if idx else 1


def parse(text: str) -> TopologyExpr:
    """Parse canonical notation, returning the canonicalized expression."""
    if text.strip() == "1":
        return TRIVIAL
    tokens = _tokenize(text)
    if not tokens:
        raise GroveParseError("empty expression", 0)

    # Gather segments: bare heads and parenthesized groups.  The final
    # group is the argument tuple; everything before it is a level.
    segments: list[list[tuple[str, int, int, int]]] = []  # [(kind, idx, lift, pos)]
    i = 0
    while i < len(tokens):
        kind_tok, value, pos = tokens[i]
        if kind_tok == "name":
            base, idx = _split_name(value, pos)
            lift = 0
            if i + 1 < len(tokens) and tokens[i + 1][0] == "lift":
                lift = int(tokens[i + 1][1])
                i += 1
            segments.append([(base, idx, lift, pos)])
            i += 1
        elif kind_tok == "(":
            group = []
            i += 1
            expect_name = True
            while i < len(tokens) and tokens[i][0] != ")":
                tk, val, p = tokens[i]
                if expect_name:
                    if tk != "name":
                        raise GroveParseError("expected a symbol name", p)
                    base, idx = _split_name(val, p)
                    lift = 0
                    if i + 1 < len(tokens) and tokens[i + 1][0] == "lift":
                        lift = int(tokens[i + 1][1])
                        i += 1
                    group.append((base, idx, lift, p))
                    expect_name = False
                else:
                    if tk != ",":
                        raise GroveParseError("expected ',' or ')'", p)
                    expect_name = True
                i += 1
            if i >= len(tokens):
                raise GroveParseError("unclosed '('", pos)
            if not group:
                raise GroveParseError("empty tuple", pos)
            segments.append(group)
            i += 1
        else:
            raise GroveParseError(f"unexpected token {value!r}", pos)

    if len(segments) < 2:
        raise GroveParseError("expression needs levels and an argument tuple", 0)
    *level_segs, arg_seg = segments

    args = []
    for base, idx, lift, pos in arg_seg:
        try:
            if base == "m":
                args.append(DecoratedSymbol(ARG_POINT, idx, lift))
            elif base == "phi":
                args.append(DecoratedSymbol(ARG_MAP, idx, lift))
            else:
                raise GroveParseError(f"bad argument symbol {base!r}", pos)
        except GroveParseError:
            raise
        except GroveError as exc:
            raise GroveParseError(str(exc), pos) from exc

    levels = []
    for seg in level_segs:
        level = []
        for base, idx, lift, pos in seg:
            if base == "m":
                raise GroveParseError("argument symbol in operator position", pos)
            try:
                level.append(DecoratedSymbol(base, idx, lift))
            except GroveError as exc:
                raise GroveParseError(str(exc), pos) from exc
        levels.append(tuple(level))

    try:
        expr = TopologyExpr(tuple(levels), tuple(args))
    except GroveError as exc:
        raise GroveParseError(str(exc), 0) from exc
    return canonicalize(expr)


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def _canonical_tuple(symbols: tuple[DecoratedSymbol, ...], key) -> tuple[DecoratedSymbol, ...]:
    ordered = sorted(symbols, key=key)
    counters: dict[str, int] = {}
    relabeled = []
    for s in ordered:
        counters[s.kind] = counters.get(s.kind, 0) + 1
        relabeled.append(DecoratedSymbol(s.kind, counters[s.kind], s.lift))
    return tuple(relabeled)


def canonicalize(expr: TopologyExpr) -> TopologyExpr:
    """Sort tuples by (kind order, lift) and relabel indices from 1.

    Idempotent; expressions equal up to index relabeling and tuple
    reordering map to the same canonical form.
    """
    if expr.is_trivial:
        return TRIVIAL
    levels = tuple(
        _canonical_tuple(level, lambda s: (name_tier(s.kind), s.lift, s.index))
        for level in expr.levels
    )
    args = _canonical_tuple(expr.args, lambda s: (s.kind == ARG_MAP, s.lift, s.index))
    return TopologyExpr(levels, args)


# ---------------------------------------------------------------------------
# algebra: multiplication, primality, factorization
# ---------------------------------------------------------------------------

_UNIT_ARGS = (arg(),)


def _shift(level: tuple[DecoratedSymbol, ...], by: int) -> tuple[DecoratedSymbol, ...]:
    return tuple(
        DecoratedSymbol(tier_name(name_tier(s.kind) + by), s.index, s.lift)
        for s in level
    )


def multiply(left: TopologyExpr, right: TopologyExpr) -> TopologyExpr:
    """Chain concatenation: right's levels continue inward of left's.

    The right factor's tiers are re-kinded to continue the fixed operator
    order, and its argument tuple becomes the product's.  The left factor
    must carry an undecorated single argument (nothing is discarded), which
    makes rank additive and depth satisfy d(a*b) = d(a) + d(b) + 1.
    """
    if left.is_trivial:
        return right
    if right.is_trivial:
        return left
    if left.args != _UNIT_ARGS:
        raise CompositionError(
            "left factor has a decorated argument tuple; its decorations "
            "would be discarded by composition"
        )
    shift = len(left.levels)
    levels = left.levels + tuple(_shift(lv, shift) for lv in right.levels)
    return canonicalize(TopologyExpr(levels, right.args))


def _sub_chain(levels: tuple[tuple[DecoratedSymbol, ...], ...],
               args: tuple[DecoratedSymbol, ...]) -> TopologyExpr:
    base = name_tier(min(levels[0], key=lambda s: name_tier(s.kind)).kind)
    rebased = tuple(_shift(lv, -base) for lv in levels)
    return canonicalize(TopologyExpr(rebased, args))


def factor(expr: TopologyExpr) -> list[TopologyExpr]:
    """Maximal decomposition into prime (single-level) chains.

    The product of the returned factors, folded left to right, equals the
    input.  The trivial tree factors into the empty product.
    """
    if expr.is_trivial:
        return []
    factors = []
    n = len(expr.levels)
    for i, level in enumerate(expr.levels):
        args = expr.args if i == n - 1 else _UNIT_ARGS
        factors.append(_sub_chain((level,), args))
    return factors


def splittings(expr: TopologyExpr) -> list[tuple[TopologyExpr, TopologyExpr]]:
    """All two-factor decompositions into non-trivial chains."""
    if expr.is_trivial:
        return []
    out = []
    for k in range(1, len(expr.levels)):
        head = _sub_chain(expr.levels[:k], _UNIT_ARGS)
        tail = _sub_chain(expr.levels[k:], expr.args)
        out.append((head, tail))
    return out


def is_prime(expr: TopologyExpr) -> bool:
    """True iff the only factorization is trivial * self.

    The trivial tree is a unit, not a prime.
    """
    return not expr.is_trivial and not splittings(expr)


@dataclass(frozen=True)
class Grove:
    """A set of trees, one per part of an integer partition."""

    trees: tuple[TopologyExpr, ...]

    def __post_init__(self):
        if not self.trees:
            raise GroveError("a grove needs at least one tree")

    def render(self) -> str:
        return " | ".join(t.render() for t in self.trees)

    def __str__(self) -> str:
        return self.render()
