"""Finitely presented zero-dimensional systems.

Three kinds of system are supported: one-sided vertex shifts of finite type
(:class:`SFT`, which includes full shifts), odometers truncated at a finite
depth (:class:`Odometer`) and finite products of SFTs with the weighted
product metric (:class:`Product`).  Points are exact (:class:`UPPoint`,
:class:`OdometerPoint`, :class:`ProductPoint`) or finite-precision
(:class:`ApproxPoint`).

Distances are exact dyadic rationals.  On a shift space the metric is
``d(x, y) = 2**-k`` where ``k`` is the first index at which ``x`` and ``y``
disagree; odometers use the same rule on coordinates and products use
``sum(2**-n * d_n)`` with factors numbered from 1.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import DepthError, InputError, ValidityError

Word = tuple  # tuple[int, ...]

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


# -- dyadic helpers ---------------------------------------------------------

@lru_cache(maxsize=4096)
def pow2(k: int) -> Fraction:
    """Return ``2**-k`` as an exact fraction (``k`` may be negative)."""
    return Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)


def dyadic_exponent(eps) -> int:
    """Return ``k`` with ``eps == 2**-k``; raise :class:`InputError` otherwise."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InputError(f"expected a positive power of two, got {eps}")
    num, den = eps.numerator, eps.denominator
    if num == 1 and den & (den - 1) == 0:
        return den.bit_length() - 1
    if den == 1 and num & (num - 1) == 0:
        return -(num.bit_length() - 1)
    raise InputError(f"{eps} is not a power of two")


def parse_dyadic(text: str) -> Fraction:
    """Parse ``1/4``, ``0.25``, ``2^-2`` or ``2**-2`` into a fraction."""
    text = text.strip()
    try:
        for sep in ("^", "**"):
            if sep in text:
                base, exp = text.split(sep)
                if base.strip() != "2":
                    raise InputError(f"bad dyadic {text!r}")
                return pow2(-int(exp))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad number {text!r}") from exc


def format_fraction(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# -- words ------------------------------------------------------------------

def format_word(word: Sequence[int]) -> str:
    return "".join(DIGITS[s] for s in word)


def parse_word(text: str) -> Word:
    try:
        return tuple(DIGITS.index(c) for c in text.strip().lower())
    except ValueError as exc:
        raise InputError(f"bad word {text!r}") from exc


def _primitive_root(word: Word) -> Word:
    n = len(word)
    for d in range(1, n):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


# -- points -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class UPPoint:
    """Eventually periodic sequence ``preperiod + period + period + ...``.

    Stored in canonical form: the period is primitive and the preperiod is
    as short as possible.  Two points are equal iff their fields are equal.
    """

    preperiod: Word = ()
    period: Word = (0,)

    def __post_init__(self):
        pre, per = tuple(self.preperiod), tuple(self.period)
        if not per:
            raise InputError("period must be nonempty")
        per = _primitive_root(per)
        lp = len(per)
        strip = 0
        while strip < len(pre) and pre[len(pre) - 1 - strip] == per[(lp - 1 - strip) % lp]:
            strip += 1
        if strip:
            r = strip % lp
            per = per[lp - r:] + per[:lp - r]
            pre = pre[:len(pre) - strip]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def _trusted(cls, pre: Word, per: Word) -> "UPPoint":
        # caller guarantees canonical form
        p = object.__new__(cls)
        object.__setattr__(p, "preperiod", pre)
        object.__setattr__(p, "period", per)
        return p

    @classmethod
    def periodic(cls, word: Sequence[int]) -> "UPPoint":
        return cls((), tuple(word))

    def symbol(self, i: int) -> int:
        pre = self.preperiod
        if i < len(pre):
            return pre[i]
        per = self.period
        return per[(i - len(pre)) % len(per)]

    def prefix(self, n: int) -> Word:
        return self.window(0, n)

    def window(self, start: int, length: int) -> Word:
        """Symbols ``start .. start + length - 1``."""
        pre, per = self.preperiod, self.period
        lpre = len(pre)
        if start + length <= lpre:
            return pre[start:start + length]
        head = pre[start:] if start < lpre else ()
        rem = length - len(head)
        r = (max(start, lpre) - lpre) % len(per)
        first = per[r:r + rem]
        if len(first) == rem:
            return head + first
        rem -= len(first)
        q, s = divmod(rem, len(per))
        return head + first + per * q + per[:s]

    def shift(self, n: int = 1) -> "UPPoint":
        pre, per = self.preperiod, self.period
        if n <= len(pre):
            return UPPoint._trusted(pre[n:], per)
        r = (n - len(pre)) % len(per)
        return UPPoint._trusted((), per[r:] + per[:r])

    @property
    def is_periodic(self) -> bool:
        return not self.preperiod

    @property
    def known_depth(self) -> float:
        return math.inf

    def __str__(self) -> str:
        return f"pre={format_word(self.preperiod)} per={format_word(self.period)}"


@dataclass(frozen=True, slots=True)
class ApproxPoint:
    """A point known only through its first ``resolution + 1`` symbols.

    The true point lies in the cylinder of ``prefix``; its distance to any
    point extending ``prefix`` is at most ``2**-(resolution + 1)``.
    """

    prefix_word: Word
    resolution: int = -1

    def __post_init__(self):
        w = tuple(self.prefix_word)
        object.__setattr__(self, "prefix_word", w)
        if self.resolution < 0:
            object.__setattr__(self, "resolution", len(w) - 1)
        if len(w) < self.resolution + 1:
            raise InputError("prefix shorter than resolution + 1")

    def symbol(self, i: int) -> int:
        if i >= len(self.prefix_word):
            raise DepthError(f"symbol {i} beyond known depth {len(self.prefix_word)}")
        return self.prefix_word[i]

    def prefix(self, n: int) -> Word:
        if n > len(self.prefix_word):
            raise DepthError(f"prefix {n} beyond known depth {len(self.prefix_word)}")
        return self.prefix_word[:n]

    def window(self, start: int, length: int) -> Word:
        return self.prefix(start + length)[start:]

    def shift(self, n: int = 1) -> "ApproxPoint":
        w = self.prefix_word[n:]
        if not w:
            raise DepthError("shifted past the known prefix")
        return ApproxPoint(w, max(self.resolution - n, 0))

    @property
    def known_depth(self) -> int:
        return len(self.prefix_word)

    def __str__(self) -> str:
        return f"approx={format_word(self.prefix_word)}"


ShiftPoint = Union[UPPoint, ApproxPoint]


@dataclass(frozen=True, slots=True)
class OdometerPoint:
    coords: tuple

    def __str__(self) -> str:
        return "coords=" + ",".join(map(str, self.coords))


@dataclass(frozen=True, slots=True)
class ProductPoint:
    components: tuple

    def __str__(self) -> str:
        return " | ".join(str(c) for c in self.components)


# -- systems ----------------------------------------------------------------

@dataclass(frozen=True)
class SFT:
    """One-sided vertex shift on symbols ``0 .. n-1``.

    ``allowed[a][b]`` is true when ``b`` may follow ``a``.  The graph must be
    essential: every symbol has a successor and a predecessor.
    """

    allowed: tuple
    expansivity_constant: Fraction = field(default=Fraction(1, 2), compare=False)

    def __post_init__(self):
        rows = tuple(tuple(bool(v) for v in row) for row in self.allowed)
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise InputError("transition relation must be a nonempty square matrix")
        for a in range(n):
            if not any(rows[a]):
                raise InputError(f"symbol {a} has no successor (graph not essential)")
            if not any(rows[b][a] for b in range(n)):
                raise InputError(f"symbol {a} has no predecessor (graph not essential)")
        object.__setattr__(self, "allowed", rows)

    # constructors
    @classmethod
    def full_shift(cls, n: int = 2) -> "SFT":
        return cls(tuple((True,) * n for _ in range(n)))

    @classmethod
    def golden_mean(cls) -> "SFT":
        return cls(((True, True), (True, False)))

    @classmethod
    def from_forbidden(cls, n: int, forbidden) -> "SFT":
        rows = [[True] * n for _ in range(n)]
        for a, b in forbidden:
            rows[a][b] = False
        return cls(rows)

    @classmethod
    def from_edges(cls, n: int, edges) -> "SFT":
        rows = [[False] * n for _ in range(n)]
        for a, b in edges:
            rows[a][b] = True
        return cls(rows)

    @classmethod
    def from_matrix(cls, matrix) -> "SFT":
        return cls(tuple(tuple(bool(v) for v in row) for row in np.asarray(matrix)))

    @property
    def size(self) -> int:
        return len(self.allowed)

    @property
    def d(self) -> int:
        return len(self.allowed) - 1

    @cached_property
    def successors(self) -> tuple:
        return tuple(tuple(b for b, ok in enumerate(row) if ok) for row in self.allowed)

    @cached_property
    def predecessors(self) -> tuple:
        n = self.size
        return tuple(tuple(a for a in range(n) if self.allowed[a][b]) for b in range(n))

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.allowed, dtype=np.int64)

    def is_legal_word(self, word: Sequence[int]) -> bool:
        n = self.size
        if any(not 0 <= s < n for s in word):
            return False
        allowed = self.allowed
        return all(allowed[a][b] for a, b in zip(word, word[1:]))

    def freeze(self, word: Sequence[int]) -> UPPoint:
        """Extend ``word`` by its lexicographically least legal continuation."""
        word = tuple(word)
        if not word or not self.is_legal_word(word):
            raise ValidityError(f"word {format_word(word)} is not legal")
        succ = self.successors
        seen = {}
        tail = []
        s = word[-1]
        while s not in seen:
            seen[s] = len(tail)
            s = succ[s][0]
            tail.append(s)
        start = seen[s]
        # tail[start:] is one full loop ending back at s
        pre = word + tuple(tail[:start])
        per = tuple(tail[start:])
        return UPPoint(pre, per)

    def __str__(self) -> str:
        return system_to_text(self).strip()


@dataclass(frozen=True)
class Odometer:
    """Odometer with scale ``s_1 | s_2 | ... | s_J`` stored at depth ``J``."""

    scale: tuple

    def __post_init__(self):
        s = tuple(int(v) for v in self.scale)
        if not s or any(v < 1 for v in s):
            raise InputError("odometer scale must be positive integers")
        for a, b in zip(s, s[1:]):
            if b % a:
                raise InputError(f"scale {s} violates divisibility")
        object.__setattr__(self, "scale", s)

    @property
    def depth(self) -> int:
        return len(self.scale)

    def point_from_integer(self, k: int) -> OdometerPoint:
        return OdometerPoint(tuple(k % s for s in self.scale))


@dataclass(frozen=True)
class Product:
    """Finite product of SFTs; factor ``n`` (from 1) carries weight ``2**-n``."""

    factors: tuple

    def __post_init__(self):
        f = tuple(self.factors)
        if not f or not all(isinstance(x, SFT) for x in f):
            raise InputError("product needs at least one SFT factor")
        object.__setattr__(self, "factors", f)

    @property
    def count(self) -> int:
        return len(self.factors)


System = Union[SFT, Odometer, Product]


def two_cycle_sft(n: int) -> SFT:
    """Mixing SFT with exactly two simple cycles, of lengths ``n+1`` and ``n+2``,
    through vertex 0; it has no point of period ``n``."""
    a = list(range(1, n + 1))
    b = list(range(n + 1, 2 * n + 2))
    edges = []
    for cyc in (a, b):
        path = [0] + cyc + [0]
        edges.extend(zip(path, path[1:]))
    return SFT.from_edges(2 * n + 2, edges)


def no_periodic_product(factors: int) -> Product:
    """Truncation of the product whose ``n``-th factor has no period-``n`` point."""
    return Product(tuple(two_cycle_sft(n) for n in range(1, factors + 1)))


# -- maps -------------------------------------------------------------------

def _check_kind(system, point):
    if isinstance(system, SFT):
        ok = isinstance(point, (UPPoint, ApproxPoint))
    elif isinstance(system, Odometer):
        ok = isinstance(point, OdometerPoint)
    elif isinstance(system, Product):
        ok = isinstance(point, ProductPoint) and len(point.components) == system.count
    else:
        raise TypeError(f"unknown system {type(system).__name__}")
    if not ok:
        raise TypeError(f"{type(point).__name__} is not a point of {type(system).__name__}")


def validate_point(system: System, point) -> bool:
    """True iff ``point`` belongs to the presented space."""
    try:
        _check_kind(system, point)
    except TypeError:
        return False
    if isinstance(system, SFT):
        if isinstance(point, ApproxPoint):
            return system.is_legal_word(point.prefix_word)
        pre, per = point.preperiod, point.period
        return system.is_legal_word(pre + per + per[:1])
    if isinstance(system, Odometer):
        x = point.coords
        if len(x) != system.depth:
            return False
        if any(not 0 <= v < s for v, s in zip(x, system.scale)):
            return False
        return all(x[j + 1] % system.scale[j] == x[j] for j in range(len(x) - 1))
    return all(validate_point(f, c) for f, c in zip(system.factors, point.components))


def apply_map(system: System, point, n: int = 1):
    """Image of ``point`` under ``n`` iterates of the system map."""
    if not validate_point(system, point):
        raise ValidityError(f"{point} is not a point of the system")
    return _iterate(system, point, n)


def _iterate(system, point, n):
    if isinstance(point, (UPPoint, ApproxPoint)):
        return point.shift(n)
    if isinstance(point, OdometerPoint):
        return OdometerPoint(tuple((v + n) % s for v, s in zip(point.coords, system.scale)))
    return ProductPoint(tuple(c.shift(n) for c in point.components))


def agreement(x, y, x_offset: int = 0, y_offset: int = 0):
    """First index where ``shift^x_offset(x)`` and ``shift^y_offset(y)`` differ.

    Returns ``(k, exact)``.  ``k`` is ``None`` when the sequences are equal.
    ``exact`` is false when a finite-precision point ran out of symbols
    first; ``k`` is then the number of symbols compared.
    """
    if isinstance(x, UPPoint) and isinstance(y, UPPoint):
        if x_offset == y_offset == 0 and x == y:
            return None, True
        lx = max(len(x.preperiod) - x_offset, 0)
        ly = max(len(y.preperiod) - y_offset, 0)
        bound = max(lx, ly) + math.lcm(len(x.period), len(y.period))
        # compare in chunks to keep the common case fast
        i = 0
        chunk = 32
        while i < bound:
            step = min(chunk, bound - i)
            a = x.window(x_offset + i, step)
            b = y.window(y_offset + i, step)
            if a != b:
                for j, (s, t) in enumerate(zip(a, b)):
                    if s != t:
                        return i + j, True
            i += step
            chunk *= 2
        return None, True
    depth = min(x.known_depth - x_offset, y.known_depth - y_offset)
    depth = int(depth)
    a = x.window(x_offset, depth)
    b = y.window(y_offset, depth)
    for j, (s, t) in enumerate(zip(a, b)):
        if s != t:
            return j, True
    return depth, False


def distance(system: System, x, y) -> Fraction:
    """Exact distance between two exact points of ``system``."""
    lo, hi = distance_interval(system, x, y)
    if lo != hi:
        raise DepthError("distance not determined by the known prefixes; use distance_interval")
    return lo


def distance_interval(system: System, x, y):
    """Certified ``(lo, hi)`` enclosure of ``d(x, y)``; ``lo == hi`` for exact points."""
    _check_kind(system, x)
    _check_kind(system, y)
    if isinstance(system, SFT):
        k, exact = agreement(x, y)
        if k is None:
            return Fraction(0), Fraction(0)
        if exact:
            return pow2(k), pow2(k)
        return Fraction(0), pow2(k)
    if isinstance(system, Odometer):
        for j, (a, b) in enumerate(zip(x.coords, y.coords)):
            if a != b:
                return pow2(j), pow2(j)
        return Fraction(0), Fraction(0)
    lo = hi = Fraction(0)
    for n, (f, a, b) in enumerate(zip(system.factors, x.components, y.components), start=1):
        dl, dh = distance_interval(f, a, b)
        lo += pow2(n) * dl
        hi += pow2(n) * dh
    return lo, hi


def product_truncation_depth(eps) -> int:
    """Smallest ``D`` with ``sum_{n > D} 2**-n < eps / 2`` for ``eps = 2**-k``."""
    k = dyadic_exponent(eps)
    if k < 0:
        raise InputError("eps must be at most 1")
    return k + 2


# -- text formats -------------------------------------------------------------

def system_to_text(system: System) -> str:
    if isinstance(system, SFT):
        lines = [f"sft d={system.d}"]
        for a in range(system.size):
            for b in range(system.size):
                if not system.allowed[a][b]:
                    lines.append(f"forbid {DIGITS[a]}{DIGITS[b]}")
        return "\n".join(lines) + "\n"
    if isinstance(system, Odometer):
        return "odometer s=" + ",".join(map(str, system.scale)) + "\n"
    parts = ["product"]
    for f in system.factors:
        parts.append("factor")
        parts.append(system_to_text(f).strip())
    return "\n".join(parts) + "\n"


def _kv(token: str, key: str) -> str:
    if not token.startswith(key + "="):
        raise InputError(f"expected {key}=..., got {token!r}")
    return token[len(key) + 1:]


def parse_system(text: str, base_dir: str | None = None) -> System:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InputError("empty system definition")
    head = lines[0].split()
    kind = head[0]
    if kind == "sft":
        if len(head) != 2:
            raise InputError("expected 'sft d=<int>'")
        try:
            n = int(_kv(head[1], "d")) + 1
        except ValueError as exc:
            raise InputError("bad alphabet size") from exc
        forbidden = []
        for ln in lines[1:]:
            tok = ln.split()
            if len(tok) != 2 or tok[0] != "forbid":
                raise InputError(f"unexpected line {ln!r}")
            pair = parse_word(tok[1])
            if len(pair) != 2 or max(pair) >= n:
                raise InputError(f"bad forbidden pair {tok[1]!r}")
            forbidden.append(pair)
        return SFT.from_forbidden(n, forbidden)
    if kind == "odometer":
        if len(head) != 2 or len(lines) != 1:
            raise InputError("expected 'odometer s=<int,...>'")
        try:
            return Odometer(tuple(int(v) for v in _kv(head[1], "s").split(",")))
        except ValueError as exc:
            raise InputError("bad odometer scale") from exc
    if kind == "product":
        if len(head) > 1:
            factors = []
            for path in head[1:]:
                if base_dir and not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                try:
                    with open(path) as fh:
                        sub = parse_system(fh.read(), os.path.dirname(path))
                except OSError as exc:
                    raise InputError(f"cannot read factor {path}") from exc
                factors.append(sub)
            return Product(tuple(factors))
        blocks, cur = [], None
        for ln in lines[1:]:
            if ln == "factor":
                cur = []
                blocks.append(cur)
            elif cur is None:
                raise InputError("inline product needs 'factor' separators")
            else:
                cur.append(ln)
        return Product(tuple(parse_system("\n".join(b)) for b in blocks))
    raise InputError(f"unknown system kind {kind!r}")


def load_system(path: str) -> System:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read system file {path}") from exc
    return parse_system(text, os.path.dirname(os.path.abspath(path)))


def parse_point(text: str):
    """Parse ``pre=<w> per=<w>``, ``approx=<w>``, ``coords=<i,...>`` or a
    ``|``-separated product of those."""
    text = text.strip()
    if "|" in text:
        return ProductPoint(tuple(parse_point(part) for part in text.split("|")))
    tokens = text.split()
    if len(tokens) == 1 and tokens[0].startswith("approx="):
        return ApproxPoint(parse_word(_kv(tokens[0], "approx")))
    if len(tokens) == 1 and tokens[0].startswith("coords="):
        try:
            return OdometerPoint(tuple(int(v) for v in _kv(tokens[0], "coords").split(",")))
        except ValueError as exc:
            raise InputError(f"bad coordinates {text!r}") from exc
    if len(tokens) == 2:
        pre = parse_word(_kv(tokens[0], "pre"))
        per = parse_word(_kv(tokens[1], "per"))
        return UPPoint(pre, per)
    raise InputError(f"cannot parse point {text!r}")


@lru_cache(maxsize=None)
def words_of_length(sft: SFT, n: int) -> tuple:
    """All legal words of length ``n`` in lexicographic order."""
    if n == 0:
        return ((),)
    out = [(a,) for a in range(sft.size)]
    succ = sft.successors
    for _ in range(n - 1):
        out = [w + (b,) for w in out for b in succ[w[-1]]]
    return tuple(out)
