"""Invariant measures on shifts, the weak-* distance on cylinder indicators,
periodic-orbit candidates, and approximation of a Markov measure by the
orbit measure of a periodic point."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator

import numpy as np
import sympy
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .chains import primitivity_index
from .errors import (
    AmbiguityError,
    BudgetExhaustedError,
    DepthError,
    InputError,
    MixingRequiredError,
    NotPeriodicError,
    ValidityError,
)
from .systems import (
    SFT,
    UPPoint,
    format_fraction,
    parse_point,
    pow2,
)

# -- measures ---------------------------------------------------------------------


def _as_array(word) -> np.ndarray:
    return np.asarray(word, dtype=np.int16)


def _count_occurrences(seq: np.ndarray, word) -> int:
    t = len(word)
    if t == 0:
        return len(seq)
    if len(seq) < t:
        return 0
    windows = np.lib.stride_tricks.sliding_window_view(seq, t)
    return int((windows == _as_array(word)).all(axis=1).sum())


@dataclass(frozen=True)
class PeriodicMeasure:
    """Mass ``1/p`` on each point of a periodic orbit."""

    point: UPPoint
    alphabet: int = 0

    kind = "periodic"

    def __post_init__(self):
        if self.point.preperiod:
            raise NotPeriodicError("orbit measures need a purely periodic point")
        object.__setattr__(self, "alphabet", max(self.alphabet, max(self.point.period) + 1))

    @cached_property
    def _period(self) -> np.ndarray:
        return _as_array(self.point.period)

    def cylinder_mass(self, word) -> Fraction:
        word = tuple(word)
        if not word:
            return Fraction(1)
        per = self._period
        p = len(per)
        # cyclic occurrences: pad with the first |w|-1 symbols (repeated if needed)
        reps = (len(word) - 1) // p + 1
        extended = np.concatenate([per] * (reps + 1))[:p + len(word) - 1]
        return Fraction(_count_occurrences(extended, word), p)

    def to_text(self) -> str:
        return f"periodic point={self.point}"


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary Markov measure ``mu[w] = pi[w0] * prod P[w_i][w_(i+1)]``."""

    P: tuple
    pi: tuple

    kind = "markov"

    def __post_init__(self):
        P = tuple(tuple(Fraction(v) for v in row) for row in self.P)
        pi = tuple(Fraction(v) for v in self.pi)
        n = len(P)
        if any(len(row) != n for row in P) or len(pi) != n:
            raise InputError("transition matrix must be square and match pi")
        if any(v < 0 for row in P for v in row) or any(sum(row) != 1 for row in P):
            raise InputError("P must be row-stochastic")
        if any(v < 0 for v in pi) or sum(pi) != 1:
            raise InputError("pi must be a probability vector")
        if any(sum(pi[a] * P[a][b] for a in range(n)) != pi[b] for b in range(n)):
            raise InputError("pi is not stationary for P")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def from_matrix(cls, P) -> "MarkovMeasure":
        return cls(P, markov_stationary(P))

    @property
    def alphabet(self) -> int:
        return len(self.P)

    def cylinder_mass(self, word) -> Fraction:
        word = tuple(word)
        if not word:
            return Fraction(1)
        if any(not 0 <= a < self.alphabet for a in word):
            return Fraction(0)
        mass = self.pi[word[0]]
        for a, b in zip(word, word[1:]):
            mass *= self.P[a][b]
        return mass

    def supported_on(self, sft: SFT) -> bool:
        return all(self.P[a][b] == 0 or (a < sft.size and b < sft.size and sft.allowed[a][b])
                   for a in range(self.alphabet) for b in range(self.alphabet))

    def to_text(self) -> str:
        rows = ";".join(",".join(format_fraction(v) for v in row) for row in self.P)
        return f"markov P={rows} pi=" + ",".join(format_fraction(v) for v in self.pi)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Birkhoff average of the first ``n`` orbit points of ``point``."""

    point: object
    n: int
    alphabet: int = 2

    kind = "empirical"

    def __post_init__(self):
        if self.n < 1:
            raise InputError("empirical measures need n >= 1")

    def cylinder_mass(self, word) -> Fraction:
        word = tuple(word)
        need = self.n + max(len(word), 1) - 1
        if self.point.known_depth < need:
            raise DepthError(f"point known to depth {self.point.known_depth}, need {need}")
        seq = _as_array(self.point.prefix(need))
        return Fraction(_count_occurrences(seq, word), self.n)

    def to_text(self) -> str:
        return f"empirical point={self.point} n={self.n}"


def periodic_orbit_measure(point: UPPoint, alphabet: int = 0) -> PeriodicMeasure:
    return PeriodicMeasure(point, alphabet)


def empirical_measure(point, n: int, alphabet: int = 2) -> EmpiricalMeasure:
    return EmpiricalMeasure(point, n, alphabet)


def cylinder_mass(measure, word) -> Fraction:
    return measure.cylinder_mass(word)


def markov_stationary(P) -> tuple:
    """Unique stationary vector of a rational stochastic matrix."""
    P = [[Fraction(v) for v in row] for row in P]
    n = len(P)
    if any(len(row) != n for row in P) or any(sum(row) != 1 for row in P):
        raise InputError("P must be square and row-stochastic")
    adj = csr_matrix(np.array([[1 if v > 0 else 0 for v in row] for row in P], dtype=np.int8))
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    closed = set(range(ncomp))
    for a in range(n):
        for b in range(n):
            if P[a][b] > 0 and labels[a] != labels[b]:
                closed.discard(labels[a])
    if len(closed) != 1:
        raise AmbiguityError(f"P has {len(closed)} closed classes; stationary vector is not unique")
    rat = lambda q: sympy.Rational(q.numerator, q.denominator)
    m = sympy.Matrix(n, n, lambda i, j: rat(P[j][i]) - (1 if i == j else 0))
    m[n - 1, :] = sympy.ones(1, n)
    rhs = sympy.zeros(n, 1)
    rhs[n - 1] = 1
    sol = m.LUsolve(rhs)
    return tuple(Fraction(int(v.p), int(v.q)) for v in sol)


# -- weak-* distance --------------------------------------------------------------


@dataclass(frozen=True)
class FunctionFamily:
    """Cylinder indicators of all words, by length then lexicographically
    (index 1 is the first one-letter word)."""

    alphabet: int

    def word(self, index: int) -> tuple:
        if index < 1:
            raise InputError("function indices start at 1")
        k = self.alphabet
        length, rest = 1, index - 1
        while rest >= k ** length:
            rest -= k ** length
            length += 1
        digits = []
        for _ in range(length):
            rest, r = divmod(rest, k)
            digits.append(r)
        return tuple(reversed(digits))

    def words(self, count: int):
        return [self.word(i) for i in range(1, count + 1)]


@dataclass(frozen=True)
class DistanceInterval:
    lo: Fraction
    hi: Fraction
    terms: int

    def to_text(self) -> str:
        return f"lo={format_fraction(self.lo)} hi={format_fraction(self.hi)} terms={self.terms}"


def truncation_index(tail_tol) -> int:
    """Least ``I`` whose tail ``sum_{i > I} 2**-(i+1) = 2**-(I+1)`` is below ``tail_tol``."""
    tail_tol = Fraction(tail_tol)
    if tail_tol <= 0:
        raise InputError("tail tolerance must be positive")
    index = 0
    while pow2(index + 1) >= tail_tol:
        index += 1
    return index


def weak_star_distance(mu, nu, tail_tol, alphabet: int | None = None) -> DistanceInterval:
    """Certified enclosure of ``sum_i |mu[w_i] - nu[w_i]| / 2**(i+1)``."""
    index = truncation_index(tail_tol)
    family = FunctionFamily(alphabet or max(mu.alphabet, nu.alphabet))
    partial = Fraction(0)
    for i, w in enumerate(family.words(index), start=1):
        partial += abs(mu.cylinder_mass(w) - nu.cylinder_mass(w)) * pow2(i + 1)
    return DistanceInterval(partial, partial + pow2(index + 1), index)


# -- periodic candidates -------------------------------------------------------------


def _lyndon_words(k: int, n: int) -> Iterator[tuple]:
    """Lyndon words of length exactly ``n`` over ``k`` letters, in lexicographic
    order (Fredricksen-Kessler-Maiorana)."""
    w = [-1]
    while w:
        w[-1] += 1
        if len(w) == n:
            yield tuple(w)
        m = len(w)
        while len(w) < n:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()


def sigmund_candidates(sft: SFT, ell: int = 1) -> Iterator[PeriodicMeasure]:
    """Orbit measures of legal periodic orbits of period ``>= ell``, by period
    then by the lexicographically least rotation."""
    if ell < 1:
        raise InputError("ell must be positive")
    q = ell
    while True:
        for w in _lyndon_words(sft.size, q):
            if sft.is_legal_word(w + w[:1]):
                yield PeriodicMeasure(UPPoint((), w), sft.size)
        q += 1


# -- approximation pipeline ----------------------------------------------------------


@dataclass(frozen=True)
class ApproximationResult:
    nu: PeriodicMeasure
    z: UPPoint
    interval: DistanceInterval
    details: dict = field(default_factory=dict)


def _sample_markov(mu: MarkovMeasure, start: int, length: int, rng: np.random.Generator) -> tuple:
    P = np.array([[float(v) for v in row] for row in mu.P])
    cum = np.cumsum(P, axis=1)
    u = rng.random(length)
    out = np.empty(length, dtype=np.int64)
    a = start
    for i in range(length):
        out[i] = a
        a = int(np.searchsorted(cum[a], u[i], side="right"))
        a = min(a, len(P) - 1)
        while P[out[i]][a] == 0:
            a -= 1
    return tuple(int(v) for v in out)


def _largest_remainder(masses, m: int):
    raw = [q * m for q in masses]
    base = [int(r) for r in raw]
    short = m - sum(base)
    order = sorted(range(len(raw)), key=lambda j: (-(raw[j] - base[j]), j))
    for j in order[:short]:
        base[j] += 1
    return base


def approximate_measure(sft: SFT, mu, eps, seed: int, max_length: int = 2**20,
                        draws_per_length: int = 8) -> ApproximationResult:
    """Periodic-orbit measure within weak-* distance ``eps`` of ``mu``.

    Representative orbit segments are sampled from ``mu`` (seeded) and
    accepted only once their Birkhoff averages on the relevant cylinders
    are within ``eps/8``; the segments are then glued by a periodic
    specification point and the distance is certified exactly.
    """
    from .specification import SpecRequest, SpecWindow, periodic_spec_point, spec_constant

    eps = Fraction(eps)
    tail = eps / 2
    if isinstance(mu, PeriodicMeasure):
        return ApproximationResult(mu, mu.point, weak_star_distance(mu, mu, tail, sft.size),
                                   {"short_circuit": True})
    if not isinstance(mu, MarkovMeasure):
        raise InputError("approximate_measure takes a Markov or periodic measure")
    if primitivity_index(sft) is None:
        raise MixingRequiredError("approximation needs a primitive SFT")
    if not mu.supported_on(sft):
        raise ValidityError("the Markov measure charges forbidden transitions")

    index = truncation_index(tail)
    family = FunctionFamily(sft.size).words(index)
    t_f = max(len(w) for w in family)
    # cylinder indicators of length t_f are constant on balls of radius 2**-(t_f-1)
    spec_eps = pow2(t_f - 1) / 4
    big_m = spec_constant(sft, spec_eps)
    parts = [a for a in range(sft.size) if mu.pi[a] > 0]
    s = len(parts)
    m = int(8 * s / eps) + 1
    weights = _largest_remainder([mu.pi[a] for a in parts], m)
    n_len = int(16 * big_m / eps) + 1
    rng = np.random.default_rng(seed)
    tol = eps / 8

    samples = {}
    attempts = 0
    while len(samples) < s:
        if n_len > max_length:
            raise BudgetExhaustedError(
                f"Birkhoff averages did not reach {format_fraction(tol)} below length {max_length}",
                bound="|Birkhoff average - mu[w]| < eps/8")
        samples = {}
        for a in parts:
            for _ in range(draws_per_length):
                attempts += 1
                word = _sample_markov(mu, a, n_len + t_f - 1, rng)
                seq = _as_array(word)
                ok = all(abs(Fraction(_count_occurrences(seq, w), n_len) - mu.cylinder_mass(w)) < tol
                         for w in family)
                # the sample must also read as a legal point
                if ok and sft.is_legal_word(word):
                    samples[a] = sft.freeze(word)
                    break
            else:
                break
        if len(samples) < s:
            n_len *= 2
    if 2 * big_m / n_len >= tol:
        raise AssertionError("gap fraction bound violated")

    windows = []
    t = 0
    for a, count in zip(parts, weights):
        for _ in range(count):
            windows.append(SpecWindow.starting_at(t, t + n_len - 1, samples[a]))
            t += n_len + big_m
    p = m * (n_len + big_m)
    request = SpecRequest(spec_eps, tuple(windows), p)
    z, cert = periodic_spec_point(sft, request)
    nu = PeriodicMeasure(z, sft.size)
    interval = weak_star_distance(mu, nu, tail, sft.size)
    details = {"M": big_m, "N": n_len, "m": m, "p": p, "weights": tuple(weights),
               "draws": attempts, "spec_eps": spec_eps, "terms": index, "certificate": cert}
    if interval.hi >= eps:
        raise BudgetExhaustedError(f"certified distance {format_fraction(interval.hi)} is not below eps",
                                   best=interval, bound="hi < eps")
    return ApproximationResult(nu, z, interval, details)


# -- text format -----------------------------------------------------------------------


def parse_measure(text: str):
    text = text.strip()
    try:
        if text.startswith("markov "):
            fields = dict(tok.split("=", 1) for tok in text[len("markov "):].split())
            P = [[Fraction(v) for v in row.split(",")] for row in fields["P"].split(";")]
            pi = [Fraction(v) for v in fields["pi"].split(",")]
            return MarkovMeasure(P, pi)
        if text.startswith("periodic point="):
            return PeriodicMeasure(parse_point(text[len("periodic point="):]))
        if text.startswith("empirical point="):
            body, n = text[len("empirical point="):].rsplit(" n=", 1)
            return EmpiricalMeasure(parse_point(body), int(n))
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed measure {text!r}") from exc
    raise InputError(f"unknown measure kind in {text!r}")


def format_measure(measure) -> str:
    return measure.to_text()


__all__ = [
    "ApproximationResult", "DistanceInterval", "EmpiricalMeasure", "FunctionFamily",
    "MarkovMeasure", "PeriodicMeasure", "approximate_measure", "cylinder_mass",
    "empirical_measure", "format_measure", "markov_stationary", "parse_measure",
    "periodic_orbit_measure", "sigmund_candidates", "truncation_index", "weak_star_distance",
]
