"""Entropy, the equicontinuity / positive-entropy dichotomy, and horizon-stamped
classification of points in the recurrence hierarchy."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
import sympy

from .chains import decompose, restrict
from .errors import DepthError, InputError
from .systems import (
    SFT,
    Product,
    UPPoint,
    format_word,
)

# -- entropy --------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyValue:
    """``log`` of the Perron root, with a certified enclosure.

    ``root_lo <= rho <= root_hi`` exactly; ``lo <= log rho <= hi`` with
    outward rounding.  ``polynomial`` is the minimal polynomial of ``rho``.
    """

    lo: mpmath.mpf
    hi: mpmath.mpf
    root_lo: Fraction
    root_hi: Fraction
    polynomial: str
    exact_zero: bool = False

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self):
        return self.hi - self.lo

    def __str__(self):
        if self.exact_zero:
            return "entropy = 0 (exact; root 1, polynomial x - 1)"
        return (f"entropy in [{mpmath.nstr(self.lo, 17)}, {mpmath.nstr(self.hi, 17)}]"
                f" = log(rho), rho root of {self.polynomial}")


def _mpf_to_fraction(x) -> Fraction:
    man, exp = x.man_exp
    return Fraction(man) * Fraction(2) ** exp


def _cw_bounds(b, v):
    """Collatz-Wielandt bounds for a positive vector ``v`` (exact)."""
    n = len(v)
    ratios = [sum(b[i][j] * v[j] for j in range(n)) / v[i] for i in range(n)]
    return min(ratios), max(ratios)


def _perron_enclosure(a: np.ndarray, tol: float):
    """Exact rational bounds on the spectral radius of an irreducible matrix."""
    n = a.shape[0]
    # shifting by I makes the matrix primitive without moving the eigenvector
    b = a + np.identity(n, dtype=a.dtype)
    bl = b.astype(int).tolist()
    vals, vecs = np.linalg.eig(b.astype(float))
    v = np.abs(vecs[:, int(np.argmax(vals.real))].real)
    v = np.maximum(v, 1e-12)
    for _ in range(50):
        v = b @ v
        v = v / v.max()
    lo, hi = _cw_bounds(bl, [Fraction(float(x)) for x in v])
    dps = 30
    while hi - lo > Fraction(tol) * lo / 4 and lo > 1:
        with mpmath.workdps(dps):
            mv = [mpmath.mpf(float(x)) for x in v]
            for _ in range(200 + 20 * dps):
                mv = [mpmath.fsum(bl[i][j] * mv[j] for j in range(n)) for i in range(n)]
                top = max(mv)
                mv = [x / top for x in mv]
            lo, hi = _cw_bounds(bl, [_mpf_to_fraction(x) for x in mv])
        dps *= 2
        if dps > 2000:
            break
    return lo - 1, hi - 1


def _interval_log(lo: Fraction, hi: Fraction):
    iv = mpmath.iv
    with mpmath.workdps(40):
        a = iv.log(iv.mpf(lo.numerator) / iv.mpf(lo.denominator)).a
        b = iv.log(iv.mpf(hi.numerator) / iv.mpf(hi.denominator)).b
    return mpmath.mpf(a), mpmath.mpf(b)


def _minimal_polynomial(a: np.ndarray, lo: Fraction, hi: Fraction) -> str:
    x = sympy.Symbol("x")
    poly = sympy.Matrix(a.astype(int).tolist()).charpoly(x).as_expr()
    for factor, _ in sympy.factor_list(poly)[1]:
        if sympy.Poly(factor, x).count_roots(sympy.Rational(lo.numerator, lo.denominator),
                                             sympy.Rational(hi.numerator, hi.denominator)):
            return str(sympy.Poly(factor, x).monic().as_expr())
    return str(poly)


def _branching(sft: SFT, symbols) -> bool:
    inside = set(symbols)
    return any(sum(1 for b in sft.successors[a] if b in inside) > 1 for a in symbols)


def sft_entropy(sft: SFT, tol: float = 1e-12) -> EntropyValue:
    """Topological entropy of ``sft`` as a certified enclosure of ``log rho``."""
    rep = decompose(sft)
    branching = [b for b in rep.basic_sets if _branching(sft, b.symbols)]
    if not branching:
        # every basic set is a single cycle
        return EntropyValue(mpmath.mpf(0), mpmath.mpf(0), Fraction(1), Fraction(1), "x - 1", True)
    enclosures = []
    for b in branching:
        sub, _ = restrict(sft, b.symbols)
        a = np.array(sub.matrix, dtype=np.int64)
        enclosures.append((a,) + _perron_enclosure(a, tol))
    # the largest root belongs to the block with the largest lower bound,
    # unless another block's upper bound reaches past it
    a, lo, _ = max(enclosures, key=lambda e: e[1])
    hi = max(e[2] for e in enclosures)
    elo, ehi = _interval_log(lo, hi)
    return EntropyValue(elo, ehi, lo, hi, _minimal_polynomial(a, lo, hi))


def word_complexity(system, n: int) -> int:
    """Number of legal words of length ``n`` (exact integer)."""
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(system, Product):
        out = 1
        for f in system.factors:
            out *= word_complexity(f, n)
        return out
    succ = system.successors
    counts = [1] * system.size
    for _ in range(n - 1):
        counts = [sum(counts[b] for b in succ[a]) for a in range(system.size)]
    return sum(counts)


# -- dichotomy -------------------------------------------------------------------


@dataclass(frozen=True)
class Dichotomy:
    kind: str  # "equicontinuous" or "positive_entropy"
    basic_sets: tuple
    witness: object = None  # EmbeddingData for the positive-entropy case
    restricted_to: tuple = ()

    @property
    def positive_entropy(self) -> bool:
        return self.kind == "positive_entropy"


def _embedding_in_basic_set(sft: SFT, basic):
    from .embedding import EmbeddingData, build_embedding, check_embedding

    sub, labels = restrict(sft, basic.symbols)
    local = {v: i for i, v in enumerate(labels)}
    if basic.period == 1:
        targets = [(0,), (1,)]
    else:
        u = local[basic.classes[0][0]]
        targets = [(u,), (u,)]
    inner = build_embedding(sub, targets, Fraction(1, 2), require_primitive=False)
    relabel = lambda w: tuple(labels[s] for s in w)
    data = EmbeddingData(sft, inner.m, inner.r, tuple(map(relabel, inner.anchors)),
                         tuple(map(relabel, inner.probes)), inner.eps)
    check_embedding(data)
    return data


def classify_dichotomy(sft: SFT) -> Dichotomy:
    """Equicontinuous iff the nonwandering part is a union of cycles; otherwise
    positive entropy, witnessed by an embedded full 2-shift."""
    rep = decompose(sft)
    for b in rep.basic_sets:
        if _branching(sft, b.symbols):
            return Dichotomy("positive_entropy", rep.basic_sets, _embedding_in_basic_set(sft, b), b.symbols)
    return Dichotomy("equicontinuous", rep.basic_sets)


# -- point classifier -------------------------------------------------------------

RR_MAX_K = 32


@dataclass(frozen=True)
class ClassifierReport:
    horizon: int
    depth: int
    exact: bool
    periodic: object  # True / False / None (undecided for finite data)
    recurrent: bool
    minimal: bool
    regularly_recurrent: bool
    nonwandering: bool
    first_return: object = None
    gap_bound: object = None
    gap_violation: object = None  # (start, length) of a gap longer than gap_bound
    rr_witness: object = None  # k with every return at multiples of k
    rr_refutations: tuple = ()  # (k, n): f^(k n) misses the cylinder
    nonwandering_witness: object = None  # return length in the language
    notes: tuple = field(default=())

    def flags(self):
        return {
            "periodic": self.periodic,
            "regularly_recurrent": self.regularly_recurrent,
            "minimal": self.minimal,
            "recurrent": self.recurrent,
            "nonwandering": self.nonwandering,
        }

    def consistent(self) -> bool:
        chain = [self.periodic is True, self.regularly_recurrent, self.minimal,
                 self.recurrent, self.nonwandering]
        return all(not a or b for a, b in zip(chain, chain[1:]))

    def to_text(self) -> str:
        stamp = "exact" if self.exact else f"@H={self.horizon},t={self.depth}"
        lines = [f"classification {stamp}"]
        for name, val in self.flags().items():
            lines.append(f"{name}: {str(val).lower()}")
        if self.first_return is not None:
            lines.append(f"first_return n={self.first_return}")
        if self.gap_bound is not None:
            lines.append(f"gap_bound G={self.gap_bound}")
        if self.gap_violation is not None:
            lines.append(f"gap_violation start={self.gap_violation[0]} length={self.gap_violation[1]}")
        if self.rr_witness is not None:
            lines.append(f"rr_witness k={self.rr_witness}")
        for k, n in self.rr_refutations:
            lines.append(f"rr_refuted k={k} n={n}")
        if self.nonwandering_witness is not None:
            lines.append(f"nonwandering_return n={self.nonwandering_witness}")
        return "\n".join(lines) + "\n"


def _components(system, point):
    if isinstance(system, Product):
        return list(zip(system.factors, point.components))
    return [(system, point)]


def _symbols(point, length: int) -> np.ndarray:
    try:
        return np.fromiter(point.prefix(length), dtype=np.int16, count=length)
    except DepthError as exc:
        raise DepthError(f"classification needs {length} known symbols") from exc


def _cylinder_hits(system, point, horizon: int, depth: int) -> np.ndarray:
    """``hits[n]`` is true when ``f^n(point)`` is in the depth-``t`` cylinder of ``point``."""
    hits = np.ones(horizon + 1, dtype=bool)
    for _, comp in _components(system, point):
        s = _symbols(comp, horizon + depth)
        windows = np.lib.stride_tricks.sliding_window_view(s, depth)[:horizon + 1]
        hits &= (windows == s[:depth]).all(axis=1)
    return hits


def _return_lengths(sft: SFT, word, horizon: int) -> np.ndarray:
    """Which ``n`` in ``1..horizon`` admit a legal word with ``word`` at 0 and at ``n``."""
    t = len(word)
    ok = np.zeros(horizon + 1, dtype=bool)
    for n in range(1, min(t, horizon + 1)):
        # overlapping return: word[:n] + word must be legal
        if word[n:] == word[:t - n] and sft.allowed[word[n - 1]][word[0]]:
            ok[n] = True
    # n >= t: a walk of n - t + 1 steps from the last symbol back to the first
    cur = {word[-1]}
    for steps in range(1, horizon - t + 2):
        cur = {b for a in cur for b in sft.successors[a]}
        if word[0] in cur:
            ok[t + steps - 1] = True
        if not cur:
            break
    return ok


def _primitive_period(word) -> int:
    n = len(word)
    return next(d for d in range(1, n + 1) if n % d == 0 and word[d:] + word[:d] == word)


def _exact_report(system, point, horizon, depth):
    comps = _components(system, point)
    periodic = all(c.preperiod == () for _, c in comps)
    nonwandering = True
    for sft, c in comps:
        syms = set(c.preperiod) | set(c.period)
        basic = [set(b.symbols) for b in decompose(sft).basic_sets]
        nonwandering &= any(syms <= b for b in basic)
    if periodic:
        period = math.lcm(*(_primitive_period(c.period) for _, c in comps))
        return ClassifierReport(horizon, depth, True, True, True, True, True, True,
                                first_return=period, rr_witness=period)
    return ClassifierReport(horizon, depth, True, False, False, False, False, nonwandering,
                            notes=("eventually periodic with nonempty preperiod",))


def point_classifier(system, point, horizon: int = 2**12, depth: int = 3,
                     max_k: int = RR_MAX_K, exact: bool = True) -> ClassifierReport:
    """Recurrence-hierarchy flags for ``point`` at horizon ``H`` and depth ``t``.

    Exact points (every component a :class:`UPPoint`) are decided exactly
    unless ``exact`` is false; otherwise every flag is the ``@H`` version.
    """
    comps = _components(system, point)
    if not all(isinstance(sys_, SFT) for sys_, _ in comps):
        raise InputError("point classification needs an SFT or a product of SFTs")
    if exact and all(isinstance(c, UPPoint) for _, c in comps):
        return _exact_report(system, point, horizon, depth)
    hits = _cylinder_hits(system, point, horizon, depth)
    returns = np.flatnonzero(hits[1:]) + 1
    recurrent = returns.size > 0
    first_return = int(returns[0]) if recurrent else None

    # regular recurrence: all multiples of some k <= K return
    rr_witness = None
    refutations = []
    for k in range(1, max_k + 1):
        multiples = hits[k::k]
        misses = np.flatnonzero(~multiples)
        if misses.size == 0 and multiples.size > 0:
            rr_witness = k
            break
        if misses.size:
            refutations.append((k, int(misses[0]) + 1))
    rr = rr_witness is not None

    # syndetic returns: gaps across [0, H] never exceed the largest gap seen
    # in the first quarter of the horizon
    gap_bound = None
    violation = None
    minimal = False
    times = np.concatenate(([0], returns))
    early = times[times <= horizon // 4]
    if early.size >= 2:
        gap_bound = int(np.diff(early).max())
        ends = np.concatenate((times, [horizon + 1]))
        gaps = np.diff(ends)
        bad = np.flatnonzero(gaps > gap_bound)
        if bad.size:
            violation = (int(ends[bad[0]]), int(gaps[bad[0]]))
        else:
            minimal = True
    if rr:
        minimal = True

    nonwandering = True
    nw_witness = None
    common = np.ones(horizon + 1, dtype=bool)
    common[0] = False
    for sft, c in comps:
        word = tuple(int(s) for s in _symbols(c, depth))
        common &= _return_lengths(sft, word, horizon)
    lengths = np.flatnonzero(common)
    if lengths.size:
        nw_witness = int(lengths[0])
    else:
        nonwandering = False
    return ClassifierReport(horizon, depth, False, None, recurrent, minimal, rr, nonwandering,
                            first_return=first_return, gap_bound=gap_bound, gap_violation=violation,
                            rr_witness=rr_witness, rr_refutations=tuple(refutations) if not rr else (),
                            nonwandering_witness=nw_witness)


# -- seven conditions ---------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    index: int
    holds: bool
    witness: str


@dataclass(frozen=True)
class PositiveEntropyReport:
    conditions: tuple
    entropy: EntropyValue
    dichotomy: Dichotomy
    witnesses: tuple = ()

    @property
    def unanimous(self) -> bool:
        return len({c.holds for c in self.conditions}) == 1

    def to_text(self) -> str:
        return "".join(f"condition {c.index}: {str(c.holds).lower()} witness={c.witness}\n"
                       for c in self.conditions)


def _sensitive_pair(sft: SFT, basic_symbols):
    """Two nonwandering points that agree on a long prefix and then split at a
    branching vertex: a finite sensitivity certificate."""
    from .chains import walk

    inside = set(basic_symbols)
    for v in basic_symbols:
        nxt = [b for b in sft.successors[v] if b in inside]
        if len(nxt) < 2:
            continue
        loops = []
        for b in nxt[:2]:
            for steps in range(len(inside)):
                back = walk(sft, [b], [v], steps)
                if back is not None:
                    loops.append((v,) + back[:-1])
                    break
        x = UPPoint((), loops[0])
        y = UPPoint(loops[0] * 3, loops[1])
        return x, y
    return None


def positive_entropy_report(sft: SFT, horizons=None) -> PositiveEntropyReport:
    """Evaluate the seven equivalent positive-entropy conditions on ``sft``."""
    from .embedding import witness_points

    ent = sft_entropy(sft)
    dich = classify_dichotomy(sft)
    conds = [Condition(1, not ent.exact_zero and ent.lo > 0, str(ent))]
    branching = [b for b in dich.basic_sets if _branching(sft, b.symbols)]
    conds.append(Condition(2, bool(branching),
                           f"basic set {format_word(branching[0].symbols)} has two cycles" if branching
                           else "every basic set is a single cycle"))
    pair = _sensitive_pair(sft, branching[0].symbols) if branching else None
    conds.append(Condition(3, pair is not None,
                           f"x={pair[0]} y={pair[1]}" if pair else "no branching nonwandering vertex"))
    conds.append(Condition(4, dich.witness is not None,
                           f"m={dich.witness.m} r={dich.witness.r}" if dich.witness else "none"))
    wits = ()
    if dich.witness is not None:
        wits = witness_points(dich.witness, horizons)
        expected = {
            "nonwandering": lambda r: r.nonwandering and not r.recurrent,
            "recurrent": lambda r: r.recurrent and not r.minimal,
            "minimal": lambda r: r.minimal and not r.regularly_recurrent,
        }
        for idx, w in zip((5, 6, 7), wits):
            conds.append(Condition(idx, expected[w.label](w.report), f"{w.label} witness {w.point}"[:200]))
    else:
        for idx in (5, 6, 7):
            conds.append(Condition(idx, False, "zero entropy: no embedded full shift"))
    return PositiveEntropyReport(tuple(conds), ent, dich, wits)
