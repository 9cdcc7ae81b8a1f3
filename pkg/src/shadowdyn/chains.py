"""Epsilon-chains, chain-mixing constants and the decomposition of an SFT
into basic and elementary sets.

A ``2**-k``-chain in a vertex shift is the same thing as a walk in the
``(k+2)``-block presentation, so chain-mixing constants reduce to
primitivity indices of block graphs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InfeasibleError, MixingRequiredError, ValidityError
from .systems import (
    SFT,
    Word,
    dyadic_exponent,
    format_word,
    words_of_length,
)


@dataclass(frozen=True)
class BasicSet:
    symbols: tuple
    period: int
    classes: tuple  # classes[i] is the elementary set C_i

    def __str__(self):
        cls = "|".join(format_word(c) for c in self.classes)
        return f"basic symbols={format_word(self.symbols)} period={self.period} classes={cls}"


@dataclass(frozen=True)
class DecompositionReport:
    basic_sets: tuple

    def to_text(self) -> str:
        return "".join(str(b) + "\n" for b in self.basic_sets)


@dataclass(frozen=True)
class ChainPlan:
    eps: Fraction
    length: int
    word: Word  # symbols whose (k+2)-windows pin the chain points
    points: tuple


# -- graph helpers ------------------------------------------------------------

def _adjacency(sft: SFT) -> csr_matrix:
    return csr_matrix(sft.matrix)


def _strong_components(adj: csr_matrix):
    n, labels = connected_components(adj, directed=True, connection="strong")
    return n, labels


def _component_period(adj: csr_matrix, members) -> int:
    """gcd of cycle lengths in a strongly connected vertex set, via BFS levels."""
    members = sorted(members)
    inside = set(members)
    root = members[0]
    level = {root: 0}
    queue = [root]
    indptr, indices = adj.indptr, adj.indices
    g = 0
    for u in queue:
        for v in indices[indptr[u]:indptr[u + 1]]:
            v = int(v)
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g), level


def decompose(sft: SFT) -> DecompositionReport:
    """Basic sets (strongly connected pieces carrying a cycle) with their
    periods and cyclically permuted elementary sets."""
    adj = _adjacency(sft)
    _, labels = _strong_components(adj)
    groups = {}
    for v, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(v)
    basics = []
    for members in groups.values():
        if len(members) == 1 and not sft.allowed[members[0]][members[0]]:
            continue
        period, level = _component_period(adj, members)
        classes = tuple(tuple(v for v in sorted(members) if level[v] % period == i)
                        for i in range(period))
        basics.append(BasicSet(tuple(sorted(members)), period, classes))
    basics.sort(key=lambda b: b.symbols[0])
    return DecompositionReport(tuple(basics))


def restrict(sft: SFT, symbols) -> tuple:
    """Vertex-induced SFT on ``symbols`` and the relabelling map back."""
    symbols = tuple(sorted(symbols))
    sub = SFT(tuple(tuple(sft.allowed[a][b] for b in symbols) for a in symbols))
    return sub, symbols


def _is_primitive_adj(adj: csr_matrix) -> bool:
    n = adj.shape[0]
    ncomp, _ = _strong_components(adj)
    if ncomp != 1:
        return False
    period, _ = _component_period(adj, range(n))
    return period == 1


def _primitivity_index_adj(adj: csr_matrix, cap: int):
    n = adj.shape[0]
    if not _is_primitive_adj(adj):
        return None
    reach = adj.toarray().astype(bool) if n <= 64 else None
    if reach is not None:
        a = reach.astype(np.int64)
        m = 1
        while not reach.all():
            reach = (reach.astype(np.int64) @ a) > 0
            m += 1
            if m > cap:
                return None
        return m
    at = adj.T.tocsr().astype(np.float32)
    reach = adj.toarray().astype(np.float32)
    m = 1
    while not (reach > 0).all():
        # reach <- reach @ adj computed as (adj^T @ reach^T)^T
        reach = (at @ reach.T).T
        np.minimum(reach, 1.0, out=reach)
        m += 1
        if m > cap:
            return None
    return m


def primitivity_index(sft: SFT):
    """Least ``m`` with every ``m``-step transition count positive, or ``None``
    when the SFT is not primitive (the Wielandt bound caps the search)."""
    n = sft.size
    return _primitivity_index_adj(_adjacency(sft), (n - 1) ** 2 + 1)


@dataclass(frozen=True)
class BlockPresentation:
    """The ``L``-block graph: vertices are legal ``L``-words, with an edge
    ``w -> w'`` when they overlap in ``L - 1`` symbols."""

    length: int
    words: tuple
    adjacency: csr_matrix


@lru_cache(maxsize=64)
def block_presentation(sft: SFT, length: int) -> BlockPresentation:
    words = words_of_length(sft, length)
    index = {w: i for i, w in enumerate(words)}
    rows, cols = [], []
    succ = sft.successors
    for i, w in enumerate(words):
        tail = w[1:]
        for b in succ[w[-1]]:
            rows.append(i)
            cols.append(index[tail + (b,)])
    n = len(words)
    adj = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    return BlockPresentation(length, words, adj)


@lru_cache(maxsize=256)
def chain_mixing_constant(sft: SFT, eps) -> int:
    """``M`` such that for every ``n >= M`` and every pair of points there is
    an ``eps``-chain of ``n`` points between them."""
    k = dyadic_exponent(eps)
    if primitivity_index(sft) is None:
        raise MixingRequiredError("chain mixing constant needs a primitive SFT")
    if k < 0:
        return 1
    bp = block_presentation(sft, k + 2)
    n = len(bp.words)
    p = _primitivity_index_adj(bp.adjacency, (n - 1) ** 2 + 1)
    # p steps between (k+2)-blocks means chains of p + 1 points
    return p + 1


# -- walks --------------------------------------------------------------------

def _mask(symbols) -> int:
    m = 0
    for s in symbols:
        m |= 1 << s
    return m


def walk(sft: SFT, start, end, steps: int):
    """Lexicographically least walk of exactly ``steps`` edges from a symbol
    in ``start`` to a symbol in ``end``, as a word of ``steps + 1`` symbols,
    or ``None``."""
    n = sft.size
    succ_masks = [_mask(s) for s in sft.successors]
    can = [_mask(end)]
    for _ in range(steps):
        prev = can[-1]
        can.append(sum(1 << a for a in range(n) if succ_masks[a] & prev))
    first = _mask(start) & can[steps]
    if not first:
        return None
    cur = (first & -first).bit_length() - 1
    out = [cur]
    for t in range(steps - 1, -1, -1):
        options = succ_masks[cur] & can[t]
        cur = (options & -options).bit_length() - 1
        out.append(cur)
    return tuple(out)


def connector(sft: SFT, head: Word, tail: Word, gap: int):
    """Least legal word ``u`` with ``u`` starting with ``head`` and
    ``u[gap:]`` starting with ``tail``; ``None`` when impossible."""
    head, tail = tuple(head), tuple(tail)
    if gap < len(head):
        overlap = head[gap:]
        m = min(len(overlap), len(tail))
        if overlap[:m] != tail[:m]:
            return None
        u = head + tail[len(overlap):]
        return u if sft.is_legal_word(u) else None
    if not tail:
        middle = walk(sft, [head[-1]] if head else range(sft.size), range(sft.size),
                      gap - len(head) + (1 if head else 0) - (0 if head else 1))
        if middle is None:
            return None
        return head + (middle[1:] if head else middle)
    if not head:
        path = walk(sft, range(sft.size), [tail[0]], gap)
        if path is None:
            return None
        u = path[:-1] + tail
    else:
        path = walk(sft, [head[-1]], [tail[0]], gap - len(head) + 1)
        if path is None:
            return None
        u = head + path[1:-1] + tail
    return u if sft.is_legal_word(u) else None


def connect(sft: SFT, source: Word, target: Word, n: int, eps) -> ChainPlan:
    """An ``eps``-chain of ``n`` points from the cylinder ``[source]`` to the
    cylinder ``[target]``."""
    from .shadowing import verify_pseudo_orbit

    source, target = tuple(source), tuple(target)
    eps = Fraction(eps)
    if not (sft.is_legal_word(source) and sft.is_legal_word(target)) or not source or not target:
        raise ValidityError("endpoint words must be nonempty and legal")
    if n < 2:
        raise InfeasibleError("a chain has at least two points")
    k = dyadic_exponent(eps)
    if k < 0:
        pts = (sft.freeze(source),) + tuple(sft.freeze(source) for _ in range(n - 2)) + (sft.freeze(target),)
        return ChainPlan(eps, n, (), pts)
    length = k + 2
    # an honest orbit segment through both full words needs no jumps at all
    u = connector(sft, source, target, n - 1)
    if u is not None:
        points = [sft.freeze(u[t:]) for t in range(n)]
    else:
        u = connector(sft, source[:length], target[:length], n - 1)
        if u is None:
            try:
                bound = chain_mixing_constant(sft, eps)
            except MixingRequiredError:
                bound = None
            raise InfeasibleError(
                f"no {eps}-chain of length {n} from [{format_word(source)}] to [{format_word(target)}]"
                + (f" (lengths >= {bound} always succeed)" if bound else ""))
        # the shift of a frozen word is the frozen suffix, so only the ends jump
        points = [sft.freeze(u[t:]) for t in range(n)]
        if len(source) > length:
            points[0] = sft.freeze(source)
        if len(target) > length:
            points[-1] = sft.freeze(target)
    plan = ChainPlan(eps, n, u, tuple(points))
    assert verify_pseudo_orbit(sft, plan.points, eps), "connector produced a non-chain"
    return plan
