"""Full shifts embedded in a power of a mixing SFT.

Each symbol ``i`` of ``{0..d}`` gets an anchor word ``eta_i`` of common length
``m``; the anchors can follow one another in any order, so concatenating
``eta(a_0) eta(a_1) ...`` is a legal point ``y_a``.  Inside every anchor, at
offset ``r``, sits a probe word ``w_i`` extending the target cylinder ``U_i``;
probes have pairwise distinct prefixes of length ``k`` so distinct probe
cylinders are more than ``eps = 2**-k`` apart.  Reading the probes back
recovers ``a``, which is the factor map onto the full shift.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chains import primitivity_index, walk
from .errors import DepthError, InfeasibleError, InputError, MixingRequiredError, NotInSubsystemError
from .systems import (
    SFT,
    ApproxPoint,
    UPPoint,
    Word,
    dyadic_exponent,
    format_fraction,
    format_word,
    parse_dyadic,
    parse_word,
    pow2,
)

# how far eps may be shrunk while looking for separated probes
_MAX_EXTRA_DEPTH = 24


@dataclass(frozen=True)
class EmbeddingData:
    sft: SFT
    m: int
    r: int
    anchors: tuple
    probes: tuple
    eps: Fraction

    @property
    def d(self) -> int:
        return len(self.anchors) - 1

    def to_text(self) -> str:
        lines = [f"m={self.m} r={self.r} eps={format_fraction(self.eps)}"]
        lines += [f"anchor {i}={format_word(w)}" for i, w in enumerate(self.anchors)]
        lines += [f"probe {i}={format_word(w)}" for i, w in enumerate(self.probes)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, sft: SFT, text: str) -> "EmbeddingData":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        try:
            head = dict(tok.split("=", 1) for tok in lines[0])
            anchors = {}
            probes = {}
            for kind, spec in lines[1:]:
                idx, word = spec.split("=", 1)
                (anchors if kind == "anchor" else probes)[int(idx)] = parse_word(word)
            data = cls(sft, int(head["m"]), int(head["r"]),
                       tuple(anchors[i] for i in range(len(anchors))),
                       tuple(probes[i] for i in range(len(probes))),
                       parse_dyadic(head["eps"]))
        except (KeyError, ValueError, IndexError) as exc:
            raise InputError("malformed embedding data") from exc
        check_embedding(data)
        return data


def check_embedding(data: EmbeddingData) -> None:
    """Raise :class:`InputError` unless ``data`` is internally consistent."""
    sft = data.sft
    k = dyadic_exponent(data.eps)
    if any(len(a) != data.m for a in data.anchors):
        raise InputError("anchors must all have length m")
    for a in data.anchors:
        for b in data.anchors:
            if not sft.is_legal_word(a + b[:1]):
                raise InputError("anchors cannot be concatenated freely")
    for a, w in zip(data.anchors, data.probes):
        if a[data.r:data.r + len(w)] != w:
            raise InputError("anchor does not carry its probe at offset r")
    heads = {w[:k] for w in data.probes}
    if len(heads) != len(data.probes) or any(len(w) < k for w in data.probes):
        raise InputError("probe cylinders are not eps-separated")


def _extensions(sft: SFT, word: Word, length: int):
    """Legal extensions of ``word`` to ``length`` symbols, in lexicographic order."""
    if len(word) >= length:
        yield word[:length]
        return
    for b in sft.successors[word[-1]]:
        yield from _extensions(sft, word + (b,), length)


def _choose_probes(sft: SFT, targets, k: int):
    length = max(k, max(len(t) for t in targets))
    used = set()
    probes = []
    for t in targets:
        for w in _extensions(sft, t, length):
            if w[:k] not in used:
                used.add(w[:k])
                probes.append(w)
                break
        else:
            return None
    return tuple(probes)


def _reach_sets(sft: SFT, start: int, steps: int):
    cur = {start}
    out = [cur]
    for _ in range(steps):
        cur = {b for a in cur for b in sft.successors[a]}
        out.append(cur)
    return out


def _common_length(sft: SFT, sources, target: int, bound: int):
    """Least ``g >= 1`` with a walk of exactly ``g`` steps from every source to ``target``."""
    tables = [_reach_sets(sft, s, bound) for s in set(sources)]
    for g in range(1, bound + 1):
        if all(target in tab[g] for tab in tables):
            return g
    return None


def _common_length_from(sft: SFT, source: int, targets, bound: int):
    tab = _reach_sets(sft, source, bound)
    for g in range(1, bound + 1):
        if all(t in tab[g] for t in targets):
            return g
    return None


def _assemble(sft: SFT, probes):
    """Anchors carrying the probes, all of one length, freely concatenable."""
    n = sft.size
    bound = 4 * n * n + 4 * n + 8
    firsts = {w[0] for w in probes}
    lasts = [w[-1] for w in probes]
    gateways = [s for s in range(n) if all(sft.allowed[s][f] for f in firsts)]
    best = None
    for s in gateways:
        g = _common_length(sft, lasts, s, bound)
        if g is not None and (best is None or g < best[1]):
            best = (s, g)
    if best is not None:
        s, g = best
        anchors = tuple(w + walk(sft, [w[-1]], [s], g)[1:] for w in probes)
        return anchors, 0
    # no single symbol can precede every probe: route through a hub symbol
    for hub in range(n):
        g1 = _common_length_from(sft, hub, firsts, bound)
        g2 = _common_length(sft, lasts, hub, bound)
        if g1 is None or g2 is None:
            continue
        anchors = tuple(walk(sft, [hub], [w[0]], g1)[:-1] + w + walk(sft, [w[-1]], [hub], g2)[1:-1]
                        for w in probes)
        return anchors, g1
    return None


def build_embedding(sft: SFT, targets, eps, require_primitive: bool = True) -> EmbeddingData:
    targets = [tuple(t) for t in targets]
    if not targets:
        raise InputError("need at least one target cylinder")
    for t in targets:
        if not t or not sft.is_legal_word(t):
            raise InfeasibleError(f"target [{format_word(t)}] is empty in this SFT")
    if require_primitive and primitivity_index(sft) is None:
        raise MixingRequiredError("embedding a full shift needs a primitive SFT")
    k0 = max(dyadic_exponent(eps), 1)
    for k in range(k0, k0 + _MAX_EXTRA_DEPTH):
        probes = _choose_probes(sft, targets, k)
        if probes is None:
            continue
        built = _assemble(sft, probes)
        if built is None:
            raise InfeasibleError("probes cannot be joined into freely concatenable anchors")
        anchors, r = built
        data = EmbeddingData(sft, len(anchors[0]), r, anchors, probes, pow2(k))
        check_embedding(data)
        return data
    raise InfeasibleError("could not separate the target cylinders")


def embed_full_shift(sft: SFT, targets, eps) -> EmbeddingData:
    """Embed ``({0..d}^N, shift)`` into ``(X, f^m)`` with symbol ``i`` landing
    in target cylinder ``targets[i]``; ``eps`` is shrunk if the targets need it."""
    return build_embedding(sft, targets, eps, require_primitive=True)


def encode(data: EmbeddingData, alpha):
    """Point ``y_alpha`` of the embedded subsystem.

    A word gives an :class:`ApproxPoint` known on ``m * len(alpha)`` symbols;
    a :class:`UPPoint` over ``{0..d}`` gives the exact point.
    """
    if isinstance(alpha, UPPoint):
        _check_alpha(data, alpha.preperiod + alpha.period)
        pre = tuple(s for a in alpha.preperiod for s in data.anchors[a])
        per = tuple(s for a in alpha.period for s in data.anchors[a])
        return UPPoint(pre, per)
    alpha = tuple(alpha)
    if not alpha:
        raise InputError("cannot encode an empty prefix")
    _check_alpha(data, alpha)
    return ApproxPoint(tuple(s for a in alpha for s in data.anchors[a]))


def _check_alpha(data, alpha):
    if any(not 0 <= a <= data.d for a in alpha):
        raise InputError(f"alpha must be over 0..{data.d}")


def decode(data: EmbeddingData, point, n_symbols: int) -> Word:
    """Read the first ``n_symbols`` probe hits of ``point``."""
    lookup = {w: i for i, w in enumerate(data.probes)}
    length = len(data.probes[0])
    out = []
    for i in range(n_symbols):
        start = data.m * i + data.r
        try:
            window = point.window(start, length)
        except DepthError:
            raise
        sym = lookup.get(tuple(window))
        if sym is None:
            raise NotInSubsystemError(f"no probe matches at time {start}")
        out.append(sym)
    return tuple(out)


# -- witnesses ----------------------------------------------------------------

def chacon_word(n: int) -> Word:
    """First ``n`` symbols of the fixed point of ``0 -> 0010, 1 -> 1``."""
    if n < 0:
        raise InputError("length must be non-negative")
    w = (0,)
    while len(w) < n:
        w = tuple(s for a in w for s in ((0, 0, 1, 0) if a == 0 else (1,)))
    return w[:n] if n else ()


def length_ordered_words(n: int, alphabet: int = 2) -> Word:
    """First ``n`` symbols of the concatenation of all words, by length then
    lexicographically."""
    out = []
    length = 1
    while len(out) < n:
        for idx in range(alphabet ** length):
            digits = []
            for _ in range(length):
                idx, rem = divmod(idx, alphabet)
                digits.append(rem)
            out.extend(reversed(digits))
            if len(out) >= n:
                break
        length += 1
    return tuple(out[:n])


@dataclass(frozen=True)
class Witness:
    label: str
    alpha: object
    point: object
    horizon: int
    report: object


WITNESS_HORIZONS = {"nonwandering": 2**12, "recurrent": 2**12, "minimal": 10**4}


def witness_points(data: EmbeddingData, horizons=None):
    """The three hierarchy witnesses, encoded and classified.

    ``1 0 0 0 ...`` separates nonwandering from recurrent, the length-ordered
    word list separates recurrent from minimal, and the Chacon word separates
    minimal from regularly recurrent.
    """
    from .analysis import point_classifier

    if data.d < 1:
        raise InfeasibleError("witnesses need at least two symbols")
    horizons = dict(WITNESS_HORIZONS, **(horizons or {}))
    depth = 2 * data.m
    out = []
    for label, make in (("nonwandering", None),
                        ("recurrent", length_ordered_words),
                        ("minimal", chacon_word)):
        horizon = horizons[label]
        if make is None:
            alpha = UPPoint((1,), (0,))
        else:
            # enough symbols to read every depth-window up to the horizon
            alpha = make((horizon + depth) // data.m + 2)
        point = encode(data, alpha)
        report = point_classifier(data.sft, point, horizon=horizon, depth=depth)
        out.append(Witness(label, alpha, point, horizon, report))
    return tuple(out)
