"""Periodic specification points and the regularly recurrent cascade.

A request lists orbit windows ``[a_i, b_i]`` of points ``x_i`` that must be
shadowed within ``eps``, plus a period ``p``.  On a vertex shift the
construction is symbolic: copy the window symbols into a period word,
fill the gaps with connecting walks whose ends overlap the neighbouring
windows on ``k + 1`` symbols, and repeat.  Because the periodic
pseudo-orbit built this way is traced by its first-symbol concatenation,
the traced point is exactly the periodic word.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chains import chain_mixing_constant, connector
from .errors import CapExceededError, InputError, RequestError, ValidityError
from .shadowing import shadowing_modulus
from .systems import (
    SFT,
    Product,
    ProductPoint,
    UPPoint,
    agreement,
    distance,
    dyadic_exponent,
    format_fraction,
    parse_dyadic,
    parse_point,
    pow2,
    validate_point,
)

M_CAP = 2**20


@dataclass(frozen=True)
class SpecWindow:
    """Times ``a..b`` of the orbit of ``point``.

    ``origin`` is the time at which ``point`` is given: the window shadows
    ``f^(j - origin)(point)`` at time ``j``.  Use :meth:`starting_at` to
    describe a window by the point it shows at time ``a`` without having
    to build a preimage.
    """

    a: int
    b: int
    point: object
    origin: int = 0

    @classmethod
    def starting_at(cls, a: int, b: int, start) -> "SpecWindow":
        return cls(a, b, start, a)

    def at(self, j: int):
        return _shift(self.point, j - self.origin)


@dataclass(frozen=True)
class SpecRequest:
    eps: Fraction
    windows: tuple
    p: int

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        object.__setattr__(self, "windows", tuple(self.windows))

    def to_text(self) -> str:
        lines = [f"eps={format_fraction(self.eps)}", f"p={self.p}"]
        lines += [f"window a={w.a} b={w.b}" + (f" origin={w.origin}" if w.origin else "") + f" point={w.point}"
                  for w in self.windows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpecRequest":
        eps = p = None
        windows = []
        try:
            for ln in text.splitlines():
                ln = ln.strip()
                if not ln or ln.startswith("#"):
                    continue
                if ln.startswith("eps="):
                    eps = parse_dyadic(ln[4:])
                elif ln.startswith("p="):
                    p = int(ln[2:])
                elif ln.startswith("window "):
                    head, point = ln[len("window "):].split("point=", 1)
                    fields = dict(tok.split("=", 1) for tok in head.split())
                    windows.append(SpecWindow(int(fields["a"]), int(fields["b"]), parse_point(point),
                                              int(fields.get("origin", 0))))
                else:
                    raise InputError(f"unexpected line {ln!r}")
        except (ValueError, KeyError) as exc:
            raise InputError("malformed spec request") from exc
        if eps is None or p is None or not windows:
            raise InputError("spec request needs eps=, p= and at least one window")
        return cls(eps, tuple(windows), p)


@dataclass(frozen=True)
class SpecCertificate:
    eps: Fraction
    p: int
    horizon: int
    exact: bool
    window_distances: tuple  # per window, the largest d(f^(np+j) z, f^j x_i)
    return_distance: Fraction  # largest d(f^j z, f^(np+j) z) checked
    rr_bounds: tuple = ()  # (r, m_r, largest d(f^(j m_r) z, z), allowed bound)
    notes: tuple = ()

    def holds(self) -> bool:
        ok = all(d < self.eps for d in self.window_distances) and self.return_distance < self.eps
        return ok and all(d <= bound for _, _, d, bound in self.rr_bounds)


@dataclass(frozen=True)
class CascadeState:
    stage: int
    lam: Fraction
    m: int
    point: object
    return_distance: Fraction = Fraction(0)


@dataclass(frozen=True)
class SpecVerification:
    ok: bool
    exact: bool
    failure: object = None  # ("window", i, n, j) or ("return", n, j)

    def __bool__(self):
        return self.ok


def lam(eps, r: int) -> Fraction:
    """Stage tolerance ``eps / 8**(r+1)``."""
    return Fraction(eps) / 8 ** (r + 1)


def drift_budget(eps, start: int = 0) -> Fraction:
    """``sum_{i >= start} lam_i``, a geometric series with ratio 1/8."""
    return lam(eps, start) * Fraction(8, 7)


def _factors(system):
    if isinstance(system, SFT):
        return (system,)
    if isinstance(system, Product):
        return system.factors
    raise InputError("specification is implemented for SFTs and products of SFTs")


def spec_constant(system, eps) -> int:
    """Gap length ``M`` that makes every spaced request feasible."""
    eps = Fraction(eps)
    dyadic_exponent(eps)
    if eps > 1:
        # any point is within eps of any other
        return 1
    delta = shadowing_modulus(system, lam(eps, 0) / 8)
    return max(chain_mixing_constant(f, delta) for f in _factors(system))


def _components(point):
    return point.components if isinstance(point, ProductPoint) else (point,)


def check_request(system, request: SpecRequest) -> int:
    """Validate spacing and points; return ``M``."""
    ws = request.windows
    if not ws:
        raise RequestError("request has no windows")
    for w in ws:
        if w.a < w.origin or w.b < w.a:
            raise RequestError(f"bad window [{w.a}, {w.b}]")
    for point in {w.point for w in ws}:
        if any(not isinstance(c, UPPoint) for c in _components(point)):
            raise RequestError("window points must be exact")
        if not validate_point(system, point):
            raise ValidityError(f"{point} is not a point of the system")
    m = spec_constant(system, request.eps)
    for prev, cur in zip(ws, ws[1:]):
        if cur.a <= prev.b:
            raise RequestError("windows must be increasing and disjoint")
        if cur.a - prev.b < m:
            raise RequestError(f"gap {cur.a - prev.b} between windows is below M = {m}")
    if request.p < m + ws[-1].b - ws[0].a:
        raise RequestError(f"p = {request.p} is below M + b_k - a_1 = {m + ws[-1].b - ws[0].a}")
    return m


def _stitch(sft: SFT, pieces, p: int, overlap: int):
    """Period word of length ``p``: window symbols at their (normalized)
    places, connecting walks in the gaps that agree with the next
    ``overlap`` symbols on both sides."""
    word = [None] * p
    for start, end, x, a in pieces:
        word[start:end + 1] = x.window(a, end - start + 1)
    for idx, (start, end, x, a) in enumerate(pieces):
        nstart, _, nx, na = pieces[(idx + 1) % len(pieces)]
        if idx == len(pieces) - 1:
            nstart += p
        gap = nstart - end - 1
        head = x.window(a + end - start + 1, overlap)
        tail = nx.window(na, overlap)
        u = connector(sft, head, tail, gap)
        if u is None:
            raise RequestError("no connecting walk; request spacing too tight for this system")
        for t in range(gap):
            word[(end + 1 + t) % p] = u[t]
    return tuple(word)


def _rotate(word, shift: int):
    shift %= len(word)
    return word[shift:] + word[:shift]


def _periodic_construction(system, request: SpecRequest):
    """Normalized point ``y`` (first window at time 0) and the output ``z``."""
    ws = request.windows
    a1, p = ws[0].a, request.p
    delta = shadowing_modulus(system, lam(request.eps, 0) / 8)
    # on a product, factor chains at level delta keep the weighted sum below delta
    overlap = dyadic_exponent(delta) + 1
    comps_y = []
    for n, f in enumerate(_factors(system)):
        pieces = [(w.a - a1, w.b - a1, _components(w.point)[n], w.a - w.origin) for w in ws]
        comps_y.append(_stitch(f, pieces, p, overlap))
    ys = tuple(UPPoint((), w) for w in comps_y)
    zs = tuple(UPPoint((), _rotate(w, p - a1)) for w in comps_y)
    if isinstance(system, Product):
        return ProductPoint(ys), ProductPoint(zs)
    return ys[0], zs[0]


def _shift(point, n):
    if isinstance(point, ProductPoint):
        return ProductPoint(tuple(c.shift(n) for c in point.components))
    return point.shift(n)


def _lce_min(z: UPPoint, x: UPPoint, zstart: int, xstart: int, length: int):
    """Least ``agreement(z, x, zstart + j, xstart + j)`` over ``0 <= j < length``.

    A mismatch inside the range gives 0; otherwise the minimum sits at the
    last index, one more than the agreement just past the range.  ``None``
    means the orbits coincide from ``zstart`` on.
    """
    if z.window(zstart, length) != x.window(xstart, length):
        return 0
    tail, _ = agreement(z, x, zstart + length, xstart + length)
    return None if tail is None else tail + 1


def _window_distances(system, z, request, horizon, exact):
    """Largest window distance per window (over all n when exact)."""
    p = request.p
    out = []
    for w in request.windows:
        if exact and isinstance(system, SFT):
            k = _lce_min(z, w.point, w.a, w.a - w.origin, w.b - w.a + 1)
            out.append(Fraction(0) if k is None else pow2(k))
            continue
        worst = Fraction(0)
        ns = [0] if exact else range(0, max(horizon - w.a, 0) // p + 1)
        for n in ns:
            for j in range(w.a, w.b + 1):
                d = distance(system, _shift(z, n * p + j), w.at(j))
                worst = max(worst, d)
        out.append(worst)
    return tuple(out)


def _return_distance(system, z, p, horizon, exact):
    if exact:
        comps = _components(z)
        assert all(c.preperiod == () and p % len(c.period) == 0 for c in comps)
        return Fraction(0)
    worst = Fraction(0)
    for j in range(min(p, horizon + 1)):
        zj = _shift(z, j)
        for n in range(1, (horizon - j) // p + 1):
            worst = max(worst, distance(system, zj, _shift(z, n * p + j)))
    return worst


def periodic_spec_point(system, request: SpecRequest):
    """Exact periodic point shadowing every window; returns ``(z, certificate)``."""
    if not isinstance(system, SFT):
        raise RequestError("periodic specification points are built on SFTs")
    if request.eps >= system.expansivity_constant:
        raise RequestError("eps must be below the expansivity constant 1/2")
    check_request(system, request)
    _, z = _periodic_construction(system, request)
    cert = SpecCertificate(request.eps, request.p, request.p, True,
                           _window_distances(system, z, request, request.p, True), Fraction(0))
    return z, cert


def _least_return_multiple(system, y, m: int, bound: Fraction, cap: int):
    step = m
    while step <= cap:
        if distance(system, _shift(y, step), y) < bound:
            return step
        step += m
    raise CapExceededError(f"no multiple of {m} up to {cap} returns within {format_fraction(bound)}")


def rr_spec_point(system, request: SpecRequest, stages: int = 1, horizon=None, cap: int = M_CAP):
    """Regularly recurrent point for ``request`` with its cascade history.

    On an SFT the cascade stabilizes at stage 1 and the periodic point is
    returned with an exact certificate.  On a product the same construction
    runs factor by factor; the certificate is then checked to ``horizon``
    and marked inexact.
    """
    if stages < 0:
        raise InputError("stage count must be non-negative")
    check_request(system, request)
    eps, p = request.eps, request.p
    horizon = 4 * p if horizon is None else horizon
    if horizon < p:
        raise InputError("horizon must be at least p")
    assert drift_budget(eps) < eps / 4
    y, z = _periodic_construction(system, request)
    history = [CascadeState(0, lam(eps, 0), p, y)]
    m = p
    for r in range(stages):
        bound = lam(eps, r + 1) / 2
        m_next = _least_return_multiple(system, y, m, bound, cap)
        if m_next % m:
            raise AssertionError("cascade periods must divide one another")
        # y is an exact periodic orbit; tracing its own orbit returns it
        history.append(CascadeState(r + 1, lam(eps, r + 1), m_next, y,
                                    distance(system, _shift(y, m_next), y)))
        m = m_next
    exact = isinstance(system, SFT)
    rr_bounds = []
    for st in history:
        worst = Fraction(0)
        for j in range(1, horizon // st.m + 1):
            worst = max(worst, distance(system, _shift(z, j * st.m), z))
        rr_bounds.append((st.stage, st.m, worst, 3 * drift_budget(eps, st.stage)))
    notes = () if exact else (f"claims checked on the {len(_factors(system))}-factor truncation up to horizon {horizon}",)
    cert = SpecCertificate(eps, p, horizon, exact,
                           _window_distances(system, z, request, horizon, exact),
                           _return_distance(system, z, p, horizon, exact),
                           tuple(rr_bounds), notes)
    if stages == 0:
        # only the stage-0 tracing step is claimed
        cert = SpecCertificate(eps, p, horizon, exact, cert.window_distances, cert.return_distance,
                               (), notes + ("stage 0 only",))
    return z, cert, tuple(history)


def verify_spec_certificate(system, z, request: SpecRequest, horizon: int | None = None) -> SpecVerification:
    """Recheck every specification inequality from the raw data.

    When every component of ``z`` is periodic with period dividing ``p`` the
    check is exact for all ``n``; otherwise it runs to ``horizon``.
    """
    eps, p = request.eps, request.p
    horizon = 4 * p if horizon is None else horizon
    comps = _components(z)
    exact = all(isinstance(c, UPPoint) and c.preperiod == () and p % len(c.period) == 0 for c in comps)
    if eps > 1:
        return SpecVerification(True, exact)
    for i, w in enumerate(request.windows):
        ns = [0] if exact else range(0, max(horizon - w.a, 0) // p + 1)
        for n in ns:
            for j in range(w.a, w.b + 1):
                if distance(system, _shift(z, n * p + j), w.at(j)) >= eps:
                    return SpecVerification(False, exact, ("window", i, n, j))
    if not exact:
        for j in range(min(p, horizon + 1)):
            for n in range(1, (horizon - j) // p + 1):
                if distance(system, _shift(z, j), _shift(z, n * p + j)) >= eps:
                    return SpecVerification(False, exact, ("return", n, j))
    return SpecVerification(True, exact)
