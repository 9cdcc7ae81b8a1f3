"""Pseudo-orbits, shadowing moduli and exact tracing.

On a shift of finite type a ``2**-(k+1)``-pseudo-orbit ``x_0, x_1, ...`` is
``2**-k``-traced by the sequence of first symbols ``(x_0)_0 (x_1)_0 ...``:
consecutive points overlap in ``k + 2`` symbols, so the concatenation agrees
with every ``x_n`` on at least that many places.  Odometers are isometries
and are traced by their initial point; products are traced factor by factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError, ModulusError, ValidityError
from .systems import (
    SFT,
    ApproxPoint,
    Odometer,
    Product,
    ProductPoint,
    UPPoint,
    _iterate,
    agreement,
    distance,
    dyadic_exponent,
    format_fraction,
    parse_dyadic,
    parse_point,
    pow2,
    product_truncation_depth,
    validate_point,
)


@dataclass(frozen=True)
class PseudoOrbit:
    """Finite sequence of exact points; ``periodic`` repeats it forever."""

    points: tuple
    delta: Fraction
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "delta", Fraction(self.delta))
        if not self.points:
            raise InputError("pseudo-orbit must be nonempty")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class TraceCertificate:
    """Distances ``d(f^n(z), x_n)`` for ``n < horizon``, stored exactly."""

    eps: Fraction
    horizon: int
    distances: tuple
    periodic: bool = False

    def holds(self) -> bool:
        return all(d < self.eps for d in self.distances)

    @property
    def max_distance(self) -> Fraction:
        return max(self.distances)


def _step_distance(system, x, y) -> Fraction:
    if isinstance(system, SFT) and isinstance(x, UPPoint) and isinstance(y, UPPoint):
        return _exact_shift_distance(x, y, 1)
    return distance(system, _iterate(system, x, 1), y)


def _exact_shift_distance(x, y, x_offset=0):
    k, _ = agreement(x, y, x_offset, 0)
    return Fraction(0) if k is None else pow2(k)


def verify_pseudo_orbit(system, seq, delta, periodic: bool = False) -> bool:
    """True iff ``d(f(x_n), x_{n+1}) < delta`` at every step (wrap included
    when ``periodic``)."""
    if isinstance(seq, PseudoOrbit):
        periodic = seq.periodic
        seq = seq.points
    seq = tuple(seq)
    if not seq:
        raise InputError("empty sequence")
    delta = Fraction(delta)
    pairs = list(zip(seq, seq[1:]))
    if periodic:
        pairs.append((seq[-1], seq[0]))
    return all(_step_distance(system, x, y) < delta for x, y in pairs)


def shadowing_modulus(system, eps) -> Fraction:
    """A ``delta`` such that every ``delta``-pseudo-orbit is ``eps``-traced by
    :func:`trace`."""
    eps = Fraction(eps)
    k = dyadic_exponent(eps)
    if isinstance(system, SFT):
        return eps / 2
    if isinstance(system, Odometer):
        return eps
    if isinstance(system, Product):
        if k < 0:
            return eps / 2
        depth = min(product_truncation_depth(eps), system.count)
        return eps * pow2(depth + 2)
    raise TypeError(f"unknown system {type(system).__name__}")


def _trace_shift(sft: SFT, points, periodic: bool, eps: Fraction):
    firsts = tuple(x.symbol(0) for x in points)
    if periodic:
        z = UPPoint((), firsts)
        if validate_point(sft, z):
            return z
    else:
        last = points[-1]
        z = UPPoint(firsts[:-1] + last.preperiod, last.period)
        if validate_point(sft, z):
            return z
    if eps > 1:
        # every point of the space is within distance 1 < eps
        return points[0]
    raise ValidityError("first-symbol concatenation is not legal; pseudo-orbit too coarse")


def _trace_product(system: Product, points, periodic: bool, eps: Fraction):
    comps = []
    for n, f in enumerate(system.factors):
        seq = [p.components[n] for p in points]
        pairs = list(zip(seq, seq[1:])) + ([(seq[-1], seq[0])] if periodic else [])
        # first-symbol concatenation is legal when every step agrees on symbol 0
        if all(agreement(x, y, 1, 0)[0] is None or agreement(x, y, 1, 0)[0] >= 1
               for x, y in pairs):
            comps.append(_trace_shift(f, seq, periodic, Fraction(2)))
        else:
            comps.append(seq[0])
    return ProductPoint(tuple(comps))


def _require_exact(system, points):
    for x in points:
        comps = x.components if isinstance(x, ProductPoint) else (x,)
        if any(isinstance(c, ApproxPoint) for c in comps):
            raise InputError("pseudo-orbits hold exact points; freeze approximate points first")
        if not validate_point(system, x):
            raise ValidityError(f"{x} is not a point of the system")


def trace(system, pseudo_orbit: PseudoOrbit, eps):
    """Return ``(z, certificate)`` with ``z`` ``eps``-tracing the pseudo-orbit."""
    eps = Fraction(eps)
    delta = shadowing_modulus(system, eps)
    if pseudo_orbit.delta > delta:
        raise ModulusError(
            f"pseudo-orbit delta {format_fraction(pseudo_orbit.delta)} exceeds "
            f"the modulus {format_fraction(delta)} for eps {format_fraction(eps)}")
    points = pseudo_orbit.points
    _require_exact(system, points)
    if not verify_pseudo_orbit(system, points, pseudo_orbit.delta, pseudo_orbit.periodic):
        raise ValidityError("sequence is not a pseudo-orbit at its declared delta")
    if isinstance(system, SFT):
        z = _trace_shift(system, points, pseudo_orbit.periodic, eps)
    elif isinstance(system, Odometer):
        z = points[0]
    else:
        z = _trace_product(system, points, pseudo_orbit.periodic, eps)
    if isinstance(system, SFT) and isinstance(z, UPPoint):
        dists = [_exact_shift_distance(z, x, n) for n, x in enumerate(points)]
    else:
        dists = []
        y = z
        for x in points:
            dists.append(distance(system, y, x))
            y = _iterate(system, y, 1)
    return z, TraceCertificate(eps, len(points), tuple(dists), pseudo_orbit.periodic)


def freeze_point(sft: SFT, point) -> UPPoint:
    """Exact point obtained by extending an approximate point lexicographically."""
    if isinstance(point, UPPoint):
        return point
    return sft.freeze(point.prefix_word)


# -- text format --------------------------------------------------------------

def format_pseudo_orbit(po: PseudoOrbit) -> str:
    lines = [f"delta={format_fraction(po.delta)}"]
    if po.periodic:
        lines.append("periodic")
    lines.extend(str(p) for p in po.points)
    return "\n".join(lines) + "\n"


def parse_pseudo_orbit(text: str) -> PseudoOrbit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("delta="):
        raise InputError("pseudo-orbit file must start with delta=<dyadic>")
    delta = parse_dyadic(lines[0][len("delta="):])
    periodic = len(lines) > 1 and lines[1] == "periodic"
    body = lines[2:] if periodic else lines[1:]
    return PseudoOrbit(tuple(parse_point(ln) for ln in body), delta, periodic)
