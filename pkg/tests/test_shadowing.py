import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowdyn.errors import InputError, ModulusError, ValidityError
from shadowdyn.shadowing import (
    PseudoOrbit,
    format_pseudo_orbit,
    parse_pseudo_orbit,
    shadowing_modulus,
    trace,
    verify_pseudo_orbit,
)
from shadowdyn.systems import (
    SFT,
    Odometer,
    Product,
    ProductPoint,
    UPPoint,
    apply_map,
    distance,
    words_of_length,
)

from strategies import expand_distance, random_pseudo_orbit, sfts

FULL = SFT.full_shift(2)
GOLDEN = SFT.golden_mean()
ZERO = UPPoint((), (0,))
ONE = UPPoint((), (1,))


def tail(n):
    """0^n 1^inf"""
    return UPPoint((0,) * n, (1,))


def orbit(system, x, n):
    out = [x]
    for _ in range(n - 1):
        out.append(apply_map(system, out[-1]))
    return out


def test_verify_examples():
    alt = UPPoint((), (0, 1))
    assert verify_pseudo_orbit(FULL, orbit(FULL, alt, 5), Fraction(1, 2**20))
    assert not verify_pseudo_orbit(FULL, [ZERO, ONE], Fraction(1, 2))
    assert verify_pseudo_orbit(FULL, [ZERO, tail(3)], Fraction(1, 4))
    with pytest.raises(InputError):
        verify_pseudo_orbit(FULL, [], Fraction(1, 2))


def test_periodic_wrap_is_checked():
    assert verify_pseudo_orbit(FULL, [UPPoint((), (0, 1)), UPPoint((), (1, 0))], Fraction(1, 8), periodic=True)
    assert not verify_pseudo_orbit(FULL, [ZERO, ZERO, ONE], Fraction(1, 2), periodic=True)


def test_modulus_values():
    assert shadowing_modulus(FULL, Fraction(1, 8)) == Fraction(1, 16)
    assert shadowing_modulus(Odometer((2, 4, 8)), Fraction(1, 4)) == Fraction(1, 4)
    # two factors: the first min(D, 2) = 2 rescaled moduli, eps/4 * 2^-2
    assert shadowing_modulus(Product((FULL, FULL)), Fraction(1, 2)) == Fraction(1, 32)


def test_trace_worked_example():
    pts = [ZERO, tail(3), tail(2), tail(1), ONE, ONE]
    z, cert = trace(FULL, PseudoOrbit(pts, Fraction(1, 4)), Fraction(1, 2))
    assert z == tail(4)
    assert cert.distances[1] == 0
    assert cert.holds()


def test_trace_exact_orbit_returns_initial_point():
    x = UPPoint((1, 1), (0, 1, 0))
    z, cert = trace(FULL, PseudoOrbit(orbit(FULL, x, 7), Fraction(1, 64)), Fraction(1, 32))
    assert z == x
    assert all(d == 0 for d in cert.distances)


def test_trace_periodic_golden_mean():
    word = (0, 1, 0, 0, 1)
    pts = [UPPoint((), word[i:] + word[:i]) for i in range(5)]
    z, cert = trace(GOLDEN, PseudoOrbit(pts, Fraction(1, 4), periodic=True), Fraction(1, 2))
    assert z.preperiod == () and len(z.period) == 5
    assert cert.holds()


def test_trace_refusals():
    with pytest.raises(ModulusError):
        trace(FULL, PseudoOrbit([ZERO, ZERO], Fraction(1, 2)), Fraction(1, 2))
    with pytest.raises(ValidityError):
        trace(FULL, PseudoOrbit([ZERO, ONE], Fraction(1, 4)), Fraction(1, 2))
    with pytest.raises(ValidityError):
        trace(GOLDEN, PseudoOrbit([UPPoint((1,), (1,))], Fraction(1, 4)), Fraction(1, 2))


def test_pseudo_orbit_text_round_trip():
    po = PseudoOrbit([ZERO, tail(3)], Fraction(1, 4), periodic=True)
    assert parse_pseudo_orbit(format_pseudo_orbit(po)) == po


# -- brute-force modulus oracles ---------------------------------------------

def _pool(sft, max_pre=2, max_per=3):
    pts = set()
    for lp in range(max_pre + 1):
        for per_len in range(1, max_per + 1):
            for pre in words_of_length(sft, lp) if lp else [()]:
                for per in words_of_length(sft, per_len):
                    p = UPPoint(pre, per)
                    if sft.is_legal_word(pre + per + per[:1]):
                        pts.add(p)
    return sorted(pts, key=str)


def _pseudo_orbits(system, pool, delta, length):
    succ = {x: [y for y in pool if distance(system, apply_map(system, x), y) < delta] for x in pool}

    def extend(path):
        if len(path) == length:
            yield path
            return
        for y in succ[path[-1]]:
            yield from extend(path + [y])

    for x in pool:
        yield from extend([x])


def test_shift_modulus_oracle():
    eps = Fraction(1, 8)
    delta = shadowing_modulus(FULL, eps)
    pool = _pool(FULL)
    count = 0
    for pts in _pseudo_orbits(FULL, pool, delta, 5):
        z, _ = trace(FULL, PseudoOrbit(pts, delta), eps)
        y = z
        for x in pts:
            assert expand_distance(y, x) < eps
            y = y.shift(1)
        count += 1
    assert count > 50


def test_odometer_modulus_oracle():
    odo = Odometer((2, 4, 8))
    eps = Fraction(1, 4)
    delta = shadowing_modulus(odo, eps)
    pool = [odo.point_from_integer(i) for i in range(8)]
    for pts in _pseudo_orbits(odo, pool, delta, 4):
        z, cert = trace(odo, PseudoOrbit(pts, delta), eps)
        y = z
        for x in pts:
            assert distance(odo, y, x) < eps
            y = apply_map(odo, y)
    # at twice the modulus some pseudo-orbit escapes every point
    bad = [odo.point_from_integer(0), odo.point_from_integer(5)]
    assert verify_pseudo_orbit(odo, bad, 2 * delta)
    assert not any(
        all(distance(odo, apply_map(odo, odo.point_from_integer(s), n), x) < eps for n, x in enumerate(bad))
        for s in range(8))


def test_product_modulus_oracle():
    prod = Product((FULL, FULL))
    eps = Fraction(1, 2)
    delta = shadowing_modulus(prod, eps)
    rng = random.Random(3)
    for _ in range(40):
        k = 4
        c1 = random_pseudo_orbit(FULL, k, 8, rng)
        c2 = random_pseudo_orbit(FULL, k, 8, rng)
        pts = [ProductPoint((a, b)) for a, b in zip(c1, c2)]
        assert verify_pseudo_orbit(prod, pts, delta)
        z, cert = trace(prod, PseudoOrbit(pts, delta), eps)
        assert cert.holds()
        y = z
        for x in pts:
            d = sum(Fraction(1, 2**(n + 1)) * expand_distance(a, b)
                    for n, (a, b) in enumerate(zip(y.components, x.components)))
            assert d < eps
            y = apply_map(prod, y)


@settings(max_examples=80, deadline=None)
@given(sfts(), st.integers(1, 8), st.integers(1, 64), st.integers(0, 2**32))
def test_tracing_soundness(sft, k, length, seed):
    rng = random.Random(seed)
    eps = Fraction(1, 2**k)
    delta = shadowing_modulus(sft, eps)
    pts = random_pseudo_orbit(sft, k, length, rng)
    z, cert = trace(sft, PseudoOrbit(pts, delta), eps)
    assert cert.holds()
    y = z
    for x in pts:
        assert expand_distance(y, x) < eps
        y = y.shift(1)


@settings(max_examples=40, deadline=None)
@given(sfts(max_symbols=3), st.integers(2, 3), st.integers(2, 6), st.integers(0, 2**32))
def test_tracing_point_unique_at_expansivity_scale(sft, k, length, seed):
    rng = random.Random(seed)
    eps = Fraction(1, 2**k)
    pts = random_pseudo_orbit(sft, k, length, rng)
    z, _ = trace(sft, PseudoOrbit(pts, shadowing_modulus(sft, eps)), eps)
    # every legal word that eps-traces the truncated pseudo-orbit matches z
    span = length + k
    tracers = [w for w in words_of_length(sft, span)
               if all(w[n:n + k + 1] == x.prefix(k + 1) for n, x in enumerate(pts))]
    assert tracers
    for w in tracers:
        assert w[:length] == z.prefix(length)
