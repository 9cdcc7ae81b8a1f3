import random
from fractions import Fraction

import numpy as np
import pytest

from shadowdyn import certificates
from shadowdyn.errors import CapExceededError, MixingRequiredError, RequestError, ValidityError
from shadowdyn.specification import (
    SpecRequest,
    SpecWindow,
    drift_budget,
    lam,
    periodic_spec_point,
    rr_spec_point,
    spec_constant,
    verify_spec_certificate,
)
from shadowdyn.systems import SFT, UPPoint, no_periodic_product, pow2

from strategies import random_spec_request

FULL = SFT.full_shift(2)
GOLDEN = SFT.golden_mean()


def block_mixing_oracle(sft, length):
    """Least ``n`` such that every ``length``-block reaches every other in
    exactly ``n`` steps, from a hand-built block graph."""
    import itertools

    blocks = [w for w in itertools.product(range(sft.size), repeat=length)
              if all(sft.allowed[a][b] for a, b in zip(w, w[1:]))]
    index = {w: i for i, w in enumerate(blocks)}
    a = np.zeros((len(blocks), len(blocks)), dtype=np.float32)
    for w in blocks:
        for b in range(sft.size):
            if sft.allowed[w[-1]][b]:
                a[index[w], index[w[1:] + (b,)]] = 1
    reach, n = a.copy(), 1
    while not (reach > 0).all():
        reach = np.minimum(reach @ a, 1)
        n += 1
    return n


def test_lambda_budget():
    for k in range(-3, 9):
        eps = pow2(k)
        for start in range(6):
            partial = sum(lam(eps, i) for i in range(start, start + 60))
            budget = drift_budget(eps, start)
            assert partial < budget and budget - partial < pow2(150)
            assert budget < eps / 4
        assert lam(eps, 0) == eps / 8


def test_spec_constant_matches_block_oracle():
    # eps = 1/2: lambda_0/8 = 2^-7, shadowing at half that, chains on 10-blocks
    assert spec_constant(FULL, Fraction(1, 2)) == block_mixing_oracle(FULL, 10) + 1
    assert spec_constant(GOLDEN, Fraction(1, 4)) == block_mixing_oracle(GOLDEN, 11) + 1


def test_spec_constant_trivial_and_errors():
    assert spec_constant(FULL, 8) == 1
    assert spec_constant(GOLDEN, 16) == 1
    with pytest.raises(MixingRequiredError):
        spec_constant(SFT.from_edges(2, [(0, 1), (1, 0)]), Fraction(1, 4))


def test_single_constant_window():
    m = spec_constant(FULL, Fraction(1, 4))
    req = SpecRequest(Fraction(1, 4), (SpecWindow(0, 3, UPPoint((), (0,))),), m + 3)
    z, cert = periodic_spec_point(FULL, req)
    assert z.preperiod == () and (m + 3) % len(z.period) == 0
    assert cert.exact and cert.holds()
    assert all(z.symbol(j) == 0 for j in range(8))


def test_golden_forced_windows():
    eps = Fraction(1, 4)
    m = spec_constant(GOLDEN, eps)
    a2 = 1 + m
    req = SpecRequest(eps, (SpecWindow.starting_at(0, 1, UPPoint((), (0,))),
                            SpecWindow.starting_at(a2, a2 + 2, UPPoint((), (0, 1)))), a2 + 2 + m)
    z, cert = periodic_spec_point(GOLDEN, req)
    assert GOLDEN.is_legal_word(z.period + z.period[:1])
    assert z.window(0, 2) == (0, 0) and z.window(a2, 3) == (0, 1, 0)
    assert verify_spec_certificate(GOLDEN, z, req)


def test_request_errors():
    eps = Fraction(1, 4)
    m = spec_constant(GOLDEN, eps)
    x = UPPoint((), (0,))
    tight = SpecRequest(eps, (SpecWindow(0, 1, x), SpecWindow(m, m + 1, x)), 4 * m)
    with pytest.raises(RequestError):
        periodic_spec_point(GOLDEN, tight)
    short = SpecRequest(eps, (SpecWindow(0, 1, x), SpecWindow(m + 1, m + 2, x)), m + 1)
    with pytest.raises(RequestError):
        periodic_spec_point(GOLDEN, short)
    with pytest.raises(RequestError):
        periodic_spec_point(GOLDEN, SpecRequest(Fraction(1, 2), (SpecWindow(0, 1, x),), 4 * m))
    with pytest.raises(ValidityError):
        periodic_spec_point(GOLDEN, SpecRequest(eps, (SpecWindow(0, 1, UPPoint((), (1,))),), 4 * m))


@pytest.mark.parametrize("sft", [FULL, GOLDEN, SFT.from_edges(3, [(0, 0), (0, 1), (1, 2), (2, 0), (2, 1)])])
def test_random_requests_verify(sft):
    rng = random.Random(11)
    eps = Fraction(1, 4)
    m = spec_constant(sft, eps)
    for _ in range(15):
        req = random_spec_request(sft, eps, m, rng)
        z, cert = periodic_spec_point(sft, req)
        assert cert.exact and cert.holds()
        assert z.shift(req.p) == z
        # window inequality as agreement on eps-windows of k + 1 = 3 symbols
        for w in req.windows:
            for j in range(w.a, w.b + 1):
                assert z.window(j, 3) == w.at(j).window(0, 3)
        assert verify_spec_certificate(sft, z, req)
        text = certificates.spec_certificate(sft, req, z, cert.horizon, True)
        assert certificates.verify_text(text).ok


def test_mutated_point_is_rejected():
    rng = random.Random(3)
    eps = Fraction(1, 4)
    req = random_spec_request(FULL, eps, spec_constant(FULL, eps), rng)
    z, _ = periodic_spec_point(FULL, req)
    w = req.windows[0]
    per = list(z.period)
    j = w.a % len(per)
    per[j] ^= 1
    bad = UPPoint((), tuple(per))
    res = verify_spec_certificate(FULL, bad, req)
    assert not res and res.failure[0] == "window"
    assert verify_spec_certificate(FULL, bad, SpecRequest(2, req.windows, req.p))


def test_rr_equals_periodic_on_sfts():
    rng = random.Random(4)
    eps = Fraction(1, 4)
    m = spec_constant(GOLDEN, eps)
    for _ in range(10):
        req = random_spec_request(GOLDEN, eps, m, rng)
        z, _ = periodic_spec_point(GOLDEN, req)
        z2, cert, history = rr_spec_point(GOLDEN, req, stages=3)
        assert z2 == z and cert.exact and cert.holds()
        ms = [st.m for st in history]
        assert all(b % a == 0 for a, b in zip(ms, ms[1:]))
        assert ms[1] == ms[0]
        for _, m_r, d, bound in cert.rr_bounds:
            assert d <= bound


def test_rr_stage_zero():
    rng = random.Random(9)
    eps = Fraction(1, 4)
    req = random_spec_request(GOLDEN, eps, spec_constant(GOLDEN, eps), rng)
    _, cert, history = rr_spec_point(GOLDEN, req, stages=0)
    assert len(history) == 1 and cert.rr_bounds == () and "stage 0 only" in cert.notes


def test_rr_on_product_truncation():
    system = no_periodic_product(4)
    eps = Fraction(1, 4)
    rng = random.Random(1)
    m = spec_constant(system, eps)
    req = random_spec_request(system, eps, m, rng, max_windows=2)
    z, cert, history = rr_spec_point(system, req, horizon=512)
    assert not cert.exact and cert.holds()
    assert verify_spec_certificate(system, z, req, horizon=512)
    stages = [(mr, bound) for _, mr, _, bound in cert.rr_bounds]
    text = certificates.spec_certificate(system, req, z, 512, False, stages)
    assert certificates.verify_text(text).ok
    with pytest.raises(CapExceededError):
        rr_spec_point(system, req, horizon=512, cap=req.p - 1)


def test_request_text_round_trip():
    rng = random.Random(5)
    req = random_spec_request(GOLDEN, Fraction(1, 4), 13, rng)
    assert SpecRequest.from_text(req.to_text()) == req
