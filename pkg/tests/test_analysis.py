import itertools
import random

import mpmath
import pytest
from hypothesis import given, settings

from shadowdyn.analysis import (
    classify_dichotomy,
    point_classifier,
    positive_entropy_report,
    sft_entropy,
    word_complexity,
)
from shadowdyn.chains import decompose
from shadowdyn.embedding import chacon_word, decode
from shadowdyn.errors import DepthError, InputError
from shadowdyn.systems import SFT, ApproxPoint, Odometer, Product, ProductPoint, UPPoint, two_cycle_sft

from strategies import all_sfts, random_point, sfts

FULL = SFT.full_shift(2)
GOLDEN = SFT.golden_mean()
CYCLE3 = SFT.from_edges(3, [(0, 1), (1, 2), (2, 0)])
FIGURE_EIGHT = SFT.from_edges(3, [(0, 1), (1, 0), (0, 2), (2, 0)])


def brute_complexity(sft, n):
    return sum(1 for w in itertools.product(range(sft.size), repeat=n) if sft.is_legal_word(w))


def test_entropy_examples():
    e = sft_entropy(FULL)
    assert e.contains(mpmath.log(2)) and e.polynomial == "x - 2"
    g = sft_entropy(GOLDEN)
    assert g.contains(mpmath.log((1 + mpmath.sqrt(5)) / 2))
    assert g.width < 1e-9 and g.polynomial == "x**2 - x - 1"
    # x^2 - x - 1 is increasing past 1/2, so a sign change brackets the golden ratio
    q = lambda x: x * x - x - 1
    assert q(g.root_lo) <= 0 <= q(g.root_hi)
    z = sft_entropy(CYCLE3)
    assert z.exact_zero and z.lo == 0 == z.hi
    two = SFT.from_edges(5, [(0, 1), (1, 0), (2, 3), (3, 4), (4, 2)])
    assert sft_entropy(two).exact_zero


def test_entropy_reducible_takes_largest_block():
    # golden mean block feeding a full 2-shift block
    sft = SFT.from_matrix([[1, 1, 1, 0], [1, 0, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]])
    assert sft_entropy(sft).contains(mpmath.log(2))


def test_word_complexity_examples():
    assert word_complexity(FULL, 3) == 8
    assert word_complexity(GOLDEN, 3) == 5
    assert word_complexity(CYCLE3, 10) == 3
    prod = Product((GOLDEN, FULL))
    assert word_complexity(prod, 4) == 8 * 16


@settings(max_examples=40, deadline=None)
@given(sfts(max_symbols=4))
def test_word_complexity_matches_enumeration(sft):
    for n in range(1, 6):
        assert word_complexity(sft, n) == brute_complexity(sft, n)


@settings(max_examples=40, deadline=None)
@given(sfts(max_symbols=5))
def test_complexity_bounds_entropy_from_above(sft):
    e = sft_entropy(sft)
    for n in range(1, 25):
        c = word_complexity(sft, n)
        assert mpmath.log(c) / n >= e.lo


def test_complexity_gap_at_24_on_irreducible_sfts():
    for n in (1, 2, 3):
        for sft in all_sfts(n):
            basics = decompose(sft).basic_sets
            if len(basics) != 1 or len(basics[0].symbols) != sft.size:
                continue
            gap = mpmath.log(word_complexity(sft, 24)) / 24 - sft_entropy(sft).hi
            assert gap < 0.05


def test_dichotomy_examples():
    cycles = SFT.from_edges(5, [(0, 1), (1, 0), (2, 3), (3, 4), (4, 2)])
    d = classify_dichotomy(cycles)
    assert d.kind == "equicontinuous" and d.witness is None
    full = classify_dichotomy(FULL)
    assert full.kind == "positive_entropy" and full.witness is not None
    assert classify_dichotomy(GOLDEN).kind == "positive_entropy"


def test_dichotomy_witness_lives_in_a_basic_set():
    # a branching block {2,3} reached from a single cycle {0,1}
    sft = SFT.from_edges(4, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (2, 2)])
    d = classify_dichotomy(sft)
    assert d.kind == "positive_entropy"
    data = d.witness
    for a in data.anchors:
        assert set(a) <= {2, 3}
    for alpha in itertools.product((0, 1), repeat=4):
        y = ApproxPoint(tuple(s for b in alpha + (0,) for s in data.anchors[b]))
        assert decode(data, y, 4) == alpha


def test_dichotomy_agrees_with_entropy_small():
    for n in (1, 2):
        for sft in all_sfts(n):
            e = sft_entropy(sft)
            positive = classify_dichotomy(sft).kind == "positive_entropy"
            assert positive == (not e.exact_zero and e.lo > 0)


def test_classifier_fixed_point():
    r = point_classifier(FULL, UPPoint((), (0,)))
    assert r.exact and r.periodic and r.regularly_recurrent and r.minimal
    assert r.recurrent and r.nonwandering and r.consistent()


def test_classifier_lemma_point():
    r = point_classifier(FULL, UPPoint((1,), (0,)))
    assert r.nonwandering and not r.recurrent and r.periodic is False


def test_classifier_chacon():
    point = ApproxPoint(chacon_word(10**4 + 8))
    r = point_classifier(FULL, point, horizon=10**4, depth=3, max_k=32)
    assert r.minimal and r.recurrent and not r.regularly_recurrent
    refuted = {k for k, _ in r.rr_refutations}
    assert refuted == set(range(1, 33))
    prefix = point.prefix(3)
    for k, n in r.rr_refutations:
        assert k * n <= 10**4 and point.window(k * n, 3) != prefix


def test_classifier_length_ordered_word_is_not_minimal():
    from shadowdyn.embedding import length_ordered_words

    point = ApproxPoint(length_ordered_words(6000))
    r = point_classifier(FULL, point, horizon=4096, depth=3)
    assert r.recurrent and not r.minimal
    start, length = r.gap_violation
    assert length > r.gap_bound
    assert all(point.window(start + i, 3) != point.prefix(3) for i in range(1, length))


def test_classifier_needs_depth():
    with pytest.raises(DepthError):
        point_classifier(FULL, ApproxPoint((0, 1) * 10), horizon=100)


def test_classifier_uses_primitive_period():
    r = point_classifier(FULL, UPPoint((), (0, 1, 0, 1)), depth=2)
    assert r.first_return == 2 == r.rr_witness


def test_classifier_rejects_odometer_points():
    odo = Odometer((2, 6))
    with pytest.raises(InputError):
        point_classifier(odo, odo.point_from_integer(1))


def test_equicontinuous_points_are_regularly_recurrent():
    rng = random.Random(2)
    cycles = SFT.from_edges(5, [(0, 1), (1, 0), (2, 3), (3, 4), (4, 2)])
    for _ in range(20):
        x = random_point(cycles, rng)
        r = point_classifier(cycles, x)
        assert r.regularly_recurrent and r.consistent()


def test_classifier_hierarchy_on_random_points():
    rng = random.Random(7)
    for sft in (FULL, GOLDEN, FIGURE_EIGHT):
        for _ in range(30):
            x = random_point(sft, rng)
            for exact in (True, False):
                r = point_classifier(sft, x, horizon=256, depth=3, exact=exact)
                assert r.consistent()
                if x.is_periodic:
                    assert r.regularly_recurrent


def test_classifier_on_products():
    prod = Product((GOLDEN, two_cycle_sft(1)))
    x = ProductPoint((UPPoint((), (0, 1)), UPPoint((), (0, 1, 0, 2, 3))))
    r = point_classifier(prod, x, horizon=200, depth=2, exact=False)
    assert r.regularly_recurrent and r.rr_witness == 10


def test_positive_entropy_report_examples():
    for sft in (FULL, FIGURE_EIGHT):
        rep = positive_entropy_report(sft, {"minimal": 2048})
        assert rep.unanimous and all(c.holds for c in rep.conditions)
        assert len(rep.conditions) == 7
    rep = positive_entropy_report(SFT.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))
    assert rep.unanimous and not any(c.holds for c in rep.conditions)
    assert rep.to_text().startswith("condition 1: false")
