import itertools
import random
from fractions import Fraction

import pytest

from shadowdyn.embedding import (
    EmbeddingData,
    build_embedding,
    chacon_word,
    decode,
    embed_full_shift,
    encode,
    length_ordered_words,
    witness_points,
)
from shadowdyn.errors import (
    DepthError,
    InfeasibleError,
    InputError,
    MixingRequiredError,
    NotInSubsystemError,
)
from shadowdyn.systems import SFT, UPPoint, apply_map, distance, dyadic_exponent

FULL = SFT.full_shift(2)
GOLDEN = SFT.golden_mean()


def test_full_shift_embedding_shape():
    data = embed_full_shift(FULL, [(0,), (1,)], Fraction(1, 4))
    assert data.d == 1
    assert len({len(a) for a in data.anchors}) == 1 == len({data.m})
    k = dyadic_exponent(data.eps)
    assert data.probes[0][:k] != data.probes[1][:k]


@pytest.mark.parametrize("sft,targets", [(FULL, [(0,), (1,)]), (GOLDEN, [(0,), (0, 1)]),
                                         (SFT.full_shift(3), [(0,), (1,), (2,)])])
def test_round_trip_exhaustive(sft, targets):
    data = embed_full_shift(sft, targets, Fraction(1, 4))
    for n in range(1, 7):
        for alpha in itertools.product(range(data.d + 1), repeat=n):
            y = encode(data, alpha + (0,))
            assert sft.is_legal_word(y.prefix(y.known_depth))
            assert decode(data, y, n) == alpha


def test_containment_in_targets():
    targets = [(0,), (0, 1)]
    data = embed_full_shift(GOLDEN, targets, Fraction(1, 4))
    for alpha in itertools.product((0, 1), repeat=5):
        y = encode(data, UPPoint((), alpha))
        for i, a in enumerate(alpha):
            t = targets[a]
            assert y.window(data.m * i + data.r, len(t)) == t


def test_probe_cylinders_are_separated():
    data = embed_full_shift(GOLDEN, [(0,), (0,)], Fraction(1, 8))
    x = GOLDEN.freeze(data.probes[0])
    y = GOLDEN.freeze(data.probes[1])
    assert distance(GOLDEN, x, y) > data.eps


def test_equivariance_on_exact_points():
    rng = random.Random(5)
    data = embed_full_shift(FULL, [(0,), (1,)], Fraction(1, 4))
    for _ in range(50):
        pre = tuple(rng.randrange(2) for _ in range(rng.randint(0, 4)))
        per = tuple(rng.randrange(2) for _ in range(rng.randint(1, 4)))
        alpha = UPPoint(pre, per)
        y = encode(data, alpha)
        assert apply_map(FULL, y, data.m) == encode(data, alpha.shift(1))
        assert decode(data, y, 12) == alpha.prefix(12)


def test_decode_errors():
    data = embed_full_shift(FULL, [(0,), (1,)], Fraction(1, 4))
    ones = UPPoint((), (1,))
    assert (1,) * len(data.probes[0]) not in data.probes
    with pytest.raises(NotInSubsystemError):
        decode(data, ones, 5)
    with pytest.raises(DepthError):
        decode(data, encode(data, (0, 1)), 5)
    with pytest.raises(InputError):
        encode(data, ())
    with pytest.raises(InputError):
        encode(data, (2,))


def test_build_errors():
    with pytest.raises(InfeasibleError):
        build_embedding(GOLDEN, [(1, 1)], Fraction(1, 4))
    with pytest.raises(MixingRequiredError):
        build_embedding(SFT.from_edges(2, [(0, 1), (1, 0)]), [(0,), (1,)], Fraction(1, 4))


def test_text_round_trip():
    data = embed_full_shift(GOLDEN, [(0,), (0, 1)], Fraction(1, 4))
    assert EmbeddingData.from_text(GOLDEN, data.to_text()) == data
    with pytest.raises(InputError):
        EmbeddingData.from_text(GOLDEN, data.to_text().replace("anchor 1=", "anchor 1=1"))


def test_chacon_word_is_substitution_fixed_point():
    w = chacon_word(200)
    image = tuple(s for a in w for s in ((0, 0, 1, 0) if a == 0 else (1,)))
    assert image[:200] == w
    assert w[:8] == (0, 0, 1, 0, 0, 0, 1, 0)


def test_length_ordered_words():
    assert length_ordered_words(10) == (0, 1, 0, 0, 0, 1, 1, 0, 1, 1)


def test_witnesses_classify_as_claimed():
    data = embed_full_shift(FULL, [(0,), (1,)], Fraction(1, 4))
    nw, rec, mini = witness_points(data, {"nonwandering": 512, "recurrent": 512, "minimal": 2048})
    assert nw.report.nonwandering and not nw.report.recurrent
    assert rec.report.recurrent and not rec.report.minimal
    assert mini.report.minimal and not mini.report.regularly_recurrent
    assert all(w.report.consistent() for w in (nw, rec, mini))
