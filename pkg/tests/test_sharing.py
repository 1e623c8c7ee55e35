"""Threshold sharing tests against a Gaussian-elimination oracle."""

import itertools
import random

import pytest

from dske.errors import DuplicateCoordinateError, InsufficientSharesError
from dske.field import ElementVector, FieldElement, FieldId, encode_index, inv_int, mul_int
from dske.sharing import (
    SharingParams,
    candidate_secrets,
    generate_shares,
    reconstruct,
)

GF8 = FieldId.GF8
GF128 = FieldId.GF128


def oracle_interpolate(field, points, target):
    """Solve the Vandermonde system by Gaussian elimination, then
    evaluate the polynomial at `target`.  Independent of the library's
    Lagrange-weight path."""
    k = len(points)
    rows = []
    for x, y in points:
        row = []
        p = 1
        for _ in range(k):
            row.append(p)
            p = mul_int(field, p, x)
        rows.append(row + [y])
    # forward elimination with partial pivot by nonzero entry
    for col in range(k):
        pivot = next(r for r in range(col, k) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        pinv = inv_int(field, rows[col][col])
        rows[col] = [mul_int(field, v, pinv) for v in rows[col]]
        for r in range(k):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a ^ mul_int(field, factor, b) for a, b in zip(rows[r], rows[col])]
    coeffs = [rows[i][k] for i in range(k)]
    acc = 0
    p = 1
    for c in coeffs:
        acc ^= mul_int(field, c, p)
        p = mul_int(field, p, target)
    return acc


def vec8(*values):
    return ElementVector(GF8, values)


def random_anchors(rng, k, length, field=GF8):
    width = field.bits
    return [
        ElementVector(field, tuple(rng.getrandbits(width) for _ in range(length)))
        for _ in range(k)
    ]


def test_k1_constant_scheme():
    params = SharingParams(n=3, k=1, m=1, field=GF8)
    anchor = vec8(9, 8, 7, 6)
    y0, bundles = generate_shares([anchor], params)
    assert y0 == anchor
    assert all(b.payload == anchor for b in bundles)


def test_k_equals_n_shares_are_anchors():
    params = SharingParams(n=3, k=3, m=2, field=GF8)
    rng = random.Random(20)
    anchors = random_anchors(rng, 3, 5)
    y0, bundles = generate_shares(anchors, params)
    assert [b.payload for b in bundles] == anchors
    assert [b.index for b in bundles] == [1, 2, 3]


def test_generate_shares_against_elimination_oracle():
    params = SharingParams(n=3, k=2, m=1, field=GF8)
    anchors = [vec8(1, 0, 0, 5), vec8(3, 0, 0, 9)]
    y0, bundles = generate_shares(anchors, params)
    for coord in range(4):
        points = [(1, anchors[0].values[coord]), (2, anchors[1].values[coord])]
        assert bundles[2].payload.values[coord] == oracle_interpolate(GF8, points, 3)
        assert y0.values[coord] == oracle_interpolate(GF8, points, 0)


def test_generate_shares_oracle_larger_random():
    rng = random.Random(21)
    for field in (GF8, GF128):
        params = SharingParams(n=5, k=3, m=2, field=field)
        anchors = random_anchors(rng, 3, 5, field)
        y0, bundles = generate_shares(anchors, params)
        xs = [1, 2, 3]
        for coord in range(5):
            points = [(xs[i], anchors[i].values[coord]) for i in range(3)]
            for b in bundles[3:]:
                assert b.payload.values[coord] == oracle_interpolate(field, points, b.index)
            assert y0.values[coord] == oracle_interpolate(field, points, 0)


def test_generate_shares_validates_inputs():
    params = SharingParams(n=3, k=2, m=1, field=GF8)
    with pytest.raises(ValueError):
        generate_shares([vec8(1, 2, 3, 4)], params)  # wrong count
    with pytest.raises(ValueError):
        generate_shares([vec8(1, 2, 3), vec8(1, 2, 3)], params)  # wrong length


def test_params_validation():
    with pytest.raises(ValueError):
        SharingParams(n=0, k=1, m=1, field=GF8)
    with pytest.raises(ValueError):
        SharingParams(n=3, k=4, m=1, field=GF8)
    with pytest.raises(ValueError):
        SharingParams(n=3, k=2, m=0, field=GF8)
    with pytest.raises(ValueError):
        SharingParams(n=256, k=2, m=1, field=GF8)  # too few x coordinates


def test_all_subsets_reconstruct_y0():
    rng = random.Random(22)
    for n, k in [(3, 2), (4, 2), (5, 3), (6, 4), (9, 5)]:
        params = SharingParams(n=n, k=k, m=2, field=GF8)
        anchors = random_anchors(rng, k, params.payload_len)
        y0, bundles = generate_shares(anchors, params)
        for subset in itertools.combinations(bundles, k):
            got = reconstruct([(b.x, b.payload) for b in subset])
            assert got == y0


def test_reconstruct_single_point():
    y = vec8(1, 2, 3, 4)
    assert reconstruct([(FieldElement(GF8, 7), y)]) == y


def test_reconstruct_known_pair_against_oracle():
    points = [(FieldElement(GF8, 1), vec8(7)), (FieldElement(GF8, 2), vec8(1))]
    got = reconstruct(points)
    assert got.values[0] == oracle_interpolate(GF8, [(1, 7), (2, 1)], 0)


def test_reconstruct_rejects_bad_points():
    y = vec8(1)
    with pytest.raises(DuplicateCoordinateError):
        reconstruct([(FieldElement(GF8, 1), y), (FieldElement(GF8, 1), y)])
    with pytest.raises(ValueError):
        reconstruct([(FieldElement(GF8, 0), y)])
    with pytest.raises(ValueError):
        reconstruct([])


def test_reconstruct_linear():
    rng = random.Random(23)
    xs = [FieldElement(GF8, 1), FieldElement(GF8, 2), FieldElement(GF8, 3)]
    a = [vec8(*(rng.randrange(256) for _ in range(4))) for _ in range(3)]
    b = [vec8(*(rng.randrange(256) for _ in range(4))) for _ in range(3)]
    lhs = reconstruct([(x, pa.xor(pb)) for x, pa, pb in zip(xs, a, b)])
    rhs = reconstruct(list(zip(xs, a))).xor(reconstruct(list(zip(xs, b))))
    assert lhs == rhs


def test_cancellation_anchor_shares():
    rng = random.Random(24)
    params = SharingParams(n=4, k=2, m=3, field=GF8)
    anchors = random_anchors(rng, 2, params.payload_len)
    _, bundles = generate_shares(anchors, params)
    for i in range(params.k):
        z = bundles[i].payload.xor(anchors[i])
        assert all(v == 0 for v in z.values)


def test_candidate_secrets_honest_single_candidate():
    rng = random.Random(25)
    params = SharingParams(n=4, k=2, m=1, field=GF8)
    anchors = random_anchors(rng, 2, params.payload_len)
    y0, bundles = generate_shares(anchors, params)
    shares = {b.index: b.payload for b in bundles}
    tag = FieldElement(GF8, 0x33)
    cands = candidate_secrets(shares, 2, tag)
    assert len(cands) == 1
    assert cands[0].secret.values == y0.values[3:]
    assert (cands[0].key.c.value, cands[0].key.d.value, cands[0].key.e.value) == y0.values[:3]
    assert cands[0].tag == tag


def test_candidate_secrets_poisoned_share():
    rng = random.Random(26)
    params = SharingParams(n=3, k=2, m=1, field=GF8)
    anchors = random_anchors(rng, 2, params.payload_len)
    y0, bundles = generate_shares(anchors, params)
    shares = {b.index: b.payload for b in bundles}
    poisoned = list(shares[2].values)
    poisoned[3] ^= 0x5A  # corrupt a secret coordinate
    shares[2] = ElementVector(GF8, tuple(poisoned))
    cands = candidate_secrets(shares, 2, FieldElement(GF8, 0))
    # subsets {1,2}, {1,3}, {2,3}: the two containing share 2 are corrupt
    assert 2 <= len(cands) <= 3
    honest = [
        c
        for c in cands
        if c.secret.values == y0.values[3:]
        and (c.key.c.value, c.key.d.value, c.key.e.value) == y0.values[:3]
    ]
    assert len(honest) == 1


def test_candidate_secrets_exactly_k_bundles():
    rng = random.Random(27)
    params = SharingParams(n=5, k=3, m=1, field=GF8)
    anchors = random_anchors(rng, 3, params.payload_len)
    _, bundles = generate_shares(anchors, params)
    shares = {b.index: b.payload for b in bundles[:3]}
    assert len(candidate_secrets(shares, 3, FieldElement(GF8, 0))) == 1


def test_candidate_secrets_insufficient():
    with pytest.raises(InsufficientSharesError):
        candidate_secrets({1: vec8(1, 2, 3, 4)}, 2, FieldElement(GF8, 0))


def test_candidate_order_deterministic():
    rng = random.Random(28)
    params = SharingParams(n=4, k=2, m=1, field=GF8)
    anchors = random_anchors(rng, 2, params.payload_len)
    _, bundles = generate_shares(anchors, params)
    shares = {b.index: b.payload for b in bundles}
    shares[4] = vec8(1, 2, 3, 4)  # corrupt one share
    first = candidate_secrets(shares, 2, FieldElement(GF8, 0))
    second = candidate_secrets(shares, 2, FieldElement(GF8, 0))
    assert [c.secret.values for c in first] == [c.secret.values for c in second]


def test_share_distribution_uniform_small_case():
    """For fixed secret coordinate values, each single share coordinate
    is exactly uniform: enumerate one coordinate scheme of the
    (3, 2) layout exhaustively."""
    counts = {s: [0] * 256 for s in range(4)}  # secrets 0..3 sampled
    lam1 = mul_int(GF8, 2, inv_int(GF8, 3))  # weight of x=1 at 0
    lam2 = mul_int(GF8, 1, inv_int(GF8, 3))  # weight of x=2 at 0
    for r1 in range(256):
        for s in range(4):
            # choose r2 so that the secret coordinate equals s
            r2 = mul_int(GF8, inv_int(GF8, lam2), s ^ mul_int(GF8, lam1, r1))
            share3 = oracle_interpolate(GF8, [(1, r1), (2, r2)], 3)
            counts[s][share3] += 1
    for s in range(4):
        assert all(c == 1 for c in counts[s])
