"""Threshold sharing over pre-shared randomness.

An (n, k) scheme runs 3+m independent degree-(k-1) polynomial schemes
in parallel, one per payload coordinate.  The first k share payloads
are fixed to the caller-supplied anchor vectors (pre-shared random
data), the remaining shares and the x=0 payload are interpolated from
them.  The x=0 payload carries the key triple for the
secret-authenticating tag followed by the m-element secret.

Reconstruction evaluates the interpolating polynomial at zero via
Lagrange weights; the weights depend only on the x coordinates, so
they (and their window tables) are cached across the 3+m coordinates
and across repeated subset enumerations.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import (
    DuplicateCoordinateError,
    FieldMismatchError,
    InsufficientSharesError,
)
from .field import (
    ElementVector,
    FieldElement,
    FieldId,
    Multiplier,
    encode_index,
    inv_int,
    mul_int,
)
from .hashing import SecretTagKey


@dataclass(frozen=True)
class SharingParams:
    """Scheme dimensions: n hubs, threshold k, secret length m."""

    n: int
    k: int
    m: int
    field: FieldId

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one hub")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"threshold k={self.k} outside 1..{self.n}")
        if self.m < 1:
            raise ValueError("secret length must be at least 1")
        if self.n >= self.field.order:
            raise ValueError(f"n={self.n} needs more x coordinates than {self.field.name} has")

    @property
    def payload_len(self) -> int:
        return 3 + self.m


@dataclass(frozen=True)
class ShareBundle:
    """One hub's share: index i, x coordinate, and 3+m payload values."""

    index: int
    x: FieldElement
    payload: ElementVector


@dataclass(frozen=True)
class SecretCandidate:
    """A reconstructed (key, secret, claimed tag) triple pending validation."""

    key: SecretTagKey
    secret: ElementVector
    tag: FieldElement


@functools.lru_cache(maxsize=4096)
def _weight_multipliers(
    field: FieldId, xs: tuple[int, ...], target: int
) -> tuple[Multiplier, ...]:
    """Lagrange basis weights at `target` for interpolation points `xs`.

    weight_j = prod_{l != j} (target + x_l) * inv(x_j + x_l), returned
    as ready-to-use multipliers.
    """
    weights = []
    for j, xj in enumerate(xs):
        w = 1
        for l, xl in enumerate(xs):
            if l == j:
                continue
            w = mul_int(field, w, mul_int(field, target ^ xl, inv_int(field, xj ^ xl)))
        weights.append(Multiplier(field, w))
    return tuple(weights)


def _combine(
    field: FieldId, multipliers: tuple[Multiplier, ...], payloads: Sequence[tuple[int, ...]]
) -> tuple[int, ...]:
    length = len(payloads[0])
    acc = [0] * length
    for mult, payload in zip(multipliers, payloads):
        if mult.scalar == 0:
            continue
        for i in range(length):
            acc[i] ^= mult.mul(payload[i])
    return tuple(acc)


def generate_shares(
    anchors: Sequence[ElementVector], params: SharingParams
) -> tuple[ElementVector, list[ShareBundle]]:
    """Build all n share payloads plus the x=0 payload from k anchors.

    Shares 1..k are the anchors themselves; shares k+1..n and the x=0
    payload are the unique degree-(k-1) interpolation through them,
    evaluated coordinate by coordinate.
    """
    if len(anchors) != params.k:
        raise ValueError(f"need exactly k={params.k} anchors, got {len(anchors)}")
    for a in anchors:
        if a.field is not params.field:
            raise FieldMismatchError("anchor field differs from scheme field")
        if len(a) != params.payload_len:
            raise ValueError(f"anchor length {len(a)} != 3+m = {params.payload_len}")

    field = params.field
    xs = tuple(encode_index(i, field).value for i in range(1, params.k + 1))
    payloads = [a.values for a in anchors]

    bundles = [
        ShareBundle(i + 1, encode_index(i + 1, field), anchors[i]) for i in range(params.k)
    ]
    for i in range(params.k + 1, params.n + 1):
        target = encode_index(i, field).value
        mults = _weight_multipliers(field, xs, target)
        bundles.append(
            ShareBundle(
                i, FieldElement(field, target), ElementVector(field, _combine(field, mults, payloads))
            )
        )
    zero_mults = _weight_multipliers(field, xs, 0)
    y0 = ElementVector(field, _combine(field, zero_mults, payloads))
    return y0, bundles


def reconstruct(points: Sequence[tuple[FieldElement, ElementVector]]) -> ElementVector:
    """Evaluate the polynomial through `points` at x=0, per coordinate."""
    if not points:
        raise ValueError("no points to reconstruct from")
    field = points[0][0].field
    length = len(points[0][1])
    xs = []
    payloads = []
    for x, payload in points:
        if x.field is not field or payload.field is not field:
            raise FieldMismatchError("mixed fields in reconstruction points")
        if len(payload) != length:
            raise ValueError("payload lengths differ")
        if x.value == 0:
            raise ValueError("x=0 is the reconstruction target, not a share coordinate")
        xs.append(x.value)
        payloads.append(payload.values)
    if len(set(xs)) != len(xs):
        raise DuplicateCoordinateError("duplicate x coordinate")
    mults = _weight_multipliers(field, tuple(xs), 0)
    return ElementVector(field, _combine(field, mults, payloads))


def candidate_secrets(
    shares: Mapping[int, ElementVector], k: int, claimed_tag: FieldElement
) -> list[SecretCandidate]:
    """Reconstruct one candidate per k-subset of the received shares.

    Subsets are walked in lexicographic order of hub indices; value
    duplicates are dropped keeping first-seen order.  With honest
    shares every subset agrees and exactly one candidate survives.
    """
    if len(shares) < k:
        raise InsufficientSharesError(f"have {len(shares)} shares, need {k}")
    field = claimed_tag.field
    indices = sorted(shares)
    seen: dict[tuple[int, ...], None] = {}
    out: list[SecretCandidate] = []
    for subset in itertools.combinations(indices, k):
        points = [(encode_index(i, field), shares[i]) for i in subset]
        y0 = reconstruct(points)
        if len(y0) < 4:
            raise ValueError("payloads too short to carry a key triple and a secret")
        if y0.values in seen:
            continue
        seen[y0.values] = None
        key = SecretTagKey(y0[0], y0[1], y0[2])
        secret = ElementVector(field, y0.values[3:])
        out.append(SecretCandidate(key, secret, claimed_tag))
    return out
