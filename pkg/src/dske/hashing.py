"""Polynomial one-time authentication tags.

Two families over one field F:

  message tag   t = d + sum_{j=1..s} c^j v_j          key (c, d)
  secret tag    o = d + c e + sum_{j=1..m} c^(j+1) y_j  key (c, d, e)

A message-tag key authenticates one hub-leg message and is consumed
from pre-shared randomness; the secret-tag key travels inside the
shared secret itself, so the secret can be validated without any
pre-established sender-receiver key.  Forgery probability is bounded
by s/|F| resp. (m+1)/|F| per key use.

Evaluation is Horner form: O(length) products by the fixed point c.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptySecretError, FieldMismatchError
from .field import ElementVector, FieldElement, Multiplier


@dataclass(frozen=True)
class MessageTagKey:
    """Single-use key pair (c, d) for message tags."""

    c: FieldElement
    d: FieldElement

    def __post_init__(self) -> None:
        if self.c.field is not self.d.field:
            raise FieldMismatchError("key elements live in different fields")

    @property
    def field(self):
        return self.c.field


@dataclass(frozen=True)
class SecretTagKey:
    """Key triple (c, d, e) for secret-authenticating tags."""

    c: FieldElement
    d: FieldElement
    e: FieldElement

    def __post_init__(self) -> None:
        if not (self.c.field is self.d.field is self.e.field):
            raise FieldMismatchError("key elements live in different fields")

    @property
    def field(self):
        return self.c.field

    @classmethod
    def from_vector(cls, vec: ElementVector) -> "SecretTagKey":
        if len(vec) != 3:
            raise ValueError(f"need exactly 3 elements, got {len(vec)}")
        return cls(vec[0], vec[1], vec[2])


def _horner(c_mul: Multiplier, values: tuple[int, ...]) -> int:
    """sum_{j=1..s} c^j v_j via Horner; empty sum is zero."""
    acc = 0
    for v in reversed(values):
        acc = c_mul.mul(acc ^ v)
    return acc


def message_tag(key: MessageTagKey, msg: ElementVector) -> FieldElement:
    """Tag an element sequence of any length, including empty."""
    if msg.field is not key.field:
        raise FieldMismatchError("message field differs from key field")
    c_mul = Multiplier(key.field, key.c.value)
    return FieldElement(key.field, key.d.value ^ _horner(c_mul, msg.values))


def secret_tag(key: SecretTagKey, secret: ElementVector) -> FieldElement:
    """Tag a nonempty secret: d + c*(e + sum c^j y_j)."""
    if secret.field is not key.field:
        raise FieldMismatchError("secret field differs from key field")
    if len(secret) == 0:
        raise EmptySecretError("secret-authenticating tag needs at least one element")
    c_mul = Multiplier(key.field, key.c.value)
    inner = key.e.value ^ _horner(c_mul, secret.values)
    return FieldElement(key.field, key.d.value ^ c_mul.mul(inner))
