"""Binary Galois field arithmetic.

Two fixed fields are supported: GF(2^8) with reduction polynomial
x^8+x^4+x^3+x+1 (0x11B, the AES polynomial) and GF(2^128) with
x^128+x^7+x^2+x+1 (the GHASH polynomial).  An element is an int whose
bit i is the coefficient of x^i.  Addition in characteristic 2 is XOR,
so subtraction is the same operation as addition.

Scalar arithmetic lives here; `Multiplier` amortizes repeated
multiplication by one fixed element (polynomial tag evaluation,
share interpolation weights).  Constant-time operation is a non-goal:
this is a research artifact, not a hardened cryptographic library.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import FieldMismatchError, IndexOverflowError


class FieldId(enum.Enum):
    """The two supported field widths."""

    GF8 = 8
    GF128 = 128

    @property
    def bits(self) -> int:
        return self.value

    @property
    def byte_size(self) -> int:
        return self.value // 8

    @property
    def order(self) -> int:
        return 1 << self.value


# Reduction polynomials, including the leading term.
_POLY = {
    FieldId.GF8: 0x11B,
    FieldId.GF128: (1 << 128) | 0x87,
}

_MASK128 = (1 << 128) - 1


@dataclass(frozen=True)
class FieldElement:
    """A single element of GF(2^8) or GF(2^128)."""

    field: FieldId
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.order:
            raise ValueError(f"value {self.value:#x} out of range for {self.field.name}")

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def to_bytes(self) -> bytes:
        """Little-endian fixed-width encoding."""
        return self.value.to_bytes(self.field.byte_size, "little")

    @classmethod
    def from_bytes(cls, data: bytes, field: FieldId) -> "FieldElement":
        if len(data) != field.byte_size:
            raise ValueError(f"need {field.byte_size} bytes for {field.name}, got {len(data)}")
        return cls(field, int.from_bytes(data, "little"))


@dataclass(frozen=True)
class ElementVector:
    """An ordered sequence of elements sharing one field.

    Values are stored as raw ints; `elements` materializes wrapped
    `FieldElement`s on demand.
    """

    field: FieldId
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        order = self.field.order
        for v in self.values:
            if not 0 <= v < order:
                raise ValueError(f"value {v:#x} out of range for {self.field.name}")

    @classmethod
    def from_elements(cls, elements: Sequence[FieldElement]) -> "ElementVector":
        if not elements:
            raise ValueError("cannot infer field of an empty vector; use ElementVector(field, ())")
        field = elements[0].field
        for e in elements:
            if e.field is not field:
                raise FieldMismatchError("mixed fields in vector")
        return cls(field, tuple(e.value for e in elements))

    @property
    def elements(self) -> tuple[FieldElement, ...]:
        return tuple(FieldElement(self.field, v) for v in self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> FieldElement:
        return FieldElement(self.field, self.values[i])

    def __iter__(self) -> Iterator[FieldElement]:
        return iter(self.elements)

    def xor(self, other: "ElementVector") -> "ElementVector":
        """Elementwise addition (== subtraction)."""
        if other.field is not self.field:
            raise FieldMismatchError("vector fields differ")
        if len(other.values) != len(self.values):
            raise ValueError("vector lengths differ")
        return ElementVector(self.field, tuple(a ^ b for a, b in zip(self.values, other.values)))

    def to_bytes(self) -> bytes:
        """Raw little-endian concatenation (no padding; fixed width per element)."""
        size = self.field.byte_size
        return b"".join(v.to_bytes(size, "little") for v in self.values)


def zero(field: FieldId) -> FieldElement:
    return FieldElement(field, 0)


def one(field: FieldId) -> FieldElement:
    return FieldElement(field, 1)


# ---------------------------------------------------------------------------
# GF(2^8): log/exp tables over generator 0x03
# ---------------------------------------------------------------------------

def _build_gf8_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 510
    log = [0] * 256
    v = 1
    for i in range(255):
        exp[i] = v
        log[v] = i
        # multiply v by the generator 0x03 = x + 1
        v = v ^ (v << 1)
        if v & 0x100:
            v ^= 0x11B
    for i in range(255, 510):
        exp[i] = exp[i - 255]
    return exp, log


_GF8_EXP, _GF8_LOG = _build_gf8_tables()


# ---------------------------------------------------------------------------
# GF(2^128): shift-and-reduce core plus byte-window helpers
# ---------------------------------------------------------------------------

def _clmul_small(a: int, b: int) -> int:
    """Carry-less product of two small ints (no reduction)."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
    return acc


# Folding table for one byte that overflows past bit 127:
# x^(128+i) == x^i * (x^7+x^2+x+1) for 0 <= i <= 7.
_FOLD8 = [_clmul_small(h, 0x87) for h in range(256)]

_P128 = _POLY[FieldId.GF128]
_TOP128 = 1 << 128


def _mul128(a: int, b: int) -> int:
    """Shift-and-reduce product; iterates over the shorter operand."""
    if a == 0 or b == 0:
        return 0
    if b.bit_length() > a.bit_length():
        a, b = b, a
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        if b:
            a <<= 1
            if a & _TOP128:
                a ^= _P128
    return acc


def _mul8(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _GF8_EXP[_GF8_LOG[a] + _GF8_LOG[b]]


@functools.lru_cache(maxsize=8192)
def _inv128(a: int) -> int:
    """Inverse via extended Euclid on GF(2) polynomials."""
    if a == 0:
        raise ZeroDivisionError("inverse of zero")
    u, v = a, _P128
    g1, g2 = 1, 0
    while u != 1:
        j = u.bit_length() - v.bit_length()
        if j < 0:
            u, v = v, u
            g1, g2 = g2, g1
            j = -j
        u ^= v << j
        g1 ^= g2 << j
    return g1


def add_int(a: int, b: int) -> int:
    return a ^ b


def mul_int(field: FieldId, a: int, b: int) -> int:
    if field is FieldId.GF8:
        return _mul8(a, b)
    return _mul128(a, b)


def inv_int(field: FieldId, a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("inverse of zero")
    if field is FieldId.GF8:
        return _GF8_EXP[255 - _GF8_LOG[a]]
    return _inv128(a)


class Multiplier:
    """Multiplication by one fixed element, with precomputed tables.

    For GF(2^128) a 256-entry byte window is built once (worth it from
    roughly four products onward); GF(2^8) needs no setup.
    """

    __slots__ = ("field", "scalar", "_log", "_table")

    def __init__(self, field: FieldId, scalar: int) -> None:
        self.field = field
        self.scalar = scalar
        self._log = None
        self._table = None
        if field is FieldId.GF8:
            self._log = _GF8_LOG[scalar] if scalar else None
        elif scalar not in (0, 1):
            table = [0] * 256
            table[1] = scalar
            for b in range(2, 256):
                if b & 1:
                    table[b] = table[b - 1] ^ scalar
                else:
                    t = table[b >> 1] << 1
                    if t & _TOP128:
                        t ^= _P128
                    table[b] = t
            self._table = table

    def mul(self, x: int) -> int:
        s = self.scalar
        if s == 0 or x == 0:
            return 0
        if s == 1:
            return x
        if self.field is FieldId.GF8:
            return _GF8_EXP[_GF8_LOG[x] + self._log]
        table = self._table
        acc = 0
        for byte in x.to_bytes(16, "big"):
            acc = ((acc << 8) & _MASK128) ^ _FOLD8[acc >> 120] ^ table[byte]
        return acc


# ---------------------------------------------------------------------------
# Public element-level operations
# ---------------------------------------------------------------------------

def _require_same(a: FieldElement, b: FieldElement) -> None:
    if a.field is not b.field:
        raise FieldMismatchError(f"{a.field.name} vs {b.field.name}")


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    """Field addition: bitwise XOR.  Self-inverse."""
    _require_same(a, b)
    return FieldElement(a.field, a.value ^ b.value)


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    """Field subtraction; identical to addition in characteristic 2."""
    return add(a, b)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    """Carry-less polynomial product reduced by the field polynomial."""
    _require_same(a, b)
    return FieldElement(a.field, mul_int(a.field, a.value, b.value))


def inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse; raises ZeroDivisionError for zero."""
    return FieldElement(a.field, inv_int(a.field, a.value))


def encode_index(i: int, field: FieldId) -> FieldElement:
    """Canonical injective mapping of a share index into the field.

    Index 0 maps to the zero element, the evaluation point that carries
    the secret.
    """
    if not 0 <= i < field.order:
        raise IndexOverflowError(f"index {i} does not fit in {field.name}")
    return FieldElement(field, i)


def bytes_to_elements(data: bytes, field: FieldId) -> ElementVector:
    """Injective byte-sequence to element-vector mapping.

    The input is padded with a single 0x80 byte and then zero bytes up
    to a whole number of blocks; each block is read little-endian.  The
    padding makes the mapping injective, which the tag security needs.
    """
    size = field.byte_size
    padded = data + b"\x80"
    if len(padded) % size:
        padded += b"\x00" * (size - len(padded) % size)
    values = tuple(
        int.from_bytes(padded[off : off + size], "little") for off in range(0, len(padded), size)
    )
    return ElementVector(field, values)
