"""Pre-shared random data tables with consume-and-erase semantics.

A table is a finite sequence of uniform field elements shared between
one client and one hub, in one direction of use.  Every element may be
returned exactly once; consumption flips a set-once flag and zeroizes
the stored value, so a serialized table never resurrects used key
material.  Receivers consume at offsets named in messages, senders
consume sequentially at `next_offset`.

Availability checks (`peek_available`) never mutate: protocol rules
require discarding a message whose span is already used *without*
burning anything else.
"""

from __future__ import annotations

import enum
import secrets
import struct
from dataclasses import dataclass, field as dc_field
from random import Random
from typing import Optional

from .errors import FormatError, ReuseAttemptError
from .field import ElementVector, FieldId

_MAGIC = b"DSKT"
_VERSION = 1


class Direction(enum.IntEnum):
    CLIENT_TO_HUB = 1
    HUB_TO_CLIENT = 2


@dataclass
class EntropySource:
    """Byte source for table generation.

    `seeded(seed)` is deterministic (same seed, same bytes) for
    reproducible deployments and tests; `system()` draws from the OS.
    """

    kind: str
    _rng: Optional[Random] = dc_field(default=None, repr=False)

    @classmethod
    def seeded(cls, seed: int) -> "EntropySource":
        return cls(kind="seeded-deterministic", _rng=Random(seed))

    @classmethod
    def system(cls) -> "EntropySource":
        return cls(kind="system-random")

    def draw_bytes(self, n: int) -> bytes:
        if self._rng is not None:
            return self._rng.randbytes(n)
        return secrets.token_bytes(n)


@dataclass
class PsrdTable:
    """One consumable table between a client and a hub.

    Single-writer resource: callers serialize consumption externally
    (the services guard each table with a lock).
    """

    client_id: bytes
    hub_id: bytes
    direction: Direction
    field: FieldId
    _values: list[int]
    _consumed: bytearray
    next_offset: int = 0

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._values)

    @property
    def consumed_flags(self) -> tuple[bool, ...]:
        return tuple(bool(b) for b in self._consumed)

    def peek_available(self, offset: int, length: int) -> bool:
        """True iff consume_span(offset, length) would succeed.  Never mutates."""
        if offset < 0 or length < 0 or offset + length > len(self._values):
            return False
        return not any(self._consumed[offset : offset + length])

    def available_at_next(self, length: int) -> bool:
        return self.peek_available(self.next_offset, length)

    # -- consumption -----------------------------------------------------

    def consume_span(self, offset: int, length: int) -> ElementVector:
        """Return a span once, mark it used, zeroize the stored values."""
        if not self.peek_available(offset, length):
            raise ReuseAttemptError(
                f"span [{offset}, {offset + length}) unavailable in table "
                f"{self.client_id!r}/{self.hub_id!r}/{self.direction.name}"
            )
        span = tuple(self._values[offset : offset + length])
        for i in range(offset, offset + length):
            self._consumed[i] = 1
            self._values[i] = 0
        return ElementVector(self.field, span)

    def take_next(self, length: int) -> tuple[int, ElementVector]:
        """Consume sequentially at next_offset; returns (offset, span)."""
        offset = self.next_offset
        span = self.consume_span(offset, length)
        self.next_offset = offset + length
        return offset, span

    # -- persistence -----------------------------------------------------

    def save(self) -> bytes:
        count = len(self._values)
        out = bytearray()
        out += _MAGIC
        out.append(_VERSION)
        out += struct.pack(">H", self.field.bits)
        out.append(self.direction.value)
        out += struct.pack(">H", len(self.client_id)) + self.client_id
        out += struct.pack(">H", len(self.hub_id)) + self.hub_id
        out += struct.pack(">QQ", count, self.next_offset)
        bitmap = bytearray((count + 7) // 8)
        for i, flag in enumerate(self._consumed):
            if flag:
                bitmap[i >> 3] |= 1 << (i & 7)
        out += bitmap
        size = self.field.byte_size
        for v in self._values:
            out += v.to_bytes(size, "little")
        return bytes(out)

    @classmethod
    def load(cls, data: bytes) -> "PsrdTable":
        try:
            if data[:4] != _MAGIC:
                raise FormatError("bad magic")
            if data[4] != _VERSION:
                raise FormatError(f"unsupported version {data[4]}")
            (bits,) = struct.unpack_from(">H", data, 5)
            try:
                fid = FieldId(bits)
            except ValueError:
                raise FormatError(f"unsupported field width {bits}") from None
            direction = Direction(data[7])
            pos = 8
            (clen,) = struct.unpack_from(">H", data, pos)
            pos += 2
            client_id = data[pos : pos + clen]
            pos += clen
            (hlen,) = struct.unpack_from(">H", data, pos)
            pos += 2
            hub_id = data[pos : pos + hlen]
            pos += hlen
            count, next_offset = struct.unpack_from(">QQ", data, pos)
            pos += 16
            bitmap_len = (count + 7) // 8
            bitmap = data[pos : pos + bitmap_len]
            pos += bitmap_len
            size = fid.byte_size
            body = data[pos : pos + count * size]
            if len(bitmap) != bitmap_len or len(body) != count * size:
                raise FormatError("truncated table")
            if len(data) != pos + count * size:
                raise FormatError("trailing bytes after table")
        except (IndexError, struct.error) as exc:
            raise FormatError(f"truncated table: {exc}") from None
        values = [
            int.from_bytes(body[i * size : (i + 1) * size], "little") for i in range(count)
        ]
        consumed = bytearray(
            1 if bitmap[i >> 3] & (1 << (i & 7)) else 0 for i in range(count)
        )
        for i, flag in enumerate(consumed):
            if flag and values[i] != 0:
                raise FormatError(f"consumed element {i} not zeroized")
        return cls(client_id, hub_id, direction, fid, values, consumed, next_offset)

    def clone(self) -> "PsrdTable":
        """Independent copy with identical bytes (the matched peer copy)."""
        return PsrdTable(
            self.client_id,
            self.hub_id,
            self.direction,
            self.field,
            list(self._values),
            bytearray(self._consumed),
            self.next_offset,
        )


def generate_table(
    length: int,
    field: FieldId,
    source: EntropySource,
    client_id: bytes,
    hub_id: bytes,
    direction: Direction,
) -> PsrdTable:
    """Draw a fresh table of `length` elements from the entropy source."""
    if length < 1:
        raise ValueError("table must hold at least one element")
    raw = source.draw_bytes(length * field.byte_size)
    size = field.byte_size
    values = [int.from_bytes(raw[i * size : (i + 1) * size], "little") for i in range(length)]
    return PsrdTable(client_id, hub_id, direction, field, values, bytearray(length))
