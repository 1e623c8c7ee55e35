"""Sender, hub-relay and receiver state machines plus the wire codec.

One protocol iteration establishes one m-element secret between a
sender and a receiver through n semi-trusted hubs:

  * the sender consumes 3+m one-time-pad elements R and a 2-element
    tag key v from each per-hub table, builds n shares anchored on the
    first k R vectors, masks each share (Z = Y - R, zero for the
    anchor hubs), and sends A||B||K||offset||Z||o plus a message tag;
  * each hub checks policy, routing and span availability, burns its
    copy of (R, v), verifies the tag, unmasks its share and re-masks
    it under the receiver-side table before forwarding;
  * the receiver unmasks each accepted share, groups shares by
    (A, B, K, o), reconstructs a candidate secret per k-subset and
    keeps the first candidate whose secret-authenticating tag matches.

Discards are silent on the wire; only the receiver learns whether the
protocol completed.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .errors import (
    InsufficientPsrdError,
    InsufficientSharesError,
    MalformedFrameError,
)
from .field import ElementVector, FieldElement, FieldId, bytes_to_elements, encode_index
from .hashing import MessageTagKey, SecretTagKey, message_tag, secret_tag
from .psrd import Direction, PsrdTable
from .sharing import SharingParams, candidate_secrets, generate_shares

MAGIC = b"DSKE"
VERSION = 1
TYPE_CLIENT_TO_HUB = 0x01
TYPE_HUB_TO_CLIENT = 0x02
TAG_SLOT = 16  # o and t always occupy 16 bytes on the wire

MAX_IDENTITY = 64


def check_identity(identity: bytes) -> bytes:
    if not isinstance(identity, bytes) or not 1 <= len(identity) <= MAX_IDENTITY:
        raise ValueError("identity must be 1..64 bytes")
    return identity


class DiscardReason(enum.Enum):
    """Why a message was silently dropped (logged locally, never NACKed)."""

    ACL_DISALLOWED = "acl-disallowed"
    WRONG_ROUTING = "wrong-routing"
    TABLE_DEPLETED = "table-depleted"
    BAD_TAG = "bad-tag"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class ShareMessage:
    """One hub-leg message: routing identities plus K, offset, Z, o, t.

    `origin` is the initiating client (the A of the tagged body); on
    the client-to-hub leg it equals `sender`, on the hub-to-client leg
    `sender` is the hub.
    """

    sender: bytes
    receiver: bytes
    origin: bytes
    key_id: int
    offset: int
    z: ElementVector
    o: FieldElement
    t: FieldElement

    @property
    def m(self) -> int:
        return len(self.z) - 3

    @property
    def field(self) -> FieldId:
        return self.z.field

    @property
    def group_key(self) -> tuple[bytes, bytes, int, int]:
        """Shares sharing (A, B, K, o) reconstruct together."""
        return (self.origin, self.receiver, self.key_id, self.o.value)


@dataclass(frozen=True)
class SessionKey:
    """An established secret, known to both ends on success."""

    peer_a: bytes
    peer_b: bytes
    key_id: int
    secret: ElementVector

    def key_bytes(self) -> bytes:
        return self.secret.to_bytes()


# ---------------------------------------------------------------------------
# Wire codec
# ---------------------------------------------------------------------------

def _tag_body(msg: ShareMessage) -> bytes:
    """Canonical byte encoding of A||B||K||offset||Z||o (the tagged part)."""
    out = bytearray()
    out += struct.pack(">H", len(msg.origin)) + msg.origin
    out += struct.pack(">H", len(msg.receiver)) + msg.receiver
    out += struct.pack(">QQ", msg.key_id, msg.offset)
    out += msg.z.to_bytes()
    out += msg.o.to_bytes()
    return bytes(out)


def tag_elements(msg: ShareMessage) -> ElementVector:
    """The tagged body mapped into the tag field (0x80-padded blocks)."""
    return bytes_to_elements(_tag_body(msg), msg.field)


def compute_message_tag(key: MessageTagKey, msg: ShareMessage) -> FieldElement:
    return message_tag(key, tag_elements(msg))


def encode_message(msg: ShareMessage) -> bytes:
    """Bit-exact frame; see README for the layout."""
    frame_type = TYPE_CLIENT_TO_HUB if msg.sender == msg.origin else TYPE_HUB_TO_CLIENT
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out.append(frame_type)
    for ident in (msg.sender, msg.receiver, msg.origin):
        check_identity(ident)
        out += struct.pack(">H", len(ident)) + ident
    out += struct.pack(">QQIH", msg.key_id, msg.offset, msg.m, msg.field.bits)
    out += msg.z.to_bytes()
    out += msg.o.value.to_bytes(TAG_SLOT, "little")
    out += msg.t.value.to_bytes(TAG_SLOT, "little")
    return bytes(out)


def decode_message(data: bytes) -> ShareMessage:
    """Parse and validate a frame; raises MalformedFrameError on any defect."""
    try:
        if data[:4] != MAGIC:
            raise MalformedFrameError("bad magic")
        if data[4] != VERSION:
            raise MalformedFrameError(f"unsupported version {data[4]}")
        frame_type = data[5]
        if frame_type not in (TYPE_CLIENT_TO_HUB, TYPE_HUB_TO_CLIENT):
            raise MalformedFrameError(f"unknown frame type {frame_type:#x}")
        pos = 6
        identities = []
        for _ in range(3):
            (ilen,) = struct.unpack_from(">H", data, pos)
            pos += 2
            if not 1 <= ilen <= MAX_IDENTITY or pos + ilen > len(data):
                raise MalformedFrameError("bad identity length")
            identities.append(data[pos : pos + ilen])
            pos += ilen
        sender, receiver, origin = identities
        key_id, offset, m, bits = struct.unpack_from(">QQIH", data, pos)
        pos += 22
        try:
            fid = FieldId(bits)
        except ValueError:
            raise MalformedFrameError(f"unsupported field width {bits}") from None
        if m < 1:
            raise MalformedFrameError("secret length must be at least 1")
        size = fid.byte_size
        zlen = (3 + m) * size
        if len(data) != pos + zlen + 2 * TAG_SLOT:
            raise MalformedFrameError("frame length mismatch")
        zbytes = data[pos : pos + zlen]
        pos += zlen
        z = ElementVector(
            fid, tuple(int.from_bytes(zbytes[i * size : (i + 1) * size], "little") for i in range(3 + m))
        )
        o_val = int.from_bytes(data[pos : pos + TAG_SLOT], "little")
        t_val = int.from_bytes(data[pos + TAG_SLOT : pos + 2 * TAG_SLOT], "little")
        if o_val >= fid.order or t_val >= fid.order:
            raise MalformedFrameError("tag value out of field range")
    except (IndexError, struct.error) as exc:
        raise MalformedFrameError(f"truncated frame: {exc}") from None
    msg = ShareMessage(sender, receiver, origin, key_id, offset,
                       z, FieldElement(fid, o_val), FieldElement(fid, t_val))
    expected_type = TYPE_CLIENT_TO_HUB if sender == origin else TYPE_HUB_TO_CLIENT
    if frame_type != expected_type:
        raise MalformedFrameError("frame type inconsistent with identities")
    return msg


def frame_span(header: bytes) -> int:
    """Total frame size once the fixed part through field-bits is known.

    `header` must contain at least the bytes up to and including the
    field-bits word; used by stream readers to size their reads.
    """
    pos = 6
    for _ in range(3):
        (ilen,) = struct.unpack_from(">H", header, pos)
        pos += 2 + ilen
    _, _, m, bits = struct.unpack_from(">QQIH", header, pos)
    fid = FieldId(bits)
    return pos + 22 + (3 + m) * fid.byte_size + 2 * TAG_SLOT


# ---------------------------------------------------------------------------
# Sender
# ---------------------------------------------------------------------------

def span_per_iteration(m: int) -> int:
    """Table elements consumed per protocol iteration: R (3+m) plus v (2)."""
    return 5 + m


def alice_initiate(
    params: SharingParams,
    sender: bytes,
    receiver: bytes,
    tables: Sequence[PsrdTable],
    key_id: int,
) -> tuple[list[ShareMessage], SessionKey]:
    """Run share generation and produce one tagged message per hub.

    Consumes R (3+m elements) then v (2 elements) from each table, in
    hub order, only after checking that *every* table has the full
    span available (all-or-nothing).  Returns the messages in hub
    order together with the pending session key the caller retains.
    """
    check_identity(sender)
    check_identity(receiver)
    if not 0 <= key_id < 1 << 64:
        raise ValueError("key id must fit in 8 bytes")
    if len(tables) != params.n:
        raise ValueError(f"need {params.n} tables, got {len(tables)}")
    span = span_per_iteration(params.m)
    for i, table in enumerate(tables):
        if table.field is not params.field:
            raise ValueError(f"table {i} field {table.field.name} != {params.field.name}")
        if table.direction is not Direction.CLIENT_TO_HUB:
            raise ValueError(f"table {i} has wrong direction {table.direction.name}")
        if not table.available_at_next(span):
            raise InsufficientPsrdError(
                f"table for hub {table.hub_id!r} lacks {span} elements at {table.next_offset}"
            )

    offsets: list[int] = []
    randoms: list[ElementVector] = []
    tag_keys: list[MessageTagKey] = []
    for table in tables:
        offset, r = table.take_next(3 + params.m)
        _, v = table.take_next(2)
        offsets.append(offset)
        randoms.append(r)
        tag_keys.append(MessageTagKey(v[0], v[1]))

    y0, bundles = generate_shares(randoms[: params.k], params)
    tag_key_triple = SecretTagKey(y0[0], y0[1], y0[2])
    secret = ElementVector(params.field, y0.values[3:])
    o = secret_tag(tag_key_triple, secret)

    messages = []
    for i in range(params.n):
        z = bundles[i].payload.xor(randoms[i])
        msg = ShareMessage(sender, receiver, sender, key_id, offsets[i], z, o,
                           FieldElement(params.field, 0))
        t = compute_message_tag(tag_keys[i], msg)
        messages.append(ShareMessage(sender, receiver, sender, key_id, offsets[i], z, o, t))
    return messages, SessionKey(sender, receiver, key_id, secret)


# ---------------------------------------------------------------------------
# Hub
# ---------------------------------------------------------------------------

@dataclass
class HubState:
    """A hub's identity, policy and table set.

    `tables` is keyed by (client identity, direction): CLIENT_TO_HUB
    tables decrypt inbound shares, HUB_TO_CLIENT tables re-encrypt for
    delivery.  `acl` lists allowed (origin, receiver) pairs; None
    allows every pair.
    """

    identity: bytes
    tables: dict[tuple[bytes, Direction], PsrdTable]
    acl: Optional[frozenset[tuple[bytes, bytes]]] = None

    def table_for(self, client: bytes, direction: Direction) -> Optional[PsrdTable]:
        return self.tables.get((client, direction))


def hub_relay(
    hub: HubState, msg: ShareMessage, transport_peer: bytes
) -> ShareMessage | DiscardReason:
    """Check, unmask, re-mask and re-tag one inbound client message.

    The check ladder runs in order: policy, routing, span
    availability on both tables (availability discards never consume),
    then tag verification (a failed tag *has* consumed the sender-side
    span: the key is single-use either way).
    """
    if msg.sender != msg.origin or msg.receiver == msg.origin:
        return DiscardReason.MALFORMED
    if hub.acl is not None and (msg.origin, msg.receiver) not in hub.acl:
        return DiscardReason.ACL_DISALLOWED
    if transport_peer != msg.sender:
        return DiscardReason.WRONG_ROUTING

    span = span_per_iteration(msg.m)
    table_in = hub.table_for(msg.origin, Direction.CLIENT_TO_HUB)
    table_out = hub.table_for(msg.receiver, Direction.HUB_TO_CLIENT)
    if table_in is None or table_out is None:
        return DiscardReason.TABLE_DEPLETED
    if table_in.field is not msg.field or table_out.field is not msg.field:
        return DiscardReason.MALFORMED
    if not table_in.peek_available(msg.offset, span):
        return DiscardReason.TABLE_DEPLETED
    if not table_out.available_at_next(span):
        return DiscardReason.TABLE_DEPLETED

    r = table_in.consume_span(msg.offset, 3 + msg.m)
    v = table_in.consume_span(msg.offset + 3 + msg.m, 2)
    if compute_message_tag(MessageTagKey(v[0], v[1]), msg).value != msg.t.value:
        return DiscardReason.BAD_TAG

    share = msg.z.xor(r)

    out_offset, r_out = table_out.take_next(3 + msg.m)
    _, v_out = table_out.take_next(2)
    z_out = share.xor(r_out)
    forward = ShareMessage(hub.identity, msg.receiver, msg.origin, msg.key_id,
                           out_offset, z_out, msg.o, FieldElement(msg.field, 0))
    t_out = compute_message_tag(MessageTagKey(v_out[0], v_out[1]), forward)
    return ShareMessage(hub.identity, msg.receiver, msg.origin, msg.key_id,
                        out_offset, z_out, msg.o, t_out)


# ---------------------------------------------------------------------------
# Receiver
# ---------------------------------------------------------------------------

GroupKey = tuple[bytes, bytes, int, int]


@dataclass
class ReceiverState:
    """Accumulated shares and policy for one receiving client.

    `hub_indices` maps each hub identity to its 1-based share index
    (the x coordinate); `tables` holds the HUB_TO_CLIENT table per hub
    identity.  `allowed_origins` of None accepts any origin.
    """

    identity: bytes
    hub_indices: dict[bytes, int]
    tables: dict[bytes, PsrdTable]
    allowed_origins: Optional[frozenset[bytes]] = None
    groups: dict[GroupKey, dict[int, ElementVector]] = dc_field(default_factory=dict)

    def group_sizes(self) -> dict[GroupKey, int]:
        return {k: len(v) for k, v in self.groups.items()}


def bob_ingest(
    state: ReceiverState, msg: ShareMessage, transport_peer: bytes
) -> Optional[DiscardReason]:
    """Validate and unmask one hub message; returns the discard reason
    or None when the share was accepted into its group."""
    if msg.sender == msg.origin:
        return DiscardReason.MALFORMED
    hub_index = state.hub_indices.get(transport_peer)
    if (
        hub_index is None
        or msg.receiver != state.identity
        or (state.allowed_origins is not None and msg.origin not in state.allowed_origins)
    ):
        return DiscardReason.ACL_DISALLOWED
    if transport_peer != msg.sender:
        return DiscardReason.WRONG_ROUTING

    table = state.tables.get(transport_peer)
    if table is None:
        return DiscardReason.TABLE_DEPLETED
    if table.field is not msg.field:
        return DiscardReason.MALFORMED
    span = span_per_iteration(msg.m)
    if not table.peek_available(msg.offset, span):
        return DiscardReason.TABLE_DEPLETED

    r = table.consume_span(msg.offset, 3 + msg.m)
    v = table.consume_span(msg.offset + 3 + msg.m, 2)
    if compute_message_tag(MessageTagKey(v[0], v[1]), msg).value != msg.t.value:
        return DiscardReason.BAD_TAG

    share = msg.z.xor(r)
    group = state.groups.setdefault(msg.group_key, {})
    # first share per hub wins; replays never get here (span already burnt)
    group.setdefault(hub_index, share)
    return None


def bob_finalize(state: ReceiverState, group_key: GroupKey, k: int) -> Optional[SessionKey]:
    """Reconstruct candidates for one group and validate them.

    Returns the session key from the first candidate (lexicographic
    subset order) whose secret-authenticating tag matches, or None
    when every candidate fails: the abort outcome.
    """
    group = state.groups.get(group_key)
    if group is None:
        raise ValueError("no such group")
    if len(group) < k:
        raise InsufficientSharesError(f"group holds {len(group)} shares, need {k}")
    origin, receiver, key_id, o_value = group_key
    field = next(iter(group.values())).field
    claimed = FieldElement(field, o_value)
    for cand in candidate_secrets(group, k, claimed):
        if secret_tag(cand.key, cand.secret).value == o_value:
            return SessionKey(origin, receiver, key_id, cand.secret)
    return None
