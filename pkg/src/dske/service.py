"""Deployable pieces: TCP hub daemon and client key agent.

A hub accepts connections, learns each peer's identity from a small
registration preamble (invented plumbing: the protocol itself assumes
link-level sender identity), relays frames per the protocol rules, and
forwards to the receiver's live connection or a bounded per-receiver
queue.  A client agent holds its own table copies, sends share
messages for key requests, ingests forwarded shares, finalizes groups,
and exposes established keys over a local JSON-lines API with verbs
`get_key` (request a fresh key against a peer) and `get_key_by_id`
(retrieve the receiver side of an established key).

Tables are persisted consume-before-send: the consumed flags hit the
table file before any frame that depends on them leaves the process,
so a crash can waste elements but can never reuse them.  Writes go
through the OS page cache (process-crash safe; power-loss hardening is
out of scope).
"""

from __future__ import annotations

import json
import logging
import math
import os
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    DskeError,
    FormatError,
    InsufficientPsrdError,
    KeyDeliveryError,
    MalformedFrameError,
    PeerUnreachableError,
)
from .field import ElementVector, FieldId
from .protocol import (
    MAX_IDENTITY,
    DiscardReason,
    HubState,
    ReceiverState,
    SessionKey,
    ShareMessage,
    alice_initiate,
    bob_finalize,
    bob_ingest,
    decode_message,
    encode_message,
    frame_span,
    hub_relay,
    span_per_iteration,
)
from .psrd import Direction, PsrdTable
from .sharing import SharingParams

logger = logging.getLogger(__name__)

HELLO_MAGIC = b"DSKH"
HELLO_ACK = b"DSKA"

_DIRECTION_NAMES = {
    Direction.CLIENT_TO_HUB: "to-hub",
    Direction.HUB_TO_CLIENT: "from-hub",
}


def table_filename(client_id: bytes, hub_id: bytes, direction: Direction) -> str:
    return f"{client_id.decode()}__{hub_id.decode()}__{_DIRECTION_NAMES[direction]}.dskt"


# ---------------------------------------------------------------------------
# Persistent tables
# ---------------------------------------------------------------------------

class StoredTable(PsrdTable):
    """A table bound to its file; every consume persists before returning.

    Only the touched byte ranges are rewritten: the consumed-flag
    bitmap bytes, the zeroized element bytes, and the next_offset
    field.  Flag bytes are written first so a crash mid-persist can
    only lose erasure, never resurrect a span.
    """

    def bind(self, path: Path) -> "StoredTable":
        self._path = path
        base = 8 + 2 + len(self.client_id) + 2 + len(self.hub_id)
        self._next_off_pos = base + 8
        self._bitmap_base = base + 16
        self._values_base = self._bitmap_base + (len(self._values) + 7) // 8
        self._fh = open(path, "r+b")
        return self

    @classmethod
    def open(cls, path: Path) -> "StoredTable":
        loaded = PsrdTable.load(path.read_bytes())
        table = cls(**loaded.__dict__)
        return table.bind(path)

    @classmethod
    def create(cls, path: Path, table: PsrdTable) -> "StoredTable":
        path.write_bytes(table.save())
        return cls.open(path)

    def close(self) -> None:
        self._fh.close()

    def consume_span(self, offset: int, length: int) -> ElementVector:
        span = super().consume_span(offset, length)
        first_byte = offset >> 3
        last_byte = (offset + length - 1) >> 3
        bitmap = bytearray(last_byte - first_byte + 1)
        for i in range(first_byte << 3, min((last_byte + 1) << 3, len(self._consumed))):
            if self._consumed[i]:
                bitmap[(i >> 3) - first_byte] |= 1 << (i & 7)
        self._fh.seek(self._bitmap_base + first_byte)
        self._fh.write(bytes(bitmap))
        size = self.field.byte_size
        self._fh.seek(self._values_base + offset * size)
        self._fh.write(b"\x00" * (length * size))
        self._fh.flush()
        return span

    def take_next(self, length: int) -> tuple[int, ElementVector]:
        result = super().take_next(length)
        self._fh.seek(self._next_off_pos)
        self._fh.write(struct.pack(">Q", self.next_offset))
        self._fh.flush()
        return result


class TableStore:
    """All tables under one directory, with a lock per table."""

    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)
        self.tables: dict[tuple[bytes, bytes, Direction], StoredTable] = {}
        self.locks: dict[tuple[bytes, bytes, Direction], threading.Lock] = {}
        for path in sorted(self.directory.glob("*.dskt")):
            table = StoredTable.open(path)
            key = (table.client_id, table.hub_id, table.direction)
            if key in self.tables:
                raise FormatError(f"duplicate table for {key} at {path}")
            self.tables[key] = table
            self.locks[key] = threading.Lock()

    def get(self, client: bytes, hub: bytes, direction: Direction) -> Optional[StoredTable]:
        return self.tables.get((client, hub, direction))

    def lock_for(self, table: PsrdTable) -> threading.Lock:
        return self.locks[(table.client_id, table.hub_id, table.direction)]

    def close(self) -> None:
        for table in self.tables.values():
            table.close()


# ---------------------------------------------------------------------------
# Socket plumbing
# ---------------------------------------------------------------------------

def _close_socket(sock: socket.socket) -> None:
    """Shutdown then close: wakes any thread blocked in recv()."""
    try:
        sock.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    try:
        sock.close()
    except OSError:
        pass


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> bytes:
    """Read one self-delimiting protocol frame from a stream."""
    head = _recv_exact(sock, 6)
    if head[:4] != b"DSKE":
        raise MalformedFrameError("bad frame magic on stream")
    body = bytearray(head)
    for _ in range(3):
        lenword = _recv_exact(sock, 2)
        body += lenword
        (ilen,) = struct.unpack(">H", lenword)
        if ilen > MAX_IDENTITY:
            raise MalformedFrameError("identity too long on stream")
        body += _recv_exact(sock, ilen)
    body += _recv_exact(sock, 22)
    try:
        total = frame_span(bytes(body))
    except (ValueError, struct.error) as exc:
        raise MalformedFrameError(f"bad frame header: {exc}") from None
    body += _recv_exact(sock, total - len(body))
    return bytes(body)


def send_hello(sock: socket.socket, identity: bytes) -> None:
    sock.sendall(HELLO_MAGIC + bytes([1]) + struct.pack(">H", len(identity)) + identity)
    ack = _recv_exact(sock, 5)
    if ack[:4] != HELLO_ACK or ack[4] != 1:
        raise ConnectionError("registration rejected")


def read_hello(sock: socket.socket) -> bytes:
    head = _recv_exact(sock, 7)
    if head[:4] != HELLO_MAGIC or head[4] != 1:
        raise MalformedFrameError("bad hello")
    (ilen,) = struct.unpack(">H", head[5:7])
    if not 1 <= ilen <= MAX_IDENTITY:
        raise MalformedFrameError("bad hello identity length")
    identity = _recv_exact(sock, ilen)
    sock.sendall(HELLO_ACK + bytes([1]))
    return identity


# ---------------------------------------------------------------------------
# Configuration (key = value lines; see README)
# ---------------------------------------------------------------------------

def parse_kv(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        out.setdefault(key.strip(), []).append(value.strip())
    return out


def _single(values: dict[str, list[str]], key: str, default: Optional[str] = None) -> str:
    if key not in values:
        if default is None:
            raise ValueError(f"config is missing `{key}`")
        return default
    if len(values[key]) != 1:
        raise ValueError(f"config key `{key}` given more than once")
    return values[key][0]


def _addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


@dataclass
class HubConfig:
    identity: bytes
    listen: tuple[str, int]
    table_dir: Path
    acl: Optional[frozenset[tuple[bytes, bytes]]] = None
    queue_depth: int = 256

    @classmethod
    def from_file(cls, path: Path) -> "HubConfig":
        path = Path(path)
        values = parse_kv(path.read_text())
        acl = None
        if "acl" in values:
            pairs = set()
            for entry in values["acl"]:
                parts = entry.split()
                if len(parts) != 2:
                    raise ValueError(f"acl entry {entry!r} must be `client peer`")
                pairs.add((parts[0].encode(), parts[1].encode()))
            acl = frozenset(pairs)
        return cls(
            identity=_single(values, "identity").encode(),
            listen=_addr(_single(values, "listen", "127.0.0.1:0")),
            table_dir=(path.parent / _single(values, "table_dir")).resolve(),
            acl=acl,
            queue_depth=int(_single(values, "queue_depth", "256")),
        )


@dataclass
class ClientConfig:
    identity: bytes
    listen: tuple[str, int]
    table_dir: Path
    hubs: list[tuple[bytes, str, int]]  # (hub identity, host, port) in share-index order
    k: int
    m: int
    field: FieldId
    finalize_deadline: float = 0.5
    peers: Optional[frozenset[bytes]] = None

    @property
    def n(self) -> int:
        return len(self.hubs)

    @classmethod
    def from_file(cls, path: Path) -> "ClientConfig":
        path = Path(path)
        values = parse_kv(path.read_text())
        hubs = []
        for entry in values.get("hub", []):
            parts = entry.split()
            if len(parts) != 2:
                raise ValueError(f"hub entry {entry!r} must be `identity host:port`")
            host, port = _addr(parts[1])
            hubs.append((parts[0].encode(), host, port))
        if not hubs:
            raise ValueError("client config needs at least one hub")
        peers = None
        if "peer" in values:
            peers = frozenset(p.encode() for p in values["peer"])
        cfg = cls(
            identity=_single(values, "identity").encode(),
            listen=_addr(_single(values, "listen", "127.0.0.1:0")),
            table_dir=(path.parent / _single(values, "table_dir")).resolve(),
            hubs=hubs,
            k=int(_single(values, "k")),
            m=int(_single(values, "m")),
            field=FieldId(int(_single(values, "field_bits", "128"))),
            finalize_deadline=float(_single(values, "finalize_deadline", "0.5")),
            peers=peers,
        )
        SharingParams(n=cfg.n, k=cfg.k, m=cfg.m, field=cfg.field)  # validate
        return cfg


# ---------------------------------------------------------------------------
# Hub daemon
# ---------------------------------------------------------------------------

class HubServer:
    """Relay daemon: one listening socket, one handler thread per peer."""

    def __init__(self, config: HubConfig) -> None:
        self.config = config
        self.store = TableStore(config.table_dir)
        self.hub_state = HubState(
            identity=config.identity,
            tables={
                (client, direction): table
                for (client, hub, direction), table in self.store.tables.items()
                if hub == config.identity
            },
            acl=config.acl,
        )
        self.discard_counts: dict[str, int] = {}
        self._conns: dict[bytes, socket.socket] = {}
        self._send_locks: dict[bytes, threading.Lock] = {}
        self._queues: dict[bytes, deque[bytes]] = {}
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._listener: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []

    @property
    def port(self) -> int:
        return self._listener.getsockname()[1]

    def start(self) -> None:
        self._listener = socket.create_server(self.config.listen)
        self._listener.settimeout(0.2)
        thread = threading.Thread(target=self._accept_loop, daemon=True,
                                  name=f"hub-{self.config.identity.decode()}-accept")
        thread.start()
        self._threads.append(thread)
        logger.info("hub %s listening on %s", self.config.identity, self.port)

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            self._listener.close()
        with self._lock:
            conns = list(self._conns.values())
        for sock in conns:
            _close_socket(sock)
        for thread in self._threads:
            thread.join(timeout=1.0)
        self.store.close()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(target=self._serve_conn, args=(conn,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_conn(self, conn: socket.socket) -> None:
        peer = None
        try:
            peer = read_hello(conn)
            with self._lock:
                self._conns[peer] = conn
                self._send_locks.setdefault(peer, threading.Lock())
            self._flush_queue(peer)
            while not self._stop.is_set():
                frame = read_frame(conn)
                self._process_frame(frame, peer)
        except (ConnectionError, MalformedFrameError, OSError) as exc:
            logger.debug("hub %s: connection %r ends: %s", self.config.identity, peer, exc)
        finally:
            if peer is not None:
                with self._lock:
                    if self._conns.get(peer) is conn:
                        del self._conns[peer]
            _close_socket(conn)

    def _record_discard(self, reason: DiscardReason) -> None:
        with self._lock:
            self.discard_counts[reason.value] = self.discard_counts.get(reason.value, 0) + 1
        logger.info("hub %s discarded a frame: %s", self.config.identity, reason.value)

    def _process_frame(self, frame: bytes, peer: bytes) -> None:
        try:
            msg = decode_message(frame)
        except MalformedFrameError:
            self._record_discard(DiscardReason.MALFORMED)
            return
        lock_keys = sorted(
            [
                (msg.origin, self.config.identity, Direction.CLIENT_TO_HUB),
                (msg.receiver, self.config.identity, Direction.HUB_TO_CLIENT),
            ]
        )
        locks = [self.store.locks[k] for k in lock_keys if k in self.store.locks]
        for lock in locks:
            lock.acquire()
        try:
            result = hub_relay(self.hub_state, msg, peer)
        finally:
            for lock in reversed(locks):
                lock.release()
        if isinstance(result, DiscardReason):
            self._record_discard(result)
            return
        self._deliver(result.receiver, encode_message(result))

    def _deliver(self, receiver: bytes, frame: bytes) -> None:
        with self._lock:
            conn = self._conns.get(receiver)
            send_lock = self._send_locks.setdefault(receiver, threading.Lock())
        if conn is not None:
            try:
                with send_lock:
                    conn.sendall(frame)
                return
            except OSError:
                pass
        with self._lock:
            queue = self._queues.setdefault(
                receiver, deque(maxlen=self.config.queue_depth)
            )
            if len(queue) == queue.maxlen:
                logger.warning("hub %s: queue full for %r, dropping oldest",
                               self.config.identity, receiver)
            queue.append(frame)

    def _flush_queue(self, receiver: bytes) -> None:
        with self._lock:
            queue = self._queues.get(receiver)
            frames = list(queue) if queue else []
            if queue:
                queue.clear()
            conn = self._conns.get(receiver)
            send_lock = self._send_locks.setdefault(receiver, threading.Lock())
        if conn is None:
            return
        for frame in frames:
            try:
                with send_lock:
                    conn.sendall(frame)
            except OSError:
                return


# ---------------------------------------------------------------------------
# Client agent
# ---------------------------------------------------------------------------

@dataclass
class _PendingGroup:
    first_threshold_time: Optional[float] = None
    done: bool = False


class ClientAgent:
    """Key agent: sends sessions, collects shares, serves the local API."""

    def __init__(self, config: ClientConfig) -> None:
        self.config = config
        self.store = TableStore(config.table_dir)
        self.params = SharingParams(n=config.n, k=config.k, m=config.m, field=config.field)
        self.receiver = ReceiverState(
            identity=config.identity,
            hub_indices={hub_id: i + 1 for i, (hub_id, _, _) in enumerate(config.hubs)},
            tables={
                hub_id: self.store.get(config.identity, hub_id, Direction.HUB_TO_CLIENT)
                for hub_id, _, _ in config.hubs
            },
            allowed_origins=config.peers,
        )
        self.receiver.tables = {h: t for h, t in self.receiver.tables.items() if t is not None}
        self.discard_counts: dict[str, int] = {}
        self.frame_tap: Optional[list[bytes]] = None  # test hook: records wire bytes
        self._conns: dict[bytes, socket.socket] = {}
        self._conn_lock = threading.Lock()
        self._send_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._cv = threading.Condition(self._state_lock)
        self._finalized: dict[int, SessionKey] = {}
        self._aborted: set[int] = set()
        self._pending: dict[tuple, _PendingGroup] = {}
        self._delivered: set[int] = set()
        self._keyid_path = self.store.directory / f"{config.identity.decode()}.keyid"
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._api_server: Optional[socket.socket] = None

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        for hub_id, _, _ in self.config.hubs:
            try:
                self._connect(hub_id)
            except OSError:
                logger.info("agent %s: hub %r not reachable at start",
                            self.config.identity, hub_id)
        ticker = threading.Thread(target=self._deadline_loop, daemon=True,
                                  name=f"agent-{self.config.identity.decode()}-ticker")
        ticker.start()
        self._threads.append(ticker)
        self._api_server = socket.create_server(self.config.listen)
        self._api_server.settimeout(0.2)
        api = threading.Thread(target=self._api_loop, daemon=True,
                               name=f"agent-{self.config.identity.decode()}-api")
        api.start()
        self._threads.append(api)

    @property
    def api_port(self) -> int:
        return self._api_server.getsockname()[1]

    def stop(self) -> None:
        self._stop.set()
        if self._api_server is not None:
            self._api_server.close()
        with self._conn_lock:
            conns = list(self._conns.values())
            self._conns.clear()
        for sock in conns:
            _close_socket(sock)
        for thread in self._threads:
            thread.join(timeout=1.0)
        self.store.close()

    # -- hub connections --------------------------------------------------

    def _endpoint(self, hub_id: bytes) -> tuple[str, int]:
        for ident, host, port in self.config.hubs:
            if ident == hub_id:
                return host, port
        raise KeyError(hub_id)

    def _connect(self, hub_id: bytes) -> socket.socket:
        with self._conn_lock:
            sock = self._conns.get(hub_id)
        if sock is not None:
            return sock
        host, port = self._endpoint(hub_id)
        sock = socket.create_connection((host, port), timeout=2.0)
        sock.settimeout(None)
        send_hello(sock, self.config.identity)
        with self._conn_lock:
            self._conns[hub_id] = sock
        reader = threading.Thread(target=self._reader_loop, args=(hub_id, sock), daemon=True)
        reader.start()
        self._threads.append(reader)
        return sock

    def _drop_conn(self, hub_id: bytes, sock: socket.socket) -> None:
        with self._conn_lock:
            if self._conns.get(hub_id) is sock:
                del self._conns[hub_id]
        _close_socket(sock)

    def _reader_loop(self, hub_id: bytes, sock: socket.socket) -> None:
        try:
            while not self._stop.is_set():
                frame = read_frame(sock)
                if self.frame_tap is not None:
                    self.frame_tap.append(frame)
                self._ingest_frame(frame, hub_id)
        except (ConnectionError, MalformedFrameError, OSError):
            pass
        finally:
            self._drop_conn(hub_id, sock)

    # -- receive path ------------------------------------------------------

    def _record_discard(self, reason: DiscardReason) -> None:
        with self._state_lock:
            self.discard_counts[reason.value] = self.discard_counts.get(reason.value, 0) + 1
        logger.info("agent %s discarded a frame: %s", self.config.identity, reason.value)

    def _ingest_frame(self, frame: bytes, hub_id: bytes) -> None:
        try:
            msg = decode_message(frame)
        except MalformedFrameError:
            self._record_discard(DiscardReason.MALFORMED)
            return
        table = self.receiver.tables.get(hub_id)
        table_lock = self.store.lock_for(table) if table is not None else threading.Lock()
        with table_lock:
            reason = bob_ingest(self.receiver, msg, hub_id)
        if reason is not None:
            self._record_discard(reason)
            return
        with self._cv:
            group = self.receiver.groups.get(msg.group_key)
            pending = self._pending.setdefault(msg.group_key, _PendingGroup())
            if pending.done or group is None:
                return
            if len(group) >= self.params.n:
                self._finalize_locked(msg.group_key)
            elif len(group) >= self.params.k and pending.first_threshold_time is None:
                pending.first_threshold_time = time.monotonic()

    def _finalize_locked(self, group_key) -> None:
        pending = self._pending.setdefault(group_key, _PendingGroup())
        if pending.done:
            return
        pending.done = True
        result = bob_finalize(self.receiver, group_key, self.params.k)
        key_id = group_key[2]
        if result is None:
            self._aborted.add(key_id)
            logger.info("agent %s: group for key id %d aborted", self.config.identity, key_id)
        else:
            self._finalized[key_id] = result
        del self.receiver.groups[group_key]
        self._cv.notify_all()

    def _deadline_loop(self) -> None:
        while not self._stop.is_set():
            time.sleep(0.05)
            now = time.monotonic()
            with self._cv:
                for group_key, pending in list(self._pending.items()):
                    if pending.done or pending.first_threshold_time is None:
                        continue
                    if now - pending.first_threshold_time >= self.config.finalize_deadline:
                        self._finalize_locked(group_key)

    # -- send path ---------------------------------------------------------

    def _next_key_id(self) -> int:
        # bump-then-use: the new counter value is on disk before any frame
        if self._keyid_path.exists():
            current = int.from_bytes(self._keyid_path.read_bytes(), "big")
        else:
            current = 0
        value = current + 1
        self._keyid_path.write_bytes(value.to_bytes(8, "big"))
        return value

    def sessions_for_bits(self, bits: int) -> int:
        per_session = self.params.m * self.params.field.bits
        return max(1, math.ceil(bits / per_session))

    def request_key(self, peer: bytes, bits: int, timeout: float = 5.0) -> tuple[int, bytes]:
        """Establish `bits` of key with `peer`; returns (first key id, bytes).

        Runs ceil(bits / (m * field_bits)) sessions with consecutive key
        ids.  Raises PeerUnreachableError when fewer than k hubs accept
        a session's frames (spent table elements are not recovered).
        """
        if bits < 1:
            raise ValueError("bits must be positive")
        sessions = self.sessions_for_bits(bits)
        first_key_id = None
        collected = b""
        with self._send_lock:
            tables = []
            for hub_id, _, _ in self.config.hubs:
                table = self.store.get(self.config.identity, hub_id, Direction.CLIENT_TO_HUB)
                if table is None:
                    raise InsufficientPsrdError(f"no sending table for hub {hub_id!r}")
                tables.append(table)
            span = span_per_iteration(self.params.m)
            for table in tables:
                if not table.peek_available(table.next_offset, sessions * span):
                    raise InsufficientPsrdError(
                        f"table for hub {table.hub_id!r} cannot cover {sessions} sessions"
                    )
            for _ in range(sessions):
                key_id = self._next_key_id()
                if first_key_id is None:
                    first_key_id = key_id
                for lock in [self.store.lock_for(t) for t in tables]:
                    lock.acquire()
                try:
                    messages, session_key = alice_initiate(
                        self.params, self.config.identity, peer, tables, key_id
                    )
                finally:
                    for table in tables:
                        self.store.lock_for(table).release()
                delivered = 0
                for (hub_id, _, _), msg in zip(self.config.hubs, messages):
                    frame = encode_message(msg)
                    try:
                        sock = self._connect(hub_id)
                        sock.sendall(frame)
                        delivered += 1
                        if self.frame_tap is not None:
                            self.frame_tap.append(frame)
                    except OSError:
                        with self._conn_lock:
                            stale = self._conns.pop(hub_id, None)
                        if stale is not None:
                            _close_socket(stale)
                if delivered < self.params.k:
                    raise PeerUnreachableError(
                        f"only {delivered} of {self.params.n} hubs accepted the session "
                        f"(threshold {self.params.k})"
                    )
                collected += session_key.key_bytes()
        return first_key_id, collected[: math.ceil(bits / 8)]

    # -- receive-side retrieval ---------------------------------------------

    def get_key_by_id(self, key_id: int, bits: int, timeout: float = 5.0) -> bytes:
        """Wait for this side's sessions to finalize and deliver the key
        exactly once."""
        sessions = self.sessions_for_bits(bits)
        needed = list(range(key_id, key_id + sessions))
        deadline = time.monotonic() + timeout
        with self._cv:
            if any(kid in self._delivered for kid in needed):
                raise KeyDeliveryError(f"key id {key_id} already delivered")
            while True:
                if any(kid in self._aborted for kid in needed):
                    raise KeyDeliveryError(f"key id {key_id} aborted")
                if all(kid in self._finalized for kid in needed):
                    break
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise KeyDeliveryError(f"timeout waiting for key id {key_id}")
                self._cv.wait(remaining)
            collected = b"".join(self._finalized.pop(kid).key_bytes() for kid in needed)
            self._delivered.update(needed)
        return collected[: math.ceil(bits / 8)]

    # -- local key API -------------------------------------------------------

    def _api_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._api_server.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(target=self._serve_api, args=(conn,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_api(self, conn: socket.socket) -> None:
        try:
            with conn, conn.makefile("rwb") as stream:
                for line in stream:
                    response = self._handle_api(line)
                    stream.write(json.dumps(response).encode() + b"\n")
                    stream.flush()
        except (OSError, ValueError):
            pass

    def _handle_api(self, line: bytes) -> dict:
        try:
            request = json.loads(line)
            verb = request.get("verb")
            bits = int(request.get("bits", self.params.m * self.params.field.bits))
            timeout = float(request.get("timeout", 5.0))
            if verb == "get_key":
                key_id, key = self.request_key(request["peer"].encode(), bits, timeout)
                return {"status": "ok", "key_id": f"{key_id:016x}", "key": key.hex()}
            if verb == "get_key_by_id":
                key_id = int(request["key_id"], 16)
                key = self.get_key_by_id(key_id, bits, timeout)
                return {"status": "ok", "key_id": f"{key_id:016x}", "key": key.hex()}
            return {"status": "error", "reason": f"unknown verb {verb!r}"}
        except DskeError as exc:
            return {"status": "error", "reason": f"{type(exc).__name__}: {exc}"}
        except (KeyError, ValueError, TypeError) as exc:
            return {"status": "error", "reason": f"bad request: {exc}"}


def api_call(addr: tuple[str, int], payload: dict, timeout: float = 10.0) -> dict:
    """One JSON-lines request against an agent's local key API."""
    with socket.create_connection(addr, timeout=timeout) as sock:
        with sock.makefile("rwb") as stream:
            stream.write(json.dumps(payload).encode() + b"\n")
            stream.flush()
            line = stream.readline()
    if not line:
        raise ConnectionError("agent closed the connection")
    return json.loads(line)
