"""Deterministic in-process adversarial simulation.

Each trial provisions fresh matched tables, runs one full protocol
iteration between one sender and one receiver through n hubs, and
records the outcome.  The adversary controls a set of compromised hubs
(which may forward honestly, substitute shares re-masked under their
own valid receiver-side keys, collude on a consistent forged
polynomial, or go silent) and may apply per-link channel actions
(drop, tamper, duplicate, reorder).  Passive mode permits full control
of compromised hubs but forbids tampering with or dropping traffic on
links attached to honest hubs.

Every random draw derives from the scenario seed, so identical seeds
produce identical reports.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field
from random import Random
from typing import Mapping, Optional, Sequence

from .errors import MalformedFrameError
from .field import ElementVector, FieldElement, FieldId
from .hashing import MessageTagKey
from .protocol import (
    DiscardReason,
    HubState,
    ReceiverState,
    SessionKey,
    ShareMessage,
    alice_initiate,
    bob_finalize,
    bob_ingest,
    compute_message_tag,
    decode_message,
    encode_message,
    hub_relay,
)
from .psrd import Direction, EntropySource, generate_table
from .sharing import SharingParams, generate_shares

STRATEGIES = ("forward-honest", "substitute-random", "substitute-consistent-pair", "drop")


def derive_seed(*parts) -> int:
    """Stable sub-seed derivation (independent of PYTHONHASHSEED)."""
    text = "/".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class ChannelAction:
    """One transform applied to a link's message list, in config order."""

    kind: str  # drop | tamper | duplicate | reorder
    byte_index: int = 0
    bit_mask: int = 0x01

    def __post_init__(self) -> None:
        if self.kind not in ("drop", "tamper", "duplicate", "reorder"):
            raise ValueError(f"unknown channel action {self.kind!r}")


@dataclass(frozen=True)
class AdversaryConfig:
    """Compromised-hub set, their strategy, and per-link channel actions.

    Links are labelled by endpoint names: ("alice", "hub2") for the
    uplink to hub 2, ("hub2", "bob") for its downlink.
    """

    compromised_hubs: frozenset[int] = frozenset()
    strategy: str = "substitute-random"
    channel_actions: Mapping[tuple[str, str], tuple[ChannelAction, ...]] = dc_field(
        default_factory=dict
    )
    passive: bool = True

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def validate(self, n: int) -> None:
        for i in self.compromised_hubs:
            if not 1 <= i <= n:
                raise ValueError(f"compromised hub index {i} outside 1..{n}")
        for (src, dst), actions in self.channel_actions.items():
            hub_label = src if src.startswith("hub") else dst
            if not hub_label.startswith("hub"):
                raise ValueError(f"link ({src}, {dst}) does not touch a hub")
            hub_index = int(hub_label[3:])
            if not 1 <= hub_index <= n:
                raise ValueError(f"link ({src}, {dst}) names a hub outside 1..{n}")
            if self.passive and hub_index not in self.compromised_hubs:
                if any(a.kind in ("drop", "tamper") for a in actions):
                    raise ValueError(
                        "passive adversary cannot tamper with or drop traffic "
                        f"on honest-hub link ({src}, {dst})"
                    )


@dataclass
class ScenarioReport:
    """Outcome statistics of one simulated scenario."""

    trials: int
    completed: int
    aborted: int
    wrong_secret: int
    discard_histogram: dict[str, int]
    seed: int

    def lines(self) -> list[str]:
        out = [
            f"trials        {self.trials}",
            f"completed     {self.completed}",
            f"aborted       {self.aborted}",
            f"wrong_secret  {self.wrong_secret}",
            f"seed          {self.seed}",
        ]
        for reason in sorted(self.discard_histogram):
            out.append(f"discard[{reason}] {self.discard_histogram[reason]}")
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "trials": self.trials,
                "completed": self.completed,
                "aborted": self.aborted,
                "wrong_secret": self.wrong_secret,
                "discard_histogram": dict(sorted(self.discard_histogram.items())),
                "seed": self.seed,
            }
        )


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario file."""

    params: SharingParams
    adversary: AdversaryConfig
    trials: int
    seed: int


ALICE = b"alice"
BOB = b"bob"


def _apply_actions(
    frames: list[Optional[ShareMessage]], actions: Sequence[ChannelAction]
) -> list[Optional[ShareMessage]]:
    """Transform a link's messages; None marks an undecodable frame."""
    out: list[Optional[ShareMessage]] = list(frames)
    for action in actions:
        if action.kind == "drop":
            out = []
        elif action.kind == "duplicate":
            out = out + list(out)
        elif action.kind == "reorder":
            out = list(reversed(out))
        elif action.kind == "tamper":
            tampered = []
            for msg in out:
                if msg is None:
                    tampered.append(None)
                    continue
                raw = bytearray(encode_message(msg))
                raw[action.byte_index % len(raw)] ^= action.bit_mask
                try:
                    tampered.append(decode_message(bytes(raw)))
                except MalformedFrameError:
                    tampered.append(None)
            out = tampered
    return out


def _forge_forward(
    hub: HubState, msg: ShareMessage, payload: ElementVector
) -> ShareMessage | DiscardReason:
    """Send `payload` to the receiver re-masked under the hub's own
    valid table keys (what a fully controlled hub can always do)."""
    table = hub.table_for(msg.receiver, Direction.HUB_TO_CLIENT)
    span = 5 + msg.m
    if table is None or not table.available_at_next(span):
        return DiscardReason.TABLE_DEPLETED
    offset, r = table.take_next(3 + msg.m)
    _, v = table.take_next(2)
    z = payload.xor(r)
    draft = ShareMessage(hub.identity, msg.receiver, msg.origin, msg.key_id,
                         offset, z, msg.o, FieldElement(msg.field, 0))
    t = compute_message_tag(MessageTagKey(v[0], v[1]), draft)
    return ShareMessage(hub.identity, msg.receiver, msg.origin, msg.key_id,
                        offset, z, msg.o, t)


def _run_trial(
    params: SharingParams,
    adversary: AdversaryConfig,
    trial: int,
    seed: int,
    histogram: dict[str, int],
) -> tuple[str, Optional[SessionKey], Optional[SessionKey]]:
    rng = Random(derive_seed(seed, "trial", trial))
    source = EntropySource(kind="seeded-deterministic", _rng=rng)
    span = 5 + params.m

    hub_ids = [f"hub{i}".encode() for i in range(1, params.n + 1)]
    alice_tables = []
    hubs = []
    bob_tables = {}
    for hub_id in hub_ids:
        a_side = generate_table(span, params.field, source, ALICE, hub_id,
                                Direction.CLIENT_TO_HUB)
        b_side = generate_table(span, params.field, source, BOB, hub_id,
                                Direction.HUB_TO_CLIENT)
        alice_tables.append(a_side.clone())
        bob_tables[hub_id] = b_side.clone()
        hubs.append(HubState(hub_id, {
            (ALICE, Direction.CLIENT_TO_HUB): a_side,
            (BOB, Direction.HUB_TO_CLIENT): b_side,
        }))
    bob = ReceiverState(
        identity=BOB,
        hub_indices={h: i + 1 for i, h in enumerate(hub_ids)},
        tables=bob_tables,
    )

    messages, alice_key = alice_initiate(params, ALICE, BOB, alice_tables, trial)

    forged_payloads: dict[int, ElementVector] = {}
    if adversary.compromised_hubs and adversary.strategy == "substitute-consistent-pair":
        width = params.field.bits
        anchors = [
            ElementVector(params.field,
                          tuple(rng.getrandbits(width) for _ in range(params.payload_len)))
            for _ in range(params.k)
        ]
        _, forged = generate_shares(anchors, params)
        forged_payloads = {b.index: b.payload for b in forged}

    def record(reason: DiscardReason) -> None:
        histogram[reason.value] = histogram.get(reason.value, 0) + 1

    for i, hub in enumerate(hubs, start=1):
        uplink = _apply_actions(
            [messages[i - 1]], adversary.channel_actions.get(("alice", f"hub{i}"), ())
        )
        downlink: list[Optional[ShareMessage]] = []
        compromised = i in adversary.compromised_hubs
        for msg in uplink:
            if msg is None:
                record(DiscardReason.MALFORMED)
                continue
            if not compromised or adversary.strategy == "forward-honest":
                fwd = hub_relay(hub, msg, ALICE)
            elif adversary.strategy == "drop":
                continue
            elif adversary.strategy == "substitute-random":
                width = params.field.bits
                garbage = ElementVector(
                    params.field,
                    tuple(rng.getrandbits(width) for _ in range(params.payload_len)),
                )
                fwd = _forge_forward(hub, msg, garbage)
            else:  # substitute-consistent-pair
                fwd = _forge_forward(hub, msg, forged_payloads[i])
            if isinstance(fwd, DiscardReason):
                record(fwd)
            else:
                downlink.append(fwd)
        downlink = _apply_actions(
            downlink, adversary.channel_actions.get((f"hub{i}", "bob"), ())
        )
        for msg in downlink:
            if msg is None:
                record(DiscardReason.MALFORMED)
                continue
            reason = bob_ingest(bob, msg, hub.identity)
            if reason is not None:
                record(reason)

    bob_key = None
    for group_key in sorted(bob.groups):
        if len(bob.groups[group_key]) < params.k:
            continue
        result = bob_finalize(bob, group_key, params.k)
        if result is not None:
            bob_key = result
            break
    if bob_key is None:
        return "aborted", alice_key, None
    return "completed", alice_key, bob_key


def run_scenario(
    params: SharingParams,
    adversary: AdversaryConfig,
    trials: int,
    seed: int = 0,
) -> ScenarioReport:
    """Run `trials` independent protocol iterations and tally outcomes."""
    adversary.validate(params.n)
    if trials < 1:
        raise ValueError("need at least one trial")
    completed = aborted = wrong = 0
    histogram: dict[str, int] = {}
    for trial in range(trials):
        outcome, alice_key, bob_key = _run_trial(params, adversary, trial, seed, histogram)
        if outcome == "completed":
            completed += 1
            if bob_key.secret != alice_key.secret:
                wrong += 1
        else:
            aborted += 1
    return ScenarioReport(
        trials=trials,
        completed=completed,
        aborted=aborted,
        wrong_secret=wrong,
        discard_histogram=histogram,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Scenario files (key = value lines, '#' comments, repeated `action` keys)
# ---------------------------------------------------------------------------

def parse_scenario(text: str) -> Scenario:
    values: dict[str, str] = {}
    actions: dict[tuple[str, str], list[ChannelAction]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "action":
            parts = value.split()
            if len(parts) < 2 or "->" not in parts[0]:
                raise ValueError(f"line {lineno}: expected `src->dst kind [byte [mask]]`")
            src, _, dst = parts[0].partition("->")
            kind = parts[1]
            byte_index = int(parts[2], 0) if len(parts) > 2 else 0
            bit_mask = int(parts[3], 0) if len(parts) > 3 else 0x01
            actions.setdefault((src, dst), []).append(
                ChannelAction(kind, byte_index, bit_mask)
            )
        else:
            values[key] = value

    def need(key: str) -> str:
        if key not in values:
            raise ValueError(f"scenario is missing `{key}`")
        return values[key]

    params = SharingParams(
        n=int(need("n")),
        k=int(need("k")),
        m=int(values.get("m", "1")),
        field=FieldId(int(values.get("field_bits", "128"))),
    )
    compromised = frozenset(
        int(tok) for tok in values.get("compromised", "").replace(",", " ").split()
    )
    adversary = AdversaryConfig(
        compromised_hubs=compromised,
        strategy=values.get("strategy", "substitute-random"),
        channel_actions={k: tuple(v) for k, v in actions.items()},
        passive=values.get("passive", "true").lower() in ("1", "true", "yes"),
    )
    return Scenario(
        params=params,
        adversary=adversary,
        trials=int(values.get("trials", "100")),
        seed=int(values.get("seed", "0")),
    )
