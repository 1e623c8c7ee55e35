"""Shared helpers: table provisioning and a loopback TCP deployment."""

from dataclasses import dataclass
from pathlib import Path

from dske.field import FieldId
from dske.protocol import HubState, ReceiverState
from dske.psrd import Direction, EntropySource, PsrdTable, generate_table
from dske.service import ClientAgent, ClientConfig, HubConfig, HubServer, table_filename


@dataclass
class World:
    """One sender, one receiver, n hubs, with matched table copies."""

    alice_id: bytes
    bob_id: bytes
    hub_ids: list[bytes]
    alice_tables: list[PsrdTable]
    bob_state: ReceiverState
    hubs: list[HubState]


def build_world(
    n: int,
    m: int,
    field: FieldId = FieldId.GF128,
    seed: int = 0,
    iterations: int = 1,
    acl=None,
) -> World:
    alice = b"alice"
    bob = b"bob"
    hub_ids = [f"hub{i}".encode() for i in range(1, n + 1)]
    length = iterations * (5 + m)

    alice_tables = []
    hubs = []
    bob_tables = {}
    for i, hub_id in enumerate(hub_ids):
        a_side = generate_table(
            length, field, EntropySource.seeded(seed * 1_000_003 + 2 * i),
            alice, hub_id, Direction.CLIENT_TO_HUB,
        )
        b_side = generate_table(
            length, field, EntropySource.seeded(seed * 1_000_003 + 2 * i + 1),
            bob, hub_id, Direction.HUB_TO_CLIENT,
        )
        alice_tables.append(a_side.clone())
        bob_tables[hub_id] = b_side.clone()
        hubs.append(
            HubState(
                identity=hub_id,
                tables={
                    (alice, Direction.CLIENT_TO_HUB): a_side,
                    (bob, Direction.HUB_TO_CLIENT): b_side,
                },
                acl=acl,
            )
        )
    bob_state = ReceiverState(
        identity=bob,
        hub_indices={hub_id: i + 1 for i, hub_id in enumerate(hub_ids)},
        tables=bob_tables,
    )
    return World(alice, bob, hub_ids, alice_tables, bob_state, hubs)


@dataclass
class Deployment:
    """Running loopback deployment: n hubs plus two agents."""

    hubs: list[HubServer]
    alice: ClientAgent
    bob: ClientAgent
    base: Path
    n: int
    k: int
    m: int
    field: FieldId

    def stop(self) -> None:
        for agent in (self.alice, self.bob):
            try:
                agent.stop()
            except Exception:
                pass
        for hub in self.hubs:
            try:
                hub.stop()
            except Exception:
                pass

    def restart_hub(self, index: int) -> None:
        """Recreate hub `index` (0-based) from its on-disk tables."""
        old = self.hubs[index]
        config = old.config
        port = old.port
        try:
            old.stop()
        except Exception:
            pass
        replacement = HubServer(HubConfig(
            identity=config.identity,
            listen=("127.0.0.1", port),
            table_dir=config.table_dir,
            acl=config.acl,
            queue_depth=config.queue_depth,
        ))
        replacement.start()
        self.hubs[index] = replacement


def provision_deployment_dirs(
    base: Path, n: int, m: int, field: FieldId, sessions: int, seed: int
) -> None:
    """Write matched table files for clients alice and bob across n hubs."""
    length = sessions * (5 + m)
    counter = 0
    for client in (b"alice", b"bob"):
        client_dir = base / client.decode() / "tables"
        client_dir.mkdir(parents=True, exist_ok=True)
        for i in range(1, n + 1):
            hub_id = f"hub{i}".encode()
            hub_dir = base / hub_id.decode() / "tables"
            hub_dir.mkdir(parents=True, exist_ok=True)
            for direction in (Direction.CLIENT_TO_HUB, Direction.HUB_TO_CLIENT):
                counter += 1
                table = generate_table(
                    length, field, EntropySource.seeded(seed * 7919 + counter),
                    client, hub_id, direction,
                )
                name = table_filename(client, hub_id, direction)
                (client_dir / name).write_bytes(table.save())
                (hub_dir / name).write_bytes(table.clone().save())


def build_deployment(
    base: Path,
    n: int = 3,
    k: int = 2,
    m: int = 1,
    field: FieldId = FieldId.GF128,
    sessions: int = 64,
    seed: int = 0,
    finalize_deadline: float = 0.15,
    acl=None,
) -> Deployment:
    provision_deployment_dirs(base, n, m, field, sessions, seed)
    hubs = []
    for i in range(1, n + 1):
        hub_id = f"hub{i}"
        hub = HubServer(HubConfig(
            identity=hub_id.encode(),
            listen=("127.0.0.1", 0),
            table_dir=base / hub_id / "tables",
            acl=acl,
        ))
        hub.start()
        hubs.append(hub)
    hub_entries = [(h.config.identity, "127.0.0.1", h.port) for h in hubs]
    agents = []
    for client in ("alice", "bob"):
        agent = ClientAgent(ClientConfig(
            identity=client.encode(),
            listen=("127.0.0.1", 0),
            table_dir=base / client / "tables",
            hubs=hub_entries,
            k=k,
            m=m,
            field=field,
            finalize_deadline=finalize_deadline,
        ))
        agent.start()
        agents.append(agent)
    return Deployment(hubs, agents[0], agents[1], base, n, k, m, field)
