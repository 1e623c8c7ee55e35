"""Command-line interface: `dske <subcommand>`.

Report-producing subcommands write aligned text to stdout, optional
machine-readable CSV/JSON to files, and can render a matplotlib figure
next to the delimited output.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
from pathlib import Path

from .bench import DEFAULT_GRID, run_bench
from .bounds import bound_report
from .field import FieldId
from .psrd import Direction, EntropySource, generate_table
from .service import (
    ClientAgent,
    ClientConfig,
    HubConfig,
    HubServer,
    api_call,
    table_filename,
)
from .simnet import parse_scenario, run_scenario


def _cmd_gen_psrd(args: argparse.Namespace) -> int:
    field = FieldId(args.field_bits)
    client = args.client.encode()
    hub = args.hub.encode()
    client_dir = Path(args.client_dir)
    hub_dir = Path(args.hub_dir)
    client_dir.mkdir(parents=True, exist_ok=True)
    hub_dir.mkdir(parents=True, exist_ok=True)
    source = EntropySource.seeded(args.seed) if args.seed is not None else EntropySource.system()
    for direction in (Direction.CLIENT_TO_HUB, Direction.HUB_TO_CLIENT):
        table = generate_table(args.length, field, source, client, hub, direction)
        name = table_filename(client, hub, direction)
        (client_dir / name).write_bytes(table.save())
        (hub_dir / name).write_bytes(table.clone().save())
        print(f"wrote {client_dir / name} and {hub_dir / name} ({args.length} elements)")
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    report = bound_report(
        n=args.n, k=args.k, m=args.m, field_bits=args.field_bits,
        msg_blocks=args.msg_blocks, compromised=args.compromised,
    )
    for line in report.lines():
        print(line)
    if args.json:
        payload = {f.split()[0]: f.split()[1] for f in report.lines()}
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"json report written to {args.json}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = parse_scenario(Path(args.scenario).read_text())
    report = run_scenario(scenario.params, scenario.adversary, scenario.trials, scenario.seed)
    for line in report.lines():
        print(line)
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
        print(f"json report written to {args.json}")
    if args.figure:
        _render_outcome_figure(report, args.figure)
        print(f"figure written to {args.figure}")
    return 0


def _render_outcome_figure(report, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = ["completed", "aborted", "wrong secret"]
    counts = [report.completed, report.aborted, report.wrong_secret]
    labels += [f"discard: {k}" for k in sorted(report.discard_histogram)]
    counts += [report.discard_histogram[k] for k in sorted(report.discard_histogram)]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.barh(range(len(counts)), counts)
    ax.set_yticks(range(len(counts)), labels)
    ax.set_xlabel(f"count over {report.trials} trials (seed {report.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _parse_grid(text: str) -> tuple[tuple[int, int], ...]:
    cells = []
    for token in text.split(","):
        n_str, _, k_str = token.strip().partition(":")
        cells.append((int(n_str), int(k_str)))
    return tuple(cells)


def _cmd_bench(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.grid) if args.grid else DEFAULT_GRID
    report = run_bench(grid=grid, secret_bits=args.secret_bits,
                       repeats=args.repeats, seed=args.seed)
    for line in report.lines():
        print(line)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
        print(f"csv written to {args.csv}")
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
        print(f"json written to {args.json}")
    if args.figure:
        report.render_figure(args.figure)
        print(f"figure written to {args.figure}")
    return 0


def _cmd_hub(args: argparse.Namespace) -> int:
    server = HubServer(HubConfig.from_file(Path(args.config)))
    server.start()
    print(f"hub {server.config.identity.decode()} listening on port {server.port}", flush=True)
    _wait_for_signal()
    server.stop()
    return 0


def _cmd_agent(args: argparse.Namespace) -> int:
    agent = ClientAgent(ClientConfig.from_file(Path(args.config)))
    agent.start()
    print(f"agent {agent.config.identity.decode()} key API on port {agent.api_port}", flush=True)
    _wait_for_signal()
    agent.stop()
    return 0


def _wait_for_signal() -> None:
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    stop.wait()


def _cmd_request(args: argparse.Namespace) -> int:
    host, _, port = args.agent.rpartition(":")
    addr = (host or "127.0.0.1", int(port))
    if args.key_id:
        payload = {"verb": "get_key_by_id", "key_id": args.key_id,
                   "bits": args.bits, "timeout": args.timeout}
    else:
        if not args.peer:
            print("either --peer (sender side) or --key-id (receiver side) is required",
                  file=sys.stderr)
            return 2
        payload = {"verb": "get_key", "peer": args.peer,
                   "bits": args.bits, "timeout": args.timeout}
    response = api_call(addr, payload, timeout=args.timeout + 5)
    print(json.dumps(response))
    return 0 if response.get("status") == "ok" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dske",
        description="threshold key establishment over semi-trusted hubs",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-psrd", help="generate a matched client/hub table pair")
    p.add_argument("--client", required=True)
    p.add_argument("--hub", required=True)
    p.add_argument("--len", dest="length", type=int, required=True,
                   help="elements per table")
    p.add_argument("--field-bits", type=int, default=128, choices=(8, 128))
    p.add_argument("--seed", type=int, default=None,
                   help="deterministic source (omit for system randomness)")
    p.add_argument("--client-dir", default="tables/client")
    p.add_argument("--hub-dir", default="tables/hub")
    p.set_defaults(func=_cmd_gen_psrd)

    p = sub.add_parser("bounds", help="closed-form security/robustness bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--field-bits", type=int, default=128)
    p.add_argument("--msg-blocks", type=int, default=8)
    p.add_argument("--compromised", type=int, default=0)
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("simulate", help="run an adversarial scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--figure", default=None, help="render outcome bar chart (png)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bench", help="share-processing benchmark over GF(2^8)")
    p.add_argument("--grid", default=None, help="cells as n:k,n:k,... (default diagonal-ish)")
    p.add_argument("--secret-bits", type=int, default=1_000_000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)
    p.add_argument("--figure", default=None, help="render scaling figure (png)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("hub", help="run a hub daemon")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_hub)

    p = sub.add_parser("agent", help="run a client key agent")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_agent)

    p = sub.add_parser("request", help="ask a local agent for a key")
    p.add_argument("--agent", required=True, help="host:port of the agent key API")
    p.add_argument("--peer", default=None)
    p.add_argument("--key-id", default=None, help="retrieve by id (receiver side)")
    p.add_argument("--bits", type=int, default=128)
    p.add_argument("--timeout", type=float, default=5.0)
    p.set_defaults(func=_cmd_request)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
