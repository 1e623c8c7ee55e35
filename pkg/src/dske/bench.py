"""Processing-time harness for megabit-scale sharing over GF(2^8).

Measures the two client-side hot paths per (n, k) cell:

  * sender: derive the 3+m coordinate polynomials' monomial
    coefficients from the k anchor payloads, evaluate the remaining
    shares from them, and compute the secret-authenticating tag;
  * receiver (honest fast path): derive coefficients from the first
    k-subset of shares, read the x=0 payload off the constant terms,
    and validate the tag.

Both sides run the full coefficient derivation, which is Theta(k^2)
vector operations, so processing time grows close to k^2 with little
dependence on n.  (The protocol modules reconstruct via Lagrange
weights instead, which is the right call at protocol-sized secrets;
the two engines are cross-checked in the tests.)  Communication and
table I/O are excluded from the timed regions.

Every timed run also asserts that the receiver's secret equals the
sender's: a benchmark that computes the wrong thing measures nothing.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass

import numpy as np

from . import bulkgf8

DEFAULT_GRID: tuple[tuple[int, int], ...] = (
    (2, 2), (3, 2), (4, 4), (5, 4), (8, 8), (9, 8), (16, 16), (17, 16),
)


@dataclass(frozen=True)
class BenchRow:
    n: int
    k: int
    secret_bits: int
    alice_ms: float
    bob_ms: float

    @property
    def total_ms(self) -> float:
        return self.alice_ms + self.bob_ms


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    exponent: float
    intercept: float
    residuals: tuple[float, ...]
    secret_bits: int
    repeats: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "k", "secret_bits", "alice_ms", "bob_ms", "total_ms"])
        for row in self.rows:
            writer.writerow(
                [row.n, row.k, row.secret_bits,
                 f"{row.alice_ms:.3f}", f"{row.bob_ms:.3f}", f"{row.total_ms:.3f}"]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "exponent": self.exponent,
                "intercept": self.intercept,
                "secret_bits": self.secret_bits,
                "repeats": self.repeats,
                "rows": [
                    {"n": r.n, "k": r.k, "alice_ms": r.alice_ms, "bob_ms": r.bob_ms}
                    for r in self.rows
                ],
            }
        )

    def lines(self) -> list[str]:
        out = [f"{'n':>4} {'k':>4} {'alice_ms':>10} {'bob_ms':>10} {'total_ms':>10}"]
        for r in self.rows:
            out.append(
                f"{r.n:>4} {r.k:>4} {r.alice_ms:>10.2f} {r.bob_ms:>10.2f} {r.total_ms:>10.2f}"
            )
        out.append(f"fitted exponent of total time vs k: {self.exponent:.3f}")
        return out

    def render_figure(self, path: str) -> None:
        """Log-log scatter of total processing time vs k with the fit."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ks = np.array([r.k for r in self.rows], dtype=float)
        totals = np.array([r.total_ms for r in self.rows], dtype=float)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.loglog(ks, totals, "o", label="measured")
        span = np.linspace(ks.min(), ks.max(), 64)
        ax.loglog(span, np.exp(self.intercept) * span ** self.exponent, "-",
                  label=f"fit ~ k^{self.exponent:.2f}")
        ax.set_xlabel("threshold k")
        ax.set_ylabel("sender + receiver time (ms)")
        ax.set_title(f"share processing, {self.secret_bits / 1e6:.2g} Mbit secret")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def _one_cell(n: int, k: int, m: int, rng: np.random.Generator) -> tuple[float, float]:
    length = 3 + m
    anchors = rng.integers(0, 256, size=(k, length), dtype=np.uint8)
    xs = np.arange(1, k + 1, dtype=np.uint8)

    t0 = time.perf_counter()
    coeffs = bulkgf8.newton_coefficients(xs, anchors)
    shares = [anchors[i] for i in range(k)]
    for i in range(k + 1, n + 1):
        shares.append(bulkgf8.eval_poly(coeffs, i))
    y0 = coeffs[0]
    c, d, e = int(y0[0]), int(y0[1]), int(y0[2])
    secret = y0[3:]
    o = bulkgf8.secret_tag(c, d, e, secret)
    t1 = time.perf_counter()

    first_subset = np.stack(shares[:k])
    sub_xs = np.arange(1, k + 1, dtype=np.uint8)
    t2 = time.perf_counter()
    rec_coeffs = bulkgf8.newton_coefficients(sub_xs, first_subset)
    rec_y0 = rec_coeffs[0]
    rc, rd, re_ = int(rec_y0[0]), int(rec_y0[1]), int(rec_y0[2])
    rec_secret = rec_y0[3:]
    valid = bulkgf8.secret_tag(rc, rd, re_, rec_secret) == o
    t3 = time.perf_counter()

    if not valid or not np.array_equal(rec_secret, secret):
        raise AssertionError(f"benchmark correctness guard failed at n={n}, k={k}")
    return (t1 - t0) * 1e3, (t3 - t2) * 1e3


def run_bench(
    grid=DEFAULT_GRID,
    secret_bits: int = 1_000_000,
    repeats: int = 3,
    seed: int = 0,
) -> BenchReport:
    """Measure the grid; the fit pools log(total) against log(k)."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    m = (secret_bits + 7) // 8
    rng = np.random.default_rng(seed)
    rows = []
    for n, k in grid:
        if not 1 <= k <= n:
            raise ValueError(f"bad grid cell (n={n}, k={k})")
        alice_times = []
        bob_times = []
        for _ in range(repeats):
            a_ms, b_ms = _one_cell(n, k, m, rng)
            alice_times.append(a_ms)
            bob_times.append(b_ms)
        rows.append(
            BenchRow(n, k, secret_bits,
                     float(np.median(alice_times)), float(np.median(bob_times)))
        )
    log_k = np.log([r.k for r in rows])
    log_t = np.log([r.total_ms for r in rows])
    exponent, intercept = np.polyfit(log_k, log_t, 1)
    fitted = exponent * log_k + intercept
    residuals = tuple(float(x) for x in (log_t - fitted))
    return BenchReport(
        rows=tuple(rows),
        exponent=float(exponent),
        intercept=float(intercept),
        residuals=residuals,
        secret_bits=secret_bits,
        repeats=repeats,
    )
