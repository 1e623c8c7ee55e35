"""Closed-form security and robustness bounds.

For an (n, k) scheme over a field of 2^bits elements with an m-element
secret and message bodies of s tag-field blocks:

  eps_secret = min(C(n, k) * (m+1) / 2^bits, 1)    secret validation
  eps_auth   = min(s / 2^bits, 1)                  per-channel forgery
  eps_total  = eps_secret + 2n * eps_auth          2n authenticated legs

The protocol aborts under a passive adversary with probability at most
eps_secret whenever at most min(n-k, k-1) hubs are compromised.
Binomials are computed exactly in big integers; logs only for the
bits-of-loss report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


def epsilon_secret(n: int, k: int, m: int, field_bits: int) -> float:
    """min(C(n,k) * (m+1) / 2^field_bits, 1)."""
    _check_params(n, k)
    if m < 1:
        raise ValueError("secret length must be at least 1")
    ratio = Fraction(math.comb(n, k) * (m + 1), 1 << field_bits)
    return float(min(ratio, Fraction(1)))


def epsilon_auth(s: int, field_bits: int) -> float:
    """min(s / 2^field_bits, 1); zero-length messages cannot be forged."""
    if s < 0:
        raise ValueError("block count must be nonnegative")
    if s == 0:
        return 0.0
    return float(min(Fraction(s, 1 << field_bits), Fraction(1)))


def security_loss_bits(n: int, k: int) -> float:
    """log2 of the candidate-subset multiplier C(n, k)."""
    _check_params(n, k)
    return math.log2(math.comb(n, k))


def robustness_ok(n: int, k: int, compromised: int) -> bool:
    """True iff `compromised` hubs stay within min(n-k, k-1)."""
    _check_params(n, k)
    if not 0 <= compromised <= n:
        raise ValueError("compromised count outside 0..n")
    return compromised <= min(n - k, k - 1)


def max_compromised(n: int, k: int) -> int:
    _check_params(n, k)
    return min(n - k, k - 1)


def _check_params(n: int, k: int) -> None:
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"bad scheme parameters n={n}, k={k}")


@dataclass(frozen=True)
class BoundReport:
    """All bounds for one parameter set."""

    n: int
    k: int
    m: int
    field_bits: int
    msg_blocks: int
    compromised: int
    epsilon_secret: float
    epsilon_auth: float
    epsilon_total: float
    security_loss_bits: float
    robustness_ok: bool

    def lines(self) -> list[str]:
        return [
            f"n                  {self.n}",
            f"k                  {self.k}",
            f"m                  {self.m}",
            f"field_bits         {self.field_bits}",
            f"msg_blocks         {self.msg_blocks}",
            f"compromised        {self.compromised}",
            f"epsilon_secret     {self.epsilon_secret:.6g}",
            f"epsilon_auth       {self.epsilon_auth:.6g}",
            f"epsilon_total      {self.epsilon_total:.6g}",
            f"security_loss_bits {self.security_loss_bits:.2f}",
            f"robustness_ok      {str(self.robustness_ok).lower()}",
            f"max_compromised    {max_compromised(self.n, self.k)}",
        ]


def bound_report(
    n: int, k: int, m: int, field_bits: int, msg_blocks: int, compromised: int = 0
) -> BoundReport:
    es = epsilon_secret(n, k, m, field_bits)
    ea = epsilon_auth(msg_blocks, field_bits)
    return BoundReport(
        n=n,
        k=k,
        m=m,
        field_bits=field_bits,
        msg_blocks=msg_blocks,
        compromised=compromised,
        epsilon_secret=es,
        epsilon_auth=ea,
        epsilon_total=es + 2 * n * ea,
        security_loss_bits=security_loss_bits(n, k),
        robustness_ok=robustness_ok(n, k, compromised),
    )
