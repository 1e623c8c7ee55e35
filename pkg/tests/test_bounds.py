"""Bound arithmetic: exact binomials, clamps, monotonicity."""

import math

import pytest

from dske.bounds import (
    bound_report,
    epsilon_auth,
    epsilon_secret,
    max_compromised,
    robustness_ok,
    security_loss_bits,
)


def test_epsilon_secret_clamp():
    assert epsilon_secret(n=1, k=1, m=1, field_bits=1) == 1.0


def test_epsilon_secret_exact_small():
    # C(3,2) * 2 / 256
    assert epsilon_secret(3, 2, 1, 8) == pytest.approx(6 / 256)


def test_security_loss_bits_reference_values():
    assert abs(security_loss_bits(99, 50) - 95.35) <= 0.01
    assert math.comb(11, 6) == 462
    assert abs(security_loss_bits(11, 6) - math.log2(462)) < 1e-12


def test_epsilon_auth_values():
    assert epsilon_auth(0, 128) == 0.0
    assert epsilon_auth(1 << 128, 128) == 1.0
    assert epsilon_auth(4, 128) == pytest.approx(2.0 ** -126)


def test_robustness_threshold():
    assert robustness_ok(9, 5, 4)          # min(4, 4) = 4
    assert not robustness_ok(9, 5, 5)
    assert robustness_ok(3, 2, 1)
    assert not robustness_ok(3, 2, 2)
    assert not robustness_ok(5, 1, 1)      # k=1 tolerates nothing
    assert robustness_ok(5, 1, 0)
    assert max_compromised(9, 5) == 4


def test_parameter_validation():
    with pytest.raises(ValueError):
        epsilon_secret(0, 1, 1, 8)
    with pytest.raises(ValueError):
        epsilon_secret(3, 4, 1, 8)
    with pytest.raises(ValueError):
        epsilon_secret(3, 2, 0, 8)
    with pytest.raises(ValueError):
        epsilon_auth(-1, 8)
    with pytest.raises(ValueError):
        robustness_ok(3, 2, 4)


def test_monotonicity():
    base = epsilon_secret(5, 3, 4, 64)
    assert epsilon_secret(5, 3, 8, 64) >= base
    assert epsilon_secret(5, 3, 4, 128) <= base
    rep = bound_report(5, 3, 4, 64, msg_blocks=12)
    assert rep.epsilon_total >= rep.epsilon_secret


def test_report_shape():
    rep = bound_report(n=3, k=2, m=1, field_bits=128, msg_blocks=8, compromised=1)
    assert rep.epsilon_total == rep.epsilon_secret + 2 * 3 * rep.epsilon_auth
    assert rep.robustness_ok
    assert any("epsilon_total" in line for line in rep.lines())
