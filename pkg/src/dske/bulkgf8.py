"""Vectorized GF(2^8) kernels (numpy, log/exp tables).

Used by the performance harness for megabit-scale secrets and by the
test suite for exhaustive field-law checks.  Same reduction polynomial
(0x11B) as the scalar implementation in `field`; the two are
cross-checked against each other in the tests.
"""

from __future__ import annotations

import numpy as np

from . import field as F

EXP = np.array(F._GF8_EXP, dtype=np.uint8)  # length 510, doubled to skip a mod
LOG = np.array(F._GF8_LOG, dtype=np.int16)  # LOG[0] is a sentinel, mask zeros

_INV = np.zeros(256, dtype=np.uint8)
for _x in range(1, 256):
    _INV[_x] = F.inv_int(F.FieldId.GF8, _x)


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of uint8 arrays (broadcasting)."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    out = EXP[LOG[a] + LOG[b]]
    return np.where((a == 0) | (b == 0), np.uint8(0), out)


def mul_scalar(vec: np.ndarray, s: int) -> np.ndarray:
    """Product of a uint8 array with one scalar."""
    if s == 0:
        return np.zeros_like(vec)
    if s == 1:
        return vec.copy()
    out = EXP[LOG[vec] + F._GF8_LOG[s]]
    out[vec == 0] = 0
    return out


def inv(a: np.ndarray) -> np.ndarray:
    return _INV[a]


def newton_coefficients(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Monomial coefficients of the interpolating polynomials.

    xs: (k,) distinct uint8 points; ys: (k, L) values, one independent
    polynomial per column.  Returns (k, L) with row j holding the x^j
    coefficients.  Divided differences followed by Newton-to-monomial
    expansion: Theta(k^2) row operations, each vectorized over L.
    """
    xs = np.asarray(xs, dtype=np.uint8)
    k = len(xs)
    dd = np.array(ys, dtype=np.uint8, copy=True)
    if dd.ndim != 2 or dd.shape[0] != k:
        raise ValueError("ys must be (k, L)")
    for level in range(1, k):
        for i in range(k - 1, level - 1, -1):
            span_inv = int(_INV[xs[i] ^ xs[i - level]])
            dd[i] = mul_scalar(dd[i] ^ dd[i - 1], span_inv)
    coeffs = np.zeros_like(dd)
    coeffs[0] = dd[k - 1]
    deg = 0
    for i in range(k - 2, -1, -1):
        xi = int(xs[i])
        # multiply accumulated polynomial by (x + x_i), then add dd[i]
        for j in range(deg, -1, -1):
            shifted = coeffs[j]
            coeffs[j + 1] = coeffs[j + 1] ^ shifted
            coeffs[j] = mul_scalar(shifted, xi)
        deg += 1
        coeffs[0] ^= dd[i]
    return coeffs


def eval_poly(coeffs: np.ndarray, x: int) -> np.ndarray:
    """Horner evaluation of the (k, L) coefficient matrix at scalar x."""
    k = coeffs.shape[0]
    acc = coeffs[k - 1].copy()
    for j in range(k - 2, -1, -1):
        acc = mul_scalar(acc, x) ^ coeffs[j]
    return acc


_EXPONENT_RESIDUES: dict[int, np.ndarray] = {}


def _exponent_residues(m: int) -> np.ndarray:
    """(j mod 255) for j = 2 .. m+1, cached per secret length."""
    cached = _EXPONENT_RESIDUES.get(m)
    if cached is None:
        cached = ((np.arange(m, dtype=np.int64) + 2) % 255).astype(np.int16)
        _EXPONENT_RESIDUES[m] = cached
    return cached


def secret_tag(c: int, d: int, e: int, y: np.ndarray) -> int:
    """Vectorized secret-authenticating tag d + c*e + sum c^(j+1) y_j."""
    if len(y) == 0:
        raise ValueError("empty secret")
    if c == 0:
        return d
    logc = F._GF8_LOG[c]
    # log of c^j is (j * log c) mod 255, a 255-periodic pattern
    pattern = (np.arange(255, dtype=np.int32) * logc % 255).astype(np.int16)
    power_logs = pattern[_exponent_residues(len(y))]
    terms = EXP[LOG[y] + power_logs]
    terms[y == 0] = 0
    acc = int(np.bitwise_xor.reduce(terms))
    return d ^ F.mul_int(F.FieldId.GF8, c, e) ^ acc
