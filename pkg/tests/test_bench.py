"""Bench engine correctness and report plumbing (full run in acceptance)."""

import numpy as np
import pytest

from dske import bulkgf8
from dske.bench import BenchReport, DEFAULT_GRID, run_bench
from dske.field import ElementVector, FieldElement, FieldId, encode_index
from dske.hashing import SecretTagKey, secret_tag
from dske.sharing import SharingParams, generate_shares, reconstruct

GF8 = FieldId.GF8


def test_newton_engine_matches_sharing_module():
    rng = np.random.default_rng(1)
    for n, k, m in [(3, 2, 4), (5, 3, 6), (6, 6, 2), (4, 1, 3)]:
        params = SharingParams(n=n, k=k, m=m, field=GF8)
        anchors_np = rng.integers(0, 256, size=(k, 3 + m), dtype=np.uint8)
        anchors = [ElementVector(GF8, tuple(int(v) for v in row)) for row in anchors_np]
        y0, bundles = generate_shares(anchors, params)

        coeffs = bulkgf8.newton_coefficients(np.arange(1, k + 1, dtype=np.uint8), anchors_np)
        assert tuple(int(v) for v in coeffs[0]) == y0.values
        for b in bundles[k:]:
            assert tuple(int(v) for v in bulkgf8.eval_poly(coeffs, b.index)) == b.payload.values

        # receiver side: coefficients from an arbitrary subset agree with
        # the protocol path's Lagrange reconstruction
        subset = [(encode_index(i + 1, GF8), bundles[i].payload) for i in range(k)]
        assert tuple(int(v) for v in coeffs[0]) == reconstruct(subset).values


def test_vectorized_secret_tag_matches_scalar():
    rng = np.random.default_rng(2)
    for m in (1, 5, 64):
        y = rng.integers(0, 256, size=m, dtype=np.uint8)
        c, d, e = (int(x) for x in rng.integers(0, 256, size=3))
        key = SecretTagKey(FieldElement(GF8, c), FieldElement(GF8, d), FieldElement(GF8, e))
        expected = secret_tag(key, ElementVector(GF8, tuple(int(v) for v in y))).value
        assert bulkgf8.secret_tag(c, d, e, y) == expected
    assert bulkgf8.secret_tag(0, 0x17, 0x99, np.array([1, 2], dtype=np.uint8)) == 0x17


def test_run_bench_small_and_report_paths(tmp_path):
    report = run_bench(grid=((2, 2), (3, 2), (4, 4)), secret_bits=16_000, repeats=2, seed=1)
    assert len(report.rows) == 3
    assert all(row.alice_ms >= 0 and row.bob_ms >= 0 for row in report.rows)
    csv_text = report.to_csv()
    assert csv_text.splitlines()[0] == "n,k,secret_bits,alice_ms,bob_ms,total_ms"
    assert len(csv_text.splitlines()) == 4
    assert '"exponent"' in report.to_json()
    fig = tmp_path / "scaling.png"
    report.render_figure(str(fig))
    assert fig.stat().st_size > 0
    assert any("fitted exponent" in line for line in report.lines())


def test_run_bench_validates_grid():
    with pytest.raises(ValueError):
        run_bench(grid=((2, 3),), secret_bits=1000)
    with pytest.raises(ValueError):
        run_bench(repeats=0, secret_bits=1000)


def test_default_grid_covers_required_thresholds():
    assert {k for _, k in DEFAULT_GRID} == {2, 4, 8, 16}
