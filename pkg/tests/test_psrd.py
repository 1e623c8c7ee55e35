"""PSRD table tests: consume-once semantics, erasure, file format."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dske.errors import FormatError, ReuseAttemptError
from dske.field import FieldId
from dske.psrd import Direction, EntropySource, PsrdTable, generate_table

GF8 = FieldId.GF8
GF128 = FieldId.GF128

# generated once from the seeded source and frozen; guards the exact
# generator-to-table mapping
GOLDEN_SEED42_GF8_LEN8 = bytes.fromhex("9d79b1a37f31801c")


def make_table(length=16, field=GF8, seed=1, direction=Direction.CLIENT_TO_HUB):
    return generate_table(length, field, EntropySource.seeded(seed), b"alice", b"hub1", direction)


def test_seeded_determinism():
    t1 = make_table(seed=42)
    t2 = make_table(seed=42)
    assert t1.save() == t2.save()
    t3 = make_table(seed=43)
    assert t1.save() != t3.save()


def test_generate_rejects_empty():
    with pytest.raises(ValueError):
        generate_table(0, GF8, EntropySource.seeded(1), b"a", b"h", Direction.CLIENT_TO_HUB)


def test_golden_table_bytes():
    t = generate_table(8, GF8, EntropySource.seeded(42), b"alice", b"hub1",
                       Direction.CLIENT_TO_HUB)
    assert bytes(t._values) == GOLDEN_SEED42_GF8_LEN8
    assert t.next_offset == 0
    assert not any(t.consumed_flags)


def test_clone_is_independent_twin():
    t = make_table()
    twin = t.clone()
    assert t.save() == twin.save()
    t.consume_span(0, 4)
    assert not twin.consumed_flags[0]


def test_consume_then_reuse_rejected():
    t = make_table(length=8)
    t.consume_span(0, 6)
    with pytest.raises(ReuseAttemptError):
        t.consume_span(0, 1)
    with pytest.raises(ReuseAttemptError):
        t.consume_span(5, 2)


def test_disjoint_spans_succeed():
    t = make_table(length=8)
    a = t.consume_span(0, 2)
    b = t.consume_span(2, 2)
    assert len(a) == 2 and len(b) == 2


def test_consume_erases_values():
    t = make_table(length=8)
    span = t.consume_span(1, 3)
    assert any(v != 0 for v in span.values)  # overwhelmingly likely for seed 1
    assert t._values[1:4] == [0, 0, 0]
    reloaded = PsrdTable.load(t.save())
    assert reloaded._values[1:4] == [0, 0, 0]
    assert reloaded.consumed_flags[1:4] == (True, True, True)


def test_peek_never_mutates():
    t = make_table(length=8)
    assert t.peek_available(0, 8)
    assert not t.peek_available(0, 9)  # past the end
    assert not t.peek_available(-1, 1)
    snapshot = t.save()
    t.peek_available(2, 3)
    assert t.save() == snapshot


def test_peek_after_partial_consume():
    t = make_table(length=16)
    t.consume_span(0, 7)
    assert not t.peek_available(6, 1)
    assert t.peek_available(7, 1)


def test_take_next_advances():
    t = make_table(length=16)
    off1, _ = t.take_next(6)
    off2, _ = t.take_next(2)
    assert (off1, off2) == (0, 6)
    assert t.next_offset == 8


def test_save_load_roundtrip():
    for field in (GF8, GF128):
        t = make_table(length=10, field=field, direction=Direction.HUB_TO_CLIENT)
        t.consume_span(3, 4)
        t.take_next(2)
        blob = t.save()
        r = PsrdTable.load(blob)
        assert r.save() == blob
        assert r.client_id == t.client_id
        assert r.hub_id == t.hub_id
        assert r.direction == t.direction
        assert r.field is t.field
        assert r.next_offset == t.next_offset
        assert r.consumed_flags == t.consumed_flags


def test_load_rejects_corruption():
    blob = make_table().save()
    with pytest.raises(FormatError):
        PsrdTable.load(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        PsrdTable.load(blob[:10])
    with pytest.raises(FormatError):
        PsrdTable.load(blob + b"\x00")
    bad_version = bytearray(blob)
    bad_version[4] = 9
    with pytest.raises(FormatError):
        PsrdTable.load(bytes(bad_version))


def test_load_rejects_unzeroized_consumed():
    t = make_table(length=4)
    t.consume_span(0, 2)
    blob = bytearray(t.save())
    blob[-4] = 0xAB  # first consumed element's byte
    with pytest.raises(FormatError):
        PsrdTable.load(bytes(blob))


def test_entropy_source_kinds():
    assert EntropySource.seeded(1).kind == "seeded-deterministic"
    assert EntropySource.system().kind == "system-random"
    assert len(EntropySource.system().draw_bytes(16)) == 16


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(min_value=0, max_value=40), st.integers(min_value=1, max_value=12)),
        max_size=30,
    )
)
def test_no_reuse_across_interleavings(calls):
    """Global no-reuse: whatever the call sequence, each element index
    is handed out at most once."""
    t = make_table(length=32)
    handed_out = set()
    for offset, length in calls:
        if t.peek_available(offset, length):
            t.consume_span(offset, length)
            span = set(range(offset, offset + length))
            assert not span & handed_out
            handed_out |= span
        else:
            with pytest.raises(ReuseAttemptError):
                t.consume_span(offset, length)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(min_value=0, max_value=40), st.integers(min_value=1, max_value=12)),
        max_size=20,
    ),
    st.lists(st.booleans(), min_size=20, max_size=20),
)
def test_no_reuse_survives_save_load(calls, reload_points):
    """Persisting after every consume and reloading at arbitrary points
    (a crash that loses memory but not disk) never resurrects a span."""
    t = make_table(length=32, seed=7)
    handed_out = set()
    disk = t.save()
    for (offset, length), do_reload in zip(calls, reload_points):
        if do_reload:
            t = PsrdTable.load(disk)
        if t.peek_available(offset, length):
            t.consume_span(offset, length)
            disk = t.save()  # consume-before-send ordering
            span = set(range(offset, offset + length))
            assert not span & handed_out
            handed_out |= span
