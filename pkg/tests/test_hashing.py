"""Tag family tests: oracle evaluation, edge cases, uniformity."""

import random

import pytest

from dske.errors import EmptySecretError, FieldMismatchError
from dske.field import ElementVector, FieldElement, FieldId, mul_int
from dske.hashing import MessageTagKey, SecretTagKey, message_tag, secret_tag

GF8 = FieldId.GF8
GF128 = FieldId.GF128


def oracle_message_tag(field, c, d, values):
    """Direct power-sum evaluation, no Horner."""
    acc = d
    p = 1
    for v in values:
        p = mul_int(field, p, c)
        acc ^= mul_int(field, p, v)
    return acc


def oracle_secret_tag(field, c, d, e, values):
    acc = d ^ mul_int(field, c, e)
    for j, v in enumerate(values, start=1):
        p = 1
        for _ in range(j + 1):
            p = mul_int(field, p, c)
        acc ^= mul_int(field, p, v)
    return acc


def key8(c, d):
    return MessageTagKey(FieldElement(GF8, c), FieldElement(GF8, d))


def skey8(c, d, e):
    return SecretTagKey(FieldElement(GF8, c), FieldElement(GF8, d), FieldElement(GF8, e))


def test_message_tag_empty_message_returns_d():
    assert message_tag(key8(7, 0x2A), ElementVector(GF8, ())).value == 0x2A


def test_message_tag_zero_c_returns_d():
    msg = ElementVector(GF8, (9, 10, 11))
    assert message_tag(key8(0, 0x55), msg).value == 0x55


def test_message_tag_known_value():
    msg = ElementVector(GF8, (1, 1))
    assert message_tag(key8(2, 0), msg).value == 0x06


def test_message_tag_matches_oracle():
    rng = random.Random(10)
    for field, width in ((GF8, 8), (GF128, 128)):
        for _ in range(100):
            c, d = rng.getrandbits(width), rng.getrandbits(width)
            values = tuple(rng.getrandbits(width) for _ in range(rng.randrange(0, 7)))
            got = message_tag(
                MessageTagKey(FieldElement(field, c), FieldElement(field, d)),
                ElementVector(field, values),
            )
            assert got.value == oracle_message_tag(field, c, d, values)


def test_message_tag_linear_in_d():
    rng = random.Random(11)
    for _ in range(50):
        c, d = rng.randrange(256), rng.randrange(256)
        msg = ElementVector(GF8, tuple(rng.randrange(256) for _ in range(3)))
        assert message_tag(key8(c, d), msg).value == d ^ message_tag(key8(c, 0), msg).value


def test_message_tag_field_mismatch():
    with pytest.raises(FieldMismatchError):
        message_tag(key8(1, 2), ElementVector(GF128, (1,)))
    with pytest.raises(FieldMismatchError):
        MessageTagKey(FieldElement(GF8, 1), FieldElement(GF128, 1))


def test_secret_tag_zero_secret():
    # all-zero secret leaves only d + c*e
    key = skey8(0x03, 0x10, 0x07)
    expected = 0x10 ^ mul_int(GF8, 0x03, 0x07)
    assert secret_tag(key, ElementVector(GF8, (0, 0, 0))).value == expected


def test_secret_tag_zero_c_returns_d():
    assert secret_tag(skey8(0, 0x42, 0x99), ElementVector(GF8, (5, 6))).value == 0x42


def test_secret_tag_known_value():
    assert secret_tag(skey8(2, 0, 0), ElementVector(GF8, (1,))).value == 0x04


def test_secret_tag_matches_oracle():
    rng = random.Random(12)
    for field, width in ((GF8, 8), (GF128, 128)):
        for _ in range(100):
            c, d, e = (rng.getrandbits(width) for _ in range(3))
            values = tuple(rng.getrandbits(width) for _ in range(rng.randrange(1, 6)))
            key = SecretTagKey(
                FieldElement(field, c), FieldElement(field, d), FieldElement(field, e)
            )
            got = secret_tag(key, ElementVector(field, values))
            assert got.value == oracle_secret_tag(field, c, d, e, values)


def test_secret_tag_rejects_empty_secret():
    with pytest.raises(EmptySecretError):
        secret_tag(skey8(1, 2, 3), ElementVector(GF8, ()))


def test_tag_uniform_over_d_exhaustive():
    # with (c, e, y) fixed and d sweeping the field, the tag must hit
    # every value exactly once: the tag leaks nothing about y
    y = ElementVector(GF8, (0x11, 0x22))
    for c, e in ((0x02, 0x30), (0xF0, 0x01)):
        tags = {
            secret_tag(skey8(c, d, e), y).value
            for d in range(256)
        }
        assert len(tags) == 256


def test_key_from_vector():
    vec = ElementVector(GF8, (1, 2, 3))
    key = SecretTagKey.from_vector(vec)
    assert (key.c.value, key.d.value, key.e.value) == (1, 2, 3)
    with pytest.raises(ValueError):
        SecretTagKey.from_vector(ElementVector(GF8, (1, 2)))
