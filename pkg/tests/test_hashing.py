import os
import random

import pytest

from dsig.counters import counters
from dsig.errors import InvalidLength
from dsig.hashing import (
    BACKEND_IDS,
    DOMAIN_TAGS,
    HashSuite,
    chain_step,
    digest_stream,
    expand_secrets,
    message_digest,
    wide_hash,
)

SUITES = [HashSuite(name, name) for name in BACKEND_IDS]
SUITE = HashSuite()

SEED = b"\x07" * 32
SIGNER = b"\x01" * 8
NONCE = b"\x02" * 16
LEAF = b"\x03" * 32


@pytest.mark.parametrize("suite", SUITES, ids=str)
def test_wide_hash_is_32_bytes_and_deterministic(suite):
    data = b"some input"
    out = wide_hash(suite, "PK", data)
    assert len(out) == 32
    assert out == wide_hash(suite, "PK", data)


def test_backends_produce_distinct_outputs():
    data = b"same bytes in"
    outs = {wide_hash(s, "PK", data) for s in SUITES}
    assert len(outs) == len(SUITES)


def test_role_separation_across_domain_tags(rng):
    for _ in range(50):
        data = rng.randbytes(40)
        outs = {wide_hash(SUITE, tag, data) for tag in DOMAIN_TAGS}
        assert len(outs) == len(DOMAIN_TAGS)


def test_unknown_tag_rejected():
    with pytest.raises(ValueError):
        wide_hash(SUITE, "NOPE", b"")


@pytest.mark.parametrize("suite", SUITES, ids=str)
@pytest.mark.parametrize("secret_size", [16, 18])
def test_chain_step_output_length(suite, secret_size):
    value = bytes(secret_size)
    out = chain_step(suite, NONCE, 0, 0, value, secret_size)
    assert len(out) == secret_size


def test_chain_step_reproduces_chain_top():
    # applying the step d-1 times from a secret must be deterministic
    ss, d = 18, 4
    value = os.urandom(ss)
    walk1 = walk2 = value
    for j in range(d - 1):
        walk1 = chain_step(SUITE, NONCE, 5, j, walk1, ss)
        walk2 = chain_step(SUITE, NONCE, 5, j, walk2, ss)
    assert walk1 == walk2
    assert walk1 != value


def test_chain_step_tweaks_never_collide(rng):
    # 10^4 random (chain_index, step_index) pairs on one value: all distinct
    value = rng.randbytes(18)
    seen = set()
    pairs = {(rng.randrange(1 << 20), rng.randrange(64)) for _ in range(10_000)}
    for chain_i, step_i in pairs:
        seen.add(chain_step(SUITE, NONCE, chain_i, step_i, value, 18))
    assert len(seen) == len(pairs)


def test_chain_step_rejects_bad_lengths():
    with pytest.raises(InvalidLength):
        chain_step(SUITE, NONCE, 0, 0, b"short", 18)
    with pytest.raises(InvalidLength):
        chain_step(SUITE, b"tiny", 0, 0, bytes(18), 18)


def test_message_digest_is_16_bytes_and_deterministic():
    md = message_digest(SUITE, SIGNER, NONCE, LEAF, b"msg")
    assert len(md) == 16
    assert md == message_digest(SUITE, SIGNER, NONCE, LEAF, b"msg")


def test_message_digest_sensitive_to_every_message_bit(rng):
    message = rng.randbytes(32)
    base = message_digest(SUITE, SIGNER, NONCE, LEAF, message)
    for _ in range(256):
        bit = rng.randrange(len(message) * 8)
        flipped = bytearray(message)
        flipped[bit // 8] ^= 1 << (bit % 8)
        assert message_digest(SUITE, SIGNER, NONCE, LEAF, bytes(flipped)) != base


def test_message_digest_sensitive_to_nonce(rng):
    digests = {message_digest(SUITE, SIGNER, rng.randbytes(16), LEAF, b"m")
               for _ in range(100)}
    assert len(digests) == 100


def test_expand_secrets_shape_and_determinism():
    secrets = expand_secrets(SUITE, SEED, 0, 68, 18)
    assert len(secrets) == 68
    assert all(len(s) == 18 for s in secrets)
    assert secrets == expand_secrets(SUITE, SEED, 0, 68, 18)


def test_expand_secrets_disjoint_across_key_indices():
    a = expand_secrets(SUITE, SEED, 0, 68, 18)
    b = expand_secrets(SUITE, SEED, 1, 68, 18)
    assert not set(a) & set(b)


def test_expand_secrets_validates_inputs():
    with pytest.raises(InvalidLength):
        expand_secrets(SUITE, b"shortseed", 0, 1, 18)
    with pytest.raises(ValueError):
        expand_secrets(SUITE, SEED, 0, 0, 18)


def test_digest_stream_extends_message_digest_material():
    stream = digest_stream(SUITE, SIGNER, NONCE, LEAF, b"m", 288)
    assert len(stream) == 36
    assert stream == digest_stream(SUITE, SIGNER, NONCE, LEAF, b"m", 288)
    assert stream[:32] != digest_stream(SUITE, SIGNER, NONCE, LEAF, b"x", 288)[:32]


def test_counters_track_roles():
    counters.reset()
    chain_step(SUITE, NONCE, 0, 0, bytes(18), 18)
    assert counters.chain_hashes == 1 and counters.wide_hashes == 0
    message_digest(SUITE, SIGNER, NONCE, LEAF, b"")
    assert counters.wide_hashes == 1


def test_suite_parse_forms():
    assert HashSuite.parse("sha256") == HashSuite("sha256", "sha256")
    assert HashSuite.parse("blake2s:blake2b") == HashSuite()
    with pytest.raises(ValueError):
        HashSuite.parse("md5")
