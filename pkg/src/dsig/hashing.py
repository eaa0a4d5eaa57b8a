"""The three hashing roles behind one pluggable suite.

A :class:`HashSuite` names two backends: a *chain* hash for short
fixed-size inputs (one-time-key chains and elements) and a *wide* hash
for everything else (message digests, key expansion, public-key digests,
tree nodes). Three backends are available: ``sha256``, ``blake2b`` and
``blake2s``. The default pairs the short-input-optimized ``blake2s``
with ``blake2b`` for wide hashing; a native short-input AES-round hash
in the Haraka family would slot into the chain role, but no maintained
implementation is available as a Python dependency, so the suite stays
configurable instead of assuming one.

Every invocation is domain-separated by an ASCII role tag (``MSG``,
``SK``, ``CH``, ``PK``, ``MERKLE``, ``ROOT``); the exact input layouts
are documented in ``dsig._pykernels``. Integer fields are encoded
little-endian with fixed widths so outputs are reproducible bit-for-bit
across backends and implementations.

All functions here are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels
from .counters import counters
from .errors import InvalidLength

BACKEND_IDS = {"sha256": 0, "blake2b": 1, "blake2s": 2}
BACKEND_NAMES = {v: k for k, v in BACKEND_IDS.items()}

DOMAIN_TAGS = ("MSG", "SK", "CH", "PK", "MERKLE", "ROOT")


@dataclass(frozen=True)
class HashSuite:
    """Backend pairing for the chain and wide hashing roles."""

    chain_hash_id: str = "blake2s"
    wide_hash_id: str = "blake2b"
    version: int = 1

    def __post_init__(self):
        for name in (self.chain_hash_id, self.wide_hash_id):
            if name not in BACKEND_IDS:
                raise ValueError(f"unknown hash backend {name!r}")

    @property
    def chain_b(self) -> int:
        return BACKEND_IDS[self.chain_hash_id]

    @property
    def wide_b(self) -> int:
        return BACKEND_IDS[self.wide_hash_id]

    @classmethod
    def parse(cls, text: str) -> "HashSuite":
        """Accepts ``"blake2b"`` (both roles) or ``"chain:wide"``."""
        if ":" in text:
            chain, wide = text.split(":", 1)
            return cls(chain.strip(), wide.strip())
        name = text.strip()
        return cls(name, name)

    def __str__(self):
        return f"{self.chain_hash_id}:{self.wide_hash_id}"


DEFAULT_SUITE = HashSuite()


def wide_hash(suite: HashSuite, tag: str, data: bytes) -> bytes:
    """32-byte digest of ``tag || data`` under the wide backend."""
    if tag not in DOMAIN_TAGS:
        raise ValueError(f"unknown domain tag {tag!r}")
    counters.add(wide_hashes=1)
    return kernels.wide32(suite.wide_b, tag.encode() + data)


def chain_step(suite: HashSuite, pub_seed: bytes, chain_index: int,
               step_index: int, value: bytes, secret_size: int) -> bytes:
    """Advance one chain position; output truncated to ``secret_size``."""
    if len(pub_seed) != 16:
        raise InvalidLength(f"pub_seed must be 16 bytes, got {len(pub_seed)}")
    if len(value) != secret_size:
        raise InvalidLength(f"value must be {secret_size} bytes, got {len(value)}")
    counters.add(chain_hashes=1)
    return kernels.chain_step(suite.chain_b, pub_seed, chain_index, step_index,
                              value, secret_size)


def message_digest(suite: HashSuite, signer_id: bytes, nonce: bytes,
                   leaf_digest: bytes, message: bytes) -> bytes:
    """128-bit salted message digest.

    The salt is the signature's own public-key digest plus a fresh random
    nonce, binding the digest to the one-time key that signs it.
    """
    if len(signer_id) != 8 or len(nonce) != 16 or len(leaf_digest) != 32:
        raise InvalidLength("signer_id/nonce/leaf_digest have fixed sizes 8/16/32")
    counters.add(wide_hashes=1)
    return kernels.message_digest(suite.wide_b, signer_id, nonce, leaf_digest, message)


def expand_secrets(suite: HashSuite, sk_seed: bytes, key_index: int,
                   count: int, secret_size: int) -> list[bytes]:
    """Derive ``count`` pseudorandom secrets from a 32-byte seed.

    Counter-mode invocation of the wide hash under the SK tag, salted
    with the key index; deterministic for a fixed (seed, index).
    """
    if len(sk_seed) != 32:
        raise InvalidLength("sk_seed must be 32 bytes")
    if count < 1:
        raise ValueError("count must be >= 1")
    nbytes = count * secret_size
    counters.add(wide_hashes=(nbytes + 31) // 32)
    stream = kernels.expand_stream(suite.wide_b, sk_seed, key_index, nbytes)
    return [stream[i * secret_size:(i + 1) * secret_size] for i in range(count)]


def digest_stream(suite: HashSuite, signer_id: bytes, nonce: bytes,
                  leaf_digest: bytes, message: bytes, nbits: int) -> bytes:
    """Counter-mode expansion of message-digest inputs to ``nbits`` bits
    (rounded up to whole bytes); feeds subset-reveal index selection."""
    nbytes = (nbits + 7) // 8
    counters.add(wide_hashes=(nbytes + 31) // 32)
    return kernels.hors_stream(suite.wide_b, signer_id, nonce, leaf_digest,
                               message, nbytes)
