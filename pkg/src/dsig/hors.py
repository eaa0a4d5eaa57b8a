"""Subset-reveal few-time signatures (one use per key here).

A key is t secrets; the public key is the t element-wise hashes. The
message digest stream selects k indices and the signature reveals the
secrets at those indices (duplicates repeated, so the revealed run has a
fixed size). Two public-key compression strategies exist:

* factorized: the signature carries the pk elements that cannot be
  deduced from the revealed secrets, so the verifier can rebuild the
  whole element array and recompress the public-key digest. This is the
  runtime-usable variant.
* merklified: the pk elements are arranged in a two-subtree Merkle
  forest of 16-byte nodes and the signature carries inclusion proofs.
  Cheaper to transmit for small k but far more background hashing; kept
  for the parameter analyzer and size model only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from ._backend import kernels
from .counters import counters
from .errors import InvalidLength
from .hashing import HashSuite

SECRET_SIZE = 16


@dataclass(frozen=True)
class HorsParams:
    """k secrets revealed per signature out of t total, single use.

    Without an explicit t, sizing solves k*log2(t/k) = 128, i.e.
    t = k * 2^(128/k), so supported k divide 128.
    """

    k: int
    t: int = 0

    def __post_init__(self):
        if self.t == 0:
            if 128 % self.k:
                raise ValueError("k must divide 128 when t is derived")
            object.__setattr__(self, "t", self.k * (1 << (128 // self.k)))
        if self.t & (self.t - 1):
            raise ValueError("t must be a power of two")

    @cached_property
    def logt(self) -> int:
        return self.t.bit_length() - 1

    @property
    def digest_bits(self) -> int:
        return self.k * self.logt

    @property
    def payload_size(self) -> int:
        # revealed + factorized companion, when all k indices are distinct
        return self.t * SECRET_SIZE

    @property
    def keygen_hashes(self) -> int:
        return self.t


@dataclass(frozen=True)
class HorsKeyPair:
    params: HorsParams
    key_index: int
    secrets: bytes        # t * 16 bytes
    pk_elements: bytes    # t * 16 bytes, element i = H(i || secret_i)
    leaf_digest: bytes

    def secret(self, i: int) -> bytes:
        return self.secrets[i * 16:(i + 1) * 16]

    def element(self, i: int) -> bytes:
        return self.pk_elements[i * 16:(i + 1) * 16]


@dataclass(frozen=True)
class HorsSignature:
    """revealed secrets (k * 16 B) plus the factorized companion: every
    pk element not deducible from the reveals, in index order."""

    revealed: bytes
    companion: bytes

    @property
    def payload(self) -> bytes:
        return self.revealed + self.companion


def hors_indices(params: HorsParams, digest_stream: bytes) -> list[int]:
    """k indices of log2(t) bits each, MSB first; duplicates permitted."""
    need = (params.digest_bits + 7) // 8
    if len(digest_stream) < need:
        raise InvalidLength(f"stream must supply {need} bytes, got {len(digest_stream)}")
    return kernels.hors_indices_from_stream(digest_stream[:need], params.k, params.logt)


def keygen(params: HorsParams, suite: HashSuite, sk_seed: bytes,
           key_index: int) -> HorsKeyPair:
    """Costs exactly t element hashes."""
    if len(sk_seed) != 32:
        raise InvalidLength("sk_seed must be 32 bytes")
    secrets, elements, leaf, n_chain, n_wide = kernels.hors_keygen(
        suite.chain_b, suite.wide_b, sk_seed, key_index, params.t)
    counters.add(chain_hashes=n_chain, wide_hashes=n_wide)
    return HorsKeyPair(params, key_index, secrets, elements, leaf)


def sign(kp: HorsKeyPair, digest_stream: bytes) -> HorsSignature:
    """Copy-only: reveal the selected secrets, attach the companion."""
    indices = hors_indices(kp.params, digest_stream)
    payload = kernels.hors_payload(kp.secrets, kp.pk_elements, indices, kp.params.t)
    k16 = kp.params.k * 16
    return HorsSignature(payload[:k16], payload[k16:])


def verify_to_leaf(params: HorsParams, suite: HashSuite, sig: HorsSignature,
                   digest_stream: bytes) -> bytes | None:
    """Rebuild the full public key and return its digest.

    Costs exactly k element hashes. Returns None when the companion
    length does not match the indices the stream dictates, or when two
    reveals of the same index disagree.
    """
    need = (params.digest_bits + 7) // 8
    if len(digest_stream) < need:
        raise InvalidLength(f"stream must supply {need} bytes")
    leaf, n_chain = kernels.hors_finish(
        suite.chain_b, suite.wide_b, params.t, params.k,
        sig.payload, digest_stream[:need])
    counters.add(chain_hashes=n_chain, wide_hashes=1 if leaf is not None else 0)
    return leaf


# ---------------------------------------------------------------------------
# Merklified public keys (analyzer / size model only)


@dataclass(frozen=True)
class HorsForest:
    """Two-subtree Merkle forest over the pk elements, 16-byte nodes.

    ``levels[0]`` is the element array; the top level holds the two
    subtree roots. Building costs t-2 node hashes, so a merklified key
    costs 2t-2 background hashes end to end (t element hashes in keygen
    plus the forest).
    """

    params: HorsParams
    levels: tuple[tuple[bytes, ...], ...]

    @property
    def roots(self) -> tuple[bytes, bytes]:
        return self.levels[-1][0], self.levels[-1][1]

    @property
    def proof_depth(self) -> int:
        return self.params.logt - 1

    def prove(self, index: int) -> list[bytes]:
        """Siblings bottom-up; copy-only."""
        return [self.levels[lvl][(index >> lvl) ^ 1] for lvl in range(self.proof_depth)]


def merklify_pk(suite: HashSuite, kp: HorsKeyPair) -> HorsForest:
    params = kp.params
    if params.t < 4:
        raise ValueError("forest needs t >= 4")
    level = tuple(kp.element(i) for i in range(params.t))
    levels = [level]
    for lvl in range(1, params.logt):
        nxt = []
        for i in range(len(level) // 2):
            node = kernels.merkle_node(suite.wide_b, lvl, i,
                                       level[2 * i], level[2 * i + 1])[:16]
            nxt.append(node)
        counters.add(merkle_hashes=len(nxt))
        level = tuple(nxt)
        levels.append(level)
    return HorsForest(params, tuple(levels))


def verify_forest_proof(suite: HashSuite, params: HorsParams, element: bytes,
                        index: int, siblings: list[bytes],
                        roots: tuple[bytes, bytes]) -> bool:
    node = element
    for lvl, sib in enumerate(siblings):
        left, right = (sib, node) if (index >> lvl) & 1 else (node, sib)
        node = kernels.merkle_node(suite.wide_b, lvl + 1, (index >> lvl) >> 1,
                                   left, right)[:16]
        counters.add(merkle_hashes=1)
    return node == roots[index >> len(siblings)]
