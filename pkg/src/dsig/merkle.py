"""Binary Merkle trees over 32-byte leaf digests for batch certification.

The whole node array is kept after building, so producing an inclusion
proof is a pure copy and a verifier holding a pre-built tree can check
membership with a single string comparison. Internal nodes are hashed
with level and index tweaks, which blocks leaf/internal-node confusion.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels
from .counters import counters
from .errors import EmptyBatch
from .hashing import HashSuite

ZERO_LEAF = bytes(32)


@dataclass(frozen=True)
class InclusionProof:
    leaf_index: int
    siblings: tuple[bytes, ...]   # bottom-up

    def pack(self) -> bytes:
        return b"".join(self.siblings)

    @classmethod
    def unpack(cls, leaf_index: int, blob: bytes) -> "InclusionProof":
        return cls(leaf_index, tuple(blob[i:i + 32] for i in range(0, len(blob), 32)))


@dataclass(frozen=True)
class MerkleTree:
    """levels[0] are the leaves; levels[-1] is the single root."""

    levels: tuple[tuple[bytes, ...], ...]

    @property
    def leaf_count(self) -> int:
        return len(self.levels[0])

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    def leaf(self, index: int) -> bytes:
        return self.levels[0][index]


def build(suite: HashSuite, leaves: list[bytes]) -> MerkleTree:
    """Build the full tree; costs leaf_count - 1 node hashes.

    The leaf count must be a power of two; a final partial batch is the
    caller's to pad (the certifier pads with the all-zero digest).
    """
    n = len(leaves)
    if n == 0:
        raise EmptyBatch("cannot build a tree over zero leaves")
    if n & (n - 1):
        raise ValueError("leaf count must be a power of two")
    level = tuple(bytes(leaf) for leaf in leaves)
    levels = [level]
    lvl = 0
    while len(level) > 1:
        lvl += 1
        nxt = tuple(
            kernels.merkle_node(suite.wide_b, lvl, i, level[2 * i], level[2 * i + 1])
            for i in range(len(level) // 2))
        counters.add(merkle_hashes=len(nxt))
        levels.append(nxt)
        level = nxt
    return MerkleTree(tuple(levels))


def prove(tree: MerkleTree, leaf_index: int) -> InclusionProof:
    """Copy the sibling path out of the cached node array; zero hashes."""
    if not 0 <= leaf_index < tree.leaf_count:
        raise IndexError(f"leaf index {leaf_index} out of range")
    siblings = tuple(tree.levels[lvl][(leaf_index >> lvl) ^ 1]
                     for lvl in range(tree.depth))
    return InclusionProof(leaf_index, siblings)


def verify_proof(suite: HashSuite, leaf_digest: bytes, proof: InclusionProof,
                 root: bytes) -> bool:
    """Fold the leaf upward through the siblings; costs depth hashes."""
    folded = fold(suite, leaf_digest, proof.leaf_index, proof.pack())
    return folded == root


def fold(suite: HashSuite, leaf_digest: bytes, leaf_index: int,
         packed_siblings: bytes) -> bytes:
    counters.add(merkle_hashes=len(packed_siblings) // 32)
    return kernels.merkle_fold(suite.wide_b, leaf_digest, leaf_index, packed_siblings)


def verify_against_cached(tree: MerkleTree, leaf_digest: bytes, leaf_index: int) -> bool:
    """Membership check against a pre-built tree: one string comparison,
    zero hashes. Only sound when the tree came from a verified batch."""
    if not 0 <= leaf_index < tree.leaf_count:
        raise IndexError(f"leaf index {leaf_index} out of range")
    return tree.levels[0][leaf_index] == leaf_digest
