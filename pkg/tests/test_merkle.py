import pytest

from dsig.counters import counters
from dsig.errors import EmptyBatch
from dsig.hashing import HashSuite
from dsig.merkle import (
    InclusionProof,
    build,
    prove,
    verify_against_cached,
    verify_proof,
)

SUITE = HashSuite()


def leaves_of(n, rng):
    return [rng.randbytes(32) for _ in range(n)]


def test_build_hash_budget_and_depth(rng):
    counters.reset()
    tree = build(SUITE, leaves_of(128, rng))
    assert counters.merkle_hashes == 127
    assert tree.depth == 7
    assert tree.leaf_count == 128
    assert len(tree.root) == 32


def test_two_leaf_tree_is_single_node(rng):
    from dsig._backend import kernels
    a, b = rng.randbytes(32), rng.randbytes(32)
    tree = build(SUITE, [a, b])
    assert tree.root == kernels.merkle_node(SUITE.wide_b, 1, 0, a, b)
    proof = prove(tree, 0)
    assert proof.siblings == (b,)


def test_permuting_leaves_changes_root(rng):
    leaves = leaves_of(8, rng)
    root = build(SUITE, leaves).root
    swapped = leaves[:]
    swapped[2], swapped[5] = swapped[5], swapped[2]
    assert build(SUITE, swapped).root != root


def test_build_input_validation(rng):
    with pytest.raises(EmptyBatch):
        build(SUITE, [])
    with pytest.raises(ValueError):
        build(SUITE, leaves_of(100, rng))


def test_prove_is_copy_only(rng):
    tree = build(SUITE, leaves_of(128, rng))
    counters.reset()
    proof = prove(tree, 77)
    assert counters.merkle_hashes == 0
    assert len(proof.pack()) == 7 * 32
    with pytest.raises(IndexError):
        prove(tree, 128)


def test_proof_roundtrip_every_leaf(rng):
    leaves = leaves_of(128, rng)
    tree = build(SUITE, leaves)
    for i in range(128):
        assert verify_proof(SUITE, leaves[i], prove(tree, i), tree.root)


def test_single_byte_corruptions_rejected(rng):
    leaves = leaves_of(128, rng)
    tree = build(SUITE, leaves)
    for _ in range(500):
        i = rng.randrange(128)
        proof = prove(tree, i)
        leaf, packed, root = leaves[i], bytearray(proof.pack()), tree.root
        target = rng.randrange(3)
        if target == 0:
            leaf = bytearray(leaf)
            leaf[rng.randrange(32)] ^= 1 + rng.randrange(255)
            leaf = bytes(leaf)
        elif target == 1:
            packed[rng.randrange(len(packed))] ^= 1 + rng.randrange(255)
        else:
            root = bytearray(root)
            root[rng.randrange(32)] ^= 1 + rng.randrange(255)
            root = bytes(root)
        tampered = InclusionProof.unpack(i, bytes(packed))
        assert not verify_proof(SUITE, leaf, tampered, root)


def test_proof_fails_for_other_leaf(rng):
    leaves = leaves_of(128, rng)
    tree = build(SUITE, leaves)
    proof = prove(tree, 3)
    assert not verify_proof(SUITE, leaves[4], proof, tree.root)


def test_cached_check_matches_proof_verdict(rng):
    leaves = leaves_of(128, rng)
    tree = build(SUITE, leaves)
    for i in range(128):
        proof = prove(tree, i)
        slow = verify_proof(SUITE, leaves[i], proof, tree.root)
        counters.reset()
        fast = verify_against_cached(tree, leaves[i], i)
        assert counters.merkle_hashes == 0
        assert fast == slow is True
        assert not verify_against_cached(tree, leaves[(i + 1) % 128], i)
    with pytest.raises(IndexError):
        verify_against_cached(tree, leaves[0], 200)


def test_random_forgeries_never_fold_to_root(rng):
    tree = build(SUITE, leaves_of(128, rng))
    for _ in range(100_000):
        leaf = rng.randbytes(32)
        proof = InclusionProof.unpack(rng.randrange(128), rng.randbytes(7 * 32))
        assert not verify_proof(SUITE, leaf, proof, tree.root)
