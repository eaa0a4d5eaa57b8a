"""Pure-Python hash kernels (reference implementation).

This module defines the byte-exact constructions used everywhere in the
library. The compiled extension (``dsig._ckernels``) implements the same
functions against OpenSSL and must produce identical bytes; the parity
test suite enforces that.

Hash backends
-------------
Every role consumes a 32-byte "wide" output of one of three backends:

====  =========  =======================================
 id    name       definition of ``wide32``
====  =========  =======================================
 0     sha256     SHA-256(data)
 1     blake2b    BLAKE2b-512(data) truncated to 32 bytes
 2     blake2s    BLAKE2s-256(data)
====  =========  =======================================

Domain separation
-----------------
Every hash input starts with one ASCII role tag (no tag is a prefix of
another): ``MSG`` message digests, ``SK`` secret expansion, ``CH`` chain
and element hashes, ``PK`` public-key digests, ``MERKLE`` tree nodes,
``ROOT`` certified batch roots. All integers are little-endian.

Constructions (ss = secret size in bytes):

* chain step        ``wide32(chain, "CH" || pub_seed16 || u32(chain_i) || u32(step_i) || value)[:ss]``
* secret block j    ``wide32(wide, "SK" || seed32 || u64(key_index) || u32(j))``
* chain pub seed    secret block with counter ``0xFFFFFFFF``, truncated to 16
* one-time pk digest ``wide32(wide, "PK" || pub_seed16 || chain_tops)`` (chained keys)
                     ``wide32(wide, "PK" || elements)``                 (subset-reveal keys)
* message digest    ``wide32(wide, "MSG" || signer8 || nonce16 || leaf32 || message)[:16]``
* index stream j    ``wide32(wide, "MSG" || signer8 || nonce16 || leaf32 || u32(j) || message)``
* element hash      ``wide32(chain, "CH" || u32(i) || secret)[:16]``
* tree node         ``wide32(wide, "MERKLE" || u32(level) || u32(index) || left || right)``

Digit encoding (Winternitz, d a power of two, w = log2 d):
the digest is read as a big-endian integer and sliced into l1 w-bit
digits most-significant-first (the leading digit is zero-padded when
w does not divide the digest length); the checksum
``sum(d-1-b_i)`` is appended as l2 base-d digits, also MSB-first.
Subset-reveal indices are MSB-first log2(t)-bit slices of the stream.
"""

from __future__ import annotations

import hashlib

IS_COMPILED = False

SHA256, BLAKE2B, BLAKE2S = 0, 1, 2

TAG_MSG = b"MSG"
TAG_SK = b"SK"
TAG_CH = b"CH"
TAG_PK = b"PK"
TAG_MERKLE = b"MERKLE"
TAG_ROOT = b"ROOT"

_PUB_SEED_COUNTER = 0xFFFFFFFF


def wide32(backend: int, data: bytes) -> bytes:
    if backend == SHA256:
        return hashlib.sha256(data).digest()
    if backend == BLAKE2B:
        return hashlib.blake2b(data).digest()[:32]
    if backend == BLAKE2S:
        return hashlib.blake2s(data).digest()
    raise ValueError(f"unknown hash backend id {backend}")


def chain_step(chain_b: int, pub_seed: bytes, chain_index: int, step_index: int,
               value: bytes, ss: int) -> bytes:
    data = (TAG_CH + pub_seed + chain_index.to_bytes(4, "little")
            + step_index.to_bytes(4, "little") + value)
    return wide32(chain_b, data)[:ss]


def sk_block(wide_b: int, seed: bytes, key_index: int, counter: int) -> bytes:
    data = (TAG_SK + seed + key_index.to_bytes(8, "little")
            + counter.to_bytes(4, "little"))
    return wide32(wide_b, data)


def expand_stream(wide_b: int, seed: bytes, key_index: int, nbytes: int) -> bytes:
    blocks = []
    for j in range((nbytes + 31) // 32):
        blocks.append(sk_block(wide_b, seed, key_index, j))
    return b"".join(blocks)[:nbytes]


def derive_pub_seed(wide_b: int, seed: bytes, key_index: int) -> bytes:
    return sk_block(wide_b, seed, key_index, _PUB_SEED_COUNTER)[:16]


def message_digest(wide_b: int, signer_id: bytes, nonce: bytes, leaf: bytes,
                   message: bytes) -> bytes:
    return wide32(wide_b, TAG_MSG + signer_id + nonce + leaf + message)[:16]


def hors_stream(wide_b: int, signer_id: bytes, nonce: bytes, leaf: bytes,
                message: bytes, nbytes: int) -> bytes:
    blocks = []
    for j in range((nbytes + 31) // 32):
        blocks.append(wide32(wide_b, TAG_MSG + signer_id + nonce + leaf
                             + j.to_bytes(4, "little") + message))
    return b"".join(blocks)[:nbytes]


# ---------------------------------------------------------------------------
# Winternitz digit arithmetic


def _wots_digits(md: bytes, digest_bits: int, d: int, l1: int, l2: int) -> list[int]:
    w = d.bit_length() - 1
    value = int.from_bytes(md[: digest_bits // 8], "big")
    digits = [(value >> ((l1 - 1 - i) * w)) & (d - 1) for i in range(l1)]
    csum = sum(d - 1 - b for b in digits)
    digits += [(csum >> ((l2 - 1 - j) * w)) & (d - 1) for j in range(l2)]
    return digits


def _wots_shape(digest_bits: int, d: int) -> tuple[int, int, int]:
    w = d.bit_length() - 1
    l1 = -(-digest_bits // w)
    x, l2 = l1 * (d - 1), 1
    while x >= d:
        x //= d
        l2 += 1
    return l1, l2, l1 + l2


def wots_keygen(chain_b: int, wide_b: int, seed: bytes, key_index: int,
                digest_bits: int, d: int, ss: int):
    """Generate one chained key: secrets, full chain cache, pk digest.

    Returns (pub_seed, cache, leaf, n_chain, n_wide). The cache holds all
    intermediate chain values contiguously: chain i depth j lives at
    offset (i*d + j)*ss; depth 0 is the secret, depth d-1 the chain top.
    """
    l1, l2, chains = _wots_shape(digest_bits, d)
    pub_seed = derive_pub_seed(wide_b, seed, key_index)
    secrets = expand_stream(wide_b, seed, key_index, chains * ss)
    n_wide = (chains * ss + 31) // 32 + 1

    cache = bytearray(chains * d * ss)
    tops = bytearray(chains * ss)
    for i in range(chains):
        v = secrets[i * ss:(i + 1) * ss]
        base = i * d * ss
        cache[base:base + ss] = v
        for j in range(1, d):
            v = chain_step(chain_b, pub_seed, i, j - 1, v, ss)
            cache[base + j * ss:base + (j + 1) * ss] = v
        tops[i * ss:(i + 1) * ss] = v
    leaf = wide32(wide_b, TAG_PK + pub_seed + bytes(tops))
    return pub_seed, bytes(cache), leaf, chains * (d - 1), n_wide + 1


def wots_gather(cache: bytes, md: bytes, digest_bits: int, d: int, ss: int) -> bytes:
    """Copy-only signing: select cache[i][digit_i] for every chain."""
    l1, l2, chains = _wots_shape(digest_bits, d)
    digits = _wots_digits(md, digest_bits, d, l1, l2)
    out = bytearray(chains * ss)
    for i, b in enumerate(digits):
        off = (i * d + b) * ss
        out[i * ss:(i + 1) * ss] = cache[off:off + ss]
    return bytes(out)


def wots_finish(chain_b: int, wide_b: int, pub_seed: bytes, payload: bytes,
                md: bytes, digest_bits: int, d: int, ss: int):
    """Complete every chain to its top and recompute the pk digest.

    Returns (leaf_candidate, n_chain_steps).
    """
    l1, l2, chains = _wots_shape(digest_bits, d)
    if len(payload) != chains * ss:
        raise ValueError("payload length mismatch")
    digits = _wots_digits(md, digest_bits, d, l1, l2)
    tops = bytearray(chains * ss)
    steps = 0
    for i, b in enumerate(digits):
        v = payload[i * ss:(i + 1) * ss]
        for j in range(b, d - 1):
            v = chain_step(chain_b, pub_seed, i, j, v, ss)
        steps += d - 1 - b
        tops[i * ss:(i + 1) * ss] = v
    leaf = wide32(wide_b, TAG_PK + pub_seed + bytes(tops))
    return leaf, steps


def wots_sign_assemble(wide_b: int, digest_bits: int, d: int, ss: int,
                       scheme: bytes, nonce: bytes, mid: bytes, tail: bytes,
                       cache: bytes, signer_id: bytes, message: bytes) -> bytes:
    """Assemble a full serialized signature (hot path; one wide hash).

    ``mid`` is the static pub_seed||batch_seq||leaf_index run and ``tail``
    the static leaf||proof||root_sig run, both precomputed per key.
    """
    leaf = tail[:32]
    md = message_digest(wide_b, signer_id, nonce, leaf, message)
    payload = wots_gather(cache, md, digest_bits, d, ss)
    return b"".join((scheme, nonce, mid, payload, tail))


# ---------------------------------------------------------------------------
# Subset-reveal (few-time) kernels


def hors_indices_from_stream(stream: bytes, k: int, logt: int) -> list[int]:
    value = int.from_bytes(stream, "big")
    total = 8 * len(stream)
    mask = (1 << logt) - 1
    return [(value >> (total - (j + 1) * logt)) & mask for j in range(k)]


def hors_element(chain_b: int, index: int, secret: bytes) -> bytes:
    return wide32(chain_b, TAG_CH + index.to_bytes(4, "little") + secret)[:16]


def hors_keygen(chain_b: int, wide_b: int, seed: bytes, key_index: int, t: int):
    """Generate a subset-reveal key: t secrets, t hashed elements, pk digest.

    Returns (secrets, elements, leaf, n_chain, n_wide).
    """
    secrets = expand_stream(wide_b, seed, key_index, t * 16)
    elements = bytearray(t * 16)
    for i in range(t):
        elements[i * 16:(i + 1) * 16] = hors_element(chain_b, i, secrets[i * 16:(i + 1) * 16])
    leaf = wide32(wide_b, TAG_PK + bytes(elements))
    return secrets, bytes(elements), leaf, t, (t * 16 + 31) // 32 + 1


def hors_payload(secrets: bytes, elements: bytes, indices: list[int], t: int) -> bytes:
    """revealed secrets (duplicates repeated) followed by the factorized
    companion: the pk elements at every position not revealed, in order."""
    revealed = b"".join(secrets[i * 16:(i + 1) * 16] for i in indices)
    hit = set(indices)
    companion = b"".join(elements[p * 16:(p + 1) * 16] for p in range(t) if p not in hit)
    return revealed + companion


def hors_sign_assemble(wide_b: int, t: int, k: int, logt: int,
                       scheme: bytes, nonce: bytes, mid: bytes, tail: bytes,
                       secrets: bytes, elements: bytes,
                       signer_id: bytes, message: bytes) -> bytes:
    leaf = tail[:32]
    nbytes = (k * logt + 7) // 8
    stream = hors_stream(wide_b, signer_id, nonce, leaf, message, nbytes)
    indices = hors_indices_from_stream(stream, k, logt)
    payload = hors_payload(secrets, elements, indices, t)
    return b"".join((scheme, nonce, mid, payload, tail))


def hors_finish(chain_b: int, wide_b: int, t: int, k: int,
                payload: bytes, stream: bytes):
    """Rebuild the full element array from a signature and hash it.

    Returns (leaf_candidate, n_chain) or (None, n_chain) when the payload
    is inconsistent with the indices the stream dictates (wrong companion
    length, or two reveals of one index that disagree).
    """
    logt = t.bit_length() - 1
    indices = hors_indices_from_stream(stream, k, logt)
    if len(payload) < k * 16:
        return None, 0
    elements = [b""] * t
    n_chain = 0
    for j, idx in enumerate(indices):
        e = hors_element(chain_b, idx, payload[j * 16:(j + 1) * 16])
        n_chain += 1
        if elements[idx] and elements[idx] != e:
            return None, n_chain
        elements[idx] = e
    unique = sum(1 for e in elements if e)
    companion = payload[k * 16:]
    if len(companion) != (t - unique) * 16:
        return None, n_chain
    pos = 0
    for p in range(t):
        if not elements[p]:
            elements[p] = companion[pos:pos + 16]
            pos += 16
    leaf = wide32(wide_b, TAG_PK + b"".join(elements))
    return leaf, n_chain


# ---------------------------------------------------------------------------
# Merkle folding (slow verification path)


def merkle_node(wide_b: int, level: int, index: int, left: bytes, right: bytes) -> bytes:
    return wide32(wide_b, TAG_MERKLE + level.to_bytes(4, "little")
                  + index.to_bytes(4, "little") + left + right)


def merkle_fold(wide_b: int, leaf: bytes, index: int, siblings: bytes) -> bytes:
    """Fold a leaf up an inclusion proof; returns the implied root."""
    node = leaf
    for lvl in range(len(siblings) // 32):
        sib = siblings[lvl * 32:(lvl + 1) * 32]
        if index & 1:
            left, right = sib, node
        else:
            left, right = node, sib
        index >>= 1
        node = merkle_node(wide_b, lvl + 1, index, left, right)
    return node
