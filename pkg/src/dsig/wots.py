"""Winternitz one-time signatures with cached chains.

Key generation walks every chain from its secret to the top and keeps
all intermediate values, so signing is pure string copying (zero hash
invocations). Verification completes each chain from the revealed depth
to the top and recompresses the public-key digest.

Chain depths are powers of two, so digit extraction is exact bit
slicing. The digit vector is the message digest in base d followed by
the checksum ``sum(d-1-b_i)`` in base d, both most-significant-first;
the checksum guarantees no digit vector dominates another componentwise,
which is what makes one reveal per key safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from ._backend import kernels
from .counters import counters
from .errors import InvalidLength
from .hashing import HashSuite


@dataclass(frozen=True)
class WotsParams:
    """Chain layout for a given depth and digest width.

    l1 = ceil(digest_bits / log2 d) message chains, plus
    l2 = floor(log_d(l1*(d-1))) + 1 checksum chains.
    """

    d: int = 4
    digest_bits: int = 128
    secret_size: int = 18

    def __post_init__(self):
        if self.d < 2 or self.d & (self.d - 1):
            raise ValueError("chain depth must be a power of two >= 2")
        if self.digest_bits % 8:
            raise ValueError("digest_bits must be a multiple of 8")

    @cached_property
    def w(self) -> int:
        return self.d.bit_length() - 1

    @cached_property
    def l1(self) -> int:
        return -(-self.digest_bits // self.w)

    @cached_property
    def l2(self) -> int:
        x, l2 = self.l1 * (self.d - 1), 1
        while x >= self.d:
            x //= self.d
            l2 += 1
        return l2

    @cached_property
    def chains(self) -> int:
        return self.l1 + self.l2

    @property
    def signature_size(self) -> int:
        return self.chains * self.secret_size

    @property
    def keygen_hashes(self) -> int:
        return self.chains * (self.d - 1)

    @property
    def expected_verify_hashes(self) -> float:
        return self.chains * (self.d - 1) / 2

    def check_digest(self, digest: bytes) -> None:
        if len(digest) != self.digest_bits // 8:
            raise InvalidLength(
                f"digest must be {self.digest_bits // 8} bytes, got {len(digest)}")


@dataclass(frozen=True)
class WotsKeyPair:
    """One-time key with its full chain cache.

    ``cache`` stores chain i depth j at offset (i*d + j)*secret_size;
    depth 0 holds the secret, depth d-1 the chain top. A key pair signs
    at most one message; enforcement is the consuming queue's job.
    """

    params: WotsParams
    key_index: int
    pub_seed: bytes
    cache: bytes
    leaf_digest: bytes

    def chain_value(self, chain: int, depth: int) -> bytes:
        ss = self.params.secret_size
        off = (chain * self.params.d + depth) * ss
        return self.cache[off:off + ss]

    @property
    def secrets(self) -> list[bytes]:
        return [self.chain_value(i, 0) for i in range(self.params.chains)]


def encode_digits(params: WotsParams, digest: bytes) -> list[int]:
    """Digit vector (message digits then checksum digits, MSB first)."""
    params.check_digest(digest)
    w = params.w
    value = int.from_bytes(digest, "big")
    digits = [(value >> ((params.l1 - 1 - i) * w)) & (params.d - 1)
              for i in range(params.l1)]
    csum = sum(params.d - 1 - b for b in digits)
    digits += [(csum >> ((params.l2 - 1 - j) * w)) & (params.d - 1)
               for j in range(params.l2)]
    return digits


def keygen(params: WotsParams, suite: HashSuite, sk_seed: bytes,
           key_index: int) -> WotsKeyPair:
    """Deterministically generate a key pair with a populated chain cache.

    Costs exactly chains*(d-1) chain hashes.
    """
    if len(sk_seed) != 32:
        raise InvalidLength("sk_seed must be 32 bytes")
    pub_seed, cache, leaf, n_chain, n_wide = kernels.wots_keygen(
        suite.chain_b, suite.wide_b, sk_seed, key_index,
        params.digest_bits, params.d, params.secret_size)
    counters.add(chain_hashes=n_chain, wide_hashes=n_wide)
    return WotsKeyPair(params, key_index, pub_seed, cache, leaf)


def sign(kp: WotsKeyPair, digest: bytes) -> bytes:
    """Reveal cache[i][b_i] for every chain. Zero hash invocations."""
    kp.params.check_digest(digest)
    p = kp.params
    return kernels.wots_gather(kp.cache, digest, p.digest_bits, p.d, p.secret_size)


def verify_to_leaf(params: WotsParams, suite: HashSuite, pub_seed: bytes,
                   signature: bytes, digest: bytes) -> bytes:
    """Complete the chains and return the implied public-key digest.

    The caller compares the result against the expected leaf digest;
    costs sum(d-1-b_i) chain hashes, chains*(d-1)/2 in expectation.
    """
    params.check_digest(digest)
    if len(signature) != params.signature_size:
        raise InvalidLength(
            f"signature must be {params.signature_size} bytes, got {len(signature)}")
    leaf, steps = kernels.wots_finish(
        suite.chain_b, suite.wide_b, pub_seed, signature, digest,
        params.digest_bits, params.d, params.secret_size)
    counters.add(chain_hashes=steps, wide_hashes=1)
    return leaf
