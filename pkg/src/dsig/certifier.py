"""Traditional-signature certification of one-time-key batches.

A signer accumulates 128 public-key digests, arranges them in a Merkle
tree and Ed25519-signs the root once, amortizing the expensive
traditional operation over the whole batch. The signed byte string binds
the signer id and the batch sequence number alongside the root, so a
certificate cannot be replayed across signers.

Verifiers keep a bounded cache of roots whose signature already checked
out; repeated slow-path verifications against the same batch (bulk audit
being the typical case) then cost zero traditional operations.
"""

from __future__ import annotations

import os
import threading
from collections import OrderedDict
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from . import merkle
from .counters import counters
from .errors import ConfigError, UnknownSigner
from .hashing import HashSuite
from .merkle import ZERO_LEAF

BATCH_SIZE = 128
ROOT_TAG = b"ROOT"


class Registry:
    """signer_id -> Ed25519 public key, the pre-installed PKI.

    Key file format: one record per line, ``signer_id_hex:ed25519_pubkey_hex``.
    """

    def __init__(self, entries: dict[bytes, Ed25519PublicKey] | None = None):
        self._keys: dict[bytes, Ed25519PublicKey] = dict(entries or {})

    def add(self, signer_id: bytes, public_key: Ed25519PublicKey) -> None:
        self._keys[signer_id] = public_key

    def get(self, signer_id: bytes) -> Ed25519PublicKey:
        try:
            return self._keys[signer_id]
        except KeyError:
            raise UnknownSigner(f"signer {signer_id.hex()} not in registry") from None

    def __contains__(self, signer_id: bytes) -> bool:
        return signer_id in self._keys

    def members(self) -> frozenset[bytes]:
        return frozenset(self._keys)

    @classmethod
    def load(cls, path: str) -> "Registry":
        reg = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    sid_hex, pk_hex = line.split(":")
                    sid = bytes.fromhex(sid_hex)
                    pk = Ed25519PublicKey.from_public_bytes(bytes.fromhex(pk_hex))
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{path}:{lineno}: bad registry record") from exc
                if len(sid) != 8:
                    raise ConfigError(f"{path}:{lineno}: signer id must be 8 bytes")
                reg.add(sid, pk)
        return reg

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            for sid, pk in sorted(self._keys.items()):
                raw = pk.public_bytes(Encoding.Raw, PublicFormat.Raw)
                fh.write(f"{sid.hex()}:{raw.hex()}\n")


@dataclass
class SignerIdentity:
    """A process's long-lived signing identity."""

    signer_id: bytes
    private_key: Ed25519PrivateKey

    @classmethod
    def generate(cls, signer_id: bytes | None = None) -> "SignerIdentity":
        return cls(signer_id or os.urandom(8), Ed25519PrivateKey.generate())

    @property
    def public_key(self) -> Ed25519PublicKey:
        return self.private_key.public_key()

    def save(self, path: str) -> None:
        raw = self.private_key.private_bytes(
            Encoding.Raw, PrivateFormat.Raw, NoEncryption())
        with open(path, "w") as fh:
            fh.write(f"{self.signer_id.hex()}:{raw.hex()}\n")

    @classmethod
    def load(cls, path: str) -> "SignerIdentity":
        with open(path) as fh:
            line = fh.readline().strip()
        try:
            sid_hex, sk_hex = line.split(":")
            sid = bytes.fromhex(sid_hex)
            sk = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(sk_hex))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: bad identity record") from exc
        return cls(sid, sk)


@dataclass(frozen=True)
class BatchCertificate:
    """A certified batch: the unit of background propagation."""

    signer_id: bytes
    batch_seq: int
    leaf_digests: tuple[bytes, ...]
    root: bytes
    root_sig: bytes


def root_message(signer_id: bytes, batch_seq: int, root: bytes) -> bytes:
    return ROOT_TAG + signer_id + batch_seq.to_bytes(8, "little") + root


def pad_leaves(leaf_digests: list[bytes] | tuple[bytes, ...],
               batch_size: int = BATCH_SIZE) -> list[bytes]:
    """Pad a final partial batch with the all-zero digest."""
    if not leaf_digests:
        raise merkle.EmptyBatch("empty key batch")
    if len(leaf_digests) > batch_size:
        raise ValueError(f"batch holds at most {batch_size} digests")
    return list(leaf_digests) + [ZERO_LEAF] * (batch_size - len(leaf_digests))


def batch_tree(suite: HashSuite, leaf_digests, batch_size: int = BATCH_SIZE):
    return merkle.build(suite, pad_leaves(leaf_digests, batch_size))


def sign_root(identity: SignerIdentity, batch_seq: int, root: bytes) -> bytes:
    counters.add(ed_signs=1)
    return identity.private_key.sign(root_message(identity.signer_id, batch_seq, root))


def certify_batch(identity: SignerIdentity, suite: HashSuite, leaf_digests,
                  batch_seq: int, batch_size: int = BATCH_SIZE) -> BatchCertificate:
    """One traditional signing operation per batch of keys."""
    tree = batch_tree(suite, leaf_digests, batch_size)
    sig = sign_root(identity, batch_seq, tree.root)
    return BatchCertificate(identity.signer_id, batch_seq, tuple(leaf_digests),
                            tree.root, sig)


def verify_root_sig(registry: Registry, signer_id: bytes, batch_seq: int,
                    root: bytes, root_sig: bytes) -> bool:
    """One traditional verification; raises UnknownSigner for strangers."""
    pk = registry.get(signer_id)
    counters.add(ed_verifies=1)
    try:
        pk.verify(root_sig, root_message(signer_id, batch_seq, root))
        return True
    except InvalidSignature:
        return False


def verify_certificate(registry: Registry, cert: BatchCertificate,
                       suite: HashSuite, batch_size: int = BATCH_SIZE) -> bool:
    """Recompute the root from the digests, then check its signature."""
    tree = batch_tree(suite, cert.leaf_digests, batch_size)
    if tree.root != cert.root:
        return False
    return verify_root_sig(registry, cert.signer_id, cert.batch_seq,
                           cert.root, cert.root_sig)


class VerifiedRootCache:
    """Bounded map of roots whose traditional signature already verified.

    Keyed by root; the entry pins the exact (signer, batch_seq, root_sig)
    tuple that passed, and a hit requires all three to match, so a hit can
    never accept what a fresh verification would reject. Honest signers
    emit one deterministic signature per root, so the binding costs no
    extra traditional work in normal operation."""

    def __init__(self, capacity: int = 4096):
        self.capacity = capacity
        self._entries: OrderedDict[bytes, tuple[bytes, int, bytes]] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, root: bytes) -> bool:
        return root in self._entries

    def hit(self, root: bytes, signer_id: bytes, batch_seq: int,
            root_sig: bytes) -> bool:
        return self._entries.get(root) == (signer_id, batch_seq, root_sig)

    def insert(self, root: bytes, signer_id: bytes, batch_seq: int,
               root_sig: bytes) -> None:
        with self._lock:
            self._entries[root] = (signer_id, batch_seq, root_sig)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def roots(self) -> list[bytes]:
        return list(self._entries)


def check_or_verify_root(cache: VerifiedRootCache, registry: Registry,
                         signer_id: bytes, batch_seq: int, root: bytes,
                         root_sig: bytes) -> bool:
    """Cache hit: zero traditional operations. Miss: verify, then cache."""
    if cache.hit(root, signer_id, batch_seq, root_sig):
        return True
    if verify_root_sig(registry, signer_id, batch_seq, root, root_sig):
        cache.insert(root, signer_id, batch_seq, root_sig)
        return True
    return False
