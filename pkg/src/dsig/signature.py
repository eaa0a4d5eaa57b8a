"""Self-standing hybrid signature: layout and lazy field access.

Serialized layout (integers little-endian)::

    scheme_id     1 B   0x01 chained std128, 0x02 subset-reveal factorized
    nonce        16 B   fresh randomness salting the message digest
    pub_seed     16 B   chain tweak seed (zero for subset-reveal keys)
    batch_seq     8 B   certification batch sequence number
    leaf_index    2 B   position of the key inside its batch
    payload       var   revealed one-time-signature material
    leaf_digest  32 B   digest of the one-time public key (the tree leaf)
    proof      7*32 B   inclusion proof of the leaf in the batch tree
    root_sig     64 B   traditional signature over the batch root

Everything a verifier needs travels inside the signature, so knowledge
of the signer's traditional public key is the only prerequisite for
verification; background deliveries merely make it faster. The std128
layout is fixed at 1587 bytes.
"""

from __future__ import annotations

from .errors import MalformedSignature
from .profiles import (
    LEAF_LEN,
    ROOT_SIG_LEN,
    SCHEME_HORS_FACTORIZED,
    SCHEME_WOTS_STD128,
    SIG_PREFIX_LEN,
    resolve_hors_params,
)
from .wots import WotsParams

_STD128_PAYLOAD = WotsParams(d=4).signature_size   # 1224

#: serialized std128 signature size at the default batch depth
STD128_SIG_SIZE = SIG_PREFIX_LEN + _STD128_PAYLOAD + LEAF_LEN + 7 * 32 + ROOT_SIG_LEN


class DSigSignature:
    """Thin view over the serialized bytes; fields slice on demand."""

    __slots__ = ("raw", "payload_len", "proof_depth")

    def __init__(self, raw: bytes, payload_len: int, proof_depth: int):
        self.raw = raw
        self.payload_len = payload_len
        self.proof_depth = proof_depth

    @classmethod
    def from_bytes(cls, raw: bytes, proof_depth: int = 7) -> "DSigSignature":
        """Parse and structurally validate a serialized signature."""
        if len(raw) < SIG_PREFIX_LEN + LEAF_LEN + ROOT_SIG_LEN:
            raise MalformedSignature(f"{len(raw)} bytes is too short")
        scheme = raw[0]
        fixed = SIG_PREFIX_LEN + LEAF_LEN + proof_depth * 32 + ROOT_SIG_LEN
        if scheme == SCHEME_WOTS_STD128:
            if len(raw) != fixed + _STD128_PAYLOAD:
                raise MalformedSignature(
                    f"std128 signature must be {fixed + _STD128_PAYLOAD} bytes, got {len(raw)}")
            payload_len = _STD128_PAYLOAD
        elif scheme == SCHEME_HORS_FACTORIZED:
            payload_len = len(raw) - fixed
            resolve_hors_params(payload_len)   # raises if no layout fits
        else:
            raise MalformedSignature(f"unknown scheme id {scheme:#x}")
        return cls(raw, payload_len, proof_depth)

    def to_bytes(self) -> bytes:
        return self.raw

    def __len__(self):
        return len(self.raw)

    def __eq__(self, other):
        return isinstance(other, DSigSignature) and self.raw == other.raw

    @property
    def scheme_id(self) -> int:
        return self.raw[0]

    @property
    def nonce(self) -> bytes:
        return self.raw[1:17]

    @property
    def pub_seed(self) -> bytes:
        return self.raw[17:33]

    @property
    def batch_seq(self) -> int:
        return int.from_bytes(self.raw[33:41], "little")

    @property
    def leaf_index(self) -> int:
        return int.from_bytes(self.raw[41:43], "little")

    @property
    def payload(self) -> bytes:
        return self.raw[SIG_PREFIX_LEN:SIG_PREFIX_LEN + self.payload_len]

    @property
    def leaf_digest(self) -> bytes:
        off = SIG_PREFIX_LEN + self.payload_len
        return self.raw[off:off + 32]

    @property
    def proof(self) -> bytes:
        off = SIG_PREFIX_LEN + self.payload_len + LEAF_LEN
        return self.raw[off:off + self.proof_depth * 32]

    @property
    def root_sig(self) -> bytes:
        return self.raw[-ROOT_SIG_LEN:]
