"""Tunable parameter sets and their derived quantities.

A profile fixes everything two processes must agree on: the one-time
scheme and its parameters, the hash suite, the queue threshold S, the
certification batch size, and the verifier cache depth. The shipped
profiles are the runtime-usable configurations:

* ``wots4``  -- chained keys, depth 4, 144-bit secrets, 128-bit digests
  (the recommended default: 1587-byte signatures).
* ``hors32`` -- subset reveal, k=32 of t=512 (larger signatures, fewer
  critical hashes).
* ``hors64`` -- subset reveal, k=64 of t=256.

``TOY16_PARAMS`` (16-bit digests) and ``HORS_TOY_PARAMS`` (t=16, k=2)
are deliberately tiny layouts for exhaustive brute-force checks; they
are library-level parameter sets, not wire profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from .errors import ConfigError, MalformedSignature
from .hashing import DEFAULT_SUITE, HashSuite
from .hors import HorsParams
from .wots import WotsParams

SCHEME_WOTS_STD128 = 0x01
SCHEME_HORS_FACTORIZED = 0x02

#: scheme(1) + nonce(16) + pub_seed(16) + batch_seq(8) + leaf_index(2)
SIG_PREFIX_LEN = 43
#: leaf digest + root signature sizes shared by every layout
LEAF_LEN, ROOT_SIG_LEN = 32, 64

TOY16_PARAMS = WotsParams(d=4, digest_bits=16, secret_size=18)
HORS_TOY_PARAMS = HorsParams(k=2, t=16)


@dataclass(frozen=True)
class SchemeProfile:
    name: str
    scheme_id: int
    wots: WotsParams | None = None
    hors: HorsParams | None = None
    suite: HashSuite = DEFAULT_SUITE
    queue_threshold: int = 512          # S
    batch_size: int = 128
    cache_batches_per_signer: int = 8
    sign_wait_us: int = 1000

    def __post_init__(self):
        if (self.wots is None) == (self.hors is None):
            raise ValueError("profile needs exactly one of wots/hors params")
        if self.batch_size & (self.batch_size - 1):
            raise ValueError("batch_size must be a power of two")

    @property
    def kind(self) -> str:
        return "wots" if self.wots is not None else "hors"

    @cached_property
    def proof_depth(self) -> int:
        return self.batch_size.bit_length() - 1

    @cached_property
    def payload_size(self) -> int:
        # nominal: subset-reveal payloads grow 16 B per duplicated index
        if self.wots is not None:
            return self.wots.signature_size
        return self.hors.payload_size

    @cached_property
    def signature_size(self) -> int:
        return (SIG_PREFIX_LEN + self.payload_size + LEAF_LEN
                + self.proof_depth * 32 + ROOT_SIG_LEN)

    @property
    def cache_keys_per_signer(self) -> int:
        return self.cache_batches_per_signer * self.batch_size

    def with_suite(self, suite: HashSuite) -> "SchemeProfile":
        return replace(self, suite=suite)


def _builtin():
    return {
        "wots4": SchemeProfile("wots4", SCHEME_WOTS_STD128, wots=WotsParams(d=4)),
        "hors32": SchemeProfile("hors32", SCHEME_HORS_FACTORIZED, hors=HorsParams(k=32)),
        "hors64": SchemeProfile("hors64", SCHEME_HORS_FACTORIZED, hors=HorsParams(k=64)),
    }


PROFILES = _builtin()


def get_profile(name: str, suite: HashSuite | None = None, **overrides) -> SchemeProfile:
    try:
        profile = PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown scheme {name!r}; pick one of {sorted(PROFILES)}") from None
    if suite is not None:
        profile = profile.with_suite(suite)
    if overrides:
        profile = replace(profile, **overrides)
    return profile


def coerce_profile(profile: "SchemeProfile | str", **overrides) -> SchemeProfile:
    """Accept either a profile name or a ready profile; apply overrides."""
    if isinstance(profile, str):
        return get_profile(profile, **overrides)
    return replace(profile, **overrides) if overrides else profile


#: wire-recognized subset-reveal layouts, in resolution order
_HORS_WIRE = (HorsParams(k=32), HorsParams(k=64))


def resolve_hors_params(payload_len: int) -> HorsParams:
    """Recover (k, t) from a serialized payload length.

    A payload holds k revealed secrets plus t-u companion elements
    (u = distinct indices), so its length pins down the parameter set:
    the two wire layouts occupy disjoint ranges.
    """
    for params in _HORS_WIRE:
        lo = params.t * 16
        hi = (params.t + params.k - 1) * 16
        if lo <= payload_len <= hi and (payload_len - lo) % 16 == 0:
            return params
    raise MalformedSignature(f"no subset-reveal layout has payload {payload_len} B")
