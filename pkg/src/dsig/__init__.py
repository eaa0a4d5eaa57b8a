"""Hybrid online/offline signatures for microsecond-scale signing.

One-time hash-based signatures do the per-message work; a traditional
signature certifies each batch of 128 one-time keys through a Merkle
root; a background plane pre-generates keys and pre-verifies
certificates so the foreground sign/verify path stays on hashing and
string comparisons.
"""

from ._backend import kernel_name
from .certifier import (
    BatchCertificate,
    Registry,
    SignerIdentity,
    VerifiedRootCache,
    certify_batch,
    check_or_verify_root,
    verify_certificate,
)
from .counters import counters
from .errors import (
    ConfigError,
    DsigError,
    EmptyBatch,
    FrameError,
    InvalidLength,
    KeyExhausted,
    MalformedSignature,
    UnknownSigner,
)
from .hashing import DEFAULT_SUITE, HashSuite
from .profiles import PROFILES, SchemeProfile, get_profile
from .runtime import Endpoint, VerifierGroup
from .signature import STD128_SIG_SIZE, DSigSignature

__version__ = "0.1.0"

__all__ = [
    "BatchCertificate",
    "ConfigError",
    "DEFAULT_SUITE",
    "DSigSignature",
    "DsigError",
    "EmptyBatch",
    "Endpoint",
    "FrameError",
    "HashSuite",
    "InvalidLength",
    "KeyExhausted",
    "MalformedSignature",
    "PROFILES",
    "Registry",
    "STD128_SIG_SIZE",
    "SchemeProfile",
    "SignerIdentity",
    "UnknownSigner",
    "VerifiedRootCache",
    "VerifierGroup",
    "certify_batch",
    "check_or_verify_root",
    "counters",
    "get_profile",
    "kernel_name",
    "verify_certificate",
]
