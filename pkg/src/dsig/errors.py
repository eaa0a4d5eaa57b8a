"""Exception types shared across the library."""


class DsigError(Exception):
    """Base class for all library errors."""


class InvalidLength(DsigError):
    """An input buffer does not have the declared length."""


class EmptyBatch(DsigError):
    """A Merkle tree or certificate was requested over zero leaves."""


class UnknownSigner(DsigError):
    """A signer id is not present in the key registry."""


class KeyExhausted(DsigError):
    """No pre-generated one-time key is available for the selected group."""


class MalformedSignature(DsigError):
    """A serialized signature cannot be parsed."""


class FrameError(DsigError):
    """A wire frame is truncated or structurally invalid."""


class ConfigError(DsigError):
    """A configuration file or value is invalid."""
