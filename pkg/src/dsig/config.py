"""Line-oriented ``key = value`` configuration files.

Recognized keys::

    scheme = wots4 | hors32 | hors64
    hash_suite = blake2s:blake2b      (chain:wide, or one name for both)
    S = 512                           (queue threshold per group)
    batch_size = 128
    cache_batches_per_signer = 8
    sign_wait_us = 1000
    groups = 1:aabbccdd00112233,99aabbccddeeff00;2:aabbccdd00112233
    keyfile = registry.txt
    identity = signer.key
    listen = 0.0.0.0:7700
    peers = 99aabbccddeeff00@10.0.0.2:7700,..
    log = ops.log

Blank lines and ``#`` comments are ignored. Unknown keys are rejected so
typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .hashing import DEFAULT_SUITE, HashSuite
from .profiles import SchemeProfile, get_profile

_KNOWN = {"scheme", "hash_suite", "S", "batch_size", "cache_batches_per_signer",
          "sign_wait_us", "groups", "keyfile", "identity", "listen", "peers", "log"}


@dataclass
class RuntimeConfig:
    scheme: str = "wots4"
    hash_suite: HashSuite = DEFAULT_SUITE
    queue_threshold: int = 512
    batch_size: int = 128
    cache_batches_per_signer: int = 8
    sign_wait_us: int = 1000
    groups: list[tuple[int, frozenset[bytes]]] = field(default_factory=list)
    keyfile: str | None = None
    identity: str | None = None
    listen: str | None = None
    peers: dict[bytes, str] = field(default_factory=dict)
    log: str | None = None

    def profile(self) -> SchemeProfile:
        return get_profile(self.scheme, suite=self.hash_suite,
                           queue_threshold=self.queue_threshold,
                           batch_size=self.batch_size,
                           cache_batches_per_signer=self.cache_batches_per_signer,
                           sign_wait_us=self.sign_wait_us)


def _parse_signer_id(text: str, where: str) -> bytes:
    try:
        sid = bytes.fromhex(text)
    except ValueError:
        raise ConfigError(f"{where}: {text!r} is not a hex signer id") from None
    if len(sid) != 8:
        raise ConfigError(f"{where}: signer ids are 8 bytes, got {len(sid)}")
    return sid


def _parse_groups(value: str, where: str):
    groups = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        gid_text, _, member_text = part.partition(":")
        try:
            gid = int(gid_text)
        except ValueError:
            raise ConfigError(f"{where}: bad group id {gid_text!r}") from None
        members = frozenset(_parse_signer_id(m.strip(), where)
                            for m in member_text.split(",") if m.strip())
        if not members:
            raise ConfigError(f"{where}: group {gid} has no members")
        groups.append((gid, members))
    return groups


def parse(text: str, where: str = "<config>") -> RuntimeConfig:
    cfg = RuntimeConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        loc = f"{where}:{lineno}"
        if not sep or not value:
            raise ConfigError(f"{loc}: expected key = value")
        if key not in _KNOWN:
            raise ConfigError(f"{loc}: unknown key {key!r}")
        if key == "scheme":
            cfg.scheme = value
        elif key == "hash_suite":
            cfg.hash_suite = HashSuite.parse(value)
        elif key == "S":
            cfg.queue_threshold = int(value)
        elif key == "batch_size":
            cfg.batch_size = int(value)
        elif key == "cache_batches_per_signer":
            cfg.cache_batches_per_signer = int(value)
        elif key == "sign_wait_us":
            cfg.sign_wait_us = int(value)
        elif key == "groups":
            cfg.groups = _parse_groups(value, loc)
        elif key == "keyfile":
            cfg.keyfile = value
        elif key == "identity":
            cfg.identity = value
        elif key == "listen":
            cfg.listen = value
        elif key == "log":
            cfg.log = value
        elif key == "peers":
            for peer in value.split(","):
                peer = peer.strip()
                if not peer:
                    continue
                sid_text, _, addr = peer.partition("@")
                cfg.peers[_parse_signer_id(sid_text, loc)] = addr
    return cfg


def load(path: str) -> RuntimeConfig:
    with open(path) as fh:
        return parse(fh.read(), where=path)
