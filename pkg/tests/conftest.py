import random

import pytest

from dsig.certifier import Registry, SignerIdentity
from dsig.counters import counters
from dsig.hashing import HashSuite
from dsig.profiles import get_profile
from dsig.runtime import Endpoint
from dsig.wire import LoopbackHub

SUITE = HashSuite()


@pytest.fixture(autouse=True)
def _reset_counters():
    counters.reset()
    yield


@pytest.fixture
def rng():
    return random.Random(0x5EED)


@pytest.fixture
def identities():
    alice = SignerIdentity.generate(b"\xaa" * 8)
    bob = SignerIdentity.generate(b"\xbb" * 8)
    registry = Registry()
    registry.add(alice.signer_id, alice.public_key)
    registry.add(bob.signer_id, bob.public_key)
    return alice, bob, registry


def make_pair(alice, bob, registry, scheme="wots4", queue_threshold=128, **overrides):
    """Signer/verifier endpoints joined by a loopback hub, manual background."""
    profile = get_profile(scheme, queue_threshold=queue_threshold, **overrides)
    hub = LoopbackHub()
    signer = Endpoint(alice, registry, profile,
                      transport=hub.attach(alice.signer_id),
                      sk_seed=b"\x11" * 32)
    verifier = Endpoint(bob, registry, profile,
                        transport=hub.attach(bob.signer_id),
                        sk_seed=b"\x22" * 32)
    signer.pump_background()
    verifier.pump_background()
    return signer, verifier


@pytest.fixture
def endpoint_pair(identities):
    alice, bob, registry = identities
    signer, verifier = make_pair(alice, bob, registry)
    yield signer, verifier
    signer.close()
    verifier.close()
