import statistics
import time

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from dsig.bench import bench_local, kernel_comparison
from dsig.certifier import Registry, SignerIdentity
from dsig.profiles import get_profile
from dsig.runtime import Endpoint
from dsig.wire import LoopbackHub


def test_bench_local_report_shape():
    report = bench_local(iters=50)
    assert "machine-dependent" in report
    assert "traditional signs during 50 signs: 0" in report
    assert "background keygen" in report


def test_kernel_comparison_runs_for_both_schemes():
    assert "keygen" in kernel_comparison("wots4", iters=30)
    assert "verify elements" in kernel_comparison("hors64", iters=30)


def test_slow_minus_fast_gap_is_one_traditional_verification():
    # the slow path adds one Ed25519 verification (plus a 7-node fold)
    # over the warm path; measure both and compare against the local
    # baseline with wide tolerance for scheduler noise
    alice = SignerIdentity.generate(b"\x31" * 8)
    bob = SignerIdentity.generate(b"\x32" * 8)
    registry = Registry()
    registry.add(alice.signer_id, alice.public_key)
    registry.add(bob.signer_id, bob.public_key)
    profile = get_profile("wots4", queue_threshold=384)
    hub = LoopbackHub()
    signer = Endpoint(alice, registry, profile, transport=hub.attach(alice.signer_id))
    verifier = Endpoint(bob, registry, profile, transport=hub.attach(bob.signer_id))
    signer.pump_background()
    verifier.pump_background()

    message = b"gap test"
    sigs = [signer.sign(message) for _ in range(300)]

    def median_verify():
        lat = []
        for sig in sigs:
            t0 = time.perf_counter()
            assert verifier.verify(message, sig, alice.signer_id)
            lat.append((time.perf_counter() - t0) * 1e6)
        return statistics.median(lat)

    fast = median_verify()
    verifier.drop_cached_batches()
    lat = []
    for sig in sigs:
        verifier.root_cache.clear()
        t0 = time.perf_counter()
        assert verifier.verify(message, sig, alice.signer_id)
        lat.append((time.perf_counter() - t0) * 1e6)
    slow = statistics.median(lat)

    sk = Ed25519PrivateKey.generate()
    ed_sig = sk.sign(message)
    pk = sk.public_key()
    lat = []
    for _ in range(300):
        t0 = time.perf_counter()
        pk.verify(ed_sig, message)
        lat.append((time.perf_counter() - t0) * 1e6)
    ed = statistics.median(lat)

    gap = slow - fast
    assert 0.3 * ed <= gap <= 3.0 * ed, (fast, slow, ed)
    signer.close()
    verifier.close()
