"""Acceptance criteria, one test per criterion, at their stated tolerances.

Each test prints a PASS line with the measured values once its assertions
hold (run with ``pytest -v -s`` to watch them). The heavy fixtures are
module-scoped so the corpus of signed messages is built once.
"""

import statistics
import time

import numpy as np
import pytest

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from dsig import analyzer, kv, wire
from dsig.certifier import Registry, SignerIdentity
from dsig.counters import counters
from dsig.errors import KeyExhausted
from dsig.profiles import TOY16_PARAMS, get_profile
from dsig.runtime import Endpoint
from dsig.wire import LoopbackHub
from dsig.wots import encode_digits

MSG_SIZE = 8


def _report(criterion: int, text: str) -> None:
    print(f"\nACCEPTANCE {criterion:02d}: PASS - {text}")


def _parse_cell(cell: str) -> int:
    if cell.endswith("Mi"):
        return int(cell[:-2]) << 20
    if cell.endswith("Ki"):
        return int(cell[:-2]) << 10
    return int(cell.replace(",", ""))


# ---------------------------------------------------------------------------
# shared corpus: one signer, one verifier, 10k signed messages


class Corpus:
    def __init__(self):
        self.alice = SignerIdentity.generate(b"\xaa" * 8)
        self.bob = SignerIdentity.generate(b"\xbb" * 8)
        self.registry = Registry()
        self.registry.add(self.alice.signer_id, self.alice.public_key)
        self.registry.add(self.bob.signer_id, self.bob.public_key)
        # caches sized to retain the whole run: path checks force states
        # explicitly rather than through eviction pressure
        profile = get_profile("wots4", queue_threshold=1280,
                              cache_batches_per_signer=128)
        hub = LoopbackHub()
        self.announces: list[bytes] = []
        self.signer = Endpoint(self.alice, self.registry, profile,
                               transport=hub.attach(self.alice.signer_id),
                               sk_seed=b"\x33" * 32)
        bob_transport = hub.attach(self.bob.signer_id)
        self.verifier = Endpoint(self.bob, self.registry, profile,
                                 transport=bob_transport)
        deliver = self.verifier.deliver

        def record_and_deliver(ftype, body):
            self.announces.append(body)
            deliver(ftype, body)

        bob_transport.set_receiver(record_and_deliver)

        rng = np.random.default_rng(7)
        self.messages = [rng.bytes(MSG_SIZE) for _ in range(10_000)]
        self.sigs = []
        hint = frozenset({self.bob.signer_id})
        for message in self.messages:
            if self.signer.queue_depth() < 8:
                self.signer.pump_background()
            self.sigs.append(self.signer.sign(message, hint))
        self.signer.pump_background()
        self.verifier.pump_background()

    def rewarm(self):
        """Rebuild the verifier's batch cache from the recorded announces."""
        for body in self.announces:
            self.verifier.deliver(wire.FRAME_BATCH_ANNOUNCE, body)
        self.verifier.pump_background()


@pytest.fixture(scope="module")
def corpus():
    c = Corpus()
    yield c
    c.signer.close()
    c.verifier.close()


def _flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def _corrupt(message, raw, which, rng):
    """Flip one bit inside the named region; returns (message, raw)."""
    payload_end = 43 + 1224
    spans = {
        "message": (None, None),
        "nonce": (1, 17),
        "chains": (43, payload_end),
        "leaf": (payload_end, payload_end + 32),
        "proof": (payload_end + 32, payload_end + 32 + 224),
        "root_sig": (len(raw) - 64, len(raw)),
        "batch_seq": (33, 41),
    }
    lo, hi = spans[which]
    if which == "message":
        return _flip_bit(message, int(rng.integers(0, len(message) * 8))), raw
    bit = int(rng.integers(lo * 8, hi * 8))
    return message, _flip_bit(raw, bit)


# ---------------------------------------------------------------------------


def test_criterion_01_analytical_model_chained_rows():
    t0 = time.perf_counter()
    rows = {r.param: r for r in analyzer.analyze("wots")}
    elapsed = time.perf_counter() - t0
    expected_bg = {2: 136, 4: 204, 8: 322, 16: 525, 32: 868}
    expected_crit = {2: 68, 4: 102, 8: 161, 16: 263, 32: 434}
    expected_size = {2: 2808, 4: 1584, 8: 1188, 16: 990, 32: 864}
    for d, row in rows.items():
        assert row.bg_hashes == expected_bg[d]
        assert abs(row.critical_hashes - expected_crit[d]) <= 1
        assert abs(row.sig_bytes - expected_size[d]) <= 32
    assert elapsed < 1.0
    _report(1, f"5 chained rows match (bg exact, crit +-1, size +-32 B) "
               f"in {elapsed * 1e3:.1f} ms")


def test_criterion_02_analytical_model_subset_rows():
    t0 = time.perf_counter()
    fact = {r.param: r for r in analyzer.analyze("hors-f")}
    merk = {r.param: r for r in analyzer.analyze("hors-m")}
    elapsed = time.perf_counter() - t0

    assert {k: r.bg_hashes for k, r in fact.items()} == {
        8: 1 << 19, 16: 4096, 32: 512, 64: 256}            # derived t values
    assert {k: int(r.critical_hashes) for k, r in fact.items()} == {
        8: 8, 16: 16, 32: 32, 64: 64}
    # sizes check against the rendered table cells (large cells render in
    # Ki units, exactly like the analysis this reproduces); the exact byte
    # counts are additionally pinned to the t*16 + overhead formula
    for k, reference in ((16, 65536), (32, 8552), (64, 4456)):
        cell = analyzer.format_quantity(fact[k].sig_bytes)
        assert abs(_parse_cell(cell) - reference) <= 64, (k, cell)
    for k in (8, 16, 32, 64):
        t = fact[k].bg_hashes
        assert fact[k].sig_bytes == t * 16 + analyzer.HYBRID_OVERHEAD

    assert {k: r.bg_hashes for k, r in merk.items()} == {
        8: 2 * (1 << 19) - 2, 16: 8190, 32: 1022, 64: 510}   # 2t-2 exactly
    assert all(r.note for r in merk.values())                # reported, flagged
    assert elapsed < 1.0
    _report(2, f"subset-reveal rows match (t, critical, sizes, 2t-2 builds) "
               f"in {elapsed * 1e3:.1f} ms")


def test_criterion_03_roundtrips_and_forgery_rejection(corpus):
    t0 = time.perf_counter()
    signer_id = corpus.alice.signer_id
    verifier = corpus.verifier
    corpus.rewarm()
    for message, sig in zip(corpus.messages, corpus.sigs):
        assert verifier.verify(message, sig, signer_id)

    rng = np.random.default_rng(13)
    regions = ["message", "nonce", "chains", "leaf", "proof", "root_sig", "batch_seq"]
    rejected = 0
    for i in range(2000):
        message, sig = corpus.messages[i % 5000], corpus.sigs[i % 5000]
        which = regions[i % len(regions)]
        bad_msg, bad_raw = _corrupt(message, sig.raw, which, rng)
        # fast path state: batches cached
        assert not verifier.verify(bad_msg, bad_raw, signer_id), which
        rejected += 1
    # slow path state: batch cache emptied
    verifier.drop_cached_batches()
    rng = np.random.default_rng(13)
    for i in range(2000):
        message, sig = corpus.messages[i % 5000], corpus.sigs[i % 5000]
        which = regions[i % len(regions)]
        bad_msg, bad_raw = _corrupt(message, sig.raw, which, rng)
        assert not verifier.verify(bad_msg, bad_raw, signer_id), which
    corpus.rewarm()
    elapsed = time.perf_counter() - t0
    assert elapsed < 60
    _report(3, f"10,000 roundtrips accepted; 2,000 corruptions rejected on "
               f"both paths in {elapsed:.1f} s")


def test_criterion_04_checksum_soundness_brute_force():
    t0 = time.perf_counter()
    # digit vectors for the entire 16-bit digest space, packed one digit per
    # nibble so componentwise >= reduces to carry-free SWAR arithmetic
    packed = np.empty(1 << 16, dtype=np.uint64)
    for m in range(1 << 16):
        digits = encode_digits(TOY16_PARAMS, m.to_bytes(2, "big"))
        acc = 0
        for j, digit in enumerate(digits):
            acc |= digit << (4 * j)
        packed[m] = acc
    high = np.uint64(int("8" * 11, 16))

    # ((a | H) - b) & H == H  <=>  every nibble of a >= that nibble of b
    dominations = 0
    block = 256
    for start in range(0, 1 << 16, block):
        a = packed[start:start + block, None]
        hits = (((a | high) - packed[None, :]) & high) == high
        dominations += int(hits.sum())
    # only the reflexive pairs may dominate: any extra pair would let one
    # signature's chains be advanced into another's
    assert dominations == 1 << 16
    elapsed = time.perf_counter() - t0
    assert elapsed < 120
    _report(4, f"all 2^32 ordered digest pairs checked by SWAR sweep, "
               f"only reflexive dominations, in {elapsed:.1f} s")


def test_criterion_05_path_equivalence(corpus):
    signer_id = corpus.alice.signer_id
    verifier = corpus.verifier
    rng = np.random.default_rng(29)
    regions = ["message", "nonce", "chains", "leaf", "proof", "root_sig", "batch_seq"]
    inputs = []
    for i in range(1000):
        inputs.append((corpus.messages[i], corpus.sigs[i].raw, True))
    for i in range(1000):
        message, sig = corpus.messages[i], corpus.sigs[i]
        bad_msg, bad_raw = _corrupt(message, sig.raw, regions[i % len(regions)], rng)
        inputs.append((bad_msg, bad_raw, False))

    def run_pass():
        return [verifier.verify(m, raw, signer_id) for m, raw, _ in inputs]

    corpus.rewarm()
    warm = run_pass()
    # evicted: drop half the batches, keep the root cache warm
    seqs = verifier.cached_batches(signer_id)
    per_signer = verifier._batches[signer_id]
    for seq in seqs[: len(seqs) // 2]:
        per_signer.pop(seq)
    evicted = run_pass()
    # cold: no batches, no verified roots
    verifier.drop_cached_batches()
    verifier.root_cache.clear()
    cold = run_pass()
    corpus.rewarm()

    for i, (m, raw, should_accept) in enumerate(inputs):
        assert warm[i] == evicted[i] == cold[i], f"input {i} diverged"
        assert warm[i] == should_accept
    _report(5, "2,000 inputs gave identical verdicts under warm, evicted "
               "and cold cache states")


def test_criterion_06_foreground_purity(corpus):
    signer, verifier = corpus.signer, corpus.verifier
    signer_id = corpus.alice.signer_id
    corpus.rewarm()
    message = b"purity!!"

    signer.pump_background()
    with counters.capture() as c:
        sig = signer.sign(message, {corpus.bob.signer_id})
    assert c.ed_signs == 0 and c.ed_verifies == 0
    assert c.chain_hashes == 0

    with counters.capture() as c:
        assert verifier.verify(message, sig, signer_id)
    assert c.ed_signs == 0 and c.ed_verifies == 0
    assert c.merkle_hashes == 0

    fast_forecasts = 0
    for i in range(1000):
        m, s = corpus.messages[i], corpus.sigs[i]
        if verifier.can_verify_fast(s, signer_id):
            fast_forecasts += 1
            with counters.capture() as c:
                assert verifier.verify(m, s, signer_id)
            assert c.ed_verifies == 0
    assert fast_forecasts == 1000
    _report(6, "sign: 0 traditional/0 chain; warm verify: 0 traditional/"
               "0 tree; fast forecast honored 1000/1000")


def test_criterion_07_relative_performance():
    # fresh endpoints at the recommended configuration
    alice = SignerIdentity.generate(b"\x0a" * 8)
    bob = SignerIdentity.generate(b"\x0b" * 8)
    registry = Registry()
    registry.add(alice.signer_id, alice.public_key)
    registry.add(bob.signer_id, bob.public_key)
    profile = get_profile("wots4", queue_threshold=1280,
                          cache_batches_per_signer=16)
    hub = LoopbackHub()
    signer = Endpoint(alice, registry, profile, transport=hub.attach(alice.signer_id))
    verifier = Endpoint(bob, registry, profile, transport=hub.attach(bob.signer_id))
    signer.pump_background()
    verifier.pump_background()

    message = b"\x5a" * MSG_SIZE
    hint = frozenset({bob.signer_id})
    iters = 1000

    import gc
    gc.collect()
    gc.disable()
    perf = time.perf_counter

    for _ in range(200):
        signer.sign(message, hint)               # warm up
    sign = signer.sign
    sigs = []
    lat = []
    for _ in range(iters):
        t0 = perf()
        sig = sign(message, hint)
        t1 = perf()
        sigs.append(sig)
        lat.append((t1 - t0) * 1e6)
    sign_med = statistics.median(lat)

    verify = verifier.verify
    signer_id = alice.signer_id
    lat = []
    for sig in sigs:
        t0 = perf()
        verify(message, sig, signer_id)
        t1 = perf()
        lat.append((t1 - t0) * 1e6)
    verify_med = statistics.median(lat)

    sk = Ed25519PrivateKey.generate()
    pk = sk.public_key()
    ed_sig = sk.sign(message)
    lat = []
    for _ in range(iters):
        t0 = perf()
        sk.sign(message)
        t1 = perf()
        lat.append((t1 - t0) * 1e6)
    ed_sign_med = statistics.median(lat)
    lat = []
    for _ in range(iters):
        t0 = perf()
        pk.verify(ed_sig, message)
        t1 = perf()
        lat.append((t1 - t0) * 1e6)
    ed_verify_med = statistics.median(lat)
    gc.enable()

    def throughput(fn, args, seconds=0.5):
        deadline = time.perf_counter() + seconds
        n = 0
        while time.perf_counter() < deadline:
            for _ in range(100):
                fn(*args)
            n += 100
        return n / (time.perf_counter() - deadline + seconds)

    verify_tput = throughput(verifier.verify, (message, sigs[0], alice.signer_id))
    ed_verify_tput = throughput(pk.verify, (ed_sig, message))

    signer.close()
    verifier.close()

    assert sign_med <= ed_sign_med / 10, (sign_med, ed_sign_med)
    assert verify_med <= ed_verify_med / 2, (verify_med, ed_verify_med)
    assert verify_tput > ed_verify_tput, (verify_tput, ed_verify_tput)
    _report(7, f"sign {sign_med:.2f} us vs ed25519 {ed_sign_med:.1f} "
               f"({ed_sign_med / sign_med:.0f}x, need >=10x); warm verify "
               f"{verify_med:.1f} us vs {ed_verify_med:.1f} "
               f"({ed_verify_med / verify_med:.1f}x, need >=2x); verify tput "
               f"{verify_tput / 1e3:.1f} vs {ed_verify_tput / 1e3:.1f} kops")


def test_criterion_08_background_amortization(corpus):
    alice = SignerIdentity.generate(b"\x18" * 8)
    registry = Registry()
    registry.add(alice.signer_id, alice.public_key)
    registry.add(corpus.bob.signer_id, corpus.bob.public_key)
    profile = get_profile("wots4", queue_threshold=512)
    hub = LoopbackHub()
    announce_bytes = []
    endpoint = Endpoint(alice, registry, profile, transport=hub.attach(alice.signer_id))
    sink = hub.attach(corpus.bob.signer_id)
    sink.set_receiver(lambda ftype, body: announce_bytes.append(len(body)))

    with counters.capture() as c:
        endpoint.pump_background()
    keys = endpoint.queue_depth()
    endpoint.close()

    assert keys == 512
    assert c.ed_signs == keys // 128 == 4        # one signing per 128 keys
    per_key = sum(announce_bytes) / keys
    assert per_key <= 40
    _report(8, f"{c.ed_signs} traditional signings for {keys} keys; "
               f"announcements amortize to {per_key:.1f} B/key (<= 40)")


def test_criterion_09_queue_semantics():
    alice = SignerIdentity.generate(b"\x19" * 8)
    registry = Registry()
    registry.add(alice.signer_id, alice.public_key)
    profile = get_profile("wots4", queue_threshold=512, sign_wait_us=200)
    endpoint = Endpoint(alice, registry, profile)
    endpoint.pump_background()
    endpoint.pause_background()

    signed = 0
    message = b"q" * 8
    try:
        for _ in range(513):
            endpoint.sign(message)
            signed += 1
    except KeyExhausted:
        pass
    assert signed == 512

    endpoint.resume_background()
    seen = set()
    total = 100_000
    remaining = total
    while remaining:
        endpoint.pump_background()
        burst = min(remaining, endpoint.queue_depth())
        for _ in range(burst):
            sig = endpoint.sign(message)
            pair = (sig.batch_seq, sig.leaf_index)
            assert pair not in seen
            seen.add(pair)
        remaining -= burst
    assert len(seen) == total
    endpoint.close()
    _report(9, f"paused plane allowed exactly 512 signs then exhausted; "
               f"{total} signatures without a repeated (batch, index) pair")


def test_criterion_10_kv_auditability(tmp_path):
    client_ident = SignerIdentity.generate(b"\xc1" * 8)
    server_ident = SignerIdentity.generate(b"\x5e" * 8)
    registry = Registry()
    registry.add(client_ident.signer_id, client_ident.public_key)
    registry.add(server_ident.signer_id, server_ident.public_key)
    log_path = tmp_path / "ops.log"

    profile = get_profile("wots4", queue_threshold=512, sign_wait_us=5_000_000)
    server = kv.KvServer("127.0.0.1:0", str(log_path), registry, profile,
                         identity=server_ident)
    server.start()
    client = kv.KvClient(f"127.0.0.1:{server.port}", client_ident, registry,
                         server_ident.signer_id, profile)
    rng = np.random.default_rng(31)
    ops = 10_000
    for i in range(ops):
        key = f"k{int(rng.integers(0, 500))}".encode()
        if rng.integers(0, 5) < 2:               # 40% writes
            assert client.put(key, f"v{i}".encode()) == kv.ST_OK
        else:
            client.get(key)
    state = server.state()
    client.close()
    server.close()

    report = kv.audit_log(str(log_path), registry)
    assert report.ok
    assert report.entries == ops
    assert report.verified == ops
    assert report.replayed == state

    # every distinct certified batch in the log costs exactly one
    # traditional verification
    data = log_path.read_bytes()
    distinct = set()
    offset = 0
    while offset < len(data):
        length = int.from_bytes(data[offset:offset + 4], "little")
        body = data[offset + 5:offset + 5 + length]
        sm = wire.decode_signed_msg(body)
        distinct.add(sm.signature.batch_seq)
        offset += 5 + length
    assert report.ed_verifications == len(distinct) == len(report.per_root)

    # tampering any single byte is caught at the exact entry
    spans = []
    offset = 0
    while offset < len(data):
        length = int.from_bytes(data[offset:offset + 4], "little")
        spans.append((offset + 5, offset + 5 + length))
        offset += 5 + length
    for trial in range(8):
        entry = int(rng.integers(0, len(spans)))
        lo, hi = spans[entry]
        corrupt = bytearray(data)
        corrupt[int(rng.integers(lo, hi))] ^= 1 + int(rng.integers(0, 255))
        bad = tmp_path / f"tampered{trial}.log"
        bad.write_bytes(corrupt)
        bad_report = kv.audit_log(str(bad), registry)
        assert not bad_report.ok
        assert [i for i, _ in bad_report.failures] == [entry]
    _report(10, f"{ops} ops audited; replay matches server state; "
                f"{report.ed_verifications} traditional verifications for "
                f"{len(distinct)} batches; 8/8 tamperings pinned to their entry")


def test_criterion_11_self_standing_signatures(corpus):
    # verifier whose background plane never ran
    carol = SignerIdentity.generate(b"\xcc" * 8)
    registry = Registry()
    registry.add(corpus.alice.signer_id, corpus.alice.public_key)
    registry.add(carol.signer_id, carol.public_key)
    verifier = Endpoint(carol, registry, "wots4", background="off")
    with counters.capture() as c:
        for message, sig in zip(corpus.messages[:1000], corpus.sigs[:1000]):
            assert not verifier.can_verify_fast(sig, corpus.alice.signer_id)
            assert verifier.verify(message, sig, corpus.alice.signer_id)
    batches = {s.batch_seq for s in corpus.sigs[:1000]}
    assert c.ed_verifies == len(batches)
    verifier.close()
    _report(11, f"1,000 signatures verified with no background plane "
                f"({c.ed_verifies} root verifications, one per batch)")
