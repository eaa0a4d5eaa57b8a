"""Microbenchmarks: hot-path latency, throughput, and an Ed25519 baseline.

Absolute numbers are machine-dependent; the ratios against the local
Ed25519 baseline are the meaningful output. The kernel comparison pits
the compiled extension against the pure-Python fallback on the same
inputs.
"""

from __future__ import annotations

import os
import statistics
import time

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from . import wire
from ._backend import kernels, pykernels
from .certifier import Registry, SignerIdentity
from .counters import counters
from .errors import FrameError
from .profiles import coerce_profile, get_profile
from .runtime import Endpoint
from .wire import LoopbackHub, TcpTransport


def _percentiles(samples_us: list[float]) -> dict:
    ordered = sorted(samples_us)
    n = len(ordered)
    return {
        "p10": ordered[n // 10],
        "median": statistics.median(ordered),
        "p90": ordered[(9 * n) // 10],
    }


def _fmt_lat(name: str, stats: dict) -> str:
    return (f"  {name:<26} median {stats['median']:8.2f} us   "
            f"p10 {stats['p10']:8.2f}   p90 {stats['p90']:8.2f}")


def _time_each(fn, args_iter) -> list[float]:
    out = []
    for args in args_iter:
        t0 = time.perf_counter()
        fn(*args)
        t1 = time.perf_counter()
        out.append((t1 - t0) * 1e6)
    return out


def _throughput(fn, args, seconds: float = 0.4) -> float:
    deadline = time.perf_counter() + seconds
    n = 0
    while time.perf_counter() < deadline:
        for _ in range(50):
            fn(*args)
        n += 50
    elapsed = time.perf_counter() - (deadline - seconds)
    return n / elapsed


def ed25519_baseline(iters: int, message: bytes) -> dict:
    sk = Ed25519PrivateKey.generate()
    pk = sk.public_key()
    sig = sk.sign(message)
    sign_lat = _time_each(sk.sign, ((message,) for _ in range(iters)))
    verify_lat = _time_each(pk.verify, ((sig, message) for _ in range(iters)))
    return {
        "sign": _percentiles(sign_lat),
        "verify": _percentiles(verify_lat),
        "sign_tput": _throughput(sk.sign, (message,)),
        "verify_tput": _throughput(pk.verify, (sig, message)),
    }


def bench_local(scheme: str = "wots4", iters: int = 2000,
                message_size: int = 8, compare_kernels: bool = False) -> str:
    message = os.urandom(message_size)
    # queue threshold rounded up so one steady state covers every iteration
    batches = -(-iters // 128) + 1
    profile = get_profile(scheme, queue_threshold=batches * 128)

    signer_ident = SignerIdentity.generate(b"\x01" * 8)
    verifier_ident = SignerIdentity.generate(b"\x02" * 8)
    registry = Registry()
    registry.add(signer_ident.signer_id, signer_ident.public_key)
    registry.add(verifier_ident.signer_id, verifier_ident.public_key)

    hub = LoopbackHub()
    signer = Endpoint(signer_ident, registry, profile,
                      transport=hub.attach(signer_ident.signer_id))
    verifier = Endpoint(verifier_ident, registry, profile,
                        transport=hub.attach(verifier_ident.signer_id))

    t0 = time.perf_counter()
    signer.pump_background()
    keygen_elapsed = time.perf_counter() - t0
    keys_made = signer.queue_depth()
    verifier.pump_background()

    hint = {verifier_ident.signer_id}
    sigs = []
    sign_lat = []
    with counters.capture() as during_sign:
        for _ in range(iters):
            t0 = time.perf_counter()
            sig = signer.sign(message, hint)
            t1 = time.perf_counter()
            sign_lat.append((t1 - t0) * 1e6)
            sigs.append(sig)

    fast_lat = _time_each(verifier.verify, ((message, s, signer.signer_id) for s in sigs))
    fast_tput = _throughput(verifier.verify, (message, sigs[0], signer.signer_id))

    # cold cache: no pre-verified batches, and a fresh root each time
    verifier.drop_cached_batches()
    slow_lat = []
    for s in sigs:
        verifier.root_cache.clear()
        t0 = time.perf_counter()
        verifier.verify(message, s, signer.signer_id)
        t1 = time.perf_counter()
        slow_lat.append((t1 - t0) * 1e6)

    base = ed25519_baseline(min(iters, 1000), message)

    sign_stats = _percentiles(sign_lat)
    fast_stats = _percentiles(fast_lat)
    slow_stats = _percentiles(slow_lat)
    keygen_rate = keys_made / keygen_elapsed
    sustained_sign = 1 / (1 / keygen_rate + sign_stats["median"] / 1e6)

    lines = [
        f"scheme {profile.name}, suite {profile.suite}, kernel "
        f"{'compiled' if kernels.IS_COMPILED else 'pure-python'}, "
        f"{iters} iterations, {message_size} B messages",
        "",
        "latency:",
        _fmt_lat("sign", sign_stats),
        _fmt_lat("verify (warm cache)", fast_stats),
        _fmt_lat("verify (cold cache)", slow_stats),
        _fmt_lat("ed25519 sign", base["sign"]),
        _fmt_lat("ed25519 verify", base["verify"]),
        "",
        "ratios (local ed25519 baseline = 1):",
        f"  sign speedup              {base['sign']['median'] / sign_stats['median']:.1f}x",
        f"  verify speedup (warm)     {base['verify']['median'] / fast_stats['median']:.1f}x",
        f"  cold-verify minus warm    {slow_stats['median'] - fast_stats['median']:.1f} us"
        f" (one ed25519 verification is {base['verify']['median']:.1f} us here)",
        "",
        "throughput (single core):",
        f"  verify                    {fast_tput / 1e3:8.1f} kops/s",
        f"  ed25519 verify            {base['verify_tput'] / 1e3:8.1f} kops/s",
        f"  sign, provisioned keys    {1e3 / sign_stats['median']:8.1f} kops/s",
        f"  sign, sustained (+keygen) {sustained_sign / 1e3:8.1f} kops/s",
        f"  background keygen         {keygen_rate / 1e3:8.1f} kkeys/s",
        "",
        "foreground purity (instrumented):",
        f"  traditional signs during {iters} signs: {during_sign.ed_signs}",
        f"  chain hashes during {iters} signs: {during_sign.chain_hashes}",
        "",
        "comparison columns (absolute values are machine-dependent):",
        f"  {'':<10}{'Sign us':>9}{'Verify us':>11}{'Sign Kops':>11}"
        f"{'Verify Kops':>13}{'Sig B':>7}{'Bg B/Sig':>10}",
        f"  {'ed25519':<10}{base['sign']['median']:>9.1f}{base['verify']['median']:>11.1f}"
        f"{base['sign_tput'] / 1e3:>11.0f}{base['verify_tput'] / 1e3:>13.0f}{64:>7}{0:>10}",
        f"  {'this':<10}{sign_stats['median']:>9.1f}{fast_stats['median']:>11.1f}"
        f"{sustained_sign / 1e3:>11.0f}{fast_tput / 1e3:>13.0f}"
        f"{len(sigs[0].raw):>7}{33:>10}",
    ]

    if compare_kernels:
        lines += ["", kernel_comparison(scheme)]

    signer.close()
    verifier.close()
    return "\n".join(lines)


def kernel_comparison(scheme: str = "wots4", iters: int = 300) -> str:
    """Same kernels, compiled versus pure-Python, identical inputs."""
    profile = get_profile(scheme)
    suite = profile.suite
    seed = os.urandom(32)
    signer = os.urandom(8)
    nonce = os.urandom(16)
    message = os.urandom(8)
    rows = [f"kernel comparison ({scheme}):",
            f"  {'operation':<18}{'compiled us':>13}{'pure-python us':>16}{'speedup':>9}"]

    def timed(mod, fn, *args, n=iters):
        f = getattr(mod, fn)
        t0 = time.perf_counter()
        for _ in range(n):
            f(*args)
        return (time.perf_counter() - t0) / n * 1e6

    if profile.kind == "wots":
        p = profile.wots
        args = (suite.chain_b, suite.wide_b, seed, 0, p.digest_bits, p.d, p.secret_size)
        pub_seed, cache, leaf, _, _ = kernels.wots_keygen(*args)
        md = kernels.message_digest(suite.wide_b, signer, nonce, leaf, message)
        payload = kernels.wots_gather(cache, md, p.digest_bits, p.d, p.secret_size)
        cases = [
            ("keygen", "wots_keygen", args),
            ("verify chains", "wots_finish",
             (suite.chain_b, suite.wide_b, pub_seed, payload, md,
              p.digest_bits, p.d, p.secret_size)),
            ("sign gather", "wots_gather", (cache, md, p.digest_bits, p.d, p.secret_size)),
        ]
    else:
        p = profile.hors
        args = (suite.chain_b, suite.wide_b, seed, 0, p.t)
        secrets, elements, leaf, _, _ = kernels.hors_keygen(*args)
        nbytes = (p.digest_bits + 7) // 8
        stream = kernels.hors_stream(suite.wide_b, signer, nonce, leaf, message, nbytes)
        idx = kernels.hors_indices_from_stream(stream, p.k, p.logt)
        payload = kernels.hors_payload(secrets, elements, idx, p.t)
        cases = [
            ("keygen", "hors_keygen", args),
            ("verify elements", "hors_finish",
             (suite.chain_b, suite.wide_b, p.t, p.k, payload, stream)),
        ]
    cases.append(("proof fold", "merkle_fold",
                  (suite.wide_b, leaf, 5, os.urandom(7 * 32))))

    for name, fn, args in cases:
        fast = timed(kernels, fn, *args)
        slow = timed(pykernels, fn, *args, n=max(iters // 10, 20))
        rows.append(f"  {name:<18}{fast:>13.2f}{slow:>16.2f}{slow / fast:>8.1f}x")
    if not kernels.IS_COMPILED:
        rows.append("  (compiled extension unavailable; both columns are pure-python)")
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# Two-process network benchmark


def bench_net_verifier(listen: str, registry: Registry, identity: SignerIdentity,
                       profile="wots4", on_listening=None) -> str:
    """Receive signed messages until the signer closes; report verify costs."""
    transport = TcpTransport(identity.signer_id, listen=listen)
    endpoint = Endpoint(identity, registry, coerce_profile(profile),
                        transport=transport, background="thread")
    # pure verifier: ingest certificates but provision no signing keys
    endpoint.pause_background()
    endpoint.start()
    if on_listening is not None:
        on_listening(transport.bound_port)

    done = []
    lat = []
    fast_hits = []

    def on_app(ftype: int, body: bytes) -> None:
        if ftype != wire.FRAME_SIGNED_MSG:
            return
        try:
            sm = wire.decode_signed_msg(body)
        except FrameError:
            return
        if sm.payload == b"__bench_done__":
            done.append(True)
            return
        fast_hits.append(endpoint.can_verify_fast(sm.signature, sm.signer_id))
        t0 = time.perf_counter()
        ok = endpoint.verify(sm.payload, sm.signature, sm.signer_id)
        t1 = time.perf_counter()
        if ok:
            lat.append((t1 - t0) * 1e6)

    endpoint.on_app_frame = on_app
    while not done:
        time.sleep(0.05)
    endpoint.close()
    if not lat:
        return "no verifiable messages received"
    stats = _percentiles(lat)
    return "\n".join([
        f"verified {len(lat)} messages",
        _fmt_lat("verify", stats),
        f"  fast path taken           {100 * sum(fast_hits) / len(fast_hits):.1f}%",
    ])


def bench_net_signer(peer: str, peer_id: bytes, registry: Registry,
                     identity: SignerIdentity, iters: int = 1000,
                     message_size: int = 8, profile="wots4", groups=None) -> str:
    profile = coerce_profile(profile, queue_threshold=(-(-iters // 128) + 1) * 128)
    transport = TcpTransport(identity.signer_id, peers={peer_id: peer})
    endpoint = Endpoint(identity, registry, profile, groups=groups,
                        transport=transport, background="thread")
    endpoint.start()
    endpoint.wait_ready()

    message = os.urandom(message_size)
    hint = {peer_id}
    lat = []
    t_start = time.perf_counter()
    for _ in range(iters):
        t0 = time.perf_counter()
        sig = endpoint.sign(message, hint)
        t1 = time.perf_counter()
        lat.append((t1 - t0) * 1e6)
        body = wire.encode_signed_msg(identity.signer_id, sig, message)
        transport.send(peer_id, wire.FRAME_SIGNED_MSG, body)
    elapsed = time.perf_counter() - t_start
    done_sig = endpoint.sign(b"__bench_done__", hint)
    done = wire.encode_signed_msg(identity.signer_id, done_sig, b"__bench_done__")
    transport.send(peer_id, wire.FRAME_SIGNED_MSG, done)
    time.sleep(0.2)
    endpoint.close()
    stats = _percentiles(lat)
    return "\n".join([
        f"signed and sent {iters} messages in {elapsed:.2f} s "
        f"({iters / elapsed / 1e3:.1f} kops/s sign+send)",
        _fmt_lat("sign", stats),
    ])
