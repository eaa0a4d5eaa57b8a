"""Hybrid signer/verifier runtime with foreground and background planes.

An :class:`Endpoint` plays both roles. The foreground plane is the
synchronous sign/verify API; everything expensive happens before the
message exists:

* the signer's background plane pre-generates one-time keys, certifies
  them in batches of 128 under one traditional signature, precomputes
  the batch tree and inclusion proofs, draws the nonces, and announces
  the batch digests to the verifier group;
* the verifier's background plane checks announced certificates once
  and caches the batch (leaves, packed proofs, root signature), so a
  hinted verification is hash work plus string comparisons.

Keys are organized per verifier group: a set of processes likely to
verify the same signatures. Each group owns a FIFO key queue refilled
whenever it drops below the threshold S; a popped key is never reused.
``sign`` picks the exact-match group for the hint, else the smallest
group containing it (ties to the lowest group id), else the default
all-processes group. The hint never restricts who can verify: signatures
are self-standing and verify against the registry alone (slow path).

Purity contract, enforced by instrumented counters: signing performs
zero traditional-signature and zero chain-hash operations; a warm-cache
verification performs zero traditional-signature and zero tree-hash
operations.

Background modes: ``"thread"`` runs a worker that refills queues and
ingests certificates; ``"manual"`` defers both to pump_background()
(deterministic, used heavily in tests); ``"off"`` disables the verifier
ingest too, leaving only the slow path.
"""

from __future__ import annotations

import os
import threading
import time
from collections import OrderedDict, deque
from dataclasses import dataclass

from . import certifier, merkle, wire
from . import hors as hors_mod
from . import wots as wots_mod
from ._backend import kernels
from .certifier import (
    BatchCertificate,
    Registry,
    SignerIdentity,
    VerifiedRootCache,
    check_or_verify_root,
)
from .counters import counters
from .errors import FrameError, KeyExhausted, MalformedSignature, UnknownSigner
from .profiles import (
    SCHEME_HORS_FACTORIZED,
    SCHEME_WOTS_STD128,
    SIG_PREFIX_LEN,
    SchemeProfile,
    get_profile,
    resolve_hors_params,
)
from .signature import DSigSignature
from .wots import WotsParams

_STD128 = WotsParams(d=4)


@dataclass(frozen=True)
class VerifierGroup:
    group_id: int
    members: frozenset[bytes]


class _ReadyKey:
    """A pre-provisioned one-time key with its precomputed signature parts.

    ``mid`` is pub_seed||batch_seq||leaf_index and ``tail`` is
    leaf_digest||proof||root_sig; signing only adds the nonce and the
    revealed payload between them.
    """

    __slots__ = ("kp", "batch_seq", "leaf_index", "nonce", "mid", "tail")

    def __init__(self, kp, batch_seq, leaf_index, nonce, mid, tail):
        self.kp = kp
        self.batch_seq = batch_seq
        self.leaf_index = leaf_index
        self.nonce = nonce
        self.mid = mid
        self.tail = tail


class _CachedBatch:
    """A pre-verified certificate, expanded for string-comparison checks."""

    __slots__ = ("root", "root_sig", "leaves", "proofs")

    def __init__(self, root, root_sig, leaves, proofs):
        self.root = root
        self.root_sig = root_sig
        self.leaves = leaves
        self.proofs = proofs


class Endpoint:
    def __init__(self, identity: SignerIdentity, registry: Registry,
                 profile: SchemeProfile | str = "wots4",
                 groups=None, transport=None, background: str = "manual",
                 root_cache_capacity: int = 4096, sk_seed: bytes | None = None):
        if isinstance(profile, str):
            profile = get_profile(profile)
        if background not in ("manual", "thread", "off"):
            raise ValueError("background must be manual, thread or off")
        self.identity = identity
        self.registry = registry
        self.profile = profile
        self.signer_id = identity.signer_id
        self._suite = profile.suite
        self._scheme_byte = bytes([profile.scheme_id])
        # entropy collected once at startup seeds all one-time keys
        self._sk_seed = sk_seed if sk_seed is not None else os.urandom(32)
        self._key_counter = 0
        self._batch_counter = 0

        self.groups = self._arrange_groups(groups)
        self._queues: dict[int, deque[_ReadyKey]] = {
            g.group_id: deque() for g in self.groups}
        self._group_cache: dict[frozenset[bytes], int] = {}

        # verifier state: per-signer FIFO of pre-verified batches
        self._batches: dict[bytes, OrderedDict[int, _CachedBatch]] = {}
        self.root_cache = VerifiedRootCache(root_cache_capacity)
        self.rejected_certificates = 0
        self.announce_failures = 0

        self._background = background
        self._ingest_enabled = background != "off"
        self._paused = False
        self._running = False
        self._inbox: deque[tuple[int, bytes]] = deque()
        self._wake = threading.Event()
        self._worker: threading.Thread | None = None
        #: optional hook receiving frames that are not background traffic
        self.on_app_frame = None

        # constants the foreground paths need, resolved once
        self._proof_depth = profile.proof_depth
        self._sig_fixed = SIG_PREFIX_LEN + 32 + profile.proof_depth * 32 + 64
        self._assemble = self._make_assembler()

        self._transport = transport
        if transport is not None:
            transport.set_receiver(self.deliver)
            transport.start()

    def _make_assembler(self):
        """Bind the per-profile signing closure; the hot path then runs on
        locals instead of attribute lookups."""
        prof = self.profile
        scheme = self._scheme_byte
        signer_id = self.signer_id
        wide_b = self._suite.wide_b
        if prof.kind == "wots":
            p = prof.wots
            assemble = kernels.wots_sign_assemble
            dbits, d, ss = p.digest_bits, p.d, p.secret_size

            def do_sign(rk, message):
                counters.wide_hashes += 1
                return assemble(wide_b, dbits, d, ss, scheme, rk.nonce, rk.mid,
                                rk.tail, rk.kp.cache, signer_id, message)
        else:
            p = prof.hors
            assemble = kernels.hors_sign_assemble
            t, k, logt = p.t, p.k, p.logt
            n_blocks = ((k * logt + 7) // 8 + 31) // 32

            def do_sign(rk, message):
                counters.wide_hashes += n_blocks
                return assemble(wide_b, t, k, logt, scheme, rk.nonce, rk.mid,
                                rk.tail, rk.kp.secrets, rk.kp.pk_elements,
                                signer_id, message)
        return do_sign

    # -- group arrangement ---------------------------------------------------

    def _arrange_groups(self, groups) -> list[VerifierGroup]:
        everyone = self.registry.members() | {self.signer_id}
        arranged: list[VerifierGroup] = []
        for g in groups or ():
            if not isinstance(g, VerifierGroup):
                gid, members = g
                g = VerifierGroup(int(gid), frozenset(members))
            arranged.append(g)
        if not any(g.members == everyone for g in arranged):
            used = {g.group_id for g in arranged}
            gid = 0
            while gid in used:
                gid += 1
            arranged.append(VerifierGroup(gid, frozenset(everyone)))
        arranged.sort(key=lambda g: g.group_id)
        self._default_gid = next(g.group_id for g in arranged if g.members == everyone)
        return arranged

    def _group_for(self, hint: frozenset[bytes]) -> int:
        gid = self._group_cache.get(hint)
        if gid is not None:
            return gid
        exact = [g for g in self.groups if g.members == hint]
        if exact:
            gid = exact[0].group_id
        else:
            containing = [g for g in self.groups if hint <= g.members]
            if containing:
                # smallest containing group; ties to the lowest id
                gid = min(containing, key=lambda g: (len(g.members), g.group_id)).group_id
            else:
                gid = self._default_gid
        self._group_cache[hint] = gid
        return gid

    # -- background plane ----------------------------------------------------

    def start(self) -> None:
        if self._background == "thread" and self._worker is None:
            self._running = True
            self._worker = threading.Thread(target=self._worker_loop, daemon=True)
            self._worker.start()

    def close(self) -> None:
        self._running = False
        self._wake.set()
        if self._worker is not None:
            self._worker.join(timeout=2)
            self._worker = None
        if self._transport is not None:
            self._transport.close()

    def pause_background(self) -> None:
        self._paused = True

    def resume_background(self) -> None:
        self._paused = False
        self._wake.set()

    def _worker_loop(self) -> None:
        while self._running:
            self.pump_background()
            self._wake.wait(timeout=0.001)
            self._wake.clear()

    def pump_background(self) -> None:
        """One background duty cycle: ingest pending frames, refill queues."""
        while self._inbox:
            try:
                ftype, body = self._inbox.popleft()
            except IndexError:
                break
            if ftype == wire.FRAME_BATCH_ANNOUNCE:
                self._handle_announce(body)
            # other frame types are skipped (application traffic)
        if not self._paused:
            for group in self.groups:
                queue = self._queues[group.group_id]
                while len(queue) < self.profile.queue_threshold:
                    self._build_batch(group, queue)

    def wait_ready(self, timeout: float = 30.0) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if all(len(q) >= self.profile.queue_threshold for q in self._queues.values()):
                return
            if self._background != "thread":
                self.pump_background()
            else:
                time.sleep(0.005)
        raise TimeoutError("background plane did not reach steady state")

    def deliver(self, ftype: int, body: bytes) -> None:
        """Feed one frame in: certificate announcements go to the
        background inbox, application frames to ``on_app_frame``,
        anything unknown is skipped."""
        if ftype == wire.FRAME_BATCH_ANNOUNCE:
            self._inbox.append((ftype, body))
            self._wake.set()
        elif self.on_app_frame is not None:
            self.on_app_frame(ftype, body)

    # -- key provisioning ----------------------------------------------------

    def _build_batch(self, group: VerifierGroup, queue: deque) -> None:
        prof = self.profile
        keys = []
        for _ in range(prof.batch_size):
            idx = self._key_counter
            self._key_counter += 1
            if prof.kind == "wots":
                keys.append(wots_mod.keygen(prof.wots, self._suite, self._sk_seed, idx))
            else:
                keys.append(hors_mod.keygen(prof.hors, self._suite, self._sk_seed, idx))
        leaves = [kp.leaf_digest for kp in keys]
        seq = self._batch_counter
        self._batch_counter += 1
        tree = certifier.batch_tree(self._suite, leaves, prof.batch_size)
        root_sig = certifier.sign_root(self.identity, seq, tree.root)

        nonces = os.urandom(16 * prof.batch_size)
        seq8 = seq.to_bytes(8, "little")
        zero_seed = bytes(16)
        for i, kp in enumerate(keys):
            proof = merkle.prove(tree, i).pack()
            pub_seed = kp.pub_seed if prof.kind == "wots" else zero_seed
            mid = pub_seed + seq8 + i.to_bytes(2, "little")
            tail = kp.leaf_digest + proof + root_sig
            queue.append(_ReadyKey(kp, seq, i, nonces[16 * i:16 * (i + 1)], mid, tail))

        body = wire.encode_batch_announce(self.signer_id, group.group_id, seq,
                                          leaves, root_sig)
        for member in group.members:
            if member == self.signer_id:
                if self._ingest_enabled:
                    self._handle_announce(body)
            elif self._transport is not None:
                self._send_with_retry(member, body)

    def _send_with_retry(self, member: bytes, body: bytes) -> None:
        # refills keep running through transport hiccups; far verifiers
        # simply fall back to the slow path for the batches they missed
        for attempt in range(3):
            try:
                self._transport.send(member, wire.FRAME_BATCH_ANNOUNCE, body)
                return
            except Exception:
                time.sleep(0.001 * (attempt + 1))
        self.announce_failures += 1

    # -- certificate ingest (verifier background) -----------------------------

    def _handle_announce(self, body: bytes) -> None:
        if not self._ingest_enabled:
            return
        try:
            ann = wire.decode_batch_announce(body)
        except FrameError:
            self.rejected_certificates += 1
            return
        tree = certifier.batch_tree(self._suite, list(ann.leaf_digests),
                                    self.profile.batch_size)
        cert = BatchCertificate(ann.signer_id, ann.batch_seq, ann.leaf_digests,
                                tree.root, ann.root_sig)
        self._ingest(cert, tree)

    def ingest_certificate(self, cert: BatchCertificate) -> bool:
        """Background-plane entry: pre-verify one batch certificate."""
        tree = certifier.batch_tree(self._suite, list(cert.leaf_digests),
                                    self.profile.batch_size)
        if tree.root != cert.root:
            self.rejected_certificates += 1
            return False
        return self._ingest(cert, tree)

    def _ingest(self, cert: BatchCertificate, tree) -> bool:
        if cert.signer_id not in self.registry:
            self.rejected_certificates += 1
            return False
        if not certifier.verify_root_sig(self.registry, cert.signer_id,
                                         cert.batch_seq, tree.root, cert.root_sig):
            self.rejected_certificates += 1
            return False
        proofs = tuple(merkle.prove(tree, i).pack() for i in range(tree.leaf_count))
        batch = _CachedBatch(tree.root, cert.root_sig, tree.levels[0], proofs)
        per_signer = self._batches.setdefault(cert.signer_id, OrderedDict())
        per_signer[cert.batch_seq] = batch
        while len(per_signer) > self.profile.cache_batches_per_signer:
            per_signer.popitem(last=False)
        return True

    # -- foreground plane ----------------------------------------------------

    def sign(self, message: bytes, hint=None) -> DSigSignature:
        """Assemble a signature from a pre-provisioned key; never performs
        traditional-signature or chain-hash work."""
        if hint is None:
            gid = self._default_gid
        else:
            key = hint if type(hint) is frozenset else frozenset(hint)
            gid = self._group_cache.get(key)
            if gid is None:
                gid = self._group_for(key)
        queue = self._queues[gid]
        try:
            rk = queue.popleft()
        except IndexError:
            rk = self._wait_for_key(queue)
        raw = self._assemble(rk, message)
        return DSigSignature(raw, len(raw) - self._sig_fixed, self._proof_depth)

    def _wait_for_key(self, queue: deque) -> _ReadyKey:
        deadline = time.monotonic() + self.profile.sign_wait_us / 1e6
        self._wake.set()
        while time.monotonic() < deadline:
            time.sleep(50e-6)
            try:
                return queue.popleft()
            except IndexError:
                continue
        raise KeyExhausted("no pre-generated key available for this group")

    def verify(self, message: bytes, sig, signer_id: bytes) -> bool:
        raw = sig.raw if isinstance(sig, DSigSignature) else bytes(sig)
        if signer_id not in self.registry:
            raise UnknownSigner(f"signer {signer_id.hex()} not in registry")
        prof = self.profile
        depth_bytes = prof.proof_depth * 32
        fixed = SIG_PREFIX_LEN + 32 + depth_bytes + 64
        if len(raw) < fixed + 16:
            raise MalformedSignature(f"{len(raw)} bytes is too short")
        scheme = raw[0]
        payload = raw[SIG_PREFIX_LEN:len(raw) - 96 - depth_bytes]
        leaf_off = SIG_PREFIX_LEN + len(payload)
        leaf = raw[leaf_off:leaf_off + 32]
        nonce = raw[1:17]
        suite = self._suite

        # (1)+(2): recompute the salted digest, complete the one-time
        # signature to a candidate public-key digest
        if scheme == SCHEME_WOTS_STD128:
            if len(payload) != _STD128.signature_size:
                raise MalformedSignature("std128 payload must be 1224 bytes")
            md = kernels.message_digest(suite.wide_b, signer_id, nonce, leaf, message)
            cand, steps = kernels.wots_finish(
                suite.chain_b, suite.wide_b, raw[17:33], payload, md,
                _STD128.digest_bits, _STD128.d, _STD128.secret_size)
            counters.chain_hashes += steps
            counters.wide_hashes += 2
        elif scheme == SCHEME_HORS_FACTORIZED:
            params = resolve_hors_params(len(payload))
            nbytes = (params.digest_bits + 7) // 8
            stream = kernels.hors_stream(suite.wide_b, signer_id, nonce, leaf,
                                         message, nbytes)
            cand, n_chain = kernels.hors_finish(
                suite.chain_b, suite.wide_b, params.t, params.k, payload, stream)
            counters.chain_hashes += n_chain
            counters.wide_hashes += (nbytes + 31) // 32 + (1 if cand else 0)
        else:
            raise MalformedSignature(f"unknown scheme id {scheme:#x}")

        # (3): the revealed material must reproduce the carried leaf digest
        if cand != leaf:
            return False

        seq = int.from_bytes(raw[33:41], "little")
        idx = int.from_bytes(raw[41:43], "little")
        proof = raw[leaf_off + 32:leaf_off + 32 + depth_bytes]
        root_sig = raw[len(raw) - 64:]

        # (4): fast path; pure string comparisons against the pre-verified
        # batch (leaf membership, carried proof, carried root signature)
        per_signer = self._batches.get(signer_id)
        if per_signer is not None:
            batch = per_signer.get(seq)
            if (batch is not None and idx < len(batch.leaves)
                    and batch.leaves[idx] == leaf
                    and batch.proofs[idx] == proof
                    and batch.root_sig == root_sig):
                return True

        # (5): slow path; fold the proof and check the root's traditional
        # signature (cached across verifications)
        counters.merkle_hashes += prof.proof_depth
        root = kernels.merkle_fold(suite.wide_b, leaf, idx, proof)
        return check_or_verify_root(self.root_cache, self.registry,
                                    signer_id, seq, root, root_sig)

    def can_verify_fast(self, sig, signer_id: bytes) -> bool:
        """True iff a pre-verified batch covers this signature's key.

        Performs no hashing and no traditional operations; lets callers
        prioritize work that will not stall on an inline verification.
        """
        per_signer = self._batches.get(signer_id)
        if per_signer is None:
            return False
        if not isinstance(sig, DSigSignature):
            try:
                sig = DSigSignature.from_bytes(bytes(sig), self.profile.proof_depth)
            except MalformedSignature:
                return False
        batch = per_signer.get(sig.batch_seq)
        if batch is None:
            return False
        idx = sig.leaf_index
        return idx < len(batch.leaves) and batch.leaves[idx] == sig.leaf_digest

    # -- introspection helpers -------------------------------------------------

    def queue_depth(self, group_id: int | None = None) -> int:
        if group_id is None:
            group_id = self._default_gid
        return len(self._queues[group_id])

    def approx_queue_bytes(self, group_id: int | None = None) -> int:
        """Rough memory footprint of one group's provisioned keys."""
        if group_id is None:
            group_id = self._default_gid
        total = 0
        for rk in self._queues[group_id]:
            if self.profile.kind == "wots":
                total += len(rk.kp.cache)
            else:
                total += len(rk.kp.secrets) + len(rk.kp.pk_elements)
            total += len(rk.mid) + len(rk.tail) + len(rk.nonce) + 32 + 64
        return total

    def cached_batches(self, signer_id: bytes) -> list[int]:
        return list(self._batches.get(signer_id, ()))

    def drop_cached_batches(self, signer_id: bytes | None = None) -> None:
        """Test hook: force cold/evicted cache states."""
        if signer_id is None:
            self._batches.clear()
        else:
            self._batches.pop(signer_id, None)
