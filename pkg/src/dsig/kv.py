"""Auditable key-value store demo.

Clients sign every operation; the server verifies each signature before
executing, appends the full signed frame to an append-only log, and only
then applies the operation. The log is the audit trail: ``audit`` replays
it offline and re-verifies every entry through the slow path, with the
verified-root cache collapsing the traditional-signature work to one
verification per distinct key batch.

Operation payload: ``op(1) || klen(2) || key || vlen(4) || value`` with
op 1 = PUT, 2 = GET. Log records are verbatim SIGNED_MSG frames.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from . import wire
from .certifier import Registry, SignerIdentity
from .counters import counters
from .errors import FrameError, UnknownSigner
from .profiles import SchemeProfile
from .runtime import Endpoint

OP_PUT, OP_GET = 1, 2

ST_OK, ST_REJECTED, ST_NOT_FOUND, ST_BAD_REQUEST = 0, 1, 2, 3


def encode_op(op: int, key: bytes, value: bytes = b"") -> bytes:
    return struct.pack("<BH", op, len(key)) + key + struct.pack("<I", len(value)) + value


def decode_op(payload: bytes) -> tuple[int, bytes, bytes]:
    if len(payload) < 7:
        raise FrameError("operation too short")
    op, klen = struct.unpack_from("<BH", payload)
    key = payload[3:3 + klen]
    (vlen,) = struct.unpack_from("<I", payload, 3 + klen)
    value = payload[7 + klen:7 + klen + vlen]
    if len(payload) != 7 + klen + vlen:
        raise FrameError("operation length mismatch")
    return op, key, value


def encode_reply(status: int, value: bytes = b"") -> bytes:
    return struct.pack("<BI", status, len(value)) + value


def decode_reply(body: bytes) -> tuple[int, bytes]:
    status, vlen = struct.unpack_from("<BI", body)
    return status, body[5:5 + vlen]


class KvServer:
    """Verify, log, execute, reply; in that order."""

    def __init__(self, listen: str, log_path: str, registry: Registry,
                 profile: SchemeProfile | str = "wots4",
                 identity: SignerIdentity | None = None):
        self._addr = wire.parse_addr(listen)
        self._log = open(log_path, "ab")
        self._log_lock = threading.Lock()
        self._store: dict[bytes, bytes] = {}
        self._store_lock = threading.Lock()
        self.endpoint = Endpoint(identity or SignerIdentity.generate(),
                                 registry, profile, background="thread")
        self.fast_verified = 0
        self.slow_verified = 0
        self.rejected = 0
        self._server: socket.socket | None = None
        self._closing = False

    @property
    def port(self) -> int:
        return self._server.getsockname()[1]

    def start(self) -> None:
        # the server only verifies; keep certificate ingest, skip key refill
        self.endpoint.pause_background()
        self.endpoint.start()
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(self._addr)
        server.listen()
        self._server = server
        threading.Thread(target=self._accept_loop, daemon=True).start()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._closing:
                time.sleep(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            self.close()

    def close(self) -> None:
        self._closing = True
        if self._server is not None:
            self._server.close()
        self.endpoint.close()
        self._log.close()

    def state(self) -> dict[bytes, bytes]:
        with self._store_lock:
            return dict(self._store)

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn: socket.socket) -> None:
        try:
            while True:
                ftype, body = wire.read_frame(conn)
                if ftype == wire.FRAME_BATCH_ANNOUNCE:
                    self.endpoint.deliver(ftype, body)
                elif ftype == wire.FRAME_SIGNED_MSG:
                    reply = self._handle_op(body)
                    wire.write_frame(conn, wire.FRAME_REPLY, reply)
                # unknown frame types are skipped, connection kept
        except (ConnectionError, OSError):
            pass
        except FrameError:
            conn.close()

    def _handle_op(self, body: bytes) -> bytes:
        try:
            sm = wire.decode_signed_msg(body)
        except FrameError:
            self.rejected += 1
            return encode_reply(ST_BAD_REQUEST)
        fast = self.endpoint.can_verify_fast(sm.signature, sm.signer_id)
        try:
            ok = self.endpoint.verify(sm.payload, sm.signature, sm.signer_id)
        except (UnknownSigner, FrameError):
            ok = False
        if not ok:
            # rejected before execution: the op must not reach the log/store
            self.rejected += 1
            return encode_reply(ST_REJECTED)
        if fast:
            self.fast_verified += 1
        else:
            self.slow_verified += 1

        with self._log_lock:
            self._log.write(wire.encode_frame(wire.FRAME_SIGNED_MSG, body))
            self._log.flush()

        try:
            op, key, value = decode_op(sm.payload)
        except FrameError:
            return encode_reply(ST_BAD_REQUEST)
        if op == OP_PUT:
            with self._store_lock:
                self._store[key] = value
            return encode_reply(ST_OK)
        if op == OP_GET:
            with self._store_lock:
                value = self._store.get(key)
            if value is None:
                return encode_reply(ST_NOT_FOUND)
            return encode_reply(ST_OK, value)
        return encode_reply(ST_BAD_REQUEST)


class _ClientTransport:
    """Routes the client's background announcements over the one server
    connection; replies flow back to the request path."""

    def __init__(self, sock: socket.socket, reply_sink):
        self._sock = sock
        self._lock = threading.Lock()
        self._reply_sink = reply_sink
        self.receiver = None

    def set_receiver(self, receiver) -> None:
        self.receiver = receiver

    def start(self) -> None:
        threading.Thread(target=self._read_loop, daemon=True).start()

    def _read_loop(self) -> None:
        try:
            while True:
                ftype, body = wire.read_frame(self._sock)
                if ftype == wire.FRAME_REPLY:
                    self._reply_sink(body)
                elif self.receiver is not None:
                    self.receiver(ftype, body)
        except (ConnectionError, OSError, FrameError):
            pass

    def send(self, dest: bytes, ftype: int, body: bytes) -> None:
        with self._lock:
            self._sock.sendall(wire.encode_frame(ftype, body))

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class KvClient:
    def __init__(self, peer: str, identity: SignerIdentity, registry: Registry,
                 server_id: bytes, profile: SchemeProfile | str = "wots4",
                 timeout: float = 10.0, groups=None):
        self._server_id = server_id
        self._timeout = timeout
        self._replies: list[bytes] = []
        self._reply_ready = threading.Event()
        sock = socket.create_connection(wire.parse_addr(peer), timeout=timeout)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._transport = _ClientTransport(sock, self._on_reply)
        # default grouping points the signature hint at the server: it is
        # the one verifier of this client's operations
        if groups is None:
            groups = [(1, {server_id})]
        self.endpoint = Endpoint(identity, registry, profile, groups=groups,
                                 transport=self._transport, background="thread")
        self.endpoint.start()

    def _on_reply(self, body: bytes) -> None:
        self._replies.append(body)
        self._reply_ready.set()

    def _request(self, payload: bytes) -> tuple[int, bytes]:
        sig = self.endpoint.sign(payload, hint={self._server_id})
        body = wire.encode_signed_msg(self.endpoint.signer_id, sig, payload)
        self._reply_ready.clear()
        self._transport.send(self._server_id, wire.FRAME_SIGNED_MSG, body)
        if not self._reply_ready.wait(self._timeout):
            raise TimeoutError("server did not reply")
        return decode_reply(self._replies.pop())

    def put(self, key: bytes, value: bytes) -> int:
        status, _ = self._request(encode_op(OP_PUT, key, value))
        return status

    def get(self, key: bytes) -> tuple[int, bytes]:
        return self._request(encode_op(OP_GET, key))

    def close(self) -> None:
        self.endpoint.close()
        self._transport.close()


# ---------------------------------------------------------------------------
# Offline audit


@dataclass
class AuditReport:
    entries: int = 0
    verified: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)
    ed_verifications: int = 0
    per_root: dict[str, int] = field(default_factory=dict)
    replayed: dict[bytes, bytes] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and self.entries == self.verified


def audit_log(log_path: str, registry: Registry,
              profile: SchemeProfile | str = "wots4") -> AuditReport:
    """Replay the log offline, slow-path verifying every record.

    No background assistance: every entry folds its proof to the batch
    root, and the root cache limits traditional verifications to one per
    distinct batch.
    """
    auditor = Endpoint(SignerIdentity.generate(), registry, profile,
                       background="off")
    report = AuditReport()
    with open(log_path, "rb") as fh:
        data = fh.read()

    offset = 0
    index = 0
    while offset < len(data):
        if len(data) - offset < 5:
            report.failures.append((index, "truncated frame header"))
            break
        length, ftype = struct.unpack_from("<IB", data, offset)
        if ftype != wire.FRAME_SIGNED_MSG or len(data) - offset - 5 < length:
            report.failures.append((index, "corrupt frame"))
            break
        body = data[offset + 5:offset + 5 + length]
        offset += 5 + length
        report.entries += 1
        try:
            sm = wire.decode_signed_msg(body)
            with counters.capture() as used:
                ok = auditor.verify(sm.payload, sm.signature, sm.signer_id)
            report.ed_verifications += used.ed_verifies
        except (FrameError, UnknownSigner) as exc:
            report.failures.append((index, f"undecodable entry: {exc}"))
            index += 1
            continue
        if not ok:
            report.failures.append((index, "signature rejected"))
        else:
            report.verified += 1
            try:
                op, key, value = decode_op(sm.payload)
                if op == OP_PUT:
                    report.replayed[key] = value
            except FrameError:
                pass
        index += 1
    # the root cache holds each distinct batch root exactly once, and each
    # cost exactly one traditional verification on first encounter
    report.per_root = {root.hex(): 1 for root in auditor.root_cache.roots()}
    return report
