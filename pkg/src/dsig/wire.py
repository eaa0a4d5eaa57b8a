"""Length-prefixed binary framing over TCP, plus an in-process loopback.

Wire format: every frame is ``length(4, LE) || type(1) || body`` where
``length`` counts the body only. Unknown frame types are skipped and the
connection stays up. All integers little-endian.

Frame types::

    0x01 BATCH_ANNOUNCE  signer(8) group(4) batch_seq(8) leaf_count(2)
                         leaf_digests(count*32) root_sig(64)
    0x02 SIGNED_MSG      signer(8) sig_len(2) signature payload_len(4) payload
    0x03 REPLY           demo reply envelope: status(1) value_len(4) value

Frames are processed in per-connection order; correctness does not
depend on announcements arriving before the signatures that reference
them (verification falls back to the slow path).
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass
from typing import Callable

from .errors import FrameError, MalformedSignature
from .signature import DSigSignature

FRAME_BATCH_ANNOUNCE = 0x01
FRAME_SIGNED_MSG = 0x02
FRAME_REPLY = 0x03

MAX_FRAME = 16 * 1024 * 1024

Receiver = Callable[[int, bytes], None]


def encode_frame(ftype: int, body: bytes) -> bytes:
    if len(body) > MAX_FRAME:
        raise FrameError(f"frame body {len(body)} exceeds 16 MiB")
    return struct.pack("<IB", len(body), ftype) + body


class FrameReader:
    """Incremental frame parser for a byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes):
        """Append stream data; yield every complete (type, body) frame."""
        self._buf.extend(data)
        while True:
            if len(self._buf) < 5:
                return
            length, ftype = struct.unpack_from("<IB", self._buf)
            if length > MAX_FRAME:
                raise FrameError(f"declared body of {length} bytes exceeds 16 MiB")
            if len(self._buf) < 5 + length:
                return
            body = bytes(self._buf[5:5 + length])
            del self._buf[:5 + length]
            yield ftype, body


# ---------------------------------------------------------------------------
# BATCH_ANNOUNCE


@dataclass(frozen=True)
class BatchAnnounce:
    signer_id: bytes
    group_id: int
    batch_seq: int
    leaf_digests: tuple[bytes, ...]
    root_sig: bytes


def encode_batch_announce(signer_id: bytes, group_id: int, batch_seq: int,
                          leaf_digests, root_sig: bytes) -> bytes:
    if not leaf_digests:
        raise FrameError("announcement must carry at least one digest")
    head = struct.pack("<8sIQH", signer_id, group_id, batch_seq, len(leaf_digests))
    return head + b"".join(leaf_digests) + root_sig


def decode_batch_announce(body: bytes) -> BatchAnnounce:
    if len(body) < 22 + 64:
        raise FrameError("truncated announcement")
    signer_id, group_id, batch_seq, count = struct.unpack_from("<8sIQH", body)
    if count == 0:
        raise FrameError("announcement with zero digests")
    expected = 22 + count * 32 + 64
    if len(body) != expected:
        raise FrameError(f"announcement must be {expected} bytes, got {len(body)}")
    leaves = tuple(body[22 + i * 32:22 + (i + 1) * 32] for i in range(count))
    return BatchAnnounce(signer_id, group_id, batch_seq, leaves, body[-64:])


# ---------------------------------------------------------------------------
# SIGNED_MSG


@dataclass(frozen=True)
class SignedMsg:
    signer_id: bytes
    signature: DSigSignature
    payload: bytes


def encode_signed_msg(signer_id: bytes, signature: bytes | DSigSignature,
                      payload: bytes) -> bytes:
    raw = signature.raw if isinstance(signature, DSigSignature) else signature
    return (struct.pack("<8sH", signer_id, len(raw)) + raw
            + struct.pack("<I", len(payload)) + payload)


def decode_signed_msg(body: bytes) -> SignedMsg:
    if len(body) < 14:
        raise FrameError("truncated signed message")
    signer_id, sig_len = struct.unpack_from("<8sH", body)
    if len(body) < 10 + sig_len + 4:
        raise FrameError("signature overruns frame")
    raw = body[10:10 + sig_len]
    try:
        sig = DSigSignature.from_bytes(raw)
    except MalformedSignature as exc:
        raise FrameError(f"signature length {sig_len} does not fit its scheme: {exc}") from exc
    (payload_len,) = struct.unpack_from("<I", body, 10 + sig_len)
    rest = body[10 + sig_len + 4:]
    if len(rest) != payload_len:
        raise FrameError(f"declared payload of {payload_len} bytes, frame holds {len(rest)}")
    return SignedMsg(signer_id, sig, rest)


# ---------------------------------------------------------------------------
# Transports


class LoopbackHub:
    """In-process transport fabric for deterministic tests.

    Delivery invokes the destination's receiver synchronously; endpoints
    enqueue into their background inbox, so processing order is fully
    controlled by when each endpoint pumps its background plane.
    """

    def __init__(self):
        self._nodes: dict[bytes, "LoopbackTransport"] = {}

    def attach(self, node_id: bytes) -> "LoopbackTransport":
        transport = LoopbackTransport(self, node_id)
        self._nodes[node_id] = transport
        return transport

    def route(self, dest: bytes, ftype: int, body: bytes) -> None:
        node = self._nodes.get(dest)
        if node is None or node.receiver is None:
            raise FrameError(f"no route to {dest.hex()}")
        node.receiver(ftype, body)


class LoopbackTransport:
    def __init__(self, hub: LoopbackHub, node_id: bytes):
        self._hub = hub
        self.node_id = node_id
        self.receiver: Receiver | None = None

    def set_receiver(self, receiver: Receiver) -> None:
        self.receiver = receiver

    def send(self, dest: bytes, ftype: int, body: bytes) -> None:
        self._hub.route(dest, ftype, body)

    def start(self) -> None:
        pass

    def close(self) -> None:
        pass


def recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n:
        chunk = sock.recv(n)
        if not chunk:
            raise ConnectionError("peer closed connection")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    header = recv_exact(sock, 5)
    length, ftype = struct.unpack("<IB", header)
    if length > MAX_FRAME:
        raise FrameError(f"declared body of {length} bytes exceeds 16 MiB")
    return ftype, recv_exact(sock, length)


def write_frame(sock: socket.socket, ftype: int, body: bytes) -> None:
    sock.sendall(encode_frame(ftype, body))


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


class TcpTransport:
    """One reader thread per connection; frames delivered in order.

    Outbound connections to configured peers are opened lazily on first
    send and reused; inbound connections are accepted on ``listen``.
    """

    def __init__(self, node_id: bytes, listen: str | None = None,
                 peers: dict[bytes, str] | None = None):
        self.node_id = node_id
        self._listen_addr = parse_addr(listen) if listen else None
        self._peers = {sid: parse_addr(addr) for sid, addr in (peers or {}).items()}
        self._conns: dict[bytes, socket.socket] = {}
        self._send_locks: dict[bytes, threading.Lock] = {}
        self._server: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._lock = threading.Lock()
        self._closing = False
        self.receiver: Receiver | None = None

    def set_receiver(self, receiver: Receiver) -> None:
        self.receiver = receiver

    def start(self) -> None:
        if self._listen_addr is None:
            return
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(self._listen_addr)
        server.listen()
        self._server = server
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)

    @property
    def bound_port(self) -> int:
        return self._server.getsockname()[1] if self._server else 0

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            t = threading.Thread(target=self._read_loop, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _read_loop(self, conn: socket.socket) -> None:
        try:
            while True:
                ftype, body = read_frame(conn)
                if self.receiver is not None:
                    self.receiver(ftype, body)
        except (ConnectionError, OSError, FrameError):
            conn.close()

    def _connection(self, dest: bytes) -> socket.socket:
        with self._lock:
            sock = self._conns.get(dest)
            if sock is None:
                addr = self._peers.get(dest)
                if addr is None:
                    raise FrameError(f"no address configured for {dest.hex()}")
                sock = socket.create_connection(addr, timeout=5)
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._conns[dest] = sock
                self._send_locks[dest] = threading.Lock()
                t = threading.Thread(target=self._read_loop, args=(sock,), daemon=True)
                t.start()
                self._threads.append(t)
            return sock

    def send(self, dest: bytes, ftype: int, body: bytes) -> None:
        sock = self._connection(dest)
        with self._send_locks[dest]:
            sock.sendall(encode_frame(ftype, body))

    def close(self) -> None:
        self._closing = True
        if self._server is not None:
            self._server.close()
        with self._lock:
            for sock in self._conns.values():
                try:
                    sock.close()
                except OSError:
                    pass
            self._conns.clear()
