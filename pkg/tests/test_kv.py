import pytest

from dsig import kv, wire
from dsig.certifier import Registry, SignerIdentity
from dsig.errors import FrameError
from dsig.profiles import get_profile


@pytest.fixture
def cluster(tmp_path):
    """A live server plus one connected client on an ephemeral port."""
    client_ident = SignerIdentity.generate(b"\xc1" * 8)
    server_ident = SignerIdentity.generate(b"\x5e" * 8)
    registry = Registry()
    registry.add(client_ident.signer_id, client_ident.public_key)
    registry.add(server_ident.signer_id, server_ident.public_key)
    log_path = tmp_path / "ops.log"

    profile = get_profile("wots4", queue_threshold=128, sign_wait_us=2_000_000)
    server = kv.KvServer("127.0.0.1:0", str(log_path), registry, profile,
                         identity=server_ident)
    server.start()
    client = kv.KvClient(f"127.0.0.1:{server.port}", client_ident, registry,
                         server_ident.signer_id, profile)
    yield server, client, registry, str(log_path)
    client.close()
    server.close()


def test_op_codec_roundtrip():
    payload = kv.encode_op(kv.OP_PUT, b"key", b"value")
    assert kv.decode_op(payload) == (kv.OP_PUT, b"key", b"value")
    with pytest.raises(FrameError):
        kv.decode_op(payload[:-1])


def test_put_get_roundtrip(cluster):
    server, client, _, _ = cluster
    assert client.put(b"alpha", b"1") == kv.ST_OK
    assert client.get(b"alpha") == (kv.ST_OK, b"1")
    assert client.get(b"missing") == (kv.ST_NOT_FOUND, b"")
    assert client.put(b"alpha", b"2") == kv.ST_OK
    assert client.get(b"alpha") == (kv.ST_OK, b"2")


def test_audit_replays_log(cluster):
    server, client, registry, log_path = cluster
    for i in range(60):
        assert client.put(f"k{i % 7}".encode(), f"v{i}".encode()) == kv.ST_OK
        client.get(f"k{i % 7}".encode())
    report = kv.audit_log(log_path, registry)
    assert report.ok
    assert report.entries == 120
    assert report.verified == 120
    # auditability: the replayed writes reproduce the server state
    assert report.replayed == server.state()
    # one traditional verification per distinct certified batch
    assert report.ed_verifications == len(report.per_root)


def test_rejected_op_is_not_logged_or_executed(cluster):
    server, client, registry, log_path = cluster
    assert client.put(b"good", b"1") == kv.ST_OK
    payload = kv.encode_op(kv.OP_PUT, b"evil", b"1")
    sig = client.endpoint.sign(payload, hint={server.endpoint.signer_id})
    tampered = bytearray(sig.raw)
    tampered[60] ^= 1
    body = wire.encode_signed_msg(client.endpoint.signer_id, bytes(tampered),
                                  kv.encode_op(kv.OP_PUT, b"evil", b"1"))
    client._reply_ready.clear()
    client._transport.send(b"", wire.FRAME_SIGNED_MSG, body)
    assert client._reply_ready.wait(5)
    status, _ = kv.decode_reply(client._replies.pop())
    assert status == kv.ST_REJECTED
    assert b"evil" not in server.state()
    report = kv.audit_log(log_path, registry)
    assert report.ok
    assert all(b"evil" not in key for key in report.replayed)


def test_tampered_log_flags_exact_entry(cluster, tmp_path, rng):
    server, client, registry, log_path = cluster
    for i in range(20):
        client.put(f"key{i}".encode(), f"val{i}".encode())
    with open(log_path, "rb") as fh:
        data = bytearray(fh.read())

    # find the byte span of entry 7 and corrupt one byte inside its body
    offset = 0
    spans = []
    while offset < len(data):
        length = int.from_bytes(data[offset:offset + 4], "little")
        spans.append((offset + 5, offset + 5 + length))
        offset += 5 + length
    start, end = spans[7]
    tampered = tmp_path / "tampered.log"
    for _ in range(5):
        corrupt = bytearray(data)
        corrupt[rng.randrange(start, end)] ^= 1 + rng.randrange(255)
        tampered.write_bytes(corrupt)
        report = kv.audit_log(str(tampered), registry)
        assert not report.ok
        assert [i for i, _ in report.failures] == [7]


def test_fast_path_dominates_hinted_traffic(cluster):
    server, client, _, _ = cluster
    for i in range(30):
        client.put(b"k%d" % i, b"v")
    # the client's announcements precede its signatures on the same socket
    assert server.fast_verified >= 29
