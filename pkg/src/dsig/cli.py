"""Command-line surface: parameter analysis, benchmarks, and the KV demo.

Exit codes: 0 success, 1 verification or audit failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analyzer, bench, config, kv
from .certifier import Registry, SignerIdentity
from .errors import ConfigError, DsigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsig",
        description="hybrid online/offline signatures: analyze, benchmark, demo")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print the analytical cost model")
    p.add_argument("--scheme", default="all", choices=["all", "wots", "hors-f", "hors-m"])
    p.add_argument("--format", default="table", choices=["table", "csv"])

    p = sub.add_parser("bench", help="microbenchmarks")
    bench_sub = p.add_subparsers(dest="bench_mode", required=True)

    pl = bench_sub.add_parser("local", help="single-process latency/throughput")
    pl.add_argument("--scheme", default="wots4", choices=["wots4", "hors32", "hors64"])
    pl.add_argument("--iters", type=int, default=2000)
    pl.add_argument("--message-size", type=int, default=8)
    pl.add_argument("--compare-kernels", action="store_true",
                    help="also compare compiled and pure-python kernels")

    pn = bench_sub.add_parser("net", help="two-process sign/verify over TCP")
    pn.add_argument("--role", required=True, choices=["signer", "verifier"])
    pn.add_argument("--config", help="key=value config file supplying defaults")
    pn.add_argument("--peer", help="verifier address host:port (signer role)")
    pn.add_argument("--peer-id", help="verifier signer-id hex (signer role)")
    pn.add_argument("--listen", help="bind address host:port (verifier role)")
    pn.add_argument("--keyfile", help="registry of peer public keys")
    pn.add_argument("--identity", help="own identity file")
    pn.add_argument("--scheme", choices=["wots4", "hors32", "hors64"])
    pn.add_argument("--iters", type=int, default=1000)

    p = sub.add_parser("kv", help="auditable key-value store demo")
    kv_sub = p.add_subparsers(dest="kv_mode", required=True)

    ps = kv_sub.add_parser("serve", help="run the server")
    ps.add_argument("--config", help="key=value config file supplying defaults")
    ps.add_argument("--listen")
    ps.add_argument("--log", help="append-only audit log path")
    ps.add_argument("--keyfile", help="registry of client public keys")
    ps.add_argument("--scheme", choices=["wots4", "hors32", "hors64"])

    pc = kv_sub.add_parser("client", help="issue signed operations")
    pc.add_argument("--config", help="key=value config file supplying defaults")
    pc.add_argument("--peer", help="server address host:port")
    pc.add_argument("--server-id", help="server signer-id hex")
    pc.add_argument("--identity", help="client identity file")
    pc.add_argument("--keyfile")
    pc.add_argument("--scheme", choices=["wots4", "hors32", "hors64"])
    pc.add_argument("op", choices=["put", "get"])
    pc.add_argument("key")
    pc.add_argument("value", nargs="?")

    pa = kv_sub.add_parser("audit", help="offline verification of the log")
    pa.add_argument("--config", help="key=value config file supplying defaults")
    pa.add_argument("--log")
    pa.add_argument("--keyfile")
    pa.add_argument("--scheme", choices=["wots4", "hors32", "hors64"])

    p = sub.add_parser("keygen", help="create an identity and register it")
    p.add_argument("--id", help="8-byte signer id in hex (random when omitted)")
    p.add_argument("--identity-out", required=True, help="private identity file to write")
    p.add_argument("--registry", help="registry file to create or append to")

    return parser


def _cmd_analyze(args) -> int:
    rows = analyzer.analyze(args.scheme)
    if args.format == "csv":
        print(analyzer.render_csv(rows))
    else:
        print(analyzer.render_table(rows))
    return 0


def _settings(args):
    """Optional config file supplies defaults; explicit flags win."""
    cfg = config.load(args.config) if getattr(args, "config", None) else config.RuntimeConfig()
    if getattr(args, "scheme", None):
        cfg.scheme = args.scheme
    return cfg, cfg.profile()


def _require(value, flag: str):
    if not value:
        print(f"{flag} is required (flag or config file)", file=sys.stderr)
        raise SystemExit(2)
    return value


def _cmd_bench(args) -> int:
    if args.bench_mode == "local":
        print(bench.bench_local(args.scheme, args.iters, args.message_size,
                                args.compare_kernels))
        return 0
    cfg, profile = _settings(args)
    registry = Registry.load(_require(args.keyfile or cfg.keyfile, "--keyfile"))
    identity = SignerIdentity.load(_require(args.identity or cfg.identity, "--identity"))
    if args.role == "verifier":
        listen = _require(args.listen or cfg.listen, "--listen")
        print(bench.bench_net_verifier(listen, registry, identity, profile))
        return 0
    if args.peer and args.peer_id:
        peer, peer_id = args.peer, bytes.fromhex(args.peer_id)
    elif len(cfg.peers) == 1:
        peer_id, peer = next(iter(cfg.peers.items()))
    else:
        print("--peer and --peer-id (or one configured peer) are required",
              file=sys.stderr)
        return 2
    try:
        report = bench.bench_net_signer(peer, peer_id, registry, identity,
                                        args.iters, profile=profile,
                                        groups=cfg.groups or None)
    except (ConnectionError, OSError) as exc:
        print(f"peer unreachable: {exc}", file=sys.stderr)
        return 1
    print(report)
    return 0


def _cmd_kv(args) -> int:
    cfg, profile = _settings(args)
    keyfile = _require(args.keyfile or cfg.keyfile, "--keyfile")
    registry = Registry.load(keyfile)

    if args.kv_mode == "serve":
        listen = _require(args.listen or cfg.listen, "--listen")
        log_path = _require(args.log or cfg.log, "--log")
        server = kv.KvServer(listen, log_path, registry, profile)
        print(f"serving on {listen}, logging to {log_path}", flush=True)
        server.serve_forever()
        return 0

    if args.kv_mode == "client":
        identity = SignerIdentity.load(_require(args.identity or cfg.identity,
                                                "--identity"))
        if args.peer and args.server_id:
            peer, server_id = args.peer, bytes.fromhex(args.server_id)
        elif len(cfg.peers) == 1:
            server_id, peer = next(iter(cfg.peers.items()))
        else:
            print("--peer and --server-id (or one configured peer) are required",
                  file=sys.stderr)
            return 2
        client = kv.KvClient(peer, identity, registry, server_id, profile,
                             groups=cfg.groups or None)
        try:
            if args.op == "put":
                if args.value is None:
                    print("put requires a value", file=sys.stderr)
                    return 2
                status = client.put(args.key.encode(), args.value.encode())
                print(f"status {status}")
                return 0 if status == kv.ST_OK else 1
            status, value = client.get(args.key.encode())
            if status == kv.ST_OK:
                print(value.decode(errors="replace"))
                return 0
            print(f"status {status}", file=sys.stderr)
            return 1
        finally:
            client.close()

    report = kv.audit_log(_require(args.log or cfg.log, "--log"), registry, profile)
    print(f"entries              {report.entries}")
    print(f"verified             {report.verified}")
    print(f"distinct key batches {len(report.per_root)}")
    print(f"traditional verifies {report.ed_verifications}")
    for index, reason in report.failures:
        print(f"FAILED entry {index}: {reason}")
    print("audit OK" if report.ok else "audit FAILED")
    return 0 if report.ok else 1


def _cmd_keygen(args) -> int:
    try:
        signer_id = bytes.fromhex(args.id) if args.id else os.urandom(8)
    except ValueError:
        signer_id = b""
    if len(signer_id) != 8:
        print("signer id must be 8 bytes of hex", file=sys.stderr)
        return 2
    identity = SignerIdentity.generate(signer_id)
    identity.save(args.identity_out)
    print(f"identity {signer_id.hex()} written to {args.identity_out}")
    if args.registry:
        registry = (Registry.load(args.registry)
                    if os.path.exists(args.registry) else Registry())
        registry.add(identity.signer_id, identity.public_key)
        registry.save(args.registry)
        print(f"public key registered in {args.registry}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "kv":
            return _cmd_kv(args)
        if args.command == "keygen":
            return _cmd_keygen(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DsigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
