"""Operation counters used to verify hot-path purity claims.

The design separates cheap hashing from expensive traditional-signature
work, and the tests assert exact budgets per operation (e.g. signing does
zero chain hashes, a warm-cache verification does zero traditional
verifications). Counters are grouped by role:

* ``chain_hashes``  -- short-input hashes advancing one-time-key material
  (Winternitz chain steps, element hashes of subset-reveal keys).
* ``wide_hashes``   -- general 32-byte digests (message digests, key
  expansion, public-key digests).
* ``merkle_hashes`` -- internal-node hashes of certification trees.
* ``ed_signs`` / ``ed_verifies`` -- traditional (Ed25519) operations.

Increments are plain integer adds; they are exact in single-threaded use
(including the deterministic "manual" background mode used by the tests)
and best-effort when multiple threads hash concurrently.
"""

from __future__ import annotations

FIELDS = ("chain_hashes", "wide_hashes", "merkle_hashes", "ed_signs", "ed_verifies")


class Counters:
    __slots__ = FIELDS

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        for f in FIELDS:
            setattr(self, f, 0)

    def add(self, chain_hashes=0, wide_hashes=0, merkle_hashes=0, ed_signs=0, ed_verifies=0):
        if chain_hashes:
            self.chain_hashes += chain_hashes
        if wide_hashes:
            self.wide_hashes += wide_hashes
        if merkle_hashes:
            self.merkle_hashes += merkle_hashes
        if ed_signs:
            self.ed_signs += ed_signs
        if ed_verifies:
            self.ed_verifies += ed_verifies

    def snapshot(self) -> dict:
        return {f: getattr(self, f) for f in FIELDS}

    def capture(self) -> "Capture":
        """Context manager recording the counter delta over a block."""
        return Capture(self)

    def __repr__(self):
        inner = ", ".join(f"{f}={getattr(self, f)}" for f in FIELDS)
        return f"Counters({inner})"


class Capture:
    def __init__(self, counters: Counters):
        self._counters = counters
        self._start: dict = {}

    def __enter__(self) -> "Capture":
        self._start = self._counters.snapshot()
        return self

    def __exit__(self, *exc) -> None:
        end = self._counters.snapshot()
        for f in FIELDS:
            setattr(self, f, end[f] - self._start[f])


#: Process-global counter instance used by the whole library.
counters = Counters()
