"""Analytical cost model for the hybrid-signature parameter space.

For every supported configuration this computes, from the layout
formulas alone (no keys are generated):

* expected critical hashes -- hash work on the verification hot path;
* serialized signature size in bytes (one-time payload plus the fixed
  363-byte hybrid framing: prefix, leaf digest, 7-level proof, root
  signature);
* background hashes per key -- generation work off the hot path;
* background traffic per verifier per signature.

Chained keys at depth d spend chains*(d-1)/2 expected hashes verifying
and chains*(d-1) generating. Subset-reveal keys verify in exactly k
hashes; factorized ones generate in t, merklified ones in 2t-2 (element
hashing plus a two-subtree forest). Digest-mode announcements amortize
to ~33 B per key; merklified keys ship the whole t*16-byte public key
ahead of time instead.

The merklified signature size uses this artifact's own proof layout
(k secrets plus k inclusion paths of 16-byte nodes); the reference
analysis reaches smaller numbers through a proof encoding it does not
specify, so those sizes are flagged as model-dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .certifier import BATCH_SIZE
from .hors import HorsParams
from .profiles import LEAF_LEN, ROOT_SIG_LEN, SIG_PREFIX_LEN
from .wots import WotsParams

#: everything in a serialized signature except the one-time payload
HYBRID_OVERHEAD = SIG_PREFIX_LEN + LEAF_LEN + 7 * 32 + ROOT_SIG_LEN   # 363

WOTS_DEPTHS = (2, 4, 8, 16, 32)
HORS_KS = (8, 16, 32, 64)

#: amortized announcement bytes per key: body header + digests + root sig
ANNOUNCE_PER_KEY = round((22 + BATCH_SIZE * 32 + 64) / BATCH_SIZE)


@dataclass(frozen=True)
class AnalyzerRow:
    scheme: str              # "wots", "hors-f" or "hors-m"
    param: int               # chain depth d, or reveal count k
    critical_hashes: float
    sig_bytes: int
    bg_hashes: int
    bg_bytes: int
    note: str = ""

    @property
    def label(self) -> str:
        return f"{'d' if self.scheme == 'wots' else 'k'}={self.param}"


def wots_rows() -> list[AnalyzerRow]:
    rows = []
    for d in WOTS_DEPTHS:
        p = WotsParams(d=d)
        rows.append(AnalyzerRow(
            scheme="wots", param=d,
            critical_hashes=p.expected_verify_hashes,
            sig_bytes=p.signature_size + HYBRID_OVERHEAD,
            bg_hashes=p.keygen_hashes,
            bg_bytes=ANNOUNCE_PER_KEY))
    return rows


def hors_factorized_rows() -> list[AnalyzerRow]:
    rows = []
    for k in HORS_KS:
        p = HorsParams(k=k)
        rows.append(AnalyzerRow(
            scheme="hors-f", param=k,
            critical_hashes=float(k),
            sig_bytes=p.payload_size + HYBRID_OVERHEAD,
            bg_hashes=p.t,
            bg_bytes=ANNOUNCE_PER_KEY))
    return rows


def hors_merklified_rows() -> list[AnalyzerRow]:
    rows = []
    for k in HORS_KS:
        p = HorsParams(k=k)
        sig = k * 16 + k * p.logt * 16 + HYBRID_OVERHEAD
        rows.append(AnalyzerRow(
            scheme="hors-m", param=k,
            critical_hashes=float(k),
            sig_bytes=sig,
            bg_hashes=2 * p.t - 2,
            bg_bytes=p.t * 16,
            note="size uses this artifact's proof layout"))
    return rows


_SCHEME_BUILDERS = {
    "wots": wots_rows,
    "hors-f": hors_factorized_rows,
    "hors-m": hors_merklified_rows,
}


def analyze(scheme: str = "all") -> list[AnalyzerRow]:
    if scheme == "all":
        names = ("hors-f", "hors-m", "wots")
    elif scheme in _SCHEME_BUILDERS:
        names = (scheme,)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    rows: list[AnalyzerRow] = []
    for name in names:
        rows.extend(_SCHEME_BUILDERS[name]())
    return rows


def format_quantity(n: int) -> str:
    """Large cells render in Ki/Mi like the layouts they reproduce;
    anything under 32 Ki stays exact."""
    if n >= 1_000_000:
        return f"{round(n / (1 << 20))}Mi"
    if n >= 32768:
        return f"{round(n / 1024)}Ki"
    return f"{n:,}"


def _critical_cell(row: AnalyzerRow) -> str:
    if row.scheme == "wots":
        # expectations are *.0 or *.5; render half-up like the reference
        return f"≈ {int(row.critical_hashes + 0.5)}"
    return str(int(row.critical_hashes))


_TITLES = {
    "wots": "Chained one-time keys (W-OTS+)",
    "hors-f": "Subset reveal, factorized public keys (HORS)",
    "hors-m": "Subset reveal, merklified public keys (HORS, analyzer only)",
}


def render_table(rows: list[AnalyzerRow]) -> str:
    header = (f"{'Conf':<8}{'# Critical Hashes':>19}{'Signature Size (B)':>21}"
              f"{'# BG Hashes':>14}{'BG Traffic (B/Verifier)':>26}")
    out = []
    flagged = False
    last_scheme = None
    for row in rows:
        if row.scheme != last_scheme:
            out.append(_TITLES[row.scheme])
            out.append(header)
            last_scheme = row.scheme
        size_cell = format_quantity(row.sig_bytes)
        if row.note:
            size_cell += "*"
            flagged = True
        out.append(f"{row.label:<8}{_critical_cell(row):>19}{size_cell:>21}"
                   f"{format_quantity(row.bg_hashes):>14}"
                   f"{format_quantity(row.bg_bytes):>26}")
    if flagged:
        out.append("* size uses this artifact's proof layout (k inclusion paths of"
                   " 16-byte nodes); reference sizes for merklified keys are not"
                   " reproduced by any single layout formula")
    return "\n".join(out)


def render_csv(rows: list[AnalyzerRow]) -> str:
    lines = ["scheme,param,critical_hashes,sig_bytes,bg_hashes,bg_bytes"]
    for r in rows:
        crit = int(r.critical_hashes) if r.critical_hashes.is_integer() else r.critical_hashes
        lines.append(f"{r.scheme},{r.param},{crit},{r.sig_bytes},{r.bg_hashes},{r.bg_bytes}")
    return "\n".join(lines)
