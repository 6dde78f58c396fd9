"""Oracle-certified random-table extractors.

A certified table stands in for every construction the source material
only proves to exist: a truth table is drawn from a counter-based
deterministic generator (Philox keyed by a recorded 64-bit seed), its
worst-case error is measured by the oracle, and the measurement travels
with the handle as a :class:`CertificationRecord`.

Tables persist in a content-addressed cache (``EXTRACTOMAT_CACHE``
overrides the location): the file name is the SHA-256 digest of the raw
table bytes, so re-runs are byte-stable and auditable.  Writes go
through a temp file and an atomic rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, TargetUnreachableError
from .extractors import ExtractorHandle, table_handle
from . import oracle as _oracle

XTAB_MAGIC = b"XTAB"
XTAB_VERSION = 1
_KIND_CODES = {"2-source": 0, "t-source": 1, "seeded": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_MODE_CODES = {"exhaustive": 0, "sampled": 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}

MAX_RETRIES = 32


def default_cache_dir() -> Path:
    env = os.environ.get("EXTRACTOMAT_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "extractomat"


@dataclass
class CertificationRecord:
    """What the oracle measured about one random table."""

    digest: str
    kind: str
    widths: tuple
    k_profile: tuple
    m: int
    mode: str
    error: float
    error_exact: str | None  # "num/den" in exhaustive mode
    strong_errors: dict
    leak_bits: int
    seed: int
    attempts: int
    generator: str = "philox-counter"
    record_id: str = ""

    def __post_init__(self):
        if not self.record_id:
            self.record_id = self.digest[:16]
        if self.mode == "exhaustive" and self.error_exact is None:
            raise InvalidInputError("exhaustive records carry exact errors")

    def error_fraction(self) -> Fraction:
        if self.error_exact is not None:
            num, den = self.error_exact.split("/")
            return Fraction(int(num), int(den))
        return Fraction(self.error)

    def to_json_dict(self) -> dict:
        return {
            "digest": self.digest,
            "kind": self.kind,
            "widths": list(self.widths),
            "k_profile": list(self.k_profile),
            "m": self.m,
            "mode": self.mode,
            "error": self.error,
            "error_exact": self.error_exact,
            "strong_errors": {str(k): v for k, v in self.strong_errors.items()},
            "leak_bits": self.leak_bits,
            "seed": self.seed,
            "attempts": self.attempts,
            "generator": self.generator,
            "record_id": self.record_id,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CertificationRecord":
        return cls(
            digest=d["digest"], kind=d["kind"], widths=tuple(d["widths"]),
            k_profile=tuple(d["k_profile"]), m=d["m"], mode=d["mode"],
            error=d["error"], error_exact=d.get("error_exact"),
            strong_errors={int(k): v for k, v in d["strong_errors"].items()},
            leak_bits=d["leak_bits"], seed=d["seed"], attempts=d["attempts"],
            generator=d.get("generator", "philox-counter"),
            record_id=d.get("record_id", ""))


def draw_table(widths, m: int, seed: int, attempt: int = 0) -> np.ndarray:
    """Deterministic random truth table from a counter-based generator."""
    key = (int(seed) + 0x9E3779B97F4A7C15 * attempt) & ((1 << 64) - 1)
    gen = np.random.Generator(np.random.Philox(key=key))
    size = 1 << sum(widths)
    return gen.integers(0, 1 << m, size=size, dtype=np.uint32)


def table_digest(table: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(table, dtype="<u4")
                          .tobytes()).hexdigest()


def certify_random_table(widths, k_profile, m: int, *,
                         kind: str | None = None,
                         mode: str = "auto",
                         seed: int = 0,
                         target_eps: float | None = None,
                         strong=(),
                         leak_bits: int = 0,
                         samples: int = _oracle.DEFAULT_SAMPLES,
                         workers: int = 1,
                         budget: int = _oracle.DEFAULT_BUDGET,
                         cache_dir: Path | None = None,
                         name: str | None = None,
                         max_retries: int = MAX_RETRIES):
    """Draw, measure, persist, and return a certified-table extractor.

    The table is redrawn (up to ``max_retries`` times, each draw
    deterministic in ``(seed, attempt)``) until the measured worst-case
    error is at or below ``target_eps``.  The returned handle's declared
    epsilon is the measured one; ``strong`` indices are measured
    separately and recorded.  ``leak_bits > 0`` additionally ranges the
    measurement over one-sided deterministic leakage maps of that width.

    Returns
    -------
    (ExtractorHandle, CertificationRecord)
    """
    widths = tuple(int(w) for w in widths)
    k_profile = tuple(float(k) for k in k_profile)
    if len(k_profile) != len(widths):
        raise InvalidInputError("one entropy level per input required")
    if kind is None:
        kind = "2-source" if len(widths) == 2 else "t-source"
    if target_eps is not None and target_eps <= 0:
        raise TargetUnreachableError(
            f"target error {target_eps} is unreachable for a finite table", 0)
    strong = tuple(sorted(set(int(i) for i in strong)))
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()

    last = None
    for attempt in range(max_retries):
        table = draw_table(widths, m, seed, attempt)
        digest = table_digest(table)
        cached = _cache_load(cache, digest)
        if cached is not None and _record_matches(
                cached[1], kind, widths, k_profile, m, leak_bits):
            handle, record = cached
        else:
            handle = table_handle(
                name or f"table[{digest[:8]}]", kind, widths, m, table,
                k_profile=k_profile, eps=1.0, strong=strong)
            report, strong_reports = _measure(
                handle, k_profile, strong, leak_bits, mode, samples, seed,
                workers, budget)
            record = CertificationRecord(
                digest=digest, kind=kind, widths=widths, k_profile=k_profile,
                m=m, mode=report.mode, error=float(report.error),
                error_exact=(f"{report.error.numerator}/{report.error.denominator}"
                             if isinstance(report.error, Fraction) else None),
                strong_errors={i: float(r.error)
                               for i, r in strong_reports.items()},
                leak_bits=leak_bits, seed=seed, attempts=attempt + 1)
            handle = table_handle(
                name or f"table[{digest[:8]}]", kind, widths, m, table,
                k_profile=k_profile, eps=min(1.0, max(float(report.error),
                                                      1e-300)),
                strong=strong, record=record)
            save_xtab(cache / f"{digest}.xtab", handle, record)
        last = (handle, record)
        if target_eps is None or record.error <= target_eps:
            return handle, record
    raise TargetUnreachableError(
        f"no table reached error <= {target_eps} in {max_retries} draws "
        f"(best: {last[1].error if last else 'n/a'})", max_retries)


def _record_matches(rec: CertificationRecord, kind, widths, k_profile, m,
                    leak_bits) -> bool:
    return (rec.kind == kind and rec.widths == widths and rec.m == m
            and rec.k_profile == k_profile and rec.leak_bits == leak_bits)


def _measure(handle, k_profile, strong, leak_bits, mode, samples, seed,
             workers, budget):
    """Headline error plus per-strong-index errors for a fresh table."""
    kind = handle.kind
    if kind == "seeded":
        if leak_bits > 0:
            headline = _oracle.worst_case_error_leaked(
                handle, k_profile, leak_bits, strong=True, mode=mode,
                samples=samples, seed=seed, budget=budget)
        else:
            headline = _oracle.worst_case_error_seeded(
                handle, k_profile[0], strong=True, mode=mode,
                samples=samples, seed=seed, budget=budget)
        return headline, {1: headline}
    if kind == "2-source":
        if leak_bits > 0:
            headline = _oracle.worst_case_error_leaked(
                handle, k_profile, leak_bits, strong=None, mode=mode,
                samples=samples, seed=seed, budget=budget)
        else:
            headline = _oracle.worst_case_error_2source(
                handle, k_profile[0], k_profile[1], None, mode=mode,
                samples=samples, seed=seed, workers=workers, budget=budget)
        strong_reports = {}
        for i in strong:
            if leak_bits > 0:
                strong_reports[i] = _oracle.worst_case_error_leaked(
                    handle, k_profile, leak_bits, strong=i, mode=mode,
                    samples=samples, seed=seed, budget=budget)
            else:
                strong_reports[i] = _oracle.worst_case_error_2source(
                    handle, k_profile[0], k_profile[1], i, mode=mode,
                    samples=samples, seed=seed, workers=workers, budget=budget)
        return headline, strong_reports
    # t-source: measured via the strong-on-all-but-last composite oracle
    headline = _oracle.worst_case_error_multi(
        handle, k_profile, b=leak_bits, mode=mode, samples=samples,
        seed=seed, budget=budget)
    return headline, {}


# ----------------------------------------------------------------------
# XTAB files and the cache
# ----------------------------------------------------------------------

def save_xtab(path: Path, handle: ExtractorHandle,
              record: CertificationRecord) -> None:
    """Write header + little-endian table + trailing JSON record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    widths = handle.input_widths
    head = XTAB_MAGIC + struct.pack(
        "<HBBBBQ", XTAB_VERSION, _KIND_CODES[handle.kind],
        _MODE_CODES[record.mode], len(widths), handle.m, record.seed)
    head += struct.pack(f"<{len(widths)}B", *widths)
    head += struct.pack(f"<{len(widths)}d", *record.k_profile)
    body = np.ascontiguousarray(handle.table(), dtype="<u4").tobytes()
    tail = json.dumps(record.to_json_dict()).encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(head + body + tail)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_xtab(path: Path):
    """Read an XTAB file back into (handle, record)."""
    data = Path(path).read_bytes()
    if data[:4] != XTAB_MAGIC:
        raise InvalidInputError(f"{path}: not an XTAB file")
    version, kind_c, mode_c, arity, m, seed = struct.unpack(
        "<HBBBBQ", data[4:18])
    if version != XTAB_VERSION:
        raise InvalidInputError(f"{path}: unsupported XTAB version {version}")
    pos = 18
    widths = struct.unpack(f"<{arity}B", data[pos:pos + arity])
    pos += arity
    k_profile = struct.unpack(f"<{arity}d", data[pos:pos + 8 * arity])
    pos += 8 * arity
    size = 1 << sum(widths)
    table = np.frombuffer(data[pos:pos + 4 * size], dtype="<u4").astype(np.uint32)
    pos += 4 * size
    record = CertificationRecord.from_json_dict(json.loads(data[pos:]))
    handle = table_handle(
        f"table[{record.digest[:8]}]", _KIND_NAMES[kind_c], widths, m, table,
        k_profile=k_profile, eps=min(1.0, max(record.error, 1e-300)),
        strong=tuple(record.strong_errors), record=record)
    return handle, record


def _cache_load(cache: Path, digest: str):
    path = cache / f"{digest}.xtab"
    if path.exists():
        return load_xtab(path)
    return None
