"""Rank correlation of metric scores against subjective rankings.

A manifest lists ``(hdr_path, ldr_path, rank)`` rows; rows sharing an HDR
path form one set. Subjective rank 1 is the best image, so scores are
correlated against negated ranks and a perfect metric yields +1.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInput, FsitmError, LengthMismatch, ManifestError

MIN_SET_SIZE = 3
MANIFEST_HEADER = ("hdr_path", "ldr_path", "rank")


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"inputs have lengths {a.size} and {b.size}")
    if a.size < MIN_SET_SIZE:
        raise LengthMismatch(f"rank correlation needs at least {MIN_SET_SIZE} samples, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("inputs must be finite")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("an input vector is constant; rank correlation is undefined")
    return a, b


def _doubled_ranks(x: np.ndarray) -> list[int]:
    # average ranks are multiples of 1/2, so doubling gives exact integers
    return [int(round(2 * r)) for r in rankdata(x, method="average")]


def _int_ratio_sqrt(num: int, den_sq: int) -> float:
    root = math.isqrt(den_sq)
    if root * root == den_sq:
        return num / root
    return num / math.sqrt(den_sq)


def srcc(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman rank-order correlation, average ranks for ties.

    The Pearson correlation of the rank vectors is evaluated in integer
    arithmetic, so tie-free inputs give the exact rational value rounded once.
    """
    a, b = _check_pair(a, b)
    ra, rb = _doubled_ranks(a), _doubled_ranks(b)
    n = len(ra)
    sa, sb = sum(ra), sum(rb)
    sxy = n * sum(x * y for x, y in zip(ra, rb)) - sa * sb
    sxx = n * sum(x * x for x in ra) - sa * sa
    syy = n * sum(y * y for y in rb) - sb * sb
    return _int_ratio_sqrt(sxy, sxx * syy)


def _pair_counts(a: np.ndarray, b: np.ndarray) -> tuple[int, int, int, int]:
    """Concordant minus discordant pairs, total pairs, pairs tied in a, pairs tied in b."""
    da = np.sign(a[:, None] - a[None, :])
    db = np.sign(b[:, None] - b[None, :])
    upper = np.triu(np.ones(da.shape, dtype=bool), k=1)
    s = int(np.sum((da * db)[upper]))
    n0 = int(upper.sum())
    ties_a = int(np.sum((da == 0)[upper]))
    ties_b = int(np.sum((db == 0)[upper]))
    return s, n0, ties_a, ties_b


def krcc(a: Sequence[float], b: Sequence[float], variant: str = "a") -> float:
    """Kendall rank-order correlation.

    ``variant="a"`` is ``(concordant - discordant) / (n (n - 1) / 2)`` with no
    tie correction; ``variant="b"`` divides by
    ``sqrt((n0 - ties_a) (n0 - ties_b))`` instead.
    """
    a, b = _check_pair(a, b)
    s, n0, ties_a, ties_b = _pair_counts(a, b)
    if variant == "a":
        return s / n0
    if variant == "b":
        return _int_ratio_sqrt(s, (n0 - ties_a) * (n0 - ties_b))
    raise ValueError(f"unknown Kendall variant {variant!r}")


@dataclass(frozen=True)
class ManifestEntry:
    hdr_path: str
    ldr_path: str
    rank: float


@dataclass
class RankManifest:
    entries: list[ManifestEntry]
    base_dir: Path | None = None

    def sets(self) -> "OrderedDict[str, list[ManifestEntry]]":
        """Entries grouped by HDR path, in order of first appearance."""
        groups: OrderedDict[str, list[ManifestEntry]] = OrderedDict()
        for e in self.entries:
            groups.setdefault(e.hdr_path, []).append(e)
        return groups

    def resolve(self, p: str) -> Path:
        path = Path(p)
        if self.base_dir is not None and not path.is_absolute():
            return self.base_dir / path
        return path

    @classmethod
    def from_csv(cls, path) -> "RankManifest":
        """Parse a ``hdr_path,ldr_path,rank`` CSV; relative paths resolve against its folder."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from None
        manifest = cls.from_text(text)
        manifest.base_dir = path.parent
        return manifest

    @classmethod
    def from_text(cls, text: str) -> "RankManifest":
        reader = csv.reader(io.StringIO(text))
        rows = [r for r in reader if r and any(c.strip() for c in r)]
        if not rows:
            raise ManifestError("manifest is empty: no sets")
        header = tuple(c.strip() for c in rows[0])
        if header != MANIFEST_HEADER:
            raise ManifestError(f"manifest header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}")
        entries = []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != 3:
                raise ManifestError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                rank = float(row[2])
            except ValueError:
                raise ManifestError(f"line {lineno}: rank {row[2]!r} is not a number") from None
            if not math.isfinite(rank):
                raise ManifestError(f"line {lineno}: rank must be finite")
            entries.append(ManifestEntry(row[0].strip(), row[1].strip(), rank))
        if not entries:
            raise ManifestError("manifest has a header but no sets")
        return cls(entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for e in self.entries:
            w.writerow([e.hdr_path, e.ldr_path, f"{e.rank:g}"])
        return buf.getvalue()


@dataclass
class SetResult:
    hdr_id: str
    n: int
    srcc: float | None = None
    krcc: float | None = None
    status: str = "ok"
    errors: list[str] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "hdr_id": self.hdr_id,
            "srcc": self.srcc,
            "krcc": self.krcc,
            "n": self.n,
            "status": self.status,
            "errors": list(self.errors),
        }


def _aggregate(values: list[float]) -> dict | None:
    if not values:
        return None
    return {
        "min": min(values),
        "median": statistics.median(values),
        "average": statistics.fmean(values),
        "std": statistics.stdev(values) if len(values) > 1 else 0.0,
    }


@dataclass
class CorrelationReport:
    per_set: list[SetResult]
    channel: str | None = None
    metric: str | None = None

    def valid(self) -> list[SetResult]:
        return [s for s in self.per_set if s.status == "ok"]

    @property
    def aggregates(self) -> dict:
        ok = self.valid()
        return {
            "srcc": _aggregate([s.srcc for s in ok]),
            "krcc": _aggregate([s.krcc for s in ok]),
        }

    def as_dict(self) -> dict:
        out = {
            "per_set": [s.as_dict() for s in self.per_set],
            "aggregates": self.aggregates,
        }
        if self.channel is not None:
            out["channel"] = self.channel
        if self.metric is not None:
            out["metric"] = self.metric
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        """Aligned table: one row per set, then Min/Median/Average/STD."""
        def fmt(v):
            return "   n/a" if v is None else f"{v:7.4f}"

        width = max([len("Index")] + [len(s.hdr_id) for s in self.per_set])
        title = "FSITM" + (f"^{self.channel}" if self.channel else "")
        lines = [f"{title} rank correlation ({len(self.valid())}/{len(self.per_set)} sets scored)"]
        lines.append(f"{'Set':<{width}}  {'n':>3}  {'SRCC':>7}  {'KRCC':>7}  status")
        for s in self.per_set:
            lines.append(f"{s.hdr_id:<{width}}  {s.n:>3}  {fmt(s.srcc)}  {fmt(s.krcc)}  {s.status}")
            for err in s.errors:
                lines.append(f"{'':<{width}}       ! {err}")
        agg = self.aggregates
        lines.append("")
        lines.append(f"{'Index':<{width}}  {'':>3}  {'SRCC':>7}  {'KRCC':>7}")
        for key, label in (("min", "Min"), ("median", "Median"), ("average", "Average"), ("std", "STD")):
            sv = agg["srcc"][key] if agg["srcc"] else None
            kv = agg["krcc"][key] if agg["krcc"] else None
            lines.append(f"{label:<{width}}  {'':>3}  {fmt(sv)}  {fmt(kv)}")
        return "\n".join(lines) + "\n"


Metric = Callable[[object, object, object], float]


def evaluate(manifest: RankManifest, metric: Metric, c="G", *, loader=None,
             kendall_variant: str = "a", channel_name: str | None = None) -> CorrelationReport:
    """Score every set in ``manifest`` with ``metric(hdr, ldr, c)`` and correlate with ranks.

    ``loader(entry)`` returns ``(hdr, ldr)`` for an entry; by default the
    manifest paths are loaded with :func:`load_hdr` and :func:`load_ldr`.
    Entries that fail to load or score are recorded on their set. Sets left
    with fewer than three scores are marked ``skipped``; sets whose scores
    or ranks are constant are marked ``degenerate``.
    """
    from .image_io import load_hdr, load_ldr

    hdr_cache: dict[str, object] = {}

    def default_loader(entry: ManifestEntry):
        if entry.hdr_path not in hdr_cache:
            hdr_cache[entry.hdr_path] = load_hdr(manifest.resolve(entry.hdr_path))
        return hdr_cache[entry.hdr_path], load_ldr(manifest.resolve(entry.ldr_path))

    loader = loader or default_loader
    results = []
    for hdr_id, entries in manifest.sets().items():
        res = SetResult(hdr_id=hdr_id, n=0)
        scores, ranks = [], []
        for entry in entries:
            try:
                hdr, ldr = loader(entry)
                value = float(metric(hdr, ldr, c))
            except (FsitmError, OSError, ValueError) as exc:
                res.errors.append(f"{entry.ldr_path}: {type(exc).__name__}: {exc}")
                continue
            scores.append(value)
            ranks.append(-entry.rank)
        res.n = len(scores)
        res.scores = scores
        if res.n < MIN_SET_SIZE:
            res.status = "skipped"
        else:
            try:
                res.srcc = srcc(scores, ranks)
                res.krcc = krcc(scores, ranks, variant=kendall_variant)
            except DegenerateInput:
                res.status = "degenerate"
        results.append(res)
    return CorrelationReport(per_set=results, channel=channel_name)
