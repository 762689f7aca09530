"""Split-threshold selection from degree sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .relation import DegreeSummary, Relation, _attr_index

INFINITE = math.inf


@dataclass(frozen=True)
class SplitConstants:
    delta1: float = 5
    delta2: float = 240
    enable_skip: bool = True
    # "k": tau is the index K itself; "degk": tau = deg_K
    strategy: str = "k"

    def __post_init__(self):
        if self.delta1 < 1 or self.delta2 < 1:
            raise ValueError("delta1 and delta2 must be >= 1")
        if self.strategy not in ("k", "degk"):
            raise ValueError(f"unknown threshold strategy {self.strategy!r}")


@dataclass(frozen=True)
class DegreeSequence:
    degs: tuple[int, ...]

    def __post_init__(self):
        d = self.degs
        if any(x < 1 for x in d) or any(d[i] < d[i + 1] for i in range(len(d) - 1)):
            raise ValueError("degree sequence must be non-increasing and positive")

    @classmethod
    def of(cls, degrees) -> "DegreeSequence":
        return cls(tuple(sorted((int(x) for x in degrees), reverse=True)))

    @property
    def m(self) -> int:
        return len(self.degs)

    def __getitem__(self, j: int) -> int:
        """1-based access; positions past the end have degree 0."""
        return self.degs[j - 1] if 1 <= j <= len(self.degs) else 0

    def __len__(self):
        return len(self.degs)


@dataclass(frozen=True)
class Threshold:
    tau: float
    k_index: Optional[int] = None
    skipped: bool = False
    reason: str = ""

    @property
    def finite(self) -> bool:
        return not self.skipped and math.isfinite(self.tau)

    def to_json(self):
        if not self.finite:
            return {"tau": None, "skipped": True, "reason": self.reason, "k": self.k_index}
        return {"tau": int(self.tau), "k": self.k_index}


def first_index_k(degs: Sequence[int]) -> int:
    """Smallest 1-based j with j >= deg_j, or m + 1 when every deg_j > j."""
    d = np.asarray(degs, dtype=np.int64)
    hits = np.flatnonzero(np.arange(1, len(d) + 1) >= d)
    return int(hits[0]) + 1 if len(hits) else len(d) + 1


def degree_sequence(rel: Relation, attr) -> DegreeSequence:
    _, degs = rel.value_degrees(_attr_index(attr))
    return DegreeSequence(tuple(np.sort(degs)[::-1].tolist()))


def choose_threshold(seq: DegreeSequence, consts: SplitConstants = SplitConstants()) -> Threshold:
    if seq.m == 0:
        return Threshold(INFINITE, None, True, "empty degree sequence")
    k = first_index_k(seq.degs)
    if consts.enable_skip and seq[1] / consts.delta1 <= k <= consts.delta2:
        return Threshold(INFINITE, k, True, f"deg1/delta1={seq[1] / consts.delta1:g} <= K={k} <= {consts.delta2:g}")
    tau = k if consts.strategy == "k" else max(1, seq[k])
    return Threshold(tau, k)


def threshold_from_summary(
    summary: DegreeSummary, rel: Relation, consts: SplitConstants = SplitConstants()
) -> Threshold:
    """Threshold from a capped summary, recounting when K lies beyond the cap."""
    degs = [d for _, d in summary.entries]
    k = first_index_k(degs)
    if k > len(degs) and summary.capped:
        return choose_threshold(degree_sequence(rel, summary.attr), consts)
    return choose_threshold(DegreeSequence(tuple(degs)), consts)


def combined_degrees(rel_r: Relation, attr_r, rel_t: Relation, attr_t) -> tuple[np.ndarray, np.ndarray]:
    """Values present in both columns and their min-degree, sorted by value."""
    vr, dr = rel_r.value_degrees(_attr_index(attr_r))
    vt, dt = rel_t.value_degrees(_attr_index(attr_t))
    common, ir, it = np.intersect1d(vr, vt, assume_unique=True, return_indices=True)
    return common, np.minimum(dr[ir], dt[it])


def combined_degree_sequence(rel_r: Relation, attr_r, rel_t: Relation, attr_t) -> DegreeSequence:
    _, d = combined_degrees(rel_r, attr_r, rel_t, attr_t)
    return DegreeSequence(tuple(np.sort(d)[::-1].tolist()))


def theory_threshold(n: int) -> Threshold:
    if n < 1:
        raise ValueError("n must be >= 1")
    r = math.isqrt(n)
    return Threshold(r if r * r == n else r + 1, None)
