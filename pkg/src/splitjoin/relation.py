"""Deduplicated binary relations and their per-attribute degree summaries."""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import kernels

SUMMARY_CAP = 100_000

_SPLIT = re.compile(r"[\s,]+")


class ParseError(ValueError):
    def __init__(self, lineno: int, line: str, path=None):
        self.lineno = lineno
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{lineno}: expected two integers, got {line!r}")


class EmptyRelation(ValueError):
    pass


def _canonical(pairs: np.ndarray, dedup: bool = True) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if dedup:
        return np.unique(pairs, axis=0) if len(pairs) else pairs
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


@dataclass(frozen=True, eq=False)
class Relation:
    """A set of (int64, int64) tuples, stored sorted as an (n, 2) array.

    Column 0 holds the relation's first attribute, column 1 its second.
    """

    rel_id: str
    data: np.ndarray
    _deg_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_pairs(cls, rel_id: str, pairs: Iterable, dedup: bool = True) -> "Relation":
        arr = np.array(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        return cls(rel_id, _canonical(arr.reshape(-1, 2), dedup))

    def renamed(self, rel_id: str) -> "Relation":
        return Relation(rel_id, self.data, self._deg_cache)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    def __len__(self):
        return self.n

    @property
    def tuples(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.data.tolist()))

    def column(self, attr: int) -> np.ndarray:
        return self.data[:, attr]

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return self.rel_id == other.rel_id and np.array_equal(self.data, other.data)

    __hash__ = None

    def value_degrees(self, attr: int) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values of a column and their degrees, both sorted by value."""
        if attr not in self._deg_cache:
            col = np.sort(self.data[:, attr])
            if len(col) == 0:
                res = (col, np.empty(0, dtype=np.int64))
            else:
                starts = np.flatnonzero(np.r_[True, col[1:] != col[:-1]])
                res = (col[starts], kernels.group_counts(col, presorted=True))
            self._deg_cache[attr] = res
        return self._deg_cache[attr]


def _attr_index(attr) -> int:
    if attr in (0, "first"):
        return 0
    if attr in (1, "second"):
        return 1
    raise ValueError(f"attribute must be 0/'first' or 1/'second', got {attr!r}")


def parse_edge_list(text: str, rel_id: str = "R", dedup: bool = True, path=None) -> Relation:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) != 2:
            raise ParseError(lineno, raw, path)
        try:
            rows.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(lineno, raw, path) from None
    if not rows:
        raise EmptyRelation(f"{path or rel_id}: no tuples")
    return Relation(rel_id, _canonical(np.array(rows, dtype=np.int64), dedup))


def load_edge_list(path, dedup: bool = True, rel_id: Optional[str] = None) -> Relation:
    path = Path(path)
    return parse_edge_list(path.read_text(), rel_id or path.stem, dedup, path)


def write_edge_list(rel: Relation, path) -> None:
    np.savetxt(path, rel.data, fmt="%d")


def degree(rel: Relation, attr, value: int) -> int:
    vals, degs = rel.value_degrees(_attr_index(attr))
    i = np.searchsorted(vals, value)
    if i < len(vals) and vals[i] == value:
        return int(degs[i])
    return 0


@dataclass(frozen=True)
class DegreeSummary:
    attr: int
    entries: list[tuple[int, int]]
    capped: bool
    total: int
    distinct: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "degree"])
        w.writerows(self.entries)
        return buf.getvalue()


def build_summary(rel: Relation, attr, cap: int = SUMMARY_CAP) -> DegreeSummary:
    """(value, degree) pairs by non-increasing degree, ties by value; top ``cap`` kept."""
    a = _attr_index(attr)
    vals, degs = rel.value_degrees(a)
    order = np.lexsort((vals, -degs))
    capped = len(order) > cap
    order = order[:cap]
    entries = list(zip(vals[order].tolist(), degs[order].tolist()))
    return DegreeSummary(a, entries, capped, rel.n, len(vals))


def max_degree(rel: Relation, attr) -> int:
    _, degs = rel.value_degrees(_attr_index(attr))
    return int(degs.max()) if len(degs) else 0


def degree_map(rel: Relation, attr) -> dict[int, int]:
    vals, degs = rel.value_degrees(_attr_index(attr))
    return dict(zip(vals.tolist(), degs.tolist()))
