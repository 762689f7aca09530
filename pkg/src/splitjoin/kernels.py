"""Hot loops of the executor, compiled with numba when available.

Set ``SPLITJOIN_BACKEND=numpy`` to force the pure-numpy path (useful for
debugging and for the kernel benchmark). Both paths return identical arrays.
"""
from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("SPLITJOIN_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError
    from numba import njit
except ImportError:
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


def _expand_numpy(lo, counts, order):
    total = int(counts.sum())
    left = np.repeat(np.arange(lo.shape[0], dtype=np.int64), counts)
    starts = np.cumsum(counts) - counts
    offsets = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    right = order[np.repeat(lo, counts) + offsets]
    return left, right


def _run_lengths_numpy(s):
    if s.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    bounds = np.flatnonzero(np.r_[True, s[1:] != s[:-1], True])
    return np.diff(bounds).astype(np.int64)


if njit is not None:

    @njit(cache=True)
    def _expand_numba(lo, counts, order):
        n = lo.shape[0]
        total = 0
        for i in range(n):
            total += counts[i]
        left = np.empty(total, dtype=np.int64)
        right = np.empty(total, dtype=np.int64)
        k = 0
        for i in range(n):
            base = lo[i]
            for j in range(counts[i]):
                left[k] = i
                right[k] = order[base + j]
                k += 1
        return left, right

    @njit(cache=True)
    def _run_lengths_numba(s):
        if s.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        out = np.empty(s.shape[0], dtype=np.int64)
        g = 0
        run = 1
        for i in range(1, s.shape[0]):
            if s[i] == s[i - 1]:
                run += 1
            else:
                out[g] = run
                g += 1
                run = 1
        out[g] = run
        return out[: g + 1]

    _expand = _expand_numba
    _run_lengths = _run_lengths_numba
else:
    _expand = _expand_numpy
    _run_lengths = _run_lengths_numpy


def equi_join_indices(probe_keys: np.ndarray, build_keys: np.ndarray, backend: str | None = None):
    """Index pairs ``(i, j)`` with ``probe_keys[i] == build_keys[j]``.

    The build side is indexed by sorting; probes are resolved by binary
    search. Pairs come out grouped by probe row, build rows in build order.
    """
    order = np.argsort(build_keys, kind="stable").astype(np.int64)
    sorted_keys = build_keys[order]
    lo = np.searchsorted(sorted_keys, probe_keys, side="left").astype(np.int64)
    hi = np.searchsorted(sorted_keys, probe_keys, side="right").astype(np.int64)
    counts = hi - lo
    expand = _expand if backend is None else _pick("expand", backend)
    return expand(lo, counts, order)


def group_counts(keys: np.ndarray, backend: str | None = None, presorted: bool = False) -> np.ndarray:
    """Multiplicity of each distinct key, ordered by key."""
    fn = _run_lengths if backend is None else _pick("run_lengths", backend)
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    return fn(keys if presorted else np.sort(keys))


def _pick(name, backend):
    if backend == "numpy" or njit is None:
        return {"expand": _expand_numpy, "run_lengths": _run_lengths_numpy}[name]
    return {"expand": _expand_numba, "run_lengths": _run_lengths_numba}[name]


def dense_keys(*columns: np.ndarray) -> np.ndarray:
    """Map rows of several int64 columns to dense int64 ids (equal rows, equal ids)."""
    if len(columns) == 1:
        return columns[0]
    ids = None
    for col in columns:
        uniq, inv = np.unique(col, return_inverse=True)
        inv = inv.astype(np.int64).reshape(-1)
        if ids is None:
            ids = inv
        else:
            ids = ids * np.int64(len(uniq)) + inv
            _, ids = np.unique(ids, return_inverse=True)
            ids = ids.astype(np.int64).reshape(-1)
    return ids
