"""Synthetic edge lists for testing and benchmarks."""
from __future__ import annotations

import numpy as np

from .relation import Relation

KINDS = ("star-skew", "uniform", "random", "zipf")


def star_skew(n: int, rel_id: str = "R") -> Relation:
    """(1,1), (1,2), ..., (1,n), (2,1), ..., (n,1): 2n - 1 tuples."""
    if n < 2:
        raise ValueError("n must be >= 2")
    i = np.arange(1, n + 1, dtype=np.int64)
    ones = np.ones(n, dtype=np.int64)
    pairs = np.concatenate([np.column_stack([ones, i]), np.column_stack([i[1:], ones[1:]])])
    return Relation.from_pairs(rel_id, pairs)


def identity(n: int, rel_id: str = "R") -> Relation:
    if n < 2:
        raise ValueError("n must be >= 2")
    i = np.arange(1, n + 1, dtype=np.int64)
    return Relation.from_pairs(rel_id, np.column_stack([i, i]))


def random_uniform(n: int, domain: int | None = None, seed: int = 0, rel_id: str = "R") -> Relation:
    """Up to n distinct pairs drawn uniformly from [1, domain]^2."""
    rng = np.random.default_rng(seed)
    domain = domain or max(2, int(np.sqrt(n) * 2))
    pairs = rng.integers(1, domain + 1, size=(n, 2))
    return Relation.from_pairs(rel_id, pairs)


def zipf(n: int, a: float = 1.5, domain: int | None = None, seed: int = 0, rel_id: str = "R") -> Relation:
    """Pairs whose endpoints follow a truncated Zipf law, so a few values are very heavy."""
    rng = np.random.default_rng(seed)
    domain = domain or max(2, n)
    ranks = np.arange(1, domain + 1, dtype=np.float64)
    p = ranks ** -a
    p /= p.sum()
    pairs = rng.choice(domain, size=(n, 2), p=p) + 1
    return Relation.from_pairs(rel_id, pairs)


def generate(kind: str, n: int, seed: int = 0, rel_id: str = "R") -> Relation:
    if kind == "star-skew":
        return star_skew(n, rel_id)
    if kind == "uniform":
        return identity(n, rel_id)
    if kind == "random":
        return random_uniform(n, seed=seed, rel_id=rel_id)
    if kind == "zipf":
        return zipf(n, seed=seed, rel_id=rel_id)
    raise ValueError(f"unknown generator {kind!r}; choose from {KINDS}")
