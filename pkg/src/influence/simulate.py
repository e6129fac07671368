"""Exact and Monte Carlo influence through the live-edge view of triggering models."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from ._validation import check_positive_int, check_random_state, check_seed_set, spawn_seeds
from .graph import EXPLICIT, INDEPENDENT_CASCADE, LINEAR_THRESHOLD, TriggerModel, reach, reachable_in_topology

MAX_CONFIGURATIONS = 10**7
_CHUNK = 1 << 15


class InstanceTooLargeError(ValueError):
    def __init__(self, count):
        super().__init__(f"exact enumeration needs {count} live-edge configurations "
                         f"(limit {MAX_CONFIGURATIONS})")
        self.count = count


class InfluenceEstimate(NamedTuple):
    mean: float
    stderr: float
    replications: int


def sample_live_edges(model: TriggerModel, rng=None) -> np.ndarray:
    """Draw one live-edge graph; returns a boolean mask over edge slots.

    Linear threshold: each vertex keeps at most one incoming edge, ``(j, i)``
    with probability ``b_ji``. Independent cascade: every edge independently.
    Explicit: each vertex draws a whole trigger set.
    """
    rng = check_random_state(rng)
    g = model.graph
    if model.kind == INDEPENDENT_CASCADE:
        return rng.random(g.m) < g.weight
    if model.kind == LINEAR_THRESHOLD:
        indptr, _, slots = g.in_adjacency
        w = g.weight[slots]
        u = rng.random(g.n)
        csum = np.cumsum(w)
        start = np.concatenate([[0.0], csum])[indptr[:-1]]
        upper = csum - np.repeat(start, np.diff(indptr))
        lower = upper - w
        uu = np.repeat(u, np.diff(indptr))
        live = np.zeros(g.m, dtype=bool)
        live[slots[(lower <= uu) & (uu < upper)]] = True
        return live
    if model.kind == EXPLICIT:
        live = np.zeros(g.m, dtype=bool)
        for v in range(g.n):
            dist = model.trigger_distribution(v)
            probs = np.array([p for _, p in dist])
            choice = rng.choice(len(dist), p=probs / probs.sum())
            for j in dist[choice][0]:
                live[g.slot_index(j, v)] = True
        return live
    raise ValueError(f"unknown model kind {model.kind!r}")


def _replicate(model, seeds, child_seeds):
    return [len(reach(model.graph, sample_live_edges(model, np.random.default_rng(s)), seeds))
            for s in child_seeds]


def estimate_influence(model: TriggerModel, seeds, replications: int, seed=None, threads: int = 1) -> InfluenceEstimate:
    """Monte Carlo mean of the infected-set size.

    Replication ``r`` draws from its own child of ``seed``, so the result does
    not depend on ``threads``.
    """
    replications = check_positive_int(replications, "replications")
    A = check_seed_set(seeds, model.n)
    children = spawn_seeds(seed, replications)
    if threads > 1 and replications > 1:
        chunks = np.array_split(np.arange(replications), min(threads, replications))
        with ThreadPoolExecutor(threads) as pool:
            parts = pool.map(lambda idx: _replicate(model, A, [children[i] for i in idx]), chunks)
        sizes = np.array([x for part in parts for x in part], dtype=float)
    else:
        sizes = np.array(_replicate(model, A, children), dtype=float)
    stderr = float(sizes.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    return InfluenceEstimate(float(sizes.mean()), stderr, replications)


def configuration_count(model: TriggerModel, seeds) -> int:
    """Number of trigger-choice tuples :func:`exact_influence` would enumerate."""
    A = check_seed_set(seeds, model.n)
    relevant = np.setdiff1d(reachable_in_topology(model.graph, A), A)
    return math.prod(len(model.trigger_distribution(v)) for v in relevant.tolist())


def exact_influence(model: TriggerModel, seeds, max_configurations: int = MAX_CONFIGURATIONS) -> float:
    """Expected infected-set size by enumerating every trigger-choice tuple.

    Only vertices reachable from the seeds in the underlying topology are
    enumerated; the others cannot change the reach.
    """
    A = check_seed_set(seeds, model.n)
    relevant = np.setdiff1d(reachable_in_topology(model.graph, A), A).tolist()
    options = [model.trigger_distribution(v) for v in relevant]
    radix = [len(o) for o in options]
    total = math.prod(radix)
    if total > max_configurations:
        raise InstanceTooLargeError(total)
    if not relevant:
        return float(len(A))
    local = {v: i for i, v in enumerate(relevant)}
    # per relevant vertex: option probabilities and, per trigger neighbor, which options contain it
    probs = [np.array([p for _, p in o]) for o in options]
    members = []
    for o in options:
        nbrs = sorted({j for s, _ in o for j in s})
        members.append([(j, np.array([j in s for s, _ in o])) for j in nbrs])
    strides = np.cumprod([1] + radix[:-1])
    in_A = np.zeros(model.n, dtype=bool)
    in_A[A] = True
    expected = 0.0
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(total, lo + _CHUNK))
        digits = [(idx // s) % r for s, r in zip(strides, radix)]
        weight = np.ones(idx.size)
        for d, p in zip(digits, probs):
            weight *= p[d]
        # infected[:, i] for relevant vertex i; seeds are always infected
        infected = np.zeros((idx.size, len(relevant)), dtype=bool)
        gates = [[(j, contains[d]) for j, contains in mem] for d, mem in zip(digits, members)]
        changed = True
        while changed:
            changed = False
            for i, gate in enumerate(gates):
                col = infected[:, i].copy()
                for j, live in gate:
                    if in_A[j]:
                        col |= live
                    elif j in local:
                        col |= live & infected[:, local[j]]
                if (col != infected[:, i]).any():
                    infected[:, i] = col
                    changed = True
        expected += float(weight @ infected.sum(axis=1))
    return len(A) + expected
