"""Oblivious adversaries.

An adversary only sees the game configuration and its own random stream.
``generate`` returns the whole ``(T, m)`` boolean open-edge schedule up
front, so it cannot react to the player.
"""
from __future__ import annotations

import math

import numpy as np


class Adversary:
    label = "adversary"

    def generate(self, config, rng) -> np.ndarray:
        raise NotImplementedError


def _check_distinguished(distinguished, n):
    if distinguished is None:
        return None
    d = int(distinguished)
    if not 0 <= d < n:
        raise ValueError(f"distinguished vertex {d} outside 0..{n - 1}")
    return d


class CliqueAdversary(Adversary):
    """Opens every edge inside a random vertex subset, drawn afresh each round.

    The distinguished vertex (if any) joins with probability ``c/n``, every
    other vertex with ``c/n * (1 - delta)``.
    """

    def __init__(self, c: float, delta: float = 0.0, distinguished=None):
        if c <= 0 or not 0.0 <= delta < 1.0:
            raise ValueError(f"need c > 0 and 0 <= delta < 1, got c={c}, delta={delta}")
        self.c = float(c)
        self.delta = float(delta)
        self.distinguished = distinguished
        self.label = "clique"

    def inclusion_probabilities(self, n: int) -> np.ndarray:
        if self.c > n:
            raise ValueError(f"c={self.c} exceeds n={n}")
        d = _check_distinguished(self.distinguished, n)
        probs = np.full(n, self.c / n * (1.0 - self.delta))
        if d is not None:
            probs[d] = self.c / n
        return probs

    def draw_members(self, n: int, rounds: int, rng) -> np.ndarray:
        return rng.random((rounds, n)) < self.inclusion_probabilities(n)

    def generate(self, config, rng):
        g = config.graph
        if g.directed:
            raise ValueError("the clique adversary needs an undirected graph")
        inside = self.draw_members(g.n, config.horizon, rng)
        return inside[:, g.src] & inside[:, g.dst]


class SourceSinkAdversary(Adversary):
    """Labels vertices source, sink or neither and opens every source-to-sink edge.

    One uniform draw per vertex: below ``p_src`` is a source, the next
    ``d/n`` is a sink. ``p_src`` is ``c/n`` for the distinguished vertex and
    ``c/n * (1 - delta)`` otherwise.
    """

    def __init__(self, c: float, d: float, delta: float = 0.0, distinguished=None):
        if c <= 0 or d < 0 or not 0.0 <= delta < 1.0:
            raise ValueError(f"need c > 0, d >= 0, 0 <= delta < 1; got c={c}, d={d}, delta={delta}")
        self.c = float(c)
        self.d = float(d)
        self.delta = float(delta)
        self.distinguished = distinguished
        self.label = "source-sink"

    def label_probabilities(self, n: int):
        if self.c / n + self.d / n > 1.0 + 1e-12:
            raise ValueError(f"c/n + d/n must not exceed 1 (c={self.c}, d={self.d}, n={n})")
        dist = _check_distinguished(self.distinguished, n)
        p_src = np.full(n, self.c / n * (1.0 - self.delta))
        if dist is not None:
            p_src[dist] = self.c / n
        return p_src, self.d / n

    def draw_labels(self, n: int, rounds: int, rng):
        """Boolean ``(sources, sinks)`` arrays of shape ``(rounds, n)``."""
        p_src, p_sink = self.label_probabilities(n)
        u = rng.random((rounds, n))
        source = u < p_src
        sink = ~source & (u < p_src + p_sink)
        return source, sink

    def generate(self, config, rng):
        g = config.graph
        if not g.directed:
            raise ValueError("the source-sink adversary needs a directed graph")
        source, sink = self.draw_labels(g.n, config.horizon, rng)
        return source[:, g.src] & sink[:, g.dst]


class FixedSequenceAdversary(Adversary):
    """Replays a given list of per-round edge sets (pairs or slot masks)."""

    def __init__(self, edge_sets):
        self.edge_sets = list(edge_sets)
        self.label = "fixed-sequence"

    def generate(self, config, rng):
        g = config.graph
        if len(self.edge_sets) != config.horizon:
            raise ValueError(f"sequence has {len(self.edge_sets)} rounds, horizon is {config.horizon}")
        out = np.zeros((config.horizon, g.m), dtype=bool)
        for t, es in enumerate(self.edge_sets):
            arr = np.asarray(es)
            if arr.dtype == bool and arr.shape == (g.m,):
                out[t] = arr
            else:
                out[t] = g.edge_set([tuple(e) for e in es])
        return out


class BernoulliAdversary(Adversary):
    """Each edge open independently with probability ``p`` every round."""

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        self.p = float(p)
        self.label = f"bernoulli({p:g})"

    def generate(self, config, rng):
        return rng.random((config.horizon, config.graph.m)) < self.p


def clique_lower_bound_delta(n: int, T: int, c: float | None = None) -> float:
    """Gap parameter of the undirected lower-bound construction (``c = 2n/3`` by default)."""
    if c is None:
        c = 2.0 * n / 3.0
    return (n - 1) / (2.0 * n) * math.sqrt(2.0 * n / T) * math.sqrt((n - c) / (c * (c + 1.0)))


def source_sink_lower_bound_params(n: int, T: int):
    """``(c, d, delta)`` for the directed lower-bound construction."""
    c, d = n / 6.0, 2.0 * n / 3.0
    delta = 0.5 * (n - 1) / n * math.sqrt(2.0 * n / T) * math.sqrt(n * (n - c - d) / (c * (n - d)))
    return c, d, delta


def clique_gap(n, c, delta):
    """Expected per-round reward edge of the distinguished vertex over any other one."""
    return (n - 2) * c * c * (1.0 - delta) * delta / n ** 3


def source_sink_gap(n, c, d, delta):
    return (n - 1) * c * d * delta / n ** 3
