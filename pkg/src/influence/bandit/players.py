"""Player strategies for the online influence game.

Every player is driven by the harness through ``reset(config, rng)``,
``select_sources()`` and ``update(sources, feedback)``; the only information
a player receives about the adversary is the :class:`Feedback`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .losses import P_FLOOR, node_loss_estimate, symmetric_loss_estimate

NODE = "node"
SYMMETRIC = "symmetric"


class NormalizationError(RuntimeError):
    def __init__(self, residual):
        super().__init__(f"simplex normalization did not converge (residual {residual:.3e})")
        self.residual = residual


@dataclass
class PolicyState:
    p: np.ndarray
    cumulative_loss: np.ndarray
    eta: float
    label: str
    t: int = 0


class Player:
    label = "player"

    def reset(self, config, rng):
        self.config = config
        self.graph = config.graph
        self.n = config.graph.n
        self.rng = rng

    def select_sources(self) -> list:
        raise NotImplementedError

    def update(self, sources, feedback) -> None:
        pass


class SingleSourcePlayer(Player):
    """A distribution ``p`` over vertices updated from (marginal) losses."""

    def __init__(self, loss: str = SYMMETRIC, eta=None):
        if loss not in (NODE, SYMMETRIC):
            raise ValueError(f"loss must be 'node' or 'symmetric', got {loss!r}")
        self.loss = loss
        self.eta = eta

    def reset(self, config, rng):
        super().reset(config, rng)
        if self.loss == SYMMETRIC and config.graph.directed:
            raise ValueError("the symmetric loss needs an undirected graph; use loss='node'")
        self.p = np.full(self.n, 1.0 / self.n)
        self.L = np.zeros(self.n)
        self.t = 0
        self._eta = self._resolve_eta(config.horizon)

    def _resolve_eta(self, horizon):
        raise NotImplementedError

    def eta_at(self, t: int) -> float:
        return float(self._eta(t)) if callable(self._eta) else float(self._eta)

    @property
    def state(self) -> PolicyState:
        return PolicyState(self.p.copy(), self.L.copy(), self.eta_at(max(self.t, 1)), self.label, self.t)

    def draw(self) -> int:
        return int(self.rng.choice(self.n, p=self.p))

    def select_sources(self):
        self._last = self.draw()
        return [self._last]

    def loss_estimate(self, source, reached, covered=()):
        if self.loss == SYMMETRIC:
            return symmetric_loss_estimate(self.p, source, reached, covered)
        cover = set(covered)
        gain = sum(1 for v in np.asarray(reached).tolist() if v not in cover) / self.n
        return node_loss_estimate(self.p, source, gain)

    def observe(self, source, reached, covered=()):
        """Feed one (marginal) observation and advance the distribution."""
        est = self.loss_estimate(source, reached, covered)
        self.t += 1
        self.L += est
        self.p = self._next_distribution(est)

    def update(self, sources, feedback):
        (source,) = sources
        self.observe(source, feedback.reach(self.graph, [source]))

    def _next_distribution(self, est):
        raise NotImplementedError


class Exp3Player(SingleSourcePlayer):
    """Exponential weights on estimated cumulative losses.

    Default rates: ``sqrt(4 log n / (T (n + 1)))`` for the symmetric loss,
    ``sqrt(2 log n / (T n))`` for the node loss.
    """

    def __init__(self, loss=SYMMETRIC, eta: Optional[float | Callable[[int], float]] = None):
        super().__init__(loss, eta)
        self.label = f"exp3-{loss}"

    def _resolve_eta(self, horizon):
        if self.eta is not None:
            return self.eta
        n = self.n
        if n == 1:
            return 0.0
        if self.loss == SYMMETRIC:
            return math.sqrt(4.0 * math.log(n) / (horizon * (n + 1)))
        return math.sqrt(2.0 * math.log(n) / (horizon * n))

    def _next_distribution(self, est):
        z = -self.eta_at(self.t) * self.L
        z -= z.max()
        w = np.exp(z)
        return w / w.sum()


def osmd_step(p, loss_hat, eta: float, tol=1e-12, max_iter=200) -> np.ndarray:
    """Mirror step for the potential ``-2 sum sqrt(x)`` plus Bregman projection onto the simplex.

    ``p_new[i] = (p[i]**-0.5 + eta * loss_hat[i] + lam)**-2`` with the scalar
    ``lam`` chosen so that ``p_new`` sums to one. The sum is decreasing and
    convex in ``lam`` on ``(-min(u), inf)``; Newton steps are kept inside a
    shrinking bracket and replaced by bisection when they leave it.
    """
    u = np.asarray(p, dtype=float) ** -0.5 + eta * np.asarray(loss_hat, dtype=float)
    umin = float(u.min())

    def excess(lam):
        return float(np.sum((u + lam) ** -2.0)) - 1.0

    lo = -umin
    hi = 0.0
    while excess(hi) > 0.0:
        hi = 2.0 * hi + 1.0
    lam = hi
    residual = excess(lam)
    for _ in range(max_iter):
        if abs(residual) <= tol:
            break
        if residual > 0.0:
            lo = lam
        else:
            hi = lam
        slope = -2.0 * float(np.sum((u + lam) ** -3.0))
        step = lam - residual / slope
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        residual = excess(lam)
    if abs(residual) > tol:
        raise NormalizationError(residual)
    return (u + lam) ** -2.0


class OSMDPlayer(SingleSourcePlayer):
    """Online stochastic mirror descent with the ``1/x**2`` potential.

    Default rates: ``2**0.75 / sqrt(T)`` for the symmetric loss and
    ``sqrt(2 / T)`` for the node loss.
    """

    def __init__(self, loss=SYMMETRIC, eta: Optional[float] = None):
        super().__init__(loss, eta)
        self.label = f"osmd-{loss}"

    def _resolve_eta(self, horizon):
        if self.eta is not None:
            return self.eta
        if self.loss == SYMMETRIC:
            return 2.0 ** 0.75 / math.sqrt(horizon)
        return math.sqrt(2.0 / horizon)

    def _next_distribution(self, est):
        p = osmd_step(self.p, est, self.eta_at(self.t))
        return np.maximum(p, P_FLOOR)


class OnlineGreedyPlayer(Player):
    """``k`` single-source sub-policies; the ``i``-th pick learns from marginal losses.

    Duplicate picks within a round are allowed and earn nothing.
    """

    def __init__(self, factory: Callable[[], SingleSourcePlayer], k: int):
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        self.factory = factory
        self.k = k
        self.label = None

    def reset(self, config, rng):
        super().reset(config, rng)
        self.policies = [self.factory() for _ in range(self.k)]
        for pol in self.policies:
            pol.reset(config, rng)
        self.label = f"greedy{self.k}-{self.policies[0].label}"

    def select_sources(self):
        return [pol.draw() for pol in self.policies]

    def update(self, sources, feedback):
        covered = np.zeros(0, dtype=np.int64)
        for i, (pol, v) in enumerate(zip(self.policies, sources)):
            reached = feedback.reach(self.graph, [v])
            pol.observe(v, reached, covered.tolist())
            covered = np.union1d(covered, reached)

    @property
    def state(self):
        return [pol.state for pol in self.policies]


class FixedPlayer(Player):
    def __init__(self, vertices):
        self.vertices = [int(v) for v in np.atleast_1d(vertices)]
        self.label = "fixed"

    def select_sources(self):
        return list(self.vertices)


class UniformPlayer(Player):
    """Uniformly random ``k``-subset each round."""

    label = "uniform"

    def select_sources(self):
        return sorted(self.rng.choice(self.n, size=self.config.k, replace=False).tolist())
