"""Greedy maximization of set functions under a cardinality constraint."""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator

from . import bounds
from ._validation import check_seed_set, spawn_seeds
from .graph import TriggerModel, reach
from .simulate import sample_live_edges

MAX_EXHAUSTIVE = 10**6


@dataclass
class Objective:
    """A set function with a label.

    ``guaranteed`` marks objectives known to be monotone submodular, for
    which greedy carries the ``1 - 1/e`` guarantee.
    """

    func: Callable[[np.ndarray], float]
    label: str
    guaranteed: bool = True
    evaluations: int = field(default=0, compare=False)

    def __call__(self, seeds) -> float:
        self.evaluations += 1
        return float(self.func(np.asarray(sorted(seeds), dtype=np.int64)))

    def for_step(self, step: int) -> "Objective":
        return self


class MonteCarloObjective(Objective):
    """Simulated influence with common random numbers inside each greedy step.

    Every candidate evaluated in step ``i`` sees the same ``replications``
    live-edge samples, drawn from child ``i`` of ``seed``.
    """

    def __init__(self, model: TriggerModel, replications: int, seed=0):
        super().__init__(self._evaluate, f"mc_influence({replications})", guaranteed=False)
        self.model = model
        self.replications = replications
        self.seed = seed
        self.step = 0

    def for_step(self, step):
        self.step = step
        return self

    def _evaluate(self, seeds):
        # samples are redrawn from the step's seeds on every call: identical values, honest cost
        children = spawn_seeds(spawn_seeds(self.seed, self.step + 1)[self.step], self.replications)
        g = self.model.graph
        return float(np.mean([len(reach(g, sample_live_edges(self.model, np.random.default_rng(c)), seeds))
                              for c in children]))


_BOUND_OBJECTIVES = {
    "lb1": (lambda model: (lambda S: bounds.lb_m(model, S, 1)), True),
    "lb2": (lambda model: (lambda S: bounds.lb_m(model, S, 2)), True),
    "lb3": (lambda model: (lambda S: bounds.lb_m(model, S, 3)), True),
    "lb_trig": (lambda model: (lambda S: bounds.lb_trig(model, S)), True),
    "ub_trunc": (lambda model: (lambda S: bounds.ub_truncated(model, S)), False),
}
OBJECTIVE_LABELS = tuple(_BOUND_OBJECTIVES) + ("mc",)


def make_objective(model: TriggerModel, label: str, replications: int = 50, seed=0) -> Objective:
    """Objective by name: ``lb1``, ``lb2``, ``lb3``, ``lb_trig``, ``ub_trunc`` or ``mc``.

    ``ub_trunc`` and ``mc`` are not known to be submodular; greedy runs on
    them carry no approximation guarantee.
    """
    if label == "mc" or label.startswith("mc_influence"):
        return MonteCarloObjective(model, replications, seed)
    try:
        factory, guaranteed = _BOUND_OBJECTIVES[label]
    except KeyError:
        raise ValueError(f"unknown objective {label!r}; choose from {OBJECTIVE_LABELS}") from None
    return Objective(factory(model), label, guaranteed)


@dataclass
class GreedyTrace:
    selected: list = field(default_factory=list)
    values: list = field(default_factory=list)
    gains: list = field(default_factory=list)
    millis: list = field(default_factory=list)
    initial_value: float = 0.0
    evaluations: int = 0

    @property
    def value(self) -> float:
        return self.values[-1] if self.values else self.initial_value

    def same_choices(self, other: "GreedyTrace", tol=0.0) -> bool:
        return (self.selected == other.selected
                and np.allclose(self.values, other.values, rtol=0, atol=tol)
                and np.allclose(self.gains, other.gains, rtol=0, atol=tol))

    def csv_rows(self, fmt=".17g", timing=True):
        header = ["step", "vertex", "objective_value", "marginal_gain", "millis"]
        rows = [[str(i + 1), str(v), format(val, fmt), format(gain, fmt),
                 format(ms if timing else 0.0, ".6f")]
                for i, (v, val, gain, ms) in enumerate(zip(self.selected, self.values, self.gains, self.millis))]
        return header, rows


def _universe(universe, obj_n=None):
    if isinstance(universe, int):
        return list(range(universe))
    return sorted(int(u) for u in universe)


def greedy_maximize(obj: Objective, k: int, universe) -> GreedyTrace:
    """Add, ``k`` times, the element with the largest marginal gain (ties: smallest id)."""
    universe = _universe(universe)
    if not 0 <= k <= len(universe):
        raise ValueError(f"k={k} outside 0..{len(universe)}")
    start_evals = obj.evaluations
    chosen: list[int] = []
    current = obj.for_step(0)([])
    trace = GreedyTrace(initial_value=current)
    for step in range(k):
        t0 = time.perf_counter()
        f = obj.for_step(step)
        base = f(chosen) if step else current
        best, best_gain = None, -math.inf
        for x in universe:
            if x in chosen:
                continue
            gain = f(chosen + [x]) - base
            if gain > best_gain:
                best, best_gain = x, gain
        chosen.append(best)
        current = base + best_gain
        trace.selected.append(best)
        trace.values.append(current)
        trace.gains.append(best_gain)
        trace.millis.append((time.perf_counter() - t0) * 1e3)
    trace.evaluations = obj.evaluations - start_evals
    return trace


def lazy_greedy_maximize(obj: Objective, k: int, universe) -> GreedyTrace:
    """Lazy greedy: stale marginal gains are upper bounds for submodular objectives.

    The heap is keyed on ``(-gain, vertex)``, so a refreshed top entry that
    stays on top is the same choice eager greedy makes, ties included.
    """
    universe = _universe(universe)
    if not 0 <= k <= len(universe):
        raise ValueError(f"k={k} outside 0..{len(universe)}")
    start_evals = obj.evaluations
    chosen: list[int] = []
    current = obj([])
    trace = GreedyTrace(initial_value=current)
    heap = [(-math.inf, x, -1) for x in universe]
    heapq.heapify(heap)
    for step in range(k):
        t0 = time.perf_counter()
        while True:
            neg_gain, x, stamp = heapq.heappop(heap)
            if stamp == step:
                break
            gain = obj(chosen + [x]) - current
            heapq.heappush(heap, (-gain, x, step))
        chosen.append(x)
        current = current - neg_gain
        trace.selected.append(x)
        trace.values.append(current)
        trace.gains.append(-neg_gain)
        trace.millis.append((time.perf_counter() - t0) * 1e3)
    trace.evaluations = obj.evaluations - start_evals
    return trace


def exhaustive_maximize(obj: Objective, k: int, universe):
    """Best set of size exactly ``k`` (ties: lexicographically first) and its value."""
    universe = _universe(universe)
    count = math.comb(len(universe), k)
    if count > MAX_EXHAUSTIVE:
        raise ValueError(f"exhaustive search over {count} sets exceeds {MAX_EXHAUSTIVE}")
    best, best_val = None, -math.inf
    for combo in itertools.combinations(universe, k):
        val = obj(list(combo))
        if val > best_val:
            best, best_val = list(combo), val
    return best, best_val


class GreedyMaximizer(BaseEstimator):
    """Estimator-style front end to greedy seed selection.

    Parameters
    ----------
    objective : str, default="lb2"
        One of ``lb1``, ``lb2``, ``lb3``, ``lb_trig``, ``ub_trunc``, ``mc``.
    k : int, default=10
        Seed-set size.
    lazy : bool, default=False
        Use lazy evaluation. Only valid for the submodular bound objectives.
    replications : int, default=50
        Live-edge samples per step for ``objective="mc"``.
    random_state : int or None, default=None

    Attributes
    ----------
    seeds_ : ndarray of shape (k,)
        Selected vertices in selection order.
    trace_ : GreedyTrace
    value_ : float
        Objective value of ``seeds_``.
    """

    def __init__(self, objective="lb2", k=10, lazy=False, replications=50, random_state=None):
        self.objective = objective
        self.k = k
        self.lazy = lazy
        self.replications = replications
        self.random_state = random_state

    def fit(self, model: TriggerModel, y=None):
        obj = make_objective(model, self.objective, self.replications, self.random_state)
        if self.lazy and not obj.guaranteed:
            raise ValueError(f"lazy greedy needs a submodular objective; {obj.label!r} is not known to be")
        run = lazy_greedy_maximize if self.lazy else greedy_maximize
        self.trace_ = run(obj, self.k, model.n)
        self.seeds_ = np.array(self.trace_.selected, dtype=np.int64)
        self.value_ = self.trace_.value
        self.n_vertices_ = model.n
        return self

    def transform(self, model: TriggerModel):
        """Seed-set indicator vector for ``model``'s vertices."""
        if not hasattr(self, "seeds_"):
            raise AttributeError("GreedyMaximizer is not fitted yet; call fit first")
        out = np.zeros(model.n, dtype=bool)
        out[check_seed_set(self.seeds_, model.n)] = True
        return out

    def fit_transform(self, model, y=None):
        return self.fit(model).transform(model)

    def score(self, model: TriggerModel, y=None) -> float:
        """Objective value of the fitted seeds on ``model``."""
        if not hasattr(self, "seeds_"):
            raise AttributeError("GreedyMaximizer is not fitted yet; call fit first")
        return make_objective(model, self.objective, self.replications, self.random_state)(self.seeds_)
