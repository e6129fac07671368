"""Brute-force checks on small instances.

Each suite draws random instances, compares fast code against enumeration
and returns a :class:`SuiteResult`. The ``oracle-check`` command runs them
as a batch; the test suite calls them too.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from ._validation import check_random_state
from .bandit.game import make_feedback
from .bandit.losses import symmetric_loss_estimate
from .graph import WeightedDigraph, linear_threshold, reach
from .maximize import Objective, exhaustive_maximize, greedy_maximize, lazy_greedy_maximize
from .simulate import exact_influence

TOL = 1e-10
GREEDY_RATIO = 1.0 - 1.0 / math.e


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message):
        self.failures.append(message)


# -- instance generators -----------------------------------------------------

def random_lt_model(n: int, rng, density=0.4, dag=False, slack=(0.0, 1.0)):
    """Random linear threshold model.

    Each ordered pair is an edge with probability ``density`` (only
    ``i < j`` when ``dag``). Incoming weights at every vertex are a random
    split of a total drawn uniformly from ``slack``.
    """
    rng = check_random_state(rng)
    edges = []
    for j in range(n):
        tails = [i for i in range(n) if i != j and (not dag or i < j) and rng.random() < density]
        if not tails:
            continue
        share = rng.dirichlet(np.ones(len(tails))) * rng.uniform(*slack)
        edges.extend((i, j, float(w)) for i, w in zip(tails, share))
    return linear_threshold(WeightedDigraph(n, edges, directed=True))


def random_seed_set(n: int, rng, max_size=None):
    rng = check_random_state(rng)
    size = int(rng.integers(1, (max_size or n) + 1))
    return np.sort(rng.choice(n, size=min(size, n), replace=False))


def subsets(n):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


# -- set-function properties -------------------------------------------------

def set_function_violations(func, n, tol=TOL, monotone=True):
    """Discrete-derivative violations of monotonicity and submodularity over every ``S ⊆ T``, ``x ∉ T``."""
    values = {S: func(list(S)) for S in subsets(n)}
    bad = []
    for T in values:
        Tset = set(T)
        for x in range(n):
            if x in Tset:
                continue
            Tx = tuple(sorted(Tset | {x}))
            dT = values[Tx] - values[T]
            if monotone and dT < -tol:
                bad.append(f"not monotone at T={T}, x={x}: {dT}")
            for r in range(len(T)):
                for S in itertools.combinations(T, r):
                    Sx = tuple(sorted(set(S) | {x}))
                    dS = values[Sx] - values[S]
                    if dS < dT - tol:
                        bad.append(f"not submodular at S={S}, T={T}, x={x}: {dS} < {dT}")
    return bad


def sandwich_violations(model, seeds, tol=TOL, dag=False):
    """Order violations of lb1 <= lb2 <= lb3 <= exact <= ub_trunc <= ub_neumann."""
    chain = [("lb1", bounds.lb1(model, seeds)), ("lb2", bounds.lb2(model, seeds)),
             ("lb3", bounds.lb3(model, seeds)), ("exact", exact_influence(model, seeds)),
             ("ub_trunc", bounds.ub_truncated(model, seeds))]
    ub = bounds.ub_neumann(model, seeds)
    if ub is not None:
        chain.append(("ub_neumann", ub))
    bad = [f"{a}={va!r} > {b}={vb!r}" for (a, va), (b, vb) in zip(chain, chain[1:]) if va > vb + tol]
    if dag and abs(chain[3][1] - chain[4][1]) > tol:
        bad.append(f"ub_trunc={chain[4][1]!r} differs from exact={chain[3][1]!r} on a DAG")
    return bad


# -- loss-estimator enumeration ----------------------------------------------

def component_labels(graph, open_edges):
    labels = np.full(graph.n, -1)
    for v in range(graph.n):
        if labels[v] < 0:
            labels[reach(graph, open_edges, [v])] = v
    return labels


def symmetric_loss_moments(p, graph, open_edges):
    """Exact ``E_S[est]``, ``E_S E_I[est_I]`` per ``S`` and ``E_S E_I[est_I^2]`` by enumerating sources."""
    n = graph.n
    table = np.array([symmetric_loss_estimate(p, s, reach(graph, open_edges, [s])) for s in range(n)])
    mean = p @ table
    cross = table @ p
    second = float(p @ (table ** 2) @ p)
    return mean, cross, second


# -- suites ------------------------------------------------------------------

def suite_lt_sandwich(rng, instances=100, max_n=6):
    res = SuiteResult("lt-sandwich")
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        model = random_lt_model(n, rng)
        A = random_seed_set(n, rng, max_size=max(1, n // 2))
        res.cases += 1
        for msg in sandwich_violations(model, A):
            res.fail(f"n={n} A={A.tolist()}: {msg}")
    return res


def suite_dag_exact(rng, instances=50, max_n=8):
    res = SuiteResult("dag-exact")
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        model = random_lt_model(n, rng, dag=True)
        A = random_seed_set(n, rng, max_size=max(1, n // 3))
        res.cases += 1
        for msg in sandwich_violations(model, A, dag=True):
            res.fail(f"n={n} A={A.tolist()}: {msg}")
    return res


def suite_ratio(rng, instances=100, max_n=8):
    res = SuiteResult("ratio")
    while res.cases < instances:
        n = int(rng.integers(2, max_n + 1))
        model = random_lt_model(n, rng)
        A = random_seed_set(n, rng, max_size=max(1, n // 2))
        g = bounds.ratio_guarantees(model, A)
        if g.r1 is None:
            continue
        res.cases += 1
        ub = bounds.ub_neumann(model, A)
        l1, l2 = bounds.lb1(model, A), bounds.lb2(model, A)
        if ub / l1 > g.r1 + 1e-9 or ub / l2 > g.r2 + 1e-9:
            res.fail(f"n={n}: ub/lb1={ub / l1}, ub/lb2={ub / l2}, limits {g.r1}, {g.r2}")
    return res


def suite_submodular(rng, instances=10, max_n=5):
    res = SuiteResult("submodular")
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        model = random_lt_model(n, rng)
        for name, f in (("lb1", bounds.lb1), ("lb2", bounds.lb2), ("lb3", bounds.lb3), ("lb_trig", bounds.lb_trig)):
            res.cases += 1
            bad = set_function_violations(lambda S: f(model, S), n)
            if bad:
                res.fail(f"{name}, n={n}: {bad[0]}")
    return res


def suite_greedy(rng, instances=30, max_n=8, max_k=3):
    res = SuiteResult("greedy")
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        k = int(rng.integers(1, min(max_k, n) + 1))
        model = random_lt_model(n, rng)
        for m in (1, 2, 3):
            res.cases += 1
            obj = Objective(lambda S, m=m: bounds.lb_m(model, S, m), f"lb{m}")
            eager = greedy_maximize(obj, k, n)
            lazy = lazy_greedy_maximize(obj, k, n)
            _, best = exhaustive_maximize(obj, k, n)
            if eager.value < GREEDY_RATIO * best - 1e-9:
                res.fail(f"lb{m} n={n} k={k}: greedy {eager.value} < (1-1/e) * {best}")
            if not eager.same_choices(lazy, tol=1e-12):
                res.fail(f"lb{m} n={n} k={k}: lazy {lazy.selected} != eager {eager.selected}")
    return res


def _random_undirected(n, rng, density=0.6):
    pairs = [(i, j, 1.0) for i, j in itertools.combinations(range(n), 2) if rng.random() < density]
    return WeightedDigraph(n, pairs, directed=False)


def suite_loss_estimator(rng, draws=20, sizes=(3, 4, 5)):
    res = SuiteResult("loss-estimator")
    for n in sizes:
        g = _random_undirected(n, rng, density=1.0)
        for _ in range(draws):
            p = rng.dirichlet(np.ones(n))
            open_edges = rng.random(g.m) < rng.random()
            labels = component_labels(g, open_edges)
            loss = np.array([1.0 - np.count_nonzero(labels == labels[i]) / n for i in range(n)])
            mean, cross, second = symmetric_loss_moments(p, g, open_edges)
            res.cases += 1
            if np.max(np.abs(mean - loss)) > 1e-12:
                res.fail(f"n={n}: E[est] - loss = {np.max(np.abs(mean - loss))}")
            if np.max(np.abs(cross - loss)) > 1e-12:
                res.fail(f"n={n}: E_I[est_I] - loss_S = {np.max(np.abs(cross - loss))}")
            if second > (n + 1) / 2 + 1e-12:
                res.fail(f"n={n}: second moment {second} > {(n + 1) / 2}")
    return res


def suite_feedback(rng, graphs=None):
    """Loss estimates computed from feedback equal those from the full edge set."""
    res = SuiteResult("feedback-sufficiency")
    if graphs is None:
        graphs = [WeightedDigraph(3, [(0, 1, 1), (0, 2, 1), (1, 2, 1)], directed=False),
                  WeightedDigraph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)], directed=False)]
    for g in graphs:
        p = rng.dirichlet(np.ones(g.n))
        for bits in itertools.product([False, True], repeat=g.m):
            open_edges = np.array(bits, dtype=bool)
            for s in range(g.n):
                res.cases += 1
                _, fb = make_feedback(g, open_edges, [s])
                full = symmetric_loss_estimate(p, s, reach(g, open_edges, [s]))
                seen = symmetric_loss_estimate(p, s, fb.reach(g, [s]))
                if not np.array_equal(full, seen):
                    res.fail(f"n={g.n} open={bits} s={s}")
    return res


SUITES = {
    "lt-sandwich": suite_lt_sandwich,
    "dag-exact": suite_dag_exact,
    "ratio": suite_ratio,
    "submodular": suite_submodular,
    "greedy": suite_greedy,
    "loss-estimator": suite_loss_estimator,
    "feedback-sufficiency": suite_feedback,
}


def run_suites(seed=0, max_n=6, instances=100):
    """Run every suite with sizes capped by ``max_n``; returns a list of results."""
    from ._validation import spawn_seeds

    children = spawn_seeds(seed, len(SUITES))
    rngs = {name: np.random.default_rng(c) for name, c in zip(SUITES, children)}
    small = max(2, min(max_n, 5))
    return [
        suite_lt_sandwich(rngs["lt-sandwich"], instances, max_n),
        suite_dag_exact(rngs["dag-exact"], max(1, instances // 2), max_n + 2),
        suite_ratio(rngs["ratio"], instances, max_n + 2),
        suite_submodular(rngs["submodular"], max(1, instances // 10), small),
        suite_greedy(rngs["greedy"], max(1, instances // 3), max_n + 2),
        suite_loss_estimator(rngs["loss-estimator"], max(1, instances // 5),
                             tuple(range(3, small + 1))),
        suite_feedback(rngs["feedback-sufficiency"]),
    ]
