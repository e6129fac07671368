"""Loss estimators for single-source players.

Losses are ``1 - reward``. A sub-policy of the online greedy player sees
*marginal* losses: ``covered`` holds the vertices already infected by the
earlier picks of the same round, and the loss of ``v`` is
``1 - |reach(v) minus covered| / n``.
"""
from __future__ import annotations

import numpy as np

P_FLOOR = 1e-300


def node_loss_estimate(p, source: int, gain: float) -> np.ndarray:
    """Importance-weighted loss: ``(1 - gain) / p_source`` at the played vertex, zero elsewhere."""
    est = np.zeros(len(p))
    est[source] = (1.0 - gain) / max(p[source], P_FLOOR)
    return est


def symmetric_loss_estimate(p, source: int, reached, covered=()) -> np.ndarray:
    """Symmetric loss estimate for undirected graphs, in closed form.

    With ``C`` the component of the played vertex ``s``::

        est[i] = 0                                   for i in C, i != s
        est[s] = (1/n) * sum_{j not in C} 1/(p_s + p_j)
        est[i] = (1/n) / (p_i + p_s)                 for i not in C

    When ``s`` was already covered its marginal loss is 1; the pairwise
    terms then all count as losses and a diagonal term ``1/(n p_s)`` keeps
    the estimate unbiased.
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    ps = p[source]
    cover = np.zeros(n, dtype=bool)
    cover[list(covered)] = True
    comp = np.zeros(n, dtype=bool)
    if cover[source]:
        comp[source] = True
    else:
        comp[np.asarray(reached, dtype=np.int64)] = True
    denom = np.maximum(p + ps, P_FLOOR)
    est = np.where(comp, 0.0, 1.0 / (n * denom))
    est[source] = np.sum(1.0 / denom[~comp]) / n
    if cover[source]:
        est[source] += 1.0 / (n * max(ps, P_FLOOR))
    return est


def symmetric_loss_definitional(p, source: int, labels, covered=()) -> np.ndarray:
    """Pair-sum form ``(1/n) sum_j l_ij Z_ij / (p_i + p_j)`` from component labels.

    ``labels[v]`` is the open-edge component of ``v``. Quadratic in ``n``;
    kept as a cross-check of :func:`symmetric_loss_estimate`.
    """
    p = np.asarray(p, dtype=float)
    labels = np.asarray(labels)
    n = len(p)
    cover = np.zeros(n, dtype=bool)
    cover[list(covered)] = True
    est = np.zeros(n)
    for i in range(n):
        for j in range(n):
            z = (source == i) or (source == j)
            if not z:
                continue
            if i == j:
                est[i] += float(cover[i]) / p[i] / n
                continue
            pair_loss = 1.0 if (cover[i] or labels[i] != labels[j]) else 0.0
            est[i] += pair_loss / (p[i] + p[j]) / n
    return est


def marginal_losses(labels, covered=()) -> np.ndarray:
    """True marginal loss of every vertex for undirected component labels."""
    labels = np.asarray(labels)
    n = len(labels)
    cover = np.zeros(n, dtype=bool)
    cover[list(covered)] = True
    out = np.ones(n)
    for v in range(n):
        if not cover[v]:
            out[v] = 1.0 - np.count_nonzero(labels == labels[v]) / n
    return out
