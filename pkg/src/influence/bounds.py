"""Closed-form upper and lower bounds on the influence of a seed set.

All bounds read the marginal live-edge matrix ``B`` of a triggering model
(``B[i, j]`` is the probability that edge ``(i, j)`` is live). Zero-weight
edges are treated as absent. Bounds that may be undefined return ``None``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from ._validation import check_seed_set
from .graph import INDEPENDENT_CASCADE, LINEAR_THRESHOLD, TriggerModel, WeightedDigraph

DENSE_SOLVE_MAX = 2000
NEUMANN_MAX_TERMS = 100_000
NEUMANN_STALL_TERMS = 10


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _graph(model) -> WeightedDigraph:
    return model.graph if isinstance(model, TriggerModel) else model


class _Blocks(NamedTuple):
    size: int          # |A|
    b: np.ndarray      # incoming weight from A, indexed by the complement
    M: sp.csr_matrix   # B restricted to the complement


def _blocks(model, seeds) -> _Blocks:
    g = _graph(model)
    A = check_seed_set(seeds, g.n)
    in_A = np.zeros(g.n, dtype=bool)
    in_A[A] = True
    comp = np.flatnonzero(~in_A)
    B = g.matrix.copy()
    B.eliminate_zeros()
    b = np.asarray(B[A].sum(axis=0)).ravel()[comp] if A.size else np.zeros(comp.size)
    M = B[comp][:, comp].tocsr()
    return _Blocks(len(A), b, M)


def ub_neumann(model, seeds) -> Optional[float]:
    """``|A| + b^T (I - B_cc)^{-1} 1``, or ``None`` when the series diverges.

    For a nonnegative ``M`` the solve ``(I - M) x = 1`` yields ``x >= 1``
    exactly when ``rho(M) < 1``, which is how divergence is detected on the
    dense path. Large complements use Neumann summation with a stall test.
    """
    size, b, M = _blocks(model, seeds)
    k = M.shape[0]
    if k == 0:
        return float(size)
    if M.nnz == 0:
        return size + float(b.sum())
    if k <= DENSE_SOLVE_MAX:
        try:
            x = np.linalg.solve(np.eye(k) - M.toarray(), np.ones(k))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(x)) or x.min() < 1.0 - 1e-9:
            return None
        return size + float(b @ x)
    total = _neumann_sum(M)
    return None if total is None else size + float(b @ total)


def _neumann_sum(M, tol=1e-15):
    v = np.ones(M.shape[0])
    total = v.copy()
    prev = 1.0
    stalled = 0
    for _ in range(NEUMANN_MAX_TERMS):
        v = M @ v
        norm = float(np.abs(v).max())
        total += v
        if norm <= tol * float(total.max()):
            return total
        stalled = stalled + 1 if norm >= prev * (1.0 - 1e-12) else 0
        if stalled >= NEUMANN_STALL_TERMS or not math.isfinite(norm):
            return None
        prev = norm
    return None


def ub_truncated(model, seeds) -> float:
    """``|A| + b^T (sum_{i<n-|A|} B_cc^i) 1``; exact on DAGs."""
    size, b, M = _blocks(model, seeds)
    k = M.shape[0]
    if k == 0:
        return float(size)
    v = np.ones(k)
    total = v.copy()
    for _ in range(k - 1):
        v = M @ v
        if not v.any():
            break
        total += v
    return size + float(b @ total)


def lb_m(model, seeds, m: int) -> float:
    """Path-length-limited lower bound ``LB_m`` for linear threshold models, ``m`` in 1..3."""
    if m not in (1, 2, 3):
        raise ValueError(f"LB_m is only available for m in {{1, 2, 3}}, got {m}")
    if isinstance(model, TriggerModel) and model.kind != LINEAR_THRESHOLD:
        raise ValueError("LB_m is a linear threshold bound; use lb_trig for other triggering models")
    g = _graph(model)
    A = check_seed_set(seeds, g.n)
    if A.size == 0:
        return 0.0
    B = g.matrix
    outside = np.ones(g.n)
    outside[A] = 0.0
    idx = np.concatenate([np.arange(B.indptr[a], B.indptr[a + 1]) for a in A.tolist()])
    cols = B.indices[idx]
    w = B.data[idx] * outside[cols]
    if m == 1:
        return len(A) + float(w.sum())
    b = np.bincount(cols, weights=w, minlength=g.n)  # weight entering each outside vertex from A
    vec = outside.copy()
    if m >= 2:
        row = (B @ outside) * outside                     # row sums of the outside block
        vec += row
        if m == 3:
            diag = (B.multiply(B.T) @ outside) * outside  # diagonal of the squared outside block
            vec += (B @ row) * outside - diag
    return len(A) + float(b @ vec)


def lb1(model, seeds):
    return lb_m(model, seeds, 1)


def lb2(model, seeds):
    return lb_m(model, seeds, 2)


def lb3(model, seeds):
    return lb_m(model, seeds, 3)


def lb_trig(model, seeds) -> float:
    """Sum over vertices of the heaviest path weight from the seed set.

    Paths leave the seed set immediately and never re-enter it. Weights are
    at most one, so a max-product Dijkstra is exact.
    """
    g = _graph(model)
    A = check_seed_set(seeds, g.n)
    in_A = np.zeros(g.n, dtype=bool)
    in_A[A] = True
    indptr, heads, slots = g.out_adjacency
    w = g.weight[slots]
    best = np.zeros(g.n)
    heap = []
    for a in A.tolist():
        for e in range(indptr[a], indptr[a + 1]):
            v, we = heads[e], w[e]
            if not in_A[v] and we > best[v]:
                best[v] = we
    for v in np.flatnonzero(best > 0).tolist():
        heapq.heappush(heap, (-best[v], v))
    done = np.zeros(g.n, dtype=bool)
    while heap:
        negval, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        val = -negval
        for e in range(indptr[u], indptr[u + 1]):
            v = heads[e]
            cand = val * w[e]
            if not in_A[v] and not done[v] and cand > best[v]:
                best[v] = cand
                heapq.heappush(heap, (-cand, v))
    return len(A) + float(best[~in_A].sum())


class RatioGuarantee(NamedTuple):
    lambda_bar_inf: float
    r1: Optional[float]
    r2: Optional[float]


def lambda_bar_inf(model, seeds) -> float:
    """Maximum row sum of ``B`` restricted to the complement of the seed set."""
    _, _, M = _blocks(model, seeds)
    if M.shape[0] == 0 or M.nnz == 0:
        return 0.0
    return float(np.asarray(M.sum(axis=1)).max())


def ratio_guarantees(model, seeds) -> RatioGuarantee:
    """Guaranteed ``UB/LB_1`` and ``UB/LB_2`` ratios; ``None`` unless the row-sum norm is below one."""
    lam = lambda_bar_inf(model, seeds)
    if lam >= 1.0:
        return RatioGuarantee(lam, None, None)
    return RatioGuarantee(lam, 1.0 / (1.0 - lam), 1.0 / (1.0 - lam * lam))


class ICWorstCase(NamedTuple):
    value: float                 # finite-n bound
    simplified: Optional[float]  # |A| / (1 - lambda), when lambda < 1
    lambda_inf: float
    trivial: bool                # bound exceeds n


def ic_worst_case(model, seeds) -> ICWorstCase:
    """Seed-size-only influence bound from the full row-sum norm of ``B``."""
    g = _graph(model)
    k = len(check_seed_set(seeds, g.n))
    B = g.matrix
    lam = float(np.asarray(B.sum(axis=1)).max()) if B.nnz else 0.0
    r = g.n - k
    if lam == 1.0:
        value = k + k * r
    else:
        value = k + lam * k * (1.0 - lam ** r) / (1.0 - lam)
    simplified = k / (1.0 - lam) if lam < 1.0 else None
    return ICWorstCase(float(value), simplified, lam, value > g.n)


def spectral_radius_symmetric(M, rtol=1e-8, max_iter=200_000) -> float:
    """Largest eigenvalue of a symmetric nonnegative matrix by power iteration.

    Iterates on ``M + s I`` with a small positive shift so that a
    bipartite spectrum (``-rho`` also an eigenvalue) cannot stall the
    iteration. Stops when the eigen-residual drops below ``rtol * rho``.
    """
    M = sp.csr_matrix(M) if sp.issparse(M) else np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return 0.0
    row = np.asarray(abs(M).sum(axis=1)).ravel()
    if row.max() == 0.0:
        return 0.0
    shift = 0.25 * float(row.max())
    v = np.ones(n) / math.sqrt(n)
    residual = math.inf
    for _ in range(max_iter):
        Mv = M @ v
        mu = float(v @ Mv)
        residual = float(np.linalg.norm(Mv - mu * v))
        if residual <= rtol * max(mu, 1e-300):
            return mu
        w = Mv + shift * v
        v = w / np.linalg.norm(w)
    raise ConvergenceError("power iteration did not converge", residual)


class HazardBound(NamedTuple):
    value: Optional[float]
    rho: float
    delta: float


def hazard_bound(model, seeds) -> HazardBound:
    """Spectral bound built on the hazard matrix ``H_ij = -log(1 - b_ij)``.

    ``value`` is ``None`` when the spectral condition ``rho < 1 - delta``
    fails, when the seed set is everything, or when some ``b_ij = 1`` makes
    the hazard infinite.
    """
    g = _graph(model)
    k = len(check_seed_set(seeds, g.n))
    r = g.n - k
    if r == 0:
        return HazardBound(None, math.nan, math.nan)
    delta = (k / (4.0 * r)) ** (1.0 / 3.0)
    tails, heads, w = g.arc_weights()
    if np.any(w >= 1.0):
        return HazardBound(None, math.inf, delta)
    H = sp.csr_matrix((-np.log1p(-w), (tails, heads)), shape=(g.n, g.n))
    rho = spectral_radius_symmetric((H + H.T) / 2.0)
    if not rho < 1.0 - delta:
        return HazardBound(None, rho, delta)
    return HazardBound(k + math.sqrt(rho / (1.0 - rho)) * math.sqrt(k * r), rho, delta)


REPORT_FIELDS = ("seed_size", "lb1", "lb2", "lb3", "lb_trig", "ub_trunc", "ub_neumann",
                 "ic_wc", "hazard", "lambda_bar_inf", "ratio_lb1", "ratio_lb2")


@dataclass(frozen=True)
class BoundReport:
    seed_size: int
    lb1: Optional[float]
    lb2: Optional[float]
    lb3: Optional[float]
    lb_trig: float
    ub_trunc: float
    ub_neumann: Optional[float]
    ic_wc: Optional[float]
    hazard: Optional[float]
    lambda_bar_inf: float
    ratio_lb1: Optional[float]
    ratio_lb2: Optional[float]

    def to_dict(self):
        return asdict(self)

    def csv_row(self, fmt=".17g"):
        return [("" if v is None else (str(v) if isinstance(v, int) else format(v, fmt)))
                for v in (getattr(self, f.name) for f in fields(self))]


def bound_report(model: TriggerModel, seeds) -> BoundReport:
    """Every bound that applies to ``model`` for the given seed set."""
    is_lt = model.kind == LINEAR_THRESHOLD
    is_ic = model.kind == INDEPENDENT_CASCADE
    A = check_seed_set(seeds, model.n)
    ratio = ratio_guarantees(model, A)
    return BoundReport(
        seed_size=len(A),
        lb1=lb_m(model, A, 1) if is_lt else None,
        lb2=lb_m(model, A, 2) if is_lt else None,
        lb3=lb_m(model, A, 3) if is_lt else None,
        lb_trig=lb_trig(model, A),
        ub_trunc=ub_truncated(model, A),
        ub_neumann=ub_neumann(model, A),
        ic_wc=ic_worst_case(model, A).value if is_ic else None,
        hazard=hazard_bound(model, A).value if is_ic else None,
        lambda_bar_inf=ratio.lambda_bar_inf,
        ratio_lb1=ratio.r1,
        ratio_lb2=ratio.r2,
    )
