"""Weighted digraphs, contagion models, reachability and graph generators.

Vertices are dense integer ids ``0..n-1``. Edges are stored once per *slot*:
a directed graph has one slot per ordered pair, an undirected graph has one
slot per unordered pair (stored with ``src < dst``) that transmits in both
directions. Both adjacency directions are kept in CSR form because the bound
computations read columns (incoming weights) while simulation reads rows.
"""
from __future__ import annotations

import io
import itertools
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ._validation import check_random_state

LINEAR_THRESHOLD = "lt"
INDEPENDENT_CASCADE = "ic"
EXPLICIT = "explicit"
MODEL_KINDS = (LINEAR_THRESHOLD, INDEPENDENT_CASCADE, EXPLICIT)

_SUM_TOL = 1e-9


class ModelValidationError(ValueError):
    """A graph or trigger model violates one of its invariants.

    ``code`` names the violated invariant, ``vertex``/``edge`` locate it and
    ``value`` carries the offending number (e.g. a column sum).
    """

    def __init__(self, code, message, vertex=None, edge=None, value=None):
        super().__init__(message)
        self.code = code
        self.vertex = vertex
        self.edge = edge
        self.value = value


class WeightedDigraph:
    """Immutable weighted graph on ``n`` vertices.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : iterable of (src, dst, weight)
        For undirected graphs each unordered pair must appear once.
    directed : bool, default=True
    """

    def __init__(self, n: int, edges: Iterable[Sequence] = (), directed: bool = True):
        n = int(n)
        if n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {n}")
        rows = [(int(u), int(v), float(w)) for u, v, w in edges]
        seen = set()
        for u, v, w in rows:
            if not (0 <= u < n and 0 <= v < n):
                raise ModelValidationError("vertex-range", f"edge ({u},{v}) outside 0..{n - 1}", edge=(u, v))
            if u == v:
                raise ModelValidationError("self-loop", f"self-loop at vertex {u}", vertex=u, edge=(u, v))
            if not (0.0 <= w <= 1.0) or math.isnan(w):
                raise ModelValidationError("weight-range", f"weight {w!r} of edge ({u},{v}) not in [0,1]",
                                           edge=(u, v), value=w)
            key = (u, v) if directed else (min(u, v), max(u, v))
            if key in seen:
                raise ModelValidationError("duplicate-edge", f"edge {key} stored twice", edge=key)
            seen.add(key)
        if not directed:
            rows = [(min(u, v), max(u, v), w) for u, v, w in rows]
        rows.sort(key=lambda r: (r[0], r[1]))
        self.n = n
        self.directed = bool(directed)
        self.src = np.array([r[0] for r in rows], dtype=np.int64)
        self.dst = np.array([r[1] for r in rows], dtype=np.int64)
        self.weight = np.array([r[2] for r in rows], dtype=float)
        for arr in (self.src, self.dst, self.weight):
            arr.flags.writeable = False

    @property
    def m(self) -> int:
        """Number of edge slots."""
        return len(self.src)

    def edges(self):
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"WeightedDigraph(n={self.n}, m={self.m}, {kind})"

    def __eq__(self, other):
        return (isinstance(other, WeightedDigraph) and self.n == other.n
                and self.directed == other.directed
                and np.array_equal(self.src, other.src) and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight))

    def __hash__(self):
        return hash((self.n, self.directed, self.src.tobytes(), self.dst.tobytes(), self.weight.tobytes()))

    # arcs: every transmitting direction, with the slot it belongs to
    @cached_property
    def _arcs(self):
        if self.directed:
            return self.src, self.dst, np.arange(self.m)
        slots = np.arange(self.m)
        return (np.concatenate([self.src, self.dst]), np.concatenate([self.dst, self.src]),
                np.concatenate([slots, slots]))

    @cached_property
    def out_adjacency(self):
        """CSR triple ``(indptr, targets, slots)`` over outgoing arcs."""
        tails, heads, slots = self._arcs
        order = np.lexsort((heads, tails))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, tails + 1, 1)
        return np.cumsum(indptr), heads[order], slots[order]

    @cached_property
    def in_adjacency(self):
        """CSR triple ``(indptr, sources, slots)`` over incoming arcs."""
        tails, heads, slots = self._arcs
        order = np.lexsort((tails, heads))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, heads + 1, 1)
        return np.cumsum(indptr), tails[order], slots[order]

    @cached_property
    def _out_lists(self):
        indptr, targets, slots = self.out_adjacency
        return [(targets[indptr[u]:indptr[u + 1]].tolist(), slots[indptr[u]:indptr[u + 1]].tolist())
                for u in range(self.n)]

    def in_neighbors(self, v: int) -> np.ndarray:
        indptr, sources, _ = self.in_adjacency
        return sources[indptr[v]:indptr[v + 1]]

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_adjacency[0])

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_adjacency[0])

    def arc_weights(self):
        """``(tails, heads, weights)`` for every transmitting direction."""
        tails, heads, slots = self._arcs
        return tails, heads, self.weight[slots]

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Sparse weighted adjacency ``B`` with ``B[i, j] = b_ij``."""
        tails, heads, w = self.arc_weights()
        B = sp.csr_matrix((w, (tails, heads)), shape=(self.n, self.n))
        B.sum_duplicates()
        return B

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_directed(self) -> "WeightedDigraph":
        """Symmetric directed copy (identity on directed graphs)."""
        if self.directed:
            return self
        tails, heads, w = self.arc_weights()
        return WeightedDigraph(self.n, zip(tails.tolist(), heads.tolist(), w.tolist()), directed=True)

    def with_weights(self, weight) -> "WeightedDigraph":
        """Same topology with new per-slot weights."""
        weight = np.asarray(weight, dtype=float)
        if weight.shape != (self.m,):
            raise ValueError(f"expected {self.m} weights, got shape {weight.shape}")
        return WeightedDigraph(self.n, zip(self.src.tolist(), self.dst.tolist(), weight.tolist()),
                               directed=self.directed)

    def slot_index(self, u: int, v: int) -> int:
        """Slot id of edge ``(u, v)``; raises ``KeyError`` if absent."""
        if not self.directed and u > v:
            u, v = v, u
        lo, hi = np.searchsorted(self.src, [u, u + 1])
        pos = lo + np.searchsorted(self.dst[lo:hi], v)
        if pos < hi and self.dst[pos] == v:
            return int(pos)
        raise KeyError((u, v))

    def edge_set(self, pairs: Iterable[Sequence[int]]) -> np.ndarray:
        """Boolean slot mask from a collection of ``(u, v)`` pairs."""
        mask = np.zeros(self.m, dtype=bool)
        for u, v in pairs:
            mask[self.slot_index(int(u), int(v))] = True
        return mask


@dataclass(frozen=True, eq=False)
class TriggerModel:
    """A weighted graph together with the per-vertex trigger-set law.

    For ``kind == "explicit"``, ``triggers[i]`` is a list of
    ``(frozenset_of_in_neighbors, probability)`` pairs. Use
    :func:`linear_threshold`, :func:`independent_cascade` or
    :func:`explicit_model` to obtain validated instances.
    """

    graph: WeightedDigraph
    kind: str
    triggers: tuple = field(default=None)

    @property
    def n(self) -> int:
        return self.graph.n

    def trigger_distribution(self, v: int):
        """List of ``(in-neighbor tuple, probability)`` for vertex ``v``.

        Zero-probability outcomes are dropped.
        """
        g = self.graph
        indptr, sources, slots = g.in_adjacency
        nbrs = sources[indptr[v]:indptr[v + 1]].tolist()
        ws = g.weight[slots[indptr[v]:indptr[v + 1]]].tolist()
        if self.kind == LINEAR_THRESHOLD:
            out = [((), max(0.0, 1.0 - sum(ws)))]
            out += [((j,), w) for j, w in zip(nbrs, ws)]
        elif self.kind == INDEPENDENT_CASCADE:
            out = []
            for bits in itertools.product((0, 1), repeat=len(nbrs)):
                p = 1.0
                for b, w in zip(bits, ws):
                    p *= w if b else 1.0 - w
                out.append((tuple(j for j, b in zip(nbrs, bits) if b), p))
        else:
            out = [(tuple(sorted(s)), p) for s, p in self.triggers[v]]
        return [(s, p) for s, p in out if p > 0.0]


def validate(model: TriggerModel) -> None:
    """Check every model invariant; raise :class:`ModelValidationError` on the first violation."""
    g = model.graph
    if model.kind not in MODEL_KINDS:
        raise ModelValidationError("model-kind", f"unknown model kind {model.kind!r}")
    w = g.weight
    bad = np.flatnonzero((w < 0) | (w > 1) | np.isnan(w))
    if bad.size:
        e = int(bad[0])
        raise ModelValidationError("weight-range", f"weight {w[e]!r} of edge ({g.src[e]},{g.dst[e]}) not in [0,1]",
                                   edge=(int(g.src[e]), int(g.dst[e])), value=float(w[e]))
    if model.kind == LINEAR_THRESHOLD:
        tails, heads, aw = g.arc_weights()
        colsum = np.bincount(heads, weights=aw, minlength=g.n)
        over = np.flatnonzero(colsum > 1.0 + _SUM_TOL)
        if over.size:
            v = int(over[0])
            raise ModelValidationError("column-sum", f"incoming weight at vertex {v} sums to {colsum[v]:.17g} > 1",
                                       vertex=v, value=float(colsum[v]))
    elif model.kind == EXPLICIT:
        if model.triggers is None or len(model.triggers) != g.n:
            raise ModelValidationError("trigger-table", "explicit model needs one trigger list per vertex")
        B = g.matrix.tocsc()
        for v in range(g.n):
            nbrs = set(g.in_neighbors(v).tolist())
            total = 0.0
            marginal = {}
            for subset, p in model.triggers[v]:
                if p < 0 or p > 1:
                    raise ModelValidationError("trigger-probability", f"trigger probability {p} at vertex {v}",
                                               vertex=v, value=p)
                if not set(subset) <= nbrs:
                    raise ModelValidationError("trigger-subset", f"trigger set {sorted(subset)} of vertex {v} "
                                               "is not a subset of its in-neighbors", vertex=v)
                total += p
                for j in subset:
                    marginal[j] = marginal.get(j, 0.0) + p
            if abs(total - 1.0) > _SUM_TOL:
                raise ModelValidationError("trigger-normalization", f"trigger probabilities at vertex {v} "
                                           f"sum to {total:.17g}", vertex=v, value=total)
            col = B.getcol(v)
            stored = dict(zip(col.indices.tolist(), col.data.tolist()))
            for j in nbrs:
                if abs(marginal.get(j, 0.0) - stored.get(j, 0.0)) > _SUM_TOL:
                    raise ModelValidationError("trigger-marginal", f"live probability of edge ({j},{v}) is "
                                               f"{marginal.get(j, 0.0):.17g} but stored weight is "
                                               f"{stored.get(j, 0.0):.17g}", vertex=v, edge=(j, v))


def _directed_only(graph, what):
    if not graph.directed:
        raise ModelValidationError("undirected-model", f"{what} models need a directed graph; "
                                   "call graph.to_directed() first")


def linear_threshold(graph: WeightedDigraph) -> TriggerModel:
    _directed_only(graph, "linear threshold")
    model = TriggerModel(graph, LINEAR_THRESHOLD)
    validate(model)
    return model


def independent_cascade(graph: WeightedDigraph) -> TriggerModel:
    _directed_only(graph, "independent cascade")
    model = TriggerModel(graph, INDEPENDENT_CASCADE)
    validate(model)
    return model


def explicit_model(n: int, triggers) -> TriggerModel:
    """Build a triggering model from per-vertex trigger distributions.

    The stored graph carries the induced marginal live-edge probabilities,
    so every bound computation applies unchanged.
    """
    triggers = tuple(tuple((frozenset(int(j) for j in s), float(p)) for s, p in dist) for dist in triggers)
    if len(triggers) != n:
        raise ModelValidationError("trigger-table", f"expected {n} trigger lists, got {len(triggers)}")
    marginal = {}
    for v, dist in enumerate(triggers):
        for s, p in dist:
            for j in s:
                marginal[(j, v)] = marginal.get((j, v), 0.0) + p
    edges = [(j, v, min(1.0, p)) for (j, v), p in sorted(marginal.items())]
    model = TriggerModel(WeightedDigraph(n, edges, directed=True), EXPLICIT, triggers)
    validate(model)
    return model


# -- reachability -------------------------------------------------------------

def reach(g: WeightedDigraph, open_edges, seeds) -> np.ndarray:
    """Vertices reachable from ``seeds`` through open edges (seeds included).

    ``open_edges`` is a boolean slot mask (or ``None`` for "all open"). An
    open undirected edge transmits both ways. Returns a sorted id array.
    """
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if open_edges is None:
        open_edges = np.ones(g.m, dtype=bool)
    is_open = np.asarray(open_edges, dtype=bool)
    if not is_open.any():
        return seeds
    out = g._out_lists
    hit = np.zeros(g.n, dtype=bool)
    hit[seeds] = True
    stack = seeds.tolist()
    open_list = is_open.tolist()
    while stack:
        u = stack.pop()
        targets, slots = out[u]
        for v, e in zip(targets, slots):
            if open_list[e] and not hit[v]:
                hit[v] = True
                stack.append(v)
    return np.flatnonzero(hit)


def infected_fraction(g: WeightedDigraph, open_edges, seeds) -> float:
    """Fraction of the ``n`` vertices infected from ``seeds``."""
    if g.n == 0:
        return 0.0
    return len(reach(g, open_edges, seeds)) / g.n


def reachable_in_topology(g: WeightedDigraph, seeds) -> np.ndarray:
    """Reach of ``seeds`` when every edge with positive weight is open."""
    return reach(g, g.weight > 0, seeds)


# -- generators ---------------------------------------------------------------

def erdos_renyi_directed(n: int, p: float, seed=None) -> WeightedDigraph:
    """Directed G(n, p): each ordered pair ``(i, j)``, ``i != j``, independently with probability ``p``."""
    if n < 1 or not 0.0 <= p <= 1.0:
        raise ValueError(f"invalid Erdos-Renyi parameters n={n}, p={p}")
    rng = check_random_state(seed)
    present = rng.random((n, n)) < p
    np.fill_diagonal(present, False)
    src, dst = np.nonzero(present)
    return WeightedDigraph(n, zip(src.tolist(), dst.tolist(), itertools.repeat(1.0)), directed=True)


def preferential_attachment(n: int, m0: int, m: int, seed=None) -> WeightedDigraph:
    """Undirected preferential attachment graph.

    Starts from ``m0`` isolated vertices; each new vertex attaches to ``m``
    distinct existing vertices chosen with probability proportional to
    degree + 1 (the +1 lets isolated seed vertices be chosen).
    """
    if m0 < 1 or m < 1 or m > m0 or n < m0:
        raise ValueError(f"invalid preferential attachment parameters n={n}, m0={m0}, m={m}")
    rng = check_random_state(seed)
    degree = np.zeros(n)
    edges = []
    for v in range(m0, n):
        weights = degree[:v] + 1.0
        targets = rng.choice(v, size=m, replace=False, p=weights / weights.sum())
        for u in sorted(targets.tolist()):
            edges.append((u, v, 1.0))
            degree[u] += 1
            degree[v] += 1
    return WeightedDigraph(n, edges, directed=False)


def grid_2d(rows: int, cols: int) -> WeightedDigraph:
    """Undirected ``rows x cols`` lattice, vertex ``r * cols + c``."""
    if rows < 1 or cols < 1:
        raise ValueError(f"invalid grid size {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if r + 1 < rows:
                edges.append((v, v + cols, 1.0))
    return WeightedDigraph(rows * cols, edges, directed=False)


def complete(n: int, directed: bool = False) -> WeightedDigraph:
    if n < 1:
        raise ValueError(f"invalid complete graph size {n}")
    pairs = itertools.permutations(range(n), 2) if directed else itertools.combinations(range(n), 2)
    return WeightedDigraph(n, ((u, v, 1.0) for u, v in pairs), directed=directed)


def chain_star(n: int, weight: float = 0.5) -> WeightedDigraph:
    """Vertex 0 feeds vertex 1, which feeds every vertex ``2..n-1``."""
    if n < 2:
        raise ValueError("chain-star needs at least two vertices")
    edges = [(0, 1, weight)] + [(1, j, weight) for j in range(2, n)]
    return WeightedDigraph(n, edges, directed=True)


def lt_weights_gamma(g: WeightedDigraph, gamma_min: float, gamma_max: float, seed=None) -> TriggerModel:
    """Linear threshold weights ``b_ji = (1 - gamma_i) / d(i)``.

    ``gamma_i ~ Uniform[gamma_min, gamma_max]`` per vertex and ``d(i)`` is the
    in-degree of ``i`` in the (symmetrized) topology. Vertices without
    incoming edges get no weights.
    """
    if not 0.0 <= gamma_min <= gamma_max <= 1.0:
        raise ValueError(f"need 0 <= gamma_min <= gamma_max <= 1, got {gamma_min}, {gamma_max}")
    rng = check_random_state(seed)
    d = g.to_directed()
    gamma = rng.uniform(gamma_min, gamma_max, size=d.n)
    indeg = d.in_degree()
    w = np.zeros(d.m)
    has = indeg[d.dst] > 0
    w[has] = (1.0 - gamma[d.dst[has]]) / indeg[d.dst[has]]
    return linear_threshold(d.with_weights(w))


# -- edge-list files ----------------------------------------------------------

def save_edgelist(g: WeightedDigraph, path_or_buf) -> None:
    """Write ``src<TAB>dst<TAB>weight`` lines under a ``#directed``/``#undirected`` header.

    Weights use the shortest round-tripping decimal (at most 17 significant digits).
    """
    lines = ["#directed" if g.directed else "#undirected", f"# n={g.n}"]
    lines += [f"{u}\t{v}\t{w!r}" for u, v, w in g.edges()]
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        path_or_buf.write(text)


def load_edgelist(path_or_buf, n: int | None = None) -> WeightedDigraph:
    """Parse the edge-list format written by :func:`save_edgelist`.

    ``n`` defaults to the ``# n=`` comment if present, else ``max id + 1``.
    Parse errors raise ``ValueError`` naming the line number.
    """
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    directed = None
    declared_n = None
    edges = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tag = line[1:].strip()
            if tag in ("directed", "undirected"):
                if directed is not None:
                    raise ValueError(f"line {lineno}: duplicate direction header")
                directed = tag == "directed"
            elif tag.startswith("n="):
                declared_n = int(tag[2:])
            continue
        if directed is None:
            raise ValueError(f"line {lineno}: missing '#directed' or '#undirected' header")
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'src<TAB>dst<TAB>weight', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if directed is None:
        raise ValueError("missing '#directed' or '#undirected' header")
    if n is None:
        n = declared_n if declared_n is not None else (max(max(u, v) for u, v, _ in edges) + 1 if edges else 0)
    try:
        return WeightedDigraph(n, edges, directed=directed)
    except ModelValidationError as exc:
        bad = exc.edge
        for lineno, raw in enumerate(io.StringIO(text), start=1):
            parts = raw.strip().split("\t")
            if bad is not None and len(parts) == 3 and {int(parts[0]), int(parts[1])} == set(bad):
                raise ModelValidationError(exc.code, f"line {lineno}: {exc}", exc.vertex, exc.edge, exc.value) from None
        raise


def load_triggers(path_or_buf) -> TriggerModel:
    """Parse an explicit trigger-model file.

    Blocks separated by blank lines; each starts with ``vertex <i>`` followed
    by ``p<TAB>j1,j2,...`` lines (an empty list means "no trigger").
    An optional first line ``n <count>`` fixes the vertex count.
    """
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    n = None
    table: dict[int, list] = {}
    current = None
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            current = None if not line.strip() else current
            continue
        if line.startswith("n "):
            n = int(line.split()[1])
            continue
        if line.startswith("vertex"):
            try:
                current = int(line.split()[1])
            except (IndexError, ValueError):
                raise ValueError(f"line {lineno}: bad vertex header {line!r}") from None
            if current in table:
                raise ValueError(f"line {lineno}: vertex {current} defined twice")
            table[current] = []
            continue
        if current is None:
            raise ValueError(f"line {lineno}: trigger line outside a vertex block")
        p_text, _, members = line.partition("\t")
        try:
            p = float(p_text)
            subset = [int(x) for x in members.split(",") if x.strip()]
        except ValueError:
            raise ValueError(f"line {lineno}: expected 'p<TAB>j1,j2,...', got {line!r}") from None
        table[current].append((subset, p))
    if n is None:
        n = max(table) + 1 if table else 0
    triggers = [table.get(v, [((), 1.0)]) for v in range(n)]
    return explicit_model(n, triggers)


def save_triggers(model: TriggerModel, path_or_buf) -> None:
    blocks = [f"n {model.n}"]
    for v in range(model.n):
        lines = [f"vertex {v}"]
        lines += [f"{p!r}\t{','.join(str(j) for j in s)}" for s, p in model.trigger_distribution(v)]
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks) + "\n"
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        path_or_buf.write(text)
