"""Round loop, feedback, logs and regret accounting for the online game."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .._validation import spawn_seeds
from ..graph import WeightedDigraph, reach

SCALED_ALPHA = 1.0 - 1.0 / math.e


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class GameConfig:
    graph: WeightedDigraph
    horizon: int
    k: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if not 1 <= self.k <= self.graph.n:
            raise ValueError(f"k must lie in 1..{self.graph.n}, got {self.k}")

    @property
    def n(self):
        return self.graph.n

    @property
    def directed(self):
        return self.graph.directed


@dataclass(frozen=True)
class Feedback:
    """Revealed edge statuses: slot ids and whether each is open."""

    slots: np.ndarray
    is_open: np.ndarray

    def open_mask(self, m: int) -> np.ndarray:
        mask = np.zeros(m, dtype=bool)
        mask[self.slots[self.is_open]] = True
        return mask

    def reach(self, graph: WeightedDigraph, seeds) -> np.ndarray:
        """Reach of ``seeds`` using only revealed open edges.

        Exact for any subset of the round's sources, since every edge that
        could extend their reach is revealed.
        """
        return reach(graph, self.open_mask(graph.m), seeds)

    def pairs(self, graph):
        return [(int(graph.src[s]), int(graph.dst[s]), bool(o))
                for s, o in zip(self.slots.tolist(), self.is_open.tolist())]


def make_feedback(graph: WeightedDigraph, open_edges, sources):
    """``(reach, Feedback)`` for one round.

    Undirected: every edge with an endpoint in the reach. Directed: every
    edge whose tail is in the reach.
    """
    open_edges = np.asarray(open_edges, dtype=bool)
    R = reach(graph, open_edges, sources)
    hit = np.zeros(graph.n, dtype=bool)
    hit[R] = True
    sel = hit[graph.src] if graph.directed else hit[graph.src] | hit[graph.dst]
    slots = np.flatnonzero(sel)
    return R, Feedback(slots, open_edges[slots])


@dataclass
class EpisodeLog:
    config: GameConfig
    edges: np.ndarray       # (T, m) adversary schedule
    sources: np.ndarray     # (T, k)
    rewards: np.ndarray     # (T,)
    feedback: list = field(repr=False)
    player: str = ""
    adversary: str = ""

    @property
    def realized(self) -> float:
        return _total(self.rewards, self.config.graph.n)

    def lines(self):
        g = self.config.graph
        for t in range(len(self.rewards)):
            adv = ",".join(f"{u}-{v}" for u, v in zip(g.src[self.edges[t]].tolist(), g.dst[self.edges[t]].tolist()))
            src = ",".join(str(s) for s in self.sources[t].tolist())
            fb = ",".join(f"{u}-{v}:{int(o)}" for u, v, o in self.feedback[t].pairs(g))
            yield f"{t + 1}\t{adv}\t{src}\t{format(float(self.rewards[t]), '.17g')}\t{fb}"

    def write(self, fh):
        for line in self.lines():
            fh.write(line + "\n")


def play_episode(config: GameConfig, adversary, player, seed=None) -> EpisodeLog:
    """Run ``config.horizon`` rounds.

    The adversary schedule is drawn first from its own seed stream; the
    player draws from a second, independent stream.
    """
    adv_seed, player_seed = spawn_seeds(seed, 2)
    schedule = np.asarray(adversary.generate(config, np.random.default_rng(adv_seed)), dtype=bool)
    g = config.graph
    if schedule.shape != (config.horizon, g.m):
        raise ProtocolError(f"adversary produced shape {schedule.shape}, expected {(config.horizon, g.m)}")
    player.reset(config, np.random.default_rng(player_seed))
    T, k, n = config.horizon, config.k, g.n
    sources = np.zeros((T, k), dtype=np.int64)
    rewards = np.zeros(T)
    feedback = []
    for t in range(T):
        S = [int(v) for v in player.select_sources()]
        if len(S) != k:
            raise ProtocolError(f"round {t + 1}: player chose {len(S)} sources, expected {k}")
        if any(not 0 <= v < n for v in S):
            raise ProtocolError(f"round {t + 1}: source outside 0..{n - 1}: {S}")
        R, fb = make_feedback(g, schedule[t], S)
        sources[t] = S
        rewards[t] = len(R) / n
        feedback.append(fb)
        player.update(S, fb)
    return EpisodeLog(config, schedule, sources, rewards, feedback,
                      player=str(getattr(player, "label", "")), adversary=str(getattr(adversary, "label", "")))


# -- offline evaluation of recorded schedules --------------------------------

def _total(rewards, n) -> float:
    # rewards are counts / n; summing the counts keeps totals exact
    return float(np.rint(np.asarray(rewards) * n).sum() / n)


def reach_closure(graph: WeightedDigraph, schedule) -> np.ndarray:
    """``(T, n, n)`` boolean: ``[t, i, j]`` is true when ``j`` is reachable from ``i`` in round ``t``."""
    schedule = np.atleast_2d(np.asarray(schedule, dtype=bool))
    T, n = schedule.shape[0], graph.n
    adj = np.zeros((T, n, n), dtype=np.float32)
    adj[:, graph.src, graph.dst] = schedule
    if not graph.directed:
        adj[:, graph.dst, graph.src] = schedule
    adj += np.eye(n, dtype=np.float32)
    closure = adj > 0
    steps = 1
    while steps < n:
        c = closure.astype(np.float32)
        nxt = np.matmul(c, c) > 0
        if np.array_equal(nxt, closure):
            break
        closure = nxt
        steps *= 2
    return closure


def singleton_rewards(graph, schedule) -> np.ndarray:
    """``(T, n)`` rewards ``f(A_t, {i})``."""
    return reach_closure(graph, schedule).sum(axis=2) / graph.n


def set_rewards(closure, seeds) -> np.ndarray:
    """Per-round rewards of a fixed seed set given a closure stack."""
    n = closure.shape[1]
    return closure[:, list(seeds), :].any(axis=1).sum(axis=1) / n


def greedy_fixed_set(closures, k: int):
    """Greedy seed set for the reward summed over rounds (ties: smallest id).

    ``closures`` is one closure stack or a list of them; the returned value
    is the mean over stacks of the summed reward.
    """
    if isinstance(closures, np.ndarray):
        closures = [closures]
    n = closures[0].shape[1]
    covered = [np.zeros((c.shape[0], n), dtype=bool) for c in closures]
    chosen = []
    for _ in range(k):
        totals = np.zeros(n)
        for c, cov in zip(closures, covered):
            totals += (cov[:, None, :] | c).sum(axis=(0, 2))
        if chosen:
            totals[chosen] = -1
        x = int(np.argmax(totals))
        chosen.append(x)
        for c, cov in zip(closures, covered):
            cov |= c[:, x, :]
    return chosen, float(sum(cov.sum() for cov in covered)) / n / len(closures)


@dataclass
class RegretReport:
    realized: float
    best_fixed: float
    regret: float
    pseudo_regret_mean: float
    pseudo_regret_stderr: float
    alpha: float
    scaled_regret: float
    scaled_regret_stderr: float = 0.0
    best_set: list = field(default_factory=list)
    oracle: str = "exact"
    replications: int = 1
    horizon: int = 0

    KEYS = ("realized", "best_fixed", "regret", "pseudo_regret_mean",
            "pseudo_regret_stderr", "alpha", "scaled_regret")

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.KEYS}
        d.update(scaled_regret_stderr=self.scaled_regret_stderr, best_set=list(self.best_set),
                 oracle=self.oracle, replications=self.replications, horizon=self.horizon)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _comparator_rewards(logs, k):
    """Per-log ``(T, ...)`` rewards for candidate comparators and the chosen comparator set."""
    g = logs[0].config.graph
    closures = [reach_closure(g, log.edges) for log in logs]
    if k == 1:
        per_log = np.stack([c.sum(axis=2).sum(axis=0) / g.n for c in closures])  # (R, n)
        best_each = per_log.max(axis=1)
        star = int(np.argmax(per_log.mean(axis=0)))
        star_rewards = [c[:, star, :].sum(axis=1) / g.n for c in closures]
        return best_each, [star], star_rewards
    best_each = np.array([greedy_fixed_set(c, k)[1] for c in closures])
    star, _ = greedy_fixed_set(closures, k)
    star_rewards = [set_rewards(c, star) for c in closures]
    return best_each, star, star_rewards


def regret_report(logs, alpha: Optional[float] = None) -> RegretReport:
    """Regret of a batch of episodes sharing one configuration.

    ``regret`` averages each log's own hindsight regret. The pseudo-regret
    compares against the single set with the best mean reward over all logs.
    For ``k > 1`` both comparators come from greedy (``oracle="greedy"``) and
    the scaled regret uses ``alpha`` (default ``1 - 1/e``).
    """
    logs = list(logs)
    if not logs:
        raise ValueError("regret_report needs at least one episode log")
    config = logs[0].config
    for log in logs[1:]:
        if log.config != config:
            raise ValueError("all logs must share one game configuration")
    k = config.k
    if alpha is None:
        alpha = 1.0 if k == 1 else SCALED_ALPHA
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    realized = np.array([log.realized for log in logs])
    best_each, star, star_rewards = _comparator_rewards(logs, k)
    star_total = np.array([_total(r, config.graph.n) for r in star_rewards])
    R = len(logs)
    diff = star_total - realized
    scaled = alpha * star_total - realized
    stderr = lambda x: float(x.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    return RegretReport(
        realized=float(realized.mean()),
        best_fixed=float(best_each.mean()),
        regret=float(best_each.mean() - realized.mean()),
        pseudo_regret_mean=float(diff.mean()),
        pseudo_regret_stderr=stderr(diff),
        alpha=float(alpha),
        scaled_regret=float(scaled.mean()),
        scaled_regret_stderr=stderr(scaled),
        best_set=list(star),
        oracle="exact" if k == 1 else "greedy",
        replications=R,
        horizon=config.horizon,
    )


def regret_curve(logs, alpha: Optional[float] = None) -> np.ndarray:
    """Mean cumulative (scaled) pseudo-regret after each round, shape ``(T,)``."""
    logs = list(logs)
    k = logs[0].config.k
    if alpha is None:
        alpha = 1.0 if k == 1 else SCALED_ALPHA
    _, _, star_rewards = _comparator_rewards(logs, k)
    per = np.stack([np.cumsum(alpha * s - log.rewards) for s, log in zip(star_rewards, logs)])
    return per.mean(axis=0)


def theoretical_bound(player: str, n: int, T, k: int = 1):
    """Regret rate for a player label: ``exp3-symmetric``, ``osmd-symmetric``, ``osmd-node`` or ``greedy``.

    ``T`` may be an array for a whole curve.
    """
    T = np.asarray(T, dtype=float)
    if player.startswith("greedy"):
        return 2.0 ** 0.25 * k * np.sqrt(T * n)
    if player == "exp3-symmetric":
        return np.sqrt(T * (n + 1) * math.log(n))
    if player == "osmd-symmetric":
        return 2.0 ** 0.25 * np.sqrt(T * n)
    if player == "osmd-node":
        return 2.0 ** 1.5 * np.sqrt(T * n)
    raise ValueError(f"no regret rate recorded for player {player!r}")
