import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import osmd_reference
from influence.bandit import (BernoulliAdversary, CliqueAdversary, Exp3Player, FixedPlayer,
                              FixedSequenceAdversary, GameConfig, NormalizationError, OnlineGreedyPlayer,
                              OSMDPlayer, ProtocolError, SourceSinkAdversary, UniformPlayer, clique_gap,
                              clique_lower_bound_delta, make_feedback, osmd_step, play_episode,
                              reach_closure, regret_report, set_rewards, singleton_rewards,
                              source_sink_gap, source_sink_lower_bound_params, theoretical_bound)
from influence.bandit.players import Player
from influence.graph import WeightedDigraph, complete
from influence.oracles import set_function_violations


def triangle():
    return complete(3, directed=False)


def empty_schedule(T):
    return FixedSequenceAdversary([[] for _ in range(T)])


def check_simplex(p):
    assert np.all(p > 0)
    assert abs(p.sum() - 1.0) <= 1e-12


class TestFeedback:
    def test_triangle(self):
        g = triangle()
        R, fb = make_feedback(g, g.edge_set([(0, 1)]), [0])
        assert R.tolist() == [0, 1]
        assert sorted((u, v, o) for u, v, o in fb.pairs(g)) == [(0, 1, True), (0, 2, False), (1, 2, False)]

    def test_directed_cycle(self):
        g = WeightedDigraph(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])
        R, fb = make_feedback(g, g.edge_set([(0, 1)]), [0])
        assert R.tolist() == [0, 1]
        assert sorted(fb.pairs(g)) == [(0, 1, True), (1, 2, False)]

    def test_undirected_excludes_edges_away_from_reach(self):
        g = WeightedDigraph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)], directed=False)
        _, fb = make_feedback(g, np.zeros(3, dtype=bool), [0])
        assert fb.pairs(g) == [(0, 1, False)]

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_feedback_reach_is_exact_for_every_source_subset(self, seed):
        rng = np.random.default_rng(seed)
        g = complete(5, directed=bool(rng.integers(2)))
        open_edges = rng.random(g.m) < 0.3
        S = rng.choice(5, size=3, replace=False).tolist()
        _, fb = make_feedback(g, open_edges, S)
        from influence.graph import reach
        for r in range(1, 4):
            sub = S[:r]
            assert fb.reach(g, sub).tolist() == reach(g, open_edges, sub).tolist()


class TestHarness:
    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_empty_adversary_single_round(self, k):
        g = complete(4, directed=False)
        log = play_episode(GameConfig(g, 1, k), empty_schedule(1), UniformPlayer(), seed=0)
        assert log.rewards.tolist() == [k / 4]

    def test_triangle_round(self):
        g = triangle()
        adv = FixedSequenceAdversary([[(0, 1)]])
        log = play_episode(GameConfig(g, 1, 1), adv, FixedPlayer([0]), seed=0)
        assert log.rewards[0] == pytest.approx(2 / 3)
        assert len(log.feedback[0].slots) == 3

    def test_wrong_source_count(self):
        with pytest.raises(ProtocolError):
            play_episode(GameConfig(triangle(), 2, 1), empty_schedule(2), FixedPlayer([0, 1]), seed=0)

    def test_source_out_of_range(self):
        with pytest.raises(ProtocolError):
            play_episode(GameConfig(triangle(), 2, 1), empty_schedule(2), FixedPlayer([7]), seed=0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GameConfig(triangle(), 0, 1)
        with pytest.raises(ValueError):
            GameConfig(triangle(), 5, 4)

    def test_rewards_within_range(self):
        g = complete(6, directed=True)
        log = play_episode(GameConfig(g, 300, 2), BernoulliAdversary(0.2),
                           OnlineGreedyPlayer(lambda: Exp3Player("node"), 2), seed=1)
        assert log.rewards.min() >= 1 / 6 and log.rewards.max() <= 1

    def test_log_lines(self):
        g = triangle()
        log = play_episode(GameConfig(g, 1, 1), FixedSequenceAdversary([[(0, 1)]]), FixedPlayer([0]), seed=0)
        (line,) = list(log.lines())
        t, adv, src, rew, fb = line.split("\t")
        assert (t, adv, src) == ("1", "0-1", "0")
        assert float(rew) == pytest.approx(2 / 3)
        assert sorted(fb.split(",")) == ["0-1:1", "0-2:0", "1-2:0"]

    def test_obliviousness(self):
        g = complete(8, directed=False)
        cfg = GameConfig(g, 50, 1)
        adv = CliqueAdversary(4, 0.2, distinguished=3)
        a = play_episode(cfg, adv, Exp3Player(), seed=11)
        b = play_episode(cfg, adv, UniformPlayer(), seed=11)
        assert np.array_equal(a.edges, b.edges)

    def test_player_receives_no_schedule(self):
        seen = []

        class Spy(Player):
            def select_sources(self):
                return [0]

            def update(self, sources, feedback):
                seen.append(feedback)

        g = triangle()
        play_episode(GameConfig(g, 3, 1), BernoulliAdversary(0.5), Spy(), seed=0)
        assert len(seen) == 3 and all(not hasattr(fb, "edges") for fb in seen)


class TestAdversaries:
    def test_clique_delta_zero_is_symmetric(self):
        probs = CliqueAdversary(3, 0.0, distinguished=2).inclusion_probabilities(9)
        assert np.all(probs == probs[0])

    def test_source_sink_delta_zero_is_symmetric(self):
        p_src, _ = SourceSinkAdversary(1, 2, 0.0, distinguished=1).label_probabilities(6)
        assert np.all(p_src == p_src[0])

    def test_full_clique_rewards_one(self):
        g = complete(6, directed=False)
        log = play_episode(GameConfig(g, 20, 1), CliqueAdversary(6, 0.0), UniformPlayer(), seed=3)
        assert np.all(log.rewards == 1)

    def test_no_sinks_rewards_one_over_n(self):
        g = complete(6, directed=True)
        log = play_episode(GameConfig(g, 20, 1), SourceSinkAdversary(2, 0, 0.3, 0), UniformPlayer(), seed=3)
        assert np.all(log.rewards == 1 / 6)

    def test_bernoulli_one_on_complete_graph(self):
        g = complete(5, directed=True)
        log = play_episode(GameConfig(g, 10, 1), BernoulliAdversary(1.0), UniformPlayer(), seed=0)
        assert np.all(log.rewards == 1)

    def test_fixed_sequence_replay(self):
        g = complete(4, directed=False)
        seq = [[(0, 1)], [(2, 3), (1, 2)], []]
        a = play_episode(GameConfig(g, 3, 1), FixedSequenceAdversary(seq), UniformPlayer(), seed=0)
        b = play_episode(GameConfig(g, 3, 1), FixedSequenceAdversary(seq), UniformPlayer(), seed=9)
        assert np.array_equal(a.edges, b.edges)

    def test_fixed_sequence_wrong_length(self):
        with pytest.raises(ValueError):
            play_episode(GameConfig(triangle(), 3, 1), empty_schedule(2), UniformPlayer(), seed=0)

    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            CliqueAdversary(0, 0.1)
        with pytest.raises(ValueError):
            CliqueAdversary(2, 1.0)
        with pytest.raises(ValueError):
            CliqueAdversary(11, 0.1).inclusion_probabilities(10)
        with pytest.raises(ValueError):
            SourceSinkAdversary(4, 4, 0.1).label_probabilities(6)
        with pytest.raises(ValueError):
            BernoulliAdversary(1.5)
        with pytest.raises(ValueError):
            CliqueAdversary(2, 0.1, distinguished=10).inclusion_probabilities(10)

    def test_topology_checks(self):
        with pytest.raises(ValueError):
            play_episode(GameConfig(complete(4, directed=True), 2, 1), CliqueAdversary(2, 0.1), UniformPlayer())
        with pytest.raises(ValueError):
            play_episode(GameConfig(complete(4, directed=False), 2, 1), SourceSinkAdversary(1, 1), UniformPlayer())

    def test_source_sink_labels_exclusive(self):
        src, sink = SourceSinkAdversary(2, 3, 0.2, 0).draw_labels(6, 20_000, np.random.default_rng(0))
        assert not np.any(src & sink)
        assert abs(sink.mean() - 0.5) < 0.01

    def test_gap_values(self):
        assert clique_gap(10, 2, 0.1) == pytest.approx(0.00288)
        assert source_sink_gap(6, 1, 2, 0.5) == pytest.approx(5 / 216)

    def test_lower_bound_recipes_are_valid_parameters(self):
        for n, T in [(20, 5000), (10, 2000), (50, 10**5)]:
            delta = clique_lower_bound_delta(n, T)
            assert 0 < delta < 0.5
            c, d, dd = source_sink_lower_bound_params(n, T)
            assert 0 < dd < 1 and c + d <= n


class TestDistinguishedVertexGap:
    rounds = 200_000

    def test_clique(self):
        n, c, delta = 10, 2, 0.1
        members = CliqueAdversary(c, delta, distinguished=0).draw_members(n, self.rounds, np.random.default_rng(0))
        size = members.sum(axis=1)
        x = lambda v: np.where(members[:, v], size, 1) / n
        diff = x(0) - x(1)
        assert abs(diff.mean() - clique_gap(n, c, delta)) < 4 * diff.std(ddof=1) / math.sqrt(self.rounds)

    def test_source_sink(self):
        n, c, d, delta = 6, 1, 2, 0.5
        src, sink = SourceSinkAdversary(c, d, delta, distinguished=0).draw_labels(n, self.rounds,
                                                                                   np.random.default_rng(1))
        sinks = sink.sum(axis=1)
        x = lambda v: (1 + src[:, v] * sinks) / n
        diff = x(0) - x(1)
        assert abs(diff.mean() - source_sink_gap(n, c, d, delta)) < 4 * diff.std(ddof=1) / math.sqrt(self.rounds)

    def test_closed_form_rewards_match_harness(self):
        g = complete(6, directed=True)
        adv = SourceSinkAdversary(1, 2, 0.5, distinguished=0)
        cfg = GameConfig(g, 300, 1)
        sched = adv.generate(cfg, np.random.default_rng(5))
        src, sink = adv.draw_labels(6, 300, np.random.default_rng(5))
        expect = (1 + src * sink.sum(axis=1, keepdims=True)) / 6
        assert singleton_rewards(g, sched) == pytest.approx(expect)


class TestExp3:
    @pytest.mark.parametrize("loss", ["node", "symmetric"])
    def test_zero_losses_keep_uniform(self, loss):
        g = complete(5, directed=False)
        player = Exp3Player(loss)
        play_episode(GameConfig(g, 50, 1), BernoulliAdversary(1.0), player, seed=0)
        assert player.p == pytest.approx(np.full(5, 0.2), abs=1e-15)

    def test_default_rates(self):
        player = Exp3Player("symmetric")
        player.reset(GameConfig(complete(20, directed=False), 5000), np.random.default_rng(0))
        assert player.eta_at(1) == pytest.approx(math.sqrt(4 * math.log(20) / (5000 * 21)))
        player = Exp3Player("node")
        player.reset(GameConfig(complete(20, directed=True), 5000), np.random.default_rng(0))
        assert player.eta_at(1) == pytest.approx(math.sqrt(2 * math.log(20) / (5000 * 20)))

    def test_symmetric_on_directed_graph_raises(self):
        with pytest.raises(ValueError):
            play_episode(GameConfig(complete(4, directed=True), 5), BernoulliAdversary(0.5), Exp3Player("symmetric"))

    def test_simplex_along_an_episode(self):
        g = complete(7, directed=False)
        player = Exp3Player("symmetric", eta=0.5)
        player.reset(GameConfig(g, 200), np.random.default_rng(0))
        adv = BernoulliAdversary(0.15).generate(GameConfig(g, 200), np.random.default_rng(1))
        for t in range(200):
            (s,) = player.select_sources()
            _, fb = make_feedback(g, adv[t], [s])
            player.update([s], fb)
            check_simplex(player.p)
            assert np.isfinite(player.L).all()

    def test_learns_dominant_vertex(self):
        # only vertex 0 has an out-edge that is always open
        g = WeightedDigraph(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1)])
        player = Exp3Player("node", eta=0.05)
        play_episode(GameConfig(g, 2000), BernoulliAdversary(1.0), player, seed=2)
        assert int(np.argmax(player.p)) == 0 and player.p[0] > 0.9


class TestOSMD:
    def test_zero_loss_fixed_point(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        assert osmd_step(p, np.zeros(4), 0.7) == pytest.approx(p, abs=1e-14)

    def test_two_vertex_step_against_high_precision(self):
        p = np.array([0.5, 0.5])
        got = osmd_step(p, np.array([1.0, 0.0]), 1.0)
        lam, ref = osmd_reference(p, [1.0, 0.0], 1.0)
        assert lam < 0
        assert got == pytest.approx(ref, abs=1e-12)
        u = np.sqrt(2) + np.array([1.0, 0.0])
        assert np.sum((u + lam) ** -2) == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.floats(1e-3, 5.0))
    @settings(max_examples=40)
    def test_random_steps_against_high_precision(self, n, seed, eta):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(n))
        loss = rng.exponential(2.0, n) * (rng.random(n) < 0.5)
        got = osmd_step(p, loss, eta)
        _, ref = osmd_reference(p, loss, eta)
        check_simplex(got)
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-13)

    def test_huge_loss_stays_positive(self):
        got = osmd_step(np.array([0.3, 0.7]), np.array([1e12, 0.0]), 1.0)
        assert got[0] > 0 and abs(got.sum() - 1) <= 1e-12

    def test_non_convergence_reports_residual(self):
        with pytest.raises(NormalizationError) as err:
            osmd_step(np.array([0.2, 0.3, 0.5]), np.array([5.0, 0.0, 1.0]), 1.0, max_iter=0)
        assert err.value.residual != 0

    def test_default_rates(self):
        player = OSMDPlayer("symmetric")
        player.reset(GameConfig(complete(20, directed=False), 5000), np.random.default_rng(0))
        assert player.eta_at(1) == pytest.approx(2 ** 0.75 / math.sqrt(5000))
        player = OSMDPlayer("node")
        player.reset(GameConfig(complete(20, directed=True), 5000), np.random.default_rng(0))
        assert player.eta_at(1) == pytest.approx(math.sqrt(2 / 5000))

    @pytest.mark.parametrize("loss,directed", [("symmetric", False), ("node", True)])
    def test_simplex_along_an_episode(self, loss, directed):
        g = complete(8, directed=directed)
        player = OSMDPlayer(loss)
        cfg = GameConfig(g, 300)
        player.reset(cfg, np.random.default_rng(0))
        adv = BernoulliAdversary(0.1).generate(cfg, np.random.default_rng(1))
        for t in range(300):
            (s,) = player.select_sources()
            _, fb = make_feedback(g, adv[t], [s])
            player.update([s], fb)
            check_simplex(player.p)
            st_ = player.state
            assert st_.label == f"osmd-{loss}" and st_.t == t + 1


class TestOnlineGreedy:
    def test_k_one_matches_sub_policy(self):
        g = complete(6, directed=False)
        cfg = GameConfig(g, 100, 1)
        adv = BernoulliAdversary(0.2)
        a = play_episode(cfg, adv, OnlineGreedyPlayer(lambda: Exp3Player("symmetric"), 1), seed=4)
        b = play_episode(cfg, adv, Exp3Player("symmetric"), seed=4)
        assert np.array_equal(a.sources, b.sources)
        assert np.array_equal(a.rewards, b.rewards)

    def test_empty_adversary_marginal_gains(self):
        g = complete(5, directed=True)
        player = OnlineGreedyPlayer(lambda: Exp3Player("node"), 3)
        cfg = GameConfig(g, 1, 3)
        player.reset(cfg, np.random.default_rng(0))
        S = player.select_sources()
        probs = [pol.p.copy() for pol in player.policies]
        _, fb = make_feedback(g, np.zeros(g.m, dtype=bool), S)
        player.update(S, fb)
        seen = set()
        for pol, v, p in zip(player.policies, S, probs):
            gain = 0.0 if v in seen else 1 / 5
            seen.add(v)
            assert pol.L[v] == pytest.approx((1 - gain) / p[v])

    def test_duplicates_earn_nothing(self):
        g = complete(4, directed=False)
        log = play_episode(GameConfig(g, 1, 3), empty_schedule(1), FixedPlayer([2, 2, 1]), seed=0)
        assert log.rewards[0] == pytest.approx(2 / 4)

    def test_label(self):
        player = OnlineGreedyPlayer(lambda: OSMDPlayer("node"), 3)
        player.reset(GameConfig(complete(5, directed=True), 2, 3), np.random.default_rng(0))
        assert player.label == "greedy3-osmd-node"
        assert len(player.state) == 3

    def test_rejects_zero_k(self):
        with pytest.raises(ValueError):
            OnlineGreedyPlayer(Exp3Player, 0)


class TestRewardFunctions:
    @given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 3), st.booleans())
    @settings(max_examples=30)
    def test_round_and_cumulative_rewards_are_submodular(self, seed, n, T, directed):
        rng = np.random.default_rng(seed)
        g = complete(n, directed=directed)
        sched = rng.random((T, g.m)) < 0.35
        closure = reach_closure(g, sched)
        for t in range(T):
            assert not set_function_violations(lambda S: set_rewards(closure[t:t + 1], S).sum() if S else 0.0, n)
        assert not set_function_violations(lambda S: set_rewards(closure, S).sum() if S else 0.0, n)

    def test_closure_matches_harness(self):
        g = complete(6, directed=False)
        cfg = GameConfig(g, 40, 1)
        sched = BernoulliAdversary(0.2).generate(cfg, np.random.default_rng(0))
        rewards = singleton_rewards(g, sched)
        for v in range(6):
            log = play_episode(cfg, FixedSequenceAdversary(list(sched)), FixedPlayer([v]), seed=0)
            assert log.rewards == pytest.approx(rewards[:, v])


class TestRegret:
    def test_playing_the_best_vertex_gives_zero(self):
        g = WeightedDigraph(3, [(0, 1, 1), (1, 2, 1)])
        adv = FixedSequenceAdversary([[(0, 1), (1, 2)]] * 5)
        log = play_episode(GameConfig(g, 5), adv, FixedPlayer([0]), seed=0)
        rep = regret_report([log])
        assert rep.regret == 0 and rep.pseudo_regret_mean == 0 and rep.best_set == [0]

    def test_hand_built_two_rounds(self):
        # round 1 opens 0->1, round 2 opens nothing
        # vertex 0 earns 1 + 1/2, vertex 1 earns 1/2 + 1/2; playing 1 twice loses 1/2
        g = WeightedDigraph(2, [(0, 1, 1), (1, 0, 1)])
        adv = FixedSequenceAdversary([[(0, 1)], []])
        log = play_episode(GameConfig(g, 2), adv, FixedPlayer([1]), seed=0)
        rep = regret_report([log])
        assert (rep.realized, rep.best_fixed, rep.regret) == (1.0, 1.5, 0.5)
        assert rep.alpha == 1.0 and rep.oracle == "exact"

    def test_empty_adversary_zero_regret(self):
        g = complete(5, directed=False)
        logs = [play_episode(GameConfig(g, 30), empty_schedule(30), Exp3Player(), seed=s) for s in range(3)]
        rep = regret_report(logs)
        assert rep.regret == 0 and rep.pseudo_regret_mean == 0 and rep.pseudo_regret_stderr == 0

    def test_deterministic_adversary_pseudo_equals_mean_regret(self):
        g = complete(6, directed=False)
        rng = np.random.default_rng(0)
        seq = [rng.random(g.m) < 0.2 for _ in range(40)]
        logs = [play_episode(GameConfig(g, 40), FixedSequenceAdversary(seq), Exp3Player(), seed=s) for s in range(5)]
        rep = regret_report(logs)
        assert rep.pseudo_regret_mean == pytest.approx(rep.regret, abs=1e-12)

    def test_uniform_player_on_symmetric_adversary(self):
        g = complete(8, directed=False)
        cfg = GameConfig(g, 400)
        logs = [play_episode(cfg, CliqueAdversary(4, 0.0), UniformPlayer(), seed=s) for s in range(20)]
        # regret against the fixed vertex 0, which is exchangeable with every other
        diffs = np.array([set_rewards(reach_closure(g, lg.edges), [0]).sum() - lg.realized for lg in logs])
        assert abs(diffs.mean()) < 4 * diffs.std(ddof=1) / math.sqrt(len(diffs)) + 1e-12

    def test_uniform_player_on_clique_adversary(self):
        n, c, delta, T, R = 10, 2.0, 0.3, 2000, 40
        g = complete(n, directed=False)
        cfg = GameConfig(g, T)
        adv = CliqueAdversary(c, delta, distinguished=0)
        logs = [play_episode(cfg, adv, UniformPlayer(), seed=s) for s in range(R)]
        diffs = np.array([set_rewards(reach_closure(g, lg.edges), [0]).sum() - lg.realized for lg in logs])
        expect = clique_gap(n, c, delta) * T * (1 - 1 / n)
        assert abs(diffs.mean() - expect) < 4 * diffs.std(ddof=1) / math.sqrt(R)
        rep = regret_report(logs)
        assert rep.pseudo_regret_mean >= 0

    def test_multi_source_uses_greedy_oracle(self):
        g = complete(5, directed=False)
        logs = [play_episode(GameConfig(g, 20, 2), BernoulliAdversary(0.2), UniformPlayer(), seed=s)
                for s in range(3)]
        rep = regret_report(logs)
        assert rep.oracle == "greedy" and rep.alpha == pytest.approx(1 - 1 / math.e)
        assert len(rep.best_set) == 2
        assert rep.regret == pytest.approx(rep.best_fixed - rep.realized)
        assert set(rep.to_dict()) >= set(rep.KEYS)

    def test_errors(self):
        with pytest.raises(ValueError):
            regret_report([])
        g = complete(4, directed=False)
        a = play_episode(GameConfig(g, 3), empty_schedule(3), UniformPlayer(), seed=0)
        b = play_episode(GameConfig(g, 4), empty_schedule(4), UniformPlayer(), seed=0)
        with pytest.raises(ValueError):
            regret_report([a, b])
        with pytest.raises(ValueError):
            regret_report([a], alpha=0.0)

    def test_theoretical_bounds(self):
        assert theoretical_bound("exp3-symmetric", 20, 5000) == pytest.approx(math.sqrt(5000 * 21 * math.log(20)))
        assert theoretical_bound("exp3-symmetric", 20, 5000) == pytest.approx(561, abs=1)
        assert theoretical_bound("osmd-symmetric", 20, 5000) == pytest.approx(376, abs=1)
        assert theoretical_bound("osmd-node", 20, 5000) == pytest.approx(894, abs=1)
        assert theoretical_bound("greedy3-exp3-symmetric", 20, 5000, 3) == pytest.approx(3 * 2 ** 0.25 * 316.2278,
                                                                                        rel=1e-6)
        with pytest.raises(ValueError):
            theoretical_bound("uniform", 20, 5000)
