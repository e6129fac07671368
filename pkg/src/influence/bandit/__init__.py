"""Adversarial online influence maximization with edge semi-bandit feedback."""
from .adversaries import (Adversary, BernoulliAdversary, CliqueAdversary, FixedSequenceAdversary,
                          SourceSinkAdversary, clique_gap, clique_lower_bound_delta,
                          source_sink_gap, source_sink_lower_bound_params)
from .game import (SCALED_ALPHA, EpisodeLog, Feedback, GameConfig, ProtocolError, RegretReport,
                   greedy_fixed_set, make_feedback, play_episode, reach_closure, regret_curve,
                   regret_report, set_rewards, singleton_rewards, theoretical_bound)
from .losses import marginal_losses, node_loss_estimate, symmetric_loss_definitional, symmetric_loss_estimate
from .players import (NODE, SYMMETRIC, Exp3Player, FixedPlayer, NormalizationError, OnlineGreedyPlayer,
                      OSMDPlayer, Player, PolicyState, SingleSourcePlayer, UniformPlayer, osmd_step)

__all__ = [name for name in dir() if not name.startswith("_")]
