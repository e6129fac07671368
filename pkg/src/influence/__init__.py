"""Influence bounds, simulation, greedy seed selection and online influence games."""
from .bounds import (BoundReport, ConvergenceError, bound_report, hazard_bound, ic_worst_case, lambda_bar_inf,
                     lb1, lb2, lb3, lb_m, lb_trig, ratio_guarantees, spectral_radius_symmetric,
                     ub_neumann, ub_truncated)
from .graph import (ModelValidationError, TriggerModel, WeightedDigraph, chain_star, complete,
                    erdos_renyi_directed, explicit_model, grid_2d, independent_cascade, linear_threshold,
                    load_edgelist, load_triggers, lt_weights_gamma, preferential_attachment, reach,
                    save_edgelist, save_triggers, validate)
from .maximize import (GreedyMaximizer, GreedyTrace, Objective, exhaustive_maximize, greedy_maximize,
                       lazy_greedy_maximize, make_objective)
from .simulate import InstanceTooLargeError, estimate_influence, exact_influence, sample_live_edges

__version__ = "0.1.0"
