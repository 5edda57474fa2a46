"""Almost-sure limit-average analysis of POMDPs with finite-memory strategies."""
from .chain import (Certificate, MarkovChain, bottom_sccs, certify_limavg1, certify_limavg_gt,
                    class_mean_payoff, product_chain, reachable_recurrent, stationary_distribution)
from .collapse import (CollapsedGraph, MemoryAnnotation, annotate, collapsed_graph,
                       collapsed_strategy, memory_bound)
from .errors import CapacityError, InternalError, ModelError, NumericalError, PomdpError
from .formats import parse_model, parse_strategy, serialize_model, serialize_strategy
from .model import (Belief, Distribution, FiniteStrategy, Pomdp, belief_update, initial_belief,
                    memoryless_strategy, validate_pomdp)
from .oracle import OracleResult, bounded_oracle
from .reductions import (Pfa, WordStrategy, pfa_accept_prob, reduce_strict_emptiness,
                         reduce_value1, word_strategies, word_to_strategy)
from .simulate import SimulationResult, simulate
from .solver import (BeliefObsPomdp, SolveResult, almost_sure_reach_obs, build_belief_obs,
                     prune_consistent, solve_limavg1)

__all__ = [
    "Certificate", "MarkovChain", "bottom_sccs", "certify_limavg1", "certify_limavg_gt",
    "class_mean_payoff", "product_chain", "reachable_recurrent", "stationary_distribution",
    "CollapsedGraph", "MemoryAnnotation", "annotate", "collapsed_graph", "collapsed_strategy",
    "memory_bound", "CapacityError", "InternalError", "ModelError", "NumericalError",
    "PomdpError", "parse_model", "parse_strategy", "serialize_model", "serialize_strategy",
    "Belief", "Distribution", "FiniteStrategy", "Pomdp", "belief_update", "initial_belief",
    "memoryless_strategy", "validate_pomdp", "OracleResult", "bounded_oracle", "Pfa",
    "WordStrategy", "pfa_accept_prob", "reduce_strict_emptiness", "reduce_value1",
    "word_strategies", "word_to_strategy", "SimulationResult", "simulate", "BeliefObsPomdp", "SolveResult",
    "almost_sure_reach_obs", "build_belief_obs", "prune_consistent", "solve_limavg1",
]

__version__ = "0.1.0"
