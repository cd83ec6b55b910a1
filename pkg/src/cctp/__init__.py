"""Simulator for the k-Covering Canadian Traveller Problem."""
from .core import (
    CCTPError,
    ContractViolation,
    EdgeState,
    Environment,
    MetricInstance,
    Scenario,
    ScenarioError,
    TravellerView,
    Walk,
    edge,
    generate_random_scenario,
    load_scenario,
    new_environment,
    replay,
    save_scenario,
    validate_metric,
)
from .explore import (
    CompressedGraph,
    ShortCutResult,
    compress,
    compress_and_explore,
    inject_tour,
    nn_explore,
    repeated_shortcut_baseline,
    run_algorithm,
    shortcut,
)
from .lowerbound import generate_hurkens, lemma_preference
from .tsp import (
    christofides_tour,
    double_tree_tour,
    held_karp_optimal,
    metric_closure,
    minimum_spanning_tree,
    offline_optimum,
)

__version__ = "0.1.0"

__all__ = [
    "generate_hurkens",
    "lemma_preference",
    "CCTPError",
    "ContractViolation",
    "EdgeState",
    "Environment",
    "MetricInstance",
    "Scenario",
    "ScenarioError",
    "TravellerView",
    "Walk",
    "edge",
    "generate_random_scenario",
    "load_scenario",
    "new_environment",
    "replay",
    "save_scenario",
    "validate_metric",
    "CompressedGraph",
    "ShortCutResult",
    "compress",
    "compress_and_explore",
    "inject_tour",
    "nn_explore",
    "repeated_shortcut_baseline",
    "run_algorithm",
    "shortcut",
    "christofides_tour",
    "double_tree_tour",
    "held_karp_optimal",
    "metric_closure",
    "minimum_spanning_tree",
    "offline_optimum",
]
