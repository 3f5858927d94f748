"""Budget-constrained shaping of information cascades.

Interventions that partially quarantine edges or immunize nodes are cast
as box-plus-budget constrained matrix interpolation; the spreading power
of the result is controlled through the hazard radius, the leading
eigenvalue of the symmetrized integrated-hazard matrix.  The subgradient
loops in :mod:`netshape.shaping` minimize (or maximize) that radius, and
:mod:`netshape.cascade` checks the effect by direct Monte-Carlo cascade
simulation against the reference policies in :mod:`netshape.baselines`.
"""

from .baselines import (BaselinePolicy, degree_policy, netshield_policy,
                        rand_policy, wdegree_policy)
from .cascade import (CascadeOutcome, InfluenceEstimate, estimate_influence,
                      influence_counts, run_rng, sample_live_edges,
                      select_influencers, simulate_ctic)
from .config import EVALS, METHODS, ExperimentConfig, parse_config_file
from .errors import ConvergenceError, DomainError, NetshapeError, ParseError
from .graph import (Graph, HazardMatrix, LoadedGraph, ProbabilityMatrix,
                    assign_trivalency, hazard_from_probabilities,
                    induced_subgraph, largest_scc, load_edge_list,
                    normalized_probabilities, probabilities_from_hazard,
                    read_hazard_tsv, sir_hazard, write_hazard_tsv)
from .shaping import (ActionAllocation, FeasibleSetSpec, ShapingResult,
                      apply_policy, netshape_ascent, netshape_edge,
                      netshape_node, project_box_l1, read_allocation,
                      write_allocation, write_trace)
from .spectral import (InfluenceBound, RadiusResult, hazard_radius,
                       influence_upper_bound, radius_subgradient)

__version__ = "0.1.0"

__all__ = [
    "Graph", "HazardMatrix", "ProbabilityMatrix", "LoadedGraph",
    "load_edge_list", "assign_trivalency", "normalized_probabilities",
    "hazard_from_probabilities", "probabilities_from_hazard", "sir_hazard",
    "largest_scc", "induced_subgraph", "read_hazard_tsv", "write_hazard_tsv",
    "RadiusResult", "InfluenceBound", "hazard_radius", "radius_subgradient",
    "influence_upper_bound",
    "FeasibleSetSpec", "ActionAllocation", "ShapingResult", "project_box_l1",
    "netshape_edge", "netshape_node", "netshape_ascent", "apply_policy",
    "write_allocation", "read_allocation", "write_trace",
    "InfluenceEstimate", "CascadeOutcome", "run_rng", "sample_live_edges",
    "influence_counts", "estimate_influence", "simulate_ctic",
    "select_influencers",
    "BaselinePolicy", "rand_policy", "degree_policy", "wdegree_policy",
    "netshield_policy",
    "ExperimentConfig", "parse_config_file", "METHODS", "EVALS",
    "NetshapeError", "DomainError", "ParseError", "ConvergenceError",
    "__version__",
]
