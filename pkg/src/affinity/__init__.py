"""Random-walk affinity measures on weighted graphs.

Effective resistances, hitting and commute times, and resistive embeddings,
computed exactly on small graphs or through Gaussian sketching plus Laplacian
solves on large ones, with refinement-based expressivity demos and Monte
Carlo oracles for cross-checking.
"""

__version__ = "0.1.0"

from .embeddings import (ResistiveEmbedding, RotationMatrix, embedding_mean,
                         exact_embedding, jl_dimension, random_rotation,
                         rotate_embedding, sketched_embedding)
from .features import (FeatureSet, assemble_features, augment_with_rotation,
                       export_features, load_features)
from .graph import (CrossComponentError, Graph, GraphInputError,
                    StationaryDistribution, apply_laplacian, build_graph,
                    disjoint_union, graph_from_edgelist, graph_from_json,
                    graph_to_json_dict, load_graph, stationary_distribution)
from .measures import (AffinityTable, RadiusEstimate, approx_hitting_time,
                       commute_time, effective_resistance,
                       effective_resistance_from_embedding,
                       hitting_time_exact, hitting_time_radius,
                       hitting_time_via_embedding, tetali_hitting_time)
from .oracle import (WalkEstimate, broken_cycle_resistance, build_cycle,
                     build_path, counterexample_pair, cycle_resistance,
                     find_witness_graph, mc_hitting_time,
                     random_connected_graph, spd_bellman_ford, witness_graph)
from .solvers import (DensePseudoinverse, PseudoinverseRankError, SolverConfig,
                      SolverConvergenceError, dense_laplacian,
                      dense_pseudoinverse, project_out_nullspace,
                      solve_laplacian)
from .wl import (Coloring, ExpressivityReport, expressivity_report,
                 quantize_edge_values, refines, wl_refine)

__all__ = [name for name in dir() if not name.startswith("_")]
