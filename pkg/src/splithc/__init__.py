"""Hierarchical clustering with a noisy triplet-splitting oracle."""

from .errors import BuildFailure, ConfigError, ValidationError
from .graph import (EdgeUpdate, Graph, PlantedInstance, build_graph,
                    generate_planted, induced_subgraph, read_graph,
                    sample_tree_shape, total_weight)
from .hctree import HCTree, SmallTreeOrder
from .objectives import (ObjectiveValue, dasgupta_cost,
                         edge_partition_by_supervertex, mw_revenue,
                         mw_structure_report, objective_identity_gap)
from .oracle import ADVERSARIES, OracleConfig, SplittingOracle
from .partial import (BuildTrace, SplitOutcome, SplitParams,
                      build_strong_partial, build_weak_partial,
                      counterpart_test, counterpart_test_strong,
                      orphan_predecessor_test, predecessor_test, tree_merge,
                      tree_split)
from .pipeline import (BruteForceResult, StreamingState, all_tree_shapes,
                       brute_force_opt, complete_partial, hc_das, hc_das_fast,
                       hc_mw, stream_feed, stream_finalize, stream_from_graph,
                       stream_init, stream_memory)
from .ptree import (ConsistencyReport, PartialHCTree, check_strong_consistency,
                    check_weak_consistency)
from .sparsest import (Cut, exact_sparsest_cut, heuristic_sparsest_cut,
                       recursive_sparsest_tree)

__version__ = "0.1.0"
