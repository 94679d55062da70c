"""Distributed graph learning from smooth signals with exact message accounting."""
from .graph import (CommGraph, DataGraph, EdgeDifferences, UpperWeights, edge_differences,
                    index_pair, laplacian_from_weights, pair_index, smoothness)
from .init_protocol import naive_initialization_cost, run_initialization
from .ledger import MessageLedger, Transport
from .loop import (GlobalRunConfig, RunResult, centralized_cost, run_baseline_logdegree,
                   run_centralized, run_distributed, symmetry_project)
from .metrics import (MetricsReport, frobenius_error, normalized_frobenius_error,
                      wasserstein_distance)
from .synth import (GenConfig, generate_comm_graph, generate_data_graph, generate_instance,
                    generate_smooth_signals)

__version__ = "0.1.0"
