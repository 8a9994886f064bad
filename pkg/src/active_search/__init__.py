"""Budgeted active search: k-NN posterior model, myopic and nonmyopic (ENS)
policies, batch policies, and an exact oracle for tiny instances."""

from .data import DataError, Dataset, load_dataset
from .graph import NeighborGraph, build_knn_graph, jaccard_similarity
from .model import Checkpoint, KnnModel, ModelError, SearchState
from .topsum import TopSumIndex
from .myopic import (
    PolicySpec,
    greedy_batch_select,
    one_step_select,
    parse_policy,
    two_step_score,
    two_step_select,
    ugb_select,
)
from .ens import EnsEvaluation, PruningStats, ens_score, ens_select, ens_upper_bound
from .batch import (
    FictionalOracle,
    batch_ens_objective_exact,
    batch_ens_objective_sampled,
    batch_ens_select,
    fictional_label,
    sample_joint_labels,
    sequential_simulation_batch,
)
from .exact import OptimalValue, optimal_expected_utility, optimal_p_at_least_one
from .policy import select

__version__ = "0.1.0"
