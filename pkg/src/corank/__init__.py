"""Co-ranking and perfectly load-balanced, stable parallel two-way merge."""

from .coranker import (
    ComparisonCounter,
    CoRanks,
    RankError,
    co_rank,
    co_rank_counted,
    iteration_bound,
    tight_iteration_bound,
)
from .genbench import Distribution, Kind, generate, run_experiment, validate_sorted
from .parmerge import (
    BlockAssignment,
    MergePlan,
    MergeReport,
    merge_parallel,
    merge_parallel_synced,
    partition_output,
    plan,
)
from .seqmerge import Origin, TaggedElement, oracle_merge_tagged, stable_merge

__version__ = "0.1.0"
