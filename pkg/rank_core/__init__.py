"""
Rank Core - Rank statistics, canonical rankings and listwise objectives

This package contains the numeric core shared by training and scoring:
rank probability matrices, the assignment solve that turns them into
canonical rankings, and the Plackett-Luce / ListMLE objective.
"""
from rank_core.rank_stats import (
    rank_order,
    compute_rpm,
    compute_rpm_table,
)
from rank_core.canonical_ranks import (
    solve_assignment,
    solve_assignment_bruteforce,
    solve_table,
)
from rank_core.pl_objective import (
    pl_permutation_prob,
    listmle_loss,
    listmle_grad,
    hybrid_loss,
    select_rank_subset,
)

__all__ = [
    "rank_order",
    "compute_rpm",
    "compute_rpm_table",
    "solve_assignment",
    "solve_assignment_bruteforce",
    "solve_table",
    "pl_permutation_prob",
    "listmle_loss",
    "listmle_grad",
    "hybrid_loss",
    "select_rank_subset",
]

__version__ = "1.0.0"
