"""Tools for assembling and scoring text-to-image evaluation sets.

The package covers the full loop: shaping a sample of prompts so that
category counts match target ratios (an L1-deviation MILP with a greedy
warm start), clustering prompt embeddings into an extra grouping
dimension, generating synthetic prompts and element-wise questions,
aggregating human annotations, fusing VQA yes/no logits into element and
image scores, correlation and threshold metrics, and leaderboard
ranking.  The ``musebench`` CLI strings these together; see README.md.
"""

__version__ = "0.1.0"

__all__ = [
    "aggregate",
    "cluster",
    "metrics",
    "milp",
    "ranking",
    "records",
    "shaping",
    "simplex",
    "vqa",
]
