"""Block-guided graph convolutional networks (C++ core)."""

from bmgcn._core import (
    ConfigError,
    DataError,
    Dataset,
    Graph,
    NumericalError,
    TrainConfig,
    block_matrix,
    evaluate,
    generate_dataset,
    homophily_ratio,
    load_dataset,
    load_graph,
    one_hot,
    planted_homophily,
    refine_topology,
    run_splits,
    save_dataset,
    similarity_matrix,
    stratified_split,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "Graph",
    "NumericalError",
    "TrainConfig",
    "block_matrix",
    "evaluate",
    "generate_dataset",
    "homophily_ratio",
    "load_dataset",
    "load_graph",
    "one_hot",
    "planted_homophily",
    "refine_topology",
    "run_splits",
    "save_dataset",
    "similarity_matrix",
    "stratified_split",
    "train",
]
