"""Matrix-based bulk minibatch sampling with a simulated distributed SpGEMM."""

from ._core import (
    ContractViolation,
    Graph,
    ParseError,
    SparseMatrix,
    add,
    block_diag,
    build_column_extraction,
    compact_columns,
    expand_row_extraction,
    its_sample_row,
    ladies_seed_matrix,
    load_graph,
    norm_rows_ladies,
    norm_rows_sage,
    predict_costs,
    run_epoch,
    sage_seed_matrix,
    sample,
    spgemm,
    spgemm_distributed,
    synthesize_features,
    vstack,
    write_matrix_market,
)

__all__ = [
    "ContractViolation",
    "Graph",
    "ParseError",
    "SparseMatrix",
    "add",
    "block_diag",
    "build_column_extraction",
    "compact_columns",
    "expand_row_extraction",
    "its_sample_row",
    "ladies_seed_matrix",
    "load_graph",
    "norm_rows_ladies",
    "norm_rows_sage",
    "predict_costs",
    "run_epoch",
    "sage_seed_matrix",
    "sample",
    "spgemm",
    "spgemm_distributed",
    "synthesize_features",
    "vstack",
    "write_matrix_market",
]

__version__ = "0.1.0"
