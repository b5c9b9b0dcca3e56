"""Graph matching over fused structure and attribute vectors.

Thin re-export of the compiled extension. Errors raised by the library are
``GmatchError`` with a ``kind`` attribute (``"DependencyError"``, ``"NotFound"``, ...).
"""

from ._gmatch import (
    CUSTOM_TARGET,
    CcaModel,
    Corpus,
    GmatchError,
    Server,
    Session,
    SkipGramModel,
    adjusted_rand_index,
    build_context,
    cluster,
    fit_cca,
    ged,
    gen_synthetic,
    knn,
    run_benchmark,
    tsne,
)

__all__ = [
    "CUSTOM_TARGET",
    "CcaModel",
    "Corpus",
    "GmatchError",
    "Server",
    "Session",
    "SkipGramModel",
    "adjusted_rand_index",
    "build_context",
    "cluster",
    "fit_cca",
    "ged",
    "gen_synthetic",
    "knn",
    "run_benchmark",
    "tsne",
]

__version__ = "0.1.0"
