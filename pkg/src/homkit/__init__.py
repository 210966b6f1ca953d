"""Exact partition functions of graph homomorphisms on planar multigraphs.

Submodules: :mod:`~homkit.multigraph`, :mod:`~homkit.matrix`,
:mod:`~homkit.partition`, :mod:`~homkit.gadgets`,
:mod:`~homkit.interpolation`, :mod:`~homkit.classify` and :mod:`~homkit.cli`.
"""

from .errors import BudgetExceeded, ConsistencyError, HomkitError, ParseError, PreconditionError
from .matrix import RationalMatrix, WeightMatrix
from .multigraph import MultiGraph
from .gadgets import EdgeGadget, signature
from .partition import eval_auto, eval_bruteforce
from .classify import classify_general, find_separator

__all__ = [
    "BudgetExceeded",
    "ConsistencyError",
    "EdgeGadget",
    "HomkitError",
    "MultiGraph",
    "ParseError",
    "PreconditionError",
    "RationalMatrix",
    "WeightMatrix",
    "classify_general",
    "eval_auto",
    "eval_bruteforce",
    "find_separator",
    "signature",
]

__version__ = "0.1.0"
