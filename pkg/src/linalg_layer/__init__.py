"""
Linear Algebra Layer
Dense matrix primitives and streaming class-statistics accumulation
"""

from .matrix_ops import Matrix, SvdResult, SvdConvergenceError, svd, pseudoinverse
from .class_statistics import (
    ClassStatistics,
    EmptyClassError,
    StreamingClassAccumulator,
    compute_class_statistics
)

__all__ = [
    'Matrix',
    'SvdResult',
    'SvdConvergenceError',
    'svd',
    'pseudoinverse',
    'ClassStatistics',
    'EmptyClassError',
    'StreamingClassAccumulator',
    'compute_class_statistics'
]
