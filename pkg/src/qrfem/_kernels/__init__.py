"""Quadrature-contraction kernels: compiled core with a numpy fallback.

The element-matrix contractions dominate assembly time; they are provided
by a Cython extension when it was built and by einsum otherwise. Both
implement the same contracts (see _numpy.py), selected once at import.
"""

try:
    from ._speedups import pairs_grad, pairs_scalar

    BACKEND = "cython"
except ImportError:
    from ._numpy import pairs_grad, pairs_scalar

    BACKEND = "numpy"

__all__ = ["pairs_scalar", "pairs_grad", "BACKEND"]
