"""Reference numpy implementation of the assembly kernels."""

import numpy as np


def pairs_scalar(w, scale, U, V):
    """out[n,a,b] = scale[n] * sum_q w[q] U[n,q,a] V[n,q,b]."""
    return np.einsum("q,n,nqa,nqb->nab", w, scale, U, V, optimize=True)


def pairs_grad(w, scale, GU, GV):
    """out[n,a,b] = scale[n] * sum_q w[q] GU[n,q,a,:].GV[n,q,b,:]."""
    return np.einsum("q,n,nqai,nqbi->nab", w, scale, GU, GV, optimize=True)
