import numpy as np
import pytest

from qrfem import KERNEL_BACKEND
from qrfem._kernels import _numpy

speedups = pytest.importorskip(
    "qrfem._kernels._speedups", reason="compiled kernels not built"
)


@pytest.fixture
def shapes(rng):
    n, nq, na, nb = 37, 6, 10, 4
    return dict(
        w=rng.uniform(0.1, 1.0, nq),
        scale=rng.uniform(0.5, 2.0, n),
        U=rng.standard_normal((n, nq, na)),
        V=rng.standard_normal((n, nq, nb)),
        GU=rng.standard_normal((n, nq, na, 2)),
        GV=rng.standard_normal((n, nq, nb, 2)),
    )


def test_pairs_scalar_matches_reference(shapes):
    a = speedups.pairs_scalar(shapes["w"], shapes["scale"], shapes["U"], shapes["V"])
    b = _numpy.pairs_scalar(shapes["w"], shapes["scale"], shapes["U"], shapes["V"])
    assert a.shape == b.shape == (37, 10, 4)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-14)


def test_pairs_grad_matches_reference(shapes):
    a = speedups.pairs_grad(shapes["w"], shapes["scale"], shapes["GU"], shapes["GV"])
    b = _numpy.pairs_grad(shapes["w"], shapes["scale"], shapes["GU"], shapes["GV"])
    assert np.allclose(a, b, rtol=1e-13, atol=1e-14)


def test_pairs_scalar_tiny_hand_case():
    # single cell, one point, 1x1 bases: just w * scale * u * v
    w = np.array([0.5])
    scale = np.array([3.0])
    U = np.array([[[2.0]]])
    V = np.array([[[7.0]]])
    for impl in (speedups, _numpy):
        out = impl.pairs_scalar(w, scale, U, V)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == pytest.approx(21.0)


def test_backend_label_consistent():
    from qrfem._kernels import BACKEND

    assert KERNEL_BACKEND == BACKEND
    assert BACKEND in ("cython", "numpy")
