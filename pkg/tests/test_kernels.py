import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from shapevar import kernels
from shapevar._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def run_python(code, **env):
    full = dict(os.environ, **env)
    out = subprocess.run([sys.executable, "-c", code], env=full, capture_output=True, text=True, check=True)
    return out.stdout.strip()


@needs_numba
@pytest.mark.parametrize("lmax", [0, 1, 5, 30])
def test_legendre_flavours_agree(lmax):
    theta = np.linspace(0.01, np.pi - 0.01, 97)
    P1, dP1 = kernels._legendre_tables_numba(lmax, theta)
    P2, dP2 = kernels._legendre_tables_numpy(lmax, theta)
    np.testing.assert_allclose(P1, P2, rtol=0, atol=1e-13)
    np.testing.assert_allclose(dP1, dP2, rtol=0, atol=1e-11)


def test_legendre_against_scipy():
    theta = np.linspace(0.05, 3.0, 13)
    P, _ = kernels.legendre_tables(12, theta)
    for l in range(13):
        for m in range(l + 1):
            ref = np.real(sph_harm_y(l, m, theta, 0.0)) * (-1) ** m
            np.testing.assert_allclose(P[l, m], ref, atol=1e-13)


def test_legendre_theta_derivative_fd():
    theta = np.linspace(0.2, 2.9, 11)
    h = 1e-6
    _, dP = kernels.legendre_tables(8, theta)
    Pp, _ = kernels.legendre_tables(8, theta + h)
    Pm, _ = kernels.legendre_tables(8, theta - h)
    np.testing.assert_allclose(dP, (Pp - Pm) / (2 * h), atol=1e-7)


@needs_numba
@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=40),
    st.lists(st.floats(-5, 5), min_size=40, max_size=40),
    st.integers(2, 200),
)
def test_classify_flavours_agree(c2, c3, k_max):
    c2 = np.array(c2)
    c3 = np.array(c3[: len(c2)])
    a = kernels._classify_cells_numba(c2, c3, k_max, 1e-13)
    b = kernels._classify_cells_numpy(c2, c3, k_max, 1e-13)
    np.testing.assert_array_equal(a, b)


def test_classify_against_mode_scan():
    rng = np.random.default_rng(4)
    c2 = rng.normal(size=400)
    c3 = rng.normal(size=400) * 0.1
    c3[:50] = 0.0
    c2[50:60] = -3 * c3[50:60]  # exact zero at k = 3
    k_max = 40
    got = kernels.classify_cells(c2, c3, k_max)
    for i in range(400):
        z = c2[i] + np.arange(2, k_max + 1) * c3[i]
        neg = (z < -1e-13).any() or c3[i] < 0
        pos = (z > 1e-13).any() or c3[i] > 0
        if pos and neg:
            want = kernels.INDEFINITE
        elif (np.abs(z) <= 1e-13).any():
            want = kernels.DEGENERATE
        else:
            want = kernels.LOCAL_MAX if neg else kernels.LOCAL_MIN
        assert got[i] == want, i


def test_classify_keeps_shape():
    out = kernels.classify_cells(np.zeros((3, 4)) - 1, np.zeros((3, 4)), 10)
    assert out.shape == (3, 4) and (out == kernels.LOCAL_MAX).all()


def test_environment_switch_selects_numpy():
    code = "from shapevar import _accel; print(_accel.USE_NUMBA)"
    assert run_python(code, SHAPEVAR_DISABLE_NUMBA="1") == "False"
    assert run_python(code, SHAPEVAR_DISABLE_NUMBA="off") == str(HAVE_NUMBA)


def test_both_paths_give_same_grid():
    code = (
        "import json; from shapevar.regimes import classify_grid;"
        "from shapevar.regimes import open_grid;"
        "g = classify_grid(7, open_grid(1.05, 6.95, 0.1), open_grid(1.05, 30, 0.1), mode='paper');"
        "print(json.dumps([int(v) for v in g.codes.ravel()]))"
    )
    a = json.loads(run_python(code, SHAPEVAR_DISABLE_NUMBA="1"))
    b = json.loads(run_python(code, SHAPEVAR_DISABLE_NUMBA="0"))
    assert a == b and len(a) > 100


@needs_numba
def test_thread_cap():
    code = "import numba; import shapevar.kernels; print(numba.get_num_threads())"
    assert run_python(code, SHAPEVAR_THREADS="1") == "1"
    assert int(run_python(code, SHAPEVAR_THREADS="bogus")) >= 1
