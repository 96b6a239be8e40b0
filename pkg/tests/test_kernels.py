import numpy as np
import pytest

from fbspec import _accel, kernels

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def test_legendre_table_agree():
    x = np.linspace(-1, 1, 37)
    for a, b in zip(kernels.legendre_table_numpy(30, x), kernels.legendre_table_numba(30, x)):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-12)


def test_gauss_newton_agree():
    n = 41
    i = np.arange(1, n + 1)
    x0 = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    xa, da, ia = kernels.gauss_newton_numpy(n, x0, 1e-14, 100)
    xb, db, ib = kernels.gauss_newton_numba(n, x0, 1e-14, 100)
    np.testing.assert_allclose(xa, xb, atol=1e-15)
    np.testing.assert_allclose(da, db, rtol=1e-13)
    assert ia > 0 and ib > 0


def test_assemble_and_cumsum_agree():
    rng = np.random.default_rng(3)
    B0, B1, B2 = (rng.standard_normal((9, 9)) for _ in range(3))
    x = np.sort(rng.uniform(-0.9, 0.9, 9))
    adv = rng.standard_normal(9)
    np.testing.assert_allclose(
        kernels.assemble_operator_numpy(B0, B1, B2, x, adv, 0.3),
        kernels.assemble_operator_numba(B0, B1, B2, x, adv, 0.3),
        rtol=1e-14,
        atol=1e-14,
    )
    F = rng.standard_normal((10, 16))
    W = rng.uniform(0, 0.1, (10, 16))
    np.testing.assert_allclose(kernels.panel_cumsum_numpy(F, W), kernels.panel_cumsum_numba(F, W), rtol=1e-14)


def test_panel_cumsum_is_running_integral():
    W = np.full((4, 2), 0.5)
    F = np.ones((4, 2))
    np.testing.assert_allclose(kernels.panel_cumsum_numpy(F, W), [1.0, 2.0, 3.0, 4.0])


@pytest.mark.parametrize("flag, expect", [("1", "numpy"), ("", "numba")])
def test_env_flag_selects_backend(flag, expect):
    import os
    import subprocess
    import sys

    env = {**os.environ, "FBSPEC_DISABLE_NUMBA": flag}
    code = "from fbspec import kernels; print(kernels.legendre_table.__name__)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip().endswith(expect)
