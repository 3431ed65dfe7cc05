"""The pure-numpy fallbacks must agree with the compiled loop kernels."""
import subprocess
import sys

import numpy as np

from memstep._kernels import (
    _memory_direct_all_loop,
    _memory_direct_all_np,
    _p_laplacian_apply_loop,
    _p_laplacian_apply_np,
    _p_laplacian_face_weights_loop,
    _p_laplacian_face_weights_np,
)


def test_memory_direct_variants_agree():
    rng = np.random.default_rng(0)
    u0 = rng.normal(size=3)
    values = rng.normal(size=(41, 3))
    gamma = np.exp(-0.1 * np.arange(1, 41))
    a = _memory_direct_all_np(u0, values, gamma, 0.05)
    b = _memory_direct_all_loop(u0, values, gamma, 0.05)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_p_laplacian_variants_agree():
    rng = np.random.default_rng(1)
    v = rng.normal(size=16)
    np.testing.assert_allclose(
        _p_laplacian_apply_np(v, 3.0, 0.1),
        _p_laplacian_apply_loop(v, 3.0, 0.1), rtol=1e-13)
    np.testing.assert_allclose(
        _p_laplacian_face_weights_np(v, 3.0, 0.1, 1e-8),
        _p_laplacian_face_weights_loop(v, 3.0, 0.1, 1e-8), rtol=1e-13)


def test_env_flag_selects_numpy_path():
    code = (
        "import memstep._kernels as k\n"
        "assert not k.USE_NUMBA\n"
        "assert k.memory_direct_all is k._memory_direct_all_np\n"
    )
    subprocess.run([sys.executable, "-c", code], check=True,
                   env={"MEMSTEP_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"})
