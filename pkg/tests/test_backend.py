import os
import subprocess
import sys

import pytest

import bigd
from bigd import _backend


def _backend_name(env_value):
    env = dict(os.environ, BIGD_PURE_PYTHON=env_value)
    code = "import bigd; print(bigd.BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout.strip()


def test_backend_exposed():
    assert bigd.BACKEND in ("cython", "numpy")
    assert _backend.kernels.NAME == bigd.BACKEND


def test_env_forces_fallback():
    assert _backend_name("1") == "numpy"


def test_compiled_used_when_built():
    if _backend.compiled is None:
        pytest.skip("compiled kernels not built")
    assert _backend_name("") == "cython"
    assert _backend_name("0") == "cython"
