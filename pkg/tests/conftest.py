import numpy as np
import pytest

from meanfield.kernels import get_backend


def _have_compiled() -> bool:
    try:
        get_backend("c")
        return True
    except ImportError:
        return False


HAVE_C = _have_compiled()

both_backends = pytest.mark.parametrize(
    "backend",
    ["python"] + (["c"] if HAVE_C else []),
)


@pytest.fixture
def rng_np():
    return np.random.default_rng(20240811)
