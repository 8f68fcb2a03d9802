import numpy as np
import pytest

from hopflab import build_grid, build_bases

_GRIDS = {}
_BASES = {}


def get_grid(n_t, n_ang=None):
    n_ang = n_t if n_ang is None else n_ang
    key = (n_t, n_ang)
    if key not in _GRIDS:
        _GRIDS[key] = build_grid(n_t, n_ang)
    return _GRIDS[key]


def get_bases(g, K):
    key = (id(g), K)
    if key not in _BASES:
        # reuse a deeper truncation when available
        for (gid, kk), b in _BASES.items():
            if gid == id(g) and kk >= K:
                _BASES[key] = b
                break
        else:
            _BASES[key] = build_bases(K, g)
    return _BASES[key]


@pytest.fixture(scope="session")
def g12():
    return get_grid(12)


@pytest.fixture(scope="session")
def g16():
    return get_grid(16)


@pytest.fixture(scope="session")
def g20():
    return get_grid(20)


@pytest.fixture(scope="session")
def g24():
    return get_grid(24)


@pytest.fixture(scope="session")
def bases16_k4(g16):
    return get_bases(g16, 4)


@pytest.fixture(scope="session")
def bases20_k4(g20):
    return get_bases(g20, 4)


@pytest.fixture(scope="session")
def bases24_k3(g24):
    return get_bases(g24, 3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
