import numpy as np
import pytest
from PIL import Image

from colorunet import _kernels
from colorunet import discretizer as dz
from colorunet.colorspace import rgb_to_yuv, to_uint8

from synthetic import scenes


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-second training runs")


@pytest.fixture(params=_kernels.BACKENDS if _kernels.HAS_NUMBA else ("numpy",))
def backend(request):
    """Run a test once per kernel backend."""
    previous = _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(previous)


@pytest.fixture(scope="session")
def scene_set():
    return scenes(8, 64, 64)


@pytest.fixture(scope="session")
def fitted(scene_set):
    return dz.fit([rgb_to_yuv(s) for s in scene_set], n=16)


@pytest.fixture
def image_dir(tmp_path, scene_set):
    root = tmp_path / "imgs"
    root.mkdir()
    for i, s in enumerate(scene_set):
        Image.fromarray(to_uint8(s)).save(root / f"img{i}.png")
    return root


def rng_tensor(seed, shape, lo=-1.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, shape)
