"""Shared pytest fixtures and configuration for mcn-seg tests."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import RunConfig
from mcn_seg.utils.parallel import set_thread_cap

settings.register_profile(
    "mcn",
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("mcn")


@pytest.fixture(autouse=True)
def single_thread():
    """Run library parallelism inline unless a test asks otherwise."""
    set_thread_cap(1)


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_tensor(rng):
    """``(2, 3, 6, 6)`` float32 tensor of standard normals."""
    return Tensor(rng.standard_normal((2, 3, 6, 6)))


@pytest.fixture
def guide_image(rng):
    """``(1, 3, 8, 8)`` image in ``[0, 1]``."""
    return Tensor(rng.uniform(0.0, 1.0, size=(1, 3, 8, 8)))


@pytest.fixture
def tiny_run():
    """A pipeline small enough to train a few steps in well under a second."""
    return RunConfig(
        seed=3,
        deterministic=True,
        trunk_widths=[4, 8],
        convs_per_stage=1,
        fc_channels=8,
        fusion_taps=["stage2", "fc"],
        fusion_channels=4,
        widths=[4, 4],
        rates=[1, 2],
        refine_width=4,
        num_classes=3,
        dataset_count=4,
        image_size=16,
        max_shapes=2,
        steps=3,
        batch_size=2,
        crop_size=16,
        eval_count=2,
    )


@pytest.fixture
def output_dir(tmp_path):
    """Fresh directory for run artifacts."""
    path = tmp_path / "runs"
    path.mkdir()
    return path
