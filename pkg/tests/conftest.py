import os

# keep BLAS single-threaded so timing bounds and bit-repeatability are stable
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from somri import ModelConfig, SsmConfig, init_weights


def small_ssm_config(**overrides):
    """Reduced scan dimensions that keep unit-level tests fast."""
    params = dict(d_model=8, d_state=3, d_head=8, rank=2, chunk=4, expand=2)
    params.update(overrides)
    return SsmConfig(**params)


def small_model_config(**overrides):
    params = dict(groups=2, units_per_group=2, ssm=small_ssm_config(), seed=123)
    params.update(overrides)
    return ModelConfig(**params)


def random_unit_weights(seed=0, model_cfg=None):
    """Unit weights with every block randomized (including the modulation
    projection, which is zero at init) so switch effects are observable."""
    cfg = model_cfg or small_model_config(groups=1, units_per_group=1)
    w = init_weights(cfg).units[0]
    rng = np.random.default_rng(seed + 1000)
    w.modulation.proj_weight = rng.uniform(
        -0.5, 0.5, w.modulation.proj_weight.shape
    ).astype(np.float32)
    w.modulation.proj_bias = rng.uniform(
        -0.1, 0.1, w.modulation.proj_bias.shape
    ).astype(np.float32)
    w.scan.delta_bias = rng.uniform(-0.5, 0.5, w.scan.delta_bias.shape).astype(
        np.float32
    )
    w.scan.a_log = rng.uniform(-0.5, 0.5, w.scan.a_log.shape).astype(np.float32)
    return w


def random_complex_field(rng, h, w):
    return rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
