import numpy as np
import pytest

from leveltime import warmup
from leveltime.lab import GeneratorSpec, generate


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    # pay any jit compilation cost once, outside the timed tests
    warmup()


@pytest.fixture
def step_path():
    """Factory for seeded random step paths with exact jump marks."""

    def make(seed, n_samples=200, sigma=1.0, jump_rate=6.0, kind="jump_diffusion"):
        spec = GeneratorSpec(
            kind,
            T=1.0,
            steps_per_unit=n_samples - 1,
            seed=seed,
            sigma=sigma,
            jump_rate=jump_rate,
        )
        return generate(spec)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
