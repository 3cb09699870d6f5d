import numpy as np
import pytest

from pastaopt import Catalog


def central_difference(f, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Independent gradient oracle: central differences coordinate by coordinate."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = step
        grad[i] = (f(theta + e) - f(theta - e)) / (2.0 * step)
    return grad


def relative_error(got: np.ndarray, expected: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(expected)), 1e-12)
    return float(np.linalg.norm(np.asarray(got) - np.asarray(expected))) / denom


def random_catalog(rng: np.random.Generator, n_items: int, dim: int) -> Catalog:
    return Catalog(
        features=rng.standard_normal((n_items, dim)),
        revenues=rng.uniform(0.0, 1.0, size=n_items),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
