import warnings

import numpy as np
import pytest

from majorant.rng import RngStream

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")


@pytest.fixture
def gen():
    return RngStream(12345).generator()


def interp_cdf(xs: np.ndarray, pdf: np.ndarray):
    """Trapezoid CDF of a densely tabulated density, as a callable."""
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(xs))])
    cdf = np.clip(cdf / cdf[-1], 0.0, 1.0)
    return lambda q: np.interp(q, xs, cdf)
