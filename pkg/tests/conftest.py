import numpy as np
import pytest

from rsma_noma.scenario import ChannelRealization, ScenarioConfig


def make_channel(a_noma, a_rsma=None, sigma2=1.0):
    """Channel with prescribed noise-over-gain values (watts) per user."""
    a_n = np.atleast_1d(np.asarray(a_noma, dtype=float))
    a_r = a_n.copy() if a_rsma is None else np.atleast_1d(np.asarray(a_rsma, dtype=float))
    gains_n = sigma2 / a_n
    gains_r = sigma2 / a_r
    return ChannelRealization(
        gains_noma=gains_n, gains_rsma=gains_r,
        delta_noma=gains_n / sigma2, delta_rsma=gains_r / sigma2,
        a_noma=a_n, a_rsma=a_r,
        distances_m=np.full(a_n.size, 10.0))


def table1_config(num_users=4, **overrides):
    """Table-1 radio parameters with package defaults elsewhere."""
    params = dict(num_users=num_users, p_max_dbm=35.0, noise_dbm=-110.0,
                  p_tol_dbm=10.0, epsilon1=1e-3, l_max=100)
    params.update(overrides)
    return ScenarioConfig(**params)


@pytest.fixture
def unit_channel_2():
    return make_channel([1.0, 1.0])
