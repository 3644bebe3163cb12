import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from relay_ee.channel import (
    ChannelRealization,
    ConfigError,
    SystemConfig,
    channel_from_dict,
    channel_to_dict,
    cnr_from_coefficient,
    draw_channels,
    load_channels,
    save_channels,
)


def test_defaults_match_reference_scenario():
    c = SystemConfig()
    assert (c.bandwidth_hz, c.p_max_w, c.p_static_w, c.eta) == (1e6, 1.0, 0.2, 0.38)
    assert (c.num_subcarriers, c.num_users, c.num_relays) == (4, 2, 5)


@pytest.mark.parametrize(
    "changes",
    [
        dict(num_subcarriers=2, num_users=3),
        dict(alpha=(1.0,)),
        dict(alpha=(1.0, 0.0)),
        dict(p_max_w=0.2),
        dict(eta=0.0),
        dict(xi=-1.0),
        dict(num_relays=-1),
        dict(seed=-1),
    ],
)
def test_invalid_configs_rejected(changes):
    with pytest.raises(ConfigError):
        SystemConfig(**changes)


def test_replace_resets_alpha_on_new_user_count():
    c = SystemConfig().replace(num_users=3)
    assert c.alpha == (1.0, 1.0, 1.0)


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        SystemConfig.from_dict({"num_users": 2, "bogus": 1})


def test_shapes():
    ch = draw_channels(SystemConfig(num_subcarriers=4, num_users=2, num_relays=5))
    assert ch.gamma_bk.shape == (4, 2)
    assert ch.gamma_br.shape == (4, 5)
    assert ch.gamma_rk.shape == (4, 5, 2)
    assert ch.shape == (4, 2, 5)


def test_determinism():
    c = SystemConfig(seed=7)
    a, b = draw_channels(c), draw_channels(c)
    assert a == b
    assert np.array_equal(a.gamma_rk, b.gamma_rk)
    assert draw_channels(c.replace(seed=8)) != a


def test_sample_mean():
    c = SystemConfig(num_subcarriers=1000, num_users=1000, num_relays=0, alpha=(1.0,) * 1000, seed=3)
    ch = draw_channels(c)
    assert ch.gamma_bk.size == 10**6
    assert abs(ch.gamma_bk.mean() - 10.0) / 10.0 < 0.01


def test_exponential_ks():
    c = SystemConfig(num_subcarriers=100, num_users=100, num_relays=5, alpha=(1.0,) * 100, avg_cnr_db=7, seed=11)
    ch = draw_channels(c)
    for arr in (ch.gamma_bk, ch.gamma_br, ch.gamma_rk):
        x = arr.ravel()[:100_000]
        p = stats.kstest(x, "expon", args=(0, c.avg_cnr)).pvalue
        assert p > 0.01


def test_cnr_from_coefficient():
    c = SystemConfig(bandwidth_hz=1e6, num_subcarriers=4, noise_psd=4e-6)
    assert cnr_from_coefficient(1.0, c).value == pytest.approx(1.0, rel=1e-15)
    assert cnr_from_coefficient(0.0, c) == (0.0, True)
    doubled = cnr_from_coefficient(1.0, c.replace(num_subcarriers=8)).value
    assert doubled == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(ValueError):
        cnr_from_coefficient(-1.0, c)


def test_realization_validates():
    with pytest.raises(ConfigError):
        ChannelRealization(np.ones((2, 1)), np.ones((2, 3)), np.ones((2, 2, 1)))
    with pytest.raises(ConfigError):
        ChannelRealization(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1, 1)))
    with pytest.raises(ConfigError):
        ChannelRealization(np.ones((1, 1)), np.array([[np.inf]]), np.ones((1, 1, 1)))


def test_check_matches():
    ch = draw_channels(SystemConfig())
    with pytest.raises(ConfigError):
        ch.check_matches(SystemConfig(num_relays=4))


def test_file_round_trip(tmp_path):
    c = SystemConfig(num_subcarriers=5, num_users=3, num_relays=2, seed=99, alpha=(1, 2, 3))
    ch = draw_channels(c)
    path = tmp_path / "ch.json"
    save_channels(path, c, ch)
    c2, ch2 = load_channels(path)
    assert c2 == c and ch2 == ch
    doc = json.loads(path.read_text())
    assert doc["spec_version"] == 1 and doc["rng"] == "numpy.PCG64"
    # row-major, n-major flattening
    assert doc["gamma_rk"][1] == ch.gamma_rk[0, 0, 1]
    assert doc["gamma_rk"][3] == ch.gamma_rk[0, 1, 0]
    assert len(doc["gamma_br"]) == 10


def test_malformed_files_rejected():
    c = SystemConfig()
    doc = channel_to_dict(c, draw_channels(c))
    with pytest.raises(ConfigError):
        channel_from_dict({**doc, "spec_version": 2})
    with pytest.raises(ConfigError):
        channel_from_dict({**doc, "gamma_bk": doc["gamma_bk"][:-1]})


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 6),
    k=st.integers(1, 3),
    l=st.integers(0, 4),
    seed=st.integers(0, 2**64 - 1),
    cnr=st.floats(-20, 40),
)
def test_round_trip_property(n, k, l, seed, cnr):
    n = max(n, k)
    c = SystemConfig(num_subcarriers=n, num_users=k, num_relays=l, seed=seed, avg_cnr_db=cnr, alpha=(1.0,) * k)
    ch = draw_channels(c)
    c2, ch2 = channel_from_dict(json.loads(json.dumps(channel_to_dict(c, ch))))
    assert c2 == c and ch2 == ch
