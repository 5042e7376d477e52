import math

import numpy as np
import pytest
from scipy import stats

from meanfield.rng import (RngStream, cos_turn, gaussian_block, gaussian_draw,
                           log_unit, normals_at_step, derive_keys,
                           _cos_turn_np, _log_unit_np)


def test_draws_are_pure_functions():
    s = RngStream(seed=123, stream_id=4, substream_id=9)
    assert gaussian_draw(s, 17) == gaussian_draw(s, 17)
    s2 = RngStream(seed=123, stream_id=4, substream_id=9)
    assert gaussian_draw(s, 17) == gaussian_draw(s2, 17)


def test_distinct_streams_decorrelate():
    a = gaussian_block(RngStream(1, 0, 0), 0, 4096)
    b = gaussian_block(RngStream(1, 0, 1), 0, 4096)
    c = gaussian_block(RngStream(1, 1, 0), 0, 4096)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.08
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.08


def test_block_matches_scalar_draws():
    s = RngStream(seed=42, stream_id=3, substream_id=7)
    block = gaussian_block(s, 5, 64)
    for i, v in enumerate(block):
        assert gaussian_draw(s, 5 + i) == v


def test_normals_at_step_matches_scalar():
    keys = derive_keys(9, 2, np.arange(16, dtype=np.uint64))
    vec = normals_at_step(keys, 33)
    for i in range(16):
        s = RngStream(seed=9, stream_id=2, substream_id=i)
        assert gaussian_draw(s, 33) == vec[i]


def test_moments_of_one_million_draws():
    z = gaussian_block(RngStream(5), 0, 1_000_000)
    assert abs(np.mean(z)) < 0.01
    assert abs(np.var(z) - 1.0) < 0.01


def test_kolmogorov_smirnov_against_normal():
    z = gaussian_block(RngStream(123), 0, 100_000)
    stat = stats.kstest(z, "norm").statistic
    # 1% critical value for n = 1e5
    assert stat < 1.6276 / math.sqrt(100_000)


def test_shared_log_cos_accuracy(rng_np):
    u = rng_np.random(50_000) * (1 - 2.0 ** -53) + 2.0 ** -53
    rel = np.abs(_log_unit_np(u) - np.log(u)) / np.maximum(np.abs(np.log(u)), 1e-300)
    assert np.max(rel) < 1e-15
    w = rng_np.random(50_000) * 6.283185307179586
    assert np.max(np.abs(_cos_turn_np(w) - np.cos(w))) < 1e-15
    for x in (u[0], 0.5, 1.0, 2.0 ** -53):
        assert log_unit(float(x)) == _log_unit_np(np.array([x]))[0]
    for x in (0.0, 1.0, 3.2, 6.28):
        assert cos_turn(float(x)) == _cos_turn_np(np.array([x]))[0]


def test_stream_requires_integers():
    with pytest.raises(TypeError):
        RngStream(seed=1.5)
