import numpy as np
import numba as nb

from echoimaging.rng import CounterRNG, mix64, nb_stream_key, nb_uniform_at, stream_key, uniform_at


@nb.njit
def _nb_draws(seed, stream, n):
    key = nb_stream_key(seed, stream)
    out = np.empty(n)
    for i in range(n):
        out[i] = nb_uniform_at(key, i)
    return out


def test_python_and_numba_streams_agree():
    for seed, stream in [(0, 0), (1, 7), (2**63 + 5, 12345), (2**64 - 1, 2**40)]:
        rng = CounterRNG(seed, stream)
        py = np.array([rng.uniform() for _ in range(200)])
        assert np.array_equal(py, _nb_draws(np.uint64(seed), np.uint64(stream), 200))


def test_draws_in_unit_interval_and_uniform():
    key = stream_key(3, 0)
    u = np.array([uniform_at(key, i) for i in range(20000)])
    assert u.min() >= 0.0 and u.max() < 1.0
    # mean within 4 sigma of 1/2, variance near 1/12
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 0.003


def test_counter_rng_is_positional():
    a = CounterRNG(9, 4)
    seq = [a.uniform() for _ in range(10)]
    b = CounterRNG(9, 4, counter=5)
    assert b.uniform() == seq[5]
    assert a.at(3) == seq[3]
    assert a.counter == 10


def test_streams_differ():
    assert CounterRNG(1, 0).uniform() != CounterRNG(1, 1).uniform()
    assert CounterRNG(1, 0).uniform() != CounterRNG(2, 0).uniform()
    assert CounterRNG(5).spawn(3).uniform() == CounterRNG(5, 3).uniform()


def test_mix64_matches_reference_value():
    # first output of the reference SplitMix64 generator seeded with 0
    assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
