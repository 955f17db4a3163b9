import numpy as np
from hypothesis import given, strategies as st

from hlwnet.seeding import as_rng, mix_seed, splitmix64


def test_splitmix_reference_values():
    # first outputs of the reference SplitMix64 generator seeded with 0
    state, out = 0, []
    for _ in range(3):
        out.append(splitmix64(state))
        state = (state + 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_mix_seed_definition(m, i):
    assert mix_seed(m, i) == splitmix64(m ^ splitmix64(i))
    assert 0 <= mix_seed(m, i, i + 1) < 2**64


def test_mix_seed_distinct_children():
    seeds = {mix_seed(42, k) for k in range(10_000)}
    assert len(seeds) == 10_000
    assert mix_seed(1, 2, 3) != mix_seed(1, 3, 2)


def test_as_rng():
    g = np.random.default_rng(1)
    assert as_rng(g) is g
    assert as_rng(5).integers(1 << 30) == np.random.default_rng(5).integers(1 << 30)
