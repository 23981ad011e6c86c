import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from robust_merton.rng import philox_block, standard_normals

# Random123 known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr, key, expected", KAT)
def test_known_answers(ctr, key, expected):
    out = philox_block(np.array([ctr], dtype=np.uint32), np.array(key, dtype=np.uint32))
    assert tuple(int(x) for x in out[0]) == expected


def test_deterministic():
    a = standard_normals(42, (0, 50), (0, 30), 3)
    b = standard_normals(42, (0, 50), (0, 30), 3)
    np.testing.assert_array_equal(a, b)
    c = standard_normals(43, (0, 50), (0, 30), 3)
    assert not np.array_equal(a, c)


@settings(max_examples=40, deadline=None)
@given(
    dim=st.integers(1, 4),
    p0=st.integers(0, 30), np_=st.integers(1, 10),
    s0=st.integers(0, 30), ns=st.integers(1, 10),
)
def test_blocks_are_slices_of_the_full_array(dim, p0, np_, s0, ns):
    full = standard_normals(7, (0, 40), (0, 40), dim)
    block = standard_normals(7, (p0, p0 + np_), (s0, s0 + ns), dim)
    np.testing.assert_array_equal(block, full[p0:p0 + np_, s0:s0 + ns])


def test_large_path_index_and_seed():
    seed = 2**64 - 1
    a = standard_normals(seed, (2**33, 2**33 + 2), (0, 4), 2)
    assert np.all(np.isfinite(a))
    with pytest.raises(ValueError):
        standard_normals(2**64, (0, 1), (0, 1), 1)


def test_distribution():
    z = standard_normals(3, (0, 2000), (0, 100), 1).ravel()
    assert abs(z.mean()) < 5 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
    assert stats.kstest(z, "norm").pvalue > 1e-4


def test_components_uncorrelated():
    z = standard_normals(5, (0, 20000), (0, 5), 3).reshape(-1, 3)
    c = np.corrcoef(z.T)
    assert np.max(np.abs(c - np.eye(3))) < 5 / np.sqrt(z.shape[0])
