"""Shared fixtures for the simulator test suite."""

import numpy as np
import pytest

from pumsim import BankState, DataPattern, DecoderLayout, Geometry, TimingParams


@pytest.fixture
def layout():
    return DecoderLayout()


@pytest.fixture
def timing():
    return TimingParams()


@pytest.fixture
def small_geometry():
    """One 512-row subarray with a narrow row for fast tests."""
    return Geometry(n_subarrays=1, subarray_size=512, n_bitlines=64)


@pytest.fixture
def zero_bank(small_geometry):
    bank = BankState(small_geometry)
    bank.init_rows(range(small_geometry.total_rows), DataPattern.all_zeros())
    return bank


def make_inputs(bits, n_bitlines):
    """Constant per-bitline input planes from a bit list."""
    arr = np.array(bits, dtype=np.uint8)
    return np.repeat(arr[:, None], n_bitlines, axis=1)
