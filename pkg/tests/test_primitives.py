"""Replicated majority, copy and bulk-write primitive tests."""

import numpy as np
import pytest

from pumsim import (
    AnalogParams,
    BankState,
    DataPattern,
    InvalidArityError,
    bulk_write,
    characterize,
    maj,
    majority_reference,
    multi_row_clone,
    replication_layout,
    row_group,
)
from pumsim.decoder import find_anchor_pair
from pumsim.primitives import filler_ones_count


def make_inputs(bits, n_bitlines):
    arr = np.array(bits, dtype=np.uint8)
    return np.repeat(arr[:, None], n_bitlines, axis=1)


@pytest.mark.parametrize(
    "m,n,copies,neutrals",
    [
        (3, 32, 10, 2),
        (3, 4, 1, 1),
        (5, 8, 1, 3),
        (7, 8, 1, 1),
        (3, 8, 2, 2),
        (5, 32, 6, 2),
        (7, 32, 4, 4),
        (9, 16, 1, 7),
        (9, 32, 3, 5),
    ],
)
def test_replication_layouts(m, n, copies, neutrals):
    layout = replication_layout(m, n)
    assert (layout.copies, layout.neutrals) == (copies, neutrals)
    assert m * layout.copies + layout.neutrals == n


@pytest.mark.parametrize("m,n", [(4, 8), (2, 4), (1, 4), (9, 8), (3, 5), (3, 64)])
def test_replication_rejects_bad_shapes(m, n):
    with pytest.raises(InvalidArityError):
        replication_layout(m, n)


def test_filler_counts_keep_majority_tiebreak():
    # Odd leftovers skew one row against the amplifier bias, so a resulting
    # bitline tie drifts back to the true majority value.
    for k in range(0, 8):
        for bias in (0, 1):
            ones = filler_ones_count(k, bias)
            zeros = k - ones
            skew = ones - zeros
            if k % 2 == 0:
                assert skew == 0
            else:
                assert skew == (1 if bias == 0 else -1)


def test_majority_reference():
    inputs = make_inputs([1, 1, 0], 4)
    assert majority_reference(inputs).tolist() == [1, 1, 1, 1]
    inputs = make_inputs([1, 0, 0, 0, 1], 2)
    assert majority_reference(inputs).tolist() == [0, 0]


def group_of(n, layout):
    return row_group(*find_anchor_pair(n, layout), layout)


@pytest.mark.parametrize("biased", [False, True])
@pytest.mark.parametrize("n", [4, 8])
def test_maj3_truth_table(layout, timing, small_geometry, biased, n):
    group = group_of(n, layout)
    for combo in range(8):
        bits = [(combo >> i) & 1 for i in range(3)]
        bank = BankState(small_geometry, biased_senseamps=biased)
        inputs = make_inputs(bits, 64)
        result = maj(bank, inputs, group, params=AnalogParams(),
                     timing=timing, layout=layout)
        want = int(sum(bits) >= 2)
        assert (result.bits == want).all(), (bits, biased, n)
        assert result.success_rate == 1.0


@pytest.mark.parametrize("m,n", [(5, 8), (7, 8), (5, 32), (9, 16)])
def test_higher_arity_truth_tables(layout, timing, small_geometry, m, n):
    group = group_of(n, layout)
    for combo in range(1 << m):
        bits = [(combo >> i) & 1 for i in range(m)]
        bank = BankState(small_geometry)
        result = maj(bank, make_inputs(bits, 64), group,
                     params=AnalogParams(), timing=timing, layout=layout)
        want = int(sum(bits) > m // 2)
        assert (result.bits == want).all(), (m, n, bits)


def test_maj_replication_equivalence(layout, timing, small_geometry):
    # Same inputs at n=4 and n=8 agree bit for bit, noise free.
    rng = np.random.default_rng(5)
    inputs = rng.integers(0, 2, size=(3, 64), dtype=np.uint8)
    outs = []
    for n in (4, 8):
        bank = BankState(small_geometry)
        result = maj(bank, inputs, group_of(n, layout),
                     params=AnalogParams(), timing=timing, layout=layout)
        outs.append(result.bits)
    assert np.array_equal(outs[0], outs[1])
    assert np.array_equal(outs[0], majority_reference(inputs))


def test_maj_permutation_invariant(layout, timing, small_geometry):
    rng = np.random.default_rng(6)
    inputs = rng.integers(0, 2, size=(5, 64), dtype=np.uint8)
    group = group_of(8, layout)
    base = maj(BankState(small_geometry), inputs, group,
               params=AnalogParams(), timing=timing, layout=layout).bits
    for _ in range(3):
        perm = rng.permutation(5)
        got = maj(BankState(small_geometry), inputs[perm], group,
                  params=AnalogParams(), timing=timing, layout=layout).bits
        assert np.array_equal(got, base)


def test_maj_idempotent_inputs(layout, timing, small_geometry):
    group = group_of(8, layout)
    for x in (0, 1):
        bank = BankState(small_geometry)
        inputs = make_inputs([x, x, x], 64)
        result = maj(bank, inputs, group, params=AnalogParams(),
                     timing=timing, layout=layout)
        assert (result.bits == x).all()


def test_maj_arity_must_fit_group(layout, timing, small_geometry):
    group = group_of(4, layout)
    bank = BankState(small_geometry)
    with pytest.raises(InvalidArityError):
        maj(bank, make_inputs([1, 0, 1, 0, 1], 64), group,
            params=AnalogParams(), timing=timing, layout=layout)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_multi_row_clone(layout, timing, small_geometry, n):
    group = group_of(n, layout)
    bank = BankState(small_geometry)
    pattern = DataPattern.random(n)
    bank.init_rows(range(512), pattern)
    src_bits = pattern.row_bits(group.r_first, 64)
    multi_row_clone(bank, group.r_first, group, timing=timing, layout=layout)
    for row in group.rows:
        assert np.array_equal(bank.read_row(row), src_bits)
    outside = next(r for r in range(512) if r not in group.rows)
    assert np.array_equal(bank.read_row(outside), pattern.row_bits(outside, 64))


def test_multi_row_clone_requires_anchor(layout, timing, small_geometry):
    group = group_of(8, layout)
    bank = BankState(small_geometry)
    bank.init_rows(range(512), DataPattern.all_zeros())
    with pytest.raises(ValueError):
        multi_row_clone(bank, group.rows[1], group, timing=timing, layout=layout)


def test_multi_row_clone_idempotent(layout, timing, small_geometry):
    group = group_of(8, layout)
    bank = BankState(small_geometry)
    bank.init_rows(range(512), DataPattern.random(1))
    multi_row_clone(bank, group.r_first, group, timing=timing, layout=layout)
    first = bank.snapshot()
    multi_row_clone(bank, group.r_first, group, timing=timing, layout=layout)
    assert bank.snapshot() == first


@pytest.mark.parametrize("n", [4, 32])
def test_bulk_write(layout, timing, small_geometry, n):
    group = group_of(n, layout)
    bank = BankState(small_geometry)
    bank.init_rows(range(512), DataPattern.random(2))
    data = DataPattern.random(77).row_bits(0, 64)
    bulk_write(bank, group, data, timing=timing, layout=layout)
    for row in group.rows:
        assert np.array_equal(bank.read_row(row), data)


def test_bulk_write_disjoint_groups_isolated(layout, timing, small_geometry):
    bank = BankState(small_geometry)
    bank.init_rows(range(512), DataPattern.all_zeros())
    g1 = row_group(0, 7, layout)
    g2 = row_group(8, 15, layout)
    assert not set(g1.rows) & set(g2.rows)
    d1 = DataPattern.random(21).row_bits(0, 64)
    d2 = DataPattern.random(22).row_bits(0, 64)
    bulk_write(bank, g1, d1, timing=timing, layout=layout)
    bulk_write(bank, g2, d2, timing=timing, layout=layout)
    for row in g1.rows:
        assert np.array_equal(bank.read_row(row), d1)
    for row in g2.rows:
        assert np.array_equal(bank.read_row(row), d2)


def test_characterize_perfect_without_variation(layout, small_geometry):
    bank = BankState(small_geometry)
    groups = [group_of(8, layout), group_of(16, layout)]
    report = characterize(bank, groups, [3, 5], ["random"], trials=10,
                          params=AnalogParams(), seed=3)
    assert len(report.rows) == 4
    assert all(r.success_rate == 1.0 for r in report.rows)
    assert report.mean_success() == 1.0


def test_characterize_deterministic(layout, small_geometry):
    bank = BankState(small_geometry)
    groups = [group_of(8, layout)]
    params = AnalogParams(variation_sigma=0.4)
    a = characterize(bank, groups, [3], ["random"], 50, params, seed=9)
    b = characterize(bank, groups, [3], ["random"], 50, params, seed=9)
    assert [r.success_rate for r in a.rows] == [r.success_rate for r in b.rows]


def test_characterize_truth_table_trials(layout, small_geometry):
    bank = BankState(small_geometry)
    report = characterize(bank, [group_of(8, layout)], [3], ["ones", "zeros"],
                          trials=999, params=AnalogParams(), seed=1)
    assert all(r.trials == 8 for r in report.rows)


def test_characterize_unstable_accounting(layout, small_geometry):
    bank = BankState(small_geometry)
    params = AnalogParams(variation_sigma=0.4)
    report = characterize(bank, [group_of(4, layout)], [3], ["random"],
                          trials=200, params=params, seed=17)
    row = report.rows[0]
    nb = small_geometry.n_bitlines
    assert row.unstable_bitlines == round(nb * (1 - row.success_rate))
