"""Experiment driver and report rendering tests."""

import hashlib
import json

import numpy as np
import pytest

from pumsim import ExperimentConfig, count_ops, row_group_census
from pumsim.errors import ConfigError
from pumsim.experiments import (
    _INPUT_DATA_STREAM,
    render_json,
    resolve_scenario,
    run_census,
    run_characterize,
    run_compute,
    run_destruct,
    run_maj,
    run_sensitivity,
    run_spatial,
    run_verification,
    sample_groups,
    spatial_sigma,
)

MASK32 = (1 << 32) - 1


def small_config(**overrides):
    base = dict(n_bitlines=64, trials=8, groups_per_subarray=2, group_size=8)
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_sample_groups_sizes(n):
    config = small_config()
    groups = sample_groups(config, 0, n, count=5)
    assert len(groups) == 5
    assert all(g.n == n for g in groups)


def test_sample_groups_deterministic_and_local():
    config = small_config(n_subarrays=2)
    first = sample_groups(config, 1, 8, count=4)
    second = sample_groups(config, 1, 8, count=4)
    assert [g.rows for g in first] == [g.rows for g in second]
    assert all(512 <= r < 1024 for g in first for r in g.rows)
    other_seed = sample_groups(
        small_config(n_subarrays=2, seed=2), 1, 8, count=4
    )
    assert [g.rows for g in first] != [g.rows for g in other_seed]


def test_sample_groups_unreachable_size():
    with pytest.raises(ConfigError):
        sample_groups(small_config(), 0, 64, count=1)
    with pytest.raises(ConfigError):
        sample_groups(small_config(), 0, 1, count=1)


def test_run_census_matches_decoder():
    config = small_config()
    report = run_census(config)
    census = row_group_census(config.layout())
    assert report.columns == ("n", "pairs", "fraction")
    assert {row[0]: row[1] for row in report.rows} == census
    assert sum(row[1] for row in report.rows) == 512 * 511
    assert sum(row[2] for row in report.rows) == pytest.approx(1.0)
    assert report.meta["config_digest"] == config.digest()


def test_run_verification_all_pass():
    report = run_verification(small_config(groups_per_subarray=3))
    assert report.columns == ("subarray", "nrg_id", "mode", "n", "passed")
    modes = [row[2] for row in report.rows]
    assert modes.count("apa") == 3
    assert modes.count("nominal") == 1
    assert all(row[4] for row in report.rows)


def test_run_maj_perfect_without_noise():
    config = small_config()
    report = run_maj(config, 3, 8, "random", trials=4)
    assert report.columns == ("nrg_id", "m", "n", "pattern", "success_rate")
    assert report.meta["trials"] == "4"
    assert len(report.rows) == config.groups_per_subarray
    assert all(row[4] == 1.0 for row in report.rows)


def test_run_characterize_filters_arities():
    config = small_config()
    report = run_characterize(config, m_list=(3, 5, 7), n_list=(4, 8))
    by_n = {}
    for row in report.rows:
        by_n.setdefault(row[4], set()).add(row[3])
    assert by_n == {4: {3}, 8: {3, 5, 7}}
    assert {row[0] for row in report.rows} == {"strict"}
    biased = run_characterize(
        small_config(biased_senseamps=True), m_list=(3,), n_list=(4,)
    )
    assert {row[0] for row in biased.rows} == {"biased"}


def test_spatial_sigma_profiles():
    flat = small_config(n_subarrays=8, variation_sigma=0.2)
    assert [spatial_sigma(flat, s) for s in range(8)] == [0.2] * 8
    shaped = small_config(
        n_subarrays=8, variation_sigma=0.2, spatial_profile="m_pattern",
        spatial_amplitude=0.5,
    )
    sigmas = [spatial_sigma(shaped, s) for s in range(8)]
    for dip, hump in ((0, 1), (3, 2), (4, 5), (7, 6)):
        assert sigmas[dip] > sigmas[hump]
    assert sigmas[0] == pytest.approx(sigmas[3])
    assert sigmas[1] == pytest.approx(sigmas[6])


def test_run_spatial_recovers_m_shape():
    config = ExperimentConfig(
        n_subarrays=8,
        n_bitlines=256,
        variation_sigma=0.35,
        spatial_profile="m_pattern",
        spatial_amplitude=0.6,
        trials=48,
        groups_per_subarray=2,
        group_size=4,
        seed=5,
    )
    report = run_spatial(config)
    success = {row[0]: row[3] for row in report.rows}
    humps = [success[i] for i in (1, 2, 5, 6)]
    dips = [success[i] for i in (0, 3, 4, 7)]
    assert min(humps) > max(dips)


def test_resolve_scenario():
    assert resolve_scenario("realexp") == "real"
    assert resolve_scenario("equal") == "equal_latency"
    assert resolve_scenario("real_sr") == "real_sr"
    with pytest.raises(ConfigError):
        resolve_scenario("fastest")


def test_sensitivity_grid_orderings():
    report = run_sensitivity(small_config())
    table = {(r[0], r[1], r[2], r[3]): r[4] for r in report.rows}
    combos = {(m, n) for (_, m, n, _) in table}
    for m, n in combos:
        for kernel in ("and", "xor", "mul", "mean"):
            real = table[("realexp", m, n, kernel)]
            assert table[("ideal", m, n, kernel)] >= real
            assert table[("realsr", m, n, kernel)] >= real
            assert table[("realinit", m, n, kernel)] >= real
    # The baseline design is MAJ3 on 4-row groups: no speedup there.
    for kernel in ("and", "or", "xor", "add", "sub", "mul", "div", "mean"):
        assert table[("equal", 3, 4, kernel)] == pytest.approx(1.0)
        assert table[("realexp", 3, 4, kernel)] == pytest.approx(1.0)
    # Wider gates win under equal latency, lose for real MAJ9.
    assert (table[("equal", 5, 32, "mean")]
            < table[("equal", 7, 32, "mean")]
            < table[("equal", 9, 32, "mean")])
    for kernel in ("and", "or", "xor", "add", "sub", "mul", "div"):
        assert table[("realexp", 9, 32, kernel)] < 1.0
        assert table[("realexp", 9, 16, kernel)] < 1.0


def compute_rng(config):
    return np.random.default_rng([config.seed, _INPUT_DATA_STREAM])


def test_run_compute_add_matches_host():
    config = small_config()
    payload = run_compute(config, "add", 5, 32, "realexp", elements=128)
    rng = compute_rng(config)
    a = rng.integers(0, 1 << 32, size=128, dtype=np.uint64)
    b = rng.integers(0, 1 << 32, size=128, dtype=np.uint64)
    want = hashlib.sha256(
        ((a + b) & MASK32).astype(np.uint32).tobytes()
    ).hexdigest()
    assert payload["result_digest"] == want
    assert payload["op_counts"] == {"3": 64, "5": 32}
    assert payload["modeled_time_ns"] > 0
    assert payload["kernel"] == "add"


def test_run_compute_xor_matches_host():
    config = small_config()
    payload = run_compute(config, "xor", 3, 32, "ideal", elements=200)
    rng = compute_rng(config)
    planes = rng.integers(0, 2, size=(32, 200), dtype=np.uint8)
    folded = planes[0]
    for i in range(1, 32):
        folded = folded ^ planes[i]
    want = hashlib.sha256(np.packbits(folded).tobytes()).hexdigest()
    assert payload["result_digest"] == want


def test_run_compute_deterministic():
    config = small_config()
    a = run_compute(config, "mul", 3, 32, "equal", elements=32)
    b = run_compute(config, "mul", 3, 32, "equal", elements=32)
    assert a == b


def test_run_compute_validation():
    config = small_config()
    with pytest.raises(ConfigError):
        run_compute(config, "add", 5, 4, "realexp", elements=8)
    with pytest.raises(ConfigError):
        run_compute(config, "nand", 3, 32, "realexp", elements=8)
    with pytest.raises(ConfigError):
        run_compute(config, "add", 3, 32, "warp", elements=8)


def test_run_destruct_payload():
    config = small_config()
    payload = run_destruct(config, 32)
    assert payload["steps"] == 16
    assert payload["modeled_time_ns"] > 0
    assert set(payload["speedup"]) == {"rowclone", "frac"}
    assert all(v > 1.0 for v in payload["speedup"].values())
    assert payload["baselines"]["rowclone"]["steps"] == 512
    assert payload["baselines"]["frac"]["steps"] == 512
    with pytest.raises(ConfigError):
        run_destruct(config, 32, baselines=("zeroize",))


def test_render_json_canonical():
    payload = {"b": 1, "a": {"z": 2, "y": 3}}
    text = render_json(payload)
    assert text.endswith("\n")
    assert json.loads(text) == payload
    assert text == json.dumps(payload, indent=2, sort_keys=True) + "\n"


def test_count_ops_exposed_in_compute():
    config = small_config()
    payload = run_compute(config, "div", 7, 32, "realexp", elements=16)
    counts = count_ops("div", 7)
    assert payload["op_counts"] == {str(k): v for k, v in counts.ops.items()}
