"""Seeded experiment drivers and report rendering.

Every report is a plain CSV or JSON document that embeds the config digest
and seed it was produced from; rerunning with the same config yields the
same bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import perfmodel
from .bank import BankState, DataPattern, Geometry
from .bitserial import BitColumnMatrix, BitSerialEngine, FastMajBackend
from .config import ExperimentConfig
from .decoder import RowGroup, compose_address, decode_address, row_group
from .engine import Command, CommandEngine
from .errors import ConfigError
from .primitives import characterize

REPORT_VERSION = 1

#: CLI scenario names mapped onto the cost-model presets.
SCENARIO_ALIASES = {
    "realexp": "real",
    "realinit": "real_init",
    "realsr": "real_sr",
    "ideal": "ideal",
    "equal": "equal_latency",
}

_GROUP_PICK_STREAM = 404
_INPUT_DATA_STREAM = 505
_OVERWRITE_STREAM = 909


@dataclass
class Report:
    """Tabular result with reproducibility metadata."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def render_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# report={self.name} version={REPORT_VERSION}\n")
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(cell) for cell in row])
        return buf.getvalue()


def _format_cell(cell) -> str:
    if isinstance(cell, bool):
        return "1" if cell else "0"
    if isinstance(cell, float):
        return format(cell, ".6g")
    return str(cell)


def _base_meta(config: ExperimentConfig) -> dict[str, str]:
    return {"config_digest": config.digest(), "seed": str(config.seed)}


def sample_groups(config: ExperimentConfig, subarray: int, n: int,
                  count: int) -> list[RowGroup]:
    """Deterministic random anchor pairs spanning log2(n) predecoder groups."""
    layout = config.layout()
    k = int(math.log2(n))
    if k < 1 or k > layout.group_count:
        raise ConfigError(f"group size {n} not reachable with this layout")
    rng = np.random.default_rng([config.seed, _GROUP_PICK_STREAM, subarray])
    groups = []
    for _ in range(count):
        selects = tuple(
            int(rng.integers(0, 1 << w)) for w in layout.group_widths
        )
        flip = rng.choice(layout.group_count, size=k, replace=False)
        other = list(selects)
        for g in flip:
            width = layout.group_widths[g]
            offset = int(rng.integers(1, 1 << width))
            other[g] = (selects[g] + offset) % (1 << width)
        r1 = compose_address(subarray, selects, layout)
        r2 = compose_address(subarray, tuple(other), layout)
        groups.append(row_group(r1, r2, layout))
    return groups


def run_census(config: ExperimentConfig) -> Report:
    """Distribution of group sizes over every ordered anchor pair."""
    from .decoder import census_fractions, row_group_census

    layout = config.layout()
    census = row_group_census(layout)
    fractions = census_fractions(census)
    report = Report(
        name="census",
        columns=("n", "pairs", "fraction"),
        meta=_base_meta(config),
    )
    for n in sorted(census):
        report.rows.append((n, census[n], fractions[n]))
    return report


def run_verification(config: ExperimentConfig) -> Report:
    """Init rows, run a copy-regime APA plus a bulk WRITE, read back.

    Each sampled group passes when all its rows return the overwritten
    pattern and all other rows in the subarray keep their original data.  A
    nominal-timing control per subarray checks that only the addressed row
    changes.
    """
    layout = config.layout()
    geometry = config.geometry()
    timing = config.timing()
    params = config.analog_params(variation_sigma=0.0)
    nb = geometry.n_bitlines
    original = DataPattern.random(config.seed)
    overwrite = np.random.default_rng(
        [config.seed, _OVERWRITE_STREAM]
    ).integers(0, 2, size=nb, dtype=np.uint8)

    report = Report(
        name="verify",
        columns=("subarray", "nrg_id", "mode", "n", "passed"),
        meta=_base_meta(config),
    )
    n_sub = min(config.subarrays_sampled, geometry.n_subarrays)
    for subarray in range(n_sub):
        base = subarray * geometry.subarray_size
        sub_rows = range(base, base + geometry.subarray_size)
        groups = sample_groups(config, subarray, config.group_size,
                               config.groups_per_subarray)
        for group in groups:
            bank = BankState(geometry, vdd=config.vdd,
                             biased_senseamps=config.biased_senseamps)
            bank.init_rows(sub_rows, original)
            engine = CommandEngine(layout, timing, params)
            t2 = timing.t_ras + timing.t_violation / 2.0
            trace = [
                Command(0.0, "ACT", row=group.r_first),
                Command(timing.t_ras, "PRE"),
                Command(t2, "ACT", row=group.r_second),
                Command(t2 + timing.t_rp, "WRITE", data=overwrite),
                Command(t2 + timing.t_rp + timing.t_ras, "PRE"),
            ]
            engine.execute(bank, trace)
            passed = all(
                np.array_equal(bank.read_row(r), overwrite) for r in group.rows
            ) and all(
                np.array_equal(bank.read_row(r), original.row_bits(r, nb))
                for r in sub_rows
                if r not in group.rows
            )
            report.rows.append(
                (subarray, group_id(group), "apa", group.n, passed)
            )
        # Nominal control: same command shapes at legal timings.
        bank = BankState(geometry, vdd=config.vdd,
                         biased_senseamps=config.biased_senseamps)
        bank.init_rows(sub_rows, original)
        engine = CommandEngine(layout, timing, params)
        target = base
        trace = [
            Command(0.0, "ACT", row=target),
            Command(timing.t_rp, "WRITE", data=overwrite),
            Command(timing.t_ras + timing.t_rp, "PRE"),
        ]
        engine.execute(bank, trace)
        passed = np.array_equal(bank.read_row(target), overwrite) and all(
            np.array_equal(bank.read_row(r), original.row_bits(r, nb))
            for r in sub_rows
            if r != target
        )
        report.rows.append((subarray, f"{target}:{target}", "nominal", 1, passed))
    return report


def group_id(group: RowGroup) -> str:
    return f"{group.r_first}:{group.r_second}"


def run_maj(config: ExperimentConfig, m: int, n: int, pattern: str,
            trials: int | None = None) -> Report:
    """Success rate of one replicated majority configuration."""
    geometry = config.geometry()
    bank = BankState(geometry, vdd=config.vdd,
                     biased_senseamps=config.biased_senseamps)
    groups = sample_groups(config, 0, n, config.groups_per_subarray)
    params = config.analog_params()
    result = characterize(bank, groups, [m], [pattern],
                          trials or config.trials, params, config.seed)
    report = Report(
        name="maj",
        columns=("nrg_id", "m", "n", "pattern", "success_rate"),
        meta=_base_meta(config),
    )
    report.meta["trials"] = str(trials or config.trials)
    for row in result.rows:
        report.rows.append(
            (row.nrg_id, row.m, row.n, row.pattern, row.success_rate)
        )
    return report


def run_characterize(config: ExperimentConfig,
                     m_list: tuple[int, ...] | None = None,
                     n_list: tuple[int, ...] | None = None,
                     patterns: tuple[str, ...] = ("random",)) -> Report:
    """Success-rate grid over sampled groups, arities and patterns."""
    geometry = config.geometry()
    profile = "biased" if config.biased_senseamps else "strict"
    params = config.analog_params()
    n_list = n_list or (config.group_size,)
    report = Report(
        name="characterize",
        columns=("module_profile", "subarray", "nrg_id", "m", "n", "pattern",
                 "trials", "success_rate", "unstable_bitlines"),
        meta=_base_meta(config),
    )
    bank = BankState(geometry, vdd=config.vdd,
                     biased_senseamps=config.biased_senseamps)
    n_sub = min(config.subarrays_sampled, geometry.n_subarrays)
    for subarray in range(n_sub):
        for n in n_list:
            arities = m_list or tuple(m for m in (3, 5, 7, 9) if m <= n)
            arities = tuple(m for m in arities if m <= n)
            if not arities:
                continue
            groups = sample_groups(config, subarray, n,
                                   config.groups_per_subarray)
            result = characterize(bank, groups, arities, patterns,
                                  config.trials, params, config.seed)
            for row in result.rows:
                report.rows.append(
                    (profile, subarray, row.nrg_id, row.m, row.n, row.pattern,
                     row.trials, row.success_rate, row.unstable_bitlines)
                )
    return report


def spatial_sigma(config: ExperimentConfig, subarray: int) -> float:
    """Per-subarray variation sigma under the configured spatial profile."""
    if config.spatial_profile == "flat":
        return config.variation_sigma
    x = (subarray + 0.5) / config.n_subarrays
    hump = math.cos(2.0 * math.pi * x) ** 2
    return config.variation_sigma * (1.0 + config.spatial_amplitude * hump)


def run_spatial(config: ExperimentConfig) -> Report:
    """Mean success rate per subarray under the spatial sigma profile."""
    geometry = config.geometry()
    bank = BankState(geometry, vdd=config.vdd,
                     biased_senseamps=config.biased_senseamps)
    report = Report(
        name="spatial",
        columns=("subarray", "sigma", "groups", "mean_success"),
        meta=_base_meta(config),
    )
    for subarray in range(geometry.n_subarrays):
        sigma = spatial_sigma(config, subarray)
        params = config.analog_params(variation_sigma=sigma)
        groups = sample_groups(config, subarray, config.group_size,
                               config.groups_per_subarray)
        result = characterize(bank, groups, [3], ["random"], config.trials,
                              params, config.seed)
        report.rows.append(
            (subarray, sigma, len(groups), result.mean_success())
        )
    return report


def resolve_scenario(name: str) -> str:
    if name in SCENARIO_ALIASES:
        return SCENARIO_ALIASES[name]
    if name in perfmodel.SCENARIO_NAMES:
        return name
    raise ConfigError(
        f"unknown scenario {name!r}; pick from {sorted(SCENARIO_ALIASES)}"
    )


def run_sensitivity(config: ExperimentConfig) -> Report:
    """Speedup grid: scenario x arity x group size x kernel."""
    report = Report(
        name="sensitivity",
        columns=("scenario", "m", "n", "kernel", "speedup"),
        meta=_base_meta(config),
    )
    for cli_name, preset in SCENARIO_ALIASES.items():
        for m in perfmodel.ARITIES:
            for n in (4, 8, 16, 32):
                if m > n or (m, n) not in perfmodel.DEFAULT_SUCCESS_RATES:
                    continue
                scenario = perfmodel.make_scenario(preset, group_choice={m: n})
                for kernel in perfmodel.KERNELS:
                    report.rows.append(
                        (cli_name, m, n, kernel,
                         perfmodel.speedup(kernel, m, scenario))
                    )
                report.rows.append(
                    (cli_name, m, n, "mean",
                     perfmodel.mean_speedup(perfmodel.KERNELS, m, scenario))
                )
    return report


def run_compute(config: ExperimentConfig, kernel: str, arity: int, n: int,
                scenario_name: str, elements: int) -> dict:
    """Execute one kernel on random data and attach the cost model."""
    if kernel not in perfmodel.KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    if arity not in perfmodel.ARITIES:
        raise ConfigError(f"arity must be one of {perfmodel.ARITIES}")
    if arity > n:
        raise ConfigError(f"arity {arity} exceeds group size {n}")
    preset = resolve_scenario(scenario_name)
    rng = np.random.default_rng([config.seed, _INPUT_DATA_STREAM])
    engine = BitSerialEngine(FastMajBackend(), max_arity=arity)
    if kernel in ("and", "or", "xor"):
        planes = rng.integers(
            0, 2, size=(perfmodel.REDUCE_OPERANDS, elements), dtype=np.uint8
        )
        matrix = BitColumnMatrix.from_planes(planes)
        result_bits = engine.reduce(kernel, matrix)
        digest_bytes = np.packbits(result_bits).tobytes()
    else:
        a = rng.integers(0, 1 << 32, size=elements, dtype=np.uint64)
        b = rng.integers(0, 1 << 32, size=elements, dtype=np.uint64)
        if kernel == "div":
            b = np.maximum(b, 1)
        ma = BitColumnMatrix.from_ints(a.astype(np.uint32))
        mb = BitColumnMatrix.from_ints(b.astype(np.uint32))
        op = getattr(engine, kernel)
        out = op(ma, mb)
        if kernel == "div":
            out = out[0]
        digest_bytes = out.to_ints().astype(np.uint32).tobytes()
    counts = perfmodel.count_ops(kernel, arity)
    group_choice = {m: n for m in perfmodel.ARITIES if m <= n}
    scenario = perfmodel.make_scenario(preset, group_choice=group_choice)
    return {
        "report": "compute",
        "version": REPORT_VERSION,
        "config_digest": config.digest(),
        "seed": config.seed,
        "kernel": kernel,
        "arity": arity,
        "n": n,
        "scenario": scenario_name,
        "elements": elements,
        "result_digest": hashlib.sha256(digest_bytes).hexdigest(),
        "op_counts": {str(k): v for k, v in sorted(counts.ops.items())},
        "modeled_time_ns": perfmodel.model_time(counts, scenario),
        "speedup_vs_fracdram": perfmodel.speedup(kernel, arity, scenario),
    }


def run_destruct(config: ExperimentConfig, max_n: int,
                 baselines: tuple[str, ...] = ("rowclone", "frac")) -> dict:
    """Plan bank destruction and compare against the baselines."""
    from . import destruct

    layout = config.layout()
    geometry = config.geometry()
    timing = config.timing()
    durations = config.durations()
    plan = destruct.plan_multirow(layout, geometry, max_n=max_n)
    plans = [plan]
    for name in baselines:
        if name == "rowclone":
            plans.append(destruct.plan_rowclone(layout, geometry))
        elif name == "frac":
            plans.append(destruct.plan_frac(layout, geometry))
        else:
            raise ConfigError(f"unknown baseline {name!r}")
    rows = destruct.compare(plans, timing, durations)
    main_row = rows[0]
    return {
        "report": "destruct",
        "version": REPORT_VERSION,
        "config_digest": config.digest(),
        "seed": config.seed,
        "max_n": max_n,
        "steps": main_row.step_count,
        "modeled_time_ns": main_row.modeled_time_ns,
        "speedup": main_row.speedup_vs,
        "baselines": {
            row.strategy: {
                "steps": row.step_count,
                "modeled_time_ns": row.modeled_time_ns,
            }
            for row in rows[1:]
        },
    }


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
