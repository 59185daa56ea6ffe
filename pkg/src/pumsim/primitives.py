"""Many-row processing primitives built on the command engine.

Majority over m inputs uses an n-row group: each input is replicated
floor(n/m) times across the group's rows (round-robin, ascending row order)
and leftover rows carry no net charge.  In the strict profile leftovers are
driven to half charge; in the biased-amplifier profile half charge is not
available, so leftovers are filled with balancing all-ones/all-zeros rows
split so that any resulting tie resolves through the amplifier bias to the
correct majority value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine as engine_mod
from .analog import AnalogParams, VariationSample, charge_share_matrix, sense_array
from .bank import BankState
from .decoder import DecoderLayout, RowGroup
from .engine import Command, CommandEngine, Event, TimingParams
from .errors import BankStateError, InvalidArityError

_INPUT_STREAM = 303

VALID_GROUP_SIZES = (4, 8, 16, 32)


@dataclass(frozen=True)
class ReplicationLayout:
    """How m inputs spread over an n-row group."""

    m: int
    n: int

    def __post_init__(self):
        if self.m % 2 == 0 or self.m < 3:
            raise InvalidArityError(f"input count must be odd and >= 3, got {self.m}")
        if self.n not in VALID_GROUP_SIZES:
            raise InvalidArityError(
                f"group size must be one of {VALID_GROUP_SIZES}, got {self.n}"
            )
        if self.m > self.n:
            raise InvalidArityError(
                f"cannot place {self.m} inputs in a {self.n}-row group"
            )

    @property
    def copies(self) -> int:
        return self.n // self.m

    @property
    def neutrals(self) -> int:
        return self.n - self.m * self.copies


def replication_layout(m: int, n: int) -> ReplicationLayout:
    """Validated replication layout for m inputs over an n-row group."""
    return ReplicationLayout(m, n)


def filler_ones_count(neutrals: int, bias: int) -> int:
    """All-ones filler rows for the biased-amplifier profile.

    The fillers balance to zero net charge; an odd leftover row skews the
    count by one toward the side that makes the amplifier bias break the
    resulting tie in favor of the true majority.
    """
    if bias not in (0, 1):
        raise ValueError(f"bias must be a bit, got {bias}")
    return neutrals // 2 if bias == 1 else (neutrals + 1) // 2


def group_row_bits(layout: ReplicationLayout, rows: Sequence[int],
                   inputs: np.ndarray, biased: bool,
                   bias: int) -> list[np.ndarray | None]:
    """Logical bits for each group row; None marks a half-charge row."""
    n_bitlines = inputs.shape[1]
    assignment: list[np.ndarray | None] = []
    for i in range(layout.m * layout.copies):
        assignment.append(inputs[i % layout.m])
    leftovers = layout.neutrals
    if biased:
        ones = filler_ones_count(leftovers, bias)
        for j in range(leftovers):
            value = 1 if j < ones else 0
            assignment.append(np.full(n_bitlines, value, dtype=np.uint8))
    else:
        assignment.extend([None] * leftovers)
    assert len(assignment) == len(rows)
    return assignment


def majority_reference(inputs: np.ndarray) -> np.ndarray:
    """Noise-free boolean majority of the input bit vectors."""
    m = inputs.shape[0]
    return (inputs.sum(axis=0) >= (m + 1) // 2).astype(np.uint8)


@dataclass(frozen=True)
class MajResult:
    bits: np.ndarray
    expected: np.ndarray
    events: list[Event] = field(default_factory=list)

    @property
    def stable_mask(self) -> np.ndarray:
        return self.bits == self.expected

    @property
    def success_rate(self) -> float:
        return float(np.count_nonzero(self.stable_mask)) / len(self.bits)


def maj(bank: BankState, inputs: np.ndarray, group: RowGroup,
        params: AnalogParams | None = None,
        variation: VariationSample | None = None,
        timing: TimingParams | None = None,
        layout: DecoderLayout | None = None,
        offset_draw: int = 0) -> MajResult:
    """One in-memory majority: load the group, fire the violated triple.

    inputs has shape (m, n_bitlines).  The group's rows are overwritten with
    the sensed result (destructive, full restore).
    """
    params = params or AnalogParams()
    timing = timing or TimingParams()
    inputs = np.asarray(inputs, dtype=np.uint8)
    if inputs.ndim != 2 or inputs.shape[1] != bank.geometry.n_bitlines:
        raise ValueError(
            f"inputs must be (m, {bank.geometry.n_bitlines}), got {inputs.shape}"
        )
    rep = replication_layout(inputs.shape[0], group.n)
    if bank.open_rows:
        raise BankStateError("majority needs a closed bank")

    rows = group.rows
    bias = bank.polarity_bias(group.r_first)
    assignment = group_row_bits(rep, rows, inputs, bank.biased_senseamps, bias)
    events: list[Event] = []
    for row, bits in zip(rows, assignment):
        if bits is None:
            events.extend(engine_mod.frac(bank, row, timing, layout))
        else:
            bank.check_row(row)
            bank.set_row_bits(row, bits)

    gap = timing.t_violation / 2.0
    trace = [
        Command(0.0, "ACT", row=group.r_first),
        Command(gap, "PRE"),
        Command(2 * gap, "ACT", row=group.r_second),
        Command(2 * gap + timing.t_ras, "PRE"),
    ]
    eng = CommandEngine(layout=layout, timing=timing, params=params,
                        variation=variation, offset_draw_start=offset_draw)
    events.extend(eng.execute(bank, trace))
    result_bits = (bank.cells[rows[0]] == np.float32(bank.vdd)).astype(np.uint8)
    return MajResult(bits=result_bits, expected=majority_reference(inputs),
                     events=events)


def multi_row_clone(bank: BankState, src: int, group: RowGroup,
                    timing: TimingParams | None = None,
                    layout: DecoderLayout | None = None) -> list[Event]:
    """Copy the source row into every row of its group via one violated triple."""
    timing = timing or TimingParams()
    if src != group.r_first:
        raise ValueError(
            f"source row {src} must anchor the group (anchor is {group.r_first})"
        )
    if bank.open_rows:
        raise BankStateError("multi-row clone needs a closed bank")
    gap = timing.t_violation / 2.0
    trace = [
        Command(0.0, "ACT", row=src),
        Command(timing.t_ras, "PRE"),
        Command(timing.t_ras + gap, "ACT", row=group.r_second),
        Command(timing.t_ras + gap + timing.t_ras, "PRE"),
    ]
    eng = CommandEngine(layout=layout, timing=timing)
    return eng.execute(bank, trace)


def bulk_write(bank: BankState, group: RowGroup, data: np.ndarray,
               timing: TimingParams | None = None,
               layout: DecoderLayout | None = None,
               params: AnalogParams | None = None) -> list[Event]:
    """Write one bit vector into every row of a group with a single sequence.

    A charge-sharing triple opens all group rows, then one WRITE overwrites
    them together.
    """
    timing = timing or TimingParams()
    if bank.open_rows:
        raise BankStateError("bulk write needs a closed bank")
    gap = timing.t_violation / 2.0
    t_apa = 2 * gap
    trace = [
        Command(0.0, "ACT", row=group.r_first),
        Command(gap, "PRE"),
        Command(t_apa, "ACT", row=group.r_second),
        Command(t_apa + timing.t_rp, "WRITE",
                data=np.asarray(data, dtype=np.uint8)),
        Command(t_apa + timing.t_ras + timing.t_rp, "PRE"),
    ]
    eng = CommandEngine(layout=layout, timing=timing, params=params)
    return eng.execute(bank, trace)


# -- fast-path trial simulation and characterization ----------------------


def simulate_majority_bits(group: RowGroup, inputs: np.ndarray,
                           params: AnalogParams,
                           caps: np.ndarray | None,
                           offsets: np.ndarray | float,
                           bias: int, biased_profile: bool) -> np.ndarray:
    """Sensed majority bits without touching a bank.

    Mirrors the engine's charge-share step exactly for a freshly loaded
    group: same replication, same capacitance weighting, same sensing rule.
    """
    inputs = np.asarray(inputs, dtype=np.uint8)
    n_bitlines = inputs.shape[1]
    rep = replication_layout(inputs.shape[0], group.n)
    assignment = group_row_bits(rep, group.rows, inputs, biased_profile, bias)
    levels = np.empty((group.n, n_bitlines), dtype=np.float64)
    neutral = params.vdd / 2.0
    for i, bits in enumerate(assignment):
        levels[i] = neutral if bits is None else bits * params.vdd
    if caps is None:
        caps = np.ones((group.n, n_bitlines))
    weights = np.ones(group.n)
    weights[group.rows.index(group.r_first)] = params.first_row_weight
    deviations = charge_share_matrix(levels, caps, params, weights=weights)
    return sense_array(deviations, offsets, threshold=params.sense_threshold,
                       bias=bias)


@dataclass(frozen=True)
class CharacterizeRow:
    subarray: int
    nrg_id: str
    m: int
    n: int
    pattern: str
    trials: int
    success_rate: float
    unstable_bitlines: int


@dataclass(frozen=True)
class SuccessRateReport:
    rows: list[CharacterizeRow]

    def mean_success(self) -> float:
        if not self.rows:
            return 0.0
        return sum(r.success_rate for r in self.rows) / len(self.rows)


def _truth_table_inputs(m: int, combo: int, n_bitlines: int) -> np.ndarray:
    bits = np.array([(combo >> i) & 1 for i in range(m)], dtype=np.uint8)
    return np.repeat(bits[:, None], n_bitlines, axis=1)


def _random_inputs(m: int, n_bitlines: int, seed: int, group: RowGroup,
                   trial: int) -> np.ndarray:
    rng = np.random.default_rng(
        [seed, _INPUT_STREAM, group.r_first, group.r_second, trial]
    )
    return rng.integers(0, 2, size=(m, n_bitlines), dtype=np.uint8)


def characterize(bank: BankState, nrg_list: Sequence[RowGroup],
                 m_list: Sequence[int], patterns: Sequence[str],
                 trials: int, params: AnalogParams,
                 seed: int) -> SuccessRateReport:
    """Success-rate grid over (group, arity, pattern).

    Constant patterns sweep the full 2^m truth table; the random pattern
    draws fresh input vectors per trial.  A bitline counts as stable only if
    it sensed the correct majority in every trial; rates aggregate stable
    bitlines.  Deterministic for a fixed seed.
    """
    n_bitlines = bank.geometry.n_bitlines
    sample = VariationSample.from_params(params, seed)
    out: list[CharacterizeRow] = []
    for group in nrg_list:
        caps = None
        if params.variation_sigma > 0 and params.static_variation:
            caps = sample.cap_multipliers_for_rows(group.rows, n_bitlines)
        bias = bank.polarity_bias(group.r_first)
        for m in m_list:
            rep = replication_layout(m, group.n)
            for pattern in patterns:
                if pattern in ("ones", "zeros"):
                    combos = [
                        _truth_table_inputs(m, c, n_bitlines)
                        for c in range(1 << m)
                    ]
                    n_trials = len(combos)
                else:
                    combos = None
                    n_trials = trials
                stable = np.ones(n_bitlines, dtype=bool)
                for trial in range(n_trials):
                    if combos is not None:
                        inputs = combos[trial]
                    else:
                        inputs = _random_inputs(m, n_bitlines, seed, group, trial)
                    if not params.static_variation and params.variation_sigma > 0:
                        caps = sample.cap_multipliers_for_rows(
                            group.rows, n_bitlines, trial=trial
                        )
                    offsets = (
                        sample.sense_offsets(n_bitlines, draw=trial)
                        if params.offset_sigma > 0 else 0.0
                    )
                    bits = simulate_majority_bits(
                        group, inputs, params, caps, offsets, bias,
                        bank.biased_senseamps,
                    )
                    stable &= bits == majority_reference(inputs)
                n_stable = int(np.count_nonzero(stable))
                out.append(
                    CharacterizeRow(
                        subarray=group.subarray,
                        nrg_id=f"{group.r_first}:{group.r_second}",
                        m=m,
                        n=group.n,
                        pattern=pattern,
                        trials=n_trials,
                        success_rate=n_stable / n_bitlines,
                        unstable_bitlines=n_bitlines - n_stable,
                    )
                )
    return SuccessRateReport(rows=out)
