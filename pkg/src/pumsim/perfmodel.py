"""Analytical cost model for majority-based kernels.

Operation counts come from fixed majority-network constructions over 32-bit
words (or 32-operand reductions): AND/OR collapse into wide gates as arity
grows, XOR and the adders switch from pure MAJ3 networks to the MAJ5 sum
gate, multiply and divide compose those blocks.  Time charges every gate an
initialization cost (loading its row group) plus the activation latency, all
divided by the success rate of its arity: an unstable gate retries, so
expected time scales with 1/success.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ZeroSuccessRateError

KERNELS = ("and", "or", "xor", "add", "sub", "mul", "div")

ARITIES = (3, 5, 7, 9)

#: Reduction width for the logic kernels and word width for arithmetic.
REDUCE_OPERANDS = 32
WORD = 32

#: Success rates used as scenario inputs, keyed by (arity, group size).
#: The (3,4) entry models the half-charge baseline design; the anchored
#: values at the largest groups are measured module averages (the MAJ9
#: figure is the best observed module, applied to both group sizes), and
#: intermediate group sizes are interpolated placeholders kept monotone in
#: group size.  All of them are inputs to the model, not outputs of it.
DEFAULT_SUCCESS_RATES: dict[tuple[int, int], float] = {
    (3, 4): 0.7885,
    (3, 8): 0.90,
    (3, 16): 0.95,
    (3, 32): 0.9791,
    (5, 8): 0.55,
    (5, 16): 0.65,
    (5, 32): 0.7393,
    (7, 8): 0.03,
    (7, 16): 0.12,
    (7, 32): 0.2928,
    (9, 16): 0.3535,
    (9, 32): 0.3535,
}

#: Group size each arity runs on by default.
DEFAULT_GROUP_CHOICE = {3: 32, 5: 32, 7: 32, 9: 16}

SCENARIO_NAMES = ("real", "real_init", "real_sr", "ideal", "equal_latency")


@dataclass(frozen=True)
class MajOpCount:
    """Majority gates per arity needed by one kernel invocation."""

    kernel: str
    max_arity: int
    ops: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.ops.values())


def count_ops(kernel: str, max_arity: int) -> MajOpCount:
    """Gate counts for a kernel under an arity budget.

    Logic kernels reduce 32 operand planes; arithmetic kernels process one
    32-bit element pair.  The constructions: AND/OR use one MAJ(2k-1) gate
    per k-operand tree node; XOR uses either two-input MAJ3 networks (3
    gates) or three-input parity stages built from a full adder (2 MAJ3 + 1
    MAJ5); adders spend 4 MAJ3 per bit or 2 MAJ3 + 1 MAJ5 per bit; multiply
    is 32 gated-shift additions; divide is 32 subtract-and-restore steps
    over a 33-bit remainder.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if max_arity not in ARITIES:
        raise ValueError(f"arity must be one of {ARITIES}, got {max_arity}")
    wide = max_arity >= 5
    if kernel in ("and", "or"):
        fan_in = (max_arity + 1) // 2
        gates = math.ceil((REDUCE_OPERANDS - 1) / (fan_in - 1))
        ops = {max_arity: gates}
    elif kernel == "xor":
        if wide:
            stages = math.ceil((REDUCE_OPERANDS - 1) / 2)
            ops = {3: 2 * stages, 5: stages}
        else:
            ops = {3: 3 * (REDUCE_OPERANDS - 1)}
    elif kernel in ("add", "sub"):
        ops = {3: 2 * WORD, 5: WORD} if wide else {3: 4 * WORD}
    elif kernel == "mul":
        # Per iteration: WORD gated partial-product bits plus their duals,
        # then one ripple add.
        gating = 2 * WORD
        if wide:
            ops = {3: WORD * (gating + 2 * WORD), 5: WORD * WORD}
        else:
            ops = {3: WORD * (gating + 4 * WORD)}
    else:  # div
        bits = WORD + 1
        mux = 3 * bits + 1
        if wide:
            ops = {3: WORD * (2 * bits + mux), 5: WORD * bits}
        else:
            ops = {3: WORD * (4 * bits + mux)}
    return MajOpCount(kernel=kernel, max_arity=max_arity, ops=ops)


@dataclass(frozen=True)
class PerfScenario:
    """Latency and success assumptions for model_time."""

    name: str
    include_init: bool
    use_success_rates: bool
    unit_cost: bool = False
    maj_ns: float = 80.0
    init_write_ns: float = 60.0
    init_apa_ns: float = 80.0
    init_frac_ns: float = 16.5
    group_choice: dict[int, int] = field(default_factory=lambda: dict(DEFAULT_GROUP_CHOICE))
    success_rates: dict[tuple[int, int], float] = field(
        default_factory=lambda: dict(DEFAULT_SUCCESS_RATES)
    )

    def group_for(self, arity: int) -> int:
        return self.group_choice.get(arity, 32)

    def success_for(self, arity: int) -> float:
        if not self.use_success_rates:
            return 1.0
        key = (arity, self.group_for(arity))
        if key not in self.success_rates:
            raise ValueError(f"no success rate configured for {key}")
        return self.success_rates[key]

    def init_ns(self, arity: int) -> float:
        """Row-group load cost: one write per input, one copy sweep per
        replicated input, one half-charge op per leftover row."""
        if not self.include_init:
            return 0.0
        n = self.group_for(arity)
        copies = n // arity
        neutrals = n - arity * copies
        cost = arity * self.init_write_ns
        if copies > 1:
            cost += arity * self.init_apa_ns
        cost += neutrals * self.init_frac_ns
        return cost

    def op_cost_ns(self, arity: int) -> float:
        if self.unit_cost:
            return 1.0
        success = self.success_for(arity)
        base = self.init_ns(arity) + self.maj_ns
        if success <= 0.0:
            raise ZeroSuccessRateError(
                f"arity {arity} has zero success rate; expected time diverges"
            )
        return base / success


def make_scenario(name: str, **overrides) -> PerfScenario:
    """Build one of the five named scenarios, with optional field overrides."""
    presets = {
        "real": dict(include_init=True, use_success_rates=True),
        "real_init": dict(include_init=True, use_success_rates=False),
        "real_sr": dict(include_init=False, use_success_rates=True),
        "ideal": dict(include_init=False, use_success_rates=False),
        "equal_latency": dict(include_init=False, use_success_rates=False,
                              unit_cost=True),
    }
    if name not in presets:
        raise ValueError(f"unknown scenario {name!r}; pick from {SCENARIO_NAMES}")
    kwargs = presets[name]
    kwargs.update(overrides)
    return PerfScenario(name=name, **kwargs)


def model_time(counts: MajOpCount, scenario: PerfScenario) -> float:
    """Expected kernel time in nanoseconds (unit gate counts for the
    equal-latency scenario)."""
    return sum(
        count * scenario.op_cost_ns(arity)
        for arity, count in counts.ops.items()
    )


def baseline_scenario(scenario: PerfScenario) -> PerfScenario:
    """Reference design the speedups compare against.

    The half-charge MAJ3 baseline runs on 4-row groups and is always charged
    its real latency and real success rate, except under the equal-latency
    model where every gate costs one unit by definition.
    """
    if scenario.unit_cost:
        return make_scenario("equal_latency", group_choice={3: 4})
    return make_scenario(
        "real",
        group_choice={3: 4},
        maj_ns=scenario.maj_ns,
        init_write_ns=scenario.init_write_ns,
        init_apa_ns=scenario.init_apa_ns,
        init_frac_ns=scenario.init_frac_ns,
        success_rates=scenario.success_rates,
    )


def speedup(kernel: str, max_arity: int, scenario: PerfScenario) -> float:
    """Kernel speedup over the 4-row MAJ3 baseline under a scenario."""
    base = model_time(count_ops(kernel, 3), baseline_scenario(scenario))
    ours = model_time(count_ops(kernel, max_arity), scenario)
    return base / ours


def mean_speedup(kernels: tuple[str, ...], max_arity: int,
                 scenario: PerfScenario) -> float:
    values = [speedup(k, max_arity, scenario) for k in kernels]
    return sum(values) / len(values)
