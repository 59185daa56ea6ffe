"""Command trace interpreter with timing-dependent activation semantics.

The trace is the sole driver of primitive behavior.  An ACT-PRE-ACT triple
whose gaps violate nominal timings activates a whole row group: precharging
late but re-activating within the violation window reuses the latched sense
amplifiers and copies the first row everywhere (multi-row copy), while
truncating both gaps leaves all cells sharing charge on the bitlines before
the amplifiers resolve (charge share).  A truncated lone ACT-PRE pair
interrupts restore and leaves the row at half charge.

Activation side effects are applied lazily: a truncated activation never
fires the sense amplifiers, so sensing and restore happen only once the
commands that follow show the activation completed nominally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analog
from .analog import AnalogParams, VariationSample
from .bank import BankState
from .decoder import DecoderLayout, LatchState, activated_rows, latch
from .errors import (
    BankStateError,
    TraceFormatError,
    UndefinedTimingRegimeError,
)


@dataclass(frozen=True)
class TimingParams:
    """Gap thresholds in nanoseconds."""

    t_ras: float = 32.0
    t_rp: float = 13.5
    t_violation: float = 3.0
    t_faw: float = 25.0
    max_acts_in_faw: int = 4

    def __post_init__(self):
        if not 0 < self.t_violation < self.t_rp < self.t_ras:
            raise ValueError(
                "timings must satisfy 0 < t_violation < t_rp < t_ras, got "
                f"{self.t_violation}/{self.t_rp}/{self.t_ras}"
            )
        if self.t_faw <= 0 or self.max_acts_in_faw < 1:
            raise ValueError("t_faw and max_acts_in_faw must be positive")


@dataclass(frozen=True)
class CommandDurations:
    """Completion tails per command kind, used for trace latency accounting."""

    act_tail: float = 45.5
    pre_tail: float = 13.5
    write_tail: float = 15.0
    read_tail: float = 15.0

    @classmethod
    def from_timing(cls, timing: TimingParams) -> "CommandDurations":
        return cls(act_tail=timing.t_ras + timing.t_rp, pre_tail=timing.t_rp)

    def tail(self, kind: str) -> float:
        return {
            "ACT": self.act_tail,
            "PRE": self.pre_tail,
            "WRITE": self.write_tail,
            "READ": self.read_tail,
        }[kind]


class ApaRegime(enum.Enum):
    NORMAL = "normal"
    MULTI_ROW_COPY = "multi_row_copy"
    CHARGE_SHARE = "charge_share"
    UNDEFINED = "undefined"


def classify_apa(gap1: float, gap2: float,
                 timing: TimingParams | None = None) -> ApaRegime:
    """Regime of an ACT-PRE-ACT triple from its two command gaps."""
    timing = timing or TimingParams()
    if gap1 < 0 or gap2 < 0:
        raise ValueError("command gaps must be non-negative")
    if gap1 >= timing.t_ras and gap2 >= timing.t_rp:
        return ApaRegime.NORMAL
    if gap1 >= timing.t_ras and gap2 < timing.t_violation:
        return ApaRegime.MULTI_ROW_COPY
    if gap1 < timing.t_violation and gap2 < timing.t_violation:
        return ApaRegime.CHARGE_SHARE
    return ApaRegime.UNDEFINED


@dataclass(frozen=True)
class Command:
    """One trace entry; data is a bit vector or packed bytes for WRITE."""

    time: float
    kind: str
    row: int | None = None
    data: np.ndarray | bytes | None = None

    def __post_init__(self):
        if self.kind not in ("ACT", "PRE", "WRITE", "READ"):
            raise TraceFormatError(f"unknown command kind {self.kind!r}")
        if self.kind == "ACT" and self.row is None:
            raise TraceFormatError("ACT requires a row")
        if self.kind == "WRITE" and self.data is None:
            raise TraceFormatError("WRITE requires data")


@dataclass(frozen=True)
class Event:
    """Engine event log entry."""

    time: float
    kind: str
    info: dict = field(default_factory=dict)


@dataclass
class _OpenContext:
    """Activation in flight: anchor row and latch state of the sequence."""

    anchor: int
    last_act_time: float
    realized: bool = False
    state: LatchState | None = None


class CommandEngine:
    """Executes command traces against a bank."""

    def __init__(self, layout: DecoderLayout | None = None,
                 timing: TimingParams | None = None,
                 params: AnalogParams | None = None,
                 variation: VariationSample | None = None,
                 offset_draw_start: int = 0):
        self.layout = layout or DecoderLayout()
        self.timing = timing or TimingParams()
        self.params = params or AnalogParams()
        self.variation = variation
        self._offset_draws = offset_draw_start

    def execute(self, bank: BankState, trace: Sequence[Command]) -> list[Event]:
        """Run a trace, mutating the bank; returns the ordered event log."""
        self._validate(trace)
        events: list[Event] = []
        ctx: _OpenContext | None = None
        pending_pre: tuple[float, float] | None = None  # (time, gap1)

        for cmd in trace:
            if cmd.kind == "ACT":
                bank.check_row(cmd.row)
                if pending_pre is not None:
                    pre_time, gap1 = pending_pre
                    gap2 = cmd.time - pre_time
                    pending_pre = None
                    if gap2 >= self.timing.t_rp:
                        self._settle_pre(bank, events, ctx, pre_time, gap1)
                        ctx = _OpenContext(cmd.row, cmd.time)
                    elif gap2 < self.timing.t_violation:
                        regime = classify_apa(gap1, gap2, self.timing)
                        if regime in (ApaRegime.NORMAL, ApaRegime.UNDEFINED):
                            raise UndefinedTimingRegimeError(
                                f"gaps {gap1}/{gap2}ns fall in no defined regime"
                            )
                        ctx = self._apply_apa(bank, events, ctx, cmd, regime)
                    else:
                        raise UndefinedTimingRegimeError(
                            f"ACT {gap2}ns after PRE is neither a completed "
                            "precharge nor a violation"
                        )
                else:
                    if ctx is not None:
                        raise BankStateError(
                            f"ACT at {cmd.time} while an activation is open"
                        )
                    ctx = _OpenContext(cmd.row, cmd.time)
            elif cmd.kind == "PRE":
                if pending_pre is not None:
                    raise TraceFormatError(f"PRE at {cmd.time} follows a PRE")
                if ctx is None:
                    raise BankStateError(f"PRE at {cmd.time} with no open row")
                gap1 = cmd.time - ctx.last_act_time
                if self.timing.t_violation <= gap1 < self.timing.t_ras:
                    raise UndefinedTimingRegimeError(
                        f"PRE {gap1}ns after ACT is neither nominal nor truncated"
                    )
                pending_pre = (cmd.time, gap1)
            elif cmd.kind == "WRITE":
                if pending_pre is not None or ctx is None:
                    raise BankStateError(f"WRITE at {cmd.time} with no open row")
                self._realize(bank, events, ctx)
                bits = self._write_bits(bank, cmd)
                for row in bank.open_rows:
                    bank.set_row_bits(row, bits)
                bank.senseamp_bits = bits.copy()
                events.append(
                    Event(cmd.time, "write", {"rows": sorted(bank.open_rows)})
                )
            elif cmd.kind == "READ":
                if pending_pre is not None or ctx is None:
                    raise BankStateError(f"READ at {cmd.time} with no open row")
                self._realize(bank, events, ctx)
                events.append(
                    Event(cmd.time, "read",
                          {"rows": sorted(bank.open_rows),
                           "bits": bank.senseamp_bits.copy()})
                )

        if pending_pre is not None:
            pre_time, gap1 = pending_pre
            self._settle_pre(bank, events, ctx, pre_time, gap1)
        elif ctx is not None:
            # Trace left the bank open; apply the nominal activation effects.
            self._realize(bank, events, ctx)
        return events

    # -- helpers ---------------------------------------------------------

    def _validate(self, trace: Sequence[Command]) -> None:
        last = None
        for cmd in trace:
            if last is not None and cmd.time <= last:
                raise TraceFormatError(
                    f"timestamps must strictly increase: {cmd.time} after {last}"
                )
            last = cmd.time

    def _realize(self, bank: BankState, events: list[Event],
                 ctx: _OpenContext) -> None:
        """Apply nominal single-row activation effects once per sequence."""
        if ctx.realized:
            return
        row = ctx.anchor
        bits = bank.resolve_row_bits(row)
        bank.set_row_bits(row, bits)
        bank.senseamp_bits = bits
        bank.senseamp_enabled = True
        bank.open_rows = {row}
        ctx.realized = True
        ctx.state = latch(None, row, reset=True, layout=self.layout)
        events.append(Event(ctx.last_act_time, "act", {"row": row}))

    def _settle_pre(self, bank: BankState, events: list[Event],
                    ctx: _OpenContext, pre_time: float, gap1: float) -> None:
        """Close the bank, either nominally or by interrupting restore."""
        if gap1 >= self.timing.t_ras:
            self._realize(bank, events, ctx)
            bank.open_rows = set()
            bank.senseamp_enabled = False
            events.append(Event(pre_time, "pre_close", {}))
        else:
            rows = sorted(bank.open_rows) if ctx.realized else [ctx.anchor]
            for row in rows:
                bank.set_row_neutral(row)
            events.append(Event(pre_time, "frac", {"rows": rows}))
            bank.open_rows = set()
            bank.senseamp_enabled = False

    def _apply_apa(self, bank: BankState, events: list[Event],
                   ctx: _OpenContext, cmd: Command,
                   regime: ApaRegime) -> _OpenContext:
        """Second ACT of a violated triple: copy or charge-share the group."""
        if regime is ApaRegime.MULTI_ROW_COPY:
            # Nominal first activation, so the amplifiers latched the anchor.
            self._realize(bank, events, ctx)
        state = ctx.state
        if state is None:
            state = latch(None, ctx.anchor, reset=True, layout=self.layout)
        state = latch(state, cmd.row, reset=False, layout=self.layout)
        rows = activated_rows(state, self.layout)
        for row in rows:
            bank.check_row(row)

        if regime is ApaRegime.MULTI_ROW_COPY:
            bits = bank.senseamp_bits.copy()
            event_kind = "apa_multi_row_copy"
        else:
            bits = self._charge_share(bank, rows, ctx.anchor)
            event_kind = "apa_charge_share"
        for row in rows:
            bank.set_row_bits(row, bits)
        bank.senseamp_bits = bits
        bank.senseamp_enabled = True
        bank.open_rows = set(rows)
        events.append(
            Event(cmd.time, event_kind,
                  {"r_first": ctx.anchor, "r_second": cmd.row, "rows": rows})
        )
        return _OpenContext(ctx.anchor, cmd.time, realized=True, state=state)

    def _charge_share(self, bank: BankState, rows: Sequence[int],
                      anchor: int) -> np.ndarray:
        nb = bank.geometry.n_bitlines
        levels = bank.cells[list(rows)].astype(np.float64)
        if self.variation is not None:
            caps = self.variation.cap_multipliers_for_rows(rows, nb)
            offsets = self.variation.sense_offsets(nb, draw=self._offset_draws)
            self._offset_draws += 1
        else:
            caps = np.ones((len(rows), nb))
            offsets = 0.0
        weights = np.ones(len(rows))
        weights[list(rows).index(anchor)] = self.params.first_row_weight
        deviations = analog.charge_share_matrix(levels, caps, self.params,
                                                weights=weights)
        bias = bank.polarity_bias(anchor)
        return analog.sense_array(deviations, offsets,
                                  threshold=self.params.sense_threshold,
                                  bias=bias)

    def _write_bits(self, bank: BankState, cmd: Command) -> np.ndarray:
        nb = bank.geometry.n_bitlines
        if isinstance(cmd.data, bytes):
            need = (nb + 7) // 8
            if len(cmd.data) != need:
                raise TraceFormatError(
                    f"WRITE data is {len(cmd.data)} bytes, bank needs {need}"
                )
            return np.unpackbits(np.frombuffer(cmd.data, dtype=np.uint8))[:nb]
        bits = np.asarray(cmd.data, dtype=np.uint8)
        if bits.shape != (nb,):
            raise TraceFormatError(
                f"WRITE data has shape {bits.shape}, bank has {nb} bitlines"
            )
        return bits.copy()


def frac(bank: BankState, row: int, timing: TimingParams | None = None,
         layout: DecoderLayout | None = None,
         start_time: float = 0.0) -> list[Event]:
    """Drive one row to half charge via a truncated activate-precharge pair."""
    timing = timing or TimingParams()
    engine = CommandEngine(layout=layout, timing=timing)
    gap = timing.t_violation / 2.0
    trace = [
        Command(start_time, "ACT", row=row),
        Command(start_time + gap, "PRE"),
    ]
    return engine.execute(bank, trace)


@dataclass(frozen=True)
class PowerViolation:
    """A window holding more activations than the rolling budget allows."""

    start_time: float
    end_time: float
    act_count: int


def check_power(trace: Sequence[Command],
                timing: TimingParams | None = None) -> list[PowerViolation]:
    """Sliding-window activation budget check (four-activate window rule)."""
    timing = timing or TimingParams()
    acts = [cmd.time for cmd in trace if cmd.kind == "ACT"]
    limit = timing.max_acts_in_faw
    violations = []
    for i in range(len(acts) - limit):
        if acts[i + limit] - acts[i] < timing.t_faw:
            violations.append(
                PowerViolation(start_time=acts[i], end_time=acts[i + limit],
                               act_count=limit + 1)
            )
    return violations


def trace_latency(trace: Sequence[Command],
                  durations: CommandDurations | None = None) -> float:
    """Completion time of a trace: last timestamp plus that command's tail."""
    durations = durations or CommandDurations()
    if not trace:
        return 0.0
    last = trace[-1]
    return last.time + durations.tail(last.kind)


def stretch_for_power(trace: Sequence[Command],
                      timing: TimingParams | None = None) -> list[Command]:
    """Minimally delay commands until no activation window is over budget.

    Whenever an ACT would be the (limit+1)-th activation inside a rolling
    t_faw window it slides just past the window, carrying every later
    command with it so relative spacing (and regime classification) holds.
    """
    timing = timing or TimingParams()
    limit = timing.max_acts_in_faw
    out: list[Command] = []
    act_times: list[float] = []
    shift = 0.0
    for cmd in trace:
        time = cmd.time + shift
        if cmd.kind == "ACT" and len(act_times) >= limit:
            window_start = act_times[-limit]
            earliest = window_start + timing.t_faw
            if time < earliest:
                shift += earliest - time
                time = earliest
        out.append(Command(time, cmd.kind, cmd.row, cmd.data))
        if cmd.kind == "ACT":
            act_times.append(time)
    return out
