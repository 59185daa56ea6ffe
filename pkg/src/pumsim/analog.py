"""Charge-sharing deviation model, sensing rule and Monte Carlo stability.

Activating several cells onto a precharged bitline moves the bitline by the
capacitance-weighted mean of the cell deviations from vdd/2, diluted by the
bitline's own capacitance.  Process variation perturbs per-cell capacitance
(multiplier, truncated normal) and adds a per-trial sense offset voltage that
models transistor mismatch in the sense amplifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Sense offset noise scales with the injected variation level: one unit of
#: capacitance sigma maps to this many volts of offset sigma.  Calibrated so
#: the reference 4-row majority layout loses roughly 40 points of stability
#: at 40% variation while the 32-row layout stays near 100%.
SENSE_OFFSET_PER_SIGMA = 0.035

#: Multipliers below this floor are clamped; a cell never loses its capacitor.
CAP_MULTIPLIER_FLOOR = 0.05

_CAP_STREAM = 101
_OFFSET_STREAM = 202


@dataclass(frozen=True)
class AnalogParams:
    """Electrical knobs for the charge-sharing and sensing model.

    cb_ratio is the bitline-to-cell capacitance ratio; its default makes the
    32-row replicated majority deviation exceed the 4-row single-copy
    deviation by the calibrated 2.59x factor.  sense_offset_sigma=None
    derives the offset noise from variation_sigma.
    """

    vdd: float = 1.2
    cb_ratio: float = 5.79
    c_cell_nominal: float = 1.0
    variation_sigma: float = 0.0
    sense_offset_sigma: float | None = None
    sense_threshold: float = 0.0
    first_row_weight: float = 1.0
    static_variation: bool = True

    def __post_init__(self):
        if self.vdd <= 0:
            raise ValueError(f"vdd must be positive, got {self.vdd}")
        if self.cb_ratio < 0:
            raise ValueError(f"cb_ratio must be non-negative, got {self.cb_ratio}")
        if self.c_cell_nominal <= 0:
            raise ValueError("c_cell_nominal must be positive")
        if not 0.0 <= self.variation_sigma <= 1.0:
            raise ValueError(
                f"variation_sigma must lie in [0, 1], got {self.variation_sigma}"
            )
        if self.first_row_weight <= 0:
            raise ValueError("first_row_weight must be positive")

    @property
    def offset_sigma(self) -> float:
        if self.sense_offset_sigma is not None:
            return self.sense_offset_sigma
        return SENSE_OFFSET_PER_SIGMA * self.variation_sigma

    @property
    def neutral(self) -> float:
        return self.vdd / 2.0


def charge_share(cells: Iterable[tuple[float, float]],
                 params: AnalogParams | None = None) -> float:
    """Bitline deviation from vdd/2 after sharing charge with the given cells.

    cells is a sequence of (level_volts, cap_multiplier) pairs.
    """
    params = params or AnalogParams()
    cells = list(cells)
    if not cells:
        raise ValueError("charge sharing needs at least one cell")
    levels = np.array([c[0] for c in cells], dtype=np.float64)
    caps = np.array([c[1] for c in cells], dtype=np.float64) * params.c_cell_nominal
    if (caps <= 0).any():
        raise ValueError("cell capacitance must be positive")
    num = float(np.sum(caps * (levels - params.neutral)))
    den = params.cb_ratio * params.c_cell_nominal + float(np.sum(caps))
    return num / den


def charge_share_matrix(levels: np.ndarray, caps: np.ndarray,
                        params: AnalogParams,
                        weights: np.ndarray | None = None) -> np.ndarray:
    """Vectorized deviation per bitline.

    levels and caps have shape (n_cells, n_bitlines); weights optionally
    scales each cell's capacitance contribution (first-row weighting).
    """
    caps = caps * params.c_cell_nominal
    if weights is not None:
        caps = caps * weights[:, None]
    num = np.sum(caps * (levels - params.neutral), axis=0)
    den = params.cb_ratio * params.c_cell_nominal + np.sum(caps, axis=0)
    return num / den


def sense(deviation: float, offset: float = 0.0, *,
          threshold: float = 0.0, bias: int = 0) -> int:
    """Resolve a bitline: 1 above threshold, 0 below, bias bit on a tie."""
    value = deviation + offset
    if value > threshold:
        return 1
    if value < threshold:
        return 0
    return bias


def sense_array(deviations: np.ndarray, offsets: np.ndarray | float = 0.0, *,
                threshold: float = 0.0,
                bias: np.ndarray | int = 0) -> np.ndarray:
    """Vectorized sense over bitlines."""
    value = deviations + offsets
    bits = (value > threshold).astype(np.uint8)
    ties = value == threshold
    if np.any(ties):
        bits[ties] = np.broadcast_to(np.asarray(bias, dtype=np.uint8),
                                     bits.shape)[ties]
    return bits


@dataclass(frozen=True)
class VariationSample:
    """Reproducible per-cell capacitance and per-draw sense offset streams.

    Capacitance multipliers are keyed by (seed, row) so the same physical
    cell sees the same multiplier wherever it participates; offsets are keyed
    by (seed, draw index).
    """

    seed: int
    cap_sigma: float
    offset_sigma: float

    def cap_multipliers(self, row: int, n_bitlines: int,
                        trial: int | None = None) -> np.ndarray:
        key = [self.seed, _CAP_STREAM, row]
        if trial is not None:
            key.append(trial)
        z = np.random.default_rng(key).standard_normal(n_bitlines)
        return _scale_multipliers(z, self.cap_sigma)

    def cap_multipliers_for_rows(self, rows: Sequence[int], n_bitlines: int,
                                 trial: int | None = None) -> np.ndarray:
        return np.vstack(
            [self.cap_multipliers(r, n_bitlines, trial) for r in rows]
        )

    def sense_offsets(self, n_bitlines: int, draw: int = 0) -> np.ndarray:
        z = np.random.default_rng([self.seed, _OFFSET_STREAM, draw])
        return z.standard_normal(n_bitlines) * self.offset_sigma

    @classmethod
    def from_params(cls, params: AnalogParams, seed: int) -> "VariationSample":
        return cls(seed=seed, cap_sigma=params.variation_sigma,
                   offset_sigma=params.offset_sigma)


def _scale_multipliers(z: np.ndarray, sigma: float) -> np.ndarray:
    """Standard normals -> truncated, floored capacitance multipliers."""
    mult = 1.0 + sigma * np.clip(z, -3.0, 3.0)
    return np.maximum(mult, CAP_MULTIPLIER_FLOOR)


@dataclass(frozen=True)
class McResult:
    stable: np.ndarray
    correct_trials: np.ndarray
    trials: int

    @property
    def success_rate(self) -> float:
        return float(np.count_nonzero(self.stable)) / len(self.stable)


def mc_success_rate(layout: np.ndarray | Sequence[float],
                    expected: np.ndarray | int,
                    params: AnalogParams,
                    trials: int,
                    seed: int,
                    n_bitlines: int | None = None,
                    bias: int = 0) -> McResult:
    """Monte Carlo stability of a cell layout under variation.

    layout gives cell levels in volts, either one vector of n_cells shared by
    every bitline or a full (n_cells, n_bitlines) matrix.  A bitline is
    stable when it senses the expected bit in every trial; the success rate
    is the stable fraction.  Standard normal draws depend only on (seed,
    stream) so sweeping sigma at a fixed seed rescales the same sample.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    layout = np.asarray(layout, dtype=np.float64)
    if layout.ndim == 1:
        if n_bitlines is None:
            raise ValueError("n_bitlines required for a shared 1-d layout")
        levels = np.repeat(layout[:, None], n_bitlines, axis=1)
    else:
        levels = layout
        n_bitlines = layout.shape[1]
    n_cells = levels.shape[0]
    expected_bits = np.broadcast_to(
        np.asarray(expected, dtype=np.uint8), (n_bitlines,)
    )

    sample = VariationSample.from_params(params, seed)
    if params.static_variation:
        caps = sample.cap_multipliers_for_rows(range(n_cells), n_bitlines)
        deviations = charge_share_matrix(levels, caps, params)
    else:
        deviations = None

    correct = np.zeros(n_bitlines, dtype=np.int64)
    for trial in range(trials):
        if deviations is None:
            caps = sample.cap_multipliers_for_rows(
                range(n_cells), n_bitlines, trial=trial
            )
            dev = charge_share_matrix(levels, caps, params)
        else:
            dev = deviations
        offsets = sample.sense_offsets(n_bitlines, draw=trial)
        bits = sense_array(dev, offsets, threshold=params.sense_threshold,
                           bias=bias)
        correct += bits == expected_bits
    stable = correct == trials
    return McResult(stable=stable, correct_trials=correct, trials=trials)
