"""Behavioral simulator for simultaneous many-row DRAM activation.

Models the hierarchical row decoder's latch behavior under violated
timings, the analog charge-sharing step with Monte Carlo process variation,
trace-level command execution (copy, majority, half-charge, bulk-write
regimes), replicated-input majority primitives, bit-serial arithmetic built
from majority gates, an analytical performance model, and a bank-content
destruction planner.
"""

from .analog import (
    AnalogParams,
    McResult,
    VariationSample,
    charge_share,
    mc_success_rate,
    sense,
)
from .bank import (
    BankState,
    DataPattern,
    Geometry,
    LevelCode,
    load_dump,
    parse_pattern,
    save_dump,
)
from .bitserial import (
    BankMajBackend,
    BitColumnMatrix,
    BitSerialEngine,
    FastMajBackend,
)
from .config import ExperimentConfig
from .decoder import (
    DecodedAddress,
    DecoderLayout,
    LatchState,
    RowGroup,
    activated_rows,
    census_fractions,
    compose_address,
    decode_address,
    differing_groups,
    find_anchor_pair,
    latch,
    row_group,
    row_group_census,
)
from .destruct import (
    BulkWriteStep,
    CloneStep,
    DestructionPlan,
    FracStep,
    PlanComparison,
    WriteStep,
    compare,
    plan_frac,
    plan_multirow,
    plan_rowclone,
)
from .engine import (
    ApaRegime,
    Command,
    CommandDurations,
    CommandEngine,
    Event,
    TimingParams,
    check_power,
    classify_apa,
    frac,
    stretch_for_power,
    trace_latency,
)
from .errors import (
    ArityUnavailableError,
    BankStateError,
    ConfigError,
    CrossSubarrayError,
    InvalidArityError,
    LatchOverflowError,
    RowOutOfRangeError,
    SimulationError,
    TraceFormatError,
    UndefinedTimingRegimeError,
    UnresolvedCellError,
    ZeroSuccessRateError,
)
from .perfmodel import (
    ARITIES,
    DEFAULT_SUCCESS_RATES,
    KERNELS,
    MajOpCount,
    PerfScenario,
    baseline_scenario,
    count_ops,
    make_scenario,
    mean_speedup,
    model_time,
    speedup,
)
from .primitives import (
    MajResult,
    ReplicationLayout,
    SuccessRateReport,
    bulk_write,
    characterize,
    maj,
    majority_reference,
    multi_row_clone,
    replication_layout,
)
from .traceio import format_trace, load_trace, parse_trace, save_trace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
