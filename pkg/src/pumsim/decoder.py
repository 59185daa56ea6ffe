"""Hierarchical row decoder model with latching predecoders.

A row address splits into a subarray index (upper bits, driving the global
word line decoder) and an in-subarray index (lower bits, driving the local
word line decoder through a bank of predecoders).  Each predecoder decodes a
fixed slice of the in-subarray bits into a one-hot select and holds it in a
latch.  A precharge normally resets the latches; skipping the reset makes a
second activation union its selects with the first, and the local word line
driver then asserts every row in the cartesian product of the latched
selects.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field

from .errors import CrossSubarrayError, LatchOverflowError, RowOutOfRangeError

#: Bit widths of the predecoder groups, lowest-order group first.  Group A
#: decodes one bit (two outputs); groups B..E decode two bits each (four
#: outputs each), for 18 predecoder outputs over a 9-bit in-subarray index.
DEFAULT_GROUP_WIDTHS = (1, 2, 2, 2, 2)

DEFAULT_SUBARRAY_COUNT = 128


@dataclass(frozen=True)
class DecoderLayout:
    """Shape of the address split between subarray and predecoder groups."""

    group_widths: tuple[int, ...] = DEFAULT_GROUP_WIDTHS
    subarray_count: int = DEFAULT_SUBARRAY_COUNT

    def __post_init__(self):
        if not self.group_widths:
            raise ValueError("at least one predecoder group is required")
        if any(w < 1 for w in self.group_widths):
            raise ValueError(f"group widths must be positive: {self.group_widths}")
        if self.subarray_count < 1:
            raise ValueError(f"subarray_count must be positive: {self.subarray_count}")
        if len(self.group_widths) > len(string.ascii_uppercase):
            raise ValueError("too many predecoder groups to label")

    @property
    def in_subarray_bits(self) -> int:
        return sum(self.group_widths)

    @property
    def subarray_size(self) -> int:
        """Rows per subarray."""
        return 1 << self.in_subarray_bits

    @property
    def total_rows(self) -> int:
        return self.subarray_size * self.subarray_count

    @property
    def group_count(self) -> int:
        return len(self.group_widths)

    @property
    def group_labels(self) -> tuple[str, ...]:
        return tuple(string.ascii_uppercase[: self.group_count])

    def group_offsets(self) -> tuple[int, ...]:
        """Bit offset of each group within the in-subarray index."""
        offsets = []
        pos = 0
        for width in self.group_widths:
            offsets.append(pos)
            pos += width
        return tuple(offsets)

    def check_row(self, row: int) -> None:
        if not 0 <= row < self.total_rows:
            raise RowOutOfRangeError(
                f"row {row} outside address space of {self.total_rows} rows"
            )


@dataclass(frozen=True)
class DecodedAddress:
    """Subarray index plus one predecoder select per group."""

    subarray: int
    selects: tuple[int, ...]

    def labelled(self, layout: DecoderLayout) -> str:
        """Render selects as e.g. 'A1,B3,C3,D0,E2' for diagnostics."""
        parts = [
            f"{label}{value}"
            for label, value in zip(layout.group_labels, self.selects)
        ]
        return ",".join(parts)


def decode_address(row: int, layout: DecoderLayout | None = None) -> DecodedAddress:
    """Split a row address into its subarray index and predecoder selects."""
    layout = layout or DecoderLayout()
    layout.check_row(row)
    index = row & (layout.subarray_size - 1)
    subarray = row >> layout.in_subarray_bits
    selects = []
    for width, offset in zip(layout.group_widths, layout.group_offsets()):
        selects.append((index >> offset) & ((1 << width) - 1))
    return DecodedAddress(subarray=subarray, selects=tuple(selects))


def compose_address(subarray: int, selects: tuple[int, ...],
                    layout: DecoderLayout | None = None) -> int:
    """Inverse of decode_address."""
    layout = layout or DecoderLayout()
    index = 0
    for value, offset in zip(selects, layout.group_offsets()):
        index |= value << offset
    return (subarray << layout.in_subarray_bits) | index


@dataclass
class LatchState:
    """Latched global word line plus the per-group predecoder select sets."""

    subarray: int
    groups: list[set[int]] = field(default_factory=list)

    def copy(self) -> "LatchState":
        return LatchState(self.subarray, [set(g) for g in self.groups])


def latch(state: LatchState | None, row: int, reset: bool,
          layout: DecoderLayout | None = None) -> LatchState:
    """Feed one activation into the predecoder latches.

    With reset=True the precharge reset has happened and the new decode
    replaces the latch contents.  With reset=False the reset was skipped
    (violated precharge timing) and the new selects union with the old ones.
    """
    layout = layout or DecoderLayout()
    decoded = decode_address(row, layout)
    if reset or state is None:
        return LatchState(decoded.subarray, [{s} for s in decoded.selects])
    if decoded.subarray != state.subarray:
        raise CrossSubarrayError(
            f"row {row} is in subarray {decoded.subarray}, "
            f"latches hold subarray {state.subarray}"
        )
    merged = state.copy()
    for group, select in zip(merged.groups, decoded.selects):
        group.add(select)
        if len(group) > 2:
            raise LatchOverflowError(
                f"predecoder group would latch {len(group)} selects; "
                "only two activations per sequence are modeled"
            )
    return merged


def activated_rows(state: LatchState, layout: DecoderLayout | None = None) -> list[int]:
    """All rows asserted by the latched selects, ascending, absolute addresses."""
    layout = layout or DecoderLayout()
    if not state.groups or any(not g for g in state.groups):
        raise ValueError("latch state is empty")
    rows = [
        compose_address(state.subarray, combo, layout)
        for combo in itertools.product(*(sorted(g) for g in state.groups))
    ]
    return sorted(rows)


@dataclass(frozen=True)
class RowGroup:
    """Set of rows activated together by one ACT-PRE-ACT pair."""

    rows: tuple[int, ...]
    r_first: int
    r_second: int
    subarray: int

    @property
    def n(self) -> int:
        return len(self.rows)


def row_group(r_first: int, r_second: int,
              layout: DecoderLayout | None = None) -> RowGroup:
    """Rows simultaneously activated by pairing two row addresses.

    The group size is 2**k where k counts the predecoder groups in which the
    two addresses decode differently; both anchors are always members.
    """
    layout = layout or DecoderLayout()
    state = latch(None, r_first, reset=True, layout=layout)
    state = latch(state, r_second, reset=False, layout=layout)
    rows = activated_rows(state, layout)
    return RowGroup(
        rows=tuple(rows),
        r_first=r_first,
        r_second=r_second,
        subarray=state.subarray,
    )


def differing_groups(r_first: int, r_second: int,
                     layout: DecoderLayout | None = None) -> tuple[str, ...]:
    """Labels of the predecoder groups in which two addresses differ."""
    layout = layout or DecoderLayout()
    a = decode_address(r_first, layout)
    b = decode_address(r_second, layout)
    if a.subarray != b.subarray:
        raise CrossSubarrayError(
            f"rows {r_first} and {r_second} are in different subarrays"
        )
    return tuple(
        label
        for label, x, y in zip(layout.group_labels, a.selects, b.selects)
        if x != y
    )


def row_group_census(layout: DecoderLayout | None = None) -> dict[int, int]:
    """Histogram of group size over all ordered pairs (r1, r2), r1 != r2.

    Computed within a single subarray; every subarray has the same census.
    """
    layout = layout or DecoderLayout()
    size = layout.subarray_size
    selects = [decode_address(r, layout).selects for r in range(size)]
    census: dict[int, int] = {}
    for r1 in range(size):
        s1 = selects[r1]
        for r2 in range(size):
            if r1 == r2:
                continue
            diff = sum(1 for x, y in zip(s1, selects[r2]) if x != y)
            n = 1 << diff
            census[n] = census.get(n, 0) + 1
    return dict(sorted(census.items()))


def census_fractions(census: dict[int, int]) -> dict[int, float]:
    """Census normalized by the total ordered-pair count."""
    total = sum(census.values())
    return {n: count / total for n, count in census.items()}


def find_anchor_pair(n: int, layout: DecoderLayout | None = None,
                     subarray: int = 0) -> tuple[int, int]:
    """Deterministic anchor pair producing a group of the requested size.

    Picks the lowest row of the subarray and flips whole low-order predecoder
    groups until the group size reaches n.
    """
    layout = layout or DecoderLayout()
    if n < 1 or n & (n - 1):
        raise ValueError(f"group size must be a power of two, got {n}")
    k = n.bit_length() - 1
    if k > layout.group_count:
        raise ValueError(
            f"group size {n} needs {k} differing groups, "
            f"layout has {layout.group_count}"
        )
    base = subarray << layout.in_subarray_bits
    index = 0
    for width, offset in zip(layout.group_widths[:k], layout.group_offsets()[:k]):
        index |= ((1 << width) - 1) << offset
    return base, base | index
