"""Cell-level DRAM bank state.

Cells store a voltage: 0 for a discharged zero, vdd for a fully charged one,
vdd/2 for a neutral (half) charge, and anything else counts as an unresolved
analog level.  Logical data maps directly onto full levels; cell polarity
(true vs anti cell) only influences how ties and neutral charge resolve at
the sense amplifiers.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import BankStateError, RowOutOfRangeError, UnresolvedCellError


class LevelCode(IntEnum):
    """Two-bit cell level code used by the extended dump format."""

    ZERO = 0
    ONE = 1
    NEUTRAL = 2
    ANALOG = 3


@dataclass(frozen=True)
class Geometry:
    n_subarrays: int = 1
    subarray_size: int = 512
    n_bitlines: int = 1024

    def __post_init__(self):
        for name in ("n_subarrays", "subarray_size", "n_bitlines"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def total_rows(self) -> int:
        return self.n_subarrays * self.subarray_size

    def subarray_of(self, row: int) -> int:
        return row // self.subarray_size


@dataclass(frozen=True)
class DataPattern:
    """Row fill pattern; random content is reproducible per (seed, row)."""

    kind: str
    seed: int = 0
    bits: np.ndarray | None = None

    @classmethod
    def all_zeros(cls) -> "DataPattern":
        return cls("zeros")

    @classmethod
    def all_ones(cls) -> "DataPattern":
        return cls("ones")

    @classmethod
    def random(cls, seed: int) -> "DataPattern":
        return cls("random", seed=seed)

    @classmethod
    def explicit(cls, bits: Sequence[int] | np.ndarray) -> "DataPattern":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
            raise ValueError("explicit pattern must be a flat 0/1 vector")
        return cls("explicit", bits=arr)

    def row_bits(self, row: int, n_bitlines: int) -> np.ndarray:
        if self.kind == "zeros":
            return np.zeros(n_bitlines, dtype=np.uint8)
        if self.kind == "ones":
            return np.ones(n_bitlines, dtype=np.uint8)
        if self.kind == "random":
            rng = np.random.default_rng([self.seed, row])
            return rng.integers(0, 2, size=n_bitlines, dtype=np.uint8)
        if self.kind == "explicit":
            if self.bits is None or len(self.bits) != n_bitlines:
                raise ValueError(
                    f"explicit pattern length {0 if self.bits is None else len(self.bits)} "
                    f"does not match {n_bitlines} bitlines"
                )
            return self.bits.copy()
        raise ValueError(f"unknown pattern kind {self.kind!r}")


def parse_pattern(spec: str) -> DataPattern:
    """Parse 'zeros', 'ones' or 'random:<seed>' into a pattern."""
    if spec == "zeros":
        return DataPattern.all_zeros()
    if spec == "ones":
        return DataPattern.all_ones()
    if spec.startswith("random:"):
        return DataPattern.random(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown pattern spec {spec!r}")


class BankState:
    """Mutable bank: cell voltages, open rows and the sense amplifier latch."""

    def __init__(self, geometry: Geometry | None = None, vdd: float = 1.2,
                 biased_senseamps: bool = False):
        self.geometry = geometry or Geometry()
        self.vdd = float(vdd)
        self.biased_senseamps = biased_senseamps
        self.cells = np.zeros(
            (self.geometry.total_rows, self.geometry.n_bitlines), dtype=np.float32
        )
        self.open_rows: set[int] = set()
        self.senseamp_bits = np.zeros(self.geometry.n_bitlines, dtype=np.uint8)
        self.senseamp_enabled = False
        # Cell polarity per row: True for true cells, False for anti cells.
        self.polarity = (np.arange(self.geometry.total_rows) % 2 == 0)

    @property
    def neutral_level(self) -> float:
        return np.float32(self.vdd) / np.float32(2.0)

    def check_row(self, row: int) -> None:
        if not 0 <= row < self.geometry.total_rows:
            raise RowOutOfRangeError(
                f"row {row} outside bank of {self.geometry.total_rows} rows"
            )

    def polarity_bias(self, row: int) -> int:
        """Bit a biased sense amplifier drifts to on this row's bitline ties."""
        return 1 if self.polarity[row] else 0

    def clone(self) -> "BankState":
        other = BankState(self.geometry, self.vdd, self.biased_senseamps)
        other.cells = self.cells.copy()
        other.open_rows = set(self.open_rows)
        other.senseamp_bits = self.senseamp_bits.copy()
        other.senseamp_enabled = self.senseamp_enabled
        other.polarity = self.polarity.copy()
        return other

    def set_row_bits(self, row: int, bits: np.ndarray) -> None:
        """Store full 0/vdd levels for one row, no state checks."""
        self.cells[row] = np.asarray(bits, dtype=np.float32) * np.float32(self.vdd)

    def set_row_neutral(self, row: int) -> None:
        self.cells[row] = self.neutral_level

    def init_rows(self, rows: Iterable[int], pattern: DataPattern) -> None:
        """Fill rows with a pattern through nominal writes; bank must be closed."""
        if self.open_rows:
            raise BankStateError("cannot initialize rows while the bank is open")
        for row in rows:
            self.check_row(row)
            self.set_row_bits(row, pattern.row_bits(row, self.geometry.n_bitlines))

    def level_codes(self, row: int) -> np.ndarray:
        """LevelCode per cell of one row."""
        volts = self.cells[row]
        codes = np.full(volts.shape, LevelCode.ANALOG, dtype=np.uint8)
        codes[volts == np.float32(0.0)] = LevelCode.ZERO
        codes[volts == np.float32(self.vdd)] = LevelCode.ONE
        codes[volts == self.neutral_level] = LevelCode.NEUTRAL
        return codes

    def resolve_row_bits(self, row: int) -> np.ndarray:
        """Bits a nominal noise-free sense of this row would latch.

        Full levels resolve directly.  Partial charge resolves by its sign
        against the precharged bitline; an exact tie (neutral charge) goes to
        the row's polarity bias when the profile allows biased sense
        amplifiers and is an error otherwise.
        """
        volts = self.cells[row]
        neutral = self.neutral_level
        ties = volts == neutral
        if ties.any() and not self.biased_senseamps:
            raise UnresolvedCellError(
                f"row {row} holds neutral charge on {int(ties.sum())} bitlines"
            )
        bits = (volts > neutral).astype(np.uint8)
        if ties.any():
            bits[ties] = self.polarity_bias(row)
        return bits

    def read_row(self, row: int) -> np.ndarray:
        """Nominal activate/read/precharge of one row with the bank closed."""
        self.check_row(row)
        if self.open_rows:
            raise BankStateError("cannot read while rows are open")
        bits = self.resolve_row_bits(row)
        # Reading restores whatever the sense amplifiers latched.
        self.set_row_bits(row, bits)
        return bits

    def snapshot(self) -> str:
        """Digest of all cell levels; changes iff some cell level changed."""
        h = hashlib.sha256()
        h.update(
            struct.pack(
                "<III",
                self.geometry.n_subarrays,
                self.geometry.subarray_size,
                self.geometry.n_bitlines,
            )
        )
        h.update(self.cells.tobytes())
        return h.hexdigest()


_DUMP_MAGIC = b"BANKDMP1"
_DUMP_VERSION = 1


def save_dump(bank: BankState, path: str, extended: bool = False) -> None:
    """Write bank contents: packed resolved bits, plus level codes if extended."""
    geo = bank.geometry
    flags = 1 if extended else 0
    ones = (bank.cells == np.float32(bank.vdd)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<HHIII", _DUMP_VERSION, flags,
                             geo.n_subarrays, geo.subarray_size, geo.n_bitlines))
        fh.write(np.packbits(ones, axis=None).tobytes())
        if extended:
            codes = np.vstack(
                [bank.level_codes(r) for r in range(geo.total_rows)]
            )
            packed = _pack_codes(codes.reshape(-1))
            fh.write(packed.tobytes())


@dataclass(frozen=True)
class DumpContents:
    geometry: Geometry
    bits: np.ndarray
    codes: np.ndarray | None


def load_dump(path: str) -> DumpContents:
    """Read a dump back into bit and level-code matrices."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a bank dump: bad magic {magic!r}")
        version, flags, n_sub, sub_size, n_bl = struct.unpack("<HHIII", fh.read(16))
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        geo = Geometry(n_sub, sub_size, n_bl)
        n_cells = geo.total_rows * geo.n_bitlines
        raw = np.frombuffer(fh.read((n_cells + 7) // 8), dtype=np.uint8)
        bits = np.unpackbits(raw)[:n_cells].reshape(geo.total_rows, geo.n_bitlines)
        codes = None
        if flags & 1:
            raw = np.frombuffer(fh.read((n_cells + 3) // 4), dtype=np.uint8)
            codes = _unpack_codes(raw, n_cells).reshape(
                geo.total_rows, geo.n_bitlines
            )
    return DumpContents(geometry=geo, bits=bits, codes=codes)


def _pack_codes(codes: np.ndarray) -> np.ndarray:
    pad = (-len(codes)) % 4
    if pad:
        codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)])
    quads = codes.reshape(-1, 4)
    return (quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4)
            | (quads[:, 3] << 6)).astype(np.uint8)


def _unpack_codes(packed: np.ndarray, count: int) -> np.ndarray:
    out = np.empty(len(packed) * 4, dtype=np.uint8)
    out[0::4] = packed & 3
    out[1::4] = (packed >> 2) & 3
    out[2::4] = (packed >> 4) & 3
    out[3::4] = (packed >> 6) & 3
    return out[:count]
