"""Bit-serial arithmetic over vertically laid out words, majority gates only.

Each word occupies one column; bit plane i of a 32-bit word lives in DRAM
row i.  Logic follows the majority normal form: AND over k operands is
MAJ(2k-1) with k-1 constant zeros, OR uses ones, XOR and the full adder are
fixed majority networks.  Negated companions of every stored plane are kept
alongside the data (negation itself happens at load, never in memory).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ArityUnavailableError

WORD_WIDTH = 32


class MajBackend(Protocol):
    """Anything that can evaluate an odd-arity majority over bit planes."""

    def maj(self, planes: Sequence[np.ndarray]) -> np.ndarray: ...


class FastMajBackend:
    """Exact boolean majority evaluated on the host."""

    def maj(self, planes: Sequence[np.ndarray]) -> np.ndarray:
        if len(planes) % 2 == 0:
            raise ValueError("majority needs an odd number of planes")
        total = np.sum(np.vstack(planes).astype(np.int32), axis=0)
        return (total >= (len(planes) + 1) // 2).astype(np.uint8)


class BankMajBackend:
    """Majority evaluated through the bank engine, for cross-validation.

    groups maps input arity to the row group used for that arity.  Calls are
    destructive to the group rows, which is fine: operands are re-loaded per
    operation.
    """

    def __init__(self, bank, groups: dict, params=None, timing=None,
                 layout=None):
        from .primitives import maj as bank_maj  # local import avoids a cycle

        self._bank = bank
        self._groups = groups
        self._params = params
        self._timing = timing
        self._layout = layout
        self._bank_maj = bank_maj

    def maj(self, planes: Sequence[np.ndarray]) -> np.ndarray:
        m = len(planes)
        if m not in self._groups:
            raise ArityUnavailableError(f"no row group configured for arity {m}")
        result = self._bank_maj(
            self._bank, np.vstack(planes), self._groups[m],
            params=self._params, timing=self._timing, layout=self._layout,
        )
        return result.bits


@dataclass
class BitColumnMatrix:
    """Vertical layout: planes[i] holds bit i of every column's word."""

    planes: np.ndarray
    negated: np.ndarray

    @classmethod
    def from_ints(cls, values: Sequence[int] | np.ndarray,
                  width: int = WORD_WIDTH) -> "BitColumnMatrix":
        vals = np.asarray(values, dtype=np.uint64)
        planes = np.empty((width, len(vals)), dtype=np.uint8)
        for i in range(width):
            planes[i] = (vals >> np.uint64(i)) & np.uint64(1)
        return cls(planes=planes, negated=1 - planes)

    @classmethod
    def from_planes(cls, planes: np.ndarray) -> "BitColumnMatrix":
        planes = np.asarray(planes, dtype=np.uint8)
        return cls(planes=planes, negated=1 - planes)

    @property
    def width(self) -> int:
        return self.planes.shape[0]

    @property
    def n_columns(self) -> int:
        return self.planes.shape[1]

    def to_ints(self) -> np.ndarray:
        out = np.zeros(self.n_columns, dtype=np.uint64)
        for i in range(self.width):
            out |= self.planes[i].astype(np.uint64) << np.uint64(i)
        return out

    def check_negated(self) -> bool:
        return bool(np.array_equal(self.negated, 1 - self.planes))


class BitSerialEngine:
    """Executes word-level kernels as sequences of majority operations."""

    def __init__(self, backend: MajBackend | None = None,
                 n_columns: int | None = None,
                 max_arity: int = 5, width: int = WORD_WIDTH):
        if max_arity < 3 or max_arity % 2 == 0:
            raise ArityUnavailableError(
                f"max arity must be odd and >= 3, got {max_arity}"
            )
        self.backend = backend or FastMajBackend()
        self.max_arity = max_arity
        self.width = width
        self._n_columns = n_columns

    # -- plane helpers ----------------------------------------------------

    def _cols(self, plane: np.ndarray) -> int:
        return plane.shape[0]

    def _zero(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=np.uint8)

    def _one(self, n: int) -> np.ndarray:
        return np.ones(n, dtype=np.uint8)

    def _maj(self, *planes: np.ndarray) -> np.ndarray:
        return self.backend.maj(list(planes))

    # -- logic ------------------------------------------------------------

    def and_many(self, planes: Sequence[np.ndarray]) -> np.ndarray:
        """AND of k planes: MAJ(2k-1) with k-1 zeros, or a tree when too wide."""
        return self._reduce_const(list(planes), fill=0)

    def or_many(self, planes: Sequence[np.ndarray]) -> np.ndarray:
        """OR of k planes: MAJ(2k-1) with k-1 ones, or a tree when too wide."""
        return self._reduce_const(list(planes), fill=1)

    def _reduce_const(self, planes: list[np.ndarray], fill: int) -> np.ndarray:
        if not planes:
            raise ValueError("need at least one plane")
        fan_in = (self.max_arity + 1) // 2
        while len(planes) > 1:
            chunk, rest = planes[:fan_in], planes[fan_in:]
            k = len(chunk)
            n = self._cols(chunk[0])
            const = self._one(n) if fill else self._zero(n)
            gate_inputs = list(chunk) + [const] * (k - 1)
            planes = [self._maj(*gate_inputs)] + rest
        return planes[0]

    def xor(self, a: np.ndarray, b: np.ndarray,
            a_neg: np.ndarray | None = None,
            b_neg: np.ndarray | None = None) -> np.ndarray:
        """XOR from three MAJ3 gates using the negated operand planes."""
        if a_neg is None:
            a_neg = 1 - a
        if b_neg is None:
            b_neg = 1 - b
        n = self._cols(a)
        either = self._maj(a, b, self._one(n))
        not_both = self._maj(a_neg, b_neg, self._one(n))
        return self._maj(either, not_both, self._zero(n))

    def full_adder(self, a: np.ndarray, b: np.ndarray, cin: np.ndarray,
                   a_neg: np.ndarray, b_neg: np.ndarray,
                   cin_neg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One full adder stage; returns (sum, carry_out).

        Carry is always MAJ3(a, b, cin).  With MAJ5 available the sum is a
        single five-input gate on (a, b, cin, ~cout, ~cout); otherwise a
        two-level MAJ3 network computes it.
        """
        cout = self._maj(a, b, cin)
        cout_neg = self._maj(a_neg, b_neg, cin_neg)
        if self.max_arity >= 5:
            s = self._maj(a, b, cin, cout_neg, cout_neg)
        else:
            inner = self._maj(a, b, cin_neg)
            s = self._maj(cout_neg, cin, inner)
        return s, cout

    # -- word arithmetic ---------------------------------------------------

    def add(self, a: BitColumnMatrix, b: BitColumnMatrix,
            carry_in: int = 0) -> BitColumnMatrix:
        """Ripple-carry addition modulo 2**width."""
        planes, _ = self._add_planes(a.planes, a.negated, b.planes, b.negated,
                                     carry_in)
        return BitColumnMatrix.from_planes(np.vstack(planes))

    def sub(self, a: BitColumnMatrix, b: BitColumnMatrix) -> BitColumnMatrix:
        """a - b modulo 2**width via complement addition."""
        planes, _ = self._add_planes(a.planes, a.negated, b.negated, b.planes,
                                     carry_in=1)
        return BitColumnMatrix.from_planes(np.vstack(planes))

    def _add_planes(self, a: np.ndarray, an: np.ndarray,
                    b: np.ndarray, bn: np.ndarray,
                    carry_in: int) -> tuple[list[np.ndarray], np.ndarray]:
        n = a.shape[1]
        c = self._one(n) if carry_in else self._zero(n)
        cn = 1 - c
        out = []
        for i in range(a.shape[0]):
            s, cout = self.full_adder(a[i], b[i], c, an[i], bn[i], cn)
            out.append(s)
            c, cn = cout, 1 - cout
        return out, c

    def mul(self, a: BitColumnMatrix, b: BitColumnMatrix) -> BitColumnMatrix:
        """Shift-and-add multiplication, low word of the product."""
        w = self.width
        n = a.n_columns
        acc = np.zeros((w, n), dtype=np.uint8)
        acc_neg = 1 - acc
        for i in range(w):
            # Partial product: bit i of b gates a shifted copy of a.
            pp = np.zeros((w, n), dtype=np.uint8)
            for j in range(w - i):
                pp[i + j] = self.and_many([a.planes[j], b.planes[i]])
            pp_neg = 1 - pp
            planes, _ = self._add_planes(acc, acc_neg, pp, pp_neg, 0)
            acc = np.vstack(planes)
            acc_neg = 1 - acc
        return BitColumnMatrix.from_planes(acc)

    def div(self, a: BitColumnMatrix,
            b: BitColumnMatrix) -> tuple[BitColumnMatrix, BitColumnMatrix, np.ndarray]:
        """Restoring division: (quotient, remainder, divide_by_zero mask).

        Columns dividing by zero come out with an all-ones quotient and the
        dividend as remainder; the mask flags them.
        """
        w = self.width
        n = a.n_columns
        rem = np.zeros((w + 1, n), dtype=np.uint8)
        div_ext = np.vstack([b.planes, self._zero(n)[None, :]])
        div_ext_neg = 1 - div_ext
        q = np.zeros((w, n), dtype=np.uint8)
        for i in range(w - 1, -1, -1):
            rem = np.vstack([a.planes[i][None, :], rem[:-1]])
            rem_neg = 1 - rem
            diff, borrow_free = self._add_planes(rem, rem_neg,
                                                 div_ext_neg, div_ext, 1)
            q[i] = borrow_free
            not_taken = 1 - borrow_free
            for j in range(w + 1):
                rem[j] = self._mux(borrow_free, not_taken, diff[j], rem[j])
        divide_by_zero = self.and_many(list(b.negated))
        quotient = BitColumnMatrix.from_planes(q)
        remainder = BitColumnMatrix.from_planes(rem[:w])
        return quotient, remainder, divide_by_zero

    def _mux(self, sel: np.ndarray, sel_neg: np.ndarray,
             x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """sel ? x : y as (sel AND x) OR (~sel AND y)."""
        n = self._cols(sel)
        picked_x = self._maj(sel, x, self._zero(n))
        picked_y = self._maj(sel_neg, y, self._zero(n))
        return self._maj(picked_x, picked_y, self._one(n))

    def reduce(self, op: str, matrix: BitColumnMatrix) -> np.ndarray:
        """Fold one word's planes down to a single bit per column."""
        planes = [matrix.planes[i] for i in range(matrix.width)]
        if op == "and":
            return self.and_many(planes)
        if op == "or":
            return self.or_many(planes)
        if op == "xor":
            neg = [matrix.negated[i] for i in range(matrix.width)]
            acc, acc_neg = planes[0], neg[0]
            for p, pn in zip(planes[1:], neg[1:]):
                acc = self.xor(acc, p, acc_neg, pn)
                acc_neg = 1 - acc
            return acc
        raise ValueError(f"unknown reduction {op!r}")
