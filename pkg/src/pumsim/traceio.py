"""Plain-text command trace format.

One command per line: `<time_ns> <ACT|PRE|WRITE|READ> [row|hexdata]`.
Lines starting with '#' and blank lines are ignored.  WRITE data is the
packed row bits as hex, most significant bit of each byte first.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .engine import Command
from .errors import TraceFormatError


def parse_trace(text: str) -> list[Command]:
    """Parse trace text into commands."""
    commands = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            time = float(fields[0])
        except ValueError:
            raise TraceFormatError(f"line {lineno}: bad timestamp {fields[0]!r}")
        if len(fields) < 2:
            raise TraceFormatError(f"line {lineno}: missing command kind")
        kind = fields[1].upper()
        if kind == "ACT":
            if len(fields) != 3:
                raise TraceFormatError(f"line {lineno}: ACT needs a row")
            commands.append(Command(time, "ACT", row=int(fields[2])))
        elif kind == "PRE":
            commands.append(Command(time, "PRE"))
        elif kind == "WRITE":
            if len(fields) != 3:
                raise TraceFormatError(f"line {lineno}: WRITE needs hex data")
            try:
                data = bytes.fromhex(fields[2])
            except ValueError:
                raise TraceFormatError(f"line {lineno}: bad hex {fields[2]!r}")
            commands.append(Command(time, "WRITE", data=data))
        elif kind == "READ":
            commands.append(Command(time, "READ"))
        else:
            raise TraceFormatError(f"line {lineno}: unknown command {kind!r}")
    return commands


def load_trace(path: str) -> list[Command]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())


def format_trace(trace: Sequence[Command]) -> str:
    """Render commands back into the text format."""
    lines = []
    for cmd in trace:
        if cmd.kind == "ACT":
            lines.append(f"{cmd.time:g} ACT {cmd.row}")
        elif cmd.kind == "PRE":
            lines.append(f"{cmd.time:g} PRE")
        elif cmd.kind == "WRITE":
            data = cmd.data
            if isinstance(data, np.ndarray):
                data = np.packbits(data.astype(np.uint8)).tobytes()
            lines.append(f"{cmd.time:g} WRITE {data.hex()}")
        else:
            lines.append(f"{cmd.time:g} READ")
    return "\n".join(lines) + "\n"


def save_trace(trace: Iterable[Command], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_trace(list(trace)))
