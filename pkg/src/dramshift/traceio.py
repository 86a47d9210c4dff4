"""Text format for command traces.

One command per line, ``#`` starts a comment::

    AAP b0 s0 r3 r5
    AAP b0 s0 r3 rTOP:A
    TRA b0 s0 r1 r2 r3
    SHR b0 s0 r1 r2
    SHL b0 s0 r1 r1
    NOTX b0 s0 r1 s1 r2
    ACT b0 s0 r4
    RD b0 s0 r4
    PRE b0

Optional ``ch<n>`` and ``rk<n>`` tokens select channel and rank (default 0).
"""

from __future__ import annotations

import re
from pathlib import Path

from .array import MigRow, Port, RowAddress
from .engine import Command, CommandKind, CommandTrace
from .errors import TraceParseError

_MNEMONIC = {k.value: k for k in CommandKind}
_TOKEN = re.compile(r"^(ch|rk|b|s|r)(.+)$")
_MIG = {"TOP": MigRow.TOP_MIG, "BOT": MigRow.BOTTOM_MIG}


def _parse_row(text: str, lineno: int) -> tuple[int | MigRow, Port | None]:
    name, _, port = text.partition(":")
    if name.upper() in _MIG:
        if port and port.upper() not in ("A", "B"):
            raise TraceParseError(f"bad migration port {port!r}", lineno)
        return _MIG[name.upper()], Port(port.upper()) if port else None
    if port:
        raise TraceParseError(f"port given for data row {text!r}", lineno)
    try:
        return int(name), None
    except ValueError:
        raise TraceParseError(f"bad row {text!r}", lineno) from None


def parse_line(line: str, lineno: int = 0) -> Command | None:
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    tokens = body.split()
    kind = _MNEMONIC.get(tokens[0].upper())
    if kind is None:
        raise TraceParseError(f"unknown command {tokens[0]!r}", lineno)

    channel = rank = 0
    bank = None
    subarray = None
    operands: list[RowAddress] = []
    for tok in tokens[1:]:
        m = _TOKEN.match(tok)
        if m is None:
            raise TraceParseError(f"unexpected token {tok!r}", lineno)
        prefix, value = m.groups()
        if prefix == "r":
            if bank is None or subarray is None:
                raise TraceParseError(f"row {tok!r} before bank/subarray", lineno)
            row, port = _parse_row(value, lineno)
            operands.append(RowAddress(bank, subarray, row, port, channel, rank))
            continue
        try:
            number = int(value)
        except ValueError:
            raise TraceParseError(f"bad number in {tok!r}", lineno) from None
        if prefix == "ch":
            channel = number
        elif prefix == "rk":
            rank = number
        elif prefix == "b":
            bank = number
        else:
            subarray = number

    if kind is CommandKind.PRE and not operands:
        if bank is None:
            raise TraceParseError("PRE needs a bank", lineno)
        operands.append(RowAddress(bank, subarray or 0, 0, None, channel, rank))
    try:
        return Command(kind, tuple(operands))
    except ValueError as exc:
        raise TraceParseError(str(exc), lineno) from None


def parse_trace(text: str, label: str = "") -> CommandTrace:
    trace = CommandTrace(label=label)
    for lineno, line in enumerate(text.splitlines(), start=1):
        cmd = parse_line(line, lineno)
        if cmd is not None:
            trace.commands.append(cmd)
    return trace


def load_trace(path: str | Path) -> CommandTrace:
    path = Path(path)
    return parse_trace(path.read_text(), label=path.stem)


def _row_token(addr: RowAddress) -> str:
    if addr.is_migration:
        return "r" + addr.row.value + (f":{addr.port.value}" if addr.port else "")
    return f"r{addr.row}"


def format_command(cmd: Command) -> str:
    first = cmd.operands[0]
    parts = [cmd.kind.value]
    if first.channel:
        parts.append(f"ch{first.channel}")
    if first.rank:
        parts.append(f"rk{first.rank}")
    parts.append(f"b{first.bank}")
    if cmd.kind is CommandKind.PRE:
        return " ".join(parts)
    subarray = None
    for addr in cmd.operands:
        if addr.subarray != subarray:
            parts.append(f"s{addr.subarray}")
            subarray = addr.subarray
        parts.append(_row_token(addr))
    return " ".join(parts)


def format_trace(trace: CommandTrace) -> str:
    lines = [f"# {trace.label}"] if trace.label else []
    lines.extend(format_command(c) for c in trace.commands)
    return "\n".join(lines) + "\n"
