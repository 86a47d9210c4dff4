"""Bit-exact execution of DRAM and PIM commands over a MemoryState.

Every executor returns the low-level events it caused; ``run_trace`` collects
them into an ExecutionReport that timing/energy costing consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .array import MemoryState, MigRow, Port, RowAddress
from .errors import AddressError, DramError, ProtocolError, TraceError


class CommandKind(Enum):
    ACT = "ACT"
    PRE = "PRE"
    RD = "RD"
    WR = "WR"
    AAP = "AAP"
    DRA = "DRA"
    TRA = "TRA"
    NOT_XSUB = "NOTX"
    SHIFT_LEFT = "SHL"
    SHIFT_RIGHT = "SHR"


class EventKind(Enum):
    ACT = "ACT"
    PRE = "PRE"
    AAP = "AAP"
    TRA = "TRA"
    DRA = "DRA"
    BURST = "BURST"


# PIM primitives a compiled kernel may use
PIM_KINDS = frozenset({CommandKind.AAP, CommandKind.TRA, CommandKind.NOT_XSUB,
                       CommandKind.SHIFT_LEFT, CommandKind.SHIFT_RIGHT})

_ARITY = {
    CommandKind.ACT: 1, CommandKind.PRE: 1, CommandKind.RD: 1, CommandKind.WR: 1,
    CommandKind.AAP: 2, CommandKind.DRA: 2, CommandKind.TRA: 3, CommandKind.NOT_XSUB: 2,
    CommandKind.SHIFT_LEFT: 2, CommandKind.SHIFT_RIGHT: 2,
}


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    operands: tuple[RowAddress, ...]

    def __post_init__(self):
        if len(self.operands) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind.name} takes {_ARITY[self.kind]} operands, "
                             f"got {len(self.operands)}")


@dataclass
class CommandTrace:
    commands: list[Command] = field(default_factory=list)
    label: str = ""

    def append(self, kind: CommandKind, *operands: RowAddress) -> None:
        self.commands.append(Command(kind, tuple(operands)))

    def extend(self, other: CommandTrace) -> None:
        self.commands.extend(other.commands)

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)

    def count(self, kind: CommandKind) -> int:
        return sum(1 for c in self.commands if c.kind is kind)


@dataclass(frozen=True)
class CommandEvent:
    kind: EventKind
    source: CommandKind
    bank: tuple[int, int, int]
    index: int = -1


@dataclass
class ExecutionReport:
    events: list[CommandEvent] = field(default_factory=list)
    commands_executed: int = 0
    columns_per_row: int = 0
    ranks: int = 1
    label: str = ""

    def count(self, kind: EventKind, source: CommandKind | None = None) -> int:
        return sum(1 for e in self.events
                   if e.kind is kind and (source is None or e.source is source))

    @property
    def shifts(self) -> int:
        return sum(1 for e in self.events
                   if e.kind is EventKind.AAP
                   and e.source in (CommandKind.SHIFT_LEFT, CommandKind.SHIFT_RIGHT)) // 4

    def merged(self, other: ExecutionReport) -> ExecutionReport:
        """Combine reports of independent runs (e.g. disjoint banks)."""
        return ExecutionReport(self.events + other.events,
                               self.commands_executed + other.commands_executed,
                               self.columns_per_row or other.columns_per_row,
                               max(self.ranks, other.ranks), self.label)


def _event(kind: EventKind, source: CommandKind, addr: RowAddress) -> CommandEvent:
    return CommandEvent(kind, source, addr.bank_key)


def _check_migration_port(addr: RowAddress) -> None:
    if addr.is_migration and addr.port is None:
        raise AddressError(f"migration row operand needs a port: {addr}")


def _aap(mem: MemoryState, src: RowAddress, dst: RowAddress,
         source: CommandKind) -> CommandEvent:
    for a in (src, dst):
        mem.check(a)
        _check_migration_port(a)
    if src.subarray_key != dst.subarray_key:
        raise AddressError(f"AAP across subarrays {src} -> {dst}; use NOT_XSUB")
    mem.require_precharged(src)
    sub = mem.subarray(src)
    sub.sense(src.row, src.port)
    sub.restore(dst.row, dst.port)
    return _event(EventKind.AAP, source, src)


def exec_aap(mem: MemoryState, src: RowAddress, dst: RowAddress) -> list[CommandEvent]:
    """RowClone ``src`` into ``dst`` through the shared row buffer."""
    return [_aap(mem, src, dst, CommandKind.AAP)]


def _multi_row(mem: MemoryState, rows: tuple[RowAddress, ...]) -> tuple:
    for a in rows:
        mem.check(a, allow_migration=False)
    if len({a.subarray_key for a in rows}) != 1:
        raise AddressError("multi-row activation operands must share a subarray")
    if len({a.row for a in rows}) != len(rows):
        raise ProtocolError(f"multi-row activation needs distinct rows, got {[a.row for a in rows]}")
    mem.require_precharged(rows[0])
    sub = mem.subarray(rows[0])
    return sub, [sub.data_row(a.row) for a in rows]


def exec_tra(mem: MemoryState, a: RowAddress, b: RowAddress, c: RowAddress) -> list[CommandEvent]:
    """Triple-row activation: all three rows become the bitwise majority."""
    sub, (x, y, z) = _multi_row(mem, (a, b, c))
    result = (x & y) | (y & z) | (x & z)
    sub.latch[:] = result
    for addr in (a, b, c):
        sub.set_data_row(addr.row, result)
    return [_event(EventKind.TRA, CommandKind.TRA, a)]


def exec_dra(mem: MemoryState, a: RowAddress, b: RowAddress) -> list[CommandEvent]:
    """Dual-row activation. Two cells tie on disagreeing columns; the
    precharge level resolves those to 0, so both rows become AND(a, b)."""
    sub, (x, y) = _multi_row(mem, (a, b))
    result = x & y
    sub.latch[:] = result
    for addr in (a, b):
        sub.set_data_row(addr.row, result)
    return [_event(EventKind.DRA, CommandKind.DRA, a)]


def exec_not_xsub(mem: MemoryState, src: RowAddress, dst: RowAddress) -> list[CommandEvent]:
    """Copy across the sense amplifier shared with the adjacent subarray;
    the crossing inverts every bit."""
    for a in (src, dst):
        mem.check(a, allow_migration=False)
    if src.bank_key != dst.bank_key or abs(src.subarray - dst.subarray) != 1:
        raise AddressError(f"NOT_XSUB needs adjacent subarrays of one bank: {src} -> {dst}")
    mem.require_precharged(src)
    s = mem.subarray(src)
    d = mem.subarray(dst)
    s.latch[:] = s.data_row(src.row)
    d.latch[:] = ~s.latch
    d.set_data_row(dst.row, d.latch)
    return [_event(EventKind.AAP, CommandKind.NOT_XSUB, src)]


def _shift_operands(mem: MemoryState, src: RowAddress, dst: RowAddress) -> None:
    for a in (src, dst):
        mem.check(a, allow_migration=False)
    if src.subarray_key != dst.subarray_key:
        raise AddressError(f"shift operands must share a subarray: {src} -> {dst}")


def exec_shift_right(mem: MemoryState, src: RowAddress, dst: RowAddress) -> list[CommandEvent]:
    """dst[i+1] = src[i], dst[0] = 0; four AAPs through both migration rows.

    src may equal dst: after the second AAP the whole row is parked in the
    migration rows and src is never read again.
    """
    _shift_operands(mem, src, dst)
    top_a = src.with_row(MigRow.TOP_MIG, Port.A)
    top_b = src.with_row(MigRow.TOP_MIG, Port.B)
    bot_a = src.with_row(MigRow.BOTTOM_MIG, Port.A)
    bot_b = src.with_row(MigRow.BOTTOM_MIG, Port.B)
    k = CommandKind.SHIFT_RIGHT
    return [
        _aap(mem, src, top_a, k),    # even columns up
        _aap(mem, src, bot_a, k),    # odd columns down
        _aap(mem, top_b, dst, k),    # even -> odd
        _aap(mem, bot_b, dst, k),    # odd -> next even
    ]


def exec_shift_left(mem: MemoryState, src: RowAddress, dst: RowAddress) -> list[CommandEvent]:
    """dst[i] = src[i+1], dst[C-1] = 0; mirror image of the right shift."""
    _shift_operands(mem, src, dst)
    top_a = src.with_row(MigRow.TOP_MIG, Port.A)
    top_b = src.with_row(MigRow.TOP_MIG, Port.B)
    bot_a = src.with_row(MigRow.BOTTOM_MIG, Port.A)
    bot_b = src.with_row(MigRow.BOTTOM_MIG, Port.B)
    k = CommandKind.SHIFT_LEFT
    return [
        _aap(mem, src, bot_b, k),    # even columns (from 2) down
        _aap(mem, src, top_b, k),    # odd columns up
        _aap(mem, bot_a, dst, k),    # even -> previous odd
        _aap(mem, top_a, dst, k),    # odd -> previous even
    ]


def exec_act(mem: MemoryState, addr: RowAddress) -> list[CommandEvent]:
    mem.check(addr)
    _check_migration_port(addr)
    mem.open_row(addr)
    mem.subarray(addr).sense(addr.row, addr.port)
    return [_event(EventKind.ACT, CommandKind.ACT, addr)]


def exec_pre(mem: MemoryState, addr: RowAddress) -> list[CommandEvent]:
    mem.check(addr)
    # cells were restored during the activation; precharge only closes the bank
    mem.close_bank(addr.bank_key)
    return [_event(EventKind.PRE, CommandKind.PRE, addr)]


def _burst(mem: MemoryState, addr: RowAddress, kind: CommandKind) -> list[CommandEvent]:
    mem.check(addr)
    opened = mem.opened(addr.bank_key)
    if opened is None or opened != (addr.subarray, addr.row):
        raise ProtocolError(f"{kind.value} to {addr} without that row open")
    return [_event(EventKind.BURST, kind, addr)]


def exec_rd(mem: MemoryState, addr: RowAddress) -> list[CommandEvent]:
    return _burst(mem, addr, CommandKind.RD)


def exec_wr(mem: MemoryState, addr: RowAddress) -> list[CommandEvent]:
    return _burst(mem, addr, CommandKind.WR)


_EXEC = {
    CommandKind.ACT: exec_act,
    CommandKind.PRE: exec_pre,
    CommandKind.RD: exec_rd,
    CommandKind.WR: exec_wr,
    CommandKind.AAP: exec_aap,
    CommandKind.DRA: exec_dra,
    CommandKind.TRA: exec_tra,
    CommandKind.NOT_XSUB: exec_not_xsub,
    CommandKind.SHIFT_LEFT: exec_shift_left,
    CommandKind.SHIFT_RIGHT: exec_shift_right,
}


def execute(mem: MemoryState, command: Command) -> list[CommandEvent]:
    return _EXEC[command.kind](mem, *command.operands)


def run_trace(trace: CommandTrace, mem: MemoryState) -> ExecutionReport:
    """Apply the trace in order. The first failing command aborts the run with
    a TraceError carrying its index; earlier commands stay applied."""
    report = ExecutionReport(columns_per_row=mem.geometry.columns_per_row,
                             ranks=mem.geometry.ranks_per_channel, label=trace.label)
    for i, command in enumerate(trace.commands):
        try:
            events = execute(mem, command)
        except DramError as exc:
            raise TraceError(i, exc) from exc
        for e in events:
            report.events.append(CommandEvent(e.kind, e.source, e.bank, i))
        report.commands_executed += 1
    return report


def shift_oracle(bits: np.ndarray, direction: str) -> np.ndarray:
    """Software logical displacement by one column, independent of the engine."""
    out = np.zeros_like(bits)
    if direction == "right":
        out[1:] = bits[:-1]
    elif direction == "left":
        out[:-1] = bits[1:]
    else:
        raise ValueError(direction)
    return out
