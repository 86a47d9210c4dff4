"""Arithmetic kernels compiled onto the PIM primitives.

Operands are stored horizontally, one bit per column, least significant bit
in the lowest column of its lane. Many independent lanes share a row; each
lane has one guard column so a single-column shift never reaches the
neighbouring lane. Moving a bit to the next column is a right shift.

MAJ/AND/OR and shifts are monotone, and crossing a subarray inverts, so a
value can only be complemented in the subarray it lives in if an identical
copy exists next door. Every kernel therefore runs mirrored on a pair of
adjacent subarrays (s, s+1); the complement of ``x`` in ``s`` is a NOT_XSUB
of ``x`` from ``s+1`` and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .array import DramGeometry, MemoryState, RowAddress, build_memory, host_read_row, host_write_row
from .energy import EnergyParams, TimingParams, cost_trace
from .engine import CommandKind, CommandTrace, ExecutionReport, run_trace
from .errors import AddressError, ConfigError

GUARD = 1
AES_POLY = 0x1B  # x^8 + x^4 + x^3 + x + 1 without the x^8 term
ALL_ONES = -1    # constant marker: every column set


class KernelKind(Enum):
    MUL_SHIFT_ADD = "mul"
    ADD_RIPPLE = "add"
    GF256_MUL = "gf256"


WIDTHS = {
    KernelKind.MUL_SHIFT_ADD: (4, 8, 16),
    KernelKind.ADD_RIPPLE: (4, 8, 16),
    KernelKind.GF256_MUL: (8,),
}


@dataclass(frozen=True)
class KernelCost:
    aap_count: int
    tra_count: int
    notx_count: int
    shift_count: int
    energy: float   # nJ, active
    latency: float  # ns


@dataclass
class KernelProgram:
    kind: KernelKind
    operand_width: int
    result_width: int
    stride: int
    row_allocation: dict[str, int]
    constants: dict[str, int]
    trace: CommandTrace
    cost: KernelCost
    bank: int = 0
    subarray: int = 0
    inputs: tuple[str, ...] = ("a", "b")
    output: str = "out"

    @property
    def rows_needed(self) -> int:
        return max(self.row_allocation.values()) + 1

    def lanes(self, columns: int) -> int:
        return columns // self.stride


def predict_cost(trace: CommandTrace, timing: TimingParams | None = None,
                 energy: EnergyParams | None = None) -> KernelCost:
    """Static cost from command counts (single bank timeline, no refresh)."""
    timing = timing or TimingParams()
    energy = energy or EnergyParams()
    shifts = trace.count(CommandKind.SHIFT_LEFT) + trace.count(CommandKind.SHIFT_RIGHT)
    aap = trace.count(CommandKind.AAP) + 4 * shifts
    tra = trace.count(CommandKind.TRA)
    notx = trace.count(CommandKind.NOT_XSUB)
    e = (aap + notx) * energy.e_aap_active + tra * energy.e_tra_active
    t = (aap + notx) * timing.t_aap + tra * timing.tRC + (timing.t_shift_setup if shifts else 0.0)
    return KernelCost(aap, tra, notx, shifts, e, t)


def cost_from_report(report: ExecutionReport, timing: TimingParams | None = None,
                     energy: EnergyParams | None = None) -> KernelCost:
    ledger, stats = cost_trace(report, timing, EnergyParams(**{
        **vars(energy or EnergyParams()), "refresh_event_model": "none"}))
    c = ledger.counts
    return KernelCost(c.get("AAP", 0), c.get("TRA", 0), c.get("NOTX", 0),
                      report.shifts, ledger.active, stats.total_time)


class _Builder:
    """Emits mirrored commands and hands out rows."""

    def __init__(self, bank: int, subarray: int, rows: int, allocation: dict[str, int] | None):
        allocation = dict(allocation or {})
        if len(set(allocation.values())) != len(allocation):
            raise ConfigError(f"allocation collision: {allocation}")
        for name, r in allocation.items():
            if not 0 <= r < rows:
                raise AddressError(f"row {r} for {name!r} outside subarray of {rows} rows")
        self.bank = bank
        self.subs = (subarray, subarray + 1)
        self.rows_available = rows
        self.alloc = allocation
        self.trace = CommandTrace()
        self.constants: dict[str, int] = {}

    def row(self, name: str) -> int:
        if name not in self.alloc:
            used = set(self.alloc.values())
            free = next((r for r in range(self.rows_available) if r not in used), None)
            if free is None:
                raise AddressError(f"subarray has no free row for {name!r}")
            self.alloc[name] = free
        return self.alloc[name]

    def const(self, name: str, lane_pattern: int) -> str:
        self.constants[name] = lane_pattern
        self.row(name)
        return name

    def _a(self, name: str, sub: int) -> RowAddress:
        return RowAddress(self.bank, sub, self.row(name))

    def copy(self, src: str, dst: str) -> None:
        for s in self.subs:
            self.trace.append(CommandKind.AAP, self._a(src, s), self._a(dst, s))

    def maj(self, x: str, y: str, z: str, out: str) -> None:
        for s in self.subs:
            t = [self._a(n, s) for n in ("_t1", "_t2", "_t3")]
            for src, tmp in zip((x, y, z), t):
                self.trace.append(CommandKind.AAP, self._a(src, s), tmp)
            self.trace.append(CommandKind.TRA, *t)
            self.trace.append(CommandKind.AAP, t[0], self._a(out, s))

    def and_(self, x: str, y: str, out: str) -> None:
        self.maj(x, y, "zero", out)

    def or_(self, x: str, y: str, out: str) -> None:
        self.maj(x, y, "ones", out)

    def not_(self, x: str, out: str) -> None:
        if x == out:
            raise ValueError("NOT needs a distinct destination")
        s0, s1 = self.subs
        self.trace.append(CommandKind.NOT_XSUB, self._a(x, s1), self._a(out, s0))
        self.trace.append(CommandKind.NOT_XSUB, self._a(x, s0), self._a(out, s1))

    def xor(self, x: str, y: str, out: str) -> None:
        self.not_(x, "_nx")
        self.not_(y, "_ny")
        self.and_(x, "_ny", "_x1")
        self.and_("_nx", y, "_x2")
        self.or_("_x1", "_x2", out)

    def shift_up(self, src: str, dst: str) -> None:
        for s in self.subs:
            self.trace.append(CommandKind.SHIFT_RIGHT, self._a(src, s), self._a(dst, s))

    def shift_down(self, src: str, dst: str) -> None:
        for s in self.subs:
            self.trace.append(CommandKind.SHIFT_LEFT, self._a(src, s), self._a(dst, s))

    def broadcast(self, src: str, bit: int, lo: int, hi: int, out: str) -> None:
        """Spread the single set column ``bit`` of each lane over [lo, hi]."""
        self.copy(src, out)
        if hi > bit:
            self.copy(src, "_bt")
            for _ in range(hi - bit):
                self.shift_up("_bt", "_bt")
                self.or_(out, "_bt", out)
        if lo < bit:
            self.copy(src, "_bt")
            for _ in range(bit - lo):
                self.shift_down("_bt", "_bt")
                self.or_(out, "_bt", out)

    def add(self, x: str, y: str, out: str, bits: int) -> None:
        """out = x + y within ``bits`` columns; carries ripple one column per TRA."""
        self.copy("zero", "_c")
        for _ in range(bits - 1):
            self.maj(x, y, "_c", "_m")
            self.shift_up("_m", "_c")
        self.xor(x, y, "_s")
        self.xor("_s", "_c", out)


def _compile_add(b: _Builder, width: int) -> None:
    b.add("a", "b", "out", width + 1)


def _compile_mul(b: _Builder, width: int) -> None:
    m = 2 * width
    b.copy("zero", "out")
    b.copy("a", "_as")
    for k in range(width):
        b.const(f"bit{k}", 1 << k)
        b.and_("b", f"bit{k}", "_bk")
        # a << k only occupies columns k .. k+width-1
        b.broadcast("_bk", k, k, k + width - 1, "_bb")
        b.and_("_as", "_bb", "_pp")
        b.add("out", "_pp", "out", m)
        if k < width - 1:
            b.shift_up("_as", "_as")


def _compile_gf256(b: _Builder, width: int) -> None:
    b.const("lane", 0xFF)
    b.const("poly", AES_POLY)
    b.const("bit7", 0x80)
    b.copy("zero", "out")
    b.copy("a", "_x")
    for i in range(8):
        b.const(f"bit{i}", 1 << i)
        b.and_("b", f"bit{i}", "_bi")
        b.broadcast("_bi", i, 0, 7, "_bb")
        b.and_("_x", "_bb", "_pp")
        b.xor("out", "_pp", "out")
        if i < 7:
            # branchless reduction: x = (x << 1) & 0xFF ^ (msb ? 0x1B : 0)
            b.and_("_x", "bit7", "_h")
            b.broadcast("_h", 7, 0, 7, "_hb")
            b.and_("_hb", "poly", "_r")
            b.shift_up("_x", "_x")
            b.and_("_x", "lane", "_x")
            b.xor("_x", "_r", "_x")


_COMPILERS = {
    KernelKind.ADD_RIPPLE: (_compile_add, lambda w: w + 1),
    KernelKind.MUL_SHIFT_ADD: (_compile_mul, lambda w: 2 * w),
    KernelKind.GF256_MUL: (_compile_gf256, lambda w: 8),
}


def compile_kernel(kind: KernelKind | str, width: int, allocation: dict[str, int] | None = None, *,
                   bank: int = 0, subarray: int = 0, rows_per_subarray: int = 512,
                   timing: TimingParams | None = None,
                   energy: EnergyParams | None = None) -> KernelProgram:
    """Build the static command trace for one kernel; returns trace and cost."""
    kind = KernelKind(kind) if isinstance(kind, str) else kind
    if width not in WIDTHS[kind]:
        raise ConfigError(f"{kind.name} supports widths {WIDTHS[kind]}, got {width}")
    b = _Builder(bank, subarray, rows_per_subarray, allocation)
    for name in ("a", "b", "out"):
        b.row(name)
    b.const("zero", 0)
    b.const("ones", ALL_ONES)
    compile_fn, result_width = _COMPILERS[kind]
    compile_fn(b, width)
    b.trace.label = f"{kind.value}{width}"
    result_bits = result_width(width)
    return KernelProgram(
        kind=kind, operand_width=width, result_width=result_bits,
        stride=result_bits + GUARD, row_allocation=dict(b.alloc),
        constants=dict(b.constants), trace=b.trace,
        cost=predict_cost(b.trace, timing, energy), bank=bank, subarray=subarray,
    )


def _lane_row(values: np.ndarray, stride: int, columns: int) -> np.ndarray:
    cols = np.arange(stride, dtype=np.int64)
    bits = ((values[:, None].astype(np.int64) >> cols) & 1).astype(bool).ravel()
    row = np.zeros(columns, dtype=bool)
    row[:bits.size] = bits
    return row


def _constant_row(pattern: int, stride: int, lanes: int, columns: int) -> np.ndarray:
    if pattern == ALL_ONES:
        return np.ones(columns, dtype=bool)
    return _lane_row(np.full(lanes, pattern, dtype=np.int64), stride, columns)


def _decode(row: np.ndarray, stride: int, bits: int, n: int) -> np.ndarray:
    lanes = row[:n * stride].reshape(n, stride)[:, :bits].astype(np.int64)
    return (lanes << np.arange(bits, dtype=np.int64)).sum(axis=1)


def kernel_geometry(program: KernelProgram, lanes: int) -> DramGeometry:
    """Smallest geometry that runs ``lanes`` lanes of ``program`` per pass."""
    columns = program.stride * lanes
    return DramGeometry(channels=1, ranks_per_channel=1, banks_per_rank=program.bank + 1,
                        subarrays_per_bank=program.subarray + 2,
                        rows_per_subarray=program.rows_needed,
                        columns_per_row=columns + columns % 2)


@dataclass
class KernelResult:
    outputs: np.ndarray
    cost: KernelCost
    report: ExecutionReport = field(repr=False)


def execute_kernel(program: KernelProgram, inputs: dict[str, object],
                   mem: MemoryState | None = None, *, timing: TimingParams | None = None,
                   energy: EnergyParams | None = None) -> KernelResult:
    """Load operands (one lane each), run the trace, read results back.

    More operand pairs than lanes are processed in successive passes.
    """
    arrays = {name: np.atleast_1d(np.asarray(inputs[name], dtype=np.int64))
              for name in program.inputs}
    n = max(a.size for a in arrays.values())
    for name, a in arrays.items():
        if a.size not in (1, n):
            raise ValueError(f"operand {name!r} has {a.size} values, expected {n}")
        if (a < 0).any() or (a >> program.operand_width).any():
            raise ValueError(f"operand {name!r} does not fit in {program.operand_width} bits")
        arrays[name] = np.broadcast_to(a, (n,))

    if mem is None:
        mem = build_memory(kernel_geometry(program, min(n, 4096)))
    g = mem.geometry
    lanes = program.lanes(g.columns_per_row)
    if lanes < 1 or g.subarrays_per_bank < program.subarray + 2 \
            or g.rows_per_subarray < program.rows_needed:
        raise ConfigError("memory geometry too small for this kernel")

    subs = (program.subarray, program.subarray + 1)

    def addr(name: str, sub: int) -> RowAddress:
        return RowAddress(program.bank, sub, program.row_allocation[name])

    for name, pattern in program.constants.items():
        row = _constant_row(pattern, program.stride, lanes, g.columns_per_row)
        for s in subs:
            host_write_row(mem, addr(name, s), row)

    outputs = np.empty(n, dtype=np.int64)
    report = ExecutionReport(columns_per_row=g.columns_per_row, ranks=g.ranks_per_channel)
    for start in range(0, n, lanes):
        stop = min(start + lanes, n)
        for name, a in arrays.items():
            row = _lane_row(a[start:stop], program.stride, g.columns_per_row)
            for s in subs:
                host_write_row(mem, addr(name, s), row)
        report = report.merged(run_trace(program.trace, mem))
        out_row = host_read_row(mem, addr(program.output, subs[0]))
        outputs[start:stop] = _decode(out_row, program.stride, program.result_width, stop - start)
    return KernelResult(outputs, cost_from_report(report, timing, energy), report)


# software references, deliberately independent of the compiled traces

def gf256_mul_oracle(a: int, b: int) -> int:
    """Carry-less multiply, then reduce modulo x^8 + x^4 + x^3 + x + 1."""
    product = 0
    for i in range(8):
        if (b >> i) & 1:
            product ^= a << i
    for bit in range(14, 7, -1):
        if (product >> bit) & 1:
            product ^= 0x11B << (bit - 8)
    return product


def kernel_oracle(kind: KernelKind, width: int, a: int, b: int) -> int:
    if kind is KernelKind.ADD_RIPPLE:
        return a + b
    if kind is KernelKind.MUL_SHIFT_ADD:
        return (a * b) & ((1 << (2 * width)) - 1)
    return gf256_mul_oracle(a, b)
