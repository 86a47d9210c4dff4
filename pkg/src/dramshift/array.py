"""DRAM hierarchy and the migration-cell subarray as a bit-level state machine.

Column wiring of the two migration rows (C columns, k = 0 .. C/2 - 1)::

    top cell k     port A -> column 2k       port B -> column 2k+1
    bottom cell k  port A -> column 2k+1     port B -> column 2k+2

The last bottom cell's port B has no bitline. Even columns sense through the
top stripe, odd columns through the bottom stripe.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AddressError, ConfigError, ProtocolError

# Value read from a bitline with no connected cell and stored through an
# unconnected migration port. Shifts are logical: vacated bits become 0.
EDGE_FILL = 0


class MigRow(Enum):
    TOP_MIG = "TOP"
    BOTTOM_MIG = "BOT"


class Port(Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class MigrationPort:
    side: MigRow
    port: Port

    def columns(self, n_columns: int) -> tuple[slice, slice, slice]:
        """Return (cells, bitline columns, stripe) slices for this port.

        ``cells`` and ``columns`` select the connected cells and their bitlines
        pairwise; ``stripe`` covers every column sensed by the activation,
        connected or not.
        """
        half = n_columns // 2
        if self.side is MigRow.TOP_MIG:
            offset = 0 if self.port is Port.A else 1
        else:
            offset = 1 if self.port is Port.A else 2
        # bottom port B of the last cell would reach column C: unconnected
        n_cells = half - 1 if offset == 2 else half
        return slice(0, n_cells), slice(offset, n_columns, 2), slice(offset % 2, None, 2)


@dataclass(frozen=True)
class DramGeometry:
    channels: int = 2
    ranks_per_channel: int = 2
    banks_per_rank: int = 8
    subarrays_per_bank: int = 128
    rows_per_subarray: int = 512
    columns_per_row: int = 65536

    def __post_init__(self):
        for name in ("channels", "ranks_per_channel", "banks_per_rank",
                     "subarrays_per_bank", "rows_per_subarray", "columns_per_row"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.columns_per_row % 2:
            raise ConfigError(f"columns_per_row must be even, got {self.columns_per_row}")

    @property
    def total_banks(self) -> int:
        return self.channels * self.ranks_per_channel * self.banks_per_rank

    @property
    def row_bytes(self) -> int:
        return self.columns_per_row // 8


@dataclass(frozen=True)
class RowAddress:
    """Address of a data row or of a migration row (optionally with a port)."""

    bank: int
    subarray: int
    row: int | MigRow
    port: Port | None = None
    channel: int = 0
    rank: int = 0

    @property
    def is_migration(self) -> bool:
        return isinstance(self.row, MigRow)

    @property
    def bank_key(self) -> tuple[int, int, int]:
        return (self.channel, self.rank, self.bank)

    @property
    def subarray_key(self) -> tuple[int, int, int, int]:
        return (self.channel, self.rank, self.bank, self.subarray)

    @property
    def migration_port(self) -> MigrationPort | None:
        if not self.is_migration or self.port is None:
            return None
        return MigrationPort(self.row, self.port)

    def with_row(self, row: int | MigRow, port: Port | None = None) -> RowAddress:
        return RowAddress(self.bank, self.subarray, row, port, self.channel, self.rank)

    def __str__(self) -> str:
        if self.is_migration:
            row = self.row.value + (f":{self.port.value}" if self.port else "")
        else:
            row = str(self.row)
        return f"ch{self.channel}/rk{self.rank}/b{self.bank}/s{self.subarray}/r{row}"


class SubarrayState:
    """Cells, migration rows and latched row buffer of one subarray.

    Data rows are materialised on first write; untouched rows read as zero.
    """

    def __init__(self, rows: int, columns: int):
        self.rows = rows
        self.columns = columns
        self._data: dict[int, np.ndarray] = {}
        self.top_mig = np.zeros(columns // 2, dtype=bool)
        self.bottom_mig = np.zeros(columns // 2, dtype=bool)
        self.latch = np.zeros(columns, dtype=bool)
        self.open_row: int | MigRow | None = None

    @property
    def row_buffer_top(self) -> np.ndarray:
        return self.latch[0::2]

    @property
    def row_buffer_bottom(self) -> np.ndarray:
        return self.latch[1::2]

    def mig(self, side: MigRow) -> np.ndarray:
        return self.top_mig if side is MigRow.TOP_MIG else self.bottom_mig

    def data_row(self, row: int) -> np.ndarray:
        bits = self._data.get(row)
        if bits is None:
            return np.zeros(self.columns, dtype=bool)
        return bits

    def set_data_row(self, row: int, bits: np.ndarray) -> None:
        self._data[row] = np.array(bits, dtype=bool, copy=True)

    def sense(self, row: int | MigRow, port: Port | None = None) -> None:
        """First activation of an AAP: latch the row onto the sense amplifiers."""
        if isinstance(row, MigRow):
            cells, cols, stripe = MigrationPort(row, port).columns(self.columns)
            self.latch[stripe] = EDGE_FILL
            self.latch[cols] = self.mig(row)[cells]
        else:
            self.latch[:] = self.data_row(row)

    def restore(self, row: int | MigRow, port: Port | None = None) -> None:
        """Second activation: the driven bitlines overwrite the row's cells."""
        if isinstance(row, MigRow):
            cells, cols, _ = MigrationPort(row, port).columns(self.columns)
            target = self.mig(row)
            target[:] = EDGE_FILL
            target[cells] = self.latch[cols]
        else:
            self.set_data_row(row, self.latch)

    def digest(self) -> str:
        h = hashlib.sha256()
        for row in sorted(self._data):
            if self._data[row].any():
                h.update(row.to_bytes(4, "little"))
                h.update(np.packbits(self._data[row]).tobytes())
        h.update(np.packbits(self.top_mig).tobytes())
        h.update(np.packbits(self.bottom_mig).tobytes())
        return h.hexdigest()


class MemoryState:
    """Whole-system cell state. Subarrays are allocated lazily on first touch."""

    def __init__(self, geometry: DramGeometry):
        self.geometry = geometry
        self._subarrays: dict[tuple[int, int, int, int], SubarrayState] = {}
        self._open: dict[tuple[int, int, int], tuple[int, int | MigRow]] = {}

    def check(self, addr: RowAddress, *, allow_migration: bool = True) -> None:
        g = self.geometry
        bounds = (
            ("channel", addr.channel, g.channels),
            ("rank", addr.rank, g.ranks_per_channel),
            ("bank", addr.bank, g.banks_per_rank),
            ("subarray", addr.subarray, g.subarrays_per_bank),
        )
        for name, value, limit in bounds:
            if not 0 <= value < limit:
                raise AddressError(f"{name} {value} out of range [0, {limit}) in {addr}")
        if addr.is_migration:
            if not allow_migration:
                raise AddressError(f"migration row not allowed here: {addr}")
        elif not isinstance(addr.row, (int, np.integer)) or not 0 <= addr.row < g.rows_per_subarray:
            raise AddressError(f"row {addr.row} out of range [0, {g.rows_per_subarray}) in {addr}")

    def subarray(self, addr: RowAddress) -> SubarrayState:
        key = addr.subarray_key
        sub = self._subarrays.get(key)
        if sub is None:
            sub = SubarrayState(self.geometry.rows_per_subarray, self.geometry.columns_per_row)
            self._subarrays[key] = sub
        return sub

    def touched_subarrays(self) -> list[tuple[int, int, int, int]]:
        return sorted(self._subarrays)

    def subarray_digest(self, key: tuple[int, int, int, int]) -> str:
        sub = self._subarrays.get(key)
        return sub.digest() if sub is not None else SubarrayState(1, 2).digest()

    # bank protocol state
    def is_precharged(self, bank_key: tuple[int, int, int]) -> bool:
        return bank_key not in self._open

    def require_precharged(self, addr: RowAddress) -> None:
        if not self.is_precharged(addr.bank_key):
            sub, row = self._open[addr.bank_key]
            raise ProtocolError(f"bank {addr.bank_key} has subarray {sub} row {row} open")

    def open_row(self, addr: RowAddress) -> None:
        self.require_precharged(addr)
        self._open[addr.bank_key] = (addr.subarray, addr.row)
        self.subarray(addr).open_row = addr.row

    def opened(self, bank_key: tuple[int, int, int]) -> tuple[int, int | MigRow] | None:
        return self._open.get(bank_key)

    def close_bank(self, bank_key: tuple[int, int, int]) -> None:
        opened = self._open.pop(bank_key, None)
        if opened is not None:
            self._subarrays[bank_key + (opened[0],)].open_row = None


def build_memory(geometry: DramGeometry | None = None) -> MemoryState:
    """Fresh memory: all cells zero, all banks precharged."""
    return MemoryState(geometry if geometry is not None else DramGeometry())


def _as_bits(bits, n: int) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValueError(f"row length {arr.shape[0] if arr.ndim == 1 else arr.shape} != {n} columns")
    return arr.astype(bool)


def host_write_row(mem: MemoryState, addr: RowAddress, bits) -> None:
    """Load a data row directly (test fixture path; no energy or time charged)."""
    mem.check(addr, allow_migration=False)
    mem.require_precharged(addr)
    mem.subarray(addr).set_data_row(addr.row, _as_bits(bits, mem.geometry.columns_per_row))


def host_read_row(mem: MemoryState, addr: RowAddress) -> np.ndarray:
    """Copy of the stored bits; migration rows return their C/2 cells."""
    mem.check(addr)
    sub = mem.subarray(addr)
    if addr.is_migration:
        return sub.mig(addr.row).copy()
    return sub.data_row(addr.row).copy()


def bits_from_int(value: int, n: int) -> np.ndarray:
    """Column i holds bit i of ``value``."""
    return np.array([(value >> i) & 1 for i in range(n)], dtype=bool)


def bits_to_int(bits) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b)


def bits_from_str(pattern: str) -> np.ndarray:
    """'10110100' -> column 0 is the first character."""
    return np.array([c == "1" for c in pattern if c in "01"], dtype=bool)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)
