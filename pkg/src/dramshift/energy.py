"""Latency and energy costing of executed command events (DDR3-1333 calibration).

Calibration arithmetic, all derived from the published single-shift and
multi-shift measurements:

* one AAP: 30.24 nJ / 4 = 7.56 nJ active, 51.9 ns
* once per bank that shifts: 1.081 nJ and 1.1 ns of setup (31.321 - 30.24 nJ,
  208.7 - 4 * 51.9 ns)
* one refresh event: 77.1171 nJ. Ranks refresh staggered by tREFI / ranks and
  each rank event is charged 1 / ranks of that energy, giving 1, 2.5 and 13.5
  event-equivalents for the 50, 100 and 512 shift workloads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .engine import CommandKind, EventKind, ExecutionReport
from .errors import ConfigError

REFRESH_MODELS = ("rank_staggered", "prorated", "integer", "none")
REFRESH_MODES = ("energy_only", "blocking")
CATEGORIES = ("active", "burst", "refresh", "precharge", "standby")

_SHIFT_SOURCES = (CommandKind.SHIFT_LEFT, CommandKind.SHIFT_RIGHT)


@dataclass(frozen=True)
class TimingParams:
    """All values in ns except tREFI (µs)."""

    tRCD: float = 13.5
    tRP: float = 13.5
    tRAS: float = 36.0
    tRC: float = 49.5
    tREFI: float = 7.8
    t_aap: float = 51.9
    t_shift_setup: float = 1.1
    tRFC: float = 260.0
    t_burst: float = 6.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0 or (name != "t_shift_setup" and value == 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if not math.isclose(self.tRC, self.tRAS + self.tRP, abs_tol=1e-9):
            raise ConfigError(f"tRC ({self.tRC}) must equal tRAS + tRP ({self.tRAS + self.tRP})")


@dataclass(frozen=True)
class EnergyParams:
    """Energies in nJ, standby power in nW."""

    e_aap_active: float = 7.56
    e_tra_active: float = 7.56
    e_shift_overhead: float = 1.081
    e_ref_event: float = 77.1171
    refresh_event_model: str = "rank_staggered"
    e_burst_per_64B: float = 12.5
    e_transfer_low: float = 10.0
    e_transfer_high: float = 15.0
    p_standby: float = 0.0

    def __post_init__(self):
        if self.refresh_event_model not in REFRESH_MODELS:
            raise ConfigError(f"refresh_event_model must be one of {REFRESH_MODELS}")
        for name, value in vars(self).items():
            if isinstance(value, float) and value < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")


@dataclass
class BankEnergy:
    active: float = 0.0
    burst: float = 0.0
    refresh: float = 0.0
    precharge: float = 0.0
    standby: float = 0.0

    @property
    def total(self) -> float:
        return self.active + self.burst + self.refresh + self.precharge + self.standby


@dataclass
class EnergyLedger:
    banks: dict[tuple[int, int, int], BankEnergy] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def bank(self, key: tuple[int, int, int]) -> BankEnergy:
        return self.banks.setdefault(key, BankEnergy())

    def category(self, name: str) -> float:
        return sum(getattr(b, name) for b in self.banks.values())

    @property
    def active(self) -> float:
        return self.category("active")

    @property
    def burst(self) -> float:
        return self.category("burst")

    @property
    def refresh(self) -> float:
        return self.category("refresh")

    @property
    def precharge(self) -> float:
        return self.category("precharge")

    @property
    def standby(self) -> float:
        return self.category("standby")

    @property
    def total(self) -> float:
        return sum(self.category(c) for c in CATEGORIES)

    def __add__(self, other: EnergyLedger) -> EnergyLedger:
        out = EnergyLedger()
        for src in (self, other):
            for key, b in src.banks.items():
                acc = out.bank(key)
                for c in CATEGORIES:
                    setattr(acc, c, getattr(acc, c) + getattr(b, c))
            for k, v in src.counts.items():
                out.counts[k] = out.counts.get(k, 0) + v
        return out


@dataclass(frozen=True)
class RunStats:
    total_time: float
    shifts_executed: int
    latency_per_shift: float
    throughput: float
    energy_per_shift: float
    energy_per_kb: float
    refresh_events: float


def refresh_event_equivalents(elapsed_ns: float, timing: TimingParams, model: str,
                              ranks: int = 1) -> float:
    """Refresh events charged over ``elapsed_ns``, in units of one full event."""
    intervals = elapsed_ns / (timing.tREFI * 1000.0)
    if model == "none":
        return 0.0
    if model == "prorated":
        return intervals
    if model == "integer":
        return float(math.floor(intervals))
    if model == "rank_staggered":
        return math.floor(ranks * intervals + 1e-12) / ranks
    raise ConfigError(f"unknown refresh model {model!r}")


def _event_cost(kind: EventKind, timing: TimingParams, energy: EnergyParams) -> tuple[float, str, float]:
    if kind is EventKind.AAP:
        return timing.t_aap, "active", energy.e_aap_active
    if kind in (EventKind.TRA, EventKind.DRA):
        return timing.tRC, "active", energy.e_tra_active
    if kind is EventKind.ACT:
        return timing.tRAS, "active", energy.e_aap_active / 2
    if kind is EventKind.PRE:
        return timing.tRP, "precharge", 0.0
    return timing.t_burst, "burst", energy.e_burst_per_64B


def _count_key(ev) -> str:
    # NOT_XSUB is costed as an AAP but counted separately; bursts by RD/WR
    if ev.source is CommandKind.NOT_XSUB:
        return "NOTX"
    if ev.kind is EventKind.BURST:
        return ev.source.value
    return ev.kind.value


def _with_blocking_refresh(busy: float, timing: TimingParams) -> float:
    t = busy
    for _ in range(10_000):
        nxt = busy + math.floor(t / (timing.tREFI * 1000.0)) * timing.tRFC
        if nxt == t:
            return t
        t = nxt
    return t


def cost_trace(report: ExecutionReport, timing: TimingParams | None = None,
               energy: EnergyParams | None = None,
               refresh_mode: str = "energy_only") -> tuple[EnergyLedger, RunStats]:
    """Charge every event to its bank's timeline and energy accumulators.

    Banks run in parallel, so the run time is the longest bank timeline.
    """
    timing = timing or TimingParams()
    energy = energy or EnergyParams()
    if refresh_mode not in REFRESH_MODES:
        raise ConfigError(f"refresh_mode must be one of {REFRESH_MODES}")

    ledger = EnergyLedger()
    busy: dict[tuple[int, int, int], float] = {}
    shifting: set[tuple[int, int, int]] = set()
    for ev in report.events:
        dt, cat, e = _event_cost(ev.kind, timing, energy)
        bank = ledger.bank(ev.bank)
        setattr(bank, cat, getattr(bank, cat) + e)
        busy[ev.bank] = busy.get(ev.bank, 0.0) + dt
        if ev.source in _SHIFT_SOURCES:
            shifting.add(ev.bank)
        ledger.counts[_count_key(ev)] = ledger.counts.get(_count_key(ev), 0) + 1

    for key in shifting:
        ledger.bank(key).standby += energy.e_shift_overhead
        busy[key] += timing.t_shift_setup

    if refresh_mode == "blocking":
        busy = {k: _with_blocking_refresh(v, timing) for k, v in busy.items()}
    total_time = max(busy.values(), default=0.0)
    if report.events and total_time <= 0:
        raise RuntimeError("run with events has non-positive duration")

    ref_events = refresh_event_equivalents(total_time, timing, energy.refresh_event_model,
                                           report.ranks)
    for key in busy:
        b = ledger.bank(key)
        b.refresh += ref_events * energy.e_ref_event
        b.standby += energy.p_standby * total_time * 1e-9  # nW * ns -> nJ

    shifts = report.shifts
    row_kb = report.columns_per_row / 8 / 1024 if report.columns_per_row else 0.0
    per_shift = ledger.total / shifts if shifts else 0.0
    stats = RunStats(
        total_time=total_time,
        shifts_executed=shifts,
        latency_per_shift=total_time / shifts if shifts else 0.0,
        throughput=shifts / total_time * 1e3 if shifts else 0.0,  # per ns -> MOps/s
        energy_per_shift=per_shift,
        energy_per_kb=per_shift / row_kb if row_kb else 0.0,
        refresh_events=ref_events,
    )
    return ledger, stats


def baseline_movement_energy(n_bytes: int, energy: EnergyParams | None = None,
                             writeback: bool = False) -> tuple[float, float]:
    """(low, high) nJ for moving ``n_bytes`` over the bus in 64-byte transfers."""
    energy = energy or EnergyParams()
    if n_bytes <= 0:
        raise ValueError("n_bytes must be positive")
    transfers = math.ceil(n_bytes / 64)
    scale = 2 if writeback else 1
    return (transfers * energy.e_transfer_low * scale,
            transfers * energy.e_transfer_high * scale)


def aggregate_throughput(per_bank: float, banks: int) -> float:
    """Independent banks scale linearly; energy per operation is unchanged."""
    if banks < 1:
        raise ValueError("banks must be >= 1")
    return per_bank * banks
