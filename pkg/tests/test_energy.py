import math

import pytest
from hypothesis import given, settings, strategies as st

from dramshift.array import RowAddress, build_memory
from dramshift.config import SimConfig
from dramshift.energy import (
    EnergyLedger, EnergyParams, TimingParams, aggregate_throughput, baseline_movement_energy,
    cost_trace, refresh_event_equivalents,
)
from dramshift.engine import CommandKind, CommandTrace, ExecutionReport, run_trace
from dramshift.errors import ConfigError
from dramshift.experiments import shift_bench

from conftest import tiny

NO_REFRESH = EnergyParams(refresh_event_model="none")


def _bench(n):
    return shift_bench(SimConfig(), n)


def test_single_shift_breakdown():
    _, ledger, stats = _bench(1)
    assert ledger.active == pytest.approx(30.24, abs=1e-9)
    assert ledger.total == pytest.approx(31.321, abs=1e-9)
    assert ledger.burst == 0 and ledger.refresh == 0
    assert stats.total_time == pytest.approx(208.7, abs=1e-9)
    assert ledger.counts == {"AAP": 4}


@pytest.mark.parametrize("n,refresh", [(50, 77.117), (100, 192.793), (512, 1041.08)])
def test_refresh_energies(n, refresh):
    _, ledger, _ = _bench(n)
    assert ledger.refresh == pytest.approx(refresh, abs=0.01)


def test_512_shift_workload():
    _, ledger, stats = _bench(512)
    assert ledger.total == pytest.approx(16554.6, rel=0.03)
    assert stats.total_time == pytest.approx(106272, rel=0.02)
    assert stats.energy_per_shift == pytest.approx(32.333, rel=0.03)


def test_empty_report():
    ledger, stats = cost_trace(ExecutionReport(columns_per_row=8))
    assert ledger.total == 0 and stats.total_time == 0 and stats.throughput == 0


@pytest.mark.parametrize("n", [1, 50, 100, 512])
def test_stats_identities(n):
    _, ledger, stats = _bench(n)
    assert stats.shifts_executed == n
    assert stats.throughput == pytest.approx(n / stats.total_time * 1e3)
    assert stats.energy_per_kb == pytest.approx(stats.energy_per_shift / 8.0)
    assert ledger.total == pytest.approx(sum(ledger.category(c) for c in
                                             ("active", "burst", "refresh", "precharge", "standby")))


@pytest.mark.parametrize("n", [50, 100, 512])
def test_per_shift_band(n):
    _, _, stats = _bench(n)
    assert 31.0 <= stats.energy_per_shift <= 32.5
    assert 205 <= stats.latency_per_shift <= 209


@pytest.mark.parametrize("n", [1, 50, 100, 512])
def test_energy_per_kb_band(n):
    assert 3.915 <= _bench(n)[2].energy_per_kb <= 4.041


def _trace(kinds):
    t = CommandTrace()
    for i, k in enumerate(kinds):
        a, b, c = (RowAddress(0, 0, r) for r in (i % 3, (i + 1) % 3, (i + 2) % 3))
        if k == "TRA":
            t.append(CommandKind.TRA, a, b, c)
        elif k == "AAP":
            t.append(CommandKind.AAP, a, b)
        elif k == "ACTPRE":
            t.append(CommandKind.ACT, a)
            t.append(CommandKind.PRE, a)
        else:
            t.append(CommandKind.SHIFT_RIGHT if k == "SHR" else CommandKind.SHIFT_LEFT, a, b)
    return t


_kinds = st.lists(st.sampled_from(["AAP", "TRA", "SHR", "SHL", "ACTPRE"]), max_size=30)


@settings(max_examples=60, deadline=None)
@given(_kinds)
def test_zero_burst(kinds):
    ledger, _ = cost_trace(run_trace(_trace(kinds), build_memory(tiny())))
    assert ledger.burst == 0.0


@settings(max_examples=60, deadline=None)
@given(_kinds, _kinds)
def test_additivity_without_refresh(ka, kb):
    # the per-bank shift setup is charged once per run: split runs that both
    # shift pay it twice
    ta, tb = _trace(ka), _trace(kb)
    both = CommandTrace(list(ta.commands) + list(tb.commands))
    la, _ = cost_trace(run_trace(ta, build_memory(tiny())), energy=NO_REFRESH)
    lb, _ = cost_trace(run_trace(tb, build_memory(tiny())), energy=NO_REFRESH)
    lab, _ = cost_trace(run_trace(both, build_memory(tiny())), energy=NO_REFRESH)
    summed = la + lb
    for c in ("active", "burst", "refresh", "precharge"):
        assert summed.category(c) == pytest.approx(lab.category(c), abs=1e-9)
    both_shift = any(k in ("SHR", "SHL") for k in ka) and any(k in ("SHR", "SHL") for k in kb)
    extra = NO_REFRESH.e_shift_overhead if both_shift else 0.0
    assert summed.standby == pytest.approx(lab.standby + extra, abs=1e-9)
    assert summed.counts == lab.counts


def test_ledger_add_is_per_category():
    a = EnergyLedger()
    a.bank((0, 0, 0)).active = 2.0
    b = EnergyLedger()
    b.bank((0, 0, 0)).refresh = 3.0
    b.bank((0, 0, 1)).active = 1.0
    s = a + b
    assert (s.active, s.refresh, s.total) == (3.0, 3.0, 6.0)


def test_counts_by_kind():
    t = _trace(["TRA", "AAP", "ACTPRE"])
    t.append(CommandKind.NOT_XSUB, RowAddress(0, 0, 0), RowAddress(0, 1, 0))
    t.append(CommandKind.ACT, RowAddress(0, 0, 1))
    t.append(CommandKind.RD, RowAddress(0, 0, 1))
    t.append(CommandKind.PRE, RowAddress(0, 0, 1))
    ledger, stats = cost_trace(run_trace(t, build_memory(tiny())))
    assert ledger.counts == {"TRA": 1, "AAP": 1, "ACT": 2, "PRE": 2, "NOTX": 1, "RD": 1}
    tp, ep = TimingParams(), EnergyParams()
    assert ledger.burst == ep.e_burst_per_64B
    assert ledger.active == pytest.approx(2 * ep.e_aap_active + ep.e_tra_active + ep.e_aap_active)
    assert stats.total_time == pytest.approx(tp.tRC + 2 * tp.t_aap + 2 * tp.tRAS + 2 * tp.tRP
                                             + tp.t_burst)


def test_parallel_banks_take_the_longest_timeline():
    t = CommandTrace()
    for bank in range(4):
        for i in range(10):
            t.append(CommandKind.SHIFT_RIGHT, RowAddress(bank, 0, i % 2), RowAddress(bank, 0, 1 - i % 2))
    ledger, stats = cost_trace(run_trace(t, build_memory(tiny(banks=4))), energy=NO_REFRESH)
    assert stats.total_time == pytest.approx(10 * 4 * 51.9 + 1.1)
    assert stats.shifts_executed == 40
    assert ledger.total == pytest.approx(4 * (40 * 7.56 + 1.081))


def test_baseline_examples():
    assert baseline_movement_energy(8192) == (1280.0, 1920.0)
    assert baseline_movement_energy(64) == (10.0, 15.0)
    assert baseline_movement_energy(65) == (20.0, 30.0)
    assert baseline_movement_energy(8192, writeback=True) == (2560.0, 3840.0)
    with pytest.raises(ValueError):
        baseline_movement_energy(0)


def test_aggregate_throughput():
    assert aggregate_throughput(4.82, 8) == 38.56
    assert aggregate_throughput(4.82, 32) == 154.24
    assert aggregate_throughput(4.82, 1) == 4.82
    with pytest.raises(ValueError):
        aggregate_throughput(4.82, 0)


@pytest.mark.parametrize("n,expected", [(50, 1.0), (100, 2.5), (512, 13.5)])
def test_rank_staggered_refresh_counts(n, expected):
    assert _bench(n)[2].refresh_events == expected


def test_refresh_models():
    t = TimingParams()
    ns = 2.6 * t.tREFI * 1000
    assert refresh_event_equivalents(ns, t, "none", 2) == 0
    assert refresh_event_equivalents(ns, t, "prorated", 2) == pytest.approx(2.6)
    assert refresh_event_equivalents(ns, t, "integer", 2) == 2
    assert refresh_event_equivalents(ns, t, "rank_staggered", 2) == 2.5
    assert refresh_event_equivalents(ns, t, "rank_staggered", 1) == 2
    with pytest.raises(ConfigError):
        refresh_event_equivalents(ns, t, "bogus")


def test_blocking_refresh_adds_stalls():
    _, _, base = _bench(512)
    _, _, blocking = shift_bench(SimConfig(refresh_mode="blocking"), 512)
    stalls = math.floor(blocking.total_time / 7800)
    assert stalls >= 13
    assert blocking.total_time == pytest.approx(base.total_time + stalls * 260.0)


def test_timing_validation():
    with pytest.raises(ConfigError):
        TimingParams(tRC=50.0)
    with pytest.raises(ConfigError):
        EnergyParams(e_aap_active=-1.0)
    with pytest.raises(ConfigError):
        cost_trace(ExecutionReport(), refresh_mode="sometimes")
